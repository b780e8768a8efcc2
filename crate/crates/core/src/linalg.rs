//! Dense exact linear algebra over Q and a floating-point rank.

use astro_float::{BigFloat, RoundingMode};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::expr::Q;

const RM: RoundingMode = RoundingMode::ToEven;

/// Clear denominators row by row; row scaling does not change rank.
fn integer_rows(m: &[Vec<Q>]) -> Vec<Vec<BigInt>> {
    m.iter()
        .map(|row| {
            let l = row.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
            row.iter().map(|c| (c * Q::from_integer(l.clone())).to_integer()).collect()
        })
        .collect()
}

/// Fraction-free elimination in place. Returns the pivot columns and the
/// sign from row swaps. Entries below each pivot become zero and every
/// intermediate value stays an integer.
fn bareiss(a: &mut [Vec<BigInt>]) -> (Vec<usize>, i32) {
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut prev = BigInt::one();
    let mut sign = 1;
    let mut r = 0;
    let mut pivots = Vec::new();
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        if p != r {
            a.swap(p, r);
            sign = -sign;
        }
        for i in r + 1..rows {
            for j in c + 1..cols {
                let v = &a[r][c] * &a[i][j] - &a[i][c] * &a[r][j];
                a[i][j] = v / &prev;
            }
            a[i][c] = BigInt::zero();
        }
        prev = a[r][c].clone();
        pivots.push(c);
        r += 1;
    }
    (pivots, sign)
}

pub fn rank_q(m: &[Vec<Q>]) -> usize {
    let mut a = integer_rows(m);
    bareiss(&mut a).0.len()
}

/// Determinant of a square rational matrix by fraction-free elimination.
pub fn det_q(m: &[Vec<Q>]) -> Q {
    let n = m.len();
    if n == 0 {
        return Q::one();
    }
    let scale = m.iter().fold(Q::one(), |acc, row| {
        acc * Q::from_integer(row.iter().fold(BigInt::one(), |l, c| l.lcm(c.denom())))
    });
    let mut a = integer_rows(m);
    let (pivots, sign) = bareiss(&mut a);
    if pivots.len() < n {
        return Q::zero();
    }
    Q::from_integer(a[n - 1][n - 1].clone() * sign) / scale
}

/// Solve `a x = b` exactly; `None` when `a` is singular.
pub fn solve_q(a: &[Vec<Q>], b: &[Q]) -> Option<Vec<Q>> {
    let n = a.len();
    let mut m: Vec<Vec<Q>> = a.iter().zip(b).map(|(r, v)| r.iter().cloned().chain([v.clone()]).collect()).collect();
    for c in 0..n {
        let p = (c..n).find(|&i| !m[i][c].is_zero())?;
        m.swap(p, c);
        let inv = m[c][c].recip();
        for v in m[c].iter_mut() {
            *v *= &inv;
        }
        for i in 0..n {
            if i != c && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in c..=n {
                    let t = &f * &m[c][j];
                    m[i][j] -= t;
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n].clone()).collect())
}

/// Rank by partial pivoting, treating pivots below `tol * max|entry|` as zero.
pub fn rank_float(m: &[Vec<BigFloat>], tol: &BigFloat, prec: usize) -> usize {
    let mut a: Vec<Vec<BigFloat>> = m.to_vec();
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut scale = BigFloat::from_i64(0, prec);
    for v in a.iter().flatten() {
        let av = v.abs();
        if av.cmp(&scale).is_some_and(|o| o > 0) {
            scale = av;
        }
    }
    if scale.is_zero() {
        return 0;
    }
    let cut = scale.mul(tol, prec, RM);
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let mut best = r;
        for i in r + 1..rows {
            if a[i][c].abs().cmp(&a[best][c].abs()).is_some_and(|o| o > 0) {
                best = i;
            }
        }
        if a[best][c].abs().cmp(&cut).is_none_or(|o| o <= 0) {
            continue;
        }
        a.swap(best, r);
        for i in r + 1..rows {
            let f = a[i][c].div(&a[r][c], prec, RM);
            for j in c..cols {
                let t = f.mul(&a[r][j], prec, RM);
                a[i][j] = a[i][j].sub(&t, prec, RM);
            }
        }
        r += 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{q, qf};

    fn mat(rows: &[&[Q]]) -> Vec<Vec<Q>> {
        rows.iter().map(|r| r.to_vec()).collect()
    }

    #[test]
    fn determinants() {
        let m = mat(&[&[q(2), q(1)], &[q(1), q(3)]]);
        assert_eq!(det_q(&m), q(5));
        let m = mat(&[&[q(0), q(1), q(2)], &[q(1), q(0), q(3)], &[q(4), q(-3), q(8)]]);
        assert_eq!(det_q(&m), q(-2));
        let m = mat(&[&[qf(1, 2), qf(1, 3)], &[qf(1, 4), qf(1, 5)]]);
        assert_eq!(det_q(&m), qf(1, 10) - qf(1, 12));
        let m = mat(&[&[q(1), q(2)], &[q(2), q(4)]]);
        assert_eq!(det_q(&m), q(0));
    }

    #[test]
    fn ranks_and_solves() {
        let m = mat(&[&[q(1), q(2), q(3)], &[q(2), q(4), q(6)], &[q(0), q(1), q(1)]]);
        assert_eq!(rank_q(&m), 2);
        let a = mat(&[&[q(1), q(1)], &[q(1), q(-1)]]);
        assert_eq!(solve_q(&a, &[q(3), q(1)]), Some(vec![q(2), q(1)]));
        assert_eq!(solve_q(&mat(&[&[q(1), q(1)], &[q(2), q(2)]]), &[q(1), q(2)]), None);
    }

    #[test]
    fn float_rank() {
        let p = 128;
        let f = |v: i64| BigFloat::from_i64(v, p);
        let m = vec![vec![f(1), f(2), f(3)], vec![f(2), f(4), f(6)], vec![f(1), f(0), f(1)]];
        let tol = BigFloat::from_f64(1e-30, p);
        assert_eq!(rank_float(&m, &tol, p), 2);
    }
}
