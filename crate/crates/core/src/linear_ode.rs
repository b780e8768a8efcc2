//! Linear equations `y^(n) = sum A_i y^(i)`: constant coefficients from
//! characteristic roots, and variable coefficients from a solution set.

use std::collections::BTreeSet;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::expr::{Atom, Expr, Func, Q};
use crate::liedet::det_expr;
use crate::linalg::{det_q, solve_q};
use crate::poly::rational_normal_form;
use crate::zero::{is_zero, ProbeConfig, ZeroError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinearError {
    #[error("characteristic roots must be distinct")]
    DuplicateRoots,
    #[error("complex pair with zero imaginary part")]
    RealPair,
    #[error("expected {expected} solutions, got {got}")]
    WrongCount { expected: usize, got: usize },
    #[error("solutions are linearly dependent")]
    DependentSolutions,
    #[error("solutions may only depend on x")]
    NotFunctionsOfX,
    #[error(transparent)]
    Zero(#[from] ZeroError),
}

/// Simple characteristic roots: reals and conjugate pairs `a ± ib`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct CharSpec {
    pub real_roots: Vec<Q>,
    pub complex_pairs: Vec<(Q, Q)>,
}

impl CharSpec {
    pub fn real(roots: Vec<Q>) -> CharSpec {
        CharSpec { real_roots: roots, complex_pairs: Vec::new() }
    }

    pub fn order(&self) -> usize {
        self.real_roots.len() + 2 * self.complex_pairs.len()
    }

    pub fn validate(&self) -> Result<(), LinearError> {
        let reals: BTreeSet<&Q> = self.real_roots.iter().collect();
        if reals.len() != self.real_roots.len() {
            return Err(LinearError::DuplicateRoots);
        }
        let mut pairs = BTreeSet::new();
        for (a, b) in &self.complex_pairs {
            if b.is_zero() {
                return Err(LinearError::RealPair);
            }
            let b = if b < &Q::zero() { -b } else { b.clone() };
            if !pairs.insert((a.clone(), b)) {
                return Err(LinearError::DuplicateRoots);
            }
        }
        Ok(())
    }

    /// Monic characteristic polynomial, highest degree first.
    pub fn char_poly(&self) -> Vec<Q> {
        let mut p = vec![Q::one()];
        let mul = |p: &[Q], f: &[Q]| -> Vec<Q> {
            let mut out = vec![Q::zero(); p.len() + f.len() - 1];
            for (i, a) in p.iter().enumerate() {
                for (j, b) in f.iter().enumerate() {
                    out[i + j] += a * b;
                }
            }
            out
        };
        for r in &self.real_roots {
            p = mul(&p, &[Q::one(), -r]);
        }
        for (a, b) in &self.complex_pairs {
            p = mul(&p, &[Q::one(), Q::from_integer((-2).into()) * a, a * a + b * b]);
        }
        p
    }

    /// `[A_0, ..., A_{n-1}]` of the equation with this characteristic polynomial.
    pub fn coefficients(&self) -> Vec<Q> {
        let p = self.char_poly();
        p[1..].iter().rev().map(|c| -c).collect()
    }
}

/// `y^(n) = sum_{i >= lowest} A_i y^(i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearOde {
    pub order: u32,
    pub lowest_index: u32,
    /// `A_lowest, ..., A_{n-1}`
    pub coeffs: Vec<Expr>,
}

impl LinearOde {
    pub fn constant(coeffs: &[Q]) -> LinearOde {
        LinearOde { order: coeffs.len() as u32, lowest_index: 0, coeffs: coeffs.iter().cloned().map(Expr::num).collect() }
    }

    pub fn coeff(&self, i: u32) -> Expr {
        if i < self.lowest_index {
            Expr::zero()
        } else {
            self.coeffs[(i - self.lowest_index) as usize].clone()
        }
    }

    pub fn rhs(&self) -> Expr {
        Expr::add_all((self.lowest_index..self.order).map(|i| self.coeff(i) * Expr::atom(jet_atom(i))))
    }

    /// `f^(n) - sum A_i f^(i)` for a function `f` of `x`.
    pub fn residual(&self, f: &Expr) -> Expr {
        let ds = derivatives(f, self.order);
        &ds[self.order as usize] - &Expr::add_all((0..self.order).map(|i| self.coeff(i) * &ds[i as usize]))
    }
}

fn jet_atom(i: u32) -> Atom {
    Atom::derivative(i)
}

fn derivatives(f: &Expr, n: u32) -> Vec<Expr> {
    let mut out = vec![f.clone()];
    for _ in 0..n {
        let next = out.last().unwrap().diff(&Atom::X);
        out.push(next);
    }
    out
}

fn check_distinct(roots: &[Q]) -> Result<(), LinearError> {
    CharSpec::real(roots.to_vec()).validate()
}

/// Rows `(1, a_k, a_k^2, ..., a_k^{n-1})`.
pub fn vandermonde_matrix(roots: &[Q]) -> Vec<Vec<Q>> {
    let n = roots.len();
    roots
        .iter()
        .map(|a| (0..n).map(|j| num_traits::pow(a.clone(), j)).collect())
        .collect()
}

/// `prod_{i<j} (a_j - a_i)`.
pub fn vandermonde_det(roots: &[Q]) -> Q {
    let mut d = Q::one();
    for (i, a) in roots.iter().enumerate() {
        for b in &roots[i + 1..] {
            d *= b - a;
        }
    }
    d
}

/// Elementary symmetric polynomials `e_0 .. e_n`.
pub fn elementary_symmetric(roots: &[Q]) -> Vec<Q> {
    let mut e = vec![Q::zero(); roots.len() + 1];
    e[0] = Q::one();
    for (k, a) in roots.iter().enumerate() {
        for j in (1..=k + 1).rev() {
            let t = &e[j - 1] * a;
            e[j] += t;
        }
    }
    e
}

/// `A_i = (-1)^(n-i+1) e_(n-i)` for `y^(n) = sum A_i y^(i)` with the given
/// simple real roots.
pub fn coeffs_from_roots(roots: &[Q]) -> Result<Vec<Q>, LinearError> {
    check_distinct(roots)?;
    let n = roots.len();
    let e = elementary_symmetric(roots);
    Ok((0..n)
        .map(|i| {
            let v = e[n - i].clone();
            if (n - i + 1).is_multiple_of(2) {
                v
            } else {
                -v
            }
        })
        .collect())
}

/// The same coefficients by solving `V X = B`, `B = (a_k^n)`.
pub fn coeffs_by_elimination(roots: &[Q]) -> Result<Vec<Q>, LinearError> {
    check_distinct(roots)?;
    let b: Vec<Q> = roots.iter().map(|a| num_traits::pow(a.clone(), roots.len())).collect();
    solve_q(&vandermonde_matrix(roots), &b).ok_or(LinearError::DuplicateRoots)
}

/// `det f_i`: the Vandermonde matrix with column `i` replaced by `(a_k^n)`.
pub fn det_f(roots: &[Q], i: usize) -> Q {
    let n = roots.len();
    let mut m = vandermonde_matrix(roots);
    for (row, a) in m.iter_mut().zip(roots) {
        row[i] = num_traits::pow(a.clone(), n);
    }
    det_q(&m)
}

/// Fundamental solutions: `e^{ax} cos(bx)` for each pair, then `e^{ax} sin(bx)`,
/// then `e^{ax}` for each real root.
pub fn fundamental_solutions(spec: &CharSpec) -> Result<Vec<Expr>, LinearError> {
    spec.validate()?;
    let x = Expr::x();
    let e = |a: &Q| Expr::exp(Expr::num(a.clone()) * &x);
    let mut out = Vec::with_capacity(spec.order());
    for (a, b) in &spec.complex_pairs {
        out.push(e(a) * Expr::func(Func::Cos, Expr::num(b.clone()) * &x));
    }
    for (a, b) in &spec.complex_pairs {
        out.push(e(a) * Expr::func(Func::Sin, Expr::num(b.clone()) * &x));
    }
    for a in &spec.real_roots {
        out.push(e(a));
    }
    Ok(out)
}

/// Recover `A_lowest .. A_{n-1}` from solutions `xi_k` of
/// `xi_k^(n) = sum_{i >= lowest} A_i xi_k^(i)` by Cramer's rule.
pub fn coeffs_from_solutions(
    xis: &[Expr],
    n: u32,
    lowest_index: u32,
    probe: &ProbeConfig,
) -> Result<LinearOde, LinearError> {
    let unknowns = n.saturating_sub(lowest_index) as usize;
    if xis.len() != unknowns {
        return Err(LinearError::WrongCount { expected: unknowns, got: xis.len() });
    }
    if xis.iter().any(|f| f.atoms().iter().any(|a| *a != Atom::X)) {
        return Err(LinearError::NotFunctionsOfX);
    }
    let ders: Vec<Vec<Expr>> = xis.iter().map(|f| derivatives(f, n)).collect();
    let m: Vec<Vec<Expr>> =
        ders.iter().map(|d| (lowest_index..n).map(|i| d[i as usize].clone()).collect()).collect();
    let b: Vec<Expr> = ders.iter().map(|d| d[n as usize].clone()).collect();
    let rational = xis.iter().all(Expr::is_rational);
    let simplify = |e: Expr| if rational { rational_normal_form(&e).unwrap_or(e) } else { e };
    let det = simplify(det_expr(&m));
    if is_zero(&det, probe)?.is_zero() {
        return Err(LinearError::DependentSolutions);
    }
    let mut coeffs = Vec::with_capacity(unknowns);
    for c in 0..unknowns {
        let mc: Vec<Vec<Expr>> = m
            .iter()
            .zip(&b)
            .map(|(row, bv)| row.iter().enumerate().map(|(j, v)| if j == c { bv.clone() } else { v.clone() }).collect())
            .collect();
        coeffs.push(simplify(det_expr(&mc) / &det));
    }
    Ok(LinearOde { order: n, lowest_index, coeffs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{q, qf};
    use crate::zero::ZeroVerdict;

    #[test]
    fn vandermonde_examples() {
        assert_eq!(vandermonde_det(&[q(1), q(2), q(3)]), q(2));
        assert_eq!(vandermonde_det(&[q(5), q(2)]), q(-3));
        let roots = [q(2), q(-1), qf(1, 2), q(3)];
        assert_eq!(vandermonde_det(&roots), det_q(&vandermonde_matrix(&roots)));
    }

    #[test]
    fn coefficient_examples() {
        assert_eq!(coeffs_from_roots(&[q(1), q(2), q(3)]).unwrap(), vec![q(6), q(-11), q(6)]);
        let (a, b) = (qf(3, 2), q(-4));
        assert_eq!(coeffs_from_roots(&[a.clone(), b.clone()]).unwrap(), vec![-(&a * &b), &a + &b]);
        assert_eq!(coeffs_from_roots(&[q(1), q(1)]), Err(LinearError::DuplicateRoots));
        let roots = [q(2), q(-1), qf(1, 2), q(3), qf(-5, 7)];
        assert_eq!(coeffs_from_roots(&roots).unwrap(), coeffs_by_elimination(&roots).unwrap());
        assert_eq!(det_f(&roots, 4), coeffs_from_roots(&roots).unwrap()[4].clone() * vandermonde_det(&roots));
    }

    #[test]
    fn char_spec_coefficients() {
        let s = CharSpec { real_roots: vec![q(1)], complex_pairs: vec![(q(0), q(1))] };
        // (t - 1)(t^2 + 1) = t^3 - t^2 + t - 1
        assert_eq!(s.char_poly(), vec![q(1), q(-1), q(1), q(-1)]);
        assert_eq!(s.coefficients(), vec![q(1), q(-1), q(1)]);
        let r = CharSpec::real(vec![q(1), q(2), q(3)]);
        assert_eq!(r.coefficients(), coeffs_from_roots(&r.real_roots).unwrap());
    }

    #[test]
    fn solutions_satisfy_their_equation() {
        let p = ProbeConfig::default();
        for s in [
            CharSpec::real(vec![q(0), q(1)]),
            CharSpec { real_roots: vec![], complex_pairs: vec![(q(0), q(1))] },
            CharSpec { real_roots: vec![q(-2)], complex_pairs: vec![(qf(1, 2), q(3))] },
        ] {
            let ode = LinearOde::constant(&s.coefficients());
            for f in fundamental_solutions(&s).unwrap() {
                assert!(is_zero(&ode.residual(&f), &p).unwrap().is_zero(), "{f}");
            }
        }
    }

    #[test]
    fn polynomial_solution_set() {
        let p = ProbeConfig::default();
        let xis = [Expr::x().powi(2), Expr::x().powi(3)];
        let ode = coeffs_from_solutions(&xis, 4, 2, &p).unwrap();
        // y^(4) = (2/x) y''' - (2/x^2) y''  would not vanish on x^2; check by residual
        for f in &xis {
            assert_eq!(is_zero(&ode.residual(f), &p).unwrap(), ZeroVerdict::ExactZero);
        }
        assert_eq!(
            coeffs_from_solutions(&[Expr::x(), Expr::x()], 3, 1, &p),
            Err(LinearError::DependentSolutions)
        );
    }

    #[test]
    fn exponential_solutions_give_constants() {
        let p = ProbeConfig::default();
        let ode = coeffs_from_solutions(&[Expr::exp(Expr::x())], 2, 1, &p).unwrap();
        assert_eq!(ode.coeffs, vec![Expr::one()]);
        let s = CharSpec::real(vec![q(1), q(-2), q(3)]);
        let ode = coeffs_from_solutions(&fundamental_solutions(&s).unwrap(), 3, 0, &p).unwrap();
        let want: Vec<Expr> = coeffs_from_roots(&s.real_roots).unwrap().into_iter().map(Expr::num).collect();
        assert_eq!(ode.coeffs, want);
    }
}
