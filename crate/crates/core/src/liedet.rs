//! The Lie determinant of an m-dimensional algebra: the determinant of the
//! m x m matrix with columns `xi, eta, eta[1], ..., eta[m-2]`.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{Expr, Q};
use crate::invariance::{coefficient_matrix, OdeEquation};
use crate::jet::VectorField;
use crate::poly::{factor_squarefree, Poly};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LieDetError {
    #[error("the Lie determinant needs at least two fields (got {0})")]
    TooFewFields(usize),
}

#[derive(Clone, Debug, Serialize)]
pub struct LieDeterminantResult {
    pub algebra_label: String,
    pub matrix_order: u32,
    #[serde(serialize_with = "ser_expr")]
    pub determinant: Expr,
    #[serde(serialize_with = "ser_factors")]
    pub factors: Vec<(Expr, u32)>,
    #[serde(serialize_with = "ser_expr")]
    pub constant_prefactor: Expr,
    /// False when some entry left the polynomial fragment; factors are then empty.
    pub polynomial_entries: bool,
}

fn ser_expr<S: serde::Serializer>(e: &Expr, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&e.to_string())
}

fn ser_factors<S: serde::Serializer>(f: &[(Expr, u32)], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(f.len()))?;
    for (e, m) in f {
        seq.serialize_element(&(e.to_string(), m))?;
    }
    seq.end()
}

pub fn lie_determinant(label: &str, fields: &[VectorField]) -> Result<LieDeterminantResult, LieDetError> {
    let m = fields.len();
    if m < 2 {
        return Err(LieDetError::TooFewFields(m));
    }
    let order = m as u32 - 2;
    let entries = coefficient_matrix(fields, order);
    let polys: Option<Vec<Vec<Poly>>> =
        entries.iter().map(|row| row.iter().map(|e| Poly::from_expr(e).ok()).collect()).collect();
    let (determinant, factors, prefactor, polynomial) = match polys {
        Some(p) => {
            let d = det_poly(p);
            let (c, fs) = factor_squarefree(&d);
            let factors: Vec<(Expr, u32)> = fs.into_iter().map(|(f, k)| (f.to_expr(), k)).collect();
            (d.to_expr(), factors, Expr::num(c), true)
        }
        None => (det_expr(&entries), Vec::new(), Expr::one(), false),
    };
    Ok(LieDeterminantResult {
        algebra_label: label.to_string(),
        matrix_order: order,
        determinant,
        factors,
        constant_prefactor: prefactor,
        polynomial_entries: polynomial,
    })
}

/// Fraction-free elimination with exact polynomial division.
pub fn det_poly(mut a: Vec<Vec<Poly>>) -> Poly {
    let n = a.len();
    let mut prev = Poly::one();
    let mut negate = false;
    for k in 0..n {
        let pivot = (k..n).filter(|&i| !a[i][k].is_zero()).min_by_key(|&i| a[i][k].len());
        let Some(p) = pivot else {
            return Poly::zero();
        };
        if p != k {
            a.swap(p, k);
            negate = !negate;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = a[k][k].mul(&a[i][j]).sub(&a[i][k].mul(&a[k][j]));
                a[i][j] = num.div_exact(&prev).expect("Bareiss quotient is exact");
            }
            a[i][k] = Poly::zero();
        }
        prev = a[k][k].clone();
    }
    let d = a[n - 1][n - 1].clone();
    if negate {
        d.neg()
    } else {
        d
    }
}

/// Expansion by minors over column subsets; fine for the small sizes here.
pub fn det_expr(a: &[Vec<Expr>]) -> Expr {
    let n = a.len();
    let mut layer: HashMap<u32, Expr> = HashMap::from([(0, Expr::one())]);
    for row in a.iter().take(n) {
        let mut next: HashMap<u32, Vec<Expr>> = HashMap::new();
        for (mask, acc) in &layer {
            for (c, entry) in row.iter().enumerate().take(n) {
                if mask & (1 << c) != 0 || entry.is_zero() {
                    continue;
                }
                let above = (mask >> (c + 1)).count_ones();
                let t = acc * entry;
                let t = if above % 2 == 1 { -t } else { t };
                next.entry(mask | (1 << c)).or_default().push(t);
            }
        }
        layer = next.into_iter().map(|(k, v)| (k, Expr::add_all(v))).collect();
    }
    layer.remove(&((1u32 << n) - 1)).unwrap_or_else(Expr::zero)
}

/// A singular invariant equation read off a factor of the determinant.
#[derive(Clone, Debug, PartialEq)]
pub enum SingularEquation {
    Explicit(OdeEquation),
    /// `factor = 0`, not linear in its highest derivative.
    Implicit(Expr),
}

pub fn singular_equations(result: &LieDeterminantResult) -> Vec<SingularEquation> {
    result
        .factors
        .iter()
        .filter(|(f, _)| f.jet_order().is_some_and(|k| k > 0))
        .map(|(f, _)| match OdeEquation::from_implicit(f) {
            Ok(eq) => SingularEquation::Explicit(eq),
            Err(_) => SingularEquation::Implicit(f.clone()),
        })
        .collect()
}

/// `c * prod f^k` rebuilt from the factorization.
pub fn recombine(result: &LieDeterminantResult) -> Expr {
    Expr::mul_all(
        std::iter::once(result.constant_prefactor.clone())
            .chain(result.factors.iter().map(|(f, k)| f.powi(*k as i64))),
    )
}

pub fn constant_of(result: &LieDeterminantResult) -> Option<Q> {
    result.constant_prefactor.as_num().cloned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::Env;
    use crate::zero::{is_zero, ProbeConfig, ZeroVerdict};

    fn fields(env: &Env, specs: &[&str]) -> Vec<VectorField> {
        specs.iter().map(|s| env.parse_field(s).unwrap()).collect()
    }

    #[test]
    fn translations_give_one() {
        let r = lie_determinant("t", &fields(&Env::default(), &["Dx", "Dy"])).unwrap();
        assert_eq!(r.determinant, Expr::one());
        assert!(r.factors.is_empty());
    }

    #[test]
    fn scaling_family_determinant() {
        // {Dx, Dy, x Dx + 7 y Dy, x Dy, x^2 Dy, x^3 Dy}: m = 6, columns up to eta[4]
        let env = Env::default();
        let fs = fields(&env, &["Dx", "Dy", "x*Dx + 7*y*Dy", "x*Dy", "x^2*Dy", "x^3*Dy"]);
        let r = lie_determinant("s", &fs).unwrap();
        let y4 = Expr::jet(4);
        let want = Expr::int(-36) * y4.clone();
        assert_eq!(is_zero(&(&r.determinant - &want), &ProbeConfig::default()), Ok(ZeroVerdict::ExactZero));
        assert_eq!(r.factors, vec![(y4.clone(), 1)]);
        assert_eq!(constant_of(&r), Some(Q::from_integer((-36).into())));
        assert_eq!(
            singular_equations(&r),
            vec![SingularEquation::Explicit(OdeEquation::new(4, Expr::zero()).unwrap())]
        );
    }

    #[test]
    fn row_swap_flips_sign() {
        let env = Env::default();
        let mut fs = fields(&env, &["Dx", "Dy", "x*Dx + y*Dy", "y*Dx"]);
        let a = lie_determinant("a", &fs).unwrap().determinant;
        fs.swap(0, 3);
        let b = lie_determinant("b", &fs).unwrap().determinant;
        assert_eq!(is_zero(&(a + b), &ProbeConfig::default()), Ok(ZeroVerdict::ExactZero));
    }

    #[test]
    fn expansion_matches_elimination() {
        let env = Env::default();
        let fs = fields(&env, &["Dx", "Dy", "x*Dx + 2*y*Dy", "x^2*Dx + x*y*Dy", "y*Dx"]);
        let r = lie_determinant("p", &fs).unwrap();
        let e = det_expr(&coefficient_matrix(&fs, 3));
        assert_eq!(is_zero(&(&r.determinant - &e), &ProbeConfig::default()), Ok(ZeroVerdict::ExactZero));
        assert_eq!(is_zero(&(recombine(&r) - &e), &ProbeConfig::default()), Ok(ZeroVerdict::ExactZero));
    }

    #[test]
    fn transcendental_entries() {
        let env = Env::default();
        let fs = fields(&env, &["Dx", "exp(x)*Dy", "exp(-x)*Dy"]);
        let r = lie_determinant("e", &fs).unwrap();
        assert!(!r.polynomial_entries);
        assert!(r.factors.is_empty());
        // rows (1,0,-y'), (0,e^x,e^x), (0,e^-x,-e^-x): det = -2
        assert!(is_zero(&(&r.determinant + Expr::int(2)), &ProbeConfig::default()).unwrap().is_zero());
    }
}
