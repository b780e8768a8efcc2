//! Invariant differentiation `D = lambda D_x` and Lie's quotient recursion.

use thiserror::Error;

use crate::expr::Expr;
use crate::invariance::sampled_rank;
use crate::jet::{apply, dx, total_derivative, JetError, VectorField, DEFAULT_MAX_ORDER};
use crate::zero::{is_zero, ProbeConfig, ZeroError, ZeroVerdict};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InvDiffError {
    #[error("D_x of w_{0} vanishes identically")]
    DegenerateDenominator(usize),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Zero(#[from] ZeroError),
}

#[derive(Clone, Debug)]
pub struct InvariantDiffOperator {
    pub lambda: Expr,
    pub algebra_label: String,
    pub verified_to_order: u32,
}

/// Residual of the defining equation `X(lambda) = lambda D_x(xi)`.
pub fn lambda_residual(x: &VectorField, lambda: &Expr) -> Expr {
    apply(x, lambda) - lambda * &dx(&x.xi)
}

pub fn verify_lambda(
    fields: &[VectorField],
    lambda: &Expr,
    probe: &ProbeConfig,
) -> Vec<Result<ZeroVerdict, ZeroError>> {
    fields.iter().map(|x| is_zero(&lambda_residual(x, lambda), probe)).collect()
}

/// `lambda * D_x(phi)`.
pub fn apply_d(op: &InvariantDiffOperator, phi: &Expr) -> Result<Expr, JetError> {
    Ok(&op.lambda * &total_derivative(phi, DEFAULT_MAX_ORDER)?)
}

/// `[v, D_x v / D_x u, ...]`, each new term the quotient of the total
/// derivatives of the previous two.
pub fn lie_recursion(u: &Expr, v: &Expr, steps: usize, probe: &ProbeConfig) -> Result<Vec<Expr>, InvDiffError> {
    let mut dprev = total_derivative(u, DEFAULT_MAX_ORDER)?;
    let mut out = vec![v.clone()];
    for k in 1..steps {
        if is_zero(&dprev, probe)?.is_zero() {
            return Err(InvDiffError::DegenerateDenominator(k - 1));
        }
        let cur = out.last().unwrap().clone();
        let dcur = total_derivative(&cur, DEFAULT_MAX_ORDER)?;
        out.push(&dcur / &dprev);
        dprev = dcur;
    }
    Ok(out)
}

/// Rank of the Jacobian of `exprs` with respect to every coordinate they use,
/// at random points. Values below `exprs.len()` mean functional dependence.
pub fn jacobian_rank(exprs: &[Expr], probe: &ProbeConfig) -> Result<usize, ZeroError> {
    let mut atoms = std::collections::BTreeSet::new();
    for e in exprs {
        atoms.extend(e.atoms());
    }
    let rows: Vec<Vec<Expr>> = exprs.iter().map(|e| atoms.iter().map(|a| e.diff(a)).collect()).collect();
    Ok(sampled_rank(&rows, 3, probe)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::Env;

    fn fields(env: &Env, specs: &[&str]) -> Vec<VectorField> {
        specs.iter().map(|s| env.parse_field(s).unwrap()).collect()
    }

    #[test]
    fn translations_allow_unit_lambda() {
        let env = Env::default();
        let v = verify_lambda(&fields(&env, &["Dx", "Dy"]), &Expr::one(), &ProbeConfig::default());
        assert_eq!(v, vec![Ok(ZeroVerdict::ExactZero), Ok(ZeroVerdict::ExactZero)]);
        let op = InvariantDiffOperator { lambda: Expr::one(), algebra_label: "t".into(), verified_to_order: 1 };
        assert_eq!(apply_d(&op, &Expr::jet(1)).unwrap(), Expr::jet(2));
    }

    #[test]
    fn scaling_needs_weighted_lambda() {
        let env = Env::default();
        let fs = fields(&env, &["Dx", "Dy", "x*Dx + y*Dy"]);
        let good = env.parse("y''^(-1)").unwrap();
        assert!(verify_lambda(&fs, &good, &ProbeConfig::default()).iter().all(|v| v.as_ref().unwrap().is_zero()));
        let twice = Expr::int(2) * good;
        assert!(verify_lambda(&fs, &twice, &ProbeConfig::default()).iter().all(|v| v.as_ref().unwrap().is_zero()));
        let bad = verify_lambda(&fs, &Expr::one(), &ProbeConfig::default());
        assert_eq!(bad[2], Ok(ZeroVerdict::ExactNonzero));
    }

    #[test]
    fn quotient_recursion() {
        let p = ProbeConfig::default();
        let ws = lie_recursion(&Expr::x(), &Expr::y(), 3, &p).unwrap();
        assert_eq!(ws[1], Expr::jet(1));
        assert_eq!(ws[2], Expr::jet(2) / Expr::jet(1));
        let err = lie_recursion(&Expr::one(), &Expr::y(), 2, &p).unwrap_err();
        assert_eq!(err, InvDiffError::DegenerateDenominator(0));
    }

    #[test]
    fn dependence_probe() {
        let env = Env::default();
        let a = env.parse("y''/y'").unwrap();
        let b = env.parse("y'''").unwrap();
        let p = ProbeConfig::default();
        assert_eq!(jacobian_rank(&[a.clone(), b.clone()], &p).unwrap(), 2);
        assert_eq!(jacobian_rank(&[a.clone(), &a * &a + Expr::int(3)], &p).unwrap(), 1);
    }
}
