//! Invariance of equations and expressions under a set of vector fields, and
//! counting of differential invariants by rank.

use serde::Serialize;
use thiserror::Error;

use crate::eval::{eval_exact, eval_float, EvalError, FloatCtx, Point};
use crate::expr::{Atom, Expr, Q};
use crate::jet::{apply, apply_prolonged, prolong, VectorField};
use crate::linalg::{rank_float, rank_q};
use crate::zero::{is_zero, ProbeConfig, Sampler, ZeroError, ZeroVerdict};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquationError {
    #[error("right-hand side of an order {0} equation involves y^({1})")]
    RhsTooHigh(u32, u32),
    #[error("implicit equation is not linear in its highest derivative y^({0})")]
    NotLinear(u32),
    #[error("implicit equation has no derivatives")]
    NoJets,
}

/// `y^(n) = rhs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OdeEquation {
    pub order: u32,
    pub rhs: Expr,
}

impl OdeEquation {
    pub fn new(order: u32, rhs: Expr) -> Result<OdeEquation, EquationError> {
        match rhs.jet_order() {
            Some(k) if k >= order && order > 0 => Err(EquationError::RhsTooHigh(order, k)),
            _ => Ok(OdeEquation { order, rhs }),
        }
    }

    /// Solve `f = 0` for its highest derivative, which must appear linearly.
    pub fn from_implicit(f: &Expr) -> Result<OdeEquation, EquationError> {
        let n = match f.jet_order() {
            Some(n) if n > 0 => n,
            _ => return Err(EquationError::NoJets),
        };
        let top = Atom::Jet(n);
        let a = f.diff(&top);
        if a.contains_atom(&top) || a.is_zero() {
            return Err(EquationError::NotLinear(n));
        }
        let b = f.subs1(&top, &Expr::zero());
        OdeEquation::new(n, -(b / a))
    }

    pub fn lhs_minus_rhs(&self) -> Expr {
        Expr::jet(self.order) - &self.rhs
    }
}

/// `pr X (y^(n) - H)` restricted to `y^(n) = H`.
pub fn equation_residual(x: &VectorField, eq: &OdeEquation) -> Expr {
    let px = prolong(x, eq.order);
    let r = apply_prolonged(&px, &eq.lhs_minus_rhs()).expect("prolonged to the equation order");
    r.subs1(&Atom::Jet(eq.order), &eq.rhs)
}

pub fn check_equation_invariance(
    fields: &[VectorField],
    eq: &OdeEquation,
    probe: &ProbeConfig,
) -> Vec<Result<ZeroVerdict, ZeroError>> {
    fields.iter().map(|x| is_zero(&equation_residual(x, eq), probe)).collect()
}

pub fn check_differential_invariant(
    fields: &[VectorField],
    phi: &Expr,
    probe: &ProbeConfig,
) -> Vec<Result<ZeroVerdict, ZeroError>> {
    fields.iter().map(|x| is_zero(&apply(x, phi), probe)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankReport {
    pub order: u32,
    pub rank_rn: usize,
    pub count_dn: i64,
    pub sample_points: Vec<Point>,
}

/// Rows `(xi, eta, eta[1], ..., eta[n])`, one per field.
pub fn coefficient_matrix(fields: &[VectorField], n: u32) -> Vec<Vec<Expr>> {
    fields
        .iter()
        .map(|x| {
            let px = prolong(x, n);
            let mut row = vec![x.xi.clone(), x.eta.clone()];
            row.extend(px.coeffs);
            row
        })
        .collect()
}

pub const RANK_SAMPLES: usize = 5;

/// Largest rank of a matrix of expressions over `samples` random points.
/// Exact when every entry evaluates over Q.
pub fn sampled_rank(
    entries: &[Vec<Expr>],
    samples: usize,
    probe: &ProbeConfig,
) -> Result<(usize, Vec<Point>), ZeroError> {
    let mut atoms = std::collections::BTreeSet::new();
    for e in entries.iter().flatten() {
        atoms.extend(e.atoms());
    }
    let mut sampler = Sampler::new(probe.seed, probe.radius);
    let mut ctx = FloatCtx::for_digits(probe.digits);
    let tol = ctx.ten_pow_neg(probe.threshold_exponent());
    let mut best = 0;
    let mut points = Vec::new();
    for _ in 0..samples {
        let mut tries = 0;
        let (p, r) = loop {
            let p = sampler.point(&atoms);
            match rank_at(entries, &p, &mut ctx, &tol) {
                Ok(r) => break (p, r),
                Err(EvalError::Singular) | Err(EvalError::Domain(_)) => {
                    tries += 1;
                    if tries >= probe.max_retries {
                        return Err(ZeroError::SamplingExhausted(tries));
                    }
                }
                Err(e) => return Err(e.into()),
            }
        };
        best = best.max(r);
        points.push(p);
    }
    Ok((best, points))
}

fn rank_at(
    entries: &[Vec<Expr>],
    p: &Point,
    ctx: &mut FloatCtx,
    tol: &astro_float::BigFloat,
) -> Result<usize, EvalError> {
    let exact: Option<Vec<Vec<Q>>> =
        entries.iter().map(|row| row.iter().map(|e| eval_exact(e, p)).collect()).collect();
    if let Some(m) = exact {
        return Ok(rank_q(&m));
    }
    let mut m = Vec::with_capacity(entries.len());
    for row in entries {
        let mut r = Vec::with_capacity(row.len());
        for e in row {
            r.push(eval_float(e, p, ctx)?);
        }
        m.push(r);
    }
    Ok(rank_float(&m, tol, ctx.prec))
}

pub fn rank_and_count(fields: &[VectorField], n: u32, probe: &ProbeConfig) -> Result<RankReport, ZeroError> {
    let m = coefficient_matrix(fields, n);
    let (rank, points) = if fields.is_empty() { (0, Vec::new()) } else { sampled_rank(&m, RANK_SAMPLES, probe)? };
    Ok(RankReport { order: n, rank_rn: rank, count_dn: n as i64 + 2 - rank as i64, sample_points: points })
}
