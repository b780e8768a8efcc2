//! Deciding whether an expression vanishes identically.
//!
//! Rational functions are decided exactly. Anything with transcendental
//! functions or fractional powers is probed at seeded random rational points.

use num_traits::{Signed, ToPrimitive, Zero};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::eval::{eval_exact, eval_float, to_f64, EvalError, FloatCtx, Point};
use crate::expr::{Atom, Expr, Q};
use crate::poly::{RatFunc, RationalError};

/// Probing parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbeConfig {
    pub points: usize,
    pub digits: u32,
    pub seed: u64,
    /// Samples lie in (-radius, radius).
    pub radius: u32,
    pub max_retries: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { points: 20, digits: 50, seed: 0, radius: 3, max_retries: 100 }
    }
}

impl ProbeConfig {
    /// Values below `10^-threshold_exponent()` count as zero.
    pub fn threshold_exponent(&self) -> u32 {
        self.digits.saturating_sub(20).max(1)
    }

    pub fn with_seed(&self, seed: u64) -> ProbeConfig {
        ProbeConfig { seed, ..self.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status")]
pub enum ZeroVerdict {
    ExactZero,
    ExactNonzero,
    ProbablyZero { points_tested: usize, precision_digits: u32 },
    ProbablyNonzero { witness_point: Point, value_magnitude: f64 },
}

impl ZeroVerdict {
    pub fn is_zero(&self) -> bool {
        matches!(self, ZeroVerdict::ExactZero | ZeroVerdict::ProbablyZero { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ZeroVerdict::ExactZero => "ExactZero",
            ZeroVerdict::ExactNonzero => "ExactNonzero",
            ZeroVerdict::ProbablyZero { .. } => "ProbablyZero",
            ZeroVerdict::ProbablyNonzero { .. } => "ProbablyNonzero",
        }
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.values.len()))?;
        for (a, v) in &self.values {
            m.serialize_entry(&a.to_string(), &v.to_string())?;
        }
        m.end()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZeroError {
    #[error("sampling exhausted: {0} consecutive singular samples")]
    SamplingExhausted(usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Rational(#[from] RationalError),
}

/// Seeded source of rational sample points.
pub struct Sampler {
    rng: ChaCha8Rng,
    radius: i64,
}

const MAX_DEN: i64 = 1_000_000;

impl Sampler {
    pub fn new(seed: u64, radius: u32) -> Sampler {
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed), radius: radius.max(1) as i64 }
    }

    /// A nonzero rational p/q with q <= 10^6 and |p/q| < radius.
    pub fn rational(&mut self) -> Q {
        loop {
            let d = self.rng.random_range(1..=MAX_DEN);
            let bound = self.radius * d;
            let n = self.rng.random_range(-bound + 1..bound);
            if n != 0 {
                return Q::new(n.into(), d.into());
            }
        }
    }

    pub fn point<'a, I: IntoIterator<Item = &'a Atom>>(&mut self, atoms: I) -> Point {
        Point::new(atoms.into_iter().map(|a| (a.clone(), self.rational())).collect())
    }
}

/// Decide whether `e` is identically zero.
pub fn is_zero(e: &Expr, cfg: &ProbeConfig) -> Result<ZeroVerdict, ZeroError> {
    if let Some(c) = e.as_num() {
        return Ok(if c.is_zero() { ZeroVerdict::ExactZero } else { ZeroVerdict::ExactNonzero });
    }
    if e.is_rational() {
        decide_rational(e, cfg)
    } else {
        probe(e, cfg)
    }
}

fn decide_rational(e: &Expr, cfg: &ProbeConfig) -> Result<ZeroVerdict, ZeroError> {
    let atoms = e.atoms();
    let mut sampler = Sampler::new(cfg.seed, cfg.radius);
    // Two exact evaluations with different values settle most nonzero cases
    // cheaply; a constant still goes through the normal form.
    if let Some(ZeroVerdict::ProbablyNonzero { witness_point, value_magnitude }) =
        exact_witness(e, &atoms, &mut sampler, cfg.max_retries)
    {
        let v1 = eval_exact(e, &witness_point);
        let other = sampler.point(&atoms);
        let v2 = eval_exact(e, &other);
        if v2.is_some() && v1 != v2 {
            return Ok(ZeroVerdict::ProbablyNonzero { witness_point, value_magnitude });
        }
    }
    let r = RatFunc::from_expr(e)?;
    if r.is_zero() {
        return Ok(ZeroVerdict::ExactZero);
    }
    if r.num.is_constant() {
        return Ok(ZeroVerdict::ExactNonzero);
    }
    for _ in 0..cfg.points {
        if let Some(w) = exact_witness(e, &atoms, &mut sampler, cfg.max_retries) {
            return Ok(w);
        }
    }
    // Nonzero numerator but no witness found: the sampler keeps hitting zeros.
    Ok(ZeroVerdict::ExactNonzero)
}

fn exact_witness(
    e: &Expr,
    atoms: &std::collections::BTreeSet<Atom>,
    sampler: &mut Sampler,
    retries: usize,
) -> Option<ZeroVerdict> {
    for _ in 0..retries.max(1) {
        let p = sampler.point(atoms);
        if let Some(v) = eval_exact(e, &p) {
            if v.is_zero() {
                return None;
            }
            let mag = v.abs().to_f64().unwrap_or(f64::INFINITY);
            return Some(ZeroVerdict::ProbablyNonzero { witness_point: p, value_magnitude: mag });
        }
    }
    None
}

fn probe(e: &Expr, cfg: &ProbeConfig) -> Result<ZeroVerdict, ZeroError> {
    let atoms = e.atoms();
    let mut sampler = Sampler::new(cfg.seed, cfg.radius);
    let mut ctx = FloatCtx::for_digits(cfg.digits);
    let thr = ctx.ten_pow_neg(cfg.threshold_exponent());
    for _ in 0..cfg.points {
        let mut tries = 0;
        let (p, v) = loop {
            let p = sampler.point(&atoms);
            match eval_float(e, &p, &mut ctx) {
                Ok(v) => break (p, v),
                Err(EvalError::Singular) | Err(EvalError::Domain(_)) => {
                    tries += 1;
                    if tries >= cfg.max_retries {
                        return Err(ZeroError::SamplingExhausted(tries));
                    }
                }
                Err(err) => return Err(err.into()),
            }
        };
        let mag = v.abs();
        if mag.cmp(&thr).is_some_and(|o| o >= 0) {
            return Ok(ZeroVerdict::ProbablyNonzero { witness_point: p, value_magnitude: to_f64(&mag) });
        }
    }
    Ok(ZeroVerdict::ProbablyZero { points_tested: cfg.points, precision_digits: cfg.digits })
}

/// Evaluate `e` at one point (rationals exactly, otherwise at `digits`).
pub fn value_at(e: &Expr, p: &Point, digits: u32) -> Result<f64, EvalError> {
    if let Some(v) = eval_exact(e, p) {
        return Ok(v.to_f64().unwrap_or(f64::NAN));
    }
    let mut ctx = FloatCtx::for_digits(digits);
    eval_float(e, p, &mut ctx).map(|v| to_f64(&v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Func;

    fn cfg() -> ProbeConfig {
        ProbeConfig::default()
    }

    #[test]
    fn commuted_product_is_exact_zero() {
        let e = Expr::jet(2) * Expr::jet(3) - Expr::jet(3) * Expr::jet(2);
        assert_eq!(is_zero(&e, &cfg()).unwrap(), ZeroVerdict::ExactZero);
    }

    #[test]
    fn difference_of_jets_has_witness() {
        let e = Expr::jet(2) - Expr::jet(3);
        match is_zero(&e, &cfg()).unwrap() {
            ZeroVerdict::ProbablyNonzero { witness_point, .. } => {
                assert_ne!(witness_point.get(&Atom::Jet(2)), witness_point.get(&Atom::Jet(3)));
            }
            v => panic!("unexpected {v:?}"),
        }
    }

    #[test]
    fn nonzero_constant_after_normal_form() {
        let a = Expr::jet(1) + Expr::one();
        let e = (&a * &a - Expr::jet(1) * Expr::jet(1) - Expr::int(2) * Expr::jet(1)) / Expr::jet(2).powi(0);
        assert_eq!(is_zero(&e, &cfg()).unwrap(), ZeroVerdict::ExactNonzero);
    }

    #[test]
    fn transcendental_identity_probes_zero() {
        let x = Expr::x();
        let e = Expr::func(Func::Sin, x.clone()).powi(2) + Expr::func(Func::Cos, x).powi(2) - Expr::one();
        assert_eq!(
            is_zero(&e, &cfg()).unwrap(),
            ZeroVerdict::ProbablyZero { points_tested: 20, precision_digits: 50 }
        );
    }

    #[test]
    fn fractional_powers_probe_positive_bases() {
        let b = Expr::jet(3);
        let e = b.pow(crate::expr::qf(2, 3)) * b.pow(crate::expr::qf(1, 3)) - Expr::sqrt(b.clone() * b.clone());
        // Both sides are y''' for positive y'''; canonical form already merges them.
        assert!(is_zero(&e, &cfg()).unwrap().is_zero());
        let f = Expr::sqrt(Expr::jet(3)) - Expr::jet(3);
        assert!(matches!(is_zero(&f, &cfg()).unwrap(), ZeroVerdict::ProbablyNonzero { .. }));
    }

    #[test]
    fn identically_singular_exhausts() {
        let e = Expr::ln(-(Expr::jet(1) * Expr::jet(1)) - Expr::one());
        assert_eq!(is_zero(&e, &cfg()), Err(ZeroError::SamplingExhausted(100)));
    }

    #[test]
    fn sampler_is_deterministic() {
        let atoms = [Atom::X, Atom::Jet(1)];
        let a = Sampler::new(42, 3).point(&atoms);
        let b = Sampler::new(42, 3).point(&atoms);
        assert_eq!(a, b);
        for v in a.values.values() {
            assert!(v.abs() < Q::from_integer(3.into()));
            assert!(*v.denom() <= 1_000_000.into());
        }
    }
}
