//! Numeric evaluation of expressions at sample points, in arbitrary
//! precision floating point and exactly over Q.

use std::collections::{BTreeMap, HashMap};

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::expr::{Atom, Expr, Func, Node, Q};

const RM: RoundingMode = RoundingMode::ToEven;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("expression is singular at the sample point")]
    Singular,
    #[error("argument outside the real domain of {0}")]
    Domain(&'static str),
    #[error("no value bound for {0}")]
    Unbound(String),
}

/// A sample point: exact rational coordinates for every atom it binds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Point {
    pub values: BTreeMap<Atom, Q>,
}

impl Point {
    pub fn new(values: BTreeMap<Atom, Q>) -> Point {
        Point { values }
    }

    pub fn get(&self, a: &Atom) -> Option<&Q> {
        self.values.get(a)
    }
}

/// Working precision and the constant cache for floating evaluation.
pub struct FloatCtx {
    pub prec: usize,
    consts: Consts,
    tiny: BigFloat,
}

impl FloatCtx {
    /// Precision sufficient for `digits` significant decimal digits plus guard bits.
    pub fn for_digits(digits: u32) -> FloatCtx {
        let prec = (digits as f64 * std::f64::consts::LOG2_10).ceil() as usize + 32;
        let mut consts = Consts::new().expect("constant cache");
        let tiny = BigFloat::parse("1e-10", Radix::Dec, prec, RM, &mut consts);
        FloatCtx { prec, consts, tiny }
    }

    pub fn from_q(&mut self, c: &Q) -> BigFloat {
        let n = self.from_int(c.numer());
        if c.denom() == &BigInt::from(1) {
            return n;
        }
        let d = self.from_int(c.denom());
        n.div(&d, self.prec, RM)
    }

    fn from_int(&mut self, i: &BigInt) -> BigFloat {
        match i.to_i128() {
            Some(v) => BigFloat::from_i128(v, self.prec),
            None => BigFloat::parse(&i.to_string(), Radix::Dec, self.prec, RM, &mut self.consts),
        }
    }

    /// `10^-k` at working precision.
    pub fn ten_pow_neg(&mut self, k: u32) -> BigFloat {
        BigFloat::parse(&format!("1e-{k}"), Radix::Dec, self.prec, RM, &mut self.consts)
    }

    fn too_small(&self, v: &BigFloat) -> bool {
        v.abs().cmp(&self.tiny).is_none_or(|o| o < 0)
    }
}

/// Approximate magnitude as `f64` (saturating), for reporting.
pub fn to_f64(v: &BigFloat) -> f64 {
    if v.is_zero() {
        return 0.0;
    }
    if v.is_nan() {
        return f64::NAN;
    }
    let mut cc = Consts::new().expect("constant cache");
    v.format(Radix::Dec, RM, &mut cc)
        .ok()
        .and_then(|s| s.parse::<f64>().ok())
        .unwrap_or(f64::NAN)
}

/// Evaluate in floating point. Shared subexpressions are evaluated once.
pub fn eval_float(e: &Expr, point: &Point, ctx: &mut FloatCtx) -> Result<BigFloat, EvalError> {
    let mut bound = HashMap::new();
    for (a, v) in &point.values {
        bound.insert(a.clone(), ctx.from_q(v));
    }
    let mut memo = HashMap::new();
    eval_rec(e, &bound, ctx, &mut memo)
}

fn eval_rec(
    e: &Expr,
    bound: &HashMap<Atom, BigFloat>,
    ctx: &mut FloatCtx,
    memo: &mut HashMap<usize, BigFloat>,
) -> Result<BigFloat, EvalError> {
    if let Some(v) = memo.get(&e.key()) {
        return Ok(v.clone());
    }
    let p = ctx.prec;
    let v = match e.node() {
        Node::Num(c) => ctx.from_q(c),
        Node::Atom(a) => bound.get(a).cloned().ok_or_else(|| EvalError::Unbound(a.to_string()))?,
        Node::Add(ts) => {
            let mut acc = BigFloat::from_i64(0, p);
            for t in ts {
                let v = eval_rec(t, bound, ctx, memo)?;
                acc = acc.add(&v, p, RM);
            }
            acc
        }
        Node::Mul(fs) => {
            let mut acc = BigFloat::from_i64(1, p);
            for f in fs {
                let v = eval_rec(f, bound, ctx, memo)?;
                acc = acc.mul(&v, p, RM);
            }
            acc
        }
        Node::Pow(b, ex) => {
            let base = eval_rec(b, bound, ctx, memo)?;
            if ex.is_integer() {
                let k = ex.to_integer();
                let m = k.abs().to_usize().ok_or(EvalError::Domain("pow"))?;
                if k.is_negative() && ctx.too_small(&base) {
                    return Err(EvalError::Singular);
                }
                let r = base.powi(m, p, RM);
                if k.is_negative() {
                    r.reciprocal(p, RM)
                } else {
                    r
                }
            } else {
                if base.is_negative() || base.is_zero() {
                    return Err(EvalError::Domain("fractional power"));
                }
                if ctx.too_small(&base) {
                    return Err(EvalError::Singular);
                }
                let ef = ctx.from_q(ex);
                base.pow(&ef, p, RM, &mut ctx.consts)
            }
        }
        Node::Func(f, a) => {
            let arg = eval_rec(a, bound, ctx, memo)?;
            match f {
                Func::Exp => arg.exp(p, RM, &mut ctx.consts),
                Func::Ln => {
                    if arg.is_negative() || ctx.too_small(&arg) {
                        return Err(EvalError::Domain("ln"));
                    }
                    arg.ln(p, RM, &mut ctx.consts)
                }
                Func::Arctan => arg.atan(p, RM, &mut ctx.consts),
                Func::Sin => arg.sin(p, RM, &mut ctx.consts),
                Func::Cos => arg.cos(p, RM, &mut ctx.consts),
            }
        }
    };
    if v.is_nan() || v.is_inf() {
        return Err(EvalError::Singular);
    }
    memo.insert(e.key(), v.clone());
    Ok(v)
}

/// Exact evaluation over Q; `None` when the expression leaves the rational
/// fragment or hits a zero denominator.
pub fn eval_exact(e: &Expr, point: &Point) -> Option<Q> {
    let mut memo = HashMap::new();
    exact_rec(e, point, &mut memo)
}

fn exact_rec(e: &Expr, point: &Point, memo: &mut HashMap<usize, Q>) -> Option<Q> {
    if let Some(v) = memo.get(&e.key()) {
        return Some(v.clone());
    }
    let v = match e.node() {
        Node::Num(c) => c.clone(),
        Node::Atom(a) => point.get(a)?.clone(),
        Node::Add(ts) => {
            let mut acc = Q::zero();
            for t in ts {
                acc += exact_rec(t, point, memo)?;
            }
            acc
        }
        Node::Mul(fs) => {
            let mut acc = Q::from_integer(1.into());
            for f in fs {
                acc *= exact_rec(f, point, memo)?;
            }
            acc
        }
        Node::Pow(b, ex) => {
            if !ex.is_integer() {
                return None;
            }
            let base = exact_rec(b, point, memo)?;
            let k = ex.to_integer().to_i32()?;
            if k < 0 && base.is_zero() {
                return None;
            }
            num_traits::pow::Pow::pow(base, k)
        }
        Node::Func(..) => return None,
    };
    memo.insert(e.key(), v.clone());
    Some(v)
}
