//! Sparse multivariate polynomials with rational coefficients, plus the
//! rational-function view of an expression used for exact zero tests.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::expr::{q_gcd, Atom, Expr, Node, Q};

/// A monomial, stored most significant variable first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Mono(Vec<(Atom, u32)>);

impl Mono {
    pub fn one() -> Mono {
        Mono(Vec::new())
    }

    pub fn var(a: Atom, e: u32) -> Mono {
        if e == 0 {
            Mono::one()
        } else {
            Mono(vec![(a, e)])
        }
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exps(&self) -> &[(Atom, u32)] {
        &self.0
    }

    pub fn degree(&self, v: &Atom) -> u32 {
        self.0.iter().find(|(a, _)| a == v).map_or(0, |(_, e)| *e)
    }

    fn merge<F: Fn(u32, u32) -> u32>(&self, other: &Mono, f: F) -> Mono {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() || j < other.0.len() {
            let pick = match (self.0.get(i), other.0.get(j)) {
                (Some((a, _)), Some((b, _))) => b.cmp(a),
                (Some(_), None) => Ordering::Less,
                (None, Some(_)) => Ordering::Greater,
                (None, None) => unreachable!(),
            };
            let (a, e) = match pick {
                Ordering::Less => {
                    i += 1;
                    (self.0[i - 1].0.clone(), f(self.0[i - 1].1, 0))
                }
                Ordering::Greater => {
                    j += 1;
                    (other.0[j - 1].0.clone(), f(0, other.0[j - 1].1))
                }
                Ordering::Equal => {
                    i += 1;
                    j += 1;
                    (self.0[i - 1].0.clone(), f(self.0[i - 1].1, other.0[j - 1].1))
                }
            };
            if e > 0 {
                out.push((a, e));
            }
        }
        Mono(out)
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        self.merge(other, |a, b| a + b)
    }

    pub fn lcm(&self, other: &Mono) -> Mono {
        self.merge(other, |a, b| a.max(b))
    }

    pub fn gcd(&self, other: &Mono) -> Mono {
        self.merge(other, |a, b| a.min(b))
    }

    pub fn divides(&self, other: &Mono) -> bool {
        self.0.iter().all(|(a, e)| other.degree(a) >= *e)
    }

    /// `self / other`, assuming `other` divides `self`.
    pub fn div(&self, other: &Mono) -> Mono {
        self.merge(other, |a, b| a - b)
    }

    pub fn pow(&self, k: u32) -> Mono {
        Mono(self.0.iter().map(|(a, e)| (a.clone(), e * k)).filter(|(_, e)| *e > 0).collect())
    }

    pub fn to_expr(&self) -> Expr {
        Expr::mul_all(self.0.iter().map(|(a, e)| Expr::atom(a.clone()).powi(*e as i64)))
    }
}

// Lexicographic order with the variable order of `Atom` (jets most significant).
impl Ord for Mono {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.0.iter().zip(other.0.iter()) {
            match a.0.cmp(&b.0) {
                Ordering::Equal => {}
                o => return o,
            }
            match a.1.cmp(&b.1) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A polynomial; terms are kept in ascending monomial order, so the leading
/// term is the last entry.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Poly {
    terms: BTreeMap<Mono, Q>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn constant(c: Q) -> Poly {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(Mono::one(), c);
        }
        p
    }

    pub fn one() -> Poly {
        Poly::constant(Q::one())
    }

    pub fn var(a: Atom) -> Poly {
        Poly::monomial(Mono::var(a, 1), Q::one())
    }

    pub fn monomial(m: Mono, c: Q) -> Poly {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &Q)> {
        self.terms.iter()
    }

    pub fn as_constant(&self) -> Option<Q> {
        match self.terms.len() {
            0 => Some(Q::zero()),
            1 => self.terms.get(&Mono::one()).cloned(),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.as_constant().is_some()
    }

    pub fn leading(&self) -> Option<(&Mono, &Q)> {
        self.terms.iter().next_back()
    }

    pub fn vars(&self) -> BTreeSet<Atom> {
        self.terms.keys().flat_map(|m| m.0.iter().map(|(a, _)| a.clone())).collect()
    }

    pub fn degree(&self, v: &Atom) -> u32 {
        self.terms.keys().map(|m| m.degree(v)).max().unwrap_or(0)
    }

    /// Total degree.
    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.0.iter().map(|(_, e)| e).sum()).max().unwrap_or(0)
    }

    fn add_term(&mut self, m: Mono, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }

    pub fn neg(&self) -> Poly {
        self.scale(&-Q::one())
    }

    pub fn scale(&self, c: &Q) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, d)| (m.clone(), d * c)).collect() }
    }

    pub fn mul_term(&self, m: &Mono, c: &Q) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(n, d)| (n.mul(m), d * c)).collect() }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let (small, big) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        let mut acc: HashMap<Mono, Q> = HashMap::with_capacity(small.len() * big.len());
        for (m1, c1) in &small.terms {
            for (m2, c2) in &big.terms {
                *acc.entry(m1.mul(m2)).or_insert_with(Q::zero) += c1 * c2;
            }
        }
        Poly { terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect() }
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut acc = Poly::one();
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn derivative(&self, v: &Atom) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let d = m.degree(v);
            if d == 0 {
                continue;
            }
            let m2 = m.div(&Mono::var(v.clone(), 1));
            out.add_term(m2, c * Q::from_integer(d.into()));
        }
        out
    }

    /// Coefficients as a univariate polynomial in `v` (index = degree).
    pub fn coeffs_in(&self, v: &Atom) -> Vec<Poly> {
        let mut out = vec![Poly::zero(); self.degree(v) as usize + 1];
        for (m, c) in &self.terms {
            let d = m.degree(v);
            let rest = m.div(&Mono::var(v.clone(), d));
            out[d as usize].add_term(rest, c.clone());
        }
        out
    }

    /// Exact quotient, or `None` when `d` does not divide `self`.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        let (lm, lc) = d.leading()?;
        let (lm, lc) = (lm.clone(), lc.clone());
        let mut r = self.clone();
        let mut quo = Poly::zero();
        while let Some((rm, rc)) = r.leading() {
            if !lm.divides(rm) {
                return None;
            }
            let t = rm.div(&lm);
            let c = rc / &lc;
            r = r.sub(&d.mul_term(&t, &c));
            quo.add_term(t, c);
        }
        Some(quo)
    }

    /// Gcd of the coefficients (as a positive rational).
    pub fn numeric_content(&self) -> Q {
        self.terms.values().fold(Q::zero(), |g, c| q_gcd(&g, c))
    }

    /// Split as `c * p` with `p` having coprime integer coefficients and a
    /// positive leading coefficient.
    pub fn primitive(&self) -> (Q, Poly) {
        if self.is_zero() {
            return (Q::zero(), Poly::zero());
        }
        let mut c = self.numeric_content();
        if self.leading().unwrap().1.is_negative() {
            c = -c;
        }
        (c.clone(), self.scale(&c.recip()))
    }

    /// Largest monomial dividing every term.
    pub fn mono_content(&self) -> Mono {
        let mut it = self.terms.keys();
        let first = match it.next() {
            Some(m) => m.clone(),
            None => return Mono::one(),
        };
        it.fold(first, |g, m| g.gcd(m))
    }

    pub fn div_mono(&self, m: &Mono) -> Poly {
        Poly { terms: self.terms.iter().map(|(n, c)| (n.div(m), c.clone())).collect() }
    }

    pub fn eval(&self, point: &BTreeMap<Atom, Q>) -> Option<Q> {
        let mut acc = Q::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (a, e) in &m.0 {
                let v = point.get(a)?;
                t *= num_traits::pow(v.clone(), *e as usize);
            }
            acc += t;
        }
        Some(acc)
    }

    /// Substitute polynomials for variables.
    pub fn compose(&self, map: &BTreeMap<Atom, Poly>) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut t = Poly::constant(c.clone());
            for (a, e) in &m.0 {
                match map.get(a) {
                    Some(p) => t = t.mul(&p.pow(*e)),
                    None => t = t.mul_term(&Mono::var(a.clone(), *e), &Q::one()),
                }
            }
            out = out.add(&t);
        }
        out
    }

    pub fn to_expr(&self) -> Expr {
        Expr::add_all(self.terms.iter().map(|(m, c)| Expr::num(c.clone()) * m.to_expr()))
    }

    pub fn from_expr(e: &Expr) -> Result<Poly, RationalError> {
        let r = RatFunc::from_expr(e)?;
        if r.den.is_one() {
            Ok(r.num)
        } else {
            Err(RationalError::NotPolynomial)
        }
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

fn highest_var(a: &Poly, b: &Poly) -> Option<Atom> {
    a.vars().into_iter().chain(b.vars()).max()
}

/// Content of `p` viewed as a polynomial in `v`: the gcd of its coefficients.
pub fn content_in(p: &Poly, v: &Atom) -> Poly {
    let mut g = Poly::zero();
    for c in p.coeffs_in(v) {
        if c.is_zero() {
            continue;
        }
        g = gcd(&g, &c);
        if g.is_constant() {
            return Poly::one();
        }
    }
    g
}

fn normalized(p: &Poly) -> Poly {
    if p.is_zero() {
        return Poly::zero();
    }
    if p.is_constant() {
        return Poly::one();
    }
    p.primitive().1
}

/// Pseudo-remainder of `a` by `b` in the variable `v`.
fn prem(a: &Poly, b: &Poly, v: &Atom) -> Poly {
    let db = b.degree(v);
    let bc = b.coeffs_in(v);
    let lb = bc[db as usize].clone();
    let mut r = a.clone();
    while !r.is_zero() && r.degree(v) >= db {
        let dr = r.degree(v);
        let lr = r.coeffs_in(v)[dr as usize].clone();
        let shift = Poly::monomial(Mono::var(v.clone(), dr - db), Q::one());
        r = r.mul(&lb).sub(&lr.mul(&shift).mul(b));
        // Keep coefficients small.
        if !r.is_zero() {
            r = r.primitive().1;
        }
    }
    r
}

/// Greatest common divisor over Q, normalized to coprime integer coefficients
/// with positive leading coefficient.
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return normalized(b);
    }
    if b.is_zero() {
        return normalized(a);
    }
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    let ma = a.mono_content();
    let mb = b.mono_content();
    let mg = ma.gcd(&mb);
    let (a, b) = (a.div_mono(&ma), b.div_mono(&mb));
    let g = gcd_nomono(&a, &b);
    normalized(&g.mul_term(&mg, &Q::one()))
}

fn gcd_nomono(a: &Poly, b: &Poly) -> Poly {
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    let v = highest_var(a, b).expect("non-constant");
    let (da, db) = (a.degree(&v), b.degree(&v));
    if da == 0 {
        return gcd(a, &content_in(b, &v));
    }
    if db == 0 {
        return gcd(&content_in(a, &v), b);
    }
    let ca = content_in(a, &v);
    let cb = content_in(b, &v);
    let c = gcd(&ca, &cb);
    let mut p = a.div_exact(&ca).expect("content divides");
    let mut r = b.div_exact(&cb).expect("content divides");
    if p.degree(&v) < r.degree(&v) {
        std::mem::swap(&mut p, &mut r);
    }
    while !r.is_zero() {
        let rem = prem(&p, &r, &v);
        p = r;
        r = if rem.is_zero() || rem.degree(&v) == 0 {
            if rem.is_zero() {
                Poly::zero()
            } else {
                // Coprime in v.
                p = Poly::one();
                Poly::zero()
            }
        } else {
            let cr = content_in(&rem, &v);
            rem.div_exact(&cr).expect("content divides")
        };
    }
    let g = if p.degree(&v) == 0 { Poly::one() } else { p };
    normalized(&c.mul(&g))
}

/// Square-free factorization: `p = c * prod f_i^{m_i}` with each `f_i`
/// square-free, primitive, and with positive leading coefficient. Monomial
/// content is split into single-variable factors.
pub fn factor_squarefree(p: &Poly) -> (Q, Vec<(Poly, u32)>) {
    if p.is_zero() {
        return (Q::zero(), Vec::new());
    }
    let (c, prim) = p.primitive();
    let mut out: BTreeMap<Poly, u32> = BTreeMap::new();
    let m = prim.mono_content();
    for (a, e) in m.exps() {
        *out.entry(Poly::var(a.clone())).or_insert(0) += e;
    }
    let rest = prim.div_mono(&m);
    let mut sign = Q::one();
    factor_rec(&rest, &mut out, &mut sign);
    (c * sign, out.into_iter().collect())
}

fn factor_rec(p: &Poly, out: &mut BTreeMap<Poly, u32>, sign: &mut Q) {
    if p.is_constant() {
        if let Some(c) = p.as_constant() {
            *sign *= c;
        }
        return;
    }
    let v = p.vars().into_iter().max().expect("non-constant");
    let cont = content_in(p, &v);
    if !cont.is_constant() {
        let pp = p.div_exact(&cont).expect("content divides");
        factor_rec(&cont, out, sign);
        factor_rec(&pp, out, sign);
        return;
    }
    // Yun's algorithm in v.
    let f = p.clone();
    let df = f.derivative(&v);
    let a0 = gcd(&f, &df);
    let mut b = f.div_exact(&a0).expect("gcd divides");
    let mut cc = df.div_exact(&a0).expect("gcd divides");
    let mut d = cc.sub(&b.derivative(&v));
    let mut i = 1u32;
    let mut product = Poly::one();
    while !b.is_constant() {
        let a = gcd(&b, &d);
        if !a.is_constant() {
            *out.entry(a.clone()).or_insert(0) += i;
            product = product.mul(&a.pow(i));
        }
        b = b.div_exact(&a).expect("gcd divides");
        cc = d.div_exact(&a).expect("gcd divides");
        d = cc.sub(&b.derivative(&v));
        i += 1;
    }
    // Whatever constant is left over after removing the normalized factors.
    if let Some(rest) = p.div_exact(&product) {
        if let Some(c) = rest.as_constant() {
            *sign *= c;
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RationalError {
    #[error("expression leaves the rational-function fragment")]
    NotRational,
    #[error("expression is not a polynomial")]
    NotPolynomial,
    #[error("division by zero")]
    DivisionByZero,
}

/// Denominator kept in factored form: monomial part times powers of
/// primitive non-monomial polynomials.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Den {
    pub mono: Mono,
    pub factors: BTreeMap<Poly, u32>,
}

impl Den {
    pub fn one() -> Den {
        Den::default()
    }

    pub fn is_one(&self) -> bool {
        self.mono.is_one() && self.factors.is_empty()
    }

    pub fn mul(&self, o: &Den) -> Den {
        let mut f = self.factors.clone();
        for (p, e) in &o.factors {
            *f.entry(p.clone()).or_insert(0) += e;
        }
        Den { mono: self.mono.mul(&o.mono), factors: f }
    }

    pub fn pow(&self, k: u32) -> Den {
        Den { mono: self.mono.pow(k), factors: self.factors.iter().map(|(p, e)| (p.clone(), e * k)).collect() }
    }

    pub fn lcm(&self, o: &Den) -> Den {
        let mut f = self.factors.clone();
        for (p, e) in &o.factors {
            let x = f.entry(p.clone()).or_insert(0);
            *x = (*x).max(*e);
        }
        Den { mono: self.mono.lcm(&o.mono), factors: f }
    }

    /// `self / o` as a polynomial, assuming `o` divides `self` factor-wise.
    pub fn cofactor(&self, o: &Den) -> Poly {
        let mut p = Poly::monomial(self.mono.div(&o.mono), Q::one());
        for (f, e) in &self.factors {
            let k = e - o.factors.get(f).copied().unwrap_or(0);
            if k > 0 {
                p = p.mul(&f.pow(k));
            }
        }
        p
    }

    pub fn to_poly(&self) -> Poly {
        self.cofactor(&Den::one())
    }

    pub fn to_expr(&self) -> Expr {
        Expr::mul_all(
            std::iter::once(self.mono.to_expr())
                .chain(self.factors.iter().map(|(p, e)| p.to_expr().powi(*e as i64))),
        )
    }
}

/// A rational function `num / den` with a factored denominator.
#[derive(Clone, Debug, PartialEq)]
pub struct RatFunc {
    pub num: Poly,
    pub den: Den,
}

impl RatFunc {
    pub fn from_poly(p: Poly) -> RatFunc {
        RatFunc { num: p, den: Den::one() }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn from_expr(e: &Expr) -> Result<RatFunc, RationalError> {
        let mut memo = HashMap::new();
        from_expr_rec(e, &mut memo)
    }

    fn mul(&self, o: &RatFunc) -> RatFunc {
        RatFunc { num: self.num.mul(&o.num), den: self.den.mul(&o.den) }
    }

    fn pow(&self, k: u32) -> RatFunc {
        RatFunc { num: self.num.pow(k), den: self.den.pow(k) }
    }

    fn invert(&self) -> Result<RatFunc, RationalError> {
        if self.num.is_zero() {
            return Err(RationalError::DivisionByZero);
        }
        let (c, prim) = self.num.primitive();
        let m = prim.mono_content();
        let rest = prim.div_mono(&m);
        let mut den = Den { mono: m, factors: BTreeMap::new() };
        if !rest.is_constant() {
            den.factors.insert(rest, 1);
        }
        Ok(RatFunc { num: self.den.to_poly().scale(&c.recip()), den })
    }

    fn add_all(items: Vec<RatFunc>) -> RatFunc {
        let l = items.iter().fold(Den::one(), |acc, r| acc.lcm(&r.den));
        let mut num = Poly::zero();
        for r in &items {
            num = num.add(&r.num.mul(&l.cofactor(&r.den)));
        }
        RatFunc { num, den: l }
    }

    pub fn eval(&self, point: &BTreeMap<Atom, Q>) -> Option<Q> {
        let d = self.den.to_poly().eval(point)?;
        if d.is_zero() {
            return None;
        }
        Some(self.num.eval(point)? / d)
    }

    /// Cancel common factors between numerator and denominator.
    pub fn cancel(&self) -> RatFunc {
        let mut num = self.num.clone();
        let mut den = Den::one();
        let nm = num.mono_content();
        let common = nm.gcd(&self.den.mono);
        num = num.div_mono(&common);
        den.mono = self.den.mono.div(&common);
        for (f, e) in &self.den.factors {
            let mut k = *e;
            while k > 0 {
                match num.div_exact(f) {
                    Some(q) => {
                        num = q;
                        k -= 1;
                    }
                    None => break,
                }
            }
            if k > 0 {
                den.factors.insert(f.clone(), k);
            }
        }
        RatFunc { num, den }
    }

    pub fn to_expr(&self) -> Expr {
        self.num.to_expr() / self.den.to_expr()
    }
}

fn from_expr_rec(e: &Expr, memo: &mut HashMap<usize, RatFunc>) -> Result<RatFunc, RationalError> {
    if let Some(r) = memo.get(&e.key()) {
        return Ok(r.clone());
    }
    let r = match e.node() {
        Node::Num(c) => RatFunc::from_poly(Poly::constant(c.clone())),
        Node::Atom(a) => RatFunc::from_poly(Poly::var(a.clone())),
        Node::Func(..) => return Err(RationalError::NotRational),
        Node::Pow(b, ex) => {
            if !ex.is_integer() {
                return Err(RationalError::NotRational);
            }
            let k = ex.to_integer().to_i64().ok_or(RationalError::NotRational)?;
            let rb = from_expr_rec(b, memo)?;
            if k >= 0 {
                rb.pow(k as u32)
            } else {
                rb.invert()?.pow((-k) as u32)
            }
        }
        Node::Mul(fs) => {
            let mut acc = RatFunc::from_poly(Poly::one());
            for f in fs {
                acc = acc.mul(&from_expr_rec(f, memo)?);
            }
            acc
        }
        Node::Add(ts) => {
            let items = ts.iter().map(|t| from_expr_rec(t, memo)).collect::<Result<Vec<_>, _>>()?;
            RatFunc::add_all(items)
        }
    };
    memo.insert(e.key(), r.clone());
    Ok(r)
}

/// Canonical rational normal form of an expression on the rational fragment:
/// expanded numerator over expanded, cancelled denominator.
pub fn rational_normal_form(e: &Expr) -> Result<Expr, RationalError> {
    let r = RatFunc::from_expr(e)?.cancel();
    let (c, num) = r.num.primitive();
    let den = r.den.to_poly();
    let (d, den) = den.primitive();
    if num.is_zero() {
        return Ok(Expr::zero());
    }
    Ok(Expr::num(c / d) * num.to_expr() / den.to_expr())
}

/// Integer lcm of the denominators of a polynomial's coefficients.
pub fn coefficient_denominator(p: &Poly) -> num_bigint::BigInt {
    p.terms().fold(num_bigint::BigInt::one(), |acc, (_, c)| acc.lcm(c.denom()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::q;

    fn v(k: u32) -> Poly {
        Poly::var(Atom::derivative(k))
    }

    #[test]
    fn exact_division() {
        let a = v(1).add(&v(2));
        let b = v(1).sub(&v(3));
        let p = a.mul(&b);
        assert_eq!(p.div_exact(&a), Some(b.clone()));
        assert_eq!(p.div_exact(&v(4)), None);
    }

    #[test]
    fn multivariate_gcd() {
        let a = v(1).add(&v(2).mul(&v(3)));
        let b = v(1).sub(&Poly::constant(q(2)));
        let c = v(3).add(&Poly::one());
        let g = gcd(&a.mul(&b), &a.mul(&c));
        assert_eq!(g, a.primitive().1);
        assert_eq!(gcd(&b, &c), Poly::one());
    }

    #[test]
    fn squarefree_split() {
        // -4 y' (2 y' y''' - 3 y''^2)^2
        let k = v(1).mul(&v(3)).scale(&q(2)).sub(&v(2).pow(2).scale(&q(3)));
        let p = v(1).mul(&k.pow(2)).scale(&q(-4));
        let (c, fs) = factor_squarefree(&p);
        let rebuilt = fs.iter().fold(Poly::constant(c.clone()), |acc, (f, e)| acc.mul(&f.pow(*e)));
        assert_eq!(rebuilt, p);
        assert!(fs.iter().any(|(f, e)| *e == 2 && f.total_degree() == 2));
        assert!(fs.iter().any(|(f, e)| *e == 1 && *f == v(1)));
    }

    #[test]
    fn content_split() {
        // (1 + y'^2) (y'^2 y''' - 3 y' y''^2 + y''')^2
        let s = Poly::one().add(&v(1).pow(2));
        let t = v(1).pow(2).mul(&v(3)).sub(&v(1).mul(&v(2).pow(2)).scale(&q(3))).add(&v(3));
        let p = s.mul(&t.pow(2)).scale(&q(-16));
        let (c, fs) = factor_squarefree(&p);
        assert_eq!(c, q(-16));
        assert_eq!(fs.len(), 2);
    }

    #[test]
    fn ratfunc_zero_test() {
        let y2 = Expr::jet(2);
        let y3 = Expr::jet(3);
        let a = &y3 / (&y2 + Expr::one()) - (&y3 * &y2) / (&y2 * &y2 + &y2);
        assert!(RatFunc::from_expr(&a).unwrap().is_zero());
        let b = &y3 / &y2 - &y2;
        assert!(!RatFunc::from_expr(&b).unwrap().is_zero());
    }
}
