//! Immutable symbolic expressions over jet coordinates.
//!
//! Every constructor returns a canonical form: sums have merged like terms,
//! products are flattened with merged exponents, integer powers of atoms live
//! in the exponent map, and numeric radicals are reduced to `c^(p/q)` with
//! integer `c > 1` and `0 < p/q < 1`. Rational powers distribute over products
//! (the kernel works on the domain where every radicand is positive).

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational number.
pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qf(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// A coordinate of jet space or a named parameter.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Atom {
    X,
    Y,
    /// `y^(k)` with `k >= 1`.
    Jet(u32),
    Param(Arc<str>),
}

impl Atom {
    /// The k-th derivative coordinate; order 0 is `y` itself.
    pub fn derivative(k: u32) -> Atom {
        if k == 0 {
            Atom::Y
        } else {
            Atom::Jet(k)
        }
    }

    pub fn param(name: &str) -> Atom {
        Atom::Param(Arc::from(name))
    }

    /// Derivative order of a dependent coordinate (`y` is 0).
    pub fn jet_order(&self) -> Option<u32> {
        match self {
            Atom::Y => Some(0),
            Atom::Jet(k) => Some(*k),
            _ => None,
        }
    }

    fn rank(&self) -> u32 {
        match self {
            Atom::Param(_) => 0,
            Atom::X => 1,
            Atom::Y => 2,
            Atom::Jet(k) => 2 + k,
        }
    }
}

// Parameters sort lowest so that polynomial leading terms are taken in the
// jet variables first.
impl Ord for Atom {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Atom::Param(a), Atom::Param(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Atom {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::X => write!(f, "x"),
            Atom::Y => write!(f, "y"),
            Atom::Jet(k) if *k <= 3 => write!(f, "y{}", "'".repeat(*k as usize)),
            Atom::Jet(k) => write!(f, "y^({k})"),
            Atom::Param(p) => write!(f, "{p}"),
        }
    }
}

/// Transcendental functions. `sqrt` is not here: it is the power `^(1/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Exp,
    Ln,
    Arctan,
    Sin,
    Cos,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Arctan => "arctan",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "arctan" => Func::Arctan,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            _ => return None,
        })
    }
}

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Num(Q),
    Atom(Atom),
    Func(Func, Expr),
    Pow(Expr, Q),
    /// Optional leading `Num` coefficient followed by sorted distinct factors.
    Mul(Vec<Expr>),
    /// Optional leading `Num` constant followed by sorted terms.
    Add(Vec<Expr>),
}

/// A shared, immutable, canonical expression.
#[derive(Clone, Debug)]
pub struct Expr(Arc<Node>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}

impl Eq for Expr {}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            Ordering::Equal
        } else {
            self.0.cmp(&other.0)
        }
    }
}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash(state)
    }
}

fn raw(n: Node) -> Expr {
    Expr(Arc::new(n))
}

fn int_root(n: &BigInt, k: u32) -> Option<BigInt> {
    let r = n.nth_root(k);
    (num_traits::pow(r.clone(), k as usize) == *n).then_some(r)
}

fn qpow(c: &Q, e: &BigInt) -> Option<Q> {
    let e = e.to_i32()?;
    if c.is_zero() && e < 0 {
        return None;
    }
    Some(num_traits::Pow::pow(c, e))
}

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    pub(crate) fn key(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn num(c: Q) -> Expr {
        raw(Node::Num(c))
    }

    pub fn int(n: i64) -> Expr {
        Expr::num(q(n))
    }

    pub fn frac(n: i64, d: i64) -> Expr {
        Expr::num(qf(n, d))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn atom(a: Atom) -> Expr {
        raw(Node::Atom(a))
    }

    pub fn x() -> Expr {
        Expr::atom(Atom::X)
    }

    pub fn y() -> Expr {
        Expr::atom(Atom::Y)
    }

    /// `y^(k)`, with `jet(0) == y`.
    pub fn jet(k: u32) -> Expr {
        Expr::atom(Atom::derivative(k))
    }

    pub fn param(name: &str) -> Expr {
        Expr::atom(Atom::param(name))
    }

    pub fn as_num(&self) -> Option<&Q> {
        match self.node() {
            Node::Num(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_atom(&self) -> Option<&Atom> {
        match self.node() {
            Node::Atom(a) => Some(a),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.node(), Node::Num(c) if c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self.node(), Node::Num(c) if c.is_one())
    }

    pub fn func(f: Func, arg: Expr) -> Expr {
        if let Some(c) = arg.as_num() {
            if c.is_zero() {
                match f {
                    Func::Exp | Func::Cos => return Expr::one(),
                    Func::Sin | Func::Arctan => return Expr::zero(),
                    Func::Ln => {}
                }
            } else if c.is_one() && f == Func::Ln {
                return Expr::zero();
            }
        }
        match (f, arg.node()) {
            (Func::Exp, Node::Func(Func::Ln, inner)) => inner.clone(),
            (Func::Ln, Node::Func(Func::Exp, inner)) => inner.clone(),
            (Func::Ln, Node::Pow(b, e)) => Expr::num(e.clone()) * Expr::func(Func::Ln, b.clone()),
            _ => raw(Node::Func(f, arg)),
        }
    }

    pub fn exp(arg: Expr) -> Expr {
        Expr::func(Func::Exp, arg)
    }

    pub fn ln(arg: Expr) -> Expr {
        Expr::func(Func::Ln, arg)
    }

    pub fn sqrt(arg: Expr) -> Expr {
        arg.pow(qf(1, 2))
    }

    pub fn powi(&self, e: i64) -> Expr {
        self.pow(q(e))
    }

    /// `self^e` for a rational exponent.
    pub fn pow(&self, e: Q) -> Expr {
        if e.is_zero() {
            return Expr::one();
        }
        if e.is_one() {
            return self.clone();
        }
        match self.node() {
            Node::Num(c) => num_pow(c, e),
            Node::Pow(b, e2) => b.pow(e2 * e),
            Node::Func(Func::Exp, a) => Expr::exp(a * &Expr::num(e)),
            Node::Mul(fs) => {
                let (coeff, rest) = split_coeff(fs);
                if e.is_integer() || coeff.is_positive() {
                    Expr::mul_all(fs.iter().map(|f| f.pow(e.clone())))
                } else {
                    let neg = Expr::mul_all(std::iter::once(Expr::int(-1)).chain(rest.iter().cloned()));
                    num_pow(&-coeff, e.clone()) * raw(Node::Pow(neg, e))
                }
            }
            _ => raw(Node::Pow(self.clone(), e)),
        }
    }

    pub fn mul_all<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
        let mut coeff = Q::one();
        let mut powers: BTreeMap<Expr, Q> = BTreeMap::new();
        let mut exp_args: Vec<Expr> = Vec::new();
        fn push(f: &Expr, coeff: &mut Q, powers: &mut BTreeMap<Expr, Q>, exp_args: &mut Vec<Expr>) {
            match f.node() {
                Node::Num(c) => *coeff *= c,
                Node::Mul(fs) => {
                    for g in fs {
                        push(g, coeff, powers, exp_args);
                    }
                }
                Node::Pow(b, e) => *powers.entry(b.clone()).or_insert_with(Q::zero) += e,
                Node::Func(Func::Exp, a) => exp_args.push(a.clone()),
                _ => *powers.entry(f.clone()).or_insert_with(Q::zero) += Q::one(),
            }
        }
        for f in items {
            push(&f, &mut coeff, &mut powers, &mut exp_args);
            if coeff.is_zero() {
                return Expr::zero();
            }
        }
        let mut factors = Vec::with_capacity(powers.len() + 1);
        let absorb = |t: Expr, coeff: &mut Q, factors: &mut Vec<Expr>| match t.node() {
            Node::Num(c) => *coeff *= c,
            Node::Mul(fs) => {
                for g in fs {
                    match g.node() {
                        Node::Num(c) => *coeff *= c,
                        _ => factors.push(g.clone()),
                    }
                }
            }
            _ => factors.push(t),
        };
        for (b, e) in powers {
            if e.is_zero() {
                continue;
            }
            let t = if e.is_one() {
                b
            } else if matches!(b.node(), Node::Mul(_)) && !e.is_integer() {
                // Only a negative-signed radical base gets here; keep it intact.
                raw(Node::Pow(b, e))
            } else {
                b.pow(e)
            };
            absorb(t, &mut coeff, &mut factors);
        }
        if !exp_args.is_empty() {
            let t = Expr::exp(Expr::add_all(exp_args));
            absorb(t, &mut coeff, &mut factors);
        }
        if coeff.is_zero() {
            return Expr::zero();
        }
        if factors.is_empty() {
            return Expr::num(coeff);
        }
        factors.sort();
        if coeff.is_one() && factors.len() == 1 {
            return factors.pop().unwrap();
        }
        if !coeff.is_one() {
            factors.insert(0, Expr::num(coeff));
        }
        raw(Node::Mul(factors))
    }

    pub fn add_all<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
        let mut constant = Q::zero();
        let mut terms: BTreeMap<Expr, Q> = BTreeMap::new();
        fn push(t: &Expr, constant: &mut Q, terms: &mut BTreeMap<Expr, Q>) {
            match t.node() {
                Node::Num(c) => *constant += c,
                Node::Add(ts) => {
                    for s in ts {
                        push(s, constant, terms);
                    }
                }
                Node::Mul(fs) => {
                    let (c, rest) = split_coeff(fs);
                    let r = match rest.len() {
                        1 => rest[0].clone(),
                        _ => raw(Node::Mul(rest.to_vec())),
                    };
                    *terms.entry(r).or_insert_with(Q::zero) += c;
                }
                _ => *terms.entry(t.clone()).or_insert_with(Q::zero) += Q::one(),
            }
        }
        for t in items {
            push(&t, &mut constant, &mut terms);
        }
        let mut out = Vec::with_capacity(terms.len() + 1);
        if !constant.is_zero() {
            out.push(Expr::num(constant));
        }
        for (r, c) in terms {
            if c.is_zero() {
                continue;
            }
            out.push(scale_canonical(c, r));
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => raw(Node::Add(out)),
        }
    }

    /// Leading numeric coefficient and the remaining monomial part.
    pub fn split_coefficient(&self) -> (Q, Expr) {
        match self.node() {
            Node::Num(c) => (c.clone(), Expr::one()),
            Node::Mul(fs) => {
                let (c, rest) = split_coeff(fs);
                let r = match rest.len() {
                    1 => rest[0].clone(),
                    _ => raw(Node::Mul(rest.to_vec())),
                };
                (c, r)
            }
            _ => (Q::one(), self.clone()),
        }
    }

    /// Terms of a sum (a non-sum is a single term).
    pub fn terms(&self) -> Vec<Expr> {
        match self.node() {
            Node::Add(ts) => ts.clone(),
            _ => vec![self.clone()],
        }
    }

    /// Factors of a product (a non-product is a single factor).
    pub fn factors(&self) -> Vec<Expr> {
        match self.node() {
            Node::Mul(fs) => fs.clone(),
            _ => vec![self.clone()],
        }
    }

    pub fn recip(&self) -> Expr {
        self.powi(-1)
    }

    /// Visit every distinct node once (shared subtrees are not revisited).
    pub fn visit<F: FnMut(&Expr)>(&self, f: &mut F) {
        let mut seen = std::collections::HashSet::new();
        fn go<F: FnMut(&Expr)>(e: &Expr, f: &mut F, seen: &mut std::collections::HashSet<usize>) {
            if !seen.insert(e.key()) {
                return;
            }
            f(e);
            match e.node() {
                Node::Num(_) | Node::Atom(_) => {}
                Node::Func(_, a) | Node::Pow(a, _) => go(a, f, seen),
                Node::Mul(xs) | Node::Add(xs) => xs.iter().for_each(|x| go(x, f, seen)),
            }
        }
        go(self, f, &mut seen)
    }

    pub fn atoms(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Node::Atom(a) = e.node() {
                out.insert(a.clone());
            }
        });
        out
    }

    pub fn contains_atom(&self, a: &Atom) -> bool {
        let mut found = false;
        self.visit(&mut |e| {
            if let Node::Atom(b) = e.node() {
                found |= b == a;
            }
        });
        found
    }

    /// Highest derivative order present (`y` counts as 0, no `y` at all gives `None`).
    pub fn jet_order(&self) -> Option<u32> {
        self.atoms().iter().filter_map(Atom::jet_order).max()
    }

    pub fn params(&self) -> BTreeSet<Arc<str>> {
        self.atoms()
            .into_iter()
            .filter_map(|a| match a {
                Atom::Param(p) => Some(p),
                _ => None,
            })
            .collect()
    }

    /// True when the expression is a rational function of its atoms: no
    /// transcendental functions and only integer exponents.
    pub fn is_rational(&self) -> bool {
        let mut ok = true;
        self.visit(&mut |e| match e.node() {
            Node::Func(..) => ok = false,
            Node::Pow(_, ex) if !ex.is_integer() => ok = false,
            _ => {}
        });
        ok
    }

    /// Partial derivative with respect to an atom; every other atom is
    /// treated as independent.
    pub fn diff(&self, a: &Atom) -> Expr {
        let mut memo = HashMap::new();
        diff_rec(self, a, &mut memo)
    }

    /// Simultaneous substitution of atoms.
    pub fn subs(&self, bindings: &BTreeMap<Atom, Expr>) -> Expr {
        if bindings.is_empty() {
            return self.clone();
        }
        let mut memo = HashMap::new();
        subs_rec(self, bindings, &mut memo)
    }

    pub fn subs1(&self, a: &Atom, v: &Expr) -> Expr {
        let mut m = BTreeMap::new();
        m.insert(a.clone(), v.clone());
        self.subs(&m)
    }

    /// Rebuild bottom-up through the constructors, a no-op on canonical input.
    pub fn normalize(&self) -> Expr {
        self.map_children(&mut |c| c.normalize())
    }

    fn map_children<F: FnMut(&Expr) -> Expr>(&self, f: &mut F) -> Expr {
        match self.node() {
            Node::Num(_) | Node::Atom(_) => self.clone(),
            Node::Func(g, a) => Expr::func(*g, f(a)),
            Node::Pow(b, e) => f(b).pow(e.clone()),
            Node::Mul(xs) => Expr::mul_all(xs.iter().map(|x| f(x))),
            Node::Add(xs) => Expr::add_all(xs.iter().map(|x| f(x))),
        }
    }

    /// Distribute products over sums and expand positive integer powers of sums.
    pub fn expand(&self) -> Expr {
        let mut memo = HashMap::new();
        expand_rec(self, &mut memo)
    }

    /// Count of distinct nodes, a rough size measure.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    /// True when the leading coefficient is negative (used when printing sums).
    pub fn is_negative_term(&self) -> bool {
        match self.node() {
            Node::Num(c) => c.is_negative(),
            Node::Mul(fs) => matches!(fs[0].node(), Node::Num(c) if c.is_negative()),
            _ => false,
        }
    }
}

fn split_coeff(fs: &[Expr]) -> (Q, &[Expr]) {
    match fs[0].node() {
        Node::Num(c) => (c.clone(), &fs[1..]),
        _ => (Q::one(), fs),
    }
}

fn scale_canonical(c: Q, r: Expr) -> Expr {
    if c.is_one() {
        return r;
    }
    if r.is_one() {
        return Expr::num(c);
    }
    match r.node() {
        Node::Mul(fs) => {
            let mut v = Vec::with_capacity(fs.len() + 1);
            v.push(Expr::num(c));
            v.extend(fs.iter().cloned());
            raw(Node::Mul(v))
        }
        _ => raw(Node::Mul(vec![Expr::num(c), r])),
    }
}

/// Canonical form of `c^e` for a rational constant `c`.
fn num_pow(c: &Q, e: Q) -> Expr {
    if e.is_integer() {
        return match qpow(c, e.numer()) {
            Some(v) => Expr::num(v),
            None => raw(Node::Pow(Expr::num(c.clone()), e)),
        };
    }
    if c.is_zero() {
        return if e.is_positive() { Expr::zero() } else { raw(Node::Pow(Expr::num(c.clone()), e)) };
    }
    if c.is_negative() {
        return raw(Node::Pow(Expr::num(c.clone()), e));
    }
    if c.is_one() {
        return Expr::one();
    }
    if !c.is_integer() {
        let n = Expr::num(Q::from_integer(c.numer().clone())).pow(e.clone());
        let d = Expr::num(Q::from_integer(c.denom().clone())).pow(-e);
        return n * d;
    }
    let k = e.denom().to_u32().unwrap_or(u32::MAX);
    if k != u32::MAX {
        if let Some(r) = int_root(c.numer(), k) {
            return Expr::num(Q::from_integer(r)).pow(Q::from_integer(e.numer().clone()));
        }
    }
    let whole = e.floor();
    let frac = &e - &whole;
    let radical = raw(Node::Pow(Expr::num(c.clone()), frac));
    if whole.is_zero() {
        radical
    } else {
        let w = qpow(c, whole.numer()).expect("nonzero base");
        raw(Node::Mul(vec![Expr::num(w), radical]))
    }
}

fn diff_rec(e: &Expr, a: &Atom, memo: &mut HashMap<usize, Expr>) -> Expr {
    if let Some(d) = memo.get(&e.key()) {
        return d.clone();
    }
    let d = match e.node() {
        Node::Num(_) => Expr::zero(),
        Node::Atom(b) => {
            if b == a {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Func(f, arg) => {
            let da = diff_rec(arg, a, memo);
            if da.is_zero() {
                Expr::zero()
            } else {
                let outer = match f {
                    Func::Exp => e.clone(),
                    Func::Ln => arg.recip(),
                    Func::Arctan => (Expr::one() + arg.powi(2)).recip(),
                    Func::Sin => Expr::func(Func::Cos, arg.clone()),
                    Func::Cos => -Expr::func(Func::Sin, arg.clone()),
                };
                outer * da
            }
        }
        Node::Pow(b, ex) => {
            let db = diff_rec(b, a, memo);
            if db.is_zero() {
                Expr::zero()
            } else {
                Expr::mul_all([Expr::num(ex.clone()), b.pow(ex - Q::one()), db])
            }
        }
        Node::Mul(fs) => {
            let mut terms = Vec::new();
            for i in 0..fs.len() {
                let di = diff_rec(&fs[i], a, memo);
                if di.is_zero() {
                    continue;
                }
                let others = fs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, f)| f.clone());
                terms.push(Expr::mul_all(others.chain(std::iter::once(di))));
            }
            Expr::add_all(terms)
        }
        Node::Add(ts) => Expr::add_all(ts.iter().map(|t| diff_rec(t, a, memo))),
    };
    memo.insert(e.key(), d.clone());
    d
}

fn subs_rec(e: &Expr, b: &BTreeMap<Atom, Expr>, memo: &mut HashMap<usize, Expr>) -> Expr {
    if let Some(r) = memo.get(&e.key()) {
        return r.clone();
    }
    let r = match e.node() {
        Node::Atom(a) => b.get(a).cloned().unwrap_or_else(|| e.clone()),
        _ => e.map_children(&mut |c| subs_rec(c, b, memo)),
    };
    memo.insert(e.key(), r.clone());
    r
}

fn expand_rec(e: &Expr, memo: &mut HashMap<usize, Expr>) -> Expr {
    if let Some(r) = memo.get(&e.key()) {
        return r.clone();
    }
    let r = match e.node() {
        Node::Num(_) | Node::Atom(_) => e.clone(),
        Node::Func(f, a) => Expr::func(*f, expand_rec(a, memo)),
        Node::Pow(b, ex) => {
            let b2 = expand_rec(b, memo);
            if ex.is_integer() && ex.is_positive() && matches!(b2.node(), Node::Add(_)) {
                let n = ex.to_integer().to_usize().unwrap_or(0);
                let mut acc = Expr::one();
                for _ in 0..n {
                    acc = distribute(&acc, &b2);
                }
                acc
            } else {
                b2.pow(ex.clone())
            }
        }
        Node::Mul(fs) => {
            let mut acc = Expr::one();
            for f in fs {
                acc = distribute(&acc, &expand_rec(f, memo));
            }
            acc
        }
        Node::Add(ts) => Expr::add_all(ts.iter().map(|t| expand_rec(t, memo))),
    };
    memo.insert(e.key(), r.clone());
    r
}

fn distribute(a: &Expr, b: &Expr) -> Expr {
    let ta = a.terms();
    let tb = b.terms();
    if ta.len() == 1 && tb.len() == 1 {
        return a * b;
    }
    Expr::add_all(ta.iter().flat_map(|s| tb.iter().map(move |t| s * t)))
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(&self, &rhs)
            }
        }
        impl ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(&self, rhs)
            }
        }
        impl ops::$tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(self, &rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::add_all([a.clone(), b.clone()]));
binop!(Sub, sub, |a, b| Expr::add_all([a.clone(), -b]));
binop!(Mul, mul, |a, b| Expr::mul_all([a.clone(), b.clone()]));
binop!(Div, div, |a, b| Expr::mul_all([a.clone(), b.recip()]));

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self.node() {
            Node::Num(c) => Expr::num(-c),
            Node::Add(ts) => Expr::add_all(ts.iter().map(|t| -t)),
            _ => Expr::mul_all([Expr::int(-1), self.clone()]),
        }
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

impl From<Q> for Expr {
    fn from(c: Q) -> Expr {
        Expr::num(c)
    }
}

impl From<Atom> for Expr {
    fn from(a: Atom) -> Expr {
        Expr::atom(a)
    }
}

// Printing uses the parser's grammar so that `parse(print(e)) == e`.

#[derive(Clone, Copy, PartialEq, PartialOrd)]
enum Ctx {
    Sum,
    Product,
    Base,
}

fn fmt_q(c: &Q) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

fn fmt_exponent(e: &Q) -> String {
    if e.is_integer() && e.is_positive() {
        e.numer().to_string()
    } else {
        format!("({})", fmt_q(e))
    }
}

fn write_expr(e: &Expr, ctx: Ctx, out: &mut String) {
    match e.node() {
        Node::Num(c) => {
            let s = fmt_q(c);
            let wrap = (ctx == Ctx::Base && (c.is_negative() || !c.is_integer()))
                || (ctx == Ctx::Product && !c.is_integer());
            if wrap {
                out.push('(');
                out.push_str(&s);
                out.push(')');
            } else {
                out.push_str(&s);
            }
        }
        Node::Atom(a) => out.push_str(&a.to_string()),
        Node::Func(f, a) => {
            out.push_str(f.name());
            out.push('(');
            write_expr(a, Ctx::Sum, out);
            out.push(')');
        }
        Node::Pow(b, ex) => {
            if ctx == Ctx::Base {
                out.push('(');
            }
            write_expr(b, Ctx::Base, out);
            out.push('^');
            out.push_str(&fmt_exponent(ex));
            if ctx == Ctx::Base {
                out.push(')');
            }
        }
        Node::Mul(fs) => {
            let wrap = ctx == Ctx::Base;
            if wrap {
                out.push('(');
            }
            let (c, rest) = split_coeff(fs);
            if c == -Q::one() {
                out.push('-');
            } else if !c.is_one() {
                out.push_str(&fmt_q(&c));
                out.push('*');
            }
            for (i, f) in rest.iter().enumerate() {
                if i > 0 {
                    out.push('*');
                }
                write_expr(f, Ctx::Product, out);
            }
            if wrap {
                out.push(')');
            }
        }
        Node::Add(ts) => {
            let wrap = ctx != Ctx::Sum;
            if wrap {
                out.push('(');
            }
            for (i, t) in ts.iter().enumerate() {
                if i == 0 {
                    write_expr(t, Ctx::Sum, out);
                } else if t.is_negative_term() {
                    out.push_str(" - ");
                    let neg = -t;
                    let inner = if matches!(neg.node(), Node::Add(_)) { Ctx::Product } else { Ctx::Sum };
                    write_expr(&neg, inner, out);
                } else {
                    out.push_str(" + ");
                    write_expr(t, Ctx::Sum, out);
                }
            }
            if wrap {
                out.push(')');
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_expr(self, Ctx::Sum, &mut s);
        f.write_str(&s)
    }
}

/// Binomial-free helpers used by templates.
pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Greatest common divisor of two rationals' numerators over their lcm denominator.
pub fn q_gcd(a: &Q, b: &Q) -> Q {
    if a.is_zero() {
        return b.abs();
    }
    if b.is_zero() {
        return a.abs();
    }
    let n = a.numer().gcd(b.numer());
    let d = a.denom().lcm(b.denom());
    Q::new(n, d)
}
