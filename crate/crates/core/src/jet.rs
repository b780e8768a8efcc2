//! Total derivatives and prolongation of point vector fields.

use std::fmt;

use thiserror::Error;

use crate::expr::{Atom, Expr};

/// Deepest jet variable the engine will create.
pub const DEFAULT_MAX_ORDER: u32 = 12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum JetError {
    #[error("jet order {0} exceeds the maximum {1}")]
    MaxOrderExceeded(u32, u32),
    #[error("expression of order {0} needs a prolongation of at least that order (have {1})")]
    OrderMismatch(u32, u32),
    #[error("vector field coefficients may only involve x and y: {0}")]
    JetInCoefficient(String),
}

/// `xi * d/dx + eta * d/dy`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorField {
    pub xi: Expr,
    pub eta: Expr,
    pub label: String,
}

impl VectorField {
    pub fn new(xi: Expr, eta: Expr) -> Result<VectorField, JetError> {
        for c in [&xi, &eta] {
            if c.jet_order().is_some_and(|k| k > 0) {
                return Err(JetError::JetInCoefficient(c.to_string()));
            }
        }
        let label = format_field(&xi, &eta);
        Ok(VectorField { xi, eta, label })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> VectorField {
        self.label = label.into();
        self
    }

    pub fn scaled(&self, c: &Expr) -> VectorField {
        VectorField { xi: c * &self.xi, eta: c * &self.eta, label: self.label.clone() }
    }
}

fn format_field(xi: &Expr, eta: &Expr) -> String {
    let part = |c: &Expr, d: &str| -> Option<String> {
        if c.is_zero() {
            None
        } else if c.is_one() {
            Some(d.to_string())
        } else if c.terms().len() > 1 {
            Some(format!("({c})*{d}"))
        } else {
            Some(format!("{c}*{d}"))
        }
    };
    match (part(xi, "Dx"), part(eta, "Dy")) {
        (Some(a), Some(b)) => format!("{a} + {b}"),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => "0".to_string(),
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

/// Total derivative without an order ceiling.
pub fn dx(e: &Expr) -> Expr {
    let mut terms = vec![e.diff(&Atom::X), Expr::jet(1) * e.diff(&Atom::Y)];
    for a in e.atoms() {
        if let Atom::Jet(k) = a {
            terms.push(Expr::jet(k + 1) * e.diff(&a));
        }
    }
    Expr::add_all(terms)
}

/// `D_x e`; fails if `e` already reaches `max_order`.
pub fn total_derivative(e: &Expr, max_order: u32) -> Result<Expr, JetError> {
    match e.jet_order() {
        Some(k) if k >= max_order => Err(JetError::MaxOrderExceeded(k + 1, max_order)),
        _ => Ok(dx(e)),
    }
}

pub fn dx_n(e: &Expr, n: u32) -> Expr {
    (0..n).fold(e.clone(), |acc, _| dx(&acc))
}

/// A vector field with the coefficients of its prolongation.
#[derive(Clone, Debug)]
pub struct ProlongedField {
    pub base: VectorField,
    pub order: u32,
    /// `coeffs[j - 1]` multiplies `d/dy^(j)`.
    pub coeffs: Vec<Expr>,
}

impl ProlongedField {
    /// Coefficient of `d/dy^(j)`; `j = 0` gives `eta`.
    pub fn eta(&self, j: u32) -> &Expr {
        if j == 0 {
            &self.base.eta
        } else {
            &self.coeffs[j as usize - 1]
        }
    }
}

pub fn prolong(x: &VectorField, k: u32) -> ProlongedField {
    let dxi = dx(&x.xi);
    let mut coeffs = Vec::with_capacity(k as usize);
    let mut prev = x.eta.clone();
    for j in 1..=k {
        let next = dx(&prev) - Expr::jet(j) * &dxi;
        coeffs.push(next.clone());
        prev = next;
    }
    ProlongedField { base: x.clone(), order: k, coeffs }
}

/// `pr X (e)`.
pub fn apply_prolonged(px: &ProlongedField, e: &Expr) -> Result<Expr, JetError> {
    let order = e.jet_order().unwrap_or(0);
    if order > px.order {
        return Err(JetError::OrderMismatch(order, px.order));
    }
    let mut terms = vec![&px.base.xi * &e.diff(&Atom::X), &px.base.eta * &e.diff(&Atom::Y)];
    for a in e.atoms() {
        if let Atom::Jet(j) = a {
            terms.push(px.eta(j) * &e.diff(&a));
        }
    }
    Ok(Expr::add_all(terms))
}

/// Prolong as far as `e` needs and apply.
pub fn apply(x: &VectorField, e: &Expr) -> Expr {
    let px = prolong(x, e.jet_order().unwrap_or(0));
    apply_prolonged(&px, e).expect("prolonged to the order of e")
}

/// The characteristic `w = eta - xi y'`.
pub fn characteristic(x: &VectorField) -> Expr {
    &x.eta - &(&x.xi * &Expr::jet(1))
}
