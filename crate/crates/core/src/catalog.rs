//! Algebra records stored as JSON templates: generators, canonical equations,
//! invariants, the invariant differentiation factor and the Lie determinant.
//! Records are grounded at a concrete `n` and parameter values on demand.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use globset::Glob;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Expr, Q};
use crate::invariance::{EquationError, OdeEquation};
use crate::jet::VectorField;
use crate::linear_ode::{coeffs_from_solutions, fundamental_solutions, CharSpec, LinearError};
use crate::parse::{parse_template, Env, ErrorKind, HChoice, ParseError};
use crate::zero::ProbeConfig;

mod embedded {
    include!(concat!(env!("OUT_DIR"), "/catalog_files.rs"));
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogError {
    #[error("{label}: field `{field}`: {error}")]
    Parse { label: String, field: String, error: ParseError },
    #[error("{file}: {message}")]
    Json { file: String, message: String },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("{label}: n = {n} outside the valid range")]
    OutOfRange { label: String, n: i64 },
    #[error("{label}: constraint violated: {constraint}")]
    ConstraintViolation { label: String, constraint: String },
    #[error("{label}: no value for parameter `{name}`")]
    MissingParameter { label: String, name: String },
    #[error("{label}: {field} has {got}, expected {expected}")]
    Mismatch { label: String, field: String, expected: String, got: String },
    #[error("{label}: unknown erratum target `{target}`")]
    UnknownTarget { label: String, target: String },
    #[error("{label}: {error}")]
    Linear { label: String, error: LinearError },
    #[error("{label}: equation {index}: {error}")]
    Equation { label: String, index: usize, error: EquationError },
    #[error("{label}: {message}")]
    Invalid { label: String, message: String },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NRange {
    pub min: i64,
    #[serde(default)]
    pub max: Option<i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    #[serde(default)]
    pub constraints: Vec<String>,
    /// Default values, possibly depending on `n`.
    #[serde(default)]
    pub samples: Vec<String>,
}

/// One of `rhs` (with `order`), `implicit`, or `from_solutions` (with `order`).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct EquationSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhs: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub implicit: Option<String>,
    /// Lowest derivative index of a linear equation recovered from the record's solutions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from_solutions: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct InvariantSpec {
    pub order_formula: String,
    pub expr: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
pub struct CharacteristicSpec {
    #[serde(default)]
    pub real_roots: Vec<String>,
    #[serde(default)]
    pub complex_pairs: Vec<[String; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CountSpec {
    pub order: String,
    pub expect: i64,
}

/// An extra field tested against one equation while parameters vary.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ClosureSpec {
    /// `None` tests the record's own generators.
    #[serde(default)]
    pub field: Option<String>,
    #[serde(default)]
    pub equation: usize,
    /// The residual should vanish exactly when this condition holds.
    pub zero_when: String,
    pub samples: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Corrected {
    One(String),
    Many(Vec<String>),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Erratum {
    /// `lambda`, `lie_determinant`, `generators`, `generators/i`,
    /// `invariants/i`, `equations/i` or `building_blocks/NAME`.
    pub target: String,
    pub corrected: Corrected,
    pub note: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
pub struct Source {
    pub section: String,
    pub quote: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RecordSpec {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algebra: Option<String>,
    pub dimension_formula: String,
    #[serde(default)]
    pub n_range: Option<NRange>,
    #[serde(default)]
    pub parameters: Vec<ParamSpec>,
    pub generators: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub characteristic: Option<CharacteristicSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub solutions: Vec<String>,
    #[serde(default)]
    pub equations: Vec<EquationSpec>,
    #[serde(default)]
    pub invariants: Vec<InvariantSpec>,
    #[serde(default)]
    pub lambda: Option<String>,
    #[serde(default)]
    pub lie_determinant: Option<String>,
    #[serde(default)]
    pub building_blocks: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub counts: Vec<CountSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub closure: Vec<ClosureSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errata: Vec<Erratum>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default)]
    pub source: Source,
}

/// A record grounded at one `n` and one set of parameter values.
#[derive(Debug, Clone)]
pub struct Instance {
    pub label: String,
    pub n: Option<i64>,
    pub params: BTreeMap<String, Q>,
    pub h: HChoice,
    pub fields: Vec<VectorField>,
    pub equations: Vec<OdeEquation>,
    /// `(order, invariant)`
    pub invariants: Vec<(u32, Expr)>,
    pub lambda: Option<Expr>,
    pub lie_determinant: Option<Expr>,
    pub blocks: BTreeMap<String, Expr>,
    /// `(order, expected d_order)`
    pub counts: Vec<(u32, i64)>,
}

impl RecordSpec {
    pub fn is_family(&self) -> bool {
        self.n_range.is_some()
    }

    pub fn param_names(&self) -> Vec<&str> {
        self.parameters.iter().map(|p| p.name.as_str()).collect()
    }

    /// Smallest valid `n` and three above it; `[None]` for fixed records.
    pub fn default_ns(&self) -> Vec<Option<i64>> {
        match &self.n_range {
            None => vec![None],
            Some(r) => {
                let mut v = vec![Some(r.min)];
                let hi = r.min + 3;
                if r.max.is_none_or(|m| hi <= m) {
                    v.push(Some(hi));
                }
                v
            }
        }
    }

    pub fn n_in_range(&self, n: Option<i64>) -> bool {
        match (&self.n_range, n) {
            (None, None) => true,
            (Some(r), Some(n)) => n >= r.min && r.max.is_none_or(|m| n <= m),
            _ => false,
        }
    }

    fn meta_env(&self, n: Option<i64>) -> Env {
        let mut env = Env::default();
        if let Some(n) = n {
            env.vars.insert("n".into(), Q::from_integer(n.into()));
        }
        env
    }

    fn parse_err(&self, field: impl Into<String>) -> impl FnOnce(ParseError) -> CatalogError + '_ {
        let field = field.into();
        move |error| CatalogError::Parse { label: self.label.clone(), field, error }
    }

    fn constant(&self, env: &Env, text: &str, field: &str) -> Result<Q, CatalogError> {
        let e = env.parse(text).map_err(self.parse_err(field))?;
        e.as_num().cloned().ok_or_else(|| CatalogError::Parse {
            label: self.label.clone(),
            field: field.to_string(),
            error: ParseError { offset: 0, kind: ErrorKind::NotConstant("value") },
        })
    }

    fn integer(&self, env: &Env, text: &str, field: &str) -> Result<i64, CatalogError> {
        let c = self.constant(env, text, field)?;
        match c.is_integer().then(|| c.to_integer().to_i64()).flatten() {
            Some(v) => Ok(v),
            None => Err(CatalogError::Parse {
                label: self.label.clone(),
                field: field.to_string(),
                error: ParseError { offset: 0, kind: ErrorKind::NotInteger("value") },
            }),
        }
    }

    /// Parameter sets used when none are given: the i-th set takes the
    /// i-th sample of every parameter, cycling shorter lists. Values in
    /// `overrides` replace the samples.
    pub fn default_params(
        &self,
        n: Option<i64>,
        overrides: &BTreeMap<String, Q>,
    ) -> Result<Vec<BTreeMap<String, Q>>, CatalogError> {
        let env = self.meta_env(n);
        let count = self
            .parameters
            .iter()
            .filter(|p| !overrides.contains_key(&p.name))
            .map(|p| p.samples.len())
            .max()
            .unwrap_or(1)
            .max(1);
        let mut out: Vec<BTreeMap<String, Q>> = Vec::new();
        for i in 0..count {
            let mut m = BTreeMap::new();
            for p in &self.parameters {
                let v = match overrides.get(&p.name) {
                    Some(v) => v.clone(),
                    None if p.samples.is_empty() => {
                        return Err(CatalogError::MissingParameter { label: self.label.clone(), name: p.name.clone() })
                    }
                    None => {
                        let s = &p.samples[i % p.samples.len()];
                        self.constant(&env, s, &format!("parameters/{}/samples", p.name))?
                    }
                };
                m.insert(p.name.clone(), v);
            }
            if !out.contains(&m) {
                out.push(m);
            }
        }
        Ok(out)
    }

    fn bound_env(&self, n: Option<i64>, params: &BTreeMap<String, Q>) -> Result<Env, CatalogError> {
        let mut env = self.meta_env(n);
        for p in &self.parameters {
            match params.get(&p.name) {
                Some(v) => {
                    env.params.insert(p.name.clone(), Some(v.clone()));
                }
                None => {
                    return Err(CatalogError::MissingParameter { label: self.label.clone(), name: p.name.clone() })
                }
            }
        }
        Ok(env)
    }

    /// Evaluate `lhs = rhs` or `lhs != rhs` at the given values.
    pub fn condition_holds(&self, cond: &str, n: Option<i64>, params: &BTreeMap<String, Q>) -> Result<bool, CatalogError> {
        let env = self.bound_env(n, params)?;
        let (lhs, rhs, negate) = match cond.split_once("!=") {
            Some((l, r)) => (l, r, true),
            None => match cond.split_once('=') {
                Some((l, r)) => (l, r, false),
                None => {
                    return Err(CatalogError::Invalid {
                        label: self.label.clone(),
                        message: format!("condition `{cond}` is not of the form a = b or a != b"),
                    })
                }
            },
        };
        let l = self.constant(&env, lhs.trim(), "constraints")?;
        let r = self.constant(&env, rhs.trim(), "constraints")?;
        Ok((l == r) != negate)
    }

    pub fn check_constraints(&self, n: Option<i64>, params: &BTreeMap<String, Q>) -> Result<(), CatalogError> {
        if !self.n_in_range(n) {
            return Err(CatalogError::OutOfRange { label: self.label.clone(), n: n.unwrap_or(-1) });
        }
        for p in &self.parameters {
            for c in &p.constraints {
                if !self.condition_holds(c, n, params)? {
                    return Err(CatalogError::ConstraintViolation {
                        label: self.label.clone(),
                        constraint: format!("{c} excluded by the value {}", params[&p.name]),
                    });
                }
            }
        }
        Ok(())
    }

    /// A copy with every erratum applied except the one at `skip`.
    pub fn with_errata(&self, skip: Option<usize>) -> Result<RecordSpec, CatalogError> {
        let mut out = self.clone();
        for (i, e) in self.errata.iter().enumerate() {
            if Some(i) != skip {
                out.apply(e)?;
            }
        }
        Ok(out)
    }

    fn apply(&mut self, e: &Erratum) -> Result<(), CatalogError> {
        let bad = || CatalogError::UnknownTarget { label: self.label.clone(), target: e.target.clone() };
        let one = || match &e.corrected {
            Corrected::One(s) => Ok(s.clone()),
            Corrected::Many(_) => Err(bad()),
        };
        let (head, tail) = match e.target.split_once('/') {
            Some((h, t)) => (h, Some(t)),
            None => (e.target.as_str(), None),
        };
        let index = |len: usize| -> Result<usize, CatalogError> {
            tail.and_then(|t| t.parse::<usize>().ok()).filter(|&i| i < len).ok_or_else(bad)
        };
        match head {
            "lambda" => self.lambda = Some(one()?),
            "lie_determinant" => self.lie_determinant = Some(one()?),
            "generators" if tail.is_none() => match &e.corrected {
                Corrected::Many(v) => self.generators = v.clone(),
                Corrected::One(_) => return Err(bad()),
            },
            "generators" => {
                let i = index(self.generators.len())?;
                self.generators[i] = one()?;
            }
            "invariants" => {
                let i = index(self.invariants.len())?;
                self.invariants[i].expr = one()?;
            }
            "equations" => {
                let i = index(self.equations.len())?;
                let eq = &mut self.equations[i];
                let text = one()?;
                if eq.rhs.is_some() {
                    eq.rhs = Some(text);
                } else if eq.implicit.is_some() {
                    eq.implicit = Some(text);
                } else {
                    return Err(bad());
                }
            }
            "building_blocks" => {
                let name = tail.filter(|t| self.building_blocks.contains_key(*t)).ok_or_else(bad)?;
                self.building_blocks.insert(name.to_string(), one()?);
            }
            _ => return Err(bad()),
        }
        Ok(())
    }

    /// Ground every template, checking the range and parameter constraints.
    pub fn instantiate(&self, n: Option<i64>, params: &BTreeMap<String, Q>, h: HChoice) -> Result<Instance, CatalogError> {
        self.check_constraints(n, params)?;
        self.ground(n, params, h)
    }

    /// Ground every template without consulting the constraints.
    pub fn ground(&self, n: Option<i64>, params: &BTreeMap<String, Q>, h: HChoice) -> Result<Instance, CatalogError> {
        let label = &self.label;
        let mut env = self.bound_env(n, params)?;
        env.h = h;

        if let Some(ch) = &self.characteristic {
            let mut spec = CharSpec::default();
            for (i, r) in ch.real_roots.iter().enumerate() {
                let t = parse_template(r).map_err(self.parse_err(format!("characteristic/real_roots/{i}")))?;
                for v in env.lower_template(&t).map_err(self.parse_err(format!("characteristic/real_roots/{i}")))? {
                    spec.real_roots.push(v.as_num().cloned().ok_or_else(|| CatalogError::Invalid {
                        label: label.clone(),
                        message: format!("characteristic root `{r}` is not constant"),
                    })?);
                }
            }
            for (i, [a, b]) in ch.complex_pairs.iter().enumerate() {
                let f = format!("characteristic/complex_pairs/{i}");
                spec.complex_pairs.push((self.constant(&env, a, &f)?, self.constant(&env, b, &f)?));
            }
            env.operator = Some(spec.char_poly());
            env.solutions =
                fundamental_solutions(&spec).map_err(|error| CatalogError::Linear { label: label.clone(), error })?;
        }
        for (i, s) in self.solutions.iter().enumerate() {
            let f = format!("solutions/{i}");
            let t = parse_template(s).map_err(self.parse_err(f.clone()))?;
            env.solutions.extend(env.lower_template(&t).map_err(self.parse_err(f))?);
        }

        env.blocks = self.resolve_blocks(&env)?;

        let mut fields = Vec::new();
        for (i, g) in self.generators.iter().enumerate() {
            fields.extend(env.parse_fields(g).map_err(self.parse_err(format!("generators/{i}")))?);
        }
        let dim = self.integer(&env, &self.dimension_formula, "dimension_formula")?;
        if fields.len() as i64 != dim {
            return Err(CatalogError::Mismatch {
                label: label.clone(),
                field: "generators".into(),
                expected: format!("{dim} fields"),
                got: format!("{} fields", fields.len()),
            });
        }

        let mut equations = Vec::new();
        for (i, e) in self.equations.iter().enumerate() {
            equations.push(self.equation(&env, i, e)?);
        }

        let mut invariants = Vec::new();
        for (i, inv) in self.invariants.iter().enumerate() {
            let f = format!("invariants/{i}");
            let order = self.integer(&env, &inv.order_formula, &f)?;
            let e = env.parse(&inv.expr).map_err(self.parse_err(f.clone()))?;
            let got = e.jet_order().unwrap_or(0);
            if got as i64 != order {
                return Err(CatalogError::Mismatch {
                    label: label.clone(),
                    field: f,
                    expected: format!("order {order}"),
                    got: format!("order {got}"),
                });
            }
            invariants.push((got, e));
        }

        let lambda = match &self.lambda {
            Some(s) => Some(env.parse(s).map_err(self.parse_err("lambda"))?),
            None => None,
        };
        let lie_determinant = match &self.lie_determinant {
            Some(s) => Some(env.parse(s).map_err(self.parse_err("lie_determinant"))?),
            None => None,
        };
        let mut counts = Vec::new();
        for (i, c) in self.counts.iter().enumerate() {
            let k = self.integer(&env, &c.order, &format!("counts/{i}"))?;
            let k = u32::try_from(k).map_err(|_| CatalogError::Invalid {
                label: label.clone(),
                message: format!("count order {k} is negative"),
            })?;
            counts.push((k, c.expect));
        }

        Ok(Instance {
            label: label.clone(),
            n,
            params: params.clone(),
            h,
            fields,
            equations,
            invariants,
            lambda,
            lie_determinant,
            blocks: env.blocks,
            counts,
        })
    }

    fn equation(&self, env: &Env, i: usize, e: &EquationSpec) -> Result<OdeEquation, CatalogError> {
        let f = format!("equations/{i}");
        let wrap = |error| CatalogError::Equation { label: self.label.clone(), index: i, error };
        let order = |env: &Env| -> Result<u32, CatalogError> {
            let text = e.order.as_deref().ok_or_else(|| CatalogError::Invalid {
                label: self.label.clone(),
                message: format!("{f} needs an order"),
            })?;
            let k = self.integer(env, text, &f)?;
            u32::try_from(k).map_err(|_| CatalogError::Invalid { label: self.label.clone(), message: format!("{f}: order {k}") })
        };
        match (&e.rhs, &e.implicit, e.from_solutions) {
            (Some(rhs), None, None) => {
                let r = env.parse(rhs).map_err(self.parse_err(f.clone()))?;
                OdeEquation::new(order(env)?, r).map_err(wrap)
            }
            (None, Some(imp), None) => {
                let r = env.parse(imp).map_err(self.parse_err(f.clone()))?;
                OdeEquation::from_implicit(&r).map_err(wrap)
            }
            (None, None, Some(lowest)) => {
                let lin = coeffs_from_solutions(&env.solutions, order(env)?, lowest, &ProbeConfig::default())
                    .map_err(|error| CatalogError::Linear { label: self.label.clone(), error })?;
                OdeEquation::new(lin.order, lin.rhs()).map_err(wrap)
            }
            _ => Err(CatalogError::Invalid {
                label: self.label.clone(),
                message: format!("{f} needs exactly one of rhs, implicit, from_solutions"),
            }),
        }
    }

    /// Blocks may refer to each other in any order; resolve until stable.
    fn resolve_blocks(&self, env: &Env) -> Result<BTreeMap<String, Expr>, CatalogError> {
        let mut done: BTreeMap<String, Expr> = BTreeMap::new();
        let mut pending: Vec<(&String, &String)> = self.building_blocks.iter().collect();
        while !pending.is_empty() {
            let mut local = env.clone();
            local.blocks = done.clone();
            let mut next = Vec::new();
            let mut first_err = None;
            for (name, text) in pending.iter().copied() {
                match local.parse(text) {
                    Ok(e) => {
                        local.blocks.insert(name.clone(), e.clone());
                        done.insert(name.clone(), e);
                    }
                    Err(err) => {
                        let waiting = matches!(&err.kind, ErrorKind::UnknownIdentifier(id) if self.building_blocks.contains_key(id) && !done.contains_key(id));
                        if !waiting && first_err.is_none() {
                            first_err = Some((name.clone(), err));
                        }
                        next.push((name, text));
                    }
                }
            }
            if let Some((name, error)) = first_err {
                return Err(CatalogError::Parse { label: self.label.clone(), field: format!("building_blocks/{name}"), error });
            }
            if next.len() == pending.len() {
                let names: Vec<&str> = next.iter().map(|(n, _)| n.as_str()).collect();
                return Err(CatalogError::Invalid {
                    label: self.label.clone(),
                    message: format!("building blocks refer to each other in a cycle: {}", names.join(", ")),
                });
            }
            pending = next;
        }
        Ok(done)
    }

    /// A constant expression evaluated at the given `n` and parameter values.
    pub fn evaluate_constant(&self, n: Option<i64>, params: &BTreeMap<String, Q>, text: &str) -> Result<Q, CatalogError> {
        let mut env = self.meta_env(n);
        for (k, v) in params {
            env.params.insert(k.clone(), Some(v.clone()));
        }
        self.constant(&env, text, "value")
    }

    /// Fields written in the record's own parameters, outside its generator list.
    pub fn extra_fields(&self, n: Option<i64>, params: &BTreeMap<String, Q>, text: &str) -> Result<Vec<VectorField>, CatalogError> {
        let env = self.bound_env(n, params)?;
        env.parse_fields(text).map_err(self.parse_err("closure/field"))
    }

    /// Structural checks that need no grounding.
    pub fn validate(&self) -> Result<(), CatalogError> {
        let names: BTreeSet<&str> = self.param_names().into_iter().collect();
        if names.len() != self.parameters.len() {
            return Err(CatalogError::Invalid { label: self.label.clone(), message: "duplicate parameter".into() });
        }
        for c in &self.closure {
            for k in c.samples.keys() {
                if !names.contains(k.as_str()) {
                    return Err(CatalogError::Invalid {
                        label: self.label.clone(),
                        message: format!("closure samples undeclared parameter `{k}`"),
                    });
                }
            }
            if c.equation >= self.equations.len() {
                return Err(CatalogError::Invalid { label: self.label.clone(), message: "closure equation out of range".into() });
            }
        }
        self.with_errata(None)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct ManifestEntry {
    pub label: String,
    pub file: String,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct Manifest {
    pub records: Vec<ManifestEntry>,
}

#[derive(Debug, Clone)]
pub struct Catalog {
    pub records: Vec<RecordSpec>,
}

pub const MANIFEST: &str = "manifest.json";

impl Catalog {
    /// Assemble from a manifest and a lookup of file contents.
    pub fn from_sources<F>(manifest: &str, mut read: F) -> Result<Catalog, CatalogError>
    where
        F: FnMut(&str) -> Option<String>,
    {
        let m: Manifest = serde_json::from_str(manifest)
            .map_err(|e| CatalogError::Json { file: MANIFEST.into(), message: e.to_string() })?;
        let mut seen = BTreeSet::new();
        let mut records = Vec::with_capacity(m.records.len());
        for entry in &m.records {
            if !seen.insert(entry.label.clone()) {
                return Err(CatalogError::Manifest(format!("duplicate label {}", entry.label)));
            }
            let text = read(&entry.file).ok_or_else(|| CatalogError::Manifest(format!("missing file {}", entry.file)))?;
            let rec: RecordSpec = serde_json::from_str(&text)
                .map_err(|e| CatalogError::Json { file: entry.file.clone(), message: e.to_string() })?;
            if rec.label != entry.label {
                return Err(CatalogError::Manifest(format!(
                    "{} holds record {} but the manifest says {}",
                    entry.file, rec.label, entry.label
                )));
            }
            rec.validate()?;
            records.push(rec);
        }
        Ok(Catalog { records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<&RecordSpec> {
        self.records.iter().find(|r| r.label == label)
    }

    /// Records whose label matches a glob; `*` and `?` are the only wildcards.
    pub fn filter(&self, pattern: Option<&str>) -> Result<Vec<&RecordSpec>, CatalogError> {
        let Some(p) = pattern else {
            return Ok(self.records.iter().collect());
        };
        let escaped: String = p
            .chars()
            .map(|c| if matches!(c, '[' | ']' | '{' | '}') { format!("[{c}]") } else { c.to_string() })
            .collect();
        let m = Glob::new(&escaped).map_err(|e| CatalogError::Manifest(e.to_string()))?.compile_matcher();
        Ok(self.records.iter().filter(|r| m.is_match(&r.label)).collect())
    }
}

/// Load a catalog directory containing `manifest.json`. Every JSON file in
/// the directory must be listed.
pub fn load_catalog(dir: &Path) -> Result<Catalog, CatalogError> {
    let read = |name: &str| fs::read_to_string(dir.join(name)).ok();
    let manifest = read(MANIFEST).ok_or_else(|| CatalogError::Manifest(format!("no {MANIFEST} in {}", dir.display())))?;
    let cat = Catalog::from_sources(&manifest, read)?;
    let listed: BTreeSet<String> = serde_json::from_str::<Manifest>(&manifest)
        .map(|m| m.records.into_iter().map(|e| e.file).collect())
        .unwrap_or_default();
    let entries = fs::read_dir(dir).map_err(|e| CatalogError::Manifest(e.to_string()))?;
    for entry in entries.flatten() {
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.ends_with(".json") && name != MANIFEST && !listed.contains(&name) {
            return Err(CatalogError::Manifest(format!("{name} is not listed")));
        }
    }
    Ok(cat)
}

/// The catalog compiled into the library.
pub fn builtin() -> Catalog {
    let lookup = |name: &str| embedded::FILES.iter().find(|(n, _)| *n == name).map(|(_, t)| t.to_string());
    let manifest = lookup(MANIFEST).expect("embedded manifest");
    Catalog::from_sources(&manifest, lookup).expect("embedded catalog is valid")
}

/// Parse `name=value` where value is a rational such as `3`, `-5/2`.
pub fn parse_param(text: &str) -> Option<(String, Q)> {
    let (name, value) = text.split_once('=')?;
    let name = name.trim();
    if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
        return None;
    }
    let v = Env::default().parse(value.trim()).ok()?;
    let q = v.as_num()?.clone();
    Some((name.to_string(), q))
}

pub fn format_q(q: &Q) -> String {
    if q.denom().is_zero() {
        return "nan".into();
    }
    q.to_string()
}
