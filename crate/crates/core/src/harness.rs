//! Batch verification over catalog records, producing a JSON report.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::catalog::{format_q, Catalog, CatalogError, Instance, RecordSpec};
use crate::expr::{Expr, Q};
use crate::invariance::{equation_residual, rank_and_count, OdeEquation};
use crate::invdiff::{jacobian_rank, lambda_residual};
use crate::jet::{apply, dx, VectorField};
use crate::liedet::lie_determinant;
use crate::parse::HChoice;
use crate::zero::{is_zero, ProbeConfig, ZeroError, ZeroVerdict};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Equation,
    Invariant,
    Lambda,
    LieDet,
    Rank,
    Closure,
}

impl CheckKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckKind::Equation => "equation",
            CheckKind::Invariant => "invariant",
            CheckKind::Lambda => "lambda",
            CheckKind::LieDet => "lie_det",
            CheckKind::Rank => "rank",
            CheckKind::Closure => "closure",
        }
    }
}

/// Whether a checked item is taken verbatim from the record, replaced by a
/// correction, or is the uncorrected original of a corrected item.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    Stated,
    Corrected,
    Printed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Expect {
    Zero,
    Nonzero,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InstantiationInfo {
    pub n: Option<i64>,
    pub params: BTreeMap<String, String>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub record_label: String,
    pub check_kind: CheckKind,
    pub item: String,
    pub form: Form,
    pub expect: Expect,
    pub instantiation: InstantiationInfo,
    pub verdict: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub detail: Value,
    pub elapsed_ms: f64,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub probe: ProbeConfig,
    /// Replaces the default `n` values of family records.
    pub n: Option<i64>,
    /// Applied to records that declare the parameter.
    pub params: BTreeMap<String, Q>,
    pub filter: Option<String>,
    /// Also check the uncorrected originals of corrected items.
    pub printed: bool,
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub checks: Vec<Check>,
    /// Instantiations that were skipped, with the reason.
    pub notes: Vec<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.checks).expect("report serializes")
    }
}

enum Task {
    /// Every field must annihilate the residual built from it.
    Fields { fields: Arc<Vec<VectorField>>, residual: Residual },
    LieDet { fields: Arc<Vec<VectorField>>, expected: Expr },
    Count { fields: Arc<Vec<VectorField>>, order: u32, expected: i64 },
    Dependence { exprs: Vec<Expr> },
}

enum Residual {
    Equation(OdeEquation),
    Invariant(Expr),
    Lambda(Expr),
}

impl Residual {
    fn of(&self, x: &VectorField) -> Expr {
        match self {
            Residual::Equation(eq) => equation_residual(x, eq),
            Residual::Invariant(e) => apply(x, e),
            Residual::Lambda(l) => lambda_residual(x, l),
        }
    }
}

struct Job {
    label: String,
    kind: CheckKind,
    item: String,
    form: Form,
    expect: Expect,
    n: Option<i64>,
    params: BTreeMap<String, Q>,
    h: Option<HChoice>,
    task: Task,
}

/// Stable 64-bit FNV-1a, so per-check seeds do not depend on the toolchain.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn params_text(p: &BTreeMap<String, Q>) -> BTreeMap<String, String> {
    p.iter().map(|(k, v)| (k.clone(), format_q(v))).collect()
}

impl Job {
    fn seed(&self, base: u64) -> u64 {
        let key = format!(
            "{base}|{}|{}|{}|{:?}|{:?}|{:?}|{:?}",
            self.label,
            self.kind.as_str(),
            self.item,
            self.form,
            self.n,
            params_text(&self.params),
            self.h.map(|h| h.to_string())
        );
        fnv1a(key.as_bytes())
    }

    fn run(&self, base: &ProbeConfig) -> Check {
        let start = Instant::now();
        let probe = base.with_seed(self.seed(base.seed));
        let (verdict, detail, is_zero_like) = match &self.task {
            Task::Fields { fields, residual } => fields_verdict(fields, residual, &probe),
            Task::LieDet { fields, expected } => match lie_determinant(&self.label, fields) {
                Ok(res) => {
                    let diff = &res.determinant - expected;
                    let d = json!({"determinant": res.determinant.to_string(), "expected": expected.to_string()});
                    match is_zero(&diff, &probe) {
                        Ok(v) => verdict_parts(v, None, d),
                        Err(e) => error_parts(&e.to_string()),
                    }
                }
                Err(e) => error_parts(&e.to_string()),
            },
            Task::Count { fields, order, expected } => match rank_and_count(fields, *order, &probe) {
                Ok(r) => {
                    let eq = r.count_dn == *expected;
                    let d = json!({"order": order, "rank": r.rank_rn, "count": r.count_dn, "expected": expected});
                    (if eq { "Equal" } else { "Unequal" }.to_string(), d, Some(eq))
                }
                Err(e) => error_parts(&e.to_string()),
            },
            Task::Dependence { exprs } => match jacobian_rank(exprs, &probe) {
                Ok(r) => {
                    let dep = r < exprs.len();
                    let d = json!({"jacobian_rank": r, "functions": exprs.len()});
                    (if dep { "Dependent" } else { "Independent" }.to_string(), d, Some(dep))
                }
                Err(e) => error_parts(&e.to_string()),
            },
        };
        let pass = match (is_zero_like, self.expect) {
            (Some(z), Expect::Zero) => z,
            (Some(z), Expect::Nonzero) => !z,
            (None, _) => false,
        };
        Check {
            record_label: self.label.clone(),
            check_kind: self.kind,
            item: self.item.clone(),
            form: self.form,
            expect: self.expect,
            instantiation: InstantiationInfo {
                n: self.n,
                params: params_text(&self.params),
                seed: base.seed,
                h: self.h.map(|h| h.to_string()),
            },
            verdict,
            pass,
            detail,
            elapsed_ms: (start.elapsed().as_secs_f64() * 1e6).round() / 1e3,
        }
    }
}

type Parts = (String, Value, Option<bool>);

fn error_parts(msg: &str) -> Parts {
    ("Error".to_string(), json!({ "error": msg }), None)
}

fn verdict_parts(v: ZeroVerdict, generator: Option<usize>, mut extra: Value) -> Parts {
    let zero = v.is_zero();
    if !zero {
        let mut w = serde_json::to_value(&v).unwrap_or(Value::Null);
        if let (Some(i), Value::Object(m)) = (generator, &mut w) {
            m.insert("generator".into(), json!(i));
        }
        match &mut extra {
            Value::Object(m) => {
                m.insert("witness".into(), w);
            }
            _ => extra = json!({ "witness": w }),
        }
    }
    (v.name().to_string(), extra, Some(zero))
}

/// All fields must give a zero residual. The first nonzero or failed
/// field decides the verdict; otherwise the weakest zero tier is reported.
fn fields_verdict(fields: &[VectorField], residual: &Residual, probe: &ProbeConfig) -> Parts {
    let mut exact = true;
    for (i, x) in fields.iter().enumerate() {
        match is_zero(&residual.of(x), probe) {
            Ok(v) if v.is_zero() => exact &= v == ZeroVerdict::ExactZero,
            Ok(v) => return verdict_parts(v, Some(i), Value::Null),
            Err(e) => return field_error(i, &e),
        }
    }
    let v = if exact {
        ZeroVerdict::ExactZero
    } else {
        ZeroVerdict::ProbablyZero { points_tested: probe.points, precision_digits: probe.digits }
    };
    verdict_parts(v, None, Value::Null)
}

fn field_error(i: usize, e: &ZeroError) -> Parts {
    ("Error".to_string(), json!({ "generator": i, "error": e.to_string() }), None)
}

/// The items of a grounded record, keyed by their report name.
fn items(inst: &Instance) -> Vec<(CheckKind, String, Task)> {
    let f = Arc::new(inst.fields.clone());
    let mut out = Vec::new();
    for (j, eq) in inst.equations.iter().enumerate() {
        out.push((
            CheckKind::Equation,
            format!("equations/{j}"),
            Task::Fields { fields: f.clone(), residual: Residual::Equation(eq.clone()) },
        ));
    }
    for (j, (_, e)) in inst.invariants.iter().enumerate() {
        out.push((
            CheckKind::Invariant,
            format!("invariants/{j}"),
            Task::Fields { fields: f.clone(), residual: Residual::Invariant(e.clone()) },
        ));
    }
    if let Some(l) = &inst.lambda {
        out.push((CheckKind::Lambda, "lambda".into(), Task::Fields { fields: f.clone(), residual: Residual::Lambda(l.clone()) }));
    }
    if let Some(d) = &inst.lie_determinant {
        out.push((CheckKind::LieDet, "lie_determinant".into(), Task::LieDet { fields: f.clone(), expected: d.clone() }));
    }
    out
}

fn same_task(a: &Task, b: &Task) -> bool {
    match (a, b) {
        (Task::Fields { fields: fa, residual: ra }, Task::Fields { fields: fb, residual: rb }) => {
            fa == fb
                && match (ra, rb) {
                    (Residual::Equation(x), Residual::Equation(y)) => x == y,
                    (Residual::Invariant(x), Residual::Invariant(y)) | (Residual::Lambda(x), Residual::Lambda(y)) => x == y,
                    _ => false,
                }
        }
        (Task::LieDet { fields: fa, expected: ea }, Task::LieDet { fields: fb, expected: eb }) => fa == fb && ea == eb,
        _ => false,
    }
}

/// Whether the equation at `j` changes with the choice of `H`.
fn uses_h(by_h: &[Instance], j: usize) -> bool {
    by_h.windows(2).any(|w| w[0].equations[j] != w[1].equations[j])
}

struct Planner<'a> {
    opts: &'a RunOptions,
    jobs: Vec<Job>,
    notes: Vec<String>,
}

impl Planner<'_> {
    fn push(&mut self, rec: &RecordSpec, inst: &Instance, kind: CheckKind, item: String, form: Form, expect: Expect, h: Option<HChoice>, task: Task) {
        self.jobs.push(Job {
            label: rec.label.clone(),
            kind,
            item,
            form,
            expect,
            n: inst.n,
            params: inst.params.clone(),
            h,
            task,
        });
    }

    fn ground_all_h(rec: &RecordSpec, n: Option<i64>, p: &BTreeMap<String, Q>) -> Result<Vec<Instance>, CatalogError> {
        HChoice::ALL.iter().map(|&h| rec.instantiate(n, p, h)).collect()
    }

    fn record(&mut self, rec: &RecordSpec) -> Result<(), CatalogError> {
        let ns = match (rec.is_family(), self.opts.n) {
            (true, Some(n)) => vec![Some(n)],
            _ => rec.default_ns(),
        };
        let overrides: BTreeMap<String, Q> =
            self.opts.params.iter().filter(|(k, _)| rec.param_names().contains(&k.as_str())).map(|(k, v)| (k.clone(), v.clone())).collect();
        let main = rec.with_errata(None)?;
        for n in ns {
            if !rec.n_in_range(n) {
                self.notes.push(format!("{}: n = {} is outside the valid range, skipped", rec.label, n.unwrap_or(-1)));
                continue;
            }
            let sets = rec.default_params(n, &overrides)?;
            for p in &sets {
                match main.check_constraints(n, p) {
                    Ok(()) => self.instantiation(rec, &main, n, p)?,
                    Err(CatalogError::ConstraintViolation { constraint, .. }) => {
                        self.notes.push(format!("{}: {constraint}; record checks skipped", rec.label));
                    }
                    Err(e) => return Err(e),
                }
            }
            self.closure(rec, &main, n, &sets[0], &overrides)?;
        }
        Ok(())
    }

    fn instantiation(&mut self, rec: &RecordSpec, main: &RecordSpec, n: Option<i64>, p: &BTreeMap<String, Q>) -> Result<(), CatalogError> {
        let by_h = Self::ground_all_h(main, n, p)?;
        let base = &by_h[0];

        let mut printed: Vec<(usize, Vec<Instance>)> = Vec::new();
        for i in 0..rec.errata.len() {
            printed.push((i, Self::ground_all_h(&rec.with_errata(Some(i))?, n, p)?));
        }
        let main_items = items(base);
        let changed = |item: &str| -> bool {
            printed.iter().any(|(_, v)| {
                items(&v[0]).iter().zip(&main_items).any(|(a, b)| a.1 == item && b.1 == item && !same_task(&a.2, &b.2))
                    || v[0].fields != base.fields && main_items.iter().any(|m| m.1 == item)
            })
        };
        let forms: Vec<Form> = main_items.iter().map(|(_, item, _)| if changed(item) { Form::Corrected } else { Form::Stated }).collect();

        self.emit(rec, &by_h, &forms, Expect::Zero, None);
        let fields = Arc::new(base.fields.clone());
        for &(order, expected) in &base.counts {
            self.push(
                rec,
                base,
                CheckKind::Rank,
                format!("count/d{order}"),
                Form::Stated,
                Expect::Zero,
                None,
                Task::Count { fields: fields.clone(), order, expected },
            );
        }
        if let (Some(lam), Some((_, phi1))) = (&base.lambda, base.invariants.first()) {
            let dphi = lam * &dx(phi1);
            self.push(
                rec,
                base,
                CheckKind::Closure,
                "lambda*Dx(invariants/0)".into(),
                forms_of(&main_items, &forms, "invariants/0"),
                Expect::Zero,
                None,
                Task::Fields { fields: fields.clone(), residual: Residual::Invariant(dphi.clone()) },
            );
            if let Some((o2, phi2)) = base.invariants.get(1) {
                if *o2 == base.invariants[0].0 + 1 {
                    self.push(
                        rec,
                        base,
                        CheckKind::Rank,
                        "dependence/invariants/0,1".into(),
                        forms_of(&main_items, &forms, "invariants/1"),
                        Expect::Zero,
                        None,
                        Task::Dependence { exprs: vec![phi1.clone(), dphi, phi2.clone()] },
                    );
                }
            }
        }

        if self.opts.printed {
            for (_, v) in &printed {
                let vitems = items(&v[0]);
                let keep: Vec<bool> = vitems
                    .iter()
                    .map(|(_, item, t)| {
                        v[0].fields != base.fields || main_items.iter().any(|(_, mi, mt)| mi == item && !same_task(mt, t))
                    })
                    .collect();
                let forms: Vec<Form> = keep.iter().map(|&k| if k { Form::Printed } else { Form::Stated }).collect();
                self.emit(rec, v, &forms, Expect::Zero, Some(&keep));
            }
        }
        Ok(())
    }

    /// Queue the item checks of one grounding (one instance per `H` choice).
    fn emit(&mut self, rec: &RecordSpec, by_h: &[Instance], forms: &[Form], expect: Expect, keep: Option<&[bool]>) {
        let base = &by_h[0];
        for (idx, (kind, item, task)) in items(base).into_iter().enumerate() {
            if keep.is_some_and(|k| !k[idx]) {
                continue;
            }
            let form = forms[idx];
            if kind == CheckKind::Equation {
                let j: usize = item["equations/".len()..].parse().unwrap();
                if uses_h(by_h, j) {
                    for inst in by_h {
                        let task = Task::Fields {
                            fields: Arc::new(inst.fields.clone()),
                            residual: Residual::Equation(inst.equations[j].clone()),
                        };
                        self.push(rec, inst, kind, item.clone(), form, expect, Some(inst.h), task);
                    }
                    continue;
                }
            }
            self.push(rec, base, kind, item, form, expect, None, task);
        }
    }

    fn closure(
        &mut self,
        rec: &RecordSpec,
        main: &RecordSpec,
        n: Option<i64>,
        base: &BTreeMap<String, Q>,
        overrides: &BTreeMap<String, Q>,
    ) -> Result<(), CatalogError> {
        for (ci, c) in main.closure.iter().enumerate() {
            let mut values: Vec<BTreeMap<String, Q>> = vec![BTreeMap::new()];
            for (name, samples) in &c.samples {
                let vals: Vec<Q> = match overrides.get(name) {
                    Some(v) => vec![v.clone()],
                    None => {
                        let mut one = base.clone();
                        let mut out = Vec::new();
                        for s in samples {
                            let q = sample_value(main, n, &one, s)?;
                            one.insert(name.clone(), q.clone());
                            if !out.contains(&q) {
                                out.push(q);
                            }
                        }
                        out
                    }
                };
                values = values
                    .into_iter()
                    .flat_map(|m| {
                        vals.iter().map(move |v| {
                            let mut m = m.clone();
                            m.insert(name.clone(), v.clone());
                            m
                        })
                    })
                    .collect();
            }
            for extra in values {
                let mut p = base.clone();
                p.extend(extra);
                let inst = main.ground(n, &p, HChoice::Identity)?;
                let fields = match &c.field {
                    Some(text) => main.extra_fields(n, &p, text)?,
                    None => inst.fields.clone(),
                };
                let zero = main.condition_holds(&c.zero_when, n, &p)?;
                let eq = inst.equations[c.equation].clone();
                self.push(
                    rec,
                    &inst,
                    CheckKind::Closure,
                    format!("closure/{ci}"),
                    Form::Stated,
                    if zero { Expect::Zero } else { Expect::Nonzero },
                    None,
                    Task::Fields { fields: Arc::new(fields), residual: Residual::Equation(eq) },
                );
            }
        }
        Ok(())
    }
}

fn forms_of(items: &[(CheckKind, String, Task)], forms: &[Form], item: &str) -> Form {
    items.iter().position(|(_, i, _)| i == item).map_or(Form::Stated, |k| forms[k])
}

fn sample_value(rec: &RecordSpec, n: Option<i64>, p: &BTreeMap<String, Q>, text: &str) -> Result<Q, CatalogError> {
    rec.evaluate_constant(n, p, text)
}

/// Plan and run every applicable check on the records matching the filter.
pub fn run(catalog: &Catalog, opts: &RunOptions) -> Result<Report, HarnessError> {
    let records = catalog.filter(opts.filter.as_deref())?;
    let mut planner = Planner { opts, jobs: Vec::new(), notes: Vec::new() };
    for rec in records {
        planner.record(rec)?;
    }
    let Planner { jobs, notes, .. } = planner;
    let checks: Vec<Check> = jobs.par_iter().map(|j| j.run(&opts.probe)).collect();
    Ok(Report { checks, notes })
}
