//! End-to-end acceptance run. Prints one line per criterion.
//!
//! Some criteria are stated against formulas that turn out to be wrong as
//! written. Those criteria report FAIL, and the exact set of offending items
//! is pinned in `known_red` so that any change in the failure set (new
//! failures, or red items turning green) makes this target exit nonzero.

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use liesym::catalog::{builtin, Catalog, RecordSpec};
use liesym::expr::{q, qf, Expr, Q};
use liesym::harness::{run, CheckKind, Form, Report, RunOptions};
use liesym::invariance::{equation_residual, rank_and_count, OdeEquation};
use liesym::invdiff::{apply_d, verify_lambda, InvariantDiffOperator};
use liesym::jet::VectorField;
use liesym::liedet::lie_determinant;
use liesym::linalg::det_q;
use liesym::linear_ode::{
    coeffs_by_elimination, coeffs_from_roots, coeffs_from_solutions, det_f, elementary_symmetric, vandermonde_det,
    vandermonde_matrix, CharSpec,
};
use liesym::parse::{Env, HChoice};
use liesym::zero::{is_zero, ProbeConfig, Sampler, ZeroVerdict};

const SEED: u64 = 42;

struct Outcome {
    summary: String,
    failures: Vec<String>,
}

struct Criterion {
    id: u32,
    title: &'static str,
    budget: Duration,
    known_red: &'static [&'static str],
}

fn probe() -> ProbeConfig {
    ProbeConfig { seed: SEED, ..ProbeConfig::default() }
}

fn record<'a>(cat: &'a Catalog, label: &str) -> &'a RecordSpec {
    cat.get(label).unwrap_or_else(|| panic!("no record {label}"))
}

fn field(text: &str) -> VectorField {
    Env::default().parse_field(text).unwrap()
}

fn params(pairs: &[(&str, Q)]) -> BTreeMap<String, Q> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn verdict(e: &Expr, p: &ProbeConfig) -> ZeroVerdict {
    is_zero(e, p).unwrap_or_else(|err| panic!("zero test failed: {err}"))
}

fn describe(v: &ZeroVerdict) -> String {
    match v {
        ZeroVerdict::ProbablyNonzero { witness_point, value_magnitude } => format!(
            "{} at {} (|value| ~ {value_magnitude:.3e})",
            v.name(),
            serde_json::to_string(witness_point).unwrap()
        ),
        _ => v.name().to_string(),
    }
}

fn lie_det_exactness(cat: &Catalog) -> Outcome {
    let mut cases: Vec<(&str, i64, Option<Q>)> = Vec::new();
    for n in [4, 6] {
        for a in [q(7), q(n - 2), q(n)] {
            cases.push(("(24,n+2)", n, Some(a)));
        }
        for label in ["(25,n+2)", "(26,n+2)", "(27,n+2)"] {
            cases.push((label, n, None));
        }
    }
    let mut failures = Vec::new();
    let mut corrected_ok = 0;
    let total = cases.len() + 1;
    let mut check = |rec: &RecordSpec, n: Option<i64>, p: BTreeMap<String, Q>, name: String| {
        let printed = if rec.errata.is_empty() { rec.clone() } else { rec.with_errata(Some(0)).unwrap() };
        let fixed = rec.with_errata(None).unwrap();
        for (form, spec) in [("printed", &printed), ("corrected", &fixed)] {
            let inst = spec.ground(n, &p, HChoice::Identity).unwrap();
            let det = lie_determinant(&inst.label, &inst.fields).unwrap().determinant;
            let v = verdict(&(det - inst.lie_determinant.clone().unwrap()), &probe());
            match (form, v == ZeroVerdict::ExactZero) {
                ("printed", false) => failures.push(format!("{name}: {}", v.name())),
                ("corrected", true) => corrected_ok += 1,
                _ => {}
            }
        }
    };
    for (label, n, a) in cases {
        let p = a.iter().map(|a| ("a", a.clone())).collect::<Vec<_>>();
        let name = match &a {
            Some(a) => format!("{label} n={n} a={a}"),
            None => format!("{label} n={n}"),
        };
        check(record(cat, label), Some(n), params(&p), name);
    }
    check(record(cat, "(5,5)"), None, BTreeMap::new(), "(5,5)".into());
    Outcome {
        summary: format!(
            "{}/{total} printed determinants exact; corrected forms exact in {corrected_ok}/{total}",
            total - failures.len()
        ),
        failures,
    }
}

fn check_key(label: &str, item: &str, form: Form) -> String {
    let form = match form {
        Form::Stated => "stated",
        Form::Corrected => "corrected",
        Form::Printed => "printed",
    };
    format!("{label} {item} [{form}]")
}

fn failure_set(report: &Report) -> Vec<String> {
    let set: BTreeSet<String> =
        report.checks.iter().filter(|c| !c.pass).map(|c| check_key(&c.record_label, &c.item, c.form)).collect();
    set.into_iter().collect()
}

fn full_verify(report: &Report) -> Outcome {
    let main: Vec<_> = report.checks.iter().filter(|c| c.form != Form::Printed).collect();
    let printed = report.checks.len() - main.len();
    let main_failed = main.iter().filter(|c| !c.pass).count();
    let printed_failed = report.checks.iter().filter(|c| c.form == Form::Printed && !c.pass).count();
    Outcome {
        summary: format!(
            "{} stated/corrected checks, {main_failed} failed; {printed} printed-form checks, {printed_failed} failed",
            main.len()
        ),
        failures: failure_set(report),
    }
}

fn quintic(cat: &Catalog) -> Outcome {
    let inst = record(cat, "(8,8) eq5").ground(None, &BTreeMap::new(), HChoice::Identity).unwrap();
    let eq = &inst.equations[0];
    let mut failures = Vec::new();
    for (i, x) in inst.fields.iter().enumerate() {
        let v = verdict(&equation_residual(x, eq), &probe());
        if !v.is_zero() {
            failures.push(format!("generator {i} ({x}): {}", describe(&v)));
        }
    }
    Outcome { summary: format!("{} of {} generators annihilate the equation", inst.fields.len() - failures.len(), inst.fields.len()), failures }
}

fn closure(cat: &Catalog) -> Outcome {
    let mut failures = Vec::new();
    let mut lines = Vec::new();
    let mut case = |label: &str, n: i64, k: Q, expect_zero: bool| {
        let rec = record(cat, label).with_errata(None).unwrap();
        let p = params(&[("K", k.clone())]);
        let inst = rec.ground(Some(n), &p, HChoice::Identity).unwrap();
        let extra = rec.extra_fields(Some(n), &p, rec.closure[0].field.as_deref().unwrap()).unwrap();
        let v = verdict(&equation_residual(&extra[0], &inst.equations[0]), &probe());
        let name = format!("{label} n={n} K={k}");
        if v.is_zero() != expect_zero {
            failures.push(format!("{name}: {}", describe(&v)));
        } else if !expect_zero {
            lines.push(format!("{name} non-invariant, {}", describe(&v)));
        }
    };
    for n in [5, 6] {
        case("(26,n+1)", n, qf(n, n - 1), true);
        case("(26,n+1)", n, q(1), false);
        case("(27,n+1)", n, q(0), true);
        case("(27,n+1)", n, qf(3, 2), false);
    }
    Outcome { summary: format!("8 cases; {}", lines.join("; ")), failures }
}

fn distinct_roots(s: &mut Sampler, k: usize) -> Vec<Q> {
    let mut out: Vec<Q> = Vec::with_capacity(k);
    while out.len() < k {
        let r = s.rational();
        if !out.contains(&r) {
            out.push(r);
        }
    }
    out
}

fn vandermonde_cramer() -> Outcome {
    let mut s = Sampler::new(SEED, 5);
    let mut failures = BTreeSet::new();
    for set in 0..20 {
        let n = 2 + set % 5;
        let roots = distinct_roots(&mut s, n);
        let direct = det_q(&vandermonde_matrix(&roots));
        if vandermonde_det(&roots) != direct {
            failures.insert(format!("corrected product formula, size {n}"));
        }
        let mut printed = Q::from_integer(1.into());
        for i in 0..n {
            for j in i + 1..n {
                printed *= &roots[i] - &roots[j];
            }
        }
        if printed != direct {
            failures.insert(format!("printed product formula, size {n}"));
        }
        let elim = coeffs_by_elimination(&roots).unwrap();
        let a = coeffs_from_roots(&roots).unwrap();
        if a != elim {
            failures.insert(format!("corrected symmetric-function coefficients, size {n}"));
        }
        let e = elementary_symmetric(&roots);
        let printed_a: Vec<Q> = (0..n).map(|i| if i % 2 == 0 { e[i + 1].clone() } else { -e[i + 1].clone() }).collect();
        if printed_a != elim {
            failures.insert(format!("printed symmetric-function coefficients, size {n}"));
        }
        if det_f(&roots, n - 1) != &elim[n - 1] * &direct {
            failures.insert(format!("det f_n = A_(n-1) det V, size {n}"));
        }
    }
    Outcome { summary: "20 root sets, sizes 2 to 6".into(), failures: failures.into_iter().collect() }
}

struct SolutionCase {
    name: &'static str,
    solutions: &'static [&'static str],
    n: u32,
    lowest: u32,
    constant: Option<CharSpec>,
}

fn solution_round_trip() -> Outcome {
    let cases = [
        SolutionCase { name: "x^2, x^3", solutions: &["x^2", "x^3"], n: 4, lowest: 2, constant: None },
        SolutionCase { name: "x, x^2, x^4", solutions: &["x", "x^2", "x^4"], n: 4, lowest: 1, constant: None },
        SolutionCase {
            name: "e^x, e^-x",
            solutions: &["exp(x)", "exp(-x)"],
            n: 3,
            lowest: 1,
            constant: Some(CharSpec::real(vec![q(0), q(1), q(-1)])),
        },
        SolutionCase {
            name: "e^x cos 2x, e^x sin 2x",
            solutions: &["exp(x)*cos(2*x)", "exp(x)*sin(2*x)"],
            n: 3,
            lowest: 1,
            constant: Some(CharSpec { real_roots: vec![q(0)], complex_pairs: vec![(q(1), q(2))] }),
        },
        SolutionCase { name: "x, e^x, sin x", solutions: &["x", "exp(x)", "sin(x)"], n: 4, lowest: 1, constant: None },
    ];
    let env = Env::default();
    let mut failures = Vec::new();
    for c in &cases {
        let xis: Vec<Expr> = c.solutions.iter().map(|s| env.parse(s).unwrap()).collect();
        let ode = match coeffs_from_solutions(&xis, c.n, c.lowest, &probe()) {
            Ok(o) => o,
            Err(e) => {
                failures.push(format!("{}: {e}", c.name));
                continue;
            }
        };
        let eq = OdeEquation::new(c.n, ode.rhs()).unwrap();
        let mut gens: Vec<VectorField> = (0..c.lowest).map(|j| field(&format!("x^{j}*Dy"))).collect();
        gens.push(field("y*Dy"));
        gens.extend(xis.iter().map(|xi| VectorField::new(Expr::zero(), xi.clone()).unwrap()));
        for (i, x) in gens.iter().enumerate() {
            let v = verdict(&equation_residual(x, &eq), &probe());
            if !v.is_zero() {
                failures.push(format!("{}: generator {i} ({x}) {}", c.name, describe(&v)));
            }
        }
        if let Some(spec) = &c.constant {
            let want = spec.coefficients();
            let from_roots = if spec.complex_pairs.is_empty() { coeffs_from_roots(&spec.real_roots).unwrap() } else { want.clone() };
            if from_roots != want {
                failures.push(format!("{}: characteristic polynomial disagrees with root formula", c.name));
            }
            for i in 0..c.n {
                let diff = ode.coeff(i) - Expr::num(want[i as usize].clone());
                let v = verdict(&diff, &probe());
                if !v.is_zero() {
                    failures.push(format!("{}: A_{i} {}", c.name, describe(&v)));
                }
            }
        }
    }
    Outcome { summary: format!("{} solution sets", cases.len()), failures }
}

fn counting(cat: &Catalog) -> Outcome {
    let p = probe();
    let mut failures = Vec::new();
    let count = |fields: &[VectorField], k: u32| rank_and_count(fields, k, &p).unwrap().count_dn;
    let dx = field("Dx");
    let dy = field("Dy");
    if count(std::slice::from_ref(&dx), 0) != 1 {
        failures.push("{Dx}: d_0 != 1".into());
    }
    let both = [dx.clone(), dy.clone()];
    if count(&both, 0) != 0 || count(&both, 1) != 1 {
        failures.push("{Dx, Dy}: expected d_0 = 0, d_1 = 1".into());
    }
    if !verify_lambda(&both, &Expr::one(), &p).into_iter().all(|v| v.unwrap().is_zero()) {
        failures.push("{Dx, Dy}: lambda = 1 rejected".into());
    }
    let op = InvariantDiffOperator { lambda: Expr::one(), algebra_label: "translations".into(), verified_to_order: 1 };
    let d = apply_d(&op, &Expr::jet(1)).unwrap();
    if !verdict(&(d - Expr::jet(2)), &p).is_zero() {
        failures.push("{Dx, Dy}: D y' != y''".into());
    }
    let mut checked = 0;
    let labels = [
        "(5,5)", "(15,5)", "(6,6)", "(16,6)", "(7,6)", "(24,n)", "(25,n)", "(26,n)", "(27,n)", "(28,n)",
    ];
    for label in labels {
        let rec = record(cat, label).with_errata(None).unwrap();
        for n in rec.default_ns() {
            let ps = rec.default_params(n, &BTreeMap::new()).unwrap();
            let inst = rec.instantiate(n, &ps[0], HChoice::Identity).unwrap();
            let m = inst.fields.len() as u32;
            let (lo, hi) = (count(&inst.fields, m - 1), count(&inst.fields, m));
            checked += 1;
            if (lo, hi) != (1, 2) {
                let at = n.map(|n| format!(" n={n}")).unwrap_or_default();
                failures.push(format!("{label}{at}: d_{} = {lo}, d_{m} = {hi}", m - 1));
            }
        }
    }
    Outcome { summary: format!("three worked examples and {checked} algebra instantiations"), failures }
}

fn appendix_invariants(cat: &Catalog) -> Outcome {
    let sections = ["three-dimensional algebras: invariants up to order four", "expanded higher-order invariants"];
    let labels: Vec<&str> =
        cat.records.iter().filter(|r| sections.contains(&r.source.section.as_str())).map(|r| r.label.as_str()).collect();
    let mut failures = BTreeSet::new();
    let mut total = 0;
    let mut printed = 0;
    for label in &labels {
        let opts = RunOptions {
            probe: ProbeConfig { points: 30, digits: 60, seed: SEED, ..ProbeConfig::default() },
            filter: Some(label.to_string()),
            printed: true,
            ..RunOptions::default()
        };
        let report = run(cat, &opts).unwrap();
        for c in report.checks.iter().filter(|c| c.check_kind == CheckKind::Invariant) {
            total += 1;
            if c.form == Form::Printed {
                printed += 1;
            }
            if !c.pass {
                failures.insert(check_key(&c.record_label, &c.item, c.form));
            }
        }
    }
    Outcome {
        summary: format!("{} records, {total} invariant checks ({printed} on printed forms)", labels.len()),
        failures: failures.into_iter().collect(),
    }
}

fn determinism(first: &Report, cat: &Catalog) -> Outcome {
    let second = run(cat, &full_options()).unwrap();
    let strip = |r: &Report| {
        let mut r = r.clone();
        for c in &mut r.checks {
            c.elapsed_ms = 0.0;
        }
        r.to_json()
    };
    let (a, b) = (strip(first), strip(&second));
    let failures = if a == b {
        Vec::new()
    } else {
        let line = a.lines().zip(b.lines()).position(|(x, y)| x != y).unwrap_or(0);
        vec![format!("reports differ from line {}", line + 1)]
    };
    Outcome { summary: format!("{} bytes per report", a.len()), failures }
}

fn full_options() -> RunOptions {
    RunOptions { probe: probe(), printed: true, ..RunOptions::default() }
}

fn report(c: &Criterion, elapsed: Duration, out: Outcome) -> bool {
    let got: BTreeSet<&str> = out.failures.iter().map(String::as_str).collect();
    let want: BTreeSet<&str> = c.known_red.iter().copied().collect();
    let over = elapsed > c.budget;
    let status = if got.is_empty() && !over { "PASS" } else { "FAIL" };
    println!("criterion {} {}: {status} ({:.2}s) - {}", c.id, c.title, elapsed.as_secs_f64(), out.summary);
    for f in &out.failures {
        let tag = if want.contains(f.as_str()) { "known" } else { "unexpected" };
        println!("    {tag}: {f}");
    }
    for m in want.difference(&got) {
        println!("    no longer failing: {m}");
    }
    if over {
        println!("    over budget: {:.2}s > {}s", elapsed.as_secs_f64(), c.budget.as_secs());
    }
    got == want && !over
}

fn timed<T>(f: impl FnOnce() -> T) -> (Duration, T) {
    let t = Instant::now();
    let v = f();
    (t.elapsed(), v)
}

const C1_RED: &[&str] = &[
    "(24,n+2) n=4 a=2: ProbablyNonzero",
    "(24,n+2) n=4 a=7: ProbablyNonzero",
    "(24,n+2) n=6 a=4: ProbablyNonzero",
    "(24,n+2) n=6 a=7: ProbablyNonzero",
    "(5,5): ProbablyNonzero",
];

const C2_RED: &[&str] = &[
    "(15,5) eq5 equations/0 [printed]",
    "(15,5) invariants/1 [printed]",
    "(16,6) equations/0 [printed]",
    "(16,6) invariants/0 [printed]",
    "(16,6) lambda [printed]",
    "(2,3) invariants/1 [printed]",
    "(2,3) invariants/3 [printed]",
    "(24,n+2) lie_determinant [printed]",
    "(27,n) equations/0 [printed]",
    "(27,n) invariants/0 [printed]",
    "(27,n) invariants/1 [printed]",
    "(28,n) invariants/1 [printed]",
    "(5,5) lie_determinant [printed]",
    "(7,6) eq5 equations/0 [printed]",
    "(7,6) invariants/0 [printed]",
    "(8,8) invariants/0 [printed]",
];

const C5_RED: &[&str] = &[
    "printed product formula, size 2",
    "printed product formula, size 3",
    "printed product formula, size 6",
    "printed symmetric-function coefficients, size 2",
    "printed symmetric-function coefficients, size 3",
    "printed symmetric-function coefficients, size 4",
    "printed symmetric-function coefficients, size 5",
    "printed symmetric-function coefficients, size 6",
];

const C8_RED: &[&str] = &["(2,3) invariants/1 [printed]", "(2,3) invariants/3 [printed]"];

fn main() -> ExitCode {
    let cat = builtin();
    let secs = Duration::from_secs;
    let crit = |id, title, budget, known_red| Criterion { id, title, budget, known_red };
    let mut ok = true;

    let c = crit(1, "Lie determinant exactness", secs(10), C1_RED);
    let (t, out) = timed(|| lie_det_exactness(&cat));
    ok &= report(&c, t, out);

    let c = crit(2, "full catalog verification", secs(600), C2_RED);
    let (t, full) = timed(|| run(&cat, &full_options()).unwrap());
    ok &= report(&c, t, full_verify(&full));

    let c = crit(3, "sl(3) quintic invariance", secs(600), &[]);
    let (t, out) = timed(|| quintic(&cat));
    ok &= report(&c, t, out);

    let c = crit(4, "closure discrimination", secs(600), &[]);
    let (t, out) = timed(|| closure(&cat));
    ok &= report(&c, t, out);

    let c = crit(5, "Vandermonde and Cramer identities", secs(5), C5_RED);
    let (t, out) = timed(vandermonde_cramer);
    ok &= report(&c, t, out);

    let c = crit(6, "linear equations from solution sets", secs(600), &[]);
    let (t, out) = timed(solution_round_trip);
    ok &= report(&c, t, out);

    let c = crit(7, "invariant counting", secs(600), &[]);
    let (t, out) = timed(|| counting(&cat));
    ok &= report(&c, t, out);

    let c = crit(8, "expanded invariants at high precision", secs(180), C8_RED);
    let (t, out) = timed(|| appendix_invariants(&cat));
    ok &= report(&c, t, out);

    let c = crit(9, "seeded determinism", secs(600), &[]);
    let (t, out) = timed(|| determinism(&full, &cat));
    ok &= report(&c, t, out);

    if ok {
        println!("acceptance: every criterion matched its expected outcome");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected outcome");
        ExitCode::FAILURE
    }
}
