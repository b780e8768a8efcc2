use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use liesym::catalog::{builtin, load_catalog, parse_param, Catalog, CatalogError, RecordSpec};
use liesym::expr::Q;
use liesym::harness::{self, RunOptions};
use liesym::invariance::rank_and_count;
use liesym::jet::{prolong, VectorField};
use liesym::liedet::lie_determinant;
use liesym::parse::{Env, ErrorKind, HChoice, ParseError};
use liesym::zero::ProbeConfig;

const PASS: u8 = 0;
const FAIL: u8 = 1;
const USAGE: u8 = 2;
const INTERNAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "liesym", version, about = "Point symmetries, invariants and Lie determinants of scalar ODEs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Sample points per zero test.
    #[arg(long, global = true, default_value_t = 20)]
    points: usize,
    /// Working precision in decimal digits.
    #[arg(long, global = true, default_value_t = 50)]
    digits: u32,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Order for family records.
    #[arg(long, global = true, allow_negative_numbers = true)]
    n: Option<i64>,
    /// Parameter value as name=value; repeatable.
    #[arg(long = "param", global = true, value_name = "NAME=VALUE")]
    params: Vec<String>,
    /// Record label glob.
    #[arg(long, global = true)]
    filter: Option<String>,
    /// Load records from this directory instead of the built-in set.
    #[arg(long, global = true)]
    catalog: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Verify catalog records and emit a JSON report.
    Verify {
        /// Also check the uncorrected originals of corrected items.
        #[arg(long)]
        printed: bool,
    },
    /// Print the prolongation coefficients of a vector field.
    Prolong { field: String, order: u32 },
    /// Lie determinant of a catalog record or of a list of fields.
    Liedet { target: Vec<String> },
    /// Number of functionally independent invariants of a given order.
    Count {
        target: Vec<String>,
        #[arg(long)]
        order: u32,
    },
    /// Catalog operations.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Subcommand, Debug)]
enum CatalogAction {
    /// List record labels.
    List,
}

struct Failure(u8, String);

impl From<CatalogError> for Failure {
    fn from(e: CatalogError) -> Self {
        let code = match e {
            CatalogError::ConstraintViolation { .. }
            | CatalogError::OutOfRange { .. }
            | CatalogError::MissingParameter { .. } => USAGE,
            _ => INTERNAL,
        };
        Failure(code, e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure(USAGE, msg.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { PASS });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("liesym: {msg}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    let params = user_params(&cli.params)?;
    let probe = ProbeConfig { points: cli.points, digits: cli.digits, seed: cli.seed, ..ProbeConfig::default() };
    if probe.points == 0 || probe.digits <= 20 {
        return Err(usage("--points must be positive and --digits above 20"));
    }
    match &cli.command {
        Command::Verify { printed } => {
            let cat = catalog(cli)?;
            let filter = cli.filter.clone();
            if cat.filter(filter.as_deref()).map_err(|e| usage(e.to_string()))?.is_empty() {
                return Err(usage(format!("no record matches {}", filter.unwrap_or_default())));
            }
            let opts = RunOptions { probe, n: cli.n, params, filter, printed: *printed };
            let report = harness::run(&cat, &opts).map_err(|e| Failure(INTERNAL, e.to_string()))?;
            for note in &report.notes {
                eprintln!("note: {note}");
            }
            emit(cli, &report.to_json())?;
            if report.checks.is_empty() {
                return Err(usage("every instantiation was skipped; nothing was checked"));
            }
            match report.first_failure() {
                None => Ok(PASS),
                Some(c) => {
                    let failed = report.checks.iter().filter(|c| !c.pass).count();
                    eprintln!("{failed} check(s) failed; first: {} {} ({})", c.record_label, c.item, c.verdict);
                    Ok(FAIL)
                }
            }
        }
        Command::Prolong { field, order } => {
            let x = parse_field_loose(field, cli.n, &params).map_err(|e| usage(format!("{field}: {e}")))?;
            let px = prolong(&x, *order);
            let mut out = format!("xi = {}\neta = {}\n", x.xi, x.eta);
            for j in 1..=*order {
                out.push_str(&format!("eta[{j}] = {}\n", px.eta(j).expand()));
            }
            emit(cli, out.trim_end())?;
            Ok(PASS)
        }
        Command::Liedet { target } => {
            let (label, fields) = target_fields(cli, target, &params)?;
            let res = lie_determinant(&label, &fields).map_err(|e| usage(e.to_string()))?;
            emit(cli, &serde_json::to_string_pretty(&res).expect("serializes"))?;
            Ok(PASS)
        }
        Command::Count { target, order } => {
            let (label, fields) = target_fields(cli, target, &params)?;
            let r = rank_and_count(&fields, *order, &probe).map_err(|e| Failure(INTERNAL, e.to_string()))?;
            let v = serde_json::json!({
                "algebra_label": label,
                "order": r.order,
                "rank_rn": r.rank_rn,
                "count_dn": r.count_dn,
                "sample_points": r.sample_points,
            });
            emit(cli, &serde_json::to_string_pretty(&v).expect("serializes"))?;
            Ok(PASS)
        }
        Command::Catalog { action: CatalogAction::List } => {
            let cat = catalog(cli)?;
            let mut out = String::new();
            for r in cat.filter(cli.filter.as_deref()).map_err(|e| usage(e.to_string()))? {
                let range = match &r.n_range {
                    None => "fixed".to_string(),
                    Some(nr) => match nr.max {
                        Some(m) => format!("{}<=n<={m}", nr.min),
                        None => format!("n>={}", nr.min),
                    },
                };
                out.push_str(&format!("{}\tdim {}\t{}\n", r.label, r.dimension_formula, range));
            }
            emit(cli, out.trim_end())?;
            Ok(PASS)
        }
    }
}

fn user_params(raw: &[String]) -> Result<BTreeMap<String, Q>, Failure> {
    let mut out = BTreeMap::new();
    for p in raw {
        let (k, v) = parse_param(p).ok_or_else(|| usage(format!("--param {p}: expected name=rational")))?;
        out.insert(k, v);
    }
    Ok(out)
}

fn catalog(cli: &Cli) -> Result<Catalog, Failure> {
    match &cli.catalog {
        Some(dir) => load_catalog(dir).map_err(|e| Failure(INTERNAL, e.to_string())),
        None => Ok(builtin()),
    }
}

fn emit(cli: &Cli, text: &str) -> Result<(), Failure> {
    match &cli.out {
        Some(p) => fs::write(p, format!("{text}\n")).map_err(|e| Failure(INTERNAL, format!("{}: {e}", p.display()))),
        None => {
            // A closed pipe (e.g. `| head`) is not an error worth reporting.
            let _ = writeln!(std::io::stdout(), "{text}");
            Ok(())
        }
    }
}

/// Parse a field, treating unknown names as symbolic parameters.
fn parse_field_loose(text: &str, n: Option<i64>, params: &BTreeMap<String, Q>) -> Result<VectorField, ParseError> {
    let mut env = Env::default();
    if let Some(n) = n {
        env.vars.insert("n".into(), Q::from_integer(n.into()));
    }
    for (k, v) in params {
        env.params.insert(k.clone(), Some(v.clone()));
    }
    loop {
        match env.parse_field(text) {
            Err(ParseError { kind: ErrorKind::UnknownIdentifier(id), .. }) if !env.params.contains_key(&id) && id != "n" => {
                env.params.insert(id, None);
            }
            other => return other,
        }
    }
}

/// A catalog label grounded at `--n` and `--param`, or a list of fields.
fn target_fields(cli: &Cli, target: &[String], params: &BTreeMap<String, Q>) -> Result<(String, Vec<VectorField>), Failure> {
    if target.is_empty() {
        return Err(usage("expected a record label or fields"));
    }
    if target.len() == 1 {
        let cat = catalog(cli)?;
        if let Some(rec) = cat.get(&target[0]) {
            return Ok((rec.label.clone(), ground(rec, cli.n, params)?));
        }
    }
    let mut fields = Vec::new();
    for t in target {
        for part in t.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            fields.push(parse_field_loose(part, cli.n, params).map_err(|e| usage(format!("{part}: {e}")))?);
        }
    }
    Ok((target.join("; "), fields))
}

fn ground(rec: &RecordSpec, n: Option<i64>, params: &BTreeMap<String, Q>) -> Result<Vec<VectorField>, Failure> {
    let n = match (rec.is_family(), n) {
        (true, Some(n)) => Some(n),
        (true, None) => rec.default_ns()[0],
        (false, _) => None,
    };
    let overrides: BTreeMap<String, Q> =
        params.iter().filter(|(k, _)| rec.param_names().contains(&k.as_str())).map(|(k, v)| (k.clone(), v.clone())).collect();
    let p = rec.default_params(n, &overrides)?.remove(0);
    let inst = rec.with_errata(None)?.instantiate(n, &p, HChoice::Identity)?;
    Ok(inst.fields)
}
