use std::process::{Command, Output};

fn liesym(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_liesym")).args(args).output().expect("runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(liesym(&[]).status.code(), Some(2));
    assert_eq!(liesym(&["bogus"]).status.code(), Some(2));
    assert_eq!(liesym(&["verify", "--filter", "no-such-record"]).status.code(), Some(2));
    assert_eq!(liesym(&["verify", "--param", "K"]).status.code(), Some(2));
    assert_eq!(liesym(&["verify", "--digits", "10"]).status.code(), Some(2));
    assert_eq!(liesym(&["prolong", "x*Dx +", "2"]).status.code(), Some(2));
}

#[test]
fn missing_catalog_is_internal_error() {
    let o = liesym(&["catalog", "list", "--catalog", "/nonexistent/catalog"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn catalog_list_names_records() {
    let o = liesym(&["catalog", "list"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.lines().any(|l| l.starts_with("(8,8)\tdim 8\tfixed")));
    assert!(out.lines().any(|l| l.starts_with("(24,n+2)\tdim n+2\tn>=2")));
    let filtered = stdout(&liesym(&["catalog", "list", "--filter", "(26,*"]));
    assert!(filtered.lines().count() >= 3);
    assert!(filtered.lines().all(|l| l.starts_with("(26,")));
}

#[test]
fn prolong_scaling_field() {
    let o = liesym(&["prolong", "x*Dx + a*y*Dy", "2"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("eta[1] = -y' + a*y'"), "{out}");
    assert!(out.contains("eta[2] = -2*y'' + a*y''"), "{out}");
}

#[test]
fn liedet_of_record_and_fields() {
    let v = json(&liesym(&["liedet", "(27,n+2)", "--n", "4"]));
    assert_eq!(v["determinant"], "32*y'''^2");
    assert_eq!(v["matrix_order"], 4);
    let v = json(&liesym(&["liedet", "Dx; Dy; x*Dy"]));
    assert_eq!(v["determinant"], "1");
}

#[test]
fn count_translations() {
    let v = json(&liesym(&["count", "Dx", "Dy", "--order", "1"]));
    assert_eq!(v["count_dn"], 1);
    assert_eq!(v["rank_rn"], 2);
}

#[test]
fn verify_single_record_passes() {
    let o = liesym(&["verify", "--filter", "(5,5)"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    let checks = v.as_array().unwrap();
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c["pass"] == true && c["record_label"] == "(5,5)"));
}

#[test]
fn printed_form_failure_exits_1() {
    let o = liesym(&["verify", "--filter", "(5,5)", "--printed"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("lie_determinant"));
}

#[test]
fn closure_at_forbidden_parameter() {
    // K = 1 is an admissible value: the extra field must fail to be a symmetry.
    let o = liesym(&["verify", "--filter", "(26,n+1)", "--n", "5", "--param", "K=1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    let closure = v.as_array().unwrap().iter().find(|c| c["check_kind"] == "closure").expect("closure check");
    assert_eq!(closure["verdict"], "ProbablyNonzero");
    assert_eq!(closure["expect"], "nonzero");
    assert!(closure["detail"].to_string().contains("witness"), "{closure}");

    // K = n/(n-1) is excluded by the record: main checks skipped, closure holds.
    let o = liesym(&["verify", "--filter", "(26,n+1)", "--n", "5", "--param", "K=5/4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("note:"));
    let v = json(&o);
    let checks = v.as_array().unwrap();
    assert!(checks.iter().all(|c| c["check_kind"] == "closure"));
    assert_eq!(checks[0]["verdict"], "ExactZero");
}

#[test]
fn seeded_runs_are_reproducible() {
    let run = |out: &std::path::Path| {
        let o = liesym(&["verify", "--filter", "(2*", "--seed", "42", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
        for c in v.as_array_mut().unwrap() {
            c["elapsed_ms"] = 0.into();
        }
        v.to_string()
    };
    let dir = std::env::temp_dir();
    let a = dir.join(format!("liesym-a-{}.json", std::process::id()));
    let b = dir.join(format!("liesym-b-{}.json", std::process::id()));
    let (ra, rb) = (run(&a), run(&b));
    let _ = std::fs::remove_file(&a);
    let _ = std::fs::remove_file(&b);
    assert_eq!(ra, rb);
    assert!(ra.contains("\"seed\""));
}
