use cx_core::cli::{run_with, EXIT_FAIL, EXIT_PASS, EXIT_USAGE};
use serde_json::Value;

fn cx(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("cx").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).expect("stdout is one JSON document")
}

#[test]
fn nondiv_reports_instance_and_echoes_config() {
    let (code, out, err) = cx(&["nondiv", "--p", "4", "--n", "16", "--certify", "--samples", "500"]);
    assert_eq!(code, EXIT_PASS, "{err}");
    let doc = json(&out);
    assert_eq!(doc["tool"], "cx");
    assert_eq!(doc["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(doc["config"]["command"], "nondiv");
    assert_eq!(doc["config"]["p"], 4.0);
    assert_eq!(doc["config"]["stage"], "full");
    assert_eq!(doc["config"]["tol"], 1e-8);
    assert_eq!(doc["config"]["seed"], 42);
    assert_eq!(doc["tolerances"]["strong_residual"], 1e-8);
    assert_eq!(doc["result"]["instance"]["kind"], "nondiv-full-plane");
    assert_eq!(doc["result"]["reports"][0]["suite"], "residual");
    assert_eq!(doc["pass"], true);
}

#[test]
fn parameter_errors_exit_two_with_usage() {
    for args in [
        &["nondiv", "--p", "2", "--n", "16"][..],
        &["div", "--q", "4", "--n", "1"],
        &["ps", "--theta0", "2"],
        &["blowup", "--p", "4", "--n", "16"],
        &["nondiv", "--p", "4", "--n", "16", "--tol", "-1"],
    ] {
        let (code, out, err) = cx(args);
        assert_eq!(code, EXIT_USAGE, "{args:?}");
        assert!(out.is_empty());
        assert!(err.contains("error:") && err.contains("Usage:"), "{err}");
    }
}

#[test]
fn usage_errors_exit_two() {
    for args in [&["bogus"][..], &["nondiv", "--p", "4"], &["nondiv", "--p", "x", "--n", "4"], &[]] {
        let (code, _, err) = cx(args);
        assert_eq!(code, EXIT_USAGE, "{args:?}");
        assert!(err.contains("Usage"), "{err}");
    }
    let (code, out, _) = cx(&["--help"]);
    assert_eq!(code, EXIT_PASS);
    assert!(out.contains("blowup"));
    let (code, out, _) = cx(&["--version"]);
    assert_eq!(code, EXIT_PASS);
    assert!(out.contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn blowup_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let js = dir.path().join("out.json");
    let args = [
        "blowup",
        "--p",
        "4",
        "--csv",
        csv.to_str().unwrap(),
        "--json",
        js.to_str().unwrap(),
    ];
    let (code, out, err) = cx(&args);
    assert_eq!(code, EXIT_PASS, "{err}");
    assert_eq!(std::fs::read_to_string(&js).unwrap(), out);
    let doc = json(&out);
    assert_eq!(doc["config"]["n"], serde_json::json!([16, 64, 256, 1024, 4096]));
    assert!(doc["result"]["report"]["regression"]["r_squared"].as_f64().unwrap() >= 0.999);
    assert!(doc["result"]["report"]["regression"]["slope"].as_f64().unwrap() > 0.0);

    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,ln_n,lp_v,lp_h,lp_D2_pow_p,quad_err"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0][0], 16.0);
    assert!(rows.windows(2).all(|w| w[1][4] > w[0][4]));

    let (_, again, _) = cx(&args);
    assert_eq!(again, out);
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), text);
}

#[test]
fn numbers_round_trip() {
    let (_, out, _) = cx(&["ps", "--theta0", "0.5235987755982988", "--p", "6.25"]);
    let doc = json(&out);
    let theta0 = doc["result"]["instance"]["ps"]["theta0"].as_f64().unwrap();
    assert_eq!(theta0.to_bits(), 0.5235987755982988f64.to_bits());
    assert_eq!(doc["result"]["integrability"]["exact"], "infinite");
    assert_eq!(doc["result"]["integrability"]["numeric"]["classification"], "infinite");
}

#[test]
fn failed_certification_exits_one_and_still_writes() {
    let dir = tempfile::tempdir().unwrap();
    let js = dir.path().join("fail.json");
    // A loose quadrature tolerance leaves weak residuals above the absolute bound.
    let (code, out, err) = cx(&[
        "div",
        "--q",
        "4",
        "--n",
        "16",
        "--certify",
        "--bumps",
        "3",
        "--tol",
        "1e-2",
        "--json",
        js.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_FAIL, "{err}");
    let doc = json(&out);
    assert_eq!(doc["pass"], false);
    assert_eq!(doc["result"]["reports"][0]["pass"], false);
    assert_eq!(std::fs::read_to_string(&js).unwrap(), out);
}

#[test]
fn empty_sample_counts_are_rejected() {
    for args in [
        &["nondiv", "--p", "4", "--n", "16", "--certify", "--samples", "0"][..],
        &["div", "--q", "4", "--n", "16", "--certify", "--bumps", "0"],
    ] {
        assert_eq!(cx(args).0, EXIT_USAGE, "{args:?}");
    }
}

#[test]
fn ps_and_div_commands() {
    let (code, out, err) = cx(&["ps", "--theta0", "0.7853981633974483"]);
    assert_eq!(code, EXIT_PASS, "{err}");
    let doc = json(&out);
    assert_eq!(doc["result"]["reports"][0]["suite"], "interface");
    assert_eq!(doc["result"]["reports"][0]["pass"], true);

    let (code, out, err) = cx(&["div", "--q", "4", "--n", "16", "--certify", "--bumps", "3", "--tol", "1e-6"]);
    assert_eq!(code, EXIT_PASS, "{err}");
    assert_eq!(json(&out)["result"]["reports"][0]["suite"], "weak");
}

#[test]
fn verify_single_suite() {
    let (code, out, err) = cx(&["verify", "--suite", "quadrature", "--seed", "7"]);
    assert_eq!(code, EXIT_PASS, "{err}");
    let doc = json(&out);
    assert_eq!(doc["config"]["suite"], "quadrature");
    assert_eq!(doc["config"]["seed"], 7);
    assert_eq!(doc["result"]["reports"][0]["pass"], true);
}
