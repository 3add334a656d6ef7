//! Acceptance suite: the full default run, executed twice.
//!
//! Runs without the libtest harness so the PASS/FAIL lines, one per
//! criterion, always reach the output. Criteria 8 and 10 are measured
//! red at the stated thresholds (see README, "Known red criteria"); for those
//! the test pins the measured failure mode instead of the threshold, so a
//! change in either direction is noticed.

use std::time::{Duration, Instant};

use sucp_lab::suites::{run_suite, ExperimentConfig, RunReport, Suite};

const KNOWN_RED: [u32; 2] = [8, 10];

fn schema(name: &str) -> jsonschema::JSONSchema {
    let path = format!("{}/schema/{name}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(path).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    jsonschema::JSONSchema::compile(&v).unwrap()
}

fn metric(report: &RunReport, id: u32, key: &str) -> f64 {
    report.criterion(id).unwrap().metrics[key]
}

fn main() {
    let cfg = ExperimentConfig::default();
    let t0 = Instant::now();
    let (first, timings) = run_suite(&cfg).expect("first run");
    let wall = t0.elapsed();
    let (second, _) = run_suite(&cfg).expect("second run");
    let deterministic = first.canonical_json() == second.canonical_json();

    let mut lines = Vec::new();
    let mut unexpected = Vec::new();
    for id in 1..=12u32 {
        let c = first.criterion(id).unwrap_or_else(|| panic!("criterion {id} missing"));
        lines.push(format!("{} [{id:>2}] {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.summary));
        if c.pass == KNOWN_RED.contains(&id) {
            unexpected.push(id);
        }
    }
    lines.push(format!(
        "{} [13] determinism: two runs with seed {} {} byte-identical",
        if deterministic { "PASS" } else { "FAIL" },
        cfg.seed,
        if deterministic { "are" } else { "are not" }
    ));
    for l in &lines {
        println!("{l}");
    }
    let t = |s: Suite| timings.get(&s).copied().unwrap_or_default();
    println!("wall clock: full run {:.1} s, gegenbauer {:.2} s, operator-norms {:.1} s", wall.as_secs_f64(),
        t(Suite::Gegenbauer).as_secs_f64(), t(Suite::OperatorNorms).as_secs_f64());

    assert!(deterministic, "reports differ between runs");
    assert!(unexpected.is_empty(), "criteria with unexpected status: {unexpected:?}");
    assert!(t(Suite::Gegenbauer) < Duration::from_secs(10));
    // the 8-worker budgets are checked on the single-threaded run, which is stricter
    assert!(t(Suite::OperatorNorms) < Duration::from_secs(300));
    assert!(wall < Duration::from_secs(600));

    // measured failure modes of the red criteria
    assert!(metric(&first, 8, "spread") > 1e6, "thin-band cubic scaling no longer dominates");
    assert!(metric(&first, 8, "spread_lambda_ge_inv_n") > 10.0);
    assert!(metric(&first, 8, "refinement_gate") == 1.0);
    assert!(metric(&first, 10, "spread") > 10.0);
    assert!(metric(&first, 10, "max_nu_slope") <= 0.1);

    let suite_schema = schema("suite-report.schema.json");
    let run_schema = schema("run-report.schema.json");
    let v = serde_json::to_value(&first).unwrap();
    assert!(run_schema.is_valid(&v));
    for s in v["suites"].as_array().unwrap() {
        assert!(suite_schema.is_valid(s), "{} report violates the schema", s["suite"]);
    }
}
