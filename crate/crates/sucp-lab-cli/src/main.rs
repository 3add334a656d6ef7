//! Batch driver for the sucp-lab verification suites.
//!
//! Exit codes: 0 success, 1 a checked assertion failed, 2 configuration
//! error, 3 a numerical budget was exceeded.

use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use sucp_lab::gegenbauer::{gegenbauer_at_one, GegenbauerFamily};
use sucp_lab::suites::{self, ExperimentConfig, Suite};
use sucp_lab::verification::{check_amplitude_bound, check_far_bound, check_near_bound, check_triangle_bound, SweepSpec};
use sucp_lab::wolff::{select_intervals, DiscreteMeasure};
use sucp_lab::LabError;

#[derive(Parser)]
#[command(name = "sucp-lab", version, about = "Numerical verification suites for truncated Bochner-Martinelli kernels")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file; unknown keys are rejected.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Size of the worker pool (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Dump (m, θ, value, bound) rows of the Gegenbauer bound check.
    Gegenbauer {
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 500)]
        max_degree: usize,
        #[arg(long, default_value_t = 100)]
        thetas: usize,
    },
    /// Direct against closed-form kernel evaluation on random samples.
    KernelCheck,
    /// Reproducing identity at the configured truncation orders.
    Reproduce,
    /// Kernel bound sweeps.
    Bounds {
        #[arg(long, value_enum)]
        bound: Option<BoundId>,
        /// JSON sweep specification overriding the configured one.
        #[arg(long)]
        sweep: Option<PathBuf>,
    },
    /// Schur soundness, norm scaling and the min-estimate sweep.
    OperatorNorms,
    /// Carleman ratio over (ν, γ).
    CarlemanSweep,
    /// Disjoint half-mass interval selection for a measure given as (x, w) CSV.
    WolffSelect {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long)]
        n: f64,
    },
    /// Integrability threshold and vanishing-order scan of the counterexample family.
    Counterexample,
    /// Measure, selection and per-interval Carleman numbers on a synthetic field.
    SucpPipeline,
    /// Run the configured suites and write one JSON report per suite.
    RunSuite {
        /// Restrict to these suites (repeatable).
        #[arg(long = "suite")]
        suites: Vec<String>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BoundId {
    Triangle,
    Near,
    Far,
    Amplitude,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<LabError>().map(LabError::exit_code).unwrap_or(1);
            ExitCode::from(code as u8)
        }
    }
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if common.out.is_some() {
        cfg.output = common.out.clone();
    }
    Ok(cfg)
}

/// Writes `name` under the output directory, or to stdout.
fn emit(out: Option<&Path>, name: &str, body: &str) -> Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            fs::write(dir.join(name), body).with_context(|| format!("writing {name}"))?;
        }
        None => {
            let mut so = io::stdout().lock();
            so.write_all(body.as_bytes())?;
            if !body.ends_with('\n') {
                so.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

fn emit_json(out: Option<&Path>, name: &str, v: &Value) -> Result<()> {
    emit(out, name, &serde_json::to_string_pretty(v)?)
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?)?)
}

fn report_line(c: &suites::CriterionResult) {
    let tag = if c.id == 0 { "--".to_string() } else { format!("{:>2}", c.id) };
    eprintln!("[{tag}] {} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.summary);
}

fn suite_output(out: Option<&Path>, format: Format, report: &suites::SuiteReport, csv: Option<String>) -> Result<bool> {
    for c in &report.criteria {
        report_line(c);
    }
    match (format, csv) {
        (Format::Csv, Some(text)) => emit(out, &format!("{}.csv", report.suite.name()), &text)?,
        _ => emit_json(out, &format!("{}.json", report.suite.name()), &serde_json::to_value(report)?)?,
    }
    Ok(report.pass)
}

fn f(x: f64) -> String {
    format!("{x:e}")
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(w) = cli.common.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| LabError::Config(format!("worker pool: {e}")))?;
    }
    let cfg = load_config(&cli.common)?;
    let out = cfg.output.clone();
    let out = out.as_deref();
    let fmt = cli.common.format;
    let seed = cfg.seed;

    match cli.command {
        Command::Gegenbauer { lambda, max_degree, thetas } => {
            if fmt == Some(Format::Json) {
                let rep = suites::gegenbauer_suite(&cfg.gegenbauer)?;
                return suite_output(out, Format::Json, &rep, None);
            }
            let bounds: Vec<f64> = (0..=max_degree).map(|m| gegenbauer_at_one(lambda, m)).collect::<Result<_, _>>()?;
            let mut rows = Vec::new();
            let mut ok = true;
            for i in 0..thetas {
                let theta = std::f64::consts::PI * i as f64 / (thetas.max(2) - 1) as f64;
                let fam = GegenbauerFamily::build(lambda, max_degree, theta.cos())?;
                for (m, &b) in bounds.iter().enumerate() {
                    let v = fam.get(m);
                    ok &= v.abs() <= b * (1.0 + 1e-9);
                    rows.push(vec![m.to_string(), f(theta), f(v), f(b)]);
                }
            }
            emit(out, "gegenbauer.csv", &csv_text(&["m", "theta", "value", "bound"], rows)?)?;
            Ok(ok)
        }
        Command::KernelCheck => {
            let (c, samples) = suites::cross_path_criterion(&cfg.kernels, seed)?;
            report_line(&c);
            if fmt == Some(Format::Json) {
                emit_json(out, "kernel-check.json", &json!({ "criterion": c, "samples": samples }))?;
            } else {
                let rows = samples.iter().map(|s| {
                    vec![s.n.to_string(), f(s.r), f(s.theta), f(s.direct_norm), f(s.closed_norm), f(s.relative_error)]
                });
                emit(out, "kernel-check.csv", &csv_text(&["n", "r", "theta", "direct_norm", "closed_norm", "relative_error"], rows)?)?;
            }
            Ok(c.pass)
        }
        Command::Reproduce => {
            let (c, data) = suites::reproducing_criterion(&cfg.kernels)?;
            report_line(&c);
            emit_json(out, "reproduce.json", &json!({ "criterion": c, "data": data }))?;
            Ok(c.pass)
        }
        Command::Bounds { bound, sweep } => {
            let mut bcfg = cfg.bounds.clone();
            if let Some(p) = sweep {
                let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                bcfg.sweep = serde_json::from_str::<SweepSpec>(&text).map_err(|e| LabError::Config(e.to_string()))?;
            }
            if cli.common.seed.is_some() {
                bcfg.sweep.seed = seed;
            }
            let reports = match bound {
                None => suites::bound_reports(&bcfg)?,
                Some(BoundId::Triangle) => vec![check_triangle_bound(
                    bcfg.triangle_a_range,
                    bcfg.triangle_a_count,
                    bcfg.triangle_theta_count,
                    bcfg.triangle_floor,
                )],
                Some(BoundId::Near) => vec![check_near_bound(&bcfg.sweep)?],
                Some(BoundId::Far) => vec![check_far_bound(&bcfg.sweep)?],
                Some(BoundId::Amplitude) => vec![check_amplitude_bound(&bcfg.sweep, 0, 0)?],
            };
            for r in &reports {
                eprintln!("{} {}: constant {:.4e}", if r.pass { "PASS" } else { "FAIL" }, r.bound, r.empirical_constant);
            }
            if fmt == Some(Format::Csv) {
                let rows = reports.iter().flat_map(|r| {
                    let mut v: Vec<Vec<String>> =
                        r.details.iter().map(|(k, x)| vec![r.bound.clone(), k.clone(), f(*x)]).collect();
                    v.extend(r.exponents.iter().map(|e| vec![r.bound.clone(), format!("slope:{}", e.name), f(e.fit.slope)]));
                    v.push(vec![r.bound.clone(), "empirical_constant".into(), f(r.empirical_constant)]);
                    v
                });
                emit(out, "bounds.csv", &csv_text(&["bound", "quantity", "value"], rows)?)?;
            } else {
                emit_json(out, "bounds.json", &serde_json::to_value(&reports)?)?;
            }
            Ok(reports.iter().all(|r| r.pass))
        }
        Command::OperatorNorms => {
            let rep = suites::operator_norms_suite(&cfg.operator_norms, seed)?;
            let csv = rep.data["norm_scaling"]["rows"].as_array().map(|rows| {
                csv_text(
                    &["n", "lambda", "s_over_t", "norm", "ratio"],
                    rows.iter().map(|r| {
                        ["n", "lambda", "s_over_t", "norm", "ratio"].iter().map(|k| r[*k].to_string()).collect()
                    }),
                )
            });
            suite_output(out, fmt.unwrap_or(Format::Json), &rep, csv.transpose()?)
        }
        Command::CarlemanSweep => {
            let rep = suites::carleman_suite(&cfg.carleman)?;
            let csv = rep.data["samples"].as_array().map(|rows| {
                let keys = ["test_function", "nu", "regime", "ratio", "normalized"];
                csv_text(&keys, rows.iter().map(|r| keys.iter().map(|k| r[*k].to_string()).collect()))
            });
            suite_output(out, fmt.unwrap_or(Format::Json), &rep, csv.transpose()?)
        }
        Command::WolffSelect { measure, n } => {
            let file = File::open(&measure).map_err(|e| LabError::Config(format!("{}: {e}", measure.display())))?;
            let mu = DiscreteMeasure::from_csv(file)?;
            let sel = select_intervals(&mu, n)?;
            eprintln!(
                "{} intervals, C = {:.4}, verified {}, disjoint {}",
                sel.intervals.len(),
                sel.empirical_c,
                sel.all_verified,
                sel.pairwise_disjoint
            );
            if fmt == Some(Format::Csv) {
                let rows = sel.intervals.iter().map(|s| {
                    vec![f(s.interval.lo), f(s.interval.hi), f(s.k), f(s.mass_fraction), s.half_mass_verified.to_string()]
                });
                emit(out, "wolff-select.csv", &csv_text(&["lo", "hi", "k", "mass_fraction", "verified"], rows)?)?;
            } else {
                emit_json(out, "wolff-select.json", &serde_json::to_value(&sel)?)?;
            }
            Ok(sel.all_verified && sel.pairwise_disjoint)
        }
        Command::Counterexample => {
            let rep = suites::counterexample_suite(&cfg.counterexample)?;
            suite_output(out, Format::Json, &rep, None)
        }
        Command::SucpPipeline => {
            let rep = suites::sucp_pipeline_suite(&cfg.pipeline)?;
            suite_output(out, Format::Json, &rep, None)
        }
        Command::RunSuite { suites: names } => {
            let mut cfg = cfg;
            if !names.is_empty() {
                cfg.suites = names.iter().map(|s| Suite::parse(s)).collect::<Result<_, _>>()?;
            }
            let (report, timings) = suites::run_suite(&cfg)?;
            for s in &report.suites {
                for c in &s.criteria {
                    report_line(c);
                }
            }
            for (s, t) in &timings {
                eprintln!("{:>16}: {:.2} s", s.name(), t.as_secs_f64());
            }
            if cfg.output.is_none() {
                emit_json(None, "run.json", &serde_json::to_value(&report)?)?;
            }
            Ok(report.pass)
        }
    }
}
