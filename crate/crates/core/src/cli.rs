//! Command-line driver.
//!
//! Every command prints a JSON document to stdout (and to `--json PATH` when
//! given) echoing the tool version, the full configuration and all
//! tolerances. Exit codes: 0 when every certification passes, 1 when one
//! fails, 2 on usage or parameter errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, Parser, Subcommand};
use serde::Serialize;

use crate::construct::{
    blowup_study, build_div, build_nondiv, build_ps, BlowupReport, InstanceMetadata, InstanceParams,
    Stage,
};
use crate::error::CxError;
use crate::operators::ellipticity_constant;
use crate::quadrature::JetKind;
use crate::verify::{
    integrability_numeric_field, integrability_threshold, interface_flux_suite, rational,
    residual_suite, run_suite, weak_suite, Integrability, NumericIntegrability, SuiteName,
    Tolerances, VerificationReport,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Default cutoff scales of the blow-up study.
pub const DEFAULT_N_LIST: [u32; 5] = [16, 64, 256, 1024, 4096];

#[derive(Debug, Parser)]
#[command(name = "cx", version, about = "Build and certify quadrant-coefficient elliptic counterexamples")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Quadrature tolerance (relative, floored at absolute for small integrals).
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,

    /// Seed for every sampled quantity.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    /// Also write the JSON report to this path.
    #[arg(long, global = true)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "lowercase", tag = "command")]
pub enum Command {
    /// Non-divergence instance for exponent p at cutoff scale n.
    Nondiv {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        n: u32,
        #[arg(long, value_enum, default_value_t = Stage::Full)]
        stage: Stage,
        /// Run the strong-residual suite on the instance.
        #[arg(long)]
        certify: bool,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Divergence instance for exponent q at cutoff scale n.
    Div {
        #[arg(long)]
        q: f64,
        #[arg(long)]
        n: u32,
        /// Run the weak-residual suite on the instance.
        #[arg(long)]
        certify: bool,
        #[arg(long, default_value_t = 20)]
        bumps: usize,
    },
    /// Four-sector instance for the angle theta0 (radians).
    Ps {
        #[arg(long)]
        theta0: f64,
        /// Radius of the ball the equation is posed on.
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// Classify integrability of the gradient in L_p.
        #[arg(long)]
        p: Option<f64>,
        /// Run the weak-residual suite on the instance.
        #[arg(long)]
        certify: bool,
        #[arg(long, default_value_t = 20)]
        bumps: usize,
    },
    /// Norms of v_n, h_n and D^2 v_n against ln n.
    Blowup {
        #[arg(long)]
        p: f64,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_N_LIST)]
        n: Vec<u32>,
        /// Write the per-n table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run certification suites in their standard configuration.
    Verify {
        #[arg(long, value_enum, default_value_t = SuiteName::All)]
        suite: SuiteName,
    },
}

/// Echo of the parsed command line.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub command: Command,
    pub tol: f64,
    pub seed: u64,
    pub json: Option<PathBuf>,
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    tolerances: &'a Tolerances,
    result: T,
    pass: bool,
}

#[derive(Serialize)]
struct InstanceOutput {
    instance: InstanceMetadata,
    entry_bound_holds: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    reports: Vec<VerificationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    integrability: Option<IntegrabilityOutput>,
}

#[derive(Serialize)]
struct IntegrabilityOutput {
    p: f64,
    /// `2 / (1 - nu)` when `nu < 1`.
    threshold: Option<f64>,
    exact: Option<Integrability>,
    numeric: NumericIntegrability,
}

#[derive(Serialize)]
struct BlowupOutput {
    report: BlowupReport,
    checks: VerificationReport,
}

#[derive(Serialize)]
struct VerifyOutput {
    reports: Vec<VerificationReport>,
}

#[derive(Serialize)]
struct CsvRow {
    n: u32,
    ln_n: f64,
    lp_v: f64,
    lp_h: f64,
    #[serde(rename = "lp_D2_pow_p")]
    lp_d2_pow_p: f64,
    quad_err: f64,
}

#[derive(Debug, thiserror::Error)]
enum RunError {
    #[error(transparent)]
    Param(#[from] CxError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write CSV {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

/// Run with the process arguments and standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Run with explicit output streams.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_PASS
                }
                _ => {
                    let text = e.render().to_string();
                    if text.contains("Usage:") {
                        let _ = write!(err, "{text}");
                    } else {
                        let _ = write!(err, "{}\n{}\n", text.trim_end(), Cli::command().render_usage());
                    }
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(&cli, out) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_FAIL,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                RunError::Param(_) | RunError::Usage(_) => {
                    let _ = write!(err, "\n{}", Cli::command().render_usage());
                    let _ = writeln!(err, "\n\nFor more information, try '--help'.");
                    EXIT_USAGE
                }
                RunError::Io { .. } | RunError::Csv { .. } => EXIT_FAIL,
            }
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<bool, RunError> {
    if !(cli.tol > 0.0 && cli.tol.is_finite()) {
        return Err(RunError::Usage(format!(
            "--tol must be positive and finite, got {}",
            cli.tol
        )));
    }
    match &cli.command {
        Command::Nondiv { samples: 0, .. } => {
            return Err(RunError::Usage("--samples must be at least 1".into()))
        }
        Command::Div { bumps: 0, .. } | Command::Ps { bumps: 0, .. } => {
            return Err(RunError::Usage("--bumps must be at least 1".into()))
        }
        _ => {}
    }
    let config = RunConfig {
        command: cli.command.clone(),
        tol: cli.tol,
        seed: cli.seed,
        json: cli.json.clone(),
    };
    let tolerances = Tolerances::default();
    match &cli.command {
        Command::Nondiv {
            p,
            n,
            stage,
            certify,
            samples,
        } => {
            let inst = build_nondiv(*p, *n, *stage)?;
            let ell = ellipticity_constant(&inst.coefficients)?;
            let mut reports = Vec::new();
            if *certify {
                reports.push(residual_suite(&inst, *samples, cli.seed, &tolerances)?);
            }
            let pass = ell.entry_bound_holds && reports.iter().all(|r| r.pass);
            let result = InstanceOutput {
                instance: inst.metadata(),
                entry_bound_holds: ell.entry_bound_holds,
                reports,
                integrability: None,
            };
            emit(cli, out, &config, &tolerances, result, pass)
        }
        Command::Div {
            q,
            n,
            certify,
            bumps,
        } => {
            let inst = build_div(*q, *n)?;
            let ell = ellipticity_constant(&inst.coefficients)?;
            let mut reports = Vec::new();
            if *certify {
                reports.push(weak_suite(&inst, *bumps, cli.seed, cli.tol, &tolerances)?);
            }
            let pass = reports.iter().all(|r| r.pass);
            let result = InstanceOutput {
                instance: inst.metadata(),
                entry_bound_holds: ell.entry_bound_holds,
                reports,
                integrability: None,
            };
            emit(cli, out, &config, &tolerances, result, pass)
        }
        Command::Ps {
            theta0,
            radius,
            p,
            certify,
            bumps,
        } => {
            let inst = build_ps(*theta0, *radius)?;
            let ell = ellipticity_constant(&inst.coefficients)?;
            let mut reports = vec![interface_flux_suite(&inst, &tolerances)?];
            if *certify {
                reports.push(weak_suite(&inst, *bumps, cli.seed, cli.tol, &tolerances)?);
            }
            let integrability = match p {
                Some(p) => Some(ps_integrability(&inst, *p, cli.tol)?),
                None => None,
            };
            let pass = reports.iter().all(|r| r.pass);
            let result = InstanceOutput {
                instance: inst.metadata(),
                entry_bound_holds: ell.entry_bound_holds,
                reports,
                integrability,
            };
            emit(cli, out, &config, &tolerances, result, pass)
        }
        Command::Blowup { p, n, csv } => {
            let report = blowup_study(*p, n, cli.tol)?;
            let checks = blowup_checks(&report, &tolerances);
            if let Some(path) = csv {
                write_csv(path, &report)?;
            }
            let pass = checks.pass;
            emit(
                cli,
                out,
                &config,
                &tolerances,
                BlowupOutput { report, checks },
                pass,
            )
        }
        Command::Verify { suite } => {
            let reports = run_suite(*suite, cli.seed, &tolerances)?;
            let pass = reports.iter().all(|r| r.pass);
            emit(cli, out, &config, &tolerances, VerifyOutput { reports }, pass)
        }
    }
}

fn ps_integrability(
    inst: &crate::construct::CounterexampleInstance,
    p: f64,
    tol: f64,
) -> Result<IntegrabilityOutput, RunError> {
    let InstanceParams::Ps { profile, .. } = &inst.params else {
        unreachable!("built as a four-sector instance");
    };
    let nu = profile.params.nu;
    let exact = match (rational(nu, 1_000_000), rational(p, 1_000_000)) {
        (Some(nu), Some(pr)) => Some(integrability_threshold(nu - 1, pr)?),
        _ => None,
    };
    let numeric = integrability_numeric_field(&inst.solution, JetKind::Gradient, p, tol)?;
    Ok(IntegrabilityOutput {
        p,
        threshold: profile.params.integrability_threshold(),
        exact,
        numeric,
    })
}

/// Thresholds the blow-up law must meet.
pub fn blowup_checks(report: &BlowupReport, tol: &Tolerances) -> VerificationReport {
    let mut checks = VerificationReport::new("blowup", None);
    let failed = report.rows.iter().filter(|r| !r.converged).count();
    checks.check_le("rows without converged quadrature", None, failed as f64, 0.0);
    match report.regression {
        Some(reg) => {
            checks.check_gt("regression slope", None, reg.slope, 0.0);
            checks.check_gt(
                "regression R^2",
                None,
                reg.r_squared,
                tol.blowup_r_squared - f64::EPSILON,
            );
        }
        None => checks.check_le("regression available", None, 1.0, 0.0),
    }
    if let Some(spread) = report.increment_spread {
        checks.check_le("increment spread", None, spread, tol.blowup_increment_spread);
    }
    if let [.., a, b] = report.rows.as_slice() {
        let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs());
        checks.check_le(
            format!("||v_n||_p at n={} vs n={}", a.n, b.n),
            None,
            rel(a.lp_v, b.lp_v),
            tol.boundedness,
        );
        checks.check_le(
            format!("||h_n||_p at n={} vs n={}", a.n, b.n),
            None,
            rel(a.lp_h, b.lp_h),
            tol.boundedness,
        );
    }
    checks
}

fn write_csv(path: &Path, report: &BlowupReport) -> Result<(), RunError> {
    let csv_err = |source| RunError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in &report.rows {
        w.serialize(CsvRow {
            n: r.n,
            ln_n: r.ln_n,
            lp_v: r.lp_v,
            lp_h: r.lp_h,
            lp_d2_pow_p: r.lp_d2_pow_p,
            quad_err: r.quad_err,
        })
        .map_err(csv_err)?;
    }
    w.flush().map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit<T: Serialize>(
    cli: &Cli,
    out: &mut dyn Write,
    config: &RunConfig,
    tolerances: &Tolerances,
    result: T,
    pass: bool,
) -> Result<bool, RunError> {
    let doc = Document {
        tool: "cx",
        version: env!("CARGO_PKG_VERSION"),
        config,
        tolerances,
        result,
        pass,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
    text.push('\n');
    if let Some(path) = &cli.json {
        std::fs::write(path, &text).map_err(|source| RunError::Io {
            path: path.clone(),
            source,
        })?;
    }
    out.write_all(text.as_bytes())
        .map_err(|source| RunError::Io {
            path: PathBuf::from("<stdout>"),
            source,
        })?;
    Ok(pass)
}
