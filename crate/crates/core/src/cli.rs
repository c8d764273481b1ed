//! Command-line front end: `estimate`, `simulate`, `calibrate`, `sample`.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::copula::TransformedGumbelParams;
use crate::empirical::{
    empirical_moments_with, empirical_rho, empirical_tau, pseudo_observations, MomentConvention, RawSample,
};
use crate::error::{Error, Result};
use crate::estimators::{
    asymptotic_covariance, cm_estimate_closed_form, default_initial, pml_estimate, tau_inversion,
    tau_rho_inversion, EstimateReport, FixedParameter, Method,
};
use crate::exec::Execution;
use crate::format::{fmt_sig, round_json};
use crate::harness::{calibrate_params, run_study, write_atomic, McConfig};
use crate::sampling::{sample_archimedean_bivariate, SeededRng};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_ESTIMATOR: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "copula-cm", version, about = "Copula-moment estimation for the transformed Gumbel copula")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit an estimator to a CSV data file and print a JSON report.
    Estimate {
        #[arg(long, default_value = "cm")]
        method: Method,
        /// CSV file, or `-` for standard input.
        #[arg(long)]
        data: PathBuf,
        /// Multiply pseudo-observations by n/(n+1).
        #[arg(long)]
        rescale_pseudo: bool,
        #[arg(long, requires = "beta_init")]
        alpha_init: Option<f64>,
        #[arg(long, requires = "alpha_init")]
        beta_init: Option<f64>,
        /// How C_n is evaluated at the sample points: deheuvels or off-diagonal.
        #[arg(long, default_value = "deheuvels")]
        convention: MomentConvention,
        /// Parameter held fixed by `--method tau` (default: alpha = 0.5).
        #[arg(long, conflicts_with = "fixed_beta")]
        fixed_alpha: Option<f64>,
        #[arg(long)]
        fixed_beta: Option<f64>,
    },
    /// Run a Monte Carlo study described by a TOML or JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        replications: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
        /// Fill the seconds column (makes output machine-dependent).
        #[arg(long)]
        timing: bool,
        /// Run replications on the calling thread only.
        #[arg(long)]
        sequential: bool,
    },
    /// Solve τ(α, β) = τ for β.
    Calibrate {
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        alpha: f64,
    },
    /// Draw a sample of (u1, u2) pairs as CSV.
    Sample {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Io(_) => EXIT_IO,
        Error::Parse { .. } | Error::Config(_) => EXIT_USAGE,
        _ => EXIT_ESTIMATOR,
    }
}

fn error_json(error: &Error) -> Value {
    json!({ "error": { "kind": error.kind(), "message": error.to_string() } })
}

/// Parse arguments, dispatch, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match dispatch(cli.command, &mut out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            exit_code(&e)
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Estimate {
            method,
            data,
            rescale_pseudo,
            alpha_init,
            beta_init,
            convention,
            fixed_alpha,
            fixed_beta,
        } => {
            let text = read_input(&data)?;
            let initial = match (alpha_init, beta_init) {
                (Some(a), Some(b)) => Some(TransformedGumbelParams::new(a, b)?),
                _ => None,
            };
            let fixed = match (fixed_alpha, fixed_beta) {
                (_, Some(b)) => FixedParameter::Beta(b),
                (Some(a), None) => FixedParameter::Alpha(a),
                (None, None) => FixedParameter::Alpha(0.5),
            };
            let options = EstimateOptions { method, rescale_pseudo, initial, convention, fixed };
            let (mut value, code) = estimate_from_csv(&text, &options)?;
            round_json(&mut value);
            writeln!(out, "{}", serde_json::to_string_pretty(&value).map_err(|e| Error::Io(e.into()))?)?;
            Ok(code)
        }
        Command::Simulate { config, replications, seed, out: out_dir, threads, timing, sequential } => {
            let mut cfg = McConfig::load(&config)?;
            if let Some(n) = replications {
                cfg.replications = n;
            }
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if let Some(dir) = out_dir {
                cfg.output_path = dir;
            }
            cfg.threads = threads;
            cfg.record_timing = timing;
            if sequential {
                cfg.execution = Execution::Sequential;
            }
            let study = run_study(&cfg)?;
            write!(out, "{}", study.table)?;
            Ok(EXIT_OK)
        }
        Command::Calibrate { tau, alpha } => {
            let p = calibrate_params(tau, alpha)?;
            let mut value = json!({ "tau": tau, "alpha": p.alpha, "beta": p.beta });
            round_json(&mut value);
            writeln!(out, "{value}")?;
            Ok(EXIT_OK)
        }
        Command::Sample { alpha, beta, n, seed, out: path } => {
            let p = TransformedGumbelParams::new(alpha, beta)?;
            let s = sample_archimedean_bivariate(&p.generator(), n, SeededRng::new(seed))?;
            let mut text = String::with_capacity(n * 28);
            text.push_str("u1,u2\n");
            for (u, v) in s.column(0).iter().zip(s.column(1)) {
                text.push_str(&fmt_sig(*u));
                text.push(',');
                text.push_str(&fmt_sig(*v));
                text.push('\n');
            }
            match path {
                Some(p) => write_atomic(&p, text.as_bytes())?,
                None => out.write_all(text.as_bytes())?,
            }
            Ok(EXIT_OK)
        }
    }
}

fn read_input(path: &PathBuf) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        Ok(std::fs::read_to_string(path)?)
    }
}

/// Parse comma-separated numeric rows. A first row that is not numeric is
/// taken as a header; any later non-numeric field is an error.
pub fn parse_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (index, record) in reader.records().enumerate() {
        let line = index + 1;
        let record = record.map_err(|e| Error::Parse { line, message: e.to_string() })?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if index == 0 => continue,
            Err(e) => return Err(Error::Parse { line, message: format!("non-numeric field: {e}") }),
        };
        if row.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parse { line, message: "non-finite value".into() });
        }
        match width {
            None => {
                if row.len() < 2 {
                    return Err(Error::Parse {
                        line,
                        message: format!("need at least 2 columns, found {}", row.len()),
                    });
                }
                width = Some(row.len());
            }
            Some(w) if w != row.len() => {
                return Err(Error::Parse { line, message: format!("expected {w} fields, found {}", row.len()) });
            }
            _ => {}
        }
        rows.push(row);
    }
    if rows.len() < 2 {
        return Err(Error::Parse { line: rows.len() + 1, message: "need at least 2 data rows".into() });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy)]
pub struct EstimateOptions {
    pub method: Method,
    pub rescale_pseudo: bool,
    pub initial: Option<TransformedGumbelParams>,
    pub convention: MomentConvention,
    pub fixed: FixedParameter,
}

fn pair(p: [f64; 2]) -> Value {
    json!({ "alpha": p[0], "beta": p[1] })
}

/// The `estimate` pipeline on CSV text: JSON report and exit code.
pub fn estimate_from_csv(text: &str, options: &EstimateOptions) -> Result<(Value, i32)> {
    let rows = parse_csv(text)?;
    let raw = RawSample::from_rows(&rows)?;
    let mut pseudo = pseudo_observations(&raw);
    if options.rescale_pseudo {
        pseudo = pseudo.rescaled();
    }
    let n = pseudo.n();
    let d = pseudo.d();
    let mut warnings = Vec::new();
    if pseudo.ties_present() {
        warnings.push("ties present in the data; ranks use the largest rank of each tie group".to_string());
    }
    let moments = empirical_moments_with(&pseudo, 2, options.convention, Execution::default());
    let moments_json = json!({ "m1": moments.get(1), "m2": moments.get(2) });

    if d > 2 {
        warnings.push(format!("d = {d}: parameter estimation is bivariate only; reporting moments"));
        let value = json!({
            "n": n,
            "d": d,
            "moments": moments_json,
            "warnings": warnings,
        });
        return Ok((value, EXIT_OK));
    }

    let tau_hat = empirical_tau(&pseudo)?;
    let rho_hat = empirical_rho(&pseudo)?;
    let initial = options.initial.unwrap_or_else(|| default_initial(tau_hat));
    let mut report: EstimateReport = match options.method {
        Method::Cm => cm_estimate_closed_form(&moments)?,
        Method::Pml => pml_estimate(&pseudo, initial)?,
        Method::TauRhoInv => tau_rho_inversion(&pseudo, initial)?,
        Method::TauInv => tau_inversion(&pseudo, options.fixed)?,
    };
    if options.method == Method::Cm {
        if report.clamped() {
            warnings.push(format!(
                "raw estimate ({}, {}) outside alpha > 0, beta >= 1; reporting the clamped value",
                fmt_sig(report.raw[0]),
                fmt_sig(report.raw[1])
            ));
        }
        match asymptotic_covariance(report.params, 2) {
            Ok(v) => report.covariance = Some(v.covariance(n)),
            Err(e) => warnings.push(format!("no standard errors: {e}")),
        }
    }
    let nonconverged = !report.converged && !(options.method == Method::Cm && report.clamped());
    if nonconverged {
        warnings.push("estimator did not converge".to_string());
    }
    let value = json!({
        "method": report.method,
        "n": n,
        "d": d,
        "estimate": pair(report.params.as_array()),
        "raw_estimate": pair(report.raw),
        "standard_errors": report.standard_errors().map(pair),
        "covariance": report.covariance,
        "moments": moments_json,
        "moment_convention": options.convention,
        "tau_hat": tau_hat,
        "rho_hat": rho_hat,
        "converged": report.converged,
        "iterations": report.iterations,
        "warnings": warnings,
        "diagnostics": report.diagnostics,
    });
    Ok((value, if nonconverged { EXIT_ESTIMATOR } else { EXIT_OK }))
}
