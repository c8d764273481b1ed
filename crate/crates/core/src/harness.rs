//! Seeded Monte Carlo study of the estimators: bias and RMSE per
//! (estimator, θ₀, n) cell.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::copula::{tau_of_params, TransformedGumbelParams};
use crate::empirical::{
    empirical_moments_with, empirical_tau, pseudo_observations, MomentConvention, PseudoSample, RawSample,
};
use crate::error::{Error, Result};
use crate::estimators::{cm_estimate_closed_form, default_initial, pml_estimate, tau_rho_inversion, Method};
use crate::exec::{with_threads, Execution};
use crate::format::fmt_sig;
use crate::sampling::{derive_replication_rng, sample_archimedean_bivariate, SeededRng};

pub const DEFAULT_REPLICATIONS: usize = 1000;
pub const DEFAULT_MASTER_SEED: u64 = 20_240_601;
pub const MIN_SAMPLE_SIZE: usize = 10;

pub const CSV_HEADER: [&str; 12] = [
    "estimator",
    "alpha0",
    "beta0",
    "tau0",
    "n",
    "N",
    "bias_alpha",
    "rmse_alpha",
    "bias_beta",
    "rmse_beta",
    "failure_rate",
    "seconds",
];

/// β such that τ(α, β) = τ_target, from τ = 1 − 2/(β(2+α)).
pub fn calibrate_params(tau_target: f64, alpha: f64) -> Result<TransformedGumbelParams> {
    if !(tau_target > 0.0 && tau_target < 1.0) {
        return Err(Error::OutOfRange(format!("tau = {tau_target} outside (0, 1)")));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParams(format!("alpha must be > 0, got {alpha}")));
    }
    let beta = 2.0 / ((1.0 - tau_target) * (2.0 + alpha));
    if beta < 1.0 {
        return Err(Error::OutOfRange(format!(
            "tau = {tau_target} is unattainable with alpha = {alpha} (needs beta = {beta} < 1)"
        )));
    }
    TransformedGumbelParams::new(alpha, beta)
}

/// One simulation cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McCell {
    pub theta0: TransformedGumbelParams,
    pub n: usize,
    pub estimator: Method,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub cells: Vec<McCell>,
    pub replications: usize,
    pub master_seed: u64,
    /// Directory receiving `results.csv` and `table.txt`.
    pub output_path: PathBuf,
    pub moment_convention: MomentConvention,
    /// Fill the `seconds` column. Off by default so reruns are byte-identical.
    pub record_timing: bool,
    pub execution: Execution,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    replications: Option<usize>,
    master_seed: Option<u64>,
    output_path: Option<PathBuf>,
    moment_convention: Option<MomentConvention>,
    record_timing: Option<bool>,
    cells: Vec<CellSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CellSpec {
    alpha: f64,
    beta: Option<f64>,
    tau: Option<f64>,
    n: SizeSpec,
    estimators: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum SizeSpec {
    One(usize),
    Many(Vec<usize>),
}

impl McConfig {
    /// Parse a config in JSON (text starting with `{`) or TOML.
    pub fn parse(text: &str) -> Result<Self> {
        let file: ConfigFile = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        };
        let mut cells = Vec::new();
        for (i, spec) in file.cells.iter().enumerate() {
            let theta0 = match (spec.beta, spec.tau) {
                (Some(beta), None) => TransformedGumbelParams::new(spec.alpha, beta),
                (None, Some(tau)) => calibrate_params(tau, spec.alpha),
                _ => {
                    return Err(Error::Config(format!("cell {i}: give exactly one of beta and tau")));
                }
            }
            .map_err(|e| Error::Config(format!("cell {i}: {e}")))?;
            let sizes = match &spec.n {
                SizeSpec::One(n) => vec![*n],
                SizeSpec::Many(ns) => ns.clone(),
            };
            let names = spec.estimators.clone().unwrap_or_else(|| vec!["cm".into()]);
            let mut methods = Vec::new();
            for name in &names {
                let m: Method = name.parse().map_err(|e| Error::Config(format!("cell {i}: {e}")))?;
                if m == Method::TauInv {
                    return Err(Error::Config(format!(
                        "cell {i}: the study supports CM, PML and TAU_RHO_INV"
                    )));
                }
                methods.push(m);
            }
            for &n in &sizes {
                for &estimator in &methods {
                    cells.push(McCell { theta0, n, estimator });
                }
            }
        }
        let config = McConfig {
            cells,
            replications: file.replications.unwrap_or(DEFAULT_REPLICATIONS),
            master_seed: file.master_seed.unwrap_or(DEFAULT_MASTER_SEED),
            output_path: file.output_path.unwrap_or_else(|| PathBuf::from("results")),
            moment_convention: file.moment_convention.unwrap_or(MomentConvention::OffDiagonal),
            record_timing: file.record_timing.unwrap_or(false),
            execution: Execution::default(),
            threads: None,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        if self.cells.is_empty() {
            return Err(Error::Config("no cells".into()));
        }
        for cell in &self.cells {
            if cell.n < MIN_SAMPLE_SIZE {
                return Err(Error::Config(format!("sample size {} is below {MIN_SAMPLE_SIZE}", cell.n)));
            }
            if !cell.theta0.is_valid() {
                return Err(Error::Config(format!("invalid parameters {:?}", cell.theta0)));
            }
        }
        Ok(())
    }
}

/// Outcome of one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    /// Raw (unclamped) estimate, or `None` when the estimator failed.
    pub estimate: Option<[f64; 2]>,
    pub converged: bool,
}

/// Aggregates for one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McCellResult {
    pub estimator: Method,
    pub theta0: TransformedGumbelParams,
    pub tau0: f64,
    pub n: usize,
    pub replications: usize,
    /// Mean of the raw estimates over successful replications.
    pub mean: [f64; 2],
    pub bias: [f64; 2],
    pub rmse: [f64; 2],
    pub failure_rate: f64,
    /// Fraction of successful replications flagged as not converged.
    pub nonconverged_rate: f64,
    pub seconds: Option<f64>,
}

/// The sample of replication `index`: pseudo-observations of n draws from θ₀.
pub fn replication_sample(
    theta0: TransformedGumbelParams,
    n: usize,
    master_seed: u64,
    index: u64,
) -> Result<PseudoSample> {
    let rng = derive_replication_rng(SeededRng::new(master_seed), index);
    let draws = sample_archimedean_bivariate(&theta0.generator(), n, rng)?;
    let raw = RawSample::from_columns(vec![draws.column(0).to_vec(), draws.column(1).to_vec()])?;
    Ok(pseudo_observations(&raw))
}

/// Fit `method` to a pseudo sample as the harness does.
pub fn fit_replication(
    pseudo: &PseudoSample,
    method: Method,
    convention: MomentConvention,
) -> Result<crate::estimators::EstimateReport> {
    match method {
        Method::Cm => {
            let moments = empirical_moments_with(pseudo, 2, convention, Execution::Sequential);
            cm_estimate_closed_form(&moments)
        }
        Method::Pml => pml_estimate(pseudo, default_initial(empirical_tau(pseudo)?)),
        Method::TauRhoInv => tau_rho_inversion(pseudo, default_initial(empirical_tau(pseudo)?)),
        Method::TauInv => Err(Error::Config("TAU_INV is not part of the study".into())),
    }
}

/// Run every replication of a cell; results are in replication order.
pub fn run_replications(
    cell: &McCell,
    replications: usize,
    master_seed: u64,
    convention: MomentConvention,
    execution: Execution,
) -> Vec<Replication> {
    execution.map_indexed(replications, |i| {
        let fit = replication_sample(cell.theta0, cell.n, master_seed, i as u64)
            .and_then(|pseudo| fit_replication(&pseudo, cell.estimator, convention));
        match fit {
            Ok(report) if report.raw.iter().all(|v| v.is_finite()) => {
                Replication { estimate: Some(report.raw), converged: report.converged }
            }
            _ => Replication { estimate: None, converged: false },
        }
    })
}

/// Bias, RMSE and failure rate over replications, summed in index order.
pub fn aggregate(cell: &McCell, replications: &[Replication], seconds: Option<f64>) -> McCellResult {
    let theta = cell.theta0.as_array();
    let ok: Vec<[f64; 2]> = replications.iter().filter_map(|r| r.estimate).collect();
    let count = ok.len() as f64;
    let mut mean = [f64::NAN; 2];
    let mut bias = [f64::NAN; 2];
    let mut rmse = [f64::NAN; 2];
    if !ok.is_empty() {
        for j in 0..2 {
            let sum: f64 = ok.iter().map(|e| e[j]).sum();
            let sq: f64 = ok.iter().map(|e| (e[j] - theta[j]).powi(2)).sum();
            mean[j] = sum / count;
            bias[j] = mean[j] - theta[j];
            rmse[j] = (sq / count).sqrt();
        }
    }
    let total = replications.len() as f64;
    let nonconverged = replications.iter().filter(|r| r.estimate.is_some() && !r.converged).count();
    McCellResult {
        estimator: cell.estimator,
        theta0: cell.theta0,
        tau0: tau_of_params(cell.theta0),
        n: cell.n,
        replications: replications.len(),
        mean,
        bias,
        rmse,
        failure_rate: (total - count) / total,
        nonconverged_rate: if ok.is_empty() { 0.0 } else { nonconverged as f64 / count },
        seconds,
    }
}

/// Run one cell with `replications` draws from streams of `rng.master_seed`.
pub fn run_cell(
    cell: &McCell,
    replications: usize,
    rng: SeededRng,
    convention: MomentConvention,
    execution: Execution,
    record_timing: bool,
) -> McCellResult {
    let start = Instant::now();
    let reps = run_replications(cell, replications, rng.master_seed, convention, execution);
    let seconds = record_timing.then(|| start.elapsed().as_secs_f64());
    aggregate(cell, &reps, seconds)
}

#[derive(Debug, Clone)]
pub struct StudyOutput {
    pub results: Vec<McCellResult>,
    pub csv: String,
    pub table: String,
}

/// Run all cells (replications in parallel under `config.execution`) and
/// render the CSV and text table. Nothing is written to disk.
pub fn run_study_in_memory(config: &McConfig) -> Result<StudyOutput> {
    config.validate()?;
    let rng = SeededRng::new(config.master_seed);
    let results: Vec<McCellResult> = with_threads(config.threads, || {
        config
            .cells
            .iter()
            .map(|cell| {
                run_cell(
                    cell,
                    config.replications,
                    rng,
                    config.moment_convention,
                    config.execution,
                    config.record_timing,
                )
            })
            .collect()
    });
    let csv = render_csv(&results)?;
    let table = render_table(&results);
    Ok(StudyOutput { results, csv, table })
}

/// Run the study and write `results.csv` and `table.txt` into
/// `config.output_path`, each via a temporary file and a rename.
pub fn run_study(config: &McConfig) -> Result<StudyOutput> {
    let output = run_study_in_memory(config)?;
    fs::create_dir_all(&config.output_path)?;
    write_atomic(&config.output_path.join("results.csv"), output.csv.as_bytes())?;
    write_atomic(&config.output_path.join("table.txt"), output.table.as_bytes())?;
    Ok(output)
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(std::io::Error::other(format!("{} has no file name", path.display()))))?;
    let tmp = path.with_file_name(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn render_csv(results: &[McCellResult]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    writer.write_record(CSV_HEADER).map_err(io)?;
    for r in results {
        writer
            .write_record([
                r.estimator.tag().to_string(),
                fmt_sig(r.theta0.alpha),
                fmt_sig(r.theta0.beta),
                fmt_sig(r.tau0),
                r.n.to_string(),
                r.replications.to_string(),
                fmt_sig(r.bias[0]),
                fmt_sig(r.rmse[0]),
                fmt_sig(r.bias[1]),
                fmt_sig(r.rmse[1]),
                fmt_sig(r.failure_rate),
                r.seconds.map(fmt_sig).unwrap_or_default(),
            ])
            .map_err(io)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(std::io::Error::other(e)))
}

/// Blocks by n; rows are estimator × parameter; columns are θ₀ with
/// (Bias, RMSE) pairs.
pub fn render_table(results: &[McCellResult]) -> String {
    let mut thetas: Vec<TransformedGumbelParams> = Vec::new();
    let mut sizes: Vec<usize> = Vec::new();
    let mut methods: Vec<Method> = Vec::new();
    for r in results {
        if !thetas.contains(&r.theta0) {
            thetas.push(r.theta0);
        }
        if !sizes.contains(&r.n) {
            sizes.push(r.n);
        }
        if !methods.contains(&r.estimator) {
            methods.push(r.estimator);
        }
    }
    const COL: usize = 21;
    let mut out = String::new();
    let mut header = format!("{:<20}", "");
    let mut sub = format!("{:<20}", "");
    for t in &thetas {
        let label = format!("tau={:.4} ({}, {})", tau_of_params(*t), fmt_sig(t.alpha), fmt_sig(t.beta));
        let _ = write!(header, "{label:>width$}", width = COL + 2);
        let _ = write!(sub, "{:>12}{:>11}", "Bias", "RMSE");
    }
    for &n in &sizes {
        let _ = writeln!(out, "n = {n}");
        let _ = writeln!(out, "{header}");
        let _ = writeln!(out, "{sub}");
        for &m in &methods {
            for (j, name) in ["alpha", "beta"].iter().enumerate() {
                let lead = if j == 0 { m.tag() } else { "" };
                let mut line = format!("{lead:<13}{name:<7}");
                for t in &thetas {
                    match results.iter().find(|r| r.n == n && r.estimator == m && r.theta0 == *t) {
                        Some(r) => {
                            let _ = write!(line, "{:>12.4}{:>11.4}", r.bias[j], r.rmse[j]);
                        }
                        None => {
                            let _ = write!(line, "{:>12}{:>11}", "-", "-");
                        }
                    }
                }
                let _ = writeln!(out, "{}", line.trim_end());
            }
        }
        let failures: Vec<String> = results
            .iter()
            .filter(|r| r.n == n && r.failure_rate > 0.0)
            .map(|r| format!("{} at ({}, {}): {:.1}%", r.estimator, fmt_sig(r.theta0.alpha), fmt_sig(r.theta0.beta), 100.0 * r.failure_rate))
            .collect();
        if !failures.is_empty() {
            let _ = writeln!(out, "failures: {}", failures.join("; "));
        }
        out.push('\n');
    }
    out
}
