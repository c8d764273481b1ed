//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if a criterion not listed in `EXPECTED_FAILURES` fails.
//! Run with `cargo test --test acceptance`.

use std::time::Instant;

use copula_cm::copula::{moment_by_quadrature, moment_closed_form, transformed_gumbel_cdf, TransformedGumbelParams};
use copula_cm::empirical::{empirical_moments_with, empirical_tau, MomentConvention, MomentVector};
use copula_cm::estimators::{asymptotic_covariance, cm_estimate_closed_form, Method};
use copula_cm::exec::Execution;
use copula_cm::harness::{
    calibrate_params, fit_replication, replication_sample, run_cell, run_study, McCell, McCellResult, McConfig,
};
use copula_cm::sampling::{sample_archimedean_bivariate, SeededRng};

const MASTER_SEED: u64 = 20_240_601;
const N_REPLICATIONS: usize = 1000;

// Tolerances.
const MOMENT_AGREEMENT: f64 = 1e-8;
const ROUND_TRIP: f64 = 1e-10;
const CALIBRATION_DECIMALS: f64 = 5e-4;
const LABEL_ROW_TAU: f64 = 0.1007;
const LABEL_ROW_TOL: f64 = 5e-5;
const SAMPLER_TAU_TOL: f64 = 0.01;
const KS_95: f64 = 1.358;
const RMSE_REL: f64 = 0.15;
const BIAS_ABS: f64 = 0.03;
const RATE_BAND: (f64, f64) = (0.40, 0.60);
const COVERAGE_BAND: (f64, f64) = (0.90, 0.98);
const Z_975: f64 = 1.959_963_984_540_054;
const MEAN_SE_MULTIPLE: f64 = 3.0;

// Criteria that cannot hold as stated. The printed calibration table gives
// β = 1.137 and 3.450, but β = 2/((1 − τ)(2 + α)) is 1.13636 and 3.44828,
// so a three-decimal match is impossible. The line still reports FAIL; it
// just does not fail the run.
const EXPECTED_FAILURES: &[u32] = &[3];

struct Outcome {
    pass: bool,
    detail: String,
}

fn theta(alpha: f64, beta: f64) -> TransformedGumbelParams {
    TransformedGumbelParams::new(alpha, beta).unwrap()
}

fn within_rel(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target
}

fn c1_moments() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for &alpha in &[0.1, 0.5, 0.9] {
        for &beta in &[1.059, 1.6, 3.45] {
            let p = theta(alpha, beta);
            for k in 1..=5 {
                let q = moment_by_quadrature(k, &p.generator()).unwrap();
                worst = worst.max((q - moment_closed_form(k, p)).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: worst < MOMENT_AGREEMENT && secs < 5.0,
        detail: format!("max |closed form - quadrature| = {worst:.2e} over 45 values, {secs:.2}s"),
    }
}

fn c2_round_trip() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for i in 0..5 {
        for j in 0..5 {
            let alpha = 0.1 + 0.2 * i as f64;
            let beta = 1.05 + (4.0 - 1.05) * j as f64 / 4.0;
            let p = theta(alpha, beta);
            let m = MomentVector::new(vec![moment_closed_form(1, p), moment_closed_form(2, p)]);
            let est = cm_estimate_closed_form(&m).unwrap();
            worst = worst.max((est.raw[0] - alpha).abs()).max((est.raw[1] - beta).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: worst < ROUND_TRIP && secs < 1.0,
        detail: format!("max parameter error {worst:.2e} on 25 points, {secs:.3}s"),
    }
}

fn c3_calibration() -> Outcome {
    // (tau, alpha, beta as printed).
    let rows = [(0.2, 0.2, 1.137), (0.5, 0.5, 1.6), (0.8, 0.9, 3.45)];
    let mut pass = true;
    let mut parts = Vec::new();
    for &(tau, alpha, printed) in &rows {
        let beta = calibrate_params(tau, alpha).unwrap().beta;
        // Independent oracle: β = 2 / ((1 − τ)(2 + α)).
        let oracle = 2.0 / ((1.0 - tau) * (2.0 + alpha));
        let ok = (beta - printed).abs() < CALIBRATION_DECIMALS && (beta - oracle).abs() < 1e-12;
        pass &= ok;
        let mark = if ok { "ok" } else { "mismatch" };
        parts.push(format!("beta({tau},{alpha})={beta:.5} vs {printed} {mark}"));
    }
    let tau_row = theta(0.1, 1.059).tau();
    pass &= (tau_row - LABEL_ROW_TAU).abs() < LABEL_ROW_TOL;
    parts.push(format!("tau(0.1,1.059)={tau_row:.5}"));
    Outcome { pass, detail: parts.join(", ") }
}

/// Kolmogorov–Smirnov distance between the sample and a continuous df.
fn ks_distance(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
    })
}

fn c4_sampler() -> Outcome {
    let start = Instant::now();
    let n = 100_000;
    let band = KS_95 / (n as f64).sqrt();
    let mut pass = true;
    let mut parts = Vec::new();
    for (seed, &(alpha, beta, tau0)) in [(0.5, 1.6, 0.5), (0.9, 3.45, 0.8)].iter().enumerate() {
        let p = theta(alpha, beta);
        let sample = sample_archimedean_bivariate(&p.generator(), n, SeededRng::new(seed as u64 + 1)).unwrap();
        let tau_hat = empirical_tau(&sample).unwrap();
        let levels: Vec<f64> = (0..n)
            .map(|i| transformed_gumbel_cdf(&[sample.column(0)[i], sample.column(1)[i]], p).unwrap())
            .collect();
        // K(s) = s + (s − s^(α+1)) / (αβ), written out here rather than taken from the library.
        let ks = ks_distance(levels, |s| s + (s - s.powf(alpha + 1.0)) / (alpha * beta));
        let ok = (tau_hat - tau0).abs() <= SAMPLER_TAU_TOL && ks < band;
        pass &= ok;
        parts.push(format!("({alpha},{beta}): tau_hat={tau_hat:.4} KS={ks:.5}"));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 30.0;
    Outcome { pass, detail: format!("{}; band {band:.5}, {secs:.1}s", parts.join(", ")) }
}

fn cell(n: usize, estimator: Method) -> McCellResult {
    let c = McCell { theta0: theta(0.5, 1.6), n, estimator };
    run_cell(
        &c,
        N_REPLICATIONS,
        SeededRng::new(MASTER_SEED),
        MomentConvention::OffDiagonal,
        Execution::Parallel,
        false,
    )
}

fn c5_table2(n200: &McCellResult, n500: &McCellResult, secs: f64) -> Outcome {
    let checks = [
        within_rel(n200.rmse[0], 0.243, RMSE_REL),
        within_rel(n200.rmse[1], 0.180, RMSE_REL),
        n200.bias[0].abs() <= BIAS_ABS,
        n200.bias[1].abs() <= BIAS_ABS,
        within_rel(n500.rmse[0], 0.155, RMSE_REL),
        within_rel(n500.rmse[1], 0.117, RMSE_REL),
        secs < 20.0 * 60.0,
    ];
    Outcome {
        pass: checks.iter().all(|&c| c),
        detail: format!(
            "n=200 rmse=({:.3},{:.3}) vs (0.243,0.180), bias=({:+.3},{:+.3}); n=500 rmse=({:.3},{:.3}) vs (0.155,0.117); {secs:.1}s",
            n200.rmse[0], n200.rmse[1], n200.bias[0], n200.bias[1], n500.rmse[0], n500.rmse[1]
        ),
    }
}

fn c6_rate(n50: &McCellResult, n200: &McCellResult) -> Outcome {
    let ratio = [n200.rmse[0] / n50.rmse[0], n200.rmse[1] / n50.rmse[1]];
    let pass = ratio.iter().all(|r| (RATE_BAND.0..=RATE_BAND.1).contains(r));
    Outcome { pass, detail: format!("rmse(n=200)/rmse(n=50) = ({:.3}, {:.3})", ratio[0], ratio[1]) }
}

fn c7_ordering(cm: &McCellResult, tr: &McCellResult) -> Outcome {
    Outcome {
        pass: cm.rmse[0] < tr.rmse[0] && cm.rmse[1] < tr.rmse[1],
        detail: format!(
            "CM rmse=({:.3},{:.3}) vs tau-rho rmse=({:.3},{:.3}), tau-rho failures {:.1}%",
            cm.rmse[0],
            cm.rmse[1],
            tr.rmse[0],
            tr.rmse[1],
            100.0 * tr.failure_rate
        ),
    }
}

fn c8_normality() -> Outcome {
    let theta0 = theta(0.5, 1.6);
    let target = theta0.as_array();

    // Coverage of plug-in sandwich intervals at n = 500.
    let n = 500;
    let covered = Execution::Parallel.map_indexed(N_REPLICATIONS, |i| {
        let pseudo = replication_sample(theta0, n, MASTER_SEED, i as u64).unwrap();
        let moments = empirical_moments_with(&pseudo, 2, MomentConvention::OffDiagonal, Execution::Sequential);
        let Ok(report) = cm_estimate_closed_form(&moments) else { return [false, false] };
        let Ok(var) = asymptotic_covariance(report.params, 2) else { return [false, false] };
        let se = var.standard_errors(n);
        [0, 1].map(|j| (report.raw[j] - target[j]).abs() <= Z_975 * se[j])
    });
    let coverage = [0, 1].map(|j| covered.iter().filter(|c| c[j]).count() as f64 / N_REPLICATIONS as f64);
    let mut pass = coverage.iter().all(|c| (COVERAGE_BAND.0..=COVERAGE_BAND.1).contains(c));
    let mut detail = format!("CM 95% CI coverage at n=500: ({:.3}, {:.3})", coverage[0], coverage[1]);

    // Consistency of PML and (tau, rho)-inversion at n = 2000.
    for method in [Method::Pml, Method::TauRhoInv] {
        let reps = 50;
        let fits = Execution::Parallel.map_indexed(reps, |i| {
            let pseudo = replication_sample(theta0, 2000, MASTER_SEED, i as u64).unwrap();
            fit_replication(&pseudo, method, MomentConvention::OffDiagonal).ok().map(|r| r.raw)
        });
        let ok: Vec<[f64; 2]> = fits.into_iter().flatten().collect();
        let m = ok.len() as f64;
        let mut zs = [f64::NAN; 2];
        for j in 0..2 {
            let mean = ok.iter().map(|e| e[j]).sum::<f64>() / m;
            let var = ok.iter().map(|e| (e[j] - mean).powi(2)).sum::<f64>() / (m - 1.0);
            zs[j] = (mean - target[j]) / (var / m).sqrt();
        }
        let ok_method = ok.len() == reps && zs.iter().all(|z| z.abs() <= MEAN_SE_MULTIPLE);
        pass &= ok_method;
        detail.push_str(&format!(
            "; {method} n=2000 mean offset in MC SEs ({:+.2}, {:+.2}) over {} fits",
            zs[0],
            zs[1],
            ok.len()
        ));
    }
    Outcome { pass, detail }
}

fn c9_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
        replications = 24
        master_seed = 77
        [[cells]]
        alpha = 0.5
        beta = 1.6
        n = [40, 120]
        estimators = ["cm", "pml", "taurho"]
        [[cells]]
        alpha = 0.9
        tau = 0.8
        n = 60
        estimators = ["cm"]
    "#;
    let mut files = Vec::new();
    for (run, threads) in [1, 8, 1, 8].into_iter().enumerate() {
        let mut config = McConfig::parse(text).unwrap();
        config.threads = Some(threads);
        config.output_path = dir.path().join(format!("run{run}"));
        run_study(&config).unwrap();
        files.push(std::fs::read(config.output_path.join("results.csv")).unwrap());
    }
    let pass = files.windows(2).all(|w| w[0] == w[1]);
    Outcome {
        pass,
        detail: format!("4 runs (threads 1, 8, 1, 8), {} CSV bytes each, identical: {pass}", files[0].len()),
    }
}

fn main() {
    let mut outcomes: Vec<(u32, Outcome)> = Vec::new();
    let mut report = |id: u32, outcome: Outcome| {
        let status = match (outcome.pass, EXPECTED_FAILURES.contains(&id)) {
            (true, false) => "PASS",
            (true, true) => "PASS (listed as an expected failure)",
            (false, false) => "FAIL",
            (false, true) => "FAIL (expected)",
        };
        println!("criterion {id}: {status} {}", outcome.detail);
        outcomes.push((id, outcome));
    };

    report(1, c1_moments());
    report(2, c2_round_trip());
    report(3, c3_calibration());
    report(4, c4_sampler());

    let start = Instant::now();
    let cm50 = cell(50, Method::Cm);
    let cm200 = cell(200, Method::Cm);
    let cm500 = cell(500, Method::Cm);
    let table2_secs = start.elapsed().as_secs_f64();
    report(5, c5_table2(&cm200, &cm500, table2_secs));
    report(6, c6_rate(&cm50, &cm200));
    report(7, c7_ordering(&cm200, &cell(200, Method::TauRhoInv)));
    report(8, c8_normality());
    report(9, c9_determinism());

    let failed: Vec<u32> = outcomes.iter().filter(|(_, o)| !o.pass).map(|(id, _)| *id).collect();
    let unexpected: Vec<u32> = failed.iter().copied().filter(|id| !EXPECTED_FAILURES.contains(id)).collect();
    println!(
        "acceptance: {} of {} criteria passed; failed {failed:?}, unexpected {unexpected:?}",
        outcomes.len() - failed.len(),
        outcomes.len()
    );
    if !unexpected.is_empty() {
        std::process::exit(1);
    }
}
