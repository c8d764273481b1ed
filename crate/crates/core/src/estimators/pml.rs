use super::inversion::default_initial;
use super::{EstimateReport, Method};
use crate::copula::{log_density_from_logs, TransformedGumbelParams};
use crate::empirical::{empirical_tau, PseudoSample};
use crate::error::{Error, Result};

/// Coordinates of the search space (ln α, ln(β − 1)) beyond this bound are
/// treated as infeasible.
const WALL: f64 = 30.0;
const MIN_BETA_EXCESS: f64 = 1e-10;

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    /// Converged once every vertex is within this ∞-distance of the best one.
    pub diameter_tolerance: f64,
    pub max_iterations: usize,
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions { diameter_tolerance: 1e-8, max_iterations: 5000, initial_step: 0.3 }
    }
}

struct LogData {
    lu: Vec<f64>,
    lv: Vec<f64>,
}

impl LogData {
    /// ln of the pseudo-observations, with values at 1 pulled back to 1 − 1/(2n)
    /// (and values at 0 pushed up to 1/(2n)).
    fn new(pseudo: &PseudoSample) -> Self {
        let n = pseudo.n() as f64;
        let lo = 0.5 / n;
        let hi = 1.0 - 0.5 / n;
        let logs = |c: &[f64]| c.iter().map(|&x| x.clamp(lo, hi).ln()).collect();
        LogData { lu: logs(pseudo.column(0)), lv: logs(pseudo.column(1)) }
    }

    fn log_likelihood(&self, params: TransformedGumbelParams) -> f64 {
        self.lu.iter().zip(&self.lv).map(|(&a, &b)| log_density_from_logs(a, b, params)).sum()
    }
}

fn to_params(x: &[f64; 2]) -> TransformedGumbelParams {
    TransformedGumbelParams { alpha: x[0].exp(), beta: 1.0 + x[1].exp() }
}

fn to_search(p: TransformedGumbelParams) -> [f64; 2] {
    [p.alpha.ln(), (p.beta - 1.0).max(MIN_BETA_EXCESS).ln()]
}

/// Σ log c_θ(Û_i) with boundary pullback of the pseudo-observations.
pub fn pseudo_log_likelihood(pseudo: &PseudoSample, params: TransformedGumbelParams) -> f64 {
    LogData::new(pseudo).log_likelihood(params)
}

/// Pseudo maximum likelihood with default search settings.
pub fn pml_estimate(pseudo: &PseudoSample, initial: TransformedGumbelParams) -> Result<EstimateReport> {
    pml_estimate_with(pseudo, initial, NelderMeadOptions::default())
}

/// Maximise the pseudo log-likelihood by Nelder–Mead in (ln α, ln(β − 1)).
///
/// A non-finite log-likelihood makes the point infeasible rather than
/// aborting the search. If the initial point itself is infeasible the search
/// restarts from the τ-inversion warm start.
pub fn pml_estimate_with(
    pseudo: &PseudoSample,
    initial: TransformedGumbelParams,
    options: NelderMeadOptions,
) -> Result<EstimateReport> {
    if pseudo.d() != 2 {
        return Err(Error::Domain(format!("pseudo likelihood needs d = 2, got {}", pseudo.d())));
    }
    if !initial.is_valid() {
        return Err(Error::InvalidParams(format!("{initial:?}")));
    }
    let data = LogData::new(pseudo);
    let objective = |x: &[f64; 2]| {
        if x.iter().any(|v| !v.is_finite() || v.abs() > WALL) {
            return f64::INFINITY;
        }
        let ll = data.log_likelihood(to_params(x));
        if ll.is_finite() {
            -ll
        } else {
            f64::INFINITY
        }
    };

    let mut diagnostics = Vec::new();
    let mut start = to_search(initial);
    if !objective(&start).is_finite() {
        let warm = default_initial(empirical_tau(pseudo).unwrap_or(0.5));
        diagnostics.push(format!(
            "log-likelihood not finite at the initial point ({}, {}); restarted from ({}, {})",
            initial.alpha, initial.beta, warm.alpha, warm.beta
        ));
        start = to_search(warm);
    }

    let out = nelder_mead(objective, start, options);
    let params = to_params(&out.x);
    let mut report = EstimateReport::new(Method::Pml, params.as_array());
    report.iterations = out.iterations;
    report.converged = out.converged && out.value.is_finite();
    report.diagnostics = diagnostics;
    report.diagnostics.push(format!("pseudo log-likelihood = {}", -out.value));
    if !report.converged {
        report.diagnostics.push(format!(
            "simplex did not contract below {:e} within {} iterations",
            options.diameter_tolerance, out.iterations
        ));
    }
    Ok(report)
}

struct SimplexOutcome {
    x: [f64; 2],
    value: f64,
    converged: bool,
    iterations: usize,
}

fn nelder_mead<F: Fn(&[f64; 2]) -> f64>(f: F, x0: [f64; 2], options: NelderMeadOptions) -> SimplexOutcome {
    let h = options.initial_step;
    let mut pts = [x0, [x0[0] + h, x0[1]], [x0[0], x0[1] + h]];
    let mut vals = pts.map(|p| f(&p));
    let lerp = |a: &[f64; 2], b: &[f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];

    let mut iterations = 0;
    loop {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
        pts = order.map(|i| pts[i]);
        vals = order.map(|i| vals[i]);

        let diameter = pts[1..]
            .iter()
            .map(|p| (p[0] - pts[0][0]).abs().max((p[1] - pts[0][1]).abs()))
            .fold(0.0, f64::max);
        if diameter < options.diameter_tolerance || iterations >= options.max_iterations {
            return SimplexOutcome {
                x: pts[0],
                value: vals[0],
                converged: diameter < options.diameter_tolerance,
                iterations,
            };
        }
        iterations += 1;

        let centroid = [0.5 * (pts[0][0] + pts[1][0]), 0.5 * (pts[0][1] + pts[1][1])];
        let worst = pts[2];
        let reflected = lerp(&centroid, &worst, -1.0);
        let fr = f(&reflected);
        if fr < vals[0] {
            let expanded = lerp(&centroid, &worst, -2.0);
            let fe = f(&expanded);
            if fe < fr {
                pts[2] = expanded;
                vals[2] = fe;
            } else {
                pts[2] = reflected;
                vals[2] = fr;
            }
            continue;
        }
        if fr < vals[1] {
            pts[2] = reflected;
            vals[2] = fr;
            continue;
        }
        let (contracted, limit) = if fr < vals[2] {
            (lerp(&centroid, &reflected, 0.5), fr)
        } else {
            (lerp(&centroid, &worst, 0.5), vals[2])
        };
        let fc = f(&contracted);
        if fc < limit {
            pts[2] = contracted;
            vals[2] = fc;
            continue;
        }
        for i in 1..3 {
            pts[i] = lerp(&pts[0], &pts[i], 0.5);
            vals[i] = f(&pts[i]);
        }
    }
}
