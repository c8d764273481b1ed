use serde::{Deserialize, Serialize};

use super::solver::{damped_newton, NewtonOptions};
use super::{EstimateReport, Method, ALPHA_FLOOR};
use crate::copula::{tau_of_params, RhoRule, TransformedGumbelParams};
use crate::empirical::{empirical_rho, empirical_tau, PseudoSample};
use crate::error::{Error, Result};

const BISECTION_TOLERANCE: f64 = 1e-10;
const BRACKET_LIMIT: f64 = 1e12;
const TAU_RHO_TOLERANCE: f64 = 1e-8;
const PARAMETER_CAP: f64 = 1e4;

/// Which parameter is held fixed when inverting τ alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FixedParameter {
    Alpha(f64),
    Beta(f64),
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    // f is increasing with f(lo) < 0 ≤ f(hi).
    for _ in 0..400 {
        if hi - lo <= BISECTION_TOLERANCE {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solve τ(α, β) = τ̂ in the free parameter.
pub fn invert_tau(tau_hat: f64, fixed: FixedParameter) -> Result<TransformedGumbelParams> {
    if !tau_hat.is_finite() || tau_hat >= 1.0 {
        return Err(Error::OutOfRange(format!("tau = {tau_hat} is not below 1")));
    }
    match fixed {
        FixedParameter::Alpha(alpha) => {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(Error::InvalidParams(format!("fixed alpha must be > 0, got {alpha}")));
            }
            let floor = tau_of_params(TransformedGumbelParams { alpha, beta: 1.0 });
            if tau_hat < floor {
                return Err(Error::OutOfRange(format!(
                    "tau = {tau_hat} is below {floor}, the smallest value reachable with alpha = {alpha}"
                )));
            }
            let f = |beta: f64| tau_of_params(TransformedGumbelParams { alpha, beta }) - tau_hat;
            let mut hi = 2.0;
            while f(hi) < 0.0 {
                hi *= 2.0;
                if hi > BRACKET_LIMIT {
                    return Err(Error::OutOfRange(format!("tau = {tau_hat} needs beta above {BRACKET_LIMIT:e}")));
                }
            }
            let beta = if f(1.0) >= 0.0 { 1.0 } else { bisect(f, 1.0, hi) };
            TransformedGumbelParams::new(alpha, beta)
        }
        FixedParameter::Beta(beta) => {
            if !(beta >= 1.0 && beta.is_finite()) {
                return Err(Error::InvalidParams(format!("fixed beta must be >= 1, got {beta}")));
            }
            let floor = 1.0 - 1.0 / beta;
            if tau_hat <= floor {
                return Err(Error::OutOfRange(format!(
                    "tau = {tau_hat} must exceed {floor} when beta = {beta} (alpha > 0)"
                )));
            }
            let f = |alpha: f64| tau_of_params(TransformedGumbelParams { alpha, beta }) - tau_hat;
            let mut hi = 1.0;
            while f(hi) < 0.0 {
                hi *= 2.0;
                if hi > BRACKET_LIMIT {
                    return Err(Error::OutOfRange(format!("tau = {tau_hat} needs alpha above {BRACKET_LIMIT:e}")));
                }
            }
            let alpha = bisect(f, 0.0, hi);
            if alpha <= 0.0 {
                return Err(Error::OutOfRange(format!("tau = {tau_hat} maps to the alpha = 0 boundary")));
            }
            TransformedGumbelParams::new(alpha, beta)
        }
    }
}

/// τ-inversion estimate with one parameter held fixed.
pub fn tau_inversion(pseudo: &PseudoSample, fixed: FixedParameter) -> Result<EstimateReport> {
    let tau_hat = empirical_tau(pseudo)?;
    let params = invert_tau(tau_hat, fixed)?;
    let mut report = EstimateReport::new(Method::TauInv, params.as_array());
    report.diagnostics.push(format!("empirical tau = {tau_hat}"));
    Ok(report)
}

/// Default starting point: τ-inversion with α = 0.5, or with β = 1 when τ̂
/// is too small for α = 0.5.
pub fn default_initial(tau_hat: f64) -> TransformedGumbelParams {
    invert_tau(tau_hat, FixedParameter::Alpha(0.5))
        .or_else(|_| invert_tau(tau_hat, FixedParameter::Beta(1.0)))
        .unwrap_or(TransformedGumbelParams { alpha: 0.5, beta: 1.6 })
}

/// (τ, ρ)-inversion: solve τ(α, β) = τ̂ and ρ(α, β) = ρ̂ by damped Newton.
///
/// Fails with an out-of-range error when τ̂ ∉ (0, 1) or |ρ̂| ≥ 1. A ρ̂ that no
/// admissible parameter attains for the given τ̂ yields `converged == false`
/// and the closest iterate.
pub fn tau_rho_inversion(pseudo: &PseudoSample, initial: TransformedGumbelParams) -> Result<EstimateReport> {
    let tau_hat = empirical_tau(pseudo)?;
    let rho_hat = empirical_rho(pseudo)?;
    let mut report = invert_tau_rho(tau_hat, rho_hat, initial)?;
    report.diagnostics.push(format!("empirical tau = {tau_hat}, empirical rho = {rho_hat}"));
    Ok(report)
}

/// Solve (τ(θ), ρ(θ)) = (τ̂, ρ̂) from `initial`.
pub fn invert_tau_rho(tau_hat: f64, rho_hat: f64, initial: TransformedGumbelParams) -> Result<EstimateReport> {
    if !(tau_hat > 0.0 && tau_hat < 1.0) {
        return Err(Error::OutOfRange(format!("tau = {tau_hat} outside (0, 1)")));
    }
    if rho_hat.is_nan() || rho_hat.abs() >= 1.0 {
        return Err(Error::OutOfRange(format!("rho = {rho_hat} outside (-1, 1)")));
    }
    let rule = RhoRule::default();
    let residual = |x: &[f64]| -> Result<Vec<f64>> {
        let theta = TransformedGumbelParams { alpha: x[0], beta: x[1] };
        Ok(vec![tau_of_params(theta) - tau_hat, rule.rho(theta) - rho_hat])
    };
    let project = |x: &[f64]| {
        vec![x[0].clamp(ALPHA_FLOOR, PARAMETER_CAP), x[1].clamp(1.0, PARAMETER_CAP)]
    };
    let options = NewtonOptions { tolerance: TAU_RHO_TOLERANCE, max_iterations: 60, fd_step: 1e-5 };
    let out = damped_newton(residual, project, &initial.as_array(), options)?;
    let mut report = EstimateReport::new(Method::TauRhoInv, [out.x[0], out.x[1]]);
    report.iterations = out.iterations;
    report.converged = out.converged;
    if !out.converged {
        report.diagnostics.push(format!(
            "(tau, rho) = ({tau_hat}, {rho_hat}) not attained; residual {:e} at the returned point",
            out.residual_norm()
        ));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::rho_of_params_tol;

    #[test]
    fn tau_inversion_alpha_fixed() {
        let p = invert_tau(0.5, FixedParameter::Alpha(0.5)).unwrap();
        assert!((p.beta - 1.6).abs() < 1e-9);
    }

    #[test]
    fn tau_inversion_beta_fixed() {
        let p = invert_tau(0.8, FixedParameter::Beta(3.45)).unwrap();
        let expected = 2.0 / (3.45 * 0.2) - 2.0;
        assert!((p.alpha - expected).abs() < 1e-9);
        assert!((p.alpha - 0.9).abs() < 0.002);
    }

    #[test]
    fn tau_inversion_boundaries() {
        assert!(matches!(invert_tau(0.0, FixedParameter::Beta(1.0)), Err(Error::OutOfRange(_))));
        assert!(matches!(invert_tau(0.1, FixedParameter::Alpha(0.5)), Err(Error::OutOfRange(_))));
        assert!(matches!(invert_tau(1.0, FixedParameter::Alpha(0.5)), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn tau_rho_round_trip() {
        let theta = TransformedGumbelParams::new(0.5, 1.6).unwrap();
        let rho = rho_of_params_tol(theta, 1e-10).unwrap();
        // ρ is U-shaped along the τ contour, so the system has a second root
        // near (1.36, 1.19); start on the branch of θ.
        let init = TransformedGumbelParams::new(0.3, 1.8).unwrap();
        let r = invert_tau_rho(tau_of_params(theta), rho, init).unwrap();
        assert!(r.converged, "{r:?}");
        assert!((r.params.alpha - 0.5).abs() < 1e-5, "{r:?}");
        assert!((r.params.beta - 1.6).abs() < 1e-5, "{r:?}");
    }

    #[test]
    fn tau_rho_frechet_corner_is_out_of_range() {
        let init = TransformedGumbelParams::new(0.5, 1.6).unwrap();
        assert!(matches!(invert_tau_rho(1.0, 1.0, init), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn unattainable_rho_reports_nonconvergence() {
        let init = TransformedGumbelParams::new(0.5, 1.6).unwrap();
        let r = invert_tau_rho(0.5, 0.1, init).unwrap();
        assert!(!r.converged);
        assert!(r.params.is_valid());
    }
}
