//! Estimators of (α, β): copula moments, τ-inversion, (τ, ρ)-inversion and
//! pseudo maximum likelihood, plus the sandwich covariance of the CM estimator.

use serde::{Deserialize, Serialize};

use crate::copula::TransformedGumbelParams;
use crate::empirical::MomentVector;

mod cm;
mod inversion;
mod pml;
pub mod solver;
mod variance;

pub use cm::{cm_estimate_closed_form, cm_estimate_generic, cm_estimate_newton, GenericFit};
pub use inversion::{default_initial, invert_tau, invert_tau_rho, tau_inversion, tau_rho_inversion, FixedParameter};
pub use pml::{pml_estimate, pml_estimate_with, pseudo_log_likelihood, NelderMeadOptions};
pub use variance::{asymptotic_covariance, VarianceComponents};

/// Smallest α reported when a raw estimate falls outside the admissible set.
pub const ALPHA_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "CM")]
    Cm,
    #[serde(rename = "TAU_INV")]
    TauInv,
    #[serde(rename = "TAU_RHO_INV")]
    TauRhoInv,
    #[serde(rename = "PML")]
    Pml,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Cm => "CM",
            Method::TauInv => "TAU_INV",
            Method::TauRhoInv => "TAU_RHO_INV",
            Method::Pml => "PML",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for Method {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().replace(['_', '-'], "").as_str() {
            "cm" => Ok(Method::Cm),
            "tau" | "tauinv" => Ok(Method::TauInv),
            "taurho" | "taurhoinv" | "rhotau" => Ok(Method::TauRhoInv),
            "pml" => Ok(Method::Pml),
            _ => Err(crate::Error::Config(format!("unknown estimator '{s}'"))),
        }
    }
}

/// Result of a single fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub method: Method,
    /// Admissible estimate (clamped into α > 0, β ≥ 1 if necessary).
    pub params: TransformedGumbelParams,
    /// Unclamped (α̂, β̂) as produced by the estimating equations.
    pub raw: [f64; 2],
    pub moments_used: Option<MomentVector>,
    /// Asymptotic covariance divided by n.
    pub covariance: Option<[[f64; 2]; 2]>,
    pub converged: bool,
    pub iterations: usize,
    pub diagnostics: Vec<String>,
}

impl EstimateReport {
    pub(crate) fn new(method: Method, raw: [f64; 2]) -> Self {
        let (params, clamped) = clamp_to_domain(raw);
        let mut report = EstimateReport {
            method,
            params,
            raw,
            moments_used: None,
            covariance: None,
            converged: !clamped,
            iterations: 0,
            diagnostics: Vec::new(),
        };
        if clamped {
            report.diagnostics.push(format!(
                "raw estimate (alpha, beta) = ({}, {}) lies outside alpha > 0, beta >= 1; clamped to ({}, {})",
                raw[0], raw[1], params.alpha, params.beta
            ));
        }
        report
    }

    /// Whether the raw estimate had to be clamped into the parameter set.
    pub fn clamped(&self) -> bool {
        self.raw != self.params.as_array()
    }

    /// Standard errors √diag(covariance), when a covariance is attached.
    pub fn standard_errors(&self) -> Option<[f64; 2]> {
        self.covariance.map(|c| [c[0][0].max(0.0).sqrt(), c[1][1].max(0.0).sqrt()])
    }
}

/// Project a raw estimate onto [`ALPHA_FLOOR`, ∞) × [1, ∞). Non-finite
/// coordinates are mapped to the floor as well.
pub(crate) fn clamp_to_domain(raw: [f64; 2]) -> (TransformedGumbelParams, bool) {
    let alpha = if raw[0].is_finite() { raw[0].max(ALPHA_FLOOR) } else { ALPHA_FLOOR };
    let beta = if raw[1].is_finite() { raw[1].max(1.0) } else { 1.0 };
    let params = TransformedGumbelParams { alpha, beta };
    (params, params.as_array() != raw)
}
