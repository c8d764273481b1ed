use serde::{Deserialize, Serialize};

use super::solver::{damped_newton, NewtonOptions};
use super::{EstimateReport, Method};
use crate::copula::{moment_by_quadrature_tol, ParametricFamily, TransformedGumbelFamily, TransformedGumbelParams};
use crate::empirical::MomentVector;
use crate::error::{Error, Result};

const SINGULAR_DENOMINATOR: f64 = 1e-12;
const GENERIC_QUADRATURE_TOLERANCE: f64 = 1e-11;

/// Closed-form CM estimate of the transformed Gumbel copula from (M̂₁, M̂₂):
///
/// α̂ = (8M̂₁ − 9M̂₂ − 1)/(1 − 4M̂₁ + 3M̂₂),
/// β̂ = (1 − 4M̂₁ + 3M̂₂)/((1 − 2M̂₁)(1 − 3M̂₂)).
pub fn cm_estimate_closed_form(moments: &MomentVector) -> Result<EstimateReport> {
    if moments.r() < 2 {
        return Err(Error::Domain(format!("need at least two moments, got {}", moments.r())));
    }
    let (m1, m2) = (moments.get(1), moments.get(2));
    if !(m1 > 0.0 && m1 < 1.0 && m2 > 0.0 && m2 < 1.0) {
        return Err(Error::Domain(format!("moments must lie in (0, 1), got ({m1}, {m2})")));
    }
    let common = 1.0 - 4.0 * m1 + 3.0 * m2;
    let d1 = 1.0 - 2.0 * m1;
    let d2 = 1.0 - 3.0 * m2;
    for (name, value) in [("1 - 4M1 + 3M2", common), ("1 - 2M1", d1), ("1 - 3M2", d2)] {
        if value.abs() < SINGULAR_DENOMINATOR {
            return Err(Error::Singular(format!("denominator {name} = {value:e} vanishes")));
        }
    }
    let alpha = (8.0 * m1 - 9.0 * m2 - 1.0) / common;
    let beta = common / (d1 * d2);
    let mut report = EstimateReport::new(Method::Cm, [alpha, beta]);
    report.moments_used = Some(MomentVector::new(vec![m1, m2]));
    Ok(report)
}

/// Solution of a generic moment system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenericFit {
    pub params: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// ∞-norm of M(θ̂) − M̂ at the returned point.
    pub residual: f64,
}

/// Solve M_k(θ) = M̂_k, k = 1..r, for any Archimedean family by damped Newton
/// with quadrature moments and a finite-difference Jacobian.
///
/// Failure to converge is reported through `converged == false` together with
/// the best iterate.
pub fn cm_estimate_generic(
    moments: &MomentVector,
    family: &dyn ParametricFamily,
    initial: &[f64],
) -> Result<GenericFit> {
    let r = family.dimension();
    if moments.r() != r {
        return Err(Error::Domain(format!(
            "{} needs {r} moments, got {}",
            family.name(),
            moments.r()
        )));
    }
    if !family.contains(initial) {
        return Err(Error::InvalidParams(format!(
            "initial point {initial:?} is outside the {} parameter set",
            family.name()
        )));
    }
    let residual = |theta: &[f64]| -> Result<Vec<f64>> {
        if !family.contains(theta) {
            return Err(Error::InvalidParams(format!("{theta:?}")));
        }
        let generator = family.generator(theta);
        (1..=r)
            .map(|k| {
                moment_by_quadrature_tol(k as u32, generator.as_ref(), GENERIC_QUADRATURE_TOLERANCE)
                    .map(|m| m - moments.get(k))
            })
            .collect()
    };
    let out = damped_newton(residual, |x| x.to_vec(), initial, NewtonOptions::default())?;
    let residual = out.residual_norm();
    Ok(GenericFit { params: out.x, converged: out.converged, iterations: out.iterations, residual })
}

/// Generic CM solver specialised to the transformed Gumbel family.
pub fn cm_estimate_newton(
    moments: &MomentVector,
    initial: TransformedGumbelParams,
) -> Result<EstimateReport> {
    let fit = cm_estimate_generic(moments, &TransformedGumbelFamily, &initial.as_array())?;
    let mut report = EstimateReport::new(Method::Cm, [fit.params[0], fit.params[1]]);
    report.moments_used = Some(moments.clone());
    report.iterations = fit.iterations;
    report.converged = fit.converged;
    if !fit.converged {
        report.diagnostics.push(format!(
            "moment equations not solved: residual {:e} after {} iterations",
            fit.residual, fit.iterations
        ));
    }
    Ok(report)
}
