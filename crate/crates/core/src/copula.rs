//! Parametric Archimedean copula models and their theoretical functionals.
//!
//! The shipped model is the two-parameter transformed Gumbel copula
//!
//! ```text
//! C(u) = ((Σ_j (u_j^-α − 1)^β)^(1/β) + 1)^(-1/α),   α > 0, β ≥ 1
//! ```
//!
//! with generator φ(t) = (t^-α − 1)^β. Plain Gumbel and Clayton generators are
//! provided through the same [`Generator`] interface so that the generic
//! quadrature-based moment machinery can be exercised on other families.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, FixedRule};

/// Lower truncation point for integrals over (0, 1] whose integrand may be
/// singular at zero.
pub const LOWER_CUTOFF: f64 = 1e-10;

/// Absolute error target for moment integrals.
pub const MOMENT_TOLERANCE: f64 = 1e-9;

const MAX_SEGMENTS: usize = 2000;

/// Parameter point (α, β) of the transformed Gumbel copula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformedGumbelParams {
    pub alpha: f64,
    pub beta: f64,
}

impl TransformedGumbelParams {
    /// Validated constructor: α > 0 and β ≥ 1, both finite.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParams(format!("alpha must be > 0, got {alpha}")));
        }
        if !(beta.is_finite() && beta >= 1.0) {
            return Err(Error::InvalidParams(format!("beta must be >= 1, got {beta}")));
        }
        Ok(TransformedGumbelParams { alpha, beta })
    }

    pub fn is_valid(&self) -> bool {
        self.alpha.is_finite() && self.alpha > 0.0 && self.beta.is_finite() && self.beta >= 1.0
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.alpha, self.beta]
    }

    pub fn generator(&self) -> TransformedGumbelGenerator {
        TransformedGumbelGenerator { params: *self }
    }

    /// Kendall's τ of the bivariate model, 1 − 2/(β(2+α)).
    pub fn tau(&self) -> f64 {
        tau_of_params(*self)
    }
}

/// Archimedean generator: φ(1) = 0, φ′ < 0 and φ″ ≥ 0 on (0, 1).
pub trait Generator: Send + Sync {
    fn phi(&self, t: f64) -> f64;
    fn phi_prime(&self, t: f64) -> f64;
    fn phi_second(&self, t: f64) -> f64;
    fn phi_inverse(&self, x: f64) -> f64;

    /// Kendall distribution K(s) = s − φ(s)/φ′(s), with K(0) = 0 and K(1) = 1.
    fn kendall_df(&self, s: f64) -> f64 {
        kendall_df_generic(self, s)
    }

    /// Density of the Kendall distribution, φ″φ/(φ′)².
    fn kendall_density(&self, s: f64) -> f64 {
        let d1 = self.phi_prime(s);
        self.phi_second(s) * self.phi(s) / (d1 * d1)
    }

    /// d-dimensional copula φ⁻¹(Σ φ(u_j)) through the generator.
    fn cdf(&self, u: &[f64]) -> f64 {
        if u.iter().any(|&x| x <= 0.0) {
            return 0.0;
        }
        self.phi_inverse(u.iter().map(|&x| self.phi(x)).sum())
    }
}

/// Kendall distribution through the generic φ/φ′ path.
pub fn kendall_df_generic<G: Generator + ?Sized>(g: &G, s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        (s - g.phi(s) / g.phi_prime(s)).clamp(0.0, 1.0)
    }
}

/// Generator φ(t) = (t^-α − 1)^β of the transformed Gumbel copula.
#[derive(Debug, Clone, Copy)]
pub struct TransformedGumbelGenerator {
    pub params: TransformedGumbelParams,
}

impl TransformedGumbelGenerator {
    /// t^-α − 1, computed without cancellation for t near 1 or α near 0.
    #[inline]
    fn inner(&self, t: f64) -> f64 {
        (-self.params.alpha * t.ln()).exp_m1()
    }
}

impl Generator for TransformedGumbelGenerator {
    fn phi(&self, t: f64) -> f64 {
        if t >= 1.0 {
            return 0.0;
        }
        self.inner(t).powf(self.params.beta)
    }

    fn phi_prime(&self, t: f64) -> f64 {
        let TransformedGumbelParams { alpha, beta } = self.params;
        let g = self.inner(t);
        -beta * g.powf(beta - 1.0) * alpha * t.powf(-alpha - 1.0)
    }

    fn phi_second(&self, t: f64) -> f64 {
        let TransformedGumbelParams { alpha, beta } = self.params;
        let g = self.inner(t);
        let dg = -alpha * t.powf(-alpha - 1.0);
        let d2g = alpha * (alpha + 1.0) * t.powf(-alpha - 2.0);
        // β g^(β-2) [(β-1) g'² + g g''], with the (β-1) term dropped at β = 1
        // so that g → 0 does not produce 0·∞.
        let mut bracket = g * d2g;
        if beta > 1.0 {
            bracket += (beta - 1.0) * dg * dg;
        }
        beta * g.powf(beta - 2.0) * bracket
    }

    fn phi_inverse(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        let TransformedGumbelParams { alpha, beta } = self.params;
        (-(x.powf(1.0 / beta)).ln_1p() / alpha).exp()
    }

    fn kendall_df(&self, s: f64) -> f64 {
        kendall_df_transformed_gumbel(s, self.params)
    }

    fn kendall_density(&self, s: f64) -> f64 {
        let TransformedGumbelParams { alpha, beta } = self.params;
        1.0 + (1.0 - (alpha + 1.0) * s.powf(alpha)) / (alpha * beta)
    }

    fn cdf(&self, u: &[f64]) -> f64 {
        transformed_gumbel_cdf_unchecked(u, self.params)
    }
}

/// Plain Gumbel generator φ(t) = (−ln t)^β.
#[derive(Debug, Clone, Copy)]
pub struct GumbelGenerator {
    pub beta: f64,
}

impl Generator for GumbelGenerator {
    fn phi(&self, t: f64) -> f64 {
        if t >= 1.0 {
            return 0.0;
        }
        (-t.ln()).powf(self.beta)
    }

    fn phi_prime(&self, t: f64) -> f64 {
        let l = -t.ln();
        -self.beta * l.powf(self.beta - 1.0) / t
    }

    fn phi_second(&self, t: f64) -> f64 {
        let b = self.beta;
        let l = -t.ln();
        let mut v = b * l.powf(b - 1.0) / (t * t);
        if b > 1.0 {
            v += b * (b - 1.0) * l.powf(b - 2.0) / (t * t);
        }
        v
    }

    fn phi_inverse(&self, x: f64) -> f64 {
        (-x.powf(1.0 / self.beta)).exp()
    }
}

/// Clayton generator φ(t) = (t^-θ − 1)/θ, θ > 0.
#[derive(Debug, Clone, Copy)]
pub struct ClaytonGenerator {
    pub theta: f64,
}

impl Generator for ClaytonGenerator {
    fn phi(&self, t: f64) -> f64 {
        if t >= 1.0 {
            return 0.0;
        }
        (-self.theta * t.ln()).exp_m1() / self.theta
    }

    fn phi_prime(&self, t: f64) -> f64 {
        -t.powf(-self.theta - 1.0)
    }

    fn phi_second(&self, t: f64) -> f64 {
        (self.theta + 1.0) * t.powf(-self.theta - 2.0)
    }

    fn phi_inverse(&self, x: f64) -> f64 {
        (-(self.theta * x).ln_1p() / self.theta).exp()
    }
}

/// A family of generators indexed by a parameter vector, used by the generic
/// moment-equation solver.
pub trait ParametricFamily: Send + Sync {
    /// Number of parameters r.
    fn dimension(&self) -> usize;
    /// Whether `theta` lies in the admissible parameter set.
    fn contains(&self, theta: &[f64]) -> bool;
    fn generator(&self, theta: &[f64]) -> Box<dyn Generator>;
    fn name(&self) -> &'static str;
}

/// Two-parameter transformed Gumbel family, θ = (α, β).
#[derive(Debug, Clone, Copy, Default)]
pub struct TransformedGumbelFamily;

impl ParametricFamily for TransformedGumbelFamily {
    fn dimension(&self) -> usize {
        2
    }

    fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == 2 && TransformedGumbelParams { alpha: theta[0], beta: theta[1] }.is_valid()
    }

    fn generator(&self, theta: &[f64]) -> Box<dyn Generator> {
        Box::new(TransformedGumbelParams { alpha: theta[0], beta: theta[1] }.generator())
    }

    fn name(&self) -> &'static str {
        "transformed-gumbel"
    }
}

/// One-parameter Gumbel family, θ = (β).
#[derive(Debug, Clone, Copy, Default)]
pub struct GumbelFamily;

impl ParametricFamily for GumbelFamily {
    fn dimension(&self) -> usize {
        1
    }

    fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == 1 && theta[0].is_finite() && theta[0] >= 1.0
    }

    fn generator(&self, theta: &[f64]) -> Box<dyn Generator> {
        Box::new(GumbelGenerator { beta: theta[0] })
    }

    fn name(&self) -> &'static str {
        "gumbel"
    }
}

/// One-parameter Clayton family, θ = (θ), θ > 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClaytonFamily;

impl ParametricFamily for ClaytonFamily {
    fn dimension(&self) -> usize {
        1
    }

    fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == 1 && theta[0].is_finite() && theta[0] > 0.0
    }

    fn generator(&self, theta: &[f64]) -> Box<dyn Generator> {
        Box::new(ClaytonGenerator { theta: theta[0] })
    }

    fn name(&self) -> &'static str {
        "clayton"
    }
}

/// A d-dimensional Archimedean copula with a transformed Gumbel generator.
#[derive(Debug, Clone, Copy)]
pub struct CopulaModel {
    pub dimension: usize,
    pub params: TransformedGumbelParams,
}

impl CopulaModel {
    pub fn new(dimension: usize, params: TransformedGumbelParams) -> Result<Self> {
        if dimension < 2 {
            return Err(Error::Domain(format!("copula dimension must be >= 2, got {dimension}")));
        }
        if !params.is_valid() {
            return Err(Error::InvalidParams(format!("{params:?}")));
        }
        Ok(CopulaModel { dimension, params })
    }

    pub fn cdf(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.dimension {
            return Err(Error::Domain(format!(
                "point has {} coordinates, model has dimension {}",
                u.len(),
                self.dimension
            )));
        }
        transformed_gumbel_cdf(u, self.params)
    }
}

fn transformed_gumbel_cdf_unchecked(u: &[f64], params: TransformedGumbelParams) -> f64 {
    let TransformedGumbelParams { alpha, beta } = params;
    if u.iter().any(|&x| x <= 0.0) {
        return 0.0;
    }
    let mut sum = 0.0;
    for &x in u {
        if x < 1.0 {
            sum += (-alpha * x.ln()).exp_m1().powf(beta);
        }
    }
    if sum == 0.0 {
        return 1.0;
    }
    (-(sum.powf(1.0 / beta)).ln_1p() / alpha).exp()
}

/// Transformed Gumbel copula C_{α,β}(u) for u ∈ [0, 1]^d.
pub fn transformed_gumbel_cdf(u: &[f64], params: TransformedGumbelParams) -> Result<f64> {
    if let Some(bad) = u.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::Domain(format!("coordinate {bad} outside [0, 1]")));
    }
    if !params.is_valid() {
        return Err(Error::InvalidParams(format!("{params:?}")));
    }
    Ok(transformed_gumbel_cdf_unchecked(u, params))
}

/// Copula moment M_k(α, β) = ((k+1)β + αβ − k) / ((k+1)²β + (k+1)αβ).
pub fn moment_closed_form(k: u32, params: TransformedGumbelParams) -> f64 {
    let TransformedGumbelParams { alpha, beta } = params;
    let k1 = f64::from(k) + 1.0;
    (k1 * beta + alpha * beta - f64::from(k)) / (k1 * k1 * beta + k1 * alpha * beta)
}

/// Analytic gradient (∂M_k/∂α, ∂M_k/∂β) of the closed-form moment.
pub fn moment_gradient(k: u32, params: TransformedGumbelParams) -> [f64; 2] {
    let TransformedGumbelParams { alpha, beta } = params;
    let kf = f64::from(k);
    let k1 = kf + 1.0;
    let num = k1 * beta + alpha * beta - kf;
    let den = k1 * beta * (k1 + alpha);
    let den2 = den * den;
    let d_alpha = (beta * den - num * k1 * beta) / den2;
    let d_beta = ((k1 + alpha) * den - num * k1 * (k1 + alpha)) / den2;
    [d_alpha, d_beta]
}

/// Copula moment M_k = ∫₀¹ s^k φ″φ/(φ′)² ds by adaptive quadrature.
///
/// The integral is taken over [ε, 1] with ε = [`LOWER_CUTOFF`]; the dropped
/// mass is at most ε^k·K(ε) ≤ ε^k.
pub fn moment_by_quadrature<G: Generator + ?Sized>(k: u32, generator: &G) -> Result<f64> {
    moment_by_quadrature_tol(k, generator, MOMENT_TOLERANCE)
}

pub fn moment_by_quadrature_tol<G: Generator + ?Sized>(
    k: u32,
    generator: &G,
    abs_tol: f64,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("moment order must be >= 1".into()));
    }
    let kk = k as i32;
    let integrand = |s: f64| s.powi(kk) * generator.kendall_density(s);
    let r = quadrature::integrate(integrand, LOWER_CUTOFF, 1.0, abs_tol, MAX_SEGMENTS)?;
    Ok(r.value)
}

/// Kendall distribution of the transformed Gumbel copula, s + (s − s^(α+1))/(αβ).
pub fn kendall_df_transformed_gumbel(s: f64, params: TransformedGumbelParams) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let TransformedGumbelParams { alpha, beta } = params;
    // s − s^(α+1) = −s·expm1(α ln s), exact near s = 1.
    let v = s - s * (alpha * s.ln()).exp_m1() / (alpha * beta);
    v.clamp(0.0, 1.0)
}

/// Kendall distribution of any generator, with K(0) = 0 and K(1) = 1.
pub fn kendall_df<G: Generator + ?Sized>(s: f64, generator: &G) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Domain(format!("s = {s} outside [0, 1]")));
    }
    Ok(generator.kendall_df(s))
}

/// Kendall's τ of the bivariate transformed Gumbel copula, 4M₁ − 1.
pub fn tau_of_params(params: TransformedGumbelParams) -> f64 {
    1.0 - 2.0 / (params.beta * (2.0 + params.alpha))
}

/// Kendall's τ from the first copula moment in dimension d.
pub fn tau_from_first_moment(m1: f64, d: u32) -> f64 {
    let two_d = 2f64.powi(d as i32);
    (two_d * m1 - 1.0) / (two_d / 2.0 - 1.0)
}

/// Spearman's ρ from ∫C(u)du in dimension d.
pub fn rho_from_copula_integral(integral: f64, d: u32) -> f64 {
    let two_d = 2f64.powi(d as i32);
    let df = f64::from(d);
    (df + 1.0) / (two_d - (df + 1.0)) * (two_d * integral - 1.0)
}

/// Absolute error target for [`rho_of_params`].
pub const RHO_TOLERANCE: f64 = 1e-6;

/// Spearman's ρ of the bivariate transformed Gumbel copula, 12∫∫C − 3, by
/// nested adaptive quadrature.
pub fn rho_of_params(params: TransformedGumbelParams) -> Result<f64> {
    rho_of_params_tol(params, RHO_TOLERANCE)
}

/// [`rho_of_params`] with an explicit absolute error target.
pub fn rho_of_params_tol(params: TransformedGumbelParams, tolerance: f64) -> Result<f64> {
    if !params.is_valid() {
        return Err(Error::InvalidParams(format!("{params:?}")));
    }
    let inner_tol = tolerance / 200.0;
    let outer_tol = tolerance / 24.0;
    let failure = std::cell::Cell::new(None);
    let inner = |v: f64| -> f64 {
        match quadrature::integrate(
            |u| transformed_gumbel_cdf_unchecked(&[u, v], params),
            0.0,
            1.0,
            inner_tol,
            MAX_SEGMENTS,
        ) {
            Ok(r) => r.value,
            Err(e) => {
                failure.set(Some(e));
                f64::NAN
            }
        }
    };
    let outer = quadrature::integrate(inner, 0.0, 1.0, outer_tol, MAX_SEGMENTS);
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let integral = outer?.value;
    Ok(rho_from_copula_integral(integral, 2))
}

/// Tensor-product rule for ρ that is a smooth function of (α, β); used by
/// the (τ, ρ) root finder.
#[derive(Debug, Clone)]
pub struct RhoRule {
    rule: FixedRule,
}

impl Default for RhoRule {
    fn default() -> Self {
        RhoRule { rule: FixedRule::composite_gauss_legendre(128, 1) }
    }
}

impl RhoRule {
    pub fn new(rule: FixedRule) -> Self {
        RhoRule { rule }
    }

    /// ρ(α, β) = 12∫∫C − 3 with the fixed product rule, exploiting C(u,v) = C(v,u).
    pub fn rho(&self, params: TransformedGumbelParams) -> f64 {
        let TransformedGumbelParams { alpha, beta } = params;
        let x = &self.rule.nodes;
        let w = &self.rule.weights;
        let terms: Vec<f64> =
            x.iter().map(|&t| (-alpha * t.ln()).exp_m1().powf(beta)).collect();
        let inv_beta = 1.0 / beta;
        let cdf = |s: f64| (-(s.powf(inv_beta)).ln_1p() / alpha).exp();
        let mut total = 0.0;
        for i in 0..x.len() {
            let mut row = 0.5 * w[i] * cdf(terms[i] + terms[i]);
            for j in 0..i {
                row += w[j] * cdf(terms[i] + terms[j]);
            }
            total += 2.0 * w[i] * row;
        }
        rho_from_copula_integral(total, 2)
    }
}

/// Log-density of the bivariate transformed Gumbel copula,
/// log c(u,v) = log φ″(C) + log|φ′(u)| + log|φ′(v)| − 3 log|φ′(C)|.
pub fn transformed_gumbel_log_density(u: f64, v: f64, params: TransformedGumbelParams) -> f64 {
    log_density_from_logs(u.ln(), v.ln(), params)
}

/// Log-density given ln u and ln v, for callers that evaluate many parameter
/// points on the same data.
pub fn log_density_from_logs(lu: f64, lv: f64, params: TransformedGumbelParams) -> f64 {
    let TransformedGumbelParams { alpha, beta } = params;
    let gu = (-alpha * lu).exp_m1();
    let gv = (-alpha * lv).exp_m1();
    let s = gu.powf(beta) + gv.powf(beta);
    let r = s.powf(1.0 / beta);
    // C = (1 + r)^(-1/α); g(C) = C^-α − 1 = r.
    let lc = -r.ln_1p() / alpha;
    let log_abs_phi_prime = |g: f64, lt: f64| {
        beta.ln() + (beta - 1.0) * g.ln() + alpha.ln() - (alpha + 1.0) * lt
    };
    let log_pp_u = log_abs_phi_prime(gu, lu);
    let log_pp_v = log_abs_phi_prime(gv, lv);
    let log_pp_c = log_abs_phi_prime(r, lc);
    // φ″(t) = β g^(β-2) [(β-1)α² t^(-2α-2) + g α(α+1) t^(-α-2)]
    let a = (beta - 1.0) * alpha * alpha * (-(2.0 * alpha + 2.0) * lc).exp();
    let b = r * alpha * (alpha + 1.0) * (-(alpha + 2.0) * lc).exp();
    let log_second = beta.ln() + (beta - 2.0) * r.ln() + (a + b).ln();
    log_second + log_pp_u + log_pp_v - 3.0 * log_pp_c
}

/// Bivariate Archimedean density −φ″(C)φ′(u)φ′(v)/φ′(C)³ through the generator.
pub fn archimedean_density<G: Generator + ?Sized>(u: f64, v: f64, generator: &G) -> f64 {
    let c = generator.cdf(&[u, v]);
    let pc = generator.phi_prime(c);
    -generator.phi_second(c) * generator.phi_prime(u) * generator.phi_prime(v) / (pc * pc * pc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: f64, b: f64) -> TransformedGumbelParams {
        TransformedGumbelParams::new(a, b).unwrap()
    }

    #[test]
    fn cdf_at_ones_is_one() {
        assert_eq!(transformed_gumbel_cdf(&[1.0, 1.0], p(0.5, 1.6)).unwrap(), 1.0);
    }

    #[test]
    fn cdf_uniform_margin() {
        let v = transformed_gumbel_cdf(&[0.3, 1.0], p(0.5, 1.6)).unwrap();
        assert!((v - 0.3).abs() < 1e-15);
    }

    #[test]
    fn cdf_direct_matches_generator_composition() {
        let params = p(0.5, 1.6);
        let g = params.generator();
        let via_generator = g.phi_inverse(2.0 * g.phi(0.5));
        let direct = transformed_gumbel_cdf(&[0.5, 0.5], params).unwrap();
        assert!((direct - via_generator).abs() < 1e-14);
        // Independent plain-arithmetic evaluation of the displayed formula.
        let term = (0.5f64.powf(-0.5) - 1.0).powf(1.6);
        let textbook = ((2.0 * term).powf(1.0 / 1.6) + 1.0).powf(-1.0 / 0.5);
        assert!((direct - textbook).abs() < 1e-14);
    }

    #[test]
    fn cdf_zero_coordinate() {
        assert_eq!(transformed_gumbel_cdf(&[0.0, 0.7], p(0.5, 1.6)).unwrap(), 0.0);
    }

    #[test]
    fn cdf_rejects_out_of_cube() {
        assert!(matches!(transformed_gumbel_cdf(&[1.2, 0.5], p(0.5, 1.6)), Err(Error::Domain(_))));
        assert!(matches!(transformed_gumbel_cdf(&[-0.1, 0.5], p(0.5, 1.6)), Err(Error::Domain(_))));
    }

    #[test]
    fn params_validation() {
        assert!(TransformedGumbelParams::new(0.0, 1.5).is_err());
        assert!(TransformedGumbelParams::new(0.5, 0.99).is_err());
        assert!(TransformedGumbelParams::new(f64::NAN, 1.5).is_err());
        assert!(TransformedGumbelParams::new(0.5, 1.0).is_ok());
    }

    #[test]
    fn closed_form_moments_reference_values() {
        let params = p(0.5, 1.6);
        assert!((moment_closed_form(1, params) - 0.375).abs() < 1e-15);
        assert!((moment_closed_form(2, params) - 3.6 / 16.8).abs() < 1e-15);
        // (τ + 1)/4 with τ = 0.5
        assert!((moment_closed_form(1, params) - (params.tau() + 1.0) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn independence_first_moment_limit() {
        // α → 0, β = 1 is the independence copula: M₁ = 1/4.
        let m1 = moment_closed_form(1, TransformedGumbelParams { alpha: 1e-12, beta: 1.0 });
        assert!((m1 - 0.25).abs() < 1e-11);
        let m1_alpha0 = moment_closed_form(1, TransformedGumbelParams { alpha: 0.0, beta: 1.6 });
        assert!((m1_alpha0 - (2.0 * 1.6 - 1.0) / (4.0 * 1.6)).abs() < 1e-15);
    }

    #[test]
    fn quadrature_moment_matches_closed_form() {
        let params = p(0.5, 1.6);
        let q = moment_by_quadrature(1, &params.generator()).unwrap();
        assert!((q - 0.375).abs() < 1e-8);
        let params = p(0.9, 3.45);
        let q = moment_by_quadrature(2, &params.generator()).unwrap();
        let b = 3.45;
        let expected = (3.0 * b + 0.9 * b - 2.0) / (9.0 * b + 3.0 * 0.9 * b);
        assert!((q - expected).abs() < 1e-8);
    }

    #[test]
    fn gumbel_beta_one_is_independence() {
        let q = moment_by_quadrature(1, &GumbelGenerator { beta: 1.0 }).unwrap();
        assert!((q - 0.25).abs() < 1e-9);
    }

    #[test]
    fn clayton_equals_transformed_gumbel_at_beta_one() {
        for k in 1..=3 {
            let q = moment_by_quadrature(k, &ClaytonGenerator { theta: 1.7 }).unwrap();
            let c = moment_closed_form(k, p(1.7, 1.0));
            assert!((q - c).abs() < 1e-9, "k={k}: {q} vs {c}");
        }
    }

    #[test]
    fn moment_zero_order_rejected() {
        assert!(moment_by_quadrature(0, &p(0.5, 1.6).generator()).is_err());
    }

    #[test]
    fn analytic_gradient_matches_finite_difference() {
        let params = p(0.5, 1.6);
        let h = 1e-6;
        for k in 1..=3 {
            let g = moment_gradient(k, params);
            let fd_a = (moment_closed_form(k, p(0.5 + h, 1.6)) - moment_closed_form(k, p(0.5 - h, 1.6)))
                / (2.0 * h);
            let fd_b = (moment_closed_form(k, p(0.5, 1.6 + h)) - moment_closed_form(k, p(0.5, 1.6 - h)))
                / (2.0 * h);
            assert!((g[0] - fd_a).abs() < 1e-8);
            assert!((g[1] - fd_b).abs() < 1e-8);
        }
    }

    #[test]
    fn kendall_reference_points() {
        let params = p(0.5, 1.6);
        let g = params.generator();
        assert_eq!(kendall_df(1.0, &g).unwrap(), 1.0);
        assert_eq!(kendall_df(0.0, &g).unwrap(), 0.0);
        let expected = 0.5 + (0.5 - 0.5f64.powf(1.5)) / 0.8;
        assert!((kendall_df(0.5, &g).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.683_058_5).abs() < 1e-6);
        assert!(kendall_df(1.5, &g).is_err());
    }

    #[test]
    fn kendall_closed_form_matches_generic_path() {
        let params = p(0.5, 1.6);
        let g = params.generator();
        for &s in &[0.25, 0.01, 0.5, 0.9, 0.999] {
            let closed = kendall_df_transformed_gumbel(s, params);
            let generic = kendall_df_generic(&g, s);
            assert!((closed - generic).abs() < 1e-12, "s={s}");
        }
    }

    #[test]
    fn kendall_matches_finite_difference_of_generator() {
        // K(s) = s − φ(s)/φ′(s) with φ′ by central differences of φ.
        let params = p(0.5, 1.6);
        let g = params.generator();
        let s = 0.5;
        let h = 1e-6;
        let dphi = (g.phi(s + h) - g.phi(s - h)) / (2.0 * h);
        let k = s - g.phi(s) / dphi;
        assert!((k - g.kendall_df(s)).abs() < 1e-8);
    }

    #[test]
    fn generator_derivatives_match_finite_differences() {
        let gens: Vec<Box<dyn Generator>> = vec![
            Box::new(p(0.5, 1.6).generator()),
            Box::new(p(0.9, 3.45).generator()),
            Box::new(GumbelGenerator { beta: 2.3 }),
            Box::new(ClaytonGenerator { theta: 1.3 }),
        ];
        let h = 1e-5;
        for g in &gens {
            for &t in &[0.2, 0.5, 0.8] {
                let d1 = (g.phi(t + h) - g.phi(t - h)) / (2.0 * h);
                let d2 = (g.phi_prime(t + h) - g.phi_prime(t - h)) / (2.0 * h);
                assert!((d1 - g.phi_prime(t)).abs() < 1e-6 * (1.0 + d1.abs()));
                assert!((d2 - g.phi_second(t)).abs() < 1e-5 * (1.0 + d2.abs()));
                assert!(g.phi_prime(t) < 0.0 && g.phi_second(t) >= 0.0);
            }
            assert_eq!(g.phi(1.0), 0.0);
        }
    }

    #[test]
    fn generator_inverse_round_trip() {
        let gens: Vec<Box<dyn Generator>> = vec![
            Box::new(p(0.5, 1.6).generator()),
            Box::new(p(0.1, 1.059).generator()),
            Box::new(GumbelGenerator { beta: 2.3 }),
            Box::new(ClaytonGenerator { theta: 1.3 }),
        ];
        for g in &gens {
            for i in 0..=99 {
                let t = 0.01 + 0.99 * i as f64 / 99.0;
                assert!((g.phi_inverse(g.phi(t)) - t).abs() < 1e-12, "t={t}");
            }
        }
    }

    #[test]
    fn tau_reference_values() {
        assert!((tau_of_params(p(0.5, 1.6)) - 0.5).abs() < 1e-15);
        assert!((tau_of_params(p(0.9, 3.45)) - 0.8).abs() < 1e-3);
        assert!((tau_of_params(p(0.1, 1.059)) - 0.1007).abs() < 1e-4);
        assert!((tau_from_first_moment(0.375, 2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rho_independence_and_comonotone_limits() {
        let rho0 = rho_of_params(TransformedGumbelParams { alpha: 1e-8, beta: 1.0 }).unwrap();
        assert!(rho0.abs() < 1e-4, "{rho0}");
        let rho1 = rho_of_params(p(0.5, 200.0)).unwrap();
        assert!(rho1 >= 0.99, "{rho1}");
    }

    #[test]
    fn rho_fixed_rule_matches_adaptive() {
        let rule = RhoRule::default();
        for &(a, b) in &[(0.5, 1.6), (0.9, 3.45), (0.1, 1.059), (0.2, 1.137), (2.0, 1.2)] {
            let adaptive = rho_of_params(p(a, b)).unwrap();
            let fixed = rule.rho(p(a, b));
            assert!((adaptive - fixed).abs() < 1e-6, "({a},{b}): {adaptive} vs {fixed}");
        }
    }

    #[test]
    fn density_matches_mixed_finite_difference() {
        let params = p(0.5, 1.6);
        let h = 1e-4;
        let c = |u: f64, v: f64| transformed_gumbel_cdf(&[u, v], params).unwrap();
        let (u, v) = (0.5, 0.5);
        let fd = (c(u + h, v + h) - c(u + h, v - h) - c(u - h, v + h) + c(u - h, v - h)) / (4.0 * h * h);
        let analytic = transformed_gumbel_log_density(u, v, params).exp();
        assert!((fd - analytic).abs() < 1e-5, "{fd} vs {analytic}");
        let generic = archimedean_density(u, v, &params.generator());
        assert!((generic - analytic).abs() < 1e-10);
    }

    #[test]
    fn copula_model_checks_dimension() {
        let m = CopulaModel::new(3, p(0.5, 1.6)).unwrap();
        assert!(m.cdf(&[0.5, 0.5]).is_err());
        let v = m.cdf(&[0.5, 0.6, 0.7]).unwrap();
        let g = p(0.5, 1.6).generator();
        let via = g.phi_inverse(g.phi(0.5) + g.phi(0.6) + g.phi(0.7));
        assert!((v - via).abs() < 1e-14);
        assert!(CopulaModel::new(1, p(0.5, 1.6)).is_err());
    }
}
