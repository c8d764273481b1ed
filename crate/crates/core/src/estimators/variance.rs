use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::copula::{moment_gradient, Generator, TransformedGumbelParams};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, FixedRule};

const MAX_CONDITION: f64 = 1e12;
const INNER_TOLERANCE: f64 = 1e-12;

/// Pieces of the sandwich covariance A⁻¹D(A⁻¹)ᵀ of √n(θ̂ − θ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceComponents {
    /// A_kℓ = −∂M_k/∂θ_ℓ.
    pub a_matrix: [[f64; 2]; 2],
    pub d_matrix: [[f64; 2]; 2],
    pub sandwich: [[f64; 2]; 2],
    pub condition_number: f64,
}

impl VarianceComponents {
    /// Covariance of θ̂ at sample size n.
    pub fn covariance(&self, n: usize) -> [[f64; 2]; 2] {
        let s = 1.0 / n as f64;
        self.sandwich.map(|row| row.map(|v| v * s))
    }

    /// Per-parameter standard errors at sample size n.
    pub fn standard_errors(&self, n: usize) -> [f64; 2] {
        let c = self.covariance(n);
        [c[0][0].max(0.0).sqrt(), c[1][1].max(0.0).sqrt()]
    }
}

fn to_array(m: &Matrix2<f64>) -> [[f64; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

/// Plug-in sandwich covariance of the CM estimator built from M₁, M₂.
///
/// D is the covariance over ξ ~ U(0,1) of
/// ξ^k − M_k + ∫ k t^(k−1) (1{ξ ≤ t} − t) dK(t), k = 1, 2,
/// with the inner integrals by adaptive quadrature against the Kendall
/// density and the outer moments by a composite Gauss–Legendre rule.
pub fn asymptotic_covariance(theta_hat: TransformedGumbelParams, r: usize) -> Result<VarianceComponents> {
    if r != 2 {
        return Err(Error::Domain(format!(
            "the two-parameter model needs r = 2 moments, got {r}"
        )));
    }
    if !theta_hat.is_valid() {
        return Err(Error::InvalidParams(format!("{theta_hat:?}")));
    }
    let g1 = moment_gradient(1, theta_hat);
    let g2 = moment_gradient(2, theta_hat);
    let a = -Matrix2::new(g1[0], g1[1], g2[0], g2[1]);
    let sv = a.singular_values();
    let condition_number = sv.max() / sv.min();
    if condition_number.is_nan() || condition_number > MAX_CONDITION {
        return Err(Error::Singular(format!(
            "moment Jacobian has condition number {condition_number:e}"
        )));
    }
    let a_inv = a.try_inverse().ok_or_else(|| Error::Singular("moment Jacobian is not invertible".into()))?;

    let d = influence_covariance(&theta_hat.generator())?;
    let sandwich = a_inv * d * a_inv.transpose();
    let sandwich = 0.5 * (sandwich + sandwich.transpose());
    Ok(VarianceComponents {
        a_matrix: to_array(&a),
        d_matrix: to_array(&d),
        sandwich: to_array(&sandwich),
        condition_number,
    })
}

/// Covariance of (ξ + G₁(ξ), ξ² + G₂(ξ)) for ξ ~ U(0,1), where
/// G_k(ξ) = ∫_ξ^1 k t^(k−1) dK(t). Constant shifts do not affect it.
fn influence_covariance<G: Generator + ?Sized>(generator: &G) -> Result<Matrix2<f64>> {
    let rule = FixedRule::composite_gauss_legendre(16, 16);
    let m = rule.len();
    // Tail integrals at every node, accumulated from 1 downwards.
    let mut tails = vec![[0.0f64; 2]; m];
    let mut acc = [0.0f64; 2];
    let mut upper = 1.0;
    for i in (0..m).rev() {
        let lower = rule.nodes[i];
        for (k, slot) in acc.iter_mut().enumerate() {
            let kf = (k + 1) as f64;
            let piece = integrate(
                |t| kf * t.powi(k as i32) * generator.kendall_density(t),
                lower,
                upper,
                INNER_TOLERANCE,
                500,
            )?;
            *slot += piece.value;
        }
        tails[i] = acc;
        upper = lower;
    }
    let values: Vec<[f64; 2]> = rule
        .nodes
        .iter()
        .zip(&tails)
        .map(|(&x, t)| [x + t[0], x * x + t[1]])
        .collect();
    let mut mean = [0.0; 2];
    for (w, v) in rule.weights.iter().zip(&values) {
        mean[0] += w * v[0];
        mean[1] += w * v[1];
    }
    let mut cov = Matrix2::zeros();
    for (w, v) in rule.weights.iter().zip(&values) {
        let c = [v[0] - mean[0], v[1] - mean[1]];
        for i in 0..2 {
            for j in 0..2 {
                cov[(i, j)] += w * c[i] * c[j];
            }
        }
    }
    Ok(cov)
}
