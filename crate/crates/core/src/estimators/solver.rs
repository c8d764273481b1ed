//! Damped Newton iteration for small square systems F(x) = 0 with
//! finite-difference Jacobians and a projected, backtracking line search.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const STALL_GAIN: f64 = 1e-3;
const STALL_PATIENCE: usize = 3;

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    /// Stop when the residual ∞-norm falls below this value.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Relative central-difference step.
    pub fd_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tolerance: 1e-9, max_iterations: 200, fd_step: 1e-6 }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub residual: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Set when the line search could not reduce the residual any further.
    pub stalled: bool,
}

impl NewtonOutcome {
    pub fn residual_norm(&self) -> f64 {
        inf_norm(&self.residual)
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Solve `residual(x) = 0` starting from `x0`.
///
/// `project` maps a trial point onto the admissible set; trial points whose
/// residual cannot be evaluated are treated as infeasible and the step is
/// shortened. Non-convergence is not an error: the best iterate is returned
/// with `converged == false`. A Jacobian that is identically zero is.
pub fn damped_newton<F, P>(
    residual: F,
    project: P,
    x0: &[f64],
    options: NewtonOptions,
) -> Result<NewtonOutcome>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
    P: Fn(&[f64]) -> Vec<f64>,
{
    let dim = x0.len();
    let mut x = project(x0);
    let mut r = residual(&x)?;
    if r.len() != dim {
        return Err(Error::Domain(format!(
            "system has {} equations for {} unknowns",
            r.len(),
            dim
        )));
    }
    let mut iterations = 0;
    let mut slow = 0;
    while iterations < options.max_iterations {
        if inf_norm(&r) < options.tolerance {
            return Ok(NewtonOutcome { x, residual: r, converged: true, iterations, stalled: false });
        }
        iterations += 1;

        let jac = jacobian(&residual, &project, &x, &r, options.fd_step)?;
        let step = newton_step(&jac, &r)?;

        let current = sq_norm(&r);
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-12 {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(xi, si)| xi + t * si).collect();
            let trial = project(&trial);
            if let Ok(rt) = residual(&trial) {
                if rt.iter().all(|v| v.is_finite()) && sq_norm(&rt) < (1.0 - 1e-4 * t) * current {
                    accepted = Some((trial, rt));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((xn, rn)) => {
                // Near a least-squares minimum with nonzero residual the
                // iteration crawls; give up after a few negligible gains.
                let gain = (current - sq_norm(&rn)) / current;
                slow = if gain < STALL_GAIN { slow + 1 } else { 0 };
                x = xn;
                r = rn;
                if slow >= STALL_PATIENCE && inf_norm(&r) >= options.tolerance {
                    return Ok(NewtonOutcome { x, residual: r, converged: false, iterations, stalled: true });
                }
            }
            None => {
                let converged = inf_norm(&r) < options.tolerance;
                return Ok(NewtonOutcome { x, residual: r, converged, iterations, stalled: true });
            }
        }
    }
    let converged = inf_norm(&r) < options.tolerance;
    Ok(NewtonOutcome { x, residual: r, converged, iterations, stalled: false })
}

fn jacobian<F, P>(residual: &F, project: &P, x: &[f64], r: &[f64], rel_step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
    P: Fn(&[f64]) -> Vec<f64>,
{
    // Residual at a shifted point, or None if the point is not admissible.
    let eval = |p: Vec<f64>| -> Option<Vec<f64>> {
        if project(&p) != p {
            return None;
        }
        residual(&p).ok().filter(|v| v.iter().all(|x| x.is_finite()))
    };
    let dim = x.len();
    let mut jac = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        let h = rel_step * x[j].abs().max(1.0);
        let mut plus = x.to_vec();
        plus[j] += h;
        let mut minus = x.to_vec();
        minus[j] -= h;
        let column: Vec<f64> = match (eval(plus), eval(minus)) {
            (Some(fp), Some(fm)) => fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect(),
            (Some(fp), None) => fp.iter().zip(r).map(|(a, b)| (a - b) / h).collect(),
            (None, Some(fm)) => r.iter().zip(&fm).map(|(a, b)| (a - b) / h).collect(),
            (None, None) => {
                return Err(Error::Singular(format!("cannot difference coordinate {j} inside the domain")))
            }
        };
        for (i, v) in column.into_iter().enumerate() {
            jac[(i, j)] = v;
        }
    }
    Ok(jac)
}

/// Newton step −J⁻¹r, falling back to a Levenberg-regularised least-squares
/// step when J is numerically singular.
fn newton_step(jac: &DMatrix<f64>, r: &[f64]) -> Result<Vec<f64>> {
    if jac.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("Jacobian has non-finite entries".into()));
    }
    let scale = jac.amax();
    if scale == 0.0 {
        return Err(Error::Singular("Jacobian is zero".into()));
    }
    let rhs = -DVector::from_column_slice(r);
    let svd = jac.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin > 1e-13 * smax {
        if let Some(step) = jac.clone().lu().solve(&rhs) {
            if step.iter().all(|v| v.is_finite()) {
                return Ok(step.iter().copied().collect());
            }
        }
    }
    let jt = jac.transpose();
    let lambda = 1e-10 * smax * smax;
    let normal = &jt * jac + DMatrix::identity(jac.ncols(), jac.ncols()) * lambda;
    let step = normal
        .lu()
        .solve(&(jt * rhs))
        .ok_or_else(|| Error::Singular("regularised normal equations are singular".into()))?;
    Ok(step.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_nonlinear_system() {
        // x² + y² = 4, x − y = 0 → (√2, √2)
        let f = |x: &[f64]| Ok(vec![x[0] * x[0] + x[1] * x[1] - 4.0, x[0] - x[1]]);
        let out = damped_newton(f, |x| x.to_vec(), &[1.0, 0.5], NewtonOptions::default()).unwrap();
        assert!(out.converged);
        assert!((out.x[0] - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn zero_residual_start_needs_no_iterations() {
        let f = |x: &[f64]| Ok(vec![x[0] - 1.0]);
        let out = damped_newton(f, |x| x.to_vec(), &[1.0], NewtonOptions::default()).unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn reports_failure_when_no_root_exists() {
        let f = |x: &[f64]| Ok(vec![x[0] * x[0] + 1.0]);
        let out = damped_newton(f, |x| x.to_vec(), &[0.3], NewtonOptions::default()).unwrap();
        assert!(!out.converged);
    }

    #[test]
    fn zero_jacobian_is_singular() {
        let f = |_: &[f64]| Ok(vec![1.0, 1.0]);
        let r = damped_newton(f, |x| x.to_vec(), &[0.0, 0.0], NewtonOptions::default());
        assert!(matches!(r, Err(Error::Singular(_))));
    }

    #[test]
    fn respects_projection() {
        // Root at x = −1 is outside x ≥ 0; the solver must stay feasible.
        let f = |x: &[f64]| Ok(vec![x[0] + 1.0]);
        let proj = |x: &[f64]| vec![x[0].max(0.0)];
        let out = damped_newton(f, proj, &[2.0], NewtonOptions::default()).unwrap();
        assert!(!out.converged);
        assert!(out.x[0] >= 0.0);
    }
}
