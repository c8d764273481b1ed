//! One-dimensional quadrature: globally adaptive Gauss–Kronrod (7/15) and
//! fixed Gauss–Legendre rules.
//!
//! The adaptive routine is used wherever an error estimate is needed. The
//! fixed rules are used inside root finders, where the integral must be a
//! smooth function of the parameters for finite-difference Jacobians to make
//! sense.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const KRONROD_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = KRONROD_WEIGHTS[7] * fc;
    let mut gauss = GAUSS_WEIGHTS[3] * fc;
    for (j, (&x, &w)) in KRONROD_NODES[..7].iter().zip(&KRONROD_WEIGHTS[..7]).enumerate() {
        let dx = half * x;
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += GAUSS_WEIGHTS[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Globally adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
///
/// Subdivides the segment with the largest error estimate until the summed
/// estimate is below `abs_tol`, or fails once `max_segments` is exceeded.
/// The integrand is never evaluated at the endpoints.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_segments: usize,
) -> Result<Integral> {
    let (value, error) = gauss_kronrod(&f, a, b);
    let mut evaluations = 15;
    if !value.is_finite() {
        return Err(Error::QuadratureNonconvergence {
            tolerance: abs_tol,
            estimate: f64::INFINITY,
            evaluations,
        });
    }
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total_error = error;

    while total_error > abs_tol {
        if heap.len() >= max_segments {
            return Err(Error::QuadratureNonconvergence {
                tolerance: abs_tol,
                estimate: total_error,
                evaluations,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let (lv, le) = gauss_kronrod(&f, worst.a, mid);
        let (rv, re) = gauss_kronrod(&f, mid, worst.b);
        evaluations += 30;
        if !(lv.is_finite() && rv.is_finite()) {
            return Err(Error::QuadratureNonconvergence {
                tolerance: abs_tol,
                estimate: f64::INFINITY,
                evaluations,
            });
        }
        total_error += le + re - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: lv, error: le });
        heap.push(Segment { a: mid, b: worst.b, value: rv, error: re });
        // The running error sum drifts; resum occasionally.
        if evaluations % 3000 == 15 {
            total_error = heap.iter().map(|s| s.error).sum();
        }
    }
    let value = heap.iter().map(|s| s.value).sum();
    let error = heap.iter().map(|s| s.error).sum();
    Ok(Integral { value, error, evaluations })
}

/// A fixed quadrature rule on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct FixedRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl FixedRule {
    /// `m`-point Gauss–Legendre rule on each of `panels` equal panels of `[0, 1]`.
    pub fn composite_gauss_legendre(m: usize, panels: usize) -> Self {
        let (x, w) = gauss_legendre(m);
        let mut nodes = Vec::with_capacity(m * panels);
        let mut weights = Vec::with_capacity(m * panels);
        let width = 1.0 / panels as f64;
        for p in 0..panels {
            let left = p as f64 * width;
            for (&xi, &wi) in x.iter().zip(&w) {
                nodes.push(left + 0.5 * width * (xi + 1.0));
                weights.push(0.5 * width * wi);
            }
        }
        FixedRule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// by Newton iteration on the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Recurrence for P_n(x) and its derivative.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pm1) / (x * x - 1.0);
            let step = pn / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exactness_of_gauss_legendre() {
        let (x, w) = gauss_legendre(10);
        // Exact for degree <= 19.
        let integral: f64 = x.iter().zip(&w).map(|(&x, &w)| w * x.powi(18)).sum();
        assert!((integral - 2.0 / 19.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn odd_rule_has_zero_centre_node() {
        let (x, w) = gauss_legendre(5);
        assert!(x[2].abs() < 1e-16);
        assert!((w[2] - 128.0 / 225.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_log_singularity() {
        // ∫₀¹ -ln x dx = 1
        let r = integrate(|x| -x.ln(), 0.0, 1.0, 1e-10, 500).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn adaptive_smooth() {
        let r = integrate(|x| x.exp(), 0.0, 2.0, 1e-12, 100).unwrap();
        assert!((r.value - (2f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn adaptive_reports_nonconvergence() {
        let r = integrate(|x| 1.0 / x, 0.0, 1.0, 1e-12, 20);
        assert!(matches!(r, Err(Error::QuadratureNonconvergence { .. })));
    }

    #[test]
    fn composite_rule_integrates_kink() {
        let rule = FixedRule::composite_gauss_legendre(8, 2);
        let v = rule.integrate(|x| (x - 0.5).abs());
        assert!((v - 0.25).abs() < 1e-14);
    }
}
