//! Reproducible sampling from bivariate Archimedean copulas.
//!
//! Streams are ChaCha8 keyed by a master seed and selected by a 64-bit stream
//! id, so every replication owns an independent stream that does not depend on
//! the order in which replications are executed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::copula::Generator;
use crate::empirical::PseudoSample;
use crate::error::{Error, Result};

/// Bracket and tolerance for inverting the Kendall distribution.
const KENDALL_LOWER: f64 = 1e-12;
const KENDALL_TOLERANCE: f64 = 1e-12;

/// Identifies a ChaCha8 stream: (master seed, stream id).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeededRng {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeededRng {
    pub const ALGORITHM: &'static str = "chacha8";

    pub fn new(master_seed: u64) -> Self {
        SeededRng { master_seed, stream_id: 0 }
    }

    pub fn with_stream(master_seed: u64, stream_id: u64) -> Self {
        SeededRng { master_seed, stream_id }
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn generator(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// SplitMix64 finaliser.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream for replication `index`: stream id = hash(master seed, index).
pub fn derive_replication_rng(master: SeededRng, replication_index: u64) -> SeededRng {
    let stream_id = mix64(mix64(master.master_seed) ^ replication_index.wrapping_mul(0xD6E8_FEB8_6659_FD93));
    SeededRng { master_seed: master.master_seed, stream_id }
}

/// Solve K(w) = t for w ∈ [1e-12, 1] by bisection.
pub fn inverse_kendall<G: Generator + ?Sized>(generator: &G, t: f64) -> Result<f64> {
    let mut lo = KENDALL_LOWER;
    let mut hi = 1.0;
    let k_lo = generator.kendall_df(lo);
    if t <= k_lo {
        return Ok(lo);
    }
    if !(k_lo.is_finite() && generator.kendall_df(hi) >= t) {
        return Err(Error::BisectionFailure(format!(
            "Kendall distribution does not bracket t = {t}"
        )));
    }
    while hi - lo > KENDALL_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        let k = generator.kendall_df(mid);
        if !k.is_finite() {
            return Err(Error::BisectionFailure(format!("K({mid}) is not finite")));
        }
        if k < t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Draw `n` pairs from the bivariate Archimedean copula of `generator`.
///
/// With S, T ~ U(0,1) independent and W = K⁻¹(T), the pair
/// (φ⁻¹(Sφ(W)), φ⁻¹((1−S)φ(W))) has the copula as its joint df.
pub fn sample_archimedean_bivariate<G: Generator + ?Sized>(
    generator: &G,
    n: usize,
    rng: SeededRng,
) -> Result<PseudoSample> {
    if n == 0 {
        return Err(Error::Domain("sample size must be positive".into()));
    }
    let mut stream = rng.generator();
    let mut u = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for _ in 0..n {
        let s: f64 = stream.random();
        let t: f64 = stream.random();
        let w = inverse_kendall(generator, t)?;
        let level = generator.phi(w);
        u.push(generator.phi_inverse(s * level));
        v.push(generator.phi_inverse((1.0 - s) * level));
    }
    PseudoSample::from_columns(vec![u, v])
}
