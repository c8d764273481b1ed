//! Copula-moment (CM) estimation for multi-parameter Archimedean copulas.
//!
//! The CM estimator matches the moments M_k = E[C(U)^k] of the copula
//! evaluated at its own random vector against their empirical counterparts
//! built from the empirical copula of the pseudo-observations. For the
//! two-parameter transformed Gumbel copula the moment system has an explicit
//! solution. The crate also ships the competing estimators (pseudo maximum
//! likelihood, τ-inversion, (τ, ρ)-inversion), the sandwich asymptotic
//! covariance, a seeded sampler and a Monte Carlo harness for bias/RMSE
//! studies.
//!
//! Parallel work (replications, O(n²) counting) goes through [`exec`], which
//! uses rayon when the `parallel` feature is enabled and falls back to plain
//! iteration otherwise. Results are bit-identical either way.

pub mod cli;
pub mod copula;
pub mod empirical;
pub mod error;
pub mod estimators;
pub mod exec;
pub mod format;
pub mod harness;
pub mod quadrature;
pub mod sampling;

pub use copula::{
    kendall_df, moment_by_quadrature, moment_closed_form, rho_of_params, tau_of_params,
    transformed_gumbel_cdf, CopulaModel, Generator, TransformedGumbelParams,
};
pub use empirical::{
    empirical_copula_at, empirical_moments, empirical_rho, empirical_tau, pseudo_observations,
    MomentConvention, MomentVector, PseudoSample, RawSample,
};
pub use error::{Error, Result};
pub use estimators::{EstimateReport, Method};
pub use exec::Execution;
pub use sampling::{derive_replication_rng, sample_archimedean_bivariate, SeededRng};
