//! Wavelet shrinkage with a raised-cosine spike-and-slab prior.
//!
//! The crate implements the full pipeline: periodized Daubechies transforms
//! ([`dwt`]), the raised-cosine and beta-slab posterior-mean rules plus
//! classical soft thresholding ([`rules`]), data-driven threshold and
//! hyperparameter selection ([`policies`]), the Donoho–Johnstone test-bench
//! signals ([`signals`]), and the replicated simulation study plus the
//! frequentist and Bayes risk engine ([`analysis`]).
//!
//! Everything downstream of a seed is deterministic: replications draw from
//! keyed counter-derived RNG streams ([`rng`]), so parallel and sequential
//! runs of the study produce bit-identical reports. Compile with
//! `--no-default-features` to drop the rayon dependency; the sequential
//! entry points are always available.

pub mod analysis;
pub mod dwt;
pub mod error;
pub mod policies;
pub mod quad;
pub mod rng;
pub mod rules;
pub mod signals;
pub mod special;

pub(crate) mod stats;

#[doc(inline)]
pub use error::{Error, Result};

#[doc(inline)]
pub use dwt::{build_filter, forward, inverse, QuadratureFilter, WaveletDecomposition};

#[doc(inline)]
pub use rules::{
    beta_slab_rule, raised_cosine_rule, soft_threshold, BetaSlabParams, RaisedCosineParams,
};

#[doc(inline)]
pub use policies::{select_threshold, PolicyKind, ThresholdPolicy};

#[doc(inline)]
pub use signals::{add_gaussian_noise, dj_function, DjFunction};

#[doc(inline)]
pub use analysis::{bayes_risk, risk_curves, run_simulation, SimulationConfig, SimulationReport};
