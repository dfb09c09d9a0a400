//! Dephasing quantum channel with memory.
//!
//! Carriers cross a channel one after another while a stationary Gaussian
//! drive `ξ(t)` shifts their phases. Correlations of the drive between
//! transits make consecutive uses correlated; this crate computes the
//! resulting coherence decay factors exactly, evaluates the three-qubit
//! code and a two-qubit subspace code on top of them, and provides Monte
//! Carlo estimators that check every closed form independently.
//!
//! Module map:
//!
//! - [`spectrum`]: drive spectra and the windowed kernel integral
//! - [`correlation`]: phase covariance `η²`, `g`, `μ_m`, feasibility of `(μ₁, μ₂)`
//! - [`channel`]: coherence labels, density matrices, the `N`-use map
//! - [`circuit`]: gates and the encode/decode circuits of the phase code
//! - [`codes`]: closed-form and circuit-based code fidelities
//! - [`montecarlo`]: phase sampling and stochastic estimators
//! - [`quadrature`]: adaptive Gauss-Kronrod integration

pub mod channel;
pub mod circuit;
pub mod codes;
pub mod correlation;
pub mod error;
pub mod montecarlo;
pub mod quadrature;
pub mod spectrum;

pub use channel::{apply_channel, decay_factor, CoherenceLabel, DensityMatrix};
pub use circuit::{Gate, JointState};
pub use codes::CodePoint;
pub use correlation::{
    check_mu_feasible, covariance_from_autocorrelation, covariance_from_spectrum, epsilon_from_g,
    ChannelParams, Feasibility, PhaseCovariance,
};
pub use error::{Error, Result};
pub use montecarlo::{McEstimate, PhaseEnsemble};
pub use spectrum::{kernel_integral, KernelIntegrator, PowerSpectrum};
