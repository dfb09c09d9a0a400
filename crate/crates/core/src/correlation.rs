//! Phase covariances between channel uses.
//!
//! Two independent routes produce a [`PhaseCovariance`]: the spectral route
//! ([`covariance_from_spectrum`], one kernel integral per lag) and the
//! time-domain route ([`covariance_from_autocorrelation`], a double integral
//! of `C(t₁ − t₂)` over the two transit windows). The second exists to check
//! the first.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate, Tolerance};
use crate::spectrum::{KernelIntegrator, PowerSpectrum};

// negative eigenvalues of Σ down to this fraction of η² are quadrature noise
const PSD_SLACK: f64 = 1e-10;

/// Timing and coupling of the carriers crossing the channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// λ, scales the drive into a phase rate.
    pub coupling: f64,
    /// τ_p, time each carrier spends inside the channel.
    pub transit_time: f64,
    /// τ, time between consecutive carriers entering.
    pub spacing: f64,
    /// N, number of channel uses.
    pub uses: usize,
}

impl ChannelParams {
    pub fn new(coupling: f64, transit_time: f64, spacing: f64, uses: usize) -> Result<Self> {
        let p = Self {
            coupling,
            transit_time,
            spacing,
            uses,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.coupling.is_finite() {
            return Err(invalid("coupling", "must be finite"));
        }
        if !(self.transit_time.is_finite() && self.transit_time > 0.0) {
            return Err(invalid(
                "transit_time",
                format!("must be > 0, got {}", self.transit_time),
            ));
        }
        if !(self.spacing.is_finite() && self.spacing >= self.transit_time) {
            return Err(invalid(
                "spacing",
                format!(
                    "must be >= transit_time = {} so transits do not overlap, got {}",
                    self.transit_time, self.spacing
                ),
            ));
        }
        if self.uses == 0 {
            return Err(invalid("uses", "at least one channel use is required"));
        }
        Ok(())
    }

    /// Entry time of use `k` (zero-based).
    pub fn start_time(&self, k: usize) -> f64 {
        k as f64 * self.spacing
    }
}

/// Stationary covariance of the phases `φ₁..φ_N`: variance `η²` and
/// correlation coefficients `μ_m` by lag, with `Σ_{kk'} = η² μ_{|k-k'|}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCovariance {
    eta_sq: f64,
    mu: Vec<f64>,
}

impl PhaseCovariance {
    /// Validates `μ₀ = 1`, `|μ_m| ≤ 1` and positive semidefiniteness.
    pub fn new(eta_sq: f64, mut mu: Vec<f64>) -> Result<Self> {
        if !(eta_sq.is_finite() && eta_sq >= 0.0) {
            return Err(invalid(
                "eta_sq",
                format!("must be finite and >= 0, got {eta_sq}"),
            ));
        }
        match mu.first() {
            None => return Err(invalid("mu", "needs at least mu_0")),
            Some(&m0) if (m0 - 1.0).abs() > 1e-12 => {
                return Err(invalid("mu", format!("mu_0 must be 1, got {m0}")))
            }
            _ => mu[0] = 1.0,
        }
        if let Some(m) = mu.iter().find(|m| m.is_nan() || m.abs() > 1.0 + PSD_SLACK) {
            return Err(invalid("mu", format!("|mu_m| must be <= 1, got {m}")));
        }
        let cov = Self { eta_sq, mu };
        let min = cov.min_correlation_eigenvalue();
        if min < -PSD_SLACK {
            return Err(Error::NotPositiveSemidefinite {
                min_eigenvalue: min * eta_sq,
            });
        }
        Ok(cov)
    }

    /// Covariance with single-use damping `g = e^{-2η²}`.
    pub fn from_damping(g: f64, mu: Vec<f64>) -> Result<Self> {
        if !(g > 0.0 && g <= 1.0) {
            return Err(Error::Domain(format!("damping g = {g}")));
        }
        Self::new(-0.5 * g.ln(), mu)
    }

    /// Independent uses: `μ_m = 0` for `m ≥ 1`.
    pub fn memoryless(g: f64, uses: usize) -> Result<Self> {
        let mut mu = vec![0.0; uses.max(1)];
        mu[0] = 1.0;
        Self::from_damping(g, mu)
    }

    pub fn uses(&self) -> usize {
        self.mu.len()
    }

    pub fn eta_sq(&self) -> f64 {
        self.eta_sq
    }

    /// Single-use coherence damping `g = e^{-2η²}`.
    pub fn damping(&self) -> f64 {
        (-2.0 * self.eta_sq).exp()
    }

    /// Single-use error probability `ε = (1 − g)/2`.
    pub fn epsilon(&self) -> f64 {
        0.5 * (1.0 - self.damping())
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// `μ_m`; zero beyond the stored lags.
    pub fn mu_at(&self, lag: usize) -> f64 {
        self.mu.get(lag).copied().unwrap_or(0.0)
    }

    /// `⟨φ_k φ_{k'}⟩`.
    pub fn covariance(&self, k: usize, k_prime: usize) -> f64 {
        self.eta_sq * self.mu_at(k.abs_diff(k_prime))
    }

    /// Dense `N×N` matrix `Σ`.
    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        let n = self.uses();
        DMatrix::from_fn(n, n, |i, j| self.covariance(i, j))
    }

    fn correlation_matrix(&self) -> DMatrix<f64> {
        let n = self.uses();
        DMatrix::from_fn(n, n, |i, j| self.mu[i.abs_diff(j)])
    }

    fn min_correlation_eigenvalue(&self) -> f64 {
        if self.uses() == 1 {
            return 1.0;
        }
        SymmetricEigen::new(self.correlation_matrix())
            .eigenvalues
            .min()
    }

    /// Smallest eigenvalue of `Σ`.
    pub fn min_eigenvalue(&self) -> f64 {
        self.eta_sq * self.min_correlation_eigenvalue()
    }

    /// Same `η²`, correlations truncated to the first `uses` lags.
    pub fn truncated(&self, uses: usize) -> Result<Self> {
        if uses == 0 || uses > self.uses() {
            return Err(Error::DimensionMismatch {
                expected: self.uses(),
                found: uses,
            });
        }
        Ok(Self {
            eta_sq: self.eta_sq,
            mu: self.mu[..uses].to_vec(),
        })
    }
}

/// Spectral route: `⟨φ_k φ_{k'}⟩ = λ² I(|k − k'|τ)`.
pub fn covariance_from_spectrum(
    spectrum: &PowerSpectrum,
    params: &ChannelParams,
) -> Result<PhaseCovariance> {
    params.validate()?;
    let kernel = KernelIntegrator::new(*spectrum, params.transit_time)?;
    let zero = kernel.zero_lag();
    let mut mu = Vec::with_capacity(params.uses);
    mu.push(1.0);
    for m in 1..params.uses {
        mu.push(kernel.at(params.start_time(m))? / zero);
    }
    PhaseCovariance::new(params.coupling * params.coupling * zero, mu)
}

/// `(λ²/4) ∫∫ C(t₁ − t₂)` over `[start_1, start_1 + τ_p] × [start_2, start_2 + τ_p]`,
/// by nested adaptive quadrature.
pub fn window_covariance(
    spectrum: &PowerSpectrum,
    coupling: f64,
    transit: f64,
    start_1: f64,
    start_2: f64,
) -> Result<f64> {
    let scale = spectrum.variance()? * transit;
    let (lo2, hi2) = (start_2, start_2 + transit);
    let inner = |t1: f64| -> Result<f64> {
        let mut points = vec![lo2];
        if t1 > lo2 && t1 < hi2 {
            points.push(t1);
        }
        points.push(hi2);
        let q = integrate(
            |t2| spectrum.autocorrelation(t1 - t2).unwrap_or(f64::NAN),
            &points,
            Tolerance::absolute(1e-14 * scale),
        )?;
        Ok(q.value)
    };

    let (lo1, hi1) = (start_1, start_1 + transit);
    let mut points = vec![lo1];
    points.extend([lo2, hi2].into_iter().filter(|&t| t > lo1 && t < hi1));
    points.push(hi1);
    points.sort_by(f64::total_cmp);

    // the inner error is carried out through the closure
    let failure = std::cell::Cell::new(None);
    let q = integrate(
        |t1| match inner(t1) {
            Ok(v) => v,
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        },
        &points,
        Tolerance::absolute(1e-13 * scale * transit),
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(0.25 * coupling * coupling * q.value)
}

/// Time-domain route, an independent check of [`covariance_from_spectrum`].
pub fn covariance_from_autocorrelation(
    spectrum: &PowerSpectrum,
    params: &ChannelParams,
) -> Result<PhaseCovariance> {
    params.validate()?;
    if matches!(spectrum, PowerSpectrum::White { .. }) {
        return Err(Error::WhiteNoiseUndefined);
    }
    let cov = |m: usize| {
        window_covariance(
            spectrum,
            params.coupling,
            params.transit_time,
            0.0,
            params.start_time(m),
        )
    };
    let eta_sq = cov(0)?;
    let mut mu = vec![1.0];
    for m in 1..params.uses {
        mu.push(cov(m)? / eta_sq);
    }
    PhaseCovariance::new(eta_sq, mu)
}

/// `ε = (1 − g)/2`.
pub fn epsilon_from_g(g: f64) -> Result<f64> {
    if !(g > 0.0 && g <= 1.0) {
        return Err(Error::Domain(format!("damping g = {g}")));
    }
    Ok(0.5 * (1.0 - g))
}

/// `g = 1 − 2ε`.
pub fn g_from_epsilon(epsilon: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&epsilon) {
        return Err(Error::Domain(format!(
            "error probability epsilon = {epsilon}"
        )));
    }
    Ok(1.0 - 2.0 * epsilon)
}

/// Which constraint a `(μ₁, μ₂)` pair breaks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuViolation {
    /// μ₁ outside `[0, 1]`.
    Mu1OutOfRange { mu1: f64 },
    /// μ₂ > μ₁.
    AboveMu1 { mu1: f64, mu2: f64 },
    /// μ₂ < max(0, 2μ₁² − 1).
    BelowLowerBound { mu2: f64, bound: f64 },
}

impl fmt::Display for MuViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Mu1OutOfRange { mu1 } => write!(f, "mu1 = {mu1} outside [0, 1]"),
            Self::AboveMu1 { mu1, mu2 } => write!(f, "mu2 = {mu2} exceeds mu1 = {mu1}"),
            Self::BelowLowerBound { mu2, bound } => {
                write!(f, "mu2 = {mu2} below lower bound {bound}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Feasibility {
    Feasible,
    Infeasible(MuViolation),
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Self::Feasible)
    }
}

/// `max(0, 2μ₁² − 1)`.
pub fn mu2_lower_bound(mu1: f64) -> f64 {
    (2.0 * mu1 * mu1 - 1.0).max(0.0)
}

/// Checks `0 ≤ μ₁ ≤ 1` and `max(0, 2μ₁² − 1) ≤ μ₂ ≤ μ₁`.
pub fn check_mu_feasible(mu1: f64, mu2: f64) -> Feasibility {
    const SLACK: f64 = 1e-12;
    if !(-SLACK..=1.0 + SLACK).contains(&mu1) {
        return Feasibility::Infeasible(MuViolation::Mu1OutOfRange { mu1 });
    }
    if mu2.is_nan() || mu2 > mu1 + SLACK {
        return Feasibility::Infeasible(MuViolation::AboveMu1 { mu1, mu2 });
    }
    let bound = mu2_lower_bound(mu1);
    if mu2 < bound - SLACK {
        return Feasibility::Infeasible(MuViolation::BelowLowerBound { mu2, bound });
    }
    Feasibility::Feasible
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert!(ChannelParams::new(1.0, 1.0, 1.0, 3).is_ok());
        assert!(ChannelParams::new(1.0, 0.0, 1.0, 3).is_err());
        assert!(ChannelParams::new(1.0, 1.0, 0.5, 3).is_err());
        assert!(ChannelParams::new(1.0, 1.0, 1.0, 0).is_err());
    }

    #[test]
    fn epsilon_conversion() {
        assert_eq!(epsilon_from_g(1.0).unwrap(), 0.0);
        assert!((epsilon_from_g(0.998).unwrap() - 1e-3).abs() < 1e-15);
        assert!(matches!(epsilon_from_g(0.0), Err(Error::Domain(_))));
        assert!(epsilon_from_g(1.2).is_err());
        assert!((g_from_epsilon(1e-3).unwrap() - 0.998).abs() < 1e-15);
        assert!(g_from_epsilon(0.5).is_err());
    }

    #[test]
    fn feasibility_examples() {
        assert_eq!(check_mu_feasible(1.0, 1.0), Feasibility::Feasible);
        match check_mu_feasible(0.9, 0.5) {
            Feasibility::Infeasible(MuViolation::BelowLowerBound { bound, .. }) => {
                assert!((bound - 0.62).abs() < 1e-12)
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            check_mu_feasible(0.5, 0.6),
            Feasibility::Infeasible(MuViolation::AboveMu1 { .. })
        ));
        assert!(matches!(
            check_mu_feasible(0.2, -0.1),
            Feasibility::Infeasible(MuViolation::BelowLowerBound { .. })
        ));
        assert!(matches!(
            check_mu_feasible(1.2, 0.5),
            Feasibility::Infeasible(MuViolation::Mu1OutOfRange { .. })
        ));
        assert!(check_mu_feasible(0.0, 0.0).is_feasible());
    }

    #[test]
    fn covariance_rejects_bad_mu() {
        assert!(PhaseCovariance::new(0.1, vec![0.9, 0.1]).is_err());
        assert!(PhaseCovariance::new(0.1, vec![1.0, 1.5]).is_err());
        // μ₁ = 0.9 with μ₂ = 0 breaks the 3×3 minor condition
        assert!(matches!(
            PhaseCovariance::new(0.1, vec![1.0, 0.9, 0.0]),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
        // rank-one but valid
        assert!(PhaseCovariance::new(0.1, vec![1.0, 1.0, 1.0]).is_ok());
    }

    #[test]
    fn damping_roundtrip() {
        let cov = PhaseCovariance::from_damping(0.998, vec![1.0, 0.3]).unwrap();
        assert!((cov.damping() - 0.998).abs() < 1e-15);
        assert!((cov.epsilon() - 1e-3).abs() < 1e-15);
        assert_eq!(cov.covariance(0, 1), cov.covariance(1, 0));
        assert!(PhaseCovariance::from_damping(0.0, vec![1.0]).is_err());
    }

    #[test]
    fn lorentzian_unit_parameters() {
        let spec = PowerSpectrum::lorentzian(1.0, 1.0).unwrap();
        let params = ChannelParams::new(1.0, 1.0, 1.0, 3).unwrap();
        let exact = 0.5 * (-1.0f64).exp();
        let a = covariance_from_spectrum(&spec, &params).unwrap();
        let b = covariance_from_autocorrelation(&spec, &params).unwrap();
        assert!((a.eta_sq() - exact).abs() < 1e-9 * exact, "{}", a.eta_sq());
        assert!((b.eta_sq() - exact).abs() < 1e-9 * exact, "{}", b.eta_sq());
    }

    #[test]
    fn white_is_memoryless() {
        let spec = PowerSpectrum::white(2.0).unwrap();
        let params = ChannelParams::new(0.5, 1.0, 1.0, 4).unwrap();
        let cov = covariance_from_spectrum(&spec, &params).unwrap();
        assert!((cov.eta_sq() - 0.25 * 2.0 / 4.0).abs() < 1e-10);
        for m in 1..4 {
            assert!(cov.mu()[m].abs() < 1e-8);
        }
        assert_eq!(
            covariance_from_autocorrelation(&spec, &params),
            Err(Error::WhiteNoiseUndefined)
        );
    }
}
