//! Entanglement fidelities and error probabilities of the coding schemes.
//!
//! Closed forms take the single-use damping `g`; the `_eps` helpers convert
//! from the single-use error probability with `g = 1 − 2ε`. Infeasible
//! `(μ₁, μ₂)` pairs are evaluated anyway and only logged, since the
//! formulas stay well defined there.

use log::warn;

use crate::channel::{apply_channel, DensityMatrix};
use crate::circuit::{self, prepare_bell_with_ancillas, tqc_decode, tqc_encode, JointState};
use crate::correlation::{check_mu_feasible, mu2_lower_bound, Feasibility, PhaseCovariance};
use crate::error::{Error, Result};

fn check_damping(g: f64) -> Result<()> {
    if g > 0.0 && g <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("damping g = {g}")))
    }
}

fn warn_if_infeasible(mu1: f64, mu2: f64) {
    if let Feasibility::Infeasible(v) = check_mu_feasible(mu1, mu2) {
        warn!("infeasible correlation pair: {v}");
    }
}

/// A point `(g, μ₁, μ₂)` of the three-qubit code's parameter space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodePoint {
    pub g: f64,
    pub mu1: f64,
    pub mu2: f64,
}

impl CodePoint {
    pub fn new(g: f64, mu1: f64, mu2: f64) -> Result<Self> {
        check_damping(g)?;
        Ok(Self { g, mu1, mu2 })
    }

    pub fn from_epsilon(epsilon: f64, mu1: f64, mu2: f64) -> Result<Self> {
        Self::new(crate::correlation::g_from_epsilon(epsilon)?, mu1, mu2)
    }

    pub fn epsilon(&self) -> f64 {
        0.5 * (1.0 - self.g)
    }

    pub fn feasibility(&self) -> Feasibility {
        check_mu_feasible(self.mu1, self.mu2)
    }

    /// Three-use covariance with `μ = (1, μ₁, μ₂)`.
    pub fn covariance(&self) -> Result<PhaseCovariance> {
        PhaseCovariance::from_damping(self.g, vec![1.0, self.mu1, self.mu2])
    }

    pub fn fe_tqc(&self) -> f64 {
        tqc_closed_form(self.g, self.mu1, self.mu2, self.mu1)
    }

    pub fn pe_tqc(&self) -> f64 {
        1.0 - self.fe_tqc()
    }
}

/// Single use without coding: `(1 + g)/2`.
pub fn fe_single(g: f64) -> Result<f64> {
    check_damping(g)?;
    Ok(0.5 * (1.0 + g))
}

fn tqc_closed_form(g: f64, qa: f64, qb: f64, ab: f64) -> f64 {
    let p = |e: f64| g.powf(2.0 * e);
    let bracket = p(qa - qb - ab) + p(-qa + qb - ab) + p(-qa - qb + ab) + p(qa + qb + ab);
    0.5 + 0.75 * g - g * g * g / 16.0 * bracket
}

/// Three-qubit code fidelity for arbitrary pairwise correlations between
/// the uses carrying `Q`, `A` and `B`.
pub fn fe_tqc_general(g: f64, mu_qa: f64, mu_qb: f64, mu_ab: f64) -> Result<f64> {
    check_damping(g)?;
    for m in [mu_qa, mu_qb, mu_ab] {
        if !m.is_finite() {
            return Err(Error::Domain(format!("correlation {m}")));
        }
    }
    Ok(tqc_closed_form(g, mu_qa, mu_qb, mu_ab))
}

/// Stationary case `μ_QA = μ_AB = μ₁`, `μ_QB = μ₂`:
/// `½ + ¾g − (g³/16)[2g^{−2μ₂} + g^{2μ₂−4μ₁} + g^{2μ₂+4μ₁}]`.
pub fn fe_tqc_memory(g: f64, mu1: f64, mu2: f64) -> Result<f64> {
    check_damping(g)?;
    warn_if_infeasible(mu1, mu2);
    let bracket =
        2.0 * g.powf(-2.0 * mu2) + g.powf(2.0 * mu2 - 4.0 * mu1) + g.powf(2.0 * mu2 + 4.0 * mu1);
    Ok(0.5 + 0.75 * g - g * g * g / 16.0 * bracket)
}

/// `1 − fe_tqc_memory`.
pub fn pe_tqc_memory(g: f64, mu1: f64, mu2: f64) -> Result<f64> {
    Ok(1.0 - fe_tqc_memory(g, mu1, mu2)?)
}

pub fn pe_tqc_memory_eps(epsilon: f64, mu1: f64, mu2: f64) -> Result<f64> {
    pe_tqc_memory(crate::correlation::g_from_epsilon(epsilon)?, mu1, mu2)
}

/// Small-ε expansion `1 − (3 + 4μ₁² + 2μ₂²)ε²`, meant for `ε ≲ 0.05`.
pub fn fe_tqc_approx(epsilon: f64, mu1: f64, mu2: f64) -> f64 {
    1.0 - (3.0 + 4.0 * mu1 * mu1 + 2.0 * mu2 * mu2) * epsilon * epsilon
}

/// Error probability of the two-qubit code on span{|01⟩, |10⟩}: its logical
/// coherence has `s = (1, −1)` and decays as `g^{2 − 2μ₁}`.
pub fn pe_two_qubit(g: f64, mu1: f64) -> Result<f64> {
    check_damping(g)?;
    Ok(0.5 * (1.0 - g.powf(2.0 * (1.0 - mu1))))
}

pub fn pe_two_qubit_eps(epsilon: f64, mu1: f64) -> Result<f64> {
    pe_two_qubit(crate::correlation::g_from_epsilon(epsilon)?, mu1)
}

/// Stationary point of `P_e` in `μ₂` and its projection onto the feasible band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mu2Optimum {
    /// `−¼ log_g[(g^{4μ₁} + g^{−4μ₁})/2]`.
    pub value: f64,
    /// `value` clamped to `[max(0, 2μ₁² − 1), μ₁]`. `P_e` is convex in μ₂,
    /// so this is the constrained minimiser.
    pub clamped: f64,
    pub inside_band: bool,
}

pub fn mu2_opt(g: f64, mu1: f64) -> Result<Mu2Optimum> {
    if !(g > 0.0 && g < 1.0) {
        return Err(Error::Domain(format!(
            "damping g = {g} (log base must lie in (0, 1))"
        )));
    }
    if !(0.0..=1.0).contains(&mu1) {
        return Err(Error::Domain(format!("mu1 = {mu1}")));
    }
    let ln_g = g.ln();
    let value = -0.25 * (4.0 * mu1 * ln_g).cosh().ln() / ln_g;
    let lower = mu2_lower_bound(mu1);
    Ok(Mu2Optimum {
        value,
        clamped: value.clamp(lower, mu1),
        inside_band: value >= lower && value <= mu1,
    })
}

/// Unencoded single use: Bell pair on `(R, Q)`, `Q` through one use.
pub fn fe_single_via_circuit(g: f64) -> Result<f64> {
    let bell = circuit::bell_pair();
    let rho = DensityMatrix::pure(&bell)?;
    let cov = PhaseCovariance::from_damping(g, vec![1.0])?;
    let out = apply_channel(&rho, &cov, &[circuit::SYSTEM])?;
    circuit::entanglement_fidelity(&out, &bell)
}

/// Encoded state after transmission of `Q, A, B` (in that order) and decoding.
pub fn tqc_output(cov: &PhaseCovariance) -> Result<JointState> {
    if cov.uses() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: cov.uses(),
        });
    }
    let encoded = tqc_encode(&prepare_bell_with_ancillas());
    let sent = apply_channel(encoded.rho(), cov, &circuit::TRANSMITTED)?;
    Ok(tqc_decode(&JointState::new(sent)?))
}

/// Exact three-qubit code fidelity by simulating the full circuit.
pub fn fe_tqc_via_circuit(cov: &PhaseCovariance) -> Result<f64> {
    Ok(tqc_output(cov)?.fidelity())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_use() {
        assert_eq!(fe_single(1.0).unwrap(), 1.0);
        assert!((fe_single(0.998).unwrap() - 0.999).abs() < 1e-15);
        assert_eq!(fe_single(0.5).unwrap(), 0.75);
        assert!(fe_single(0.0).is_err());
        for g in [0.2, 0.5, 0.998] {
            assert!((fe_single_via_circuit(g).unwrap() - 0.5 * (1.0 + g)).abs() < 1e-12);
        }
    }

    #[test]
    fn general_reduces_to_memory_form() {
        let g = 0.93;
        assert!(
            (fe_tqc_general(g, 0.0, 0.0, 0.0).unwrap() - (0.5 + 0.75 * g - 0.25 * g.powi(3))).abs()
                < 1e-15
        );
        for (m1, m2) in [(0.3, 0.1), (0.8, 0.4), (1.0, 1.0)] {
            let a = fe_tqc_general(g, m1, m2, m1).unwrap();
            let b = fe_tqc_memory(g, m1, m2).unwrap();
            assert!((a - b).abs() < 1e-15);
        }
        let x = fe_tqc_general(g, 0.2, 0.5, 0.7).unwrap();
        let y = fe_tqc_general(g, 0.7, 0.5, 0.2).unwrap();
        assert!((x - y).abs() < 1e-15);
    }

    #[test]
    fn small_error_limits() {
        let eps: f64 = 1e-3;
        let pe0 = pe_tqc_memory_eps(eps, 0.0, 0.0).unwrap();
        assert!((pe0 / (3.0 * eps * eps) - 1.0).abs() < 0.02);
        let pe1 = pe_tqc_memory_eps(eps, 1.0, 1.0).unwrap();
        assert!((pe1 / (9.0 * eps * eps) - 1.0).abs() < 0.02);
        assert_eq!(fe_tqc_approx(0.0, 0.4, 0.2), 1.0);
        assert!((fe_tqc_approx(0.01, 1.0, 1.0) - (1.0 - 9e-4)).abs() < 1e-15);
    }

    #[test]
    fn two_qubit_code() {
        assert_eq!(pe_two_qubit(0.998, 1.0).unwrap(), 0.0);
        let g: f64 = 0.998;
        let p = pe_two_qubit(g, 0.0).unwrap();
        assert!((p - 0.5 * (1.0 - g * g)).abs() < 1e-16);
        assert!((p - 2e-3).abs() < 1e-5);
        assert!(p > pe_tqc_memory(g, 0.0, 0.0).unwrap());
    }

    #[test]
    fn mu2_optimum() {
        let o = mu2_opt(0.998, 0.0).unwrap();
        assert_eq!(o.value, 0.0);
        assert!(o.inside_band);
        assert!(mu2_opt(1.0, 0.5).is_err());
        assert!(mu2_opt(0.5, 1.5).is_err());
        let o = mu2_opt(0.998, 0.9).unwrap();
        assert!(!o.inside_band);
        assert_eq!(o.clamped, mu2_lower_bound(0.9));
    }

    #[test]
    fn circuit_matches_closed_form() {
        for (g, m1, m2) in [
            (0.9, 0.0, 0.0),
            (0.7, 0.5, 0.25),
            (0.998, 1.0, 1.0),
            (1.0, 0.6, 0.3),
        ] {
            let cov = PhaseCovariance::from_damping(g, vec![1.0, m1, m2]).unwrap();
            let circ = fe_tqc_via_circuit(&cov).unwrap();
            assert!((circ - fe_tqc_memory(g, m1, m2).unwrap()).abs() < 1e-12);
        }
        let cov = PhaseCovariance::from_damping(0.9, vec![1.0, 0.2]).unwrap();
        assert!(matches!(
            fe_tqc_via_circuit(&cov),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn code_point_helpers() {
        let p = CodePoint::from_epsilon(1e-3, 0.5, 0.25).unwrap();
        assert!((p.g - 0.998).abs() < 1e-15);
        assert!(p.feasibility().is_feasible());
        assert!((p.pe_tqc() - pe_tqc_memory(p.g, 0.5, 0.25).unwrap()).abs() < 1e-16);
        let cov = p.covariance().unwrap();
        assert!((fe_tqc_via_circuit(&cov).unwrap() - p.fe_tqc()).abs() < 1e-12);
    }
}
