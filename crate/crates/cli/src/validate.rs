//! Oracle suites run by `memphase validate`.
//!
//! The report holds measured deviations only, never timings, so a fixed
//! config and seed always reproduce it byte for byte.

use std::fmt::Write as _;

use anyhow::Result;
use memphase_core::channel::{decay_factor, CoherenceLabel};
use memphase_core::codes::{fe_tqc_memory, fe_tqc_via_circuit};
use memphase_core::correlation::{
    check_mu_feasible, covariance_from_autocorrelation, covariance_from_spectrum, g_from_epsilon,
    mu2_lower_bound, Feasibility, PhaseCovariance,
};
use memphase_core::montecarlo::{
    mc_decay_factor, mc_tqc_fidelity, sample_phases_direct, sample_phases_trajectory,
};
use memphase_core::spectrum::{white_kernel_closed_form, KernelIntegrator, PowerSpectrum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;

pub const ROUTE_TOLERANCE: f64 = 1e-7;
pub const CIRCUIT_TOLERANCE: f64 = 1e-12;
pub const SIGMA_LIMIT: f64 = 4.0;
pub const DISCRETISATION_ALLOWANCE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub suites: Vec<SuiteResult>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn failures(&self) -> usize {
        self.suites
            .iter()
            .filter(|s| s.status == Status::Fail)
            .count()
    }

    pub fn render(&self, config: &RunConfig) -> String {
        let mut out = String::new();
        let mut line = |s: String| writeln!(out, "{s}").expect("writing to a String");
        line(format!("# memphase: {}", env!("CARGO_PKG_VERSION")));
        line("# command: validate".into());
        line(format!("# config_sha256: {}", config.hash()));
        line(format!("# seed: {}", config.seed));
        for w in &self.warnings {
            line(format!("[WARN] {w}"));
        }
        for s in &self.suites {
            let tag = match s.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Skip => "SKIP",
            };
            line(format!("[{tag}] {}: {}", s.name, s.detail));
        }
        let count = |st: Status| self.suites.iter().filter(|s| s.status == st).count();
        line(format!(
            "summary: {} passed, {} failed, {} skipped, {} warnings",
            count(Status::Pass),
            count(Status::Fail),
            count(Status::Skip),
            self.warnings.len()
        ));
        out
    }
}

fn judged(name: &'static str, pass: bool, detail: String) -> SuiteResult {
    SuiteResult {
        name,
        status: if pass { Status::Pass } else { Status::Fail },
        detail,
    }
}

fn skipped(name: &'static str, detail: impl Into<String>) -> SuiteResult {
    SuiteResult {
        name,
        status: Status::Skip,
        detail: detail.into(),
    }
}

/// Distinct substream seeds per suite, all derived from the user seed.
fn suite_seed(config: &RunConfig, suite: u64) -> u64 {
    config
        .seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(suite)
}

pub fn run(config: &RunConfig) -> Result<Report> {
    let mut report = Report::default();
    let spectrum = config.power_spectrum()?;
    let params = config.channel_params(config.uses.max(3))?;
    let spectral = covariance_from_spectrum(&spectrum, &params)?;

    let (mu1, mu2) = match (config.mu1, config.mu2) {
        (Some(a), Some(b)) => (a, b),
        _ => (spectral.mu()[1], spectral.mu()[2]),
    };
    let pair = check_mu_feasible(mu1, mu2);
    if let Feasibility::Infeasible(why) = &pair {
        let msg = format!("(mu1, mu2) = ({mu1}, {mu2}) is infeasible: {why}");
        log::warn!("{msg}");
        report.warnings.push(msg);
    }

    report.suites.push(routes(&spectrum, config, &spectral)?);
    report.suites.push(gaussian_identity(config, &spectral)?);
    report.suites.push(circuit(config, mu1, mu2, &pair)?);
    report.suites.push(mc_fidelity(config, mu1, mu2, &pair)?);
    report.suites.push(trajectory(&spectrum, config)?);
    Ok(report)
}

fn routes(
    spectrum: &PowerSpectrum,
    config: &RunConfig,
    spectral: &PhaseCovariance,
) -> Result<SuiteResult> {
    const NAME: &str = "spectral vs time-domain covariance";
    let params = config.channel_params(spectral.uses())?;
    let (eta_dev, mu_dev) = match spectrum {
        PowerSpectrum::White { level } => {
            // no autocorrelation function exists; compare with the closed-form kernel
            let kernel = KernelIntegrator::new(*spectrum, config.transit_time)?;
            let i0 = white_kernel_closed_form(*level, config.transit_time, 0.0);
            let eta = (kernel.zero_lag() - i0).abs() / i0;
            let mu = (1..spectral.uses())
                .map(|m| {
                    let exact =
                        white_kernel_closed_form(*level, config.transit_time, params.start_time(m));
                    (spectral.mu()[m] - exact / i0).abs()
                })
                .fold(0.0, f64::max);
            (eta, mu)
        }
        _ => {
            let direct = covariance_from_autocorrelation(spectrum, &params)?;
            let eta = (spectral.eta_sq() - direct.eta_sq()).abs() / spectral.eta_sq();
            let mu = (1..spectral.uses())
                .map(|m| (spectral.mu()[m] - direct.mu()[m]).abs())
                .fold(0.0, f64::max);
            (eta, mu)
        }
    };
    let pass = eta_dev <= ROUTE_TOLERANCE && mu_dev <= ROUTE_TOLERANCE;
    Ok(judged(
        NAME,
        pass,
        format!("eta^2 rel dev {eta_dev:.3e}, max mu dev {mu_dev:.3e} (tol {ROUTE_TOLERANCE:e})"),
    ))
}

fn gaussian_identity(config: &RunConfig, spectral: &PhaseCovariance) -> Result<SuiteResult> {
    const NAME: &str = "sampled vs exact decay factors";
    // configured correlations at the validation noise strength
    let uses = spectral.uses().min(4);
    let g = g_from_epsilon(config.mc_epsilon)?;
    let cov = PhaseCovariance::from_damping(g, spectral.mu()[..uses].to_vec())?;
    let ens = sample_phases_direct(&cov, suite_seed(config, 1), config.samples)?;
    let mut worst = 0.0f64;
    for l in 1..(1usize << uses) {
        let label = CoherenceLabel::new(0, l, uses)?;
        let exact = decay_factor(&label, &cov)?;
        let est = mc_decay_factor(&label, &ens)?;
        worst = worst
            .max((est.value.re - exact).abs() / est.standard_error.re)
            .max(est.value.im.abs() / est.standard_error.im);
    }
    Ok(judged(
        NAME,
        worst <= SIGMA_LIMIT,
        format!(
            "{} labels, worst {worst:.2} SE (limit {SIGMA_LIMIT})",
            (1 << uses) - 1
        ),
    ))
}

fn circuit(config: &RunConfig, mu1: f64, mu2: f64, pair: &Feasibility) -> Result<SuiteResult> {
    const NAME: &str = "code fidelity circuit vs closed form";
    let mut rng = ChaCha8Rng::seed_from_u64(suite_seed(config, 2));
    let mut points: Vec<(f64, f64, f64)> = (0..50)
        .map(|_| {
            let g = 0.01 + 0.99 * rng.random::<f64>();
            let m1: f64 = rng.random();
            let lo = mu2_lower_bound(m1);
            (g, m1, lo + (m1 - lo) * rng.random::<f64>())
        })
        .collect();
    if pair.is_feasible() {
        points.push((g_from_epsilon(config.mc_epsilon)?, mu1, mu2));
    }
    let mut worst = 0.0f64;
    for &(g, m1, m2) in &points {
        let cov = PhaseCovariance::from_damping(g, vec![1.0, m1, m2])?;
        worst = worst.max((fe_tqc_via_circuit(&cov)? - fe_tqc_memory(g, m1, m2)?).abs());
    }
    Ok(judged(
        NAME,
        worst <= CIRCUIT_TOLERANCE,
        format!(
            "{} points, max dev {worst:.3e} (tol {CIRCUIT_TOLERANCE:e})",
            points.len()
        ),
    ))
}

fn mc_fidelity(config: &RunConfig, mu1: f64, mu2: f64, pair: &Feasibility) -> Result<SuiteResult> {
    const NAME: &str = "sampled vs closed-form code fidelity";
    if !pair.is_feasible() {
        return Ok(skipped(NAME, "configured (mu1, mu2) is infeasible"));
    }
    let g = g_from_epsilon(config.mc_epsilon)?;
    let cov = PhaseCovariance::from_damping(g, vec![1.0, mu1, mu2])?;
    let ens = sample_phases_direct(&cov, suite_seed(config, 3), config.samples)?;
    let est = mc_tqc_fidelity(&ens)?;
    let exact = fe_tqc_memory(g, mu1, mu2)?;
    let z = (est.value - exact).abs() / est.standard_error;
    Ok(judged(
        NAME,
        z <= SIGMA_LIMIT,
        format!(
            "eps {}, F exact {exact:.8}, sampled {:.8} +- {:.2e}, {z:.2} SE (limit {SIGMA_LIMIT})",
            config.mc_epsilon, est.value, est.standard_error
        ),
    ))
}

fn trajectory(spectrum: &PowerSpectrum, config: &RunConfig) -> Result<SuiteResult> {
    const NAME: &str = "trajectory vs spectral covariance";
    if !matches!(spectrum, PowerSpectrum::Lorentzian { .. }) {
        return Ok(skipped(NAME, "needs a lorentzian spectrum"));
    }
    let uses = config.uses.min(4);
    let params = config.channel_params(uses)?;
    let target = covariance_from_spectrum(spectrum, &params)?.covariance_matrix();
    let ens = sample_phases_trajectory(
        spectrum,
        &params,
        suite_seed(config, 4),
        config.trajectory_samples,
        config.trajectory_step(),
    )?;
    let (est, se) = ens.covariance()?;
    let mut worst = 0.0f64;
    for i in 0..uses {
        for j in 0..uses {
            let allowed =
                SIGMA_LIMIT * se[(i, j)] + DISCRETISATION_ALLOWANCE * target[(i, j)].abs();
            worst = worst.max((est[(i, j)] - target[(i, j)]).abs() / allowed);
        }
    }
    Ok(judged(
        NAME,
        worst <= 1.0,
        format!("worst deviation {worst:.3} of allowance ({SIGMA_LIMIT} SE + 2%)"),
    ))
}
