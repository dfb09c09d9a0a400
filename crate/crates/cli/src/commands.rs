use anyhow::Result;
use memphase_core::channel::{decay_exponent, decay_factor};
use memphase_core::codes::{pe_tqc_memory_eps, pe_two_qubit_eps};
use memphase_core::correlation::{
    check_mu_feasible, covariance_from_spectrum, mu2_lower_bound, Feasibility,
};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::output::{Cell, Csv};

fn feasibility_note(f: &Feasibility) -> String {
    match f {
        Feasibility::Feasible => "feasible".into(),
        Feasibility::Infeasible(why) => format!("infeasible ({why})"),
    }
}

/// `η²`, `g`, `ε` and `μ_m` for the configured drive, then decay factors for
/// the requested coherence labels.
pub fn decay(config: &RunConfig) -> Result<String> {
    let spectrum = config.power_spectrum()?;
    let params = config.channel_params(config.uses)?;
    let cov = covariance_from_spectrum(&spectrum, &params)?;
    let labels = config.labels().map_err(anyhow::Error::msg)?;

    let mut csv = Csv::new("decay", config);
    csv.meta("eta_sq", crate::output::float(cov.eta_sq()));
    csv.meta("g", crate::output::float(cov.damping()));
    csv.meta("epsilon", crate::output::float(cov.epsilon()));
    let mu = cov.mu();
    if mu.len() >= 2 {
        let m1 = mu[1];
        match mu.get(2) {
            Some(&m2) => {
                let f = check_mu_feasible(m1, m2);
                csv.meta(
                    "mu_pair",
                    format!("mu1={m1:e} mu2={m2:e} {}", feasibility_note(&f)),
                );
            }
            // with two uses only the range of μ₁ constrains anything
            None => {
                let f = check_mu_feasible(m1, m1);
                csv.meta("mu_pair", format!("mu1={m1:e} {}", feasibility_note(&f)));
            }
        }
    }
    csv.header(&["lag", "mu"]);
    for (m, &value) in mu.iter().enumerate() {
        csv.row(&[Cell::Int(m), Cell::Float(value)]);
    }

    csv.next_table();
    let rows: Vec<_> = labels
        .par_iter()
        .map(|label| -> memphase_core::Result<_> {
            Ok((
                label.bitstrings(),
                decay_exponent(label, &cov)?,
                decay_factor(label, &cov)?,
            ))
        })
        .collect::<memphase_core::Result<_>>()?;
    csv.header(&["j", "l", "exponent", "D"]);
    for ((j, l), e, d) in rows {
        csv.row(&[Cell::Text(j), Cell::Text(l), Cell::Float(e), Cell::Float(d)]);
    }
    Ok(csv.into_string())
}

/// Code error probability against `μ₁` at fixed `ε`.
pub fn fig2(config: &RunConfig) -> Result<String> {
    let eps = config.epsilon;
    let steps = (1.0 / config.mu1_step).round() as usize;
    let grid: Vec<f64> = (0..=steps)
        .map(|i| (i as f64 * config.mu1_step).min(1.0))
        .collect();
    let memoryless = pe_tqc_memory_eps(eps, 0.0, 0.0)?;

    let rows: Vec<[Cell; 9]> = grid
        .par_iter()
        .map(|&m1| -> Result<[Cell; 9]> {
            let lo = mu2_lower_bound(m1);
            Ok([
                Cell::Float(m1),
                Cell::Float(lo),
                Cell::Float(pe_tqc_memory_eps(eps, m1, lo)?),
                Cell::Float(pe_tqc_memory_eps(eps, m1, m1)?),
                Cell::Float(pe_two_qubit_eps(eps, m1)?),
                Cell::Float(eps),
                Cell::Float(memoryless),
                Cell::Flag(check_mu_feasible(m1, lo).is_feasible()),
                Cell::Flag(check_mu_feasible(m1, m1).is_feasible()),
            ])
        })
        .collect::<Result<_>>()?;

    let mut csv = Csv::new("fig2", config);
    csv.meta("epsilon", crate::output::float(eps));
    csv.meta("mu_pair_memoryless", "mu1=0 mu2=0 feasible");
    csv.header(&[
        "mu1",
        "mu2_lower",
        "Pe_tqc_at_mu2_lower",
        "Pe_tqc_at_mu2_eq_mu1",
        "Pe_two_qubit",
        "Pe_single",
        "Pe_tqc_memoryless",
        "pair_at_mu2_lower",
        "pair_at_mu2_eq_mu1",
    ]);
    for row in &rows {
        csv.row(row);
    }
    Ok(csv.into_string())
}

pub const FIG3_TWO_QUBIT_MU1: f64 = 0.99;

/// Code error probability against `ε` on a logarithmic grid.
pub fn fig3(config: &RunConfig) -> Result<String> {
    let n = config.eps_points;
    let (a, b) = (config.eps_min.ln(), config.eps_max.ln());
    let grid: Vec<f64> = (0..n)
        .map(|i| match i {
            0 => config.eps_min,
            _ if i == n - 1 => config.eps_max,
            _ => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect();

    let rows: Vec<[Cell; 4]> = grid
        .par_iter()
        .map(|&eps| -> Result<[Cell; 4]> {
            Ok([
                Cell::Float(eps),
                Cell::Float(pe_tqc_memory_eps(eps, 0.0, 0.0)?),
                Cell::Float(pe_tqc_memory_eps(eps, 1.0, 1.0)?),
                Cell::Float(pe_two_qubit_eps(eps, FIG3_TWO_QUBIT_MU1)?),
            ])
        })
        .collect::<Result<_>>()?;

    let mut csv = Csv::new("fig3", config);
    csv.meta("mu_pair_memoryless", "mu1=0 mu2=0 feasible");
    csv.meta("mu_pair_worst", "mu1=1 mu2=1 feasible");
    csv.meta(
        "mu_pair_two_qubit",
        format!(
            "mu1={FIG3_TWO_QUBIT_MU1} {}",
            feasibility_note(&check_mu_feasible(FIG3_TWO_QUBIT_MU1, FIG3_TWO_QUBIT_MU1))
        ),
    );
    csv.header(&[
        "epsilon",
        "Pe_tqc_memoryless",
        "Pe_tqc_worst",
        "Pe_two_qubit_mu099",
    ]);
    for row in &rows {
        csv.row(row);
    }
    Ok(csv.into_string())
}
