//! Run configuration: a flat TOML key-value file.
//!
//! Unknown keys, type mismatches and syntax errors are reported by the TOML
//! parser with line and column. Range checks done afterwards point at the
//! line holding the offending key when the key is present in the file.

use std::fmt;
use std::path::Path;

use memphase_core::channel::CoherenceLabel;
use memphase_core::correlation::ChannelParams;
use memphase_core::spectrum::PowerSpectrum;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    White,
    Lorentzian,
    OneOverF,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub spectrum: SpectrumKind,
    pub level: f64,
    pub variance: f64,
    pub rate: f64,
    pub amplitude: f64,
    pub omega_min: Option<f64>,
    pub omega_max: Option<f64>,

    pub coupling: f64,
    pub transit_time: f64,
    pub spacing: f64,
    pub uses: usize,
    pub labels: Option<Vec<String>>,

    pub epsilon: f64,
    pub mu1_step: f64,
    pub eps_min: f64,
    pub eps_max: f64,
    pub eps_points: usize,

    pub seed: u64,
    pub samples: usize,
    pub trajectory_samples: usize,
    pub dt: Option<f64>,
    pub mc_epsilon: f64,
    pub mu1: Option<f64>,
    pub mu2: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            spectrum: SpectrumKind::Lorentzian,
            level: 1.0,
            variance: 1.0,
            rate: 1.0,
            amplitude: 1.0,
            omega_min: None,
            omega_max: None,
            coupling: 1.0,
            transit_time: 1.0,
            spacing: 1.0,
            uses: 3,
            labels: None,
            epsilon: 1e-3,
            mu1_step: 0.01,
            eps_min: 1e-4,
            eps_max: 1e-1,
            eps_points: 31,
            seed: 0,
            samples: 200_000,
            trajectory_samples: 100_000,
            dt: None,
            mc_epsilon: 0.05,
            mu1: None,
            mu2: None,
        }
    }
}

/// A configuration problem, located at a line of the file when possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub source_name: String,
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.source_name)?;
        if let Some(line) = self.line {
            write!(f, ":{line}")?;
        }
        if let Some(field) = &self.field {
            write!(f, ": field `{field}`")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

fn key_line(text: &str, key: &str) -> Option<usize> {
    text.lines()
        .position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|i| i + 1)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            source_name: name.clone(),
            line: None,
            field: None,
            message: format!("cannot read file: {e}"),
        })?;
        Self::parse(&text, &name)
    }

    pub fn parse(text: &str, source_name: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1);
            ConfigError {
                source_name: source_name.to_string(),
                line,
                field: None,
                message: e.message().trim().to_string(),
            }
        })?;
        config.validate().map_err(|(field, message)| ConfigError {
            source_name: source_name.to_string(),
            line: key_line(text, field),
            field: Some(field.to_string()),
            message,
        })?;
        Ok(config)
    }

    /// Range checks; the error names the offending key.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err((name, format!("must be finite and > 0, got {v}")))
            }
        };
        let epsilon_range = |name: &'static str, v: f64| {
            if v > 0.0 && v < 0.5 {
                Ok(())
            } else {
                Err((name, format!("must lie in (0, 0.5), got {v}")))
            }
        };
        match self.spectrum {
            SpectrumKind::White => positive("level", self.level)?,
            SpectrumKind::Lorentzian => {
                positive("variance", self.variance)?;
                positive("rate", self.rate)?;
            }
            SpectrumKind::OneOverF => {
                positive("amplitude", self.amplitude)?;
                // the infrared cutoff sets the answer, so neither has a default
                let lo = self.omega_min.ok_or((
                    "omega_min",
                    "required for spectrum = \"one_over_f\"".to_string(),
                ))?;
                let hi = self.omega_max.ok_or((
                    "omega_max",
                    "required for spectrum = \"one_over_f\"".to_string(),
                ))?;
                positive("omega_min", lo)?;
                positive("omega_max", hi)?;
                if hi <= lo {
                    return Err(("omega_max", "must exceed omega_min".into()));
                }
            }
        }
        positive("coupling", self.coupling)?;
        positive("transit_time", self.transit_time)?;
        positive("spacing", self.spacing)?;
        if self.spacing < self.transit_time {
            return Err((
                "spacing",
                format!(
                    "must be at least transit_time ({}), got {}",
                    self.transit_time, self.spacing
                ),
            ));
        }
        if !(1..=memphase_core::channel::MAX_QUBITS).contains(&self.uses) {
            return Err((
                "uses",
                format!(
                    "must be between 1 and {}",
                    memphase_core::channel::MAX_QUBITS
                ),
            ));
        }
        self.labels().map_err(|m| ("labels", m))?;

        epsilon_range("epsilon", self.epsilon)?;
        if !(self.mu1_step > 0.0 && self.mu1_step <= 1.0) {
            return Err((
                "mu1_step",
                format!("must lie in (0, 1], got {}", self.mu1_step),
            ));
        }
        epsilon_range("eps_min", self.eps_min)?;
        epsilon_range("eps_max", self.eps_max)?;
        if self.eps_max <= self.eps_min {
            return Err(("eps_max", "must exceed eps_min".into()));
        }
        if self.eps_points < 2 {
            return Err(("eps_points", "need at least 2 points".into()));
        }

        if self.samples == 0 {
            return Err(("samples", "must be positive".into()));
        }
        if self.trajectory_samples == 0 {
            return Err(("trajectory_samples", "must be positive".into()));
        }
        if let Some(dt) = self.dt {
            positive("dt", dt)?;
            if dt > self.transit_time / 50.0 {
                return Err(("dt", "must not exceed transit_time / 50".into()));
            }
        }
        epsilon_range("mc_epsilon", self.mc_epsilon)?;
        match (self.mu1, self.mu2) {
            (Some(_), None) => return Err(("mu2", "mu1 and mu2 must be given together".into())),
            (None, Some(_)) => return Err(("mu1", "mu1 and mu2 must be given together".into())),
            (Some(a), Some(b)) if !(a.is_finite() && b.is_finite()) => {
                return Err(("mu1", "must be finite".into()))
            }
            _ => {}
        }
        Ok(())
    }

    pub fn power_spectrum(&self) -> memphase_core::Result<PowerSpectrum> {
        match self.spectrum {
            SpectrumKind::White => PowerSpectrum::white(self.level),
            SpectrumKind::Lorentzian => PowerSpectrum::lorentzian(self.variance, self.rate),
            SpectrumKind::OneOverF => PowerSpectrum::one_over_f(
                self.amplitude,
                self.omega_min.unwrap_or(f64::NAN),
                self.omega_max.unwrap_or(f64::NAN),
            ),
        }
    }

    pub fn channel_params(&self, uses: usize) -> memphase_core::Result<ChannelParams> {
        ChannelParams::new(self.coupling, self.transit_time, self.spacing, uses)
    }

    pub fn trajectory_step(&self) -> f64 {
        self.dt.unwrap_or(self.transit_time / 200.0)
    }

    /// Requested coherence labels, or every `j ≤ l` pair when none are listed
    /// and the register is small enough to enumerate.
    pub fn labels(&self) -> Result<Vec<CoherenceLabel>, String> {
        match &self.labels {
            Some(list) => list
                .iter()
                .map(|s| {
                    let (j, l) = s
                        .split_once(':')
                        .ok_or_else(|| format!("label `{s}` is not of the form j:l"))?;
                    if j.len() != self.uses || l.len() != self.uses {
                        return Err(format!("label `{s}` must have {} bits per side", self.uses));
                    }
                    CoherenceLabel::from_bitstrings(j, l).map_err(|e| format!("label `{s}`: {e}"))
                })
                .collect(),
            None if self.uses <= 4 => {
                let dim = 1usize << self.uses;
                Ok((0..dim)
                    .flat_map(|j| (j..dim).map(move |l| (j, l)))
                    .map(|(j, l)| CoherenceLabel::new(j, l, self.uses).expect("in range"))
                    .collect())
            }
            None => Err(format!(
                "must be listed explicitly when uses > 4 (uses = {})",
                self.uses
            )),
        }
    }

    /// SHA-256 of the fully resolved configuration, defaults included.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).expect("plain data serialises");
        Sha256::digest(canonical.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::parse("", "t").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = RunConfig::parse("seed = 1\n\nratee = 2.0\n", "t.toml").unwrap_err();
        assert_eq!(err.line, Some(3));
        assert!(err.message.contains("ratee"), "{err}");
    }

    #[test]
    fn type_error_reports_line() {
        let err = RunConfig::parse("uses = 3\nrate = \"fast\"\n", "t.toml").unwrap_err();
        assert_eq!(err.line, Some(2));
    }

    #[test]
    fn range_error_names_field_and_line() {
        let err =
            RunConfig::parse("spectrum = \"lorentzian\"\n  rate = -1.0\n", "t.toml").unwrap_err();
        assert_eq!(err.line, Some(2));
        assert_eq!(err.field.as_deref(), Some("rate"));
        assert_eq!(
            err.to_string(),
            "t.toml:2: field `rate`: must be finite and > 0, got -1"
        );
    }

    #[test]
    fn range_error_without_key_in_file() {
        // default transit_time 1 exceeds the given spacing
        let err = RunConfig::parse("spacing = 0.5\n", "t").unwrap_err();
        assert_eq!(err.field.as_deref(), Some("spacing"));
        assert_eq!(err.line, Some(1));
        let err = RunConfig::parse("eps_min = 0.2\n", "t").unwrap_err();
        assert_eq!(err.field.as_deref(), Some("eps_max"));
        assert_eq!(err.line, None);
    }

    #[test]
    fn one_over_f_needs_both_cutoffs() {
        let err = RunConfig::parse("spectrum = \"one_over_f\"\nomega_max = 5.0", "t").unwrap_err();
        assert_eq!(err.field.as_deref(), Some("omega_min"));
        assert!(RunConfig::parse(
            "spectrum = \"one_over_f\"\nomega_min = 0.1\nomega_max = 5.0",
            "t"
        )
        .is_ok());
    }

    #[test]
    fn epsilon_must_be_below_half() {
        assert!(RunConfig::parse("epsilon = 0.5", "t").is_err());
        assert!(RunConfig::parse("mc_epsilon = 0.0", "t").is_err());
    }

    #[test]
    fn labels_are_checked() {
        let ok = RunConfig::parse("uses = 2\nlabels = [\"00:11\", \"01:10\"]", "t").unwrap();
        assert_eq!(ok.labels().unwrap().len(), 2);
        let err = RunConfig::parse("uses = 2\nlabels = [\"0:11\"]", "t").unwrap_err();
        assert_eq!(err.line, Some(2));
        assert!(RunConfig::parse("uses = 5", "t").is_err());
        assert_eq!(RunConfig::default().labels().unwrap().len(), 36);
    }

    #[test]
    fn mu_override_needs_both() {
        assert!(RunConfig::parse("mu1 = 0.5", "t").is_err());
        assert!(RunConfig::parse("mu1 = 0.5\nmu2 = 0.9", "t").is_ok());
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
