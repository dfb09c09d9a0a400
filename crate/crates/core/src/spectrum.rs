//! Power spectra of the classical drive and the windowed kernel integral
//!
//! ```text
//! I(Δ) = ∫₀^∞ dω/2π · S(ω) · (1 − cos ωτ_p)/ω² · cos ωΔ
//! ```
//!
//! which, multiplied by λ², is the covariance of the phases picked up by two
//! carriers whose transits start `Δ` apart.
//!
//! The integral is split in two. Up to a cutoff `W₀` the integrand is
//! integrated directly, with one panel per period of its fastest
//! oscillation. Beyond `W₀` the product of cosines is expanded into single
//! cosines `h(ω) cos(cω)` with `h = S/(2πω²)`; each is integrated over a few
//! hundred of its own periods and then closed with the asymptotic
//! integration-by-parts series. Non-oscillating pieces (`c = 0`) are mapped
//! onto `(0, 1]` with `ω = W₀/t`.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate, period_breakpoints, Tolerance};

/// Default relative accuracy of [`kernel_integral`], measured against `I(0)`.
pub const DEFAULT_KERNEL_TOLERANCE: f64 = 1e-10;

// below ω·τ_p < this, (1 − cos ωτ_p)/ω² is evaluated from its Taylor series
const SERIES_THRESHOLD: f64 = 1e-3;

// the asymptotic tail of cos(cω) starts once cω exceeds this
const ASYMPTOTIC_PHASE: f64 = 400.0;

/// One-sided power spectral density of the stationary Gaussian drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerSpectrum {
    /// Flat spectrum `S(ω) = level`, i.e. delta-correlated noise.
    White { level: f64 },
    /// Ornstein-Uhlenbeck noise: `S(ω) = 2σ²γ/(γ² + ω²)`, `C(τ) = σ² e^{-γ|τ|}`.
    Lorentzian { variance: f64, rate: f64 },
    /// Banded `S(ω) = A/ω` on `[omega_min, omega_max]`, zero elsewhere.
    OneOverF {
        amplitude: f64,
        omega_min: f64,
        omega_max: f64,
    },
}

impl PowerSpectrum {
    pub fn white(level: f64) -> Result<Self> {
        let s = Self::White { level };
        s.validate()?;
        Ok(s)
    }

    pub fn lorentzian(variance: f64, rate: f64) -> Result<Self> {
        let s = Self::Lorentzian { variance, rate };
        s.validate()?;
        Ok(s)
    }

    pub fn one_over_f(amplitude: f64, omega_min: f64, omega_max: f64) -> Result<Self> {
        let s = Self::OneOverF {
            amplitude,
            omega_min,
            omega_max,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(name: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("must be finite and > 0, got {v}")))
            }
        }
        match *self {
            Self::White { level } => positive("level", level),
            Self::Lorentzian { variance, rate } => {
                positive("variance", variance)?;
                positive("rate", rate)
            }
            Self::OneOverF {
                amplitude,
                omega_min,
                omega_max,
            } => {
                positive("amplitude", amplitude)?;
                positive("omega_min", omega_min)?;
                positive("omega_max", omega_max)?;
                if omega_max <= omega_min {
                    return Err(invalid(
                        "omega_max",
                        format!("must exceed omega_min = {omega_min}, got {omega_max}"),
                    ));
                }
                Ok(())
            }
        }
    }

    /// `S(ω)` for `ω ≥ 0`.
    pub fn spectral_density(&self, omega: f64) -> f64 {
        self.density_and_derivatives(omega)[0]
    }

    /// `[S, S', S'']` at `omega`. The 1/f band edges are treated as jumps
    /// and report zero derivatives there.
    fn density_and_derivatives(&self, omega: f64) -> [f64; 3] {
        match *self {
            Self::White { level } => [level, 0.0, 0.0],
            Self::Lorentzian { variance, rate } => {
                let k = 2.0 * variance * rate;
                let d = rate * rate + omega * omega;
                [
                    k / d,
                    -2.0 * omega * k / (d * d),
                    -2.0 * k / (d * d) + 8.0 * omega * omega * k / (d * d * d),
                ]
            }
            Self::OneOverF {
                amplitude,
                omega_min,
                omega_max,
            } => {
                if omega < omega_min || omega > omega_max {
                    [0.0, 0.0, 0.0]
                } else {
                    let w = omega;
                    [
                        amplitude / w,
                        -amplitude / (w * w),
                        2.0 * amplitude / (w * w * w),
                    ]
                }
            }
        }
    }

    /// Process variance `C(0) = ∫₀^∞ S(ω) dω/π`.
    pub fn variance(&self) -> Result<f64> {
        match *self {
            Self::White { .. } => Err(Error::WhiteNoiseUndefined),
            Self::Lorentzian { variance, .. } => Ok(variance),
            Self::OneOverF {
                amplitude,
                omega_min,
                omega_max,
            } => Ok(amplitude / PI * (omega_max / omega_min).ln()),
        }
    }

    /// Autocorrelation `C(τ) = ∫₀^∞ S(ω) cos(ωτ) dω/π`.
    pub fn autocorrelation(&self, tau: f64) -> Result<f64> {
        match *self {
            Self::White { .. } => Err(Error::WhiteNoiseUndefined),
            Self::Lorentzian { variance, rate } => Ok(variance * (-rate * tau.abs()).exp()),
            Self::OneOverF {
                amplitude,
                omega_min,
                omega_max,
            } => {
                let tau = tau.abs();
                let scale = self.variance()?;
                let points = if tau > 0.0 {
                    period_breakpoints(omega_min, omega_max, 2.0 * PI / tau)
                } else {
                    vec![omega_min, omega_max]
                };
                let q = integrate(
                    |w| amplitude / w * (w * tau).cos() / PI,
                    &points,
                    Tolerance::absolute(1e-14 * scale),
                )?;
                Ok(q.value)
            }
        }
    }
}

/// `(1 − cos ωτ_p)/ω²`, finite at `ω = 0`.
pub fn window_kernel(omega: f64, transit: f64) -> f64 {
    let x = omega * transit;
    if x.abs() < SERIES_THRESHOLD {
        let x2 = x * x;
        transit * transit * (0.5 - x2 / 24.0 + x2 * x2 / 720.0)
    } else {
        let s = (0.5 * x).sin();
        2.0 * s * s / (omega * omega)
    }
}

/// Evaluates `I(Δ)` for one spectrum and transit time at any number of lags,
/// with the error budget fixed relative to `I(0)`.
#[derive(Debug, Clone)]
pub struct KernelIntegrator {
    spectrum: PowerSpectrum,
    transit: f64,
    relative_tolerance: f64,
    cutoff: f64,
    zero_lag: f64,
}

impl KernelIntegrator {
    pub fn new(spectrum: PowerSpectrum, transit: f64) -> Result<Self> {
        Self::with_tolerance(spectrum, transit, DEFAULT_KERNEL_TOLERANCE)
    }

    pub fn with_tolerance(spectrum: PowerSpectrum, transit: f64, relative: f64) -> Result<Self> {
        spectrum.validate()?;
        if !(transit.is_finite() && transit > 0.0) {
            return Err(invalid(
                "transit_time",
                format!("must be > 0, got {transit}"),
            ));
        }
        if relative.is_nan() || relative <= 0.0 {
            return Err(invalid("tolerance", format!("must be > 0, got {relative}")));
        }
        let cutoff = match spectrum {
            PowerSpectrum::OneOverF { omega_max, .. } => omega_max,
            PowerSpectrum::Lorentzian { rate, .. } => (20.0 * rate).max(20.0 / transit),
            PowerSpectrum::White { .. } => 20.0 / transit,
        };
        let mut this = Self {
            spectrum,
            transit,
            relative_tolerance: relative,
            cutoff,
            zero_lag: 0.0,
        };

        // the zero-lag head is nonnegative, so it can set its own scale
        let head = this.head(0.0, Tolerance::relative(0.1 * relative))?;
        let budget = relative * head;
        let tail = this.tail(0.0, 0.5 * budget)?;
        this.zero_lag = head + tail;
        Ok(this)
    }

    pub fn spectrum(&self) -> &PowerSpectrum {
        &self.spectrum
    }

    pub fn transit(&self) -> f64 {
        self.transit
    }

    /// `I(0)`, the single-use phase variance per unit `λ²`.
    pub fn zero_lag(&self) -> f64 {
        self.zero_lag
    }

    /// `I(Δ)`. Even in `Δ`; negative lags are accepted.
    pub fn at(&self, lag: f64) -> Result<f64> {
        let lag = lag.abs();
        if !lag.is_finite() {
            return Err(invalid("lag", "must be finite"));
        }
        if lag == 0.0 {
            return Ok(self.zero_lag);
        }
        let budget = self.relative_tolerance * self.zero_lag;
        Ok(self.head(lag, Tolerance::absolute(0.5 * budget))? + self.tail(lag, 0.5 * budget)?)
    }

    fn head(&self, lag: f64, tol: Tolerance) -> Result<f64> {
        let transit = self.transit;
        let spectrum = self.spectrum;
        let start = match spectrum {
            PowerSpectrum::OneOverF { omega_min, .. } => omega_min,
            _ => 0.0,
        };
        let period = 2.0 * PI / (transit + lag);
        let points = period_breakpoints(start, self.cutoff, period);
        let q = integrate(
            |w| {
                spectrum.spectral_density(w) * window_kernel(w, transit) * (w * lag).cos()
                    / (2.0 * PI)
            },
            &points,
            tol,
        )?;
        Ok(q.value)
    }

    fn tail(&self, lag: f64, budget: f64) -> Result<f64> {
        if matches!(self.spectrum, PowerSpectrum::OneOverF { .. }) {
            return Ok(0.0);
        }
        let a = self.transit;
        // (1 − cos aω) cos bω = cos bω − ½cos (a+b)ω − ½cos (b−a)ω
        let mut parts: Vec<(f64, f64)> = Vec::with_capacity(3);
        for (freq, weight) in [(lag, 1.0), (a + lag, -0.5), ((lag - a).abs(), -0.5)] {
            let freq = if freq * a < 1e-12 { 0.0 } else { freq };
            match parts
                .iter_mut()
                .find(|(f, _)| (*f - freq).abs() <= 1e-12 * (a + lag))
            {
                Some(p) => p.1 += weight,
                None => parts.push((freq, weight)),
            }
        }
        let share = budget / parts.len() as f64;
        let mut total = 0.0;
        for (freq, weight) in parts {
            if weight != 0.0 {
                total += weight * self.cosine_tail(freq, share / weight.abs())?;
            }
        }
        Ok(total)
    }

    // h(ω) = S(ω)/(2πω²) and its first two derivatives
    fn envelope(&self, omega: f64) -> [f64; 3] {
        let [s, s1, s2] = self.spectrum.density_and_derivatives(omega);
        let w2 = omega * omega;
        let c = 1.0 / (2.0 * PI);
        [
            c * s / w2,
            c * (s1 / w2 - 2.0 * s / (w2 * omega)),
            c * (s2 / w2 - 4.0 * s1 / (w2 * omega) + 6.0 * s / (w2 * w2)),
        ]
    }

    /// `∫_{W₀}^∞ h(ω) cos(cω) dω`.
    fn cosine_tail(&self, freq: f64, budget: f64) -> Result<f64> {
        let w0 = self.cutoff;
        if freq == 0.0 {
            let q = integrate(
                |t| {
                    let w = w0 / t;
                    self.envelope(w)[0] * w0 / (t * t)
                },
                &[0.0, 1.0],
                Tolerance::absolute(budget),
            )?;
            return Ok(q.value);
        }

        let far = w0.max(ASYMPTOTIC_PHASE / freq);
        let middle = if far > w0 {
            let points = period_breakpoints(w0, far, 2.0 * PI / freq);
            integrate(
                |w| self.envelope(w)[0] * (freq * w).cos(),
                &points,
                Tolerance::absolute(0.5 * budget),
            )?
            .value
        } else {
            0.0
        };

        let [h, h1, h2] = self.envelope(far);
        let (s, c) = (freq * far).sin_cos();
        let asymptotic = -h * s / freq - h1 * c / (freq * freq) + h2 * s / (freq * freq * freq);
        Ok(middle + asymptotic)
    }
}

/// `I(Δ)` with the default tolerance. Builds a fresh [`KernelIntegrator`];
/// reuse one when evaluating several lags.
pub fn kernel_integral(spectrum: &PowerSpectrum, transit: f64, lag: f64) -> Result<f64> {
    KernelIntegrator::new(*spectrum, transit)?.at(lag)
}

/// Closed form of `I(Δ)` for a white spectrum:
/// `(S₀/4π)(π/2)(|τ_p+Δ| + |τ_p−Δ| − 2|Δ|)`.
pub fn white_kernel_closed_form(level: f64, transit: f64, lag: f64) -> f64 {
    level / (4.0 * PI)
        * (PI / 2.0)
        * ((transit + lag).abs() + (transit - lag).abs() - 2.0 * lag.abs())
}
