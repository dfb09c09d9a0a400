//! Stochastic oracle for the closed forms.
//!
//! Phases are sampled either directly from `N(0, Σ)` or by simulating the
//! drive `ξ(t)` itself and integrating it over each transit window. All
//! sampling is split into fixed batches of [`BATCH_SIZE`] realisations, batch
//! `i` drawing from ChaCha stream `i` of the user seed, so an ensemble does
//! not depend on how many worker threads produced it.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::channel::{bit, CoherenceLabel};
use crate::circuit::{self, decode_gates, encode_gates, REGISTER_QUBITS, TRANSMITTED};
use crate::correlation::{ChannelParams, PhaseCovariance};
use crate::error::{invalid, Error, Result};
use crate::spectrum::PowerSpectrum;

/// Realisations drawn from one RNG substream.
pub const BATCH_SIZE: usize = 4096;

/// Batch count used for the batch-means error of [`mc_tqc_fidelity`].
pub const FIDELITY_BATCHES: usize = 20;

fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `fill` on every batch in parallel and concatenates in batch order.
fn sample_batches<F>(seed: u64, n: usize, width: usize, fill: F) -> Vec<f64>
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
{
    let batches = n.div_ceil(BATCH_SIZE);
    let chunks: Vec<Vec<f64>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let count = BATCH_SIZE.min(n - b * BATCH_SIZE);
            let mut rng = substream(seed, b as u64);
            let mut out = vec![0.0; count * width];
            for sample in out.chunks_exact_mut(width) {
                fill(&mut rng, sample);
            }
            out
        })
        .collect();
    chunks.concat()
}

/// `n` realisations of `(φ₁..φ_N)`, stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseEnsemble {
    uses: usize,
    phases: Vec<f64>,
    seed: u64,
}

impl PhaseEnsemble {
    pub fn from_samples(uses: usize, phases: Vec<f64>, seed: u64) -> Result<Self> {
        if uses == 0 || !phases.len().is_multiple_of(uses) {
            return Err(invalid(
                "phases",
                "length must be a multiple of the use count",
            ));
        }
        Ok(Self { uses, phases, seed })
    }

    pub fn uses(&self) -> usize {
        self.uses
    }

    pub fn len(&self) -> usize {
        self.phases.len() / self.uses
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.phases[i * self.uses..(i + 1) * self.uses]
    }

    pub fn samples(&self) -> impl Iterator<Item = &[f64]> {
        self.phases.chunks_exact(self.uses)
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.len() as f64;
        let mut m = vec![0.0; self.uses];
        for s in self.samples() {
            for (acc, x) in m.iter_mut().zip(s) {
                *acc += x;
            }
        }
        m.iter().map(|x| x / n).collect()
    }

    /// `⟨φ_k φ_{k'}⟩` estimated with the known zero mean, with the
    /// standard error of each entry.
    pub fn covariance(&self) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        if self.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        let d = self.uses;
        let n = self.len() as f64;
        let mut sum = DMatrix::<f64>::zeros(d, d);
        let mut sum_sq = DMatrix::<f64>::zeros(d, d);
        for s in self.samples() {
            for i in 0..d {
                for j in 0..d {
                    let p = s[i] * s[j];
                    sum[(i, j)] += p;
                    sum_sq[(i, j)] += p * p;
                }
            }
        }
        let mean = &sum / n;
        let se = DMatrix::from_fn(d, d, |i, j| -> f64 {
            let m = mean[(i, j)];
            let var = (sum_sq[(i, j)] / n - m * m).max(0.0) * n / (n - 1.0).max(1.0);
            (var / n).sqrt()
        });
        Ok((mean, se))
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate<V> {
    pub value: V,
    pub standard_error: V,
    pub n_samples: usize,
    pub seed: u64,
}

/// Exact draws from `N(0, Σ)` through `Σ = L Lᵀ` with `L = V √Λ`, which also
/// covers rank-deficient `Σ` (e.g. perfectly correlated uses).
pub fn sample_phases_direct(cov: &PhaseCovariance, seed: u64, n: usize) -> Result<PhaseEnsemble> {
    let d = cov.uses();
    let eig = SymmetricEigen::new(cov.covariance_matrix());
    let min = eig.eigenvalues.min();
    if min < -1e-10 * cov.eta_sq() {
        return Err(Error::NotPositiveSemidefinite {
            min_eigenvalue: min,
        });
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let factor = &eig.eigenvectors * DMatrix::from_diagonal(&roots);

    let phases = sample_batches(seed, n, d, |rng, out| {
        let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        for (i, phi) in out.iter_mut().enumerate() {
            *phi = (0..d).map(|j| factor[(i, j)] * z[j]).sum();
        }
    });
    PhaseEnsemble::from_samples(d, phases, seed)
}

/// Simulates Ornstein-Uhlenbeck paths with the exact update
/// `ξ' = ξ e^{−γΔ} + σ √(1 − e^{−2γΔ}) z` and integrates each transit window
/// with the trapezoid rule, giving `φ_k = (λ/2) ∫ ξ dt`. The step is shrunk so
/// that a whole number of steps fits in the transit time; gaps between
/// windows are crossed in one exact jump.
pub fn sample_phases_trajectory(
    spectrum: &PowerSpectrum,
    params: &ChannelParams,
    seed: u64,
    n: usize,
    dt: f64,
) -> Result<PhaseEnsemble> {
    params.validate()?;
    let PowerSpectrum::Lorentzian { variance, rate } = *spectrum else {
        return Err(invalid(
            "spectrum",
            "trajectory sampling needs the exact Ornstein-Uhlenbeck update (lorentzian)",
        ));
    };
    let limit = params.transit_time / 50.0;
    if dt.is_nan() || dt <= 0.0 {
        return Err(invalid("dt", format!("must be > 0, got {dt}")));
    }
    if dt > limit {
        return Err(Error::StepTooCoarse { dt, limit });
    }

    let steps = (params.transit_time / dt).ceil() as usize;
    let h = params.transit_time / steps as f64;
    let sigma = variance.sqrt();
    let step_decay = (-rate * h).exp();
    let step_noise = sigma * (1.0 - step_decay * step_decay).sqrt();
    let gap = params.spacing - params.transit_time;
    let gap_decay = (-rate * gap).exp();
    let gap_noise = sigma * (1.0 - gap_decay * gap_decay).sqrt();
    let half_coupling = 0.5 * params.coupling;

    let phases = sample_batches(seed, n, params.uses, |rng, out| {
        let mut xi = sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
        for (k, phi) in out.iter_mut().enumerate() {
            if k > 0 && gap > 0.0 {
                let z: f64 = StandardNormal.sample(rng);
                xi = xi * gap_decay + gap_noise * z;
            }
            let mut area = 0.5 * xi;
            for i in 0..steps {
                let z: f64 = StandardNormal.sample(rng);
                xi = xi * step_decay + step_noise * z;
                area += if i + 1 == steps { 0.5 * xi } else { xi };
            }
            *phi = half_coupling * area * h;
        }
    });
    PhaseEnsemble::from_samples(params.uses, phases, seed)
}

/// Empirical `⟨exp(2i Σ s_k φ_k)⟩` with per-component standard errors.
pub fn mc_decay_factor(
    label: &CoherenceLabel,
    ensemble: &PhaseEnsemble,
) -> Result<McEstimate<Complex64>> {
    if ensemble.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if label.bits() != ensemble.uses() {
        return Err(Error::DimensionMismatch {
            expected: ensemble.uses(),
            found: label.bits(),
        });
    }
    let s: Vec<f64> = label.weights().into_iter().map(f64::from).collect();
    // per-batch sums keep the reduction order fixed
    let partial: Vec<[f64; 4]> = ensemble
        .phases
        .par_chunks(BATCH_SIZE * ensemble.uses)
        .map(|chunk| {
            let mut acc = [0.0; 4];
            for phi in chunk.chunks_exact(ensemble.uses) {
                let theta = 2.0 * s.iter().zip(phi).map(|(a, b)| a * b).sum::<f64>();
                let (sin, cos) = theta.sin_cos();
                acc[0] += cos;
                acc[1] += cos * cos;
                acc[2] += sin;
                acc[3] += sin * sin;
            }
            acc
        })
        .collect();
    let tot = partial.iter().fold([0.0; 4], |mut a, p| {
        for i in 0..4 {
            a[i] += p[i];
        }
        a
    });
    let n = ensemble.len();
    let (re, re_se) = mean_and_error(tot[0], tot[1], n);
    let (im, im_se) = mean_and_error(tot[2], tot[3], n);
    Ok(McEstimate {
        value: Complex64::new(re, im),
        standard_error: Complex64::new(re_se, im_se),
        n_samples: n,
        seed: ensemble.seed(),
    })
}

fn mean_and_error(sum: f64, sum_sq: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum / nf;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

/// Precomputed pieces of the three-qubit code circuit acting on state vectors.
struct TqcPipeline {
    encoded: Vec<Complex64>,
    decode: DMatrix<Complex64>,
    // sign pattern (−1)^{bit} of each transmitted qubit, per basis index
    signs: Vec<[f64; 3]>,
}

impl TqcPipeline {
    fn new() -> Self {
        let n = REGISTER_QUBITS;
        let mut encoded = circuit::bell_with_ancillas_vector();
        for g in encode_gates() {
            g.apply_to_vector(&mut encoded, n)
                .expect("fixed register layout");
        }
        let dim = 1 << n;
        let mut decode = DMatrix::identity(dim, dim);
        for g in decode_gates() {
            decode = g.unitary(n).expect("fixed register layout") * decode;
        }
        let signs = (0..dim)
            .map(|idx| TRANSMITTED.map(|q| if bit(idx, q, n) == 0 { 1.0 } else { -1.0 }))
            .collect();
        Self {
            encoded,
            decode,
            signs,
        }
    }

    /// Fidelity of one realisation: `|j⟩ → e^{iΣ(−1)^{j_k} φ_k} |j⟩` on the
    /// encoded state, then decode.
    fn fidelity(&self, phases: &[f64], scratch: &mut [Complex64], out: &mut [Complex64]) -> f64 {
        for ((s, &a), sign) in scratch.iter_mut().zip(&self.encoded).zip(&self.signs) {
            let theta = sign[0] * phases[0] + sign[1] * phases[1] + sign[2] * phases[2];
            *s = a * Complex64::from_polar(1.0, theta);
        }
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (c, &x) in scratch.iter().enumerate() {
                acc += self.decode[(r, c)] * x;
            }
            *o = acc;
        }
        circuit::vector_fidelity(out)
    }
}

/// Three-qubit code entanglement fidelity averaged over the realisations of
/// `ensemble` (uses carry `Q`, `A`, `B` in order). The standard error comes
/// from [`FIDELITY_BATCHES`] contiguous batch means.
pub fn mc_tqc_fidelity(ensemble: &PhaseEnsemble) -> Result<McEstimate<f64>> {
    if ensemble.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if ensemble.uses() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: ensemble.uses(),
        });
    }
    let pipeline = TqcPipeline::new();
    let dim = 1 << REGISTER_QUBITS;
    let per_sample: Vec<f64> = ensemble
        .phases
        .par_chunks(BATCH_SIZE * 3)
        .flat_map_iter(|chunk| {
            let mut scratch = vec![Complex64::new(0.0, 0.0); dim];
            let mut out = vec![Complex64::new(0.0, 0.0); dim];
            chunk
                .chunks_exact(3)
                .map(|phi| pipeline.fidelity(phi, &mut scratch, &mut out))
                .collect::<Vec<_>>()
        })
        .collect();

    let n = per_sample.len();
    let value = per_sample.iter().sum::<f64>() / n as f64;
    let batches = FIDELITY_BATCHES.min(n);
    let standard_error = if batches < 2 {
        0.0
    } else {
        let means: Vec<f64> = (0..batches)
            .map(|b| {
                let lo = b * n / batches;
                let hi = (b + 1) * n / batches;
                per_sample[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
            })
            .collect();
        let m = means.iter().sum::<f64>() / batches as f64;
        let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (batches - 1) as f64;
        (var / batches as f64).sqrt()
    };
    Ok(McEstimate {
        value,
        standard_error,
        n_samples: n,
        seed: ensemble.seed(),
    })
}
