//! The correlated dephasing map on `N` transmitted qubits.
//!
//! Every matrix element `⟨j|ρ|l⟩` is multiplied by its decay factor
//! `D_{jl} = g^E` with
//!
//! ```text
//! E = Σ_k s_k² + 2 Σ_{k>k'} s_k s_{k'} μ_{k−k'},    s_k = l_k − j_k
//! ```
//!
//! Qubit 0 is the most significant bit of a basis index throughout the crate.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::correlation::PhaseCovariance;
use crate::error::{invalid, Error, Result};

/// Largest register a [`DensityMatrix`] may describe.
pub const MAX_QUBITS: usize = 10;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const POSITIVITY_TOL: f64 = 1e-10;

/// Value of `qubit` in basis state `index` of an `n`-qubit register.
#[inline]
pub fn bit(index: usize, qubit: usize, n: usize) -> usize {
    (index >> (n - 1 - qubit)) & 1
}

/// A basis pair `(j, l)` labelling the coherence `|j⟩⟨l|` of an `n`-bit register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CoherenceLabel {
    j: usize,
    l: usize,
    bits: usize,
}

impl CoherenceLabel {
    pub fn new(j: usize, l: usize, bits: usize) -> Result<Self> {
        if bits == 0 || bits > MAX_QUBITS {
            return Err(invalid(
                "bits",
                format!("must be in 1..={MAX_QUBITS}, got {bits}"),
            ));
        }
        let limit = 1usize << bits;
        if j >= limit || l >= limit {
            return Err(invalid(
                "label",
                format!("({j}, {l}) does not fit in {bits} bits"),
            ));
        }
        Ok(Self { j, l, bits })
    }

    /// Parses two equal-length bit strings, first character = first use.
    pub fn from_bitstrings(j: &str, l: &str) -> Result<Self> {
        if j.len() != l.len() {
            return Err(invalid(
                "label",
                format!("`{j}` and `{l}` differ in length"),
            ));
        }
        let parse = |s: &str| {
            usize::from_str_radix(s, 2)
                .map_err(|_| invalid("label", format!("`{s}` is not a bit string")))
        };
        Self::new(parse(j)?, parse(l)?, j.len())
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    /// `s_k = l_k − j_k ∈ {−1, 0, 1}`.
    pub fn weights(&self) -> Vec<i32> {
        (0..self.bits)
            .map(|k| bit(self.l, k, self.bits) as i32 - bit(self.j, k, self.bits) as i32)
            .collect()
    }

    pub fn is_population(&self) -> bool {
        self.j == self.l
    }

    pub fn bitstrings(&self) -> (String, String) {
        let w = self.bits;
        (format!("{:0w$b}", self.j), format!("{:0w$b}", self.l))
    }
}

/// Exponent `E` of `D = g^E`.
pub fn decay_exponent(label: &CoherenceLabel, cov: &PhaseCovariance) -> Result<f64> {
    if label.bits() != cov.uses() {
        return Err(Error::DimensionMismatch {
            expected: cov.uses(),
            found: label.bits(),
        });
    }
    Ok(exponent_of_weights(&label.weights(), cov))
}

fn exponent_of_weights(s: &[i32], cov: &PhaseCovariance) -> f64 {
    let mut e = 0.0;
    for k in 0..s.len() {
        e += (s[k] * s[k]) as f64;
        for kp in 0..k {
            e += 2.0 * (s[k] * s[kp]) as f64 * cov.mu_at(k - kp);
        }
    }
    e
}

/// `D_{jl} = g^E`.
pub fn decay_factor(label: &CoherenceLabel, cov: &PhaseCovariance) -> Result<f64> {
    let e = decay_exponent(label, cov)?;
    let d = cov.damping().powf(e);
    debug_assert!(
        (d - decay_factor_from_covariance(label, cov)?).abs() <= 1e-12,
        "g-power and covariance forms of the decay factor disagree"
    );
    Ok(d)
}

/// `exp(−2 Σ_{k,k'} s_k s_{k'} ⟨φ_k φ_{k'}⟩)`, the Gaussian average written
/// directly in terms of the phase covariance.
pub fn decay_factor_from_covariance(label: &CoherenceLabel, cov: &PhaseCovariance) -> Result<f64> {
    if label.bits() != cov.uses() {
        return Err(Error::DimensionMismatch {
            expected: cov.uses(),
            found: label.bits(),
        });
    }
    let s = label.weights();
    let mut quad = 0.0;
    for (k, &sk) in s.iter().enumerate() {
        for (kp, &skp) in s.iter().enumerate() {
            quad += (sk * skp) as f64 * cov.covariance(k, kp);
        }
    }
    Ok((-2.0 * quad).exp())
}

/// Hermitian, unit-trace, positive semidefinite operator on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    qubits: usize,
    data: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates hermiticity, unit trace and positivity.
    pub fn new(data: DMatrix<Complex64>) -> Result<Self> {
        let dim = data.nrows();
        if data.ncols() != dim || !dim.is_power_of_two() || dim < 2 {
            return Err(Error::InvalidState(format!(
                "{}x{} is not a qubit-register shape",
                dim,
                data.ncols()
            )));
        }
        let qubits = dim.trailing_zeros() as usize;
        if qubits > MAX_QUBITS {
            return Err(Error::InvalidState(format!(
                "{qubits} qubits exceeds {MAX_QUBITS}"
            )));
        }
        let rho = Self { qubits, data };
        let herm = rho.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let min = rho.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(rho)
    }

    pub(crate) fn from_raw(qubits: usize, data: DMatrix<Complex64>) -> Self {
        debug_assert_eq!(data.nrows(), 1 << qubits);
        Self { qubits, data }
    }

    /// `|ψ⟩⟨ψ|` for a state vector, normalised on the way in.
    pub fn pure(amplitudes: &[Complex64]) -> Result<Self> {
        let dim = amplitudes.len();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::InvalidState(format!("length {dim} is not 2^n")));
        }
        let qubits = dim.trailing_zeros() as usize;
        if qubits > MAX_QUBITS {
            return Err(Error::InvalidState(format!(
                "{qubits} qubits exceeds {MAX_QUBITS}"
            )));
        }
        let v = DVector::from_column_slice(amplitudes);
        let norm = v.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let v = v / Complex64::new(norm, 0.0);
        Ok(Self::from_raw(qubits, &v * v.adjoint()))
    }

    pub fn maximally_mixed(qubits: usize) -> Self {
        let dim = 1 << qubits;
        Self::from_raw(
            qubits,
            DMatrix::from_diagonal_element(dim, dim, Complex64::new(1.0 / dim as f64, 0.0)),
        )
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn get(&self, j: usize, l: usize) -> Complex64 {
        self.data[(j, l)]
    }

    pub fn trace(&self) -> Complex64 {
        self.data.trace()
    }

    /// `max |ρ_{jl} − conj(ρ_{lj})|`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for l in j..n {
                worst = worst.max((self.data[(j, l)] - self.data[(l, j)].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        // symmetrise so tiny anti-Hermitian noise cannot leak into the spectrum
        let h = (&self.data + self.data.adjoint()) * Complex64::new(0.5, 0.0);
        SymmetricEigen::new(h).eigenvalues.min()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        (&self.data * &self.data).trace().re
    }

    /// `⟨ψ|ρ|ψ⟩` for a normalised `ψ`.
    pub fn overlap(&self, psi: &[Complex64]) -> Result<f64> {
        if psi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: psi.len(),
            });
        }
        let v = DVector::from_column_slice(psi);
        Ok((v.adjoint() * &self.data * &v)[(0, 0)].re)
    }

    /// Reduced state on the qubits in `keep`, in the order given.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let n = self.qubits;
        check_positions(keep, n)?;
        let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
        let k = keep.len();
        let mut out = DMatrix::zeros(1 << k, 1 << k);

        let compose = |kept: usize, env: usize| -> usize {
            let mut idx = 0;
            for (i, &q) in keep.iter().enumerate() {
                idx |= bit(kept, i, k) << (n - 1 - q);
            }
            for (i, &q) in traced.iter().enumerate() {
                idx |= bit(env, i, traced.len()) << (n - 1 - q);
            }
            idx
        };
        for a in 0..1 << k {
            for b in 0..1 << k {
                let mut acc = Complex64::new(0.0, 0.0);
                for e in 0..1 << traced.len() {
                    acc += self.data[(compose(a, e), compose(b, e))];
                }
                out[(a, b)] = acc;
            }
        }
        Ok(Self::from_raw(k, out))
    }

    /// `self ⊗ other`, `self` on the leading qubits.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let qubits = self.qubits + other.qubits;
        if qubits > MAX_QUBITS {
            return Err(Error::InvalidState(format!(
                "{qubits} qubits exceeds {MAX_QUBITS}"
            )));
        }
        Ok(Self::from_raw(qubits, self.data.kronecker(&other.data)))
    }

    /// `U ρ U†`.
    pub fn conjugate(&self, unitary: &DMatrix<Complex64>) -> Result<Self> {
        if unitary.nrows() != self.dim() || unitary.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: unitary.nrows(),
            });
        }
        Ok(Self::from_raw(
            self.qubits,
            unitary * &self.data * unitary.adjoint(),
        ))
    }
}

pub(crate) fn check_positions(positions: &[usize], qubits: usize) -> Result<()> {
    for (i, &p) in positions.iter().enumerate() {
        if p >= qubits {
            return Err(Error::PositionOutOfRange {
                position: p,
                qubits,
            });
        }
        if positions[..i].contains(&p) {
            return Err(invalid("positions", format!("qubit {p} listed twice")));
        }
    }
    Ok(())
}

/// Sends the qubits at `positions` through the channel, `positions[k]` being
/// carried by use `k`. Other qubits (e.g. a reference) are untouched.
pub fn apply_channel(
    rho: &DensityMatrix,
    cov: &PhaseCovariance,
    positions: &[usize],
) -> Result<DensityMatrix> {
    let n = rho.qubits();
    let uses = cov.uses();
    if positions.len() != uses {
        return Err(Error::DimensionMismatch {
            expected: uses,
            found: positions.len(),
        });
    }
    check_positions(positions, n)?;

    // decay factors depend only on the restriction of (j, l) to the used qubits
    let restrict = |idx: usize| {
        positions
            .iter()
            .fold(0usize, |acc, &q| (acc << 1) | bit(idx, q, n))
    };
    let width = 1 << uses;
    let g = cov.damping();
    let mut table = vec![0.0; width * width];
    for a in 0..width {
        for b in 0..width {
            let s: Vec<i32> = (0..uses)
                .map(|k| bit(b, k, uses) as i32 - bit(a, k, uses) as i32)
                .collect();
            table[a * width + b] = g.powf(exponent_of_weights(&s, cov));
        }
    }

    let dim = rho.dim();
    let restricted: Vec<usize> = (0..dim).map(restrict).collect();
    let mut out = rho.matrix().clone();
    for j in 0..dim {
        for l in 0..dim {
            out[(j, l)] *= table[restricted[j] * width + restricted[l]];
        }
    }
    let out = DensityMatrix::from_raw(n, out);
    let min = out.min_eigenvalue();
    if min < -POSITIVITY_TOL {
        return Err(Error::InvalidState(format!(
            "channel output has eigenvalue {min:e}; correlations are infeasible"
        )));
    }
    Ok(out)
}
