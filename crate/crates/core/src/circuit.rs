//! Gate-level simulation of the three-qubit phase code.
//!
//! The register is `(R, Q, A, B)`: reference, system, and the two ancillas.
//! Encoding copies `Q` onto the ancillas with two CNOTs and rotates all three
//! into the Hadamard frame, so a phase flip during transmission becomes a
//! bit flip. Decoding undoes the frame change and the CNOTs, leaving the
//! syndrome on `A, B`, and a Toffoli controlled by the ancillas corrects `Q`
//! coherently without measurement.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channel::{bit, DensityMatrix};
use crate::error::{invalid, Error, Result};

pub const REFERENCE: usize = 0;
pub const SYSTEM: usize = 1;
pub const ANCILLA_A: usize = 2;
pub const ANCILLA_B: usize = 3;
pub const REGISTER_QUBITS: usize = 4;

/// Transmission order of the encoded qubits: use 1 carries `Q`, then `A`, then `B`.
pub const TRANSMITTED: [usize; 3] = [SYSTEM, ANCILLA_A, ANCILLA_B];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Hadamard {
        target: usize,
    },
    Cnot {
        control: usize,
        target: usize,
    },
    Toffoli {
        controls: [usize; 2],
        target: usize,
    },
    /// σ_z, used to inject phase errors.
    PauliZ {
        target: usize,
    },
}

impl Gate {
    fn qubits_touched(&self) -> Vec<usize> {
        match *self {
            Gate::Hadamard { target } | Gate::PauliZ { target } => vec![target],
            Gate::Cnot { control, target } => vec![control, target],
            Gate::Toffoli { controls, target } => vec![controls[0], controls[1], target],
        }
    }

    pub fn validate(&self, qubits: usize) -> Result<()> {
        let touched = self.qubits_touched();
        for (i, &q) in touched.iter().enumerate() {
            if q >= qubits {
                return Err(Error::PositionOutOfRange {
                    position: q,
                    qubits,
                });
            }
            if touched[..i].contains(&q) {
                return Err(invalid("gate", format!("{self:?} repeats qubit {q}")));
            }
        }
        Ok(())
    }

    /// Full `2ⁿ × 2ⁿ` unitary of the gate on an `n`-qubit register.
    pub fn unitary(&self, qubits: usize) -> Result<DMatrix<Complex64>> {
        self.validate(qubits)?;
        let dim = 1 << qubits;
        let mut u = DMatrix::zeros(dim, dim);
        let mut column = vec![Complex64::new(0.0, 0.0); dim];
        for i in 0..dim {
            column
                .iter_mut()
                .for_each(|c| *c = Complex64::new(0.0, 0.0));
            column[i] = Complex64::new(1.0, 0.0);
            self.apply_unchecked(&mut column, qubits);
            for (r, &v) in column.iter().enumerate() {
                u[(r, i)] = v;
            }
        }
        Ok(u)
    }

    /// Applies the gate to a state vector in place.
    pub fn apply_to_vector(&self, state: &mut [Complex64], qubits: usize) -> Result<()> {
        self.validate(qubits)?;
        if state.len() != 1 << qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << qubits,
                found: state.len(),
            });
        }
        self.apply_unchecked(state, qubits);
        Ok(())
    }

    fn apply_unchecked(&self, state: &mut [Complex64], n: usize) {
        let mask = |q: usize| 1usize << (n - 1 - q);
        match *self {
            Gate::Hadamard { target } => {
                let m = mask(target);
                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                for i in (0..state.len()).filter(|i| i & m == 0) {
                    let (a, b) = (state[i], state[i | m]);
                    state[i] = h * (a + b);
                    state[i | m] = h * (a - b);
                }
            }
            Gate::PauliZ { target } => {
                let m = mask(target);
                for (i, amp) in state.iter_mut().enumerate() {
                    if i & m != 0 {
                        *amp = -*amp;
                    }
                }
            }
            Gate::Cnot { control, target } => {
                let (c, t) = (mask(control), mask(target));
                for i in (0..state.len()).filter(|i| i & c != 0 && i & t == 0) {
                    state.swap(i, i | t);
                }
            }
            Gate::Toffoli { controls, target } => {
                let c = mask(controls[0]) | mask(controls[1]);
                let t = mask(target);
                for i in (0..state.len()).filter(|i| i & c == c && i & t == 0) {
                    state.swap(i, i | t);
                }
            }
        }
    }
}

/// `ρ → U ρ U†` for one gate.
pub fn apply_gate(state: &DensityMatrix, gate: Gate) -> Result<DensityMatrix> {
    state.conjugate(&gate.unitary(state.qubits())?)
}

pub fn apply_gates(state: &DensityMatrix, gates: &[Gate]) -> Result<DensityMatrix> {
    let mut u = DMatrix::identity(state.dim(), state.dim());
    for gate in gates {
        u = gate.unitary(state.qubits())? * u;
    }
    state.conjugate(&u)
}

/// Stages a, b, c: CNOT(Q→A), CNOT(Q→B), then H on Q, A, B.
pub fn encode_gates() -> Vec<Gate> {
    vec![
        Gate::Cnot {
            control: SYSTEM,
            target: ANCILLA_A,
        },
        Gate::Cnot {
            control: SYSTEM,
            target: ANCILLA_B,
        },
        Gate::Hadamard { target: SYSTEM },
        Gate::Hadamard { target: ANCILLA_A },
        Gate::Hadamard { target: ANCILLA_B },
    ]
}

/// Stages e–h: H on Q, A, B, CNOT(Q→A), CNOT(Q→B), Toffoli(A, B → Q).
pub fn decode_gates() -> Vec<Gate> {
    vec![
        Gate::Hadamard { target: SYSTEM },
        Gate::Hadamard { target: ANCILLA_A },
        Gate::Hadamard { target: ANCILLA_B },
        Gate::Cnot {
            control: SYSTEM,
            target: ANCILLA_A,
        },
        Gate::Cnot {
            control: SYSTEM,
            target: ANCILLA_B,
        },
        Gate::Toffoli {
            controls: [ANCILLA_A, ANCILLA_B],
            target: SYSTEM,
        },
    ]
}

/// `(|00⟩ + |11⟩)/√2`, the purification of `ρ^Q = 1/2` on `(R, Q)`.
pub fn bell_pair() -> [Complex64; 4] {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let z = Complex64::new(0.0, 0.0);
    [h, z, z, h]
}

/// `|ψ^{RQ}⟩ ⊗ |00⟩` as a 16-component state vector.
pub fn bell_with_ancillas_vector() -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); 1 << REGISTER_QUBITS];
    let bell = bell_pair();
    for (rq, &amp) in bell.iter().enumerate() {
        v[rq << 2] = amp;
    }
    v
}

/// Density matrix of the full `(R, Q, A, B)` register.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    rho: DensityMatrix,
}

impl JointState {
    pub fn new(rho: DensityMatrix) -> Result<Self> {
        if rho.qubits() != REGISTER_QUBITS {
            return Err(Error::DimensionMismatch {
                expected: REGISTER_QUBITS,
                found: rho.qubits(),
            });
        }
        Ok(Self { rho })
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn into_inner(self) -> DensityMatrix {
        self.rho
    }

    /// State of `(R, Q)` after tracing out the ancillas.
    pub fn reduced(&self) -> DensityMatrix {
        self.rho
            .partial_trace(&[REFERENCE, SYSTEM])
            .expect("fixed register layout")
    }

    pub fn apply(&self, gate: Gate) -> Result<Self> {
        if gate.qubits_touched().contains(&REFERENCE) {
            return Err(invalid("gate", "the reference qubit is never acted on"));
        }
        Ok(Self {
            rho: apply_gate(&self.rho, gate)?,
        })
    }

    pub fn apply_all(&self, gates: &[Gate]) -> Result<Self> {
        if gates
            .iter()
            .any(|g| g.qubits_touched().contains(&REFERENCE))
        {
            return Err(invalid("gate", "the reference qubit is never acted on"));
        }
        Ok(Self {
            rho: apply_gates(&self.rho, gates)?,
        })
    }

    /// `⟨ψ^{RQ}| Tr_{AB} ρ |ψ^{RQ}⟩` against the Bell pair.
    pub fn fidelity(&self) -> f64 {
        entanglement_fidelity(&self.reduced(), &bell_pair()).expect("fixed register layout")
    }
}

pub fn prepare_bell_with_ancillas() -> JointState {
    let rho = DensityMatrix::pure(&bell_with_ancillas_vector()).expect("normalised vector");
    JointState { rho }
}

pub fn apply_gate_joint(state: &JointState, gate: Gate) -> Result<JointState> {
    state.apply(gate)
}

pub fn tqc_encode(state: &JointState) -> JointState {
    state
        .apply_all(&encode_gates())
        .expect("fixed register layout")
}

pub fn tqc_decode(state: &JointState) -> JointState {
    state
        .apply_all(&decode_gates())
        .expect("fixed register layout")
}

/// `⟨ψ|ρ|ψ⟩` for an already reduced `ρ` and a pure reference `ψ`.
pub fn entanglement_fidelity(reduced: &DensityMatrix, reference: &[Complex64]) -> Result<f64> {
    let norm: f64 = reference.iter().map(|a| a.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(invalid("reference", format!("state has norm² {norm}")));
    }
    Ok(reduced.overlap(reference)?.clamp(0.0, 1.0))
}

/// `Σ_{ab} |⟨ψ^{RQ} ⊗ ab | w⟩|²` for a pure register state `w`, i.e. the
/// entanglement fidelity without forming a density matrix.
pub fn vector_fidelity(state: &[Complex64]) -> f64 {
    let bell = bell_pair();
    let n = REGISTER_QUBITS;
    let mut total = 0.0;
    for env in 0..4 {
        let mut amp = Complex64::new(0.0, 0.0);
        for (rq, b) in bell.iter().enumerate() {
            let idx = (bit(rq, 0, 2) << (n - 1 - REFERENCE))
                | (bit(rq, 1, 2) << (n - 1 - SYSTEM))
                | (bit(env, 0, 2) << (n - 1 - ANCILLA_A))
                | (bit(env, 1, 2) << (n - 1 - ANCILLA_B));
            amp += b.conj() * state[idx];
        }
        total += amp.norm_sqr();
    }
    total
}
