//! Exact dense statevector simulation and diagonal-Hamiltonian expectation.
//!
//! This is the cost kernel every search algorithm pays for: run a circuit
//! from |0...0> and take the expectation of a diagonal Ising Hamiltonian on
//! the final state. Qubit 0 is the least significant bit of the basis-state
//! index throughout.

use num_complex::Complex64;

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 16;

/// Dense state of up to [`MAX_QUBITS`] qubits.
#[derive(Debug, Clone)]
pub struct State {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

/// Per-basis-state energies of a diagonal Hamiltonian: entry `b` is the Ising
/// energy (offset included) of the computational basis state `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalEnergy {
    pub n_qubits: usize,
    pub energies: Vec<f64>,
}

impl State {
    /// |0...0> on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::CapacityExceeded {
                context: "statevector",
                n: n_qubits,
                bound: MAX_QUBITS,
            });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(State {
            n_qubits,
            amplitudes,
        })
    }

    /// State with explicit amplitudes, normalized by the caller.
    pub fn from_amplitudes(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 1 << n_qubits {
            return Err(Error::DimensionMismatch {
                state_qubits: n_qubits,
                energy_qubits: amplitudes.len(),
            });
        }
        Ok(State {
            n_qubits,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// |<self|other>|^2, the fidelity between two pure states.
    pub fn fidelity(&self, other: &State) -> f64 {
        let overlap: Complex64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum();
        overlap.norm_sqr()
    }

    fn apply_single(&mut self, qubit: usize, m: [[Complex64; 2]; 2]) {
        let stride = 1usize << qubit;
        let dim = self.amplitudes.len();
        let mut base = 0;
        while base < dim {
            for i0 in base..base + stride {
                let i1 = i0 + stride;
                let a0 = self.amplitudes[i0];
                let a1 = self.amplitudes[i1];
                self.amplitudes[i0] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[i1] = m[1][0] * a0 + m[1][1] * a1;
            }
            base += 2 * stride;
        }
    }

    fn apply_rz(&mut self, qubit: usize, theta: f64) {
        // Diagonal: exp(-i theta/2) on bit 0, exp(+i theta/2) on bit 1.
        let half = theta / 2.0;
        let p0 = Complex64::from_polar(1.0, -half);
        let p1 = Complex64::from_polar(1.0, half);
        let mask = 1usize << qubit;
        for (i, amp) in self.amplitudes.iter_mut().enumerate() {
            *amp *= if i & mask == 0 { p0 } else { p1 };
        }
    }

    fn apply_cnot(&mut self, control: usize, target: usize) {
        let cmask = 1usize << control;
        let tmask = 1usize << target;
        for i in 0..self.amplitudes.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amplitudes.swap(i, i | tmask);
            }
        }
    }
}

/// Apply one gate in place. `angle` must be supplied iff the gate is a
/// rotation; H and CNOT ignore it.
pub fn apply_gate(state: &mut State, gate: &Gate, angle: Option<f64>) -> Result<()> {
    for &q in &gate.qubits {
        if q >= state.n_qubits {
            return Err(Error::QubitOutOfRange {
                index: q,
                n_qubits: state.n_qubits,
            });
        }
    }
    match gate.kind {
        GateKind::H => {
            let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            state.apply_single(gate.qubits[0], [[h, h], [h, -h]]);
        }
        GateKind::RX => {
            let half = angle.expect("rotation gate needs an angle") / 2.0;
            let c = Complex64::new(half.cos(), 0.0);
            let s = Complex64::new(0.0, -half.sin());
            state.apply_single(gate.qubits[0], [[c, s], [s, c]]);
        }
        GateKind::RY => {
            let half = angle.expect("rotation gate needs an angle") / 2.0;
            let c = Complex64::new(half.cos(), 0.0);
            let s = Complex64::new(half.sin(), 0.0);
            state.apply_single(gate.qubits[0], [[c, -s], [s, c]]);
        }
        GateKind::RZ => {
            state.apply_rz(gate.qubits[0], angle.expect("rotation gate needs an angle"));
        }
        GateKind::CNOT => {
            if gate.qubits[0] == gate.qubits[1] {
                return Err(Error::DegenerateCnot {
                    qubit: gate.qubits[0],
                });
            }
            state.apply_cnot(gate.qubits[0], gate.qubits[1]);
        }
    }
    Ok(())
}

/// Run a circuit on |0...0>, applying gates in list order.
pub fn run_circuit(circuit: &Circuit) -> Result<State> {
    let mut state = State::zero(circuit.n_qubits)?;
    for gate in &circuit.gates {
        let angle = gate.param_slot.map(|s| circuit.params[s]);
        apply_gate(&mut state, gate, angle)?;
    }
    Ok(state)
}

/// <psi|H|psi> for a diagonal Hamiltonian: sum_b |amp_b|^2 * energy_b.
///
/// This is the raw kernel. Algorithm code must route calls through the
/// budget-counting wrappers in [`crate::opt`] so the evaluation protocol
/// stays auditable.
pub fn expectation(state: &State, energy: &DiagonalEnergy) -> Result<f64> {
    if state.n_qubits != energy.n_qubits {
        return Err(Error::DimensionMismatch {
            state_qubits: state.n_qubits,
            energy_qubits: energy.n_qubits,
        });
    }
    Ok(state
        .amplitudes
        .iter()
        .zip(&energy.energies)
        .map(|(a, e)| a.norm_sqr() * e)
        .sum())
}
