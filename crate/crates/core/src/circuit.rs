//! Parameterized quantum circuit representation.
//!
//! A [`Circuit`] is an ordered gate list over `n_qubits` qubits plus a vector
//! of rotation angles. Rotation gates reference angles through `param_slot`
//! indices; the slot set is always exactly `{0..params.len()-1}` so slots can
//! be optimized as a flat vector. Circuits are immutable values: the mutation
//! primitives return new circuits, which makes them safe to share across
//! concurrent benchmark runs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The fixed gate pool: Hadamard, axis rotations, and CNOT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    H,
    RX,
    RY,
    RZ,
    CNOT,
}

impl GateKind {
    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::RX | GateKind::RY | GateKind::RZ)
    }
}

/// One gate application. `qubits` holds one index for single-qubit kinds and
/// `[control, target]` for CNOT. `param_slot` is present iff the kind is a
/// rotation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_slot: Option<usize>,
}

impl Gate {
    pub fn h(qubit: usize) -> Self {
        Gate {
            kind: GateKind::H,
            qubits: vec![qubit],
            param_slot: None,
        }
    }

    /// Rotation gate without an assigned slot; insertion assigns one.
    pub fn rotation(kind: GateKind, qubit: usize) -> Self {
        debug_assert!(kind.is_rotation());
        Gate {
            kind,
            qubits: vec![qubit],
            param_slot: None,
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate {
            kind: GateKind::CNOT,
            qubits: vec![control, target],
            param_slot: None,
        }
    }

    pub fn is_rotation(&self) -> bool {
        self.kind.is_rotation()
    }

    pub fn touches(&self, qubit: usize) -> bool {
        self.qubits.contains(&qubit)
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        for &q in &self.qubits {
            if q >= n_qubits {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    n_qubits,
                });
            }
        }
        match self.kind {
            GateKind::CNOT => {
                if self.qubits.len() != 2 {
                    return Err(Error::MalformedGene(format!(
                        "CNOT takes 2 qubits, got {}",
                        self.qubits.len()
                    )));
                }
                if self.qubits[0] == self.qubits[1] {
                    return Err(Error::DegenerateCnot {
                        qubit: self.qubits[0],
                    });
                }
            }
            _ => {
                if self.qubits.len() != 1 {
                    return Err(Error::MalformedGene(format!(
                        "{:?} takes 1 qubit, got {}",
                        self.kind,
                        self.qubits.len()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Structural size metrics for a circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCounts {
    pub total: usize,
    pub cnot: usize,
    /// Longest dependency chain: each gate sits one layer above the deepest
    /// previous gate sharing any of its qubits.
    pub depth: usize,
}

/// An ordered gate list with its parameter vector. Gate order is execution
/// order (leftmost gate is applied first). Angles are stored unreduced: the
/// optimizers' trajectories must not jump, so nothing folds mod 2pi here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
    pub params: Vec<f64>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit {
            n_qubits,
            gates: Vec::new(),
            params: Vec::new(),
        }
    }

    /// Total/CNOT/depth counts. Pure function of the structure.
    pub fn count_gates(&self) -> GateCounts {
        let mut qubit_layer = vec![0usize; self.n_qubits];
        let mut cnot = 0usize;
        let mut depth = 0usize;
        for gate in &self.gates {
            if gate.kind == GateKind::CNOT {
                cnot += 1;
            }
            let layer = 1 + gate
                .qubits
                .iter()
                .map(|&q| qubit_layer[q])
                .max()
                .unwrap_or(0);
            for &q in &gate.qubits {
                qubit_layer[q] = layer;
            }
            depth = depth.max(layer);
        }
        GateCounts {
            total: self.gates.len(),
            cnot,
            depth,
        }
    }

    /// New circuit with `gate` inserted at `position`. A rotation gets a
    /// fresh parameter slot holding `init_angle`; existing slot references
    /// are unaffected because new slots are appended.
    pub fn insert_gate(&self, mut gate: Gate, position: usize, init_angle: f64) -> Result<Circuit> {
        if position > self.gates.len() {
            return Err(Error::PositionOutOfRange {
                position,
                len: self.gates.len(),
            });
        }
        gate.validate(self.n_qubits)?;
        let mut next = self.clone();
        if gate.is_rotation() {
            gate.param_slot = Some(next.params.len());
            next.params.push(init_angle);
        } else {
            gate.param_slot = None;
        }
        next.gates.insert(position, gate);
        Ok(next)
    }

    /// New circuit with the gate at `position` removed. If it owned a slot,
    /// the slot is deleted and all later slot references are compacted.
    pub fn remove_gate(&self, position: usize) -> Result<Circuit> {
        if position >= self.gates.len() {
            return Err(Error::PositionOutOfRange {
                position,
                len: self.gates.len(),
            });
        }
        let mut next = self.clone();
        let removed = next.gates.remove(position);
        if let Some(slot) = removed.param_slot {
            next.params.remove(slot);
            for gate in &mut next.gates {
                if let Some(s) = gate.param_slot {
                    if s > slot {
                        gate.param_slot = Some(s - 1);
                    }
                }
            }
        }
        Ok(next)
    }

    /// Angle of the gate at `position`, if it is a rotation.
    pub fn angle_at(&self, position: usize) -> Option<f64> {
        self.gates[position].param_slot.map(|s| self.params[s])
    }

    /// Check the structural invariants: qubit ranges, CNOT arity, and slot
    /// compaction (slots are a permutation of 0..params.len()).
    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.params.len()];
        for gate in &self.gates {
            gate.validate(self.n_qubits)?;
            match (gate.kind.is_rotation(), gate.param_slot) {
                (true, Some(slot)) => {
                    if slot >= self.params.len() || seen[slot] {
                        return Err(Error::MalformedGene(format!(
                            "param slot {slot} out of range or duplicated"
                        )));
                    }
                    seen[slot] = true;
                }
                (true, None) => {
                    return Err(Error::MalformedGene(
                        "rotation gate without a param slot".into(),
                    ))
                }
                (false, Some(_)) => {
                    return Err(Error::MalformedGene(
                        "non-rotation gate carries a param slot".into(),
                    ))
                }
                (false, None) => {}
            }
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::MalformedGene("orphan parameter slot".into()));
        }
        Ok(())
    }
}
