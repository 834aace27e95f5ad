//! Random-construction baseline: grow a circuit with uniformly random gates,
//! re-optimizing every parameter after each addition.
//!
//! Also home to the two shared initial layers — the separable ansatz (SA)
//! and the hardware-efficient ansatz (HEA) — which the variable-ansatz
//! search reuses.

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::Result;
use crate::opt::{self, BudgetLedger, SearchOutcome};
use crate::problems::{self, IsingModel};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitialLayer {
    /// One RY per qubit: n parameters, no entanglement, depth 1.
    SA,
    /// RY and RZ per qubit followed by a CNOT ladder: 2n parameters,
    /// n-1 CNOTs.
    HEA,
}

impl InitialLayer {
    pub fn as_str(self) -> &'static str {
        match self {
            InitialLayer::SA => "SA",
            InitialLayer::HEA => "HEA",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "SA" | "sa" => Some(InitialLayer::SA),
            "HEA" | "hea" => Some(InitialLayer::HEA),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RaVqeConfig {
    pub initial_layer: InitialLayer,
    pub seed: u64,
}

/// Build an initial layer with all angles zero (the identity on |0...0>).
pub fn initial_layer(kind: InitialLayer, n: usize) -> Result<Circuit> {
    let mut c = Circuit::new(n);
    match kind {
        InitialLayer::SA => {
            for q in 0..n {
                let pos = c.gates.len();
                c = c.insert_gate(Gate::rotation(GateKind::RY, q), pos, 0.0)?;
            }
        }
        InitialLayer::HEA => {
            for q in 0..n {
                let pos = c.gates.len();
                c = c.insert_gate(Gate::rotation(GateKind::RY, q), pos, 0.0)?;
                let pos = c.gates.len();
                c = c.insert_gate(Gate::rotation(GateKind::RZ, q), pos, 0.0)?;
            }
            for q in 0..n.saturating_sub(1) {
                let pos = c.gates.len();
                c = c.insert_gate(Gate::cnot(q, q + 1), pos, 0.0)?;
            }
        }
    }
    Ok(c)
}

/// Draw one gate from the pool {RX, RY, RZ, CNOT} with uniformly chosen
/// distinct qubits.
fn random_gate(rng: &mut RngStream, n: usize) -> Gate {
    match rng.range(0..4usize) {
        0 => Gate::rotation(GateKind::RX, rng.range(0..n)),
        1 => Gate::rotation(GateKind::RY, rng.range(0..n)),
        2 => Gate::rotation(GateKind::RZ, rng.range(0..n)),
        _ => {
            let control = rng.range(0..n);
            let mut target = rng.range(0..n - 1);
            if target >= control {
                target += 1;
            }
            Gate::cnot(control, target)
        }
    }
}

/// Run the random-growth search until the ledger is exhausted. Each round
/// appends one random gate (rotations start at angle 0) and re-optimizes all
/// parameters warm-started from the previous best angles; the reported
/// result is the lowest-expectation snapshot ever observed.
pub fn run(
    model: &IsingModel,
    cfg: &RaVqeConfig,
    ledger: &mut BudgetLedger,
) -> Result<SearchOutcome> {
    let energy = problems::to_diagonal(model)?;
    let mut rng = RngStream::new(cfg.seed, "ra-vqe");
    let mut working = initial_layer(cfg.initial_layer, model.n)?;

    let mut best_circuit = working.clone();
    let mut best_expectation = f64::INFINITY;

    loop {
        let result = opt::optimize_circuit(
            &working,
            &energy,
            ledger,
            ledger.per_structure_cap,
            None,
        )?;
        if result.evals_used > 0 {
            working.params = result.best_params;
            if result.best_value < best_expectation {
                best_expectation = result.best_value;
                best_circuit = working.clone();
            }
        }
        if ledger.exhausted() {
            break;
        }
        let gate = random_gate(&mut rng, model.n);
        let pos = working.gates.len();
        working = working.insert_gate(gate, pos, 0.0)?;
    }

    Ok(SearchOutcome {
        best_circuit,
        best_expectation,
        best_loss: best_expectation,
        evals_used: ledger.used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{generate, qubo_to_ising, ProblemKind, ProblemSpec};

    #[test]
    fn sa_layer_shape() {
        let c = initial_layer(InitialLayer::SA, 4).unwrap();
        let counts = c.count_gates();
        assert_eq!((counts.total, counts.cnot), (4, 0));
        assert_eq!(c.params.len(), 4);
        assert_eq!(counts.depth, 1);
    }

    #[test]
    fn hea_layer_shape() {
        let c = initial_layer(InitialLayer::HEA, 4).unwrap();
        let counts = c.count_gates();
        assert_eq!((counts.total, counts.cnot), (11, 3));
        assert_eq!(c.params.len(), 8);
    }

    #[test]
    fn zero_angle_sa_prepares_all_zero_state() {
        let c = initial_layer(InitialLayer::SA, 5).unwrap();
        let state = crate::sim::run_circuit(&c).unwrap();
        assert!((state.amplitudes()[0].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cap_of_fifty_allows_exactly_one_structure_round() {
        let spec = ProblemSpec::new(ProblemKind::MaxCutStar, 4, 0);
        let model = qubo_to_ising(&generate(&spec).unwrap());
        let mut ledger = BudgetLedger::new(50, 50);
        let outcome = run(
            &model,
            &RaVqeConfig {
                initial_layer: InitialLayer::SA,
                seed: 1,
            },
            &mut ledger,
        )
        .unwrap();
        // Only the initial layer was optimized: no random gate was appended.
        assert_eq!(outcome.best_circuit.count_gates().total, 4);
        assert!(ledger.used <= 50);
    }

    #[test]
    fn pool_legality_of_appended_gates() {
        let mut rng = RngStream::new(9, "pool");
        for _ in 0..500 {
            let g = random_gate(&mut rng, 5);
            match g.kind {
                GateKind::RX | GateKind::RY | GateKind::RZ => assert_eq!(g.qubits.len(), 1),
                GateKind::CNOT => {
                    assert_eq!(g.qubits.len(), 2);
                    assert_ne!(g.qubits[0], g.qubits[1]);
                }
                GateKind::H => panic!("H is not in the growth pool"),
            }
        }
    }

    #[test]
    fn run_is_reproducible_bit_for_bit() {
        let spec = ProblemSpec::new(ProblemKind::MaxCutER, 4, 3);
        let model = qubo_to_ising(&generate(&spec).unwrap());
        let cfg = RaVqeConfig {
            initial_layer: InitialLayer::SA,
            seed: 11,
        };
        let mut l1 = BudgetLedger::new(600, 50);
        let a = run(&model, &cfg, &mut l1).unwrap();
        let mut l2 = BudgetLedger::new(600, 50);
        let b = run(&model, &cfg, &mut l2).unwrap();
        assert_eq!(a.best_expectation.to_bits(), b.best_expectation.to_bits());
        assert_eq!(a.best_circuit, b.best_circuit);
        assert_eq!(l1.used, l2.used);
    }

    #[test]
    fn star_instance_reaches_ground_state() {
        let spec = ProblemSpec::new(ProblemKind::MaxCutStar, 4, 0);
        let model = qubo_to_ising(&generate(&spec).unwrap());
        let mut ledger = BudgetLedger::new(2_000, 50);
        let outcome = run(
            &model,
            &RaVqeConfig {
                initial_layer: InitialLayer::SA,
                seed: 5,
            },
            &mut ledger,
        )
        .unwrap();
        assert!(
            (outcome.best_expectation + 3.0).abs() < 0.05,
            "best {}",
            outcome.best_expectation
        );
    }
}
