//! Fixed-structure QAOA baseline.
//!
//! The circuit is an initial layer of Hadamard gates followed by `p`
//! repetitions of a cost layer (each ZZ coupling compiled as CNOT-RZ-CNOT,
//! then RZ for each nonzero linear term) and an x-axis mixer layer. Each
//! layer shares one gamma across its cost rotations and one beta across its
//! mixer rotations, so the optimizer works in a 2p-dimensional space that is
//! expanded onto per-gate slots.

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::Result;
use crate::opt::{self, BudgetLedger, SearchOutcome};
use crate::problems::{self, IsingModel};
use crate::rng::RngStream;

#[derive(Debug, Clone)]
pub struct QaoaConfig {
    /// Layer count, 1..=10.
    pub p: usize,
    /// Seed for the uniform-random initial parameters.
    pub init_seed: u64,
}

/// A built QAOA circuit plus the map from the 2p logical parameters
/// (gamma_1, beta_1, ..., gamma_p, beta_p order: all gammas first, then all
/// betas is NOT used; see `slot_bindings`) onto per-gate slots.
#[derive(Debug, Clone)]
pub struct QaoaAnsatz {
    pub circuit: Circuit,
    /// For each logical parameter, the (slot, coefficient) pairs it drives:
    /// realized angle = coefficient * logical value.
    pub bindings: Vec<Vec<(usize, f64)>>,
    pub p: usize,
}

impl QaoaAnsatz {
    /// Number of logical parameters (2p: gamma then beta per layer).
    pub fn logical_len(&self) -> usize {
        2 * self.p
    }

    /// Write logical parameter values through to the circuit's slots.
    pub fn realize(&self, logical: &[f64], circuit: &mut Circuit) {
        debug_assert_eq!(logical.len(), self.logical_len());
        for (binding, &value) in self.bindings.iter().zip(logical) {
            for &(slot, coeff) in binding {
                circuit.params[slot] = coeff * value;
            }
        }
    }
}

/// Build the depth-`p` QAOA circuit for an Ising model.
///
/// Gate count: n + p * (3|j| + |{i : h_i != 0}| + n); CNOT count: 2p|j|.
pub fn build_circuit(model: &IsingModel, p: usize) -> Result<QaoaAnsatz> {
    let n = model.n;
    let mut circuit = Circuit::new(n);
    let mut bindings: Vec<Vec<(usize, f64)>> = vec![Vec::new(); 2 * p];

    for q in 0..n {
        let pos = circuit.gates.len();
        circuit = circuit.insert_gate(Gate::h(q), pos, 0.0)?;
    }
    for layer in 0..p {
        let gamma_binding = 2 * layer;
        let beta_binding = 2 * layer + 1;
        // Cost layer: ZZ couplings in sorted pair order, then linear terms.
        for (&(i, k), &jik) in &model.j {
            let pos = circuit.gates.len();
            circuit = circuit.insert_gate(Gate::cnot(i, k), pos, 0.0)?;
            let pos = circuit.gates.len();
            circuit = circuit.insert_gate(Gate::rotation(GateKind::RZ, k), pos, 0.0)?;
            bindings[gamma_binding].push((circuit.params.len() - 1, 2.0 * jik));
            let pos = circuit.gates.len();
            circuit = circuit.insert_gate(Gate::cnot(i, k), pos, 0.0)?;
        }
        for (i, &hi) in model.h.iter().enumerate() {
            if hi == 0.0 {
                continue;
            }
            let pos = circuit.gates.len();
            circuit = circuit.insert_gate(Gate::rotation(GateKind::RZ, i), pos, 0.0)?;
            bindings[gamma_binding].push((circuit.params.len() - 1, 2.0 * hi));
        }
        // Mixer layer: RX on every qubit.
        for q in 0..n {
            let pos = circuit.gates.len();
            circuit = circuit.insert_gate(Gate::rotation(GateKind::RX, q), pos, 0.0)?;
            bindings[beta_binding].push((circuit.params.len() - 1, 2.0));
        }
    }
    Ok(QaoaAnsatz {
        circuit,
        bindings,
        p,
    })
}

/// Run QAOA: the structure is fixed, so the entire evaluation budget goes to
/// parameter optimization. Each optimizer pass starts from fresh parameters
/// drawn i.i.d. uniform on [0, 2pi) and runs to convergence; passes repeat
/// until the ledger is exhausted and the best point across all passes wins.
pub fn run(
    model: &IsingModel,
    cfg: &QaoaConfig,
    ledger: &mut BudgetLedger,
) -> Result<SearchOutcome> {
    let ansatz = build_circuit(model, cfg.p)?;
    let energy = problems::to_diagonal(model)?;
    let mut rng = RngStream::new(cfg.init_seed, "qaoa-init");

    let mut work = ansatz.circuit.clone();
    let mut best_logical: Option<Vec<f64>> = None;
    let mut best_value = f64::INFINITY;

    while !ledger.exhausted() {
        let x0: Vec<f64> = (0..ansatz.logical_len())
            .map(|_| rng.uniform() * std::f64::consts::TAU)
            .collect();
        let budget = ledger.remaining();
        let mut sim_error = None;
        let result = opt::minimize(
            |logical: &[f64]| {
                ansatz.realize(logical, &mut work);
                match crate::sim::run_circuit(&work)
                    .and_then(|s| crate::sim::expectation(&s, &energy))
                {
                    Ok(e) => e,
                    Err(err) => {
                        sim_error.get_or_insert(err);
                        f64::INFINITY
                    }
                }
            },
            &x0,
            ledger,
            budget,
        );
        if let Some(err) = sim_error {
            return Err(err);
        }
        if result.evals_used > 0 && result.best_value < best_value {
            best_value = result.best_value;
            best_logical = Some(result.best_params);
        }
    }

    let mut best_circuit = ansatz.circuit.clone();
    if let Some(logical) = &best_logical {
        ansatz.realize(logical, &mut best_circuit);
    }
    Ok(SearchOutcome {
        best_circuit,
        best_expectation: best_value,
        best_loss: best_value,
        evals_used: ledger.used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{generate, qubo_to_ising, ProblemKind, ProblemSpec};
    use std::collections::BTreeMap;

    fn star_model(n: usize) -> IsingModel {
        let spec = ProblemSpec::new(ProblemKind::MaxCutStar, n, 0);
        qubo_to_ising(&generate(&spec).unwrap())
    }

    #[test]
    fn star_gate_counts_match_published_structure() {
        for (n, p, total, cnot) in [(4, 1, 17, 6), (8, 2, 66, 28), (12, 3, 147, 66)] {
            let ansatz = build_circuit(&star_model(n), p).unwrap();
            let counts = ansatz.circuit.count_gates();
            assert_eq!(counts.total, total, "n={n} p={p}");
            assert_eq!(counts.cnot, cnot, "n={n} p={p}");
        }
    }

    #[test]
    fn gate_count_formula_holds_for_random_models() {
        let mut rng = RngStream::new(5, "qaoa-count");
        for _ in 0..20 {
            let n = 3 + rng.range(0..4usize);
            let mut j = BTreeMap::new();
            for i in 0..n {
                for k in (i + 1)..n {
                    if rng.bool(0.5) {
                        j.insert((i, k), rng.range(-1.0..1.0f64));
                    }
                }
            }
            let h: Vec<f64> = (0..n)
                .map(|_| if rng.bool(0.5) { rng.range(-1.0..1.0) } else { 0.0 })
                .collect();
            let model = IsingModel {
                n,
                h: h.clone(),
                j: j.clone(),
                offset: 0.0,
            };
            let p = 1 + rng.range(0..3usize);
            let ansatz = build_circuit(&model, p).unwrap();
            let counts = ansatz.circuit.count_gates();
            let nonzero_h = h.iter().filter(|&&v| v != 0.0).count();
            assert_eq!(counts.total, n + p * (3 * j.len() + nonzero_h + n));
            assert_eq!(counts.cnot, 2 * p * j.len());
        }
    }

    #[test]
    fn zero_angles_give_uniform_superposition_energy() {
        for n in [4usize, 6] {
            let model = star_model(n);
            let edges = model.j.len() as f64;
            let ansatz = build_circuit(&model, 2).unwrap();
            let mut circuit = ansatz.circuit.clone();
            ansatz.realize(&vec![0.0; ansatz.logical_len()], &mut circuit);
            let energy = problems::to_diagonal(&model).unwrap();
            let state = crate::sim::run_circuit(&circuit).unwrap();
            let e = crate::sim::expectation(&state, &energy).unwrap();
            assert!((e + edges / 2.0).abs() < 1e-10, "n={n}: {e}");
        }
    }

    #[test]
    fn perturbing_gamma_touches_exactly_its_layers_rz_angles() {
        let model = star_model(5);
        let ansatz = build_circuit(&model, 3).unwrap();
        let mut base = ansatz.circuit.clone();
        let mut logical = vec![0.3; ansatz.logical_len()];
        ansatz.realize(&logical, &mut base);
        logical[2] += 0.5; // gamma of layer 1 (0-indexed)
        let mut bumped = ansatz.circuit.clone();
        ansatz.realize(&logical, &mut bumped);

        let changed: Vec<usize> = (0..base.params.len())
            .filter(|&s| base.params[s] != bumped.params[s])
            .collect();
        let expected: Vec<usize> = ansatz.bindings[2].iter().map(|&(s, _)| s).collect();
        assert_eq!(changed, expected);
        for &slot in &expected {
            let owner = base
                .gates
                .iter()
                .find(|g| g.param_slot == Some(slot))
                .unwrap();
            assert_eq!(owner.kind, GateKind::RZ);
        }
    }

    #[test]
    fn star_run_reaches_ground_energy_at_p3() {
        let model = star_model(4);
        let mut ledger = BudgetLedger::standard();
        let outcome = run(
            &model,
            &QaoaConfig { p: 3, init_seed: 7 },
            &mut ledger,
        )
        .unwrap();
        assert!(
            (outcome.best_expectation + 3.0).abs() < 0.05,
            "expectation {}",
            outcome.best_expectation
        );
        assert_eq!(outcome.evals_used, ledger.used);
        assert!(ledger.used <= 10_000);
    }

    #[test]
    fn p1_star_lands_on_its_analytic_optimum() {
        // The exact p=1 optimum on the 4-node star is 3*(1/2 + m/4) with
        // m = max of sin(g)(1 + cos^2 g) = sqrt(2/3) * 4/3.
        let analytic = -3.0 * (0.5 + (2.0f64 / 3.0).sqrt() * (4.0 / 3.0) / 4.0);
        let model = star_model(4);
        let mut ledger = BudgetLedger::standard();
        let outcome = run(
            &model,
            &QaoaConfig { p: 1, init_seed: 3 },
            &mut ledger,
        )
        .unwrap();
        assert!(
            (outcome.best_expectation - analytic).abs() < 1e-3,
            "expectation {} vs analytic {analytic}",
            outcome.best_expectation
        );
    }
}
