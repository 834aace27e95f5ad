//! Derivative-free parameter optimization under the evaluation-budget
//! protocol.
//!
//! Every circuit-expectation evaluation in the whole suite goes through a
//! [`BudgetLedger`], either via [`minimize`]'s counting wrapper or via
//! [`counted_expectation`] for one-off evaluations (e.g. the cost-guided
//! gate-removal scan). Structure-search bookkeeping reuses cached values so
//! the ledger count equals the true number of expectation calls.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::Result;
use crate::sim::{self, DiagonalEnergy};

/// Name of the parameter optimizer backing [`minimize`], recorded in results
/// metadata.
pub const OPTIMIZER_NAME: &str = "cobyla";

/// Initial trust-region radius in radians.
const RHO_BEGIN: f64 = 0.5;
/// Final trust-region radius; convergence threshold.
const RHO_END: f64 = 1e-4;

/// Default global cap on expectation evaluations per algorithm run.
pub const GLOBAL_EVAL_CAP: usize = 10_000;
/// Default evaluation budget for optimizing one candidate structure.
pub const STRUCTURE_EVAL_CAP: usize = 50;

/// Counts circuit-expectation evaluations for one algorithm run.
///
/// A ledger belongs to exactly one run; increments are strictly sequential.
#[derive(Debug, Clone)]
pub struct BudgetLedger {
    pub global_cap: usize,
    pub used: usize,
    pub per_structure_cap: usize,
    /// Largest number of evaluations consumed by any single `minimize` call;
    /// lets the acceptance suite audit the per-structure protocol.
    structure_high_watermark: usize,
}

impl BudgetLedger {
    pub fn new(global_cap: usize, per_structure_cap: usize) -> Self {
        BudgetLedger {
            global_cap,
            used: 0,
            per_structure_cap,
            structure_high_watermark: 0,
        }
    }

    pub fn standard() -> Self {
        Self::new(GLOBAL_EVAL_CAP, STRUCTURE_EVAL_CAP)
    }

    pub fn remaining(&self) -> usize {
        self.global_cap - self.used
    }

    pub fn exhausted(&self) -> bool {
        self.used >= self.global_cap
    }

    /// Record one evaluation. Returns false (without counting) once the
    /// global cap is reached.
    pub fn try_charge(&mut self) -> bool {
        if self.exhausted() {
            return false;
        }
        self.used += 1;
        true
    }

    pub fn structure_high_watermark(&self) -> usize {
        self.structure_high_watermark
    }

    fn record_structure_evals(&mut self, evals: usize) {
        self.structure_high_watermark = self.structure_high_watermark.max(evals);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminatedBy {
    Converged,
    StructureBudget,
    GlobalBudget,
}

/// What every search algorithm hands back: the best circuit it observed
/// (with its parameters realized), that circuit's expectation, the value of
/// the algorithm's own selection loss there (equal to the expectation except
/// for searches with penalized losses), and the evaluation count charged to
/// its ledger.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best_circuit: Circuit,
    pub best_expectation: f64,
    pub best_loss: f64,
    pub evals_used: usize,
}

/// Outcome of one optimization call: the best point visited and how the call
/// ended.
#[derive(Debug, Clone)]
pub struct OptResult {
    pub best_params: Vec<f64>,
    pub best_value: f64,
    pub evals_used: usize,
    pub terminated_by: TerminatedBy,
}

/// Evaluate a circuit's expectation, charging the ledger. Returns `None`
/// if the global budget is already exhausted (no evaluation happens).
pub fn counted_expectation(
    circuit: &Circuit,
    energy: &DiagonalEnergy,
    ledger: &mut BudgetLedger,
) -> Result<Option<f64>> {
    if !ledger.try_charge() {
        return Ok(None);
    }
    let state = sim::run_circuit(circuit)?;
    Ok(Some(sim::expectation(&state, energy)?))
}

/// Minimize `objective` from `x0` with COBYLA, charging one ledger unit per
/// objective call. Stops at `max_evals` calls, at the ledger's global cap,
/// or at trust-region convergence, and always reports the best point
/// actually visited.
///
/// An empty `x0` is legal (zero-parameter circuit): the objective is
/// evaluated once.
pub fn minimize<F>(
    mut objective: F,
    x0: &[f64],
    ledger: &mut BudgetLedger,
    max_evals: usize,
) -> OptResult
where
    F: FnMut(&[f64]) -> f64,
{
    let effective_max = max_evals.min(ledger.remaining());
    let clamped_by_global = effective_max < max_evals;
    if effective_max == 0 {
        // Exhausted before starting; nothing was evaluated.
        return OptResult {
            best_params: x0.to_vec(),
            best_value: f64::INFINITY,
            evals_used: 0,
            terminated_by: TerminatedBy::GlobalBudget,
        };
    }

    if x0.is_empty() {
        ledger.try_charge();
        ledger.record_structure_evals(1);
        return OptResult {
            best_params: Vec::new(),
            best_value: objective(&[]),
            evals_used: 1,
            terminated_by: TerminatedBy::Converged,
        };
    }

    struct Track<'f, F> {
        objective: &'f mut F,
        evals: usize,
        budget: usize,
        best_x: Vec<f64>,
        best_f: f64,
    }
    let track = RefCell::new(Track {
        objective: &mut objective,
        evals: 0,
        budget: effective_max,
        best_x: x0.to_vec(),
        best_f: f64::INFINITY,
    });

    let wrapped = |x: &[f64], _: &mut ()| -> f64 {
        let mut t = track.borrow_mut();
        if t.evals >= t.budget {
            // The backend overran its maxeval; do not evaluate or count.
            return f64::INFINITY;
        }
        t.evals += 1;
        let value = (t.objective)(x);
        if value < t.best_f {
            t.best_f = value;
            t.best_x = x.to_vec();
        }
        value
    };

    // Effectively unconstrained: the bounds are far wider than any angle
    // excursion COBYLA makes from a warm start.
    let bounds: Vec<(f64, f64)> = x0.iter().map(|&v| (v - 1e4, v + 1e4)).collect();
    let cons: Vec<&dyn cobyla::Func<()>> = vec![];
    let stop = cobyla::StopTols {
        xtol_rel: RHO_END / RHO_BEGIN,
        ..cobyla::StopTols::default()
    };
    let _ = cobyla::minimize(
        wrapped,
        x0,
        &bounds,
        &cons,
        (),
        effective_max,
        cobyla::RhoBeg::All(RHO_BEGIN),
        Some(stop),
    );

    let t = track.into_inner();
    let evals_used = t.evals;
    ledger.used += evals_used;
    debug_assert!(ledger.used <= ledger.global_cap);
    ledger.record_structure_evals(evals_used);
    let terminated_by = if evals_used >= effective_max && clamped_by_global {
        TerminatedBy::GlobalBudget
    } else if evals_used >= max_evals {
        TerminatedBy::StructureBudget
    } else {
        TerminatedBy::Converged
    };
    OptResult {
        best_params: t.best_x,
        best_value: t.best_f,
        evals_used,
        terminated_by,
    }
}

/// Optimize a circuit's angles against a diagonal Hamiltonian.
///
/// `active_slots` restricts the search to a subset of parameter slots (used
/// for last-gene optimization); inactive slots stay bit-identical to their
/// input values. Returns the full parameter vector with the optimized slots
/// substituted.
pub fn optimize_circuit(
    circuit: &Circuit,
    energy: &DiagonalEnergy,
    ledger: &mut BudgetLedger,
    max_evals: usize,
    active_slots: Option<&[usize]>,
) -> Result<OptResult> {
    let all_slots: Vec<usize>;
    let slots: &[usize] = match active_slots {
        Some(s) => s,
        None => {
            all_slots = (0..circuit.params.len()).collect();
            &all_slots
        }
    };
    debug_assert!(slots.iter().all(|&s| s < circuit.params.len()));

    let x0: Vec<f64> = slots.iter().map(|&s| circuit.params[s]).collect();
    let mut work = circuit.clone();
    let mut sim_error = None;
    let result = minimize(
        |x: &[f64]| {
            for (&slot, &v) in slots.iter().zip(x) {
                work.params[slot] = v;
            }
            match sim::run_circuit(&work).and_then(|s| sim::expectation(&s, energy)) {
                Ok(e) => e,
                Err(err) => {
                    sim_error.get_or_insert(err);
                    f64::INFINITY
                }
            }
        },
        &x0,
        ledger,
        max_evals,
    );
    if let Some(err) = sim_error {
        return Err(err);
    }

    let mut best_full = circuit.params.clone();
    for (&slot, &v) in slots.iter().zip(&result.best_params) {
        best_full[slot] = v;
    }
    Ok(OptResult {
        best_params: best_full,
        ..result
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Circuit, Gate, GateKind};
    use std::f64::consts::PI;

    #[test]
    fn quadratic_converges_to_known_optimum() {
        let mut ledger = BudgetLedger::new(10_000, 50);
        let result = minimize(
            |x: &[f64]| (x[0] - 1.0).powi(2) + (x[1] + 2.0).powi(2),
            &[0.0, 0.0],
            &mut ledger,
            50,
        );
        assert!((result.best_params[0] - 1.0).abs() < 1e-2, "{result:?}");
        assert!((result.best_params[1] + 2.0).abs() < 1e-2, "{result:?}");
        assert_eq!(result.evals_used, ledger.used);
        assert!(result.evals_used <= 50);
    }

    #[test]
    fn constant_objective_reports_the_constant() {
        let mut ledger = BudgetLedger::standard();
        let result = minimize(|_: &[f64]| 7.0, &[0.3, -0.4, 2.2], &mut ledger, 50);
        assert_eq!(result.best_value, 7.0);
    }

    #[test]
    fn global_cap_terminates_immediately_with_best_so_far() {
        let mut ledger = BudgetLedger::new(3, 50);
        let result = minimize(|x: &[f64]| x[0] * x[0], &[1.0], &mut ledger, 50);
        assert_eq!(ledger.used, 3);
        assert_eq!(result.evals_used, 3);
        assert_eq!(result.terminated_by, TerminatedBy::GlobalBudget);
        assert!(result.best_value.is_finite());
    }

    #[test]
    fn empty_x0_uses_exactly_one_evaluation() {
        let mut ledger = BudgetLedger::standard();
        let mut calls = 0;
        let result = minimize(
            |_: &[f64]| {
                calls += 1;
                42.0
            },
            &[],
            &mut ledger,
            50,
        );
        assert_eq!(calls, 1);
        assert_eq!(ledger.used, 1);
        assert_eq!(result.best_value, 42.0);
        assert!(result.best_params.is_empty());
    }

    #[test]
    fn ledger_counts_exactly_the_objective_calls() {
        for max_evals in [1, 2, 7, 23, 50] {
            let mut ledger = BudgetLedger::standard();
            let calls = RefCell::new(0usize);
            let result = minimize(
                |x: &[f64]| {
                    *calls.borrow_mut() += 1;
                    x.iter().map(|v| v.sin()).sum()
                },
                &[0.1, 0.2, 0.3],
                &mut ledger,
                max_evals,
            );
            assert_eq!(*calls.borrow(), ledger.used, "max_evals={max_evals}");
            assert_eq!(result.evals_used, ledger.used);
            assert!(ledger.used <= max_evals, "overran budget at {max_evals}");
        }
    }

    #[test]
    fn monotone_reporting_tracks_minimum_of_all_points() {
        let mut ledger = BudgetLedger::standard();
        let seen = RefCell::new(Vec::new());
        let result = minimize(
            |x: &[f64]| {
                let v = (x[0] - 0.7).powi(2) + 0.1 * (x[0] * 7.0).sin();
                seen.borrow_mut().push(v);
                v
            },
            &[0.0],
            &mut ledger,
            40,
        );
        let min_seen = seen.borrow().iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(result.best_value, min_seen);
    }

    fn z_energy() -> DiagonalEnergy {
        DiagonalEnergy {
            n_qubits: 1,
            energies: vec![1.0, -1.0],
        }
    }

    #[test]
    fn single_rx_reaches_minus_one_at_pi() {
        let circuit = Circuit::new(1)
            .insert_gate(Gate::rotation(GateKind::RX, 0), 0, 0.3)
            .unwrap();
        let mut ledger = BudgetLedger::standard();
        let result = optimize_circuit(&circuit, &z_energy(), &mut ledger, 50, None).unwrap();
        assert!((result.best_value + 1.0).abs() < 1e-2, "{result:?}");
        let folded = result.best_params[0].rem_euclid(2.0 * PI);
        assert!((folded - PI).abs() < 0.15, "angle {folded}");
    }

    #[test]
    fn zero_parameter_circuit_costs_one_evaluation() {
        let c = Circuit::new(2).insert_gate(Gate::h(0), 0, 0.0).unwrap();
        let c = c.insert_gate(Gate::cnot(0, 1), 1, 0.0).unwrap();
        let energy = DiagonalEnergy {
            n_qubits: 2,
            energies: vec![0.0, 1.0, 1.0, 4.0],
        };
        let mut ledger = BudgetLedger::standard();
        let result = optimize_circuit(&c, &energy, &mut ledger, 50, None).unwrap();
        assert_eq!(ledger.used, 1);
        // Bell state: half weight on 00 (0.0), half on 11 (4.0).
        assert!((result.best_value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn independent_ry_rotations_reach_star_ground_energy() {
        let spec = crate::problems::ProblemSpec::new(crate::problems::ProblemKind::MaxCutStar, 4, 0);
        let ising = crate::problems::qubo_to_ising(&crate::problems::generate(&spec).unwrap());
        let energy = crate::problems::to_diagonal(&ising).unwrap();
        let mut circuit = Circuit::new(4);
        for q in 0..4 {
            let pos = circuit.gates.len();
            circuit = circuit
                .insert_gate(Gate::rotation(GateKind::RY, q), pos, 0.0)
                .unwrap();
        }
        let mut ledger = BudgetLedger::new(10_000, 10_000);
        let result = optimize_circuit(&circuit, &energy, &mut ledger, 500, None).unwrap();
        assert!(
            (result.best_value + 3.0).abs() < 1e-2,
            "best {}",
            result.best_value
        );
    }

    #[test]
    fn inactive_slots_stay_bit_identical() {
        let mut circuit = Circuit::new(2);
        for (q, angle) in [(0usize, 0.123_456_789_f64), (1, -0.987_654_321)] {
            let pos = circuit.gates.len();
            circuit = circuit
                .insert_gate(Gate::rotation(GateKind::RY, q), pos, angle)
                .unwrap();
        }
        let energy = DiagonalEnergy {
            n_qubits: 2,
            energies: vec![1.0, -1.0, 2.0, 0.5],
        };
        let mut ledger = BudgetLedger::standard();
        let result =
            optimize_circuit(&circuit, &energy, &mut ledger, 50, Some(&[1])).unwrap();
        assert_eq!(result.best_params[0].to_bits(), 0.123_456_789_f64.to_bits());
        assert_ne!(result.best_params[1], -0.987_654_321);
    }

    #[test]
    fn counted_expectation_respects_exhausted_ledger() {
        let c = Circuit::new(1).insert_gate(Gate::h(0), 0, 0.0).unwrap();
        let mut ledger = BudgetLedger::new(1, 50);
        assert!(counted_expectation(&c, &z_energy(), &mut ledger)
            .unwrap()
            .is_some());
        assert!(counted_expectation(&c, &z_energy(), &mut ledger)
            .unwrap()
            .is_none());
        assert_eq!(ledger.used, 1);
    }
}
