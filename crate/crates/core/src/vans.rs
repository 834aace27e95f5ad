//! Variable-ansatz search: insert identity-initialized gate blocks, simplify
//! the circuit algebraically and by cost-guided gate removal, and
//! accept/reject candidates under a decaying threshold.

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::Result;
use crate::opt::{self, BudgetLedger, SearchOutcome};
use crate::problems::{self, IsingModel};
use crate::ra_vqe::{initial_layer, InitialLayer};
use crate::rng::RngStream;

const TAU: f64 = std::f64::consts::TAU;
/// Angles within this distance of a multiple of 2pi count as zero for the
/// simplification rules.
const ZERO_ANGLE_EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct VansConfig {
    pub initial_layer: InitialLayer,
    /// Mean of the exponential distribution governing the block count.
    pub scale: f64,
    /// Softmax temperature for qubit choice; smaller favors idle qubits more.
    pub temperature: f64,
    /// Baseline removal-threshold divisor (superseded by the schedule).
    pub accept_wall: f64,
    /// Initial relative acceptance threshold for candidate circuits.
    pub accept_perc: f64,
    /// Schedule endpoints for the removal-threshold divisor.
    pub min_randomness: f64,
    pub max_randomness: f64,
    /// The divisor decays over the first ceil(n_iterations / decrease_to)
    /// iterations, then holds.
    pub decrease_to: usize,
    /// Multiplier applied to accept_perc after each iteration.
    pub factor_accept_perc: f64,
    pub seed: u64,
    pub n_iterations: usize,
}

/// A gate block whose zero-angle form is exactly the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdentityBlock {
    /// RZ, RX, RZ on one qubit.
    Single(usize),
    /// CNOT, RZ on control, RX on target, CNOT.
    Pair(usize, usize),
}

impl IdentityBlock {
    /// The block's gates in order (rotations get angle 0 at insertion).
    pub fn gates(self) -> Vec<Gate> {
        match self {
            IdentityBlock::Single(q) => vec![
                Gate::rotation(GateKind::RZ, q),
                Gate::rotation(GateKind::RX, q),
                Gate::rotation(GateKind::RZ, q),
            ],
            IdentityBlock::Pair(c, t) => vec![
                Gate::cnot(c, t),
                Gate::rotation(GateKind::RZ, c),
                Gate::rotation(GateKind::RX, t),
                Gate::cnot(c, t),
            ],
        }
    }
}

/// Softmax weights over qubits: proportional to exp(-count / temperature).
pub fn qubit_weights(counts: &[usize], temperature: f64) -> Vec<f64> {
    let weights: Vec<f64> = counts
        .iter()
        .map(|&c| (-(c as f64) / temperature).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Sample the blocks to insert this iteration. The block count is
/// 1 + floor(x) with x exponential of mean `scale` (scale 0 always gives
/// one block); qubits are drawn via [`qubit_weights`] against the number of
/// gates currently touching each qubit, including blocks already sampled in
/// this call.
pub fn sample_insertion(
    circuit: &Circuit,
    cfg: &VansConfig,
    rng: &mut RngStream,
) -> Vec<IdentityBlock> {
    let n = circuit.n_qubits;
    let mut counts = vec![0usize; n];
    for gate in &circuit.gates {
        for &q in &gate.qubits {
            counts[q] += 1;
        }
    }
    let k = 1 + rng.exponential(cfg.scale).floor() as usize;
    let mut blocks = Vec::with_capacity(k);
    for _ in 0..k {
        let first = rng.weighted_index(&qubit_weights(&counts, cfg.temperature));
        let block = if rng.bool(0.5) || n < 2 {
            IdentityBlock::Single(first)
        } else {
            let rest: Vec<usize> = (0..n).filter(|&q| q != first).collect();
            let rest_counts: Vec<usize> = rest.iter().map(|&q| counts[q]).collect();
            let second = rest[rng.weighted_index(&qubit_weights(&rest_counts, cfg.temperature))];
            IdentityBlock::Pair(first, second)
        };
        for gate in block.gates() {
            for &q in &gate.qubits {
                counts[q] += 1;
            }
        }
        blocks.push(block);
    }
    blocks
}

/// Append blocks at the circuit end with all angles zero.
pub fn insert_blocks(circuit: &Circuit, blocks: &[IdentityBlock]) -> Result<Circuit> {
    let mut next = circuit.clone();
    for block in blocks {
        for gate in block.gates() {
            let pos = next.gates.len();
            next = next.insert_gate(gate, pos, 0.0)?;
        }
    }
    Ok(next)
}

// Flat gate form used by the rewriter: angles resolved, no slots.
#[derive(Debug, Clone, PartialEq)]
struct Op {
    kind: GateKind,
    qubits: Vec<usize>,
    angle: f64,
}

fn materialize(circuit: &Circuit) -> Vec<Op> {
    circuit
        .gates
        .iter()
        .map(|g| Op {
            kind: g.kind,
            qubits: g.qubits.clone(),
            angle: g.param_slot.map(|s| circuit.params[s]).unwrap_or(0.0),
        })
        .collect()
}

fn rebuild(n_qubits: usize, ops: &[Op]) -> Circuit {
    let mut circuit = Circuit::new(n_qubits);
    for op in ops {
        let gate = Gate {
            kind: op.kind,
            qubits: op.qubits.clone(),
            param_slot: None,
        };
        let pos = circuit.gates.len();
        circuit = circuit
            .insert_gate(gate, pos, op.angle)
            .expect("rewriter preserves validity");
    }
    circuit
}

fn is_zero_angle(angle: f64) -> bool {
    let folded = angle.rem_euclid(TAU);
    folded < ZERO_ANGLE_EPS || TAU - folded < ZERO_ANGLE_EPS
}

/// Rotations that commute through a CNOT: RZ on the control side, RX on the
/// target side.
fn commutes_through(op: &Op, control: usize, target: usize) -> bool {
    match op.kind {
        GateKind::RZ => op.qubits[0] == control,
        GateKind::RX => op.qubits[0] == target,
        _ => false,
    }
}

/// Delete rotations whose angle is a multiple of 2pi.
fn pass_zero_rotations(ops: &mut Vec<Op>) -> bool {
    let before = ops.len();
    ops.retain(|op| !(op.kind.is_rotation() && is_zero_angle(op.angle)));
    ops.len() != before
}

/// Delete leading RZ gates (global phase on |0>) and CNOTs whose control
/// qubit has seen no prior gate (control stuck in |0>).
fn pass_leading_gates(ops: &mut Vec<Op>) -> bool {
    let mut touched: Vec<usize> = Vec::new();
    let mut removed = false;
    let mut i = 0;
    while i < ops.len() {
        let op = &ops[i];
        let droppable = match op.kind {
            GateKind::RZ => !touched.contains(&op.qubits[0]),
            GateKind::CNOT => !touched.contains(&op.qubits[0]),
            _ => false,
        };
        if droppable {
            ops.remove(i);
            removed = true;
            // Earlier removals can only expose more leading gates; restart
            // the scan with a clean touch set.
            touched.clear();
            i = 0;
        } else {
            for &q in &ops[i].qubits {
                if !touched.contains(&q) {
                    touched.push(q);
                }
            }
            i += 1;
        }
    }
    removed
}

/// Cancel CNOT pairs with identical control/target separated only by
/// rotations that commute through the CNOT.
fn pass_cancel_cnots(ops: &mut Vec<Op>) -> bool {
    for i in 0..ops.len() {
        if ops[i].kind != GateKind::CNOT {
            continue;
        }
        let (c, t) = (ops[i].qubits[0], ops[i].qubits[1]);
        for j in (i + 1)..ops.len() {
            if !ops[j].touches_any(c, t) {
                continue;
            }
            if ops[j].kind == GateKind::CNOT && ops[j].qubits == ops[i].qubits {
                ops.remove(j);
                ops.remove(i);
                return true;
            }
            if commutes_through(&ops[j], c, t) {
                continue;
            }
            break;
        }
    }
    false
}

/// Merge same-axis rotation pairs on one qubit separated only by CNOTs the
/// rotation commutes through; a merged angle of zero deletes both.
fn pass_merge_rotations(ops: &mut Vec<Op>) -> bool {
    for i in 0..ops.len() {
        if !ops[i].kind.is_rotation() {
            continue;
        }
        let q = ops[i].qubits[0];
        for j in (i + 1)..ops.len() {
            if !ops[j].qubits.contains(&q) {
                continue;
            }
            if ops[j].kind == ops[i].kind && ops[j].qubits[0] == q {
                let merged = ops[i].angle + ops[j].angle;
                ops.remove(j);
                if is_zero_angle(merged) {
                    ops.remove(i);
                } else {
                    ops[i].angle = merged;
                }
                return true;
            }
            let through = ops[j].kind == GateKind::CNOT
                && ((ops[i].kind == GateKind::RZ && ops[j].qubits[0] == q)
                    || (ops[i].kind == GateKind::RX && ops[j].qubits[1] == q));
            if through {
                continue;
            }
            break;
        }
    }
    false
}

impl Op {
    fn touches_any(&self, a: usize, b: usize) -> bool {
        self.qubits.contains(&a) || self.qubits.contains(&b)
    }
}

/// Apply the algebraic rule set to fixpoint. The output prepares the same
/// final state from |0...0> up to global phase; every rewrite strictly
/// reduces the gate count, so this terminates.
pub fn simplify_algebraic(circuit: &Circuit) -> Circuit {
    let mut ops = materialize(circuit);
    loop {
        let mut changed = false;
        changed |= pass_zero_rotations(&mut ops);
        changed |= pass_leading_gates(&mut ops);
        changed |= pass_cancel_cnots(&mut ops);
        changed |= pass_merge_rotations(&mut ops);
        if !changed {
            break;
        }
    }
    rebuild(circuit.n_qubits, &ops)
}

/// Cost-guided gate removal: repeatedly evaluate the circuit with each gate
/// removed (one counted evaluation each), and among removals satisfying
/// `E_without <= E_full + |E_full| / accept_wall_now` take the one with the
/// lowest expectation; stop when no removal is acceptable or the budget runs
/// out mid-scan.
pub fn simplify_cost(
    circuit: &Circuit,
    energy: &crate::sim::DiagonalEnergy,
    accept_wall_now: f64,
    ledger: &mut BudgetLedger,
    e_full: f64,
) -> Result<(Circuit, f64)> {
    let mut current = circuit.clone();
    let mut e_current = e_full;
    loop {
        let threshold = e_current + e_current.abs() / accept_wall_now;
        let mut best: Option<(Circuit, f64)> = None;
        for pos in 0..current.gates.len() {
            let candidate = current.remove_gate(pos)?;
            let e_without = match opt::counted_expectation(&candidate, energy, ledger)? {
                Some(e) => e,
                None => return Ok((current, e_current)),
            };
            let acceptable = e_without <= threshold;
            if acceptable && best.as_ref().map_or(true, |(_, e)| e_without < *e) {
                best = Some((candidate, e_without));
            }
        }
        match best {
            Some((next, e)) => {
                current = next;
                e_current = e;
            }
            None => return Ok((current, e_current)),
        }
    }
}

/// Removal-threshold divisor schedule: linear from `max_randomness` down to
/// `min_randomness` over the first ceil(n_iterations / decrease_to)
/// iterations, holding at `min_randomness` afterwards.
fn accept_wall_schedule(cfg: &VansConfig, iteration: usize) -> f64 {
    let span = cfg.n_iterations.div_ceil(cfg.decrease_to.max(1));
    if span <= 1 || iteration + 1 >= span {
        return cfg.min_randomness;
    }
    let frac = iteration as f64 / (span - 1) as f64;
    cfg.max_randomness - (cfg.max_randomness - cfg.min_randomness) * frac
}

/// Run the variable-ansatz search.
///
/// Each iteration inserts identity blocks into the incumbent, optimizes all
/// parameters, simplifies algebraically, prunes by cost, re-optimizes if
/// gates were removed, and then accepts the candidate only if its loss is
/// within a decaying relative threshold of the best loss ever found.
/// Rejected (or emptied) candidates are discarded and the search resumes
/// from the best circuit.
pub fn run(
    model: &IsingModel,
    cfg: &VansConfig,
    ledger: &mut BudgetLedger,
) -> Result<SearchOutcome> {
    let energy = problems::to_diagonal(model)?;
    let mut rng = RngStream::new(cfg.seed, "vans");

    let mut current = initial_layer(cfg.initial_layer, model.n)?;
    let first = opt::optimize_circuit(&current, &energy, ledger, ledger.per_structure_cap, None)?;
    if first.evals_used == 0 {
        return Ok(SearchOutcome {
            best_circuit: current,
            best_expectation: f64::INFINITY,
            best_loss: f64::INFINITY,
            evals_used: ledger.used,
        });
    }
    current.params = first.best_params;
    let mut best_circuit = current.clone();
    let mut best_expectation = first.best_value;

    let mut accept_perc_now = cfg.accept_perc;
    for iteration in 0..cfg.n_iterations {
        if ledger.exhausted() {
            break;
        }
        let wall_now = accept_wall_schedule(cfg, iteration);

        // Grow: append identity blocks (exact identities at insertion).
        let blocks = sample_insertion(&current, cfg, &mut rng);
        let mut candidate = insert_blocks(&current, &blocks)?;
        let gates_before = candidate.gates.len();

        let opt_res =
            opt::optimize_circuit(&candidate, &energy, ledger, ledger.per_structure_cap, None)?;
        if opt_res.evals_used == 0 {
            break;
        }
        candidate.params = opt_res.best_params;
        let mut e_candidate = opt_res.best_value;

        // Shrink: algebraic rules preserve the prepared state, so the cached
        // expectation stays valid; the cost scan re-evaluates as it prunes.
        candidate = simplify_algebraic(&candidate);
        let (pruned, e_pruned) =
            simplify_cost(&candidate, &energy, wall_now, ledger, e_candidate)?;
        candidate = simplify_algebraic(&pruned);
        e_candidate = e_pruned;

        if candidate.gates.len() < gates_before && !ledger.exhausted() {
            let re_res = opt::optimize_circuit(
                &candidate,
                &energy,
                ledger,
                ledger.per_structure_cap,
                None,
            )?;
            if re_res.evals_used > 0 {
                candidate.params = re_res.best_params;
                e_candidate = re_res.best_value;
            }
        }

        let accepted = !candidate.gates.is_empty()
            && e_candidate - best_expectation < accept_perc_now * best_expectation.abs();
        if !candidate.gates.is_empty() && e_candidate < best_expectation {
            best_expectation = e_candidate;
            best_circuit = candidate.clone();
        }
        current = if accepted { candidate } else { best_circuit.clone() };
        accept_perc_now *= cfg.factor_accept_perc;
    }

    Ok(SearchOutcome {
        best_circuit,
        best_expectation,
        best_loss: best_expectation,
        evals_used: ledger.used,
    })
}
