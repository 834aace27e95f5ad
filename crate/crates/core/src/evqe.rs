//! Evolutionary circuit search.
//!
//! A population of genomes — ordered lists of gate-layer genes — evolves by
//! insertion/removal mutations under a gate-count-penalized loss. Selection
//! favors small species (to preserve structural diversity) and high rank
//! within a species; there is no crossover, so after each mutation only the
//! newest gene's angles need re-optimization.

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::opt::{self, BudgetLedger, SearchOutcome};
use crate::problems::{self, IsingModel};
use crate::rng::RngStream;

/// Per-qubit content of one gene. Controls and targets pair up bijectively
/// within the gene.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneAction {
    None,
    RX,
    RY,
    RZ,
    ControlOf(usize),
    TargetOf(usize),
}

impl GeneAction {
    fn rotation_kind(self) -> Option<GateKind> {
        match self {
            GeneAction::RX => Some(GateKind::RX),
            GeneAction::RY => Some(GateKind::RY),
            GeneAction::RZ => Some(GateKind::RZ),
            _ => None,
        }
    }
}

/// One layer of gates, one action per qubit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gene {
    pub actions: Vec<GeneAction>,
}

impl Gene {
    pub fn rotation_count(&self) -> usize {
        self.actions
            .iter()
            .filter(|a| a.rotation_kind().is_some())
            .count()
    }

    pub fn cnot_count(&self) -> usize {
        self.actions
            .iter()
            .filter(|a| matches!(a, GeneAction::ControlOf(_)))
            .count()
    }
}

/// An ordered gene list plus one angle per rotation action (in gene order,
/// within a gene in qubit order) and the cached evaluation of the current
/// (genes, params) pair.
#[derive(Debug, Clone)]
pub struct Genome {
    pub genes: Vec<Gene>,
    pub params: Vec<f64>,
    pub cached_expectation: Option<f64>,
    pub cached_loss: Option<f64>,
}

impl Genome {
    pub fn empty() -> Self {
        Genome {
            genes: Vec::new(),
            params: Vec::new(),
            cached_expectation: None,
            cached_loss: None,
        }
    }

    pub fn cnot_count(&self) -> usize {
        self.genes.iter().map(Gene::cnot_count).sum()
    }

    /// Parameter-slot range owned by gene `idx`.
    pub fn slot_range(&self, idx: usize) -> std::ops::Range<usize> {
        let start: usize = self.genes[..idx].iter().map(Gene::rotation_count).sum();
        start..start + self.genes[idx].rotation_count()
    }

    fn survival_loss(&self) -> f64 {
        self.cached_loss.unwrap_or(f64::INFINITY)
    }
}

/// Penalized loss: expectation + a * gene count + b * CNOT count.
pub fn loss(genome: &Genome, a: f64, b: f64) -> f64 {
    let expectation = genome
        .cached_expectation
        .expect("loss needs a valid cached expectation");
    expectation + a * genome.genes.len() as f64 + b * genome.cnot_count() as f64
}

#[derive(Debug, Clone)]
pub struct EvqeConfig {
    pub population_size: usize,
    pub dist_threshold: usize,
    pub prob_insertion: f64,
    pub prob_removal: f64,
    /// Gene-count penalty weight.
    pub a: f64,
    /// CNOT-count penalty weight.
    pub b: f64,
    pub seed: u64,
}

/// Realize a genome as a circuit: genes in order; within a gene, rotations
/// in qubit order then CNOT pairs in control order. The circuit's parameter
/// vector is the genome's, slot for slot.
pub fn genome_to_circuit(genome: &Genome, n_qubits: usize) -> Result<Circuit> {
    let mut circuit = Circuit::new(n_qubits);
    let mut next_slot = 0usize;
    for gene in &genome.genes {
        if gene.actions.len() != n_qubits {
            return Err(Error::MalformedGene(format!(
                "gene covers {} qubits, genome has {}",
                gene.actions.len(),
                n_qubits
            )));
        }
        for (q, action) in gene.actions.iter().enumerate() {
            if let Some(kind) = action.rotation_kind() {
                let angle = *genome.params.get(next_slot).ok_or_else(|| {
                    Error::MalformedGene("fewer params than rotation actions".into())
                })?;
                next_slot += 1;
                let pos = circuit.gates.len();
                circuit = circuit.insert_gate(Gate::rotation(kind, q), pos, angle)?;
            }
        }
        for (q, action) in gene.actions.iter().enumerate() {
            if let GeneAction::ControlOf(target) = *action {
                if gene.actions.get(target) != Some(&GeneAction::TargetOf(q)) {
                    return Err(Error::MalformedGene(format!(
                        "control {q} has no matching target at {target}"
                    )));
                }
                let pos = circuit.gates.len();
                circuit = circuit.insert_gate(Gate::cnot(q, target), pos, 0.0)?;
            } else if let GeneAction::TargetOf(control) = *action {
                if gene.actions.get(control) != Some(&GeneAction::ControlOf(q)) {
                    return Err(Error::MalformedGene(format!(
                        "target {q} has no matching control at {control}"
                    )));
                }
            }
        }
    }
    if next_slot != genome.params.len() {
        return Err(Error::MalformedGene("unused parameter slots".into()));
    }
    Ok(circuit)
}

/// Sample one gene: each qubit independently stays empty with probability
/// 1/2, otherwise draws uniformly among the three rotations and a CNOT whose
/// partner is chosen uniformly among the remaining unassigned qubits (a CNOT
/// intent with no free partner resolves to empty).
pub fn random_gene(rng: &mut RngStream, n_qubits: usize) -> Gene {
    let mut actions = vec![GeneAction::None; n_qubits];
    let mut claimed = vec![false; n_qubits];
    for q in 0..n_qubits {
        if claimed[q] {
            continue;
        }
        claimed[q] = true;
        if rng.bool(0.5) {
            continue;
        }
        match rng.range(0..4usize) {
            0 => actions[q] = GeneAction::RX,
            1 => actions[q] = GeneAction::RY,
            2 => actions[q] = GeneAction::RZ,
            _ => {
                let free: Vec<usize> = (q + 1..n_qubits).filter(|&r| !claimed[r]).collect();
                if !free.is_empty() {
                    let partner = *rng.choose(&free);
                    actions[q] = GeneAction::ControlOf(partner);
                    actions[partner] = GeneAction::TargetOf(q);
                    claimed[partner] = true;
                }
                // Otherwise the CNOT intent has no partner and resolves to
                // an empty action.
            }
        }
    }
    Gene { actions }
}

/// Mutate a genome: append one random gene with probability
/// `prob_insertion`, then delete one uniformly chosen gene with probability
/// `prob_removal`. Both can happen in one call; new rotation angles start at
/// zero.
pub fn mutate(genome: &Genome, n_qubits: usize, cfg: &EvqeConfig, rng: &mut RngStream) -> Genome {
    let mut offspring = Genome {
        genes: genome.genes.clone(),
        params: genome.params.clone(),
        cached_expectation: None,
        cached_loss: None,
    };
    if rng.bool(cfg.prob_insertion) {
        let gene = random_gene(rng, n_qubits);
        offspring
            .params
            .extend(std::iter::repeat(0.0).take(gene.rotation_count()));
        offspring.genes.push(gene);
    }
    if rng.bool(cfg.prob_removal) && !offspring.genes.is_empty() {
        let victim = rng.range(0..offspring.genes.len());
        let range = offspring.slot_range(victim);
        offspring.params.drain(range);
        offspring.genes.remove(victim);
    }
    offspring
}

/// Structural distance: gene-count difference plus the number of aligned
/// positions whose genes differ (angles ignored).
pub fn distance(a: &Genome, b: &Genome) -> usize {
    let common = a.genes.len().min(b.genes.len());
    let len_diff = a.genes.len().abs_diff(b.genes.len());
    let mismatches = (0..common)
        .filter(|&i| a.genes[i] != b.genes[i])
        .count();
    len_diff + mismatches
}

/// Greedy representative-based clustering: scan genomes in order, joining
/// the first species whose representative is within `dist_threshold`,
/// founding a new species otherwise. Returns member indices per species.
pub fn speciate(population: &[Genome], dist_threshold: usize) -> Vec<Vec<usize>> {
    let mut species: Vec<Vec<usize>> = Vec::new();
    for (i, genome) in population.iter().enumerate() {
        let home = species
            .iter()
            .position(|members| distance(genome, &population[members[0]]) <= dist_threshold);
        match home {
            Some(s) => species[s].push(i),
            None => species.push(vec![i]),
        }
    }
    species
}

/// Selection weights: probability proportional to (1 / species size) times a
/// linear rank weight within the species (best loss gets weight equal to the
/// species size, worst gets 1).
fn selection_weights(population: &[Genome], species: &[Vec<usize>]) -> Vec<f64> {
    let mut weights = vec![0.0; population.len()];
    for members in species {
        let size = members.len();
        let mut ranked: Vec<usize> = members.clone();
        ranked.sort_by(|&x, &y| {
            population[x]
                .survival_loss()
                .total_cmp(&population[y].survival_loss())
        });
        for (rank, &idx) in ranked.iter().enumerate() {
            weights[idx] = (size - rank) as f64 / size as f64;
        }
    }
    weights
}

/// Slots to optimize after a mutation: the final gene's. An insertion
/// appends at the end, so this is the inserted gene when one survived and
/// the previous last gene otherwise.
fn mutated_gene_slots(genome: &Genome) -> Vec<usize> {
    if genome.genes.is_empty() {
        return Vec::new();
    }
    genome.slot_range(genome.genes.len() - 1).collect()
}

struct Evaluated {
    genome: Genome,
    circuit: Circuit,
}

/// Optimize the given slots of a genome's circuit, filling its caches.
/// Returns false if the ledger was already exhausted (genome left
/// unevaluated).
fn evaluate_genome(
    genome: &mut Genome,
    n_qubits: usize,
    energy: &crate::sim::DiagonalEnergy,
    cfg: &EvqeConfig,
    ledger: &mut BudgetLedger,
    active_slots: Option<&[usize]>,
) -> Result<Option<Circuit>> {
    if ledger.exhausted() {
        return Ok(None);
    }
    let circuit = genome_to_circuit(genome, n_qubits)?;
    let result = opt::optimize_circuit(
        &circuit,
        energy,
        ledger,
        ledger.per_structure_cap,
        active_slots,
    )?;
    if result.evals_used == 0 {
        return Ok(None);
    }
    genome.params = result.best_params.clone();
    genome.cached_expectation = Some(result.best_value);
    genome.cached_loss = Some(loss(genome, cfg.a, cfg.b));
    let mut realized = circuit;
    realized.params = result.best_params;
    Ok(Some(realized))
}

/// Run the evolutionary search until the ledger is exhausted.
pub fn evolve(
    model: &IsingModel,
    cfg: &EvqeConfig,
    ledger: &mut BudgetLedger,
) -> Result<SearchOutcome> {
    if cfg.population_size == 0 {
        return Err(Error::InvalidConfig("population_size must be >= 1".into()));
    }
    let energy = problems::to_diagonal(model)?;
    let mut rng = RngStream::new(cfg.seed, "evqe");

    let mut best: Option<Evaluated> = None;
    let track_best = |genome: &Genome, circuit: &Circuit, best: &mut Option<Evaluated>| {
        let is_better = best
            .as_ref()
            .map_or(true, |b| genome.survival_loss() < b.genome.survival_loss());
        if genome.cached_loss.is_some() && is_better {
            *best = Some(Evaluated {
                genome: genome.clone(),
                circuit: circuit.clone(),
            });
        }
    };

    // Initial population: one random gene each, all parameters optimized.
    let mut population: Vec<Genome> = Vec::with_capacity(cfg.population_size);
    for _ in 0..cfg.population_size {
        let gene = random_gene(&mut rng, model.n);
        let mut genome = Genome {
            params: vec![0.0; gene.rotation_count()],
            genes: vec![gene],
            cached_expectation: None,
            cached_loss: None,
        };
        if let Some(circuit) =
            evaluate_genome(&mut genome, model.n, &energy, cfg, ledger, None)?
        {
            track_best(&genome, &circuit, &mut best);
        }
        population.push(genome);
    }

    while !ledger.exhausted() {
        let species = speciate(&population, cfg.dist_threshold);
        let weights = selection_weights(&population, &species);

        let mut offspring_batch: Vec<Genome> = Vec::with_capacity(cfg.population_size);
        for _ in 0..cfg.population_size {
            if ledger.exhausted() {
                break;
            }
            let parent = &population[rng.weighted_index(&weights)];
            let mut offspring = mutate(parent, model.n, cfg, &mut rng);
            let slots = mutated_gene_slots(&offspring);
            if let Some(circuit) = evaluate_genome(
                &mut offspring,
                model.n,
                &energy,
                cfg,
                ledger,
                Some(&slots),
            )? {
                track_best(&offspring, &circuit, &mut best);
                offspring_batch.push(offspring);
            }
        }

        // Next generation: the best population_size of parents and offspring.
        population.extend(offspring_batch);
        population.sort_by(|x, y| x.survival_loss().total_cmp(&y.survival_loss()));
        population.truncate(cfg.population_size);
    }

    let best = best.ok_or_else(|| {
        Error::InvalidConfig("budget too small to evaluate any genome".into())
    })?;
    Ok(SearchOutcome {
        best_circuit: best.circuit,
        best_expectation: best
            .genome
            .cached_expectation
            .expect("tracked genomes are evaluated"),
        best_loss: best.genome.survival_loss(),
        evals_used: ledger.used,
    })
}
