//! QUBO instance generation, Ising conversion, and exact ground truth.
//!
//! All energies use the offset-included convention: the Ising offset absorbs
//! every constant term, so Ising energies equal QUBO costs bitstring by
//! bitstring and approximation ratios are well-defined with one convention
//! everywhere.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sim::DiagonalEnergy;

/// Enumeration bound for exhaustive ground-truth search.
pub const BRUTE_FORCE_MAX: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProblemKind {
    MaxCutER,
    MaxCutStar,
    VertexCoverER,
    NumberPartitioning,
}

impl ProblemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::MaxCutER => "maxcut_er",
            ProblemKind::MaxCutStar => "maxcut_star",
            ProblemKind::VertexCoverER => "vertex_cover_er",
            ProblemKind::NumberPartitioning => "number_partitioning",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "maxcut_er" => Some(ProblemKind::MaxCutER),
            "maxcut_star" => Some(ProblemKind::MaxCutStar),
            "vertex_cover_er" => Some(ProblemKind::VertexCoverER),
            "number_partitioning" => Some(ProblemKind::NumberPartitioning),
            _ => None,
        }
    }
}

/// Recipe for one problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub n: usize,
    pub seed: u64,
    /// Edge probability for the Erdos-Renyi graph kinds.
    pub edge_prob: f64,
    /// Penalty coefficient for uncovered edges in vertex cover.
    pub penalty: f64,
    /// Inclusive value range for number partitioning.
    pub value_range: (i64, i64),
}

impl ProblemSpec {
    pub fn new(kind: ProblemKind, n: usize, seed: u64) -> Self {
        ProblemSpec {
            kind,
            n,
            seed,
            edge_prob: 0.7,
            penalty: 8.0,
            value_range: (1, 20),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 variables, got {}",
                self.n
            )));
        }
        if !(self.edge_prob > 0.0 && self.edge_prob <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "edge_prob {} outside (0, 1]",
                self.edge_prob
            )));
        }
        if self.penalty <= 0.0 {
            return Err(Error::InvalidConfig("penalty must be positive".into()));
        }
        if self.value_range.0 > self.value_range.1 {
            return Err(Error::InvalidConfig("empty value range".into()));
        }
        Ok(())
    }
}

/// Dense symmetric QUBO: cost(x) = x^T Q x + constant with the diagonal
/// holding linear coefficients (x_i^2 = x_i on binaries).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboInstance {
    pub n: usize,
    /// Row-major n*n symmetric matrix.
    pub q: Vec<f64>,
    pub constant: f64,
}

impl QuboInstance {
    fn zeros(n: usize) -> Self {
        QuboInstance {
            n,
            q: vec![0.0; n * n],
            constant: 0.0,
        }
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.q[i * self.n + k]
    }

    fn add(&mut self, i: usize, k: usize, value: f64) {
        self.q[i * self.n + k] += value;
        if i != k {
            self.q[k * self.n + i] += value;
        }
    }

    /// Cost of the bitstring `b` (bit i of the index is x_i).
    pub fn cost(&self, b: usize) -> f64 {
        let x = |i: usize| ((b >> i) & 1) as f64;
        let mut total = self.constant;
        for i in 0..self.n {
            if x(i) == 0.0 {
                continue;
            }
            total += self.get(i, i);
            for k in (i + 1)..self.n {
                total += 2.0 * self.get(i, k) * x(k);
            }
        }
        total
    }
}

/// Ising Hamiltonian: sum_i h_i Z_i + sum_{i<k} j_ik Z_i Z_k + offset.
/// Qubit i's bit maps to spin z_i = +1 for bit 0 and -1 for bit 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingModel {
    pub n: usize,
    pub h: Vec<f64>,
    /// Unordered-pair couplings keyed by (i, k) with i < k; sorted iteration
    /// order keeps downstream circuit construction deterministic.
    pub j: BTreeMap<(usize, usize), f64>,
    pub offset: f64,
}

impl IsingModel {
    /// Offset-included energy of bitstring `b`.
    pub fn energy(&self, b: usize) -> f64 {
        let z = |i: usize| if (b >> i) & 1 == 0 { 1.0 } else { -1.0 };
        let mut total = self.offset;
        for (i, hi) in self.h.iter().enumerate() {
            total += hi * z(i);
        }
        for (&(i, k), jik) in &self.j {
            total += jik * z(i) * z(k);
        }
        total
    }
}

/// Exact minimum (offset included) and all minimizing bitstrings.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub min_energy: f64,
    /// Minimizing basis-state indices (qubit 0 = least significant bit).
    pub argmin: Vec<usize>,
}

impl GroundTruth {
    /// Bitstrings with qubit 0 leftmost, the cached-file convention.
    pub fn argmin_strings(&self, n: usize) -> Vec<String> {
        self.argmin
            .iter()
            .map(|&b| {
                (0..n)
                    .map(|q| if (b >> q) & 1 == 0 { '0' } else { '1' })
                    .collect()
            })
            .collect()
    }

    pub fn parse_bitstring(s: &str) -> usize {
        s.chars()
            .enumerate()
            .fold(0usize, |acc, (q, c)| acc | ((c == '1') as usize) << q)
    }
}

fn er_edges(n: usize, edge_prob: f64, rng: &mut RngStream) -> Vec<(usize, usize)> {
    // Reject empty graphs: MaxCut and vertex cover degenerate without edges.
    loop {
        let mut edges = Vec::new();
        for i in 0..n {
            for k in (i + 1)..n {
                if rng.uniform() < edge_prob {
                    edges.push((i, k));
                }
            }
        }
        if !edges.is_empty() {
            return edges;
        }
    }
}

fn star_edges(n: usize) -> Vec<(usize, usize)> {
    (1..n).map(|k| (0, k)).collect()
}

fn maxcut_qubo(n: usize, edges: &[(usize, usize)]) -> QuboInstance {
    // Per edge: 2 x_i x_k - x_i - x_k, so the minimum is -(max cut size).
    let mut q = QuboInstance::zeros(n);
    for &(i, k) in edges {
        q.add(i, k, 1.0);
        q.add(i, i, -1.0);
        q.add(k, k, -1.0);
    }
    q
}

fn vertex_cover_qubo(n: usize, edges: &[(usize, usize)], penalty: f64) -> QuboInstance {
    // sum_i x_i + penalty * sum_edges (1 - x_i - x_k + x_i x_k).
    let mut q = QuboInstance::zeros(n);
    for i in 0..n {
        q.add(i, i, 1.0);
    }
    for &(i, k) in edges {
        q.constant += penalty;
        q.add(i, i, -penalty);
        q.add(k, k, -penalty);
        q.add(i, k, penalty / 2.0);
    }
    q
}

fn number_partitioning_qubo(values: &[i64]) -> QuboInstance {
    // sum_i s_i (s_i - c) x_i + sum_{i<k} 2 s_i s_k x_i x_k with c = sum s_i,
    // equal to ((2 sum s_i x_i - c)^2 - c^2) / 4.
    let n = values.len();
    let c: i64 = values.iter().sum();
    let mut q = QuboInstance::zeros(n);
    for i in 0..n {
        q.add(i, i, (values[i] * (values[i] - c)) as f64);
        for k in (i + 1)..n {
            q.add(i, k, (values[i] * values[k]) as f64);
        }
    }
    q
}

/// Generate a QUBO instance. Deterministic function of the spec's seed.
pub fn generate(spec: &ProblemSpec) -> Result<QuboInstance> {
    spec.validate()?;
    let mut rng = RngStream::new(spec.seed, "problem-generation");
    Ok(match spec.kind {
        ProblemKind::MaxCutStar => maxcut_qubo(spec.n, &star_edges(spec.n)),
        ProblemKind::MaxCutER => {
            maxcut_qubo(spec.n, &er_edges(spec.n, spec.edge_prob, &mut rng))
        }
        ProblemKind::VertexCoverER => vertex_cover_qubo(
            spec.n,
            &er_edges(spec.n, spec.edge_prob, &mut rng),
            spec.penalty,
        ),
        ProblemKind::NumberPartitioning => {
            let values: Vec<i64> = (0..spec.n)
                .map(|_| rng.range(spec.value_range.0..=spec.value_range.1))
                .collect();
            number_partitioning_qubo(&values)
        }
    })
}

/// Substitute x_i = (1 - z_i)/2 and expand; the offset absorbs all constant
/// terms so Ising energies equal QUBO costs exactly per bitstring.
pub fn qubo_to_ising(qubo: &QuboInstance) -> IsingModel {
    let n = qubo.n;
    let mut h = vec![0.0; n];
    let mut j = BTreeMap::new();
    let mut offset = qubo.constant;
    for i in 0..n {
        let qii = qubo.get(i, i);
        offset += qii / 2.0;
        h[i] -= qii / 2.0;
        for k in (i + 1)..n {
            let qik = qubo.get(i, k);
            if qik == 0.0 {
                continue;
            }
            // x_i x_k appears with total weight 2 q_ik in x^T Q x.
            offset += qik / 2.0;
            h[i] -= qik / 2.0;
            h[k] -= qik / 2.0;
            *j.entry((i, k)).or_insert(0.0) += qik / 2.0;
        }
    }
    IsingModel { n, h, j, offset }
}

/// Exhaustive scan over all 2^n bitstrings, evaluating the Ising form term
/// by term. Deliberately a separate code path from [`to_diagonal`] so the
/// two can cross-check each other.
pub fn brute_force_solve(model: &IsingModel) -> Result<GroundTruth> {
    if model.n > BRUTE_FORCE_MAX {
        return Err(Error::CapacityExceeded {
            context: "brute force",
            n: model.n,
            bound: BRUTE_FORCE_MAX,
        });
    }
    let mut min_energy = f64::INFINITY;
    let mut argmin = Vec::new();
    for b in 0..(1usize << model.n) {
        let e = model.energy(b);
        if e < min_energy {
            min_energy = e;
            argmin.clear();
            argmin.push(b);
        } else if e == min_energy {
            argmin.push(b);
        }
    }
    Ok(GroundTruth { min_energy, argmin })
}

/// Dense per-basis-state energy table for the simulator, built incrementally
/// term by term over the whole vector.
pub fn to_diagonal(model: &IsingModel) -> Result<DiagonalEnergy> {
    if model.n > crate::sim::MAX_QUBITS {
        return Err(Error::CapacityExceeded {
            context: "diagonal energies",
            n: model.n,
            bound: crate::sim::MAX_QUBITS,
        });
    }
    let dim = 1usize << model.n;
    let mut energies = vec![model.offset; dim];
    for (i, &hi) in model.h.iter().enumerate() {
        if hi == 0.0 {
            continue;
        }
        let mask = 1usize << i;
        for (b, e) in energies.iter_mut().enumerate() {
            *e += if b & mask == 0 { hi } else { -hi };
        }
    }
    for (&(i, k), &jik) in &model.j {
        let mi = 1usize << i;
        let mk = 1usize << k;
        for (b, e) in energies.iter_mut().enumerate() {
            let aligned = ((b & mi == 0) as usize) ^ ((b & mk == 0) as usize) == 0;
            *e += if aligned { jik } else { -jik };
        }
    }
    Ok(DiagonalEnergy {
        n_qubits: model.n,
        energies,
    })
}

/// On-disk instance file: the generating spec plus the realized QUBO.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub spec: ProblemSpec,
    pub q: Vec<f64>,
    pub constant: f64,
}

impl InstanceFile {
    pub fn new(spec: ProblemSpec, qubo: &QuboInstance) -> Self {
        InstanceFile {
            spec,
            q: qubo.q.clone(),
            constant: qubo.constant,
        }
    }

    pub fn qubo(&self) -> QuboInstance {
        QuboInstance {
            n: self.spec.n,
            q: self.q.clone(),
            constant: self.constant,
        }
    }
}

/// On-disk ground-truth cache, bitstrings with qubit 0 leftmost.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruthFile {
    pub min_energy: f64,
    pub argmin: Vec<String>,
}

impl GroundTruthFile {
    pub fn new(gt: &GroundTruth, n: usize) -> Self {
        GroundTruthFile {
            min_energy: gt.min_energy,
            argmin: gt.argmin_strings(n),
        }
    }
}
