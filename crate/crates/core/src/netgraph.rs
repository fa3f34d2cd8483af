//! Weighted directed networks, random generators and structural queries.
//!
//! Adjacency convention: `adj[(j, i)]` is the weight of the edge `i -> j`, so
//! row `j` collects the edges entering `j` and column `i` the edges leaving
//! `i`. A self-loop counts as both an incoming and an outgoing edge.

use std::sync::OnceLock;

use nalgebra::{DMatrix, Schur};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, ChaCha8Rng};

/// Dense weighted directed graph.
#[derive(Debug, Clone)]
pub struct Network {
    adj: DMatrix<f64>,
    radius: OnceLock<f64>,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.adj == other.adj
    }
}

impl Network {
    /// Wraps a square matrix with finite entries. No rescaling is applied.
    pub fn from_matrix(adj: DMatrix<f64>) -> Result<Self> {
        if adj.nrows() != adj.ncols() {
            return Err(Error::invalid(format!(
                "adjacency matrix must be square, got {}x{}",
                adj.nrows(),
                adj.ncols()
            )));
        }
        if adj.nrows() == 0 {
            return Err(Error::invalid("network must have at least one node"));
        }
        for j in 0..adj.nrows() {
            for i in 0..adj.ncols() {
                let w = adj[(j, i)];
                if !w.is_finite() {
                    return Err(Error::invalid(format!(
                        "non-finite entry {w} at row {}, column {}",
                        j + 1,
                        i + 1
                    )));
                }
            }
        }
        Ok(Self {
            adj,
            radius: OnceLock::new(),
        })
    }

    /// Builds a network from row-major data, `rows[j][i]` being the weight of `i -> j`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some((j, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::invalid(format!(
                "row {} has {} entries, expected {n}",
                j + 1,
                r.len()
            )));
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |j, i| rows[j][i]))
    }

    /// Network with no edges.
    pub fn empty(n: usize) -> Result<Self> {
        Self::from_matrix(DMatrix::zeros(n, n))
    }

    pub fn n(&self) -> usize {
        self.adj.nrows()
    }

    pub fn adj(&self) -> &DMatrix<f64> {
        &self.adj
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.adj
    }

    /// Weight of the edge `from -> to` (zero when absent).
    pub fn weight(&self, from: usize, to: usize) -> f64 {
        self.adj[(to, from)]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.weight(from, to) != 0.0
    }

    /// Largest eigenvalue modulus, computed once and cached.
    ///
    /// The adjacency matrix is block triangular in the strongly connected
    /// components of the graph, so the spectrum is the union of the spectra of
    /// the diagonal blocks. Acyclic graphs therefore get an exact zero, and only
    /// the nontrivial components go through the Schur eigensolver.
    pub fn spectral_radius(&self) -> f64 {
        *self.radius.get_or_init(|| spectral_radius_by_blocks(&self.adj))
    }

    /// `spectral_radius() < 1`.
    pub fn is_stable(&self) -> bool {
        self.spectral_radius() < 1.0
    }

    /// True when `A Aᵀ = Aᵀ A` within `tol` (Frobenius, relative to `‖A‖²`).
    pub fn is_normal(&self, tol: f64) -> bool {
        let a = &self.adj;
        let comm = a * a.transpose() - a.transpose() * a;
        comm.norm() <= tol * a.norm_squared().max(f64::MIN_POSITIVE)
    }

    /// Strongly connected components in topological order of the condensation
    /// (every edge between components goes from an earlier to a later one).
    /// Members of each component are sorted ascending.
    pub fn strongly_connected_components(&self) -> Vec<Vec<usize>> {
        scc(&self.adj)
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.strongly_connected_components().len() == 1
    }

    /// Nodes without incoming edges and nodes without outgoing edges.
    pub fn roots_and_leaves(&self) -> (Vec<usize>, Vec<usize>) {
        let n = self.n();
        let roots = (0..n)
            .filter(|&i| self.adj.row(i).iter().all(|&w| w == 0.0))
            .collect();
        let leaves = (0..n)
            .filter(|&i| self.adj.column(i).iter().all(|&w| w == 0.0))
            .collect();
        (roots, leaves)
    }

    pub fn is_root(&self, i: usize) -> bool {
        self.adj.row(i).iter().all(|&w| w == 0.0)
    }

    pub fn is_leaf(&self, i: usize) -> bool {
        self.adj.column(i).iter().all(|&w| w == 0.0)
    }

    /// Copy scaled so that the spectral radius equals `rho`.
    pub fn rescale_to_radius(&self, rho: f64) -> Result<Network> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::invalid(format!("target radius must be positive, got {rho}")));
        }
        let current = self.spectral_radius();
        if current == 0.0 {
            return Err(Error::ZeroRadius);
        }
        let scaled = &self.adj * (rho / current);
        let out = Network::from_matrix(scaled)?;
        // The spectrum scales exactly; caching `rho` avoids a second eigensolve.
        let _ = out.radius.set(rho);
        Ok(out)
    }

    /// Copy in which every node lies on a single strongly connected component
    /// and carries a self-loop. New edges get standard normal weights drawn
    /// from `seed`; existing edges are left untouched.
    pub fn ensure_strongly_connected(&self, seed: u64) -> Network {
        let mut rng = rng::seeded(seed);
        let mut adj = self.adj.clone();
        repair(&mut adj, &mut rng, |r| r.sample(StandardNormal));
        Network {
            adj,
            radius: OnceLock::new(),
        }
    }

    /// Number of distinct in-neighbours of every node, self-loops excluded.
    pub fn in_degrees(&self) -> Vec<usize> {
        (0..self.n())
            .map(|j| (0..self.n()).filter(|&i| i != j && self.adj[(j, i)] != 0.0).count())
            .collect()
    }

    /// Number of distinct out-neighbours of every node, self-loops excluded.
    pub fn out_degrees(&self) -> Vec<usize> {
        (0..self.n())
            .map(|i| (0..self.n()).filter(|&j| i != j && self.adj[(j, i)] != 0.0).count())
            .collect()
    }
}

fn spectral_radius_by_blocks(adj: &DMatrix<f64>) -> f64 {
    let mut radius: f64 = 0.0;
    for comp in scc(adj) {
        if comp.len() == 1 {
            let i = comp[0];
            radius = radius.max(adj[(i, i)].abs());
            continue;
        }
        let k = comp.len();
        let block = DMatrix::from_fn(k, k, |r, c| adj[(comp[r], comp[c])]);
        radius = radius.max(dense_spectral_radius(block));
    }
    radius
}

fn dense_spectral_radius(block: DMatrix<f64>) -> f64 {
    let scale = block.amax();
    if scale == 0.0 {
        return 0.0;
    }
    let normalized = &block / scale;
    match Schur::try_new(normalized, f64::EPSILON, 10_000) {
        Some(schur) => {
            let eig = schur.complex_eigenvalues();
            scale * eig.iter().map(|z| z.norm()).fold(0.0, f64::max)
        }
        // Gelfand's formula on repeated squares; only reached if QR stalls.
        None => gelfand_radius(&block),
    }
}

fn gelfand_radius(a: &DMatrix<f64>) -> f64 {
    let mut p = a.clone();
    let mut log_scale = 0.0;
    let mut exponent = 1.0;
    for _ in 0..40 {
        let norm = p.norm();
        if norm == 0.0 {
            return 0.0;
        }
        p /= norm;
        log_scale += norm.ln() / exponent;
        p = &p * &p;
        exponent *= 2.0;
    }
    (log_scale + p.norm().ln() / exponent).exp()
}

/// Iterative Tarjan. Components come out in reverse topological order and are
/// reversed before returning.
fn scc(adj: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = adj.nrows();
    let succ: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| adj[(j, i)] != 0.0).collect())
        .collect();

    const UNVISITED: usize = usize::MAX;
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut counter = 0;

    for start in 0..n {
        if index[start] != UNVISITED {
            continue;
        }
        // (node, next successor position)
        let mut call = vec![(start, 0usize)];
        index[start] = counter;
        low[start] = counter;
        counter += 1;
        stack.push(start);
        on_stack[start] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if *pos < succ[v].len() {
                let w = succ[v][*pos];
                *pos += 1;
                if index[w] == UNVISITED {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
    }
    comps.reverse();
    comps
}

/// Links the condensation into one cycle and adds missing self-loops.
/// Returns the number of added (cross edges, self-loops).
fn repair<F>(adj: &mut DMatrix<f64>, rng: &mut ChaCha8Rng, mut draw: F) -> (usize, usize)
where
    F: FnMut(&mut ChaCha8Rng) -> f64,
{
    let n = adj.nrows();
    let comps = scc(adj);
    let mut cross = 0;
    if comps.len() > 1 {
        for c in 0..comps.len() {
            let from = &comps[c];
            let to = &comps[(c + 1) % comps.len()];
            let u = from[rng.random_range(0..from.len())];
            let v = to[rng.random_range(0..to.len())];
            if adj[(v, u)] == 0.0 {
                adj[(v, u)] = draw(rng);
                cross += 1;
            }
        }
    }
    let mut loops = 0;
    for i in 0..n {
        if adj[(i, i)] == 0.0 {
            adj[(i, i)] = draw(rng);
            loops += 1;
        }
    }
    (cross, loops)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    ErdosRenyi,
    DirectedScaleFree,
}

/// Parameters of the random network generators.
///
/// The scale-free defaults (α, β, γ, δ_in, δ_out) = (0.2, 0.6, 0.2, 1.78, 1.26)
/// give asymptotic degree exponents `1 + (1 + δ_in(α+γ))/(α+β) = 3.14` for
/// in-degrees and `1 + (1 + δ_out(α+γ))/(β+γ) = 2.88` for out-degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorParams {
    pub kind: GeneratorKind,
    pub n: usize,
    #[serde(default)]
    pub edge_prob: f64,
    #[serde(default = "defaults::alpha")]
    pub sf_alpha: f64,
    #[serde(default = "defaults::beta")]
    pub sf_beta: f64,
    #[serde(default = "defaults::gamma")]
    pub sf_gamma: f64,
    #[serde(default = "defaults::delta_in")]
    pub sf_delta_in: f64,
    #[serde(default = "defaults::delta_out")]
    pub sf_delta_out: f64,
    #[serde(default = "defaults::rho")]
    pub target_rho: f64,
    #[serde(default)]
    pub seed: u64,
}

mod defaults {
    pub fn alpha() -> f64 {
        0.2
    }
    pub fn beta() -> f64 {
        0.6
    }
    pub fn gamma() -> f64 {
        0.2
    }
    pub fn delta_in() -> f64 {
        1.78
    }
    pub fn delta_out() -> f64 {
        1.26
    }
    pub fn rho() -> f64 {
        0.9
    }
}

impl GeneratorParams {
    pub fn erdos_renyi(n: usize, edge_prob: f64, seed: u64) -> Self {
        Self {
            kind: GeneratorKind::ErdosRenyi,
            n,
            edge_prob,
            ..Self::scale_free(n, seed)
        }
    }

    pub fn scale_free(n: usize, seed: u64) -> Self {
        Self {
            kind: GeneratorKind::DirectedScaleFree,
            n,
            edge_prob: 0.0,
            sf_alpha: defaults::alpha(),
            sf_beta: defaults::beta(),
            sf_gamma: defaults::gamma(),
            sf_delta_in: defaults::delta_in(),
            sf_delta_out: defaults::delta_out(),
            target_rho: defaults::rho(),
            seed,
        }
    }

    /// Edge probability `0.01 * 500 / n`, which keeps the expected degree of a
    /// 500-node network with edge probability 0.01.
    pub fn er_constant_degree_prob(n: usize) -> f64 {
        (0.01 * 500.0 / n as f64).min(1.0)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    /// Predicted asymptotic (in, out) degree exponents of the scale-free model.
    pub fn sf_exponents(&self) -> (f64, f64) {
        let (a, b, g) = (self.sf_alpha, self.sf_beta, self.sf_gamma);
        (
            1.0 + (1.0 + self.sf_delta_in * (a + g)) / (a + b),
            1.0 + (1.0 + self.sf_delta_out * (a + g)) / (g + b),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("generator needs n >= 1"));
        }
        if !(self.target_rho > 0.0 && self.target_rho.is_finite()) {
            return Err(Error::invalid(format!(
                "target_rho must be positive, got {}",
                self.target_rho
            )));
        }
        match self.kind {
            GeneratorKind::ErdosRenyi => {
                if !(0.0..=1.0).contains(&self.edge_prob) {
                    return Err(Error::invalid(format!(
                        "edge_prob must lie in [0, 1], got {}",
                        self.edge_prob
                    )));
                }
            }
            GeneratorKind::DirectedScaleFree => {
                let probs = [self.sf_alpha, self.sf_beta, self.sf_gamma];
                let deltas = [self.sf_delta_in, self.sf_delta_out];
                if probs.iter().chain(&deltas).any(|&x| !(x >= 0.0 && x.is_finite())) {
                    return Err(Error::invalid("scale-free parameters must be nonnegative"));
                }
                let sum: f64 = probs.iter().sum();
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(Error::invalid(format!(
                        "sf_alpha + sf_beta + sf_gamma must equal 1, got {sum}"
                    )));
                }
                if self.sf_alpha + self.sf_gamma == 0.0 && self.n > 1 {
                    return Err(Error::invalid(
                        "sf_alpha + sf_gamma must be positive for the network to grow",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Generator output.
#[derive(Debug, Clone)]
pub struct Generated {
    pub network: Network,
    /// False when the sampled matrix had spectral radius zero and was returned unscaled.
    pub rescaled: bool,
}

/// Dispatches on `params.kind`.
pub fn generate(params: &GeneratorParams) -> Result<Generated> {
    match params.kind {
        GeneratorKind::ErdosRenyi => generate_erdos_renyi(params),
        GeneratorKind::DirectedScaleFree => generate_directed_scale_free(params),
    }
}

/// Directed Erdős–Rényi graph without self-loops, N(0,1) weights, rescaled
/// to `target_rho` unless the sample is nilpotent.
pub fn generate_erdos_renyi(params: &GeneratorParams) -> Result<Generated> {
    if params.kind != GeneratorKind::ErdosRenyi {
        return Err(Error::invalid("expected erdos_renyi parameters"));
    }
    params.validate()?;
    let n = params.n;
    let mut rng = rng::seeded(params.seed);
    let mut adj = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if rng.random::<f64>() < params.edge_prob {
                adj[(j, i)] = rng.sample(StandardNormal);
            }
        }
    }
    finish(Network::from_matrix(adj)?, params.target_rho)
}

fn finish(net: Network, rho: f64) -> Result<Generated> {
    if net.spectral_radius() == 0.0 {
        return Ok(Generated {
            network: net,
            rescaled: false,
        });
    }
    Ok(Generated {
        network: net.rescale_to_radius(rho)?,
        rescaled: true,
    })
}

/// Edge structure of a grown scale-free graph after collapsing parallel edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    pub n: usize,
    /// Distinct `(from, to)` pairs, sorted. May contain self-loops.
    pub edges: Vec<(usize, usize)>,
}

impl Topology {
    /// In-degrees counting distinct neighbours, self-loops excluded.
    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(u, v) in &self.edges {
            if u != v {
                deg[v] += 1;
            }
        }
        deg
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(u, v) in &self.edges {
            if u != v {
                deg[u] += 1;
            }
        }
        deg
    }
}

/// Grows the directed preferential-attachment graph of `params` (seeded from
/// `params.seed`) without repairing or weighting it. The result is the
/// topology that [`generate_directed_scale_free`] starts from.
pub fn scale_free_topology(params: &GeneratorParams) -> Result<Topology> {
    if params.kind != GeneratorKind::DirectedScaleFree {
        return Err(Error::invalid("expected directed_scale_free parameters"));
    }
    params.validate()?;
    let mut rng = rng::seeded(params.seed);
    Ok(grow(params, &mut rng))
}

fn grow(params: &GeneratorParams, rng: &mut ChaCha8Rng) -> Topology {
    let n = params.n;
    // Seed graph: one node carrying a self-loop.
    let mut edges: Vec<(usize, usize)> = vec![(0, 0)];
    let mut nodes = 1usize;

    let pick = |rng: &mut ChaCha8Rng, edges: &[(usize, usize)], nodes: usize, delta: f64, incoming: bool| {
        let e = edges.len() as f64;
        let u = rng.random::<f64>() * (e + delta * nodes as f64);
        if u < e {
            let (src, dst) = edges[(u as usize).min(edges.len() - 1)];
            if incoming {
                dst
            } else {
                src
            }
        } else {
            (((u - e) / delta) as usize).min(nodes - 1)
        }
    };

    let (alpha, beta) = (params.sf_alpha, params.sf_beta);
    while nodes < n {
        let r: f64 = rng.random();
        if r < alpha {
            let w = pick(rng, &edges, nodes, params.sf_delta_in, true);
            edges.push((nodes, w));
            nodes += 1;
        } else if r < alpha + beta {
            let v = pick(rng, &edges, nodes, params.sf_delta_out, false);
            let w = pick(rng, &edges, nodes, params.sf_delta_in, true);
            edges.push((v, w));
        } else {
            let v = pick(rng, &edges, nodes, params.sf_delta_out, false);
            edges.push((v, nodes));
            nodes += 1;
        }
    }
    edges.sort_unstable();
    edges.dedup();
    Topology { n, edges }
}

/// Directed scale-free network: grow, collapse parallel edges, link the
/// condensation into a cycle, add missing self-loops, draw N(0,1) weights for
/// every edge, rescale to `target_rho`.
pub fn generate_directed_scale_free(params: &GeneratorParams) -> Result<Generated> {
    if params.kind != GeneratorKind::DirectedScaleFree {
        return Err(Error::invalid("expected directed_scale_free parameters"));
    }
    params.validate()?;
    let mut rng = rng::seeded(params.seed);
    let topo = grow(params, &mut rng);
    let n = params.n;
    let mut adj = DMatrix::zeros(n, n);
    for &(u, v) in &topo.edges {
        adj[(v, u)] = 1.0;
    }
    repair(&mut adj, &mut rng, |_| 1.0);
    // Column-major walk: source by source.
    for i in 0..n {
        for j in 0..n {
            if adj[(j, i)] != 0.0 {
                adj[(j, i)] = rng.sample(StandardNormal);
            }
        }
    }
    finish(Network::from_matrix(adj)?, params.target_rho)
}

/// Discrete power-law exponent estimate for the tail `k >= k_min`, using the
/// continuous approximation `1 + N / Σ ln(k / (k_min - 1/2))`. Returns the
/// estimate and the tail size, or `None` when the tail is empty.
pub fn powerlaw_tail_exponent(degrees: &[usize], k_min: usize) -> Option<(f64, usize)> {
    if k_min == 0 {
        return None;
    }
    let shift = k_min as f64 - 0.5;
    let (count, log_sum) = degrees
        .iter()
        .filter(|&&k| k >= k_min)
        .fold((0usize, 0.0f64), |(c, s), &k| (c + 1, s + (k as f64 / shift).ln()));
    if count == 0 || log_sum <= 0.0 {
        return None;
    }
    Some((1.0 + count as f64 / log_sum, count))
}
