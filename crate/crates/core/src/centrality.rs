//! Energy centralities, driver rankings and driver-set selection.
//!
//! * `p_i = trace(W^(i)) = M^(I)[i,i]`: energy injected into the network by a
//!   unit impulse at `i`.
//! * `q_i = trace(M^(i)) = W^(I)[i,i]`: energy reaching `i` from unit impulses
//!   at every node, itself included.
//! * `q̃_i = q_i - ε_{i→i}`: the same without the self term.
//! * `r_diff = p - q` and `r_quot = p / q`.
//!
//! All of them come from one aggregate Gramian pair plus the diagonal of
//! `Σ_t (A^t ∘ A^t)`, not from `n` separate solves.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gramian::{self, GramianEngine, GramianSpec};
use crate::netgraph::Network;
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct CentralityTable {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub q_tilde: Vec<f64>,
    pub r_diff: Vec<f64>,
    pub r_quot: Vec<f64>,
    pub spec: GramianSpec,
}

impl CentralityTable {
    pub fn n(&self) -> usize {
        self.p.len()
    }

    /// CSV with header `node,p,q,q_tilde,r_diff,r_quot`, one-based ids.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node,p,q,q_tilde,r_diff,r_quot\n");
        for i in 0..self.n() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                i + 1,
                crate::io::fmt_f64(self.p[i]),
                crate::io::fmt_f64(self.q[i]),
                crate::io::fmt_f64(self.q_tilde[i]),
                crate::io::fmt_f64(self.r_diff[i]),
                crate::io::fmt_f64(self.r_quot[i]),
            ));
        }
        out
    }
}

pub fn compute_centralities(net: &Network, spec: GramianSpec) -> Result<CentralityTable> {
    compute_with(&GramianEngine::new(net, spec)?)
}

/// [`compute_centralities`] reusing an engine built for the network.
pub fn compute_with(engine: &GramianEngine<'_>) -> Result<CentralityTable> {
    let net = engine.network();
    let spec = *engine.spec();
    let (w_all, m_all) = engine.aggregate()?;
    let flows = gramian::energy_flows_with_total(net, spec, w_all.trace())?;

    let n = net.n();
    let p: Vec<f64> = (0..n).map(|i| m_all.mat[(i, i)]).collect();
    let q: Vec<f64> = (0..n).map(|i| w_all.mat[(i, i)]).collect();
    let q_tilde = (0..n).map(|i| (q[i] - flows[(i, i)]).max(0.0)).collect();
    let r_diff = p.iter().zip(&q).map(|(p, q)| p - q).collect();
    let r_quot = p.iter().zip(&q).map(|(p, q)| p / q).collect();
    Ok(CentralityTable {
        p,
        q,
        q_tilde,
        r_diff,
        r_quot,
        spec,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankCriterion {
    RankDiff,
    RankQuot,
    POnly,
}

/// Driver placement strategy. [`Strategy::ALL`] lists the network-wide ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    RankDiff,
    RankQuot,
    TraceMax,
    Random,
    /// Top energy senders towards a single target node.
    TargetFlow,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::RankDiff,
        Strategy::RankQuot,
        Strategy::TraceMax,
        Strategy::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::RankDiff => "rank_diff",
            Strategy::RankQuot => "rank_quot",
            Strategy::TraceMax => "trace_max",
            Strategy::Random => "random",
            Strategy::TargetFlow => "target_flow",
        }
    }

    fn criterion(self) -> Option<RankCriterion> {
        match self {
            Strategy::RankDiff => Some(RankCriterion::RankDiff),
            Strategy::RankQuot => Some(RankCriterion::RankQuot),
            Strategy::TraceMax => Some(RankCriterion::POnly),
            Strategy::Random | Strategy::TargetFlow => None,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown strategy `{s}` (expected rank_diff, rank_quot, trace_max or random)"
                ))
            })
    }
}

/// Nodes in descending order of the chosen score; equal scores keep
/// ascending node order.
pub fn rank_nodes(table: &CentralityTable, criterion: RankCriterion) -> Vec<usize> {
    let score = match criterion {
        RankCriterion::RankDiff => &table.r_diff,
        RankCriterion::RankQuot => &table.r_quot,
        RankCriterion::POnly => &table.p,
    };
    rank_by(score)
}

pub(crate) fn rank_by(score: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..score.len()).collect();
    order.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));
    order
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DriverSet {
    /// Rank order for the ranking strategies, draw order for `random`.
    pub members: Vec<usize>,
    pub strategy: Strategy,
    pub seed: Option<u64>,
}

impl DriverSet {
    pub fn m(&self) -> usize {
        self.members.len()
    }
}

/// Picks `m` drivers. Ranking strategies take the first `m` ranked nodes;
/// `trace_max` ranks by `p`, which maximizes `trace(W)` because the trace is
/// additive over drivers; `random` draws a uniform `m`-subset from `seed`.
pub fn select_drivers(
    net: &Network,
    strategy: Strategy,
    m: usize,
    spec: GramianSpec,
    seed: Option<u64>,
) -> Result<DriverSet> {
    check_m(m, net.n())?;
    if strategy == Strategy::Random {
        return select_from_table(None, net.n(), strategy, m, seed);
    }
    let table = compute_centralities(net, spec)?;
    select_from_table(Some(&table), net.n(), strategy, m, seed)
}

/// Selection against a precomputed table (`None` is only accepted for `random`).
pub fn select_from_table(
    table: Option<&CentralityTable>,
    n: usize,
    strategy: Strategy,
    m: usize,
    seed: Option<u64>,
) -> Result<DriverSet> {
    check_m(m, n)?;
    if strategy == Strategy::TargetFlow {
        return Err(Error::invalid("target_flow needs a target node; use best_drivers_for_target"));
    }
    let members = match strategy.criterion() {
        Some(criterion) => {
            let table = table.ok_or_else(|| Error::invalid("ranking strategy needs a centrality table"))?;
            let mut order = rank_nodes(table, criterion);
            order.truncate(m);
            order
        }
        None => {
            let seed = seed.ok_or_else(|| Error::invalid("random strategy needs a seed"))?;
            let mut rng = rng::seeded(seed);
            index::sample(&mut rng, n, m).into_vec()
        }
    };
    Ok(DriverSet {
        members,
        strategy,
        seed: if strategy == Strategy::Random { seed } else { None },
    })
}

pub(crate) fn check_m(m: usize, n: usize) -> Result<()> {
    if m == 0 || m > n {
        return Err(Error::invalid(format!("m must lie in 1..={n}, got {m}")));
    }
    Ok(())
}

/// `Σ_{i∈S1} Σ_{j∈S2} (ε_{i→j} - ε_{j→i})`.
pub fn net_energy_flow(net: &Network, from: &[usize], to: &[usize], spec: GramianSpec) -> Result<f64> {
    for &k in from.iter().chain(to) {
        if k >= net.n() {
            return Err(Error::invalid(format!("node {} out of range 1..={}", k + 1, net.n())));
        }
    }
    let flows = gramian::energy_flow_matrix(net, spec)?;
    Ok(net_flow_from_matrix(&flows, from, to))
}

pub(crate) fn net_flow_from_matrix(flows: &DMatrix<f64>, from: &[usize], to: &[usize]) -> f64 {
    let mut total = 0.0;
    for &i in from {
        for &j in to {
            total += flows[(j, i)] - flows[(i, j)];
        }
    }
    total
}

/// Diagonal of `Σ_{t<T} [(Aᵀ)^t A^t - A^t (Aᵀ)^t]`, formed from explicit
/// matrix powers. Equals the finite-horizon `r_diff`.
pub fn commutator_diagonal(net: &Network, t: usize) -> Result<Vec<f64>> {
    if t == 0 {
        return Err(Error::invalid("horizon must be >= 1"));
    }
    let n = net.n();
    let a = net.adj();
    let mut power = DMatrix::<f64>::identity(n, n);
    let mut acc = DMatrix::<f64>::zeros(n, n);
    for s in 0..t {
        acc += power.transpose() * &power - &power * power.transpose();
        if s + 1 < t {
            power = a * &power;
        }
    }
    Ok(acc.diagonal().iter().copied().collect())
}
