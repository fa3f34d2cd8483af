//! Controllability and observability Gramians.
//!
//! For driver set `K` with input matrix `B` (columns `e_k`, `k ∈ K`):
//!
//! ```text
//! W_T = Σ_{t<T} A^t B Bᵀ (Aᵀ)^t          A W Aᵀ - W + B Bᵀ = 0   (T = ∞)
//! ```
//!
//! and dually `M` with `Aᵀ` in place of `A` and the probe matrix `Cᵀ`.
//! Infinite-horizon Gramians are computed by squared Smith iteration,
//! `W ← W + A_k W A_kᵀ`, `A_{k+1} = A_k²`, which converges quadratically for
//! stable `A`. [`GramianEngine`] caches the squared powers so that many driver
//! sets on one network share them.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::netgraph::Network;

/// Time horizon of a Gramian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    Finite(usize),
    Infinite,
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Finite(t) => write!(f, "{t}"),
            Horizon::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Horizon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinite" => Ok(Horizon::Infinite),
            other => match other.parse::<usize>() {
                Ok(t) if t >= 1 => Ok(Horizon::Finite(t)),
                _ => Err(Error::invalid(format!(
                    "horizon must be `inf` or a positive integer, got `{other}`"
                ))),
            },
        }
    }
}

impl Serialize for Horizon {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Horizon::Finite(t) => s.serialize_u64(*t as u64),
            Horizon::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Horizon {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Steps(u64),
            Name(String),
        }
        match Raw::deserialize(d)? {
            Raw::Steps(0) => Err(serde::de::Error::custom("finite horizon must be >= 1")),
            Raw::Steps(t) => Ok(Horizon::Finite(t as usize)),
            Raw::Name(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Horizon plus the tolerances of the infinite-horizon solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GramianSpec {
    pub horizon: Horizon,
    #[serde(default = "default_tol")]
    pub lyap_tol: f64,
    #[serde(default = "default_max_iter")]
    pub lyap_max_iter: usize,
}

fn default_tol() -> f64 {
    1e-12
}

fn default_max_iter() -> usize {
    200
}

impl Default for GramianSpec {
    fn default() -> Self {
        Self::infinite()
    }
}

impl GramianSpec {
    pub fn infinite() -> Self {
        Self {
            horizon: Horizon::Infinite,
            lyap_tol: default_tol(),
            lyap_max_iter: default_max_iter(),
        }
    }

    pub fn finite(t: usize) -> Self {
        Self {
            horizon: Horizon::Finite(t),
            ..Self::infinite()
        }
    }

    /// Infinite horizon for stable networks. Unstable networks need an explicit `T`.
    pub fn default_for(net: &Network) -> Result<Self> {
        if net.is_stable() {
            Ok(Self::infinite())
        } else {
            Err(Error::invalid(format!(
                "spectral radius {} >= 1: pass a finite horizon",
                net.spectral_radius()
            )))
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Horizon::Finite(0) = self.horizon {
            return Err(Error::invalid("finite horizon must be >= 1"));
        }
        if !(self.lyap_tol > 0.0 && self.lyap_tol < 1.0) {
            return Err(Error::invalid(format!("lyap_tol must lie in (0, 1), got {}", self.lyap_tol)));
        }
        if self.lyap_max_iter == 0 {
            return Err(Error::invalid("lyap_max_iter must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramianKind {
    Controllability,
    Observability,
}

/// Symmetric Gramian together with the node set and horizon that produced it.
#[derive(Debug, Clone)]
pub struct Gramian {
    pub mat: DMatrix<f64>,
    /// Driver nodes (controllability) or probe nodes (observability).
    pub nodes: Vec<usize>,
    pub kind: GramianKind,
    pub spec: GramianSpec,
}

impl Gramian {
    pub fn n(&self) -> usize {
        self.mat.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace()
    }

    pub fn diagonal(&self) -> DVector<f64> {
        self.mat.diagonal()
    }
}

pub(crate) fn check_nodes(n: usize, nodes: &[usize], what: &str) -> Result<()> {
    if nodes.is_empty() {
        return Err(Error::invalid(format!("{what} set must not be empty")));
    }
    let mut seen = vec![false; n];
    for &k in nodes {
        if k >= n {
            return Err(Error::invalid(format!(
                "{what} node {} out of range 1..={n}",
                k + 1
            )));
        }
        if seen[k] {
            return Err(Error::invalid(format!("{what} node {} listed twice", k + 1)));
        }
        seen[k] = true;
    }
    Ok(())
}

fn selector(n: usize, nodes: &[usize]) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(n, nodes.len());
    for (c, &k) in nodes.iter().enumerate() {
        b[(k, c)] = 1.0;
    }
    b
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// `[B, AB, …, A^{T-1}B]` for the given driver set.
pub fn controllability_matrix(net: &Network, drivers: &[usize], t: usize) -> Result<DMatrix<f64>> {
    check_nodes(net.n(), drivers, "driver")?;
    if t == 0 {
        return Err(Error::invalid("horizon must be >= 1"));
    }
    let n = net.n();
    let m = drivers.len();
    let mut out = DMatrix::zeros(n, m * t);
    let mut block = selector(n, drivers);
    for step in 0..t {
        out.columns_mut(step * m, m).copy_from(&block);
        if step + 1 < t {
            block = net.adj() * &block;
        }
    }
    Ok(out)
}

/// Per-network Gramian solver. For the infinite horizon it holds the squared
/// powers `A^(2^k)` (and their transposes) until they fall below the solver
/// tolerance; every solve then costs two products per cached power.
#[derive(Debug, Clone)]
pub struct GramianEngine<'a> {
    net: &'a Network,
    spec: GramianSpec,
    powers: Vec<(DMatrix<f64>, DMatrix<f64>)>,
}

impl<'a> GramianEngine<'a> {
    pub fn new(net: &'a Network, spec: GramianSpec) -> Result<Self> {
        spec.validate()?;
        let mut powers = Vec::new();
        if spec.horizon == Horizon::Infinite {
            let radius = net.spectral_radius();
            if radius >= 1.0 {
                return Err(Error::Unstable { radius });
            }
            // Once ‖A_k‖²_F drops below this, the remaining updates are
            // negligible against lyap_tol.
            let floor = spec.lyap_tol * 1e-4;
            let mut a = net.adj().clone();
            let mut iterations = 0;
            loop {
                let norm2 = a.norm_squared();
                if norm2 == 0.0 {
                    break;
                }
                let at = a.transpose();
                let next = &a * &a;
                powers.push((a, at));
                if norm2 <= floor {
                    break;
                }
                iterations += 1;
                if iterations >= spec.lyap_max_iter {
                    return Err(Error::NoConvergence {
                        iterations,
                        residual: norm2,
                    });
                }
                a = next;
            }
        }
        Ok(Self { net, spec, powers })
    }

    pub fn spec(&self) -> &GramianSpec {
        &self.spec
    }

    pub fn network(&self) -> &Network {
        self.net
    }

    pub fn controllability(&self, drivers: &[usize]) -> Result<Gramian> {
        check_nodes(self.net.n(), drivers, "driver")?;
        let b = selector(self.net.n(), drivers);
        let mat = self.solve(&b, GramianKind::Controllability)?;
        Ok(Gramian {
            mat,
            nodes: drivers.to_vec(),
            kind: GramianKind::Controllability,
            spec: self.spec,
        })
    }

    pub fn observability(&self, probes: &[usize]) -> Result<Gramian> {
        check_nodes(self.net.n(), probes, "probe")?;
        let c = selector(self.net.n(), probes);
        let mat = self.solve(&c, GramianKind::Observability)?;
        Ok(Gramian {
            mat,
            nodes: probes.to_vec(),
            kind: GramianKind::Observability,
            spec: self.spec,
        })
    }

    /// `Σ_t F^t S Sᵀ (Fᵀ)^t` with `F = A` (controllability) or `F = Aᵀ`.
    fn solve(&self, input: &DMatrix<f64>, kind: GramianKind) -> Result<DMatrix<f64>> {
        let mut w = match self.spec.horizon {
            Horizon::Finite(t) => {
                let step = match kind {
                    GramianKind::Controllability => self.net.adj().clone(),
                    GramianKind::Observability => self.net.adj().transpose(),
                };
                let n = self.net.n();
                let mut w = DMatrix::zeros(n, n);
                let mut x = input.clone();
                for s in 0..t {
                    w += &x * x.transpose();
                    if s + 1 < t {
                        x = &step * &x;
                    }
                }
                w
            }
            Horizon::Infinite => {
                let mut w = input * input.transpose();
                // The cache ends at a zero power or one with ‖A_k‖² below
                // tol·1e-4, so running out of powers also means convergence.
                for (a, at) in &self.powers {
                    let update = match kind {
                        GramianKind::Controllability => a * &w * at,
                        GramianKind::Observability => at * &w * a,
                    };
                    w += &update;
                    if update.norm() < self.spec.lyap_tol * w.norm() {
                        break;
                    }
                }
                w
            }
        };
        symmetrize(&mut w);
        Ok(w)
    }

    /// `(W^(I), M^(I))`: all nodes as drivers, all nodes as probes.
    pub fn aggregate(&self) -> Result<(Gramian, Gramian)> {
        let all: Vec<usize> = (0..self.net.n()).collect();
        Ok((self.controllability(&all)?, self.observability(&all)?))
    }
}

pub fn ctrb_gramian(net: &Network, drivers: &[usize], spec: GramianSpec) -> Result<Gramian> {
    GramianEngine::new(net, spec)?.controllability(drivers)
}

pub fn obsv_gramian(net: &Network, probes: &[usize], spec: GramianSpec) -> Result<Gramian> {
    GramianEngine::new(net, spec)?.observability(probes)
}

/// Controllability Gramian with every node driven and observability Gramian
/// with every node probed. `p_i = M_I[i,i]` and `q_i = W_I[i,i]`.
pub fn aggregate_gramians(net: &Network, spec: GramianSpec) -> Result<(Gramian, Gramian)> {
    GramianEngine::new(net, spec)?.aggregate()
}

/// Energy reaching `j` from a unit impulse at `i`: `ε_{i→j} = W^(i)[j,j]`.
pub fn energy_flow(net: &Network, from: usize, to: usize, spec: GramianSpec) -> Result<f64> {
    check_nodes(net.n(), &[to], "target")?;
    let w = ctrb_gramian(net, &[from], spec)?;
    Ok(w.mat[(to, to)])
}

/// Same quantity through the dual route, `ε_{i→j} = M^(j)[i,i]`.
pub fn energy_flow_via_observability(net: &Network, from: usize, to: usize, spec: GramianSpec) -> Result<f64> {
    check_nodes(net.n(), &[from], "source")?;
    let m = obsv_gramian(net, &[to], spec)?;
    Ok(m.mat[(from, from)])
}

/// All pairwise energy flows, `E[(j, i)] = ε_{i→j} = Σ_t (A^t)_{ji}²`.
///
/// Finite horizons sum exactly. For the infinite horizon the sum is truncated
/// once `‖A^t‖²_F · trace(W^(I))`, which bounds the remaining tail, falls below
/// `lyap_tol`; the absolute error of every entry is then at most `lyap_tol`.
pub fn energy_flow_matrix(net: &Network, spec: GramianSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let total = match spec.horizon {
        Horizon::Finite(_) => 0.0,
        Horizon::Infinite => {
            let all: Vec<usize> = (0..net.n()).collect();
            ctrb_gramian(net, &all, spec)?.trace()
        }
    };
    energy_flows_with_total(net, spec, total)
}

/// [`energy_flow_matrix`] with `trace(W^(I))` already known.
pub(crate) fn energy_flows_with_total(net: &Network, spec: GramianSpec, total: f64) -> Result<DMatrix<f64>> {
    let n = net.n();
    let a = net.adj();
    let mut power = DMatrix::<f64>::identity(n, n);
    let mut flows = DMatrix::zeros(n, n);
    match spec.horizon {
        Horizon::Finite(t) => {
            for s in 0..t {
                flows += power.component_mul(&power);
                if s + 1 < t {
                    power = a * &power;
                }
            }
        }
        Horizon::Infinite => {
            let radius = net.spectral_radius();
            if radius >= 1.0 {
                return Err(Error::Unstable { radius });
            }
            let cap = 1_000_000usize;
            let mut steps = 0;
            loop {
                flows += power.component_mul(&power);
                power = a * &power;
                steps += 1;
                let tail = power.norm_squared() * total;
                if tail <= spec.lyap_tol {
                    break;
                }
                if steps >= cap {
                    return Err(Error::NoConvergence {
                        iterations: steps,
                        residual: tail,
                    });
                }
            }
        }
    }
    Ok(flows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain2() -> Network {
        Network::from_rows(&[vec![0.0, 0.0], vec![0.5, 0.0]]).unwrap()
    }

    fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1.0)
    }

    #[test]
    fn ctrb_matrix_examples() {
        let c = controllability_matrix(&chain2(), &[0], 2).unwrap();
        assert_eq!(c, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.5]));
        assert_eq!(c.rank(1e-12), 2);
        let c = controllability_matrix(&chain2(), &[1], 2).unwrap();
        assert_eq!(c, DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]));
        assert_eq!(c.rank(1e-12), 1);
        let z = Network::empty(2).unwrap();
        assert_eq!(controllability_matrix(&z, &[0, 1], 1).unwrap(), DMatrix::identity(2, 2));
        assert!(controllability_matrix(&z, &[], 1).is_err());
    }

    #[test]
    fn scalar_infinite_geometric_series() {
        let a = Network::from_rows(&[vec![0.9]]).unwrap();
        let w = ctrb_gramian(&a, &[0], GramianSpec::infinite()).unwrap();
        assert!((w.mat[(0, 0)] - 1.0 / 0.19).abs() < 1e-10);
        let m = obsv_gramian(&a, &[0], GramianSpec::infinite()).unwrap();
        assert!((m.mat[(0, 0)] - 1.0 / 0.19).abs() < 1e-10);
    }

    #[test]
    fn chain_finite_examples() {
        let w = ctrb_gramian(&chain2(), &[0], GramianSpec::finite(3)).unwrap();
        assert_eq!(w.mat, DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.25])));
        let m = obsv_gramian(&chain2(), &[1], GramianSpec::finite(3)).unwrap();
        assert_eq!(m.mat, DMatrix::from_diagonal(&DVector::from_vec(vec![0.25, 1.0])));
    }

    #[test]
    fn single_step_is_unit_outer_product() {
        let a = Network::from_rows(&[vec![0.2, -0.4, 0.1], vec![0.3, 0.0, 0.5], vec![1.0, 0.7, -0.2]]).unwrap();
        for i in 0..3 {
            let mut e = DMatrix::zeros(3, 3);
            e[(i, i)] = 1.0;
            assert_eq!(ctrb_gramian(&a, &[i], GramianSpec::finite(1)).unwrap().mat, e);
            assert_eq!(obsv_gramian(&a, &[i], GramianSpec::finite(1)).unwrap().mat, e);
        }
    }

    #[test]
    fn chain_aggregate_matches_summation() {
        // A = [[0,0],[0.5,0]]: W_I = I + A Aᵀ, M_I = I + Aᵀ A (A² = 0).
        let (w, m) = aggregate_gramians(&chain2(), GramianSpec::finite(3)).unwrap();
        assert_eq!(w.mat, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.25]));
        assert_eq!(m.mat, DMatrix::from_row_slice(2, 2, &[1.25, 0.0, 0.0, 1.0]));
        let (wi, mi) = aggregate_gramians(&chain2(), GramianSpec::infinite()).unwrap();
        assert!(close(&wi.mat, &w.mat, 1e-14));
        assert!(close(&mi.mat, &m.mat, 1e-14));
    }

    #[test]
    fn aggregate_trivial_cases() {
        let z = Network::empty(3).unwrap();
        for spec in [GramianSpec::finite(5), GramianSpec::infinite()] {
            let (w, m) = aggregate_gramians(&z, spec).unwrap();
            assert_eq!(w.mat, DMatrix::identity(3, 3));
            assert_eq!(m.mat, DMatrix::identity(3, 3));
        }
        let d = Network::from_rows(&[vec![0.5, 0.0], vec![0.0, -0.8]]).unwrap();
        let (w, m) = aggregate_gramians(&d, GramianSpec::infinite()).unwrap();
        assert!(close(&w.mat, &m.mat, 1e-14));
    }

    #[test]
    fn energy_flow_examples() {
        let spec = GramianSpec::finite(3);
        assert_eq!(energy_flow(&chain2(), 0, 1, spec).unwrap(), 0.25);
        assert_eq!(energy_flow(&chain2(), 1, 0, spec).unwrap(), 0.0);
        assert_eq!(energy_flow(&chain2(), 0, 0, spec).unwrap(), 1.0);
        assert_eq!(energy_flow_via_observability(&chain2(), 0, 1, spec).unwrap(), 0.25);
        let e = energy_flow_matrix(&chain2(), spec).unwrap();
        assert_eq!(e, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.25, 1.0]));
    }

    #[test]
    fn unstable_infinite_rejected() {
        let a = Network::from_rows(&[vec![1.5]]).unwrap();
        match ctrb_gramian(&a, &[0], GramianSpec::infinite()) {
            Err(Error::Unstable { radius }) => assert_eq!(radius, 1.5),
            other => panic!("{other:?}"),
        }
        assert!(ctrb_gramian(&a, &[0], GramianSpec::finite(4)).is_ok());
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let a = Network::from_rows(&[vec![0.999]]).unwrap();
        let spec = GramianSpec {
            lyap_max_iter: 3,
            ..GramianSpec::infinite()
        };
        assert!(matches!(ctrb_gramian(&a, &[0], spec), Err(Error::NoConvergence { iterations: 3, .. })));
    }

    #[test]
    fn horizon_parsing() {
        assert_eq!("inf".parse::<Horizon>().unwrap(), Horizon::Infinite);
        assert_eq!("12".parse::<Horizon>().unwrap(), Horizon::Finite(12));
        assert!("0".parse::<Horizon>().is_err());
        assert!("x".parse::<Horizon>().is_err());
        let spec: GramianSpec = serde_json::from_str(r#"{"horizon": 7}"#).unwrap();
        assert_eq!(spec, GramianSpec::finite(7));
        let spec: GramianSpec = serde_json::from_str(r#"{"horizon": "inf", "lyap_tol": 1e-10}"#).unwrap();
        assert_eq!(spec.lyap_tol, 1e-10);
        assert!(serde_json::from_str::<GramianSpec>(r#"{"horizon": 0}"#).is_err());
        assert!(serde_json::from_str::<GramianSpec>(r#"{"horizon": 3, "extra": 1}"#).is_err());
    }

    #[test]
    fn rejects_bad_node_sets() {
        let spec = GramianSpec::finite(2);
        assert!(ctrb_gramian(&chain2(), &[], spec).is_err());
        assert!(ctrb_gramian(&chain2(), &[2], spec).is_err());
        assert!(ctrb_gramian(&chain2(), &[0, 0], spec).is_err());
    }
}
