//! Minimum-energy steering and Gramian-based controllability metrics.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::Serialize;

use crate::centrality::{check_m, rank_by, CentralityTable, DriverSet, Strategy};
use crate::error::{Error, Result};
use crate::gramian::{check_nodes, ctrb_gramian, obsv_gramian, Gramian, GramianSpec};
use crate::io::fmt_f64;
use crate::netgraph::Network;

/// Relative threshold below which `λ_min(W)` counts as zero.
pub const RANK_TOL: f64 = 1e-12;
/// Largest negative eigenvalue, relative to the trace, that is clamped to zero.
pub const PSD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CtrlMetrics {
    #[serde(rename = "trace")]
    pub trace_w: f64,
    pub lambda_min: f64,
    #[serde(skip)]
    pub spectrum: Vec<f64>,
    pub controllable: bool,
}

impl CtrlMetrics {
    /// `{"trace":…,"lambda_min":…,"controllable":…}` on one line.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("metrics serialize")
    }

    /// `rank,eigenvalue` rows, ascending.
    pub fn spectrum_csv(&self) -> String {
        let mut out = String::from("rank,eigenvalue\n");
        for (k, ev) in self.spectrum.iter().enumerate() {
            out.push_str(&format!("{},{}\n", k + 1, fmt_f64(*ev)));
        }
        out
    }
}

pub fn metrics(gram: &Gramian) -> Result<CtrlMetrics> {
    metrics_of(&gram.mat)
}

/// Metrics of a symmetric positive semidefinite matrix. Eigenvalues slightly
/// below zero (at most `PSD_TOL · trace`) are clamped; larger violations are
/// an error.
pub fn metrics_of(mat: &DMatrix<f64>) -> Result<CtrlMetrics> {
    let trace = mat.trace();
    let mut spectrum: Vec<f64> = mat.clone().symmetric_eigenvalues().iter().copied().collect();
    if spectrum.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("symmetric eigensolver returned non-finite values".into()));
    }
    spectrum.sort_by(f64::total_cmp);
    let raw_min = spectrum.first().copied().unwrap_or(0.0);
    if raw_min < -PSD_TOL * trace.abs() {
        return Err(Error::NotPsd {
            lambda_min: raw_min,
            trace,
        });
    }
    for ev in &mut spectrum {
        if *ev < 0.0 {
            *ev = 0.0;
        }
    }
    let lambda_min = spectrum[0];
    Ok(CtrlMetrics {
        trace_w: trace,
        lambda_min,
        spectrum,
        controllable: lambda_min > RANK_TOL * trace,
    })
}

/// Open-loop input sequence steering `x(0) = 0` to `x(T) = x_f`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPlan {
    /// Row `t` holds `u(t)`, one column per driver.
    pub input_sequence: DMatrix<f64>,
    pub energy: f64,
    pub target_state: DVector<f64>,
    pub drivers: Vec<usize>,
}

impl ControlPlan {
    pub fn horizon(&self) -> usize {
        self.input_sequence.nrows()
    }

    /// `Σ_t ‖u(t)‖²` recomputed from the input sequence.
    pub fn input_energy(&self) -> f64 {
        self.input_sequence.norm_squared()
    }

    /// CSV `t,u_1,…,u_m`, `t` starting at 0.
    pub fn to_csv(&self) -> String {
        let m = self.input_sequence.ncols();
        let mut out = String::from("t");
        for k in 1..=m {
            out.push_str(&format!(",u_{k}"));
        }
        out.push('\n');
        for t in 0..self.horizon() {
            out.push_str(&t.to_string());
            for k in 0..m {
                out.push(',');
                out.push_str(&fmt_f64(self.input_sequence[(t, k)]));
            }
            out.push('\n');
        }
        out
    }
}

/// Runs `x(t+1) = A x(t) + B u(t)` from `x(0) = 0` and returns `x(T)`.
pub fn simulate(net: &Network, drivers: &[usize], inputs: &DMatrix<f64>) -> Result<DVector<f64>> {
    check_nodes(net.n(), drivers, "driver")?;
    if inputs.ncols() != drivers.len() {
        return Err(Error::invalid(format!(
            "input sequence has {} columns for {} drivers",
            inputs.ncols(),
            drivers.len()
        )));
    }
    let mut x = DVector::zeros(net.n());
    for t in 0..inputs.nrows() {
        let mut next = net.adj() * &x;
        for (c, &k) in drivers.iter().enumerate() {
            next[k] += inputs[(t, c)];
        }
        x = next;
    }
    Ok(x)
}

/// Solves `W y = b` for symmetric positive definite `W`, retrying with a
/// diagonal shift of `1e-12 · trace(W)` if the plain factorization fails.
fn spd_solve(w: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some(chol) = Cholesky::new(w.clone()) {
        return Ok(chol.solve(b));
    }
    let jitter = RANK_TOL * w.trace();
    let shifted = w + DMatrix::identity(w.nrows(), w.ncols()) * jitter;
    Cholesky::new(shifted)
        .map(|chol| chol.solve(b))
        .ok_or_else(|| Error::Numeric("Cholesky factorization failed after diagonal shift".into()))
}

/// `u*(t) = Bᵀ (Aᵀ)^{T-t-1} W_T⁻¹ x_f` with energy `x_fᵀ W_T⁻¹ x_f`.
pub fn min_energy_input(net: &Network, drivers: &[usize], t: usize, target: &DVector<f64>) -> Result<ControlPlan> {
    if target.len() != net.n() {
        return Err(Error::invalid(format!(
            "target state has {} entries, network has {} nodes",
            target.len(),
            net.n()
        )));
    }
    let gram = ctrb_gramian(net, drivers, GramianSpec::finite(t))?;
    let m = metrics(&gram)?;
    if !m.controllable {
        return Err(Error::Uncontrollable {
            lambda_min: m.lambda_min,
        });
    }
    let y = spd_solve(&gram.mat, target)?;
    let energy = target.dot(&y);

    let at = net.adj().transpose();
    let mut inputs = DMatrix::zeros(t, drivers.len());
    let mut z = y;
    for s in 0..t {
        let row = t - 1 - s;
        for (c, &k) in drivers.iter().enumerate() {
            inputs[(row, c)] = z[k];
        }
        if s + 1 < t {
            z = &at * &z;
        }
    }
    Ok(ControlPlan {
        input_sequence: inputs,
        energy,
        target_state: target.clone(),
        drivers: drivers.to_vec(),
    })
}

/// Minimum energy to move node `i` from 0 to 1 when the other final states
/// are free: `1 / W_ii`, reached at the final state `W e_i / W_ii`.
pub fn target_min_energy(
    net: &Network,
    drivers: &[usize],
    spec: GramianSpec,
    node: usize,
) -> Result<(f64, DVector<f64>)> {
    check_nodes(net.n(), &[node], "target")?;
    let gram = ctrb_gramian(net, drivers, spec)?;
    let w_ii = gram.mat[(node, node)];
    if w_ii <= RANK_TOL * gram.trace() || w_ii <= 0.0 {
        return Err(Error::Unreachable { node: node + 1, w_ii });
    }
    let mut state: DVector<f64> = gram.mat.column(node) / w_ii;
    state[node] = 1.0;
    Ok((1.0 / w_ii, state))
}

/// The `m` nodes sending the most energy to `node`, ranked by `ε_{k→node}`
/// (read off the single-probe observability Gramian), ties by index.
pub fn best_drivers_for_target(net: &Network, node: usize, m: usize, spec: GramianSpec) -> Result<DriverSet> {
    check_m(m, net.n())?;
    let probe = obsv_gramian(net, &[node], spec)?;
    let flows: Vec<f64> = probe.diagonal().iter().copied().collect();
    let mut members = rank_by(&flows);
    members.truncate(m);
    Ok(DriverSet {
        members,
        strategy: Strategy::TargetFlow,
        seed: None,
    })
}

/// `(m+1)`-th smallest `q̃`, an upper bound on `λ_min(W)` for every placement
/// of `m` drivers.
pub fn lambda_min_upper_bound(table: &CentralityTable, m: usize) -> Result<f64> {
    if m >= table.n() {
        return Err(Error::invalid(format!(
            "bound needs m < n, got m = {m}, n = {}",
            table.n()
        )));
    }
    let mut sorted = table.q_tilde.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[m])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::centrality::compute_centralities;

    fn chain2() -> Network {
        Network::from_rows(&[vec![0.0, 0.0], vec![0.5, 0.0]]).unwrap()
    }

    #[test]
    fn metrics_examples() {
        let m = metrics_of(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.25]))).unwrap();
        assert_eq!(m.trace_w, 1.25);
        assert_eq!(m.lambda_min, 0.25);
        assert_eq!(m.spectrum, vec![0.25, 1.0]);
        assert!(m.controllable);

        let m = metrics_of(&DMatrix::identity(4, 4)).unwrap();
        assert_eq!((m.trace_w, m.lambda_min), (4.0, 1.0));

        let w = ctrb_gramian(&chain2(), &[1], GramianSpec::finite(3)).unwrap();
        let m = metrics(&w).unwrap();
        assert_eq!(m.lambda_min, 0.0);
        assert!(!m.controllable);
        assert_eq!(m.to_json(), r#"{"trace":1.0,"lambda_min":0.0,"controllable":false}"#);
    }

    #[test]
    fn metrics_rejects_indefinite() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5]);
        assert!(matches!(metrics_of(&bad), Err(Error::NotPsd { .. })));
        let tiny = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e-12]);
        assert_eq!(metrics_of(&tiny).unwrap().lambda_min, 0.0);
    }

    #[test]
    fn chain_min_energy() {
        let xf = DVector::from_vec(vec![0.0, 1.0]);
        let plan = min_energy_input(&chain2(), &[0], 3, &xf).unwrap();
        assert!((plan.energy - 4.0).abs() < 1e-12);
        assert!((plan.input_energy() - 4.0).abs() < 1e-12);
        let reached = simulate(&chain2(), &[0], &plan.input_sequence).unwrap();
        assert!((reached - &xf).norm() < 1e-12);
        assert_eq!(plan.to_csv().lines().next(), Some("t,u_1"));
        assert_eq!(plan.to_csv().lines().count(), 4);
    }

    #[test]
    fn zero_target_zero_input() {
        let plan = min_energy_input(&chain2(), &[0], 3, &DVector::zeros(2)).unwrap();
        assert_eq!(plan.energy, 0.0);
        assert!(plan.input_sequence.iter().all(|&u| u == 0.0));
    }

    #[test]
    fn eigenvector_target_costs_inverse_eigenvalue() {
        let a = Network::from_rows(&[vec![0.3, 0.2], vec![-0.4, 0.1]]).unwrap();
        let w = ctrb_gramian(&a, &[0], GramianSpec::finite(4)).unwrap();
        let eig = w.mat.clone().symmetric_eigen();
        for k in 0..2 {
            let v: DVector<f64> = eig.eigenvectors.column(k).into();
            let plan = min_energy_input(&a, &[0], 4, &v).unwrap();
            let expected = 1.0 / eig.eigenvalues[k];
            assert!((plan.energy - expected).abs() <= 1e-9 * expected);
        }
    }

    #[test]
    fn uncontrollable_reports_lambda_min() {
        let err = min_energy_input(&chain2(), &[1], 3, &DVector::from_vec(vec![1.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::Uncontrollable { lambda_min } if lambda_min == 0.0));
    }

    #[test]
    fn target_energy_examples() {
        let (e, x) = target_min_energy(&chain2(), &[0], GramianSpec::finite(3), 1).unwrap();
        assert_eq!(e, 4.0);
        assert_eq!(x.as_slice(), &[0.0, 1.0]);
        let a = Network::from_rows(&[vec![0.3, 0.2], vec![-0.4, 0.1]]).unwrap();
        let (e, _) = target_min_energy(&a, &[1], GramianSpec::finite(1), 1).unwrap();
        assert_eq!(e, 1.0);
        assert!(matches!(
            target_min_energy(&chain2(), &[1], GramianSpec::finite(3), 0),
            Err(Error::Unreachable { node: 1, .. })
        ));
    }

    #[test]
    fn best_target_drivers() {
        let d = best_drivers_for_target(&chain2(), 1, 1, GramianSpec::finite(3)).unwrap();
        assert_eq!(d.members, vec![1]);
        let d = best_drivers_for_target(&chain2(), 1, 2, GramianSpec::finite(3)).unwrap();
        assert_eq!(d.m(), 2);
        // Unit 3-chain: ε_{1→3} = ε_{2→3} = ε_{3→3} = 1, so ties go to the lowest index.
        let chain3 = Network::from_rows(&[
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
        ])
        .unwrap();
        let d = best_drivers_for_target(&chain3, 2, 1, GramianSpec::finite(3)).unwrap();
        assert_eq!(d.members, vec![0]);
        for k in 0..3 {
            let (e, _) = target_min_energy(&chain3, &[k], GramianSpec::finite(3), 2).unwrap();
            assert_eq!(e, 1.0);
        }
    }

    #[test]
    fn bound_examples() {
        let t = compute_centralities(&chain2(), GramianSpec::finite(3)).unwrap();
        assert_eq!(lambda_min_upper_bound(&t, 1).unwrap(), 0.25);
        assert_eq!(lambda_min_upper_bound(&t, 0).unwrap(), 0.0);
        assert!(lambda_min_upper_bound(&t, 2).is_err());
        let w = ctrb_gramian(&chain2(), &[0], GramianSpec::finite(3)).unwrap();
        assert!(metrics(&w).unwrap().lambda_min <= 0.25);
        // Three roots: no placement of two drivers reaches all of them.
        let t = compute_centralities(&Network::empty(3).unwrap(), GramianSpec::infinite()).unwrap();
        assert_eq!(lambda_min_upper_bound(&t, 2).unwrap(), 0.0);
    }
}
