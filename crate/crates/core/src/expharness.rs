//! Random-network experiments: driver-count sweeps of `trace(W)` and
//! `λ_min(W)` per placement strategy, mean Gramian spectra and mean sorted
//! centrality profiles, averaged over seeded realizations.
//!
//! Realization `r` (1-based) uses generator seed `base_seed ^ r`; the random
//! placement for strategy `s` and driver count `m` draws from a sub-stream
//! derived from that seed. Realizations run in parallel but are reduced in
//! index order, so results do not depend on the schedule.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::centrality::{compute_with, select_from_table, Strategy};
use crate::control::{lambda_min_upper_bound, metrics};
use crate::error::{Error, Result};
use crate::gramian::{GramianEngine, GramianSpec};
use crate::io::fmt_f64;
use crate::netgraph::{generate, GeneratorParams};
use crate::rng;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default)]
    pub metric_sweep: bool,
    #[serde(default)]
    pub spectrum_at_m: bool,
    #[serde(default)]
    pub centrality_profile: bool,
}

impl Outputs {
    pub fn all() -> Self {
        Self {
            metric_sweep: true,
            spectrum_at_m: true,
            centrality_profile: true,
        }
    }
}

/// Experiment description. `generator.seed` is ignored; seeds come from
/// `base_seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub generator: GeneratorParams,
    pub realizations: u64,
    pub m_grid: Vec<usize>,
    pub strategies: Vec<Strategy>,
    #[serde(default)]
    pub spec: GramianSpec,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum_m: Option<usize>,
}

impl ExperimentConfig {
    /// Erdős–Rényi sweep at desk scale: n = 200, 100 realizations,
    /// m = 10, 20, …, 160, spectrum at m = 60.
    pub fn desk_erdos_renyi() -> Self {
        let n = 200;
        Self::desk(GeneratorParams::erdos_renyi(n, GeneratorParams::er_constant_degree_prob(n), 0))
    }

    /// Directed scale-free sweep at desk scale.
    pub fn desk_scale_free() -> Self {
        Self::desk(GeneratorParams::scale_free(200, 0))
    }

    fn desk(generator: GeneratorParams) -> Self {
        Self {
            generator,
            realizations: 100,
            m_grid: (1..=16).map(|k| 10 * k).collect(),
            strategies: Strategy::ALL.to_vec(),
            spec: GramianSpec::infinite(),
            base_seed: 2019,
            outputs: Outputs::all(),
            spectrum_m: Some(60),
        }
    }

    /// Full-size Erdős–Rényi setting: n = 500, edge probability 0.01,
    /// 1000 realizations, spectrum at m = 150.
    pub fn full_erdos_renyi() -> Self {
        Self::full(GeneratorParams::erdos_renyi(500, 0.01, 0))
    }

    pub fn full_scale_free() -> Self {
        Self::full(GeneratorParams::scale_free(500, 0))
    }

    fn full(generator: GeneratorParams) -> Self {
        Self {
            realizations: 1000,
            m_grid: (1..=25).map(|k| 10 * k).collect(),
            spectrum_m: Some(150),
            ..Self::desk(generator)
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "desk-er" => Some(Self::desk_erdos_renyi()),
            "desk-sf" => Some(Self::desk_scale_free()),
            "full-er" => Some(Self::full_erdos_renyi()),
            "full-sf" => Some(Self::full_scale_free()),
            _ => None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Validation(message) => Error::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        self.spec.validate()?;
        let n = self.generator.n;
        if self.realizations == 0 {
            return Err(Error::invalid("realizations must be >= 1"));
        }
        if self.outputs.metric_sweep && self.m_grid.is_empty() {
            return Err(Error::invalid("m_grid must not be empty"));
        }
        if self.m_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("m_grid must be strictly ascending"));
        }
        if let Some(&m) = self.m_grid.iter().find(|&&m| m == 0 || m > n) {
            return Err(Error::invalid(format!("m_grid entry {m} outside 1..={n}")));
        }
        if self.strategies.is_empty() {
            return Err(Error::invalid("at least one strategy is required"));
        }
        let distinct: BTreeSet<_> = self.strategies.iter().collect();
        if distinct.len() != self.strategies.len() {
            return Err(Error::invalid("strategies must not repeat"));
        }
        if self.strategies.contains(&Strategy::TargetFlow) {
            return Err(Error::invalid("target_flow is not a network-wide placement strategy"));
        }
        if self.outputs.spectrum_at_m {
            match self.spectrum_m {
                Some(m) if m >= 1 && m <= n => {}
                Some(m) => return Err(Error::invalid(format!("spectrum_m {m} outside 1..={n}"))),
                None => return Err(Error::invalid("spectrum_at_m requires spectrum_m")),
            }
        }
        Ok(())
    }

    pub fn realization_seed(&self, r: u64) -> u64 {
        self.base_seed ^ r
    }
}

fn placement_seed(realization_seed: u64, strategy: Strategy, m: usize) -> u64 {
    rng::derive(realization_seed, ((strategy as u64) << 32) | m as u64)
}

/// Mean metrics of one strategy at one driver count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub strategy: Strategy,
    pub m: usize,
    pub mean_trace: f64,
    pub mean_lambda_min: f64,
    /// Mean of the `(m+1)`-th smallest `q̃`; infinite when `m = n`.
    pub qtilde_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanSpectrum {
    pub strategy: Strategy,
    pub m: usize,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
}

/// Means of the ascending-sorted `p`, `q`, `q̃` vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentralityProfile {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub q_tilde: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub realizations: u64,
    /// Realizations whose sampled matrix had spectral radius zero and were
    /// used unscaled.
    pub unscaled_realizations: u64,
    pub sweep: Vec<SweepPoint>,
    pub spectra: Vec<MeanSpectrum>,
    pub profile: Option<CentralityProfile>,
}

impl ExperimentResult {
    pub fn point(&self, strategy: Strategy, m: usize) -> Option<&SweepPoint> {
        self.sweep.iter().find(|p| p.strategy == strategy && p.m == m)
    }
}

struct Outcome {
    rescaled: bool,
    /// `[strategy][m] -> (trace, λ_min, bound)`.
    sweep: Vec<Vec<(f64, f64, f64)>>,
    spectra: Vec<Vec<f64>>,
    profile: Option<[Vec<f64>; 3]>,
}

fn run_realization(cfg: &ExperimentConfig, r: u64) -> Result<Outcome> {
    let seed = cfg.realization_seed(r);
    let generated = generate(&cfg.generator.with_seed(seed))?;
    let net = &generated.network;
    let n = net.n();
    let engine = GramianEngine::new(net, cfg.spec)?;
    let table = compute_with(&engine)?;

    let place = |strategy: Strategy, m: usize| {
        select_from_table(Some(&table), n, strategy, m, Some(placement_seed(seed, strategy, m)))
    };

    let mut sweep = Vec::new();
    if cfg.outputs.metric_sweep {
        for &strategy in &cfg.strategies {
            let mut row = Vec::with_capacity(cfg.m_grid.len());
            for &m in &cfg.m_grid {
                let drivers = place(strategy, m)?;
                let met = metrics(&engine.controllability(&drivers.members)?)?;
                let bound = if m < n {
                    lambda_min_upper_bound(&table, m)?
                } else {
                    f64::INFINITY
                };
                let lambda_max = met.spectrum.last().copied().unwrap_or(0.0);
                if met.lambda_min > bound + 1e-10 * (1.0 + lambda_max) {
                    return Err(Error::Numeric(format!(
                        "lambda_min {:e} exceeds q_tilde bound {:e} ({strategy}, m = {m})",
                        met.lambda_min, bound
                    )));
                }
                row.push((met.trace_w, met.lambda_min, bound));
            }
            sweep.push(row);
        }
    }

    let mut spectra = Vec::new();
    if let (true, Some(m)) = (cfg.outputs.spectrum_at_m, cfg.spectrum_m) {
        for &strategy in &cfg.strategies {
            let drivers = place(strategy, m)?;
            spectra.push(metrics(&engine.controllability(&drivers.members)?)?.spectrum);
        }
    }

    let profile = cfg.outputs.centrality_profile.then(|| {
        let sorted = |v: &[f64]| {
            let mut v = v.to_vec();
            v.sort_by(f64::total_cmp);
            v
        };
        [sorted(&table.p), sorted(&table.q), sorted(&table.q_tilde)]
    });

    Ok(Outcome {
        rescaled: generated.rescaled,
        sweep,
        spectra,
        profile,
    })
}

fn add_into(acc: &mut [f64], v: &[f64]) {
    for (a, x) in acc.iter_mut().zip(v) {
        *a += x;
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let outcomes: Vec<Result<Outcome>> = (1..=cfg.realizations)
        .into_par_iter()
        .map(|r| {
            run_realization(cfg, r).map_err(|e| Error::Realization {
                index: r,
                source: Box::new(e),
            })
        })
        .collect();

    let n = cfg.generator.n;
    let s = cfg.strategies.len();
    let g = cfg.m_grid.len();
    let mut sweep_sum = vec![vec![(0.0, 0.0, 0.0); g]; s];
    let mut spectra_sum = vec![vec![0.0; n]; s];
    let mut profile_sum = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut unscaled = 0;

    for outcome in outcomes {
        let outcome = outcome?;
        if !outcome.rescaled {
            unscaled += 1;
        }
        for (acc_row, row) in sweep_sum.iter_mut().zip(&outcome.sweep) {
            for (acc, x) in acc_row.iter_mut().zip(row) {
                acc.0 += x.0;
                acc.1 += x.1;
                acc.2 += x.2;
            }
        }
        for (acc, spec) in spectra_sum.iter_mut().zip(&outcome.spectra) {
            add_into(acc, spec);
        }
        if let Some(p) = &outcome.profile {
            for k in 0..3 {
                add_into(&mut profile_sum[k], &p[k]);
            }
        }
    }

    let count = cfg.realizations as f64;
    let mut sweep = Vec::new();
    if cfg.outputs.metric_sweep {
        for (si, &strategy) in cfg.strategies.iter().enumerate() {
            for (mi, &m) in cfg.m_grid.iter().enumerate() {
                let (t, l, b) = sweep_sum[si][mi];
                sweep.push(SweepPoint {
                    strategy,
                    m,
                    mean_trace: t / count,
                    mean_lambda_min: l / count,
                    qtilde_bound: b / count,
                });
            }
        }
    }
    let mut spectra = Vec::new();
    if let (true, Some(m)) = (cfg.outputs.spectrum_at_m, cfg.spectrum_m) {
        for (si, &strategy) in cfg.strategies.iter().enumerate() {
            spectra.push(MeanSpectrum {
                strategy,
                m,
                eigenvalues: spectra_sum[si].iter().map(|x| x / count).collect(),
            });
        }
    }
    let profile = cfg.outputs.centrality_profile.then(|| {
        let [p, q, qt] = profile_sum;
        let mean = |v: Vec<f64>| v.into_iter().map(|x| x / count).collect();
        CentralityProfile {
            p: mean(p),
            q: mean(q),
            q_tilde: mean(qt),
        }
    });

    Ok(ExperimentResult {
        config: cfg.clone(),
        realizations: cfg.realizations,
        unscaled_realizations: unscaled,
        sweep,
        spectra,
        profile,
    })
}

#[derive(Serialize)]
struct ConfigEcho<'a> {
    version: &'a str,
    realizations: u64,
    unscaled_realizations: u64,
    config: &'a ExperimentConfig,
}

fn write(path: PathBuf, contents: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Writes the requested CSV files plus `config.json` into `out_dir`
/// (created if missing) and returns the written paths.
pub fn emit_csv(result: &ExperimentResult, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    let echo = ConfigEcho {
        version: crate::VERSION,
        realizations: result.realizations,
        unscaled_realizations: result.unscaled_realizations,
        config: &result.config,
    };
    let mut json = serde_json::to_string_pretty(&echo).map_err(|e| Error::Numeric(e.to_string()))?;
    json.push('\n');
    write(dir.join("config.json"), &json, &mut written)?;

    let outputs = result.config.outputs;
    if outputs.metric_sweep {
        let mut csv = String::from("strategy,m,mean_trace,mean_lambda_min,qtilde_bound\n");
        for p in &result.sweep {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                p.strategy,
                p.m,
                fmt_f64(p.mean_trace),
                fmt_f64(p.mean_lambda_min),
                fmt_f64(p.qtilde_bound)
            ));
        }
        write(dir.join("metrics.csv"), &csv, &mut written)?;
    }
    if outputs.spectrum_at_m {
        if let Some(first) = result.spectra.first() {
            let mut csv = String::from("strategy,rank,mean_eigenvalue\n");
            for s in &result.spectra {
                for (k, ev) in s.eigenvalues.iter().enumerate() {
                    csv.push_str(&format!("{},{},{}\n", s.strategy, k + 1, fmt_f64(*ev)));
                }
            }
            write(dir.join(format!("spectrum_m{}.csv", first.m)), &csv, &mut written)?;
        }
    }
    if let (true, Some(profile)) = (outputs.centrality_profile, &result.profile) {
        let mut csv = String::from("order_stat,mean_p,mean_q,mean_qtilde\n");
        for k in 0..profile.p.len() {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                k + 1,
                fmt_f64(profile.p[k]),
                fmt_f64(profile.q[k]),
                fmt_f64(profile.q_tilde[k])
            ));
        }
        write(dir.join("centrality_profile.csv"), &csv, &mut written)?;
    }
    Ok(written)
}
