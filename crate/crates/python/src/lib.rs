//! Python bindings. Node indices are zero-based on this side.

use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use netenergy::centrality::{self, RankCriterion};
use netenergy::control;
use netenergy::expharness::{self, ExperimentConfig};
use netenergy::gramian::{self, GramianSpec, Horizon};
use netenergy::netgraph::{self, GeneratorParams};
use netenergy::{io, Error, Strategy};

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Io { .. } => PyOSError::new_err(err.to_string()),
        e if e.is_numeric() => PyArithmeticError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

/// `None` picks the infinite horizon for stable networks; otherwise an int
/// number of steps or the string "inf".
fn spec_of(net: &netenergy::Network, horizon: Option<&Bound<'_, PyAny>>) -> PyResult<GramianSpec> {
    let Some(h) = horizon else {
        return GramianSpec::default_for(net).map_err(to_py);
    };
    let horizon = if let Ok(t) = h.extract::<usize>() {
        Horizon::Finite(t)
    } else {
        h.extract::<String>()?.parse::<Horizon>().map_err(to_py)?
    };
    let spec = GramianSpec {
        horizon,
        ..GramianSpec::infinite()
    };
    spec.validate().map_err(to_py)?;
    Ok(spec)
}

#[pyclass(name = "Network", module = "pynetenergy", frozen)]
struct PyNetwork {
    inner: netenergy::Network,
}

#[pymethods]
impl PyNetwork {
    /// `rows[j][i]` is the weight of edge i -> j.
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self {
            inner: netenergy::Network::from_rows(&rows).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: io::read_network(path).map_err(to_py)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (n, edge_prob, seed, rho = 0.9))]
    fn erdos_renyi(n: usize, edge_prob: f64, seed: u64, rho: f64) -> PyResult<Self> {
        let mut params = GeneratorParams::erdos_renyi(n, edge_prob, seed);
        params.target_rho = rho;
        Ok(Self {
            inner: netgraph::generate(&params).map_err(to_py)?.network,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (n, seed, rho = 0.9))]
    fn scale_free(n: usize, seed: u64, rho: f64) -> PyResult<Self> {
        let mut params = GeneratorParams::scale_free(n, seed);
        params.target_rho = rho;
        Ok(Self {
            inner: netgraph::generate(&params).map_err(to_py)?.network,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn spectral_radius(&self) -> f64 {
        self.inner.spectral_radius()
    }

    fn adjacency(&self) -> Vec<Vec<f64>> {
        let a = self.inner.adj();
        a.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    fn is_stable(&self) -> bool {
        self.inner.is_stable()
    }

    fn strongly_connected_components(&self) -> Vec<Vec<usize>> {
        self.inner.strongly_connected_components()
    }

    fn roots_and_leaves(&self) -> (Vec<usize>, Vec<usize>) {
        self.inner.roots_and_leaves()
    }

    fn __repr__(&self) -> String {
        format!("Network(n={}, radius={:.6})", self.inner.n(), self.inner.spectral_radius())
    }
}

/// Dict of lists `p`, `q`, `q_tilde`, `r_diff`, `r_quot`.
#[pyfunction]
#[pyo3(signature = (net, horizon = None))]
fn centralities<'py>(py: Python<'py>, net: &PyNetwork, horizon: Option<&Bound<'py, PyAny>>) -> PyResult<Bound<'py, PyDict>> {
    let spec = spec_of(&net.inner, horizon)?;
    let t = centrality::compute_centralities(&net.inner, spec).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("p", t.p)?;
    out.set_item("q", t.q)?;
    out.set_item("q_tilde", t.q_tilde)?;
    out.set_item("r_diff", t.r_diff)?;
    out.set_item("r_quot", t.r_quot)?;
    Ok(out)
}

/// Node order by `criterion`: "rank_diff", "rank_quot" or "p".
#[pyfunction]
#[pyo3(signature = (net, criterion, horizon = None))]
fn rank_nodes(net: &PyNetwork, criterion: &str, horizon: Option<&Bound<'_, PyAny>>) -> PyResult<Vec<usize>> {
    let criterion = match criterion {
        "rank_diff" => RankCriterion::RankDiff,
        "rank_quot" => RankCriterion::RankQuot,
        "p" => RankCriterion::POnly,
        other => return Err(PyValueError::new_err(format!("unknown criterion `{other}`"))),
    };
    let spec = spec_of(&net.inner, horizon)?;
    let t = centrality::compute_centralities(&net.inner, spec).map_err(to_py)?;
    Ok(centrality::rank_nodes(&t, criterion))
}

#[pyfunction]
#[pyo3(signature = (net, strategy, m, horizon = None, seed = None))]
fn select_drivers(
    net: &PyNetwork,
    strategy: &str,
    m: usize,
    horizon: Option<&Bound<'_, PyAny>>,
    seed: Option<u64>,
) -> PyResult<Vec<usize>> {
    let strategy: Strategy = strategy.parse().map_err(to_py)?;
    let spec = spec_of(&net.inner, horizon)?;
    let set = centrality::select_drivers(&net.inner, strategy, m, spec, seed).map_err(to_py)?;
    Ok(set.members)
}

/// Dict with `trace`, `lambda_min`, `controllable` and the ascending `spectrum`
/// of the controllability Gramian for `drivers`.
#[pyfunction]
#[pyo3(signature = (net, drivers, horizon = None))]
fn metrics<'py>(
    py: Python<'py>,
    net: &PyNetwork,
    drivers: Vec<usize>,
    horizon: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = spec_of(&net.inner, horizon)?;
    let gram = gramian::ctrb_gramian(&net.inner, &drivers, spec).map_err(to_py)?;
    let met = control::metrics(&gram).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("trace", met.trace_w)?;
    out.set_item("lambda_min", met.lambda_min)?;
    out.set_item("controllable", met.controllable)?;
    out.set_item("spectrum", met.spectrum)?;
    Ok(out)
}

#[pyfunction]
#[pyo3(signature = (net, drivers, horizon = None))]
fn controllability_gramian(net: &PyNetwork, drivers: Vec<usize>, horizon: Option<&Bound<'_, PyAny>>) -> PyResult<Vec<Vec<f64>>> {
    let spec = spec_of(&net.inner, horizon)?;
    let gram = gramian::ctrb_gramian(&net.inner, &drivers, spec).map_err(to_py)?;
    Ok(gram.mat.row_iter().map(|r| r.iter().copied().collect()).collect())
}

/// Upper bound on the smallest Gramian eigenvalue over every placement of `m` drivers.
#[pyfunction]
#[pyo3(signature = (net, m, horizon = None))]
fn lambda_min_bound(net: &PyNetwork, m: usize, horizon: Option<&Bound<'_, PyAny>>) -> PyResult<f64> {
    let spec = spec_of(&net.inner, horizon)?;
    let t = centrality::compute_centralities(&net.inner, spec).map_err(to_py)?;
    control::lambda_min_upper_bound(&t, m).map_err(to_py)
}

/// `(drivers, energy, final_state)` for steering `node` to 1 with the best `m` drivers.
#[pyfunction]
#[pyo3(signature = (net, node, m, horizon = None))]
fn target(
    net: &PyNetwork,
    node: usize,
    m: usize,
    horizon: Option<&Bound<'_, PyAny>>,
) -> PyResult<(Vec<usize>, f64, Vec<f64>)> {
    let spec = spec_of(&net.inner, horizon)?;
    let set = control::best_drivers_for_target(&net.inner, node, m, spec).map_err(to_py)?;
    let (energy, state) = control::target_min_energy(&net.inner, &set.members, spec, node).map_err(to_py)?;
    Ok((set.members, energy, state.iter().copied().collect()))
}

/// Runs an experiment from a JSON config string and returns the result as
/// JSON. With `out_dir` the CSV files are written there as well.
#[pyfunction]
#[pyo3(signature = (config_json, out_dir = None))]
fn run_experiment(config_json: &str, out_dir: Option<&str>) -> PyResult<String> {
    let cfg = ExperimentConfig::from_json(config_json).map_err(to_py)?;
    let result = expharness::run_experiment(&cfg).map_err(to_py)?;
    if let Some(dir) = out_dir {
        expharness::emit_csv(&result, dir).map_err(to_py)?;
    }
    serde_json::to_string(&result).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn pynetenergy(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", netenergy::VERSION)?;
    m.add_class::<PyNetwork>()?;
    m.add_function(wrap_pyfunction!(centralities, m)?)?;
    m.add_function(wrap_pyfunction!(rank_nodes, m)?)?;
    m.add_function(wrap_pyfunction!(select_drivers, m)?)?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(controllability_gramian, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_min_bound, m)?)?;
    m.add_function(wrap_pyfunction!(target, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
