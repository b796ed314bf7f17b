//! Python bindings over `mobo_core`.
//!
//! Configurations cross the boundary as dicts keyed by dimension name;
//! objective vectors as `(f1, f2)` tuples. Records and reports are returned
//! as plain Python objects decoded from their JSON form.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use mobo_core::acquisition::AcquisitionState;
use mobo_core::harness::{self, ExperimentConfig};
use mobo_core::pareto::{hypervolume_of_points, non_dominated_with_ids, ParetoFront};
use mobo_core::stats::{self, GroupedSamples};
use mobo_core::{
    AcquisitionConfig, Configuration, FairnessMode, GpModel, InitMethod, InitializerSpec, OasiParams, ObjectiveProblem,
    ObjectiveVector, RunOptions,
};

fn err(e: mobo_core::Error) -> PyErr {
    match e {
        mobo_core::Error::Io(io) => PyOSError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn py_to_json(obj: &Bound<'_, PyAny>) -> PyResult<serde_json::Value> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn vectors(points: Vec<(f64, f64)>) -> Vec<ObjectiveVector> {
    points.into_iter().map(|(a, b)| ObjectiveVector::new(a, b)).collect()
}

fn tuples(points: &[ObjectiveVector]) -> Vec<(f64, f64)> {
    points.iter().map(|p| (p.f1, p.f2)).collect()
}

fn front_of(points: Vec<(f64, f64)>) -> PyResult<ParetoFront> {
    let with_ids: Vec<_> = vectors(points).into_iter().map(|y| (y, mobo_core::ConfigId(0))).collect();
    non_dominated_with_ids(&with_ids).map_err(err)
}

/// A bi-objective problem (`kws`, `convex-quadratic-2d`, `schaffer-n1`,
/// `schaffer-n1-grid`).
#[pyclass(name = "Problem", frozen)]
struct PyProblem {
    inner: ObjectiveProblem,
}

impl PyProblem {
    fn config(&self, cfg: &Bound<'_, PyDict>) -> PyResult<Configuration> {
        let serde_json::Value::Object(map) = py_to_json(cfg.as_any())? else {
            return Err(PyValueError::new_err("configuration must be a dict"));
        };
        self.inner.space.from_json_object(&map).map_err(err)
    }
}

#[pymethods]
impl PyProblem {
    #[new]
    #[pyo3(signature = (name = "kws"))]
    fn new(name: &str) -> PyResult<Self> {
        Ok(Self { inner: ObjectiveProblem::by_name(name).map_err(err)? })
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    /// `((f1_lo, f1_hi), (f2_lo, f2_hi))` used for normalization.
    #[getter]
    fn nominal_bounds(&self) -> ((f64, f64), (f64, f64)) {
        (self.inner.nominal_bounds.f1, self.inner.nominal_bounds.f2)
    }

    /// The search space as a list of `{name, kind, params}` dicts.
    fn space<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner.space)
    }

    fn evaluate(&self, config: &Bound<'_, PyDict>) -> PyResult<(f64, f64)> {
        let y = self.inner.evaluate(&self.config(config)?).map_err(err)?;
        Ok((y.f1, y.f2))
    }

    /// Stable 64-bit id of a configuration, as a hex string.
    fn config_id(&self, config: &Bound<'_, PyDict>) -> PyResult<String> {
        Ok(self.config(config)?.id().to_string())
    }

    /// `n` uniform samples from a generator seeded with `seed`.
    fn sample<'py>(&self, py: Python<'py>, n: usize, seed: u64) -> PyResult<Vec<Bound<'py, PyAny>>> {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let cfg = self.inner.space.sample_uniform(&mut rng);
                json_to_py(py, &self.inner.space.to_json_object(&cfg))
            })
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Problem({:?}, dims={})", self.inner.name, self.inner.space.len())
    }
}

/// Parameter count times four bytes for a KWS configuration dict.
#[pyfunction]
fn dscnn_size_bytes(config: &Bound<'_, PyDict>) -> PyResult<u64> {
    let p = PyProblem::new("kws")?;
    mobo_core::dscnn_size_bytes(&p.inner.space, &p.config(config)?).map_err(err)
}

/// Area dominated by `points` up to `reference`; points outside contribute nothing.
#[pyfunction]
#[pyo3(signature = (points, reference = (1.1, 1.1)))]
fn hypervolume(points: Vec<(f64, f64)>, reference: (f64, f64)) -> PyResult<f64> {
    hypervolume_of_points(&vectors(points), &ObjectiveVector::new(reference.0, reference.1)).map_err(err)
}

/// Non-dominated subset sorted by `f1`.
#[pyfunction]
fn non_dominated(points: Vec<(f64, f64)>) -> PyResult<Vec<(f64, f64)>> {
    Ok(tuples(&front_of(points)?.objectives()))
}

#[pyfunction]
fn generational_distance(front: Vec<(f64, f64)>, reference_front: Vec<(f64, f64)>) -> PyResult<f64> {
    mobo_core::generational_distance(&front_of(front)?, &front_of(reference_front)?).map_err(err)
}

/// Exact expected hypervolume improvement of an independent Gaussian
/// candidate `N(mu, diag(sigma^2))` over the front of `points`.
#[pyfunction]
#[pyo3(signature = (points, mu, sigma, reference = (1.1, 1.1)))]
fn ehvi(points: Vec<(f64, f64)>, mu: (f64, f64), sigma: (f64, f64), reference: (f64, f64)) -> PyResult<f64> {
    let state = AcquisitionState::from_points(&vectors(points), ObjectiveVector::new(reference.0, reference.1))
        .map_err(err)?;
    mobo_core::ehvi_exact(&state, mu, sigma).map_err(err)
}

fn grouped(groups: Vec<(String, Vec<f64>)>) -> PyResult<GroupedSamples> {
    GroupedSamples::new(groups).map_err(err)
}

/// Returns `{"h", "p_value", "eta_squared", "degenerate"}`.
#[pyfunction]
fn kruskal_wallis<'py>(py: Python<'py>, groups: Vec<(String, Vec<f64>)>) -> PyResult<Bound<'py, PyDict>> {
    let kw = stats::kruskal_wallis(&grouped(groups)?);
    let d = PyDict::new(py);
    d.set_item("h", kw.h)?;
    d.set_item("p_value", kw.p_value)?;
    d.set_item("eta_squared", kw.eta_squared)?;
    d.set_item("degenerate", kw.degenerate)?;
    Ok(d)
}

/// Returns `{"labels", "raw", "adjusted", "degenerate"}` with square p-value matrices.
#[pyfunction]
fn dunn_holm<'py>(py: Python<'py>, groups: Vec<(String, Vec<f64>)>) -> PyResult<Bound<'py, PyDict>> {
    let samples = grouped(groups)?;
    let r = stats::dunn_holm(&samples);
    let d = PyDict::new(py);
    d.set_item("labels", samples.labels())?;
    d.set_item("raw", r.raw)?;
    d.set_item("adjusted", r.adjusted)?;
    d.set_item("degenerate", r.degenerate)?;
    Ok(d)
}

#[pyfunction]
fn holm_adjust(p_values: Vec<f64>) -> Vec<f64> {
    stats::holm_adjust(&p_values)
}

/// Gaussian-process regressor with grid-searched hyperparameters.
#[pyclass(name = "GaussianProcess", frozen)]
struct PyGp {
    inner: GpModel,
}

#[pymethods]
impl PyGp {
    #[new]
    fn new(x: Vec<Vec<f64>>, y: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: GpModel::fit(&x, &y).map_err(err)? })
    }

    /// Posterior `(mean, variance)` at `x`.
    fn predict(&self, x: Vec<f64>) -> PyResult<(f64, f64)> {
        let p = self.inner.predict(&x).map_err(err)?;
        Ok((p.mean, p.variance))
    }

    #[getter]
    fn lengthscale(&self) -> f64 {
        self.inner.kernel().lengthscale
    }

    #[getter]
    fn log_marginal_likelihood(&self) -> f64 {
        self.inner.log_marginal_likelihood()
    }
}

/// One optimization run; returns the run record as a dict.
#[pyfunction]
#[pyo3(signature = (
    problem, method, budget, seed, n_init = 10, n_chains = 3, n_iter = 9,
    pool_size = 512, fairness = "equal-total"
))]
#[allow(clippy::too_many_arguments)]
fn run_mobo<'py>(
    py: Python<'py>,
    problem: &str,
    method: &str,
    budget: usize,
    seed: u64,
    n_init: usize,
    n_chains: usize,
    n_iter: usize,
    pool_size: usize,
    fairness: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let p = ObjectiveProblem::by_name(problem).map_err(err)?;
    let method: InitMethod = method.parse().map_err(err)?;
    let spec = match method {
        InitMethod::Oasi => InitializerSpec::oasi(n_init, OasiParams { n_chains, n_iter, ..Default::default() }),
        m => InitializerSpec::new(m, n_init),
    };
    let fairness: FairnessMode = fairness.parse().map_err(err)?;
    let opts = RunOptions {
        acquisition: AcquisitionConfig { pool_size, ..Default::default() },
        fairness,
        ..Default::default()
    };
    let record = py
        .detach(|| mobo_core::run_mobo(&p, &spec, budget, seed, &opts))
        .map_err(|f| err(f.error))?;
    json_to_py(py, &record)
}

/// Runs an experiment described by a config dict and returns its report.
#[pyfunction]
#[pyo3(signature = (config, out, strict = false))]
fn compare<'py>(py: Python<'py>, config: &Bound<'py, PyAny>, out: PathBuf, strict: bool) -> PyResult<Bound<'py, PyAny>> {
    let cfg: ExperimentConfig =
        serde_json::from_value(py_to_json(config)?).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let cmp = py.detach(|| harness::compare(&cfg, &out, strict)).map_err(err)?;
    json_to_py(py, &cmp.report)
}

#[pymodule]
fn mobo_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProblem>()?;
    m.add_class::<PyGp>()?;
    m.add_function(wrap_pyfunction!(dscnn_size_bytes, m)?)?;
    m.add_function(wrap_pyfunction!(hypervolume, m)?)?;
    m.add_function(wrap_pyfunction!(non_dominated, m)?)?;
    m.add_function(wrap_pyfunction!(generational_distance, m)?)?;
    m.add_function(wrap_pyfunction!(ehvi, m)?)?;
    m.add_function(wrap_pyfunction!(kruskal_wallis, m)?)?;
    m.add_function(wrap_pyfunction!(dunn_holm, m)?)?;
    m.add_function(wrap_pyfunction!(holm_adjust, m)?)?;
    m.add_function(wrap_pyfunction!(run_mobo, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add("OUTPUT_ENV", harness::OUTPUT_ENV)?;
    Ok(())
}
