//! Python bindings, importable as `kle`.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;

use kle_core::chi::ChiConfig;
use kle_core::harness::{
    self, BiasScanOptions, ChiRequest, ChiSource, CoverageOptions, EstimateOptions,
    DEFAULT_CHI_DRAWS, DEFAULT_POWER_Z,
};
use kle_core::rng::{stream, Domain};
use kle_core::{geometry, nn, richardson, Error, NormKind};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse_norm(norm: &str) -> PyResult<NormKind> {
    norm.parse().map_err(to_py)
}

fn json_to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| to_py(e.into()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A sample of points in R^d tagged with a norm.
#[pyclass(name = "SampleSet", module = "kle", skip_from_py_object)]
#[derive(Clone)]
struct PySampleSet {
    inner: nn::SampleSet,
}

#[pymethods]
impl PySampleSet {
    #[new]
    #[pyo3(signature = (rows, norm = "l2"))]
    fn new(rows: Vec<Vec<f64>>, norm: &str) -> PyResult<Self> {
        let norm = parse_norm(norm)?;
        let inner = nn::SampleSet::from_rows(&rows, norm).map_err(to_py)?;
        Ok(PySampleSet { inner })
    }

    /// Reads a CSV file with an optional header.
    #[staticmethod]
    #[pyo3(signature = (path, norm = "l2"))]
    fn from_csv(path: &str, norm: &str) -> PyResult<Self> {
        let inner = harness::read_csv_path(path.as_ref(), parse_norm(norm)?).map_err(to_py)?;
        Ok(PySampleSet { inner })
    }

    fn to_csv(&self, path: &str) -> PyResult<()> {
        let file = std::fs::File::create(path)?;
        harness::write_csv(file, &self.inner).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn norm(&self) -> &'static str {
        self.inner.norm().as_str()
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner.rows().map(|r| r.to_vec()).collect()
    }

    fn with_norm(&self, norm: &str) -> PyResult<Self> {
        Ok(PySampleSet {
            inner: self.inner.clone().with_norm(parse_norm(norm)?),
        })
    }

    /// Nearest-neighbor distance of every point.
    fn nn_distances(&self, py: Python<'_>) -> PyResult<Vec<f64>> {
        let s = &self.inner;
        Ok(py.detach(|| nn::nn_distances(s)).map_err(to_py)?.r)
    }

    /// Entropy estimate with a confidence interval. `chi` overrides the
    /// bundled table; missing entries are computed by Monte Carlo.
    #[pyo3(signature = (alpha = 0.05, chi = None, extrapolate = false, seed = 0, chi_draws = DEFAULT_CHI_DRAWS))]
    fn estimate<'py>(
        &self,
        py: Python<'py>,
        alpha: f64,
        chi: Option<f64>,
        extrapolate: bool,
        seed: u64,
        chi_draws: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let opts = EstimateOptions {
            alpha,
            extrapolate,
            chi: ChiRequest {
                value: chi,
                draws: chi_draws,
                ..ChiRequest::default()
            },
            seed,
            bits: false,
        };
        let s = &self.inner;
        let report = py
            .detach(|| harness::cmd_estimate(s, &opts))
            .map_err(to_py)?;
        json_to_py(py, &report)
    }

    fn __repr__(&self) -> String {
        format!(
            "SampleSet(len={}, dim={}, norm='{}')",
            self.inner.len(),
            self.inner.dim(),
            self.inner.norm()
        )
    }
}

/// One of the example densities, built from its JSON description.
#[pyclass(name = "DensityModel", module = "kle")]
struct PyDensityModel {
    inner: kle_core::DensityModel,
}

#[pymethods]
impl PyDensityModel {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        let inner = kle_core::DensityModel::from_json(spec).map_err(to_py)?;
        Ok(PyDensityModel { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.inner.family().name()
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings().to_vec()
    }

    fn spec<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner.spec())
    }

    #[pyo3(signature = (count, seed = 0))]
    fn sample(&self, py: Python<'_>, count: usize, seed: u64) -> PySampleSet {
        let m = &self.inner;
        let inner = py.detach(|| m.sample(count, &mut stream(seed, Domain::Sample, 0)));
        PySampleSet { inner }
    }

    fn log_density(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.log_density(&x).map_err(to_py)
    }

    fn reference_entropy<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner.reference_entropy())
    }

    fn reference_sigma2<'py>(&self, py: Python<'py>, chi_d: f64) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner.reference_sigma2(chi_d))
    }

    #[pyo3(signature = (norm = "l2"))]
    fn leading_bias_coefficient<'py>(
        &self,
        py: Python<'py>,
        norm: &str,
    ) -> PyResult<Bound<'py, PyAny>> {
        let c = self
            .inner
            .leading_bias_coefficient(parse_norm(norm)?)
            .map_err(to_py)?;
        json_to_py(py, &c)
    }

    fn __repr__(&self) -> String {
        format!(
            "DensityModel({})",
            serde_json::to_string(&self.inner.spec()).unwrap_or_default()
        )
    }
}

#[pyfunction]
#[pyo3(signature = (d, norm = "l2"))]
fn unit_ball_volume(d: usize, norm: &str) -> PyResult<f64> {
    geometry::unit_ball_volume(d, parse_norm(norm)?).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (x, y, norm = "l2"))]
fn distance(x: Vec<f64>, y: Vec<f64>, norm: &str) -> PyResult<f64> {
    geometry::distance(&x, &y, parse_norm(norm)?).map_err(to_py)
}

/// Volume of `B(0, r) ∩ B(y, s)`.
#[pyfunction]
#[pyo3(signature = (r, s, y, norm = "l2"))]
fn intersection_volume(r: f64, s: f64, y: Vec<f64>, norm: &str) -> PyResult<f64> {
    geometry::intersection_volume(r, s, &y, parse_norm(norm)?).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (d, norm = "l2"))]
fn bundled_chi(d: usize, norm: &str) -> PyResult<Option<f64>> {
    Ok(kle_core::bundled_chi(d, parse_norm(norm)?))
}

/// Monte-Carlo estimate of `chi_d`.
#[pyfunction]
#[pyo3(signature = (d, norm = "l2", draws = DEFAULT_CHI_DRAWS, seed = 0, proposal_shape = 1.0))]
fn chi<'py>(
    py: Python<'py>,
    d: usize,
    norm: &str,
    draws: u64,
    seed: u64,
    proposal_shape: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let norm = parse_norm(norm)?;
    let cfg = ChiConfig {
        proposal_shape,
        ..ChiConfig::new(draws, seed)
    };
    let est = py
        .detach(|| kle_core::chi_with(d, norm, &cfg))
        .map_err(to_py)?;
    json_to_py(py, &est)
}

/// The Richardson plan for dimension `d` and `N + 1` points.
#[pyfunction]
fn plan<'py>(py: Python<'py>, d: usize, big_n: usize) -> PyResult<Bound<'py, PyAny>> {
    let p = richardson::plan(d, big_n).map_err(to_py)?;
    let out = pyo3::types::PyDict::new(py);
    out.set_item("d", d)?;
    out.set_item("ell", p.ell())?;
    out.set_item("alphas", p.alphas().to_vec())?;
    out.set_item("n", p.n())?;
    out.set_item("subsample_sizes", p.subsample_sizes().to_vec())?;
    out.set_item("a_d", p.a_d())?;
    Ok(out.into_any())
}

#[pyfunction]
#[pyo3(signature = (model, n, replicates, alpha = 0.05, norm = "l2", extrapolate = false, seed = 0, chi = None))]
#[allow(clippy::too_many_arguments)]
fn coverage<'py>(
    py: Python<'py>,
    model: &PyDensityModel,
    n: usize,
    replicates: usize,
    alpha: f64,
    norm: &str,
    extrapolate: bool,
    seed: u64,
    chi: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = CoverageOptions {
        points: n,
        replicates,
        alpha,
        norm: parse_norm(norm)?,
        extrapolate,
        seed,
        chi: ChiRequest {
            value: chi,
            source: ChiSource::Auto,
            ..ChiRequest::default()
        },
    };
    let m = &model.inner;
    let report = py
        .detach(|| harness::cmd_coverage(m, &opts))
        .map_err(to_py)?;
    json_to_py(py, &report)
}

#[pyfunction]
#[pyo3(signature = (model, sizes, replicates, norm = "l2", extrapolate = false, seed = 0, power_z = DEFAULT_POWER_Z))]
#[allow(clippy::too_many_arguments)]
fn bias_scan<'py>(
    py: Python<'py>,
    model: &PyDensityModel,
    sizes: Vec<usize>,
    replicates: usize,
    norm: &str,
    extrapolate: bool,
    seed: u64,
    power_z: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = BiasScanOptions {
        sizes,
        replicates,
        norm: parse_norm(norm)?,
        seed,
        extrapolate,
        power_z,
    };
    let m = &model.inner;
    let report = py
        .detach(|| harness::cmd_bias_scan(m, &opts))
        .map_err(to_py)?;
    json_to_py(py, &report)
}

#[pymodule]
fn kle(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySampleSet>()?;
    m.add_class::<PyDensityModel>()?;
    m.add_function(wrap_pyfunction!(unit_ball_volume, m)?)?;
    m.add_function(wrap_pyfunction!(distance, m)?)?;
    m.add_function(wrap_pyfunction!(intersection_volume, m)?)?;
    m.add_function(wrap_pyfunction!(bundled_chi, m)?)?;
    m.add_function(wrap_pyfunction!(chi, m)?)?;
    m.add_function(wrap_pyfunction!(plan, m)?)?;
    m.add_function(wrap_pyfunction!(coverage, m)?)?;
    m.add_function(wrap_pyfunction!(bias_scan, m)?)?;
    Ok(())
}
