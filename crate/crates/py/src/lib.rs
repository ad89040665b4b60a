//! Python bindings: site parameters, weights, chaos vectors and the main
//! checks, exchanged with Python as plain lists of floats.

use std::collections::BTreeMap;
use std::sync::Arc;

use bernoulli_dirichlet::{dirichlet, glauber, operators, semigroup, Error};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "SiteParams", frozen)]
struct PySiteParams(Arc<bernoulli_dirichlet::SiteParams>);

#[pymethods]
impl PySiteParams {
    #[new]
    fn new(p: Vec<f64>) -> PyResult<Self> {
        Ok(Self(bernoulli_dirichlet::SiteParams::new(p).map_err(py_err)?.shared()))
    }

    #[staticmethod]
    fn uniform(n: usize, p: f64) -> PyResult<Self> {
        Ok(Self(
            bernoulli_dirichlet::SiteParams::uniform(n, p).map_err(py_err)?.shared(),
        ))
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn p(&self) -> Vec<f64> {
        self.0.p().to_vec()
    }

    #[getter]
    fn q(&self) -> Vec<f64> {
        self.0.q().to_vec()
    }

    fn point_masses(&self) -> Vec<f64> {
        self.0.point_masses()
    }

    fn __repr__(&self) -> String {
        format!("SiteParams(p={:?})", self.0.p())
    }
}

#[pyclass(name = "WeightFunction", frozen)]
struct PyWeightFunction(bernoulli_dirichlet::WeightFunction);

#[pymethods]
impl PyWeightFunction {
    #[new]
    fn new(values: Vec<f64>) -> PyResult<Self> {
        Ok(Self(bernoulli_dirichlet::WeightFunction::new(values).map_err(py_err)?))
    }

    #[staticmethod]
    fn constant(n: usize, value: f64) -> PyResult<Self> {
        Ok(Self(
            bernoulli_dirichlet::WeightFunction::constant(n, value).map_err(py_err)?,
        ))
    }

    #[staticmethod]
    fn affine(n: usize, slope: f64, intercept: f64) -> PyResult<Self> {
        Ok(Self(
            bernoulli_dirichlet::WeightFunction::affine(n, slope, intercept).map_err(py_err)?,
        ))
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    /// `#_w(sigma)` for every subset, indexed by bitmask.
    fn counting_table(&self) -> Vec<f64> {
        self.0.counting_table().to_vec()
    }

    fn spectral_gap(&self) -> f64 {
        self.0.spectral_gap()
    }

    fn __repr__(&self) -> String {
        format!("WeightFunction({:?})", self.0.values())
    }
}

#[pyclass(name = "ChaosVector", frozen)]
struct PyChaosVector(bernoulli_dirichlet::ChaosVector);

#[pymethods]
impl PyChaosVector {
    #[new]
    fn new(params: &PySiteParams, coeffs: Vec<f64>) -> PyResult<Self> {
        Ok(Self(
            bernoulli_dirichlet::ChaosVector::new(params.0.clone(), coeffs).map_err(py_err)?,
        ))
    }

    /// The functional with the given values at the sample points.
    #[staticmethod]
    fn from_pointwise(params: &PySiteParams, values: Vec<f64>) -> PyResult<Self> {
        let v = bernoulli_dirichlet::PointwiseVector::new(params.0.clone(), values).map_err(py_err)?;
        Ok(Self(v.to_chaos()))
    }

    #[staticmethod]
    fn basis(params: &PySiteParams, sigma: usize) -> PyResult<Self> {
        Ok(Self(
            bernoulli_dirichlet::ChaosVector::basis(params.0.clone(), sigma).map_err(py_err)?,
        ))
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn coeffs(&self) -> Vec<f64> {
        self.0.coeffs().to_vec()
    }

    fn to_pointwise(&self) -> Vec<f64> {
        self.0.to_pointwise().into_values()
    }

    fn norm(&self) -> f64 {
        self.0.norm()
    }

    fn inner_product(&self, other: &Self) -> PyResult<f64> {
        self.0.inner_product(&other.0).map_err(py_err)
    }

    fn annihilate(&self, site: usize) -> PyResult<Self> {
        operators::annihilate(&self.0, site).map(Self).map_err(py_err)
    }

    fn create(&self, site: usize) -> PyResult<Self> {
        operators::create(&self.0, site).map(Self).map_err(py_err)
    }

    fn number_operator(&self, w: &PyWeightFunction) -> PyResult<Self> {
        operators::number_operator(&self.0, &w.0).map(Self).map_err(py_err)
    }

    fn energy_form(&self, other: &Self, w: &PyWeightFunction) -> PyResult<f64> {
        dirichlet::energy_form(&self.0, &other.0, &w.0).map_err(py_err)
    }

    fn energy_norm_squared(&self, w: &PyWeightFunction) -> PyResult<f64> {
        dirichlet::energy_norm_squared(&self.0, &w.0).map_err(py_err)
    }

    fn evolve(&self, w: &PyWeightFunction, t: f64) -> PyResult<Self> {
        let q = semigroup::SemigroupQuery::new(t, w.0.clone()).map_err(py_err)?;
        semigroup::evolve(&self.0, &q).map(Self).map_err(py_err)
    }

    /// `C ∘ x` for a catalog contraction such as `"abs"` or `"scaled(0.5)"`.
    fn apply_contraction(&self, name: &str) -> PyResult<Self> {
        let c = dirichlet::ContractionFunction::by_name(name).map_err(py_err)?;
        dirichlet::apply_contraction(&self.0, &c).map(Self).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("ChaosVector(n={}, coeffs={:?})", self.0.n(), self.0.coeffs())
    }
}

/// Largest deviation of each anti-commutation identity for the pair `(j, k)`.
#[pyfunction]
fn check_car(params: &PySiteParams, j: usize, k: usize) -> PyResult<BTreeMap<&'static str, f64>> {
    let report = operators::check_car(&params.0, j, k).map_err(py_err)?;
    Ok(report
        .deviations
        .iter()
        .map(|d| (d.identity.name(), d.max_abs_deviation))
        .collect())
}

/// `(E_w(C∘x, C∘x), E_w(x, x), passed)` for a catalog contraction.
#[pyfunction]
fn verify_contraction(x: &PyChaosVector, name: &str, w: &PyWeightFunction) -> PyResult<(f64, f64, bool)> {
    let c = dirichlet::ContractionFunction::by_name(name).map_err(py_err)?;
    let r = dirichlet::verify_contraction_property(&x.0, &c, &w.0).map_err(py_err)?;
    Ok((r.lhs, r.rhs, r.passed()))
}

/// `(min, max, passed)` of `P_t x` for a `[0, 1]`-valued `x`.
#[pyfunction]
fn check_markov(x: &PyChaosVector, w: &PyWeightFunction, t: f64) -> PyResult<(f64, f64, bool)> {
    let q = semigroup::SemigroupQuery::new(t, w.0.clone()).map_err(py_err)?;
    let r = semigroup::check_markov_property(&x.0, &q).map_err(py_err)?;
    Ok((r.min_value, r.max_value, r.pass))
}

/// `(P_t x)(start)` evaluated spectrally; `start` is a point bitmask.
#[pyfunction]
fn spectral_value(x: &PyChaosVector, w: &PyWeightFunction, t: f64, start: u32) -> PyResult<f64> {
    let start = x.0.params().point(start).map_err(py_err)?;
    glauber::spectral_value(&x.0, &w.0, t, start).map_err(py_err)
}

/// Monte Carlo `(estimate, std_error)` of `(P_t x)(start)` from the refresh chain.
#[pyfunction]
#[pyo3(signature = (x, w, t, start, n_paths = 10_000, seed = 0))]
fn estimate_semigroup(
    py: Python<'_>,
    x: &PyChaosVector,
    w: &PyWeightFunction,
    t: f64,
    start: u32,
    n_paths: usize,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let params = x.0.params().clone();
    let start = params.point(start).map_err(py_err)?;
    let cfg = glauber::GlauberConfig::new(params, w.0.clone(), t, n_paths, seed).map_err(py_err)?;
    let mc = py
        .detach(|| glauber::estimate_semigroup(&cfg, &x.0, t, start))
        .map_err(py_err)?;
    Ok((mc.estimate, mc.std_error))
}

#[pymodule]
#[pyo3(name = "bernoulli_dirichlet")]
fn bernoulli_dirichlet_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySiteParams>()?;
    m.add_class::<PyWeightFunction>()?;
    m.add_class::<PyChaosVector>()?;
    m.add_function(wrap_pyfunction!(check_car, m)?)?;
    m.add_function(wrap_pyfunction!(verify_contraction, m)?)?;
    m.add_function(wrap_pyfunction!(check_markov, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_value, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_semigroup, m)?)?;
    Ok(())
}
