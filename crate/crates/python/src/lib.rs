//! Python bindings: `import lopcut_py`.
//!
//! Rationals go in as anything whose `str()` parses (`int`, `Fraction`,
//! `"3/2"`) and come back as `fractions.Fraction`.

use lopcut::facets::{facet_cuts_for_vertex, DEFAULT_ORACLE_BUDGET};
use lopcut::numerics::{format_rational, parse_rational, Rational};
use lopcut::oracle::ScanMode;
use lopcut::relaxation::{InequalityJson, RowOrigin};
use lopcut::solver::SolveReportJson;
use lopcut::vertex::ProfileJson;
use lopcut::{
    adjacent_integer_vertices, brute_force_opt, build_bn, classify_vertex, facet_dimension, fence_point,
    is_vertex, lp_solve, parse_instance, permutation_value, random_instance, serialize_instance, solve,
    validate_inequality, Direction, LinearInequality, LopInstance, Permutation, SolverConfig,
};
use pyo3::exceptions::{PyOverflowError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: lopcut::error::Error) -> PyErr {
    match e {
        lopcut::error::Error::Scale(_) => PyOverflowError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn fraction<'py>(py: Python<'py>, v: &Rational) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?.getattr("Fraction")?.call1((format_rational(v),))
}

fn fractions<'py>(py: Python<'py>, xs: &[Rational]) -> PyResult<Vec<Bound<'py, PyAny>>> {
    xs.iter().map(|v| fraction(py, v)).collect()
}

fn rationals(xs: &[Bound<'_, PyAny>]) -> PyResult<Vec<Rational>> {
    xs.iter()
        .map(|o| parse_rational(&o.str()?.to_string()).map_err(err))
        .collect()
}

fn order(p: &Permutation) -> Vec<usize> {
    p.order().to_vec()
}

#[pyclass(name = "Instance", module = "lopcut_py", frozen)]
struct PyInstance(LopInstance);

#[pymethods]
impl PyInstance {
    #[new]
    #[pyo3(signature = (costs, name = "instance"))]
    fn new(costs: Vec<Vec<i64>>, name: &str) -> PyResult<Self> {
        LopInstance::new(costs, name).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (n, seed, lo = 0, hi = 99))]
    fn random(n: usize, seed: u64, lo: i64, hi: i64) -> PyResult<Self> {
        random_instance(n, seed, lo..=hi).map(Self).map_err(err)
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        parse_instance(text).map(Self).map_err(err)
    }

    fn to_text(&self) -> String {
        serialize_instance(&self.0)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n
    }

    fn cost(&self, i: usize, j: usize) -> PyResult<i64> {
        if i >= self.0.n || j >= self.0.n {
            return Err(PyValueError::new_err("index out of range"));
        }
        Ok(self.0.cost(i, j))
    }

    /// Objective value of a zero-based ordering.
    fn value(&self, order: Vec<usize>) -> PyResult<i64> {
        let p = Permutation::new(order).map_err(err)?;
        if p.len() != self.0.n {
            return Err(PyValueError::new_err("ordering length differs from n"));
        }
        Ok(permutation_value(&self.0, &p))
    }

    /// Exhaustive optimum as `(order, value)`.
    fn brute_force(&self) -> PyResult<(Vec<usize>, i64)> {
        let r = brute_force_opt(&self.0).map_err(err)?;
        Ok((order(&r.best_permutation), r.best_value))
    }

    fn __repr__(&self) -> String {
        format!("Instance(n={}, name={:?})", self.0.n, self.0.name)
    }
}

#[pyclass(name = "Inequality", module = "lopcut_py", frozen)]
struct PyInequality {
    inner: LinearInequality,
    n: usize,
}

#[pymethods]
impl PyInequality {
    #[new]
    #[pyo3(signature = (n, coeffs, upper = None, lower = None))]
    fn new(
        n: usize,
        coeffs: Vec<Bound<'_, PyAny>>,
        upper: Option<Bound<'_, PyAny>>,
        lower: Option<Bound<'_, PyAny>>,
    ) -> PyResult<Self> {
        let coeffs = rationals(&coeffs)?;
        if coeffs.len() != n * n.saturating_sub(1) / 2 {
            return Err(PyValueError::new_err("need one coefficient per pair i < j"));
        }
        let one = |o: Option<Bound<'_, PyAny>>| -> PyResult<Option<Rational>> {
            o.map(|o| rationals(&[o]).map(|mut v| v.remove(0))).transpose()
        };
        Ok(Self {
            inner: LinearInequality::new(coeffs, one(lower)?, one(upper)?, RowOrigin::HullCut).map_err(err)?,
            n,
        })
    }

    #[staticmethod]
    fn fence(i_list: Vec<usize>, j_list: Vec<usize>, n: usize) -> PyResult<Self> {
        let inner = lopcut::fence_inequality(&i_list, &j_list, n).map_err(err)?;
        Ok(Self { inner, n })
    }

    #[getter]
    fn n(&self) -> usize {
        self.n
    }

    #[getter]
    fn coeffs<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyAny>>> {
        fractions(py, &self.inner.coeffs)
    }

    #[getter]
    fn upper<'py>(&self, py: Python<'py>) -> PyResult<Option<Bound<'py, PyAny>>> {
        self.inner.upper.as_ref().map(|v| fraction(py, v)).transpose()
    }

    #[getter]
    fn lower<'py>(&self, py: Python<'py>) -> PyResult<Option<Bound<'py, PyAny>>> {
        self.inner.lower.as_ref().map(|v| fraction(py, v)).transpose()
    }

    fn evaluate<'py>(&self, py: Python<'py>, x: Vec<Bound<'py, PyAny>>) -> PyResult<Bound<'py, PyAny>> {
        let v = lopcut::relaxation::evaluate(&self.inner, &rationals(&x)?).map_err(err)?;
        fraction(py, &v)
    }

    fn is_satisfied(&self, x: Vec<Bound<'_, PyAny>>) -> PyResult<bool> {
        let v = lopcut::relaxation::evaluate(&self.inner, &rationals(&x)?).map_err(err)?;
        Ok(self.inner.is_satisfied(&v))
    }

    /// Oracle check over all orderings (sampled above n = 8).
    fn validate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let v = validate_inequality(&self.inner, self.n).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("valid", v.valid)?;
        d.set_item("max_lhs", fraction(py, &v.max_lhs)?)?;
        d.set_item("min_lhs", fraction(py, &v.min_lhs)?)?;
        d.set_item("tight_count", v.tight_count)?;
        d.set_item("exhaustive", v.mode == ScanMode::Exhaustive)?;
        Ok(d)
    }

    fn facet_dimension(&self) -> PyResult<usize> {
        facet_dimension(&self.inner, self.n).map(|d| d.dimension).map_err(err)
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&InequalityJson::from_inequality(&self.inner, self.n)).expect("plain data")
    }

    fn __repr__(&self) -> String {
        format!(
            "Inequality(n={}, terms={}, upper={:?})",
            self.n,
            self.inner.coeffs.iter().filter(|c| !num_traits::Zero::is_zero(*c)).count(),
            self.inner.upper.as_ref().map(format_rational)
        )
    }
}

#[pyclass(name = "SolveReport", module = "lopcut_py", frozen)]
struct PySolveReport(lopcut::SolveReport);

#[pymethods]
impl PySolveReport {
    #[getter]
    fn status(&self) -> String {
        format!("{:?}", self.0.status)
    }

    #[getter]
    fn best_bound<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, &self.0.best_bound)
    }

    #[getter]
    fn incumbent(&self) -> Option<(Vec<usize>, i64)> {
        self.0.incumbent.as_ref().map(|(p, v)| (order(p), *v))
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.0.iterations.len()
    }

    #[getter]
    fn cuts(&self) -> Vec<PyInequality> {
        self.0
            .cut_pool_final
            .iter()
            .map(|c| PyInequality {
                inner: c.clone(),
                n: self.0.n,
            })
            .collect()
    }

    fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SolveReportJson::from(&self.0)).expect("plain data")
    }
}

#[pyfunction]
#[pyo3(name = "solve", signature = (instance, max_iterations = 50, reduce = true))]
fn py_solve(instance: &PyInstance, max_iterations: usize, reduce: bool) -> PySolveReport {
    let cfg = SolverConfig {
        max_iterations,
        reduction_enabled: reduce,
        ..SolverConfig::default()
    };
    PySolveReport(solve(&instance.0, &cfg))
}

/// Fence point of order `m` on `2m` nodes.
#[pyfunction]
#[pyo3(name = "fence_point")]
fn py_fence_point(py: Python<'_>, m: usize) -> PyResult<Vec<Bound<'_, PyAny>>> {
    if m < 3 {
        return Err(PyValueError::new_err("fence needs m >= 3"));
    }
    fractions(py, &fence_point(m).0)
}

/// Maximizes `c . x` over the triangle relaxation on `n` nodes.
#[pyfunction]
fn lp_max<'py>(py: Python<'py>, n: usize, c: Vec<Bound<'py, PyAny>>) -> PyResult<Vec<Bound<'py, PyAny>>> {
    let sys = build_bn(n).map_err(err)?;
    let sol = lp_solve(&sys, &rationals(&c)?, Direction::Max).map_err(err)?;
    fractions(py, &sol.x)
}

#[pyfunction]
#[pyo3(name = "is_vertex")]
fn py_is_vertex(n: usize, x: Vec<Bound<'_, PyAny>>) -> PyResult<bool> {
    is_vertex(&build_bn(n).map_err(err)?, &rationals(&x)?).map_err(err)
}

/// Orderings whose 0/1 points are adjacent to the vertex `x`.
#[pyfunction]
fn adjacent_orderings(n: usize, x: Vec<Bound<'_, PyAny>>) -> PyResult<Vec<Vec<usize>>> {
    let sys = build_bn(n).map_err(err)?;
    let adj = adjacent_integer_vertices(&sys, &rationals(&x)?).map_err(err)?;
    Ok(adj.iter().map(order).collect())
}

/// Vertex profile as a JSON string.
#[pyfunction]
fn analyze(n: usize, x: Vec<Bound<'_, PyAny>>) -> PyResult<String> {
    let sys = build_bn(n).map_err(err)?;
    let p = classify_vertex(&sys, &rationals(&x)?).map_err(err)?;
    Ok(serde_json::to_string_pretty(&ProfileJson::from(&p)).expect("plain data"))
}

/// Verified cuts separating a half-integral vertex.
#[pyfunction]
#[pyo3(signature = (n, x, oracle_budget = DEFAULT_ORACLE_BUDGET))]
fn facet_cuts(n: usize, x: Vec<Bound<'_, PyAny>>, oracle_budget: usize) -> PyResult<Vec<PyInequality>> {
    let sys = build_bn(n).map_err(err)?;
    let bundle = facet_cuts_for_vertex(&sys, &rationals(&x)?, oracle_budget).map_err(err)?;
    Ok(bundle
        .cuts
        .into_iter()
        .map(|c| PyInequality { inner: c.cut, n })
        .collect())
}

#[pymodule]
fn lopcut_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PyInequality>()?;
    m.add_class::<PySolveReport>()?;
    m.add_function(wrap_pyfunction!(py_solve, m)?)?;
    m.add_function(wrap_pyfunction!(py_fence_point, m)?)?;
    m.add_function(wrap_pyfunction!(lp_max, m)?)?;
    m.add_function(wrap_pyfunction!(py_is_vertex, m)?)?;
    m.add_function(wrap_pyfunction!(adjacent_orderings, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(facet_cuts, m)?)?;
    Ok(())
}
