//! Python bindings for the torsegeo differential-geometry engine.
//!
//! Exposes chart metrics, vector fields, curves with Frenet data, the
//! torse-forming classifier, the slant/torqued verification reports, and
//! the curve synthesis entry points. Reports are returned as plain Python
//! dictionaries mirroring the CLI's JSON schema.

use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use torsegeo::cli::report::{BranchBlock, FieldBlock, SlantBlock, TorquedBlock};
use torsegeo::cli::verify::paper_example_checks;
use torsegeo::curvegeo::{
    detect_special, frenet_apparatus, reparametrize_arclength, CurveSamples,
};
use torsegeo::fields::{classify_field, torse_forming_fit, FieldSpec};
use torsegeo::manifold::{sample_domain_points, ChartMetric};
use torsegeo::ode::OdeOptions;
use torsegeo::slant::{classify_euclidean_slant, ratio_law_check, slant_report};
use torsegeo::synthesis::{
    builtin_curve, frenet_integrate_in, synthesize_concircular, synthesize_slant_from_phi,
    ConcircularConfig, FrameInit, ScalarFunction, SlantSynthesisConfig,
};
use torsegeo::torqued::{concircular_ode_residual, torqued_report};

fn geo_err(e: torsegeo::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn vec_to_dvector(v: &[f64]) -> nalgebra::DVector<f64> {
    nalgebra::DVector::from_column_slice(v)
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        serde_json::Value::Null => py.None().into_bound(py),
        serde_json::Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.into_any()
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any()
            }
        }
        serde_json::Value::String(s) => s.into_pyobject(py)?.into_any(),
        serde_json::Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        serde_json::Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, val) in map {
                dict.set_item(k, json_to_py(py, val)?)?;
            }
            dict.into_any()
        }
    })
}

fn serialize_to_py<'py, T: serde::Serialize>(
    py: Python<'py>,
    v: &T,
) -> PyResult<Bound<'py, PyAny>> {
    let value = serde_json::to_value(v)
        .map_err(|e| PyValueError::new_err(format!("serialization failed: {e}")))?;
    json_to_py(py, &value)
}

/// A Riemannian metric on a coordinate chart.
#[pyclass(name = "Metric")]
struct PyMetric {
    inner: Arc<ChartMetric>,
}

#[pymethods]
impl PyMetric {
    #[new]
    #[pyo3(signature = (name, dim = 3, params = Vec::new()))]
    fn new(name: &str, dim: usize, params: Vec<f64>) -> PyResult<Self> {
        Ok(PyMetric {
            inner: Arc::new(ChartMetric::builtin(name, dim, &params).map_err(geo_err)?),
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    fn in_domain(&self, p: Vec<f64>) -> bool {
        self.inner.in_domain(&vec_to_dvector(&p))
    }

    fn components(&self, p: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        let g = self.inner.components(&vec_to_dvector(&p)).map_err(geo_err)?;
        Ok((0..g.nrows())
            .map(|i| (0..g.ncols()).map(|j| g[(i, j)]).collect())
            .collect())
    }

    fn inner_product(&self, p: Vec<f64>, u: Vec<f64>, v: Vec<f64>) -> PyResult<f64> {
        self.inner
            .inner(&vec_to_dvector(&p), &vec_to_dvector(&u), &vec_to_dvector(&v))
            .map_err(geo_err)
    }

    /// Christoffel symbols at p as a nested list Gamma[k][i][j].
    fn christoffel(&self, p: Vec<f64>) -> PyResult<Vec<Vec<Vec<f64>>>> {
        let c = self.inner.christoffel(&vec_to_dvector(&p)).map_err(geo_err)?;
        let m = self.inner.dim();
        Ok((0..m)
            .map(|k| {
                (0..m)
                    .map(|i| (0..m).map(|j| c.get(k, i, j)).collect())
                    .collect()
            })
            .collect())
    }

    /// Reproducible random points inside the metric domain.
    fn sample_points(&self, n: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
        let pts = sample_domain_points(&self.inner, n, seed).map_err(geo_err)?;
        Ok(pts.iter().map(|p| p.as_slice().to_vec()).collect())
    }
}

/// A vector field on a chart.
#[pyclass(name = "Field")]
struct PyField {
    inner: FieldSpec,
}

#[pymethods]
impl PyField {
    #[new]
    #[pyo3(signature = (name, metric, params = Vec::new()))]
    fn new(name: &str, metric: &PyMetric, params: Vec<f64>) -> PyResult<Self> {
        Ok(PyField {
            inner: FieldSpec::builtin(name, metric.inner.clone(), &params).map_err(geo_err)?,
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    fn eval(&self, p: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self
            .inner
            .eval(&vec_to_dvector(&p))
            .map_err(geo_err)?
            .as_slice()
            .to_vec())
    }

    /// Pointwise torse-forming fit: dict with rho, omega, w, residual.
    fn torse_forming_fit<'py>(&self, py: Python<'py>, p: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
        let fit = torse_forming_fit(&self.inner, &vec_to_dvector(&p)).map_err(geo_err)?;
        let d = PyDict::new(py);
        d.set_item("rho", fit.rho)?;
        d.set_item("omega", fit.omega.as_slice().to_vec())?;
        d.set_item("w", fit.w.as_slice().to_vec())?;
        d.set_item("omega_norm", fit.omega_norm)?;
        d.set_item("residual", fit.residual)?;
        Ok(d.into_any())
    }

    /// Classifies the field over the given sample points.
    #[pyo3(signature = (points, tol = 1e-6))]
    fn classify<'py>(
        &self,
        py: Python<'py>,
        points: Vec<Vec<f64>>,
        tol: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let pts: Vec<_> = points.iter().map(|p| vec_to_dvector(p)).collect();
        let rep = classify_field(&self.inner, &pts, tol).map_err(geo_err)?;
        serialize_to_py(py, &FieldBlock::from_report(&rep))
    }
}

/// A curve in a chart, optionally backed by closed forms.
#[pyclass(name = "Curve")]
struct PyCurve {
    inner: Arc<CurveSamples>,
}

#[pymethods]
impl PyCurve {
    /// Built-in closed-form curve (log_spiral, cone_loxodrome,
    /// circle_origin, hyperbolic_vertical_line, rectifying).
    #[staticmethod]
    #[pyo3(signature = (name, params = Vec::new(), n = 1201))]
    fn builtin(name: &str, params: Vec<f64>, n: usize) -> PyResult<Self> {
        Ok(PyCurve {
            inner: Arc::new(builtin_curve(name, &params, n).map_err(geo_err)?),
        })
    }

    /// Curve from raw samples on a chart.
    #[staticmethod]
    #[pyo3(signature = (metric, grid, points, arclength = false))]
    fn from_samples(
        metric: &PyMetric,
        grid: Vec<f64>,
        points: Vec<Vec<f64>>,
        arclength: bool,
    ) -> PyResult<Self> {
        let pts: Vec<_> = points.iter().map(|p| vec_to_dvector(p)).collect();
        Ok(PyCurve {
            inner: Arc::new(
                CurveSamples::from_points(metric.inner.clone(), grid, pts, arclength)
                    .map_err(geo_err)?,
            ),
        })
    }

    #[getter]
    fn grid(&self) -> Vec<f64> {
        self.inner.grid().to_vec()
    }

    #[getter]
    fn points(&self) -> Vec<Vec<f64>> {
        self.inner
            .points()
            .iter()
            .map(|p| p.as_slice().to_vec())
            .collect()
    }

    #[getter]
    fn is_arclength(&self) -> bool {
        self.inner.is_arclength()
    }

    /// Arc-length reparametrization with n output samples.
    fn reparametrize(&self, n: usize) -> PyResult<PyCurve> {
        Ok(PyCurve {
            inner: Arc::new(reparametrize_arclength(&self.inner, n).map_err(geo_err)?),
        })
    }

    /// Computes the Frenet apparatus (the curve must be unit speed).
    #[pyo3(signature = (rank_tol = 1e-7))]
    fn frenet(&self, rank_tol: f64) -> PyResult<PyFrenet> {
        let data = frenet_apparatus(&self.inner, rank_tol).map_err(geo_err)?;
        Ok(PyFrenet {
            curve: self.inner.clone(),
            inner: Arc::new(data),
        })
    }
}

/// Frenet data of a curve: frames, curvatures, detected order.
#[pyclass(name = "Frenet")]
struct PyFrenet {
    curve: Arc<CurveSamples>,
    inner: Arc<torsegeo::curvegeo::FrenetData>,
}

#[pymethods]
impl PyFrenet {
    #[getter]
    fn order(&self) -> usize {
        self.inner.order
    }

    #[getter]
    fn frame_len(&self) -> usize {
        self.inner.frame_len
    }

    #[getter]
    fn window(&self) -> (usize, usize) {
        (self.inner.window.lo, self.inner.window.hi)
    }

    #[getter]
    fn grid(&self) -> Vec<f64> {
        self.inner.grid.clone()
    }

    #[getter]
    fn orthonormality_defect(&self) -> f64 {
        self.inner.orthonormality_defect
    }

    /// Curvature series kappa_{i+1} (zero outside the window).
    fn curvature(&self, i: usize) -> PyResult<Vec<f64>> {
        if self.inner.frame_len < 2 || i >= self.inner.frame_len - 1 {
            return Err(PyValueError::new_err(format!(
                "curvature index {i} out of range"
            )));
        }
        Ok(self.inner.curvature_series(i))
    }

    /// Frame vectors at sample k.
    fn frame(&self, k: usize) -> PyResult<Vec<Vec<f64>>> {
        if !self.inner.window.contains(k) {
            return Err(PyValueError::new_err(format!(
                "sample {k} outside the valid window"
            )));
        }
        Ok(self.inner.frames[k]
            .iter()
            .map(|v| v.as_slice().to_vec())
            .collect())
    }

    /// Geodesic / circle / general-helix flags.
    #[pyo3(signature = (tol = 1e-6))]
    fn detect_special<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        let s = detect_special(&self.inner, tol).map_err(geo_err)?;
        let d = PyDict::new(py);
        d.set_item("geodesic", s.geodesic)?;
        d.set_item("max_kappa1", s.max_kappa1)?;
        match &s.circle {
            Some(c) => {
                let cd = PyDict::new(py);
                cd.set_item("r_constant", c.r_constant)?;
                cd.set_item("radius", c.radius)?;
                cd.set_item("kappa_deviation", c.kappa_deviation)?;
                cd.set_item("second_residual", c.second_residual)?;
                d.set_item("circle", cd)?;
            }
            None => d.set_item("circle", py.None())?,
        }
        match &s.general_helix {
            Some(h) => {
                let hd = PyDict::new(py);
                hd.set_item("ratio", h.ratio)?;
                hd.set_item("deviation", h.deviation)?;
                d.set_item("general_helix", hd)?;
            }
            None => d.set_item("general_helix", py.None())?,
        }
        Ok(d.into_any())
    }

    /// Anti-torqued slant helix report against an axis field.
    #[pyo3(signature = (axis, tol = 1e-6))]
    fn slant_report<'py>(
        &self,
        py: Python<'py>,
        axis: &PyField,
        tol: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let rep = slant_report(&self.curve, &self.inner, &axis.inner, tol).map_err(geo_err)?;
        let ratio = if rep.cos_theta.abs() < tol && self.inner.order == 3 {
            ratio_law_check(&self.inner, &rep, tol).ok()
        } else {
            None
        };
        serialize_to_py(py, &SlantBlock::from_report(&rep, ratio))
    }

    /// Torqued-curve report against a torqued/concircular field.
    #[pyo3(signature = (field, tol = 1e-6))]
    fn torqued_report<'py>(
        &self,
        py: Python<'py>,
        field: &PyField,
        tol: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let rep = torqued_report(&self.curve, &self.inner, &field.inner, tol).map_err(geo_err)?;
        let ode = if rep.case == torsegeo::torqued::TorquedCase::General && self.inner.order == 3 {
            concircular_ode_residual(&self.inner, &rep.rho, rep.theta_hat).ok()
        } else {
            None
        };
        serialize_to_py(py, &TorquedBlock::from_report(&rep, ode))
    }

    /// Euclidean radial-axis branch classification.
    #[pyo3(signature = (tol = 1e-6))]
    fn classify_euclidean_slant<'py>(
        &self,
        py: Python<'py>,
        tol: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let rep = classify_euclidean_slant(&self.curve, &self.inner, tol).map_err(geo_err)?;
        serialize_to_py(py, &BranchBlock::from_report(&rep))
    }
}

/// Reconstructs a curve from curvature and torsion callables.
#[pyfunction]
#[pyo3(signature = (kappa, tau, point, s0, s1, n = 801, metric = None))]
fn frenet_integrate(
    py: Python<'_>,
    kappa: Py<PyAny>,
    tau: Py<PyAny>,
    point: Vec<f64>,
    s0: f64,
    s1: f64,
    n: usize,
    metric: Option<&PyMetric>,
) -> PyResult<PyCurve> {
    let metric = match metric {
        Some(m) => m.inner.clone(),
        None => Arc::new(ChartMetric::builtin("euclidean", 3, &[]).map_err(geo_err)?),
    };
    let kap = move |s: f64| -> f64 {
        Python::attach(|py| {
            kappa
                .call1(py, (s,))
                .and_then(|v| v.extract::<f64>(py))
                .unwrap_or(f64::NAN)
        })
    };
    let ta = move |s: f64| -> f64 {
        Python::attach(|py| {
            tau.call1(py, (s,))
                .and_then(|v| v.extract::<f64>(py))
                .unwrap_or(f64::NAN)
        })
    };
    let init = FrameInit::canonical(vec_to_dvector(&point));
    let out = py
        .detach(move || {
            frenet_integrate_in(
                metric,
                Arc::new(kap),
                Arc::new(ta),
                &init,
                (s0, s1),
                n,
                &OdeOptions::default(),
            )
        })
        .map_err(geo_err)?;
    Ok(PyCurve {
        inner: Arc::new(out.curve),
    })
}

/// Synthesizes an anti-torqued slant helix from a distance function.
#[pyfunction]
#[pyo3(signature = (theta, phi_kind, phi_params, s0, s1, tau0 = None, n = 801))]
fn synthesize_slant<'py>(
    py: Python<'py>,
    theta: f64,
    phi_kind: &str,
    phi_params: Vec<f64>,
    s0: f64,
    s1: f64,
    tau0: Option<f64>,
    n: usize,
) -> PyResult<(PyCurve, Bound<'py, PyAny>)> {
    let phi = match (phi_kind, phi_params.len()) {
        ("affine", 2) => ScalarFunction::affine(phi_params[0], phi_params[1]),
        ("sqrt_quadratic", 3) => {
            ScalarFunction::sqrt_quadratic(phi_params[0], phi_params[1], phi_params[2])
        }
        _ => {
            return Err(PyValueError::new_err(
                "phi_kind must be 'affine' (2 params) or 'sqrt_quadratic' (3 params)",
            ))
        }
    };
    let cfg = SlantSynthesisConfig {
        theta,
        phi,
        tau0,
        s_range: (s0, s1),
        n_out: n,
        ode: OdeOptions::default(),
    };
    let out = synthesize_slant_from_phi(&cfg).map_err(geo_err)?;
    let d = PyDict::new(py);
    d.set_item("tau0", out.tau0)?;
    d.set_item("tau0_compatible", out.tau0_compatible)?;
    d.set_item("g0", out.g0)?;
    d.set_item("post_cos_deviation", out.post_cos_deviation)?;
    Ok((
        PyCurve {
            inner: Arc::new(out.curve),
        },
        d.into_any(),
    ))
}

/// Synthesizes a concircular curve from the coefficient laws.
#[pyfunction]
#[pyo3(signature = (theta, rho, f3_params, f1_0, s0, s1, n = 801))]
fn synthesize_concircular_curve<'py>(
    py: Python<'py>,
    theta: f64,
    rho: f64,
    f3_params: Vec<f64>,
    f1_0: f64,
    s0: f64,
    s1: f64,
    n: usize,
) -> PyResult<(PyCurve, PyField, Bound<'py, PyAny>)> {
    if f3_params.len() != 2 {
        return Err(PyValueError::new_err(
            "f3_params must be [a, b] for f3 = a + b s",
        ));
    }
    let cfg = ConcircularConfig {
        theta,
        rho,
        f3: ScalarFunction::affine(f3_params[0], f3_params[1]),
        f1_0,
        s_range: (s0, s1),
        n_out: n,
        ode: OdeOptions::default(),
    };
    let out = synthesize_concircular(&cfg).map_err(geo_err)?;
    let d = PyDict::new(py);
    d.set_item("degenerate_torsion_free", out.degenerate_torsion_free)?;
    d.set_item("post_theta_deviation", out.post_theta_deviation)?;
    d.set_item("kappa", out.kappa.clone())?;
    d.set_item("tau", out.tau.clone())?;
    Ok((
        PyCurve {
            inner: Arc::new(out.curve),
        },
        PyField { inner: out.field },
        d.into_any(),
    ))
}

/// Runs the built-in example verification suite; returns a list of checks.
#[pyfunction]
fn verify_examples(py: Python<'_>) -> PyResult<Bound<'_, PyAny>> {
    let checks = paper_example_checks().map_err(geo_err)?;
    serialize_to_py(py, &checks)
}

#[pymodule]
fn torsegeo_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMetric>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyCurve>()?;
    m.add_class::<PyFrenet>()?;
    m.add_function(wrap_pyfunction!(frenet_integrate, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize_slant, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize_concircular_curve, m)?)?;
    m.add_function(wrap_pyfunction!(verify_examples, m)?)?;
    Ok(())
}
