//! Vector fields on charts: pointwise torse-forming fits and
//! classification into concircular, recurrent, torqued and anti-torqued
//! fields.
//!
//! A field V is torse-forming when grad_X V = rho X + omega(X) V for all
//! tangent X. The fit assembles grad_{e_i} V over a g-orthonormal frame and
//! solves for (rho, omega) in least squares; the class label is the most
//! specific identity holding at every sample point.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::diff;
use crate::error::{Error, Result};
use crate::manifold::{ChartMetric, ChartPoint};

pub type FieldEvalFn = dyn Fn(&[f64]) -> DVector<f64> + Send + Sync;
pub type FieldJacFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;

/// Names accepted by [`FieldSpec::builtin`].
pub const BUILTIN_FIELDS: &[&str] = &[
    "radial_unit",
    "hyperbolic_em",
    "concircular_affine",
    "constant",
    "twisted_torqued",
];

/// A vector field on a chart, optionally with an analytic Jacobian.
#[derive(Clone)]
pub struct FieldSpec {
    metric: Arc<ChartMetric>,
    name: String,
    params: Vec<f64>,
    eval: Arc<FieldEvalFn>,
    jacobian: Option<Arc<FieldJacFn>>,
}

impl std::fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FieldSpec")
            .field("name", &self.name)
            .field("params", &self.params)
            .finish()
    }
}

impl FieldSpec {
    /// Constructs a built-in field on a compatible metric.
    ///
    /// * `radial_unit` — E/|E| on the punctured Euclidean chart.
    /// * `hyperbolic_em` — e_m = -x_m d/dx_m on the hyperbolic upper half
    ///   space (unit inward field, conformal scalar 1).
    /// * `concircular_affine` — V(x) = rho x + v on a flat chart;
    ///   params `[rho, v_1, ..., v_m]`.
    /// * `constant` — constant coordinate field; params are the components.
    /// * `twisted_torqued` — lambda(t) mu(x) d/dt on the warped interval
    ///   product, mu(x) = exp(q . x); params are the fiber coefficients q
    ///   (defaults to q = (1/2, 0, ...)).
    pub fn builtin(name: &str, metric: Arc<ChartMetric>, params: &[f64]) -> Result<FieldSpec> {
        let m = metric.dim();
        match name {
            "radial_unit" => {
                if metric.name() != "punctured_euclidean" {
                    return Err(Error::InvalidParameter(format!(
                        "radial_unit needs the punctured_euclidean metric, got `{}`",
                        metric.name()
                    )));
                }
                Ok(FieldSpec {
                    metric,
                    name: name.into(),
                    params: vec![],
                    eval: Arc::new(|p: &[f64]| {
                        let x = DVector::from_column_slice(p);
                        let r = x.norm();
                        x / r
                    }),
                    jacobian: Some(Arc::new(|p: &[f64]| {
                        let m = p.len();
                        let x = DVector::from_column_slice(p);
                        let r = x.norm();
                        DMatrix::from_fn(m, m, |i, j| {
                            let d = if i == j { 1.0 / r } else { 0.0 };
                            d - p[i] * p[j] / (r * r * r)
                        })
                    })),
                })
            }
            "hyperbolic_em" => {
                if metric.name() != "hyperbolic_upper_half" {
                    return Err(Error::InvalidParameter(format!(
                        "hyperbolic_em needs the hyperbolic_upper_half metric, got `{}`",
                        metric.name()
                    )));
                }
                Ok(FieldSpec {
                    metric,
                    name: name.into(),
                    params: vec![],
                    eval: Arc::new(|p: &[f64]| {
                        let m = p.len();
                        let mut v = DVector::zeros(m);
                        v[m - 1] = -p[m - 1];
                        v
                    }),
                    jacobian: Some(Arc::new(|p: &[f64]| {
                        let m = p.len();
                        let mut j = DMatrix::zeros(m, m);
                        j[(m - 1, m - 1)] = -1.0;
                        j
                    })),
                })
            }
            "concircular_affine" => {
                if metric.name() != "euclidean" && metric.name() != "punctured_euclidean" {
                    return Err(Error::InvalidParameter(format!(
                        "concircular_affine needs a flat chart, got `{}`",
                        metric.name()
                    )));
                }
                if params.len() != m + 1 {
                    return Err(Error::InvalidParameter(format!(
                        "concircular_affine takes [rho, v_1..v_{m}], got {} parameters",
                        params.len()
                    )));
                }
                let rho = params[0];
                let v = DVector::from_column_slice(&params[1..]);
                let v2 = v.clone();
                Ok(FieldSpec {
                    metric,
                    name: name.into(),
                    params: params.to_vec(),
                    eval: Arc::new(move |p: &[f64]| {
                        DVector::from_column_slice(p) * rho + &v
                    }),
                    jacobian: Some(Arc::new(move |p: &[f64]| {
                        let _ = &v2;
                        DMatrix::identity(p.len(), p.len()) * rho
                    })),
                })
            }
            "constant" => {
                if params.len() != m {
                    return Err(Error::InvalidParameter(format!(
                        "constant field takes {m} components, got {}",
                        params.len()
                    )));
                }
                let v = DVector::from_column_slice(params);
                Ok(FieldSpec {
                    metric,
                    name: name.into(),
                    params: params.to_vec(),
                    eval: Arc::new(move |_p: &[f64]| v.clone()),
                    jacobian: Some(Arc::new(|p: &[f64]| DMatrix::zeros(p.len(), p.len()))),
                })
            }
            "twisted_torqued" => {
                if metric.name() != "warped_interval_product" {
                    return Err(Error::InvalidParameter(format!(
                        "twisted_torqued needs the warped_interval_product metric, got `{}`",
                        metric.name()
                    )));
                }
                let q: Vec<f64> = if params.is_empty() {
                    let mut q = vec![0.0; m - 1];
                    q[0] = 0.5;
                    q
                } else if params.len() == m - 1 {
                    params.to_vec()
                } else {
                    return Err(Error::InvalidParameter(format!(
                        "twisted_torqued takes {} fiber coefficients, got {}",
                        m - 1,
                        params.len()
                    )));
                };
                let (a, b) = (metric.params()[0], metric.params()[1]);
                let q2 = q.clone();
                let q3 = q.clone();
                Ok(FieldSpec {
                    metric,
                    name: name.into(),
                    params: q,
                    eval: Arc::new(move |p: &[f64]| {
                        let lam = a * (b * p[0]).exp();
                        let mu = (q2
                            .iter()
                            .zip(&p[1..])
                            .map(|(qi, xi)| qi * xi)
                            .sum::<f64>())
                        .exp();
                        let mut v = DVector::zeros(p.len());
                        v[0] = lam * mu;
                        v
                    }),
                    jacobian: Some(Arc::new(move |p: &[f64]| {
                        let m = p.len();
                        let lam = a * (b * p[0]).exp();
                        let mu = (q3
                            .iter()
                            .zip(&p[1..])
                            .map(|(qi, xi)| qi * xi)
                            .sum::<f64>())
                        .exp();
                        let mut j = DMatrix::zeros(m, m);
                        j[(0, 0)] = b * lam * mu;
                        for (idx, qi) in q3.iter().enumerate() {
                            j[(0, idx + 1)] = lam * mu * qi;
                        }
                        j
                    })),
                })
            }
            other => Err(Error::UnknownBuiltin(other.to_string())),
        }
    }

    /// Wraps a user-supplied evaluation callback (finite-difference Jacobian).
    pub fn custom(metric: Arc<ChartMetric>, eval: Arc<FieldEvalFn>) -> FieldSpec {
        FieldSpec {
            metric,
            name: "custom".into(),
            params: vec![],
            eval,
            jacobian: None,
        }
    }

    pub fn with_jacobian(mut self, jacobian: Arc<FieldJacFn>) -> Self {
        self.jacobian = Some(jacobian);
        self
    }

    pub fn metric(&self) -> &Arc<ChartMetric> {
        &self.metric
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    /// Field value at `p` (domain-checked).
    pub fn eval(&self, p: &ChartPoint) -> Result<DVector<f64>> {
        if !self.metric.in_domain(p) {
            return Err(Error::DomainViolation {
                point: p.as_slice().to_vec(),
                context: format!("field `{}`", self.name),
            });
        }
        Ok((self.eval)(p.as_slice()))
    }

    /// Jacobian dV^i/dx_j at `p`: analytic when attached, otherwise central
    /// finite differences with domain-checked stencils.
    pub fn jacobian(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        if !self.metric.in_domain(p) {
            return Err(Error::DomainViolation {
                point: p.as_slice().to_vec(),
                context: format!("field `{}` Jacobian", self.name),
            });
        }
        if let Some(j) = &self.jacobian {
            return Ok(j(p.as_slice()));
        }
        let m = self.metric.dim();
        let mut out = DMatrix::zeros(m, m);
        let mut q = p.clone();
        for j in 0..m {
            let h = diff::fd_step(p[j]);
            q[j] = p[j] + h;
            if !self.metric.in_domain(&q) {
                return Err(Error::StencilOutOfDomain {
                    point: p.as_slice().to_vec(),
                });
            }
            let vp = (self.eval)(q.as_slice());
            q[j] = p[j] - h;
            if !self.metric.in_domain(&q) {
                return Err(Error::StencilOutOfDomain {
                    point: p.as_slice().to_vec(),
                });
            }
            let vm = (self.eval)(q.as_slice());
            q[j] = p[j];
            let col = (vp - vm) / (2.0 * h);
            for i in 0..m {
                out[(i, j)] = col[i];
            }
        }
        Ok(out)
    }

    /// Covariant derivative grad_x V at `p`.
    pub fn nabla(&self, p: &ChartPoint, x: &DVector<f64>) -> Result<DVector<f64>> {
        let jac = self.jacobian(p)?;
        let gamma = self.metric.christoffel(p)?;
        let v = self.eval(p)?;
        Ok(&jac * x + gamma.contract(x, &v))
    }
}

/// Result of a pointwise torse-forming fit.
#[derive(Debug, Clone)]
pub struct TorseFit {
    /// Fitted conformal scalar.
    pub rho: f64,
    /// Generating form in chart components (omega_j).
    pub omega: DVector<f64>,
    /// Generative vector (metric dual of omega).
    pub w: DVector<f64>,
    /// Norm of omega (= |W|_g).
    pub omega_norm: f64,
    /// Least-squares residual of grad V - rho I - omega (x) V over the frame.
    pub residual: f64,
}

/// Fits the torse-forming equation grad_X V = rho X + omega(X) V at `p`.
///
/// The overdetermined system (m^2 equations, m+1 unknowns) is expressed in
/// a g-orthonormal frame so the residual norm is metric-invariant.
pub fn torse_forming_fit(field: &FieldSpec, p: &ChartPoint) -> Result<TorseFit> {
    let metric = field.metric();
    let m = metric.dim();
    let v = field.eval(p)?;
    let g = metric.components(p)?;
    let vnorm = ((v.transpose() * &g * &v)[(0, 0)]).max(0.0).sqrt();
    if vnorm < 1e-14 {
        return Err(Error::ZeroField {
            point: p.as_slice().to_vec(),
        });
    }
    let frame = metric.orthonormal_frame(p)?;
    let ip = |u: &DVector<f64>, w: &DVector<f64>| (u.transpose() * &g * w)[(0, 0)];

    let mut a = DMatrix::zeros(m * m, m + 1);
    let mut b = DVector::zeros(m * m);
    for i in 0..m {
        let dv = field.nabla(p, &frame[i])?;
        for j in 0..m {
            let row = i * m + j;
            b[row] = ip(&dv, &frame[j]);
            a[(row, 0)] = if i == j { 1.0 } else { 0.0 };
            a[(row, i + 1)] = ip(&v, &frame[j]);
        }
    }
    let svd = nalgebra::SVD::new(a.clone(), true, true);
    let x = svd
        .solve(&b, 1e-13)
        .map_err(|e| Error::InvalidInput(format!("torse-forming fit failed: {e}")))?;
    let residual = (&a * &x - &b).norm();

    let rho = x[0];
    let mut w = DVector::zeros(m);
    for i in 0..m {
        w += &frame[i] * x[i + 1];
    }
    let omega = &g * &w;
    let omega_norm = ip(&w, &w).max(0.0).sqrt();
    Ok(TorseFit {
        rho,
        omega,
        w,
        omega_norm,
        residual,
    })
}

/// Torse-forming class labels, ordered by specificity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldClass {
    AntiTorqued,
    Torqued,
    Concircular,
    Recurrent,
    TorseFormingGeneral,
    NotTorseForming,
}

impl FieldClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            FieldClass::AntiTorqued => "anti_torqued",
            FieldClass::Torqued => "torqued",
            FieldClass::Concircular => "concircular",
            FieldClass::Recurrent => "recurrent",
            FieldClass::TorseFormingGeneral => "torse_forming_general",
            FieldClass::NotTorseForming => "not_torse_forming",
        }
    }
}

/// Sample-set classification of a field.
#[derive(Debug, Clone)]
pub struct TorseFormingReport {
    pub label: FieldClass,
    /// Fitted conformal scalar per sample point.
    pub rho: Vec<f64>,
    /// |omega|_g per sample point.
    pub omega_norm: Vec<f64>,
    /// Generative vector per sample point (chart components).
    pub w: Vec<DVector<f64>>,
    /// Generating form per sample point (chart components).
    pub omega: Vec<DVector<f64>>,
    /// Fit residual per sample point.
    pub residual: Vec<f64>,
    /// Whether rho and omega are nonzero at every sample.
    pub proper: bool,
    /// All class identities whose defining relation holds within tol,
    /// ignoring properness gating (diagnostics for ties).
    pub passing: Vec<FieldClass>,
    pub max_residual: f64,
    /// max |W + rho V|_g over samples.
    pub anti_defect: f64,
    /// max |<V, W>| over samples.
    pub orthogonality_defect: f64,
    pub tol: f64,
}

/// Classifies a field over a sample set, assigning the most specific label
/// whose defining identity holds within `tol` at every point.
///
/// The anti-torqued and torqued labels additionally require rho (and for
/// torqued, omega) to be nonzero at every sample, which separates them from
/// the degenerate parallel/concircular ties; all raw identity passes are
/// recorded in `passing`.
pub fn classify_field(
    field: &FieldSpec,
    sample_points: &[ChartPoint],
    tol: f64,
) -> Result<TorseFormingReport> {
    if sample_points.is_empty() {
        return Err(Error::InvalidInput(
            "classification needs a nonempty sample set".into(),
        ));
    }
    let metric = field.metric();
    let mut rho = Vec::with_capacity(sample_points.len());
    let mut omega_norm = Vec::with_capacity(sample_points.len());
    let mut omega = Vec::with_capacity(sample_points.len());
    let mut w = Vec::with_capacity(sample_points.len());
    let mut residual = Vec::with_capacity(sample_points.len());
    let mut anti_defect = 0.0f64;
    let mut orth_defect = 0.0f64;

    for p in sample_points {
        let fit = torse_forming_fit(field, p)?;
        let v = field.eval(p)?;
        let g = metric.components(p)?;
        let anti_vec = &fit.w + &v * fit.rho;
        anti_defect =
            anti_defect.max(((anti_vec.transpose() * &g * &anti_vec)[(0, 0)]).max(0.0).sqrt());
        orth_defect = orth_defect.max(((fit.w.transpose() * &g * &v)[(0, 0)]).abs());
        rho.push(fit.rho);
        omega_norm.push(fit.omega_norm);
        omega.push(fit.omega);
        w.push(fit.w);
        residual.push(fit.residual);
    }

    let max_residual = residual.iter().cloned().fold(0.0f64, f64::max);
    let min_abs_rho = rho.iter().map(|r| r.abs()).fold(f64::INFINITY, f64::min);
    let max_abs_rho = rho.iter().map(|r| r.abs()).fold(0.0f64, f64::max);
    let min_omega = omega_norm.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_omega = omega_norm.iter().cloned().fold(0.0f64, f64::max);
    let proper = min_abs_rho > tol && min_omega > tol;

    let mut passing = Vec::new();
    let label = if max_residual >= tol {
        FieldClass::NotTorseForming
    } else {
        if anti_defect < tol {
            passing.push(FieldClass::AntiTorqued);
        }
        if orth_defect < tol {
            passing.push(FieldClass::Torqued);
        }
        if max_omega < tol {
            passing.push(FieldClass::Concircular);
        }
        if max_abs_rho < tol {
            passing.push(FieldClass::Recurrent);
        }
        passing.push(FieldClass::TorseFormingGeneral);

        if anti_defect < tol && min_abs_rho > tol {
            FieldClass::AntiTorqued
        } else if orth_defect < tol && min_omega > tol && min_abs_rho > tol {
            FieldClass::Torqued
        } else if max_omega < tol {
            FieldClass::Concircular
        } else if max_abs_rho < tol {
            FieldClass::Recurrent
        } else {
            FieldClass::TorseFormingGeneral
        }
    };

    Ok(TorseFormingReport {
        label,
        rho,
        omega_norm,
        w,
        omega,
        residual,
        proper,
        passing,
        max_residual,
        anti_defect,
        orthogonality_defect: orth_defect,
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pt(coords: &[f64]) -> ChartPoint {
        DVector::from_column_slice(coords)
    }

    fn punctured3() -> Arc<ChartMetric> {
        Arc::new(ChartMetric::builtin("punctured_euclidean", 3, &[]).unwrap())
    }

    #[test]
    fn radial_unit_normalizes() {
        let f = FieldSpec::builtin("radial_unit", punctured3(), &[]).unwrap();
        let v = f.eval(&pt(&[3.0, 4.0, 0.0])).unwrap();
        assert_abs_diff_eq!(v[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(v[2], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn radial_on_wrong_metric_is_rejected() {
        let e3 = Arc::new(ChartMetric::builtin("euclidean", 3, &[]).unwrap());
        assert!(FieldSpec::builtin("radial_unit", e3, &[]).is_err());
    }

    #[test]
    fn hyperbolic_em_points_down() {
        let hyp = Arc::new(ChartMetric::builtin("hyperbolic_upper_half", 3, &[]).unwrap());
        let f = FieldSpec::builtin("hyperbolic_em", hyp, &[]).unwrap();
        let v = f.eval(&pt(&[0.0, 0.0, 2.0])).unwrap();
        assert_eq!(v.as_slice(), &[0.0, 0.0, -2.0]);
    }

    #[test]
    fn concircular_affine_identity_case() {
        let f =
            FieldSpec::builtin("concircular_affine", punctured3(), &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let p = pt(&[0.7, -0.2, 1.9]);
        let v = f.eval(&p).unwrap();
        assert_eq!(v, p);
    }

    #[test]
    fn fit_constant_field_is_parallel() {
        let e3 = Arc::new(ChartMetric::builtin("euclidean", 3, &[]).unwrap());
        let f = FieldSpec::builtin("constant", e3, &[0.3, -1.0, 0.4]).unwrap();
        let fit = torse_forming_fit(&f, &pt(&[1.0, 2.0, -0.5])).unwrap();
        assert_abs_diff_eq!(fit.rho, 0.0, epsilon = 1e-12);
        assert!(fit.omega_norm < 1e-12);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn fit_radial_matches_closed_form() {
        // grad_X (E/|E|) = (X - <X,V>V)/|p|: rho = 1/|p|, omega = -rho V^flat.
        let f = FieldSpec::builtin("radial_unit", punctured3(), &[]).unwrap();
        let p = pt(&[0.0, 2.0, 0.0]);
        let fit = torse_forming_fit(&f, &p).unwrap();
        assert_abs_diff_eq!(fit.rho, 0.5, epsilon = 1e-10);
        assert!(fit.residual < 1e-8);
        let v = f.eval(&p).unwrap();
        let expect = -&v * fit.rho;
        for i in 0..3 {
            assert_abs_diff_eq!(fit.w[i], expect[i], epsilon = 1e-9);
        }
    }

    #[test]
    fn fit_hyperbolic_em_has_unit_conformal_scalar() {
        let hyp = Arc::new(ChartMetric::builtin("hyperbolic_upper_half", 3, &[]).unwrap());
        let f = FieldSpec::builtin("hyperbolic_em", hyp, &[]).unwrap();
        for p in [pt(&[0.2, -0.4, 1.0]), pt(&[3.0, 1.0, 0.2]), pt(&[0.0, 0.0, 5.0])] {
            let fit = torse_forming_fit(&f, &p).unwrap();
            assert_abs_diff_eq!(fit.rho, 1.0, epsilon = 1e-9);
            assert!(fit.residual < 1e-8, "residual {}", fit.residual);
        }
    }

    #[test]
    fn fit_rejects_zero_field() {
        let e3 = Arc::new(ChartMetric::builtin("euclidean", 3, &[]).unwrap());
        let f = FieldSpec::builtin("constant", e3, &[0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            torse_forming_fit(&f, &pt(&[1.0, 0.0, 0.0])),
            Err(Error::ZeroField { .. })
        ));
    }

    #[test]
    fn duality_of_fitted_omega() {
        let f = FieldSpec::builtin("radial_unit", punctured3(), &[]).unwrap();
        let p = pt(&[1.2, -0.7, 2.1]);
        let fit = torse_forming_fit(&f, &p).unwrap();
        let metric = f.metric();
        let frame = metric.orthonormal_frame(&p).unwrap();
        for e in &frame {
            let omega_e: f64 = fit.omega.dot(e);
            let w_e = metric.inner(&p, &fit.w, e).unwrap();
            assert_abs_diff_eq!(omega_e, w_e, epsilon = 1e-10);
        }
    }

    #[test]
    fn classify_radial_as_anti_torqued() {
        let f = FieldSpec::builtin("radial_unit", punctured3(), &[]).unwrap();
        let pts = vec![pt(&[1.0, 0.0, 0.0]), pt(&[0.5, -2.0, 1.0]), pt(&[3.0, 4.0, 0.0])];
        let rep = classify_field(&f, &pts, 1e-6).unwrap();
        assert_eq!(rep.label, FieldClass::AntiTorqued);
        assert!(rep.proper);
        for (p, rho) in pts.iter().zip(&rep.rho) {
            assert_abs_diff_eq!(rho * p.norm(), 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn classify_affine_as_concircular() {
        let f =
            FieldSpec::builtin("concircular_affine", punctured3(), &[1.0, 1.0, 0.0, 0.0]).unwrap();
        let pts = vec![pt(&[1.0, 0.3, 0.0]), pt(&[-0.5, 2.0, 1.0])];
        let rep = classify_field(&f, &pts, 1e-6).unwrap();
        assert_eq!(rep.label, FieldClass::Concircular);
        assert!(rep.omega_norm.iter().all(|&x| x < 1e-8));
        // The raw torqued identity <V,W> = 0 also passes (W = 0): recorded
        // as a tie, not as the label.
        assert!(rep.passing.contains(&FieldClass::Torqued));
    }

    #[test]
    fn classify_constant_prefers_concircular_over_recurrent() {
        let e3 = Arc::new(ChartMetric::builtin("euclidean", 3, &[]).unwrap());
        let f = FieldSpec::builtin("constant", e3, &[1.0, 2.0, 0.0]).unwrap();
        let rep = classify_field(&f, &[pt(&[0.0, 0.0, 1.0]), pt(&[1.0, 1.0, 1.0])], 1e-6).unwrap();
        assert_eq!(rep.label, FieldClass::Concircular);
        assert!(rep.passing.contains(&FieldClass::Recurrent));
        assert!(rep.passing.contains(&FieldClass::AntiTorqued));
        assert!(!rep.proper);
    }

    #[test]
    fn classify_twisted_as_torqued() {
        let warped =
            Arc::new(ChartMetric::builtin("warped_interval_product", 3, &[1.0, 1.0]).unwrap());
        let f = FieldSpec::builtin("twisted_torqued", warped, &[]).unwrap();
        let pts = vec![pt(&[0.0, 0.5, -0.2]), pt(&[0.4, -1.0, 0.3]), pt(&[-0.6, 0.1, 0.9])];
        let rep = classify_field(&f, &pts, 1e-6).unwrap();
        assert_eq!(rep.label, FieldClass::Torqued);
        assert!(rep.proper);
        assert!(rep.orthogonality_defect < 1e-6);
    }

    #[test]
    fn label_stable_under_tighter_tol() {
        let f = FieldSpec::builtin("radial_unit", punctured3(), &[]).unwrap();
        let pts = vec![pt(&[1.0, 0.2, -0.4]), pt(&[2.0, -1.0, 0.5])];
        let a = classify_field(&f, &pts, 1e-6).unwrap();
        let b = classify_field(&f, &pts, 1e-7).unwrap();
        assert_eq!(a.label, b.label);
    }

    #[test]
    fn anti_torqued_fields_are_unit_geodesic() {
        // |V| = 1 and grad_V V = 0 at samples, for both anti-torqued built-ins.
        let rad = FieldSpec::builtin("radial_unit", punctured3(), &[]).unwrap();
        let hyp_m = Arc::new(ChartMetric::builtin("hyperbolic_upper_half", 3, &[]).unwrap());
        let hyp = FieldSpec::builtin("hyperbolic_em", hyp_m, &[]).unwrap();
        let rad_pts = [pt(&[1.0, -2.0, 0.3]), pt(&[0.2, 0.2, 0.2])];
        let hyp_pts = [pt(&[1.0, -2.0, 0.3]), pt(&[0.0, 5.0, 2.4])];
        for (f, pts) in [(&rad, &rad_pts), (&hyp, &hyp_pts)] {
            for p in pts.iter() {
                let v = f.eval(p).unwrap();
                let norm = f.metric().inner(p, &v, &v).unwrap();
                assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-9);
                let acc = f.nabla(p, &v).unwrap();
                let acc_norm = f.metric().inner(p, &acc, &acc).unwrap().max(0.0).sqrt();
                assert!(acc_norm < 1e-8, "|grad_V V| = {acc_norm}");
            }
        }
    }

    #[test]
    fn finite_difference_jacobian_classifies_with_loose_tol() {
        // Same radial field without the analytic Jacobian.
        let metric = punctured3();
        let f = FieldSpec::custom(
            metric,
            Arc::new(|p: &[f64]| {
                let x = DVector::from_column_slice(p);
                let r = x.norm();
                x / r
            }),
        );
        let pts = vec![pt(&[1.0, 0.0, 0.0]), pt(&[0.5, -2.0, 1.0])];
        let rep = classify_field(&f, &pts, 1e-3).unwrap();
        assert_eq!(rep.label, FieldClass::AntiTorqued);
    }
}
