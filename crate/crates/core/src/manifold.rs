//! Riemannian metrics on coordinate charts: evaluation, Christoffel
//! symbols, inner products, and covariant derivatives along curves.
//!
//! A [`ChartMetric`] is a symmetric positive-definite matrix field on an
//! open subset of R^m given by a domain predicate. Built-in metrics carry
//! analytic component derivatives; custom metrics fall back to central
//! finite differences with the standard eps^(1/3) step.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::curvegeo::CurveSamples;
use crate::diff::{self, Window};
use crate::error::{Error, Result};

/// Chart point: m real coordinates.
pub type ChartPoint = DVector<f64>;

pub type MetricFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;
pub type MetricDerivFn = dyn Fn(&[f64]) -> Vec<DMatrix<f64>> + Send + Sync;
pub type DomainFn = dyn Fn(&[f64]) -> bool + Send + Sync;

/// A Riemannian metric on a single coordinate chart.
#[derive(Clone)]
pub struct ChartMetric {
    dim: usize,
    name: String,
    params: Vec<f64>,
    components: Arc<MetricFn>,
    derivatives: Option<Arc<MetricDerivFn>>,
    domain: Arc<DomainFn>,
}

impl std::fmt::Debug for ChartMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChartMetric")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("params", &self.params)
            .finish()
    }
}

/// Names accepted by [`ChartMetric::builtin`].
pub const BUILTIN_METRICS: &[&str] = &[
    "euclidean",
    "punctured_euclidean",
    "hyperbolic_upper_half",
    "warped_interval_product",
];

impl ChartMetric {
    /// Constructs a built-in metric.
    ///
    /// * `euclidean` — flat metric on R^m, no parameters.
    /// * `punctured_euclidean` — flat metric on R^m minus the origin.
    /// * `hyperbolic_upper_half` — upper half-space model, (1/x_m^2) sum dx_i^2,
    ///   domain x_m > 0.
    /// * `warped_interval_product` — dt^2 + lambda(t)^2 sum dx_i^2 with
    ///   lambda(t) = a e^(b t); params `[a, b]` (both positive) and optionally
    ///   `[a, b, t0, t1]` restricting the first coordinate to (t0, t1).
    pub fn builtin(name: &str, dim: usize, params: &[f64]) -> Result<ChartMetric> {
        if dim < 2 {
            return Err(Error::InvalidParameter(format!(
                "metric dimension must be at least 2, got {dim}"
            )));
        }
        match name {
            "euclidean" | "punctured_euclidean" => {
                require_params(name, params, 0)?;
                let punctured = name == "punctured_euclidean";
                Ok(ChartMetric {
                    dim,
                    name: name.to_string(),
                    params: Vec::new(),
                    components: Arc::new(move |p: &[f64]| DMatrix::identity(p.len(), p.len())),
                    derivatives: Some(Arc::new(move |p: &[f64]| {
                        vec![DMatrix::zeros(p.len(), p.len()); p.len()]
                    })),
                    domain: Arc::new(move |p: &[f64]| {
                        !punctured || p.iter().any(|&c| c != 0.0)
                    }),
                })
            }
            "hyperbolic_upper_half" => {
                require_params(name, params, 0)?;
                Ok(ChartMetric {
                    dim,
                    name: name.to_string(),
                    params: Vec::new(),
                    components: Arc::new(|p: &[f64]| {
                        let m = p.len();
                        let xm = p[m - 1];
                        DMatrix::identity(m, m) / (xm * xm)
                    }),
                    derivatives: Some(Arc::new(|p: &[f64]| {
                        let m = p.len();
                        let xm = p[m - 1];
                        let mut out = vec![DMatrix::zeros(m, m); m];
                        out[m - 1] = DMatrix::identity(m, m) * (-2.0 / (xm * xm * xm));
                        out
                    })),
                    domain: Arc::new(|p: &[f64]| p[p.len() - 1] > 0.0),
                })
            }
            "warped_interval_product" => {
                if params.len() != 2 && params.len() != 4 {
                    return Err(Error::InvalidParameter(format!(
                        "warped_interval_product takes [a, b] or [a, b, t0, t1], got {} parameters",
                        params.len()
                    )));
                }
                let (a, b) = (params[0], params[1]);
                if a <= 0.0 || b <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "warping parameters must be positive, got a = {a}, b = {b}"
                    )));
                }
                let interval = if params.len() == 4 {
                    if !(params[2] < params[3]) {
                        return Err(Error::InvalidParameter(
                            "interval bounds must satisfy t0 < t1".into(),
                        ));
                    }
                    Some((params[2], params[3]))
                } else {
                    None
                };
                Ok(ChartMetric {
                    dim,
                    name: name.to_string(),
                    params: params.to_vec(),
                    components: Arc::new(move |p: &[f64]| {
                        let m = p.len();
                        let lam = a * (b * p[0]).exp();
                        let mut g = DMatrix::identity(m, m) * (lam * lam);
                        g[(0, 0)] = 1.0;
                        g
                    }),
                    derivatives: Some(Arc::new(move |p: &[f64]| {
                        let m = p.len();
                        let lam = a * (b * p[0]).exp();
                        let mut out = vec![DMatrix::zeros(m, m); m];
                        let mut d0 = DMatrix::identity(m, m) * (2.0 * b * lam * lam);
                        d0[(0, 0)] = 0.0;
                        out[0] = d0;
                        out
                    })),
                    domain: Arc::new(move |p: &[f64]| match interval {
                        Some((t0, t1)) => p[0] > t0 && p[0] < t1,
                        None => true,
                    }),
                })
            }
            other => Err(Error::UnknownBuiltin(other.to_string())),
        }
    }

    /// Wraps user-supplied component and domain callbacks (finite-difference
    /// derivatives).
    pub fn custom(
        dim: usize,
        components: Arc<MetricFn>,
        domain: Arc<DomainFn>,
    ) -> Result<ChartMetric> {
        if dim < 2 {
            return Err(Error::InvalidParameter(format!(
                "metric dimension must be at least 2, got {dim}"
            )));
        }
        Ok(ChartMetric {
            dim,
            name: "custom".to_string(),
            params: Vec::new(),
            components,
            derivatives: None,
            domain,
        })
    }

    /// Attaches analytic component derivatives to a custom metric.
    pub fn with_derivatives(mut self, derivatives: Arc<MetricDerivFn>) -> Self {
        self.derivatives = Some(derivatives);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.derivatives.is_some()
    }

    pub fn in_domain(&self, p: &ChartPoint) -> bool {
        p.len() == self.dim && (self.domain)(p.as_slice())
    }

    fn check_point(&self, p: &ChartPoint) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: p.len(),
            });
        }
        if !(self.domain)(p.as_slice()) {
            return Err(Error::DomainViolation {
                point: p.as_slice().to_vec(),
                context: format!("metric `{}`", self.name),
            });
        }
        Ok(())
    }

    /// Metric components g_ij at `p`.
    pub fn components(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        self.check_point(p)?;
        Ok((self.components)(p.as_slice()))
    }

    /// Coordinate derivatives of the components: `out[l] = d g / d x_l`.
    ///
    /// Uses analytic callbacks when available, otherwise central differences;
    /// every stencil point is domain-checked and failure is loud.
    pub fn component_derivatives(&self, p: &ChartPoint) -> Result<Vec<DMatrix<f64>>> {
        self.check_point(p)?;
        if let Some(d) = &self.derivatives {
            return Ok(d(p.as_slice()));
        }
        let m = self.dim;
        let mut out = Vec::with_capacity(m);
        let mut q = p.clone();
        for l in 0..m {
            let h = diff::fd_step(p[l]);
            q[l] = p[l] + h;
            if !(self.domain)(q.as_slice()) {
                return Err(Error::StencilOutOfDomain {
                    point: p.as_slice().to_vec(),
                });
            }
            let gp = (self.components)(q.as_slice());
            q[l] = p[l] - h;
            if !(self.domain)(q.as_slice()) {
                return Err(Error::StencilOutOfDomain {
                    point: p.as_slice().to_vec(),
                });
            }
            let gm = (self.components)(q.as_slice());
            q[l] = p[l];
            out.push((gp - gm) / (2.0 * h));
        }
        Ok(out)
    }

    /// Riemannian inner product u^T g(p) v.
    pub fn inner(&self, p: &ChartPoint, u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        if u.len() != self.dim || v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: if u.len() != self.dim { u.len() } else { v.len() },
            });
        }
        let g = self.components(p)?;
        Ok((u.transpose() * g * v)[(0, 0)])
    }

    pub fn norm(&self, p: &ChartPoint, u: &DVector<f64>) -> Result<f64> {
        Ok(self.inner(p, u, u)?.max(0.0).sqrt())
    }

    /// Christoffel symbols of the Levi-Civita connection at `p`.
    pub fn christoffel(&self, p: &ChartPoint) -> Result<Christoffel> {
        let g = self.components(p)?;
        let dg = self.component_derivatives(p)?;
        let ginv = g.clone().try_inverse().ok_or_else(|| Error::SingularMetric {
            point: p.as_slice().to_vec(),
        })?;
        let m = self.dim;
        let mut data = vec![0.0; m * m * m];
        for k in 0..m {
            for i in 0..m {
                for j in i..m {
                    let mut sum = 0.0;
                    for l in 0..m {
                        sum += ginv[(k, l)]
                            * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                    }
                    let val = 0.5 * sum;
                    data[(k * m + i) * m + j] = val;
                    data[(k * m + j) * m + i] = val;
                }
            }
        }
        Ok(Christoffel { dim: m, data })
    }

    /// g-orthonormal frame at `p` built by Gram-Schmidt from the chart basis.
    pub fn orthonormal_frame(&self, p: &ChartPoint) -> Result<Vec<DVector<f64>>> {
        let g = self.components(p)?;
        let m = self.dim;
        let ip = |u: &DVector<f64>, v: &DVector<f64>| (u.transpose() * &g * v)[(0, 0)];
        let mut frame: Vec<DVector<f64>> = Vec::with_capacity(m);
        for i in 0..m {
            let mut e = DVector::zeros(m);
            e[i] = 1.0;
            // Two projection passes for numerical orthogonality.
            for _ in 0..2 {
                for f in &frame {
                    let c = ip(&e, f);
                    e -= f * c;
                }
            }
            let n = ip(&e, &e);
            if n <= 0.0 {
                return Err(Error::SingularMetric {
                    point: p.as_slice().to_vec(),
                });
            }
            frame.push(e / n.sqrt());
        }
        Ok(frame)
    }
}

/// Christoffel symbols Gamma^k_ij at a point, symmetric in (i, j).
#[derive(Debug, Clone)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.dim + i) * self.dim + j]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Contraction Gamma^k_ij u^i v^j.
    pub fn contract(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let m = self.dim;
        let mut out = DVector::zeros(m);
        for k in 0..m {
            let mut acc = 0.0;
            for i in 0..m {
                let ui = u[i];
                if ui == 0.0 {
                    continue;
                }
                for j in 0..m {
                    acc += self.get(k, i, j) * ui * v[j];
                }
            }
            out[k] = acc;
        }
        out
    }

    /// Maximum asymmetry max |Gamma^k_ij - Gamma^k_ji| (diagnostic).
    pub fn max_asymmetry(&self) -> f64 {
        let m = self.dim;
        let mut worst = 0.0f64;
        for k in 0..m {
            for i in 0..m {
                for j in 0..m {
                    worst = worst.max((self.get(k, i, j) - self.get(k, j, i)).abs());
                }
            }
        }
        worst
    }
}

/// A vector field known along a curve: one value per grid sample, with an
/// optional analytic parameter-derivative callback `s -> dW/ds`.
pub struct FieldAlongCurve {
    pub values: Vec<DVector<f64>>,
    pub derivative: Option<Box<dyn Fn(f64) -> DVector<f64> + Send + Sync>>,
}

/// Boundary handling for derivative stencils along a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryPolicy {
    /// Fail when the central stencil does not fit (no extrapolation).
    InteriorOnly,
    /// Fall back to 4th-order one-sided stencils near the ends.
    OneSided,
}

/// Covariant derivative of `field` along `curve` at parameter `s`:
/// (grad_{c'} W)^k = dW^k/ds + Gamma^k_ij c'^i W^j.
///
/// `s` must coincide with a grid sample of the curve.
pub fn covariant_derivative_along(
    metric: &ChartMetric,
    curve: &CurveSamples,
    field: &FieldAlongCurve,
    s: f64,
    boundary: BoundaryPolicy,
) -> Result<DVector<f64>> {
    let grid = curve.grid();
    let n = grid.len();
    if field.values.len() != n {
        return Err(Error::InvalidInput(format!(
            "field has {} samples, curve has {}",
            field.values.len(),
            n
        )));
    }
    let scale = (grid[n - 1] - grid[0]).abs().max(1.0);
    let k = grid
        .iter()
        .position(|&g| (g - s).abs() <= 1e-9 * scale)
        .ok_or_else(|| Error::InvalidInput(format!("parameter {s} is not a grid sample")))?;

    let h = curve.require_uniform_step()?;
    let interior = k >= 2 && k + 2 < n;
    if !interior && field.derivative.is_none() && boundary == BoundaryPolicy::InteriorOnly {
        return Err(Error::InvalidInput(format!(
            "sample {k} is at the grid boundary; enable one-sided stencils or pass an analytic derivative"
        )));
    }

    let w_dot = if let Some(d) = &field.derivative {
        d(s)
    } else if interior {
        diff::d1_vector_at(&field.values, h, k)
    } else {
        one_sided_d1(&field.values, h, k)
    };

    let tangent = curve.tangent_at(k)?;
    let point = &curve.points()[k];
    let gamma = metric.christoffel(point)?;
    Ok(w_dot + gamma.contract(&tangent, &field.values[k]))
}

/// Covariant derivative series of `field` along `curve` on the interior
/// window where the stencil fits.
pub fn covariant_derivative_series(
    metric: &ChartMetric,
    curve: &CurveSamples,
    field: &FieldAlongCurve,
) -> Result<(Vec<DVector<f64>>, Window)> {
    let n = curve.grid().len();
    let h = curve.require_uniform_step()?;
    let win = if field.derivative.is_some() {
        Window::full(n)
    } else {
        Window::full(n).shrink(2)
    };
    let mut out = vec![DVector::zeros(metric.dim()); n];
    for k in win.iter() {
        let w_dot = if let Some(d) = &field.derivative {
            d(curve.grid()[k])
        } else {
            diff::d1_vector_at(&field.values, h, k)
        };
        let tangent = curve.tangent_at(k)?;
        let gamma = metric.christoffel(&curve.points()[k])?;
        out[k] = w_dot + gamma.contract(&tangent, &field.values[k]);
    }
    Ok((out, win))
}

/// 4th-order one-sided first derivative at index `k` (forward or backward).
fn one_sided_d1(v: &[DVector<f64>], h: f64, k: usize) -> DVector<f64> {
    let n = v.len();
    let c = [-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -0.25];
    let dim = v[0].len();
    let mut out = DVector::zeros(dim);
    if k + 4 < n {
        for (j, &cj) in c.iter().enumerate() {
            out += &v[k + j] * cj;
        }
        out / h
    } else {
        for (j, &cj) in c.iter().enumerate() {
            out += &v[k - j] * cj;
        }
        out / (-h)
    }
}

/// Draws `n` reproducible sample points inside the metric domain.
///
/// Built-in charts use a box adapted to their domain; custom charts use
/// rejection sampling on [-3, 3]^m.
pub fn sample_domain_points(metric: &ChartMetric, n: usize, seed: u64) -> Result<Vec<ChartPoint>> {
    use rand::{RngExt, SeedableRng};
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let m = metric.dim();
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while out.len() < n {
        attempts += 1;
        if attempts > 1000 * (n + 1) {
            return Err(Error::InvalidInput(
                "could not sample points inside the metric domain".into(),
            ));
        }
        let mut p = DVector::zeros(m);
        for i in 0..m {
            p[i] = rng.random_range(-3.0..3.0);
        }
        match metric.name() {
            "punctured_euclidean" => {
                if p.norm() < 0.3 {
                    continue;
                }
            }
            "hyperbolic_upper_half" => {
                p[m - 1] = rng.random_range(0.3..3.0);
            }
            "warped_interval_product" => {
                let (lo, hi) = if metric.params().len() == 4 {
                    (metric.params()[2].max(-2.0), metric.params()[3].min(2.0))
                } else {
                    (-2.0, 2.0)
                };
                p[0] = rng.random_range(lo..hi);
            }
            _ => {}
        }
        if metric.in_domain(&p) {
            out.push(p);
        }
    }
    Ok(out)
}

fn require_params(name: &str, params: &[f64], want: usize) -> Result<()> {
    if params.len() != want {
        return Err(Error::InvalidParameter(format!(
            "metric `{name}` takes {want} parameters, got {}",
            params.len()
        )));
    }
    Ok(())
}
