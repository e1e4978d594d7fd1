//! Curve construction: built-in closed-form curves, Frenet reconstruction
//! from prescribed curvature and torsion, slant-helix synthesis from a
//! distance function, and concircular-curve construction.
//!
//! Reconstruction integrates the chart Frenet system with the adaptive
//! Dormand-Prince pair; synthesized curves are anchored so the position
//! decomposition holds at the initial parameter, and every synthesis is
//! post-verified against the property it is supposed to realize.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::curvegeo::{CurveAnalytic, CurveSamples};
use crate::error::{Error, Result};
use crate::fields::FieldSpec;
use crate::manifold::{ChartMetric, ChartPoint};
use crate::ode::{integrate_with_guard, OdeOptions, OdeSolution};

/// Names accepted by [`builtin_curve`].
pub const BUILTIN_CURVES: &[&str] = &[
    "log_spiral",
    "cone_loxodrome",
    "circle_origin",
    "hyperbolic_vertical_line",
    "rectifying",
];

/// Latitude radius of the spherical director used by the rectifying
/// built-in; any value in (0, 1) gives a nonplanar rectifying curve.
const RECTIFYING_LATITUDE: f64 = 0.6;

/// A scalar function with analytic derivatives up to `max_order`;
/// `eval(s, k)` returns the k-th derivative. Missing orders fall back to
/// central differences of the deepest analytic order.
pub struct ScalarFunction {
    max_order: usize,
    eval: Box<dyn Fn(f64, usize) -> f64 + Send + Sync>,
}

impl ScalarFunction {
    pub fn new<F>(max_order: usize, eval: F) -> Self
    where
        F: Fn(f64, usize) -> f64 + Send + Sync + 'static,
    {
        ScalarFunction {
            max_order,
            eval: Box::new(eval),
        }
    }

    /// c0 + c1 s with all derivatives.
    pub fn affine(c0: f64, c1: f64) -> Self {
        ScalarFunction::new(3, move |s, k| match k {
            0 => c0 + c1 * s,
            1 => c1,
            _ => 0.0,
        })
    }

    /// sqrt(c0 + c1 s + c2 s^2) with derivatives up to order 3.
    pub fn sqrt_quadratic(c0: f64, c1: f64, c2: f64) -> Self {
        ScalarFunction::new(3, move |s, k| {
            let u = c0 + c1 * s + c2 * s * s;
            let du = c1 + 2.0 * c2 * s;
            let ddu = 2.0 * c2;
            let r = u.sqrt();
            match k {
                0 => r,
                1 => du / (2.0 * r),
                2 => ddu / (2.0 * r) - du * du / (4.0 * u * r),
                _ => -3.0 * du * ddu / (4.0 * u * r) + 3.0 * du * du * du / (8.0 * u * u * r),
            }
        })
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn eval(&self, s: f64, order: usize) -> f64 {
        if order <= self.max_order {
            (self.eval)(s, order)
        } else {
            // One central-difference level below the requested order.
            let h = crate::diff::fd_step(s);
            (self.eval(s + h, order - 1) - self.eval(s - h, order - 1)) / (2.0 * h)
        }
    }
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Returns a built-in unit-speed curve with analytic derivatives.
///
/// Parameter conventions (all optional, defaults in brackets):
/// * `log_spiral` — `[s0, s1]` = [1, 10], s > 0.
/// * `cone_loxodrome` — `[s0, s1]` = [1, 10], s > 0.
/// * `circle_origin` — `[radius]` or `[radius, s0, s1]`, default radius 1
///   over one full turn.
/// * `hyperbolic_vertical_line` — `[s0, s1]` = [0, 1].
/// * `rectifying` — `[a, b, s0, s1]` = [1, 0, 1, 4] with a > 0.
pub fn builtin_curve(name: &str, params: &[f64], n: usize) -> Result<CurveSamples> {
    match name {
        "log_spiral" => {
            let (s0, s1) = range_params("log_spiral", params, (1.0, 10.0))?;
            if s0 <= 0.0 {
                return Err(Error::InvalidParameter(
                    "log_spiral needs s > 0".into(),
                ));
            }
            let metric = Arc::new(ChartMetric::builtin("punctured_euclidean", 3, &[])?);
            CurveSamples::from_analytic(
                metric,
                s0,
                s1,
                n,
                CurveAnalytic::new(3, |s, order| {
                    let u = s.ln();
                    let (cu, su) = (u.cos(), u.sin());
                    let c = FRAC_1_SQRT_2;
                    match order {
                        0 => DVector::from_column_slice(&[c * s * cu, 0.0, c * s * su]),
                        1 => DVector::from_column_slice(&[c * (cu - su), 0.0, c * (su + cu)]),
                        2 => DVector::from_column_slice(&[
                            -c * (su + cu) / s,
                            0.0,
                            c * (cu - su) / s,
                        ]),
                        _ => DVector::from_column_slice(&[
                            2.0 * c * su / (s * s),
                            0.0,
                            -2.0 * c * cu / (s * s),
                        ]),
                    }
                }),
                true,
            )
        }
        "cone_loxodrome" => {
            let (s0, s1) = range_params("cone_loxodrome", params, (1.0, 10.0))?;
            if s0 <= 0.0 {
                return Err(Error::InvalidParameter(
                    "cone_loxodrome needs s > 0".into(),
                ));
            }
            let metric = Arc::new(ChartMetric::builtin("punctured_euclidean", 3, &[])?);
            let c = 2.0 * 3.0f64.sqrt();
            let root3 = 3.0f64.sqrt();
            CurveSamples::from_analytic(
                metric,
                s0,
                s1,
                n,
                CurveAnalytic::new(3, move |s, order| {
                    let m = c * (s / 4.0).ln();
                    let (cm, sm) = (m.cos(), m.sin());
                    match order {
                        0 => DVector::from_column_slice(&[
                            s * cm / 4.0,
                            root3 * s / 4.0,
                            s * sm / 4.0,
                        ]),
                        1 => DVector::from_column_slice(&[
                            (cm - c * sm) / 4.0,
                            root3 / 4.0,
                            (sm + c * cm) / 4.0,
                        ]),
                        2 => DVector::from_column_slice(&[
                            -c * (sm + c * cm) / (4.0 * s),
                            0.0,
                            c * (cm - c * sm) / (4.0 * s),
                        ]),
                        _ => {
                            let k = c * (c * c + 1.0) / (4.0 * s * s);
                            DVector::from_column_slice(&[k * sm, 0.0, -k * cm])
                        }
                    }
                }),
                true,
            )
        }
        "circle_origin" => {
            let (r, s0, s1) = match params.len() {
                0 => (1.0, 0.0, std::f64::consts::TAU),
                1 => (params[0], 0.0, params[0] * std::f64::consts::TAU),
                3 => (params[0], params[1], params[2]),
                k => {
                    return Err(Error::InvalidParameter(format!(
                        "circle_origin takes [radius] or [radius, s0, s1], got {k} parameters"
                    )))
                }
            };
            if r <= 0.0 {
                return Err(Error::InvalidParameter("circle radius must be positive".into()));
            }
            let metric = Arc::new(ChartMetric::builtin("punctured_euclidean", 3, &[])?);
            CurveSamples::from_analytic(
                metric,
                s0,
                s1,
                n,
                CurveAnalytic::new(4, move |s, order| {
                    let a = s / r;
                    let scale = r.powi(1 - order as i32);
                    match order % 4 {
                        0 => DVector::from_column_slice(&[scale * a.cos(), scale * a.sin(), 0.0]),
                        1 => DVector::from_column_slice(&[-scale * a.sin(), scale * a.cos(), 0.0]),
                        2 => DVector::from_column_slice(&[-scale * a.cos(), -scale * a.sin(), 0.0]),
                        _ => DVector::from_column_slice(&[scale * a.sin(), -scale * a.cos(), 0.0]),
                    }
                }),
                true,
            )
        }
        "hyperbolic_vertical_line" => {
            let (s0, s1) = range_params("hyperbolic_vertical_line", params, (0.0, 1.0))?;
            let metric = Arc::new(ChartMetric::builtin("hyperbolic_upper_half", 3, &[])?);
            CurveSamples::from_analytic(
                metric,
                s0,
                s1,
                n,
                CurveAnalytic::new(4, |s, _order| {
                    DVector::from_column_slice(&[0.0, 0.0, s.exp()])
                }),
                true,
            )
        }
        "rectifying" => {
            let (a, b, s0, s1) = match params.len() {
                0 => (1.0, 0.0, 1.0, 4.0),
                2 => (params[0], params[1], 1.0, 4.0),
                4 => (params[0], params[1], params[2], params[3]),
                k => {
                    return Err(Error::InvalidParameter(format!(
                        "rectifying takes [a, b] or [a, b, s0, s1], got {k} parameters"
                    )))
                }
            };
            if a <= 0.0 {
                return Err(Error::InvalidParameter(
                    "rectifying parameter a must be positive".into(),
                ));
            }
            let metric = Arc::new(ChartMetric::builtin("punctured_euclidean", 3, &[])?);
            let r = RECTIFYING_LATITUDE;
            let h = (1.0 - r * r).sqrt();
            // gamma(s) = phi(s) y(t(s)) with y a unit-speed latitude circle
            // on the sphere, phi = sqrt(u^2 + a^2), t = arctan(u/a), u = s+b.
            let dir = move |t: f64, k: usize| -> DVector<f64> {
                let w = t / r;
                match k {
                    0 => DVector::from_column_slice(&[r * w.cos(), r * w.sin(), h]),
                    1 => DVector::from_column_slice(&[-w.sin(), w.cos(), 0.0]),
                    2 => DVector::from_column_slice(&[-w.cos() / r, -w.sin() / r, 0.0]),
                    _ => DVector::from_column_slice(&[
                        w.sin() / (r * r),
                        -w.cos() / (r * r),
                        0.0,
                    ]),
                }
            };
            CurveSamples::from_analytic(
                metric,
                s0,
                s1,
                n,
                CurveAnalytic::new(3, move |s, order| {
                    let u = s + b;
                    let phi = (u * u + a * a).sqrt();
                    let t = (u / a).atan();
                    match order {
                        0 => dir(t, 0) * phi,
                        1 => dir(t, 0) * (u / phi) + dir(t, 1) * (a / phi),
                        2 => (dir(t, 0) + dir(t, 2)) * (a * a / phi.powi(3)),
                        _ => {
                            (dir(t, 0) + dir(t, 2)) * (-3.0 * a * a * u / phi.powi(5))
                                + (dir(t, 1) + dir(t, 3)) * (a.powi(3) / phi.powi(5))
                        }
                    }
                }),
                true,
            )
        }
        other => Err(Error::UnknownBuiltin(other.to_string())),
    }
}

fn range_params(name: &str, params: &[f64], default: (f64, f64)) -> Result<(f64, f64)> {
    match params.len() {
        0 => Ok(default),
        2 => {
            if !(params[1] > params[0]) {
                return Err(Error::InvalidParameter(format!(
                    "{name} needs s0 < s1, got [{}, {}]",
                    params[0], params[1]
                )));
            }
            Ok((params[0], params[1]))
        }
        k => Err(Error::InvalidParameter(format!(
            "{name} takes [s0, s1], got {k} parameters"
        ))),
    }
}

/// Initial data for Frenet reconstruction: a chart point and an orthonormal,
/// positively oriented (T, N, B) frame there.
pub struct FrameInit {
    pub point: ChartPoint,
    pub frame: [DVector<f64>; 3],
}

impl FrameInit {
    /// Canonical frame at a point: coordinate axes.
    pub fn canonical(point: ChartPoint) -> FrameInit {
        FrameInit {
            point,
            frame: [
                DVector::from_column_slice(&[1.0, 0.0, 0.0]),
                DVector::from_column_slice(&[0.0, 1.0, 0.0]),
                DVector::from_column_slice(&[0.0, 0.0, 1.0]),
            ],
        }
    }
}

/// A reconstructed curve with its integrated moving frame.
pub struct FrenetCurve {
    pub curve: CurveSamples,
    /// (T, N, B) at each output sample, reorthonormalized.
    pub frames: Vec<[DVector<f64>; 3]>,
}

/// Integrates the chart Frenet system for prescribed curvature and torsion
/// in an arbitrary 3-chart metric:
/// grad_T T = kappa N, grad_T N = -kappa T + tau B, grad_T B = -tau N.
pub fn frenet_integrate_in(
    metric: Arc<ChartMetric>,
    kappa: ScalarFn,
    tau: ScalarFn,
    init: &FrameInit,
    s_range: (f64, f64),
    n_out: usize,
    opts: &OdeOptions,
) -> Result<FrenetCurve> {
    if metric.dim() != 3 {
        return Err(Error::NotApplicable(
            "Frenet reconstruction is implemented for 3-charts".into(),
        ));
    }
    validate_frame(&metric, init)?;
    let (s0, s1) = s_range;
    if !(s1 > s0) {
        return Err(Error::InvalidInput("need s0 < s1".into()));
    }
    // A nonpositive curvature anywhere in the span is rejected up front.
    for j in 0..=200 {
        let s = s0 + (s1 - s0) * j as f64 / 200.0;
        if !(kappa(s) > 0.0) {
            return Err(Error::InvalidInput(format!(
                "prescribed curvature must be positive, kappa({s}) = {}",
                kappa(s)
            )));
        }
    }

    let mut y0 = Vec::with_capacity(12);
    y0.extend_from_slice(init.point.as_slice());
    for v in &init.frame {
        y0.extend_from_slice(v.as_slice());
    }
    let metric_rhs = metric.clone();
    let kap = kappa.clone();
    let ta = tau.clone();
    let rhs = move |s: f64, y: &[f64], dy: &mut [f64]| {
        frenet_rhs(&metric_rhs, &kap, &ta, s, y, dy);
    };
    let metric_guard = metric.clone();
    let sol = integrate_with_guard(rhs, s0, s1, &y0, opts, move |s, y| {
        let p = DVector::from_column_slice(&y[0..3]);
        if !metric_guard.in_domain(&p) {
            return Err(format!("curve left the metric domain at s = {s}"));
        }
        Ok(())
    })?;
    assemble_frenet_curve(metric, kappa, sol, s0, s1, n_out)
}

/// Euclidean Frenet reconstruction (flat chart).
pub fn frenet_integrate(
    kappa: ScalarFn,
    tau: ScalarFn,
    init: &FrameInit,
    s_range: (f64, f64),
    n_out: usize,
    opts: &OdeOptions,
) -> Result<FrenetCurve> {
    let metric = Arc::new(ChartMetric::builtin("euclidean", 3, &[])?);
    frenet_integrate_in(metric, kappa, tau, init, s_range, n_out, opts)
}

fn frenet_rhs(
    metric: &ChartMetric,
    kappa: &ScalarFn,
    tau: &ScalarFn,
    s: f64,
    y: &[f64],
    dy: &mut [f64],
) {
    let p = DVector::from_column_slice(&y[0..3]);
    let t = DVector::from_column_slice(&y[3..6]);
    let nv = DVector::from_column_slice(&y[6..9]);
    let b = DVector::from_column_slice(&y[9..12]);
    let (k, ta) = (kappa(s), tau(s));
    // Outside the domain the guard aborts after the step; use zero
    // Christoffel terms to keep the RHS total.
    let gamma = metric.christoffel(&p).ok();
    let corr = |x: &DVector<f64>| -> DVector<f64> {
        match &gamma {
            Some(g) => g.contract(&t, x),
            None => DVector::zeros(3),
        }
    };
    let dt = &nv * k - corr(&t);
    let dn = &b * ta - &t * k - corr(&nv);
    let db = -(&nv * ta) - corr(&b);
    dy[0..3].copy_from_slice(t.as_slice());
    dy[3..6].copy_from_slice(dt.as_slice());
    dy[6..9].copy_from_slice(dn.as_slice());
    dy[9..12].copy_from_slice(db.as_slice());
}

fn assemble_frenet_curve(
    metric: Arc<ChartMetric>,
    kappa: ScalarFn,
    sol: OdeSolution,
    s0: f64,
    s1: f64,
    n_out: usize,
) -> Result<FrenetCurve> {
    let grid: Vec<f64> = (0..n_out)
        .map(|j| s0 + (s1 - s0) * j as f64 / (n_out - 1) as f64)
        .collect();
    let states = sol.sample(&grid);
    let mut frames = Vec::with_capacity(n_out);
    let mut points = Vec::with_capacity(n_out);
    for (j, y) in states.iter().enumerate() {
        let p = DVector::from_column_slice(&y[0..3]);
        let raw = [
            DVector::from_column_slice(&y[3..6]),
            DVector::from_column_slice(&y[6..9]),
            DVector::from_column_slice(&y[9..12]),
        ];
        let frame = reorthonormalize(&metric, &p, &raw).map_err(|e| {
            Error::OdeFailure(format!("frame degenerated at sample {j}: {e}"))
        })?;
        frames.push(frame);
        points.push(p);
    }

    let sol = Arc::new(sol);
    let metric2 = metric.clone();
    let analytic = CurveAnalytic::new(2, move |s, order| {
        let y = sol.eval(s);
        match order {
            0 => DVector::from_column_slice(&y[0..3]),
            1 => DVector::from_column_slice(&y[3..6]),
            _ => {
                // Chart second derivative: kappa N - Gamma(T, T).
                let p = DVector::from_column_slice(&y[0..3]);
                let t = DVector::from_column_slice(&y[3..6]);
                let nv = DVector::from_column_slice(&y[6..9]);
                let k = kappa(s);
                match metric2.christoffel(&p) {
                    Ok(g) => &nv * k - g.contract(&t, &t),
                    Err(_) => &nv * k,
                }
            }
        }
    });
    let curve = CurveSamples::from_analytic_grid(metric, grid, points, analytic, true)?;
    Ok(FrenetCurve { curve, frames })
}

fn validate_frame(metric: &ChartMetric, init: &FrameInit) -> Result<()> {
    if !metric.in_domain(&init.point) {
        return Err(Error::DomainViolation {
            point: init.point.as_slice().to_vec(),
            context: "initial frame point".into(),
        });
    }
    for i in 0..3 {
        for j in i..3 {
            let want = if i == j { 1.0 } else { 0.0 };
            let got = metric.inner(&init.point, &init.frame[i], &init.frame[j])?;
            if (got - want).abs() > 1e-8 {
                return Err(Error::InvalidInput(format!(
                    "initial frame is not orthonormal: <e{i}, e{j}> = {got}"
                )));
            }
        }
    }
    let det = DMatrix::from_fn(3, 3, |r, c| init.frame[c][r]).determinant();
    if det <= 0.0 {
        return Err(Error::InvalidInput(
            "initial frame must be positively oriented in the chart".into(),
        ));
    }
    Ok(())
}

/// Gram-Schmidt pass preserving the direction of each vector in turn.
fn reorthonormalize(
    metric: &ChartMetric,
    p: &ChartPoint,
    raw: &[DVector<f64>; 3],
) -> Result<[DVector<f64>; 3]> {
    let g = metric.components(p)?;
    let ip = |u: &DVector<f64>, v: &DVector<f64>| (u.transpose() * &g * v)[(0, 0)];
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(3);
    for v in raw {
        let mut u = v.clone();
        for _ in 0..2 {
            for f in &out {
                let c = ip(&u, f);
                u -= f * c;
            }
        }
        let n = ip(&u, &u);
        if !(n > 1e-20) {
            return Err(Error::InvalidInput("degenerate frame".into()));
        }
        out.push(u / n.sqrt());
    }
    Ok([out[0].clone(), out[1].clone(), out[2].clone()])
}

/// Configuration for slant-helix synthesis from a distance function.
pub struct SlantSynthesisConfig {
    /// Slant angle theta (radians); cos(theta) must be nonzero.
    pub theta: f64,
    /// Distance function phi(s) with derivatives (order >= 2; order 3 is
    /// finite-differenced when absent).
    pub phi: ScalarFunction,
    /// Initial torsion. `None` selects the value compatible with the
    /// position decomposition at s0, which is the one that makes the
    /// slant post-verification succeed.
    pub tau0: Option<f64>,
    pub s_range: (f64, f64),
    pub n_out: usize,
    pub ode: OdeOptions,
}

/// Output of [`synthesize_slant_from_phi`].
pub struct SlantSynthesis {
    pub curve: CurveSamples,
    pub frames: Vec<[DVector<f64>; 3]>,
    pub kappa: Vec<f64>,
    pub tau: Vec<f64>,
    pub phi: Vec<f64>,
    /// Binormal coefficient of the anchor point.
    pub g0: f64,
    /// Torsion actually used at s0.
    pub tau0: f64,
    /// Torsion compatible with the decomposition at s0.
    pub tau0_compatible: f64,
    /// max |<gamma, N>/|gamma| - cos(theta)| over the output grid.
    pub post_cos_deviation: f64,
}

/// Synthesizes a curve whose distance function is `phi` and whose principal
/// normal makes the angle `theta` with the radial direction.
///
/// The curvature comes from the distance law
/// kappa = ((phi phi')' - 1) / (cos(theta) phi); the torsion solves the
/// compatibility ODE tau' = (tau/F)(F' + cos^2(theta) phi tau^2) with
/// F = (cos^2(theta) + (phi phi')' - 1) phi'. The curve is anchored by
/// gamma(s0) = phi phi' T + cos(theta) phi N + g0 B with the positive root
/// g0 = sqrt(phi^2 - (phi phi')^2 - cos^2(theta) phi^2).
pub fn synthesize_slant_from_phi(cfg: &SlantSynthesisConfig) -> Result<SlantSynthesis> {
    let (s0, s1) = cfg.s_range;
    if !(s1 > s0) {
        return Err(Error::InvalidInput("need s0 < s1".into()));
    }
    let cos_t = cfg.theta.cos();
    if cos_t.abs() < 1e-12 {
        return Err(Error::NotApplicable(
            "cos(theta) = 0 is the rectifying branch; synthesis needs a transversal angle".into(),
        ));
    }
    let phi_k = |s: f64, k: usize| cfg.phi.eval(s, k);
    let pp1 = |s: f64| {
        // (phi phi')' = phi'^2 + phi phi''.
        let p1 = phi_k(s, 1);
        p1 * p1 + phi_k(s, 0) * phi_k(s, 2)
    };
    let kappa_of = move |s: f64, cos_t: f64| (pp1(s) - 1.0) / (cos_t * phi_k(s, 0));
    let budget = |s: f64| {
        let p = phi_k(s, 0);
        let p1 = phi_k(s, 1);
        p * p * (1.0 - p1 * p1 - cos_t * cos_t)
    };

    // Feasibility scan.
    let n_scan = (4 * cfg.n_out).max(400);
    let mut max_dphi = 0.0f64;
    for j in 0..=n_scan {
        let s = s0 + (s1 - s0) * j as f64 / n_scan as f64;
        let p = phi_k(s, 0);
        if !(p > 0.0) {
            return Err(Error::Infeasible(format!(
                "distance function must stay positive, phi({s}) = {p}"
            )));
        }
        let b = budget(s);
        if b < -1e-10 * p * p {
            return Err(Error::Infeasible(format!(
                "g(s)^2 budget phi^2 (1 - phi'^2 - cos^2 theta) = {b:.6e} < 0 at s = {s:.6}; \
                 no curve with this distance function can keep the slant angle"
            )));
        }
        let k = kappa_of(s, cos_t);
        if !(k > 0.0) {
            return Err(Error::Infeasible(format!(
                "distance law gives nonpositive curvature kappa({s}) = {k:.6e}"
            )));
        }
        max_dphi = max_dphi.max(phi_k(s, 1).abs());
    }
    if max_dphi < 1e-12 {
        return Err(Error::NotApplicable(
            "constant distance function is the circle branch; use circle_origin".into(),
        ));
    }

    let g0 = budget(s0).max(0.0).sqrt();
    let line2_num = (cos_t + kappa_of(s0, cos_t) * phi_k(s0, 0)) * phi_k(s0, 1);
    let tau0_compatible = if g0 > 1e-12 {
        line2_num / g0
    } else if line2_num.abs() < 1e-10 {
        0.0
    } else {
        return Err(Error::Infeasible(format!(
            "decomposition has no binormal budget at s0 but a transversal \
             component {line2_num:.3e}; no torsion is compatible"
        )));
    };
    let tau0 = cfg.tau0.unwrap_or(tau0_compatible);

    // F and its derivative for the torsion ODE.
    let f_of = move |s: f64| (cos_t * cos_t + pp1(s) - 1.0) * phi_k(s, 1);
    let fp_of = move |s: f64| {
        let dpp1 = 3.0 * phi_k(s, 1) * phi_k(s, 2) + phi_k(s, 0) * phi_k(s, 3);
        dpp1 * phi_k(s, 1) + (cos_t * cos_t + pp1(s) - 1.0) * phi_k(s, 2)
    };
    if tau0 != 0.0 {
        let mut fmax = 0.0f64;
        for j in 0..=n_scan {
            let s = s0 + (s1 - s0) * j as f64 / n_scan as f64;
            fmax = fmax.max(f_of(s).abs());
        }
        for j in 0..=n_scan {
            let s = s0 + (s1 - s0) * j as f64 / n_scan as f64;
            if f_of(s).abs() < 1e-10 * fmax.max(1.0) {
                return Err(Error::Infeasible(format!(
                    "torsion law is singular: F(s) = 0 at s = {s:.6}; integration halts there"
                )));
            }
        }
    }

    // Anchor.
    let t0v = DVector::from_column_slice(&[1.0, 0.0, 0.0]);
    let n0v = DVector::from_column_slice(&[0.0, 1.0, 0.0]);
    let b0v = DVector::from_column_slice(&[0.0, 0.0, 1.0]);
    let gamma0 =
        &t0v * (phi_k(s0, 0) * phi_k(s0, 1)) + &n0v * (cos_t * phi_k(s0, 0)) + &b0v * g0;

    // Joint state: [tau, gamma, T, N, B].
    let mut y0 = vec![tau0];
    y0.extend_from_slice(gamma0.as_slice());
    y0.extend_from_slice(t0v.as_slice());
    y0.extend_from_slice(n0v.as_slice());
    y0.extend_from_slice(b0v.as_slice());
    let tau_frozen = tau0 == 0.0;
    let rhs = move |s: f64, y: &[f64], dy: &mut [f64]| {
        let tau = y[0];
        dy[0] = if tau_frozen {
            0.0
        } else {
            let f = f_of(s);
            tau / f * (fp_of(s) + cos_t * cos_t * phi_k(s, 0) * tau * tau)
        };
        let k = kappa_of(s, cos_t);
        let t = &y[4..7];
        let nv = &y[7..10];
        let b = &y[10..13];
        for i in 0..3 {
            dy[1 + i] = t[i];
            dy[4 + i] = k * nv[i];
            dy[7 + i] = -k * t[i] + tau * b[i];
            dy[10 + i] = -tau * nv[i];
        }
    };
    let sol = integrate_with_guard(rhs, s0, s1, &y0, &cfg.ode, |s, y| {
        if !y[0].is_finite() {
            return Err(format!("torsion blew up at s = {s}"));
        }
        Ok(())
    })?;

    let metric = Arc::new(ChartMetric::builtin("punctured_euclidean", 3, &[])?);
    let grid: Vec<f64> = (0..cfg.n_out)
        .map(|j| s0 + (s1 - s0) * j as f64 / (cfg.n_out - 1) as f64)
        .collect();
    let states = sol.sample(&grid);
    let mut points = Vec::with_capacity(cfg.n_out);
    let mut frames = Vec::with_capacity(cfg.n_out);
    let mut taus = Vec::with_capacity(cfg.n_out);
    let mut kappas = Vec::with_capacity(cfg.n_out);
    let mut phis = Vec::with_capacity(cfg.n_out);
    let mut post_dev = 0.0f64;
    for (j, y) in states.iter().enumerate() {
        let p = DVector::from_column_slice(&y[1..4]);
        let raw = [
            DVector::from_column_slice(&y[4..7]),
            DVector::from_column_slice(&y[7..10]),
            DVector::from_column_slice(&y[10..13]),
        ];
        let frame = reorthonormalize(&metric, &p, &raw)?;
        let r = p.norm();
        post_dev = post_dev.max((p.dot(&frame[1]) / r - cos_t).abs());
        points.push(p);
        frames.push(frame);
        taus.push(y[0]);
        kappas.push(kappa_of(grid[j], cos_t));
        phis.push(phi_k(grid[j], 0));
    }

    let sol = Arc::new(sol);
    let kappa_tab = kappas.clone();
    let grid_tab = grid.clone();
    let analytic = CurveAnalytic::new(2, move |s, order| {
        let y = sol.eval(s);
        match order {
            0 => DVector::from_column_slice(&y[1..4]),
            1 => DVector::from_column_slice(&y[4..7]),
            _ => {
                let k = crate::diff::interp_cubic(&grid_tab, &kappa_tab, s);
                DVector::from_column_slice(&y[7..10]) * k
            }
        }
    });
    let curve = CurveSamples::from_analytic_grid(metric, grid, points, analytic, true)?;
    Ok(SlantSynthesis {
        curve,
        frames,
        kappa: kappas,
        tau: taus,
        phi: phis,
        g0,
        tau0,
        tau0_compatible,
        post_cos_deviation: post_dev,
    })
}

/// Configuration for concircular-curve synthesis.
pub struct ConcircularConfig {
    /// Constant value of <V, N> along the curve; must be nonzero.
    pub theta: f64,
    /// Concircular factor of the affine axis field V(x) = rho x + v.
    pub rho: f64,
    /// Binormal coefficient f3(s) with its derivative.
    pub f3: ScalarFunction,
    /// Initial tangential coefficient f1(s0); must be nonzero.
    pub f1_0: f64,
    pub s_range: (f64, f64),
    pub n_out: usize,
    pub ode: OdeOptions,
}

/// Output of [`synthesize_concircular`].
pub struct ConcircularSynthesis {
    pub curve: CurveSamples,
    pub frames: Vec<[DVector<f64>; 3]>,
    pub kappa: Vec<f64>,
    pub tau: Vec<f64>,
    pub f1: Vec<f64>,
    pub f3: Vec<f64>,
    /// The concircular axis field realizing <V, N> = theta along the curve.
    pub field: FieldSpec,
    /// Set when f3 is constant: the torsion vanishes and the output is a
    /// torsion-free order-2 degenerate (the concircular ODE does not apply).
    pub degenerate_torsion_free: bool,
    /// max |<V(gamma), N> - theta| over the output grid.
    pub post_theta_deviation: f64,
}

/// Builds a curve satisfying the concircular decomposition laws
/// f1' = theta kappa + rho, kappa f1 = tau f3, f3' = -theta tau for the
/// given f3, anchored so that the affine field V(x) = rho x + v restricts
/// to f1 T + theta N + f3 B along the curve.
pub fn synthesize_concircular(cfg: &ConcircularConfig) -> Result<ConcircularSynthesis> {
    let (s0, s1) = cfg.s_range;
    if !(s1 > s0) {
        return Err(Error::InvalidInput("need s0 < s1".into()));
    }
    if cfg.theta.abs() < 1e-12 {
        return Err(Error::InvalidParameter(
            "theta must be nonzero (the torsion law tau = -f3'/theta is undefined)".into(),
        ));
    }
    if cfg.f1_0.abs() < 1e-12 {
        return Err(Error::InvalidParameter("f1(s0) must be nonzero".into()));
    }
    let theta = cfg.theta;
    let rho = cfg.rho;
    let f3_of = |s: f64| cfg.f3.eval(s, 0);
    let tau_of = {
        let th = theta;
        move |_s: f64, f3p: f64| -f3p / th
    };

    let n_scan = (4 * cfg.n_out).max(400);
    let mut max_tau = 0.0f64;
    for j in 0..=n_scan {
        let s = s0 + (s1 - s0) * j as f64 / n_scan as f64;
        if f3_of(s).abs() < 1e-12 {
            return Err(Error::VanishingQuantity {
                what: format!("f3({s})"),
                index: j,
            });
        }
        max_tau = max_tau.max(tau_of(s, cfg.f3.eval(s, 1)).abs());
    }
    let degenerate = max_tau < 1e-14;

    let t0v = DVector::from_column_slice(&[1.0, 0.0, 0.0]);
    let n0v = DVector::from_column_slice(&[0.0, 1.0, 0.0]);
    let b0v = DVector::from_column_slice(&[0.0, 0.0, 1.0]);
    let gamma0 = DVector::from_column_slice(&[0.0, 0.0, 0.0]);
    let v_at_s0 = &t0v * cfg.f1_0 + &n0v * theta + &b0v * f3_of(s0);
    let v_const = &v_at_s0 - &gamma0 * rho;

    let metric = Arc::new(ChartMetric::builtin("euclidean", 3, &[])?);
    let mut field_params = vec![rho];
    field_params.extend_from_slice(v_const.as_slice());
    let field = FieldSpec::builtin("concircular_affine", metric.clone(), &field_params)?;

    let grid: Vec<f64> = (0..cfg.n_out)
        .map(|j| s0 + (s1 - s0) * j as f64 / (cfg.n_out - 1) as f64)
        .collect();

    if degenerate {
        // tau = 0 and kappa = tau f3 / f1 = 0: a straight line with a
        // parallel frame.
        let mut points = Vec::with_capacity(cfg.n_out);
        let mut frames = Vec::with_capacity(cfg.n_out);
        let mut f1 = Vec::with_capacity(cfg.n_out);
        let mut post = 0.0f64;
        for &s in &grid {
            let p = &gamma0 + &t0v * (s - s0);
            let vv = field.eval(&p)?;
            post = post.max((vv.dot(&n0v) - theta).abs());
            points.push(p);
            frames.push([t0v.clone(), n0v.clone(), b0v.clone()]);
            f1.push(cfg.f1_0 + rho * (s - s0));
        }
        let t0c = t0v.clone();
        let g0c = gamma0.clone();
        let s0c = s0;
        let analytic = CurveAnalytic::new(2, move |s, order| match order {
            0 => &g0c + &t0c * (s - s0c),
            1 => t0c.clone(),
            _ => DVector::zeros(3),
        });
        let curve = CurveSamples::from_analytic_grid(metric, grid.clone(), points, analytic, true)?;
        return Ok(ConcircularSynthesis {
            curve,
            frames,
            kappa: vec![0.0; cfg.n_out],
            tau: vec![0.0; cfg.n_out],
            f1,
            f3: grid.iter().map(|&s| f3_of(s)).collect(),
            field,
            degenerate_torsion_free: true,
            post_theta_deviation: post,
        });
    }

    // Joint state: [f1, gamma, T, N, B].
    let mut y0 = vec![cfg.f1_0];
    y0.extend_from_slice(gamma0.as_slice());
    y0.extend_from_slice(t0v.as_slice());
    y0.extend_from_slice(n0v.as_slice());
    y0.extend_from_slice(b0v.as_slice());
    let f3_spec = &cfg.f3;
    let rhs = move |s: f64, y: &[f64], dy: &mut [f64]| {
        let f1 = y[0];
        let f3 = f3_spec.eval(s, 0);
        let tau = -f3_spec.eval(s, 1) / theta;
        let k = tau * f3 / f1;
        dy[0] = theta * k + rho;
        let t = &y[4..7];
        let nv = &y[7..10];
        let b = &y[10..13];
        for i in 0..3 {
            dy[1 + i] = t[i];
            dy[4 + i] = k * nv[i];
            dy[7 + i] = -k * t[i] + tau * b[i];
            dy[10 + i] = -tau * nv[i];
        }
    };
    let f3_guard = &cfg.f3;
    let sol = integrate_with_guard(rhs, s0, s1, &y0, &cfg.ode, move |s, y| {
        let f1 = y[0];
        if f1.abs() < 1e-10 {
            return Err(format!("f1 crossed zero at s = {s}"));
        }
        let tau = -f3_guard.eval(s, 1) / theta;
        let k = tau * f3_guard.eval(s, 0) / f1;
        if !(k > 0.0) {
            return Err(format!("curvature became nonpositive at s = {s} (kappa = {k})"));
        }
        Ok(())
    })?;

    let states = sol.sample(&grid);
    let mut points = Vec::with_capacity(cfg.n_out);
    let mut frames = Vec::with_capacity(cfg.n_out);
    let mut f1 = Vec::with_capacity(cfg.n_out);
    let mut f3v = Vec::with_capacity(cfg.n_out);
    let mut kappas = Vec::with_capacity(cfg.n_out);
    let mut taus = Vec::with_capacity(cfg.n_out);
    let mut post = 0.0f64;
    for (j, y) in states.iter().enumerate() {
        let s = grid[j];
        let p = DVector::from_column_slice(&y[1..4]);
        let raw = [
            DVector::from_column_slice(&y[4..7]),
            DVector::from_column_slice(&y[7..10]),
            DVector::from_column_slice(&y[10..13]),
        ];
        let frame = reorthonormalize(&metric, &p, &raw)?;
        let vv = field.eval(&p)?;
        post = post.max((vv.dot(&frame[1]) - theta).abs());
        let f3s = f3_of(s);
        let tau = -cfg.f3.eval(s, 1) / theta;
        f1.push(y[0]);
        f3v.push(f3s);
        taus.push(tau);
        kappas.push(tau * f3s / y[0]);
        points.push(p);
        frames.push(frame);
    }

    let sol = Arc::new(sol);
    let theta_c = theta;
    let f3_a: Vec<f64> = grid.iter().map(|&s| f3_of(s)).collect();
    let f3p_a: Vec<f64> = grid.iter().map(|&s| cfg.f3.eval(s, 1)).collect();
    let grid_a = grid.clone();
    let analytic = CurveAnalytic::new(2, move |s, order| {
        let y = sol.eval(s);
        match order {
            0 => DVector::from_column_slice(&y[1..4]),
            1 => DVector::from_column_slice(&y[4..7]),
            _ => {
                let f3 = crate::diff::interp_cubic(&grid_a, &f3_a, s);
                let f3p = crate::diff::interp_cubic(&grid_a, &f3p_a, s);
                let tau = -f3p / theta_c;
                let k = tau * f3 / y[0];
                DVector::from_column_slice(&y[7..10]) * k
            }
        }
    });
    let curve = CurveSamples::from_analytic_grid(metric, grid, points, analytic, true)?;
    Ok(ConcircularSynthesis {
        curve,
        frames,
        kappa: kappas,
        tau: taus,
        f1,
        f3: f3v,
        field,
        degenerate_torsion_free: false,
        post_theta_deviation: post,
    })
}
