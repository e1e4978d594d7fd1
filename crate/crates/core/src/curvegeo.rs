//! Curves in coordinate charts: sampling, arc-length reparametrization,
//! Frenet frames of arbitrary order, and detection of geodesics, circles
//! and general helices.
//!
//! The Frenet apparatus orthonormalizes the iterated covariant derivatives
//! of the unit tangent with a reorthogonalized Gram-Schmidt pass per
//! sample. The detected order is required to be constant across the grid;
//! a change of order is an error carrying the split location.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::diff::{self, Window};
use crate::error::{Error, Result};
use crate::manifold::{ChartMetric, ChartPoint, Christoffel};

/// Gate for the unit-speed precondition of the Frenet apparatus.
const UNIT_SPEED_GATE: f64 = 1e-3;

/// Default relative rank tolerance separating a genuine order drop from
/// numerical noise on analytic inputs.
pub const DEFAULT_RANK_TOL: f64 = 1e-7;

/// Closed-form backing of a curve: `eval(s, order)` returns the order-th
/// chart-coordinate derivative (order 0 is the curve itself).
pub struct CurveAnalytic {
    max_order: usize,
    eval: Box<dyn Fn(f64, usize) -> DVector<f64> + Send + Sync>,
}

impl CurveAnalytic {
    pub fn new<F>(max_order: usize, eval: F) -> Self
    where
        F: Fn(f64, usize) -> DVector<f64> + Send + Sync + 'static,
    {
        CurveAnalytic {
            max_order,
            eval: Box::new(eval),
        }
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn eval(&self, s: f64, order: usize) -> DVector<f64> {
        debug_assert!(order <= self.max_order);
        (self.eval)(s, order)
    }
}

/// A curve as a sampled (or analytically backed) map from a parameter
/// interval into a chart.
pub struct CurveSamples {
    metric: Arc<ChartMetric>,
    grid: Vec<f64>,
    points: Vec<ChartPoint>,
    analytic: Option<Arc<CurveAnalytic>>,
    arclength: bool,
}

impl CurveSamples {
    /// Builds a curve from an analytic definition sampled on a uniform grid.
    pub fn from_analytic(
        metric: Arc<ChartMetric>,
        t0: f64,
        t1: f64,
        n: usize,
        analytic: CurveAnalytic,
        arclength: bool,
    ) -> Result<CurveSamples> {
        if n < 10 || !(t1 > t0) {
            return Err(Error::InvalidInput(format!(
                "need an increasing parameter interval and at least 10 samples, got [{t0}, {t1}] x {n}"
            )));
        }
        let grid: Vec<f64> = (0..n)
            .map(|k| t0 + (t1 - t0) * k as f64 / (n - 1) as f64)
            .collect();
        let points: Vec<ChartPoint> = grid.iter().map(|&t| analytic.eval(t, 0)).collect();
        Self::validate(&metric, &grid, &points)?;
        Ok(CurveSamples {
            metric,
            grid,
            points,
            analytic: Some(Arc::new(analytic)),
            arclength,
        })
    }

    /// Builds a curve from an explicit grid carrying both sampled points and
    /// an analytic backing (synthesis outputs with dense ODE data).
    pub fn from_analytic_grid(
        metric: Arc<ChartMetric>,
        grid: Vec<f64>,
        points: Vec<ChartPoint>,
        analytic: CurveAnalytic,
        arclength: bool,
    ) -> Result<CurveSamples> {
        Self::validate(&metric, &grid, &points)?;
        Ok(CurveSamples {
            metric,
            grid,
            points,
            analytic: Some(Arc::new(analytic)),
            arclength,
        })
    }

    /// Builds a curve from raw samples.
    pub fn from_points(
        metric: Arc<ChartMetric>,
        grid: Vec<f64>,
        points: Vec<ChartPoint>,
        arclength: bool,
    ) -> Result<CurveSamples> {
        Self::validate(&metric, &grid, &points)?;
        Ok(CurveSamples {
            metric,
            grid,
            points,
            analytic: None,
            arclength,
        })
    }

    fn validate(metric: &ChartMetric, grid: &[f64], points: &[ChartPoint]) -> Result<()> {
        if grid.len() != points.len() || grid.len() < 4 {
            return Err(Error::InvalidInput(format!(
                "curve needs matching grid/point counts of at least 4, got {} and {}",
                grid.len(),
                points.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "curve grid must be strictly increasing".into(),
            ));
        }
        for (k, p) in points.iter().enumerate() {
            if p.len() != metric.dim() {
                return Err(Error::DimensionMismatch {
                    expected: metric.dim(),
                    got: p.len(),
                });
            }
            if !metric.in_domain(p) {
                return Err(Error::DomainViolation {
                    point: p.as_slice().to_vec(),
                    context: format!("curve sample {k} (t = {})", grid[k]),
                });
            }
        }
        Ok(())
    }

    pub fn metric(&self) -> &Arc<ChartMetric> {
        &self.metric
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn points(&self) -> &[ChartPoint] {
        &self.points
    }

    pub fn n(&self) -> usize {
        self.grid.len()
    }

    pub fn is_arclength(&self) -> bool {
        self.arclength
    }

    /// Highest analytically available derivative order (0 when sampled-only).
    pub fn analytic_order(&self) -> usize {
        self.analytic.as_ref().map_or(0, |a| a.max_order)
    }

    pub fn eval_analytic(&self, s: f64, order: usize) -> Option<DVector<f64>> {
        self.analytic
            .as_ref()
            .filter(|a| order <= a.max_order)
            .map(|a| a.eval(s, order))
    }

    pub fn require_uniform_step(&self) -> Result<f64> {
        diff::uniform_step(&self.grid, 1e-6).ok_or_else(|| {
            Error::InvalidInput("operation requires a uniform parameter grid".into())
        })
    }

    /// Order-th parameter derivative sampled on the grid, with its validity
    /// window. Analytic orders are exact; deeper orders cascade 4th-order
    /// central differences, shrinking the window by two per pass.
    pub fn derivative_series(&self, order: usize) -> Result<(Vec<DVector<f64>>, Window)> {
        let n = self.n();
        if order == 0 {
            return Ok((self.points.clone(), Window::full(n)));
        }
        let avail = self.analytic_order().min(order);
        let mut series: Vec<DVector<f64>>;
        let mut win = Window::full(n);
        let mut at = if avail >= 1 {
            let a = self.analytic.as_ref().unwrap();
            series = self.grid.iter().map(|&s| a.eval(s, avail)).collect();
            avail
        } else {
            series = self.points.clone();
            0
        };
        let h = if at < order {
            self.require_uniform_step()?
        } else {
            0.0
        };
        while at < order {
            let (next, next_win) = diff::d1_vector(&series, h, win);
            series = next;
            win = next_win;
            at += 1;
        }
        Ok((series, win))
    }

    /// Unit or raw tangent vector at grid sample `k` (parameter derivative).
    pub fn tangent_at(&self, k: usize) -> Result<DVector<f64>> {
        if let Some(v) = self.eval_analytic(self.grid[k], 1) {
            return Ok(v);
        }
        let n = self.n();
        if k < 2 || k + 2 >= n {
            return Err(Error::InvalidInput(format!(
                "tangent stencil does not fit at boundary sample {k}"
            )));
        }
        let h = self.require_uniform_step()?;
        Ok(diff::d1_vector_at(&self.points, h, k))
    }

    /// Riemannian speed at each grid sample, with validity window.
    pub fn speed_series(&self) -> Result<(Vec<f64>, Window)> {
        let (d1, win) = self.derivative_series(1)?;
        let mut out = vec![0.0; self.n()];
        for k in win.iter() {
            out[k] = self.metric.norm(&self.points[k], &d1[k])?;
        }
        Ok((out, win))
    }
}

/// Per-sample orthonormal Frenet frame, curvatures and detected order.
pub struct FrenetData {
    /// Detected Frenet order r (number of independent derived vectors).
    pub order: usize,
    /// Number of frame vectors actually carried (r, or m when the frame was
    /// extended to a positively oriented full frame).
    pub frame_len: usize,
    /// Whether the last frame vector came from the oriented completion
    /// rather than Gram-Schmidt.
    pub completed: bool,
    pub grid: Vec<f64>,
    /// Curve points at the grid samples.
    pub points: Vec<ChartPoint>,
    /// frames[k][i] = N_{i+1} at sample k (ragged outside `window`).
    pub frames: Vec<Vec<DVector<f64>>>,
    /// nabla_frames[k][i] = covariant derivative of N_{i+1} along the curve
    /// (valid on `window`).
    pub nabla_frames: Vec<Vec<DVector<f64>>>,
    /// curvatures[k][i] = kappa_{i+1} at sample k (len frame_len - 1).
    pub curvatures: Vec<Vec<f64>>,
    /// Window of samples on which frames and curvatures are valid.
    pub window: Window,
    /// Max residual of each Frenet equation over the window.
    pub frenet_residuals: Vec<f64>,
    /// Max |<N_i, N_j> - delta_ij| over the window.
    pub orthonormality_defect: f64,
    /// Max first-curvature magnitude seen during order detection (geodesic
    /// diagnostic; equals max kappa_1 for curves of order >= 2).
    pub max_kappa1: f64,
    metric: Arc<ChartMetric>,
}

impl FrenetData {
    pub fn metric(&self) -> &Arc<ChartMetric> {
        &self.metric
    }

    /// kappa_{i+1} as a series (zero-filled outside the window).
    pub fn curvature_series(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for k in self.window.iter() {
            out[k] = self.curvatures[k][i];
        }
        out
    }

    /// First curvature at sample `k`.
    pub fn kappa(&self, k: usize) -> f64 {
        self.curvatures[k][0]
    }

    /// Last curvature (torsion for a full frame in a 3-chart) at sample `k`.
    pub fn tau(&self, k: usize) -> f64 {
        self.curvatures[k][self.frame_len - 2]
    }

    pub fn frame(&self, k: usize) -> &[DVector<f64>] {
        &self.frames[k]
    }
}

/// Reparametrizes a regular curve by arc length with `n_out` samples.
///
/// The output grid starts at the original parameter origin when the input
/// is already flagged as arc length (making the operation a resampling
/// identity), at zero otherwise.
pub fn reparametrize_arclength(curve: &CurveSamples, n_out: usize) -> Result<CurveSamples> {
    if n_out < 10 {
        return Err(Error::InvalidInput(
            "reparametrization needs at least 10 output samples".into(),
        ));
    }
    let n = curve.n();
    let (speeds, win) = curve.speed_series()?;
    for k in win.iter() {
        if speeds[k] < 1e-12 {
            return Err(Error::NotRegular {
                index: k,
                t: curve.grid[k],
            });
        }
    }

    let analytic = curve.analytic.clone();
    let metric = curve.metric.clone();
    let grid = &curve.grid;

    // Cumulative arc length at the grid nodes.
    let cumulative: Vec<f64> = if let Some(a) = &analytic {
        let speed_of = |t: f64| -> Result<f64> {
            let p = a.eval(t, 0);
            let v = a.eval(t, 1);
            metric.norm(&p, &v)
        };
        let mut acc = vec![0.0; n];
        for k in 1..n {
            acc[k] = acc[k - 1] + gauss7(&speed_of, grid[k - 1], grid[k])?;
        }
        acc
    } else {
        cumulative_quadratic(grid, &speeds, win)?
    };
    let total = cumulative[n - 1];
    if !(total > 0.0) {
        return Err(Error::NotRegular { index: 0, t: grid[0] });
    }

    let s_origin = if curve.arclength { grid[0] } else { 0.0 };
    let out_grid: Vec<f64> = (0..n_out)
        .map(|j| s_origin + total * j as f64 / (n_out - 1) as f64)
        .collect();

    // Invert s -> t for each output sample.
    let mut ts = Vec::with_capacity(n_out);
    for j in 0..n_out {
        let s_rel = (out_grid[j] - s_origin).clamp(0.0, total);
        let t = if let Some(a) = &analytic {
            invert_analytic(a, &metric, grid, &cumulative, s_rel)?
        } else {
            invert_sampled(grid, &cumulative, &speeds, win, s_rel)
        };
        ts.push(t);
    }

    let points: Vec<ChartPoint> = if let Some(a) = &analytic {
        ts.iter().map(|&t| a.eval(t, 0)).collect()
    } else {
        let dim = metric.dim();
        ts.iter()
            .map(|&t| {
                DVector::from_fn(dim, |i, _| {
                    let coord: Vec<f64> = curve.points.iter().map(|p| p[i]).collect();
                    diff::interp_cubic(grid, &coord, t)
                })
            })
            .collect()
    };

    let out_analytic = analytic.map(|a| {
        // Chain rule through the cached s -> t table; the unit tangent is
        // gamma'(t)/|gamma'(t)| evaluated at the interpolated t.
        let xs = out_grid.clone();
        let ts_tab = ts.clone();
        let dts: Vec<f64> = ts
            .iter()
            .map(|&t| {
                let p = a.eval(t, 0);
                let v = a.eval(t, 1);
                1.0 / metric.norm(&p, &v).unwrap_or(1.0)
            })
            .collect();
        let metric2 = metric.clone();
        Arc::new(CurveAnalytic::new(1, move |s, order| {
            let t = diff::interp_hermite(&xs, &ts_tab, &dts, s);
            match order {
                0 => a.eval(t, 0),
                _ => {
                    let p = a.eval(t, 0);
                    let v = a.eval(t, 1);
                    let speed = metric2.norm(&p, &v).unwrap_or(1.0);
                    v / speed
                }
            }
        }))
    });

    CurveSamples::validate(&metric, &out_grid, &points)?;
    Ok(CurveSamples {
        metric,
        grid: out_grid,
        points,
        analytic: out_analytic,
        arclength: true,
    })
}

/// Computes the Frenet apparatus of a unit-speed curve.
///
/// Iterated covariant derivatives of the tangent are orthonormalized per
/// sample; the order is the first index at which the residual norm ratio
/// drops below `rank_tol` uniformly over the grid. When the chart dimension
/// permits (order m or m-1), the frame is extended so that it is positively
/// oriented in the chart, which fixes the sign of the last curvature.
pub fn frenet_apparatus(curve: &CurveSamples, rank_tol: f64) -> Result<FrenetData> {
    let metric = curve.metric().clone();
    let m = metric.dim();
    let n = curve.n();
    if !curve.is_arclength() {
        return Err(Error::NotApplicable(
            "Frenet apparatus requires an arc-length parametrized curve".into(),
        ));
    }
    let h = curve.require_uniform_step()?;
    let (tangent, w_t) = curve.derivative_series(1)?;

    // Cache metric data along the curve.
    let mut gmats: Vec<Option<DMatrix<f64>>> = vec![None; n];
    let mut chris: Vec<Option<Christoffel>> = vec![None; n];
    for k in w_t.iter() {
        gmats[k] = Some(metric.components(&curve.points[k])?);
        chris[k] = Some(metric.christoffel(&curve.points[k])?);
    }
    let ip = |k: usize, u: &DVector<f64>, v: &DVector<f64>| -> f64 {
        (u.transpose() * gmats[k].as_ref().unwrap() * v)[(0, 0)]
    };

    for k in w_t.iter() {
        let sq = ip(k, &tangent[k], &tangent[k]);
        if (sq - 1.0).abs() > UNIT_SPEED_GATE {
            return Err(Error::NotUnitSpeed {
                index: k,
                defect: (sq - 1.0).abs(),
            });
        }
    }

    let mut frames: Vec<Vec<DVector<f64>>> = vec![Vec::new(); n];
    for k in w_t.iter() {
        let norm = ip(k, &tangent[k], &tangent[k]).sqrt();
        frames[k].push(&tangent[k] / norm);
    }

    let mut order = 1usize;
    let mut win = w_t;
    let mut d_prev = tangent.clone();
    let mut w_prev = w_t;
    let mut max_kappa1 = 0.0f64;

    for j in 2..=m {
        // D_j = covariant derivative of D_{j-1} along the tangent.
        let (mut dj, wj): (Vec<DVector<f64>>, Window) =
            if j == 2 && curve.analytic_order() >= 2 {
                let series: Vec<DVector<f64>> = curve
                    .grid
                    .iter()
                    .map(|&s| curve.eval_analytic(s, 2).unwrap())
                    .collect();
                (series, w_prev)
            } else {
                let (dd, wd) = diff::d1_vector(&d_prev, h, w_prev);
                (dd, wd)
            };
        for k in wj.iter() {
            let corr = chris[k]
                .as_ref()
                .unwrap()
                .contract(&tangent[k], &d_prev[k]);
            dj[k] += corr;
        }

        // Pointwise Gram-Schmidt residual against the current frame.
        let mut residuals: Vec<DVector<f64>> = vec![DVector::zeros(m); n];
        let mut indep = Vec::with_capacity(wj.len());
        for k in wj.iter() {
            let mut u = dj[k].clone();
            for _ in 0..2 {
                for f in &frames[k] {
                    let c = ip(k, &u, f);
                    u -= f * c;
                }
            }
            let res_norm = ip(k, &u, &u).max(0.0).sqrt();
            let scale = ip(k, &dj[k], &dj[k]).max(0.0).sqrt().max(1.0);
            indep.push(res_norm >= rank_tol * scale);
            residuals[k] = u;
            if j == 2 {
                max_kappa1 = max_kappa1.max(res_norm);
            }
        }

        let all_indep = indep.iter().all(|&b| b);
        let none_indep = indep.iter().all(|&b| !b);
        if all_indep {
            for (off, k) in wj.iter().enumerate() {
                let _ = off;
                let u = &residuals[k];
                let norm = ip(k, u, u).sqrt();
                let nj = u / norm;
                frames[k].push(nj);
            }
            order = j;
            win = wj;
            d_prev = dj;
            w_prev = wj;
        } else if none_indep {
            break;
        } else {
            let first = indep[0];
            let split = wj.iter().zip(&indep).find(|(_, &b)| b != first).unwrap().0;
            return Err(Error::OrderChange {
                index: split,
                s: curve.grid[split],
                low: j - 1,
                high: j,
            });
        }
    }

    // Extend / orient the frame.
    let mut frame_len = order;
    let mut completed = false;
    if order == m {
        for k in win.iter() {
            if frame_det(&frames[k]) < 0.0 {
                let last = frames[k].last_mut().unwrap();
                *last = -&*last;
            }
        }
    } else if order == m - 1 {
        for k in win.iter() {
            let nm = oriented_completion(gmats[k].as_ref().unwrap(), &frames[k])?;
            frames[k].push(nm);
        }
        frame_len = m;
        completed = true;
    }

    // Curvatures and Frenet residuals.
    let mut curvatures: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut nabla_frames: Vec<Vec<DVector<f64>>> = vec![Vec::new(); n];
    let mut frenet_residuals = vec![0.0f64; frame_len];
    let window;
    if frame_len >= 2 {
        window = win.shrink(2);
        for i in 0..frame_len {
            let mut arr: Vec<DVector<f64>> = vec![DVector::zeros(m); n];
            for k in win.iter() {
                arr[k] = frames[k][i].clone();
            }
            for k in window.iter() {
                let mut nab = diff::d1_vector_at(&arr, h, k);
                nab += chris[k].as_ref().unwrap().contract(&frames[k][0], &arr[k]);
                nabla_frames[k].push(nab);
            }
        }
        for k in window.iter() {
            let mut kappas = Vec::with_capacity(frame_len - 1);
            for i in 0..frame_len - 1 {
                kappas.push(ip(k, &nabla_frames[k][i], &frames[k][i + 1]));
            }
            curvatures[k] = kappas;
        }
        for i in 0..frame_len {
            let mut worst = 0.0f64;
            for k in window.iter() {
                let mut r = nabla_frames[k][i].clone();
                if i > 0 {
                    r += &frames[k][i - 1] * curvatures[k][i - 1];
                }
                if i + 1 < frame_len {
                    r -= &frames[k][i + 1] * curvatures[k][i];
                }
                worst = worst.max(ip(k, &r, &r).max(0.0).sqrt());
            }
            frenet_residuals[i] = worst;
        }
    } else {
        window = win;
        // Geodesic: the only Frenet equation is grad_T T = 0.
        frenet_residuals = vec![max_kappa1];
    }

    // Orthonormality defect over the final window.
    let mut ortho = 0.0f64;
    for k in window.iter() {
        for i in 0..frame_len {
            for j in i..frame_len {
                let want = if i == j { 1.0 } else { 0.0 };
                ortho = ortho.max((ip(k, &frames[k][i], &frames[k][j]) - want).abs());
            }
        }
    }

    Ok(FrenetData {
        order,
        frame_len,
        completed,
        grid: curve.grid.clone(),
        points: curve.points.clone(),
        frames,
        nabla_frames,
        curvatures,
        window,
        frenet_residuals,
        orthonormality_defect: ortho,
        max_kappa1,
        metric,
    })
}

/// Classification flags produced by [`detect_special`].
#[derive(Debug, Clone)]
pub struct SpecialClassification {
    pub geodesic: bool,
    pub max_kappa1: f64,
    pub circle: Option<CircleReport>,
    pub general_helix: Option<HelixReport>,
}

/// An order-2 curve with constant first curvature R; its radius is 1/R.
#[derive(Debug, Clone)]
pub struct CircleReport {
    pub r_constant: f64,
    pub radius: f64,
    pub kappa_deviation: f64,
    pub second_residual: f64,
}

/// Constant ratio of torsion to curvature.
#[derive(Debug, Clone)]
pub struct HelixReport {
    pub ratio: f64,
    pub deviation: f64,
}

/// Flags geodesics, circles (with fitted radius), and general helices.
pub fn detect_special(frenet: &FrenetData, tol: f64) -> Result<SpecialClassification> {
    if frenet.window.len() == 0 {
        return Err(Error::InvalidInput("empty Frenet window".into()));
    }
    let geodesic = frenet.order == 1 || frenet.max_kappa1 < tol;

    let mut circle = None;
    if frenet.order == 2 {
        let kappas: Vec<f64> = frenet.window.iter().map(|k| frenet.kappa(k)).collect();
        let mean = kappas.iter().sum::<f64>() / kappas.len() as f64;
        let dev = kappas
            .iter()
            .map(|k| (k - mean).abs())
            .fold(0.0f64, f64::max);
        // Circle condition: grad_T N_2 = -R T.
        let mut second = 0.0f64;
        for k in frenet.window.iter() {
            let r = &frenet.nabla_frames[k][1] + &frenet.frames[k][0] * mean;
            let gm = frenet.metric.components(&frenet.points[k])?;
            let norm = ((r.transpose() * gm * &r)[(0, 0)]).max(0.0).sqrt();
            second = second.max(norm);
        }
        if dev < tol && second < tol && mean > tol {
            circle = Some(CircleReport {
                r_constant: mean,
                radius: 1.0 / mean,
                kappa_deviation: dev,
                second_residual: second,
            });
        }
    }

    let mut general_helix = None;
    if frenet.order == 3 {
        let ratios: Vec<f64> = frenet
            .window
            .iter()
            .map(|k| frenet.tau(k) / frenet.kappa(k))
            .collect();
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let dev = ratios
            .iter()
            .map(|r| (r - mean).abs())
            .fold(0.0f64, f64::max);
        if dev < tol {
            general_helix = Some(HelixReport {
                ratio: mean,
                deviation: dev,
            });
        }
    }

    Ok(SpecialClassification {
        geodesic,
        max_kappa1: frenet.max_kappa1,
        circle,
        general_helix,
    })
}

fn frame_det(frame: &[DVector<f64>]) -> f64 {
    let m = frame[0].len();
    let mat = DMatrix::from_fn(m, m, |i, j| frame[j][i]);
    mat.determinant()
}

/// Unit vector g-orthogonal to the given orthonormal vectors, signed so the
/// completed frame has positive chart orientation.
///
/// Computed as the generalized cross product (cofactor expansion) of the
/// rows (g N_i)^T, which spans the nullspace of the (m-1) x m system.
fn oriented_completion(g: &DMatrix<f64>, frame: &[DVector<f64>]) -> Result<DVector<f64>> {
    let m = g.nrows();
    let rows = frame.len();
    debug_assert_eq!(rows, m - 1);
    let mut a = DMatrix::zeros(rows, m);
    for (i, f) in frame.iter().enumerate() {
        let gf = g * f;
        for j in 0..m {
            a[(i, j)] = gf[j];
        }
    }
    let mut null = DVector::zeros(m);
    for j in 0..m {
        let minor = a.clone().remove_column(j).determinant();
        null[j] = if j % 2 == 0 { minor } else { -minor };
    }
    let norm_sq = (null.transpose() * g * &null)[(0, 0)];
    if !(norm_sq > 1e-24) {
        return Err(Error::InvalidInput(
            "degenerate frame: no oriented completion".into(),
        ));
    }
    let mut nm = null / norm_sq.sqrt();
    let mut full: Vec<DVector<f64>> = frame.to_vec();
    full.push(nm.clone());
    if frame_det(&full) < 0.0 {
        nm = -nm;
    }
    Ok(nm)
}

/// 7-point Gauss-Legendre quadrature of `f` over `[a, b]`.
fn gauss7<F>(f: &F, a: f64, b: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    const X: [f64; 7] = [
        -0.9491079123427585,
        -0.7415311855993945,
        -0.4058451513773972,
        0.0,
        0.4058451513773972,
        0.7415311855993945,
        0.9491079123427585,
    ];
    const W: [f64; 7] = [
        0.1294849661688697,
        0.2797053914892766,
        0.3818300505051189,
        0.4179591836734694,
        0.3818300505051189,
        0.2797053914892766,
        0.1294849661688697,
    ];
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for i in 0..7 {
        acc += W[i] * f(mid + half * X[i])?;
    }
    Ok(acc * half)
}

/// Cumulative integral of sampled speeds by piecewise-quadratic quadrature.
fn cumulative_quadratic(grid: &[f64], speeds: &[f64], win: Window) -> Result<Vec<f64>> {
    let n = grid.len();
    // Sampled speeds are only valid on `win`; extend to the ends by cubic
    // interpolation so the cumulative length covers the whole grid.
    let g_in: Vec<f64> = win.iter().map(|k| grid[k]).collect();
    let v_in: Vec<f64> = win.iter().map(|k| speeds[k]).collect();
    let v_of = |t: f64| diff::interp_cubic(&g_in, &v_in, t.clamp(g_in[0], g_in[g_in.len() - 1]));
    let mut acc = vec![0.0; n];
    for k in 1..n {
        // Simpson on each grid interval with the interpolated midpoint.
        let (a, b) = (grid[k - 1], grid[k]);
        let mid = 0.5 * (a + b);
        acc[k] = acc[k - 1] + (b - a) / 6.0 * (v_of(a) + 4.0 * v_of(mid) + v_of(b));
    }
    Ok(acc)
}

fn invert_analytic(
    a: &Arc<CurveAnalytic>,
    metric: &Arc<ChartMetric>,
    grid: &[f64],
    cumulative: &[f64],
    s: f64,
) -> Result<f64> {
    let n = grid.len();
    let i = cumulative.partition_point(|&c| c < s).clamp(1, n - 1) - 1;
    let speed_of = |t: f64| -> Result<f64> {
        let p = a.eval(t, 0);
        let v = a.eval(t, 1);
        metric.norm(&p, &v)
    };
    // Newton iteration on S(t) - s with quadrature from the grid node.
    let mut t = grid[i]
        + (grid[i + 1] - grid[i]) * (s - cumulative[i])
            / (cumulative[i + 1] - cumulative[i]).max(1e-300);
    for _ in 0..4 {
        let st = cumulative[i] + gauss7(&speed_of, grid[i], t)?;
        let v = speed_of(t)?;
        if v <= 0.0 {
            break;
        }
        t -= (st - s) / v;
        t = t.clamp(grid[0], grid[n - 1]);
    }
    Ok(t)
}

fn invert_sampled(grid: &[f64], cumulative: &[f64], speeds: &[f64], win: Window, s: f64) -> f64 {
    let n = grid.len();
    let i = cumulative.partition_point(|&c| c < s).clamp(1, n - 1) - 1;
    // Hermite model of S on [t_i, t_{i+1}] using interpolated end speeds.
    let g_in: Vec<f64> = win.iter().map(|k| grid[k]).collect();
    let v_in: Vec<f64> = win.iter().map(|k| speeds[k]).collect();
    let v_of = |t: f64| diff::interp_cubic(&g_in, &v_in, t.clamp(g_in[0], g_in[g_in.len() - 1]));
    let xs = [grid[i], grid[i + 1]];
    let ys = [cumulative[i], cumulative[i + 1]];
    let dys = [v_of(grid[i]), v_of(grid[i + 1])];
    let mut t = xs[0] + (xs[1] - xs[0]) * (s - ys[0]) / (ys[1] - ys[0]).max(1e-300);
    for _ in 0..6 {
        let st = diff::interp_hermite(&xs, &ys, &dys, t);
        let v = v_of(t).max(1e-300);
        t -= (st - s) / v;
        t = t.clamp(xs[0], xs[1]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthesis::builtin_curve;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

    fn euclidean3() -> Arc<ChartMetric> {
        Arc::new(ChartMetric::builtin("euclidean", 3, &[]).unwrap())
    }

    /// Circle of radius 2 parametrized by angle (speed 2, not arc length).
    fn circle_by_angle() -> CurveSamples {
        CurveSamples::from_analytic(
            euclidean3(),
            0.0,
            TAU,
            801,
            CurveAnalytic::new(2, |t, order| {
                let r = 2.0;
                match order {
                    0 => DVector::from_column_slice(&[r * t.cos(), r * t.sin(), 0.0]),
                    1 => DVector::from_column_slice(&[-r * t.sin(), r * t.cos(), 0.0]),
                    _ => DVector::from_column_slice(&[-r * t.cos(), -r * t.sin(), 0.0]),
                }
            }),
            false,
        )
        .unwrap()
    }

    #[test]
    fn reparametrize_circle_has_full_length() {
        let curve = circle_by_angle();
        let out = reparametrize_arclength(&curve, 1001).unwrap();
        let total = out.grid()[out.n() - 1] - out.grid()[0];
        assert_abs_diff_eq!(total, 4.0 * PI, epsilon = 1e-8);
        let (speeds, win) = out.speed_series().unwrap();
        for k in win.iter() {
            assert_abs_diff_eq!(speeds[k], 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn reparametrize_arclength_input_is_identity() {
        let spiral = builtin_curve("log_spiral", &[1.0, 10.0], 400).unwrap();
        let out = reparametrize_arclength(&spiral, 400).unwrap();
        assert_abs_diff_eq!(out.grid()[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.grid()[399], 10.0, epsilon = 1e-8);
        for (a, b) in spiral.points().iter().zip(out.points()) {
            assert!((a - b).norm() < 1e-7);
        }
    }

    #[test]
    fn reparametrize_sampled_only_circle() {
        let curve = circle_by_angle();
        let sampled = CurveSamples::from_points(
            euclidean3(),
            curve.grid().to_vec(),
            curve.points().to_vec(),
            false,
        )
        .unwrap();
        let out = reparametrize_arclength(&sampled, 801).unwrap();
        let total = out.grid()[out.n() - 1];
        assert_abs_diff_eq!(total, 4.0 * PI, epsilon = 1e-4);
        let (speeds, win) = out.speed_series().unwrap();
        for k in win.iter() {
            assert_abs_diff_eq!(speeds[k], 1.0, epsilon = 1e-4);
        }
    }

    #[test]
    fn reparametrize_hyperbolic_vertical_segment() {
        // c(t) = (0,0,e^t) has hyperbolic speed 1: already arc length.
        let line = builtin_curve("hyperbolic_vertical_line", &[0.0, 1.0], 101).unwrap();
        let out = reparametrize_arclength(&line, 101).unwrap();
        assert_abs_diff_eq!(out.grid()[100] - out.grid()[0], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn reparametrize_rejects_singular_speed() {
        let bad = CurveSamples::from_analytic(
            euclidean3(),
            -1.0,
            1.0,
            101,
            CurveAnalytic::new(1, |t, order| match order {
                0 => DVector::from_column_slice(&[t * t * t / 3.0, 0.0, 0.0]),
                _ => DVector::from_column_slice(&[t * t, 0.0, 0.0]),
            }),
            false,
        )
        .unwrap();
        assert!(matches!(
            reparametrize_arclength(&bad, 101),
            Err(Error::NotRegular { .. })
        ));
    }

    #[test]
    fn frenet_circle_order_two_constant_curvature() {
        let curve = reparametrize_arclength(&circle_by_angle(), 1201).unwrap();
        let frenet = frenet_apparatus(&curve, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(frenet.order, 2);
        assert_eq!(frenet.frame_len, 3);
        assert!(frenet.completed);
        for k in frenet.window.iter() {
            assert_abs_diff_eq!(frenet.kappa(k), 0.5, epsilon = 1e-6);
            assert_abs_diff_eq!(frenet.tau(k), 0.0, epsilon = 1e-6);
            // Counterclockwise circle in the xy-plane: oriented binormal +e_z.
            assert_abs_diff_eq!(frenet.frames[k][2][2], 1.0, epsilon = 1e-8);
        }
        assert!(frenet.orthonormality_defect < 1e-10);
    }

    #[test]
    fn frenet_log_spiral_curvature_law() {
        let spiral = builtin_curve("log_spiral", &[1.0, 10.0], 2001).unwrap();
        let frenet = frenet_apparatus(&spiral, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(frenet.order, 2);
        for k in frenet.window.iter() {
            let s = frenet.grid[k];
            assert_abs_diff_eq!(frenet.kappa(k) * s, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn frenet_loxodrome_curvature_and_torsion() {
        let lox = builtin_curve("cone_loxodrome", &[1.0, 10.0], 2501).unwrap();
        let frenet = frenet_apparatus(&lox, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(frenet.order, 3);
        let root39 = 39.0f64.sqrt();
        for k in frenet.window.iter() {
            let s = frenet.grid[k];
            assert_abs_diff_eq!(frenet.kappa(k) * 2.0 * s, root39, epsilon = 1e-6);
            assert_abs_diff_eq!(frenet.tau(k) * 2.0 * s, -3.0, epsilon = 1e-6);
        }
        for r in &frenet.frenet_residuals {
            assert!(*r < 1e-5, "Frenet residual {r}");
        }
    }

    #[test]
    fn frenet_rejects_non_arclength() {
        let curve = circle_by_angle();
        assert!(frenet_apparatus(&curve, DEFAULT_RANK_TOL).is_err());
    }

    #[test]
    fn frenet_detects_order_change() {
        // Flat for t < 0, curving for t > 0: order 1 vs 2 across the grid.
        let eps = 0.003;
        let curve = CurveSamples::from_analytic(
            euclidean3(),
            -1.0,
            1.0,
            401,
            CurveAnalytic::new(2, move |t, order| {
                let p = if t > 0.0 { t.powi(5) } else { 0.0 };
                let dp = if t > 0.0 { 5.0 * t.powi(4) } else { 0.0 };
                let ddp = if t > 0.0 { 20.0 * t.powi(3) } else { 0.0 };
                match order {
                    0 => DVector::from_column_slice(&[t, eps * p, 0.0]),
                    1 => DVector::from_column_slice(&[1.0, eps * dp, 0.0]),
                    _ => DVector::from_column_slice(&[0.0, eps * ddp, 0.0]),
                }
            }),
            true,
        )
        .unwrap();
        assert!(matches!(
            frenet_apparatus(&curve, DEFAULT_RANK_TOL),
            Err(Error::OrderChange { .. })
        ));
    }

    #[test]
    fn detect_special_flags() {
        let line = builtin_curve("hyperbolic_vertical_line", &[0.0, 1.0], 101).unwrap();
        let f = frenet_apparatus(&line, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(f.order, 1);
        let c = detect_special(&f, 1e-6).unwrap();
        assert!(c.geodesic);

        let circle = reparametrize_arclength(&circle_by_angle(), 1201).unwrap();
        let f = frenet_apparatus(&circle, DEFAULT_RANK_TOL).unwrap();
        let c = detect_special(&f, 1e-5).unwrap();
        assert!(!c.geodesic);
        let circ = c.circle.expect("circle detected");
        assert_abs_diff_eq!(circ.r_constant, 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(circ.radius, 2.0, epsilon = 1e-5);

        let lox = builtin_curve("cone_loxodrome", &[1.0, 10.0], 2501).unwrap();
        let f = frenet_apparatus(&lox, DEFAULT_RANK_TOL).unwrap();
        let c = detect_special(&f, 1e-5).unwrap();
        let helix = c.general_helix.expect("general helix detected");
        assert_abs_diff_eq!(helix.ratio, -3.0 / 39.0f64.sqrt(), epsilon = 1e-6);
    }

    #[test]
    fn frenet_invariant_under_reparametrization() {
        // Same circle entering by angle and by arc length: pointwise equal
        // curvature after matching arc length.
        let by_angle = reparametrize_arclength(&circle_by_angle(), 901).unwrap();
        let direct = builtin_curve("circle_origin", &[2.0, 0.0, 4.0 * PI], 901).unwrap();
        let fa = frenet_apparatus(&by_angle, DEFAULT_RANK_TOL).unwrap();
        let fd = frenet_apparatus(&direct, DEFAULT_RANK_TOL).unwrap();
        let win = fa.window.intersect(fd.window);
        for k in win.iter() {
            assert_abs_diff_eq!(fa.kappa(k), fd.kappa(k), epsilon = 1e-6);
        }
    }

    #[test]
    fn rectifying_builtin_position_decomposition() {
        // gamma = (s+b) T + a B: <gamma, N> = 0, <gamma, B> = a, tau/kappa = (s+b)/a.
        let (a, b) = (1.0, 0.5);
        let curve = builtin_curve("rectifying", &[a, b, 1.0, 4.0], 1501).unwrap();
        let frenet = frenet_apparatus(&curve, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(frenet.order, 3);
        for k in frenet.window.iter() {
            let s = frenet.grid[k];
            let p = &frenet.points[k];
            let gn = p.dot(&frenet.frames[k][1]);
            let gb = p.dot(&frenet.frames[k][2]);
            assert_abs_diff_eq!(gn, 0.0, epsilon = 1e-7);
            assert_abs_diff_eq!(gb, a, epsilon = 1e-7);
            assert_abs_diff_eq!(
                frenet.tau(k) / frenet.kappa(k),
                (s + b) / a,
                epsilon = 1e-6
            );
        }
    }

    #[test]
    fn log_spiral_slant_angle_against_radial() {
        // <V, N> = -1/sqrt(2) for the radial axis along the log spiral.
        let spiral = builtin_curve("log_spiral", &[1.0, 10.0], 1501).unwrap();
        let frenet = frenet_apparatus(&spiral, DEFAULT_RANK_TOL).unwrap();
        for k in frenet.window.iter() {
            let p = &frenet.points[k];
            let v = p / p.norm();
            let cos = v.dot(&frenet.frames[k][1]);
            assert_abs_diff_eq!(cos, -FRAC_1_SQRT_2, epsilon = 1e-7);
        }
    }
}
