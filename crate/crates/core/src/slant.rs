//! Anti-torqued slant helix verification: angle functions, decomposition
//! coefficients, the characterizing ODE systems, and the classification of
//! Euclidean slant helices with a radial axis.
//!
//! The axis decomposition along a curve of order r reads
//! V = f_1 T + cos(theta) N_2 + sum_{i>=3} f_i N_i, and the slant condition
//! pins <V, N_2>. Depending on whether the axis is parallel to the tangent,
//! to the principal normal, or to neither, the report lands in one of three
//! cases; in the generic case the coefficient functions satisfy a first
//! order system whose per-equation residuals are evaluated here.


use crate::curvegeo::{CurveSamples, FrenetData};
use crate::diff::{self, Window};
use crate::error::{Error, Result};
use crate::fields::{classify_field, torse_forming_fit, FieldClass, FieldSpec};

/// What the angle samples measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleMode {
    /// <V, N_2> per sample (the slant condition).
    PrincipalNormal,
    /// <V, T> per sample: order-1 (geodesic) degenerate input.
    Tangential,
}

/// Per-sample inner products of the axis with the distinguished frame
/// vector.
#[derive(Debug, Clone)]
pub struct AngleFunction {
    pub values: Vec<f64>,
    pub mode: AngleMode,
    pub window: Window,
}

/// Samples `<V(gamma(s)), N_2(s)>` along the curve.
///
/// For order-1 curves there is no principal normal; the tangential inner
/// product is returned instead, flagged `Tangential` (the axis-parallel
/// geodesic case).
pub fn angle_function(
    curve: &CurveSamples,
    frenet: &FrenetData,
    axis: &FieldSpec,
) -> Result<AngleFunction> {
    if curve.n() != frenet.grid.len() {
        return Err(Error::InvalidInput(
            "curve and Frenet data use different grids".into(),
        ));
    }
    let metric = frenet.metric();
    let idx = if frenet.order >= 2 { 1 } else { 0 };
    let mode = if frenet.order >= 2 {
        AngleMode::PrincipalNormal
    } else {
        AngleMode::Tangential
    };
    let mut values = vec![0.0; frenet.grid.len()];
    for k in frenet.window.iter() {
        let p = &frenet.points[k];
        let v = axis.eval(p)?;
        values[k] = metric.inner(p, &v, &frenet.frames[k][idx])?;
    }
    Ok(AngleFunction {
        values,
        mode,
        window: frenet.window,
    })
}

/// Which Theorem-4.1 style case the axis falls into along the curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SlantCase {
    /// V parallel to the tangent: the curve is an integral curve of a unit
    /// geodesic field, hence a geodesic.
    AxisParallelTangent,
    /// V parallel to the principal normal: order-2 curve with rho = -kappa_1.
    AxisParallelNormal,
    /// V parallel to no frame vector: the coefficient system applies.
    General,
}

/// Which characterizing system was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AntiSystem {
    /// General order-m system.
    GeneralM,
    /// Three-dimensional system.
    ThreeDimensional,
    /// theta = pi/2 (or 3pi/2) reduction.
    Perpendicular,
}

/// Residual of one equation of a characterizing system.
#[derive(Debug, Clone, serde::Serialize)]
pub struct LineResidual {
    pub label: String,
    pub residual: f64,
    /// True when terms referencing unavailable frame directions were
    /// dropped (frame shorter than the chart dimension).
    pub reduced: bool,
}

/// Residuals of every equation of the applicable system.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AntiSystemResiduals {
    pub system: AntiSystem,
    pub lines: Vec<LineResidual>,
}

impl AntiSystemResiduals {
    pub fn max(&self) -> f64 {
        self.lines.iter().map(|l| l.residual).fold(0.0, f64::max)
    }
}

/// Slant-helix verification report.
#[derive(Debug, Clone)]
pub struct SlantReport {
    pub case: SlantCase,
    pub angle_mode: AngleMode,
    /// <V, N_2> per sample (or <V, T> in the tangential case).
    pub angle_samples: Vec<f64>,
    /// Mean angle sample: the fitted cos(theta).
    pub cos_theta: f64,
    /// arccos of the clamped mean, in [0, pi].
    pub theta_hat: f64,
    pub constancy_residual: f64,
    /// coeffs[k] = [f_1, f_3, ..., f_len] at sample k.
    pub coeffs: Vec<Vec<f64>>,
    /// Conformal scalar of the axis fitted along the curve.
    pub rho: Vec<f64>,
    pub system: Option<AntiSystemResiduals>,
    pub is_slant_helix: bool,
    pub axis_class: FieldClass,
    /// Set when the axis is not anti-torqued; the computation proceeds.
    pub axis_warning: Option<String>,
    /// max |sum_i f_i^2 - 1| over the window (unit-axis decomposition).
    pub unit_decomposition_defect: f64,
    /// Case 2 check: max |rho + kappa_1|.
    pub rho_plus_kappa: Option<f64>,
    pub window: Window,
}

/// Tolerance under which a component norm counts as "parallel" in the case
/// split, relative to the axis norm.
fn parallel_defect(
    frenet: &FrenetData,
    axis: &FieldSpec,
    keep: usize,
) -> Result<f64> {
    let metric = frenet.metric();
    let mut worst = 0.0f64;
    for k in frenet.window.iter() {
        let p = &frenet.points[k];
        let v = axis.eval(p)?;
        let coeff = metric.inner(p, &v, &frenet.frames[k][keep])?;
        let rest = &v - &frenet.frames[k][keep] * coeff;
        let d = metric.inner(p, &rest, &rest)?.max(0.0).sqrt();
        let scale = metric.inner(p, &v, &v)?.max(0.0).sqrt().max(1e-300);
        worst = worst.max(d / scale);
    }
    Ok(worst)
}

/// Builds the full slant report for a curve and a candidate axis field.
pub fn slant_report(
    curve: &CurveSamples,
    frenet: &FrenetData,
    axis: &FieldSpec,
    tol: f64,
) -> Result<SlantReport> {
    let metric = frenet.metric();
    let angle = angle_function(curve, frenet, axis)?;

    // The axis is expected to be anti-torqued; warn (but proceed) otherwise.
    let sample_points: Vec<_> = frenet
        .window
        .iter()
        .step_by((frenet.window.len() / 64).max(1))
        .map(|k| frenet.points[k].clone())
        .collect();
    let axis_report = classify_field(axis, &sample_points, tol.max(1e-9))?;
    let axis_warning = if axis_report.label == FieldClass::AntiTorqued {
        None
    } else {
        Some(format!(
            "axis classified {} rather than anti_torqued; slant conditions may not characterize",
            axis_report.label.as_str()
        ))
    };

    let mut rho = vec![0.0; frenet.grid.len()];
    for k in frenet.window.iter() {
        rho[k] = torse_forming_fit(axis, &frenet.points[k])?.rho;
    }

    let win = frenet.window;
    let mean = win.iter().map(|k| angle.values[k]).sum::<f64>() / win.len() as f64;
    let constancy = win
        .iter()
        .map(|k| (angle.values[k] - mean).abs())
        .fold(0.0f64, f64::max);
    let theta_hat = mean.clamp(-1.0, 1.0).acos();

    if angle.mode == AngleMode::Tangential {
        // Order-1 input: the axis must be parallel to T for the slant
        // condition to make sense (Theorem case: geodesic).
        let defect = parallel_defect(frenet, axis, 0)?;
        let mut coeffs = vec![Vec::new(); frenet.grid.len()];
        for k in win.iter() {
            coeffs[k] = vec![angle.values[k]];
        }
        return Ok(SlantReport {
            case: SlantCase::AxisParallelTangent,
            angle_mode: angle.mode,
            angle_samples: angle.values,
            cos_theta: 0.0,
            theta_hat: std::f64::consts::FRAC_PI_2,
            constancy_residual: defect,
            coeffs,
            rho,
            system: None,
            is_slant_helix: defect < tol,
            axis_class: axis_report.label,
            axis_warning,
            unit_decomposition_defect: 0.0,
            rho_plus_kappa: None,
            window: win,
        });
    }

    // Decomposition coefficients f_1, f_3, ..., plus the angle itself (f_2).
    let mut coeffs = vec![Vec::new(); frenet.grid.len()];
    let mut unit_defect = 0.0f64;
    for k in win.iter() {
        let p = &frenet.points[k];
        let v = axis.eval(p)?;
        let mut row = Vec::with_capacity(frenet.frame_len - 1);
        let mut sq = 0.0;
        for (i, n) in frenet.frames[k].iter().enumerate() {
            let c = metric.inner(p, &v, n)?;
            sq += c * c;
            if i != 1 {
                row.push(c);
            }
        }
        coeffs[k] = row;
        unit_defect = unit_defect.max((sq - 1.0).abs());
    }

    let tangent_defect = parallel_defect(frenet, axis, 0)?;
    let normal_defect = parallel_defect(frenet, axis, 1)?;
    let (case, rho_plus_kappa) = if tangent_defect < tol {
        (SlantCase::AxisParallelTangent, None)
    } else if normal_defect < tol {
        // Case 2: order 2 and rho = -kappa_1 along the curve.
        let worst = win
            .iter()
            .map(|k| (rho[k] + frenet.kappa(k)).abs())
            .fold(0.0f64, f64::max);
        (SlantCase::AxisParallelNormal, Some(worst))
    } else {
        (SlantCase::General, None)
    };

    let mut report = SlantReport {
        case,
        angle_mode: angle.mode,
        angle_samples: angle.values,
        cos_theta: mean,
        theta_hat,
        constancy_residual: constancy,
        coeffs,
        rho,
        system: None,
        is_slant_helix: constancy < tol,
        axis_class: axis_report.label,
        axis_warning,
        unit_decomposition_defect: unit_defect,
        rho_plus_kappa,
        window: win,
    };
    if case == SlantCase::General {
        report.system = Some(system_residuals_anti(curve, frenet, axis, &report)?);
    }
    Ok(report)
}

/// Evaluates every equation of the applicable anti-torqued system:
/// the general order-m system, its 3-chart form, or the theta = pi/2
/// reduction. Returns the max |LHS| per equation.
pub fn system_residuals_anti(
    _curve: &CurveSamples,
    frenet: &FrenetData,
    _axis: &FieldSpec,
    report: &SlantReport,
) -> Result<AntiSystemResiduals> {
    if report.case != SlantCase::General {
        return Err(Error::NotApplicable(
            "coefficient system applies only when the axis is parallel to no frame vector".into(),
        ));
    }
    if frenet.order < 2 {
        return Err(Error::NotApplicable(
            "system needs a curve of order at least 2".into(),
        ));
    }
    let m = frenet.metric().dim();
    let h = diff::uniform_step(&frenet.grid, 1e-6)
        .ok_or_else(|| Error::InvalidInput("system residuals need a uniform grid".into()))?;
    let win = frenet.window;
    let dwin = win.shrink(2);
    let cos_t = report.cos_theta;

    // Coefficient series: f[0] = f_1, f[1] = f_3, ... (frame index skips N_2).
    let n_coeff = report.coeffs[win.lo].len();
    let mut f = vec![vec![0.0; frenet.grid.len()]; n_coeff];
    for k in win.iter() {
        for (j, c) in report.coeffs[k].iter().enumerate() {
            f[j][k] = *c;
        }
    }
    let df: Vec<Vec<f64>> = f.iter().map(|s| diff::d1_scalar(s, h, win).0).collect();
    let kappa = |k: usize, i: usize| -> f64 {
        if i < frenet.curvatures[k].len() {
            frenet.curvatures[k][i]
        } else {
            0.0
        }
    };
    let rho = &report.rho;

    let perp = cos_t.abs() < 1e-9;
    let system = if m == 3 && perp {
        AntiSystem::Perpendicular
    } else if m == 3 {
        AntiSystem::ThreeDimensional
    } else {
        AntiSystem::GeneralM
    };

    let mut lines = Vec::new();
    match system {
        AntiSystem::ThreeDimensional | AntiSystem::Perpendicular => {
            let mut l1 = 0.0f64;
            let mut l2 = 0.0f64;
            let mut l3 = 0.0f64;
            for k in dwin.iter() {
                let (f1, g) = (f[0][k], f[1][k]);
                let (kap, tau) = (kappa(k, 0), kappa(k, 1));
                let r = rho[k];
                if perp {
                    l1 = l1.max((df[0][k] - r * (1.0 - f1 * f1)).abs());
                    l2 = l2.max((kap * f1 - tau * g).abs());
                    l3 = l3.max((df[1][k] + r * f1 * g).abs());
                } else {
                    l1 = l1.max((df[0][k] - cos_t * kap - r * (1.0 - f1 * f1)).abs());
                    l2 = l2.max((kap * f1 - tau * g + cos_t * r * f1).abs());
                    l3 = l3.max((df[1][k] + cos_t * tau + r * f1 * g).abs());
                }
            }
            let names = if perp {
                ["T(f) - rho (1 - f^2)", "kappa f - tau g", "T(g) + rho f g"]
            } else {
                [
                    "T(f) - cos(theta) kappa - rho (1 - f^2)",
                    "kappa f - tau g + cos(theta) rho f",
                    "T(g) + cos(theta) tau + rho f g",
                ]
            };
            for (label, residual) in names.iter().zip([l1, l2, l3]) {
                lines.push(LineResidual {
                    label: label.to_string(),
                    residual,
                    reduced: false,
                });
            }
        }
        AntiSystem::GeneralM => {
            // f indexing: coeff j corresponds to f_1 (j = 0) and f_{j+2}
            // (j >= 1). Available frame vectors limit the lines.
            let len = frenet.frame_len;
            let coeff_of = |k: usize, frame_i: usize| -> f64 {
                // frame_i is 1-based: f_1 -> f[0], f_i (i >= 3) -> f[i-2].
                if frame_i == 1 {
                    f[0][k]
                } else if frame_i == 2 {
                    report.angle_samples[k]
                } else {
                    f[frame_i - 2][k]
                }
            };
            let dcoeff_of = |k: usize, frame_i: usize| -> f64 {
                if frame_i == 1 {
                    df[0][k]
                } else {
                    df[frame_i - 2][k]
                }
            };
            let reduced = len < m;
            // Line 1.
            let mut worst = 0.0f64;
            for k in dwin.iter() {
                let f1 = coeff_of(k, 1);
                worst = worst
                    .max((dcoeff_of(k, 1) - cos_t * kappa(k, 0) - rho[k] * (1.0 - f1 * f1)).abs());
            }
            lines.push(LineResidual {
                label: "T(f_1) - cos(theta) kappa_1 - rho (1 - f_1^2)".into(),
                residual: worst,
                reduced: false,
            });
            // Line 2.
            let mut worst = 0.0f64;
            for k in dwin.iter() {
                let f3 = if len >= 3 { coeff_of(k, 3) } else { 0.0 };
                worst = worst.max(
                    (kappa(k, 0) * coeff_of(k, 1) - kappa(k, 1) * f3
                        + cos_t * rho[k] * coeff_of(k, 1))
                    .abs(),
                );
            }
            lines.push(LineResidual {
                label: "kappa_1 f_1 - kappa_2 f_3 + cos(theta) rho f_1".into(),
                residual: worst,
                reduced: len < 3,
            });
            // Lines for i = 3..=len.
            for i in 3..=len {
                let mut worst = 0.0f64;
                for k in dwin.iter() {
                    let mut lhs = dcoeff_of(k, i) + rho[k] * coeff_of(k, 1) * coeff_of(k, i);
                    if i == 3 {
                        lhs += cos_t * kappa(k, 1);
                    } else {
                        lhs += kappa(k, i - 2) * coeff_of(k, i - 1);
                    }
                    if i < len {
                        lhs -= kappa(k, i - 1) * coeff_of(k, i + 1);
                    }
                    worst = worst.max(lhs.abs());
                }
                lines.push(LineResidual {
                    label: format!("T(f_{i}) line"),
                    residual: worst,
                    reduced: reduced && i == len,
                });
            }
        }
    }
    Ok(AntiSystemResiduals { system, lines })
}

/// Fitted constant of the curvature-ratio law tau/kappa = c f / sqrt(1-f^2)
/// for perpendicular slant helices.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RatioLaw {
    pub c_hat: f64,
    pub residual: f64,
}

/// Fits the Theorem-4.2 ratio law on an order-3 curve with theta = pi/2.
pub fn ratio_law_check(frenet: &FrenetData, report: &SlantReport, tol: f64) -> Result<RatioLaw> {
    if report.cos_theta.abs() > tol {
        return Err(Error::NotApplicable(format!(
            "ratio law needs theta = pi/2 or 3pi/2, got cos(theta) = {}",
            report.cos_theta
        )));
    }
    if frenet.order != 3 {
        return Err(Error::NotApplicable(format!(
            "ratio law needs an order-3 curve, got order {}",
            frenet.order
        )));
    }
    let mut samples = Vec::with_capacity(report.window.len());
    for k in report.window.iter() {
        let f1 = report.coeffs[k][0];
        if f1.abs() < 1e-8 {
            return Err(Error::VanishingQuantity {
                what: "tangential coefficient f".into(),
                index: k,
            });
        }
        let sq = 1.0 - f1 * f1;
        if sq < 1e-12 {
            return Err(Error::VanishingQuantity {
                what: "1 - f^2".into(),
                index: k,
            });
        }
        samples.push(frenet.tau(k) / frenet.kappa(k) * sq.sqrt() / f1);
    }
    let c_hat = samples.iter().sum::<f64>() / samples.len() as f64;
    let residual = samples
        .iter()
        .map(|c| (c - c_hat).abs())
        .fold(0.0f64, f64::max);
    Ok(RatioLaw { c_hat, residual })
}

/// Branches of the Euclidean radial-axis classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EuclideanBranch {
    /// Circle centered at the origin in a plane through the origin.
    CircleOrigin,
    /// Logarithmic spiral in an affine plane.
    LogSpiral,
    /// Rectifying curve (<gamma, N> = 0).
    Rectifying,
    /// Generic branch: the distance/torsion laws are reported as residuals.
    Generic,
}

/// Affine fit of the distance function.
#[derive(Debug, Clone, serde::Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub max_deviation: f64,
}

/// How the torsion-law residual was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TauResidualForm {
    /// tau' - (tau/F)(F' + cos^2(theta) phi tau^2).
    Quotient,
    /// Multiplied through by F (used when F nearly vanishes).
    Product,
}

/// Euclidean slant-helix classification record.
#[derive(Debug, Clone)]
pub struct EuclideanSlantReport {
    pub branch: EuclideanBranch,
    /// Every branch predicate that passes at the given tolerance.
    pub passing: Vec<EuclideanBranch>,
    pub cos_theta: f64,
    pub theta_hat: f64,
    pub constancy_residual: f64,
    /// Distance function |gamma(s)| per sample.
    pub phi: Vec<f64>,
    /// Binormal coefficient <gamma, B> per sample.
    pub g: Vec<f64>,
    /// Auxiliary F(s) = (cos^2 theta + (phi phi')' - 1) phi'.
    pub f_aux: Vec<f64>,
    /// Max residual of the distance-curvature law (quotient form), when
    /// cos(theta) is bounded away from zero.
    pub kappa_residual: Option<f64>,
    /// Max residual of the torsion law.
    pub tau_residual: Option<f64>,
    pub tau_residual_form: TauResidualForm,
    pub line_fit: Option<LineFit>,
    /// max |<gamma, N>| over the window.
    pub gamma_n_max: f64,
    pub max_abs_tau: f64,
    pub window: Window,
}

/// Classifies a unit-speed curve in (punctured) Euclidean 3-space as a
/// slant helix with the radial unit axis, testing the branches in order:
/// circle about the origin, logarithmic spiral, rectifying curve, generic.
pub fn classify_euclidean_slant(
    curve: &CurveSamples,
    frenet: &FrenetData,
    tol: f64,
) -> Result<EuclideanSlantReport> {
    let metric = frenet.metric();
    if metric.dim() != 3
        || (metric.name() != "euclidean" && metric.name() != "punctured_euclidean")
    {
        return Err(Error::NotApplicable(
            "Euclidean slant classification needs a flat 3-chart".into(),
        ));
    }
    if !curve.is_arclength() {
        return Err(Error::NotApplicable("curve must be unit speed".into()));
    }
    if frenet.order < 2 {
        return Err(Error::NotApplicable(
            "classification needs a curve of order at least 2".into(),
        ));
    }
    let win = frenet.window;
    let h = diff::uniform_step(&frenet.grid, 1e-6)
        .ok_or_else(|| Error::InvalidInput("classification needs a uniform grid".into()))?;

    let n = frenet.grid.len();
    let mut phi = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut angles = vec![0.0; n];
    let mut gamma_n_max = 0.0f64;
    for k in win.iter() {
        let p = &frenet.points[k];
        let r = p.norm();
        if r < 1e-12 {
            return Err(Error::DomainViolation {
                point: p.as_slice().to_vec(),
                context: "curve passes through the origin".into(),
            });
        }
        phi[k] = r;
        angles[k] = p.dot(&frenet.frames[k][1]) / r;
        g[k] = p.dot(&frenet.frames[k][2]);
        gamma_n_max = gamma_n_max.max(p.dot(&frenet.frames[k][1]).abs());
    }
    let cos_theta = win.iter().map(|k| angles[k]).sum::<f64>() / win.len() as f64;
    let theta_hat = cos_theta.clamp(-1.0, 1.0).acos();
    let constancy = win
        .iter()
        .map(|k| (angles[k] - cos_theta).abs())
        .fold(0.0f64, f64::max);

    let max_abs_tau = win.iter().map(|k| frenet.tau(k).abs()).fold(0.0f64, f64::max);
    let phi_mean = win.iter().map(|k| phi[k]).sum::<f64>() / win.len() as f64;
    let phi_dev = win
        .iter()
        .map(|k| (phi[k] - phi_mean).abs())
        .fold(0.0f64, f64::max);
    let g_max = win.iter().map(|k| g[k].abs()).fold(0.0f64, f64::max);

    // Distance-function ladder through exact flat-chart identities
    // (avoids stacking finite differences on ODE-sampled data):
    // phi phi' = <gamma, T>, (phi phi')' = 1 + kappa <gamma, N>,
    // phi'' = ((phi phi')' - phi'^2) / phi.
    let mut dphi = vec![0.0; n];
    let mut ddphi = vec![0.0; n];
    let mut dpphi = vec![0.0; n];
    for k in win.iter() {
        let p = &frenet.points[k];
        dphi[k] = p.dot(&frenet.frames[k][0]) / phi[k];
        dpphi[k] = 1.0 + frenet.kappa(k) * angles[k] * phi[k];
        ddphi[k] = (dpphi[k] - dphi[k] * dphi[k]) / phi[k];
    }
    let (w1, w2) = (win, win);
    let min_dphi = w1.iter().map(|k| dphi[k].abs()).fold(f64::INFINITY, f64::min);

    // Least-squares affine fit of phi on the window.
    let line_fit = {
        let len = win.len() as f64;
        let sx = win.iter().map(|k| frenet.grid[k]).sum::<f64>();
        let sy = win.iter().map(|k| phi[k]).sum::<f64>();
        let sxx = win.iter().map(|k| frenet.grid[k] * frenet.grid[k]).sum::<f64>();
        let sxy = win.iter().map(|k| frenet.grid[k] * phi[k]).sum::<f64>();
        let det = len * sxx - sx * sx;
        if det.abs() < 1e-12 {
            None
        } else {
            let slope = (len * sxy - sx * sy) / det;
            let intercept = (sy * sxx - sx * sxy) / det;
            let dev = win
                .iter()
                .map(|k| (phi[k] - slope * frenet.grid[k] - intercept).abs())
                .fold(0.0f64, f64::max);
            Some(LineFit {
                slope,
                intercept,
                max_deviation: dev,
            })
        }
    };

    // Distance-curvature law (quotient form) where cos(theta) is usable.
    let kappa_residual = if cos_theta.abs() > tol {
        let mut worst = 0.0f64;
        for k in w2.iter() {
            let want = (dpphi[k] - 1.0) / (cos_theta * phi[k]);
            worst = worst.max((frenet.kappa(k) - want).abs());
        }
        Some(worst)
    } else {
        None
    };

    // Torsion law via F(s) = (cos^2 theta + kappa <gamma, N>) phi'.
    // F' expands through <gamma, N>' = -kappa <gamma, T> + tau <gamma, B>;
    // only kappa' and tau' need a difference stencil.
    let cos2 = cos_theta * cos_theta;
    let mut f_aux = vec![0.0; n];
    for k in w2.iter() {
        f_aux[k] = (cos2 + dpphi[k] - 1.0) * dphi[k];
    }
    let tau_series: Vec<f64> = (0..n)
        .map(|k| if win.contains(k) { frenet.tau(k) } else { 0.0 })
        .collect();
    let kappa_series: Vec<f64> = (0..n)
        .map(|k| if win.contains(k) { frenet.kappa(k) } else { 0.0 })
        .collect();
    let (dtau, w3a) = diff::d1_scalar(&tau_series, h, win);
    let (dkappa, _) = diff::d1_scalar(&kappa_series, h, win);
    let mut df_aux = vec![0.0; n];
    let w3 = w3a;
    for k in w3.iter() {
        let gamma_n = angles[k] * phi[k];
        let dgn = -kappa_series[k] * (phi[k] * dphi[k]) + tau_series[k] * g[k];
        df_aux[k] = (dkappa[k] * gamma_n + kappa_series[k] * dgn) * dphi[k]
            + (cos2 + dpphi[k] - 1.0) * ddphi[k];
    }
    let f_min = w2.iter().map(|k| f_aux[k].abs()).fold(f64::INFINITY, f64::min);
    let (tau_residual, tau_form) = if cos_theta.abs() > tol {
        if f_min > 1e-8 {
            let mut worst = 0.0f64;
            for k in w3.iter() {
                let rhs = tau_series[k] / f_aux[k]
                    * (df_aux[k] + cos2 * phi[k] * tau_series[k] * tau_series[k]);
                worst = worst.max((dtau[k] - rhs).abs());
            }
            (Some(worst), TauResidualForm::Quotient)
        } else {
            let mut worst = 0.0f64;
            for k in w3.iter() {
                let rhs = tau_series[k]
                    * (df_aux[k] + cos2 * phi[k] * tau_series[k] * tau_series[k]);
                worst = worst.max((f_aux[k] * dtau[k] - rhs).abs());
            }
            (Some(worst), TauResidualForm::Product)
        }
    } else {
        (None, TauResidualForm::Quotient)
    };

    // Branch predicates, tested in the theorem's priority order.
    let mut passing = Vec::new();
    if phi_dev < tol && (cos_theta + 1.0).abs() < tol && g_max < tol {
        passing.push(EuclideanBranch::CircleOrigin);
    }
    if max_abs_tau < tol && min_dphi > tol {
        if let Some(fit) = &line_fit {
            let sin_theta = theta_hat.sin();
            if fit.max_deviation < tol && (fit.slope.abs() - sin_theta).abs() < tol.max(1e-6) * 10.0
            {
                passing.push(EuclideanBranch::LogSpiral);
            }
        }
    }
    if cos_theta.abs() < tol && gamma_n_max < tol {
        passing.push(EuclideanBranch::Rectifying);
    }
    passing.push(EuclideanBranch::Generic);
    let branch = passing[0];

    Ok(EuclideanSlantReport {
        branch,
        passing,
        cos_theta,
        theta_hat,
        constancy_residual: constancy,
        phi,
        g,
        f_aux,
        kappa_residual,
        tau_residual,
        tau_residual_form: tau_form,
        line_fit,
        gamma_n_max,
        max_abs_tau,
        window: w3,
    })
}
