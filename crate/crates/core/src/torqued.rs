//! Torqued-curve verification: the constant inner product <V, N_2> = theta
//! for a torqued or concircular axis field, the characterizing coefficient
//! systems, and the concircular ODE in the torsion-to-curvature ratio.

use crate::curvegeo::{CurveSamples, FrenetData};
use crate::diff::{self, Window};
use crate::error::{Error, Result};
use crate::fields::{classify_field, torse_forming_fit, FieldClass, FieldSpec};
use crate::slant::LineResidual;

/// Theorem-level case split for torqued curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TorquedCase {
    /// V parallel to the tangent: theta = 0 and the curve is a geodesic.
    AxisParallelTangent,
    /// V parallel to the principal normal: order 2 with kappa_1 f_2 = -rho.
    AxisParallelNormal,
    /// V parallel to no frame vector.
    General,
}

/// Which torqued system was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TorquedSystem {
    GeneralM,
    ThreeDimensional,
    /// Concircular axis: the generative terms vanish.
    Concircular,
}

/// Residuals of the applicable torqued system.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TorquedSystemResiduals {
    pub system: TorquedSystem,
    pub lines: Vec<LineResidual>,
}

impl TorquedSystemResiduals {
    pub fn max(&self) -> f64 {
        self.lines.iter().map(|l| l.residual).fold(0.0, f64::max)
    }
}

/// Case-(b) diagnostics: order-2 checks.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CaseBChecks {
    /// max |kappa_1 f_2 + rho|.
    pub kappa_f2_plus_rho: f64,
    /// max |kappa_2| (must vanish).
    pub max_kappa2: f64,
}

/// Torqued-curve verification report.
#[derive(Debug, Clone)]
pub struct TorquedReport {
    pub case: TorquedCase,
    /// Fitted constant theta (mean of <V, N_2>; an arbitrary real).
    pub theta_hat: f64,
    pub constancy_residual: f64,
    pub angle_samples: Vec<f64>,
    /// f_coeffs[k] = [f_1, f_3, ...] (decomposition of V).
    pub f_coeffs: Vec<Vec<f64>>,
    /// g_coeffs[k] = [g_1, g_2, g_3, ...] (decomposition of the generative W).
    pub g_coeffs: Vec<Vec<f64>>,
    /// Conformal scalar fitted along the curve.
    pub rho: Vec<f64>,
    pub system: Option<TorquedSystemResiduals>,
    /// max |f_1 g_1 + theta g_2 + sum f_i g_i| (orthogonality of V and W).
    pub orthogonality_residual: f64,
    /// max |V - (f_1 T + <V,N_2> N_2 + sum f_i N_i)| over the window.
    pub decomposition_defect: f64,
    pub is_torqued_curve: bool,
    pub case_b: Option<CaseBChecks>,
    pub axis_class: FieldClass,
    /// Set when the field is neither torqued nor concircular.
    pub axis_warning: Option<String>,
    pub window: Window,
}

/// Builds the torqued-curve report for a curve and an axis field.
pub fn torqued_report(
    curve: &CurveSamples,
    frenet: &FrenetData,
    field: &FieldSpec,
    tol: f64,
) -> Result<TorquedReport> {
    if curve.n() != frenet.grid.len() {
        return Err(Error::InvalidInput(
            "curve and Frenet data use different grids".into(),
        ));
    }
    let metric = frenet.metric();
    let win = frenet.window;

    let sample_points: Vec<_> = win
        .iter()
        .step_by((win.len() / 64).max(1))
        .map(|k| frenet.points[k].clone())
        .collect();
    let field_report = classify_field(field, &sample_points, tol.max(1e-9))?;
    let axis_warning = match field_report.label {
        FieldClass::Torqued | FieldClass::Concircular => None,
        other => Some(format!(
            "field classified {} rather than torqued/concircular; the torqued system need not hold",
            other.as_str()
        )),
    };

    let n = frenet.grid.len();
    let mut rho = vec![0.0; n];
    let mut w_along = vec![None; n];
    for k in win.iter() {
        let fit = torse_forming_fit(field, &frenet.points[k])?;
        rho[k] = fit.rho;
        w_along[k] = Some(fit.w);
    }

    // Order-1 input: Theorem case (a) territory.
    if frenet.order < 2 {
        let mut angle = vec![0.0; n];
        let mut f_coeffs = vec![Vec::new(); n];
        let mut defect = 0.0f64;
        for k in win.iter() {
            let p = &frenet.points[k];
            let v = field.eval(p)?;
            let f1 = metric.inner(p, &v, &frenet.frames[k][0])?;
            let rest = &v - &frenet.frames[k][0] * f1;
            defect = defect.max(metric.inner(p, &rest, &rest)?.max(0.0).sqrt());
            angle[k] = 0.0;
            f_coeffs[k] = vec![f1];
        }
        return Ok(TorquedReport {
            case: TorquedCase::AxisParallelTangent,
            theta_hat: 0.0,
            constancy_residual: 0.0,
            angle_samples: angle,
            f_coeffs,
            g_coeffs: vec![Vec::new(); n],
            rho,
            system: None,
            orthogonality_residual: 0.0,
            decomposition_defect: defect,
            is_torqued_curve: defect < tol,
            case_b: None,
            axis_class: field_report.label,
            axis_warning,
            window: win,
        });
    }

    let mut angle = vec![0.0; n];
    let mut f_coeffs = vec![Vec::new(); n];
    let mut g_coeffs = vec![Vec::new(); n];
    let mut decomposition_defect = 0.0f64;
    let mut tangent_defect = 0.0f64;
    let mut normal_defect = 0.0f64;
    for k in win.iter() {
        let p = &frenet.points[k];
        let v = field.eval(p)?;
        let w = w_along[k].as_ref().unwrap();
        let vnorm = metric.inner(p, &v, &v)?.max(0.0).sqrt().max(1e-300);
        let mut rest = v.clone();
        let mut frow = Vec::new();
        let mut grow = Vec::new();
        for (i, nvec) in frenet.frames[k].iter().enumerate() {
            let c = metric.inner(p, &v, nvec)?;
            rest -= nvec * c;
            if i == 1 {
                angle[k] = c;
            } else {
                frow.push(c);
            }
            grow.push(metric.inner(p, w, nvec)?);
        }
        decomposition_defect =
            decomposition_defect.max(metric.inner(p, &rest, &rest)?.max(0.0).sqrt());
        let t_rest = &v - &frenet.frames[k][0] * metric.inner(p, &v, &frenet.frames[k][0])?;
        tangent_defect =
            tangent_defect.max(metric.inner(p, &t_rest, &t_rest)?.max(0.0).sqrt() / vnorm);
        let n_rest = &v - &frenet.frames[k][1] * angle[k];
        normal_defect =
            normal_defect.max(metric.inner(p, &n_rest, &n_rest)?.max(0.0).sqrt() / vnorm);
        f_coeffs[k] = frow;
        g_coeffs[k] = grow;
    }

    let theta_hat = win.iter().map(|k| angle[k]).sum::<f64>() / win.len() as f64;
    let constancy = win
        .iter()
        .map(|k| (angle[k] - theta_hat).abs())
        .fold(0.0f64, f64::max);

    // Orthogonality of V and W through the decomposition (the algebraic
    // line of the torqued system).
    let mut orth = 0.0f64;
    for k in win.iter() {
        let mut acc = f_coeffs[k][0] * g_coeffs[k][0] + angle[k] * g_coeffs[k][1];
        for (j, f) in f_coeffs[k].iter().enumerate().skip(1) {
            acc += f * g_coeffs[k][j + 1];
        }
        orth = orth.max(acc.abs());
    }

    let (case, case_b) = if tangent_defect < tol {
        (TorquedCase::AxisParallelTangent, None)
    } else if normal_defect < tol {
        let mut kf = 0.0f64;
        let mut k2 = 0.0f64;
        for k in win.iter() {
            kf = kf.max((frenet.kappa(k) * angle[k] + rho[k]).abs());
            if frenet.frame_len >= 3 {
                k2 = k2.max(frenet.tau(k).abs());
            }
        }
        (
            TorquedCase::AxisParallelNormal,
            Some(CaseBChecks {
                kappa_f2_plus_rho: kf,
                max_kappa2: k2,
            }),
        )
    } else {
        (TorquedCase::General, None)
    };

    let mut report = TorquedReport {
        case,
        theta_hat,
        constancy_residual: constancy,
        angle_samples: angle,
        f_coeffs,
        g_coeffs,
        rho,
        system: None,
        orthogonality_residual: orth,
        decomposition_defect,
        is_torqued_curve: constancy < tol,
        case_b,
        axis_class: field_report.label,
        axis_warning,
        window: win,
    };
    if case == TorquedCase::General {
        report.system = Some(system_residuals_torqued(curve, frenet, field, &report, tol)?);
    }
    Ok(report)
}

/// Evaluates every line of the applicable torqued system: the general
/// order-m system, its 3-chart form, or the concircular reduction when the
/// generative terms vanish. Lines referencing unavailable frame directions
/// are evaluated in reduced form and marked.
pub fn system_residuals_torqued(
    _curve: &CurveSamples,
    frenet: &FrenetData,
    _field: &FieldSpec,
    report: &TorquedReport,
    _tol: f64,
) -> Result<TorquedSystemResiduals> {
    if report.case != TorquedCase::General {
        return Err(Error::NotApplicable(
            "coefficient system applies only when the axis is parallel to no frame vector".into(),
        ));
    }
    let m = frenet.metric().dim();
    let h = diff::uniform_step(&frenet.grid, 1e-6)
        .ok_or_else(|| Error::InvalidInput("system residuals need a uniform grid".into()))?;
    let win = report.window;
    let dwin = win.shrink(2);
    let theta = report.theta_hat;
    let concircular = report.axis_class == FieldClass::Concircular;

    let n = frenet.grid.len();
    let n_coeff = report.f_coeffs[win.lo].len();
    let mut f = vec![vec![0.0; n]; n_coeff];
    for k in win.iter() {
        for (j, c) in report.f_coeffs[k].iter().enumerate() {
            f[j][k] = *c;
        }
    }
    let df: Vec<Vec<f64>> = f.iter().map(|s| diff::d1_scalar(s, h, win).0).collect();
    let g1 = |k: usize| report.g_coeffs[k][0];
    let kappa = |k: usize, i: usize| -> f64 {
        if i < frenet.curvatures[k].len() {
            frenet.curvatures[k][i]
        } else {
            0.0
        }
    };
    let rho = &report.rho;
    let reduced = frenet.frame_len < 3;

    let system = if concircular {
        TorquedSystem::Concircular
    } else if m == 3 {
        TorquedSystem::ThreeDimensional
    } else {
        TorquedSystem::GeneralM
    };

    let mut lines = Vec::new();
    match system {
        TorquedSystem::Concircular => {
            let (mut l1, mut l2, mut l3) = (0.0f64, 0.0f64, 0.0f64);
            for k in dwin.iter() {
                let f1 = f[0][k];
                let f3 = if n_coeff >= 2 { f[1][k] } else { 0.0 };
                l1 = l1.max((df[0][k] - theta * kappa(k, 0) - rho[k]).abs());
                l2 = l2.max((kappa(k, 0) * f1 - kappa(k, 1) * f3).abs());
                if n_coeff >= 2 {
                    l3 = l3.max((df[1][k] + theta * kappa(k, 1)).abs());
                }
            }
            lines.push(LineResidual {
                label: "T(f_1) - theta kappa - rho".into(),
                residual: l1,
                reduced: false,
            });
            lines.push(LineResidual {
                label: "kappa f_1 - tau f_3".into(),
                residual: l2,
                reduced,
            });
            lines.push(LineResidual {
                label: "T(f_3) + theta tau".into(),
                residual: l3,
                reduced,
            });
        }
        TorquedSystem::ThreeDimensional => {
            let (mut l1, mut l2, mut l3, mut l4) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
            for k in dwin.iter() {
                let f1 = f[0][k];
                let f3 = if n_coeff >= 2 { f[1][k] } else { 0.0 };
                let (g_1, g_2) = (report.g_coeffs[k][0], report.g_coeffs[k][1]);
                let g_3 = if report.g_coeffs[k].len() >= 3 {
                    report.g_coeffs[k][2]
                } else {
                    0.0
                };
                l1 = l1.max((df[0][k] - theta * kappa(k, 0) - rho[k] * (1.0 + f1 * g_1)).abs());
                l2 = l2.max(
                    (kappa(k, 0) * f1 - kappa(k, 1) * f3 + theta * rho[k] * g_1).abs(),
                );
                if n_coeff >= 2 {
                    l3 = l3.max((df[1][k] + theta * kappa(k, 1) + rho[k] * f3 * g_1).abs());
                }
                l4 = l4.max((f1 * g_1 + theta * g_2 + f3 * g_3).abs());
            }
            for (label, residual, red) in [
                ("T(f_1) - theta kappa - rho (1 + f_1 g_1)", l1, false),
                ("kappa f_1 - tau f_3 + theta rho g_1", l2, reduced),
                ("T(f_3) + theta tau + rho f_3 g_1", l3, reduced),
                ("f_1 g_1 + theta g_2 + f_3 g_3", l4, reduced),
            ] {
                lines.push(LineResidual {
                    label: label.into(),
                    residual,
                    reduced: red,
                });
            }
        }
        TorquedSystem::GeneralM => {
            let len = frenet.frame_len;
            let coeff_of = |k: usize, frame_i: usize| -> f64 {
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
            let mut worst = 0.0f64;
            for k in dwin.iter() {
                let f1 = coeff_of(k, 1);
                worst = worst.max(
                    (dcoeff_of(k, 1) - theta * kappa(k, 0) - rho[k] * (1.0 + f1 * g1(k))).abs(),
                );
            }
            lines.push(LineResidual {
                label: "T(f_1) - theta kappa_1 - rho (1 + f_1 g_1)".into(),
                residual: worst,
                reduced: false,
            });
            let mut worst = 0.0f64;
            for k in dwin.iter() {
                let f3 = if len >= 3 { coeff_of(k, 3) } else { 0.0 };
                worst = worst.max(
                    (kappa(k, 0) * coeff_of(k, 1) - kappa(k, 1) * f3 + theta * rho[k] * g1(k))
                        .abs(),
                );
            }
            lines.push(LineResidual {
                label: "kappa_1 f_1 - kappa_2 f_3 + theta rho g_1".into(),
                residual: worst,
                reduced: len < 3,
            });
            for i in 3..=len {
                let mut worst = 0.0f64;
                for k in dwin.iter() {
                    let mut lhs = dcoeff_of(k, i) + rho[k] * coeff_of(k, i) * g1(k);
                    if i == 3 {
                        lhs += theta * kappa(k, 1);
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
            let mut worst = 0.0f64;
            for k in dwin.iter() {
                let mut acc = coeff_of(k, 1) * g1(k) + theta * report.g_coeffs[k][1];
                for i in 3..=len {
                    acc += coeff_of(k, i) * report.g_coeffs[k][i - 1];
                }
                worst = worst.max(acc.abs());
            }
            lines.push(LineResidual {
                label: "f_1 g_1 + theta g_2 + sum f_i g_i".into(),
                residual: worst,
                reduced,
            });
        }
    }
    Ok(TorquedSystemResiduals { system, lines })
}

/// Evaluates the concircular characterizing ODE in phi = tau/kappa:
/// theta T(kappa (1 + phi^2) / T(phi)) + T(rho / T(phi)) + theta kappa phi,
/// returning the max |LHS| over the valid window.
///
/// The quotient derivatives use widened 4th-order stencils (spacing grows
/// with the grid) so the stacked differentiation stays above the sample
/// noise floor of reconstructed curvature data.
pub fn concircular_ode_residual(
    frenet: &FrenetData,
    rho_samples: &[f64],
    theta: f64,
) -> Result<f64> {
    if frenet.order != 3 {
        return Err(Error::NotApplicable(format!(
            "concircular ODE needs an order-3 curve, got order {}",
            frenet.order
        )));
    }
    let n = frenet.grid.len();
    let win = frenet.window;
    let mut kappa = vec![0.0; n];
    let mut tau = vec![0.0; n];
    for k in win.iter() {
        kappa[k] = frenet.kappa(k);
        tau[k] = frenet.tau(k);
    }
    concircular_ode_residual_series(&frenet.grid, win, &kappa, &tau, rho_samples, theta)
}

/// Series form of [`concircular_ode_residual`] for curvature data known on
/// a uniform grid (e.g. the closed-form profiles carried by a synthesized
/// curve, which are free of reconstruction noise).
pub fn concircular_ode_residual_series(
    grid: &[f64],
    window: Window,
    kappa: &[f64],
    tau: &[f64],
    rho_samples: &[f64],
    theta: f64,
) -> Result<f64> {
    let n = grid.len();
    if rho_samples.len() != n || kappa.len() != n || tau.len() != n {
        return Err(Error::InvalidInput(format!(
            "kappa/tau/rho must match the grid length {n}"
        )));
    }
    let h = diff::uniform_step(grid, 1e-6)
        .ok_or_else(|| Error::InvalidInput("concircular ODE needs a uniform grid".into()))?;
    let stride = (window.len() / 40).clamp(1, 50);

    let mut phi = vec![0.0; n];
    for k in window.iter() {
        if kappa[k] <= 0.0 {
            return Err(Error::VanishingQuantity {
                what: "kappa".into(),
                index: k,
            });
        }
        phi[k] = tau[k] / kappa[k];
    }
    let (dphi, w1) = diff::d1_scalar_strided(&phi, h, window, stride);
    for k in w1.iter() {
        if dphi[k].abs() < 1e-8 {
            return Err(Error::VanishingQuantity {
                what: "T(tau/kappa)".into(),
                index: k,
            });
        }
    }
    let mut q1 = vec![0.0; n];
    let mut q2 = vec![0.0; n];
    for k in w1.iter() {
        q1[k] = kappa[k] * (1.0 + phi[k] * phi[k]) / dphi[k];
        q2[k] = rho_samples[k] / dphi[k];
    }
    let (dq1, w2a) = diff::d1_scalar_strided(&q1, h, w1, stride);
    let (dq2, _) = diff::d1_scalar_strided(&q2, h, w1, stride);
    let mut worst = 0.0f64;
    for k in w2a.iter() {
        let lhs = theta * dq1[k] + dq2[k] + theta * kappa[k] * phi[k];
        worst = worst.max(lhs.abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvegeo::{frenet_apparatus, CurveAnalytic, DEFAULT_RANK_TOL};
    use crate::manifold::ChartMetric;
    use crate::ode::OdeOptions;
    use crate::synthesis::{synthesize_concircular, ConcircularConfig, ScalarFunction};
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;
    use std::sync::Arc;

    fn euclidean3() -> Arc<ChartMetric> {
        Arc::new(ChartMetric::builtin("euclidean", 3, &[]).unwrap())
    }

    fn position_field() -> FieldSpec {
        FieldSpec::builtin(
            "concircular_affine",
            euclidean3(),
            &[1.0, 0.0, 0.0, 0.0],
        )
        .unwrap()
    }

    /// Unit-speed circular helix with radius a and pitch b.
    fn helix(a: f64, b: f64, n: usize) -> CurveSamples {
        let c = (a * a + b * b).sqrt();
        CurveSamples::from_analytic(
            euclidean3(),
            0.0,
            4.0 * std::f64::consts::PI * c,
            n,
            CurveAnalytic::new(3, move |s, order| {
                let w = s / c;
                match order {
                    0 => DVector::from_column_slice(&[a * w.cos(), a * w.sin(), b * w]),
                    1 => DVector::from_column_slice(&[
                        -a * w.sin() / c,
                        a * w.cos() / c,
                        b / c,
                    ]),
                    2 => DVector::from_column_slice(&[
                        -a * w.cos() / (c * c),
                        -a * w.sin() / (c * c),
                        0.0,
                    ]),
                    _ => DVector::from_column_slice(&[
                        a * w.sin() / (c * c * c),
                        -a * w.cos() / (c * c * c),
                        0.0,
                    ]),
                }
            }),
            true,
        )
        .unwrap()
    }

    #[test]
    fn circle_with_position_field_is_case_b() {
        let r = 1.5;
        let curve = crate::synthesis::builtin_curve(
            "circle_origin",
            &[r, 0.0, r * std::f64::consts::TAU],
            1001,
        )
        .unwrap();
        // The circle lives on the punctured chart; the affine field needs the
        // same metric reference for evaluation.
        let metric = curve.metric().clone();
        let field =
            FieldSpec::builtin("concircular_affine", metric, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let frenet = frenet_apparatus(&curve, DEFAULT_RANK_TOL).unwrap();
        let rep = torqued_report(&curve, &frenet, &field, 1e-6).unwrap();
        assert_eq!(rep.case, TorquedCase::AxisParallelNormal);
        assert!(rep.is_torqued_curve);
        assert_abs_diff_eq!(rep.theta_hat, -r, epsilon = 1e-8);
        let cb = rep.case_b.unwrap();
        assert!(cb.kappa_f2_plus_rho < 1e-8, "{}", cb.kappa_f2_plus_rho);
        assert!(cb.max_kappa2 < 1e-7);
        assert_eq!(rep.axis_class, FieldClass::Concircular);
    }

    #[test]
    fn line_through_origin_is_case_a() {
        let d = DVector::from_column_slice(&[1.0f64, 2.0, -0.5]).normalize();
        let d2 = d.clone();
        let curve = CurveSamples::from_analytic(
            euclidean3(),
            1.0,
            3.0,
            201,
            CurveAnalytic::new(2, move |s, order| match order {
                0 => &d2 * s,
                1 => d2.clone(),
                _ => DVector::zeros(3),
            }),
            true,
        )
        .unwrap();
        let frenet = frenet_apparatus(&curve, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(frenet.order, 1);
        let rep = torqued_report(&curve, &frenet, &position_field(), 1e-6).unwrap();
        assert_eq!(rep.case, TorquedCase::AxisParallelTangent);
        assert_eq!(rep.theta_hat, 0.0);
        assert!(rep.is_torqued_curve);
    }

    #[test]
    fn helix_with_constant_axis_reduces_cleanly() {
        let curve = helix(1.0, 0.5, 1501);
        let field = FieldSpec::builtin("constant", euclidean3(), &[0.0, 0.0, 1.0]).unwrap();
        let frenet = frenet_apparatus(&curve, DEFAULT_RANK_TOL).unwrap();
        let rep = torqued_report(&curve, &frenet, &field, 1e-6).unwrap();
        assert_eq!(rep.case, TorquedCase::General);
        assert!(rep.is_torqued_curve);
        assert_abs_diff_eq!(rep.theta_hat, 0.0, epsilon = 1e-9);
        let sys = rep.system.as_ref().unwrap();
        assert_eq!(sys.system, TorquedSystem::Concircular);
        for line in &sys.lines {
            assert!(line.residual < 1e-6, "{}: {}", line.label, line.residual);
        }
    }

    #[test]
    fn synthesized_concircular_curve_passes_systems() {
        let cfg = ConcircularConfig {
            theta: 1.0,
            rho: 1.0,
            f3: ScalarFunction::affine(2.0, -0.25),
            f1_0: 1.0,
            s_range: (0.0, 1.0),
            n_out: 801,
            ode: OdeOptions::default(),
        };
        let out = synthesize_concircular(&cfg).unwrap();
        let frenet = frenet_apparatus(&out.curve, DEFAULT_RANK_TOL).unwrap();
        let rep = torqued_report(&out.curve, &frenet, &out.field, 1e-5).unwrap();
        assert!(rep.is_torqued_curve);
        assert_abs_diff_eq!(rep.theta_hat, 1.0, epsilon = 1e-6);
        assert_eq!(rep.case, TorquedCase::General);
        let sys = rep.system.as_ref().unwrap();
        assert_eq!(sys.system, TorquedSystem::Concircular);
        for line in &sys.lines {
            assert!(line.residual < 1e-5, "{}: {}", line.label, line.residual);
        }
        // Forward-construction profiles are free of reconstruction noise.
        let rho = vec![1.0; out.curve.n()];
        let res = concircular_ode_residual_series(
            out.curve.grid(),
            frenet.window,
            &out.kappa,
            &out.tau,
            &rho,
            rep.theta_hat,
        )
        .unwrap();
        assert!(res < 1e-4, "concircular ODE residual {res}");
        // The reconstruction path stacks two quotient derivatives on
        // measured curvature data; its noise floor is larger.
        let res_rec = concircular_ode_residual(&frenet, &rep.rho, rep.theta_hat).unwrap();
        assert!(res_rec < 5e-3, "reconstructed-path residual {res_rec}");
    }

    #[test]
    fn constant_rho_euclidean_variant_satisfies_ode() {
        // V(x) = x + v: rho = 1 with an offset; same characterizing ODE.
        let cfg = ConcircularConfig {
            theta: 0.8,
            rho: 1.0,
            f3: ScalarFunction::affine(1.5, -0.2),
            f1_0: 0.7,
            s_range: (0.0, 1.2),
            n_out: 801,
            ode: OdeOptions::default(),
        };
        let out = synthesize_concircular(&cfg).unwrap();
        let frenet = frenet_apparatus(&out.curve, DEFAULT_RANK_TOL).unwrap();
        let rep = torqued_report(&out.curve, &frenet, &out.field, 1e-5).unwrap();
        assert!(rep.is_torqued_curve);
        let rho = vec![1.0; out.curve.n()];
        let res = concircular_ode_residual_series(
            out.curve.grid(),
            frenet.window,
            &out.kappa,
            &out.tau,
            &rho,
            rep.theta_hat,
        )
        .unwrap();
        assert!(res < 1e-4, "residual {res}");
    }

    #[test]
    fn circular_helix_fails_ode_precondition() {
        // Constant tau/kappa: T(phi) = 0 everywhere.
        let curve = helix(1.0, 0.5, 801);
        let frenet = frenet_apparatus(&curve, DEFAULT_RANK_TOL).unwrap();
        let rho = vec![0.0; curve.n()];
        assert!(matches!(
            concircular_ode_residual(&frenet, &rho, 1.0),
            Err(Error::VanishingQuantity { .. })
        ));
    }

    #[test]
    fn ode_rejects_low_order() {
        let curve = crate::synthesis::builtin_curve("circle_origin", &[1.0], 801).unwrap();
        let frenet = frenet_apparatus(&curve, DEFAULT_RANK_TOL).unwrap();
        let rho = vec![0.0; curve.n()];
        assert!(concircular_ode_residual(&frenet, &rho, 1.0).is_err());
    }

    #[test]
    fn decomposition_reconstructs_field() {
        let curve = helix(1.0, 0.5, 1001);
        let field = FieldSpec::builtin("constant", euclidean3(), &[0.0, 0.0, 1.0]).unwrap();
        let frenet = frenet_apparatus(&curve, DEFAULT_RANK_TOL).unwrap();
        let rep = torqued_report(&curve, &frenet, &field, 1e-6).unwrap();
        assert!(rep.decomposition_defect < 1e-8);
        assert!(rep.orthogonality_residual < 1e-8);
    }
}
