//! Property-based invariants: Christoffel symmetry, metric compatibility
//! of the covariant derivative along curves, positive definiteness, the
//! generating-form duality, and the unit-axis decomposition identity.

use std::sync::Arc;

use nalgebra::DVector;
use proptest::prelude::*;

use torsegeo::curvegeo::{frenet_apparatus, CurveAnalytic, CurveSamples, DEFAULT_RANK_TOL};
use torsegeo::fields::{torse_forming_fit, FieldSpec};
use torsegeo::manifold::{
    covariant_derivative_series, ChartMetric, ChartPoint, FieldAlongCurve,
};
use torsegeo::slant::slant_report;
use torsegeo::synthesis::builtin_curve;

fn metric_strategy() -> impl Strategy<Value = Arc<ChartMetric>> {
    prop_oneof![
        Just(Arc::new(ChartMetric::builtin("euclidean", 3, &[]).unwrap())),
        Just(Arc::new(
            ChartMetric::builtin("hyperbolic_upper_half", 3, &[]).unwrap()
        )),
        Just(Arc::new(
            ChartMetric::builtin("warped_interval_product", 3, &[1.0, 0.7]).unwrap()
        )),
    ]
}

/// A point inside every built-in domain used above (third coordinate kept
/// positive for the hyperbolic chart).
fn point_strategy() -> impl Strategy<Value = ChartPoint> {
    (
        -2.0f64..2.0,
        -2.0f64..2.0,
        0.3f64..2.5,
    )
        .prop_map(|(x, y, z)| DVector::from_column_slice(&[x, y, z]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn christoffel_symmetric_in_lower_indices(
        metric in metric_strategy(),
        p in point_strategy(),
    ) {
        let c = metric.christoffel(&p).unwrap();
        prop_assert!(c.max_asymmetry() < 1e-10);
    }

    #[test]
    fn inner_product_is_positive_definite(
        metric in metric_strategy(),
        p in point_strategy(),
        u in (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0),
    ) {
        let v = DVector::from_column_slice(&[u.0, u.1, u.2]);
        prop_assume!(v.norm() > 1e-6);
        let q = metric.inner(&p, &v, &v).unwrap();
        prop_assert!(q > 0.0, "quadratic form {q} for |v| = {}", v.norm());
    }

    #[test]
    fn fitted_generating_form_is_dual_to_w(
        p in point_strategy(),
    ) {
        // Radial field on the punctured chart: omega and W from the fit
        // must satisfy <W, e_i> = omega(e_i) for the orthonormal frame.
        let metric = Arc::new(ChartMetric::builtin("punctured_euclidean", 3, &[]).unwrap());
        prop_assume!(p.norm() > 0.3);
        let field = FieldSpec::builtin("radial_unit", metric.clone(), &[]).unwrap();
        let fit = torse_forming_fit(&field, &p).unwrap();
        let frame = metric.orthonormal_frame(&p).unwrap();
        for e in &frame {
            let omega_e: f64 = fit.omega.dot(e);
            let w_e = metric.inner(&p, &fit.w, e).unwrap();
            prop_assert!((omega_e - w_e).abs() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// d/dt <W, W> = 2 <grad_{c'} W, W> along arbitrary smooth curves and
    /// fields (Levi-Civita compatibility, discretized).
    #[test]
    fn covariant_derivative_is_metric_compatible(
        metric in metric_strategy(),
        ax in 0.2f64..0.8,
        az in 0.1f64..0.4,
        wf in 0.5f64..2.0,
    ) {
        let n = 801usize;
        let curve = CurveSamples::from_analytic(
            metric.clone(),
            0.0,
            std::f64::consts::TAU,
            n,
            CurveAnalytic::new(2, move |t, order| match order {
                0 => DVector::from_column_slice(&[ax * t.cos(), ax * t.sin(), 1.2 + az * (2.0 * t).sin()]),
                1 => DVector::from_column_slice(&[-ax * t.sin(), ax * t.cos(), 2.0 * az * (2.0 * t).cos()]),
                _ => DVector::from_column_slice(&[-ax * t.cos(), -ax * t.sin(), -4.0 * az * (2.0 * t).sin()]),
            }),
            false,
        )
        .unwrap();
        let values: Vec<DVector<f64>> = curve
            .grid()
            .iter()
            .map(|&t| {
                DVector::from_column_slice(&[
                    (wf * t).cos(),
                    0.5 * (wf * t).sin(),
                    0.3 + 0.2 * (0.5 * wf * t).cos(),
                ])
            })
            .collect();
        let field = FieldAlongCurve { values: values.clone(), derivative: None };
        let (nabla, win) = covariant_derivative_series(&metric, &curve, &field).unwrap();

        // LHS: derivative of the scalar <W, W> along the curve.
        let norms: Vec<f64> = (0..n)
            .map(|k| metric.inner(&curve.points()[k], &values[k], &values[k]).unwrap())
            .collect();
        let h = curve.grid()[1] - curve.grid()[0];
        for k in win.shrink(2).iter() {
            let lhs = torsegeo::diff::d1_scalar_at(&norms, h, k);
            let rhs = 2.0 * metric.inner(&curve.points()[k], &nabla[k], &values[k]).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-6, "defect {} at k = {k}", (lhs - rhs).abs());
        }
    }

    /// Unit-axis decomposition: f_1^2 + cos^2(theta-sample) + sum f_i^2 = 1
    /// along any curve with the radial axis.
    #[test]
    fn unit_axis_decomposition_identity(
        s0 in 1.0f64..3.0,
        len in 2.0f64..6.0,
    ) {
        let curve = builtin_curve("cone_loxodrome", &[s0, s0 + len], 901).unwrap();
        let frenet = frenet_apparatus(&curve, DEFAULT_RANK_TOL).unwrap();
        let metric = Arc::new(ChartMetric::builtin("punctured_euclidean", 3, &[]).unwrap());
        let axis = FieldSpec::builtin("radial_unit", metric, &[]).unwrap();
        let rep = slant_report(&curve, &frenet, &axis, 1e-5).unwrap();
        prop_assert!(rep.unit_decomposition_defect < 1e-6);
    }
}
