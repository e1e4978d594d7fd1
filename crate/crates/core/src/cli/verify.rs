//! Built-in verification suite: checks the closed-form examples (the
//! logarithmic spiral, the cone loxodrome, the vector-field zoo, the
//! classification branches) against the values they must satisfy, and the
//! synthesis constructions against their post-verification oracles.
//!
//! The loxodrome block also recomputes the invariants that differ from the
//! commonly quoted values (the conformal scalar and the binormal
//! coefficient) and flags the divergence rather than adopting either side.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::Arc;

use crate::curvegeo::{detect_special, frenet_apparatus, DEFAULT_RANK_TOL};
use crate::error::Result;
use crate::fields::{classify_field, FieldClass, FieldSpec};
use crate::manifold::{sample_domain_points, ChartMetric};
use crate::ode::OdeOptions;
use crate::slant::{
    classify_euclidean_slant, ratio_law_check, slant_report, EuclideanBranch, SlantCase,
};
use crate::synthesis::{
    builtin_curve, synthesize_concircular, synthesize_slant_from_phi, ConcircularConfig,
    ScalarFunction, SlantSynthesisConfig,
};
use crate::torqued::{concircular_ode_residual_series, torqued_report, TorquedCase};

/// One verification check: a value judged against a tolerance.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub note: Option<String>,
}

impl Check {
    fn residual(name: &str, value: f64, tolerance: f64) -> Check {
        Check {
            name: name.to_string(),
            value,
            tolerance,
            pass: value.abs() < tolerance,
            note: None,
        }
    }

    fn flag(name: &str, ok: bool, note: &str) -> Check {
        Check {
            name: name.to_string(),
            value: if ok { 0.0 } else { 1.0 },
            tolerance: 0.5,
            pass: ok,
            note: Some(note.to_string()),
        }
    }

    fn with_note(mut self, note: &str) -> Check {
        self.note = Some(note.to_string());
        self
    }
}

fn radial_axis() -> Result<FieldSpec> {
    let metric = Arc::new(ChartMetric::builtin("punctured_euclidean", 3, &[])?);
    FieldSpec::builtin("radial_unit", metric, &[])
}

/// Runs the complete built-in example suite and returns one check per
/// verified quantity.
pub fn paper_example_checks() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    log_spiral_checks(&mut checks)?;
    loxodrome_checks(&mut checks)?;
    field_zoo_checks(&mut checks)?;
    branch_checks(&mut checks)?;
    hyperbolic_checks(&mut checks)?;
    torqued_circle_checks(&mut checks)?;
    synthesis_checks(&mut checks)?;
    Ok(checks)
}

fn log_spiral_checks(checks: &mut Vec<Check>) -> Result<()> {
    let curve = builtin_curve("log_spiral", &[1.0, 10.0], 2001)?;
    let frenet = frenet_apparatus(&curve, DEFAULT_RANK_TOL)?;
    let mut kappa_law = 0.0f64;
    for k in frenet.window.iter() {
        kappa_law = kappa_law.max((frenet.kappa(k) * frenet.grid[k] - 1.0).abs());
    }
    checks.push(Check::residual("log_spiral: kappa * s - 1", kappa_law, 1e-6));

    let rep = slant_report(&curve, &frenet, &radial_axis()?, 1e-6)?;
    checks.push(Check::residual(
        "log_spiral: cos(theta) + 1/sqrt(2)",
        rep.cos_theta + FRAC_1_SQRT_2,
        1e-6,
    ));
    let mut f1_dev = 0.0f64;
    let mut g_dev = 0.0f64;
    for k in rep.window.iter() {
        f1_dev = f1_dev.max((rep.coeffs[k][0] - FRAC_1_SQRT_2).abs());
        g_dev = g_dev.max(rep.coeffs[k][1].abs());
    }
    checks.push(Check::residual("log_spiral: f - 1/sqrt(2)", f1_dev, 1e-6));
    checks.push(Check::residual("log_spiral: g", g_dev, 1e-6));
    let sys = rep.system.as_ref().expect("generic case expected");
    for line in &sys.lines {
        checks.push(Check::residual(
            &format!("log_spiral: system |{}|", line.label),
            line.residual,
            1e-6,
        ));
    }
    Ok(())
}

fn loxodrome_checks(checks: &mut Vec<Check>) -> Result<()> {
    let curve = builtin_curve("cone_loxodrome", &[1.0, 10.0], 2501)?;
    let frenet = frenet_apparatus(&curve, DEFAULT_RANK_TOL)?;
    let root39 = 39.0f64.sqrt();
    let mut kappa_law = 0.0f64;
    let mut tau_law = 0.0f64;
    for k in frenet.window.iter() {
        kappa_law = kappa_law.max((frenet.kappa(k) * 2.0 * frenet.grid[k] - root39).abs());
        tau_law = tau_law.max((frenet.tau(k) * 2.0 * frenet.grid[k] + 3.0).abs());
    }
    checks.push(Check::residual(
        "loxodrome: kappa * 2s - sqrt(39)",
        kappa_law,
        1e-6,
    ));
    checks.push(Check::residual("loxodrome: tau * 2s + 3", tau_law, 1e-6));

    let rep = slant_report(&curve, &frenet, &radial_axis()?, 1e-5)?;
    let want_cos = -(3.0f64.sqrt()) / 13.0f64.sqrt();
    checks.push(Check::residual(
        "loxodrome: cos(theta) + sqrt(3)/sqrt(13)",
        rep.cos_theta - want_cos,
        1e-6,
    ));
    let want_g = 3.0 * 3.0f64.sqrt() / (2.0 * 13.0f64.sqrt());
    let mut f1_dev = 0.0f64;
    let mut g_dev = 0.0f64;
    let mut rho_dev = 0.0f64;
    for k in rep.window.iter() {
        f1_dev = f1_dev.max((rep.coeffs[k][0] - 0.5).abs());
        g_dev = g_dev.max((rep.coeffs[k][1].abs() - want_g).abs());
        rho_dev = rho_dev.max((rep.rho[k] * frenet.grid[k] - 2.0).abs());
    }
    checks.push(Check::residual("loxodrome: f - 1/2", f1_dev, 1e-6));
    checks.push(
        Check::residual("loxodrome: |g| - 3 sqrt(3)/(2 sqrt(13))", g_dev, 1e-6).with_note(
            "recomputed internally; diverges from the printed value 7 sqrt(3)/(4 sqrt(13)), \
             which is inconsistent with the unit-axis identity f^2 + cos^2(theta) + g^2 = 1",
        ),
    );
    checks.push(
        Check::residual("loxodrome: rho * s - 2", rho_dev, 1e-6).with_note(
            "recomputed internally from |gamma(s)| = s/2; diverges from the printed \
             conformal scalar 1/s",
        ),
    );
    // The divergence itself must be visible: the recomputed values are far
    // from the printed ones.
    let printed_rho_gap = (2.0f64 - 1.0).abs();
    let printed_g_gap = (want_g - 7.0 * 3.0f64.sqrt() / (4.0 * 13.0f64.sqrt())).abs();
    checks.push(Check::flag(
        "loxodrome: printed-value divergence flagged",
        printed_rho_gap > 0.5 && printed_g_gap > 1e-2,
        "rho * s = 2 (printed: 1); |g| = 0.7201 (printed: 0.8406)",
    ));
    let sys = rep.system.as_ref().expect("generic case expected");
    for line in &sys.lines {
        checks.push(Check::residual(
            &format!("loxodrome: system |{}|", line.label),
            line.residual,
            1e-5,
        ));
    }
    Ok(())
}

fn field_zoo_checks(checks: &mut Vec<Check>) -> Result<()> {
    // Radial unit field: anti-torqued with rho = 1/|p|.
    let punctured = Arc::new(ChartMetric::builtin("punctured_euclidean", 3, &[])?);
    let radial = FieldSpec::builtin("radial_unit", punctured.clone(), &[])?;
    let pts = sample_domain_points(&punctured, 100, 42)?;
    let rep = classify_field(&radial, &pts, 1e-6)?;
    checks.push(Check::flag(
        "fields: radial_unit labeled anti_torqued (proper)",
        rep.label == FieldClass::AntiTorqued && rep.proper,
        rep.label.as_str(),
    ));
    let mut rho_law = 0.0f64;
    for (p, rho) in pts.iter().zip(&rep.rho) {
        rho_law = rho_law.max((rho * p.norm() - 1.0).abs());
    }
    checks.push(Check::residual(
        "fields: radial_unit rho * |p| - 1 (100 points)",
        rho_law,
        1e-6,
    ));

    // Hyperbolic e_m: anti-torqued with rho = 1.
    let hyp = Arc::new(ChartMetric::builtin("hyperbolic_upper_half", 3, &[])?);
    let em = FieldSpec::builtin("hyperbolic_em", hyp.clone(), &[])?;
    let pts = sample_domain_points(&hyp, 60, 43)?;
    let rep = classify_field(&em, &pts, 1e-6)?;
    checks.push(Check::flag(
        "fields: hyperbolic_em labeled anti_torqued",
        rep.label == FieldClass::AntiTorqued,
        rep.label.as_str(),
    ));
    let rho_dev = rep
        .rho
        .iter()
        .map(|r| (r - 1.0).abs())
        .fold(0.0f64, f64::max);
    checks.push(Check::residual("fields: hyperbolic_em rho - 1", rho_dev, 1e-6));

    // Affine concircular field.
    let affine = FieldSpec::builtin(
        "concircular_affine",
        punctured.clone(),
        &[1.0, 1.0, 0.0, 0.0],
    )?;
    let pts = sample_domain_points(&punctured, 60, 44)?;
    let rep = classify_field(&affine, &pts, 1e-6)?;
    checks.push(Check::flag(
        "fields: concircular_affine labeled concircular",
        rep.label == FieldClass::Concircular,
        rep.label.as_str(),
    ));
    let omega_max = rep.omega_norm.iter().cloned().fold(0.0f64, f64::max);
    checks.push(Check::residual(
        "fields: concircular_affine |omega|",
        omega_max,
        1e-8,
    ));

    // Twisted torqued field on the warped interval product.
    let warped = Arc::new(ChartMetric::builtin(
        "warped_interval_product",
        3,
        &[1.0, 1.0],
    )?);
    let twisted = FieldSpec::builtin("twisted_torqued", warped.clone(), &[])?;
    let pts = sample_domain_points(&warped, 60, 45)?;
    let rep = classify_field(&twisted, &pts, 1e-6)?;
    checks.push(Check::flag(
        "fields: twisted_torqued labeled torqued (proper)",
        rep.label == FieldClass::Torqued && rep.proper,
        rep.label.as_str(),
    ));
    checks.push(Check::residual(
        "fields: twisted_torqued <V, W>",
        rep.orthogonality_defect,
        1e-6,
    ));

    // Anti-torqued fields are unit geodesic fields.
    for (name, field, metric, seed) in [
        ("radial_unit", &radial, &punctured, 46u64),
        ("hyperbolic_em", &em, &hyp, 47),
    ] {
        let pts = sample_domain_points(metric, 50, seed)?;
        let mut unit_dev = 0.0f64;
        let mut geo_dev = 0.0f64;
        for p in &pts {
            let v = field.eval(p)?;
            unit_dev = unit_dev.max((metric.inner(p, &v, &v)? - 1.0).abs());
            let acc = field.nabla(p, &v)?;
            geo_dev = geo_dev.max(metric.inner(p, &acc, &acc)?.max(0.0).sqrt());
        }
        checks.push(Check::residual(
            &format!("fields: {name} |<V,V>| - 1"),
            unit_dev,
            1e-6,
        ));
        checks.push(Check::residual(
            &format!("fields: {name} |grad_V V|"),
            geo_dev,
            1e-6,
        ));
    }
    Ok(())
}

fn branch_checks(checks: &mut Vec<Check>) -> Result<()> {
    // (a) circle about the origin.
    let circle = builtin_curve("circle_origin", &[1.0], 1201)?;
    let frenet = frenet_apparatus(&circle, DEFAULT_RANK_TOL)?;
    let rep = classify_euclidean_slant(&circle, &frenet, 1e-6)?;
    checks.push(Check::flag(
        "branches: circle_origin -> circle branch",
        rep.branch == EuclideanBranch::CircleOrigin,
        &format!("{:?}", rep.branch),
    ));
    checks.push(Check::residual(
        "branches: circle cos(theta) + 1",
        rep.cos_theta + 1.0,
        1e-8,
    ));

    // (b) logarithmic spiral.
    let spiral = builtin_curve("log_spiral", &[1.0, 10.0], 1501)?;
    let frenet = frenet_apparatus(&spiral, DEFAULT_RANK_TOL)?;
    let rep = classify_euclidean_slant(&spiral, &frenet, 1e-6)?;
    checks.push(Check::flag(
        "branches: log_spiral -> spiral branch",
        rep.branch == EuclideanBranch::LogSpiral,
        &format!("{:?}", rep.branch),
    ));
    let fit = rep.line_fit.as_ref().expect("line fit present");
    checks.push(Check::residual(
        "branches: spiral slope - |sin(theta)|",
        fit.slope.abs() - rep.theta_hat.sin(),
        1e-6,
    ));
    checks.push(Check::residual(
        "branches: spiral distance-curvature law",
        rep.kappa_residual.unwrap_or(f64::INFINITY),
        1e-6,
    ));

    // (c) rectifying curve.
    let rect = builtin_curve("rectifying", &[1.0, 0.0, 1.0, 4.0], 1501)?;
    let frenet = frenet_apparatus(&rect, DEFAULT_RANK_TOL)?;
    let rep = classify_euclidean_slant(&rect, &frenet, 1e-6)?;
    checks.push(Check::flag(
        "branches: rectifying -> rectifying branch",
        rep.branch == EuclideanBranch::Rectifying,
        &format!("{:?}", rep.branch),
    ));
    checks.push(Check::residual(
        "branches: rectifying <gamma, N>",
        rep.gamma_n_max,
        1e-6,
    ));
    // Ratio law with c = 1 on the rectifying curve.
    let srep = slant_report(&rect, &frenet, &radial_axis()?, 1e-6)?;
    let law = ratio_law_check(&frenet, &srep, 1e-5)?;
    checks.push(Check::residual(
        "branches: rectifying ratio-law c - 1",
        law.c_hat - 1.0,
        1e-5,
    ));
    checks.push(Check::residual(
        "branches: rectifying ratio-law deviation",
        law.residual,
        1e-5,
    ));

    // (d) synthesized generic branch.
    let cfg = SlantSynthesisConfig {
        theta: 2.0 * PI / 3.0,
        phi: ScalarFunction::sqrt_quadratic(1.0, 0.0, 0.5),
        tau0: None,
        s_range: (1.0, 2.0),
        n_out: 1201,
        ode: OdeOptions::default(),
    };
    let out = synthesize_slant_from_phi(&cfg)?;
    let frenet = frenet_apparatus(&out.curve, DEFAULT_RANK_TOL)?;
    let rep = classify_euclidean_slant(&out.curve, &frenet, 1e-6)?;
    checks.push(Check::flag(
        "branches: synthesized curve -> generic branch",
        rep.branch == EuclideanBranch::Generic,
        &format!("{:?}", rep.branch),
    ));
    checks.push(Check::residual(
        "branches: generic distance-curvature law",
        rep.kappa_residual.unwrap_or(f64::INFINITY),
        1e-4,
    ));
    checks.push(Check::residual(
        "branches: generic torsion law",
        rep.tau_residual.unwrap_or(f64::INFINITY),
        1e-4,
    ));
    Ok(())
}

fn hyperbolic_checks(checks: &mut Vec<Check>) -> Result<()> {
    let line = builtin_curve("hyperbolic_vertical_line", &[0.0, 1.0], 201)?;
    let frenet = frenet_apparatus(&line, DEFAULT_RANK_TOL)?;
    let special = detect_special(&frenet, 1e-6)?;
    checks.push(Check::flag(
        "hyperbolic: vertical line is a geodesic",
        special.geodesic,
        &format!("order {}", frenet.order),
    ));
    let axis = FieldSpec::builtin("hyperbolic_em", line.metric().clone(), &[])?;
    let rep = slant_report(&line, &frenet, &axis, 1e-6)?;
    checks.push(Check::flag(
        "hyperbolic: axis parallel to the tangent (slant case 1)",
        rep.case == SlantCase::AxisParallelTangent && rep.is_slant_helix,
        "V = -T along the line",
    ));
    Ok(())
}

fn torqued_circle_checks(checks: &mut Vec<Check>) -> Result<()> {
    let r = 1.5;
    let circle = builtin_curve("circle_origin", &[r, 0.0, r * std::f64::consts::TAU], 1201)?;
    let field = FieldSpec::builtin(
        "concircular_affine",
        circle.metric().clone(),
        &[1.0, 0.0, 0.0, 0.0],
    )?;
    let frenet = frenet_apparatus(&circle, DEFAULT_RANK_TOL)?;
    let rep = torqued_report(&circle, &frenet, &field, 1e-6)?;
    checks.push(Check::flag(
        "torqued: circle with position axis is case (b)",
        rep.case == TorquedCase::AxisParallelNormal && rep.is_torqued_curve,
        &format!("theta = {}", rep.theta_hat),
    ));
    checks.push(Check::residual(
        "torqued: circle theta + r",
        rep.theta_hat + r,
        1e-6,
    ));
    if let Some(cb) = &rep.case_b {
        checks.push(Check::residual(
            "torqued: circle kappa f_2 + rho",
            cb.kappa_f2_plus_rho,
            1e-6,
        ));
    }
    Ok(())
}

fn synthesis_checks(checks: &mut Vec<Check>) -> Result<()> {
    // Slant synthesis round trip on a feasible distance function.
    let cfg = SlantSynthesisConfig {
        theta: 2.0 * PI / 3.0,
        phi: ScalarFunction::sqrt_quadratic(1.0, 0.0, 0.5),
        tau0: None,
        s_range: (1.0, 2.0),
        n_out: 1201,
        ode: OdeOptions::default(),
    };
    let out = synthesize_slant_from_phi(&cfg)?;
    let frenet = frenet_apparatus(&out.curve, DEFAULT_RANK_TOL)?;
    let rep = slant_report(&out.curve, &frenet, &radial_axis()?, 1e-4)?;
    checks.push(Check::residual(
        "synthesis: slant round trip cos(theta_hat) - cos(2pi/3)",
        rep.cos_theta - (2.0 * PI / 3.0).cos(),
        1e-4,
    ));
    checks.push(Check::residual(
        "synthesis: slant round trip constancy",
        rep.constancy_residual,
        1e-4,
    ));

    // The distance function sqrt(s^2 + 1) with theta = 2pi/3 on [1, 3] has
    // a negative g^2 budget past s = sqrt(3) (and a vanishing curvature
    // law): the synthesis must reject it.
    let bad = SlantSynthesisConfig {
        theta: 2.0 * PI / 3.0,
        phi: ScalarFunction::sqrt_quadratic(1.0, 0.0, 1.0),
        tau0: Some(0.1),
        s_range: (1.0, 3.0),
        n_out: 401,
        ode: OdeOptions::default(),
    };
    checks.push(Check::flag(
        "synthesis: infeasible distance function rejected",
        matches!(
            synthesize_slant_from_phi(&bad),
            Err(crate::error::Error::Infeasible(_))
        ),
        "phi = sqrt(s^2+1), theta = 2pi/3 violates the g^2 budget on [1, 3]",
    ));

    // Concircular construction.
    let cfg = ConcircularConfig {
        theta: 1.0,
        rho: 1.0,
        f3: ScalarFunction::affine(2.0, -0.25),
        f1_0: 1.0,
        s_range: (0.0, 1.0),
        n_out: 801,
        ode: OdeOptions::default(),
    };
    let out = synthesize_concircular(&cfg)?;
    let frenet = frenet_apparatus(&out.curve, DEFAULT_RANK_TOL)?;
    let rep = torqued_report(&out.curve, &frenet, &out.field, 1e-5)?;
    checks.push(Check::residual(
        "synthesis: concircular theta_hat - 1",
        rep.theta_hat - 1.0,
        1e-4,
    ));
    let sys = rep.system.as_ref().expect("concircular system expected");
    for line in &sys.lines {
        checks.push(Check::residual(
            &format!("synthesis: concircular system |{}|", line.label),
            line.residual,
            1e-5,
        ));
    }
    let rho = vec![1.0; out.curve.n()];
    let ode_res = concircular_ode_residual_series(
        out.curve.grid(),
        frenet.window,
        &out.kappa,
        &out.tau,
        &rho,
        rep.theta_hat,
    )?;
    checks.push(Check::residual(
        "synthesis: concircular characterizing ODE",
        ode_res,
        1e-4,
    ));
    Ok(())
}
