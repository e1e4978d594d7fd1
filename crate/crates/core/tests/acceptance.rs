//! Acceptance suite: every criterion runs at its stated tolerance and
//! prints one pass/fail line (run with `--nocapture` to see them all).
//!
//! Criterion 7 is expected to fail: its prescribed distance function
//! violates the decomposition budget |gamma|^2 >= (phi phi')^2 +
//! cos^2(theta) phi^2 on the requested interval, and the distance law
//! yields an identically vanishing curvature; no curve realizes it. The
//! synthesis rejects the input, and a feasible supplement demonstrates the
//! round trip (see the repository notes for the analysis).

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};

use torsegeo::curvegeo::{
    frenet_apparatus, reparametrize_arclength, CurveAnalytic, CurveSamples, FrenetData,
    DEFAULT_RANK_TOL,
};
use torsegeo::diff;
use torsegeo::fields::{classify_field, FieldClass, FieldSpec};
use torsegeo::manifold::{sample_domain_points, ChartMetric};
use torsegeo::ode::OdeOptions;
use torsegeo::slant::{
    classify_euclidean_slant, ratio_law_check, slant_report, EuclideanBranch,
};
use torsegeo::synthesis::{
    builtin_curve, frenet_integrate_in, synthesize_concircular, synthesize_slant_from_phi,
    ConcircularConfig, FrameInit, ScalarFunction, SlantSynthesisConfig,
};
use torsegeo::torqued::{concircular_ode_residual_series, torqued_report};

fn verdict(criterion: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

fn radial_axis() -> FieldSpec {
    let metric = Arc::new(ChartMetric::builtin("punctured_euclidean", 3, &[]).unwrap());
    FieldSpec::builtin("radial_unit", metric, &[]).unwrap()
}

#[test]
fn criterion_1_log_spiral() {
    let curve = builtin_curve("log_spiral", &[1.0, 10.0], 2001).unwrap();
    let frenet = frenet_apparatus(&curve, DEFAULT_RANK_TOL).unwrap();
    let mut kappa_law = 0.0f64;
    for k in frenet.window.iter() {
        kappa_law = kappa_law.max((frenet.kappa(k) * frenet.grid[k] - 1.0).abs());
    }
    let rep = slant_report(&curve, &frenet, &radial_axis(), 1e-6).unwrap();
    let cos_dev = (rep.cos_theta + FRAC_1_SQRT_2).abs();
    let mut f_dev = 0.0f64;
    let mut g_dev = 0.0f64;
    for k in rep.window.iter() {
        f_dev = f_dev.max((rep.coeffs[k][0] - FRAC_1_SQRT_2).abs());
        g_dev = g_dev.max(rep.coeffs[k][1].abs());
    }
    let sys = rep.system.as_ref().expect("system evaluated");
    let sys_max = sys.lines.iter().map(|l| l.residual).fold(0.0f64, f64::max);
    let pass = kappa_law < 1e-6
        && cos_dev < 1e-6
        && f_dev < 1e-6
        && g_dev < 1e-6
        && sys.lines.len() == 3
        && sys_max < 1e-6;
    verdict(
        "1 (log spiral)",
        pass,
        &format!(
            "|kappa s - 1| = {kappa_law:.2e}, |cos theta + 1/sqrt2| = {cos_dev:.2e}, \
             |f - 1/sqrt2| = {f_dev:.2e}, |g| = {g_dev:.2e}, system max = {sys_max:.2e} (tol 1e-6)"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_2_cone_loxodrome() {
    let curve = builtin_curve("cone_loxodrome", &[1.0, 10.0], 2501).unwrap();
    let frenet = frenet_apparatus(&curve, DEFAULT_RANK_TOL).unwrap();
    let root39 = 39.0f64.sqrt();
    let mut kappa_law = 0.0f64;
    let mut tau_law = 0.0f64;
    for k in frenet.window.iter() {
        kappa_law = kappa_law.max((frenet.kappa(k) * 2.0 * frenet.grid[k] - root39).abs());
        tau_law = tau_law.max((frenet.tau(k) * 2.0 * frenet.grid[k] + 3.0).abs());
    }
    let rep = slant_report(&curve, &frenet, &radial_axis(), 1e-5).unwrap();
    let cos_dev = (rep.cos_theta + 3.0f64.sqrt() / 13.0f64.sqrt()).abs();
    let want_g = 3.0 * 3.0f64.sqrt() / (2.0 * 13.0f64.sqrt());
    let mut f_dev = 0.0f64;
    let mut g_dev = 0.0f64;
    let mut rho_dev = 0.0f64;
    for k in rep.window.iter() {
        f_dev = f_dev.max((rep.coeffs[k][0] - 0.5).abs());
        g_dev = g_dev.max((rep.coeffs[k][1].abs() - want_g).abs());
        rho_dev = rho_dev.max((rep.rho[k] * frenet.grid[k] - 2.0).abs());
    }
    let sys = rep.system.as_ref().expect("system evaluated");
    let sys_max = sys.lines.iter().map(|l| l.residual).fold(0.0f64, f64::max);
    // The recomputed invariants diverge from the printed values rho = 1/s
    // and g = 7 sqrt(3)/(4 sqrt(13)); the divergence must be flagged.
    let printed_g = 7.0 * 3.0f64.sqrt() / (4.0 * 13.0f64.sqrt());
    let divergence_flagged = (2.0f64 - 1.0).abs() > 0.5 && (want_g - printed_g).abs() > 1e-2;
    let pass = kappa_law < 1e-6
        && tau_law < 1e-6
        && cos_dev < 1e-6
        && f_dev < 1e-6
        && rho_dev < 1e-6
        && g_dev < 1e-6
        && sys_max < 1e-5
        && divergence_flagged;
    verdict(
        "2 (cone loxodrome)",
        pass,
        &format!(
            "|2s kappa - sqrt39| = {kappa_law:.2e}, |2s tau + 3| = {tau_law:.2e}, \
             cos dev = {cos_dev:.2e}, |f - 1/2| = {f_dev:.2e}, |rho s - 2| = {rho_dev:.2e}, \
             |g| dev = {g_dev:.2e}, system max = {sys_max:.2e}; printed-value divergence flagged"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_3_field_classification() {
    let punctured = Arc::new(ChartMetric::builtin("punctured_euclidean", 3, &[]).unwrap());
    let radial = FieldSpec::builtin("radial_unit", punctured.clone(), &[]).unwrap();
    let pts = sample_domain_points(&punctured, 100, 42).unwrap();
    let rep = classify_field(&radial, &pts, 1e-6).unwrap();
    let radial_ok = rep.label == FieldClass::AntiTorqued;
    let mut rho_law = 0.0f64;
    for (p, rho) in pts.iter().zip(&rep.rho) {
        rho_law = rho_law.max((rho * p.norm() - 1.0).abs());
    }

    let hyp = Arc::new(ChartMetric::builtin("hyperbolic_upper_half", 3, &[]).unwrap());
    let em = FieldSpec::builtin("hyperbolic_em", hyp.clone(), &[]).unwrap();
    let hpts = sample_domain_points(&hyp, 100, 7).unwrap();
    let hrep = classify_field(&em, &hpts, 1e-6).unwrap();
    let em_ok = hrep.label == FieldClass::AntiTorqued;
    let em_rho = hrep
        .rho
        .iter()
        .map(|r| (r - 1.0).abs())
        .fold(0.0f64, f64::max);

    let affine =
        FieldSpec::builtin("concircular_affine", punctured.clone(), &[1.0, 1.0, 0.0, 0.0])
            .unwrap();
    let arep = classify_field(&affine, &pts, 1e-6).unwrap();
    let affine_ok = arep.label == FieldClass::Concircular;
    let omega_max = arep.omega_norm.iter().cloned().fold(0.0f64, f64::max);

    let warped =
        Arc::new(ChartMetric::builtin("warped_interval_product", 3, &[1.0, 1.0]).unwrap());
    let twisted = FieldSpec::builtin("twisted_torqued", warped.clone(), &[]).unwrap();
    let wpts = sample_domain_points(&warped, 100, 8).unwrap();
    let trep = classify_field(&twisted, &wpts, 1e-6).unwrap();
    let twisted_ok = trep.label == FieldClass::Torqued;

    let pass = radial_ok
        && rho_law < 1e-6
        && em_ok
        && em_rho < 1e-6
        && affine_ok
        && omega_max < 1e-8
        && twisted_ok
        && trep.orthogonality_defect < 1e-6;
    verdict(
        "3 (field classification)",
        pass,
        &format!(
            "radial anti_torqued |rho|p|-1| = {rho_law:.2e} (100 pts); em anti_torqued \
             |rho-1| = {em_rho:.2e}; affine concircular |omega| = {omega_max:.2e}; \
             twisted torqued |<V,W>| = {:.2e}",
            trep.orthogonality_defect
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_4_anti_torqued_unit_geodesic() {
    let punctured = Arc::new(ChartMetric::builtin("punctured_euclidean", 3, &[]).unwrap());
    let hyp = Arc::new(ChartMetric::builtin("hyperbolic_upper_half", 3, &[]).unwrap());
    let fields = [
        (
            FieldSpec::builtin("radial_unit", punctured.clone(), &[]).unwrap(),
            punctured.clone(),
            11u64,
        ),
        (
            FieldSpec::builtin("hyperbolic_em", hyp.clone(), &[]).unwrap(),
            hyp.clone(),
            12,
        ),
    ];
    let mut unit_dev = 0.0f64;
    let mut geo_dev = 0.0f64;
    for (field, metric, seed) in &fields {
        let pts = sample_domain_points(metric, 100, *seed).unwrap();
        let rep = classify_field(field, &pts, 1e-6).unwrap();
        assert_eq!(rep.label, FieldClass::AntiTorqued);
        for p in &pts {
            let v = field.eval(p).unwrap();
            unit_dev = unit_dev.max((metric.inner(p, &v, &v).unwrap() - 1.0).abs());
            let acc = field.nabla(p, &v).unwrap();
            geo_dev = geo_dev.max(metric.inner(p, &acc, &acc).unwrap().max(0.0).sqrt());
        }
    }
    let pass = unit_dev < 1e-6 && geo_dev < 1e-6;
    verdict(
        "4 (anti-torqued fields are unit geodesic)",
        pass,
        &format!("max |<V,V>-1| = {unit_dev:.2e}, max |grad_V V| = {geo_dev:.2e} (tol 1e-6)"),
    );
    assert!(pass);
}

#[test]
fn criterion_5_branch_recovery() {
    // (a) circle about the origin.
    let circle = builtin_curve("circle_origin", &[1.0], 1201).unwrap();
    let f = frenet_apparatus(&circle, DEFAULT_RANK_TOL).unwrap();
    let rep_a = classify_euclidean_slant(&circle, &f, 1e-6).unwrap();
    let a_ok =
        rep_a.branch == EuclideanBranch::CircleOrigin && (rep_a.cos_theta + 1.0).abs() < 1e-8;

    // (b) logarithmic spiral with fitted slope |sin theta| and the
    // distance-curvature law.
    let spiral = builtin_curve("log_spiral", &[1.0, 10.0], 1501).unwrap();
    let f = frenet_apparatus(&spiral, DEFAULT_RANK_TOL).unwrap();
    let rep_b = classify_euclidean_slant(&spiral, &f, 1e-6).unwrap();
    let fit = rep_b.line_fit.clone().expect("line fit");
    let b_ok = rep_b.branch == EuclideanBranch::LogSpiral
        && (fit.slope.abs() - rep_b.theta_hat.sin()).abs() < 1e-6
        && rep_b.kappa_residual.unwrap() < 1e-6;

    // (c) rectifying curve.
    let rect = builtin_curve("rectifying", &[1.0, 0.0, 1.0, 4.0], 1501).unwrap();
    let f = frenet_apparatus(&rect, DEFAULT_RANK_TOL).unwrap();
    let rep_c = classify_euclidean_slant(&rect, &f, 1e-6).unwrap();
    let c_ok = rep_c.branch == EuclideanBranch::Rectifying && rep_c.gamma_n_max < 1e-6;

    // (d) synthesized generic slant helix.
    let cfg = SlantSynthesisConfig {
        theta: 2.0 * PI / 3.0,
        phi: ScalarFunction::sqrt_quadratic(1.0, 0.0, 0.5),
        tau0: None,
        s_range: (1.0, 2.0),
        n_out: 1201,
        ode: OdeOptions::default(),
    };
    let out = synthesize_slant_from_phi(&cfg).unwrap();
    let f = frenet_apparatus(&out.curve, DEFAULT_RANK_TOL).unwrap();
    let rep_d = classify_euclidean_slant(&out.curve, &f, 1e-6).unwrap();
    let d_ok = rep_d.branch == EuclideanBranch::Generic
        && rep_d.kappa_residual.unwrap() < 1e-4
        && rep_d.tau_residual.unwrap() < 1e-4;

    let pass = a_ok && b_ok && c_ok && d_ok;
    verdict(
        "5 (branch recovery)",
        pass,
        &format!(
            "(a) {:?} cos = {:.9}; (b) {:?} slope dev = {:.2e}, kappa law = {:.2e}; \
             (c) {:?} <gamma,N> = {:.2e}; (d) {:?} kappa law = {:.2e}, tau law = {:.2e}",
            rep_a.branch,
            rep_a.cos_theta,
            rep_b.branch,
            (fit.slope.abs() - rep_b.theta_hat.sin()).abs(),
            rep_b.kappa_residual.unwrap(),
            rep_c.branch,
            rep_c.gamma_n_max,
            rep_d.branch,
            rep_d.kappa_residual.unwrap(),
            rep_d.tau_residual.unwrap()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_6_ratio_law() {
    let rect = builtin_curve("rectifying", &[1.0, 0.5, 1.0, 4.0], 1501).unwrap();
    let frenet = frenet_apparatus(&rect, DEFAULT_RANK_TOL).unwrap();
    let rep = slant_report(&rect, &frenet, &radial_axis(), 1e-6).unwrap();
    let law = ratio_law_check(&frenet, &rep, 1e-5).unwrap();
    let pass = (law.c_hat - 1.0).abs() < 1e-5 && law.residual < 1e-5;
    verdict(
        "6 (ratio law)",
        pass,
        &format!(
            "c_hat = {:.9} (|c-1| = {:.2e}), deviation = {:.2e} (tol 1e-5)",
            law.c_hat,
            (law.c_hat - 1.0).abs(),
            law.residual
        ),
    );
    assert!(pass);
}

/// Criterion 7 as stated in the acceptance list. The configuration is
/// infeasible: with phi = sqrt(s^2+1), phi phi' = s and (phi phi')' = 1, so
/// the distance law gives kappa = 0 identically, and the budget
/// phi^2 (1 - phi'^2 - cos^2 theta) = (3 - s^2)/4 turns negative past
/// s = sqrt(3) < 3. No order->=2 curve satisfies |gamma| = phi and
/// <gamma/|gamma|, N> = cos(2 pi/3) on [1, 3]; the synthesis rejects the
/// input, and this test records the criterion as failed rather than
/// weakening it.
#[test]
fn criterion_7_slant_synthesis_roundtrip_as_stated() {
    let cfg = SlantSynthesisConfig {
        theta: 2.0 * PI / 3.0,
        phi: ScalarFunction::sqrt_quadratic(1.0, 0.0, 1.0),
        tau0: Some(0.1),
        s_range: (1.0, 3.0),
        n_out: 801,
        ode: OdeOptions::default(),
    };
    let outcome = synthesize_slant_from_phi(&cfg);
    let (pass, detail) = match outcome {
        Ok(out) => {
            let frenet = frenet_apparatus(&out.curve, DEFAULT_RANK_TOL).unwrap();
            let rep = slant_report(&out.curve, &frenet, &radial_axis(), 1e-4).unwrap();
            let cos_dev = (rep.cos_theta - (2.0 * PI / 3.0).cos()).abs();
            (
                cos_dev < 1e-4 && rep.constancy_residual < 1e-4,
                format!(
                    "cos dev = {cos_dev:.2e}, constancy = {:.2e}",
                    rep.constancy_residual
                ),
            )
        }
        Err(e) => (
            false,
            format!(
                "the stated configuration admits no curve (synthesis rejected it: {e}); \
                 the decomposition budget is negative past s = sqrt(3) and the distance \
                 law yields kappa = 0"
            ),
        ),
    };
    verdict("7 (slant synthesis round trip, stated instance)", pass, &detail);
    assert!(
        pass,
        "criterion 7 is unattainable as stated: {detail}. A feasible round trip is \
         demonstrated by the supplementary test in this suite."
    );
}

/// Supplementary demonstration (not the spec instance): the round trip the
/// criterion aims at, on a feasible distance function.
#[test]
fn slant_synthesis_roundtrip_feasible_supplement() {
    let theta = 2.0 * PI / 3.0;
    let cfg = SlantSynthesisConfig {
        theta,
        phi: ScalarFunction::sqrt_quadratic(1.0, 0.0, 0.5),
        tau0: None,
        s_range: (1.0, 3.0),
        n_out: 1501,
        ode: OdeOptions::default(),
    };
    let out = synthesize_slant_from_phi(&cfg).unwrap();
    let frenet = frenet_apparatus(&out.curve, DEFAULT_RANK_TOL).unwrap();
    let rep = slant_report(&out.curve, &frenet, &radial_axis(), 1e-4).unwrap();
    let cos_dev = (rep.cos_theta - theta.cos()).abs();
    let pass = cos_dev < 1e-4 && rep.constancy_residual < 1e-4;
    verdict(
        "7-supplement (feasible slant round trip, phi = sqrt(1 + s^2/2))",
        pass,
        &format!(
            "cos dev = {cos_dev:.2e}, constancy = {:.2e} (tol 1e-4)",
            rep.constancy_residual
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_8_concircular_construction() {
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
    let sys = rep.system.as_ref().expect("concircular system");
    let sys_max = sys.lines.iter().map(|l| l.residual).fold(0.0f64, f64::max);
    let rho = vec![1.0; out.curve.n()];
    let ode_res = concircular_ode_residual_series(
        out.curve.grid(),
        frenet.window,
        &out.kappa,
        &out.tau,
        &rho,
        rep.theta_hat,
    )
    .unwrap();
    let pass = sys_max < 1e-5 && ode_res < 1e-4 && rep.is_torqued_curve;
    verdict(
        "8 (concircular construction)",
        pass,
        &format!(
            "system (concircular) max = {sys_max:.2e} (tol 1e-5), characterizing ODE \
             residual = {ode_res:.2e} (tol 1e-4), theta_hat = {:.9}",
            rep.theta_hat
        ),
    );
    assert!(pass);
}

// ----- criterion 9: randomized property suite -----

/// Random smooth curve: a helix with pitch `lambda` carrying small
/// harmonic perturbations, scaled and offset to fit the chart domain.
/// Speed stays bounded below and the torsion away from zero, so the draws
/// are well conditioned for Frenet analysis.
struct PerturbedHelix {
    lambda: f64,
    scale: f64,
    offset: [f64; 3],
    // perturb[i] = [a2, b2, a3, b3] for coordinate i.
    perturb: Vec<[f64; 4]>,
}

impl PerturbedHelix {
    fn random(rng: &mut impl rand::Rng, scale: f64, offset: [f64; 3]) -> Self {
        let lambda = rng.random_range(0.4..0.9);
        let eps = rng.random_range(0.05..0.12);
        let perturb = (0..3)
            .map(|_| {
                let mut c = [0.0; 4];
                for (j, cj) in c.iter_mut().enumerate() {
                    let harmonic = (j / 2 + 2) as f64;
                    *cj = eps * rng.random_range(-1.0..1.0) / (harmonic * harmonic);
                }
                c
            })
            .collect();
        PerturbedHelix {
            lambda,
            scale,
            offset,
            perturb,
        }
    }

    fn eval(&self, t: f64, order: usize) -> DVector<f64> {
        let phase = order as f64 * std::f64::consts::FRAC_PI_2;
        let base = [
            (t + phase).cos(),
            (t + phase).sin(),
            match order {
                0 => self.lambda * t,
                1 => self.lambda,
                _ => 0.0,
            },
        ];
        DVector::from_fn(3, |i, _| {
            let c = &self.perturb[i];
            let mut acc = base[i];
            for (h, pair) in [(2.0f64, (c[0], c[1])), (3.0, (c[2], c[3]))] {
                acc += h.powi(order as i32)
                    * (pair.0 * (h * t + phase).cos() + pair.1 * (h * t + phase).sin());
            }
            let mut v = self.scale * acc;
            if order == 0 {
                v += self.offset[i];
            }
            v
        })
    }
}

fn random_curve(
    metric: Arc<ChartMetric>,
    seed: u64,
    hyperbolic: bool,
) -> Option<(CurveSamples, FrenetData)> {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let (scale, offset) = if hyperbolic {
        (0.45, [0.0, 0.0, 2.2])
    } else {
        (1.0, [0.0, 0.0, 0.0])
    };
    let helix = Arc::new(PerturbedHelix::random(&mut rng, scale, offset));
    let helix2 = helix.clone();
    let raw = CurveSamples::from_analytic(
        metric,
        0.0,
        TAU,
        901,
        CurveAnalytic::new(4, move |t, order| helix2.eval(t, order)),
        false,
    )
    .ok()?;
    let curve = reparametrize_arclength(&raw, 1601).ok()?;
    let frenet = frenet_apparatus(&curve, DEFAULT_RANK_TOL).ok()?;
    // Keep only well-conditioned order-3 draws: bounded curvature, torsion
    // bounded away from zero (no order ambiguity near the rank tolerance).
    if frenet.order != 3 {
        return None;
    }
    let mut min_tau = f64::INFINITY;
    let mut max_kappa = 0.0f64;
    for k in frenet.window.iter() {
        min_tau = min_tau.min(frenet.tau(k).abs());
        max_kappa = max_kappa.max(frenet.kappa(k));
    }
    if min_tau < 0.03 || max_kappa > 10.0 {
        return None;
    }
    Some((curve, frenet))
}

/// Reconstruction round trip over unit-length windows: re-integrate the
/// recovered (kappa, tau) from the true frame at the window start and
/// measure the max pointwise chart distance.
fn roundtrip_distance(curve: &CurveSamples, frenet: &FrenetData) -> f64 {
    let metric = curve.metric().clone();
    let h = curve.grid()[1] - curve.grid()[0];
    let per_window = (1.0 / h).floor() as usize;
    let grid = frenet.grid.clone();
    let kappa: Vec<f64> = (0..grid.len())
        .map(|k| if frenet.window.contains(k) { frenet.kappa(k) } else { 0.0 })
        .collect();
    let tau: Vec<f64> = (0..grid.len())
        .map(|k| if frenet.window.contains(k) { frenet.tau(k) } else { 0.0 })
        .collect();
    let glo = grid[frenet.window.lo];
    let ghi = grid[frenet.window.hi];
    let sub_grid: Vec<f64> = frenet.window.iter().map(|k| grid[k]).collect();
    let sub_kappa: Vec<f64> = frenet.window.iter().map(|k| kappa[k]).collect();
    let sub_tau: Vec<f64> = frenet.window.iter().map(|k| tau[k]).collect();

    let mut worst = 0.0f64;
    let mut k0 = frenet.window.lo;
    while k0 + per_window <= frenet.window.hi {
        let s0 = grid[k0];
        let s1 = (s0 + 1.0).min(ghi);
        let init = FrameInit {
            point: frenet.points[k0].clone(),
            frame: [
                frenet.frames[k0][0].clone(),
                frenet.frames[k0][1].clone(),
                frenet.frames[k0][2].clone(),
            ],
        };
        let kg = sub_grid.clone();
        let kv = sub_kappa.clone();
        let tg = sub_grid.clone();
        let tv = sub_tau.clone();
        let glo_c = glo;
        let ghi_c = ghi;
        let out = frenet_integrate_in(
            metric.clone(),
            Arc::new(move |s: f64| diff::interp_cubic(&kg, &kv, s.clamp(glo_c, ghi_c))),
            Arc::new(move |s: f64| diff::interp_cubic(&tg, &tv, s.clamp(glo_c, ghi_c))),
            &init,
            (s0, s1),
            201,
            &OdeOptions::default(),
        )
        .expect("window reconstruction");
        for (j, &s) in out.curve.grid().iter().enumerate() {
            let truth = curve
                .eval_analytic(s, 0)
                .expect("analytic curve evaluation");
            worst = worst.max((&out.curve.points()[j] - truth).norm());
        }
        k0 += per_window;
    }
    worst
}

#[test]
fn criterion_9_frenet_property_suite() {
    let euclid = Arc::new(ChartMetric::builtin("euclidean", 3, &[]).unwrap());
    let hyp = Arc::new(ChartMetric::builtin("hyperbolic_upper_half", 3, &[]).unwrap());

    let mut curves = Vec::new();
    let mut seed = 1000u64;
    while curves.len() < 10 && seed < 1200 {
        if let Some(cf) = random_curve(euclid.clone(), seed, false) {
            curves.push((cf, false));
        }
        seed += 1;
    }
    let mut seed = 5000u64;
    while curves.len() < 20 && seed < 5200 {
        if let Some(cf) = random_curve(hyp.clone(), seed, true) {
            curves.push((cf, true));
        }
        seed += 1;
    }
    assert_eq!(curves.len(), 20, "could not draw 20 well-conditioned curves");

    let mut ortho_max = 0.0f64;
    let mut frenet_max = 0.0f64;
    let mut roundtrip_max = 0.0f64;
    let mut equivariance_max = 0.0f64;

    // Fixed rotation for the equivariance check.
    let (c1, s1) = (0.8f64.cos(), 0.8f64.sin());
    let (c2, s2) = (0.3f64.cos(), 0.3f64.sin());
    let q = DMatrix::from_row_slice(3, 3, &[c1, -s1, 0.0, s1, c1, 0.0, 0.0, 0.0, 1.0])
        * DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, c2, -s2, 0.0, s2, c2]);

    for ((curve, frenet), hyperbolic) in &curves {
        ortho_max = ortho_max.max(frenet.orthonormality_defect);
        frenet_max = frenet_max.max(
            frenet
                .frenet_residuals
                .iter()
                .cloned()
                .fold(0.0f64, f64::max),
        );
        roundtrip_max = roundtrip_max.max(roundtrip_distance(curve, frenet));

        if !*hyperbolic {
            // Rotate the curve and compare the recovered invariants.
            let base: Arc<CurveSamples> = Arc::new(reparametrize_arclength(curve, 1601).unwrap());
            let q2 = q.clone();
            let base2 = base.clone();
            let max_ord = base.analytic_order();
            let rotated = CurveSamples::from_analytic(
                curve.metric().clone(),
                base.grid()[0],
                base.grid()[base.n() - 1],
                base.n(),
                CurveAnalytic::new(max_ord, move |s, order| {
                    &q2 * base2.eval_analytic(s, order).expect("analytic eval")
                }),
                true,
            )
            .unwrap();
            let rot_frenet = frenet_apparatus(&rotated, DEFAULT_RANK_TOL).unwrap();
            let base_frenet = frenet_apparatus(&base, DEFAULT_RANK_TOL).unwrap();
            let win = rot_frenet.window.intersect(base_frenet.window);
            for k in win.iter() {
                equivariance_max = equivariance_max
                    .max((rot_frenet.kappa(k) - base_frenet.kappa(k)).abs())
                    .max((rot_frenet.tau(k) - base_frenet.tau(k)).abs());
            }
        }
    }

    let pass = ortho_max < 1e-8
        && frenet_max < 1e-5
        && roundtrip_max < 1e-4
        && equivariance_max < 1e-8;
    verdict(
        "9 (randomized Frenet property suite)",
        pass,
        &format!(
            "20 curves (10 Euclidean, 10 hyperbolic): orthonormality = {ortho_max:.2e} \
             (tol 1e-8), Frenet residuals = {frenet_max:.2e} (tol 1e-5), unit-window \
             round trip = {roundtrip_max:.2e} (tol 1e-4), rotation equivariance = \
             {equivariance_max:.2e} (tol 1e-8)"
        ),
    );
    assert!(pass);
}
