//! Machine-readable report schema and CSV writers.
//!
//! The JSON layout is fixed: top-level blocks `input`, `frenet`,
//! `field_classification`, `slant`, `torqued`, `classification_branch`,
//! `residuals`, `diagnostics`, `metadata`. Reports are deterministic:
//! identical configuration and inputs produce byte-identical files.

use serde::Serialize;

use crate::curvegeo::{FrenetData, SpecialClassification};
use crate::fields::{FieldClass, TorseFormingReport};
use crate::slant::{
    AngleMode, AntiSystemResiduals, EuclideanBranch, EuclideanSlantReport, LineFit, RatioLaw,
    SlantCase, SlantReport, TauResidualForm,
};
use crate::torqued::{CaseBChecks, TorquedCase, TorquedReport, TorquedSystemResiduals};

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub input: InputBlock,
    pub frenet: Option<FrenetBlock>,
    pub field_classification: Option<FieldBlock>,
    pub slant: Option<SlantBlock>,
    pub torqued: Option<TorquedBlock>,
    pub classification_branch: Option<BranchBlock>,
    pub residuals: Vec<ResidualEntry>,
    pub diagnostics: Vec<String>,
    pub metadata: Metadata,
}

impl Report {
    pub fn new(input: InputBlock) -> Report {
        Report {
            input,
            frenet: None,
            field_classification: None,
            slant: None,
            torqued: None,
            classification_branch: None,
            residuals: Vec::new(),
            diagnostics: Vec::new(),
            metadata: Metadata::current(),
        }
    }

    /// Adds a residual entry; gating entries drive the exit code.
    pub fn push_residual(&mut self, name: &str, value: f64, tolerance: f64, gating: bool) {
        self.residuals.push(ResidualEntry {
            name: name.to_string(),
            value,
            tolerance,
            pass: value < tolerance,
            gating,
        });
    }

    /// True when every gating residual is below its tolerance.
    pub fn verified(&self) -> bool {
        self.residuals.iter().all(|r| !r.gating || r.pass)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InputBlock {
    pub command: String,
    pub curve: Option<String>,
    pub curve_params: Vec<f64>,
    pub metric: Option<String>,
    pub metric_params: Vec<f64>,
    pub field: Option<String>,
    pub field_params: Vec<f64>,
    pub samples: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
}

impl Metadata {
    pub fn current() -> Metadata {
        Metadata {
            tool: "torsegeo".into(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualEntry {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Whether this entry participates in the exit-code decision.
    pub gating: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrenetBlock {
    pub order: usize,
    pub frame_len: usize,
    pub completed: bool,
    pub n_samples: usize,
    pub window: [usize; 2],
    pub arc_span: [f64; 2],
    pub orthonormality_defect: f64,
    pub frenet_residual_max: f64,
    pub max_kappa1: f64,
    pub kappa_range: Option<[f64; 2]>,
    pub tau_range: Option<[f64; 2]>,
    pub geodesic: bool,
    pub circle: Option<CircleBlock>,
    pub general_helix: Option<HelixBlock>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CircleBlock {
    pub r_constant: f64,
    pub radius: f64,
    pub kappa_deviation: f64,
    pub second_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HelixBlock {
    pub ratio: f64,
    pub deviation: f64,
}

impl FrenetBlock {
    pub fn from_data(frenet: &FrenetData, special: &SpecialClassification) -> FrenetBlock {
        let win = frenet.window;
        let (kappa_range, tau_range) = if frenet.frame_len >= 2 {
            let ks: Vec<f64> = win.iter().map(|k| frenet.kappa(k)).collect();
            let kr = [
                ks.iter().cloned().fold(f64::INFINITY, f64::min),
                ks.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            ];
            let tr = if frenet.frame_len >= 3 {
                let ts: Vec<f64> = win.iter().map(|k| frenet.tau(k)).collect();
                Some([
                    ts.iter().cloned().fold(f64::INFINITY, f64::min),
                    ts.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                ])
            } else {
                None
            };
            (Some(kr), tr)
        } else {
            (None, None)
        };
        FrenetBlock {
            order: frenet.order,
            frame_len: frenet.frame_len,
            completed: frenet.completed,
            n_samples: frenet.grid.len(),
            window: [win.lo, win.hi],
            arc_span: [frenet.grid[win.lo], frenet.grid[win.hi]],
            orthonormality_defect: frenet.orthonormality_defect,
            frenet_residual_max: frenet
                .frenet_residuals
                .iter()
                .cloned()
                .fold(0.0, f64::max),
            max_kappa1: frenet.max_kappa1,
            kappa_range,
            tau_range,
            geodesic: special.geodesic,
            circle: special.circle.as_ref().map(|c| CircleBlock {
                r_constant: c.r_constant,
                radius: c.radius,
                kappa_deviation: c.kappa_deviation,
                second_residual: c.second_residual,
            }),
            general_helix: special.general_helix.as_ref().map(|h| HelixBlock {
                ratio: h.ratio,
                deviation: h.deviation,
            }),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldBlock {
    pub label: FieldClass,
    pub proper: bool,
    pub passing_identities: Vec<FieldClass>,
    pub max_fit_residual: f64,
    pub anti_torqued_defect: f64,
    pub orthogonality_defect: f64,
    pub rho_range: [f64; 2],
    pub omega_norm_range: [f64; 2],
    pub n_sample_points: usize,
    pub tol: f64,
}

impl FieldBlock {
    pub fn from_report(rep: &TorseFormingReport) -> FieldBlock {
        FieldBlock {
            label: rep.label,
            proper: rep.proper,
            passing_identities: rep.passing.clone(),
            max_fit_residual: rep.max_residual,
            anti_torqued_defect: rep.anti_defect,
            orthogonality_defect: rep.orthogonality_defect,
            rho_range: [
                rep.rho.iter().cloned().fold(f64::INFINITY, f64::min),
                rep.rho.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            ],
            omega_norm_range: [
                rep.omega_norm.iter().cloned().fold(f64::INFINITY, f64::min),
                rep.omega_norm
                    .iter()
                    .cloned()
                    .fold(f64::NEG_INFINITY, f64::max),
            ],
            n_sample_points: rep.rho.len(),
            tol: rep.tol,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SlantBlock {
    pub case: SlantCase,
    pub angle_mode: AngleMode,
    pub cos_theta: f64,
    pub theta_hat: f64,
    pub constancy_residual: f64,
    pub is_slant_helix: bool,
    pub axis_class: FieldClass,
    pub axis_warning: Option<String>,
    pub unit_decomposition_defect: f64,
    pub rho_plus_kappa: Option<f64>,
    pub system: Option<AntiSystemResiduals>,
    pub ratio_law: Option<RatioLaw>,
}

impl SlantBlock {
    pub fn from_report(rep: &SlantReport, ratio_law: Option<RatioLaw>) -> SlantBlock {
        SlantBlock {
            case: rep.case,
            angle_mode: rep.angle_mode,
            cos_theta: rep.cos_theta,
            theta_hat: rep.theta_hat,
            constancy_residual: rep.constancy_residual,
            is_slant_helix: rep.is_slant_helix,
            axis_class: rep.axis_class,
            axis_warning: rep.axis_warning.clone(),
            unit_decomposition_defect: rep.unit_decomposition_defect,
            rho_plus_kappa: rep.rho_plus_kappa,
            system: rep.system.clone(),
            ratio_law,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TorquedBlock {
    pub case: TorquedCase,
    pub theta_hat: f64,
    pub constancy_residual: f64,
    pub is_torqued_curve: bool,
    pub axis_class: FieldClass,
    pub axis_warning: Option<String>,
    pub orthogonality_residual: f64,
    pub decomposition_defect: f64,
    pub case_b: Option<CaseBChecks>,
    pub system: Option<TorquedSystemResiduals>,
    pub concircular_ode_residual: Option<f64>,
}

impl TorquedBlock {
    pub fn from_report(rep: &TorquedReport, ode_residual: Option<f64>) -> TorquedBlock {
        TorquedBlock {
            case: rep.case,
            theta_hat: rep.theta_hat,
            constancy_residual: rep.constancy_residual,
            is_torqued_curve: rep.is_torqued_curve,
            axis_class: rep.axis_class,
            axis_warning: rep.axis_warning.clone(),
            orthogonality_residual: rep.orthogonality_residual,
            decomposition_defect: rep.decomposition_defect,
            case_b: rep.case_b.clone(),
            system: rep.system.clone(),
            concircular_ode_residual: ode_residual,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchBlock {
    pub branch: EuclideanBranch,
    pub passing: Vec<EuclideanBranch>,
    pub cos_theta: f64,
    pub theta_hat: f64,
    pub constancy_residual: f64,
    pub kappa_residual: Option<f64>,
    pub tau_residual: Option<f64>,
    pub tau_residual_form: TauResidualForm,
    pub line_fit: Option<LineFit>,
    pub gamma_n_max: f64,
    pub max_abs_tau: f64,
}

impl BranchBlock {
    pub fn from_report(rep: &EuclideanSlantReport) -> BranchBlock {
        BranchBlock {
            branch: rep.branch,
            passing: rep.passing.clone(),
            cos_theta: rep.cos_theta,
            theta_hat: rep.theta_hat,
            constancy_residual: rep.constancy_residual,
            kappa_residual: rep.kappa_residual,
            tau_residual: rep.tau_residual,
            tau_residual_form: rep.tau_residual_form,
            line_fit: rep.line_fit.clone(),
            gamma_n_max: rep.gamma_n_max,
            max_abs_tau: rep.max_abs_tau,
        }
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}

/// Frenet data as CSV: s, coordinates, frame vectors, curvatures.
pub fn frenet_csv(frenet: &FrenetData) -> String {
    let m = frenet.metric().dim();
    let mut header = vec!["s".to_string()];
    for i in 1..=m {
        header.push(format!("x{i}"));
    }
    for i in 1..=frenet.frame_len {
        for j in 1..=m {
            header.push(format!("N{i}_{j}"));
        }
    }
    for i in 1..frenet.frame_len.max(1) {
        header.push(format!("k{i}"));
    }
    let mut out = header.join(",");
    out.push('\n');
    for k in frenet.window.iter() {
        let mut row = vec![fmt(frenet.grid[k])];
        for j in 0..m {
            row.push(fmt(frenet.points[k][j]));
        }
        for i in 0..frenet.frame_len {
            for j in 0..m {
                row.push(fmt(frenet.frames[k][i][j]));
            }
        }
        for i in 0..frenet.frame_len.saturating_sub(1) {
            row.push(fmt(frenet.curvatures[k][i]));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Plot data as CSV: s, coordinates, curvatures, and the angle function
/// when available.
pub fn plot_csv(frenet: &FrenetData, angle: Option<&[f64]>) -> String {
    let m = frenet.metric().dim();
    let mut header = vec!["s".to_string()];
    for i in 1..=m {
        header.push(format!("x{i}"));
    }
    for i in 1..frenet.frame_len.max(1) {
        header.push(format!("k{i}"));
    }
    if angle.is_some() {
        header.push("angle".to_string());
    }
    let mut out = header.join(",");
    out.push('\n');
    for k in frenet.window.iter() {
        let mut row = vec![fmt(frenet.grid[k])];
        for j in 0..m {
            row.push(fmt(frenet.points[k][j]));
        }
        for i in 0..frenet.frame_len.saturating_sub(1) {
            row.push(fmt(frenet.curvatures[k][i]));
        }
        if let Some(a) = angle {
            row.push(fmt(a[k]));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Curve samples as CSV with header `t,x1,...,xm`.
pub fn curve_csv(grid: &[f64], points: &[nalgebra::DVector<f64>]) -> String {
    let m = points[0].len();
    let mut header = vec!["t".to_string()];
    for i in 1..=m {
        header.push(format!("x{i}"));
    }
    let mut out = header.join(",");
    out.push('\n');
    for (t, p) in grid.iter().zip(points) {
        let mut row = vec![fmt(*t)];
        for j in 0..m {
            row.push(fmt(p[j]));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
