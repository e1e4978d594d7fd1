//! Command-line front end: curve analyses, field classification, slant and
//! torqued verification, curve synthesis, and the built-in example suite.
//!
//! Exit codes: 0 success, 1 verification failure (a gating residual above
//! its tolerance), 2 input or usage error.

pub mod report;
pub mod verify;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;

use crate::curvegeo::{
    detect_special, frenet_apparatus, reparametrize_arclength, CurveSamples, FrenetData,
};
use crate::error::{Error, Result};
use crate::fields::{classify_field, FieldClass, FieldSpec};
use crate::manifold::{sample_domain_points, ChartMetric};
use crate::ode::OdeOptions;
use crate::slant::{classify_euclidean_slant, ratio_law_check, slant_report};
use crate::synthesis::{
    builtin_curve, frenet_integrate, synthesize_concircular, synthesize_slant_from_phi,
    ConcircularConfig, FrameInit, ScalarFunction, SlantSynthesisConfig, BUILTIN_CURVES,
};
use crate::torqued::{concircular_ode_residual, torqued_report, TorquedCase};
use report::{
    curve_csv, plot_csv, BranchBlock, FieldBlock, FrenetBlock, InputBlock, Report, SlantBlock,
    TorquedBlock,
};

#[derive(Debug, Parser)]
#[command(
    name = "torsegeo",
    version,
    about = "Frenet data, torse-forming vector fields, slant helices and torqued curves on coordinate charts"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full curve analysis: Frenet data, special-curve flags, optional
    /// field classification and slant/torqued verification
    Analyze(CurveArgs),
    /// Classify a vector field over reproducible random domain points
    ClassifyField(ClassifyArgs),
    /// Verify the anti-torqued slant helix condition
    SlantCheck(CurveArgs),
    /// Verify the torqued-curve condition
    TorquedCheck(CurveArgs),
    /// Construct curves by ODE integration
    Synthesize(SynthesizeArgs),
    /// Run the built-in example verification suite
    VerifyExamples(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    /// Built-in curve name or path to a CSV file with header t,x1,...,xm
    #[arg(long)]
    pub curve: String,
    /// Parameters of the built-in curve (comma separated)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub curve_params: Vec<f64>,
    /// Metric for CSV curves (built-in curves carry their own chart)
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub metric_params: Vec<f64>,
    /// Vector field: axis for slant checks, axis field for torqued checks
    #[arg(long)]
    pub field: Option<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub field_params: Vec<f64>,
    /// Sample count along the curve
    #[arg(long, default_value_t = 1201)]
    pub samples: usize,
    /// Verification tolerance
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Rank tolerance of the Frenet order detection
    #[arg(long, default_value_t = crate::curvegeo::DEFAULT_RANK_TOL)]
    pub rank_tol: f64,
    /// Output path (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// json: full report; csv: plot data (s, coordinates, curvatures, angle)
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Built-in field name
    #[arg(long)]
    pub field: String,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub field_params: Vec<f64>,
    /// Metric chart the field lives on
    #[arg(long)]
    pub metric: String,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub metric_params: Vec<f64>,
    /// Chart dimension
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    /// Number of random sample points
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// RNG seed for the sample points
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    /// Frenet reconstruction from constant curvature and torsion
    Frenet,
    /// Slant helix from a distance function
    SlantPhi,
    /// Concircular curve from the coefficient laws
    Concircular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PhiKind {
    /// phi(s) = a + b s with params a,b
    Affine,
    /// phi(s) = sqrt(a + b s + c s^2) with params a,b,c
    SqrtQuadratic,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    #[arg(long, value_enum)]
    pub kind: SynthKind,
    /// Arc-length range s0,s1
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub range: Vec<f64>,
    #[arg(long, default_value_t = 801)]
    pub samples: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Slant angle (radians) or torqued constant theta
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    #[arg(long, value_enum)]
    pub phi_kind: Option<PhiKind>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub phi_params: Vec<f64>,
    /// Initial torsion (slant synthesis); compatible value when omitted
    #[arg(long, allow_hyphen_values = true)]
    pub tau0: Option<f64>,
    /// Concircular factor rho
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<f64>,
    /// Binormal coefficient f3(s) = a + b s (concircular synthesis)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub f3_params: Vec<f64>,
    /// Initial tangential coefficient f1(s0)
    #[arg(long, allow_hyphen_values = true)]
    pub f1: Option<f64>,
    /// Constant curvature (frenet synthesis)
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<f64>,
    /// Constant torsion (frenet synthesis)
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<f64>,
    /// Curve CSV output path (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional JSON summary path
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs the CLI, returning the process exit code.
pub fn run(cli: Cli) -> i32 {
    let outcome = match cli.command {
        Command::Analyze(args) => run_curve(args, Mode::Analyze),
        Command::SlantCheck(args) => run_curve(args, Mode::SlantCheck),
        Command::TorquedCheck(args) => run_curve(args, Mode::TorquedCheck),
        Command::ClassifyField(args) => run_classify(args),
        Command::Synthesize(args) => run_synthesize(args),
        Command::VerifyExamples(args) => run_verify(args),
    };
    match outcome {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Analyze,
    SlantCheck,
    TorquedCheck,
}

fn parse_curve_csv(path: &Path, metric: Arc<ChartMetric>) -> Result<CurveSamples> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| {
        Error::InvalidInput(format!("cannot read curve CSV {}: {e}", path.display()))
    })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::InvalidInput(format!("bad CSV header: {e}")))?
        .clone();
    if headers.len() < 2 || headers.get(0) != Some("t") {
        return Err(Error::InvalidInput(
            "curve CSV needs header t,x1,...,xm".into(),
        ));
    }
    let m = headers.len() - 1;
    if m != metric.dim() {
        return Err(Error::DimensionMismatch {
            expected: metric.dim(),
            got: m,
        });
    }
    let mut grid = Vec::new();
    let mut points = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::InvalidInput(format!("CSV row {i}: {e}")))?;
        let mut vals = Vec::with_capacity(m + 1);
        for field in rec.iter() {
            vals.push(field.trim().parse::<f64>().map_err(|e| {
                Error::InvalidInput(format!("CSV row {i}: bad number `{field}`: {e}"))
            })?);
        }
        if vals.len() != m + 1 {
            return Err(Error::InvalidInput(format!(
                "CSV row {i}: expected {} columns, got {}",
                m + 1,
                vals.len()
            )));
        }
        grid.push(vals[0]);
        points.push(DVector::from_column_slice(&vals[1..]));
    }
    CurveSamples::from_points(metric, grid, points, false)
}

fn load_curve(args: &CurveArgs) -> Result<CurveSamples> {
    let path = Path::new(&args.curve);
    let is_csv = args.curve.ends_with(".csv") || path.is_file();
    if is_csv {
        if !path.is_file() {
            return Err(Error::InvalidInput(format!(
                "curve file not found: {}",
                args.curve
            )));
        }
        let name = args.metric.as_deref().unwrap_or("euclidean");
        // Dimension comes from the CSV header; build the metric lazily.
        let mut reader = csv::Reader::from_path(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", args.curve)))?;
        let dim = reader
            .headers()
            .map_err(|e| Error::InvalidInput(format!("bad CSV header: {e}")))?
            .len()
            .saturating_sub(1);
        let metric = Arc::new(ChartMetric::builtin(name, dim, &args.metric_params)?);
        let raw = parse_curve_csv(path, metric)?;
        reparametrize_arclength(&raw, args.samples)
    } else {
        if !BUILTIN_CURVES.contains(&args.curve.as_str()) {
            return Err(Error::UnknownBuiltin(format!(
                "{} (expected one of {:?} or a CSV path)",
                args.curve, BUILTIN_CURVES
            )));
        }
        if args.metric.is_some() {
            return Err(Error::InvalidInput(
                "built-in curves carry their own chart; omit --metric".into(),
            ));
        }
        builtin_curve(&args.curve, &args.curve_params, args.samples)
    }
}

fn input_block(command: &str, args: &CurveArgs) -> InputBlock {
    InputBlock {
        command: command.into(),
        curve: Some(args.curve.clone()),
        curve_params: args.curve_params.clone(),
        metric: args.metric.clone(),
        metric_params: args.metric_params.clone(),
        field: args.field.clone(),
        field_params: args.field_params.clone(),
        samples: args.samples,
        tol: args.tol,
    }
}

fn write_output(path: &Option<PathBuf>, contents: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, contents)?,
        None => print!("{contents}"),
    }
    Ok(())
}

fn run_curve(args: CurveArgs, mode: Mode) -> Result<bool> {
    let command = match mode {
        Mode::Analyze => "analyze",
        Mode::SlantCheck => "slant-check",
        Mode::TorquedCheck => "torqued-check",
    };
    let mut args = args;
    // The slant check defaults to the radial axis on flat charts.
    if mode == Mode::SlantCheck && args.field.is_none() {
        args.field = Some("radial_unit".into());
    }
    if mode == Mode::TorquedCheck && args.field.is_none() {
        return Err(Error::InvalidInput(
            "torqued-check needs --field (the torqued or concircular axis)".into(),
        ));
    }
    let mut report = Report::new(input_block(command, &args));

    let curve = load_curve(&args)?;
    let frenet = frenet_apparatus(&curve, args.rank_tol)?;
    let special = detect_special(&frenet, args.tol)?;
    report.frenet = Some(FrenetBlock::from_data(&frenet, &special));

    let analytic = curve.analytic_order() >= 1;
    let orth_tol = if analytic { 1e-8 } else { 1e-6 };
    let residual_tol = if analytic { 1e-5 } else { 1e-3 };
    report.push_residual(
        "frenet.orthonormality",
        frenet.orthonormality_defect,
        orth_tol,
        true,
    );
    if frenet.order >= 2 {
        let worst = frenet
            .frenet_residuals
            .iter()
            .cloned()
            .fold(0.0f64, f64::max);
        report.push_residual("frenet.equations", worst, residual_tol, true);
    }

    let field = match &args.field {
        Some(name) => Some(FieldSpec::builtin(
            name,
            curve.metric().clone(),
            &args.field_params,
        )?),
        None => None,
    };

    let mut angle_series: Option<Vec<f64>> = None;
    if let Some(field) = &field {
        let sample_points: Vec<_> = frenet
            .window
            .iter()
            .step_by((frenet.window.len() / 100).max(1))
            .map(|k| frenet.points[k].clone())
            .collect();
        let class = classify_field(field, &sample_points, args.tol)?;
        report.field_classification = Some(FieldBlock::from_report(&class));
        report.push_residual(
            "field.fit_residual",
            class.max_residual,
            args.tol,
            mode != Mode::Analyze,
        );

        let srep = slant_report(&curve, &frenet, field, args.tol)?;
        if let Some(w) = &srep.axis_warning {
            report.diagnostics.push(w.clone());
        }
        let ratio = if srep.cos_theta.abs() < args.tol && frenet.order == 3 {
            ratio_law_check(&frenet, &srep, args.tol).ok()
        } else {
            None
        };
        let gate_slant = mode == Mode::SlantCheck;
        report.push_residual(
            "slant.constancy",
            srep.constancy_residual,
            args.tol,
            gate_slant,
        );
        if let Some(sys) = &srep.system {
            for line in &sys.lines {
                report.push_residual(
                    &format!("slant.system.{}", line.label),
                    line.residual,
                    args.tol * 10.0,
                    gate_slant,
                );
            }
        }
        if let Some(r) = srep.rho_plus_kappa {
            report.push_residual("slant.case2.rho_plus_kappa", r, args.tol, gate_slant);
        }
        angle_series = Some(srep.angle_samples.clone());
        report.slant = Some(SlantBlock::from_report(&srep, ratio));

        // Torqued verification applies to torqued/concircular fields.
        if matches!(
            class.label,
            FieldClass::Torqued | FieldClass::Concircular
        ) || mode == Mode::TorquedCheck
        {
            let trep = torqued_report(&curve, &frenet, field, args.tol)?;
            if let Some(w) = &trep.axis_warning {
                report.diagnostics.push(w.clone());
            }
            let gate_torq = mode == Mode::TorquedCheck;
            report.push_residual(
                "torqued.constancy",
                trep.constancy_residual,
                args.tol,
                gate_torq,
            );
            if let Some(sys) = &trep.system {
                for line in &sys.lines {
                    report.push_residual(
                        &format!("torqued.system.{}", line.label),
                        line.residual,
                        args.tol * 10.0,
                        gate_torq,
                    );
                }
            }
            if let Some(cb) = &trep.case_b {
                report.push_residual(
                    "torqued.case_b.kappa_f2_plus_rho",
                    cb.kappa_f2_plus_rho,
                    args.tol,
                    gate_torq,
                );
            }
            let ode = if trep.case == TorquedCase::General && frenet.order == 3 {
                concircular_ode_residual(&frenet, &trep.rho, trep.theta_hat).ok()
            } else {
                None
            };
            report.torqued = Some(TorquedBlock::from_report(&trep, ode));
        }
    } else if mode != Mode::Analyze {
        return Err(Error::InvalidInput("this check needs --field".into()));
    }

    // Euclidean radial classification on flat 3-charts.
    let metric = curve.metric();
    if metric.dim() == 3
        && (metric.name() == "euclidean" || metric.name() == "punctured_euclidean")
        && frenet.order >= 2
    {
        let branch = classify_euclidean_slant(&curve, &frenet, args.tol)?;
        if let Some(r) = branch.kappa_residual {
            report.push_residual("branch.distance_curvature_law", r, 1e-4, false);
        }
        if let Some(r) = branch.tau_residual {
            report.push_residual("branch.torsion_law", r, 1e-4, false);
        }
        report.classification_branch = Some(BranchBlock::from_report(&branch));
    }

    match args.format {
        OutputFormat::Json => write_output(&args.out, &report.to_json())?,
        OutputFormat::Csv => {
            write_output(&args.out, &plot_csv(&frenet, angle_series.as_deref()))?
        }
    }
    Ok(report.verified())
}

fn run_classify(args: ClassifyArgs) -> Result<bool> {
    let metric = Arc::new(ChartMetric::builtin(
        &args.metric,
        args.dim,
        &args.metric_params,
    )?);
    let field = FieldSpec::builtin(&args.field, metric.clone(), &args.field_params)?;
    let points = sample_domain_points(&metric, args.samples, args.seed)?;
    let class = classify_field(&field, &points, args.tol)?;

    let mut report = Report::new(InputBlock {
        command: "classify-field".into(),
        curve: None,
        curve_params: vec![],
        metric: Some(args.metric.clone()),
        metric_params: args.metric_params.clone(),
        field: Some(args.field.clone()),
        field_params: args.field_params.clone(),
        samples: args.samples,
        tol: args.tol,
    });
    report.push_residual("field.fit_residual", class.max_residual, args.tol, false);
    report.push_residual("field.anti_torqued_defect", class.anti_defect, args.tol, false);
    report.push_residual(
        "field.orthogonality_defect",
        class.orthogonality_defect,
        args.tol,
        false,
    );
    report.field_classification = Some(FieldBlock::from_report(&class));
    write_output(&args.out, &report.to_json())?;
    Ok(true)
}

fn run_synthesize(args: SynthesizeArgs) -> Result<bool> {
    if args.range.len() != 2 || !(args.range[1] > args.range[0]) {
        return Err(Error::InvalidInput(
            "--range needs s0,s1 with s0 < s1".into(),
        ));
    }
    let s_range = (args.range[0], args.range[1]);
    let n = args.samples;
    let theta = args.theta;

    let (curve, summary, verified): (CurveSamples, serde_json::Value, bool) = match args.kind {
        SynthKind::Frenet => {
            let kappa = args.kappa.ok_or_else(|| {
                Error::InvalidInput("frenet synthesis needs --kappa".into())
            })?;
            let tau = args.tau.unwrap_or(0.0);
            let init = FrameInit::canonical(DVector::from_column_slice(&[0.0, 0.0, 0.0]));
            let out = frenet_integrate(
                Arc::new(move |_| kappa),
                Arc::new(move |_| tau),
                &init,
                s_range,
                n,
                &OdeOptions::default(),
            )?;
            let summary = serde_json::json!({
                "kind": "frenet",
                "kappa": kappa,
                "tau": tau,
                "samples": n,
            });
            (out.curve, summary, true)
        }
        SynthKind::SlantPhi => {
            let theta = theta
                .ok_or_else(|| Error::InvalidInput("slant synthesis needs --theta".into()))?;
            let phi = build_phi(&args)?;
            let cfg = SlantSynthesisConfig {
                theta,
                phi,
                tau0: args.tau0,
                s_range,
                n_out: n,
                ode: OdeOptions::default(),
            };
            let out = synthesize_slant_from_phi(&cfg)?;
            let ok = out.post_cos_deviation < args.tol;
            let summary = serde_json::json!({
                "kind": "slant-phi",
                "theta": theta,
                "tau0": out.tau0,
                "tau0_compatible": out.tau0_compatible,
                "g0": out.g0,
                "post_cos_deviation": out.post_cos_deviation,
                "tolerance": args.tol,
                "verified": ok,
            });
            (out.curve, summary, ok)
        }
        SynthKind::Concircular => {
            let theta = theta.ok_or_else(|| {
                Error::InvalidInput("concircular synthesis needs --theta".into())
            })?;
            let rho = args
                .rho
                .ok_or_else(|| Error::InvalidInput("concircular synthesis needs --rho".into()))?;
            if args.f3_params.len() != 2 {
                return Err(Error::InvalidInput(
                    "--f3-params needs a,b for f3(s) = a + b s".into(),
                ));
            }
            let f1_0 = args
                .f1
                .ok_or_else(|| Error::InvalidInput("concircular synthesis needs --f1".into()))?;
            let cfg = ConcircularConfig {
                theta,
                rho,
                f3: ScalarFunction::affine(args.f3_params[0], args.f3_params[1]),
                f1_0,
                s_range,
                n_out: n,
                ode: OdeOptions::default(),
            };
            let out = synthesize_concircular(&cfg)?;
            let ok = out.post_theta_deviation < args.tol;
            let summary = serde_json::json!({
                "kind": "concircular",
                "theta": theta,
                "rho": rho,
                "degenerate_torsion_free": out.degenerate_torsion_free,
                "post_theta_deviation": out.post_theta_deviation,
                "tolerance": args.tol,
                "verified": ok,
            });
            (out.curve, summary, ok)
        }
    };

    write_output(&args.out, &curve_csv(curve.grid(), curve.points()))?;
    if let Some(path) = &args.report {
        let mut text = serde_json::to_string_pretty(&summary).expect("summary serialization");
        text.push('\n');
        std::fs::write(path, text)?;
    }
    Ok(verified)
}

fn build_phi(args: &SynthesizeArgs) -> Result<ScalarFunction> {
    let kind = args
        .phi_kind
        .ok_or_else(|| Error::InvalidInput("slant synthesis needs --phi-kind".into()))?;
    match kind {
        PhiKind::Affine => {
            if args.phi_params.len() != 2 {
                return Err(Error::InvalidInput(
                    "--phi-params needs a,b for phi = a + b s".into(),
                ));
            }
            Ok(ScalarFunction::affine(args.phi_params[0], args.phi_params[1]))
        }
        PhiKind::SqrtQuadratic => {
            if args.phi_params.len() != 3 {
                return Err(Error::InvalidInput(
                    "--phi-params needs a,b,c for phi = sqrt(a + b s + c s^2)".into(),
                ));
            }
            Ok(ScalarFunction::sqrt_quadratic(
                args.phi_params[0],
                args.phi_params[1],
                args.phi_params[2],
            ))
        }
    }
}

fn run_verify(args: VerifyArgs) -> Result<bool> {
    let checks = verify::paper_example_checks()?;
    let mut all_pass = true;
    for c in &checks {
        let status = if c.pass { "ok  " } else { "FAIL" };
        all_pass &= c.pass;
        match &c.note {
            Some(note) => println!(
                "{status} {} (value = {:.3e}, tol = {:.1e}) — {note}",
                c.name, c.value, c.tolerance
            ),
            None => println!(
                "{status} {} (value = {:.3e}, tol = {:.1e})",
                c.name, c.value, c.tolerance
            ),
        }
    }
    println!(
        "{} checks, {} failed",
        checks.len(),
        checks.iter().filter(|c| !c.pass).count()
    );
    if let Some(path) = &args.out {
        let mut text = serde_json::to_string_pretty(&checks).expect("checks serialization");
        text.push('\n');
        std::fs::write(path, text)?;
    }
    Ok(all_pass)
}

/// Helper used by FrenetData consumers that need the full FrenetData and
/// curve pair from CLI-style arguments (shared with integration tests).
pub fn analyze_curve(args: &CurveArgs) -> Result<(CurveSamples, FrenetData)> {
    let curve = load_curve(args)?;
    let frenet = frenet_apparatus(&curve, args.rank_tol)?;
    Ok((curve, frenet))
}
