//! Subcommand drivers. Each returns the lines to print and an exit code; file output goes
//! under `RunConfig::out`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use glancing::grazing::{
    gs_assumption_report, shadow_boundary_flowout, trace_grazing_curve, GrazingCurve, GrazingFunction, GsOptions,
    GsVerdict, TraceOptions,
};
use glancing::phases::{xi_incoming, IncomingPhase};
use glancing::reflection::{
    classify_boundary_point, jacobian_analytic, jacobian_fd, reflect_direction, verify_rfm, BoundaryLabel,
    RfmOptions, JACOBIAN_FD_STEP,
};
use glancing::{Error, Obstacle};
use nalgebra::DVector;

use crate::output::{curve_csv, curve_svg, flowout_csv, rfm_csv};
use crate::spec::{load_obstacle, load_phase};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_FAIL: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Svg,
    Both,
}

impl Format {
    fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    fn svg(self) -> bool {
        matches!(self, Format::Svg | Format::Both)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub obstacle: PathBuf,
    pub phase: PathBuf,
    pub out: PathBuf,
    pub s0: f64,
    pub budget: usize,
    pub window: f64,
    pub tol: f64,
    pub seed: u64,
    pub format: Format,
    /// Boundary point for `reflect`.
    pub point: Option<Vec<f64>>,
    /// Flowout sheet length for `render`.
    pub flowout: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            obstacle: PathBuf::new(),
            phase: PathBuf::new(),
            out: PathBuf::from("."),
            s0: 1.0,
            budget: 10_000,
            window: 0.3,
            tol: 1e-10,
            seed: 42,
            format: Format::Csv,
            point: None,
            flowout: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(format!("--tol must be positive, got {}", self.tol));
        }
        if !(self.window >= 0.0 && self.window.is_finite()) {
            return Err(format!("--window must be nonnegative, got {}", self.window));
        }
        if !(self.s0 > 0.0 && self.s0.is_finite()) {
            return Err(format!("--s0 must be positive, got {}", self.s0));
        }
        if let Some(s) = self.flowout {
            if !(s > 0.0 && s.is_finite()) {
                return Err(format!("--flowout must be positive, got {s}"));
            }
        }
        Ok(())
    }
}

/// What a subcommand printed and how it exits.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub lines: Vec<String>,
}

/// A failure that ends the run before a verdict: a message and its exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Unsupported(_)
            | Error::DimensionMismatch { .. }
            | Error::InvalidBudget
            | Error::InvalidPhase(_)
            | Error::InvalidSurface(_)
            | Error::StepInvalid(_) => EXIT_USAGE,
            _ => EXIT_FAIL,
        };
        Failure { code, message: e.to_string() }
    }
}

type Run = Result<Outcome, Failure>;

fn load(cfg: &RunConfig) -> Result<(Obstacle, IncomingPhase), Failure> {
    cfg.validate().map_err(Failure::usage)?;
    let obstacle = load_obstacle(&cfg.obstacle).map_err(|e| Failure::usage(e.to_string()))?;
    let phase = load_phase(&cfg.phase, obstacle.dim() + 1).map_err(|e| Failure::usage(e.to_string()))?;
    Ok((obstacle, phase))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::usage(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn join(v: &DVector<f64>) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// Grazing-set analysis; writes `report.txt`.
pub fn run_classify(cfg: &RunConfig) -> Run {
    let (obstacle, phase) = load(cfg)?;
    let opts = GsOptions {
        window: cfg.window,
        trace: TraceOptions { trace_tol: cfg.tol, ..TraceOptions::default() },
        ..GsOptions::default()
    };
    let report = gs_assumption_report(&obstacle, &phase, &opts);
    let lines: Vec<String> = report.key_values().into_iter().map(|(k, v)| format!("{k} = {v}")).collect();
    let mut text = lines.join("\n");
    text.push('\n');
    write(&cfg.out, "report.txt", &text)?;
    let code = if report.verdict == GsVerdict::Inconclusive { EXIT_INCONCLUSIVE } else { EXIT_PASS };
    Ok(Outcome { code, lines })
}

fn trace(cfg: &RunConfig, obstacle: &Obstacle, phase: &IncomingPhase) -> Result<GrazingCurve, Failure> {
    let gf = GrazingFunction::preferred(obstacle, phase)?;
    let opts = TraceOptions { trace_tol: cfg.tol, ..TraceOptions::default() };
    Ok(trace_grazing_curve(&gf, obstacle, cfg.window, &opts)?)
}

fn summary(curve: &GrazingCurve) -> Vec<String> {
    let mut lines = vec![format!("branches = {}", curve.branches.len()), format!("vertices = {}", curve.vertex_count())];
    if !curve.is_empty() {
        lines.push(format!("max_residual = {:e}", curve.max_residual()));
    }
    lines
}

fn title(cfg: &RunConfig) -> String {
    cfg.obstacle.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Traces the grazing curve; writes `curve.csv` and/or `curve.svg` according to `--format`.
pub fn run_trace(cfg: &RunConfig) -> Run {
    let (obstacle, phase) = load(cfg)?;
    let curve = trace(cfg, &obstacle, &phase)?;
    let mut lines = summary(&curve);
    if cfg.format.csv() {
        let p = write(&cfg.out, "curve.csv", &curve_csv(&curve))?;
        lines.push(format!("wrote = {}", p.display()));
    }
    if cfg.format.svg() {
        let p = write(&cfg.out, "curve.svg", &curve_svg(&curve, &[], &title(cfg)))?;
        lines.push(format!("wrote = {}", p.display()));
    }
    Ok(Outcome { code: EXIT_PASS, lines })
}

/// Traces and renders `curve.svg`; with `--flowout S` also the incoming rays through the curve
/// for `s ∈ [0, S]`, drawn under the curve and written to `flowout.csv`.
pub fn run_render(cfg: &RunConfig) -> Run {
    let (obstacle, phase) = load(cfg)?;
    let curve = trace(cfg, &obstacle, &phase)?;
    let mut lines = summary(&curve);
    let sheet = match cfg.flowout {
        Some(s) => {
            let rays = shadow_boundary_flowout(&obstacle, &phase, &curve, (0.0, s), 16)?;
            let p = write(&cfg.out, "flowout.csv", &flowout_csv(&rays, obstacle.dim() + 1))?;
            lines.push(format!("wrote = {}", p.display()));
            rays
        }
        None => vec![],
    };
    let p = write(&cfg.out, "curve.svg", &curve_svg(&curve, &sheet, &title(cfg)))?;
    lines.push(format!("wrote = {}", p.display()));
    Ok(Outcome { code: EXIT_PASS, lines })
}

/// Samples the reflected flow map over `|x̄| ≤ window`; writes `rfm.csv`.
pub fn run_rfm_check(cfg: &RunConfig) -> Run {
    let (obstacle, phase) = load(cfg)?;
    let opts = RfmOptions { seed: cfg.seed, ..RfmOptions::default() };
    let v = verify_rfm(&obstacle, &phase, cfg.s0, cfg.window, cfg.budget, &opts)?;
    let p = write(&cfg.out, "rfm.csv", &rfm_csv(&v, obstacle.dim()))?;
    let mut lines = vec![
        format!("samples = {}", v.samples.len()),
        format!("pairs_checked = {}", v.pairs_checked),
        format!("worst_bound_gap = {:e}", v.worst_bound_gap),
        format!("worst_fd_rel = {:e}", v.worst_fd_rel),
        format!("min_near_stretch = {:e}", v.min_near_stretch),
    ];
    for o in &v.offenders {
        lines.push(format!("offender = {o:?}"));
    }
    lines.push(format!("wrote = {}", p.display()));
    lines.push(if v.passes { "RFM PASS".into() } else { "RFM FAIL".into() });
    Ok(Outcome { code: if v.passes { EXIT_PASS } else { EXIT_FAIL }, lines })
}

/// Reflects the incoming ray at `--point`; writes `reflect.csv`. Exits 2 unless the point is
/// illuminated, since the Jacobian is only defined there.
pub fn run_reflect(cfg: &RunConfig) -> Run {
    let (obstacle, phase) = load(cfg)?;
    let point = cfg.point.as_ref().ok_or_else(|| Failure::usage("reflect needs --point"))?;
    if point.len() != obstacle.dim() {
        return Err(Failure::usage(format!(
            "--point needs {} coordinates, got {}",
            obstacle.dim(),
            point.len()
        )));
    }
    let x = DVector::from_column_slice(point);
    let c = classify_boundary_point(&obstacle, &phase, &x, cfg.tol)?;
    let xi = xi_incoming(&phase, &obstacle, &x)?;
    let xr = reflect_direction(&obstacle, &x, &xi)?;
    let label = match c.label {
        BoundaryLabel::Illuminated => "illuminated",
        BoundaryLabel::Grazing => "grazing",
        BoundaryLabel::Shadow => "shadow",
    };
    let mut lines = vec![
        format!("label = {label}"),
        format!("margin = {}", c.margin),
        format!("xi_i = {}", join(&xi.full())),
        format!("xi_r = {}", join(&xr.full())),
    ];
    let mut csv = String::from("s");
    for i in 0..x.len() {
        let _ = write!(csv, ",x{}", i + 2);
    }
    csv.push_str(",mu,label");
    for i in 0..=x.len() {
        let _ = write!(csv, ",xi_i{}", i + 1);
    }
    for i in 0..=x.len() {
        let _ = write!(csv, ",xi_r{}", i + 1);
    }
    csv.push_str(",j_analytic,j_fd,bound\n");
    let (mut ja, mut jf, mut bound) = (f64::NAN, f64::NAN, f64::NAN);
    if c.label == BoundaryLabel::Illuminated {
        let rep = jacobian_analytic(&obstacle, &phase, cfg.s0, &x)?;
        ja = rep.j_analytic;
        jf = jacobian_fd(&obstacle, &phase, cfg.s0, &x, 0.0, JACOBIAN_FD_STEP)?;
        bound = rep.lower_bound;
        lines.push(format!("j_analytic = {ja}"));
        lines.push(format!("j_fd = {jf}"));
        lines.push(format!("lower_bound = {bound}"));
    }
    let _ = write!(csv, "{}", cfg.s0);
    for v in x.iter() {
        let _ = write!(csv, ",{v}");
    }
    let _ = write!(csv, ",{},{label}", c.margin);
    for v in xi.full().iter().chain(xr.full().iter()) {
        let _ = write!(csv, ",{v}");
    }
    let _ = writeln!(csv, ",{ja},{jf},{bound}");
    let p = write(&cfg.out, "reflect.csv", &csv)?;
    lines.push(format!("wrote = {}", p.display()));
    let code = if c.label == BoundaryLabel::Illuminated { EXIT_PASS } else { EXIT_INCONCLUSIVE };
    Ok(Outcome { code, lines })
}
