//! Run configuration, the `run`/`verify`/`spectrum` commands and artifact
//! emission (CSV series, JSON snapshots, SVG frames).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::brkernels::{spectral_radius_probe, AmplitudeField, GeometryOperators, RadiusEstimate};
use crate::curves::{CurveSnapshot, FluidParams, PeriodicCurve};
use crate::diagnostics::{self, DiagnosticsRecord};
use crate::error::MuskatError;
use crate::evolution::{self, RunSetup, SimState, StepGuards};
use crate::flat_strip::{self, StripOperator};
use crate::spectral::{node, SpectralScalar};
use crate::vorticity::{self, DEFAULT_MAX_ITER, DEFAULT_TOL, DENSE_MAX_N};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] MuskatError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

impl CliError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// One Fourier term `cos·cos(kα) + sin·sin(kα)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeTerm {
    pub k: usize,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "lowercase", deny_unknown_fields)]
pub enum CurveSpec {
    Flat {
        height: f64,
    },
    /// `(α + p1(α), height + p2(α))` with trigonometric `p1`, `p2`.
    Modes {
        #[serde(default)]
        height: f64,
        #[serde(default)]
        p1: Vec<ModeTerm>,
        #[serde(default)]
        p2: Vec<ModeTerm>,
    },
}

impl CurveSpec {
    pub fn build(&self, n: usize) -> crate::Result<PeriodicCurve> {
        match self {
            CurveSpec::Flat { height } => PeriodicCurve::flat(n, *height),
            CurveSpec::Modes { height, p1, p2 } => {
                let terms = |v: &[ModeTerm]| -> crate::Result<Vec<(usize, f64, f64)>> {
                    v.iter()
                        .map(|m| {
                            if m.k > n / 2 {
                                Err(MuskatError::Config(format!("mode k = {} not resolved on N = {n}", m.k)))
                            } else {
                                Ok((m.k, m.cos, m.sin))
                            }
                        })
                        .collect()
                };
                let p1 = SpectralScalar::trig(n, &terms(p1)?)?;
                let p2 = SpectralScalar::trig(n, &terms(p2)?)?.map(|y| y + height);
                PeriodicCurve::new(p1, p2)
            }
        }
    }
}

fn default_k() -> u32 {
    3
}

fn default_stride() -> usize {
    10
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub t_end: f64,
    pub dt: f64,
    #[serde(default = "default_k")]
    pub k: u32,
    #[serde(default)]
    pub eps: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub g: f64,
    pub z: CurveSpec,
    pub h: CurveSpec,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    #[serde(default)]
    pub svg: bool,
    #[serde(default)]
    pub min_sigma: f64,
    #[serde(default)]
    pub max_arc_chord: Option<f64>,
    #[serde(default)]
    pub min_separation: Option<f64>,
}

/// `γ₁`, `γ₂` and `N` derived from the physical parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Derived {
    pub gamma1: f64,
    pub gamma2: f64,
    pub big_n: f64,
}

impl RunConfig {
    pub fn params(&self) -> FluidParams {
        FluidParams {
            mu1: self.mu1,
            mu2: self.mu2,
            kappa1: self.kappa1,
            kappa2: self.kappa2,
            rho1: self.rho1,
            rho2: self.rho2,
            g: self.g,
        }
    }

    pub fn derived(&self) -> Derived {
        let p = self.params();
        Derived {
            gamma1: p.gamma1(),
            gamma2: p.gamma2(),
            big_n: p.big_n(),
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        crate::spectral::check_grid(self.n)?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(MuskatError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(MuskatError::Config(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        if self.snapshot_stride == 0 {
            return Err(MuskatError::Config("snapshot_stride must be at least 1".into()));
        }
        self.params().validate()?;
        self.setup()?.validate()
    }

    pub fn setup(&self) -> crate::Result<RunSetup> {
        Ok(RunSetup {
            z0: self.z.build(self.n)?,
            h: self.h.build(self.n)?,
            params: self.params(),
            t_end: self.t_end,
            dt: self.dt,
            k: self.k,
            eps: self.eps,
            min_sigma: self.min_sigma,
            guards: StepGuards {
                max_arc_chord: self.max_arc_chord,
                min_separation: self.min_separation,
            },
        })
    }
}

pub fn parse_config_str(text: &str) -> CliResult<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> CliResult<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config_str(&text)
}

/// Contents of `snapshot_XXXX.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub step: usize,
    pub t: f64,
    pub z: CurveSnapshot,
    pub h: CurveSnapshot,
}

/// Summary of a finished `run`.
#[derive(Clone, Debug, Serialize)]
pub struct RunStatus {
    pub exit: &'static str,
    pub steps: usize,
    pub t: f64,
    pub dt: f64,
    pub derived: Derived,
    pub message: Option<String>,
}

/// Fixed viewport for every frame of a run.
#[derive(Clone, Copy, Debug)]
struct Viewport {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
}

impl Viewport {
    fn around(curves: &[&PeriodicCurve]) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for c in curves {
            for p in c.points() {
                lo = lo.min(p.im);
                hi = hi.max(p.im);
            }
        }
        let pad = 0.25 * (hi - lo).max(1.0);
        Viewport {
            x0: -std::f64::consts::PI - 0.2,
            y0: lo - pad,
            w: 2.0 * std::f64::consts::PI + 0.4,
            h: hi - lo + 2.0 * pad,
        }
    }
}

fn closed_points(c: &PeriodicCurve) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = c.points().iter().map(|p| (p.re, p.im)).collect();
    let first = pts[0];
    pts.push((first.0 + 2.0 * std::f64::consts::PI, first.1));
    pts
}

fn render_svg(state: &SimState, sigma: &SpectralScalar, view: &Viewport) -> String {
    let (px_w, px_h) = (800.0, 400.0);
    let sx = px_w / view.w;
    let sy = px_h / view.h;
    let map = |(x, y): (f64, f64)| ((x - view.x0) * sx, px_h - (y - view.y0) * sy);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{px_w}" height="{px_h}" viewBox="0 0 {px_w} {px_h}">"#
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    let hpts: Vec<String> = closed_points(&state.h)
        .into_iter()
        .map(|p| {
            let (a, b) = map(p);
            format!("{a:.2},{b:.2}")
        })
        .collect();
    let _ = writeln!(
        out,
        r##"<polyline points="{}" fill="none" stroke="#777777" stroke-width="1.5"/>"##,
        hpts.join(" ")
    );
    let zpts = closed_points(&state.z);
    let s = sigma.samples();
    for i in 0..zpts.len() - 1 {
        let (a, b) = map(zpts[i]);
        let (c, d) = map(zpts[i + 1]);
        let colour = if s[i] > 0.0 { "#1f5fbf" } else { "#c0392b" };
        let _ = writeln!(
            out,
            r#"<line x1="{a:.2}" y1="{b:.2}" x2="{c:.2}" y2="{d:.2}" stroke="{colour}" stroke-width="2"/>"#
        );
    }
    let _ = writeln!(out, r#"<text x="8" y="18" font-size="14">t = {:.6}</text>"#, state.t);
    out.push_str("</svg>\n");
    out
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Execute a run and write `series.csv`, snapshots and optional frames to `out`.
pub fn cmd_run(cfg: &RunConfig, out: &Path) -> CliResult<(RunStatus, Vec<DiagnosticsRecord>)> {
    cfg.validate()?;
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let setup = cfg.setup()?;
    let view = Viewport::around(&[&setup.z0, &setup.h]);
    let stride = cfg.snapshot_stride;
    let mut io_error: Option<CliError> = None;
    let mut last_written = None;
    let outcome = evolution::run_with(&setup, |step, state, rec| {
        if io_error.is_some() || !rec.step_accepted || step % stride != 0 {
            return;
        }
        if let Err(e) = emit_step(cfg, out, step, state, &view) {
            io_error = Some(e);
        }
        last_written = Some(step);
    })?;
    if let Some(e) = io_error {
        return Err(e);
    }
    let accepted = outcome.records.iter().filter(|r| r.step_accepted).count();
    let steps = accepted.saturating_sub(1);
    if last_written != Some(steps) {
        emit_step(cfg, out, steps, &outcome.final_state, &view)?;
    }
    let csv_path = out.join("series.csv");
    let file = fs::File::create(&csv_path).map_err(|e| CliError::io(&csv_path, e))?;
    diagnostics::write_csv(&outcome.records, file).map_err(|e| CliError::io(&csv_path, e))?;
    let status = RunStatus {
        exit: outcome.exit.as_str(),
        steps,
        t: outcome.final_state.t,
        dt: outcome.dt,
        derived: cfg.derived(),
        message: outcome.message.clone(),
    };
    let status_path = out.join("status.json");
    write_file(&status_path, serde_json::to_string_pretty(&status)?.as_bytes())?;
    Ok((status, outcome.records))
}

fn emit_step(cfg: &RunConfig, out: &Path, step: usize, state: &SimState, view: &Viewport) -> CliResult<()> {
    let snap = StateSnapshot {
        step,
        t: state.t,
        z: state.z.snapshot(),
        h: state.h.snapshot(),
    };
    let path = out.join(format!("snapshot_{step:04}.json"));
    write_file(&path, serde_json::to_string(&snap)?.as_bytes())?;
    if cfg.svg {
        let (sigma, _) = diagnostics::rayleigh_taylor_sigma(state)?;
        let path = out.join(format!("frame_{step:04}.svg"));
        write_file(&path, render_svg(state, &sigma, view).as_bytes())?;
    }
    Ok(())
}

pub fn load_snapshot(path: &Path) -> CliResult<StateSnapshot> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }

    fn from_result(name: &'static str, r: crate::Result<(bool, String)>) -> Self {
        match r {
            Ok((passed, detail)) => Self::new(name, passed, detail),
            Err(e) => Self::new(name, false, e.to_string()),
        }
    }
}

fn random_mean_free(rng: &mut ChaCha8Rng, n: usize) -> crate::Result<Vec<f64>> {
    let terms: Vec<_> = (1..n / 4)
        .map(|k| (k, rng.gen_range(-1.0..1.0) / k as f64, rng.gen_range(-1.0..1.0) / k as f64))
        .collect();
    Ok(SpectralScalar::trig(n, &terms)?.into_samples())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Mean vertical gap between the curves, used as the flat-case depth.
fn mean_gap(z: &PeriodicCurve, h: &PeriodicCurve) -> f64 {
    z.p2().mean() - h.p2().mean()
}

/// Property and oracle checks on the configured geometry.
pub fn verify_suite(cfg: &RunConfig, seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let n = cfg.n;
    let params = cfg.params();
    let geometry = cfg.z.build(n).and_then(|z| cfg.h.build(n).map(|h| (z, h)));
    let (z, h) = match geometry {
        Ok(g) => g,
        Err(e) => return vec![CheckResult::new("geometry", false, e.to_string())],
    };
    let ops = match GeometryOperators::new(&z, &h) {
        Ok(o) => o,
        Err(e) => return vec![CheckResult::new("geometry", false, e.to_string())],
    };

    out.push(CheckResult::from_result(
        "adjointness",
        (|| {
            let mut worst = 0.0_f64;
            for _ in 0..5 {
                let (u1, u2) = (random_mean_free(&mut rng, n)?, random_mean_free(&mut rng, n)?);
                let (v1, v2) = (random_mean_free(&mut rng, n)?, random_mean_free(&mut rng, n)?);
                let (a1, a2) = ops.apply(&u1, &u2);
                let (b1, b2) = ops.apply_adjoint(&v1, &v2);
                let lhs = dot(&a1, &v1) + dot(&a2, &v2);
                let rhs = dot(&u1, &b1) + dot(&u2, &b2);
                let scale = (dot(&u1, &u1) + dot(&u2, &u2)).sqrt() * (dot(&v1, &v1) + dot(&v2, &v2)).sqrt();
                worst = worst.max((lhs - rhs).abs() / scale);
            }
            Ok((worst <= 1e-8, format!("max relative gap {worst:.3e}")))
        })(),
    ));

    out.push(CheckResult::from_result(
        "strip_round_trip",
        (|| {
            let mut worst = 0.0_f64;
            let mut bounded = true;
            for _ in 0..10 {
                let f = SpectralScalar::from_samples(random_mean_free(&mut rng, n)?)?.map(|x| x + 0.3);
                let m = SpectralScalar::from_samples(random_mean_free(&mut rng, n)?)?;
                let (d1, d2) = flat_strip::round_trip_defect(&f, &m)?;
                worst = worst.max(d1).max(d2);
                for op in StripOperator::ALL {
                    let r = flat_strip::apply_strip_operator(op, &f, &m)?;
                    bounded &= r.l2_norm() <= f.l2_norm() + m.l2_norm() + 1e-12;
                }
            }
            Ok((worst <= 1e-12 && bounded, format!("max defect {worst:.3e}, bounded {bounded}")))
        })(),
    ));

    out.push(CheckResult::from_result(
        "poisson_multipliers",
        (|| {
            let d = mean_gap(&z, &h);
            let d = if d > 0.0 { d } else { 1.0 };
            let flat_ops = GeometryOperators::new(&PeriodicCurve::flat(n, 0.0)?, &PeriodicCurve::flat(n, -d)?)?;
            let mut worst = 0.0_f64;
            let zero = vec![0.0; n];
            for k in 1..=n / 4 {
                let c: Vec<f64> = (0..n).map(|j| (k as f64 * node(j, n)).cos()).collect();
                let decay = (-(k as f64) * d).exp();
                let (t2, _) = flat_ops.apply(&zero, &c);
                let (_, t3) = flat_ops.apply(&c, &zero);
                for j in 0..n {
                    worst = worst.max((t2[j] + decay * c[j]).abs()).max((t3[j] - decay * c[j]).abs());
                }
            }
            Ok((worst <= 1e-9, format!("depth {d:.4}, max error {worst:.3e}")))
        })(),
    ));

    out.push(CheckResult::from_result(
        "spectral_radius",
        (|| {
            let est = spectral_radius_probe(&ops, &params, 60);
            let mut detail = format!("rho = {:.6}", est.radius);
            let mut ok = est.radius < 1.0;
            if z.p2().max_abs() - z.p2().mean().abs() < 1e-14 && h.p2().max_abs() - h.p2().mean().abs() < 1e-14 {
                let d = mean_gap(&z, &h);
                let oracle = (params.gamma1() * params.gamma2()).abs().sqrt() * (-d).exp();
                ok &= (est.radius - oracle).abs() <= 1e-3;
                let _ = write!(detail, ", flat oracle {oracle:.6}");
            }
            Ok((ok, detail))
        })(),
    ));

    out.push(CheckResult::from_result(
        "solver_vs_dense",
        (|| {
            if n > DENSE_MAX_N {
                return Ok((true, format!("skipped for N = {n}")));
            }
            let (f1, f2) = vorticity::forcing(&z, &params)?;
            let f1 = if f1.l2_norm() == 0.0 {
                AmplitudeField::from_samples(random_mean_free(&mut rng, n)?)?
            } else {
                f1
            };
            let it = vorticity::solve_with_operators(&ops, &params, (&f1, &f2), DEFAULT_TOL, DEFAULT_MAX_ITER, None)?;
            let dense = vorticity::solve_dense(&ops, &params, (&f1, &f2))?;
            let d1 = it.solution.omega1.values().sub(dense.omega1.values())?.l2_norm();
            let d2 = it.solution.omega2.values().sub(dense.omega2.values())?.l2_norm();
            let err = (d1 * d1 + d2 * d2).sqrt();
            Ok((err <= 1e-10, format!("L2 gap {err:.3e} after {} iterations", it.iterations)))
        })(),
    ));
    out
}

pub fn cmd_spectrum(cfg: &RunConfig, n_probe: usize) -> CliResult<RadiusEstimate> {
    let z = cfg.z.build(cfg.n)?;
    let h = cfg.h.build(cfg.n)?;
    let ops = GeometryOperators::new(&z, &h)?;
    Ok(spectral_radius_probe(&ops, &cfg.params(), n_probe))
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args(args: Args, stdout: &mut dyn std::io::Write) -> i32 {
    match dispatch(args, stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(args: Args, stdout: &mut dyn std::io::Write) -> CliResult<i32> {
    let echo = |cfg: &RunConfig, stdout: &mut dyn std::io::Write| -> CliResult<()> {
        let d = cfg.derived();
        writeln!(stdout, "gamma1 = {} gamma2 = {} N = {}", d.gamma1, d.gamma2, d.big_n)
            .map_err(|e| CliError::io(Path::new("<stdout>"), e))
    };
    let so = |e| CliError::io(Path::new("<stdout>"), e);
    match args.command {
        Command::Run { config, out } => {
            let cfg = parse_config(&config)?;
            echo(&cfg, stdout)?;
            let out = out.unwrap_or_else(|| cfg.output_dir.clone());
            let (status, _) = cmd_run(&cfg, &out)?;
            writeln!(stdout, "{}", serde_json::to_string(&status)?).map_err(so)?;
            Ok(0)
        }
        Command::Verify { config, seed } => {
            let cfg = parse_config(&config)?;
            echo(&cfg, stdout)?;
            let checks = verify_suite(&cfg, seed);
            for c in &checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                writeln!(stdout, "{tag} {} {}", c.name, c.detail).map_err(so)?;
            }
            Ok(if checks.iter().all(|c| c.passed) { 0 } else { 2 })
        }
        Command::Spectrum { config, probes } => {
            let cfg = parse_config(&config)?;
            echo(&cfg, stdout)?;
            let est = cmd_spectrum(&cfg, probes)?;
            writeln!(stdout, "radius {}", est.radius).map_err(so)?;
            writeln!(stdout, "converged {}", est.converged).map_err(so)?;
            for (i, r) in est.trace.iter().enumerate() {
                writeln!(stdout, "{} {}", i + 1, r).map_err(so)?;
            }
            Ok(0)
        }
    }
}

#[derive(Debug, clap::Parser)]
#[command(name = "muskat", about = "Two-phase Muskat interface simulator")]
pub struct Args {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Subcommand)]
pub enum Command {
    /// Time-step the configured interface and write the diagnostics series.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides output_dir from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the operator and solver checks on the configured geometry.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Dominant eigenvalue estimate of the double-layer adjoint.
    Spectrum {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 60)]
        probes: usize,
    },
}
