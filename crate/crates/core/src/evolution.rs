//! Interface velocity, classical RK4 stepping and the guarded run driver.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::brkernels::{GeometryOperators, VectorField};
use crate::curves::{FluidParams, PeriodicCurve};
use crate::diagnostics::{self, DiagnosticsRecord};
use crate::error::{MuskatError, Result};
use crate::spectral::{spacing, SpectralScalar};
use crate::vorticity::{self, VorticityPair, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Parametrization defect above which the curve is resampled by arclength.
pub const RESAMPLE_THRESHOLD: f64 = 1e-6;
/// `A(t)` below which the tangential speed is undefined.
pub const MIN_SPEED_SQUARED: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub z: PeriodicCurve,
    pub h: PeriodicCurve,
    pub vort: VorticityPair,
    pub params: FluidParams,
    pub eps: f64,
}

impl SimState {
    /// Validate the inputs and solve the vorticity for `z` at `t = 0`.
    pub fn new(z: PeriodicCurve, h: PeriodicCurve, params: FluidParams, eps: f64) -> Result<Self> {
        if z.n() != h.n() {
            return Err(MuskatError::GridMismatch(z.n(), h.n()));
        }
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(MuskatError::InvalidMollifier(eps));
        }
        params.validate()?;
        z.arc_chord_norm()?;
        z.separation_norm(&h)?;
        let (_, vort) = amplitudes(&z, &h, &params, eps)?;
        Ok(Self { t: 0.0, z, h, vort, params, eps })
    }

    pub fn n(&self) -> usize {
        self.z.n()
    }
}

/// Solve for the amplitudes on `(z, h)`. The operators are only assembled
/// when the forcing is nonzero; otherwise the amplitudes vanish identically.
fn amplitudes(
    z: &PeriodicCurve,
    h: &PeriodicCurve,
    params: &FluidParams,
    eps: f64,
) -> Result<(Option<GeometryOperators>, VorticityPair)> {
    let (f1, f2) = vorticity::forcing(z, params)?;
    if f1.values().max_abs() == 0.0 {
        return Ok((None, VorticityPair::zeros(z.n())?));
    }
    let ops = GeometryOperators::new(z, h)?;
    let moll = if eps > 0.0 { Some(eps) } else { None };
    let sol = vorticity::solve_with_operators(&ops, params, (&f1, &f2), DEFAULT_TOL, DEFAULT_MAX_ITER, moll)?.solution;
    Ok((Some(ops), sol))
}

fn is_zero(v: &VorticityPair) -> bool {
    v.omega1.values().max_abs() == 0.0 && v.omega2.values().max_abs() == 0.0
}

/// Tangential speed `c(α)` keeping `|∂_α z|²` uniform in `α`.
///
/// `velocity_noc` holds the Birkhoff-Rott velocity on `z` as complex samples.
pub fn tangential_speed(z: &PeriodicCurve, velocity_noc: &[Complex64]) -> Result<SpectralScalar> {
    if velocity_noc.len() != z.n() {
        return Err(MuskatError::GridMismatch(z.n(), velocity_noc.len()));
    }
    let a = z.speed_squared_mean();
    if !(a >= MIN_SPEED_SQUARED) {
        return Err(MuskatError::DegenerateParametrization(a));
    }
    let v = VectorField::from_complex(velocity_noc)?;
    let (t1, t2) = z.tangent_fields();
    // f = ∂z·∂v
    let f = t1.mul(&v.x.derivative_any(1))?.add(&t2.mul(&v.y.derivative_any(1))?)?;
    // c(α) = [(α+π)/2π ∫f − ∫_π^α f] / A, written with the periodic antiderivative F of f − f̄
    let big_f = f.antiderivative();
    let f0 = big_f.samples()[0];
    let two_pi_mean = 2.0 * PI * f.mean();
    Ok(big_f.map(|x| (two_pi_mean + f0 - x) / a))
}

/// `|c(π⁻) − c(−π)|` using the band-limited interpolant.
pub fn periodicity_jump(c: &SpectralScalar) -> f64 {
    (c.eval_at(PI) - c.samples()[0]).abs()
}

/// Full velocity `BR + c∂z` on `z` together with the pieces it was built from.
#[derive(Clone, Debug)]
pub struct VelocityParts {
    pub velocity: VectorField,
    pub velocity_noc: Vec<Complex64>,
    pub c: SpectralScalar,
    pub vort: VorticityPair,
}

fn assemble_velocity(ops: Option<&GeometryOperators>, z: &PeriodicCurve, vort: VorticityPair) -> Result<VelocityParts> {
    let noc = match ops {
        Some(ops) => ops.velocity_on_z(vort.omega1.samples(), vort.omega2.samples()),
        None => vec![Complex64::new(0.0, 0.0); z.n()],
    };
    let c = tangential_speed(z, &noc)?;
    let total: Vec<Complex64> = noc
        .iter()
        .zip(z.tangent())
        .zip(c.samples())
        .map(|((v, t), &ci)| v + t * ci)
        .collect();
    Ok(VelocityParts {
        velocity: VectorField::from_complex(&total)?,
        velocity_noc: noc,
        c,
        vort,
    })
}

/// Solve the amplitudes on `(z, h)` and evaluate the velocity.
pub fn velocity_at(z: &PeriodicCurve, h: &PeriodicCurve, params: &FluidParams, eps: f64) -> Result<VelocityParts> {
    let (ops, vort) = amplitudes(z, h, params, eps)?;
    assemble_velocity(ops.as_ref(), z, vort)
}

/// `BR(ϖ₁, z)_z + BR(ϖ₂, h)_z` from the cached amplitudes.
pub fn birkhoff_rott_on_z(state: &SimState) -> Result<Vec<Complex64>> {
    if is_zero(&state.vort) {
        return Ok(vec![Complex64::new(0.0, 0.0); state.n()]);
    }
    let ops = GeometryOperators::new(&state.z, &state.h)?;
    Ok(ops.velocity_on_z(state.vort.omega1.samples(), state.vort.omega2.samples()))
}

/// Velocity of the current state using its cached amplitudes.
pub fn interface_velocity(state: &SimState) -> Result<VectorField> {
    let ops = if is_zero(&state.vort) {
        None
    } else {
        Some(GeometryOperators::new(&state.z, &state.h)?)
    };
    Ok(assemble_velocity(ops.as_ref(), &state.z, state.vort.clone())?.velocity)
}

/// Limits checked after each step; `None` disables a check.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepGuards {
    pub max_arc_chord: Option<f64>,
    /// Minimum curve–curve distance.
    pub min_separation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
enum StepFailure {
    ArcChord(f64),
    Separation(f64),
    Other(MuskatError),
}

impl From<MuskatError> for StepFailure {
    fn from(e: MuskatError) -> Self {
        StepFailure::Other(e)
    }
}

impl StepFailure {
    fn into_error(self) -> MuskatError {
        match self {
            StepFailure::ArcChord(a) => MuskatError::StepRejected(format!("arc-chord norm {a} exceeds guard")),
            StepFailure::Separation(d) => MuskatError::StepRejected(format!("curve distance {d} below guard")),
            StepFailure::Other(MuskatError::StepRejected(s)) => MuskatError::StepRejected(s),
            StepFailure::Other(e) => e,
        }
    }
}

fn stage(z: &PeriodicCurve, k: &VectorField, dt: f64) -> Result<PeriodicCurve> {
    z.displaced(&k.x, &k.y, dt)
}

fn step_inner(state: &SimState, dt: f64, guards: &StepGuards) -> std::result::Result<SimState, StepFailure> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(MuskatError::InvalidParams(format!("dt must be positive, got {dt}")).into());
    }
    let (h, p, eps) = (&state.h, &state.params, state.eps);
    let k1 = interface_velocity(state)?;
    let k2 = velocity_at(&stage(&state.z, &k1, 0.5 * dt)?, h, p, eps)?.velocity;
    let k3 = velocity_at(&stage(&state.z, &k2, 0.5 * dt)?, h, p, eps)?.velocity;
    let k4 = velocity_at(&stage(&state.z, &k3, dt)?, h, p, eps)?.velocity;
    let combine = |a: &SpectralScalar, b: &SpectralScalar, c: &SpectralScalar, d: &SpectralScalar| {
        let s: Vec<f64> = (0..a.n())
            .map(|j| (a.samples()[j] + 2.0 * b.samples()[j] + 2.0 * c.samples()[j] + d.samples()[j]) / 6.0)
            .collect();
        SpectralScalar::from_samples(s)
    };
    let vx = combine(&k1.x, &k2.x, &k3.x, &k4.x)?;
    let vy = combine(&k1.y, &k2.y, &k3.y, &k4.y)?;
    let mut z = state.z.displaced(&vx, &vy, dt)?;
    if !z.is_finite() {
        return Err(MuskatError::StepRejected("non-finite curve after step".into()).into());
    }
    if z.parametrization_defect() > RESAMPLE_THRESHOLD {
        z = z.resample_uniform()?;
    }
    let arc = z.arc_chord_norm()?;
    if let Some(limit) = guards.max_arc_chord {
        if arc > limit {
            return Err(StepFailure::ArcChord(arc));
        }
    }
    let dist = z.min_distance(h)?;
    if let Some(limit) = guards.min_separation {
        if dist < limit {
            return Err(StepFailure::Separation(dist));
        }
    }
    z.separation_norm(h)?;
    let (_, vort) = amplitudes(&z, h, p, eps)?;
    Ok(SimState {
        t: state.t + dt,
        z,
        h: h.clone(),
        vort,
        params: *p,
        eps,
    })
}

/// One classical RK4 step; every stage re-solves the amplitudes and `c`.
pub fn rk4_step(state: &SimState, dt: f64) -> Result<SimState> {
    rk4_step_guarded(state, dt, &StepGuards::default())
}

pub fn rk4_step_guarded(state: &SimState, dt: f64, guards: &StepGuards) -> Result<SimState> {
    step_inner(state, dt, guards).map_err(StepFailure::into_error)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitReason {
    Completed,
    RTViolated,
    ArcChordBlowup,
    CurveContact,
    StepRejected,
}

impl ExitReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExitReason::Completed => "Completed",
            ExitReason::RTViolated => "RTViolated",
            ExitReason::ArcChordBlowup => "ArcChordBlowup",
            ExitReason::CurveContact => "CurveContact",
            ExitReason::StepRejected => "StepRejected",
        }
    }
}

/// Everything the driver needs; built from the JSON config by the CLI layer.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSetup {
    pub z0: PeriodicCurve,
    pub h: PeriodicCurve,
    pub params: FluidParams,
    pub t_end: f64,
    pub dt: f64,
    /// Sobolev order of the monitored norms.
    pub k: u32,
    pub eps: f64,
    /// Stop with `RTViolated` once `m(t)` drops below this.
    pub min_sigma: f64,
    pub guards: StepGuards,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub records: Vec<DiagnosticsRecord>,
    pub final_state: SimState,
    pub exit: ExitReason,
    /// Step size actually used after the velocity guard.
    pub dt: f64,
    pub message: Option<String>,
}

impl RunSetup {
    pub fn validate(&self) -> Result<()> {
        if self.z0.n() != self.h.n() {
            return Err(MuskatError::GridMismatch(self.z0.n(), self.h.n()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(MuskatError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(MuskatError::Config(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        if self.k == 0 || self.k > crate::spectral::MAX_DERIVATIVE_ORDER {
            return Err(MuskatError::OrderOutOfRange(self.k));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(MuskatError::InvalidMollifier(self.eps));
        }
        self.params.validate()
    }
}

fn classify(err: &MuskatError) -> ExitReason {
    match err {
        MuskatError::SelfIntersection { .. } => ExitReason::ArcChordBlowup,
        MuskatError::CurveContact { .. } => ExitReason::CurveContact,
        _ => ExitReason::StepRejected,
    }
}

/// Run to `t_end` or until a guard trips, calling `observe` after every record.
///
/// Only configuration problems are returned as errors; physical failures end
/// the run with the matching [`ExitReason`].
pub fn run_with(
    setup: &RunSetup,
    mut observe: impl FnMut(usize, &SimState, &DiagnosticsRecord),
) -> Result<RunOutcome> {
    setup.validate()?;
    let mut z = setup.z0.clone();
    if setup.eps > 0.0 {
        z = PeriodicCurve::new(z.p1().mollify(setup.eps)?, z.p2().mollify(setup.eps)?)?;
    }
    let fail_at_start = |e: MuskatError| -> Result<RunOutcome> { Err(MuskatError::Config(format!("initial state: {e}"))) };
    if z.parametrization_defect() > RESAMPLE_THRESHOLD {
        z = match z.resample_uniform() {
            Ok(r) => r,
            Err(e) => return fail_at_start(e),
        };
    }
    let mut state = match SimState::new(z, setup.h.clone(), setup.params, setup.eps) {
        Ok(s) => s,
        Err(e) => return fail_at_start(e),
    };
    let first = match diagnostics::record(&state, setup.k, true) {
        Ok(r) => r,
        Err(e) => return fail_at_start(e),
    };
    observe(0, &state, &first);

    let vmax = interface_velocity(&state).map(|v| v.max_norm()).unwrap_or(0.0);
    let mut dt = setup.dt;
    if vmax > 0.0 {
        dt = dt.min(0.5 * spacing(state.n()) / vmax);
    }
    let n_steps = if setup.t_end == 0.0 { 0 } else { (setup.t_end / dt - 1e-9).ceil().max(1.0) as usize };
    let dt = if n_steps > 0 { setup.t_end / n_steps as f64 } else { dt };

    let mut records = vec![first];
    let done = |exit, state, records, msg| {
        Ok(RunOutcome {
            records,
            final_state: state,
            exit,
            dt,
            message: msg,
        })
    };
    if records[0].sigma_min < setup.min_sigma {
        let msg = format!("sigma_min {} below {}", records[0].sigma_min, setup.min_sigma);
        return done(ExitReason::RTViolated, state, records, Some(msg));
    }
    for i in 1..=n_steps {
        let t_next = i as f64 * dt;
        let step = step_inner(&state, t_next - state.t, &setup.guards)
            .and_then(|s| diagnostics::record(&s, setup.k, true).map(|r| (s, r)).map_err(StepFailure::from));
        match step {
            Ok((mut next, mut rec)) => {
                // pin the clock to the grid of step times
                next.t = t_next;
                rec.t = t_next;
                if !rec.is_finite() {
                    let mut rej = records.last().cloned().expect("first record present");
                    rej.t = t_next;
                    rej.step_accepted = false;
                    observe(i, &state, &rej);
                    records.push(rej);
                    return done(ExitReason::StepRejected, state, records, Some("non-finite diagnostics".into()));
                }
                observe(i, &next, &rec);
                let sigma_min = rec.sigma_min;
                records.push(rec);
                state = next;
                if sigma_min < setup.min_sigma {
                    let msg = format!("sigma_min {sigma_min} below {}", setup.min_sigma);
                    return done(ExitReason::RTViolated, state, records, Some(msg));
                }
            }
            Err(failure) => {
                let (exit, msg) = match failure {
                    StepFailure::ArcChord(a) => (ExitReason::ArcChordBlowup, format!("arc-chord norm {a}")),
                    StepFailure::Separation(d) => (ExitReason::CurveContact, format!("curve distance {d}")),
                    StepFailure::Other(e) => (classify(&e), e.to_string()),
                };
                let mut rej = records.last().cloned().expect("first record present");
                rej.t = t_next;
                rej.step_accepted = false;
                observe(i, &state, &rej);
                records.push(rej);
                return done(exit, state, records, Some(msg));
            }
        }
    }
    done(ExitReason::Completed, state, records, None)
}

pub fn run(setup: &RunSetup) -> Result<RunOutcome> {
    run_with(setup, |_, _, _| {})
}
