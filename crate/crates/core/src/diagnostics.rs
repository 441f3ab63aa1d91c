//! Monitored quantities: the Rayleigh–Taylor function `σ`, its minimum `m(t)`,
//! Sobolev energies, the `|||z,h|||²` functional and the dissipation term.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;

use crate::curves::{FluidParams, PeriodicCurve};
use crate::error::{MuskatError, Result};
use crate::evolution::{self, SimState};
use crate::spectral::SpectralScalar;

/// Column order of the series CSV.
pub const CSV_HEADER: [&str; 9] = [
    "t",
    "h3",
    "omega_h1",
    "arc_chord",
    "separation",
    "sigma_min",
    "dissipation",
    "energy",
    "accepted",
];

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// `‖z‖_{H^k}` of the periodic parts.
    pub sobolev_z_k: f64,
    /// `‖ϖ₁‖_{H¹}` and `‖ϖ₂‖_{H¹}`.
    pub sobolev_omega: [f64; 2],
    pub arc_chord: f64,
    pub separation: f64,
    pub sigma_min: f64,
    pub dissipation: f64,
    /// `∫ ∂ᵏz·Λ∂ᵏz`, the quadratic form inside the dissipation term.
    pub quadratic_form: f64,
    pub energy: f64,
    pub step_accepted: bool,
}

impl DiagnosticsRecord {
    fn csv_row(&self) -> [String; 9] {
        [
            self.t.to_string(),
            self.sobolev_z_k.to_string(),
            (self.sobolev_omega[0] + self.sobolev_omega[1]).to_string(),
            self.arc_chord.to_string(),
            self.separation.to_string(),
            self.sigma_min.to_string(),
            self.dissipation.to_string(),
            self.energy.to_string(),
            (self.step_accepted as u8).to_string(),
        ]
    }

    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.sobolev_z_k,
            self.sobolev_omega[0],
            self.sobolev_omega[1],
            self.arc_chord,
            self.separation,
            self.sigma_min,
            self.dissipation,
            self.energy,
        ]
        .iter()
        .all(|x| x.is_finite())
    }
}

/// `σ = ((μ²−μ¹)/κ¹)·BR·∂^⊥z + (ρ²−ρ¹) g ∂_α z₁` from a given Birkhoff-Rott
/// velocity `br` on `z` (complex samples).
pub fn sigma_from_velocity(z: &PeriodicCurve, br: &[Complex64], params: &FluidParams) -> Result<SpectralScalar> {
    let visc = (params.mu2 - params.mu1) / params.kappa1;
    let grav = (params.rho2 - params.rho1) * params.g;
    let tangent = z.tangent();
    if tangent.len() != br.len() {
        return Err(MuskatError::GridMismatch(tangent.len(), br.len()));
    }
    let samples = tangent
        .iter()
        .zip(br)
        .map(|(t, v)| {
            // ∂^⊥z = (−∂z₂, ∂z₁)
            let normal_part = if visc == 0.0 { 0.0 } else { visc * (-v.re * t.im + v.im * t.re) };
            normal_part + grav * t.re
        })
        .collect();
    SpectralScalar::from_samples(samples)
}

/// Pointwise `σ(α, t)` and its grid minimum `m(t)`.
pub fn rayleigh_taylor_sigma(state: &SimState) -> Result<(SpectralScalar, f64)> {
    let br = evolution::birkhoff_rott_on_z(state)?;
    let sigma = sigma_from_velocity(&state.z, &br, &state.params)?;
    let m = sigma.min();
    Ok((sigma, m))
}

fn kth_derivative_components(z: &PeriodicCurve, k: u32) -> (SpectralScalar, SpectralScalar) {
    let d1 = z.p1().derivative_any(k);
    let d1 = if k == 1 { d1.map(|x| 1.0 + x) } else { d1 };
    (d1, z.p2().derivative_any(k))
}

/// Integrand `∂ᵏz·Λ∂ᵏz` on the grid.
fn quadratic_integrand(z: &PeriodicCurve, k: u32) -> Result<SpectralScalar> {
    let (a, b) = kth_derivative_components(z, k);
    let la = a.lambda();
    let lb = b.lambda();
    a.mul(&la)?.add(&b.mul(&lb)?)
}

/// `∫_T ∂ᵏz·Λ∂ᵏz dα`, nonnegative by Plancherel.
pub fn dissipation_quadratic_form(z: &PeriodicCurve, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(MuskatError::OrderOutOfRange(0));
    }
    Ok(quadratic_integrand(z, k)?.integral())
}

/// `‖∂ᵏz‖²_{L²}` of the same components used by the quadratic form.
pub fn derivative_energy(z: &PeriodicCurve, k: u32) -> f64 {
    let (a, b) = kth_derivative_components(z, k);
    a.l2_norm().powi(2) + b.l2_norm().powi(2)
}

/// `−κ¹/(2π(μ¹+μ²)) ∫ (σ/A) ∂ᵏz·Λ∂ᵏz dα` for a precomputed `σ`.
pub fn dissipation_from_sigma(z: &PeriodicCurve, sigma: &SpectralScalar, params: &FluidParams, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(MuskatError::OrderOutOfRange(0));
    }
    let a = z.speed_squared_mean();
    let integrand = quadratic_integrand(z, k)?.mul(sigma)?;
    // + 0.0 turns a signed zero into 0
    Ok(-params.kappa1 / (2.0 * PI * (params.mu1 + params.mu2)) * integrand.integral() / a + 0.0)
}

pub fn dissipation_term(state: &SimState, k: u32) -> Result<f64> {
    let (sigma, _) = rayleigh_taylor_sigma(state)?;
    dissipation_from_sigma(&state.z, &sigma, &state.params, k)
}

/// `‖F(z)‖²_{L∞} + ‖d(z,h)‖²_{L∞} + ‖z‖²_{H^k}`.
pub fn energy_functional(state: &SimState, k: u32) -> Result<f64> {
    let f = state.z.arc_chord_norm()?;
    let d = state.z.separation_norm(&state.h)?;
    Ok(f * f + d * d + state.z.sobolev_norm_sq(k))
}

/// Assemble the full record for the current state.
pub fn record(state: &SimState, k: u32, accepted: bool) -> Result<DiagnosticsRecord> {
    let (sigma, sigma_min) = rayleigh_taylor_sigma(state)?;
    let arc_chord = state.z.arc_chord_norm()?;
    let separation = state.z.separation_norm(&state.h)?;
    let z_norm_sq = state.z.sobolev_norm_sq(k);
    Ok(DiagnosticsRecord {
        t: state.t,
        sobolev_z_k: z_norm_sq.sqrt(),
        sobolev_omega: [
            state.vort.omega1.values().sobolev_norm(1),
            state.vort.omega2.values().sobolev_norm(1),
        ],
        arc_chord,
        separation,
        sigma_min,
        dissipation: dissipation_from_sigma(&state.z, &sigma, &state.params, k)?,
        quadratic_form: dissipation_quadratic_form(&state.z, k)?,
        energy: arc_chord * arc_chord + separation * separation + z_norm_sq,
        step_accepted: accepted,
    })
}

/// Worst per-step decrease rate of `m(t)`: `max_i (m_i − m_{i+1}) / (t_{i+1} − t_i)`.
pub fn sigma_min_drift(series: &[DiagnosticsRecord]) -> Result<f64> {
    if series.len() < 2 {
        return Err(MuskatError::InsufficientData(format!(
            "sigma_min_drift needs at least 2 records, got {}",
            series.len()
        )));
    }
    let mut worst = f64::NEG_INFINITY;
    for w in series.windows(2) {
        let dt = w[1].t - w[0].t;
        if dt > 0.0 {
            worst = worst.max((w[0].sigma_min - w[1].sigma_min) / dt);
        }
    }
    if worst == f64::NEG_INFINITY {
        return Err(MuskatError::InsufficientData("records do not advance in time".into()));
    }
    Ok(worst)
}

/// Write the series as CSV with the fixed header.
pub fn write_csv<W: Write>(records: &[DiagnosticsRecord], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.csv_row())?;
    }
    w.flush()
}
