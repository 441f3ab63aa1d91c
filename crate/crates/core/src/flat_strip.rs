//! Fourier-multiplier operators of the flat strip `0 < y < 1`, relating the
//! boundary traces `f`, `m⁺`, `m⁻`, `w`, and a round-trip verifier.
//!
//! Frequencies are the integer wavenumbers of the periodic grid.

use num_complex::Complex64;

use crate::error::{MuskatError, Result};
use crate::spectral::SpectralScalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StripOperator {
    /// `(m⁺, w) ↦ f`
    H1,
    /// `(f, m⁻) ↦ m⁺`
    H2z,
    /// `(m⁺, w) ↦ m⁻`
    H2h,
    /// `(f, m⁻) ↦ w`
    H3,
}

impl StripOperator {
    pub const ALL: [StripOperator; 4] = [Self::H1, Self::H2z, Self::H2h, Self::H3];

    /// Multipliers `(c_a, c_b)` applied to the two inputs at wavenumber `k`.
    pub fn symbols(&self, k: i64) -> (f64, f64) {
        let s = k.signum() as f64;
        let x = k as f64;
        let sech = 1.0 / x.cosh();
        // sign(k)·sinh(k)/cosh(k) = |tanh k|
        let st = s * x.tanh();
        match self {
            StripOperator::H1 => (-st, -sech),
            StripOperator::H2z => (st, sech),
            StripOperator::H2h => (sech, -st),
            StripOperator::H3 => (sech, -st),
        }
    }
}

/// Boundary traces of the strip problem.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryData {
    pub f: SpectralScalar,
    pub m_plus: SpectralScalar,
    pub m_minus: SpectralScalar,
    pub w: SpectralScalar,
}

impl BoundaryData {
    /// Complete `(f, m⁻)` with `m⁺ = H2z(f, m⁻)` and `w = H3(f, m⁻)`.
    pub fn from_lower(f: SpectralScalar, m_minus: SpectralScalar) -> Result<Self> {
        let m_plus = apply_strip_operator(StripOperator::H2z, &f, &m_minus)?;
        let w = apply_strip_operator(StripOperator::H3, &f, &m_minus)?;
        Ok(Self { f, m_plus, m_minus, w })
    }
}

/// Modewise evaluation of one operator with `sign(0) = 0`.
pub fn apply_strip_operator(which: StripOperator, a: &SpectralScalar, b: &SpectralScalar) -> Result<SpectralScalar> {
    let n = a.n();
    if b.n() != n {
        return Err(MuskatError::GridMismatch(n, b.n()));
    }
    let modes: Vec<Complex64> = a
        .modes()
        .iter()
        .zip(b.modes())
        .enumerate()
        .map(|(m, (&x, &y))| {
            let (ca, cb) = which.symbols(crate::spectral::wavenumber(m, n));
            x * ca + y * cb
        })
        .collect();
    SpectralScalar::from_modes(modes)
}

/// `(‖H1(m⁺,w) − s₁f‖, ‖H2h(m⁺,w) − m⁻‖)` with `s₁ = −1`.
pub fn round_trip_defect(f: &SpectralScalar, m_minus: &SpectralScalar) -> Result<(f64, f64)> {
    round_trip_defect_with_sign(f, m_minus, -1.0)
}

/// Round trip with an explicit orientation constant `s₁`.
pub fn round_trip_defect_with_sign(f: &SpectralScalar, m_minus: &SpectralScalar, s1: f64) -> Result<(f64, f64)> {
    let data = BoundaryData::from_lower(f.clone(), m_minus.clone())?;
    let f_back = apply_strip_operator(StripOperator::H1, &data.m_plus, &data.w)?;
    let m_back = apply_strip_operator(StripOperator::H2h, &data.m_plus, &data.w)?;
    let d1 = f_back.sub(&f.scale(s1))?.l2_norm();
    let d2 = m_back.sub(m_minus)?.l2_norm();
    Ok((d1, d2))
}
