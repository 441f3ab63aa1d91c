//! Interface geometry: the moving curve `z`, the fixed permeability-jump curve
//! `h`, the arc-chord functional, curve–curve separation, and arclength
//! reparametrization.
//!
//! A curve is stored through its periodic parts, `curve(α) = (α + p1(α), p2(α))`,
//! so `curve(α + 2π) = curve(α) + (2π, 0)` holds by construction. Points and
//! tangents are handed out as complex numbers `x + iy`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{MuskatError, Result};
use crate::spectral::{node, spacing, SpectralScalar};

/// Chord length below which a curve is declared self-intersecting.
pub const CHORD_FLOOR: f64 = 1e-14;
/// Curve–curve distance below which the curves are declared in contact.
pub const CONTACT_FLOOR: f64 = 1e-12;
/// Maximum number of sweeps in [`PeriodicCurve::resample_uniform`].
pub const RESAMPLE_MAX_SWEEPS: usize = 100;

/// Reduce a horizontal offset to the nearest periodic image, `(−π, π]`.
#[inline]
pub fn reduce_periodic(dx: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut r = dx - two_pi * (dx / two_pi).round();
    if r <= -PI {
        r += two_pi;
    }
    r
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicCurve {
    p1: SpectralScalar,
    p2: SpectralScalar,
}

impl PeriodicCurve {
    pub fn new(p1: SpectralScalar, p2: SpectralScalar) -> Result<Self> {
        if p1.n() != p2.n() {
            return Err(MuskatError::GridMismatch(p1.n(), p2.n()));
        }
        Ok(Self { p1, p2 })
    }

    /// Horizontal line `y = height`.
    pub fn flat(n: usize, height: f64) -> Result<Self> {
        Self::new(SpectralScalar::zeros(n)?, SpectralScalar::constant(n, height)?)
    }

    pub fn from_fn(n: usize, p1: impl Fn(f64) -> f64, p2: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(SpectralScalar::from_fn(n, p1)?, SpectralScalar::from_fn(n, p2)?)
    }

    pub fn from_samples(p1: Vec<f64>, p2: Vec<f64>) -> Result<Self> {
        Self::new(SpectralScalar::from_samples(p1)?, SpectralScalar::from_samples(p2)?)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.p1.n()
    }

    pub fn p1(&self) -> &SpectralScalar {
        &self.p1
    }

    pub fn p2(&self) -> &SpectralScalar {
        &self.p2
    }

    #[inline]
    pub fn point(&self, j: usize) -> Complex64 {
        Complex64::new(node(j, self.n()) + self.p1.samples()[j], self.p2.samples()[j])
    }

    pub fn points(&self) -> Vec<Complex64> {
        (0..self.n()).map(|j| self.point(j)).collect()
    }

    /// `∂_α z` as complex samples.
    pub fn tangent(&self) -> Vec<Complex64> {
        let d1 = self.p1.derivative_any(1);
        let d2 = self.p2.derivative_any(1);
        d1.samples()
            .iter()
            .zip(d2.samples())
            .map(|(&a, &b)| Complex64::new(1.0 + a, b))
            .collect()
    }

    /// Components of `∂_α z`.
    pub fn tangent_fields(&self) -> (SpectralScalar, SpectralScalar) {
        (self.p1.derivative_any(1).map(|x| 1.0 + x), self.p2.derivative_any(1))
    }

    /// Evaluate the band-limited curve at an arbitrary parameter.
    pub fn eval_at(&self, alpha: f64) -> Complex64 {
        Complex64::new(alpha + self.p1.eval_at(alpha), self.p2.eval_at(alpha))
    }

    /// `A(t)`: mean of `|∂_α z|²` over the grid.
    pub fn speed_squared_mean(&self) -> f64 {
        let t = self.tangent();
        t.iter().map(|c| c.norm_sqr()).sum::<f64>() / t.len() as f64
    }

    /// Rigid translation by `(dx, dy)`.
    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            p1: self.p1.map(|x| x + dx),
            p2: self.p2.map(|y| y + dy),
        }
    }

    /// Parameter shift by `m` grid cells: `z̃(α) = z(α − mh) + (mh, 0)`.
    /// The image moves horizontally by `mh` and node `j` of the result is node
    /// `j − m` of the input.
    pub fn shifted_nodes(&self, m: usize) -> Self {
        let n = self.n();
        let roll = |f: &SpectralScalar| {
            let s = f.samples();
            SpectralScalar::from_samples((0..n).map(|j| s[(j + n - m % n) % n]).collect())
                .expect("grid already validated")
        };
        Self {
            p1: roll(&self.p1),
            p2: roll(&self.p2),
        }
    }

    /// `z + dt·v` for a velocity field given by its components.
    pub fn displaced(&self, v1: &SpectralScalar, v2: &SpectralScalar, dt: f64) -> Result<Self> {
        Self::new(
            self.p1.zip_with(v1, |p, v| p + dt * v)?,
            self.p2.zip_with(v2, |p, v| p + dt * v)?,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.p1.is_finite() && self.p2.is_finite()
    }

    /// `‖z‖²_{H^k}` of the periodic parts, `‖p1‖² + ‖p2‖²`.
    pub fn sobolev_norm_sq(&self, k: u32) -> f64 {
        self.p1.sobolev_norm(k).powi(2) + self.p2.sobolev_norm(k).powi(2)
    }

    /// `‖F(z)‖_{L∞}` with `F(z)(α,β) = |β| / |z(α) − z(α−β)|_per` over grid
    /// offsets `β ∈ (−π, π]`, together with the diagonal limit `1/|∂_α z|`.
    pub fn arc_chord_norm(&self) -> Result<f64> {
        let n = self.n();
        let h = spacing(n);
        let p1 = self.p1.samples();
        let p2 = self.p2.samples();
        let mut sup = self
            .tangent()
            .iter()
            .fold(0.0_f64, |m, t| m.max(1.0 / t.norm()));
        for i in 0..n {
            for off in 1..n {
                // β = off·h, folded into (−π, π]
                let shift = if off <= n / 2 { off as i64 } else { off as i64 - n as i64 };
                let beta = shift as f64 * h;
                let j = (i + n - off) % n;
                let dx = reduce_periodic(beta + p1[i] - p1[j]);
                let dy = p2[i] - p2[j];
                let chord = dx.hypot(dy);
                if chord < CHORD_FLOOR {
                    return Err(MuskatError::SelfIntersection { chord, i, j });
                }
                sup = sup.max(beta.abs() / chord);
            }
        }
        Ok(sup)
    }

    /// Minimum periodized distance between the nodes of `self` and `other`.
    pub fn min_distance(&self, other: &Self) -> Result<f64> {
        if self.n() != other.n() {
            return Err(MuskatError::GridMismatch(self.n(), other.n()));
        }
        let a = self.points();
        let b = other.points();
        let mut best = f64::INFINITY;
        for p in &a {
            for q in &b {
                let d = Complex64::new(reduce_periodic(p.re - q.re), p.im - q.im).norm_sqr();
                best = best.min(d);
            }
        }
        Ok(best.sqrt())
    }

    /// `‖d(z,h)‖_{L∞} = 1 / min |z(α) − h(α−β)|²_per`.
    pub fn separation_norm(&self, other: &Self) -> Result<f64> {
        let d = self.min_distance(other)?;
        if d < CONTACT_FLOOR {
            return Err(MuskatError::CurveContact { distance: d });
        }
        Ok(1.0 / (d * d))
    }

    /// `sup_α | |∂_α z|² − mean | / mean`.
    pub fn parametrization_defect(&self) -> f64 {
        let sq: Vec<f64> = self.tangent().iter().map(|c| c.norm_sqr()).collect();
        let mean = sq.iter().sum::<f64>() / sq.len() as f64;
        sq.iter().fold(0.0_f64, |m, s| m.max((s - mean).abs())) / mean
    }

    /// Reparametrize by arclength so that `|∂_α z|` is uniform.
    ///
    /// Solves `α(θ) = θ + q(θ)` with `s(α(θ))` affine in `θ` by Newton sweeps
    /// on the band-limited arclength, with the phase fixed by `mean q = 0`.
    pub fn resample_uniform(&self) -> Result<Self> {
        let n = self.n();
        let speed = SpectralScalar::from_samples(self.tangent().iter().map(|c| c.norm()).collect())?;
        let mean_speed = speed.mean();
        if !(mean_speed > 0.0) {
            return Err(MuskatError::DegenerateParametrization(mean_speed));
        }
        // s(α) = mean_speed·(α+π) + arc(α) + const, arc periodic
        let arc = speed.antiderivative();
        let theta: Vec<f64> = (0..n).map(|j| node(j, n)).collect();
        let mut q = vec![0.0; n];
        let mut offset = 0.0;
        let mut converged = false;
        let mut last_update = f64::INFINITY;
        for _ in 0..RESAMPLE_MAX_SWEEPS {
            let mut max_update = 0.0_f64;
            for j in 0..n {
                let a = theta[j] + q[j];
                let g = mean_speed * q[j] + arc.eval_at(a) - offset;
                let dg = speed.eval_at(a);
                if !(dg > 0.0) {
                    return Err(MuskatError::DegenerateParametrization(dg));
                }
                let step = g / dg;
                q[j] -= step;
                max_update = max_update.max(step.abs());
            }
            let new_offset = theta
                .iter()
                .zip(&q)
                .map(|(t, qj)| arc.eval_at(t + qj))
                .sum::<f64>()
                / n as f64;
            max_update = max_update.max((new_offset - offset).abs() / mean_speed);
            offset = new_offset;
            last_update = max_update;
            if max_update < 1e-14 * (1.0 + q.iter().fold(0.0_f64, |m, x| m.max(x.abs()))) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(MuskatError::NoConvergence {
                iterations: RESAMPLE_MAX_SWEEPS,
                estimate: last_update,
            });
        }
        let p1: Vec<f64> = (0..n).map(|j| q[j] + self.p1.eval_at(theta[j] + q[j])).collect();
        let p2: Vec<f64> = (0..n).map(|j| self.p2.eval_at(theta[j] + q[j])).collect();
        Self::from_samples(p1, p2)
    }

    pub fn snapshot(&self) -> CurveSnapshot {
        let pairs = |f: &SpectralScalar| f.modes().iter().map(|c| [c.re, c.im]).collect();
        CurveSnapshot {
            n: self.n(),
            p1_modes: pairs(&self.p1),
            p2_modes: pairs(&self.p2),
        }
    }

    pub fn from_snapshot(s: &CurveSnapshot) -> Result<Self> {
        let modes = |v: &[[f64; 2]]| -> Result<SpectralScalar> {
            if v.len() != s.n {
                return Err(MuskatError::GridMismatch(s.n, v.len()));
            }
            SpectralScalar::from_modes(v.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
        };
        Self::new(modes(&s.p1_modes)?, modes(&s.p2_modes)?)
    }
}

/// JSON snapshot of a curve: Fourier coefficients of both periodic parts in
/// FFT order, each as an `[re, im]` pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSnapshot {
    pub n: usize,
    pub p1_modes: Vec<[f64; 2]>,
    pub p2_modes: Vec<[f64; 2]>,
}

/// Viscosities, permeabilities, densities and gravity of the two-phase system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluidParams {
    pub mu1: f64,
    pub mu2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub g: f64,
}

impl FluidParams {
    pub fn new(mu1: f64, mu2: f64, kappa1: f64, kappa2: f64, rho1: f64, rho2: f64, g: f64) -> Result<Self> {
        let p = Self { mu1, mu2, kappa1, kappa2, rho1, rho2, g };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.mu1, self.mu2, self.kappa1, self.kappa2, self.rho1, self.rho2, self.g];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(MuskatError::InvalidParams("non-finite fluid parameter".into()));
        }
        if !(self.mu1 + self.mu2 > 0.0) {
            return Err(MuskatError::InvalidParams(format!(
                "mu1 + mu2 must be positive, got {}",
                self.mu1 + self.mu2
            )));
        }
        if !(self.kappa1 + self.kappa2 > 0.0) {
            return Err(MuskatError::InvalidParams(format!(
                "kappa1 + kappa2 must be positive, got {}",
                self.kappa1 + self.kappa2
            )));
        }
        if self.gamma1().abs() >= 1.0 {
            return Err(MuskatError::InvalidParams(format!("|gamma1| = {} must be < 1", self.gamma1().abs())));
        }
        if self.gamma2().abs() >= 1.0 {
            return Err(MuskatError::InvalidParams(format!("|gamma2| = {} must be < 1", self.gamma2().abs())));
        }
        Ok(())
    }

    /// `(μ² − μ¹)/(μ¹ + μ²)`.
    pub fn gamma1(&self) -> f64 {
        (self.mu2 - self.mu1) / (self.mu1 + self.mu2)
    }

    /// `(κ¹ − κ²)/(κ¹ + κ²)`.
    pub fn gamma2(&self) -> f64 {
        (self.kappa1 - self.kappa2) / (self.kappa1 + self.kappa2)
    }

    /// `2κ¹g(ρ² − ρ¹)/(μ² + μ¹)`.
    pub fn big_n(&self) -> f64 {
        2.0 * self.kappa1 * self.g * (self.rho2 - self.rho1) / (self.mu2 + self.mu1)
    }
}
