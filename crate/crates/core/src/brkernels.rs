//! Birkhoff-Rott integrals on periodic sheets, the coupling operator
//! `𝒯 = (T₁ T₂; T₃ T₄)` and its adjoint.
//!
//! Kernels are periodized in closed form. Writing a separation as the complex
//! number `w = Δx + iΔy`, `x^⊥/|x|² = i/w̄` and `Σ_n 1/(w̄ + 2πn) = ½cot(w̄/2)`,
//! so the sheet velocity of amplitude `ϖ` on source curve `s`, seen at `t(α)`, is
//!
//! ```text
//! v₁ + i v₂ = (i/4π) ∫_T cot(conj(t(α) − s(β))/2) ϖ(β) dβ
//! ```
//!
//! and `T(u)(α) = 2 v·∂_α t = (1/2π) ∫_T Im(∂_α t(α) cot((t(α) − s(β))/2)) u(β) dβ`.
//! Self-interaction integrals use the alternating-point trapezoidal rule
//! (nodes of opposite parity, weight `2h`); cross-curve integrals use the plain
//! trapezoidal rule.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curves::{reduce_periodic, FluidParams, PeriodicCurve, CHORD_FLOOR, CONTACT_FLOOR};
use crate::error::{MuskatError, Result};
use crate::spectral::{spacing, SpectralScalar};

/// Block size of the subspace iteration behind [`spectral_radius`].
const PROBE_BLOCK: usize = 8;
/// Successive-estimate tolerance for [`spectral_radius`].
const RADIUS_TOL: f64 = 1e-6;

/// A vortex-sheet amplitude on a curve; the mean is always projected out.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplitudeField {
    values: SpectralScalar,
}

impl AmplitudeField {
    pub fn new(values: SpectralScalar) -> Self {
        Self {
            values: values.mean_free(),
        }
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Ok(Self {
            values: SpectralScalar::zeros(n)?,
        })
    }

    pub fn from_samples(samples: Vec<f64>) -> Result<Self> {
        Ok(Self::new(SpectralScalar::from_samples(samples)?))
    }

    pub fn values(&self) -> &SpectralScalar {
        &self.values
    }

    pub fn samples(&self) -> &[f64] {
        self.values.samples()
    }

    pub fn n(&self) -> usize {
        self.values.n()
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.l2_norm()
    }
}

/// A planar vector field sampled on a curve's grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub x: SpectralScalar,
    pub y: SpectralScalar,
}

impl VectorField {
    pub fn zeros(n: usize) -> Result<Self> {
        Ok(Self {
            x: SpectralScalar::zeros(n)?,
            y: SpectralScalar::zeros(n)?,
        })
    }

    pub fn from_complex(values: &[Complex64]) -> Result<Self> {
        Ok(Self {
            x: SpectralScalar::from_samples(values.iter().map(|c| c.re).collect())?,
            y: SpectralScalar::from_samples(values.iter().map(|c| c.im).collect())?,
        })
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.x
            .samples()
            .iter()
            .zip(self.y.samples())
            .map(|(&a, &b)| Complex64::new(a, b))
            .collect()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            x: self.x.add(&other.x)?,
            y: self.y.add(&other.y)?,
        })
    }

    pub fn max_norm(&self) -> f64 {
        self.to_complex().iter().fold(0.0_f64, |m, c| m.max(c.norm()))
    }

    /// Pointwise dot product with a complex-encoded vector field.
    pub fn dot(&self, other: &[Complex64]) -> Result<SpectralScalar> {
        SpectralScalar::from_samples(
            self.to_complex()
                .iter()
                .zip(other)
                .map(|(a, b)| a.re * b.re + a.im * b.im)
                .collect(),
        )
    }
}

/// `cot(w/2)` written to avoid cancellation near the poles.
#[inline]
pub fn half_cot(w: Complex64) -> Complex64 {
    let (x, y) = (w.re, w.im);
    let sx = (0.5 * x).sin();
    let shy = (0.5 * y).sinh();
    let denom = 2.0 * (sx * sx + shy * shy);
    Complex64::new(x.sin(), -y.sinh()) / denom
}

/// Quadrature-weighted table `w_ij cot((t_i − s_j)/2)` from a source curve to
/// a target curve, stored row-major by target node.
#[derive(Clone, Debug)]
struct CotTable {
    n: usize,
    entries: Vec<Complex64>,
}

impl CotTable {
    fn self_interaction(z: &PeriodicCurve) -> Result<Self> {
        let n = z.n();
        let pts = z.points();
        let w = 2.0 * spacing(n);
        let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in ((i + 1) % 2..n).step_by(2) {
                let d = pts[i] - pts[j];
                let chord = Complex64::new(reduce_periodic(d.re), d.im).norm();
                if chord < CHORD_FLOOR {
                    return Err(MuskatError::SelfIntersection { chord, i, j });
                }
                entries[i * n + j] = half_cot(d) * w;
            }
        }
        Ok(Self { n, entries })
    }

    fn cross(source: &PeriodicCurve, target: &PeriodicCurve) -> Result<Self> {
        if source.n() != target.n() {
            return Err(MuskatError::GridMismatch(source.n(), target.n()));
        }
        let n = source.n();
        let s = source.points();
        let t = target.points();
        let w = spacing(n);
        let mut entries = Vec::with_capacity(n * n);
        for ti in &t {
            for sj in &s {
                let d = ti - sj;
                let dist = Complex64::new(reduce_periodic(d.re), d.im).norm();
                if dist < CONTACT_FLOOR {
                    return Err(MuskatError::CurveContact { distance: dist });
                }
                entries.push(half_cot(d) * w);
            }
        }
        Ok(Self { n, entries })
    }

    /// Sheet velocity `(i/4π) Σ_j conj(e_ij) ϖ_j` at every target node.
    fn velocity(&self, omega: &[f64]) -> Vec<Complex64> {
        let n = self.n;
        let pref = Complex64::new(0.0, 1.0 / (4.0 * PI));
        (0..n)
            .map(|i| {
                let row = &self.entries[i * n..(i + 1) * n];
                let acc: Complex64 = row.iter().zip(omega).map(|(e, &o)| e.conj() * o).sum();
                pref * acc
            })
            .collect()
    }

    /// `K_ij = (1/2π) Im(∂t_i e_ij)`: the discretized `T` block.
    fn normal_block(&self, target_tangent: &[Complex64]) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |i, j| (target_tangent[i] * self.entries[i * n + j]).im / (2.0 * PI))
    }

    /// Adjoint-kernel block `K*_ij = −(1/2π) Im(∂s_j e_ij)`, where the table
    /// runs from the adjoint's source to its target.
    fn adjoint_block(&self, source_tangent: &[Complex64]) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |i, j| -(source_tangent[j] * self.entries[i * n + j]).im / (2.0 * PI))
    }
}

/// Principal-value Birkhoff-Rott velocity of a periodic sheet on itself.
pub fn br_self(gamma: &PeriodicCurve, omega: &AmplitudeField) -> Result<VectorField> {
    same_grid(gamma.n(), omega.n())?;
    let table = CotTable::self_interaction(gamma)?;
    VectorField::from_complex(&table.velocity(omega.samples()))
}

/// Velocity induced on `target` by the sheet of amplitude `omega` on `source`.
pub fn br_cross(source: &PeriodicCurve, omega: &AmplitudeField, target: &PeriodicCurve) -> Result<VectorField> {
    same_grid(source.n(), omega.n())?;
    let table = CotTable::cross(source, target)?;
    VectorField::from_complex(&table.velocity(omega.samples()))
}

fn same_grid(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(MuskatError::GridMismatch(a, b));
    }
    Ok(())
}

/// Assembled operators for one `(z, h)` geometry.
///
/// Holds the four cotangent tables and the dense `2N × 2N` matrices of `𝒯`
/// and `𝒯*` acting on mean-zero pairs `(u on z, v on h)`.
#[derive(Clone, Debug)]
pub struct GeometryOperators {
    n: usize,
    zz: CotTable,
    hz: CotTable,
    t_full: DMatrix<f64>,
    t_adjoint: DMatrix<f64>,
}

impl GeometryOperators {
    pub fn new(z: &PeriodicCurve, h: &PeriodicCurve) -> Result<Self> {
        same_grid(z.n(), h.n())?;
        let n = z.n();
        let tz = z.tangent();
        let th = h.tangent();
        let zz = CotTable::self_interaction(z)?;
        let hh = CotTable::self_interaction(h)?;
        let hz = CotTable::cross(h, z)?;
        let zh = CotTable::cross(z, h)?;

        let mut t_full = DMatrix::zeros(2 * n, 2 * n);
        t_full.view_mut((0, 0), (n, n)).copy_from(&zz.normal_block(&tz));
        t_full.view_mut((0, n), (n, n)).copy_from(&hz.normal_block(&tz));
        t_full.view_mut((n, 0), (n, n)).copy_from(&zh.normal_block(&th));
        t_full.view_mut((n, n), (n, n)).copy_from(&hh.normal_block(&th));

        // 𝒯* = (T₁* T₃*; T₂* T₄*), each from its own kernel
        let mut t_adjoint = DMatrix::zeros(2 * n, 2 * n);
        t_adjoint.view_mut((0, 0), (n, n)).copy_from(&zz.adjoint_block(&tz));
        t_adjoint.view_mut((0, n), (n, n)).copy_from(&hz.adjoint_block(&th));
        t_adjoint.view_mut((n, 0), (n, n)).copy_from(&zh.adjoint_block(&tz));
        t_adjoint.view_mut((n, n), (n, n)).copy_from(&hh.adjoint_block(&th));

        project_columns(&mut t_full, n);
        project_rows(&mut t_full, n);
        project_columns(&mut t_adjoint, n);
        project_rows(&mut t_adjoint, n);

        Ok(Self {
            n,
            zz,
            hz,
            t_full,
            t_adjoint,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Matrix of `P𝒯P` with `P` the mean-zero projection on each curve.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.t_full
    }

    /// Matrix of `P𝒯*P`.
    pub fn adjoint_matrix(&self) -> &DMatrix<f64> {
        &self.t_adjoint
    }

    pub fn apply(&self, u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        apply_block(&self.t_full, self.n, u, v)
    }

    pub fn apply_adjoint(&self, u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        apply_block(&self.t_adjoint, self.n, u, v)
    }

    /// `BR(ϖ₁, z)_z + BR(ϖ₂, h)_z` as complex samples on `z`.
    pub fn velocity_on_z(&self, omega1: &[f64], omega2: &[f64]) -> Vec<Complex64> {
        self.zz
            .velocity(omega1)
            .into_iter()
            .zip(self.hz.velocity(omega2))
            .map(|(a, b)| a + b)
            .collect()
    }
}

fn apply_block(m: &DMatrix<f64>, n: usize, u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let x = DVector::from_iterator(2 * n, u.iter().chain(v).copied());
    let y = m * x;
    (y.rows(0, n).iter().copied().collect(), y.rows(n, n).iter().copied().collect())
}

/// Right-multiply by the block mean-zero projection (inputs).
fn project_columns(m: &mut DMatrix<f64>, n: usize) {
    for r in 0..m.nrows() {
        for blk in 0..2 {
            let mean = (0..n).map(|c| m[(r, blk * n + c)]).sum::<f64>() / n as f64;
            for c in 0..n {
                m[(r, blk * n + c)] -= mean;
            }
        }
    }
}

/// Left-multiply by the block mean-zero projection (outputs).
fn project_rows(m: &mut DMatrix<f64>, n: usize) {
    for c in 0..m.ncols() {
        for blk in 0..2 {
            let mean = (0..n).map(|r| m[(blk * n + r, c)]).sum::<f64>() / n as f64;
            for r in 0..n {
                m[(blk * n + r, c)] -= mean;
            }
        }
    }
}

fn to_fields(pair: (Vec<f64>, Vec<f64>)) -> Result<(AmplitudeField, AmplitudeField)> {
    Ok((AmplitudeField::from_samples(pair.0)?, AmplitudeField::from_samples(pair.1)?))
}

/// `(T₁u + T₂v, T₃u + T₄v)` with mean-zero inputs and outputs.
pub fn apply_t(
    z: &PeriodicCurve,
    h: &PeriodicCurve,
    u: &AmplitudeField,
    v: &AmplitudeField,
) -> Result<(AmplitudeField, AmplitudeField)> {
    same_grid(z.n(), u.n())?;
    same_grid(h.n(), v.n())?;
    let ops = GeometryOperators::new(z, h)?;
    to_fields(ops.apply(u.samples(), v.samples()))
}

/// `(T₁*u + T₃*v, T₂*u + T₄*v)` with mean-zero inputs and outputs.
pub fn apply_t_adjoint(
    z: &PeriodicCurve,
    h: &PeriodicCurve,
    u: &AmplitudeField,
    v: &AmplitudeField,
) -> Result<(AmplitudeField, AmplitudeField)> {
    same_grid(z.n(), u.n())?;
    same_grid(h.n(), v.n())?;
    let ops = GeometryOperators::new(z, h)?;
    to_fields(ops.apply_adjoint(u.samples(), v.samples()))
}

/// Outcome of a spectral-radius probe.
#[derive(Clone, Debug, PartialEq)]
pub struct RadiusEstimate {
    pub radius: f64,
    /// Dominant `|λ|` after each iteration.
    pub trace: Vec<f64>,
    pub converged: bool,
}

/// Subspace (block power) iteration for the dominant `|λ|` of `diag(γ₁,γ₂)·𝒯*`.
///
/// A block of [`PROBE_BLOCK`] vectors is iterated and the Ritz values of the
/// projected operator are taken each sweep, so complex-conjugate and `±λ`
/// dominant pairs are resolved.
pub fn spectral_radius_probe(ops: &GeometryOperators, params: &FluidParams, n_probe: usize) -> RadiusEstimate {
    let n = ops.n();
    let dim = 2 * n;
    let mut a = ops.adjoint_matrix().clone();
    for r in 0..dim {
        let g = if r < n { params.gamma1() } else { params.gamma2() };
        a.row_mut(r).scale_mut(g);
    }
    if a.amax() == 0.0 {
        return RadiusEstimate {
            radius: 0.0,
            trace: vec![0.0; n_probe],
            converged: true,
        };
    }
    let p = PROBE_BLOCK.min(dim - 2);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut q = DMatrix::from_fn(dim, p, |_, _| rng.gen_range(-1.0..1.0));
    project_rows(&mut q, n);
    q = q.qr().q();
    let mut trace = Vec::with_capacity(n_probe);
    for _ in 0..n_probe {
        let y = &a * &q;
        let ritz = q.transpose() * &y;
        let est = ritz
            .complex_eigenvalues()
            .iter()
            .fold(0.0_f64, |m, l| m.max(l.norm()));
        trace.push(est);
        if y.amax() == 0.0 {
            break;
        }
        q = y.qr().q();
    }
    let radius = *trace.last().unwrap_or(&0.0);
    let converged = trace.len() >= 2 && (trace[trace.len() - 1] - trace[trace.len() - 2]).abs() <= RADIUS_TOL;
    RadiusEstimate { radius, trace, converged }
}

/// Dominant `|λ|` of `diag(γ₁,γ₂)·𝒯*` after `n_probe` sweeps.
pub fn spectral_radius(z: &PeriodicCurve, h: &PeriodicCurve, params: &FluidParams, n_probe: usize) -> Result<f64> {
    if n_probe < 20 {
        return Err(MuskatError::InvalidParams(format!("n_probe must be at least 20, got {n_probe}")));
    }
    let ops = GeometryOperators::new(z, h)?;
    let est = spectral_radius_probe(&ops, params, n_probe);
    if !est.converged {
        return Err(MuskatError::NoConvergence {
            iterations: n_probe,
            estimate: est.radius,
        });
    }
    Ok(est.radius)
}
