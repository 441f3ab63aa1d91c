//! Vorticity amplitudes on the interface and on the permeability-jump curve.
//!
//! The amplitudes solve the coupled second-kind system
//!
//! ```text
//! ϖ₁ = −γ₁ T₁ϖ₁ − γ₁ T₂ϖ₂ − N ∂_α z₂
//! ϖ₂ = −γ₂ T₃ϖ₁ − γ₂ T₄ϖ₂
//! ```
//!
//! which is solved by fixed-point (Neumann) iteration; a dense LU solve of the
//! same collocation system is kept for verification on small grids.

use nalgebra::{DMatrix, DVector};

use crate::brkernels::{AmplitudeField, GeometryOperators};
use crate::curves::{FluidParams, PeriodicCurve};
use crate::error::{MuskatError, Result};
use crate::spectral::{spacing, SpectralScalar};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 500;
/// Largest grid accepted by [`solve_dense`].
pub const DENSE_MAX_N: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub struct VorticityPair {
    pub omega1: AmplitudeField,
    pub omega2: AmplitudeField,
}

impl VorticityPair {
    pub fn zeros(n: usize) -> Result<Self> {
        Ok(Self {
            omega1: AmplitudeField::zeros(n)?,
            omega2: AmplitudeField::zeros(n)?,
        })
    }

    fn from_parts(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        Ok(Self {
            omega1: AmplitudeField::from_samples(a)?,
            omega2: AmplitudeField::from_samples(b)?,
        })
    }
}

/// Diagnostics of one fixed-point solve.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub solution: VorticityPair,
    pub iterations: usize,
    /// Relative L² update after each iteration.
    pub updates: Vec<f64>,
    /// `‖ϖ + M𝒯ϖ − forcing‖_{L²}` of the returned iterate (mollified form when
    /// a mollifier is active).
    pub residual: f64,
    pub forcing_norm: f64,
}

/// `(−N ∂_α z₂, 0)`.
pub fn forcing(z: &PeriodicCurve, params: &FluidParams) -> Result<(AmplitudeField, AmplitudeField)> {
    let big_n = params.big_n();
    let f1 = z.p2().derivative_any(1).scale(-big_n);
    Ok((AmplitudeField::new(f1), AmplitudeField::zeros(z.n())?))
}

fn l2(a: &[f64], b: &[f64], h: f64) -> f64 {
    (h * a.iter().chain(b).map(|x| x * x).sum::<f64>()).sqrt()
}

fn mollify_twice(x: Vec<f64>, eps: f64) -> Result<Vec<f64>> {
    let f = SpectralScalar::from_samples(x)?;
    Ok(f.mollify(eps)?.mollify(eps)?.into_samples())
}

/// `x ↦ −diag(γ₁,γ₂)·𝒯x + f`, optionally followed by `φ_ε∗φ_ε∗`.
fn fixed_point_map(
    ops: &GeometryOperators,
    params: &FluidParams,
    x: (&[f64], &[f64]),
    f: (&[f64], &[f64]),
    eps: Option<f64>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (t1, t2) = ops.apply(x.0, x.1);
    let (g1, g2) = (params.gamma1(), params.gamma2());
    let mut a: Vec<f64> = t1.iter().zip(f.0).map(|(t, fi)| -g1 * t + fi).collect();
    let mut b: Vec<f64> = t2.iter().zip(f.1).map(|(t, fi)| -g2 * t + fi).collect();
    if let Some(eps) = eps {
        a = mollify_twice(a, eps)?;
        b = mollify_twice(b, eps)?;
    }
    Ok((a, b))
}

/// Fixed-point solve on pre-assembled operators.
///
/// Starts from the forcing and stops when the relative L² update falls below
/// `tol`. With `eps = Some(ε)` the whole right-hand side is mollified twice
/// before each update.
pub fn solve_with_operators(
    ops: &GeometryOperators,
    params: &FluidParams,
    forcing: (&AmplitudeField, &AmplitudeField),
    tol: f64,
    max_iter: usize,
    eps: Option<f64>,
) -> Result<SolveReport> {
    if !(tol > 0.0) {
        return Err(MuskatError::InvalidParams(format!("tolerance must be positive, got {tol}")));
    }
    params.validate()?;
    let n = ops.n();
    let h = spacing(n);
    let f = (forcing.0.samples(), forcing.1.samples());
    let forcing_norm = l2(f.0, f.1, h);
    if forcing_norm == 0.0 {
        return Ok(SolveReport {
            solution: VorticityPair::zeros(n)?,
            iterations: 0,
            updates: Vec::new(),
            residual: 0.0,
            forcing_norm,
        });
    }
    let mut x = match eps {
        Some(e) => (mollify_twice(f.0.to_vec(), e)?, mollify_twice(f.1.to_vec(), e)?),
        None => (f.0.to_vec(), f.1.to_vec()),
    };
    let mut updates = Vec::new();
    for it in 1..=max_iter {
        let next = fixed_point_map(ops, params, (&x.0, &x.1), f, eps)?;
        let diff_a: Vec<f64> = next.0.iter().zip(&x.0).map(|(a, b)| a - b).collect();
        let diff_b: Vec<f64> = next.1.iter().zip(&x.1).map(|(a, b)| a - b).collect();
        let update = l2(&diff_a, &diff_b, h) / l2(&next.0, &next.1, h).max(f64::MIN_POSITIVE);
        x = next;
        updates.push(update);
        if !update.is_finite() {
            break;
        }
        if update < tol {
            let image = fixed_point_map(ops, params, (&x.0, &x.1), f, eps)?;
            let ra: Vec<f64> = x.0.iter().zip(&image.0).map(|(a, b)| a - b).collect();
            let rb: Vec<f64> = x.1.iter().zip(&image.1).map(|(a, b)| a - b).collect();
            return Ok(SolveReport {
                solution: VorticityPair::from_parts(x.0, x.1)?,
                iterations: it,
                updates,
                residual: l2(&ra, &rb, h),
                forcing_norm,
            });
        }
    }
    Err(MuskatError::NoConvergence {
        iterations: updates.len(),
        estimate: *updates.last().unwrap_or(&f64::NAN),
    })
}

/// Solve for `(ϖ₁, ϖ₂)` on the geometry `(z, h)`.
pub fn solve_vorticity(
    z: &PeriodicCurve,
    h: &PeriodicCurve,
    params: &FluidParams,
    tol: f64,
    max_iter: usize,
) -> Result<VorticityPair> {
    let (f1, f2) = forcing(z, params)?;
    if f1.l2_norm() == 0.0 {
        return VorticityPair::zeros(z.n());
    }
    let ops = GeometryOperators::new(z, h)?;
    Ok(solve_with_operators(&ops, params, (&f1, &f2), tol, max_iter, None)?.solution)
}

/// Dense LU solve of `(I + diag(γ₁,γ₂)𝒯)ϖ = forcing` (verification mode).
pub fn solve_dense(
    ops: &GeometryOperators,
    params: &FluidParams,
    forcing: (&AmplitudeField, &AmplitudeField),
) -> Result<VorticityPair> {
    let n = ops.n();
    if n > DENSE_MAX_N {
        return Err(MuskatError::InvalidParams(format!(
            "dense verification solve limited to N <= {DENSE_MAX_N}, got {n}"
        )));
    }
    let mut a = ops.matrix().clone();
    for r in 0..2 * n {
        let g = if r < n { params.gamma1() } else { params.gamma2() };
        a.row_mut(r).scale_mut(g);
    }
    a += DMatrix::<f64>::identity(2 * n, 2 * n);
    let rhs = DVector::from_iterator(2 * n, forcing.0.samples().iter().chain(forcing.1.samples()).copied());
    let x = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| MuskatError::InvalidParams("singular collocation matrix".into()))?;
    VorticityPair::from_parts(x.rows(0, n).iter().copied().collect(), x.rows(n, n).iter().copied().collect())
}
