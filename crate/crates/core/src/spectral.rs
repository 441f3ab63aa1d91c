//! Real 2π-periodic scalar fields on a uniform grid and their Fourier-multiplier
//! calculus.
//!
//! Nodes sit at `α_j = −π + 2πj/N`. Coefficients are normalised so that
//! `f(α) = Σ_k f̂(k) e^{ikα}`, i.e. `f̂(k) = (1/N) Σ_j f_j e^{−ikα_j}`, and are
//! stored in FFT order: slot `m` holds wavenumber `m` for `m ≤ N/2` and
//! `m − N` above. The Nyquist slot `N/2` is real for real fields and is
//! treated as the cosine `cos(Nα/2)`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{MuskatError, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn forward_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

fn inverse_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

/// Highest derivative order accepted by [`SpectralScalar::derivative`].
pub const MAX_DERIVATIVE_ORDER: u32 = 6;

/// Grid node `α_j` for an `n`-point grid.
#[inline]
pub fn node(j: usize, n: usize) -> f64 {
    -PI + 2.0 * PI * j as f64 / n as f64
}

/// All grid nodes for an `n`-point grid.
pub fn nodes(n: usize) -> Vec<f64> {
    (0..n).map(|j| node(j, n)).collect()
}

/// Signed wavenumber stored in FFT slot `m`.
#[inline]
pub fn wavenumber(m: usize, n: usize) -> i64 {
    if m <= n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

/// Grid spacing `2π/N`.
#[inline]
pub fn spacing(n: usize) -> f64 {
    2.0 * PI / n as f64
}

pub fn check_grid(n: usize) -> Result<()> {
    if n < 8 || !n.is_multiple_of(2) {
        return Err(MuskatError::InvalidGrid(n));
    }
    Ok(())
}

/// Enforce `f̂(−k) = conj f̂(k)` and a real Nyquist coefficient.
///
/// Idempotent bit-for-bit on already symmetric input.
fn symmetrize(modes: &mut [Complex64]) {
    let n = modes.len();
    modes[0].im = 0.0;
    modes[n / 2].im = 0.0;
    for m in 1..n / 2 {
        let a = modes[m];
        let b = modes[n - m].conj();
        let s = (a + b) * 0.5;
        modes[m] = s;
        modes[n - m] = s.conj();
    }
}

fn samples_to_modes(samples: &[f64]) -> Vec<Complex64> {
    let n = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    forward_plan(n).process(&mut buf);
    let inv_n = 1.0 / n as f64;
    for (m, c) in buf.iter_mut().enumerate() {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        *c *= sign * inv_n;
    }
    symmetrize(&mut buf);
    buf
}

fn modes_to_samples(modes: &[Complex64]) -> Vec<f64> {
    let n = modes.len();
    let mut buf: Vec<Complex64> = modes
        .iter()
        .enumerate()
        .map(|(m, &c)| if m % 2 == 0 { c } else { -c })
        .collect();
    inverse_plan(n).process(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}

/// A real periodic field held simultaneously as grid samples and Fourier modes.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralScalar {
    samples: Vec<f64>,
    modes: Vec<Complex64>,
}

impl SpectralScalar {
    pub fn from_samples(samples: Vec<f64>) -> Result<Self> {
        check_grid(samples.len())?;
        let modes = samples_to_modes(&samples);
        Ok(Self { samples, modes })
    }

    /// Build from coefficients in FFT order. Conjugate symmetry is imposed;
    /// symmetric input is kept verbatim.
    pub fn from_modes(mut modes: Vec<Complex64>) -> Result<Self> {
        check_grid(modes.len())?;
        symmetrize(&mut modes);
        let samples = modes_to_samples(&modes);
        Ok(Self { samples, modes })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        check_grid(n)?;
        Self::from_samples((0..n).map(|j| f(node(j, n))).collect())
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::constant(n, 0.0)
    }

    pub fn constant(n: usize, value: f64) -> Result<Self> {
        check_grid(n)?;
        let mut modes = vec![Complex64::new(0.0, 0.0); n];
        modes[0] = Complex64::new(value, 0.0);
        Ok(Self {
            samples: vec![value; n],
            modes,
        })
    }

    /// Trigonometric polynomial `Σ a_k cos(kα) + b_k sin(kα)`.
    pub fn trig(n: usize, terms: &[(usize, f64, f64)]) -> Result<Self> {
        Self::from_fn(n, |x| {
            terms
                .iter()
                .map(|&(k, a, b)| a * (k as f64 * x).cos() + b * (k as f64 * x).sin())
                .sum()
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.samples.len()
    }

    #[inline]
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    #[inline]
    pub fn modes(&self) -> &[Complex64] {
        &self.modes
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Mean value, i.e. the DC coefficient.
    pub fn mean(&self) -> f64 {
        self.modes[0].re
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|x| x.is_finite())
    }

    fn same_grid(&self, other: &Self) -> Result<()> {
        if self.n() != other.n() {
            return Err(MuskatError::GridMismatch(self.n(), other.n()));
        }
        Ok(())
    }

    /// Pointwise map on the samples.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let samples = self.samples.iter().map(|&x| f(x)).collect();
        Self::from_samples(samples).expect("grid already validated")
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.same_grid(other)?;
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::from_samples(samples)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|x| s * x)
    }

    /// `f − mean(f)`.
    pub fn mean_free(&self) -> Self {
        let mut modes = self.modes.clone();
        modes[0] = Complex64::new(0.0, 0.0);
        Self::from_modes(modes).expect("grid already validated")
    }

    /// Apply a Fourier multiplier given as a function of the signed wavenumber.
    /// The Nyquist slot is zeroed when `zero_nyquist` is set.
    pub fn apply_multiplier(&self, symbol: impl Fn(i64) -> Complex64, zero_nyquist: bool) -> Self {
        let n = self.n();
        let modes = self
            .modes
            .iter()
            .enumerate()
            .map(|(m, &c)| {
                if zero_nyquist && m == n / 2 {
                    Complex64::new(0.0, 0.0)
                } else {
                    c * symbol(wavenumber(m, n))
                }
            })
            .collect();
        Self::from_modes(modes).expect("grid already validated")
    }

    /// `∂_α^order f`, order in `1..=6`.
    pub fn derivative(&self, order: u32) -> Result<Self> {
        if order == 0 || order > MAX_DERIVATIVE_ORDER {
            return Err(MuskatError::OrderOutOfRange(order));
        }
        Ok(self.derivative_any(order))
    }

    /// Derivative of arbitrary order (0 is the identity).
    pub(crate) fn derivative_any(&self, order: u32) -> Self {
        if order == 0 {
            return self.clone();
        }
        let ik_pow = |k: i64| Complex64::new(0.0, k as f64).powu(order);
        self.apply_multiplier(ik_pow, order % 2 == 1)
    }

    /// Periodic Hilbert transform, symbol `−i·sign(k)`.
    pub fn hilbert(&self) -> Self {
        self.apply_multiplier(|k| Complex64::new(0.0, -(k.signum() as f64)), true)
    }

    /// `Λ^s`, symbol `|k|^s` with `s ∈ [0, 1]`.
    pub fn fractional_laplacian(&self, s: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) {
            return Err(MuskatError::ExponentOutOfRange(s));
        }
        Ok(self.apply_multiplier(
            |k| {
                if k == 0 {
                    // 0^0 = 1 keeps Λ^0 the identity
                    Complex64::new(if s == 0.0 { 1.0 } else { 0.0 }, 0.0)
                } else {
                    Complex64::new((k.unsigned_abs() as f64).powf(s), 0.0)
                }
            },
            false,
        ))
    }

    /// `Λ = |k|`.
    pub fn lambda(&self) -> Self {
        self.apply_multiplier(|k| Complex64::new(k.unsigned_abs() as f64, 0.0), false)
    }

    /// Spectral mollifier with symbol `exp(−(εk)⁴)`.
    pub fn mollify(&self, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(MuskatError::InvalidMollifier(eps));
        }
        Ok(self.apply_multiplier(|k| Complex64::new(mollifier_symbol(eps, k), 0.0), false))
    }

    /// Mean-free antiderivative: symbol `1/(ik)` off zero, DC and Nyquist dropped.
    pub fn antiderivative(&self) -> Self {
        self.apply_multiplier(
            |k| {
                if k == 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, -1.0 / k as f64)
                }
            },
            true,
        )
    }

    /// `(Σ_j (1+j²)^k |f̂(j)|² · 2π)^{1/2}`.
    pub fn sobolev_norm(&self, k: u32) -> f64 {
        let n = self.n();
        let sum: f64 = self
            .modes
            .iter()
            .enumerate()
            .map(|(m, c)| {
                let j = wavenumber(m, n) as f64;
                (1.0 + j * j).powi(k as i32) * c.norm_sqr()
            })
            .sum();
        (2.0 * PI * sum).sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(0)
    }

    /// Grid quadrature `∫_T f g dα`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.same_grid(other)?;
        Ok(spacing(self.n())
            * self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a * b)
                .sum::<f64>())
    }

    /// Trapezoidal `∫_T f dα`.
    pub fn integral(&self) -> f64 {
        spacing(self.n()) * self.samples.iter().sum::<f64>()
    }

    /// Band-limited interpolant evaluated at an arbitrary point.
    pub fn eval_at(&self, x: f64) -> f64 {
        let n = self.n();
        let mut acc = self.modes[0].re;
        for m in 1..n / 2 {
            let k = m as f64;
            let (s, c) = (k * x).sin_cos();
            // 2 Re(f̂(k) e^{ikx})
            acc += 2.0 * (self.modes[m].re * c - self.modes[m].im * s);
        }
        acc + self.modes[n / 2].re * (0.5 * n as f64 * x).cos()
    }

    /// Spectral interpolation onto a finer (or equal) grid by zero padding.
    pub fn refine(&self, n_new: usize) -> Result<Self> {
        check_grid(n_new)?;
        let n = self.n();
        if n_new < n {
            return Err(MuskatError::GridMismatch(n, n_new));
        }
        let mut modes = vec![Complex64::new(0.0, 0.0); n_new];
        for m in 0..n {
            let k = wavenumber(m, n);
            if k.unsigned_abs() as usize == n / 2 && n_new > n {
                // split the real Nyquist cosine between ±N/2
                modes[n / 2] += self.modes[m] * 0.5;
                modes[n_new - n / 2] += self.modes[m] * 0.5;
                continue;
            }
            let slot = if k >= 0 { k as usize } else { (n_new as i64 + k) as usize };
            modes[slot] = self.modes[m];
        }
        Self::from_modes(modes)
    }
}

/// Mollifier symbol `m(εk) = exp(−(εk)⁴)`.
#[inline]
pub fn mollifier_symbol(eps: f64, k: i64) -> f64 {
    let x = eps * k as f64;
    (-(x * x) * (x * x)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn max_diff(a: &SpectralScalar, b: &SpectralScalar) -> f64 {
        a.samples()
            .iter()
            .zip(b.samples())
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
    }

    fn random_trig(rng: &mut ChaCha8Rng, n: usize, degree: usize) -> SpectralScalar {
        let terms: Vec<_> = (0..=degree)
            .map(|k| (k, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        SpectralScalar::trig(n, &terms).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert_eq!(
            SpectralScalar::from_samples(vec![0.0; 7]).unwrap_err(),
            MuskatError::InvalidGrid(7)
        );
        assert!(SpectralScalar::zeros(6).is_err());
        assert!(SpectralScalar::zeros(8).is_ok());
    }

    #[test]
    fn derivative_examples() {
        let n = 32;
        let f = SpectralScalar::trig(n, &[(3, 1.0, 0.0)]).unwrap();
        let expect = SpectralScalar::trig(n, &[(3, 0.0, -3.0)]).unwrap();
        assert!(max_diff(&f.derivative(1).unwrap(), &expect) < 1e-12);

        let c = SpectralScalar::constant(n, 2.5).unwrap();
        for order in 1..=6 {
            assert!(c.derivative(order).unwrap().max_abs() < 1e-14);
        }

        let cos1 = SpectralScalar::trig(n, &[(1, 1.0, 0.0)]).unwrap();
        assert!(max_diff(&cos1.derivative(2).unwrap(), &cos1.scale(-1.0)) < 1e-13);

        assert_eq!(f.derivative(0).unwrap_err(), MuskatError::OrderOutOfRange(0));
        assert_eq!(f.derivative(7).unwrap_err(), MuskatError::OrderOutOfRange(7));
    }

    #[test]
    fn odd_derivative_drops_nyquist() {
        let n = 16;
        let f = SpectralScalar::from_fn(n, |x| (8.0 * x).cos()).unwrap();
        assert!(f.derivative(1).unwrap().max_abs() < 1e-12);
        assert!(f.hilbert().max_abs() < 1e-12);
        // even orders keep it: ∂² cos(8α) = −64 cos(8α)
        let d2 = f.derivative(2).unwrap();
        assert!(max_diff(&d2, &f.scale(-64.0)) < 1e-10);
    }

    #[test]
    fn hilbert_examples() {
        let n = 64;
        for k in 1..10 {
            let f = SpectralScalar::trig(n, &[(k, 1.0, 0.0)]).unwrap();
            let s = SpectralScalar::trig(n, &[(k, 0.0, 1.0)]).unwrap();
            assert!(max_diff(&f.hilbert(), &s) < 1e-13);
        }
        assert!(SpectralScalar::constant(n, 3.0).unwrap().hilbert().max_abs() < 1e-15);
    }

    #[test]
    fn fractional_laplacian_examples() {
        let n = 64;
        let f = SpectralScalar::trig(n, &[(5, 1.0, 0.0)]).unwrap();
        let got = f.fractional_laplacian(1.0).unwrap();
        assert!(max_diff(&got, &f.scale(5.0)) < 1e-12);
        let half = f.fractional_laplacian(0.5).unwrap();
        assert!(max_diff(&half, &f.scale(5f64.sqrt())) < 1e-12);
        assert!(max_diff(&f.fractional_laplacian(0.0).unwrap(), &f) < 1e-14);
        assert!(f.fractional_laplacian(1.5).is_err());
        assert!(f.fractional_laplacian(-0.1).is_err());
    }

    #[test]
    fn mollify_examples() {
        let n = 64;
        let c = SpectralScalar::constant(n, 1.75).unwrap();
        assert!(max_diff(&c.mollify(0.3).unwrap(), &c) < 1e-15);

        let eps = 0.1;
        for k in [1usize, 4, 9] {
            let f = SpectralScalar::trig(n, &[(k, 1.0, 0.0)]).unwrap();
            let expect = f.scale((-(eps * k as f64).powi(4)).exp());
            assert!(max_diff(&f.mollify(eps).unwrap(), &expect) < 1e-14);
        }

        // even input stays even
        let even = SpectralScalar::trig(n, &[(1, 0.3, 0.0), (2, -0.2, 0.0), (7, 0.1, 0.0)]).unwrap();
        let m = even.mollify(0.2).unwrap();
        for j in 1..n / 2 {
            assert!((m.samples()[j] - m.samples()[n - j]).abs() < 1e-14);
        }
        assert!(m.modes().iter().all(|c| c.im.abs() < 1e-15));
        assert!(c.mollify(0.0).is_err());
    }

    #[test]
    fn sobolev_examples() {
        let n = 32;
        assert_eq!(SpectralScalar::zeros(n).unwrap().sobolev_norm(3), 0.0);
        let cos1 = SpectralScalar::trig(n, &[(1, 1.0, 0.0)]).unwrap();
        assert!((cos1.sobolev_norm(0) - PI.sqrt()).abs() < 1e-13);
        // Plancherel: (1+1)·(|1/2|² + |1/2|²)·2π = 2π
        let oracle: f64 = [0.5_f64, 0.5].iter().map(|c| 2.0 * c * c).sum::<f64>() * 2.0 * PI;
        assert!((cos1.sobolev_norm(1) - oracle.sqrt()).abs() < 1e-13);
        assert!((cos1.sobolev_norm(1) - (2.0 * PI).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn eval_and_refine_interpolate() {
        let f = SpectralScalar::trig(16, &[(1, 0.4, -0.2), (3, 0.1, 0.05), (8, 0.3, 0.0)]).unwrap();
        let exact = |x: f64| 0.4 * x.cos() - 0.2 * x.sin() + 0.1 * (3.0 * x).cos() + 0.05 * (3.0 * x).sin() + 0.3 * (8.0 * x).cos();
        for x in [-3.0, -1.234, 0.0, 0.77, 2.9] {
            assert!((f.eval_at(x) - exact(x)).abs() < 1e-13);
        }
        let g = f.refine(64).unwrap();
        for (j, s) in g.samples().iter().enumerate() {
            assert!((s - f.eval_at(node(j, 64))).abs() < 1e-13);
        }
    }

    #[test]
    fn operator_identities_on_random_polynomials() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 64;
        for _ in 0..20 {
            let f = random_trig(&mut rng, n, 15);
            let scale = f.max_abs().max(1.0);
            let hh = f.hilbert().hilbert();
            assert!(max_diff(&hh, &f.mean_free().scale(-1.0)) < 1e-12 * scale);
            let dh = f.hilbert().derivative(1).unwrap();
            assert!(max_diff(&dh, &f.fractional_laplacian(1.0).unwrap()) < 1e-12 * scale * 16.0);
            let lh = f.hilbert().fractional_laplacian(1.0).unwrap();
            assert!(max_diff(&lh, &f.derivative(1).unwrap().scale(-1.0)) < 1e-12 * scale * 16.0);
        }
    }

    #[test]
    fn pointwise_lambda_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 64;
        for _ in 0..100 {
            let f = random_trig(&mut rng, n, n / 4);
            let lhs = f.mul(&f.lambda()).unwrap().sub(&f.mul(&f).unwrap().lambda().scale(0.5)).unwrap();
            let h1 = f.sobolev_norm(1);
            assert!(lhs.min() >= -1e-10 * h1 * h1, "min {}", lhs.min());
        }
    }

    proptest! {
        #[test]
        fn round_trip_and_parseval(values in proptest::collection::vec(-10.0f64..10.0, 32)) {
            let f = SpectralScalar::from_samples(values.clone()).unwrap();
            let back = SpectralScalar::from_modes(f.modes().to_vec()).unwrap();
            let scale = values.iter().fold(1e-300_f64, |m, x| m.max(x.abs()));
            for (a, b) in back.samples().iter().zip(&values) {
                prop_assert!((a - b).abs() <= 1e-12 * scale);
            }
            // reload from modes is bit-exact on the coefficients
            prop_assert_eq!(back.modes(), f.modes());
            let quad = f.inner(&f).unwrap();
            let norm2 = f.sobolev_norm(0).powi(2);
            prop_assert!((quad - norm2).abs() <= 1e-10 * quad.max(1e-300));
        }

        #[test]
        fn sobolev_monotone_in_order(values in proptest::collection::vec(-1.0f64..1.0, 16)) {
            let f = SpectralScalar::from_samples(values).unwrap();
            for k in 0..5 {
                prop_assert!(f.sobolev_norm(k) <= f.sobolev_norm(k + 1) + 1e-12);
            }
        }
    }
}
