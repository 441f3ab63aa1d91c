#![allow(dead_code)]

use std::f64::consts::PI;

use muskat::{FluidParams, PeriodicCurve, SpectralScalar};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Curve given by trigonometric coefficients, buildable on any grid.
#[derive(Clone, Debug)]
pub struct CurveCoeffs {
    pub height: f64,
    pub p1: Vec<(usize, f64, f64)>,
    pub p2: Vec<(usize, f64, f64)>,
}

impl CurveCoeffs {
    pub fn flat(height: f64) -> Self {
        Self { height, p1: vec![], p2: vec![] }
    }

    pub fn build(&self, n: usize) -> PeriodicCurve {
        let p1 = SpectralScalar::trig(n, &self.p1).unwrap();
        let p2 = SpectralScalar::trig(n, &self.p2).unwrap().map(|y| y + self.height);
        PeriodicCurve::new(p1, p2).unwrap()
    }

    pub fn eval(&self, alpha: f64) -> (f64, f64) {
        let s = |t: &[(usize, f64, f64)]| -> f64 {
            t.iter()
                .map(|&(k, a, b)| a * (k as f64 * alpha).cos() + b * (k as f64 * alpha).sin())
                .sum()
        };
        (alpha + s(&self.p1), self.height + s(&self.p2))
    }

    pub fn eval_tangent(&self, alpha: f64) -> (f64, f64) {
        let s = |t: &[(usize, f64, f64)]| -> f64 {
            t.iter()
                .map(|&(k, a, b)| {
                    let k = k as f64;
                    k * (-a * (k * alpha).sin() + b * (k * alpha).cos())
                })
                .sum()
        };
        (1.0 + s(&self.p1), s(&self.p2))
    }
}

fn random_terms(rng: &mut ChaCha8Rng, max_mode: usize, amp: f64) -> Vec<(usize, f64, f64)> {
    (1..=max_mode)
        .map(|k| {
            let decay = amp / (k * k) as f64;
            (k, rng.gen_range(-decay..decay), rng.gen_range(-decay..decay))
        })
        .collect()
}

/// Random smooth pair with arc-chord ≤ 3 and curve distance ≥ 0.5.
pub fn random_pair(rng: &mut ChaCha8Rng, n: usize, max_mode: usize) -> (CurveCoeffs, CurveCoeffs) {
    loop {
        let z = CurveCoeffs {
            height: 0.0,
            p1: random_terms(rng, max_mode, 0.1),
            p2: random_terms(rng, max_mode, 0.8),
        };
        let h = CurveCoeffs {
            height: -rng.gen_range(0.6..1.6),
            p1: random_terms(rng, max_mode, 0.1),
            p2: random_terms(rng, max_mode, 0.3),
        };
        let (zc, hc) = (z.build(n), h.build(n));
        let ok = zc.arc_chord_norm().map(|a| a <= 3.0).unwrap_or(false)
            && hc.arc_chord_norm().map(|a| a <= 3.0).unwrap_or(false)
            && zc.min_distance(&hc).map(|d| d >= 0.5).unwrap_or(false);
        if ok {
            return (z, h);
        }
    }
}

pub fn random_gammas(rng: &mut ChaCha8Rng, bound: f64) -> FluidParams {
    params_from_gammas(rng.gen_range(-bound..bound), rng.gen_range(-bound..bound), 1.0)
}

/// Parameters with the requested `γ₁`, `γ₂` and density jump `ρ² − ρ¹ = drho`.
pub fn params_from_gammas(g1: f64, g2: f64, drho: f64) -> FluidParams {
    // γ = (b − a)/(a + b) with a + b = 2
    FluidParams::new(1.0 - g1, 1.0 + g1, 1.0 + g2, 1.0 - g2, 0.0, drho, 1.0).unwrap()
}

pub fn random_mean_free(rng: &mut ChaCha8Rng, n: usize, max_mode: usize) -> Vec<f64> {
    let terms: Vec<_> = (1..=max_mode)
        .map(|k| (k, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    SpectralScalar::trig(n, &terms).unwrap().into_samples()
}

pub fn cos_samples(n: usize, k: usize) -> Vec<f64> {
    (0..n).map(|j| (k as f64 * muskat::spectral::node(j, n)).cos()).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

pub fn quad_dot(a: &[f64], b: &[f64]) -> f64 {
    2.0 * PI / a.len() as f64 * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

/// Cosine amplitude of mode `k` in a field.
pub fn cos_amplitude(f: &SpectralScalar, k: usize) -> f64 {
    2.0 * f.modes()[k].re
}
