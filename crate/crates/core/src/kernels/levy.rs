//! Lévy measures `ν(F) = ∫ F(g(z)) k(z) |z|^{-d-α} dz` and their moments.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use super::Kernel;
use crate::quadrature::{gauss_legendre, log_cells};

pub type IntensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type MapFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Push-forward of the thinned stable measure through an optional jump map.
#[derive(Clone)]
pub struct LevyMeasure {
    dim: usize,
    alpha: f64,
    intensity: IntensityFn,
    map: Option<MapFn>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentReport {
    /// `max_a a^{α-2} ∫_{|w|≤a} |w|² ν(dw)`.
    pub upper: f64,
    /// `min_{a, ξ} a^{α-2} ∫_{|w|≤a} |⟨ξ, w⟩|² ν(dw)`.
    pub lower: f64,
    pub scales: Vec<f64>,
}

impl LevyMeasure {
    pub fn new(dim: usize, alpha: f64, intensity: IntensityFn, map: Option<MapFn>) -> Self {
        Self {
            dim,
            alpha,
            intensity,
            map,
        }
    }

    /// `κ(x, ·)` weighted stable measure at a fixed point.
    pub fn from_kernel(k: &Kernel, x: &[f64]) -> Self {
        let k = k.clone();
        let x = x.to_vec();
        let dim = k.dim();
        let alpha = k.alpha();
        Self::new(dim, alpha, Arc::new(move |z| k.eval(&x, z)), None)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `∫ F(w) ν(dw)` over `ρ ∈ [lo, hi]` in the `z` variable.
    fn integrate(&self, lo: f64, hi: f64, f: impl Fn(&[f64]) -> f64 + Copy) -> f64 {
        let rule = gauss_legendre(8);
        let dirs: Vec<([f64; 2], f64)> = if self.dim == 1 {
            vec![([1.0, 0.0], 1.0), ([-1.0, 0.0], 1.0)]
        } else {
            let n = 256;
            let w = 2.0 * PI / n as f64;
            (0..n)
                .map(|k| {
                    let t = (k as f64 + 0.5) * w;
                    ([t.cos(), t.sin()], w)
                })
                .collect()
        };
        let d = self.dim;
        let mut z = [0.0f64; 2];
        let mut w = [0.0f64; 2];
        let mut total = 0.0;
        for (a, b) in log_cells(lo, hi, 2f64.powf(0.125)) {
            let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
            for (x, wx) in rule.0.iter().zip(&rule.1) {
                let rho = m + h * x;
                let radial = h * wx * rho.powf(-1.0 - self.alpha);
                for (om, wo) in &dirs {
                    z[0] = rho * om[0];
                    z[1] = rho * om[1];
                    let k = (self.intensity)(&z[..d]);
                    if k == 0.0 {
                        continue;
                    }
                    match &self.map {
                        Some(g) => g(&z[..d], &mut w[..d]),
                        None => w[..d].copy_from_slice(&z[..d]),
                    }
                    total += radial * wo * k * f(&w[..d]);
                }
            }
        }
        total
    }

    /// `∫_{|w| ≤ a} |w|² ν(dw)`, assuming `|g(z)| ≥ |z|/4`.
    pub fn small_moment(&self, a: f64) -> f64 {
        let f = |w: &[f64]| {
            let r2: f64 = w.iter().map(|v| v * v).sum();
            if r2 <= a * a {
                r2
            } else {
                0.0
            }
        };
        self.integrate(a * 1e-9, a, f) + self.integrate(a, 4.0 * a, f)
    }

    /// `∫_{|w| ≤ a} |⟨ξ, w⟩|² ν(dw)`.
    pub fn directional_moment(&self, a: f64, xi: &[f64]) -> f64 {
        let f = |w: &[f64]| {
            let r2: f64 = w.iter().map(|v| v * v).sum();
            if r2 <= a * a {
                let dot: f64 = w.iter().zip(xi).map(|(p, q)| p * q).sum();
                dot * dot
            } else {
                0.0
            }
        };
        self.integrate(a * 1e-9, a, f) + self.integrate(a, 4.0 * a, f)
    }

    /// `∫_{|w| ≥ 1} |w|^p ν(dw)` for `p < α`, truncated at `|z| = 1e8`.
    pub fn large_moment(&self, p: f64) -> f64 {
        let f = |w: &[f64]| {
            let r: f64 = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if r >= 1.0 {
                r.powf(p)
            } else {
                0.0
            }
        };
        self.integrate(0.25, 1.0, f) + self.integrate(1.0, 1e8, f)
    }

    /// Scale-normalised small-jump moments over `a = 2^{-k}`, `k = 0..levels`.
    pub fn check_moments(&self, levels: usize) -> MomentReport {
        let dirs: Vec<Vec<f64>> = if self.dim == 1 {
            vec![vec![1.0]]
        } else {
            (0..8)
                .map(|k| {
                    let t = PI * k as f64 / 8.0;
                    vec![t.cos(), t.sin()]
                })
                .collect()
        };
        let mut upper = 0.0f64;
        let mut lower = f64::INFINITY;
        let mut scales = Vec::new();
        for k in 0..levels {
            let a = 2f64.powi(-(k as i32));
            let norm = a.powf(self.alpha - 2.0);
            upper = upper.max(self.small_moment(a) * norm);
            for xi in &dirs {
                lower = lower.min(self.directional_moment(a, xi) * norm);
            }
            scales.push(a);
        }
        MomentReport {
            upper,
            lower,
            scales,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isotropic_small_moment_matches_closed_form() {
        // ∫_{|z|≤a} |z|² |z|^{-1-α} dz = 2 a^{2-α} / (2-α) in 1D
        let k = Kernel::constant(1, 1.5, 1.0).unwrap();
        let nu = LevyMeasure::from_kernel(&k, &[0.0]);
        for a in [1.0f64, 0.25] {
            let exact = 2.0 * a.powf(0.5) / 0.5;
            assert!((nu.small_moment(a) - exact).abs() < 1e-3 * exact);
        }
        let rep = nu.check_moments(4);
        assert!((rep.upper - 4.0).abs() < 1e-2 && (rep.lower - 4.0).abs() < 1e-2);
    }

    #[test]
    fn large_moment_closed_form() {
        // 2 ∫_1^∞ ρ^{p-1-α} dρ = 2 / (α - p)
        let k = Kernel::constant(1, 1.5, 1.0).unwrap();
        let nu = LevyMeasure::from_kernel(&k, &[0.0]);
        assert!((nu.large_moment(0.5) - 2.0).abs() < 1e-3);
    }
}
