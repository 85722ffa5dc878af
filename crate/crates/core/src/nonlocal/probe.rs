//! Empirical frequency-localized maximum principle.
//!
//! For `u` with spectrum in `R·C = {R/2 < |ξ| < 3R/2}` and `x*` a global
//! extremum, the probe reports `sgn(u(x*)) (−ℒu(x*)) / (Λ R^α ‖u‖_∞)` with
//! `Λ = Λ1 / (2 c_d)`.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use super::symbol::{frozen_symbol, SymbolSpec};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, TorusGrid, TrigInterpolant};
use crate::kernels::{ball_constant, Kernel};
use crate::rng::{standard_normal, stream, AUX};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProbeSettings {
    pub trials: usize,
    /// Number of Fourier modes per test function.
    pub modes: usize,
    pub seed: u64,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        Self {
            trials: 100,
            modes: 6,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeReport {
    pub r: f64,
    pub c_hat: f64,
    pub values: Vec<f64>,
}

fn in_annulus(norm: f64, r: f64) -> bool {
    norm > 0.5 * r * (1.0 + 1e-12) && norm < 1.5 * r * (1.0 - 1e-12)
}

/// Random `u = Σ a_m cos(ξ_m·x + φ_m)` with every `ξ_m` strictly inside `R·C`.
pub fn annulus_test_function<G: Rng + ?Sized>(
    grid: &TorusGrid,
    r: f64,
    modes: usize,
    rng: &mut G,
) -> Result<GridFunction> {
    let candidates: Vec<[f64; 2]> = (0..grid.len())
        .map(|i| grid.frequency(i))
        .filter(|xi| {
            let upper = xi[1] > 0.0 || (xi[1] == 0.0 && xi[0] > 0.0);
            let norm = xi[0].hypot(xi[1]);
            upper && in_annulus(norm, r) && norm < grid.nyquist()
        })
        .collect();
    if candidates.is_empty() {
        return Err(Error::PreconditionViolated(format!(
            "no grid frequency inside the annulus of scale {r}"
        )));
    }
    let terms: Vec<([f64; 2], f64, f64)> = (0..modes.max(1))
        .map(|_| {
            let xi = candidates[rng.random_range(0..candidates.len())];
            let a = standard_normal(rng);
            let ph = rng.random_range(0.0..std::f64::consts::TAU);
            (xi, a, ph)
        })
        .collect();
    Ok(GridFunction::from_fn(*grid, |x| {
        terms
            .iter()
            .map(|(xi, a, ph)| {
                let dot = xi[0] * x[0] + if x.len() > 1 { xi[1] * x[1] } else { 0.0 };
                a * (dot + ph).cos()
            })
            .sum()
    }))
}

/// Newton ascent of `|u|` from a grid point; returns the better of the two.
fn refine_extremum(u: &TrigInterpolant, x0: [f64; 2], h: f64, d: usize) -> [f64; 2] {
    let mut x = x0;
    for _ in 0..40 {
        let g = u.gradient(&x[..d]);
        let hs = u.hessian(&x[..d]);
        let step = if d == 1 {
            if hs[0][0] == 0.0 {
                break;
            }
            [g[0] / hs[0][0], 0.0]
        } else {
            let det = hs[0][0] * hs[1][1] - hs[0][1] * hs[1][0];
            if det == 0.0 {
                break;
            }
            [
                (hs[1][1] * g[0] - hs[0][1] * g[1]) / det,
                (-hs[1][0] * g[0] + hs[0][0] * g[1]) / det,
            ]
        };
        let len = step[0].hypot(step[1]);
        if len > h {
            break;
        }
        x[0] -= step[0];
        x[1] -= step[1];
        if len < 1e-15 {
            break;
        }
    }
    let moved = (x[0] - x0[0]).hypot(x[1] - x0[1]);
    if moved <= h && u.eval(&x[..d]).abs() >= u.eval(&x0[..d]).abs() {
        x
    } else {
        x0
    }
}

/// `sgn(u(x*)) (−ℒu(x*)) / (Λ R^α ‖u‖_∞)`, minimised over tied maxima.
pub fn probe_value(k: &Kernel, u: &GridFunction, r: f64) -> Result<f64> {
    let grid = u.grid();
    if k.dim() != grid.dim() {
        return Err(Error::GridMismatch);
    }
    let d = grid.dim();
    let interp = TrigInterpolant::new(u);
    let peak = interp
        .modes()
        .iter()
        .fold(0.0f64, |m, (_, c)| m.max(c.norm()));
    if peak == 0.0 {
        return Err(Error::PreconditionViolated("test function is zero".into()));
    }
    for (xi, c) in interp.modes() {
        if c.norm() > 1e-10 * peak && !in_annulus(xi[0].hypot(xi[1]), r) {
            return Err(Error::PreconditionViolated(format!(
                "spectrum at |ξ| = {} leaves the annulus ({}, {})",
                xi[0].hypot(xi[1]),
                0.5 * r,
                1.5 * r
            )));
        }
    }
    let lambda = k.constants().lambda1 / (2.0 * ball_constant(d));
    let vals = u.values();
    let top = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let spec = SymbolSpec::full(k.alpha());
    let mut best = f64::INFINITY;
    for (i, v) in vals.iter().enumerate() {
        if v.abs() < top * (1.0 - 1e-12) {
            continue;
        }
        let x = refine_extremum(&interp, grid.point(i), grid.spacing(), d);
        let ux = interp.eval(&x[..d]);
        let lu: f64 = interp
            .modes()
            .iter()
            .map(|(xi, c)| {
                let ph = xi[0] * x[0] + xi[1] * x[1];
                (frozen_symbol(k, &x[..d], *xi, &spec) * c * Complex64::new(ph.cos(), ph.sin())).re
            })
            .sum();
        let value = ux.signum() * (-lu) / (lambda * r.powf(k.alpha()) * ux.abs());
        best = best.min(value);
    }
    Ok(best)
}

/// Minimum of [`probe_value`] over random annulus test functions.
pub fn freq_max_principle_probe(
    k: &Kernel,
    grid: &TorusGrid,
    r: f64,
    settings: &ProbeSettings,
) -> Result<ProbeReport> {
    use rayon::prelude::*;
    let values: Vec<f64> = (0..settings.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(settings.seed, t as u64, AUX);
            let u = annulus_test_function(grid, r, settings.modes, &mut rng)?;
            probe_value(k, &u, r)
        })
        .collect::<Result<_>>()?;
    let c_hat = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ProbeReport { r, c_hat, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlocal::symbol::radial_symbol;
    use std::f64::consts::PI;

    #[test]
    fn single_cosine_matches_symbol() {
        let g = TorusGrid::new(1, 128, 2.0 * PI).unwrap();
        let k = Kernel::constant(1, 1.5, 1.0).unwrap();
        let r = 16.0;
        let u = GridFunction::from_fn(g, |x| (r * x[0]).cos());
        let v = probe_value(&k, &u, r).unwrap();
        let psi = 2.0 * radial_symbol(1.5, r).re;
        let lambda = k.constants().lambda1 / 4.0;
        assert!((v - psi.abs() / (lambda * r.powf(1.5))).abs() < 1e-10);
    }

    #[test]
    fn straddling_spectrum_is_rejected() {
        let g = TorusGrid::new(1, 128, 2.0 * PI).unwrap();
        let k = Kernel::constant(1, 1.5, 1.0).unwrap();
        let u = GridFunction::from_fn(g, |x| (16.0 * x[0]).cos() + (30.0 * x[0]).cos());
        assert!(matches!(
            probe_value(&k, &u, 16.0),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn conical_probe_is_positive() {
        let g = TorusGrid::new(2, 64, 2.0 * PI).unwrap();
        let k =
            Kernel::conical(2, 1.5, crate::kernels::DirectionField::Constant(0.3), 0.5).unwrap();
        let rep = freq_max_principle_probe(
            &k,
            &g,
            8.0,
            &ProbeSettings {
                trials: 10,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(rep.c_hat > 0.0, "{rep:?}");
    }
}
