//! Jump SDEs driven by a thinned dominating Poisson random measure.
//!
//! Jumps `z` are drawn from `Λ2 1_{ε<|z|<R} |z|^{-d-α} dz` and accepted with
//! probability `k(x, z)/Λ2`; the accepted state change is `g(x, z)`.

mod coeffs;
mod estimators;
mod path;

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlocal::Compensation;
use crate::quadrature::unit_sphere_area;
use crate::rng::{exponential, open_uniform, stream, ACCEPT, CLOCK, DIRECTION, RADIUS};

pub use coeffs::{
    AnalyticCoefficients, DirectCoefficients, FrozenCoefficients, JumpCoefficients,
    ZvonkinCoefficients,
};
pub use estimators::{
    capped_moment_slope, coupled_predictor_errors, drift_functional_convergence, euler_predictor,
    frozen, increment_moment_slope, increment_moments, krylov_exponent, krylov_second_moments,
    mollify, predictor_error_slope, streamed_increment_moments, theta0, DriftFunctionalReport,
    IncrementMoments, PredictorErrors,
};
pub use path::{
    simulate_ensemble, simulate_marginals, simulate_path, JumpRecord, Path, PathEnsemble, SimSpec,
};

/// Truncation band and compensation of the driving noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StableJumpConfig {
    pub alpha: f64,
    pub eps_cut: f64,
    pub r_cut: f64,
    pub compensation: Compensation,
}

impl StableJumpConfig {
    pub fn new(alpha: f64, eps_cut: f64, r_cut: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::InvalidArgument(format!(
                "α = {alpha} outside (0, 2)"
            )));
        }
        if !(eps_cut > 0.0 && eps_cut < r_cut) {
            return Err(Error::BadBand {
                eps: eps_cut,
                r: r_cut,
            });
        }
        Ok(Self {
            alpha,
            eps_cut,
            r_cut,
            compensation: Compensation::for_alpha(alpha),
        })
    }

    /// Default large-jump cap `L/4`.
    pub fn for_torus(alpha: f64, eps_cut: f64, length: f64) -> Result<Self> {
        Self::new(alpha, eps_cut, 0.25 * length)
    }

    /// `ν(ε < |z| < R)` for the unit stable measure in dimension `dim`.
    pub fn band_mass(&self, dim: usize) -> f64 {
        let tail = if self.r_cut.is_infinite() {
            0.0
        } else {
            self.r_cut.powf(-self.alpha)
        };
        unit_sphere_area(dim) * (self.eps_cut.powf(-self.alpha) - tail) / self.alpha
    }

    /// `∫_{ε<ρ<R} ρ^{-α} dρ`, the radial weight of the compensator drift.
    pub fn drift_weight(&self) -> f64 {
        let (e, r, a) = (self.eps_cut, self.r_cut, self.alpha);
        if a == 1.0 {
            (r / e).ln()
        } else if r.is_infinite() {
            e.powf(1.0 - a) / (a - 1.0)
        } else {
            (r.powf(1.0 - a) - e.powf(1.0 - a)) / (1.0 - a)
        }
    }
}

/// Inverse CDF of the radius law `∝ r^{-1-α}` on `(ε, R)`.
pub fn truncated_pareto_radius(u: f64, alpha: f64, eps: f64, r: f64) -> f64 {
    let lo = eps.powf(-alpha);
    let hi = if r.is_infinite() { 0.0 } else { r.powf(-alpha) };
    (lo - u * (lo - hi)).powf(-1.0 / alpha)
}

fn direction<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> [f64; 2] {
    if dim == 1 {
        [if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0]
    } else {
        let t = rng.random_range(0.0..2.0 * PI);
        [t.cos(), t.sin()]
    }
}

/// One jump of the dominating measure.
pub fn sample_dominating_jump<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    alpha: f64,
    eps: f64,
    r: f64,
) -> Result<[f64; 2]> {
    if !(eps > 0.0 && eps < r) {
        return Err(Error::BadBand { eps, r });
    }
    let rho = truncated_pareto_radius(rng.random::<f64>(), alpha, eps, r);
    let w = direction(rng, dim);
    Ok([rho * w[0], rho * w[1]])
}

/// An event of the dominating noise: time, mark and acceptance uniform.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseEvent {
    pub time: f64,
    pub z: [f64; 2],
    pub u: f64,
}

/// The dominating Poisson measure of one path, drawn from four disjoint
/// sub-streams so that every consumer sees the same realisation.
pub struct NoiseStream {
    clock: crate::rng::StreamRng,
    radius: crate::rng::StreamRng,
    dir: crate::rng::StreamRng,
    accept: crate::rng::StreamRng,
    dim: usize,
    cfg: StableJumpConfig,
    rate: f64,
    time: f64,
}

impl NoiseStream {
    pub fn new(master: u64, index: u64, dim: usize, cfg: StableJumpConfig, bound: f64) -> Self {
        Self {
            clock: stream(master, index, CLOCK),
            radius: stream(master, index, RADIUS),
            dir: stream(master, index, DIRECTION),
            accept: stream(master, index, ACCEPT),
            dim,
            rate: bound * cfg.band_mass(dim),
            cfg,
            time: 0.0,
        }
    }

    /// Total dominating jump rate `Λ2 ν(band)`.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn next_event(&mut self) -> NoiseEvent {
        if self.rate <= 0.0 {
            return NoiseEvent {
                time: f64::INFINITY,
                z: [0.0; 2],
                u: 1.0,
            };
        }
        self.time += exponential(&mut self.clock, self.rate);
        let rho = truncated_pareto_radius(
            self.radius.random::<f64>(),
            self.cfg.alpha,
            self.cfg.eps_cut,
            self.cfg.r_cut,
        );
        let w = direction(&mut self.dir, self.dim);
        let u = open_uniform(&mut self.accept);
        NoiseEvent {
            time: self.time,
            z: [rho * w[0], rho * w[1]],
            u,
        }
    }

    /// All events with `time ≤ t_end`.
    pub fn events_until(&mut self, t_end: f64) -> Vec<NoiseEvent> {
        let mut out = Vec::new();
        loop {
            let e = self.next_event();
            if e.time > t_end {
                return out;
            }
            out.push(e);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_p_value, ks_statistic};

    #[test]
    fn inverse_cdf_landmarks() {
        assert!((truncated_pareto_radius(0.5, 1.0, 1.0, f64::INFINITY) - 2.0).abs() < 1e-15);
        assert!((truncated_pareto_radius(0.0, 1.3, 0.1, 5.0) - 0.1).abs() < 1e-15);
        assert!((truncated_pareto_radius(1.0 - 1e-15, 1.3, 0.1, 5.0) - 5.0).abs() < 1e-9);
    }

    #[test]
    fn band_mass_closed_form() {
        let cfg = StableJumpConfig::new(1.0, 0.1, 10.0).unwrap();
        assert!((cfg.band_mass(1) - 19.8).abs() < 1e-12);
    }

    #[test]
    fn bad_band_is_rejected() {
        assert_eq!(
            StableJumpConfig::new(1.0, 2.0, 1.0).unwrap_err(),
            Error::BadBand { eps: 2.0, r: 1.0 }
        );
        let mut r = stream(1, 0, 0);
        assert!(sample_dominating_jump(&mut r, 1, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn empirical_count_matches_band_mass() {
        let cfg = StableJumpConfig::new(1.0, 0.1, 10.0).unwrap();
        let mut noise = NoiseStream::new(9, 0, 1, cfg, 1.0);
        let count = noise.events_until(1e4).len() as f64;
        assert!((count / 1e4 - 19.8).abs() < 0.01 * 19.8);
    }

    #[test]
    fn radius_marginal_passes_ks() {
        let (a, e, r) = (1.5, 0.05, 3.0);
        let mut rng = stream(4, 0, 0);
        let radii: Vec<f64> = (0..20000)
            .map(|_| {
                let z = sample_dominating_jump(&mut rng, 2, a, e, r).unwrap();
                z[0].hypot(z[1])
            })
            .collect();
        let cdf = |x: f64| (e.powf(-a) - x.powf(-a)) / (e.powf(-a) - r.powf(-a));
        let d = ks_statistic(&radii, cdf);
        assert!(ks_p_value(d, radii.len()) > 0.01);
    }
}
