//! Marginal densities, their Besov profiles, and the stable-density oracle.

use num_complex::Complex64;
use serde::Serialize;

use crate::besov::{block_profile, BlockProfile};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, TorusGrid};
use crate::nonlocal::stable_constant;
use crate::resolvent::{check_admissible, ZvonkinMap};
use crate::stats::{log_log_slope, neumaier_sum, quantile, variance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Histogram,
    SmoothingKernel,
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityEstimate {
    #[serde(skip)]
    pub density: GridFunction,
    pub n_samples: usize,
    pub bandwidth: f64,
    pub kind: EstimatorKind,
}

impl DensityEstimate {
    pub fn mass(&self) -> f64 {
        self.density.integral()
    }

    pub fn min(&self) -> f64 {
        self.density
            .values()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// `‖f − g‖_{L¹}` by cell quadrature.
pub fn l1_distance(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    f.grid().check_same(g.grid())?;
    let cell = f.grid().cell_volume();
    Ok(cell
        * neumaier_sum(
            f.values()
                .iter()
                .zip(g.values())
                .map(|(a, b)| (a - b).abs()),
        ))
}

/// Range of `(γ, q)` for which marginal densities lie in `B^γ_{q,∞}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdmissibleRegion {
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
    pub dim: usize,
    pub gamma_max: f64,
}

impl AdmissibleRegion {
    /// Supremum of admissible `q` at `γ`, or `None` outside the region.
    pub fn q_max(&self, gamma: f64) -> Option<f64> {
        if !(gamma > 0.0 && gamma < self.gamma_max) {
            return None;
        }
        let d = self.dim as f64;
        Some(d / (d + gamma - self.gamma_max))
    }

    pub fn contains(&self, gamma: f64, q: f64) -> bool {
        self.q_max(gamma).is_some_and(|m| q >= 1.0 && q < m)
    }

    /// `(γ, q_max(γ))` on `count` equispaced interior points.
    pub fn samples(&self, count: usize) -> Vec<(f64, f64)> {
        (1..=count)
            .map(|i| {
                let g = self.gamma_max * i as f64 / (count + 1) as f64;
                (g, self.q_max(g).unwrap_or(1.0))
            })
            .collect()
    }
}

/// `γ_max = α(α+β−1)` for `α ≤ 1` and `(α+β−1) ∧ ϑ/α` for `α > 1`.
pub fn admissible_gamma_q(
    alpha: f64,
    beta: f64,
    theta: f64,
    dim: usize,
) -> Result<AdmissibleRegion> {
    let gamma_max = if alpha <= 1.0 {
        alpha * (alpha + beta - 1.0)
    } else {
        (alpha + beta - 1.0).min(theta / alpha)
    };
    if !(gamma_max > 0.0) {
        return Err(Error::EmptyRegion { gamma_max });
    }
    check_admissible(alpha, beta, theta)?;
    Ok(AdmissibleRegion {
        alpha,
        beta,
        theta,
        dim,
        gamma_max,
    })
}

/// Density on the torus of the symmetric stable law with symbol `−c|ξ|^α`
/// at time `t`, started at `x0`.
pub fn stable_density_scaled(
    alpha: f64,
    c: f64,
    t: f64,
    x0: &[f64],
    grid: &TorusGrid,
) -> Result<DensityEstimate> {
    if !(t > 0.0 && c > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need t, c > 0 (t = {t}, c = {c})"
        )));
    }
    let d = grid.dim();
    let n = grid.n() as i64;
    let scale = grid.len() as f64 / grid.volume();
    let mut edge = 0.0f64;
    let spectrum: Vec<Complex64> = (0..grid.len())
        .map(|i| {
            let xi = grid.frequency(i);
            let r = xi[0].hypot(xi[1]);
            let m = (-t * c * r.powf(alpha)).exp();
            let on_edge = if d == 1 {
                grid.mode(i).abs() == n / 2
            } else {
                grid.mode(i / grid.n()).abs() == n / 2 || grid.mode(i % grid.n()).abs() == n / 2
            };
            if on_edge {
                edge = edge.max(m);
            }
            let ph = -(xi[0] * x0[0] + if d == 2 { xi[1] * x0[1] } else { 0.0 });
            scale * m * Complex64::new(ph.cos(), ph.sin())
        })
        .collect();
    if edge > 1e-6 {
        return Err(Error::AliasingDetected { mass: edge });
    }
    Ok(DensityEstimate {
        density: GridFunction::from_spectrum(*grid, spectrum),
        n_samples: 0,
        bandwidth: 0.0,
        kind: EstimatorKind::Exact,
    })
}

/// [`stable_density_scaled`] for the unit kernel `κ ≡ 1`, started at 0.
pub fn stable_density_oracle(alpha: f64, t: f64, grid: &TorusGrid) -> Result<DensityEstimate> {
    stable_density_scaled(
        alpha,
        stable_constant(grid.dim(), alpha),
        t,
        &[0.0, 0.0],
        grid,
    )
}

/// Plug-in bandwidth `σ̂ n^{-1/(4+d)}` with `σ̂ = min(std, IQR/1.349)`,
/// minimised over axes.
pub fn plugin_bandwidth(samples: &[[f64; 2]], dim: usize) -> f64 {
    let n = samples.len() as f64;
    let sigma = (0..dim)
        .map(|a| {
            let v: Vec<f64> = samples.iter().map(|s| s[a]).collect();
            let iqr = quantile(&v, 0.75) - quantile(&v, 0.25);
            variance(&v).sqrt().min(iqr / 1.349)
        })
        .fold(f64::INFINITY, f64::min);
    sigma * n.powf(-1.0 / (4.0 + dim as f64))
}

fn bump_weights(h: f64, spacing: f64, n: usize) -> Vec<f64> {
    let reach = ((h / spacing).ceil() as usize).min(n / 2);
    let mut w: Vec<f64> = (0..=2 * reach)
        .map(|k| {
            let s = (k as f64 - reach as f64) * spacing / h;
            if s.abs() < 1.0 {
                (1.0 - s * s).powi(3)
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = w.iter().sum();
    if total == 0.0 {
        w = vec![0.0; 2 * reach + 1];
        w[reach] = 1.0;
    } else {
        w.iter_mut().for_each(|v| *v /= total);
    }
    w
}

/// Linearly binned samples, wrapped onto the torus, smoothed by a triweight
/// bump of half-width `h` (plug-in rule when `None`).
pub fn empirical_density(
    samples: &[[f64; 2]],
    grid: &TorusGrid,
    h: Option<f64>,
) -> Result<DensityEstimate> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    let d = grid.dim();
    let n = grid.n();
    let dx = grid.spacing();
    let h = h.unwrap_or_else(|| plugin_bandwidth(samples, d));
    if !(h >= 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("bandwidth {h}")));
    }
    let split = |v: f64| -> (usize, usize, f64) {
        let s = (v / dx).rem_euclid(n as f64);
        let i = (s.floor() as usize).min(n - 1);
        (i, (i + 1) % n, s - i as f64)
    };
    let mut counts = vec![0.0; grid.len()];
    for s in samples {
        if d == 1 {
            let (i, j, t) = split(s[0]);
            counts[i] += 1.0 - t;
            counts[j] += t;
        } else {
            let (i0, i1, a) = split(s[0]);
            let (j0, j1, b) = split(s[1]);
            counts[i0 * n + j0] += (1.0 - a) * (1.0 - b);
            counts[i0 * n + j1] += (1.0 - a) * b;
            counts[i1 * n + j0] += a * (1.0 - b);
            counts[i1 * n + j1] += a * b;
        }
    }
    let w = bump_weights(h, dx, n);
    let reach = (w.len() / 2) as isize;
    let kind = if w.len() == 1 || w.iter().filter(|&&v| v > 0.0).count() == 1 {
        EstimatorKind::Histogram
    } else {
        EstimatorKind::SmoothingKernel
    };
    let wrap = |i: isize| i.rem_euclid(n as isize) as usize;
    let smooth_axis = |src: &[f64], stride: usize| -> Vec<f64> {
        let mut out = vec![0.0; src.len()];
        for (idx, o) in out.iter_mut().enumerate() {
            let line = idx / (stride * n) * (stride * n) + idx % stride;
            let pos = (idx / stride % n) as isize;
            *o = w
                .iter()
                .enumerate()
                .map(|(k, wk)| wk * src[line + wrap(pos + k as isize - reach) * stride])
                .sum();
        }
        out
    };
    let mut vals = smooth_axis(&counts, 1);
    if d == 2 {
        vals = smooth_axis(&vals, n);
    }
    let norm = 1.0 / (samples.len() as f64 * grid.cell_volume());
    vals.iter_mut().for_each(|v| *v *= norm);
    Ok(DensityEstimate {
        density: GridFunction::new(*grid, vals)?,
        n_samples: samples.len(),
        bandwidth: h,
        kind,
    })
}

/// `(j, ‖Δ_j p‖_q, 2^{γj}‖Δ_j p‖_q)` over resolvable blocks; the sup of the
/// weighted column is the `B^γ_{q,∞}` seminorm.
pub fn besov_profile(p: &GridFunction, gamma: f64, q: f64) -> Result<BlockProfile> {
    block_profile(p, gamma, q)
}

/// Fitted exponent of `t ↦ ‖p_t‖_{B^s_{q,∞}}` for the unit stable oracle.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeScaling {
    pub alpha: f64,
    pub s: f64,
    pub q: f64,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub exponent: f64,
    pub predicted: f64,
}

/// Times `2^{-αk}/c_{d,α}`, `k = k0, …, k0+count−1`, at which the unit
/// stable law has spatial scale `2^{-k}`.
pub fn dyadic_times(alpha: f64, dim: usize, k0: i32, count: usize) -> Vec<f64> {
    let c = stable_constant(dim, alpha);
    (0..count as i32)
        .map(|k| 2f64.powf(-alpha * (k0 + k) as f64) / c)
        .collect()
}

pub fn density_time_scaling(
    alpha: f64,
    s: f64,
    q: f64,
    times: &[f64],
    grid: &TorusGrid,
) -> Result<TimeScaling> {
    let d = grid.dim() as f64;
    let q_dual_inv = if q.is_infinite() { 1.0 } else { 1.0 - 1.0 / q };
    let norms = times
        .iter()
        .map(|&t| {
            Ok(
                besov_profile(&stable_density_oracle(alpha, t, grid)?.density, s, q)?
                    .norm(f64::INFINITY),
            )
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(TimeScaling {
        alpha,
        s,
        q,
        times: times.to_vec(),
        exponent: log_log_slope(times, &norms),
        predicted: -(s + d * q_dual_inv) / alpha,
        norms,
    })
}

/// `p_X = p_Y ∘ Φ · det ∇Φ` for `Φ = id + u`.
pub fn zvonkin_transfer_density(p_y: &GridFunction, map: &ZvonkinMap) -> Result<GridFunction> {
    let grid = *p_y.grid();
    let d = grid.dim();
    if map.dim() != d {
        return Err(Error::GridMismatch);
    }
    let u = map.u();
    let jac: Vec<Vec<GridFunction>> = u.iter().map(|c| c.gradient()).collect();
    let vals = (0..grid.len())
        .map(|i| {
            let x = grid.point(i);
            let y = map.phi(&x[..d]);
            let det = if d == 1 {
                1.0 + jac[0][0].interp_linear(&x[..1])
            } else {
                let j =
                    |a: usize, b: usize| (a == b) as u8 as f64 + jac[a][b].interp_linear(&x[..2]);
                j(0, 0) * j(1, 1) - j(0, 1) * j(1, 0)
            };
            p_y.interp_linear(&y[..d]) * det
        })
        .collect();
    GridFunction::new(grid, vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn region_arithmetic() {
        let r = admissible_gamma_q(0.8, 0.5, 0.6, 1).unwrap();
        assert!((r.gamma_max - 0.24).abs() < 1e-12);
        let r = admissible_gamma_q(1.5, 0.0, 0.9, 1).unwrap();
        assert!((r.gamma_max - 0.5).abs() < 1e-12);
        assert!((r.q_max(0.3).unwrap() - 1.25).abs() < 1e-12);
        assert!(r.contains(0.3, 1.0) && !r.contains(0.6, 1.0));
        assert!(matches!(
            admissible_gamma_q(0.8, 0.2, 0.6, 1),
            Err(Error::EmptyRegion { .. })
        ));
    }

    #[test]
    fn cauchy_oracle() {
        let g = TorusGrid::new(1, 1 << 16, 2000.0).unwrap();
        let p = stable_density_scaled(1.0, 1.0, 1.0, &[0.0], &g).unwrap();
        assert!((p.density.values()[0] - 1.0 / PI).abs() < 1e-6);
        assert!((p.mass() - 1.0).abs() < 1e-9);
        let g = TorusGrid::new(1, 256, 2.0 * PI).unwrap();
        let p = stable_density_scaled(1.0, 1.0, 1.0, &[0.0], &g).unwrap();
        let torus = 1.0 / (2.0 * PI * (0.5f64).tanh());
        assert!((p.density.values()[0] - torus).abs() < 1e-12);
    }

    #[test]
    fn oracle_self_similarity() {
        let (alpha, t) = (1.5f64, 0.3f64);
        let g1 = TorusGrid::new(1, 512, 2.0 * PI).unwrap();
        let s = t.powf(-1.0 / alpha);
        let g2 = TorusGrid::new(1, 512, 2.0 * PI * s).unwrap();
        let pt = stable_density_scaled(alpha, 1.0, t, &[0.0], &g1).unwrap();
        let p1 = stable_density_scaled(alpha, 1.0, 1.0, &[0.0], &g2).unwrap();
        for (a, b) in pt.density.values().iter().zip(p1.density.values()) {
            assert!((a - s * b).abs() < 1e-8);
        }
    }

    #[test]
    fn aliasing_is_detected() {
        let g = TorusGrid::new(1, 16, 2.0 * PI).unwrap();
        assert!(matches!(
            stable_density_scaled(1.5, 1.0, 0.01, &[0.0], &g),
            Err(Error::AliasingDetected { .. })
        ));
    }

    #[test]
    fn point_mass_gives_one_bump() {
        let g = TorusGrid::new(1, 128, 2.0 * PI).unwrap();
        let samples = vec![[1.0, 0.0]; 1000];
        let p = empirical_density(&samples, &g, Some(0.3)).unwrap();
        assert!((p.mass() - 1.0).abs() < 1e-12);
        assert_eq!(p.kind, EstimatorKind::SmoothingKernel);
        let support = p.density.values().iter().filter(|&&v| v > 0.0).count();
        assert!(support < 16);
        let g2 = TorusGrid::new(2, 32, 2.0 * PI).unwrap();
        let p = empirical_density(&[[-1.0, 7.0]; 10], &g2, Some(0.5)).unwrap();
        assert!((p.mass() - 1.0).abs() < 1e-12);
        assert!(p.min() >= 0.0);
    }

    #[test]
    fn uniform_profile_vanishes_above_low_block() {
        let g = TorusGrid::new(1, 128, 2.0 * PI).unwrap();
        let p = GridFunction::constant(g, 1.0 / (2.0 * PI));
        let prof = besov_profile(&p, 0.3, 1.0).unwrap();
        assert!(prof
            .entries
            .iter()
            .filter(|e| e.j >= 0)
            .all(|e| e.block_norm < 1e-14));
    }

    #[test]
    fn cauchy_sup_scales_like_inverse_time() {
        let g = TorusGrid::new(1, 4096, 2.0 * PI).unwrap();
        let times = dyadic_times(1.0, 1, 3, 4);
        let r = density_time_scaling(1.0, 0.0, f64::INFINITY, &times, &g).unwrap();
        assert!((r.exponent - r.predicted).abs() < 0.02, "{r:?}");
        assert_eq!(r.predicted, -1.0);
        for (s, q, a) in [(0.5, f64::INFINITY, 1.5), (0.5, 1.0, 1.5), (0.5, 1.0, 1.0)] {
            let r = density_time_scaling(a, s, q, &dyadic_times(a, 1, 3, 4), &g).unwrap();
            assert!((r.exponent - r.predicted).abs() < 0.1, "{r:?}");
        }
    }

    #[test]
    fn zero_drift_transfer_is_identity() {
        use crate::kernels::Kernel;
        use crate::resolvent::SolverOptions;
        let g = TorusGrid::new(1, 64, 2.0 * PI).unwrap();
        let k = Kernel::constant(1, 1.5, 1.0).unwrap();
        let map = ZvonkinMap::build(&k, &[GridFunction::zeros(g)], 0.0, SolverOptions::default())
            .unwrap();
        let p = stable_density_oracle(1.5, 0.5, &g).unwrap().density;
        let q = zvonkin_transfer_density(&p, &map).unwrap();
        assert!(l1_distance(&p, &q).unwrap() < 1e-12);
    }
}
