//! Moment, predictor, Krylov and drift-functional estimators.

use rayon::prelude::*;
use serde::Serialize;

use super::path::{integrate, simulate_path, PathEnsemble, SimSpec};
use super::{
    DirectCoefficients, FrozenCoefficients, JumpCoefficients, NoiseEvent, NoiseStream,
    StableJumpConfig,
};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::kernels::Kernel;
use crate::stats::{log_log_slope, neumaier_sum, quantile};

/// Exponent of the one-step predictor bound: for `α ≥ 1`
/// `(1/α) min(α+θ1, 1+θ2, 1+θ3/α)`, for `α < 1`
/// `min(1/(1−θ1), (1/α) min(α+θ1, 1+θ2, 1+θ3))`.
pub fn theta0(alpha: f64, theta1: f64, theta2: f64, theta3: f64) -> f64 {
    if alpha >= 1.0 {
        (alpha + theta1).min(1.0 + theta2).min(1.0 + theta3 / alpha) / alpha
    } else {
        let tail = (alpha + theta1).min(1.0 + theta2).min(1.0 + theta3) / alpha;
        if theta1 >= 1.0 {
            tail
        } else {
            (1.0 / (1.0 - theta1)).min(tail)
        }
    }
}

/// `f` filtered by the multiplier `exp(−(|ξ|/n)²)`.
pub fn mollify(f: &GridFunction, n: f64) -> GridFunction {
    f.apply_radial(|r| (-(r / n).powi(2)).exp())
}

/// `E sup_{v∈[s,s+Δ]} |Y_v − Y_s|^p` and its capped form
/// `E (sup |Y_v − Y_s|^p ∧ 1)`, averaged over non-overlapping windows.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IncrementMoments {
    pub lags: Vec<f64>,
    pub ps: Vec<f64>,
    /// `moments[i][j]` for `ps[i]`, `lags[j]`.
    pub moments: Vec<Vec<f64>>,
    pub capped: Vec<Vec<f64>>,
    pub paths: usize,
}

impl IncrementMoments {
    fn index(&self, p: f64) -> Result<usize> {
        self.ps
            .iter()
            .position(|&q| q == p)
            .ok_or_else(|| Error::InvalidArgument(format!("moment p = {p} was not recorded")))
    }
}

/// Per-path sums `(Σ sup^p, Σ sup^p ∧ 1, windows)` indexed `[p][lag]`.
fn path_increment_sums(
    states: &[[f64; 2]],
    d: usize,
    ps: &[f64],
    lag_steps: &[usize],
) -> Vec<Vec<(f64, f64, f64)>> {
    let mut out = vec![vec![(0.0, 0.0, 0.0); lag_steps.len()]; ps.len()];
    for (j, &lag) in lag_steps.iter().enumerate() {
        let mut s = 0;
        while s + lag < states.len() {
            let base = states[s];
            let mut sup = 0.0f64;
            for v in &states[s + 1..=s + lag] {
                let r = (0..d).map(|k| (v[k] - base[k]).powi(2)).sum::<f64>().sqrt();
                sup = sup.max(r);
            }
            for (i, &p) in ps.iter().enumerate() {
                let m = sup.powf(p);
                let e = &mut out[i][j];
                e.0 += m;
                e.1 += m.min(1.0);
                e.2 += 1.0;
            }
            s += lag;
        }
    }
    out
}

fn reduce_moments(
    per_path: Vec<Vec<Vec<(f64, f64, f64)>>>,
    ps: &[f64],
    lags: Vec<f64>,
) -> IncrementMoments {
    let n = per_path.len();
    let collect = |pick: fn(&(f64, f64, f64)) -> f64| -> Vec<Vec<f64>> {
        (0..ps.len())
            .map(|i| {
                (0..lags.len())
                    .map(|j| {
                        let num = neumaier_sum(per_path.iter().map(|p| pick(&p[i][j])));
                        let den = neumaier_sum(per_path.iter().map(|p| p[i][j].2));
                        num / den
                    })
                    .collect()
            })
            .collect()
    };
    let moments = collect(|e| e.0);
    let capped = collect(|e| e.1);
    IncrementMoments {
        lags,
        ps: ps.to_vec(),
        moments,
        capped,
        paths: n,
    }
}

fn check_lags(lag_steps: &[usize]) -> Result<()> {
    if lag_steps.len() < 2 || lag_steps.contains(&0) {
        return Err(Error::InvalidArgument(
            "need at least two positive lags".into(),
        ));
    }
    Ok(())
}

/// Increment moments of a stored ensemble; lags count recorded time steps.
pub fn increment_moments(
    ens: &PathEnsemble,
    ps: &[f64],
    lag_steps: &[usize],
) -> Result<IncrementMoments> {
    check_lags(lag_steps)?;
    let times = ens.times();
    if times.len() < 2 {
        return Err(Error::InvalidArgument(
            "ensemble has fewer than two times".into(),
        ));
    }
    let step = times[1] - times[0];
    let per_path = ens
        .paths
        .par_iter()
        .map(|p| path_increment_sums(&p.states, ens.dim, ps, lag_steps))
        .collect();
    let lags = lag_steps.iter().map(|&l| l as f64 * step).collect();
    Ok(reduce_moments(per_path, ps, lags))
}

/// Increment moments accumulated path by path without storing the ensemble.
#[allow(clippy::too_many_arguments)]
pub fn streamed_increment_moments<C: JumpCoefficients + ?Sized>(
    coeffs: &C,
    x0: [f64; 2],
    cfg: &StableJumpConfig,
    spec: &SimSpec,
    n_paths: usize,
    seed: u64,
    ps: &[f64],
    lag_steps: &[usize],
) -> Result<IncrementMoments> {
    check_lags(lag_steps)?;
    let spec = SimSpec {
        record_jumps: false,
        ..*spec
    };
    let d = coeffs.dim();
    let per_path = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let path = simulate_path(x0, coeffs, cfg, &spec, seed, i);
            path_increment_sums(&path.states, d, ps, lag_steps)
        })
        .collect();
    let step = spec.dt * spec.record_every.max(1) as f64;
    let lags = lag_steps.iter().map(|&l| l as f64 * step).collect();
    Ok(reduce_moments(per_path, ps, lags))
}

/// Log-log slope of the uncapped moment of order `p` against the lag.
pub fn increment_moment_slope(m: &IncrementMoments, p: f64) -> Result<f64> {
    let i = m.index(p)?;
    Ok(log_log_slope(&m.lags, &m.moments[i]))
}

/// Log-log slope of the capped moment of order `p` against the lag.
pub fn capped_moment_slope(m: &IncrementMoments, p: f64) -> Result<f64> {
    let i = m.index(p)?;
    Ok(log_log_slope(&m.lags, &m.capped[i]))
}

/// One-step predictor over the window `(t − ε, t]` started from `y = Y_{t−ε}`.
///
/// Returns `(V_t^ε, Y_t^ε)`. For `α ≥ 1`, `V = y + ε a(y)`; for `α < 1` the
/// drift flow is integrated by Euler steps of size `ε^{1/(1−θ1)}`. The jump
/// part uses the coefficients frozen at `y` on the given window events,
/// which must be the events of the true path.
pub fn euler_predictor<C: JumpCoefficients + ?Sized>(
    y: [f64; 2],
    eps: f64,
    events: &[NoiseEvent],
    coeffs: &C,
    alpha: f64,
    theta1: f64,
) -> Result<([f64; 2], [f64; 2])> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "predictor window ε = {eps} must be positive"
        )));
    }
    let d = coeffs.dim();
    let mut v = y;
    if alpha >= 1.0 || theta1 >= 1.0 {
        let a = coeffs.drift(&y);
        for i in 0..d {
            v[i] += eps * a[i];
        }
    } else {
        let delta = eps.powf(1.0 / (1.0 - theta1));
        let mut t = 0.0;
        while t < eps {
            let h = delta.min(eps - t);
            let a = coeffs.drift(&v);
            for i in 0..d {
                v[i] += h * a[i];
            }
            t += h;
        }
    }
    let bound = coeffs.bound();
    let c = coeffs.compensator(&y);
    let mut out = v;
    for i in 0..d {
        out[i] += eps * c[i];
    }
    let accepted = |ev: &NoiseEvent| ev.u * bound < coeffs.intensity(&y, &ev.z);
    for ev in events.iter().filter(|e| accepted(e)) {
        let g = coeffs.jump(&y, &ev.z);
        for i in 0..d {
            out[i] += g[i];
        }
    }
    Ok((v, out))
}

/// `E|Y_t − Y_t^ε|^p` with predictor and true path sharing the noise.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PredictorErrors {
    pub t: f64,
    pub eps: Vec<f64>,
    pub ps: Vec<f64>,
    /// `errors[i][j]` for `ps[i]`, `eps[j]`.
    pub errors: Vec<Vec<f64>>,
    pub paths: usize,
}

/// Runs `n_paths` true paths to time `t` with Euler step `dt` and, for each
/// `ε`, the predictor started from the same path at `t − ε`.
#[allow(clippy::too_many_arguments)]
pub fn coupled_predictor_errors<C: JumpCoefficients + ?Sized>(
    coeffs: &C,
    x0: [f64; 2],
    cfg: &StableJumpConfig,
    t: f64,
    dt: f64,
    eps: &[f64],
    ps: &[f64],
    theta1: f64,
    n_paths: usize,
    seed: u64,
) -> Result<PredictorErrors> {
    let n_steps = (t / dt).round() as usize;
    if n_steps == 0 || ((n_steps as f64) * dt - t).abs() > 1e-9 * t {
        return Err(Error::InvalidArgument(format!(
            "t = {t} is not a multiple of dt = {dt}"
        )));
    }
    let mut starts = Vec::with_capacity(eps.len());
    for &e in eps {
        let k = (e / dt).round() as usize;
        if !(e > 0.0 && e < t) || ((k as f64) * dt - e).abs() > 1e-9 * e {
            return Err(Error::InvalidArgument(format!(
                "window ε = {e} must lie in (0, t) on the dt grid"
            )));
        }
        starts.push(n_steps - k);
    }
    let d = coeffs.dim();
    let per_path: Vec<Vec<f64>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|idx| {
            let mut noise = NoiseStream::new(seed, idx, d, *cfg, coeffs.bound());
            let events = noise.events_until(t);
            let mut it = events.iter();
            let mut snapshots = vec![[0.0; 2]; eps.len()];
            let end = integrate(
                x0,
                coeffs,
                0.0,
                dt,
                n_steps,
                || {
                    it.next().copied().unwrap_or(NoiseEvent {
                        time: f64::INFINITY,
                        z: [0.0; 2],
                        u: 1.0,
                    })
                },
                |i, x, _| {
                    for (s, &st) in snapshots.iter_mut().zip(&starts) {
                        if st == i {
                            *s = *x;
                        }
                    }
                },
                |_, _| {},
            );
            let mut row = Vec::with_capacity(ps.len() * eps.len());
            let gaps: Vec<f64> = eps
                .iter()
                .zip(&starts)
                .zip(&snapshots)
                .map(|((&e, &st), y)| {
                    let t0 = st as f64 * dt;
                    let lo = events.partition_point(|ev| ev.time <= t0);
                    let (_, ye) = euler_predictor(*y, e, &events[lo..], coeffs, cfg.alpha, theta1)
                        .expect("positive window");
                    (0..d).map(|k| (end[k] - ye[k]).powi(2)).sum::<f64>().sqrt()
                })
                .collect();
            for &p in ps {
                row.extend(gaps.iter().map(|g| g.powf(p)));
            }
            row
        })
        .collect();
    let errors = (0..ps.len())
        .map(|i| {
            (0..eps.len())
                .map(|j| {
                    neumaier_sum(per_path.iter().map(|r| r[i * eps.len() + j])) / n_paths as f64
                })
                .collect()
        })
        .collect();
    Ok(PredictorErrors {
        t,
        eps: eps.to_vec(),
        ps: ps.to_vec(),
        errors,
        paths: n_paths,
    })
}

/// Log-log slope of `E|Y_t − Y_t^ε|^p` against `ε`.
pub fn predictor_error_slope(e: &PredictorErrors, p: f64) -> Result<f64> {
    let i =
        e.ps.iter()
            .position(|&q| q == p)
            .ok_or_else(|| Error::InvalidArgument(format!("order p = {p} was not recorded")))?;
    Ok(log_log_slope(&e.eps, &e.errors[i]))
}

/// `E|∫_s^{s+δ} f(X_r) dr|²` per window length, by left Riemann sums over
/// non-overlapping windows in `[t0, T]`. Windows count Euler steps.
#[allow(clippy::too_many_arguments)]
pub fn krylov_second_moments<C: JumpCoefficients + ?Sized>(
    coeffs: &C,
    x0: [f64; 2],
    cfg: &StableJumpConfig,
    spec: &SimSpec,
    f: &GridFunction,
    t0: f64,
    window_steps: &[usize],
    n_paths: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let d = coeffs.dim();
    if f.grid().dim() != d {
        return Err(Error::GridMismatch);
    }
    let first = (t0 / spec.dt).round() as usize;
    let n_steps = spec.steps();
    let max_w = window_steps.iter().copied().max().unwrap_or(0);
    if window_steps.contains(&0) || first + max_w > n_steps {
        return Err(Error::InvalidArgument(format!(
            "windows up to {max_w} steps do not fit after t0 = {t0} in {n_steps} steps"
        )));
    }
    let per_path: Vec<Vec<(f64, f64)>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|idx| {
            let mut noise = NoiseStream::new(seed, idx, d, *cfg, coeffs.bound());
            let mut running = Vec::with_capacity(n_steps + 1);
            let mut acc = 0.0;
            integrate(
                x0,
                coeffs,
                0.0,
                spec.dt,
                n_steps,
                || noise.next_event(),
                |_, x, _| {
                    running.push(acc);
                    acc += spec.dt * f.interp_linear(&x[..d]);
                },
                |_, _| {},
            );
            window_steps
                .iter()
                .map(|&w| {
                    let mut s = first;
                    let (mut sum, mut count) = (0.0, 0.0);
                    while s + w <= n_steps {
                        sum += (running[s + w] - running[s]).powi(2);
                        count += 1.0;
                        s += w;
                    }
                    (sum, count)
                })
                .collect()
        })
        .collect();
    Ok((0..window_steps.len())
        .map(|j| {
            neumaier_sum(per_path.iter().map(|r| r[j].0))
                / neumaier_sum(per_path.iter().map(|r| r[j].1))
        })
        .collect())
}

/// Log-log slope of the Krylov second moments against the window length.
pub fn krylov_exponent(windows: &[f64], second_moments: &[f64]) -> f64 {
    log_log_slope(windows, second_moments)
}

/// Coupled comparison of `A^n_t = ∫_0^t b_n(X^n_s) ds` across mollification levels.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftFunctionalReport {
    pub levels: Vec<f64>,
    /// Per consecutive level pair: median of `sup_t |A^{n_i} − A^{n_{i+1}}|`.
    pub median_gap: Vec<f64>,
    pub q10_gap: Vec<f64>,
    pub q90_gap: Vec<f64>,
    /// `median_gap[i] / median_gap[i+1]`.
    pub decrease: Vec<f64>,
    pub paths: usize,
}

/// Simulates `X^n` with drift `b_n = mollify(b, n)` for every level on shared
/// noise and reports the sup-gaps of the drift functionals.
#[allow(clippy::too_many_arguments)]
pub fn drift_functional_convergence(
    kernel: &Kernel,
    b: &[GridFunction],
    levels: &[f64],
    x0: [f64; 2],
    cfg: &StableJumpConfig,
    spec: &SimSpec,
    n_paths: usize,
    seed: u64,
) -> Result<DriftFunctionalReport> {
    if !(kernel.alpha() > 1.0 && kernel.alpha() < 2.0) {
        return Err(Error::Admissibility {
            hypothesis: "α ∈ (1, 2)".into(),
            detail: format!("α = {}", kernel.alpha()),
        });
    }
    if levels.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two mollification levels".into(),
        ));
    }
    let coeffs: Vec<DirectCoefficients> = levels
        .iter()
        .map(|&n| {
            let bn: Vec<GridFunction> = b.iter().map(|c| mollify(c, n)).collect();
            DirectCoefficients::new(kernel, &bn, cfg)
        })
        .collect::<Result<_>>()?;
    let spec = SimSpec {
        record_every: 1,
        record_jumps: false,
        ..*spec
    };
    let d = kernel.dim();
    let gaps: Vec<Vec<f64>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let fs: Vec<Vec<[f64; 2]>> = coeffs
                .iter()
                .map(|c| simulate_path(x0, c, cfg, &spec, seed, i).functional)
                .collect();
            fs.windows(2)
                .map(|w| {
                    w[0].iter()
                        .zip(&w[1])
                        .map(|(a, b)| (0..d).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>().sqrt())
                        .fold(0.0, f64::max)
                })
                .collect()
        })
        .collect();
    let pairs = levels.len() - 1;
    let column = |j: usize| -> Vec<f64> { gaps.iter().map(|g| g[j]).collect() };
    let median_gap: Vec<f64> = (0..pairs).map(|j| quantile(&column(j), 0.5)).collect();
    let q10_gap = (0..pairs).map(|j| quantile(&column(j), 0.1)).collect();
    let q90_gap = (0..pairs).map(|j| quantile(&column(j), 0.9)).collect();
    let decrease = median_gap.windows(2).map(|w| w[0] / w[1]).collect();
    Ok(DriftFunctionalReport {
        levels: levels.to_vec(),
        median_gap,
        q10_gap,
        q90_gap,
        decrease,
        paths: n_paths,
    })
}

/// Frozen-coefficient view used by the coupling check.
pub fn frozen<C: JumpCoefficients + ?Sized>(c: &C, y0: [f64; 2]) -> FrozenCoefficients<'_, C> {
    FrozenCoefficients::new(c, y0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TorusGrid;
    use crate::jump::AnalyticCoefficients;
    use std::f64::consts::PI;

    #[test]
    fn theta0_arithmetic() {
        assert!((theta0(1.5, 0.9, 0.4, 0.6) - 1.4 / 1.5).abs() < 1e-12);
        assert!((theta0(1.5, 1.0, 1.0, 1.0) - (1.0 + 1.0 / 1.5) / 1.5).abs() < 1e-12);
        assert!((theta0(0.8, 0.5, 0.6, 0.6) - 1.3 / 0.8).abs() < 1e-12);
        assert!((theta0(0.5, 0.2, 0.9, 0.9) - 1.25).abs() < 1e-12);
    }

    #[test]
    fn zero_window_is_rejected() {
        let c = AnalyticCoefficients::default();
        assert!(euler_predictor([0.0; 2], 0.0, &[], &c, 1.5, 1.0).is_err());
    }

    #[test]
    fn frozen_coefficients_give_zero_error() {
        let inner = AnalyticCoefficients::default();
        let c = frozen(&inner, [0.4, 0.0]);
        let cfg = StableJumpConfig::new(1.5, 0.05, 2.0).unwrap();
        let e = coupled_predictor_errors(
            &c,
            [0.1, 0.0],
            &cfg,
            1.0,
            1.0 / 256.0,
            &[0.125, 0.0625],
            &[1.0],
            1.0,
            50,
            3,
        )
        .unwrap();
        assert!(e.errors[0].iter().all(|&v| v < 1e-12), "{e:?}");
    }

    #[test]
    fn pure_jump_window_matches_simulator() {
        let inner = AnalyticCoefficients {
            drift_amplitude: 0.0,
            ..Default::default()
        };
        let c = frozen(&inner, [0.7, 0.0]);
        let cfg = StableJumpConfig::new(1.5, 0.05, 2.0).unwrap();
        let mut noise = NoiseStream::new(4, 0, 1, cfg, c.bound());
        let events = noise.events_until(0.5);
        let (v, y) = euler_predictor([0.0; 2], 0.5, &events, &c, 1.5, 1.0).unwrap();
        let spec = SimSpec::new(0.5, 0.5).unwrap();
        let p = simulate_path([0.0; 2], &c, &cfg, &spec, 4, 0);
        assert_eq!(v, [0.0; 2]);
        assert!((p.states[1][0] - y[0]).abs() < 1e-12);
    }

    #[test]
    fn pure_drift_moments_scale_linearly() {
        let k = Kernel::constant(1, 1.5, 0.0).unwrap();
        let cfg = StableJumpConfig::new(1.5, 0.05, 2.0).unwrap();
        let g = TorusGrid::new(1, 64, 2.0 * PI).unwrap();
        let c = DirectCoefficients::new(&k, &[GridFunction::constant(g, 1.0)], &cfg).unwrap();
        let spec = SimSpec::new(1.0, 1.0 / 64.0).unwrap();
        let m =
            streamed_increment_moments(&c, [0.0; 2], &cfg, &spec, 4, 1, &[0.5, 1.0], &[1, 2, 4, 8])
                .unwrap();
        assert!((increment_moment_slope(&m, 0.5).unwrap() - 0.5).abs() < 1e-9);
        assert!((increment_moment_slope(&m, 1.0).unwrap() - 1.0).abs() < 1e-9);
        assert!(increment_moment_slope(&m, 0.7).is_err());
    }

    #[test]
    fn stored_and_streamed_moments_agree() {
        let c = AnalyticCoefficients::default();
        let cfg = StableJumpConfig::new(1.5, 0.05, 2.0).unwrap();
        let spec = SimSpec::new(0.5, 1.0 / 128.0).unwrap();
        let ens = crate::jump::simulate_ensemble(30, [0.0; 2], &c, &cfg, &spec, 8, "analytic");
        let a = increment_moments(&ens, &[1.0], &[1, 4]).unwrap();
        let b =
            streamed_increment_moments(&c, [0.0; 2], &cfg, &spec, 30, 8, &[1.0], &[1, 4]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn constant_krylov_integrand_has_slope_two() {
        let c = AnalyticCoefficients::default();
        let cfg = StableJumpConfig::new(1.5, 0.05, 2.0).unwrap();
        let spec = SimSpec::new(1.0, 1.0 / 256.0).unwrap();
        let g = TorusGrid::new(1, 64, 2.0 * PI).unwrap();
        let f = GridFunction::constant(g, 1.0);
        let w = [4usize, 8, 16, 32];
        let m = krylov_second_moments(&c, [0.0; 2], &cfg, &spec, &f, 0.25, &w, 5, 2).unwrap();
        let deltas: Vec<f64> = w.iter().map(|&s| s as f64 / 256.0).collect();
        assert!((krylov_exponent(&deltas, &m) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn smooth_drift_levels_agree() {
        let k = Kernel::constant(1, 1.5, 1.0).unwrap();
        let cfg = StableJumpConfig::new(1.5, 0.1, 2.0).unwrap();
        let g = TorusGrid::new(1, 64, 2.0 * PI).unwrap();
        let b = [GridFunction::from_fn(g, |x| x[0].sin())];
        let spec = SimSpec::new(0.5, 1.0 / 128.0).unwrap();
        let r =
            drift_functional_convergence(&k, &b, &[1e4, 2e4, 4e4], [0.0; 2], &cfg, &spec, 10, 1)
                .unwrap();
        assert!(r.median_gap.iter().all(|&v| v < 1e-6), "{r:?}");
    }
}
