//! Path simulation and ensembles.

use std::path::Path as FsPath;

use rayon::prelude::*;
use serde::Serialize;

use super::{JumpCoefficients, NoiseEvent, NoiseStream, StableJumpConfig};
use crate::error::{Error, Result};
use crate::io::{write_atomic, write_json};

/// Time discretisation of a simulation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SimSpec {
    pub t_end: f64,
    /// Euler step for the drift; jumps are applied at their exact times.
    pub dt: f64,
    /// Keep every `record_every`-th state.
    pub record_every: usize,
    pub record_jumps: bool,
    /// `|X − x0|` beyond which a path is flagged as escaped.
    pub half_width: f64,
}

impl SimSpec {
    pub fn new(t_end: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && t_end >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "bad time grid T = {t_end}, dt = {dt}"
            )));
        }
        Ok(Self {
            t_end,
            dt,
            record_every: 1,
            record_jumps: false,
            half_width: f64::INFINITY,
        })
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JumpRecord {
    pub time: f64,
    pub z: [f64; 2],
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Path {
    pub index: u64,
    pub seed: u64,
    pub times: Vec<f64>,
    pub states: Vec<[f64; 2]>,
    /// `A_t = ∫_0^t b(X_s) ds` at the recorded times.
    pub functional: Vec<[f64; 2]>,
    pub jumps: Vec<JumpRecord>,
    pub escaped: bool,
}

/// Advances `x` over `n_steps` Euler steps of size `dt`, consuming events
/// from `next`. `observe(i, x, A)` sees the state after step `i` (and `i = 0`
/// before the first step).
#[allow(clippy::too_many_arguments)]
pub(crate) fn integrate<C: JumpCoefficients + ?Sized>(
    x0: [f64; 2],
    coeffs: &C,
    t0: f64,
    dt: f64,
    n_steps: usize,
    mut next: impl FnMut() -> NoiseEvent,
    mut observe: impl FnMut(usize, &[f64; 2], &[f64; 2]),
    mut on_jump: impl FnMut(&NoiseEvent, bool),
) -> [f64; 2] {
    let d = coeffs.dim();
    let bound = coeffs.bound();
    let mut x = x0;
    let mut a = [0.0f64; 2];
    let mut t = t0;
    let mut ev = next();
    let flow = |x: &mut [f64; 2], a: &mut [f64; 2], h: f64| {
        if h <= 0.0 {
            return;
        }
        let b = coeffs.drift(x);
        let c = coeffs.compensator(x);
        let f = coeffs.functional(x);
        for i in 0..d {
            x[i] += h * (b[i] + c[i]);
            a[i] += h * f[i];
        }
    };
    observe(0, &x, &a);
    for step in 1..=n_steps {
        let target = t0 + step as f64 * dt;
        while ev.time <= target {
            flow(&mut x, &mut a, ev.time - t);
            t = ev.time;
            let accepted = ev.u * bound < coeffs.intensity(&x, &ev.z);
            if accepted {
                let g = coeffs.jump(&x, &ev.z);
                for i in 0..d {
                    x[i] += g[i];
                }
            }
            on_jump(&ev, accepted);
            ev = next();
        }
        flow(&mut x, &mut a, target - t);
        t = target;
        observe(step, &x, &a);
    }
    x
}

pub fn simulate_path<C: JumpCoefficients + ?Sized>(
    x0: [f64; 2],
    coeffs: &C,
    cfg: &StableJumpConfig,
    spec: &SimSpec,
    master_seed: u64,
    index: u64,
) -> Path {
    let d = coeffs.dim();
    let mut noise = NoiseStream::new(master_seed, index, d, *cfg, coeffs.bound());
    let every = spec.record_every.max(1);
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut functional = Vec::new();
    let mut jumps = Vec::new();
    let mut escaped = false;
    integrate(
        x0,
        coeffs,
        0.0,
        spec.dt,
        spec.steps(),
        || noise.next_event(),
        |i, x, a| {
            let dist = (0..d).map(|k| (x[k] - x0[k]).powi(2)).sum::<f64>().sqrt();
            escaped |= dist > spec.half_width;
            if i % every == 0 {
                times.push(i as f64 * spec.dt);
                states.push(*x);
                functional.push(*a);
            }
        },
        |ev, accepted| {
            if spec.record_jumps {
                jumps.push(JumpRecord {
                    time: ev.time,
                    z: ev.z,
                    accepted,
                });
            }
        },
    );
    Path {
        index,
        seed: master_seed,
        times,
        states,
        functional,
        jumps,
        escaped,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathEnsemble {
    pub master_seed: u64,
    pub descriptor: String,
    pub alpha: f64,
    pub dim: usize,
    pub cfg: StableJumpConfig,
    pub spec: SimSpec,
    pub paths: Vec<Path>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    seed: u64,
    kernel: &'a str,
    alpha: f64,
    dim: usize,
    n_paths: usize,
    n_times: usize,
    cfg: &'a StableJumpConfig,
    spec: &'a SimSpec,
    escaped: usize,
}

impl PathEnsemble {
    pub fn times(&self) -> &[f64] {
        self.paths
            .first()
            .map(|p| p.times.as_slice())
            .unwrap_or(&[])
    }

    /// States of every path at recorded time index `i`.
    pub fn slice(&self, i: usize) -> Vec<[f64; 2]> {
        self.paths.iter().map(|p| p.states[i]).collect()
    }

    /// `ENS1` binary block: magic, `d`, `n_paths`, `n_times`, `α`, then
    /// `f64` states path-major, time-minor, coordinate-innermost.
    pub fn to_bytes(&self) -> Vec<u8> {
        let n_times = self.times().len();
        let mut out = Vec::with_capacity(32 + 8 * self.paths.len() * n_times * self.dim);
        out.extend_from_slice(b"ENS1");
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.paths.len() as u64).to_le_bytes());
        out.extend_from_slice(&(n_times as u64).to_le_bytes());
        out.extend_from_slice(&self.alpha.to_le_bytes());
        for p in &self.paths {
            for s in &p.states {
                for v in &s[..self.dim] {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        out
    }

    /// Parses an `ENS1` block into `(d, α, states[path][time])`.
    pub fn read_states(bytes: &[u8]) -> Result<(usize, f64, States)> {
        if bytes.len() < 32 || &bytes[..4] != b"ENS1" {
            return Err(Error::Format("missing ENS1 header".into()));
        }
        let d = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let m = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
        let alpha = f64::from_le_bytes(bytes[24..32].try_into().unwrap());
        if !(d == 1 || d == 2) || bytes.len() != 32 + 8 * n * m * d {
            return Err(Error::Format("ENS1 size mismatch".into()));
        }
        let mut off = 32;
        let mut paths = Vec::with_capacity(n);
        for _ in 0..n {
            let mut states = Vec::with_capacity(m);
            for _ in 0..m {
                let mut s = [0.0; 2];
                for v in s.iter_mut().take(d) {
                    *v = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
                    off += 8;
                }
                states.push(s);
            }
            paths.push(states);
        }
        Ok((d, alpha, paths))
    }

    /// Writes `<stem>.ens` and `<stem>.json`.
    pub fn write(&self, dir: &FsPath, stem: &str) -> Result<()> {
        write_atomic(&dir.join(format!("{stem}.ens")), &self.to_bytes())?;
        write_json(
            &dir.join(format!("{stem}.json")),
            &Manifest {
                seed: self.master_seed,
                kernel: &self.descriptor,
                alpha: self.alpha,
                dim: self.dim,
                n_paths: self.paths.len(),
                n_times: self.times().len(),
                cfg: &self.cfg,
                spec: &self.spec,
                escaped: self.paths.iter().filter(|p| p.escaped).count(),
            },
        )
    }
}

/// Paths `0..n_paths`, each reproducible from `(master_seed, index)`.
pub fn simulate_ensemble<C: JumpCoefficients + ?Sized>(
    n_paths: usize,
    x0: [f64; 2],
    coeffs: &C,
    cfg: &StableJumpConfig,
    spec: &SimSpec,
    master_seed: u64,
    descriptor: &str,
) -> PathEnsemble {
    let paths = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| simulate_path(x0, coeffs, cfg, spec, master_seed, i))
        .collect();
    PathEnsemble {
        master_seed,
        descriptor: descriptor.to_string(),
        alpha: cfg.alpha,
        dim: coeffs.dim(),
        cfg: *cfg,
        spec: *spec,
        paths,
    }
}

/// States indexed `[path][time]`.
pub type States = Vec<Vec<[f64; 2]>>;

/// Terminal states only, for large ensembles.
pub fn simulate_marginals<C: JumpCoefficients + ?Sized>(
    n_paths: usize,
    x0: [f64; 2],
    coeffs: &C,
    cfg: &StableJumpConfig,
    spec: &SimSpec,
    master_seed: u64,
) -> Vec<[f64; 2]> {
    (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut noise = NoiseStream::new(master_seed, i, coeffs.dim(), *cfg, coeffs.bound());
            integrate(
                x0,
                coeffs,
                0.0,
                spec.dt,
                spec.steps(),
                || noise.next_event(),
                |_, _, _| {},
                |_, _| {},
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridFunction, TorusGrid};
    use crate::jump::DirectCoefficients;
    use crate::kernels::{DirectionField, Kernel};
    use crate::stats::{ks_p_value, ks_statistic};
    use std::f64::consts::PI;

    #[test]
    fn same_seed_same_path() {
        let k = Kernel::rough_x(1, 1.5, 0.9, 0.5, 2.0 * PI).unwrap();
        let cfg = StableJumpConfig::new(1.5, 0.05, 2.0).unwrap();
        let g = TorusGrid::new(1, 64, 2.0 * PI).unwrap();
        let b = vec![GridFunction::from_fn(g, |x| x[0].sin())];
        let c = DirectCoefficients::new(&k, &b, &cfg).unwrap();
        let spec = SimSpec::new(1.0, 0.01).unwrap();
        let a = simulate_path([0.1, 0.0], &c, &cfg, &spec, 7, 3);
        let b2 = simulate_path([0.1, 0.0], &c, &cfg, &spec, 7, 3);
        assert_eq!(a, b2);
        let other = simulate_path([0.1, 0.0], &c, &cfg, &spec, 7, 4);
        assert_ne!(a.states, other.states);
    }

    #[test]
    fn zero_kernel_is_pure_drift() {
        let k = Kernel::constant(1, 1.5, 0.0).unwrap();
        let cfg = StableJumpConfig::new(1.5, 0.05, 2.0).unwrap();
        let g = TorusGrid::new(1, 64, 2.0 * PI).unwrap();
        let b = vec![GridFunction::constant(g, 0.75)];
        let c = DirectCoefficients::new(&k, &b, &cfg).unwrap();
        let spec = SimSpec::new(1.0, 0.01).unwrap();
        let p = simulate_path([0.0, 0.0], &c, &cfg, &spec, 1, 0);
        assert!((p.states.last().unwrap()[0] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn thinning_reproduces_radius_law_and_cone() {
        let k = Kernel::conical(2, 1.2, DirectionField::Constant(0.0), 0.5).unwrap();
        let cfg = StableJumpConfig::new(1.2, 0.05, 3.0).unwrap();
        let c = DirectCoefficients::new(&k, &[], &cfg).unwrap();
        let mut spec = SimSpec::new(200.0, 1.0).unwrap();
        spec.record_jumps = true;
        let p = simulate_path([0.0, 0.0], &c, &cfg, &spec, 2, 0);
        let acc: Vec<&JumpRecord> = p.jumps.iter().filter(|j| j.accepted).collect();
        assert!(acc.len() > 10000);
        assert!(acc
            .iter()
            .all(|j| (j.z[0] / j.z[0].hypot(j.z[1])).abs() > 0.5));
        let radii: Vec<f64> = acc.iter().map(|j| j.z[0].hypot(j.z[1])).collect();
        let (a, e, r) = (1.2f64, 0.05f64, 3.0f64);
        let cdf = |x: f64| (e.powf(-a) - x.powf(-a)) / (e.powf(-a) - r.powf(-a));
        assert!(ks_p_value(ks_statistic(&radii, cdf), radii.len()) > 0.01);
        // accepted fraction equals the cone fraction 2/3
        let frac = acc.len() as f64 / p.jumps.len() as f64;
        assert!((frac - 2.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn ensemble_round_trip_and_order_independence() {
        let k = Kernel::constant(1, 1.5, 1.0).unwrap();
        let cfg = StableJumpConfig::new(1.5, 0.1, 2.0).unwrap();
        let c = DirectCoefficients::new(&k, &[], &cfg).unwrap();
        let mut spec = SimSpec::new(0.5, 0.05).unwrap();
        spec.record_every = 2;
        let e = simulate_ensemble(20, [0.0, 0.0], &c, &cfg, &spec, 5, "iso");
        let single = simulate_path([0.0, 0.0], &c, &cfg, &spec, 5, 13);
        assert_eq!(e.paths[13], single);
        let (d, a, states) = PathEnsemble::read_states(&e.to_bytes()).unwrap();
        assert_eq!((d, a), (1, 1.5));
        assert_eq!(states[13], single.states);
        let m = simulate_marginals(20, [0.0, 0.0], &c, &cfg, &spec, 5);
        assert_eq!(m[13], *single.states.last().unwrap());
    }
}
