//! Forward equation `∂_t ϱ = (ℒ + b·∇)^* ϱ` on the torus.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::density::l1_distance;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, TorusGrid};
use crate::kernels::Kernel;
use crate::nonlocal::{NonlocalOperator, SymbolSpec};
use crate::rng::{stream, AUX};
use crate::stats::neumaier_sum;

/// Generator data `(κ, b)` with the adjoint assembled against the Fourier basis.
#[derive(Clone, Debug)]
pub struct FpeProblem {
    op: NonlocalOperator,
    drift: Vec<GridFunction>,
    /// `exp(dt · conj ψ̄)` is built from this table.
    mean_adjoint: Vec<Complex64>,
}

impl FpeProblem {
    /// `b` has one component per dimension, or is empty for `b = 0`.
    pub fn new(k: &Kernel, b: &[GridFunction], grid: &TorusGrid, spec: SymbolSpec) -> Result<Self> {
        if !b.is_empty() && b.len() != grid.dim() {
            return Err(Error::InvalidArgument(format!(
                "drift has {} components in dimension {}",
                b.len(),
                grid.dim()
            )));
        }
        for c in b {
            grid.check_same(c.grid())?;
        }
        let op = NonlocalOperator::with_spec(k, grid, spec)?;
        let mean_adjoint = op.mean_symbol().iter().map(|s| s.conj()).collect();
        Ok(Self {
            op,
            drift: b.to_vec(),
            mean_adjoint,
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        self.op.grid()
    }

    pub fn operator(&self) -> &NonlocalOperator {
        &self.op
    }

    fn divergence(&self, rho: &GridFunction) -> Result<Option<GridFunction>> {
        let mut acc: Option<GridFunction> = None;
        for (axis, b) in self.drift.iter().enumerate() {
            let flux = b.mul(rho)?.derivative(axis);
            acc = Some(match acc {
                None => flux,
                Some(a) => a.add(&flux)?,
            });
        }
        Ok(acc)
    }

    /// `(ℒ + b·∇)^* ϱ = ℒ^* ϱ − ∇·(b ϱ)`.
    pub fn adjoint_apply(&self, rho: &GridFunction) -> Result<GridFunction> {
        let l = self.op.apply_adjoint(rho)?;
        match self.divergence(rho)? {
            Some(div) => l.sub(&div),
            None => Ok(l),
        }
    }

    /// `(ℒ^* − ℒ̄^*) ϱ − ∇·(b ϱ)`, the part advanced explicitly.
    fn explicit(&self, rho: &GridFunction) -> Result<Option<GridFunction>> {
        let var = if self.op.is_x_independent() {
            None
        } else {
            let mean = rho.apply_table(&self.mean_adjoint);
            Some(self.op.apply_adjoint(rho)?.sub(&mean)?)
        };
        Ok(match (var, self.divergence(rho)?) {
            (None, None) => None,
            (Some(v), None) => Some(v),
            (None, Some(d)) => Some(d.scale(-1.0)),
            (Some(v), Some(d)) => Some(v.sub(&d)?),
        })
    }

    /// `⟨ϱ, (ℒ + b·∇) φ⟩` by cell quadrature.
    pub fn pair_generator(&self, rho: &GridFunction, phi: &GridFunction) -> Result<f64> {
        let mut g = self.op.apply(phi)?;
        for (axis, b) in self.drift.iter().enumerate() {
            g = g.add(&b.mul(&phi.derivative(axis))?)?;
        }
        pairing(rho, &g)
    }
}

/// `⟨f, g⟩ = Σ f g · cell`.
pub fn pairing(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    f.grid().check_same(g.grid())?;
    Ok(
        f.grid().cell_volume()
            * neumaier_sum(f.values().iter().zip(g.values()).map(|(a, b)| a * b)),
    )
}

/// Adjoint of `ℒ_κ + b·∇` with the full symbol.
pub fn adjoint_apply(k: &Kernel, b: &[GridFunction], rho: &GridFunction) -> Result<GridFunction> {
    FpeProblem::new(k, b, rho.grid(), SymbolSpec::full(k.alpha()))?.adjoint_apply(rho)
}

/// Unit-mass triweight bump of half-width `width` cells centred at `x0`.
pub fn initial_bump(grid: &TorusGrid, x0: &[f64], width: f64) -> Result<GridFunction> {
    if !(width > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bump width {width} must be positive"
        )));
    }
    let d = grid.dim();
    let h = width * grid.spacing();
    let len = grid.length();
    let wrapped = |a: f64, b: f64| {
        let t = (a - b).rem_euclid(len);
        t.min(len - t)
    };
    let raw = GridFunction::from_fn(*grid, |x| {
        (0..d)
            .map(|a| {
                let s = wrapped(x[a], x0[a]) / h;
                if s < 1.0 {
                    (1.0 - s * s).powi(3)
                } else {
                    0.0
                }
            })
            .product()
    });
    let mass = raw.integral();
    if mass == 0.0 {
        return Err(Error::InvalidArgument("bump narrower than the grid".into()));
    }
    Ok(raw.scale(1.0 / mass))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Splitting {
    /// `ϱ ← e^{dt A}(ϱ + dt E ϱ)`.
    Lie,
    /// `ϱ ← e^{dt A/2} H e^{dt A/2} ϱ` with a Heun step `H` for `E`.
    Strang,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FpeScheme {
    pub dt: f64,
    pub splitting: Splitting,
}

impl FpeScheme {
    pub fn lie(dt: f64) -> Self {
        Self {
            dt,
            splitting: Splitting::Lie,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FpeLogRow {
    pub step: usize,
    pub t: f64,
    pub mass: f64,
    pub mass_drift: f64,
    pub min: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FpeSnapshot {
    pub t: f64,
    #[serde(skip)]
    pub rho: GridFunction,
    /// Clipped and renormalised copy of `rho`.
    #[serde(skip)]
    pub clipped: GridFunction,
    pub clipped_mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FpeTrajectory {
    pub scheme: FpeScheme,
    pub snapshots: Vec<FpeSnapshot>,
    pub log: Vec<FpeLogRow>,
    pub max_mass_drift: f64,
    pub amplification: f64,
}

impl FpeTrajectory {
    /// `t,mass,mass_drift,min` per step.
    pub fn log_csv(&self) -> String {
        let mut s = String::from("step,t,mass,mass_drift,min\n");
        for r in &self.log {
            s.push_str(&format!(
                "{},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                r.step, r.t, r.mass, r.mass_drift, r.min
            ));
        }
        s
    }

    pub fn at(&self, t: f64) -> Option<&FpeSnapshot> {
        self.snapshots
            .iter()
            .find(|s| (s.t - t).abs() < 1e-12 * t.max(1.0))
    }
}

struct Stepper<'a> {
    problem: &'a FpeProblem,
    scheme: FpeScheme,
    full: Vec<Complex64>,
    half: Vec<Complex64>,
}

impl<'a> Stepper<'a> {
    fn new(problem: &'a FpeProblem, scheme: FpeScheme) -> Self {
        let exp = |s: f64| -> Vec<Complex64> {
            problem.mean_adjoint.iter().map(|m| (m * s).exp()).collect()
        };
        Self {
            problem,
            scheme,
            full: exp(scheme.dt),
            half: exp(0.5 * scheme.dt),
        }
    }

    fn explicit(&self, rho: GridFunction) -> Result<GridFunction> {
        match self.problem.explicit(&rho)? {
            Some(e) => rho.add(&e.scale(self.scheme.dt)),
            None => Ok(rho),
        }
    }

    /// Heun step `I + dt E + dt² E²/2` for the explicit part.
    fn explicit_heun(&self, rho: GridFunction) -> Result<GridFunction> {
        let k1 = match self.problem.explicit(&rho)? {
            Some(e) => e,
            None => return Ok(rho),
        };
        let mid = rho.add(&k1.scale(self.scheme.dt))?;
        let k2 = self.problem.explicit(&mid)?.expect("explicit part present");
        rho.add(&k1.add(&k2)?.scale(0.5 * self.scheme.dt))
    }

    fn step(&self, rho: &GridFunction) -> Result<GridFunction> {
        match self.scheme.splitting {
            Splitting::Lie => Ok(self.explicit(rho.clone())?.apply_table(&self.full)),
            Splitting::Strang => {
                let a = rho.apply_table(&self.half);
                Ok(self.explicit_heun(a)?.apply_table(&self.half))
            }
        }
    }

    /// Growth rate of the step on mean-zero data, by power iteration.
    fn amplification(&self, iterations: usize) -> Result<f64> {
        let grid = *self.problem.grid();
        let mut rng = stream(0x5eed, 0, AUX);
        let raw: Vec<f64> = (0..grid.len()).map(|_| rng.random::<f64>() - 0.5).collect();
        let mut v = GridFunction::new(grid, raw)?;
        let mut rate = 0.0;
        for _ in 0..iterations {
            let m = v.mean();
            v = v.map(|x| x - m);
            let n0 = v.lp_norm(2.0);
            if n0 == 0.0 {
                return Ok(0.0);
            }
            v = v.scale(1.0 / n0);
            v = self.step(&v)?;
            rate = v.lp_norm(2.0);
        }
        Ok(rate)
    }
}

/// Advances `rho0` to `t_end`, keeping snapshots at `times` (multiples of `dt`).
pub fn evolve(
    problem: &FpeProblem,
    rho0: &GridFunction,
    t_end: f64,
    scheme: FpeScheme,
    times: &[f64],
) -> Result<FpeTrajectory> {
    problem.grid().check_same(rho0.grid())?;
    let steps = (t_end / scheme.dt).round() as usize;
    if !(scheme.dt > 0.0) || ((steps as f64) * scheme.dt - t_end).abs() > 1e-9 * t_end.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "T = {t_end} is not a multiple of dt = {}",
            scheme.dt
        )));
    }
    let mut marks = Vec::with_capacity(times.len());
    for &t in times {
        let k = (t / scheme.dt).round() as usize;
        if k > steps || ((k as f64) * scheme.dt - t).abs() > 1e-9 * t.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "snapshot time {t} is off the time grid"
            )));
        }
        marks.push(k);
    }
    let stepper = Stepper::new(problem, scheme);
    let amplification = stepper.amplification(40)?;
    if amplification > 1.0 + 1e-9 {
        return Err(Error::UnstableStep {
            dt: scheme.dt,
            radius: amplification,
        });
    }
    let snapshot = |t: f64, rho: &GridFunction| -> Result<FpeSnapshot> {
        let cell = rho.grid().cell_volume();
        let negative = cell * neumaier_sum(rho.values().iter().map(|v| (-v).max(0.0)));
        let mass = rho.integral();
        if negative > 0.01 * mass.abs() {
            return Err(Error::ClippingExcess {
                fraction: negative / mass.abs(),
            });
        }
        let pos = rho.map(|v| v.max(0.0));
        let total = pos.integral();
        Ok(FpeSnapshot {
            t,
            rho: rho.clone(),
            clipped: pos.scale(1.0 / total),
            clipped_mass: negative,
        })
    };
    let mut rho = rho0.clone();
    let mut mass = rho.integral();
    let min0 = rho.values().iter().copied().fold(f64::INFINITY, f64::min);
    let mut log = vec![FpeLogRow {
        step: 0,
        t: 0.0,
        mass,
        mass_drift: 0.0,
        min: min0,
    }];
    let mut snapshots = Vec::new();
    for (k, _) in marks.iter().enumerate().filter(|(_, &m)| m == 0) {
        snapshots.push((k, snapshot(0.0, &rho)?));
    }
    let mut max_mass_drift = 0.0f64;
    for step in 1..=steps {
        rho = stepper.step(&rho)?;
        let m = rho.integral();
        let drift = (m - mass).abs();
        if drift > 1e-8 {
            return Err(Error::MassDrift { step, drift });
        }
        max_mass_drift = max_mass_drift.max(drift);
        mass = m;
        let t = step as f64 * scheme.dt;
        log.push(FpeLogRow {
            step,
            t,
            mass,
            mass_drift: drift,
            min: rho.values().iter().copied().fold(f64::INFINITY, f64::min),
        });
        for (k, _) in marks.iter().enumerate().filter(|(_, &m)| m == step) {
            snapshots.push((k, snapshot(t, &rho)?));
        }
    }
    snapshots.sort_by_key(|(k, _)| *k);
    Ok(FpeTrajectory {
        scheme,
        snapshots: snapshots.into_iter().map(|(_, s)| s).collect(),
        log,
        max_mass_drift,
        amplification,
    })
}

/// L¹ gaps between two schemes run from the same initial datum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub a: FpeScheme,
    pub b: FpeScheme,
    pub times: Vec<f64>,
    pub gaps: Vec<f64>,
    pub sup_gap: f64,
}

pub fn uniqueness_probe(
    problem: &FpeProblem,
    rho0: &GridFunction,
    t_end: f64,
    a: FpeScheme,
    b: FpeScheme,
    times: &[f64],
) -> Result<UniquenessReport> {
    let ta = evolve(problem, rho0, t_end, a, times)?;
    let tb = evolve(problem, rho0, t_end, b, times)?;
    let gaps = ta
        .snapshots
        .iter()
        .zip(&tb.snapshots)
        .map(|(x, y)| l1_distance(&x.rho, &y.rho))
        .collect::<Result<Vec<f64>>>()?;
    Ok(UniquenessReport {
        a,
        b,
        times: times.to_vec(),
        sup_gap: gaps.iter().copied().fold(0.0, f64::max),
        gaps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::stable_density_scaled;
    use crate::nonlocal::stable_constant;
    use std::f64::consts::PI;

    fn grid(n: usize) -> TorusGrid {
        TorusGrid::new(1, n, 2.0 * PI).unwrap()
    }

    #[test]
    fn constant_kernel_adjoint_is_conjugate_symbol() {
        let g = grid(64);
        let k = Kernel::constant(1, 1.5, 1.0).unwrap();
        let rho = GridFunction::from_fn(g, |x| {
            1.0 + 0.3 * (2.0 * x[0]).sin() + 0.1 * (5.0 * x[0]).cos()
        });
        let a = adjoint_apply(&k, &[], &rho).unwrap();
        let direct = crate::nonlocal::NonlocalOperator::new(&k, &g)
            .unwrap()
            .apply(&rho)
            .unwrap();
        assert!(a.sub(&direct).unwrap().sup_norm() < 1e-10);
        assert!(a.integral().abs() < 1e-12);
    }

    #[test]
    fn weak_pairing_matches_for_variable_kernel() {
        let g = grid(64);
        let k = Kernel::rough_x(1, 1.5, 0.9, 0.5, 2.0 * PI).unwrap();
        let b = vec![GridFunction::from_fn(g, |x| 0.7 * x[0].cos())];
        let p = FpeProblem::new(&k, &b, &g, SymbolSpec::full(1.5)).unwrap();
        let rho = initial_bump(&g, &[1.0], 6.0).unwrap();
        let lr = p.adjoint_apply(&rho).unwrap();
        let mut rng = stream(3, 0, AUX);
        for _ in 0..20 {
            let coeffs: Vec<(f64, f64)> = (1..6)
                .map(|_| (rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let phi = GridFunction::from_fn(g, |x| {
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(m, (a, c))| {
                        a * ((m + 1) as f64 * x[0]).cos() + c * ((m + 1) as f64 * x[0]).sin()
                    })
                    .sum()
            });
            let lhs = pairing(&lr, &phi).unwrap();
            let rhs = p.pair_generator(&rho, &phi).unwrap();
            assert!((lhs - rhs).abs() < 1e-8, "{lhs} vs {rhs}");
        }
        assert!(lr.integral().abs() < 1e-12);
    }

    #[test]
    fn pure_stable_flow_matches_oracle() {
        let g = grid(512);
        let k = Kernel::constant(1, 1.5, 1.0).unwrap();
        let p = FpeProblem::new(&k, &[], &g, SymbolSpec::full(1.5)).unwrap();
        let c = stable_constant(1, 1.5);
        let rho0 = stable_density_scaled(1.5, c, 0.1, &[1.0], &g)
            .unwrap()
            .density;
        let tr = evolve(&p, &rho0, 0.5, FpeScheme::lie(0.01), &[0.5]).unwrap();
        let exact = stable_density_scaled(1.5, c, 0.6, &[1.0], &g)
            .unwrap()
            .density;
        let rel = l1_distance(&tr.snapshots[0].rho, &exact).unwrap() / exact.integral();
        assert!(rel < 1e-4, "{rel}");
        assert!(tr.max_mass_drift < 1e-12);
    }

    #[test]
    fn constant_drift_translates() {
        let g = grid(256);
        let k = Kernel::constant(1, 1.5, 1.0).unwrap();
        let cst = 0.8;
        let b = vec![GridFunction::constant(g, cst)];
        let p = FpeProblem::new(&k, &b, &g, SymbolSpec::full(1.5)).unwrap();
        let c = stable_constant(1, 1.5);
        let rho0 = stable_density_scaled(1.5, c, 0.2, &[1.0], &g)
            .unwrap()
            .density;
        let tr = evolve(&p, &rho0, 0.5, FpeScheme::lie(1e-4), &[0.5]).unwrap();
        let exact = stable_density_scaled(1.5, c, 0.7, &[1.0 + cst * 0.5], &g)
            .unwrap()
            .density;
        let err = l1_distance(&tr.snapshots[0].rho, &exact).unwrap();
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn identical_schemes_agree_and_refinement_is_first_order() {
        let g = grid(128);
        let k = Kernel::rough_x(1, 1.5, 0.9, 0.5, 2.0 * PI).unwrap();
        let b = vec![GridFunction::from_fn(g, |x| 0.5 + x[0].sin())];
        let p = FpeProblem::new(&k, &b, &g, SymbolSpec::full(1.5)).unwrap();
        let rho0 = initial_bump(&g, &[2.0], 8.0).unwrap();
        let same = uniqueness_probe(
            &p,
            &rho0,
            0.25,
            FpeScheme::lie(0.01),
            FpeScheme::lie(0.01),
            &[0.25],
        )
        .unwrap();
        assert_eq!(same.sup_gap, 0.0);
        let coarse = uniqueness_probe(
            &p,
            &rho0,
            0.25,
            FpeScheme::lie(0.01),
            FpeScheme::lie(0.005),
            &[0.25],
        )
        .unwrap();
        let fine = uniqueness_probe(
            &p,
            &rho0,
            0.25,
            FpeScheme::lie(0.005),
            FpeScheme::lie(0.0025),
            &[0.25],
        )
        .unwrap();
        let ratio = coarse.sup_gap / fine.sup_gap;
        assert!((ratio - 2.0).abs() < 0.3, "{ratio}");
    }

    #[test]
    fn duality_by_finite_differences() {
        let g = grid(128);
        let k = Kernel::rough_x(1, 1.5, 0.9, 0.5, 2.0 * PI).unwrap();
        let b = vec![GridFunction::from_fn(g, |x| 0.3 * (2.0 * x[0]).cos())];
        let p = FpeProblem::new(&k, &b, &g, SymbolSpec::full(1.5)).unwrap();
        let rho0 = initial_bump(&g, &[3.0], 10.0).unwrap();
        let dt = 1e-4;
        let mut rng = stream(11, 0, AUX);
        let times: Vec<f64> = (1..=10).map(|i| i as f64 * 0.02).collect();
        let mut all = Vec::new();
        for &t in &times {
            all.push(t - dt);
            all.push(t + dt);
            all.push(t);
        }
        let tr = evolve(
            &p,
            &rho0,
            0.21,
            FpeScheme {
                dt,
                splitting: Splitting::Strang,
            },
            &all,
        )
        .unwrap();
        for &t in &times {
            let m = 1 + rng.random_range(0..4);
            let phi = GridFunction::from_fn(g, |x| (m as f64 * x[0]).cos() + 0.5 * x[0].sin());
            let lo = pairing(&tr.at(t - dt).unwrap().rho, &phi).unwrap();
            let hi = pairing(&tr.at(t + dt).unwrap().rho, &phi).unwrap();
            let fd = (hi - lo) / (2.0 * dt);
            let gen = p.pair_generator(&tr.at(t).unwrap().rho, &phi).unwrap();
            assert!(
                (fd - gen).abs() <= 1e-3 * gen.abs().max(1e-2),
                "{fd} vs {gen}"
            );
        }
    }
}
