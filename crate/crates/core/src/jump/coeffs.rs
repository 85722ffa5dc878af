//! Coefficient triples `(a, g, k)` for `dY = a dt + ∫ g(Y−, z) 1_{r ≤ k(Y−, z)} N(dr, dz, dt)`.

use std::f64::consts::PI;

use super::StableJumpConfig;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, TorusGrid, TrigInterpolant};
use crate::kernels::Kernel;
use crate::nonlocal::Compensation;
use crate::quadrature::{gauss_legendre, log_cells};
use crate::resolvent::ZvonkinMap;

pub trait JumpCoefficients: Send + Sync {
    fn dim(&self) -> usize;
    /// Dominating intensity `Λ2 ≥ sup k`.
    fn bound(&self) -> f64;
    fn drift(&self, x: &[f64; 2]) -> [f64; 2];
    fn intensity(&self, x: &[f64; 2], z: &[f64; 2]) -> f64;
    fn jump(&self, x: &[f64; 2], z: &[f64; 2]) -> [f64; 2];
    /// Compensator drift for the simulated band.
    fn compensator(&self, _x: &[f64; 2]) -> [f64; 2] {
        [0.0; 2]
    }
    /// Integrand of the recorded drift functional `A_t`.
    fn functional(&self, x: &[f64; 2]) -> [f64; 2] {
        self.drift(x)
    }
}

fn interp_components(fields: &[GridFunction], x: &[f64; 2]) -> [f64; 2] {
    let mut out = [0.0; 2];
    for (o, f) in out.iter_mut().zip(fields) {
        *o = f.interp_linear(&x[..f.grid().dim()]);
    }
    out
}

/// `a = b`, `g(x, z) = z`, `k = κ`.
#[derive(Clone, Debug)]
pub struct DirectCoefficients {
    kernel: Kernel,
    drift: Vec<GridFunction>,
    comp: Option<Vec<GridFunction>>,
    bound: f64,
}

impl DirectCoefficients {
    /// `drift` has one grid function per dimension, or is empty for `b = 0`.
    pub fn new(kernel: &Kernel, drift: &[GridFunction], cfg: &StableJumpConfig) -> Result<Self> {
        let d = kernel.dim();
        if !drift.is_empty() && drift.len() != d {
            return Err(Error::InvalidArgument(format!(
                "drift has {} components in dimension {d}",
                drift.len()
            )));
        }
        if cfg.alpha != kernel.alpha() {
            return Err(Error::InvalidArgument(format!(
                "noise α = {} differs from kernel α = {}",
                cfg.alpha,
                kernel.alpha()
            )));
        }
        let comp = if cfg.compensation == Compensation::Full && !kernel.is_even() {
            let grid = match drift.first() {
                Some(b) => *b.grid(),
                None => TorusGrid::new(d, 256, kernel.period())?,
            };
            Some(compensator_table(kernel, &grid, cfg))
        } else {
            None
        };
        Ok(Self {
            kernel: kernel.clone(),
            drift: drift.to_vec(),
            comp,
            bound: kernel.constants().lambda2,
        })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }
}

/// `−∫_{ε<|z|<R} z κ(x, z) |z|^{-d-α} dz` tabulated on `grid`.
fn compensator_table(k: &Kernel, grid: &TorusGrid, cfg: &StableJumpConfig) -> Vec<GridFunction> {
    let d = grid.dim();
    let w = cfg.drift_weight();
    let nodes: Vec<([f64; 2], f64)> = if d == 1 {
        vec![([1.0, 0.0], 1.0), ([-1.0, 0.0], 1.0)]
    } else {
        let m = 512;
        (0..m)
            .map(|i| {
                let t = 2.0 * PI * (i as f64 + 0.5) / m as f64;
                ([t.cos(), t.sin()], 2.0 * PI / m as f64)
            })
            .collect()
    };
    (0..d)
        .map(|axis| {
            GridFunction::from_fn(*grid, |x| {
                -w * nodes
                    .iter()
                    .map(|(om, wt)| om[axis] * k.angular(x, &om[..d]) * wt)
                    .sum::<f64>()
            })
        })
        .collect()
}

impl JumpCoefficients for DirectCoefficients {
    fn dim(&self) -> usize {
        self.kernel.dim()
    }

    fn bound(&self) -> f64 {
        self.bound
    }

    fn drift(&self, x: &[f64; 2]) -> [f64; 2] {
        interp_components(&self.drift, x)
    }

    fn intensity(&self, x: &[f64; 2], z: &[f64; 2]) -> f64 {
        let d = self.dim();
        self.kernel.eval(&x[..d], &z[..d])
    }

    fn jump(&self, _x: &[f64; 2], z: &[f64; 2]) -> [f64; 2] {
        *z
    }

    fn compensator(&self, x: &[f64; 2]) -> [f64; 2] {
        match &self.comp {
            Some(c) => interp_components(c, x),
            None => [0.0; 2],
        }
    }
}

/// Smooth one-dimensional triple `a = c0 sin y`, `g = z(1 + c2 cos y)`,
/// `k = 1 + c3 sin y`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticCoefficients {
    pub drift_amplitude: f64,
    pub jump_amplitude: f64,
    pub kernel_amplitude: f64,
}

impl Default for AnalyticCoefficients {
    fn default() -> Self {
        Self {
            drift_amplitude: 0.5,
            jump_amplitude: 0.25,
            kernel_amplitude: 0.5,
        }
    }
}

impl JumpCoefficients for AnalyticCoefficients {
    fn dim(&self) -> usize {
        1
    }

    fn bound(&self) -> f64 {
        1.0 + self.kernel_amplitude.abs()
    }

    fn drift(&self, x: &[f64; 2]) -> [f64; 2] {
        [self.drift_amplitude * x[0].sin(), 0.0]
    }

    fn intensity(&self, x: &[f64; 2], _z: &[f64; 2]) -> f64 {
        1.0 + self.kernel_amplitude * x[0].sin()
    }

    fn jump(&self, x: &[f64; 2], z: &[f64; 2]) -> [f64; 2] {
        [z[0] * (1.0 + self.jump_amplitude * x[0].cos()), 0.0]
    }
}

/// Coefficients of another triple frozen at `y0`.
pub struct FrozenCoefficients<'a, C: JumpCoefficients + ?Sized> {
    inner: &'a C,
    y0: [f64; 2],
}

impl<'a, C: JumpCoefficients + ?Sized> FrozenCoefficients<'a, C> {
    pub fn new(inner: &'a C, y0: [f64; 2]) -> Self {
        Self { inner, y0 }
    }
}

impl<C: JumpCoefficients + ?Sized> JumpCoefficients for FrozenCoefficients<'_, C> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn bound(&self) -> f64 {
        self.inner.bound()
    }

    fn drift(&self, _x: &[f64; 2]) -> [f64; 2] {
        self.inner.drift(&self.y0)
    }

    fn intensity(&self, _x: &[f64; 2], z: &[f64; 2]) -> f64 {
        self.inner.intensity(&self.y0, z)
    }

    fn jump(&self, _x: &[f64; 2], z: &[f64; 2]) -> [f64; 2] {
        self.inner.jump(&self.y0, z)
    }

    fn compensator(&self, _x: &[f64; 2]) -> [f64; 2] {
        self.inner.compensator(&self.y0)
    }

    fn functional(&self, _x: &[f64; 2]) -> [f64; 2] {
        self.inner.functional(&self.y0)
    }
}

/// Transformed triple `a = λu∘Φ^{-1}`, `g = Φ(Φ^{-1}(y) + z) − y`,
/// `k = κ(Φ^{-1}(y), z)`, tabulated on the solution grid.
#[derive(Clone, Debug)]
pub struct ZvonkinCoefficients {
    kernel: Kernel,
    u: Vec<GridFunction>,
    drift: Vec<GridFunction>,
    /// `Φ^{-1}(y) − y`.
    offset: Vec<GridFunction>,
    comp: Option<Vec<GridFunction>>,
    bound: f64,
}

impl ZvonkinCoefficients {
    pub fn new(map: &ZvonkinMap, cfg: &StableJumpConfig) -> Self {
        let grid = *map.u()[0].grid();
        let d = grid.dim();
        let table = map.inverse_table();
        let offset = (0..d)
            .map(|a| {
                let vals = (0..grid.len())
                    .map(|i| table[i][a] - grid.point(i)[a])
                    .collect();
                GridFunction::new(grid, vals).expect("finite table")
            })
            .collect();
        let drift = (0..d)
            .map(|a| {
                let interp = TrigInterpolant::new(&map.u()[a]);
                let vals = (0..grid.len())
                    .map(|i| map.lambda() * interp.eval(&table[i][..d]))
                    .collect();
                GridFunction::new(grid, vals).expect("finite table")
            })
            .collect();
        let comp = (cfg.compensation == Compensation::Full)
            .then(|| zvonkin_compensator(map.kernel(), map.u(), table, &grid, cfg));
        Self {
            kernel: map.kernel().clone(),
            u: map.u().to_vec(),
            drift,
            offset,
            comp,
            bound: map.kernel().constants().lambda2,
        }
    }

    fn preimage(&self, y: &[f64; 2]) -> [f64; 2] {
        let o = interp_components(&self.offset, y);
        [y[0] + o[0], y[1] + o[1]]
    }
}

/// `−∫_{ε<|z|<R} g(y, z) κ(x, z) |z|^{-d-α} dz` at `y` on `grid`, where
/// `x = Φ^{-1}(y)` is read from `table`.
fn zvonkin_compensator(
    k: &Kernel,
    u: &[GridFunction],
    table: &[[f64; 2]],
    grid: &TorusGrid,
    cfg: &StableJumpConfig,
) -> Vec<GridFunction> {
    use rayon::prelude::*;
    let d = grid.dim();
    let dirs: Vec<([f64; 2], f64)> = if d == 1 {
        vec![([1.0, 0.0], 1.0), ([-1.0, 0.0], 1.0)]
    } else {
        let m = 64;
        (0..m)
            .map(|i| {
                let t = 2.0 * PI * (i as f64 + 0.5) / m as f64;
                ([t.cos(), t.sin()], 2.0 * PI / m as f64)
            })
            .collect()
    };
    let rule = gauss_legendre(4);
    let radial: Vec<(f64, f64)> = log_cells(cfg.eps_cut, cfg.r_cut, 2f64.powf(0.25))
        .into_iter()
        .flat_map(|(a, b)| {
            let rule = rule.clone();
            (0..rule.0.len()).map(move |q| {
                let r = 0.5 * (a + b) + 0.5 * (b - a) * rule.0[q];
                (r, 0.5 * (b - a) * rule.1[q] * r.powf(-1.0 - cfg.alpha))
            })
        })
        .collect();
    let rows: Vec<[f64; 2]> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = table[i];
            let ux = interp_components(u, &x);
            let mut acc = [0.0; 2];
            for (om, wa) in &dirs {
                let kap = k.angular(&x[..d], &om[..d]);
                if kap == 0.0 {
                    continue;
                }
                for (r, wr) in &radial {
                    let xz = [x[0] + r * om[0], x[1] + r * om[1]];
                    let uz = interp_components(u, &xz);
                    for a in 0..d {
                        acc[a] -= wa * wr * kap * (r * om[a] + uz[a] - ux[a]);
                    }
                }
            }
            acc
        })
        .collect();
    (0..d)
        .map(|a| {
            GridFunction::new(*grid, rows.iter().map(|r| r[a]).collect()).expect("finite table")
        })
        .collect()
}

impl JumpCoefficients for ZvonkinCoefficients {
    fn dim(&self) -> usize {
        self.kernel.dim()
    }

    fn bound(&self) -> f64 {
        self.bound
    }

    fn drift(&self, y: &[f64; 2]) -> [f64; 2] {
        interp_components(&self.drift, y)
    }

    fn intensity(&self, y: &[f64; 2], z: &[f64; 2]) -> f64 {
        let d = self.dim();
        let x = self.preimage(y);
        self.kernel.eval(&x[..d], &z[..d])
    }

    fn compensator(&self, y: &[f64; 2]) -> [f64; 2] {
        match &self.comp {
            Some(c) => interp_components(c, y),
            None => [0.0; 2],
        }
    }

    fn jump(&self, y: &[f64; 2], z: &[f64; 2]) -> [f64; 2] {
        let x = self.preimage(y);
        let xz = [x[0] + z[0], x[1] + z[1]];
        let a = interp_components(&self.u, &xz);
        let b = interp_components(&self.u, &x);
        [z[0] + a[0] - b[0], z[1] + a[1] - b[1]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_sided_kernel_has_compensator() {
        let k = Kernel::custom(
            "right",
            1,
            1.5,
            std::sync::Arc::new(|_x: &[f64], w: &[f64]| if w[0] > 0.0 { 1.0 } else { 0.0 }),
            crate::kernels::KernelConstants {
                lambda1: 1.0,
                lambda2: 1.0,
                lambda3: 0.0,
                theta: 1.0,
                r0: 1.0,
            },
            true,
            false,
        )
        .unwrap();
        let cfg = StableJumpConfig::new(1.5, 0.1, 10.0).unwrap();
        let c = DirectCoefficients::new(&k, &[], &cfg).unwrap();
        let v = c.compensator(&[0.3, 0.0])[0];
        assert!((v + cfg.drift_weight()).abs() < 1e-12);
        let even = Kernel::constant(1, 1.5, 1.0).unwrap();
        let c = DirectCoefficients::new(&even, &[], &cfg).unwrap();
        assert_eq!(c.compensator(&[0.3, 0.0]), [0.0, 0.0]);
    }
}
