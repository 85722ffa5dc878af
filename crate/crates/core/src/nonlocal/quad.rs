//! Physical-space evaluation of `ℒ^α_κ f(x)` for a band-limited `f`.
//!
//! The integral is split into an inner ball `|z| < h_min`, replaced by a
//! Taylor bracket, a near field `h_min ≤ |z| ≤ R_max` on log-graded radial
//! cells, and a tail `|z| > R_max` integrated mode by mode in closed form.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::symbol::{angular_integral, upper_incomplete, Compensation};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, TrigInterpolant};
use crate::kernels::Kernel;
use crate::quadrature::{gauss_legendre, log_cells};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureOptions {
    /// Inner radius; chosen from `tolerance` when `None`.
    pub h_min: Option<f64>,
    /// Outer radius of the near field; `L/2` when `None`.
    pub r_max: Option<f64>,
    /// Largest admissible remainder bracket.
    pub tolerance: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            h_min: None,
            r_max: None,
            tolerance: 1e-4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureValue {
    pub value: f64,
    /// Bound on the omitted inner-ball contribution.
    pub bracket: f64,
}

const H_FLOOR: f64 = 1e-14;

/// `(e^{iθ} − 1 − iθc)` without cancellation for small `θ`.
fn phase_defect(theta: f64, c: f64) -> Complex64 {
    let s = (0.5 * theta).sin();
    let re = -2.0 * s * s;
    let im = if c == 1.0 && theta.abs() < 1e-2 {
        let t2 = theta * theta;
        -theta * t2 / 6.0 * (1.0 - t2 / 20.0 * (1.0 - t2 / 42.0))
    } else {
        theta.sin() - c * theta
    };
    Complex64::new(re, im)
}

/// Angular nodes on `[0, 2π)` split at `breaks`, with panels no wider than `width`.
fn angular_nodes(breaks: &[f64], width: f64) -> Vec<(f64, f64)> {
    let two_pi = 2.0 * PI;
    let mut pts: Vec<f64> = breaks.iter().map(|t| t.rem_euclid(two_pi)).collect();
    pts.push(0.0);
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let rule = gauss_legendre(16);
    let mut out = Vec::new();
    for i in 0..pts.len() {
        let a = pts[i];
        let b = if i + 1 < pts.len() {
            pts[i + 1]
        } else {
            two_pi
        };
        if b - a <= 1e-15 {
            continue;
        }
        let m = ((b - a) / width).ceil().max(1.0) as usize;
        let h = (b - a) / m as f64;
        for p in 0..m {
            let (c, hw) = (a + (p as f64 + 0.5) * h, 0.5 * h);
            for (x, w) in rule.0.iter().zip(&rule.1) {
                out.push((c + hw * x, hw * w));
            }
        }
    }
    out
}

struct Setup {
    alpha: f64,
    comp: Compensation,
    /// `b_m = c_m e^{iξ_m·x}` with `ξ_m`.
    modes: Vec<([f64; 2], Complex64)>,
    xi_max: f64,
}

impl Setup {
    fn near(&self, z: [f64; 2], c: f64) -> f64 {
        self.modes
            .iter()
            .map(|(xi, b)| {
                let th = xi[0] * z[0] + xi[1] * z[1];
                let d = phase_defect(th, c);
                b.re * d.re - b.im * d.im
            })
            .sum()
    }

    /// `Re Σ_m b_m ∫_{R}^∞ (e^{iρa} − 1 − iρa c) ρ^{-1-α} dρ`, `a = ξ_m·ω`.
    fn tail(&self, a: f64, r: f64) -> Complex64 {
        let mass = r.powf(-self.alpha) / self.alpha;
        let drift = self.comp.integral(self.alpha, r, f64::INFINITY);
        upper_incomplete(self.alpha, a, r) - Complex64::new(mass, a * drift)
    }
}

/// `ℒ^α_κ f(x)` by physical-space quadrature with a remainder bracket.
pub fn apply_quadrature(
    k: &Kernel,
    f: &GridFunction,
    x: &[f64],
    opts: &QuadratureOptions,
) -> Result<QuadratureValue> {
    let grid = f.grid();
    if k.dim() != grid.dim() || x.len() != grid.dim() {
        return Err(Error::GridMismatch);
    }
    let d = grid.dim();
    let alpha = k.alpha();
    let interp = TrigInterpolant::new(f);
    let modes: Vec<([f64; 2], Complex64)> = interp
        .modes()
        .iter()
        .map(|(xi, c)| {
            let ph = xi[0] * x[0] + if d == 2 { xi[1] * x[1] } else { 0.0 };
            (*xi, c * Complex64::new(ph.cos(), ph.sin()))
        })
        .collect();
    let symmetric = alpha == 1.0 && k.is_even();
    let comp = if symmetric {
        Compensation::None
    } else {
        Compensation::for_alpha(alpha)
    };
    let setup = Setup {
        alpha,
        comp,
        xi_max: interp.max_frequency().max(1e-300),
        modes,
    };
    let r_max = opts.r_max.unwrap_or(0.5 * grid.length());

    let mut breaks = k.angular_breakpoints(x);
    if d == 2 && symmetric {
        breaks.extend(breaks.clone().iter().map(|t| t + PI));
        breaks.push(PI);
    }
    let sphere: Vec<([f64; 2], f64)> = if d == 1 {
        vec![([1.0, 0.0], 1.0), ([-1.0, 0.0], 1.0)]
    } else {
        angular_nodes(&breaks, PI / 8.0)
            .into_iter()
            .map(|(t, w)| ([t.cos(), t.sin()], w))
            .collect()
    };
    let kap = |om: &[f64; 2]| k.angular(x, &om[..d]);
    let mass_s: f64 = sphere.iter().map(|(om, w)| kap(om) * w).sum();
    let mut first = [0.0f64; 2];
    for (om, w) in &sphere {
        first[0] += om[0] * kap(om) * w;
        first[1] += om[1] * kap(om) * w;
    }

    let m2 = interp.hessian_bound();
    let bracket_at = |h: f64| 0.5 * m2 * mass_s * h.powf(2.0 - alpha) / (2.0 - alpha);
    let h_min = match opts.h_min {
        Some(h) => h,
        None => {
            let target = 0.1 * opts.tolerance;
            let unit = bracket_at(1.0);
            let h = if unit > 0.0 {
                (target / unit).powf(1.0 / (2.0 - alpha))
            } else {
                grid.spacing()
            };
            h.clamp(H_FLOOR, 0.5 * grid.spacing())
        }
    };
    if !(h_min > 0.0 && h_min < r_max) {
        return Err(Error::InvalidArgument(format!(
            "quadrature band [{h_min}, {r_max}] is empty"
        )));
    }
    let bracket = bracket_at(h_min);
    if bracket > opts.tolerance {
        return Err(Error::RemainderTooLarge {
            bracket,
            tolerance: opts.tolerance,
        });
    }

    let mut value = 0.0;
    if alpha < 1.0 {
        let g = interp.gradient(x);
        value += (g[0] * first[0] + g[1] * first[1]) * h_min.powf(1.0 - alpha) / (1.0 - alpha);
    }

    // near field
    let rule = gauss_legendre(8);
    let mut cells = log_cells(h_min, r_max, 2f64.powf(0.125));
    if comp == Compensation::Ring && h_min < 1.0 && r_max > 1.0 {
        cells = log_cells(h_min, 1.0, 2f64.powf(0.125));
        cells.extend(log_cells(1.0, r_max, 2f64.powf(0.125)));
    }
    let radial_width = 2.0 / setup.xi_max;
    for (lo, hi) in cells {
        let panels = ((hi - lo) / radial_width).ceil().max(1.0) as usize;
        let h = (hi - lo) / panels as f64;
        for p in 0..panels {
            let (c, hw) = (lo + (p as f64 + 0.5) * h, 0.5 * h);
            for (t, w) in rule.0.iter().zip(&rule.1) {
                let rho = c + hw * t;
                let wr = hw * w * rho.powf(-1.0 - alpha);
                let cw = comp.weight(rho);
                let ring: Vec<([f64; 2], f64)>;
                let nodes = if d == 1 {
                    &sphere
                } else {
                    let width = (PI / 8.0).min(1.0 / (rho * setup.xi_max));
                    if width >= PI / 8.0 {
                        &sphere
                    } else {
                        ring = angular_nodes(&breaks, width)
                            .into_iter()
                            .map(|(t, w)| ([t.cos(), t.sin()], w))
                            .collect();
                        &ring
                    }
                };
                let mut acc = 0.0;
                for (om, wo) in nodes {
                    let kv = kap(om);
                    if kv != 0.0 {
                        acc += kv * wo * setup.near([rho * om[0], rho * om[1]], cw);
                    }
                }
                value += wr * acc;
            }
        }
    }

    // tail
    let mut tail = 0.0;
    if d == 1 {
        for (om, _) in &sphere {
            let kv = kap(om);
            for (xi, b) in &setup.modes {
                let v = setup.tail(xi[0] * om[0], r_max);
                tail += kv * (b * v).re;
            }
        }
    } else {
        for (xi, b) in &setup.modes {
            let norm = xi[0].hypot(xi[1]);
            if norm == 0.0 {
                continue;
            }
            let t = xi[1].atan2(xi[0]);
            let v = angular_integral(&breaks, &[t + PI / 2.0, t - PI / 2.0], |th| {
                let kv = k.angular_at(x, th);
                if kv == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    setup.tail(norm * (th - t).cos(), r_max) * kv
                }
            });
            tail += (b * v).re;
        }
    }
    value += tail;
    Ok(QuadratureValue { value, bracket })
}

/// [`apply_quadrature`] at every grid point.
pub fn apply_variable_quadrature(
    k: &Kernel,
    f: &GridFunction,
    opts: &QuadratureOptions,
) -> Result<Vec<QuadratureValue>> {
    use rayon::prelude::*;
    let grid = *f.grid();
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let p = grid.point(i);
            apply_quadrature(k, f, &p[..grid.dim()], opts)
        })
        .collect()
}
