//! Sampling validators for the kernel hypotheses. A PASS means no
//! counterexample was found at the recorded resolution.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::{ball_constant, Kernel};
use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, log_cells};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationRow {
    pub check: String,
    pub x: Vec<f64>,
    pub r: f64,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub resolution: String,
    pub rows: Vec<ValidationRow>,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ValidationRow> {
        self.rows.iter().filter(|r| !r.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("check,x,r,measured,bound,pass\n");
        for row in &self.rows {
            let x: Vec<String> = row.x.iter().map(|v| format!("{v:.6}")).collect();
            s.push_str(&format!(
                "{},{},{:.6e},{:.10e},{:.10e},{}\n",
                row.check,
                x.join(" "),
                row.r,
                row.measured,
                row.bound,
                if row.pass { "PASS" } else { "FAIL" }
            ));
        }
        s
    }

    pub fn merge(mut self, other: ValidationReport) -> Self {
        self.resolution = format!("{}; {}", self.resolution, other.resolution);
        self.rows.extend(other.rows);
        self
    }
}

/// Regular lattice of `m^d` points in `[0, period)^d`.
pub fn sample_points(dim: usize, period: f64, m: usize) -> Vec<Vec<f64>> {
    let h = period / m as f64;
    if dim == 1 {
        (0..m).map(|i| vec![i as f64 * h]).collect()
    } else {
        (0..m * m)
            .map(|i| vec![(i / m) as f64 * h, (i % m) as f64 * h])
            .collect()
    }
}

/// Neighbouring lattice pairs along each axis, spacing `period / m`.
pub fn adjacent_pairs(dim: usize, period: f64, m: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let h = period / m as f64;
    let mut out = Vec::new();
    for x in sample_points(dim, period, m) {
        for axis in 0..dim {
            let mut y = x.clone();
            y[axis] += h;
            out.push((x.clone(), y));
        }
    }
    out
}

/// Midpoint angular nodes with equal weights (or `±1` in 1D).
fn angular_nodes(dim: usize, n: usize) -> Vec<(Vec<f64>, f64)> {
    if dim == 1 {
        return vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)];
    }
    let w = 2.0 * PI / n as f64;
    (0..n)
        .map(|k| {
            let t = (k as f64 + 0.5) * w;
            (vec![t.cos(), t.sin()], w)
        })
        .collect()
}

/// `∫_a^b ρ^{p} dρ` by Gauss–Legendre on log cells of ratio `2^{1/8}`.
fn radial_moment(a: f64, b: f64, p: f64) -> f64 {
    let rule = gauss_legendre(8);
    log_cells(a, b, 2f64.powf(0.125))
        .iter()
        .map(|&(lo, hi)| {
            let (m, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            rule.0
                .iter()
                .zip(&rule.1)
                .map(|(x, w)| h * w * (m + h * x).powf(p))
                .sum::<f64>()
        })
        .sum()
}

/// Polar tensor quadrature of `∫_{B_r} κ(x, z) dz` with `n` angular nodes.
fn ball_mass(k: &Kernel, x: &[f64], r: f64, n: usize) -> (f64, f64) {
    let d = k.dim();
    let core = r * 2f64.powi(-40);
    let radial = radial_moment(core, r, d as f64 - 1.0);
    let ang: f64 = angular_nodes(d, n)
        .iter()
        .map(|(w, wt)| wt * k.angular(x, w))
        .sum();
    let core_bound = k.constants().lambda2 * ball_constant(d) * core.powi(d as i32);
    (radial * ang, core_bound)
}

/// Lower mass hypothesis: `∫_{B_r} κ(x, z) dz ≥ Λ1 r^d`, with 1% slack.
pub fn check_lower_mass(k: &Kernel, xs: &[Vec<f64>], rs: &[f64]) -> Result<ValidationReport> {
    let c = *k.constants();
    if let Some(r) = rs.iter().find(|&&r| r > c.r0 || r <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "radius {r} outside (0, r0 = {}]",
            c.r0
        )));
    }
    let n = 2048;
    let cases: Vec<(Vec<f64>, f64)> = xs
        .iter()
        .flat_map(|x| rs.iter().map(move |&r| (x.clone(), r)))
        .collect();
    let rows: Vec<Result<ValidationRow>> = cases
        .par_iter()
        .map(|(x, r)| {
            let (coarse, core) = ball_mass(k, x, *r, n);
            let (fine, _) = ball_mass(k, x, *r, 2 * n);
            let bound = c.lambda1 * r.powi(k.dim() as i32);
            let estimate = (fine - coarse).abs() + core;
            let slack = 0.01 * bound.max(f64::MIN_POSITIVE);
            if bound > 0.0 && estimate > slack {
                return Err(Error::QuadratureUnderResolved { estimate, slack });
            }
            Ok(ValidationRow {
                check: "lower_mass".into(),
                x: x.clone(),
                r: *r,
                measured: fine,
                bound,
                pass: fine >= 0.99 * bound,
            })
        })
        .collect();
    let mut rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    if c.lambda1 <= 0.0 {
        for row in &mut rows {
            row.pass = false;
        }
    }
    Ok(ValidationReport {
        resolution: format!(
            "angular nodes {} (doubling check), radial ratio 2^(1/8)",
            2 * n
        ),
        rows,
    })
}

/// Upper bound `κ ≤ Λ2` on a lattice, and for `α = 1` the vanishing of the
/// ring integrals `∫_{r<|z|<R} z κ(x, z) dz`.
pub fn check_upper_and_ring_symmetry(k: &Kernel) -> ValidationReport {
    let c = *k.constants();
    let d = k.dim();
    let xs = sample_points(d, k.period(), if d == 1 { 256 } else { 32 });
    let nodes = angular_nodes(d, 720);
    let sup = xs
        .par_iter()
        .map(|x| {
            let mut m = nodes
                .iter()
                .fold(0.0f64, |m, (w, _)| m.max(k.angular(x, w)));
            for t in k.angular_breakpoints(x) {
                for e in [-1e-9, 1e-9] {
                    m = m.max(k.angular_at(x, t + e));
                }
            }
            m
        })
        .reduce(|| 0.0, f64::max);
    let mut rows = vec![ValidationRow {
        check: "upper_bound".into(),
        x: Vec::new(),
        r: f64::NAN,
        measured: sup,
        bound: c.lambda2,
        pass: sup <= c.lambda2 * (1.0 + 1e-12),
    }];
    if k.alpha() == 1.0 {
        let ring_nodes = angular_nodes(d, 4096);
        let step = (xs.len() / 8).max(1);
        for x in xs.iter().step_by(step) {
            let mut first = [0.0f64; 2];
            for (w, wt) in &ring_nodes {
                let v = k.angular(x, w);
                for a in 0..d {
                    first[a] += wt * v * w[a];
                }
            }
            for (r, big_r) in [(1e-3, 0.1), (0.1, 1.0), (0.5, 2.0)] {
                let radial = radial_moment(r, big_r, d as f64);
                let value = radial * first[0].hypot(first[1]);
                let bound = 1e-8 * c.lambda2 * f64::powi(big_r, d as i32);
                rows.push(ValidationRow {
                    check: "ring_symmetry".into(),
                    x: x.clone(),
                    r,
                    measured: value,
                    bound,
                    pass: value <= bound,
                });
            }
        }
    }
    ValidationReport {
        resolution: format!("{} x-points, 720 directions, 4096 ring nodes", xs.len()),
        rows,
    }
}

/// Hölder continuity in `x`: `sup_z |κ(x,z) − κ(y,z)| / |x−y|^ϑ ≤ Λ3`.
pub fn check_holder_in_x(k: &Kernel, pairs: &[(Vec<f64>, Vec<f64>)]) -> ValidationReport {
    let c = *k.constants();
    let nodes = angular_nodes(k.dim(), 720);
    let rows = pairs
        .par_iter()
        .map(|(x, y)| {
            let dist = x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let diff = nodes.iter().fold(0.0f64, |m, (w, _)| {
                m.max((k.angular(x, w) - k.angular(y, w)).abs())
            });
            let ratio = if dist > 0.0 {
                diff / dist.powf(c.theta)
            } else {
                0.0
            };
            ValidationRow {
                check: "holder_x".into(),
                x: x.iter().chain(y).copied().collect(),
                r: dist,
                measured: ratio,
                bound: c.lambda3,
                pass: ratio <= c.lambda3 * (1.0 + 1e-9) + 1e-12,
            }
        })
        .collect();
    ValidationReport {
        resolution: format!("{} pairs, 720 directions", pairs.len()),
        rows,
    }
}

/// `|B_r ∩ {κ(x, ·) ≥ Λ1/(2 c_d)}| ≥ (Λ1 / (2 Λ2)) r^d`.
pub fn check_h4(k: &Kernel, xs: &[Vec<f64>], rs: &[f64]) -> ValidationReport {
    let c = *k.constants();
    let d = k.dim();
    let level = c.lambda1 / (2.0 * ball_constant(d));
    let nodes = angular_nodes(d, 4096);
    let mut rows = Vec::new();
    for x in xs {
        let measure: f64 = nodes
            .iter()
            .filter(|(w, _)| k.angular(x, w) >= level)
            .map(|(_, wt)| wt)
            .sum();
        for &r in rs {
            let measured = measure * r.powi(d as i32) / d as f64;
            let bound = c.lambda1 / (2.0 * c.lambda2) * r.powi(d as i32);
            rows.push(ValidationRow {
                check: "h4_level_set".into(),
                x: x.clone(),
                r,
                measured,
                bound,
                pass: measured >= bound,
            });
        }
    }
    ValidationReport {
        resolution: "4096 directions".into(),
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::DirectionField;
    use std::sync::Arc;

    #[test]
    fn constant_kernel_mass_is_ball_volume() {
        let k = Kernel::constant(1, 1.5, 1.0).unwrap();
        let rep = check_lower_mass(&k, &[vec![0.3]], &[0.5, 1.0]).unwrap();
        assert!(rep.pass());
        assert!((rep.rows[0].measured - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_kernel_fails_lower_mass() {
        let mut k = Kernel::constant(2, 1.0, 0.0).unwrap();
        let mut c = *k.constants();
        c.lambda1 = 0.1;
        k = k.with_constants(c);
        assert!(!check_lower_mass(&k, &[vec![0.0, 0.0]], &[0.5])
            .unwrap()
            .pass());
    }

    #[test]
    fn one_sided_bump_breaks_ring_symmetry() {
        let k = Kernel::custom(
            "one-sided",
            1,
            1.0,
            Arc::new(|_x, w| if w[0] > 0.0 { 1.5 } else { 1.0 }),
            crate::kernels::KernelConstants {
                lambda1: 2.0,
                lambda2: 1.5,
                lambda3: 0.0,
                theta: 1.0,
                r0: 1.0,
            },
            true,
            false,
        )
        .unwrap();
        let rep = check_upper_and_ring_symmetry(&k);
        let ring: Vec<_> = rep
            .rows
            .iter()
            .filter(|r| r.check == "ring_symmetry")
            .collect();
        assert!(!ring.is_empty() && ring.iter().all(|r| !r.pass));
        // ∫_r^R ρ (1.5 - 1) dρ = (R² − r²)/4
        let row = ring.iter().find(|r| r.r == 0.1).unwrap();
        assert!((row.measured - (1.0 - 0.01) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn rough_direction_fails_holder_only() {
        let k = Kernel::conical(
            2,
            1.5,
            DirectionField::Split {
                left: 0.0,
                right: PI / 2.0,
            },
            0.5,
        )
        .unwrap();
        let xs = sample_points(2, k.period(), 4);
        assert!(check_lower_mass(&k, &xs, &[0.5, 1.0]).unwrap().pass());
        assert!(check_upper_and_ring_symmetry(&k).pass());
        assert!(!check_holder_in_x(&k, &adjacent_pairs(2, k.period(), 16)).pass());
    }
}
