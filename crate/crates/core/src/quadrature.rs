//! Gauss rules and composite helpers.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

type Rule = Arc<(Vec<f64>, Vec<f64>)>;

fn cache() -> &'static Mutex<HashMap<(u8, usize), Rule>> {
    static C: OnceLock<Mutex<HashMap<(u8, usize), Rule>>> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Rule {
    let mut c = cache().lock().unwrap();
    c.entry((0, n))
        .or_insert_with(|| Arc::new(legendre_rule(n)))
        .clone()
}

/// Gauss–Laguerre nodes and weights for `∫_0^∞ e^{-s} f(s) ds`.
pub fn gauss_laguerre(n: usize) -> Rule {
    let mut c = cache().lock().unwrap();
    c.entry((1, n))
        .or_insert_with(|| Arc::new(laguerre_rule(n)))
        .clone()
}

fn legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp;
        loop {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn laguerre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0f64; n];
    let mut w = vec![0.0f64; n];
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..n {
        if i == 0 {
            z = 3.0 / (1.0 + 2.4 * nf);
        } else if i == 1 {
            z += 15.0 / (1.0 + 2.5 * nf);
        } else {
            let ai = (i - 1) as f64;
            z += (1.0 + 2.55 * ai) / (1.9 * ai) * (z - x[i - 2]);
        }
        let mut pp = 0.0;
        let mut p2 = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) as f64 - z) * p2 / j as f64 - (j - 1) as f64 * p3 / j as f64;
            }
            pp = (nf * p1 - nf * p2) / z;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-14 * z.abs() {
                break;
            }
        }
        x[i] = z;
        w[i] = -1.0 / (pp * nf * p2);
    }
    (x, w)
}

/// Composite Gauss–Legendre over equal panels.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let rule = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        let mut s = 0.0;
        for (x, w) in rule.0.iter().zip(&rule.1) {
            s += w * f(mid + 0.5 * h * x);
        }
        total += 0.5 * h * s;
    }
    total
}

/// Geometric cells between `a > 0` and `b` with ratio at most `ratio`.
pub fn log_cells(a: f64, b: f64, ratio: f64) -> Vec<(f64, f64)> {
    if b <= a {
        return Vec::new();
    }
    let count = ((b / a).ln() / ratio.ln()).ceil().max(1.0) as usize;
    let q = (b / a).powf(1.0 / count as f64);
    let mut out = Vec::with_capacity(count);
    let mut lo = a;
    for i in 0..count {
        let hi = if i + 1 == count { b } else { lo * q };
        out.push((lo, hi));
        lo = hi;
    }
    out
}

/// Panels on `[a, b]` refined geometrically toward singular endpoints.
pub fn graded_panels(a: f64, b: f64, left: bool, right: bool, max_width: f64) -> Vec<(f64, f64)> {
    let len = b - a;
    if len <= 0.0 {
        return Vec::new();
    }
    let grade = |base: f64, dir: f64, span: f64| -> Vec<(f64, f64)> {
        // points base + dir * span * σ^k, σ = 0.2, down to 1e-13 span
        let mut pts = vec![span];
        let mut t = span;
        while t > 1e-13 * len {
            t *= 0.2;
            pts.push(t);
        }
        pts.push(0.0);
        pts.windows(2)
            .map(|w| {
                let (x0, x1) = (base + dir * w[1], base + dir * w[0]);
                if x0 < x1 {
                    (x0, x1)
                } else {
                    (x1, x0)
                }
            })
            .collect()
    };
    let mut out = Vec::new();
    let (mut lo, mut hi) = (a, b);
    let edge = (0.25 * len).min(max_width);
    if left {
        out.extend(grade(a, 1.0, edge));
        lo = a + edge;
    }
    if right {
        out.extend(grade(b, -1.0, edge));
        hi = b - edge;
    }
    if hi > lo {
        let k = ((hi - lo) / max_width).ceil().max(1.0) as usize;
        let h = (hi - lo) / k as f64;
        for i in 0..k {
            out.push((lo + i as f64 * h, lo + (i + 1) as f64 * h));
        }
    }
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    out
}

/// Volume of the unit ball in dimension `d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => PI,
        _ => PI.powf(d as f64 / 2.0) / libm::tgamma(d as f64 / 2.0 + 1.0),
    }
}

/// Surface measure of the unit sphere `S^{d-1}`.
pub fn unit_sphere_area(d: usize) -> f64 {
    d as f64 * unit_ball_volume(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let r = gauss_legendre(8);
        let s: f64 = r.0.iter().zip(&r.1).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn laguerre_integrates_moments() {
        let r = gauss_laguerre(48);
        for k in 0..8 {
            let s: f64 = r.0.iter().zip(&r.1).map(|(x, w)| w * x.powi(k)).sum();
            let exact: f64 = (1..=k).map(|i| i as f64).product();
            assert!((s - exact).abs() < 1e-10 * exact.max(1.0), "k = {k}: {s}");
        }
    }

    #[test]
    fn graded_panels_resolve_endpoint_singularity() {
        let rule = gauss_legendre(16);
        let mut s = 0.0;
        for (a, b) in graded_panels(0.0, 1.0, true, false, 0.25) {
            let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
            for (x, w) in rule.0.iter().zip(&rule.1) {
                s += h * w * (m + h * x).powf(0.3);
            }
        }
        assert!((s - 1.0 / 1.3).abs() < 1e-13);
    }

    #[test]
    fn log_cells_cover_interval() {
        let c = log_cells(0.01, 3.0, 2f64.powf(0.125));
        assert_eq!(c[0].0, 0.01);
        assert_eq!(c.last().unwrap().1, 3.0);
        assert!(c.iter().all(|(a, b)| b / a <= 2f64.powf(0.125) + 1e-12));
    }
}
