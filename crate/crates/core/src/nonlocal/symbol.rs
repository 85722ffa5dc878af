//! Radial and frozen symbols of α-stable-like operators.
//!
//! The radial symbol is `S(a) = ∫_0^∞ (e^{iρa} − 1 − iρa c(ρ)) ρ^{-1-α} dρ`
//! where `c` is the compensator weight; the frozen symbol of a kernel at `x`
//! is `ψ_x(ξ) = ∫_{S^{d-1}} κ(x, ω) S(ξ·ω) dω`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{Kernel, Profile};
use crate::quadrature::{gauss_laguerre, gauss_legendre, graded_panels, log_cells};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Gradient compensation `z^{(α)}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Compensation {
    /// `α < 1`: none.
    None,
    /// `α = 1`: `z 1_{|z|<1}`.
    Ring,
    /// `α > 1`: `z`.
    Full,
}

impl Compensation {
    pub fn for_alpha(alpha: f64) -> Self {
        if alpha < 1.0 {
            Compensation::None
        } else if alpha == 1.0 {
            Compensation::Ring
        } else {
            Compensation::Full
        }
    }

    /// Weight multiplying `∇f(x)·z` at radius `ρ`.
    pub fn weight(&self, rho: f64) -> f64 {
        match self {
            Compensation::None => 0.0,
            Compensation::Ring => {
                if rho < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Compensation::Full => 1.0,
        }
    }

    /// `∫_a^b c(ρ) ρ^{-α} dρ`.
    pub fn integral(&self, alpha: f64, a: f64, b: f64) -> f64 {
        let full = |lo: f64, hi: f64| {
            if alpha == 1.0 {
                (hi / lo).ln()
            } else if hi.is_infinite() {
                lo.powf(1.0 - alpha) / (alpha - 1.0)
            } else {
                (hi.powf(1.0 - alpha) - lo.powf(1.0 - alpha)) / (1.0 - alpha)
            }
        };
        match self {
            Compensation::None => 0.0,
            Compensation::Ring => {
                let hi = b.min(1.0);
                if a < hi {
                    full(a, hi)
                } else {
                    0.0
                }
            }
            Compensation::Full => full(a, b),
        }
    }
}

/// Closed-form radial symbol with the default compensation for `α`.
pub fn radial_symbol(alpha: f64, a: f64) -> Complex64 {
    if a == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let m = a.abs();
    if alpha == 1.0 {
        Complex64::new(-PI * m / 2.0, a * (1.0 - EULER_GAMMA - m.ln()))
    } else {
        let g = libm::tgamma(-alpha) * m.powf(alpha);
        let th = -PI * alpha * a.signum() / 2.0;
        Complex64::new(g * th.cos(), g * th.sin())
    }
}

/// `C_{d,α}` with `∫ (1 − cos ξ·z) |z|^{-d-α} dz = C_{d,α} |ξ|^α`.
pub fn stable_constant(dim: usize, alpha: f64) -> f64 {
    let d = dim as f64;
    PI.powf(d / 2.0) * libm::tgamma(-alpha / 2.0).abs()
        / (2f64.powf(alpha) * libm::tgamma((d + alpha) / 2.0))
}

const CONTOUR_THRESHOLD: f64 = 16.0;

/// `∫_r^∞ e^{iρa} ρ^{-1-α} dρ`, by a rotated contour for `|a| r` large and
/// Gauss–Legendre on the non-oscillatory stretch otherwise.
pub fn upper_incomplete(alpha: f64, a: f64, r: f64) -> Complex64 {
    if r.is_infinite() {
        return Complex64::new(0.0, 0.0);
    }
    if a == 0.0 {
        return Complex64::new(r.powf(-alpha) / alpha, 0.0);
    }
    let m = a.abs();
    let start = r.max(CONTOUR_THRESHOLD / m);
    let mut total = Complex64::new(0.0, 0.0);
    if start > r {
        let rule = gauss_legendre(16);
        for (lo, hi) in log_cells(r, start, 2f64.powf(0.25)) {
            let panels = ((hi - lo) * m / 1.0).ceil().max(1.0) as usize;
            let h = (hi - lo) / panels as f64;
            for p in 0..panels {
                let (c, hw) = (lo + (p as f64 + 0.5) * h, 0.5 * h);
                for (x, w) in rule.0.iter().zip(&rule.1) {
                    let rho = c + hw * x;
                    let (s, co) = (rho * a).sin_cos();
                    total += Complex64::new(co, s) * (hw * w * rho.powf(-1.0 - alpha));
                }
            }
        }
    }
    // ρ = start + i s t / m, s = sign(a)
    let lag = gauss_laguerre(64);
    let sgn = a.signum();
    let mut acc = Complex64::new(0.0, 0.0);
    for (u, w) in lag.0.iter().zip(&lag.1) {
        let z = Complex64::new(start, sgn * u / m);
        acc += z.powf(-1.0 - alpha) * *w;
    }
    let (s, c) = (a * start).sin_cos();
    total + Complex64::new(0.0, sgn / m) * Complex64::new(c, s) * acc
}

/// Radial symbol restricted to jumps with `eps < ρ < r` (`r` may be infinite).
pub fn radial_symbol_band(
    alpha: f64,
    a: f64,
    eps: f64,
    r: f64,
    comp: Compensation,
) -> Result<Complex64> {
    if !(eps > 0.0 && eps < r) {
        return Err(Error::BadBand { eps, r });
    }
    if a == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let osc = upper_incomplete(alpha, a, eps) - upper_incomplete(alpha, a, r);
    let tail = if r.is_infinite() { 0.0 } else { r.powf(-alpha) };
    let mass = (eps.powf(-alpha) - tail) / alpha;
    let drift = comp.integral(alpha, eps, r);
    Ok(osc - mass - Complex64::new(0.0, a * drift))
}

/// How a frozen symbol treats the radial integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolSpec {
    pub alpha: f64,
    pub compensation: Compensation,
    /// Restrict to `eps < |z| < R`.
    pub band: Option<(f64, f64)>,
}

impl SymbolSpec {
    pub fn full(alpha: f64) -> Self {
        Self {
            alpha,
            compensation: Compensation::for_alpha(alpha),
            band: None,
        }
    }

    pub fn band(alpha: f64, eps: f64, r: f64) -> Self {
        Self {
            alpha,
            compensation: Compensation::for_alpha(alpha),
            band: Some((eps, r)),
        }
    }

    pub fn radial(&self, a: f64) -> Complex64 {
        match self.band {
            None => {
                debug_assert_eq!(self.compensation, Compensation::for_alpha(self.alpha));
                radial_symbol(self.alpha, a)
            }
            Some((eps, r)) => radial_symbol_band(self.alpha, a, eps, r, self.compensation)
                .expect("band validated at construction"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((eps, r)) = self.band {
            if !(eps > 0.0 && eps < r) {
                return Err(Error::BadBand { eps, r });
            }
        } else if self.compensation != Compensation::for_alpha(self.alpha) {
            return Err(Error::InvalidArgument(
                "non-default compensation needs a truncation band".into(),
            ));
        }
        Ok(())
    }
}

/// `∫_0^{2π} f(θ) dθ`, split at `breaks` and graded toward `singular` angles.
pub fn angular_integral(
    breaks: &[f64],
    singular: &[f64],
    f: impl Fn(f64) -> Complex64,
) -> Complex64 {
    let two_pi = 2.0 * PI;
    let mut pts: Vec<f64> = breaks
        .iter()
        .chain(singular)
        .map(|t| t.rem_euclid(two_pi))
        .collect();
    pts.push(0.0);
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let is_sing = |t: f64| {
        singular.iter().any(|s| {
            let d = (s.rem_euclid(two_pi) - t.rem_euclid(two_pi)).abs();
            d < 1e-12 || (two_pi - d) < 1e-12
        })
    };
    let rule = gauss_legendre(16);
    let mut total = Complex64::new(0.0, 0.0);
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
        for (lo, hi) in graded_panels(a, b, is_sing(a), is_sing(b), PI / 8.0) {
            let (m, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            for (x, w) in rule.0.iter().zip(&rule.1) {
                total += f(m + h * x) * (h * w);
            }
        }
    }
    total
}

/// Frozen symbol `ψ_x(ξ)` of kernel `k` at point `x`.
pub fn frozen_symbol(k: &Kernel, x: &[f64], xi: [f64; 2], spec: &SymbolSpec) -> Complex64 {
    if k.dim() == 1 {
        return k.angular(x, &[1.0]) * spec.radial(xi[0])
            + k.angular(x, &[-1.0]) * spec.radial(-xi[0]);
    }
    let norm = xi[0].hypot(xi[1]);
    if norm == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    if spec.band.is_none() {
        if let Some(v) = closed_form_2d(k, x, xi) {
            return v;
        }
    }
    frozen_symbol_by_quadrature(k, x, xi, spec)
}

/// `ψ(ξ) = −C_{2,α} |σ(x)^T ξ|^α` for kernels induced by a linear map.
fn closed_form_2d(k: &Kernel, x: &[f64], xi: [f64; 2]) -> Option<Complex64> {
    let c = stable_constant(2, k.alpha());
    match k.profile() {
        Profile::Constant { level } => Some(Complex64::new(
            -level * c * xi[0].hypot(xi[1]).powf(k.alpha()),
            0.0,
        )),
        Profile::Sigma { field } => {
            let m = field.matrix(x, k.period());
            let e0 = m[0][0] * xi[0] + m[1][0] * xi[1];
            let e1 = m[0][1] * xi[0] + m[1][1] * xi[1];
            Some(Complex64::new(-c * e0.hypot(e1).powf(k.alpha()), 0.0))
        }
        _ => None,
    }
}

/// Frozen symbol in 2D by angular quadrature of the radial symbol.
pub fn frozen_symbol_by_quadrature(
    k: &Kernel,
    x: &[f64],
    xi: [f64; 2],
    spec: &SymbolSpec,
) -> Complex64 {
    let norm = xi[0].hypot(xi[1]);
    if norm == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let t = xi[1].atan2(xi[0]);
    let singular = if spec.band.is_none() {
        vec![t + PI / 2.0, t - PI / 2.0]
    } else {
        Vec::new()
    };
    let breaks = k.angular_breakpoints(x);
    angular_integral(&breaks, &singular, |th| {
        let kv = k.angular_at(x, th);
        if kv == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            spec.radial(norm * (th - t).cos()) * kv
        }
    })
}

/// Frozen symbol of a single direction term `K(ω) = scale · κ(anchor, ω)`
/// restricted, in 1D, to `ω = direction`.
pub(crate) fn term_symbol(
    k: &Kernel,
    anchor: &[f64],
    scale: f64,
    direction: Option<f64>,
    xi: [f64; 2],
    spec: &SymbolSpec,
) -> Complex64 {
    match direction {
        Some(s) => spec.radial(s * xi[0]) * (scale * k.angular(anchor, &[s])),
        None => frozen_symbol(k, anchor, xi, spec) * scale,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;

    /// Independent evaluation of the radial symbol: series near the origin,
    /// Gauss–Legendre on the middle, contour tail.
    fn radial_by_quadrature(alpha: f64, a: f64) -> Complex64 {
        let comp = Compensation::for_alpha(alpha);
        let h = 1e-4 / a.abs();
        // ∫_0^h: e^{iρa} − 1 − iρa c ≈ iρa(1 − c) − ρ²a²/2
        let lin = Complex64::new(
            0.0,
            a * (1.0 - comp.weight(0.0)) * h.powf(1.0 - alpha) / (1.0 - alpha),
        );
        let quad = Complex64::new(-a * a / 2.0 * h.powf(2.0 - alpha) / (2.0 - alpha), 0.0);
        let inner = if comp == Compensation::None {
            lin + quad
        } else {
            quad
        };
        let top = 200.0 / a.abs();
        let (mut re, mut im) = (0.0, 0.0);
        let mut cells = log_cells(h, 1.0, 2f64.powf(0.125));
        cells.extend(log_cells(1.0, top, 2f64.powf(0.125)));
        for (lo, hi) in cells {
            let panels = ((hi - lo) * a.abs() / 0.5).ceil().max(1.0) as usize;
            re += integrate(
                |r| ((r * a).cos() - 1.0) * r.powf(-1.0 - alpha),
                lo,
                hi,
                panels,
                8,
            );
            im += integrate(
                |r| ((r * a).sin() - r * a * comp.weight(r)) * r.powf(-1.0 - alpha),
                lo,
                hi,
                panels,
                8,
            );
        }
        let tail = upper_incomplete(alpha, a, top)
            - Complex64::new(top.powf(-alpha) / alpha, 0.0)
            - Complex64::new(0.0, a * comp.integral(alpha, top, f64::INFINITY));
        inner + Complex64::new(re, im) + tail
    }

    #[test]
    fn closed_form_matches_quadrature() {
        for alpha in [0.5, 1.0, 1.5] {
            for a in [0.7, -2.0, 5.0] {
                let exact = radial_symbol(alpha, a);
                let q = radial_by_quadrature(alpha, a);
                assert!(
                    (exact - q).norm() < 2e-6 * exact.norm(),
                    "α={alpha} a={a}: {exact} vs {q}"
                );
            }
        }
    }

    #[test]
    fn stable_constant_landmarks() {
        assert!((stable_constant(1, 1.0) - PI).abs() < 1e-12);
        assert!((stable_constant(1, 1.5) - 3.342).abs() < 1e-3);
        for alpha in [0.5, 1.5] {
            let re = 2.0 * radial_symbol(alpha, 1.0).re;
            assert!((re + stable_constant(1, alpha)).abs() < 1e-12);
        }
    }

    #[test]
    fn contour_and_direct_agree() {
        for alpha in [0.6, 1.0, 1.7] {
            for (a, r) in [(3.0, 10.0), (-1.0, 40.0)] {
                let contour = upper_incomplete(alpha, a, r);
                let direct = integrate(
                    |t| (t * a).cos() * t.powf(-1.0 - alpha),
                    r,
                    r + 4000.0,
                    200000,
                    8,
                );
                assert!(
                    (contour.re - direct).abs() < 5e-6 * r.powf(-alpha),
                    "{alpha} {a} {r}"
                );
            }
        }
    }

    #[test]
    fn band_symbol_tends_to_full() {
        for alpha in [0.5, 1.0, 1.5] {
            for a in [1.0, -7.0] {
                let b = radial_symbol_band(
                    alpha,
                    a,
                    1e-7,
                    f64::INFINITY,
                    Compensation::for_alpha(alpha),
                )
                .unwrap();
                let f = radial_symbol(alpha, a);
                assert!((b - f).norm() < 1e-3 * f.norm(), "{alpha} {a}: {b} {f}");
            }
        }
        assert!(radial_symbol_band(1.5, 1.0, 2.0, 1.0, Compensation::Full).is_err());
    }

    #[test]
    fn isotropic_two_dimensional_symbol() {
        let k = Kernel::constant(2, 1.5, 1.0).unwrap();
        let spec = SymbolSpec::full(1.5);
        for xi in [[3.0, 0.0], [1.0, 2.0], [-4.0, -4.0]] {
            let psi = frozen_symbol_by_quadrature(&k, &[0.0, 0.0], xi, &spec);
            let n = f64::hypot(xi[0], xi[1]);
            let exact = -stable_constant(2, 1.5) * n.powf(1.5);
            assert!((psi.re - exact).abs() < 1e-10 * exact.abs());
            assert!(psi.im.abs() < 1e-10 * exact.abs());
        }
    }

    #[test]
    fn sigma_closed_form_matches_angular_quadrature() {
        use crate::kernels::SigmaField;
        let field = SigmaField::Matrix([[1.2, 0.3], [-0.1, 0.8]]);
        for alpha in [0.7, 1.0, 1.6] {
            let k = Kernel::sigma(2, alpha, field, 1.0).unwrap();
            let spec = SymbolSpec::full(alpha);
            for xi in [[2.0, 1.0], [-1.0, 3.0]] {
                let a = frozen_symbol(&k, &[0.0, 0.0], xi, &spec);
                let b = frozen_symbol_by_quadrature(&k, &[0.0, 0.0], xi, &spec);
                assert!((a - b).norm() < 1e-8 * a.norm(), "α={alpha}: {a} vs {b}");
            }
        }
    }
}
