//! Jump kernels `κ(x, z)`, their declared constants and validators.
//!
//! Every kernel here is 0-homogeneous in `z`, `κ(x, z) = A(x, z/|z|)`, so it
//! is described by its angular profile `A`.

mod levy;
mod validate;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TorusGrid;
use crate::quadrature::unit_ball_volume;

pub use levy::{LevyMeasure, MomentReport};
pub use validate::{
    adjacent_pairs, check_h4, check_holder_in_x, check_lower_mass, check_upper_and_ring_symmetry,
    sample_points, ValidationReport, ValidationRow,
};

/// Constants of the lower mass, upper bound and Hölder hypotheses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelConstants {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub theta: f64,
    pub r0: f64,
}

/// Direction field of a conical kernel, as an angle in the plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum DirectionField {
    Constant(f64),
    /// `left` for `x1 mod P < P/2`, `right` otherwise.
    Split {
        left: f64,
        right: f64,
    },
    /// `base + amplitude · sin(2π x1 / P)`.
    Smooth {
        base: f64,
        amplitude: f64,
    },
}

impl DirectionField {
    pub fn angle(&self, x: &[f64], period: f64) -> f64 {
        match *self {
            DirectionField::Constant(a) => a,
            DirectionField::Split { left, right } => {
                if x[0].rem_euclid(period) < 0.5 * period {
                    left
                } else {
                    right
                }
            }
            DirectionField::Smooth { base, amplitude } => {
                base + amplitude * (2.0 * PI * x[0] / period).sin()
            }
        }
    }
}

/// Matrix field `σ(x)`; in 1D only the `[0][0]` entry is used.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SigmaField {
    Matrix([[f64; 2]; 2]),
    /// `base + amplitude · sin(2π x / P)` (1D).
    Scalar {
        base: f64,
        amplitude: f64,
    },
    /// `diag(b0 + a sin(2π x1/P), b1 + a cos(2π x2/P))`.
    Diagonal {
        base: [f64; 2],
        amplitude: f64,
    },
    /// Rotation by `angle_amplitude · sin(2π x1/P)` scaled by `scale`.
    Rotation {
        scale: f64,
        angle_amplitude: f64,
    },
}

impl SigmaField {
    pub fn matrix(&self, x: &[f64], period: f64) -> [[f64; 2]; 2] {
        let w = 2.0 * PI / period;
        match *self {
            SigmaField::Matrix(m) => m,
            SigmaField::Scalar { base, amplitude } => {
                [[base + amplitude * (w * x[0]).sin(), 0.0], [0.0, 1.0]]
            }
            SigmaField::Diagonal { base, amplitude } => {
                let x2 = x.get(1).copied().unwrap_or(0.0);
                [
                    [base[0] + amplitude * (w * x[0]).sin(), 0.0],
                    [0.0, base[1] + amplitude * (w * x2).cos()],
                ]
            }
            SigmaField::Rotation {
                scale,
                angle_amplitude,
            } => {
                let (s, c) = (angle_amplitude * (w * x[0]).sin()).sin_cos();
                [[scale * c, -scale * s], [scale * s, scale * c]]
            }
        }
    }

    fn is_constant(&self) -> bool {
        matches!(self, SigmaField::Matrix(_))
    }
}

pub type AngularFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Profile {
    Constant {
        level: f64,
    },
    Conical {
        direction: DirectionField,
        aperture: f64,
    },
    Sigma {
        field: SigmaField,
    },
    /// `1 + amplitude · |sin(2π x1 / P)|^exponent`.
    RoughX {
        amplitude: f64,
        exponent: f64,
    },
    Custom {
        angular: AngularFn,
        x_independent: bool,
        even: bool,
        breakpoints: Vec<f64>,
    },
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Constant { level } => write!(f, "Constant({level})"),
            Profile::Conical {
                direction,
                aperture,
            } => write!(f, "Conical({direction:?}, {aperture})"),
            Profile::Sigma { field } => write!(f, "Sigma({field:?})"),
            Profile::RoughX {
                amplitude,
                exponent,
            } => write!(f, "RoughX({amplitude}, {exponent})"),
            Profile::Custom { .. } => write!(f, "Custom"),
        }
    }
}

/// A jump kernel together with its stability index and declared constants.
#[derive(Clone, Debug)]
pub struct Kernel {
    name: String,
    dim: usize,
    alpha: f64,
    period: f64,
    profile: Profile,
    constants: KernelConstants,
}

/// One term `a_r(x) K_r(ω)` of a separable kernel; `K_r(ω) = scale · κ(x_r, ω)`.
#[derive(Clone, Debug)]
pub struct SeparableTerm {
    pub weight: Vec<f64>,
    pub anchor: [f64; 2],
    pub scale: f64,
    /// In 1D, restricts `K_r` to the single direction `±1`.
    pub direction: Option<f64>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "alpha = {alpha} not in (0, 2)"
        )))
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 1 || dim == 2 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "dimension {dim} not in {{1, 2}}"
        )))
    }
}

/// Ball volume `c_d`.
pub fn ball_constant(dim: usize) -> f64 {
    unit_ball_volume(dim)
}

impl Kernel {
    /// `κ ≡ level`.
    pub fn constant(dim: usize, alpha: f64, level: f64) -> Result<Self> {
        check_dim(dim)?;
        check_alpha(alpha)?;
        if level < 0.0 || !level.is_finite() {
            return Err(Error::InvalidArgument("level must be >= 0".into()));
        }
        Ok(Self {
            name: "constant".into(),
            dim,
            alpha,
            period: 2.0 * PI,
            profile: Profile::Constant { level },
            constants: KernelConstants {
                lambda1: ball_constant(dim) * level,
                lambda2: level,
                lambda3: 0.0,
                theta: 1.0,
                r0: 1.0,
            },
        })
    }

    /// `κ(x, z) = 1_{|⟨z/|z|, ξ(x)⟩| > δ}`.
    pub fn conical(
        dim: usize,
        alpha: f64,
        direction: DirectionField,
        aperture: f64,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        if dim != 2 {
            return Err(Error::DegenerateCone);
        }
        if !(aperture > 0.0 && aperture < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "aperture {aperture} not in (0, 1)"
            )));
        }
        let fraction = 2.0 * aperture.acos() / PI;
        let lambda3 = match direction {
            DirectionField::Constant(_) => 0.0,
            _ => 1.0,
        };
        Ok(Self {
            name: "conical".into(),
            dim,
            alpha,
            period: 2.0 * PI,
            profile: Profile::Conical {
                direction,
                aperture,
            },
            constants: KernelConstants {
                lambda1: ball_constant(dim) * fraction,
                lambda2: 1.0,
                lambda3,
                theta: 1.0,
                r0: 1.0,
            },
        })
    }

    /// Kernel induced by `σ(x) · (isotropic α-stable)`.
    pub fn sigma(dim: usize, alpha: f64, field: SigmaField, theta: f64) -> Result<Self> {
        Self::sigma_with_period(dim, alpha, field, theta, 2.0 * PI)
    }

    pub fn sigma_with_period(
        dim: usize,
        alpha: f64,
        field: SigmaField,
        theta: f64,
        period: f64,
    ) -> Result<Self> {
        check_dim(dim)?;
        check_alpha(alpha)?;
        let probes = sample_points(dim, period, 64);
        let mut lam = 1.0f64;
        for x in &probes {
            let m = field.matrix(x, period);
            let (smax, smin, det) = singular_values(&m, dim);
            if det.abs() < 1e-12 {
                return Err(Error::SingularSigma { det });
            }
            lam = lam.max(smax).max(1.0 / smin);
        }
        let d = dim as f64;
        let mut k = Self {
            name: "sigma".into(),
            dim,
            alpha,
            period,
            profile: Profile::Sigma { field },
            constants: KernelConstants {
                lambda1: ball_constant(dim) * lam.powf(-(2.0 * d + alpha)),
                lambda2: lam.powf(2.0 * d + alpha),
                lambda3: 0.0,
                theta,
                r0: 1.0,
            },
        };
        if !field.is_constant() {
            let lip = k.lipschitz_estimate(256);
            k.constants.lambda3 = (1.25 * lip).max(k.constants.lambda2);
        }
        Ok(k)
    }

    /// `κ(x, z) = 1 + amplitude · |sin(2π x1/P)|^ϑ`.
    pub fn rough_x(
        dim: usize,
        alpha: f64,
        theta: f64,
        amplitude: f64,
        period: f64,
    ) -> Result<Self> {
        check_dim(dim)?;
        check_alpha(alpha)?;
        if !(theta > 0.0 && theta <= 1.0) || amplitude < 0.0 {
            return Err(Error::InvalidArgument(
                "need 0 < theta <= 1, amplitude >= 0".into(),
            ));
        }
        Ok(Self {
            name: "rough-x".into(),
            dim,
            alpha,
            period,
            profile: Profile::RoughX {
                amplitude,
                exponent: theta,
            },
            constants: KernelConstants {
                lambda1: ball_constant(dim),
                lambda2: 1.0 + amplitude,
                lambda3: amplitude * (2.0 * PI / period).powf(theta),
                theta,
                r0: 1.0,
            },
        })
    }

    /// Kernel from an angular profile `(x, ω) ↦ A(x, ω)` and declared constants.
    pub fn custom(
        name: &str,
        dim: usize,
        alpha: f64,
        angular: AngularFn,
        constants: KernelConstants,
        x_independent: bool,
        even: bool,
    ) -> Result<Self> {
        check_dim(dim)?;
        check_alpha(alpha)?;
        Ok(Self {
            name: name.into(),
            dim,
            alpha,
            period: 2.0 * PI,
            profile: Profile::Custom {
                angular,
                x_independent,
                even,
                breakpoints: Vec::new(),
            },
            constants,
        })
    }

    /// Builds a zoo kernel by name: `constant`, `conical`, `sigma`, `rough-x`.
    pub fn from_name(name: &str, spec: &KernelSpec) -> Result<Self> {
        let k = match name {
            "constant" => Self::constant(spec.dim, spec.alpha, spec.level)?,
            "conical" => Self::conical(spec.dim, spec.alpha, spec.direction, spec.aperture)?,
            "sigma" => {
                Self::sigma_with_period(spec.dim, spec.alpha, spec.sigma, spec.theta, spec.period)?
            }
            "rough-x" => Self::rough_x(
                spec.dim,
                spec.alpha,
                spec.theta,
                spec.amplitude,
                spec.period,
            )?,
            other => return Err(Error::Config(format!("unknown kernel '{other}'"))),
        };
        Ok(k.with_period(spec.period))
    }

    pub fn with_period(mut self, period: f64) -> Self {
        if let Profile::RoughX { amplitude, .. } = self.profile {
            self.constants.lambda3 = amplitude * (2.0 * PI / period).powf(self.constants.theta);
        }
        self.period = period;
        self
    }

    pub fn with_constants(mut self, constants: KernelConstants) -> Self {
        self.constants = constants;
        self
    }

    pub fn with_breakpoints(mut self, points: Vec<f64>) -> Self {
        if let Profile::Custom { breakpoints, .. } = &mut self.profile {
            *breakpoints = points;
        }
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn constants(&self) -> &KernelConstants {
        &self.constants
    }

    /// Angular profile `A(x, ω)` for a unit vector `ω`.
    pub fn angular(&self, x: &[f64], omega: &[f64]) -> f64 {
        match &self.profile {
            Profile::Constant { level } => *level,
            Profile::Conical {
                direction,
                aperture,
            } => {
                let t = direction.angle(x, self.period);
                let dot = omega[0] * t.cos() + omega[1] * t.sin();
                if dot.abs() > *aperture {
                    1.0
                } else {
                    0.0
                }
            }
            Profile::Sigma { field } => {
                let m = field.matrix(x, self.period);
                if self.dim == 1 {
                    m[0][0].abs().powf(self.alpha)
                } else {
                    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
                    // σ^{-1} ω = adj(σ) ω / det
                    let v0 = (m[1][1] * omega[0] - m[0][1] * omega[1]) / det;
                    let v1 = (-m[1][0] * omega[0] + m[0][0] * omega[1]) / det;
                    1.0 / (det.abs() * v0.hypot(v1).powf(2.0 + self.alpha))
                }
            }
            Profile::RoughX {
                amplitude,
                exponent,
            } => 1.0 + amplitude * (2.0 * PI * x[0] / self.period).sin().abs().powf(*exponent),
            Profile::Custom { angular, .. } => angular(x, omega),
        }
    }

    /// `κ(x, z)`.
    pub fn eval(&self, x: &[f64], z: &[f64]) -> f64 {
        if self.dim == 1 {
            let s = if z[0] < 0.0 { -1.0 } else { 1.0 };
            self.angular(x, &[s])
        } else {
            let r = z[0].hypot(z[1]);
            if r == 0.0 {
                self.angular(x, &[1.0, 0.0])
            } else {
                self.angular(x, &[z[0] / r, z[1] / r])
            }
        }
    }

    pub fn angular_at(&self, x: &[f64], theta: f64) -> f64 {
        self.angular(x, &[theta.cos(), theta.sin()])
    }

    pub fn is_x_independent(&self) -> bool {
        match &self.profile {
            Profile::Constant { .. } => true,
            Profile::Conical { direction, .. } => matches!(direction, DirectionField::Constant(_)),
            Profile::Sigma { field } => field.is_constant(),
            Profile::RoughX { amplitude, .. } => *amplitude == 0.0,
            Profile::Custom { x_independent, .. } => *x_independent,
        }
    }

    /// `κ(x, -z) = κ(x, z)`.
    pub fn is_even(&self) -> bool {
        match &self.profile {
            Profile::Custom { even, .. } => *even,
            _ => true,
        }
    }

    /// Angles in `[0, 2π)` where the angular profile jumps (2D only).
    pub fn angular_breakpoints(&self, x: &[f64]) -> Vec<f64> {
        if self.dim != 2 {
            return Vec::new();
        }
        match &self.profile {
            Profile::Conical {
                direction,
                aperture,
            } => {
                let t = direction.angle(x, self.period);
                let a = aperture.acos();
                [t - a, t + a, t + PI - a, t + PI + a]
                    .iter()
                    .map(|v| v.rem_euclid(2.0 * PI))
                    .collect()
            }
            Profile::Custom { breakpoints, .. } => breakpoints.clone(),
            _ => Vec::new(),
        }
    }

    /// Low-rank representation `κ(x, ω) = Σ_r a_r(x) K_r(ω)` on `grid` when
    /// one is available.
    pub fn separable(&self, grid: &TorusGrid) -> Option<Vec<SeparableTerm>> {
        let n = grid.len();
        let d = grid.dim();
        let pts: Vec<[f64; 2]> = (0..n).map(|i| grid.point(i)).collect();
        if d == 1 {
            return Some(
                [1.0, -1.0]
                    .iter()
                    .map(|&s| SeparableTerm {
                        weight: pts.iter().map(|p| self.angular(&p[..1], &[s])).collect(),
                        anchor: [0.0, 0.0],
                        scale: 1.0,
                        direction: Some(s),
                    })
                    .collect(),
            );
        }
        if self.is_x_independent() {
            return Some(vec![SeparableTerm {
                weight: vec![1.0; n],
                anchor: [0.0, 0.0],
                scale: 1.0,
                direction: None,
            }]);
        }
        match &self.profile {
            Profile::RoughX { .. } => {
                let anchor = [0.25 * self.period, 0.0];
                let m0 = self.angular(&anchor, &[1.0, 0.0]);
                Some(vec![SeparableTerm {
                    weight: pts.iter().map(|p| self.angular(p, &[1.0, 0.0])).collect(),
                    anchor,
                    scale: 1.0 / m0,
                    direction: None,
                }])
            }
            Profile::Conical {
                direction: DirectionField::Split { .. },
                ..
            } => {
                let half = 0.5 * self.period;
                let left = |p: &[f64; 2]| p[0].rem_euclid(self.period) < half;
                Some(vec![
                    SeparableTerm {
                        weight: pts
                            .iter()
                            .map(|p| if left(p) { 1.0 } else { 0.0 })
                            .collect(),
                        anchor: [0.25 * self.period, 0.0],
                        scale: 1.0,
                        direction: None,
                    },
                    SeparableTerm {
                        weight: pts
                            .iter()
                            .map(|p| if left(p) { 0.0 } else { 1.0 })
                            .collect(),
                        anchor: [0.75 * self.period, 0.0],
                        scale: 1.0,
                        direction: None,
                    },
                ])
            }
            _ => None,
        }
    }

    /// The kernel frozen at `x0`.
    pub fn frozen(&self, x0: &[f64]) -> Kernel {
        let me = self.clone();
        let x: Vec<f64> = x0.to_vec();
        let mut k = Kernel::custom(
            &format!("{}@frozen", self.name),
            self.dim,
            self.alpha,
            Arc::new(move |_x, w| me.angular(&x, w)),
            self.constants,
            true,
            self.is_even(),
        )
        .expect("validated kernel");
        k = k.with_breakpoints(self.angular_breakpoints(x0));
        k
    }

    /// Finite-difference Lipschitz estimate in `x` over an `m^d` lattice.
    fn lipschitz_estimate(&self, m: usize) -> f64 {
        let h = self.period / m as f64;
        let dirs: Vec<Vec<f64>> = if self.dim == 1 {
            vec![vec![1.0], vec![-1.0]]
        } else {
            (0..64)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / 64.0;
                    vec![t.cos(), t.sin()]
                })
                .collect()
        };
        let mut best = 0.0f64;
        for x in sample_points(self.dim, self.period, m) {
            for axis in 0..self.dim {
                let mut y = x.clone();
                y[axis] += h;
                for w in &dirs {
                    best = best.max((self.angular(&x, w) - self.angular(&y, w)).abs() / h);
                }
            }
        }
        best
    }
}

/// Parameters for [`Kernel::from_name`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub dim: usize,
    pub alpha: f64,
    pub level: f64,
    pub aperture: f64,
    pub direction: DirectionField,
    pub sigma: SigmaField,
    pub theta: f64,
    pub amplitude: f64,
    pub period: f64,
}

impl KernelSpec {
    pub fn new(dim: usize, alpha: f64) -> Self {
        Self {
            dim,
            alpha,
            level: 1.0,
            aperture: 0.5,
            direction: DirectionField::Constant(0.0),
            sigma: SigmaField::Scalar {
                base: 1.0,
                amplitude: 0.25,
            },
            theta: 0.9,
            amplitude: 0.5,
            period: 2.0 * PI,
        }
    }
}

/// `(σ_max, σ_min, det)` of a 1×1 or 2×2 matrix.
pub(crate) fn singular_values(m: &[[f64; 2]; 2], dim: usize) -> (f64, f64, f64) {
    if dim == 1 {
        let a = m[0][0].abs();
        return (a, a, m[0][0]);
    }
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let fro = m[0][0].powi(2) + m[0][1].powi(2) + m[1][0].powi(2) + m[1][1].powi(2);
    let disc = (fro * fro - 4.0 * det * det).max(0.0).sqrt();
    let smax = (0.5 * (fro + disc)).sqrt();
    let smin = if smax > 0.0 { det.abs() / smax } else { 0.0 };
    (smax, smin, det)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conical_needs_two_dimensions() {
        assert_eq!(
            Kernel::conical(1, 1.5, DirectionField::Constant(0.0), 0.5).unwrap_err(),
            Error::DegenerateCone
        );
    }

    #[test]
    fn conical_angular_membership() {
        let k = Kernel::conical(2, 1.5, DirectionField::Constant(0.0), 0.5).unwrap();
        // within ±60° of ±e1
        assert_eq!(k.angular_at(&[0.0, 0.0], 59f64.to_radians()), 1.0);
        assert_eq!(k.angular_at(&[0.0, 0.0], 61f64.to_radians()), 0.0);
        assert_eq!(k.angular_at(&[0.0, 0.0], 181f64.to_radians()), 1.0);
        assert!((k.constants().lambda1 - PI * 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn sigma_scalar_gives_power() {
        let k = Kernel::sigma(1, 1.5, SigmaField::Matrix([[2.0, 0.0], [0.0, 1.0]]), 1.0).unwrap();
        for z in [0.3, -2.0, 5.0] {
            assert!((k.eval(&[0.1], &[z]) - 2f64.powf(1.5)).abs() < 1e-13);
        }
    }

    #[test]
    fn sigma_rotation_is_isotropic() {
        let k = Kernel::sigma(
            2,
            1.2,
            SigmaField::Rotation {
                scale: 1.0,
                angle_amplitude: 0.7,
            },
            1.0,
        )
        .unwrap();
        for (x, t) in [(0.3, 0.1), (1.7, 2.0), (4.0, 5.5)] {
            assert!((k.angular_at(&[x, 0.2], t) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_sigma_rejected() {
        let e = Kernel::sigma(2, 1.0, SigmaField::Matrix([[1.0, 2.0], [0.5, 1.0]]), 1.0);
        assert!(matches!(e, Err(Error::SingularSigma { .. })));
    }

    #[test]
    fn singular_values_of_diagonal() {
        let (a, b, d) = singular_values(&[[3.0, 0.0], [0.0, -0.5]], 2);
        assert!((a - 3.0).abs() < 1e-14 && (b - 0.5).abs() < 1e-14 && (d + 1.5).abs() < 1e-14);
    }
}
