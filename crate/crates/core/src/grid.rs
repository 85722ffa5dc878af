//! Periodic grids and sampled functions with a cached discrete spectrum.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_atomic;

/// Uniform grid on the torus `[0, L)^d`, `d` in {1, 2}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
    length: f64,
}

impl TorusGrid {
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!(
                "dimension {dim} not in {{1, 2}}"
            )));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "N = {n} must be a power of two >= 16"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "length {length} must be positive"
            )));
        }
        Ok(Self { dim, n, length })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// Number of grid points, `N^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Signed integer mode of FFT index `k`; the Nyquist index maps to `-N/2`.
    pub fn mode(&self, k: usize) -> i64 {
        if k < self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    pub fn wavenumber(&self, k: usize) -> f64 {
        2.0 * PI * self.mode(k) as f64 / self.length
    }

    /// Frequency vector of flat spectral index `idx` (second entry zero in 1D).
    pub fn frequency(&self, idx: usize) -> [f64; 2] {
        if self.dim == 1 {
            [self.wavenumber(idx), 0.0]
        } else {
            [self.wavenumber(idx / self.n), self.wavenumber(idx % self.n)]
        }
    }

    pub fn frequency_norm(&self, idx: usize) -> f64 {
        let f = self.frequency(idx);
        f[0].hypot(f[1])
    }

    /// Physical coordinates of flat grid index `idx`.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let h = self.spacing();
        if self.dim == 1 {
            [idx as f64 * h, 0.0]
        } else {
            [(idx / self.n) as f64 * h, (idx % self.n) as f64 * h]
        }
    }

    pub fn nyquist(&self) -> f64 {
        PI * self.n as f64 / self.length
    }

    /// Largest block index whose support fits below the Nyquist frequency.
    pub fn j_max(&self) -> i32 {
        (self.nyquist() / 1.5).log2().floor() as i32
    }

    /// Smallest `J` with `2^J` above every grid frequency; blocks `-1..=J`
    /// partition the whole discrete spectrum.
    pub fn j_cover(&self) -> i32 {
        let top = self.nyquist() * (self.dim as f64).sqrt();
        let mut j = 0;
        while 2f64.powi(j) < top {
            j += 1;
        }
        j
    }

    pub fn check_same(&self, other: &TorusGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Index of the grid point nearest to `x` (periodic).
    pub fn nearest_index(&self, x: &[f64]) -> usize {
        let h = self.spacing();
        let idx = |v: f64| -> usize {
            let i = (v / h).round() as i64;
            i.rem_euclid(self.n as i64) as usize
        };
        if self.dim == 1 {
            idx(x[0])
        } else {
            idx(x[0]) * self.n + idx(x[1])
        }
    }
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    type PlanCache = Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>;
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry((n, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

/// In-place unnormalised FFT of a row-major `n^dim` array.
pub fn fft_nd(data: &mut [Complex64], n: usize, dim: usize, inverse: bool) {
    let fft = plan(n, inverse);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    if dim == 1 {
        fft.process_with_scratch(data, &mut scratch);
        return;
    }
    for row in data.chunks_mut(n) {
        fft.process_with_scratch(row, &mut scratch);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for c in 0..n {
        for r in 0..n {
            col[r] = data[r * n + c];
        }
        fft.process_with_scratch(&mut col, &mut scratch);
        for r in 0..n {
            data[r * n + c] = col[r];
        }
    }
}

/// Forward DFT `f̂_k = Σ_x f(x) e^{-i ξ_k x}` of real samples.
pub fn forward(grid: &TorusGrid, values: &[f64]) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(&mut data, grid.n(), grid.dim(), false);
    data
}

/// Inverse DFT with `1/N^d` normalisation; returns the real part.
pub fn inverse_real(grid: &TorusGrid, mut spectrum: Vec<Complex64>) -> Vec<f64> {
    fft_nd(&mut spectrum, grid.n(), grid.dim(), true);
    let scale = 1.0 / grid.len() as f64;
    spectrum.iter().map(|c| c.re * scale).collect()
}

/// Samples of a real function on a [`TorusGrid`].
#[derive(Clone, Debug)]
pub struct GridFunction {
    grid: TorusGrid,
    values: Vec<f64>,
    spectrum: OnceLock<Vec<Complex64>>,
}

impl PartialEq for GridFunction {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.values == other.values
    }
}

impl GridFunction {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite sample".into()));
        }
        Ok(Self::from_parts(grid, values))
    }

    pub(crate) fn from_parts(grid: TorusGrid, values: Vec<f64>) -> Self {
        Self {
            grid,
            values,
            spectrum: OnceLock::new(),
        }
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let d = grid.dim();
        let values = (0..grid.len()).map(|i| f(&grid.point(i)[..d])).collect();
        Self::from_parts(grid, values)
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self::from_parts(grid, vec![0.0; grid.len()])
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        Self::from_parts(grid, vec![c; grid.len()])
    }

    /// Real part of the inverse DFT of `spectrum`.
    pub fn from_spectrum(grid: TorusGrid, spectrum: Vec<Complex64>) -> Self {
        Self::from_parts(grid, inverse_real(&grid, spectrum))
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum
            .get_or_init(|| forward(&self.grid, &self.values))
    }

    /// Applies the Fourier multiplier `m(ξ)`.
    pub fn apply_multiplier(&self, m: impl Fn([f64; 2]) -> Complex64) -> Self {
        let spec: Vec<Complex64> = self
            .spectrum()
            .iter()
            .enumerate()
            .map(|(i, c)| c * m(self.grid.frequency(i)))
            .collect();
        Self::from_spectrum(self.grid, spec)
    }

    /// Applies a real radial multiplier `m(|ξ|)`.
    pub fn apply_radial(&self, m: impl Fn(f64) -> f64) -> Self {
        let spec: Vec<Complex64> = self
            .spectrum()
            .iter()
            .enumerate()
            .map(|(i, c)| c * m(self.grid.frequency_norm(i)))
            .collect();
        Self::from_spectrum(self.grid, spec)
    }

    /// Applies a tabulated multiplier given in spectral index order.
    pub fn apply_table(&self, table: &[Complex64]) -> Self {
        let spec: Vec<Complex64> = self
            .spectrum()
            .iter()
            .zip(table)
            .map(|(c, m)| c * m)
            .collect();
        Self::from_spectrum(self.grid, spec)
    }

    /// Discrete `L^p` norm with cell quadrature; `p = ∞` gives the max.
    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_norm(&self.values, self.grid.cell_volume(), p)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        crate::stats::neumaier_sum(self.values.iter().copied()) / self.values.len() as f64
    }

    pub fn integral(&self) -> f64 {
        crate::stats::neumaier_sum(self.values.iter().copied()) * self.grid.cell_volume()
    }

    /// Spectral partial derivative along `axis`; the Nyquist mode is dropped.
    pub fn derivative(&self, axis: usize) -> Self {
        let n = self.grid.n();
        let spec: Vec<Complex64> = self
            .spectrum()
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k = if self.grid.dim() == 1 {
                    i
                } else if axis == 0 {
                    i / n
                } else {
                    i % n
                };
                if k == n / 2 {
                    Complex64::new(0.0, 0.0)
                } else {
                    c * Complex64::new(0.0, self.grid.wavenumber(k))
                }
            })
            .collect();
        Self::from_spectrum(self.grid, spec)
    }

    pub fn gradient(&self) -> Vec<Self> {
        (0..self.grid.dim()).map(|a| self.derivative(a)).collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_parts(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self::from_parts(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// Periodic (bi)linear interpolation.
    pub fn interp_linear(&self, x: &[f64]) -> f64 {
        interp_linear(&self.grid, &self.values, x)
    }

    /// Exact trigonometric interpolant at an arbitrary point.
    pub fn eval(&self, x: &[f64]) -> f64 {
        TrigInterpolant::new(self).eval(x)
    }

    /// Band-limited interpolation onto a grid `factor` times finer.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if !factor.is_power_of_two() {
            return Err(Error::InvalidArgument(
                "refinement factor must be a power of two".into(),
            ));
        }
        let n = self.grid.n();
        let m = n * factor;
        let fine = TorusGrid::new(self.grid.dim(), m, self.grid.length())?;
        let place = |k: usize| -> Vec<(usize, f64)> {
            let mode = self.grid.mode(k);
            if mode == -(n as i64) / 2 && factor > 1 {
                vec![((m as i64 + mode) as usize, 0.5), ((-mode) as usize, 0.5)]
            } else {
                vec![(mode.rem_euclid(m as i64) as usize, 1.0)]
            }
        };
        let mut spec = vec![Complex64::new(0.0, 0.0); fine.len()];
        let src = self.spectrum();
        let scale = fine.len() as f64 / self.grid.len() as f64;
        if self.grid.dim() == 1 {
            for (k, c) in src.iter().enumerate() {
                for (t, w) in place(k) {
                    spec[t] += c * (w * scale);
                }
            }
        } else {
            for k1 in 0..n {
                for k2 in 0..n {
                    let c = src[k1 * n + k2];
                    for (t1, w1) in place(k1) {
                        for (t2, w2) in place(k2) {
                            spec[t1 * m + t2] += c * (w1 * w2 * scale);
                        }
                    }
                }
            }
        }
        Ok(Self::from_spectrum(fine, spec))
    }

    pub fn to_gfn_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + 8 * self.values.len());
        out.extend_from_slice(b"GFN1");
        out.extend_from_slice(&[0u8; 4]);
        out.extend_from_slice(&(self.grid.dim() as f64).to_le_bytes());
        out.extend_from_slice(&(self.grid.n() as f64).to_le_bytes());
        out.extend_from_slice(&self.grid.length().to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_gfn_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 32 || &bytes[..4] != b"GFN1" {
            return Err(Error::Format("missing GFN1 header".into()));
        }
        let f = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let (d, n, l) = (f(8), f(16), f(24));
        let grid = TorusGrid::new(d as usize, n as usize, l)?;
        if bytes.len() != 32 + 8 * grid.len() {
            return Err(Error::Format("GFN1 payload length mismatch".into()));
        }
        let values = bytes[32..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(grid, values)
    }

    pub fn write_gfn(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_gfn_bytes())
    }

    pub fn read_gfn(path: &Path) -> Result<Self> {
        Self::from_gfn_bytes(&std::fs::read(path)?)
    }
}

pub fn lp_norm(values: &[f64], cell: f64, p: f64) -> f64 {
    if p.is_infinite() {
        values.iter().fold(0.0, |m, v| m.max(v.abs()))
    } else if p == 1.0 {
        crate::stats::neumaier_sum(values.iter().map(|v| v.abs())) * cell
    } else if p == 2.0 {
        (crate::stats::neumaier_sum(values.iter().map(|v| v * v)) * cell).sqrt()
    } else {
        (crate::stats::neumaier_sum(values.iter().map(|v| v.abs().powf(p))) * cell).powf(1.0 / p)
    }
}

/// Periodic (bi)linear interpolation of grid samples.
pub fn interp_linear(grid: &TorusGrid, values: &[f64], x: &[f64]) -> f64 {
    let n = grid.n();
    let h = grid.spacing();
    let split = |v: f64| -> (usize, usize, f64) {
        let s = (v / h).rem_euclid(n as f64);
        let i = (s.floor() as usize).min(n - 1);
        let t = s - i as f64;
        (i, (i + 1) % n, t)
    };
    if grid.dim() == 1 {
        let (i, j, t) = split(x[0]);
        values[i] * (1.0 - t) + values[j] * t
    } else {
        let (i0, i1, s) = split(x[0]);
        let (j0, j1, t) = split(x[1]);
        let v = |a: usize, b: usize| values[a * n + b];
        (1.0 - s) * ((1.0 - t) * v(i0, j0) + t * v(i0, j1))
            + s * ((1.0 - t) * v(i1, j0) + t * v(i1, j1))
    }
}

/// Sparse trigonometric interpolant `f(x) = Re Σ c_m e^{i ξ_m·x}`.
#[derive(Clone, Debug)]
pub struct TrigInterpolant {
    dim: usize,
    modes: Vec<([f64; 2], Complex64)>,
}

impl TrigInterpolant {
    pub fn new(f: &GridFunction) -> Self {
        let grid = f.grid();
        let scale = 1.0 / grid.len() as f64;
        let spec = f.spectrum();
        let peak = spec.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        let modes = spec
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > 1e-15 * peak)
            .map(|(i, c)| (grid.frequency(i), c * scale))
            .collect();
        Self {
            dim: grid.dim(),
            modes,
        }
    }

    pub fn modes(&self) -> &[([f64; 2], Complex64)] {
        &self.modes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn phase(&self, xi: &[f64; 2], x: &[f64]) -> f64 {
        if self.dim == 1 {
            xi[0] * x[0]
        } else {
            xi[0] * x[0] + xi[1] * x[1]
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.modes
            .iter()
            .map(|(xi, c)| {
                let (s, co) = self.phase(xi, x).sin_cos();
                c.re * co - c.im * s
            })
            .sum()
    }

    pub fn gradient(&self, x: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for (xi, c) in &self.modes {
            let (s, co) = self.phase(xi, x).sin_cos();
            // d/dx Re(c e^{iθ}) = -Re(c) sin θ - Im(c) cos θ, times ξ
            let w = -c.re * s - c.im * co;
            g[0] += w * xi[0];
            g[1] += w * xi[1];
        }
        g
    }

    pub fn hessian(&self, x: &[f64]) -> [[f64; 2]; 2] {
        let mut h = [[0.0; 2]; 2];
        for (xi, c) in &self.modes {
            let (s, co) = self.phase(xi, x).sin_cos();
            let w = -(c.re * co - c.im * s);
            for a in 0..2 {
                for b in 0..2 {
                    h[a][b] += w * xi[a] * xi[b];
                }
            }
        }
        h
    }

    /// Upper bound on the operator norm of the Hessian over all `x`.
    pub fn hessian_bound(&self) -> f64 {
        self.modes
            .iter()
            .map(|(xi, c)| c.norm() * (xi[0] * xi[0] + xi[1] * xi[1]))
            .sum()
    }

    pub fn max_frequency(&self) -> f64 {
        self.modes
            .iter()
            .fold(0.0, |m, (xi, _)| m.max(xi[0].hypot(xi[1])))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(TorusGrid::new(1, 12, 1.0).is_err());
        assert!(TorusGrid::new(1, 8, 1.0).is_err());
        assert!(TorusGrid::new(3, 16, 1.0).is_err());
        assert!(TorusGrid::new(1, 16, 0.0).is_err());
    }

    #[test]
    fn j_max_for_standard_grid() {
        let g = TorusGrid::new(1, 1024, 2.0 * PI).unwrap();
        assert_eq!(g.j_max(), 8);
        assert_eq!(g.j_cover(), 9);
    }

    #[test]
    fn derivative_of_sine() {
        let g = TorusGrid::new(1, 64, 2.0 * PI).unwrap();
        let f = GridFunction::from_fn(g, |x| (3.0 * x[0]).sin());
        let df = f.derivative(0);
        for i in 0..g.len() {
            let x = g.point(i)[0];
            assert!((df.values()[i] - 3.0 * (3.0 * x).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn trig_interpolant_matches_samples_and_refinement() {
        let g = TorusGrid::new(2, 16, 3.0).unwrap();
        let f = GridFunction::from_fn(g, |x| {
            (2.0 * PI * x[0] / 3.0).cos() * (4.0 * PI * x[1] / 3.0).sin() + 0.25
        });
        let t = TrigInterpolant::new(&f);
        for i in (0..g.len()).step_by(7) {
            let p = g.point(i);
            assert!((t.eval(&p) - f.values()[i]).abs() < 1e-12);
        }
        let r = f.refine(4).unwrap();
        for i in (0..r.grid().len()).step_by(37) {
            let p = r.grid().point(i);
            assert!((t.eval(&p) - r.values()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn gfn_round_trip() {
        let g = TorusGrid::new(1, 16, 2.0).unwrap();
        let f = GridFunction::from_fn(g, |x| x[0] * x[0]);
        let back = GridFunction::from_gfn_bytes(&f.to_gfn_bytes()).unwrap();
        assert_eq!(back, f);
        assert!(GridFunction::from_gfn_bytes(b"nope").is_err());
    }

    #[test]
    fn linear_interpolation_is_periodic() {
        let g = TorusGrid::new(1, 16, 1.0).unwrap();
        let f = GridFunction::from_fn(g, |x| x[0]);
        assert!((f.interp_linear(&[0.5]) - 0.5).abs() < 1e-14);
        assert!((f.interp_linear(&[1.5]) - 0.5).abs() < 1e-14);
    }
}
