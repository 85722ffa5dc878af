//! The nonlocal operator `ℒ^α_κ` on periodic grids: exact multipliers for
//! translation invariant kernels, separable or pointwise frozen symbols for
//! variable kernels, and an independent physical-space quadrature.

mod probe;
mod quad;
pub mod symbol;

use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::besov::{holder_norm, Ratio};
use crate::error::{Error, Result};
use crate::grid::{inverse_real, GridFunction, TorusGrid};
use crate::io::write_atomic;
use crate::kernels::Kernel;

pub use probe::{
    annulus_test_function, freq_max_principle_probe, probe_value, ProbeReport, ProbeSettings,
};
pub use quad::{apply_quadrature, apply_variable_quadrature, QuadratureOptions, QuadratureValue};
pub use symbol::{
    frozen_symbol, radial_symbol, radial_symbol_band, stable_constant, Compensation, SymbolSpec,
};

/// Symbol `ψ(ξ)` of a translation invariant kernel on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiplierTable {
    grid: TorusGrid,
    name: String,
    alpha: f64,
    spec: SymbolSpec,
    values: Vec<Complex64>,
}

fn symbol_table(grid: &TorusGrid, f: impl Fn([f64; 2]) -> Complex64 + Sync) -> Vec<Complex64> {
    (0..grid.len())
        .into_par_iter()
        .map(|i| f(grid.frequency(i)))
        .collect()
}

/// `ψ(-ξ)` in spectral index order.
fn reflect(grid: &TorusGrid, table: &[Complex64]) -> Vec<Complex64> {
    let n = grid.n();
    let neg = |k: usize| (n - k) % n;
    (0..grid.len())
        .map(|i| {
            if grid.dim() == 1 {
                table[neg(i)]
            } else {
                table[neg(i / n) * n + neg(i % n)]
            }
        })
        .collect()
}

impl MultiplierTable {
    pub fn build(k: &Kernel, grid: &TorusGrid) -> Result<Self> {
        Self::build_with(k, grid, SymbolSpec::full(k.alpha()))
    }

    pub fn build_with(k: &Kernel, grid: &TorusGrid, spec: SymbolSpec) -> Result<Self> {
        if !k.is_x_independent() {
            return Err(Error::NotTranslationInvariant);
        }
        if k.dim() != grid.dim() {
            return Err(Error::GridMismatch);
        }
        spec.validate()?;
        let x0 = [0.0, 0.0];
        let d = k.dim();
        let values = symbol_table(grid, |xi| frozen_symbol(k, &x0[..d], xi, &spec));
        Ok(Self {
            grid: *grid,
            name: k.name().to_string(),
            alpha: k.alpha(),
            spec,
            values,
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn spec(&self) -> &SymbolSpec {
        &self.spec
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        self.grid.check_same(f.grid())?;
        Ok(f.apply_table(&self.values))
    }

    pub fn to_csv(&self) -> String {
        let mut s = if self.grid.dim() == 1 {
            String::from("xi,re,im\n")
        } else {
            String::from("xi1,xi2,re,im\n")
        };
        for (i, v) in self.values.iter().enumerate() {
            let xi = self.grid.frequency(i);
            if self.grid.dim() == 1 {
                s.push_str(&format!("{:.17e},{:.17e},{:.17e}\n", xi[0], v.re, v.im));
            } else {
                s.push_str(&format!(
                    "{:.17e},{:.17e},{:.17e},{:.17e}\n",
                    xi[0], xi[1], v.re, v.im
                ));
            }
        }
        s
    }

    fn cache_name(k: &Kernel, grid: &TorusGrid, spec: &SymbolSpec) -> String {
        let band = match spec.band {
            Some((e, r)) => format!("_band{e:e}-{r:e}"),
            None => String::new(),
        };
        format!(
            "mult_{}_d{}_a{}_n{}_l{:e}{}.bin",
            k.name().replace(['/', '@'], "-"),
            grid.dim(),
            k.alpha(),
            grid.n(),
            grid.length(),
            band
        )
    }

    fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 16 * self.values.len());
        out.extend_from_slice(b"MUL1");
        out.extend_from_slice(&(self.values.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.alpha.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
        out
    }

    /// Loads the table from `dir` when cached, otherwise builds and stores it.
    pub fn load_or_build(
        dir: &Path,
        k: &Kernel,
        grid: &TorusGrid,
        spec: SymbolSpec,
    ) -> Result<Self> {
        let path = dir.join(Self::cache_name(k, grid, &spec));
        if let Ok(bytes) = std::fs::read(&path) {
            if bytes.len() == 16 + 16 * grid.len() && &bytes[..4] == b"MUL1" {
                let f = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
                let values = (0..grid.len())
                    .map(|i| Complex64::new(f(16 + 16 * i), f(24 + 16 * i)))
                    .collect();
                return Ok(Self {
                    grid: *grid,
                    name: k.name().to_string(),
                    alpha: k.alpha(),
                    spec,
                    values,
                });
            }
        }
        let t = Self::build_with(k, grid, spec)?;
        write_atomic(&path, &t.to_bytes())?;
        Ok(t)
    }
}

pub fn apply_multiplier(table: &MultiplierTable, f: &GridFunction) -> Result<GridFunction> {
    table.apply(f)
}

#[derive(Clone, Debug)]
enum Weight {
    Ones,
    Dense(Vec<f64>),
    Point(usize),
}

#[derive(Clone, Debug)]
struct Term {
    weight: Weight,
    symbol: Vec<Complex64>,
    adjoint: Vec<Complex64>,
}

/// `ℒ = Σ_r a_r(x) P_{ψ_r}` with `P_ψ` a Fourier multiplier.
#[derive(Clone, Debug)]
pub struct NonlocalOperator {
    grid: TorusGrid,
    spec: SymbolSpec,
    terms: Vec<Term>,
    mean_symbol: Vec<Complex64>,
    x_independent: bool,
}

impl NonlocalOperator {
    pub fn new(k: &Kernel, grid: &TorusGrid) -> Result<Self> {
        Self::with_spec(k, grid, SymbolSpec::full(k.alpha()))
    }

    pub fn with_spec(k: &Kernel, grid: &TorusGrid, spec: SymbolSpec) -> Result<Self> {
        if k.dim() != grid.dim() {
            return Err(Error::GridMismatch);
        }
        spec.validate()?;
        let d = grid.dim();
        let make = |weight: Weight, sym: Vec<Complex64>| Term {
            adjoint: reflect(grid, &sym),
            weight,
            symbol: sym,
        };
        let terms: Vec<Term> = match k.separable(grid) {
            Some(parts) => parts
                .into_iter()
                .map(|p| {
                    let sym = symbol_table(grid, |xi| {
                        symbol::term_symbol(k, &p.anchor[..d], p.scale, p.direction, xi, &spec)
                    });
                    let weight = if p.weight.iter().all(|&w| w == 1.0) {
                        Weight::Ones
                    } else {
                        Weight::Dense(p.weight)
                    };
                    make(weight, sym)
                })
                .collect(),
            None => (0..grid.len())
                .into_par_iter()
                .map(|i| {
                    let x = grid.point(i);
                    let sym: Vec<Complex64> = (0..grid.len())
                        .map(|j| frozen_symbol(k, &x[..d], grid.frequency(j), &spec))
                        .collect();
                    make(Weight::Point(i), sym)
                })
                .collect(),
        };
        let mut mean_symbol = vec![Complex64::new(0.0, 0.0); grid.len()];
        let inv_n = 1.0 / grid.len() as f64;
        for t in &terms {
            let m = match &t.weight {
                Weight::Ones => 1.0,
                Weight::Dense(w) => crate::stats::neumaier_sum(w.iter().copied()) * inv_n,
                Weight::Point(_) => inv_n,
            };
            for (a, s) in mean_symbol.iter_mut().zip(&t.symbol) {
                *a += s * m;
            }
        }
        Ok(Self {
            grid: *grid,
            spec,
            terms,
            mean_symbol,
            x_independent: k.is_x_independent(),
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn spec(&self) -> &SymbolSpec {
        &self.spec
    }

    pub fn is_x_independent(&self) -> bool {
        self.x_independent
    }

    /// Symbol of the x-averaged kernel.
    pub fn mean_symbol(&self) -> &[Complex64] {
        &self.mean_symbol
    }

    fn check(&self, f: &GridFunction) -> Result<()> {
        self.grid.check_same(f.grid())
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        self.check(f)?;
        let spec = f.spectrum();
        let n = self.grid.len();
        let mut out = vec![0.0; n];
        let mut points = Vec::new();
        for t in &self.terms {
            match &t.weight {
                Weight::Point(i) => points.push((*i, t)),
                w => {
                    let prod: Vec<Complex64> =
                        spec.iter().zip(&t.symbol).map(|(a, b)| a * b).collect();
                    let vals = inverse_real(&self.grid, prod);
                    match w {
                        Weight::Ones => out.iter_mut().zip(&vals).for_each(|(o, v)| *o += v),
                        Weight::Dense(a) => out
                            .iter_mut()
                            .zip(&vals)
                            .zip(a)
                            .for_each(|((o, v), w)| *o += v * w),
                        Weight::Point(_) => unreachable!(),
                    }
                }
            }
        }
        if !points.is_empty() {
            let vals: Vec<(usize, f64)> = points
                .par_iter()
                .map(|(i, t)| {
                    let x = self.grid.point(*i);
                    let mut acc = 0.0;
                    for (j, (c, s)) in spec.iter().zip(&t.symbol).enumerate() {
                        let xi = self.grid.frequency(j);
                        let ph = xi[0] * x[0] + xi[1] * x[1];
                        let v = c * s;
                        acc += v.re * ph.cos() - v.im * ph.sin();
                    }
                    (*i, acc / n as f64)
                })
                .collect();
            for (i, v) in vals {
                out[i] += v;
            }
        }
        Ok(GridFunction::from_parts(self.grid, out))
    }

    /// Transpose of [`NonlocalOperator::apply`] in the grid inner product,
    /// i.e. the forward (Fokker–Planck) operator acting on densities.
    pub fn apply_adjoint(&self, rho: &GridFunction) -> Result<GridFunction> {
        self.check(rho)?;
        let n = self.grid.len();
        let mut acc = vec![Complex64::new(0.0, 0.0); n];
        let mut points = Vec::new();
        for t in &self.terms {
            let weighted = match &t.weight {
                Weight::Ones => rho.clone(),
                Weight::Dense(a) => GridFunction::from_parts(
                    self.grid,
                    rho.values().iter().zip(a).map(|(r, w)| r * w).collect(),
                ),
                Weight::Point(i) => {
                    points.push((*i, t));
                    continue;
                }
            };
            for ((a, c), s) in acc.iter_mut().zip(weighted.spectrum()).zip(&t.adjoint) {
                *a += c * s;
            }
        }
        for (i, t) in points {
            let x = self.grid.point(i);
            let r = rho.values()[i];
            if r == 0.0 {
                continue;
            }
            for (j, (a, s)) in acc.iter_mut().zip(&t.adjoint).enumerate() {
                let xi = self.grid.frequency(j);
                let ph = -(xi[0] * x[0] + xi[1] * x[1]);
                *a += s * Complex64::new(ph.cos(), ph.sin()) * r;
            }
        }
        Ok(GridFunction::from_spectrum(self.grid, acc))
    }

    /// Adjoint assembled column by column from pairings `⟨ϱ, ℒ e_m⟩` with the
    /// real Fourier basis. Quadratic cost; used as an oracle.
    pub fn apply_adjoint_weak(&self, rho: &GridFunction) -> Result<GridFunction> {
        self.check(rho)?;
        let n = self.grid.len();
        let cols: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|m| {
                let mut e = vec![0.0; n];
                e[m] = 1.0;
                let le = self.apply(&GridFunction::from_parts(self.grid, e)).unwrap();
                crate::stats::neumaier_sum(le.values().iter().zip(rho.values()).map(|(a, b)| a * b))
            })
            .collect();
        Ok(GridFunction::from_parts(self.grid, cols))
    }

    /// Applies the x-averaged multiplier.
    pub fn apply_mean(&self, f: &GridFunction) -> Result<GridFunction> {
        self.check(f)?;
        Ok(f.apply_table(&self.mean_symbol))
    }
}

/// `ℒ^α_κ f` on the grid of `f`.
pub fn apply_variable(k: &Kernel, f: &GridFunction) -> Result<GridFunction> {
    NonlocalOperator::new(k, f.grid())?.apply(f)
}

/// `‖ℒ f‖_{C^β} / ‖f‖_{C^{α+β}}`.
pub fn operator_bound_ratio(k: &Kernel, f: &GridFunction, beta: f64) -> Result<Ratio> {
    let lf = apply_variable(k, f)?;
    let num = holder_norm(&lf, beta);
    let den = holder_norm(f, k.alpha() + beta);
    if num <= 1e-13 * den.max(f64::MIN_POSITIVE) {
        return Ok(Ratio::Degenerate);
    }
    Ok(Ratio::of(num, den, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{DirectionField, SigmaField};
    use std::f64::consts::PI;

    fn grid(n: usize) -> TorusGrid {
        TorusGrid::new(1, n, 2.0 * PI).unwrap()
    }

    #[test]
    fn multiplier_is_dissipative_and_kills_constants() {
        for alpha in [0.5, 1.0, 1.5] {
            let k = Kernel::constant(1, alpha, 1.0).unwrap();
            let t = MultiplierTable::build(&k, &grid(64)).unwrap();
            assert_eq!(t.values()[0], Complex64::new(0.0, 0.0));
            assert!(t.values().iter().all(|v| v.re <= 0.0));
            let c = GridFunction::constant(grid(64), 3.0);
            assert!(t.apply(&c).unwrap().sup_norm() < 1e-13);
        }
    }

    #[test]
    fn variable_operator_matches_multiplier_for_constant_kernel() {
        let g = grid(128);
        let k = Kernel::constant(1, 1.5, 1.0).unwrap();
        let f = GridFunction::from_fn(g, |x| (x[0]).sin() + 0.3 * (5.0 * x[0]).cos());
        let a = apply_variable(&k, &f).unwrap();
        let b = MultiplierTable::build(&k, &g).unwrap().apply(&f).unwrap();
        let diff = a.sub(&b).unwrap().sup_norm();
        assert!(diff < 1e-10 * b.sup_norm());
    }

    #[test]
    fn table_requires_translation_invariance() {
        let k = Kernel::rough_x(1, 1.5, 0.9, 0.5, 2.0 * PI).unwrap();
        assert_eq!(
            MultiplierTable::build(&k, &grid(32)).unwrap_err(),
            Error::NotTranslationInvariant
        );
    }

    #[test]
    fn adjoint_matches_weak_assembly() {
        let g = grid(32);
        let k = Kernel::rough_x(1, 1.3, 0.9, 0.5, 2.0 * PI).unwrap();
        let op = NonlocalOperator::new(&k, &g).unwrap();
        let rho = GridFunction::from_fn(g, |x| (x[0].cos() + 1.5) * (0.3 * x[0]).sin().abs());
        let a = op.apply_adjoint(&rho).unwrap();
        let b = op.apply_adjoint_weak(&rho).unwrap();
        assert!(a.sub(&b).unwrap().sup_norm() < 1e-10 * b.sup_norm());
    }

    #[test]
    fn pointwise_operator_matches_weak_adjoint_in_2d() {
        let g = TorusGrid::new(2, 16, 2.0 * PI).unwrap();
        let k = Kernel::sigma(
            2,
            1.5,
            SigmaField::Diagonal {
                base: [1.0, 1.2],
                amplitude: 0.2,
            },
            1.0,
        )
        .unwrap();
        let op = NonlocalOperator::new(&k, &g).unwrap();
        let rho = GridFunction::from_fn(g, |x| 1.0 + 0.5 * (x[0] + 2.0 * x[1]).sin());
        let a = op.apply_adjoint(&rho).unwrap();
        let b = op.apply_adjoint_weak(&rho).unwrap();
        assert!(a.sub(&b).unwrap().sup_norm() < 1e-9 * b.sup_norm());
    }

    #[test]
    fn split_conical_operator_is_piecewise_frozen() {
        let g = TorusGrid::new(2, 16, 2.0 * PI).unwrap();
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
        let f = GridFunction::from_fn(g, |x| (x[0] + x[1]).cos());
        let lf = apply_variable(&k, &f).unwrap();
        for i in [0usize, 3, 200, 250] {
            let x = g.point(i);
            let frozen = k.frozen(&x);
            let v = MultiplierTable::build(&frozen, &g)
                .unwrap()
                .apply(&f)
                .unwrap();
            assert!((lf.values()[i] - v.values()[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_input_is_degenerate_ratio() {
        let k = Kernel::constant(1, 1.5, 1.0).unwrap();
        let f = GridFunction::constant(grid(64), 2.0);
        assert_eq!(
            operator_bound_ratio(&k, &f, 0.0).unwrap(),
            Ratio::Degenerate
        );
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let k = Kernel::constant(1, 1.2, 1.0).unwrap();
        let g = grid(32);
        let a = MultiplierTable::load_or_build(dir.path(), &k, &g, SymbolSpec::full(1.2)).unwrap();
        let b = MultiplierTable::load_or_build(dir.path(), &k, &g, SymbolSpec::full(1.2)).unwrap();
        assert_eq!(a.values(), b.values());
    }
}
