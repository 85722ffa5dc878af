//! The resolvent equation `λu − ℒ^α_κ u − b·∇u = f` on the torus, Schauder
//! ratios and the Zvonkin change of variables `Φ = id + u`.

use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::besov::{bony_from_blocks, holder_norm, BlockDecomposition, Ratio};
use crate::error::{admissibility, invalid, Error, Result};
use crate::grid::{GridFunction, TrigInterpolant};
use crate::io::write_json;
use crate::kernels::Kernel;
use crate::nonlocal::NonlocalOperator;
use crate::rng::{open_uniform, stream, AUX};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Target sup-norm of the residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Consecutive non-contracting steps tolerated before giving up.
    pub patience: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 1000,
            patience: 5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ResolventSolution {
    pub u: GridFunction,
    pub lambda: f64,
    /// `‖λu − ℒu − b·∇u − f‖_∞` on the grid.
    pub residual: f64,
    pub iterations: usize,
    /// Ratios `‖u_{n+1} − u_n‖ / ‖u_n − u_{n−1}‖`.
    pub contraction: Vec<f64>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    lambda: f64,
    residual: f64,
    iterations: usize,
    lambda0: Option<f64>,
    contraction: &'a [f64],
}

impl ResolventSolution {
    /// Writes `<stem>.gfn` and `<stem>.json`.
    pub fn write(&self, dir: &Path, stem: &str, lambda0: Option<f64>) -> Result<()> {
        self.u.write_gfn(&dir.join(format!("{stem}.gfn")))?;
        write_json(
            &dir.join(format!("{stem}.json")),
            &Sidecar {
                lambda: self.lambda,
                residual: self.residual,
                iterations: self.iterations,
                lambda0,
                contraction: &self.contraction,
            },
        )
    }
}

/// Picard solver preconditioned by the x-averaged frozen multiplier.
#[derive(Clone, Debug)]
pub struct ResolventSolver {
    op: NonlocalOperator,
    drift: Vec<GridFunction>,
    drift_blocks: Vec<BlockDecomposition>,
    opts: SolverOptions,
}

impl ResolventSolver {
    /// `b` has one component per dimension; an empty slice means `b = 0`.
    pub fn new(
        k: &Kernel,
        b: &[GridFunction],
        grid: &crate::grid::TorusGrid,
        opts: SolverOptions,
    ) -> Result<Self> {
        let op = NonlocalOperator::new(k, grid)?;
        if !b.is_empty() && b.len() != grid.dim() {
            return Err(invalid(format!(
                "drift has {} components on a {}-dimensional grid",
                b.len(),
                grid.dim()
            )));
        }
        for c in b {
            grid.check_same(c.grid())?;
        }
        Ok(Self {
            drift_blocks: b.iter().map(BlockDecomposition::new).collect(),
            drift: b.to_vec(),
            op,
            opts,
        })
    }

    pub fn drift(&self) -> &[GridFunction] {
        &self.drift
    }

    pub fn operator(&self) -> &NonlocalOperator {
        &self.op
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    pub fn with_options(mut self, opts: SolverOptions) -> Self {
        self.opts = opts;
        self
    }

    /// `b·∇u` through the Bony decomposition of each product.
    pub fn drift_term(&self, u: &GridFunction) -> GridFunction {
        let mut out = GridFunction::zeros(*u.grid());
        for (axis, bb) in self.drift_blocks.iter().enumerate() {
            let du = BlockDecomposition::new(&u.derivative(axis));
            out = out.add(&bony_from_blocks(bb, &du)).expect("same grid");
        }
        out
    }

    /// `λu − ℒu − b·∇u − f`.
    pub fn residual(
        &self,
        lambda: f64,
        u: &GridFunction,
        f: &GridFunction,
    ) -> Result<GridFunction> {
        let lu = self.op.apply(u)?;
        let bu = self.drift_term(u);
        u.scale(lambda).sub(&lu)?.sub(&bu)?.sub(f)
    }

    fn precondition(&self, lambda: f64, rhs: &GridFunction) -> GridFunction {
        let table: Vec<Complex64> = self
            .op
            .mean_symbol()
            .iter()
            .map(|p| (Complex64::new(lambda, 0.0) - p).inv())
            .collect();
        rhs.apply_table(&table)
    }

    pub fn solve(&self, lambda: f64, f: &GridFunction) -> Result<ResolventSolution> {
        self.solve_from(lambda, f, None)
    }

    pub fn solve_from(
        &self,
        lambda: f64,
        f: &GridFunction,
        start: Option<&GridFunction>,
    ) -> Result<ResolventSolution> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid(format!("λ must be positive, got {lambda}")));
        }
        self.op.grid().check_same(f.grid())?;
        let mut u = match start {
            Some(s) => s.clone(),
            None => GridFunction::zeros(*f.grid()),
        };
        let mut contraction = Vec::new();
        let mut prev_step = f64::NAN;
        let mut bad = 0;
        for it in 0..=self.opts.max_iter {
            // r = λu − ℒu − b·∇u − f; the Picard update is u − (λ − ℒ_mult)^{-1} r
            let r = self.residual(lambda, &u, f)?;
            let res = r.sup_norm();
            if !res.is_finite() {
                return Err(Error::NotContracting {
                    factor: f64::INFINITY,
                    iteration: it,
                });
            }
            if res <= self.opts.tol {
                return Ok(ResolventSolution {
                    u,
                    lambda,
                    residual: res,
                    iterations: it,
                    contraction,
                });
            }
            if it == self.opts.max_iter {
                return Err(Error::ResidualStall {
                    residual: res,
                    iterations: it,
                });
            }
            let delta = self.precondition(lambda, &r);
            let step = delta.sup_norm();
            u = u.sub(&delta)?;
            if prev_step.is_finite() && prev_step > 0.0 {
                let factor = step / prev_step;
                contraction.push(factor);
                if factor >= 1.0 {
                    bad += 1;
                    if bad >= self.opts.patience {
                        return Err(Error::NotContracting {
                            factor,
                            iteration: it,
                        });
                    }
                } else {
                    bad = 0;
                }
            }
            prev_step = step;
        }
        unreachable!()
    }

    /// Geometric-mean contraction factor over a short Picard run.
    pub fn measured_contraction(&self, lambda: f64, f: &GridFunction, steps: usize) -> f64 {
        let mut u = GridFunction::zeros(*f.grid());
        let mut norms = Vec::new();
        for _ in 0..steps {
            let r = match self.residual(lambda, &u, f) {
                Ok(r) => r,
                Err(_) => return f64::INFINITY,
            };
            let delta = self.precondition(lambda, &r);
            let s = delta.sup_norm();
            if !s.is_finite() {
                return f64::INFINITY;
            }
            if s <= 1e-14 * (1.0 + u.sup_norm()) {
                break;
            }
            norms.push(s);
            u = u.sub(&delta).expect("same grid");
        }
        if norms.len() < 3 {
            return 0.0;
        }
        let skip = norms.len() / 3;
        let first = norms[skip];
        let last = *norms.last().unwrap();
        let n = (norms.len() - 1 - skip) as f64;
        (last / first).powf(1.0 / n)
    }

    /// Smallest `λ` (within a factor `2^{1/8}`) where Picard contracts.
    pub fn estimate_lambda0(&self, f: &GridFunction) -> f64 {
        let steps = 40;
        let contracts = |l: f64| self.measured_contraction(l, f, steps) < 1.0;
        let mut hi = 1e-3;
        while !contracts(hi) {
            hi *= 4.0;
            if hi > 1e8 {
                return f64::INFINITY;
            }
        }
        if hi == 1e-3 {
            return 0.0;
        }
        let mut lo = hi / 4.0;
        while hi / lo > 2f64.powf(0.125) {
            let mid = (lo * hi).sqrt();
            if contracts(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

/// Checks the drift regularity hypotheses of the Hölder theory.
pub fn check_admissible(alpha: f64, beta: f64, theta: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(admissibility("α ∈ (0, 2)", format!("α = {alpha}")));
    }
    if alpha <= 1.0 {
        if !(beta > 1.0 - alpha && beta <= theta) {
            return Err(admissibility(
                "β ∈ (1 − α, ϑ] for α ≤ 1",
                format!("β = {beta}, 1 − α = {}, ϑ = {theta}", 1.0 - alpha),
            ));
        }
    } else {
        let lo = -(0.5 * (alpha - 1.0)).min(theta);
        if !(beta > lo && beta <= theta) {
            return Err(admissibility(
                "β ∈ (−((α−1)/2 ∧ ϑ), ϑ] for α ∈ (1, 2)",
                format!("β = {beta}, lower bound {lo}"),
            ));
        }
    }
    Ok(())
}

/// `(r1, r2) = ((λ−λ0)‖u‖_β / ‖f‖_β, ‖u‖_{α+β} / ‖f‖_β)`.
pub fn schauder_ratio(
    sol: &ResolventSolution,
    f: &GridFunction,
    beta: f64,
    alpha: f64,
    lambda0: f64,
) -> (Ratio, Ratio) {
    let fb = holder_norm(f, beta);
    let floor = 1e-13;
    let r1 = Ratio::of(
        (sol.lambda - lambda0) * holder_norm(&sol.u, beta),
        fb,
        floor,
    );
    let r2 = Ratio::of(holder_norm(&sol.u, alpha + beta), fb, floor);
    (r1, r2)
}

/// `Φ = id + u` with `λu − ℒu − b·∇u = b` and `‖∇u‖_∞ ≤ 1/2`.
#[derive(Clone, Debug)]
pub struct ZvonkinMap {
    kernel: Kernel,
    lambda: f64,
    u: Vec<GridFunction>,
    interp: Vec<TrigInterpolant>,
    gradient_sup: f64,
    /// `Φ^{-1}` at every grid point, component-major.
    inverse_table: Vec<[f64; 2]>,
}

impl ZvonkinMap {
    pub fn build(k: &Kernel, b: &[GridFunction], beta: f64, opts: SolverOptions) -> Result<Self> {
        let alpha = k.alpha();
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(admissibility("α ∈ (1, 2)", format!("α = {alpha}")));
        }
        let theta = k.constants().theta;
        let lo = -(0.5 * (alpha - 1.0)).min(theta);
        if !(beta > lo && beta <= 0.0) {
            return Err(admissibility(
                "β ∈ (−((α−1)/2 ∧ ϑ), 0]",
                format!("β = {beta}, lower bound {lo}"),
            ));
        }
        let grid = *b
            .first()
            .ok_or_else(|| invalid("drift needs at least one component"))?
            .grid();
        let solver = ResolventSolver::new(k, b, &grid, opts)?;
        let mut lambda = 1.0;
        loop {
            if lambda > 1e6 {
                return Err(Error::LambdaOverflow { lambda });
            }
            let attempt: Result<Vec<ResolventSolution>> =
                b.iter().map(|bi| solver.solve(lambda, bi)).collect();
            match attempt {
                Ok(sols) => {
                    let u: Vec<GridFunction> = sols.into_iter().map(|s| s.u).collect();
                    let grad = gradient_sup(&u);
                    if grad <= 0.5 {
                        return Ok(Self::from_solution(k.clone(), lambda, u, grad));
                    }
                }
                Err(Error::NotContracting { .. }) | Err(Error::ResidualStall { .. }) => {}
                Err(e) => return Err(e),
            }
            lambda *= 2.0;
        }
    }

    fn from_solution(kernel: Kernel, lambda: f64, u: Vec<GridFunction>, gradient_sup: f64) -> Self {
        let interp: Vec<TrigInterpolant> = u.iter().map(TrigInterpolant::new).collect();
        let grid = *u[0].grid();
        let mut map = Self {
            kernel,
            lambda,
            u,
            interp,
            gradient_sup,
            inverse_table: Vec::new(),
        };
        map.inverse_table = (0..grid.len())
            .map(|i| {
                let y = grid.point(i);
                map.invert(&y[..grid.dim()], None)
            })
            .collect();
        map
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn u(&self) -> &[GridFunction] {
        &self.u
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// `Φ^{-1}` at every grid point.
    pub fn inverse_table(&self) -> &[[f64; 2]] {
        &self.inverse_table
    }

    pub fn dim(&self) -> usize {
        self.u[0].grid().dim()
    }

    /// `sup |∇u|`, operator norm of the Jacobian on the grid.
    pub fn gradient_sup(&self) -> f64 {
        self.gradient_sup
    }

    fn u_at(&self, x: &[f64]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (o, p) in out.iter_mut().zip(&self.interp) {
            *o = p.eval(x);
        }
        out
    }

    pub fn phi(&self, x: &[f64]) -> [f64; 2] {
        let u = self.u_at(x);
        let mut out = [0.0; 2];
        for i in 0..self.dim() {
            out[i] = x[i] + u[i];
        }
        out
    }

    fn invert(&self, y: &[f64], start: Option<[f64; 2]>) -> [f64; 2] {
        let d = self.dim();
        let mut x = start.unwrap_or([y[0], if d == 2 { y[1] } else { 0.0 }]);
        // contraction x ← y − u(x), then Newton polish
        for _ in 0..200 {
            let u = self.u_at(&x[..d]);
            let mut change = 0.0f64;
            for i in 0..d {
                let nx = y[i] - u[i];
                change = change.max((nx - x[i]).abs());
                x[i] = nx;
            }
            if change < 1e-13 {
                break;
            }
        }
        for _ in 0..3 {
            let p = self.phi(&x[..d]);
            if d == 1 {
                let g = self.interp[0].gradient(&x[..1])[0];
                x[0] -= (p[0] - y[0]) / (1.0 + g);
            } else {
                let g0 = self.interp[0].gradient(&x);
                let g1 = self.interp[1].gradient(&x);
                let j = [[1.0 + g0[0], g0[1]], [g1[0], 1.0 + g1[1]]];
                let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                let r = [p[0] - y[0], p[1] - y[1]];
                x[0] -= (j[1][1] * r[0] - j[0][1] * r[1]) / det;
                x[1] -= (-j[1][0] * r[0] + j[0][0] * r[1]) / det;
            }
        }
        x
    }

    /// `Φ^{-1}(y)`.
    pub fn phi_inverse(&self, y: &[f64]) -> [f64; 2] {
        let grid = self.u[0].grid();
        let i = grid.nearest_index(y);
        let p = grid.point(i);
        let t = self.inverse_table[i];
        let mut start = [0.0; 2];
        for a in 0..self.dim() {
            start[a] = t[a] + (y[a] - p[a]);
        }
        self.invert(y, Some(start))
    }

    /// Largest `|Φ(Φ^{-1}(y)) − y|` over the grid.
    pub fn inverse_defect(&self) -> f64 {
        let grid = self.u[0].grid();
        let d = self.dim();
        (0..grid.len())
            .map(|i| {
                let y = grid.point(i);
                let p = self.phi(&self.inverse_table[i][..d]);
                (0..d).map(|a| (p[a] - y[a]).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Transformed drift `a(y) = λ u(Φ^{-1}(y))`.
    pub fn drift(&self, y: &[f64]) -> [f64; 2] {
        let x = self.phi_inverse(y);
        let u = self.u_at(&x[..self.dim()]);
        [self.lambda * u[0], self.lambda * u[1]]
    }

    /// Transformed jump `g(y, z) = Φ(Φ^{-1}(y) + z) − y`.
    pub fn jump(&self, y: &[f64], z: &[f64]) -> [f64; 2] {
        let x = self.phi_inverse(y);
        self.jump_from(&x, z)
    }

    /// `g` given `x = Φ^{-1}(y)`: `z + u(x + z) − u(x)`.
    pub fn jump_from(&self, x: &[f64; 2], z: &[f64]) -> [f64; 2] {
        let d = self.dim();
        let mut xz = [0.0; 2];
        for i in 0..d {
            xz[i] = x[i] + z[i];
        }
        let a = self.u_at(&xz[..d]);
        let b = self.u_at(&x[..d]);
        let mut out = [0.0; 2];
        for i in 0..d {
            out[i] = z[i] + a[i] - b[i];
        }
        out
    }

    /// Transformed kernel `k(y, z) = κ(Φ^{-1}(y), z)`.
    pub fn kernel_at(&self, y: &[f64], z: &[f64]) -> f64 {
        let x = self.phi_inverse(y);
        self.kernel.eval(&x[..self.dim()], z)
    }

    /// Range of `|g(y, z)| / |z|` over random probes.
    pub fn jump_ratio_range(&self, probes: usize, seed: u64) -> (f64, f64) {
        let mut rng = stream(seed, 0, AUX);
        let grid = self.u[0].grid();
        let d = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for _ in 0..probes {
            let y: Vec<f64> = (0..d)
                .map(|_| rng.random_range(0.0..grid.length()))
                .collect();
            let r = grid.length() * open_uniform(&mut rng).powi(3);
            let th = rng.random_range(0.0..std::f64::consts::TAU);
            let z = if d == 1 {
                vec![if th < std::f64::consts::PI { r } else { -r }]
            } else {
                vec![r * th.cos(), r * th.sin()]
            };
            let g = self.jump(&y, &z);
            let ratio = (0..d).map(|i| g[i] * g[i]).sum::<f64>().sqrt() / r;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        (lo, hi)
    }

    /// `sup |g(y1, z) − g(y2, z)| / (|y1 − y2|^{s} |z|)` over random probe pairs.
    pub fn holder_transfer(&self, s: f64, probes: usize, seed: u64) -> f64 {
        let mut rng = stream(seed, 1, AUX);
        let grid = self.u[0].grid();
        let d = self.dim();
        let mut best = 0.0f64;
        for _ in 0..probes {
            let y1: Vec<f64> = (0..d)
                .map(|_| rng.random_range(0.0..grid.length()))
                .collect();
            let dist = grid.spacing() * 2f64.powf(rng.random_range(-4.0..6.0));
            let y2: Vec<f64> = y1
                .iter()
                .enumerate()
                .map(|(i, v)| if i == 0 { v + dist } else { *v })
                .collect();
            let r = rng.random_range(0.01..1.0);
            let z: Vec<f64> = if d == 1 { vec![r] } else { vec![r, 0.0] };
            let a = self.jump(&y1, &z);
            let b = self.jump(&y2, &z);
            let diff = (0..d).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt();
            best = best.max(diff / (dist.powf(s) * r));
        }
        best
    }
}

fn gradient_sup(u: &[GridFunction]) -> f64 {
    let d = u.len();
    let grads: Vec<Vec<GridFunction>> = u.iter().map(|c| c.gradient()).collect();
    let n = u[0].grid().len();
    (0..n)
        .map(|i| {
            if d == 1 {
                grads[0][0].values()[i].abs()
            } else {
                // spectral norm of the 2×2 Jacobian
                let a = grads[0][0].values()[i];
                let b = grads[0][1].values()[i];
                let c = grads[1][0].values()[i];
                let e = grads[1][1].values()[i];
                let t = a * a + b * b + c * c + e * e;
                let det = a * e - b * c;
                (0.5 * (t + (t * t - 4.0 * det * det).max(0.0).sqrt())).sqrt()
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::besov::build_rough_field;
    use crate::grid::TorusGrid;
    use crate::nonlocal::MultiplierTable;
    use std::f64::consts::PI;

    fn grid(n: usize) -> TorusGrid {
        TorusGrid::new(1, n, 2.0 * PI).unwrap()
    }

    #[test]
    fn diagonal_case_is_closed_form() {
        let g = grid(64);
        let k = Kernel::constant(1, 1.5, 1.0).unwrap();
        let solver = ResolventSolver::new(&k, &[], &g, SolverOptions::default()).unwrap();
        let f = GridFunction::from_fn(g, |x| (3.0 * x[0]).cos());
        let sol = solver.solve(2.0, &f).unwrap();
        let psi = MultiplierTable::build(&k, &g).unwrap().values()[3].re;
        let exact = GridFunction::from_fn(g, |x| (3.0 * x[0]).cos() / (2.0 - psi));
        assert!(sol.u.sub(&exact).unwrap().sup_norm() < 1e-12);
        assert!(sol.iterations <= 2);
    }

    #[test]
    fn zero_forcing_gives_zero() {
        let g = grid(32);
        let k = Kernel::rough_x(1, 1.5, 0.9, 0.5, 2.0 * PI).unwrap();
        let b = vec![GridFunction::from_fn(g, |x| x[0].sin())];
        let solver = ResolventSolver::new(&k, &b, &g, SolverOptions::default()).unwrap();
        let sol = solver.solve(5.0, &GridFunction::zeros(g)).unwrap();
        assert_eq!(sol.u.sup_norm(), 0.0);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn rough_drift_converges_and_is_certified() {
        let g = grid(256);
        let k = Kernel::rough_x(1, 1.5, 0.9, 0.5, 2.0 * PI).unwrap();
        let b = vec![build_rough_field(&g, -0.2, 6, 3).unwrap()];
        let solver = ResolventSolver::new(&k, &b, &g, SolverOptions::default()).unwrap();
        let f = GridFunction::from_fn(g, |x| (x[0]).cos() + 0.2 * (2.0 * x[0]).sin());
        let sol = solver.solve(50.0, &f).unwrap();
        assert!(sol.residual <= 1e-8);
        // independent check with the pointwise product and a fresh operator
        let lu = crate::nonlocal::apply_variable(&k, &sol.u).unwrap();
        let bu = b[0].mul(&sol.u.derivative(0)).unwrap();
        let r = sol
            .u
            .scale(50.0)
            .sub(&lu)
            .unwrap()
            .sub(&bu)
            .unwrap()
            .sub(&f)
            .unwrap();
        assert!(r.sup_norm() < 1e-7);
    }

    #[test]
    fn resolvent_identity() {
        let g = grid(128);
        let k = Kernel::rough_x(1, 1.5, 0.9, 0.5, 2.0 * PI).unwrap();
        let b = vec![GridFunction::from_fn(g, |x| 0.5 * (2.0 * x[0]).cos())];
        let solver = ResolventSolver::new(&k, &b, &g, SolverOptions::default()).unwrap();
        let f = GridFunction::from_fn(g, |x| (x[0]).sin());
        let u2 = solver.solve(8.0, &f).unwrap().u;
        let shifted = f.sub(&u2.scale(8.0 - 3.0)).unwrap();
        let u1 = solver.solve(3.0, &shifted).unwrap().u;
        assert!(u1.sub(&u2).unwrap().sup_norm() < 1e-6);
    }

    #[test]
    fn admissibility_ranges() {
        assert!(check_admissible(1.2, -0.5, 0.9).is_err());
        assert!(check_admissible(1.5, -0.2, 0.9).is_ok());
        assert!(check_admissible(0.8, 0.1, 0.9).is_err());
        assert!(check_admissible(0.8, 0.5, 0.9).is_ok());
    }

    #[test]
    fn zero_drift_zvonkin_is_identity() {
        let g = grid(64);
        let k = Kernel::constant(1, 1.5, 1.0).unwrap();
        let z = ZvonkinMap::build(&k, &[GridFunction::zeros(g)], 0.0, SolverOptions::default())
            .unwrap();
        assert_eq!(z.drift(&[0.3])[0], 0.0);
        assert_eq!(z.jump(&[0.3], &[0.2])[0], 0.2);
        assert_eq!(z.phi_inverse(&[1.1])[0], 1.1);
    }

    #[test]
    fn zvonkin_with_rough_drift() {
        let g = grid(256);
        let k = Kernel::rough_x(1, 1.5, 0.9, 0.5, 2.0 * PI).unwrap();
        let b = vec![build_rough_field(&g, -0.2, 6, 11).unwrap().scale(4.0)];
        let z = ZvonkinMap::build(&k, &b, -0.2, SolverOptions::default()).unwrap();
        assert!(z.gradient_sup() <= 0.5);
        assert!(z.inverse_defect() < 1e-10);
        let (lo, hi) = z.jump_ratio_range(2000, 5);
        assert!(lo >= 0.5 && hi <= 1.5, "{lo} {hi}");
        assert!(z.holder_transfer(1.5 - 0.2 - 1.0, 500, 5).is_finite());
    }
}
