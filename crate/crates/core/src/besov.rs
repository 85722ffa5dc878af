//! Littlewood–Paley blocks, Besov norms, paraproducts and Bernstein checks.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, TorusGrid};
use crate::rng;

/// Smooth transition from 0 (t ≤ 0) to 1 (t ≥ 1).
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// Radial cutoff: 1 on `|ξ| ≤ 1`, 0 on `|ξ| ≥ 3/2`.
pub fn chi(r: f64) -> f64 {
    1.0 - smooth_step((r - 1.0) / 0.5)
}

/// Annular cutoff `χ(ξ) − χ(2ξ)`, supported in `1/2 ≤ |ξ| ≤ 3/2`.
pub fn phi(r: f64) -> f64 {
    chi(r) - chi(2.0 * r)
}

/// Fattened annulus: 1 on `[1/2, 3/2]`, supported in `(1/4, 2)`.
pub fn phi_tilde(r: f64) -> f64 {
    smooth_step((r - 0.25) / 0.25) * (1.0 - smooth_step((r - 1.5) / 0.5))
}

/// Multiplier of `Δ_j` at radius `r`.
pub fn block_symbol(j: i32, r: f64) -> f64 {
    if j < -1 {
        0.0
    } else if j == -1 {
        chi(2.0 * r)
    } else {
        phi(r / 2f64.powi(j))
    }
}

/// Multiplier of `S_j = Σ_{k ≤ j-1} Δ_k`.
pub fn low_pass_symbol(j: i32, r: f64) -> f64 {
    if j <= -1 {
        0.0
    } else {
        chi(r / 2f64.powi(j - 1))
    }
}

/// Validated Besov exponents `(s, p, q)`; `p`, `q` may be `f64::INFINITY`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BesovParams {
    pub s: f64,
    pub p: f64,
    pub q: f64,
}

impl BesovParams {
    pub fn new(s: f64, p: f64, q: f64) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::InvalidBesovParams(format!("s = {s}")));
        }
        for (name, v) in [("p", p), ("q", q)] {
            if v.is_nan() || v < 1.0 {
                return Err(Error::InvalidBesovParams(format!("{name} = {v} < 1")));
            }
        }
        Ok(Self { s, p, q })
    }

    pub fn holder(s: f64) -> Self {
        Self {
            s,
            p: f64::INFINITY,
            q: f64::INFINITY,
        }
    }
}

/// A ratio that may be undefined because the denominator block is empty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Ratio {
    Finite(f64),
    Degenerate,
}

impl Ratio {
    pub fn value(&self) -> Option<f64> {
        match self {
            Ratio::Finite(v) => Some(*v),
            Ratio::Degenerate => None,
        }
    }

    pub(crate) fn of(num: f64, den: f64, floor: f64) -> Self {
        if den <= floor || !den.is_finite() {
            Ratio::Degenerate
        } else {
            Ratio::Finite(num / den)
        }
    }
}

fn check_block(grid: &TorusGrid, j: i32) -> Result<()> {
    let j_max = grid.j_max();
    if j < -1 || j > j_max {
        Err(Error::BlockOutOfRange { j, j_max })
    } else {
        Ok(())
    }
}

/// `Δ_j f` for `-1 ≤ j ≤ j_max`.
pub fn dyadic_block(f: &GridFunction, j: i32) -> Result<GridFunction> {
    check_block(f.grid(), j)?;
    Ok(block_unchecked(f, j))
}

pub(crate) fn block_unchecked(f: &GridFunction, j: i32) -> GridFunction {
    f.apply_radial(|r| block_symbol(j, r))
}

/// `S_j f`; `S_{-1} f = 0`.
pub fn low_freq_cutoff(f: &GridFunction, j: i32) -> Result<GridFunction> {
    if j < -1 {
        return Err(Error::InvalidArgument(format!("low-pass index {j} < -1")));
    }
    Ok(f.apply_radial(|r| low_pass_symbol(j, r)))
}

/// All blocks `Δ_{-1} … Δ_{J}` with `J` = [`TorusGrid::j_cover`], which sum
/// to the input exactly.
#[derive(Clone, Debug)]
pub struct BlockDecomposition {
    blocks: Vec<GridFunction>,
}

impl BlockDecomposition {
    pub fn new(f: &GridFunction) -> Self {
        let top = f.grid().j_cover();
        let blocks = (-1..=top).map(|j| block_unchecked(f, j)).collect();
        Self { blocks }
    }

    pub fn top(&self) -> i32 {
        self.blocks.len() as i32 - 2
    }

    /// `Δ_j`; zero outside `-1..=top`.
    pub fn block(&self, j: i32) -> Option<&GridFunction> {
        if j < -1 {
            None
        } else {
            self.blocks.get((j + 1) as usize)
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        self.blocks[0].grid()
    }
}

/// `T_f g = Σ_j S_{j-1} f · Δ_j g`.
pub fn paraproduct(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    f.grid().check_same(g.grid())?;
    Ok(paraproduct_blocks(
        &BlockDecomposition::new(f),
        &BlockDecomposition::new(g),
    ))
}

pub fn paraproduct_blocks(f: &BlockDecomposition, g: &BlockDecomposition) -> GridFunction {
    let grid = *f.grid();
    let n = grid.len();
    let mut out = vec![0.0; n];
    let mut low = vec![0.0; n];
    for j in -1..=g.top() {
        // low holds S_{j-1} f = Σ_{k ≤ j-2} Δ_k f
        if j >= 1 {
            if let Some(b) = f.block(j - 2) {
                for (l, v) in low.iter_mut().zip(b.values()) {
                    *l += v;
                }
            }
        }
        let gj = g.block(j).unwrap();
        for ((o, l), v) in out.iter_mut().zip(&low).zip(gj.values()) {
            *o += l * v;
        }
    }
    GridFunction::from_parts(grid, out)
}

/// `R(f, g) = Σ_{|k-j| ≤ 1} Δ_k f · Δ_j g`.
pub fn remainder(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    f.grid().check_same(g.grid())?;
    Ok(remainder_blocks(
        &BlockDecomposition::new(f),
        &BlockDecomposition::new(g),
    ))
}

pub fn remainder_blocks(f: &BlockDecomposition, g: &BlockDecomposition) -> GridFunction {
    let grid = *f.grid();
    let mut out = vec![0.0; grid.len()];
    for k in -1..=f.top() {
        let fk = f.block(k).unwrap();
        for j in (k - 1)..=(k + 1) {
            if let Some(gj) = g.block(j) {
                for ((o, a), b) in out.iter_mut().zip(fk.values()).zip(gj.values()) {
                    *o += a * b;
                }
            }
        }
    }
    GridFunction::from_parts(grid, out)
}

/// `fg` as `T_f g + T_g f + R(f, g)`.
pub fn bony_product(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    f.grid().check_same(g.grid())?;
    let bf = BlockDecomposition::new(f);
    let bg = BlockDecomposition::new(g);
    Ok(bony_from_blocks(&bf, &bg))
}

pub fn bony_from_blocks(f: &BlockDecomposition, g: &BlockDecomposition) -> GridFunction {
    let a = paraproduct_blocks(f, g);
    let b = paraproduct_blocks(g, f);
    let c = remainder_blocks(f, g);
    let vals = a
        .values()
        .iter()
        .zip(b.values())
        .zip(c.values())
        .map(|((x, y), z)| x + y + z)
        .collect();
    GridFunction::from_parts(*f.grid(), vals)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockEntry {
    pub j: i32,
    pub block_norm: f64,
    pub weighted: f64,
}

/// Per-block norms `‖Δ_j f‖_p` and weights `2^{sj}‖Δ_j f‖_p` for `j ≤ j_max`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockProfile {
    pub s: f64,
    pub p: f64,
    pub j_max: i32,
    pub entries: Vec<BlockEntry>,
}

impl BlockProfile {
    pub fn new(f: &GridFunction, s: f64, p: f64) -> Self {
        let j_max = f.grid().j_max();
        let entries = (-1..=j_max)
            .map(|j| {
                let block_norm = block_unchecked(f, j).lp_norm(p);
                BlockEntry {
                    j,
                    block_norm,
                    weighted: 2f64.powf(s * j as f64) * block_norm,
                }
            })
            .collect();
        Self {
            s,
            p,
            j_max,
            entries,
        }
    }

    /// `ℓ^q` norm of the weighted sequence.
    pub fn norm(&self, q: f64) -> f64 {
        if q.is_infinite() {
            self.entries.iter().fold(0.0, |m, e| m.max(e.weighted))
        } else {
            self.entries
                .iter()
                .map(|e| e.weighted.powf(q))
                .sum::<f64>()
                .powf(1.0 / q)
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("j,block_norm,weighted\n");
        for e in &self.entries {
            s.push_str(&format!(
                "{},{:.17e},{:.17e}\n",
                e.j, e.block_norm, e.weighted
            ));
        }
        s
    }
}

pub fn block_profile(f: &GridFunction, s: f64, p: f64) -> Result<BlockProfile> {
    BesovParams::new(s, p, f64::INFINITY)?;
    Ok(BlockProfile::new(f, s, p))
}

/// Truncated Besov norm over `-1 ≤ j ≤ j_max`.
pub fn besov_norm(f: &GridFunction, params: BesovParams) -> Result<f64> {
    let params = BesovParams::new(params.s, params.p, params.q)?;
    Ok(BlockProfile::new(f, params.s, params.p).norm(params.q))
}

pub fn holder_norm(f: &GridFunction, s: f64) -> f64 {
    BlockProfile::new(f, s, f64::INFINITY).norm(f64::INFINITY)
}

/// Derivative order for [`bernstein_check`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Order {
    Integer(u32),
    Fractional(f64),
}

/// `‖D^k Δ_j f‖_q / (2^{kj + dj(1/p - 1/q)} ‖Δ_j f‖_p)`, maximised over
/// multi-indices for integer `k`.
pub fn bernstein_check(f: &GridFunction, j: i32, order: Order, p: f64, q: f64) -> Result<Ratio> {
    check_block(f.grid(), j)?;
    BesovParams::new(0.0, p, q)?;
    if q < p {
        return Err(Error::InvalidBesovParams(format!(
            "need q >= p, got p = {p}, q = {q}"
        )));
    }
    let grid = *f.grid();
    let d = grid.dim() as f64;
    let block = block_unchecked(f, j);
    let base = block.lp_norm(p);
    let scale_j = j.max(0) as f64;
    let inv = |v: f64| if v.is_infinite() { 0.0 } else { 1.0 / v };
    let (num, k) = match order {
        Order::Integer(k) => {
            let mut best = 0.0f64;
            for a in 0..=k {
                if grid.dim() == 1 && a > 0 {
                    break;
                }
                let mut g = block.clone();
                for _ in 0..(k - a) {
                    g = g.derivative(0);
                }
                for _ in 0..a {
                    g = g.derivative(1);
                }
                best = best.max(g.lp_norm(q));
            }
            (best, k as f64)
        }
        Order::Fractional(s) => {
            if s < 0.0 {
                return Err(Error::InvalidArgument(
                    "fractional order must be >= 0".into(),
                ));
            }
            let g = block.apply_radial(|r| if r == 0.0 { 0.0 } else { r.powf(s) });
            (g.lp_norm(q), s)
        }
    };
    let den = 2f64.powf(k * scale_j + d * scale_j * (inv(p) - inv(q))) * base;
    Ok(Ratio::of(
        num,
        den,
        1e-13 * f.sup_norm().max(f64::MIN_POSITIVE),
    ))
}

/// `Σ_{j=0}^{J} 2^{-βj} ε_j cos(2^j ω·(x - x_m))` with Rademacher signs and a
/// random grid-aligned phase, so each block peaks at exactly 1 on the grid.
pub fn build_rough_field(grid: &TorusGrid, beta: f64, top: i32, seed: u64) -> Result<GridFunction> {
    if top > grid.j_max() {
        return Err(Error::ScaleOverflow {
            requested: top,
            j_max: grid.j_max(),
        });
    }
    if top < 0 {
        return Err(Error::InvalidArgument("J must be >= 0".into()));
    }
    let mut r = rng::stream(seed, 0, rng::AUX);
    let n = grid.n();
    let unit = 2.0 * std::f64::consts::PI / grid.length();
    let mut values = vec![0.0; grid.len()];
    for j in 0..=top {
        let sign = rng::rademacher(&mut r);
        let axis = if grid.dim() == 2 {
            r.random_range(0..2usize)
        } else {
            0
        };
        let centre = r.random_range(0..n);
        let k = ((2f64.powi(j) / unit).round() as i64).max(1);
        let amp = sign * 2f64.powf(-beta * j as f64);
        for (i, v) in values.iter_mut().enumerate() {
            let coord = if grid.dim() == 1 {
                i
            } else if axis == 0 {
                i / n
            } else {
                i % n
            };
            let shift = (coord as i64 - centre as i64).rem_euclid(n as i64);
            let phase = 2.0 * std::f64::consts::PI * ((k * shift) % n as i64) as f64 / n as f64;
            *v += amp * phase.cos();
        }
    }
    Ok(GridFunction::from_parts(*grid, values))
}

/// Brute-force `sup_{x ≠ y} |f(x) - f(y)| / |x - y|^s` with periodic distance.
pub fn discrete_holder_seminorm(f: &GridFunction, s: f64) -> f64 {
    let grid = f.grid();
    let n = grid.n();
    let h = grid.spacing();
    let v = f.values();
    let wrap = |k: usize| (k.min(n - k)) as f64 * h;
    let mut best = 0.0f64;
    if grid.dim() == 1 {
        for shift in 1..n {
            let dist = wrap(shift).powf(s);
            for i in 0..n {
                let d = (v[(i + shift) % n] - v[i]).abs();
                best = best.max(d / dist);
            }
        }
    } else {
        for s1 in 0..n {
            for s2 in 0..n {
                if s1 == 0 && s2 == 0 {
                    continue;
                }
                let dist = wrap(s1).hypot(wrap(s2)).powf(s);
                for i in 0..n {
                    for k in 0..n {
                        let a = v[i * n + k];
                        let b = v[((i + s1) % n) * n + (k + s2) % n];
                        best = best.max((a - b).abs() / dist);
                    }
                }
            }
        }
    }
    best
}

/// `2^{βj} ‖[Δ_j, b·∇] u‖_∞ / (‖b‖_{C^β} ‖∇u‖_∞)`.
pub fn commutator_ratio(b: &[GridFunction], u: &GridFunction, beta: f64, j: i32) -> Result<Ratio> {
    check_block(u.grid(), j)?;
    if b.len() != u.grid().dim() {
        return Err(Error::InvalidArgument(
            "drift must have d components".into(),
        ));
    }
    let grad = u.gradient();
    let grad_dj = block_unchecked(u, j).gradient();
    let grid = *u.grid();
    let mut transport = vec![0.0; grid.len()];
    let mut frozen = vec![0.0; grid.len()];
    for (a, bi) in b.iter().enumerate() {
        grid.check_same(bi.grid())?;
        for i in 0..grid.len() {
            transport[i] += bi.values()[i] * grad[a].values()[i];
            frozen[i] += bi.values()[i] * grad_dj[a].values()[i];
        }
    }
    let lhs = block_unchecked(&GridFunction::from_parts(grid, transport), j);
    let comm = lhs
        .values()
        .iter()
        .zip(&frozen)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let bnorm: f64 = b.iter().map(|bi| holder_norm(bi, beta)).fold(0.0, f64::max);
    let gnorm = grad.iter().map(|g| g.sup_norm()).fold(0.0, f64::max);
    Ok(Ratio::of(
        2f64.powf(beta * j as f64) * comm,
        bnorm * gnorm,
        1e-300,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid1() -> TorusGrid {
        TorusGrid::new(1, 256, 2.0 * PI).unwrap()
    }

    #[test]
    fn cutoff_landmarks() {
        assert_eq!(chi(0.3), 1.0);
        assert_eq!(chi(1.0), 1.0);
        assert_eq!(chi(1.5), 0.0);
        assert!((chi(1.25) - 0.5).abs() < 1e-15);
        for r in [0.75, 0.8, 0.9, 1.0] {
            assert!((phi(r) - 1.0).abs() < 1e-15);
        }
        assert_eq!(phi(0.5), 0.0);
        assert_eq!(phi(1.5), 0.0);
        assert_eq!(phi_tilde(0.5), 1.0);
        assert_eq!(phi_tilde(1.5), 1.0);
        assert_eq!(phi_tilde(2.0), 0.0);
        assert_eq!(phi_tilde(0.25), 0.0);
    }

    #[test]
    fn blocks_select_pure_modes() {
        let g = grid1();
        let f = GridFunction::from_fn(g, |x| (4.0 * x[0]).cos() + 0.5);
        let d2 = dyadic_block(&f, 2).unwrap();
        for (a, x) in d2.values().iter().zip(0..) {
            let xx = g.point(x)[0];
            assert!((a - (4.0 * xx).cos()).abs() < 1e-13);
        }
        let dm = dyadic_block(&f, -1).unwrap();
        assert!(dm.values().iter().all(|v| (v - 0.5).abs() < 1e-13));
        assert!(dyadic_block(&f, g.j_max() + 1).is_err());
        assert!(dyadic_block(&f, -2).is_err());
    }

    #[test]
    fn low_pass_of_minus_one_is_zero() {
        let f = GridFunction::from_fn(grid1(), |x| x[0].sin());
        assert_eq!(low_freq_cutoff(&f, -1).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn rough_field_has_unit_holder_norm() {
        let g = TorusGrid::new(1, 1024, 2.0 * PI).unwrap();
        for seed in 0..5 {
            let f = build_rough_field(&g, 0.4, g.j_max(), seed).unwrap();
            assert!((holder_norm(&f, 0.4) - 1.0).abs() < 1e-12);
        }
        assert!(matches!(
            build_rough_field(&g, 0.4, g.j_max() + 1, 0),
            Err(Error::ScaleOverflow { .. })
        ));
    }

    #[test]
    fn bernstein_on_pure_mode() {
        let g = grid1();
        let f = GridFunction::from_fn(g, |x| (8.0 * x[0]).sin());
        let r = bernstein_check(&f, 3, Order::Integer(1), f64::INFINITY, f64::INFINITY)
            .unwrap()
            .value()
            .unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        let empty = bernstein_check(&f, 1, Order::Integer(1), 2.0, 2.0).unwrap();
        assert_eq!(empty, Ratio::Degenerate);
    }

    #[test]
    fn holder_seminorm_of_linear_hat() {
        let g = TorusGrid::new(1, 64, 1.0).unwrap();
        let f = GridFunction::from_fn(g, |x| (x[0] - 0.5).abs());
        assert!((discrete_holder_seminorm(&f, 1.0) - 1.0).abs() < 1e-12);
    }
}
