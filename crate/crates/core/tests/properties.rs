use std::f64::consts::TAU;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use stablelab::besov::{
    besov_norm, block_symbol, bony_product, dyadic_block, BesovParams, BlockDecomposition,
};
use stablelab::jump::{theta0, truncated_pareto_radius};
use stablelab::kernels::Kernel;
use stablelab::nonlocal::{apply_variable, NonlocalOperator};
use stablelab::{GridFunction, TorusGrid};

fn trig(grid: TorusGrid, coeffs: &[(f64, f64)]) -> GridFunction {
    GridFunction::from_fn(grid, |x| {
        coeffs
            .iter()
            .enumerate()
            .map(|(k, (a, b))| a * (k as f64 * x[0]).cos() + b * (k as f64 * x[0]).sin())
            .sum()
    })
}

fn coeffs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..20)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn block_symbols_sum_to_one(r in 0.0..1.0e6f64) {
        let s: f64 = (-1..40).map(|j| block_symbol(j, r)).sum();
        assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn blocks_reconstruct(c in coeffs()) {
        let g = TorusGrid::new(1, 64, TAU).unwrap();
        let f = trig(g, &c);
        let blocks = BlockDecomposition::new(&f);
        let mut sum = GridFunction::zeros(g);
        for j in -1..=blocks.top() {
            sum = sum.add(blocks.block(j).unwrap()).unwrap();
        }
        for j in -1..=g.j_max() {
            let b = dyadic_block(&f, j).unwrap();
            for (x, y) in b.values().iter().zip(blocks.block(j).unwrap().values()) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-13);
            }
        }
        for (a, b) in sum.values().iter().zip(f.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn besov_norm_is_homogeneous_and_subadditive(c1 in coeffs(), c2 in coeffs(), lam in -5.0..5.0f64, s in -1.0..1.0f64) {
        let g = TorusGrid::new(1, 64, TAU).unwrap();
        let (f, h) = (trig(g, &c1), trig(g, &c2));
        let p = BesovParams::new(s, f64::INFINITY, 1.0).unwrap();
        let nf = besov_norm(&f, p).unwrap();
        let scaled = besov_norm(&f.map(|v| lam * v), p).unwrap();
        assert_abs_diff_eq!(scaled, lam.abs() * nf, epsilon = 1e-10 * (1.0 + nf));
        let sum = besov_norm(&f.add(&h).unwrap(), p).unwrap();
        prop_assert!(sum <= nf + besov_norm(&h, p).unwrap() + 1e-10);
    }

    #[test]
    fn bony_decomposition_is_exact(c1 in coeffs(), c2 in coeffs()) {
        let g = TorusGrid::new(1, 128, TAU).unwrap();
        let (f, h) = (trig(g, &c1), trig(g, &c2));
        let direct = f.zip_map(&h, |a, b| a * b).unwrap();
        let bony = bony_product(&f, &h).unwrap();
        for (a, b) in bony.values().iter().zip(direct.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn operator_is_linear_and_kills_constants(c1 in coeffs(), c2 in coeffs(), a in -3.0..3.0f64, alpha in 0.3..1.9f64) {
        let g = TorusGrid::new(1, 64, TAU).unwrap();
        let k = Kernel::constant(1, alpha, 1.0).unwrap();
        let (f, h) = (trig(g, &c1), trig(g, &c2));
        let lhs = apply_variable(&k, &f.map(|v| a * v).add(&h).unwrap()).unwrap();
        let rhs = apply_variable(&k, &f).unwrap().map(|v| a * v).add(&apply_variable(&k, &h).unwrap()).unwrap();
        let scale = 1.0 + rhs.sup_norm();
        for (x, y) in lhs.values().iter().zip(rhs.values()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-10 * scale);
        }
        let op = NonlocalOperator::new(&k, &g).unwrap();
        prop_assert!(op.apply(&GridFunction::constant(g, a)).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn symmetric_operator_is_dissipative(c in coeffs(), alpha in 0.3..1.9f64) {
        let g = TorusGrid::new(1, 64, TAU).unwrap();
        let k = Kernel::constant(1, alpha, 1.0).unwrap();
        let f = trig(g, &c);
        let lf = apply_variable(&k, &f).unwrap();
        let energy = f.zip_map(&lf, |a, b| a * b).unwrap().integral();
        prop_assert!(energy <= 1e-10);
    }

    #[test]
    fn pareto_radius_stays_in_band_and_is_monotone(u in 0.0..1.0f64, v in 0.0..1.0f64, alpha in 0.1..1.99f64) {
        let (eps, r) = (0.01, 50.0);
        let (a, b) = (truncated_pareto_radius(u, alpha, eps, r), truncated_pareto_radius(v, alpha, eps, r));
        prop_assert!((eps..=r).contains(&a));
        prop_assert!((u <= v) == (a <= b) || a == b);
    }

    #[test]
    fn theta0_is_bounded_and_monotone(alpha in 0.2..1.99f64, t1 in 0.0..1.0f64, t2 in 0.0..1.0f64, t3 in 0.0..1.0f64, dt in 0.0..0.5f64) {
        let base = theta0(alpha, t1, t2, t3);
        prop_assert!(base > 0.0);
        prop_assert!(theta0(alpha, t1, (t2 + dt).min(1.0), t3) >= base - 1e-12);
        prop_assert!(theta0(alpha, t1, t2, (t3 + dt).min(1.0)) >= base - 1e-12);
        prop_assert!(theta0(alpha, (t1 + dt).min(1.0), t2, t3) >= base - 1e-12);
    }
}
