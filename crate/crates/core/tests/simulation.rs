use stablelab::jump::{
    simulate_marginals, simulate_path, DirectCoefficients, SimSpec, StableJumpConfig,
};
use stablelab::kernels::Kernel;

/// `ψ(ξ) = 2κ ∫_ε^R (cos ξr − 1) r^{-1-α} dr` by Simpson's rule in `log r`.
fn band_exponent(xi: f64, level: f64, alpha: f64, eps: f64, r: f64) -> f64 {
    let n = 200_000;
    let (a, b) = (eps.ln(), r.ln());
    let h = (b - a) / n as f64;
    let f = |u: f64| {
        let r = u.exp();
        ((xi * r).cos() - 1.0) * r.powf(-alpha)
    };
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    2.0 * level * s * h / 3.0
}

#[test]
fn constant_kernel_matches_band_characteristic_function() {
    let (alpha, eps, r, t) = (1.5, 0.05, 100.0, 0.5);
    let level = 1.0;
    let k = Kernel::constant(1, alpha, level).unwrap();
    let cfg = StableJumpConfig::new(alpha, eps, r).unwrap();
    let c = DirectCoefficients::new(&k, &[], &cfg).unwrap();
    let spec = SimSpec::new(t, 0.125).unwrap();
    let n = 100_000;
    let x = simulate_marginals(n, [0.0, 0.0], &c, &cfg, &spec, 11);
    for xi in [1.0, 2.0, 4.0, 8.0] {
        let cos: Vec<f64> = x.iter().map(|p| (xi * p[0]).cos()).collect();
        let sin: Vec<f64> = x.iter().map(|p| (xi * p[0]).sin()).collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
        let se = |v: &[f64], m: f64| {
            (v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (n - 1) as f64 / n as f64).sqrt()
        };
        let (mc, ms) = (mean(&cos), mean(&sin));
        let target = (t * band_exponent(xi, level, alpha, eps, r)).exp();
        assert!(
            (mc - target).abs() < 3.0 * se(&cos, mc),
            "ξ={xi}: {mc} vs {target}"
        );
        assert!(ms.abs() < 3.0 * se(&sin, ms), "ξ={xi}: imaginary part {ms}");
    }
}

#[test]
fn same_seed_gives_bit_identical_paths() {
    let k = Kernel::constant(2, 1.2, 0.7).unwrap();
    let cfg = StableJumpConfig::new(1.2, 0.05, 3.0).unwrap();
    let c = DirectCoefficients::new(&k, &[], &cfg).unwrap();
    let spec = SimSpec::new(1.0, 0.01).unwrap();
    let a = simulate_path([0.3, -0.2], &c, &cfg, &spec, 42, 9);
    let b = simulate_path([0.3, -0.2], &c, &cfg, &spec, 42, 9);
    assert_eq!(a, b);
}
