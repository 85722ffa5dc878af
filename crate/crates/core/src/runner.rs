//! Experiment orchestration: one directory of artifacts per experiment, a
//! `summary.json` written last, and a consolidated report index.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::besov::{
    bernstein_check, block_symbol, bony_from_blocks, build_rough_field, dyadic_block,
    BlockDecomposition, BlockProfile, Order,
};
use crate::config::{DriftKind, ExperimentConfig, ExperimentKind, FpeSymbol, Scheme};
use crate::density::{
    admissible_gamma_q, besov_profile, density_time_scaling, dyadic_times, empirical_density,
    l1_distance, plugin_bandwidth,
};
use crate::error::{Error, Result};
use crate::fokker_planck::{evolve, initial_bump, FpeProblem, FpeScheme};
use crate::grid::{GridFunction, TorusGrid};
use crate::io::{write_atomic, write_json};
use crate::jump::{
    capped_moment_slope, coupled_predictor_errors, increment_moment_slope, increment_moments,
    krylov_exponent, krylov_second_moments, mollify, predictor_error_slope, simulate_ensemble,
    simulate_marginals, streamed_increment_moments, theta0, AnalyticCoefficients,
    DirectCoefficients, JumpCoefficients, SimSpec, StableJumpConfig, ZvonkinCoefficients,
};
use crate::kernels::{
    adjacent_pairs, check_h4, check_holder_in_x, check_lower_mass, check_upper_and_ring_symmetry,
    sample_points, Kernel,
};
use crate::nonlocal::{
    apply_quadrature, apply_variable, apply_variable_quadrature, freq_max_principle_probe,
    MultiplierTable, ProbeSettings, QuadratureOptions, SymbolSpec,
};
use crate::resolvent::{schauder_ratio, ResolventSolver, SolverOptions, ZvonkinMap};
use crate::rng::{stream, AUX};
use crate::stats::log_log_slope;

pub const THREADS_VAR: &str = "STABLELAB_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "REPORT-ONLY")]
    ReportOnly,
}

impl Status {
    pub fn label(&self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::ReportOnly => "REPORT-ONLY",
        }
    }

    pub fn of(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    /// FAIL dominates PASS, which dominates REPORT-ONLY.
    pub fn combine(items: impl IntoIterator<Item = Status>) -> Status {
        let mut out = Status::ReportOnly;
        for s in items {
            match s {
                Status::Fail => return Status::Fail,
                Status::Pass => out = Status::Pass,
                Status::ReportOnly => {}
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub criterion: Option<u32>,
    pub status: Status,
    pub value: Option<f64>,
    pub threshold: Option<f64>,
    pub detail: String,
    /// Wall-clock checks are printed but kept out of the artifacts.
    #[serde(skip)]
    pub volatile: bool,
}

impl Check {
    fn new(
        name: &str,
        criterion: Option<u32>,
        status: Status,
        value: f64,
        threshold: Option<f64>,
    ) -> Self {
        Self {
            name: name.to_string(),
            criterion,
            status,
            value: value.is_finite().then_some(value),
            threshold,
            detail: String::new(),
            volatile: false,
        }
    }

    pub fn at_most(name: &str, criterion: Option<u32>, value: f64, limit: f64) -> Self {
        Self::new(
            name,
            criterion,
            Status::of(value <= limit),
            value,
            Some(limit),
        )
    }

    pub fn at_least(name: &str, criterion: Option<u32>, value: f64, limit: f64) -> Self {
        Self::new(
            name,
            criterion,
            Status::of(value >= limit),
            value,
            Some(limit),
        )
    }

    pub fn positive(name: &str, criterion: Option<u32>, value: f64) -> Self {
        Self::new(name, criterion, Status::of(value > 0.0), value, Some(0.0))
    }

    pub fn report(name: &str, value: f64) -> Self {
        Self::new(name, None, Status::ReportOnly, value, None)
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn line(&self, kind: &str) -> String {
        let value = self
            .value
            .map(|v| format!("{v:.6e}"))
            .unwrap_or_else(|| "n/a".into());
        let mut s = format!("{:<11} {kind} {}: {value}", self.status.label(), self.name);
        if let Some(t) = self.threshold {
            s.push_str(&format!(" (limit {t:e})"));
        }
        if !self.detail.is_empty() {
            s.push_str(&format!(" [{}]", self.detail));
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub kind: String,
    pub seed: u64,
    pub status: Status,
    pub checks: Vec<Check>,
    pub artifacts: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub summary: Summary,
    /// Checks including the volatile ones.
    pub checks: Vec<Check>,
    pub dir: PathBuf,
}

impl Outcome {
    pub fn status(&self) -> Status {
        Status::combine(self.checks.iter().map(|c| c.status))
    }

    pub fn lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| c.line(&self.summary.kind))
            .collect()
    }
}

/// Worker count from `STABLELAB_THREADS`; `None` means rayon's default.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!(
                "{THREADS_VAR} must be a positive integer, got '{v}'"
            ))),
        },
    }
}

/// [`run`] inside a pool of `threads` workers.
pub fn run_with_threads(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Outcome> {
    match threads {
        None => run(cfg),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| run(cfg)),
    }
}

struct Artifacts {
    dir: PathBuf,
    names: Vec<String>,
}

impl Artifacts {
    fn new(dir: PathBuf) -> Self {
        Self {
            dir,
            names: Vec::new(),
        }
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        write_atomic(&self.dir.join(name), body.as_bytes())?;
        self.names.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        write_json(&self.dir.join(name), value)?;
        self.names.push(name.to_string());
        Ok(())
    }

    fn gfn(&mut self, name: &str, f: &GridFunction) -> Result<()> {
        f.write_gfn(&self.dir.join(name))?;
        self.names.push(name.to_string());
        Ok(())
    }

    fn external(&mut self, names: &[&str]) {
        self.names.extend(names.iter().map(|s| s.to_string()));
    }
}

fn csv(header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = format!("{header}\n");
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// Runs one experiment and writes its artifacts under `<out>/<kind>/`.
pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.check_admissibility()?;
    if cfg.kind == ExperimentKind::Report {
        return report(&cfg.out);
    }
    let dir = cfg.out.join(cfg.kind.name());
    std::fs::create_dir_all(&dir)?;
    let mut art = Artifacts::new(dir.clone());
    art.json("config.json", cfg)?;
    let checks = match cfg.kind {
        ExperimentKind::LpCheck => lp_check(cfg, &mut art)?,
        ExperimentKind::OperatorCheck => operator_check(cfg, &mut art)?,
        ExperimentKind::Resolvent => resolvent(cfg, &mut art)?,
        ExperimentKind::Simulate => simulate(cfg, &mut art)?,
        ExperimentKind::Predictor => predictor(cfg, &mut art)?,
        ExperimentKind::Krylov => krylov(cfg, &mut art)?,
        ExperimentKind::Density => density(cfg, &mut art)?,
        ExperimentKind::Fpe => fpe(cfg, &mut art)?,
        ExperimentKind::Report => unreachable!(),
    };
    let stable: Vec<Check> = checks.iter().filter(|c| !c.volatile).cloned().collect();
    let summary = Summary {
        kind: cfg.kind.name().to_string(),
        seed: cfg.seed,
        status: Status::combine(stable.iter().map(|c| c.status)),
        checks: stable,
        artifacts: art.names.clone(),
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(Outcome {
        summary,
        checks,
        dir,
    })
}

fn kernel(cfg: &ExperimentConfig) -> Result<Kernel> {
    let k = cfg
        .kernel
        .as_ref()
        .ok_or_else(|| Error::Config("field 'kernel.name' missing".into()))?;
    k.build(cfg.grid.dim, cfg.grid.length)
}

/// Drift components on `grid`; empty for the zero drift.
fn drift(cfg: &ExperimentConfig, grid: &TorusGrid) -> Result<Vec<GridFunction>> {
    let d = &cfg.drift;
    let w = 2.0 * PI / grid.length();
    let fields = match d.kind {
        DriftKind::Zero => return Ok(Vec::new()),
        DriftKind::Sine => (0..grid.dim())
            .map(|a| {
                Ok(GridFunction::from_fn(*grid, |x| {
                    d.offset + d.scale * (w * x[a]).sin()
                }))
            })
            .collect::<Result<Vec<_>>>()?,
        DriftKind::Rough => (0..grid.dim())
            .map(|a| {
                let f = build_rough_field(grid, d.beta, grid.j_max(), d.seed + a as u64)?;
                Ok(f.map(|v| d.offset + d.scale * v))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(if d.mollify > 0.0 {
        fields.iter().map(|f| mollify(f, d.mollify)).collect()
    } else {
        fields
    })
}

fn drift_or_zeros(cfg: &ExperimentConfig, grid: &TorusGrid) -> Result<Vec<GridFunction>> {
    let b = drift(cfg, grid)?;
    Ok(if b.is_empty() {
        vec![GridFunction::zeros(*grid); grid.dim()]
    } else {
        b
    })
}

fn jump_config(cfg: &ExperimentConfig) -> Result<StableJumpConfig> {
    let alpha = cfg.alpha().unwrap_or(1.5);
    StableJumpConfig::new(alpha, cfg.noise.eps_cut, cfg.noise.r_cut)
}

fn sim_spec(cfg: &ExperimentConfig) -> Result<SimSpec> {
    let mut spec = SimSpec::new(cfg.sim.t_end, cfg.sim.dt)?;
    spec.record_every = cfg.sim.record_every;
    Ok(spec)
}

/// Coefficients for the configured scheme, the start point in their
/// coordinates, and the Zvonkin map when one was built.
struct Model {
    coeffs: Box<dyn JumpCoefficients>,
    x0: [f64; 2],
    map: Option<ZvonkinMap>,
    descriptor: String,
}

fn model(cfg: &ExperimentConfig, jcfg: &StableJumpConfig) -> Result<Model> {
    let grid = cfg.grid.build()?;
    let k = kernel(cfg)?;
    let x0 = cfg.sim.x0;
    Ok(match cfg.sim.scheme {
        Scheme::Direct => Model {
            coeffs: Box::new(DirectCoefficients::new(&k, &drift(cfg, &grid)?, jcfg)?),
            x0,
            map: None,
            descriptor: k.name().to_string(),
        },
        Scheme::Analytic => {
            if cfg.grid.dim != 1 {
                return Err(Error::Config("scheme 'analytic' is one-dimensional".into()));
            }
            Model {
                coeffs: Box::new(AnalyticCoefficients::default()),
                x0,
                map: None,
                descriptor: "analytic".into(),
            }
        }
        Scheme::Zvonkin => {
            let b = drift_or_zeros(cfg, &grid)?;
            let map = ZvonkinMap::build(&k, &b, cfg.drift.beta, SolverOptions::default())?;
            let y0 = map.phi(&x0[..grid.dim()]);
            Model {
                coeffs: Box::new(ZvonkinCoefficients::new(&map, jcfg)),
                x0: y0,
                map: Some(map),
                descriptor: format!("zvonkin-{}", k.name()),
            }
        }
    })
}

fn spread(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

fn inner(f: &GridFunction, g: &GridFunction) -> f64 {
    let cell = f.grid().cell_volume();
    f.values()
        .iter()
        .zip(g.values())
        .map(|(a, b)| a * b)
        .sum::<f64>()
        * cell
}

fn lp_check(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<Check>> {
    let start = Instant::now();
    let grid = cfg.grid.build()?;
    let top = grid.j_max();
    let smooth = GridFunction::from_fn(grid, |x| x.iter().map(|v| v.cos()).sum::<f64>());
    let f = build_rough_field(&grid, 0.3, top, cfg.seed)?.add(&smooth)?;
    let g = build_rough_field(&grid, -0.2, top, cfg.seed + 1)?;
    let bf = BlockDecomposition::new(&f);
    let bg = BlockDecomposition::new(&g);
    let mut checks = Vec::new();

    let mut unity = 0.0f64;
    for idx in 0..grid.len() {
        let r = grid.frequency_norm(idx);
        let s: f64 = (-1..=bf.top()).map(|j| block_symbol(j, r)).sum();
        unity = unity.max((s - 1.0).abs());
    }
    let mut sum = vec![0.0; grid.len()];
    for j in -1..=bf.top() {
        for (s, v) in sum.iter_mut().zip(bf.block(j).unwrap().values()) {
            *s += v;
        }
    }
    let resum = GridFunction::new(grid, sum)?.sub(&f)?.sup_norm() / f.sup_norm();
    checks.push(Check::at_most(
        "partition-of-unity",
        Some(1),
        unity.max(resum),
        1e-12,
    ));

    let fg = f.mul(&g)?;
    let bony = bony_from_blocks(&bf, &bg).sub(&fg)?.sup_norm() / fg.sup_norm();
    checks.push(Check::at_most("bony-reconstruction", Some(1), bony, 1e-10));

    let energy = inner(&f, &f);
    let mut ortho = 0.0f64;
    for i in -1..=bf.top() {
        for j in (i + 2)..=bf.top() {
            let (a, b) = (bf.block(i).unwrap(), bf.block(j).unwrap());
            ortho = ortho.max(inner(a, b).abs() / energy);
            if j <= top {
                ortho = ortho.max(dyadic_block(a, j)?.sup_norm() / f.sup_norm());
            }
        }
    }
    checks.push(Check::at_most(
        "almost-orthogonality",
        Some(1),
        ortho,
        1e-12,
    ));

    let mut bern = 0.0f64;
    for j in 0..=top {
        if let Some(v) = bernstein_check(&f, j, Order::Integer(1), 2.0, f64::INFINITY)?.value() {
            bern = bern.max(v);
        }
    }
    checks.push(
        Check::report("bernstein-constant", bern)
            .with_detail("max over blocks, k = 1, p = 2, q = inf"),
    );

    let profile = BlockProfile::new(&f, 0.3, f64::INFINITY);
    art.text("profile.csv", &profile.to_csv())?;
    let mut timing = Check::at_most(
        "runtime-seconds",
        Some(1),
        start.elapsed().as_secs_f64(),
        10.0,
    );
    timing.volatile = true;
    checks.push(timing);
    Ok(checks)
}

/// Random trigonometric polynomial with integer modes in `1..=8`.
fn trig_poly(grid: &TorusGrid, seed: u64, index: u64) -> GridFunction {
    let mut rng = stream(seed, index, AUX);
    let w = 2.0 * PI / grid.length();
    let terms: Vec<([f64; 2], f64, f64)> = (0..4)
        .map(|_| {
            let k0 = rng.random_range(1..=8) as f64;
            let k1 = if grid.dim() == 2 {
                rng.random_range(-8..=8) as f64
            } else {
                0.0
            };
            let a = rng.random_range(-1.0..1.0);
            let phase = rng.random_range(0.0..2.0 * PI);
            ([k0 * w, k1 * w], a, phase)
        })
        .collect();
    GridFunction::from_fn(*grid, |x| {
        terms
            .iter()
            .map(|(k, a, p)| a * (k[0] * x[0] + k[1] * x.get(1).copied().unwrap_or(0.0) + p).cos())
            .sum()
    })
}

fn operator_check(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<Check>> {
    let grid = cfg.grid.build()?;
    let k = kernel(cfg)?;
    let d = grid.dim();
    let period = k.period();
    let mut checks = Vec::new();

    let xs = sample_points(d, period, if d == 1 { 8 } else { 4 });
    let rs = [0.25, 0.5, 1.0];
    let lower = check_lower_mass(&k, &xs, &rs)?;
    let h1 = lower.pass();
    let rep = lower
        .merge(check_upper_and_ring_symmetry(&k))
        .merge(check_holder_in_x(&k, &adjacent_pairs(d, period, 16)))
        .merge(check_h4(&k, &xs, &rs));
    art.text("kernel_validation.csv", &rep.to_csv())?;
    checks.push(
        Check::report("kernel-hypothesis-failures", rep.failures().count() as f64)
            .with_detail(format!("lower mass {}", if h1 { "holds" } else { "fails" })),
    );

    let opts = QuadratureOptions::default();
    if k.is_x_independent() {
        let table = MultiplierTable::build(&k, &grid)?;
        art.text("multiplier.csv", &table.to_csv())?;
        let mut worst = 0.0f64;
        for t in 0..cfg.operator.tests as u64 {
            let f = trig_poly(&grid, cfg.seed, t);
            let exact = table.apply(&f)?;
            let scale = exact.sup_norm();
            let mut rng = stream(cfg.seed, t, AUX + 1);
            for _ in 0..cfg.operator.points {
                let i = rng.random_range(0..grid.len());
                let x = grid.point(i);
                let q = apply_quadrature(&k, &f, &x[..d], &opts)?;
                worst = worst.max((q.value - exact.values()[i]).abs() / scale);
            }
        }
        checks.push(
            Check::at_most("quadrature-vs-multiplier", Some(2), worst, 1e-3).with_detail(format!(
                "{} functions x {} points",
                cfg.operator.tests, cfg.operator.points
            )),
        );

        let (mut xi, mut psi) = (Vec::new(), Vec::new());
        for idx in 0..grid.len() {
            let w = grid.frequency(idx);
            if w[1] == 0.0 && w[0] >= 1.0 && w[0] <= 100.0 {
                xi.push(w[0]);
                psi.push(table.values()[idx].norm());
            }
        }
        let slope = log_log_slope(&xi, &psi);
        let decades = (xi.iter().copied().fold(0.0, f64::max)
            / xi.iter().copied().fold(f64::INFINITY, f64::min))
        .log10();
        checks.push(
            Check::at_most(
                "multiplier-exponent-error",
                Some(2),
                (slope - k.alpha()).abs(),
                0.02,
            )
            .with_detail(format!("slope {slope:.4} over {decades:.2} decades")),
        );
    } else {
        let f = trig_poly(&grid, cfg.seed, 0);
        let spectral = apply_variable(&k, &f)?;
        let q = apply_variable_quadrature(&k, &f, &opts)?;
        let excess = q
            .iter()
            .zip(spectral.values())
            .map(|(v, s)| ((v.value - s).abs() - v.bracket).max(0.0))
            .fold(0.0, f64::max);
        checks.push(
            Check::report("variable-quadrature-excess", excess)
                .with_detail("beyond the remainder bracket"),
        );
    }

    if h1 {
        let settings = ProbeSettings {
            trials: cfg.operator.trials,
            modes: 6,
            seed: cfg.seed,
        };
        let mut rows = Vec::new();
        for e in 2..grid.j_max() {
            let r = 2f64.powi(e);
            let rep = freq_max_principle_probe(&k, &grid, r, &settings)?;
            rows.push(vec![r, rep.c_hat]);
        }
        let c: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        let min = c.iter().copied().fold(f64::INFINITY, f64::min);
        checks.push(
            Check::positive("probe-min-c-hat", Some(3), min)
                .with_detail(format!("{} radii", c.len())),
        );
        checks.push(Check::at_most(
            "probe-c-hat-spread",
            Some(3),
            spread(&c),
            2.0,
        ));
        art.text("probe.csv", &csv("r,c_hat", rows))?;
    }
    Ok(checks)
}

fn resolvent(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<Check>> {
    let grid = cfg.grid.build()?;
    let k = kernel(cfg)?;
    let b = drift(cfg, &grid)?;
    let beta = cfg.drift.beta;
    let opts = SolverOptions {
        tol: cfg.resolvent.tol,
        ..SolverOptions::default()
    };
    let solver = ResolventSolver::new(&k, &b, &grid, opts)?;
    let forcing = |s: u64| build_rough_field(&grid, beta, grid.j_max(), cfg.seed + s);
    let picard = solver.estimate_lambda0(&forcing(0)?);
    let floor = solver
        .operator()
        .mean_symbol()
        .get(1)
        .map(|v| v.norm())
        .unwrap_or(1.0);
    let lambda0 = picard.max(floor);
    let mut rows = Vec::new();
    let (mut r1s, mut r2s, mut residual, mut degenerate) = (Vec::new(), Vec::new(), 0.0f64, 0);
    for &m in &cfg.resolvent.lambdas {
        for s in 0..cfg.resolvent.forcings as u64 {
            let f = forcing(s + 1)?;
            let sol = solver.solve(m * lambda0, &f)?;
            if rows.is_empty() {
                sol.write(&art.dir, "solution", Some(lambda0))?;
                art.external(&["solution.gfn", "solution.json"]);
            }
            residual = residual.max(sol.residual);
            let (r1, r2) = schauder_ratio(&sol, &f, beta, k.alpha(), lambda0);
            match (r1.value(), r2.value()) {
                (Some(a), Some(c)) => {
                    r1s.push(a);
                    r2s.push(c);
                    rows.push(vec![
                        m * lambda0,
                        s as f64,
                        a,
                        c,
                        sol.residual,
                        sol.iterations as f64,
                    ]);
                }
                _ => degenerate += 1,
            }
        }
    }
    art.text(
        "ratios.csv",
        &csv("lambda,forcing,r1,r2,residual,iterations", rows),
    )?;
    let note = format!("lambda0 {lambda0:.4} (picard {picard:.4}, symbol floor {floor:.4}), {degenerate} degenerate");
    Ok(vec![
        Check::at_most("solver-residual", Some(4), residual, cfg.resolvent.tol),
        Check::at_most(
            "r1-band",
            Some(4),
            if degenerate > 0 {
                f64::INFINITY
            } else {
                spread(&r1s)
            },
            3.0,
        )
        .with_detail(note),
        Check::at_most(
            "r2-band",
            Some(4),
            if degenerate > 0 {
                f64::INFINITY
            } else {
                spread(&r2s)
            },
            3.0,
        ),
    ])
}

fn simulate(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<Check>> {
    let jcfg = jump_config(cfg)?;
    let m = model(cfg, &jcfg)?;
    let spec = sim_spec(cfg)?;
    let mut ps = cfg.moments.ps.clone();
    for p in &cfg.moments.capped {
        if !ps.contains(p) {
            ps.push(*p);
        }
    }
    let lags: Vec<usize> = (0..cfg.moments.lags).map(|k| 1usize << k).collect();
    let mut checks = Vec::new();
    let moments = if cfg.sim.store {
        let ens = simulate_ensemble(
            cfg.sim.paths,
            m.x0,
            m.coeffs.as_ref(),
            &jcfg,
            &spec,
            cfg.seed,
            &m.descriptor,
        );
        ens.write(&art.dir, "paths")?;
        art.external(&["paths.ens", "paths.json"]);
        let escaped = ens.paths.iter().filter(|p| p.escaped).count();
        checks.push(Check::report("escaped-paths", escaped as f64));
        increment_moments(&ens, &ps, &lags)?
    } else {
        streamed_increment_moments(
            m.coeffs.as_ref(),
            m.x0,
            &jcfg,
            &spec,
            cfg.sim.paths,
            cfg.seed,
            &ps,
            &lags,
        )?
    };
    let mut header = String::from("lag");
    for p in &ps {
        header.push_str(&format!(",m_{p},capped_{p}"));
    }
    let rows = (0..moments.lags.len()).map(|j| {
        let mut r = vec![moments.lags[j]];
        for i in 0..ps.len() {
            r.push(moments.moments[i][j]);
            r.push(moments.capped[i][j]);
        }
        r
    });
    art.text("moments.csv", &csv(&header, rows))?;
    let alpha = jcfg.alpha;
    for &p in &cfg.moments.ps {
        let slope = increment_moment_slope(&moments, p)?;
        let target = p / alpha.max(1.0);
        checks.push(
            Check::at_most(
                &format!("moment-slope-p{p}"),
                Some(5),
                (slope - target).abs(),
                0.1,
            )
            .with_detail(format!("slope {slope:.4}, target {target:.4}")),
        );
    }
    for &p in &cfg.moments.capped {
        let slope = capped_moment_slope(&moments, p)?;
        checks.push(
            Check::at_most(
                &format!("capped-moment-slope-p{p}"),
                Some(5),
                (slope - p).abs(),
                0.1,
            )
            .with_detail(format!("slope {slope:.4}, target {p}")),
        );
    }
    Ok(checks)
}

fn predictor(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<Check>> {
    let jcfg = jump_config(cfg)?;
    let m = model(cfg, &jcfg)?;
    let alpha = jcfg.alpha;
    let theta = cfg.predictor.theta.unwrap_or(match cfg.sim.scheme {
        Scheme::Zvonkin => {
            let vartheta = cfg.kernel.as_ref().map(|k| k.theta).unwrap_or(1.0);
            [1.0, alpha + cfg.drift.beta - 1.0, vartheta]
        }
        _ => [1.0, 1.0, 1.0],
    });
    let t0 = theta0(alpha, theta[0], theta[1], theta[2]);
    let eps: Vec<f64> = (cfg.predictor.k_min..=cfg.predictor.k_max)
        .map(|k| 2f64.powi(-k))
        .collect();
    let e = coupled_predictor_errors(
        m.coeffs.as_ref(),
        m.x0,
        &jcfg,
        cfg.sim.t_end,
        cfg.sim.dt,
        &eps,
        &cfg.predictor.ps,
        theta[0],
        cfg.sim.paths,
        cfg.seed,
    )?;
    let mut header = String::from("eps");
    for p in &e.ps {
        header.push_str(&format!(",error_p{p}"));
    }
    let rows = (0..e.eps.len()).map(|j| {
        let mut r = vec![e.eps[j]];
        r.extend(e.errors.iter().map(|row| row[j]));
        r
    });
    art.text("predictor_errors.csv", &csv(&header, rows))?;
    let mut checks = vec![Check::report("theta0", t0).with_detail(format!("theta = {theta:?}"))];
    for &p in &cfg.predictor.ps {
        let slope = predictor_error_slope(&e, p)?;
        checks.push(Check::at_least(
            &format!("predictor-slope-p{p}"),
            Some(6),
            slope,
            t0 * p - 0.15,
        ));
    }
    Ok(checks)
}

fn krylov(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<Check>> {
    let jcfg = jump_config(cfg)?;
    let m = model(cfg, &jcfg)?;
    let grid = cfg.grid.build()?;
    let spec = sim_spec(cfg)?;
    let mu = cfg.krylov.mu;
    let f = build_rough_field(&grid, mu, grid.j_max(), cfg.seed + 17)?;
    let windows: Vec<usize> = (0..cfg.krylov.windows)
        .map(|k| cfg.krylov.window_min << k)
        .collect();
    let moments = krylov_second_moments(
        m.coeffs.as_ref(),
        m.x0,
        &jcfg,
        &spec,
        &f,
        cfg.krylov.t0,
        &windows,
        cfg.sim.paths,
        cfg.seed,
    )?;
    let deltas: Vec<f64> = windows.iter().map(|&w| w as f64 * cfg.sim.dt).collect();
    let slope = krylov_exponent(&deltas, &moments);
    art.text(
        "krylov.csv",
        &csv(
            "delta,second_moment",
            deltas.iter().zip(&moments).map(|(d, m)| vec![*d, *m]),
        ),
    )?;
    let bound = 2.0 * (1.0 + mu / jcfg.alpha);
    Ok(vec![Check::at_least("krylov-slope", Some(7), slope, 1.1)
        .with_detail(format!("upper exponent {bound:.3}"))])
}

fn density(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<Check>> {
    let jcfg = jump_config(cfg)?;
    let alpha = jcfg.alpha;
    let grid = cfg.grid.build()?;
    let d = grid.dim();
    let mut checks = Vec::new();

    let oracle_grid = TorusGrid::new(d, if d == 1 { 4096 } else { 256 }, 2.0 * PI)?;
    let times = dyadic_times(alpha, d, 3, 4);
    let mut scaling_rows = Vec::new();
    for (s, q) in [(0.0, f64::INFINITY), (0.5, f64::INFINITY), (0.5, 1.0)] {
        let ts = density_time_scaling(alpha, s, q, &times, &oracle_grid)?;
        for (t, n) in ts.times.iter().zip(&ts.norms) {
            scaling_rows.push(vec![s, q, *t, *n]);
        }
        checks.push(
            Check::at_most(
                &format!("oracle-time-exponent-s{s}-q{q}"),
                Some(8),
                (ts.exponent - ts.predicted).abs(),
                0.1,
            )
            .with_detail(format!(
                "exponent {:.4}, predicted {:.4}",
                ts.exponent, ts.predicted
            )),
        );
    }
    art.text("oracle_scaling.csv", &csv("s,q,t,norm", scaling_rows))?;
    if !cfg.density.empirical {
        return Ok(checks);
    }

    let m = model(cfg, &jcfg)?;
    let spec = sim_spec(cfg)?;
    let mut samples = simulate_marginals(
        cfg.sim.paths,
        m.x0,
        m.coeffs.as_ref(),
        &jcfg,
        &spec,
        cfg.seed,
    );
    if let Some(map) = &m.map {
        for s in samples.iter_mut() {
            *s = map.phi_inverse(&s[..d]);
        }
    }
    let h = cfg
        .density
        .bandwidth
        .unwrap_or_else(|| plugin_bandwidth(&samples, d));
    let (gamma, q) = (cfg.density.gamma, cfg.density.q);
    let region = admissible_gamma_q(
        alpha,
        cfg.drift.beta,
        cfg.kernel.as_ref().map(|k| k.theta).unwrap_or(1.0),
        d,
    )?;
    let sharp = region.gamma_max + 0.25;
    let fine = TorusGrid::new(d, 2 * grid.n(), grid.length())?;
    let (mut sups, mut high, mut sharp_sups, mut rows) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for g in [grid, fine] {
        for hh in [h, 0.5 * h] {
            let est = empirical_density(&samples, &g, Some(hh))?;
            if g == grid && hh == h {
                art.gfn("density.gfn", &est.density)?;
            }
            let prof = besov_profile(&est.density, gamma, q)?;
            let top = prof
                .entries
                .iter()
                .filter(|e| e.j >= 0)
                .map(|e| e.weighted)
                .fold(0.0, f64::max);
            sups.push(prof.norm(f64::INFINITY));
            high.push(top);
            let sp = besov_profile(&est.density, sharp, q)?.norm(f64::INFINITY);
            sharp_sups.push(sp);
            for e in &prof.entries {
                rows.push(vec![g.n() as f64, hh, e.j as f64, e.weighted]);
            }
        }
    }
    art.text("profile.csv", &csv("n,bandwidth,j,weighted", rows))?;
    checks.push(
        Check::at_most("profile-sup-spread", Some(9), spread(&sups), 1.5).with_detail(format!(
            "gamma {gamma}, q {q}, h {h:.4}, j>=0 spread {:.4}",
            spread(&high)
        )),
    );
    checks.push(
        Check::report("sharpness-spread", spread(&sharp_sups)).with_detail(format!(
            "gamma {sharp:.3} above gamma_max {:.3}",
            region.gamma_max
        )),
    );
    Ok(checks)
}

fn fpe(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<Check>> {
    let grid = cfg.grid.build()?;
    let k = kernel(cfg)?;
    let b = drift(cfg, &grid)?;
    let alpha = k.alpha();
    let spec = match cfg.fpe.symbol {
        FpeSymbol::Band => SymbolSpec::band(alpha, cfg.noise.eps_cut, cfg.noise.r_cut),
        FpeSymbol::Full => SymbolSpec::full(alpha),
    };
    let problem = FpeProblem::new(&k, &b, &grid, spec)?;
    let scheme = FpeScheme {
        dt: cfg.fpe.dt,
        splitting: cfg.fpe.splitting,
    };
    let t_end = cfg.sim.t_end;
    let x0 = &cfg.sim.x0[..grid.dim()];
    let mut finals = Vec::new();
    let mut drift_max = 0.0f64;
    let mut amplification = 0.0f64;
    for i in 0..=cfg.fpe.halvings {
        let width = cfg.fpe.width / 2f64.powi(i as i32);
        let rho0 = initial_bump(&grid, x0, width)?;
        let tr = evolve(&problem, &rho0, t_end, scheme, &[t_end])?;
        drift_max = drift_max.max(tr.max_mass_drift);
        amplification = amplification.max(tr.amplification);
        if i == cfg.fpe.halvings {
            art.text("fpe_log.csv", &tr.log_csv())?;
        }
        finals.push(
            tr.snapshots
                .last()
                .map(|s| s.clipped.clone())
                .unwrap_or(rho0),
        );
    }
    let rho = finals.last().unwrap().clone();
    art.gfn("density.gfn", &rho)?;
    let gaps = finals
        .windows(2)
        .map(|w| l1_distance(&w[0], &w[1]))
        .collect::<Result<Vec<f64>>>()?;
    let widths: Vec<Vec<f64>> = gaps
        .iter()
        .enumerate()
        .map(|(i, g)| vec![cfg.fpe.width / 2f64.powi(i as i32 + 1), *g])
        .collect();
    art.text("width_convergence.csv", &csv("width,l1_gap", widths))?;
    let decreasing = gaps.len() >= 2 && gaps.windows(2).all(|w| w[1] < w[0]);
    let mut checks = vec![
        Check::at_most("mass-drift-per-step", Some(10), drift_max, 1e-10),
        Check::new(
            "width-gap-decrease",
            Some(10),
            Status::of(decreasing),
            gaps.last().copied().unwrap_or(f64::NAN),
            None,
        )
        .with_detail(format!(
            "gaps {}",
            gaps.iter()
                .map(|g| format!("{g:.3e}"))
                .collect::<Vec<_>>()
                .join(" ")
        )),
        Check::report("amplification", amplification),
    ];
    if cfg.fpe.paths > 0 {
        let jcfg = jump_config(cfg)?;
        let coeffs = DirectCoefficients::new(&k, &b, &jcfg)?;
        let sim = sim_spec(cfg)?;
        let samples = simulate_marginals(cfg.fpe.paths, cfg.sim.x0, &coeffs, &jcfg, &sim, cfg.seed);
        let est = empirical_density(&samples, &grid, cfg.density.bandwidth)?;
        let l1 = l1_distance(&rho, &est.density)?;
        let rows = (0..grid.len())
            .map(|i| vec![grid.point(i)[0], rho.values()[i], est.density.values()[i]]);
        art.text("comparison.csv", &csv("x,fpe,monte_carlo", rows))?;
        checks.push(
            Check::at_most("fpe-vs-monte-carlo-l1", Some(10), l1, 0.05).with_detail(format!(
                "{} paths, bandwidth {:.4}",
                cfg.fpe.paths, est.bandwidth
            )),
        );
    }
    Ok(checks)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentEntry {
    pub dir: String,
    pub summary: Summary,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionEntry {
    pub criterion: u32,
    pub status: Status,
    pub checks: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportIndex {
    pub status: Status,
    pub experiments: Vec<ExperimentEntry>,
    pub criteria: Vec<CriterionEntry>,
}

/// Collects directories below `dir` holding a `summary.json`, up to `depth`
/// levels down.
fn summary_dirs(dir: &Path, depth: usize, found: &mut Vec<PathBuf>) -> Result<()> {
    let entries = match std::fs::read_dir(dir) {
        Ok(rd) => rd,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(()),
        Err(e) => return Err(e.into()),
    };
    for e in entries {
        let p = e?.path();
        if !p.is_dir() {
            continue;
        }
        if p.join("summary.json").is_file() {
            found.push(p);
        } else if depth > 1 {
            summary_dirs(&p, depth - 1, found)?;
        }
    }
    Ok(())
}

/// Merges every `summary.json` found in `dir` and its subdirectories (two
/// levels) into `index.json` and `checks.csv` and copies the CSV artifacts
/// into `plots/`. An experiment is named by its relative path with `/`
/// replaced by `-`.
pub fn report(dir: &Path) -> Result<Outcome> {
    let mut subdirs = Vec::new();
    summary_dirs(dir, 2, &mut subdirs)?;
    subdirs.sort();
    let mut experiments = Vec::new();
    let mut merged = String::from("experiment,check,criterion,status,value,threshold\n");
    for sub in &subdirs {
        let rel = sub.strip_prefix(dir).unwrap_or(sub);
        let name = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("-");
        let summary: Summary = serde_json::from_slice(&std::fs::read(sub.join("summary.json"))?)?;
        for c in &summary.checks {
            let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
            merged.push_str(&format!(
                "{name},{},{},{},{},{}\n",
                c.name,
                c.criterion.map(|v| v.to_string()).unwrap_or_default(),
                c.status.label(),
                opt(c.value),
                opt(c.threshold)
            ));
        }
        for a in summary.artifacts.iter().filter(|a| a.ends_with(".csv")) {
            let body = std::fs::read(sub.join(a))?;
            write_atomic(&dir.join("plots").join(format!("{name}-{a}")), &body)?;
        }
        experiments.push(ExperimentEntry { dir: name, summary });
    }
    let mut criteria: Vec<CriterionEntry> = Vec::new();
    for e in &experiments {
        for c in &e.summary.checks {
            let Some(n) = c.criterion else { continue };
            let label = format!("{}/{}", e.dir, c.name);
            match criteria.iter_mut().find(|x| x.criterion == n) {
                Some(x) => {
                    x.status = Status::combine([x.status, c.status]);
                    x.checks.push(label);
                }
                None => criteria.push(CriterionEntry {
                    criterion: n,
                    status: c.status,
                    checks: vec![label],
                }),
            }
        }
    }
    criteria.sort_by_key(|c| c.criterion);
    let status = Status::combine(experiments.iter().map(|e| e.summary.status));
    let index = ReportIndex {
        status,
        experiments,
        criteria,
    };
    std::fs::create_dir_all(dir)?;
    write_json(&dir.join("index.json"), &index)?;
    write_atomic(&dir.join("checks.csv"), merged.as_bytes())?;
    let checks: Vec<Check> = index
        .criteria
        .iter()
        .map(|c| {
            Check::new(
                &format!("criterion-{}", c.criterion),
                Some(c.criterion),
                c.status,
                f64::NAN,
                None,
            )
            .with_detail(c.checks.join(" "))
        })
        .collect();
    let summary = Summary {
        kind: ExperimentKind::Report.name().to_string(),
        seed: 0,
        status,
        checks: checks.clone(),
        artifacts: vec!["index.json".into(), "checks.csv".into()],
    };
    let checks = if checks.is_empty() {
        vec![Check::new("index", None, Status::ReportOnly, 0.0, None)
            .with_detail("no experiments found")]
    } else {
        checks
    };
    Ok(Outcome {
        summary,
        checks,
        dir: dir.to_path_buf(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str, kind: ExperimentKind, out: &Path) -> ExperimentConfig {
        let mut c = ExperimentConfig::parse(text, Some(kind)).unwrap();
        c.out = out.to_path_buf();
        c
    }

    #[test]
    fn empty_directory_gives_empty_index() {
        let dir = tempfile::tempdir().unwrap();
        let o = report(dir.path()).unwrap();
        assert_eq!(o.summary.status, Status::ReportOnly);
        let idx: serde_json::Value =
            serde_json::from_slice(&std::fs::read(dir.path().join("index.json")).unwrap()).unwrap();
        assert_eq!(idx["experiments"].as_array().unwrap().len(), 0);
        assert_eq!(idx["status"], "REPORT-ONLY");
    }

    #[test]
    fn lp_check_passes_and_report_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config("[grid]\nn = 256\n", ExperimentKind::LpCheck, dir.path());
        let o = run(&cfg).unwrap();
        assert_eq!(o.status(), Status::Pass, "{:?}", o.lines());
        report(dir.path()).unwrap();
        let first = std::fs::read(dir.path().join("index.json")).unwrap();
        let csv1 = std::fs::read(dir.path().join("checks.csv")).unwrap();
        report(dir.path()).unwrap();
        assert_eq!(first, std::fs::read(dir.path().join("index.json")).unwrap());
        assert_eq!(csv1, std::fs::read(dir.path().join("checks.csv")).unwrap());
        assert!(dir.path().join("plots/lp-check-profile.csv").is_file());
    }

    #[test]
    fn simulate_rejects_inadmissible_drift() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(
            "[kernel]\nname = constant\nalpha = 1.2\n[drift]\nkind = rough\nbeta = -0.5\n",
            ExperimentKind::Simulate,
            dir.path(),
        );
        assert!(matches!(run(&cfg), Err(Error::Admissibility { .. })));
    }

    #[test]
    fn small_simulation_is_thread_count_independent() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let text = "[kernel]\nname = constant\nalpha = 1.5\n[drift]\nkind = sine\nscale = 0.5\n[sim]\npaths = 64\nt_end = 0.25\ndt = 0.0078125\n[moments]\nlags = 4\n";
        run_with_threads(&config(text, ExperimentKind::Simulate, a.path()), Some(1)).unwrap();
        run_with_threads(&config(text, ExperimentKind::Simulate, b.path()), Some(3)).unwrap();
        for f in ["paths.ens", "paths.json", "moments.csv", "summary.json"] {
            let x = std::fs::read(a.path().join("simulate").join(f)).unwrap();
            let y = std::fs::read(b.path().join("simulate").join(f)).unwrap();
            assert_eq!(x, y, "{f}");
        }
    }
}
