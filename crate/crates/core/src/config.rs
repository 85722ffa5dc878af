//! Flat `key = value` experiment configuration with `[section]` headers.
//!
//! Values are numbers, words, or comma separated lists. Keys outside a
//! section belong to `[experiment]`. Unknown keys are rejected with their
//! line number.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::density::admissible_gamma_q;
use crate::error::{admissibility, Error, Result};
use crate::fokker_planck::Splitting;
use crate::grid::TorusGrid;
use crate::kernels::{DirectionField, Kernel, KernelSpec, SigmaField};
use crate::resolvent::check_admissible;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    LpCheck,
    OperatorCheck,
    Resolvent,
    Simulate,
    Predictor,
    Krylov,
    Density,
    Fpe,
    Report,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        Self::LpCheck,
        Self::OperatorCheck,
        Self::Resolvent,
        Self::Simulate,
        Self::Predictor,
        Self::Krylov,
        Self::Density,
        Self::Fpe,
        Self::Report,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::LpCheck => "lp-check",
            Self::OperatorCheck => "operator-check",
            Self::Resolvent => "resolvent",
            Self::Simulate => "simulate",
            Self::Predictor => "predictor",
            Self::Krylov => "krylov",
            Self::Density => "density",
            Self::Fpe => "fpe",
            Self::Report => "report",
        }
    }

    fn needs_kernel(&self) -> bool {
        !matches!(self, Self::LpCheck | Self::Report)
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment kind '{s}'")))
    }
}

/// `section.key -> (value, line)` with usage tracking.
#[derive(Debug, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, usize)>,
    used: RefCell<BTreeSet<String>>,
}

fn config_err(line: usize, key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line}: field '{key}': {msg}"))
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section = String::from("experiment");
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| {
                        Error::Config(format!("line {line_no}: unterminated section header"))
                    })?
                    .trim();
                if name.is_empty()
                    || !name
                        .chars()
                        .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
                {
                    return Err(Error::Config(format!(
                        "line {line_no}: bad section name '{name}'"
                    )));
                }
                section = name.to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {line_no}: expected 'key = value'")))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(Error::Config(format!("line {line_no}: empty key")));
            }
            if v.is_empty() {
                return Err(config_err(
                    line_no,
                    &format!("{section}.{k}"),
                    "empty value",
                ));
            }
            let key = format!("{section}.{k}");
            if let Some((_, first)) = entries.get(&key) {
                return Err(config_err(
                    line_no,
                    &key,
                    format!("duplicate of line {first}"),
                ));
            }
            entries.insert(key, (v.to_string(), line_no));
        }
        Ok(Self {
            entries,
            used: RefCell::new(BTreeSet::new()),
        })
    }

    fn raw(&self, key: &str) -> Option<&(String, usize)> {
        self.used.borrow_mut().insert(key.to_string());
        self.entries.get(key)
    }

    pub fn has(&self, key: &str) -> bool {
        self.raw(key).is_some()
    }

    fn parsed<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(default),
            Some((v, line)) => v
                .parse()
                .map_err(|e| config_err(*line, key, format!("'{v}': {e}"))),
        }
    }

    fn optional<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse()
                .map(Some)
                .map_err(|e| config_err(*line, key, format!("'{v}': {e}"))),
        }
    }

    fn list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some((v, line)) => v
                .split(',')
                .map(|s| {
                    let s = s.trim();
                    s.parse::<f64>()
                        .map_err(|e| config_err(*line, key, format!("'{s}': {e}")))
                })
                .collect(),
        }
    }

    fn word(&self, key: &str, default: &str, allowed: &[&str]) -> Result<String> {
        let Some((v, line)) = self.raw(key) else {
            return Ok(default.to_string());
        };
        if allowed.contains(&v.as_str()) {
            Ok(v.clone())
        } else {
            Err(config_err(
                *line,
                key,
                format!("'{v}' not one of {}", allowed.join(", ")),
            ))
        }
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map(|e| e.1).unwrap_or(0)
    }

    fn check_unused(&self) -> Result<()> {
        let used = self.used.borrow();
        match self.entries.iter().find(|(k, _)| !used.contains(*k)) {
            Some((k, (_, line))) => Err(config_err(*line, k, "unknown key")),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridConfig {
    pub dim: usize,
    pub n: usize,
    pub length: f64,
}

impl GridConfig {
    pub fn build(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.dim, self.n, self.length)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelConfig {
    pub name: String,
    pub alpha: f64,
    pub theta: f64,
    pub level: f64,
    pub aperture: f64,
    pub direction: f64,
    pub amplitude: f64,
    pub sigma_base: f64,
    pub sigma_amplitude: f64,
}

impl KernelConfig {
    pub fn build(&self, dim: usize, period: f64) -> Result<Kernel> {
        let mut spec = KernelSpec::new(dim, self.alpha);
        spec.level = self.level;
        spec.aperture = self.aperture;
        spec.direction = DirectionField::Constant(self.direction);
        spec.sigma = if dim == 1 {
            SigmaField::Scalar {
                base: self.sigma_base,
                amplitude: self.sigma_amplitude,
            }
        } else {
            SigmaField::Diagonal {
                base: [self.sigma_base; 2],
                amplitude: self.sigma_amplitude,
            }
        };
        spec.theta = self.theta;
        spec.amplitude = self.amplitude;
        spec.period = period;
        Kernel::from_name(&self.name, &spec)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftKind {
    Zero,
    Sine,
    Rough,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DriftConfig {
    pub kind: DriftKind,
    pub beta: f64,
    pub scale: f64,
    pub offset: f64,
    pub seed: u64,
    /// Spectral mollification level; `0` keeps the field as is.
    pub mollify: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoiseConfig {
    pub eps_cut: f64,
    pub r_cut: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Direct,
    Zvonkin,
    Analytic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SimConfig {
    pub paths: usize,
    pub t_end: f64,
    pub dt: f64,
    pub record_every: usize,
    pub x0: [f64; 2],
    pub scheme: Scheme,
    pub store: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentConfig {
    pub ps: Vec<f64>,
    pub capped: Vec<f64>,
    pub lags: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PredictorConfig {
    pub k_min: i32,
    pub k_max: i32,
    pub ps: Vec<f64>,
    pub theta: Option<[f64; 3]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KrylovConfig {
    pub mu: f64,
    pub t0: f64,
    pub window_min: usize,
    pub windows: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DensityConfig {
    pub gamma: f64,
    pub q: f64,
    pub bandwidth: Option<f64>,
    /// Run the Monte Carlo estimate; the oracle scaling always runs.
    pub empirical: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FpeSymbol {
    Band,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FpeConfig {
    pub dt: f64,
    pub splitting: Splitting,
    pub symbol: FpeSymbol,
    /// Initial bump half-width in cells.
    pub width: f64,
    pub halvings: usize,
    /// Monte Carlo paths for the cross check; `0` skips it.
    pub paths: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolventConfig {
    pub lambdas: Vec<f64>,
    pub forcings: usize,
    pub tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OperatorConfig {
    pub tests: usize,
    pub points: usize,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    #[serde(skip)]
    pub out: PathBuf,
    pub grid: GridConfig,
    pub kernel: Option<KernelConfig>,
    pub drift: DriftConfig,
    pub noise: NoiseConfig,
    pub sim: SimConfig,
    pub moments: MomentConfig,
    pub predictor: PredictorConfig,
    pub krylov: KrylovConfig,
    pub density: DensityConfig,
    pub fpe: FpeConfig,
    pub resolvent: ResolventConfig,
    pub operator: OperatorConfig,
}

impl ExperimentConfig {
    /// Parses `text`; `kind` overrides `[experiment] kind`.
    pub fn parse(text: &str, kind: Option<ExperimentKind>) -> Result<Self> {
        let raw = RawConfig::parse(text)?;
        let kind = match (kind, raw.raw("experiment.kind")) {
            (Some(k), _) => k,
            (None, Some((v, line))) => v
                .parse()
                .map_err(|e| config_err(*line, "experiment.kind", e))?,
            (None, None) => return Err(Error::Config("field 'experiment.kind' missing".into())),
        };
        let grid = GridConfig {
            dim: raw.parsed("grid.dim", 1)?,
            n: raw.parsed("grid.n", 256)?,
            length: raw.parsed("grid.length", 2.0 * PI)?,
        };
        let kernel = match raw.raw("kernel.name").cloned() {
            Some((name, _)) => Some(KernelConfig {
                name,
                alpha: raw.parsed("kernel.alpha", 1.5)?,
                theta: raw.parsed("kernel.theta", 0.9)?,
                level: raw.parsed("kernel.level", 1.0)?,
                aperture: raw.parsed("kernel.aperture", 0.5)?,
                direction: raw.parsed("kernel.direction", 0.0)?,
                amplitude: raw.parsed("kernel.amplitude", 0.5)?,
                sigma_base: raw.parsed("kernel.sigma_base", 1.0)?,
                sigma_amplitude: raw.parsed("kernel.sigma_amplitude", 0.25)?,
            }),
            None => {
                let stray = raw.entries.keys().find(|k| k.starts_with("kernel."));
                if kind.needs_kernel() || stray.is_some() {
                    let line = stray.map(|k| raw.line_of(k)).unwrap_or(0);
                    let at = if line > 0 {
                        format!("line {line}: ")
                    } else {
                        String::new()
                    };
                    return Err(Error::Config(format!("{at}field 'kernel.name' missing")));
                }
                None
            }
        };
        let drift_kind = match raw
            .word("drift.kind", "zero", &["zero", "sine", "rough"])?
            .as_str()
        {
            "sine" => DriftKind::Sine,
            "rough" => DriftKind::Rough,
            _ => DriftKind::Zero,
        };
        let drift = DriftConfig {
            kind: drift_kind,
            beta: raw.parsed("drift.beta", 0.0)?,
            scale: raw.parsed("drift.scale", 1.0)?,
            offset: raw.parsed("drift.offset", 0.0)?,
            seed: raw.parsed("drift.seed", 3)?,
            mollify: raw.parsed("drift.mollify", 0.0)?,
        };
        let noise = NoiseConfig {
            eps_cut: raw.parsed("noise.eps_cut", 0.05)?,
            r_cut: raw.parsed("noise.r_cut", 100.0)?,
        };
        let x0 = raw.list("sim.x0", &[0.0, 0.0])?;
        if x0.is_empty() || x0.len() > 2 {
            return Err(config_err(
                raw.line_of("sim.x0"),
                "sim.x0",
                "need 1 or 2 coordinates",
            ));
        }
        let scheme = match raw
            .word("sim.scheme", "direct", &["direct", "zvonkin", "analytic"])?
            .as_str()
        {
            "zvonkin" => Scheme::Zvonkin,
            "analytic" => Scheme::Analytic,
            _ => Scheme::Direct,
        };
        let sim = SimConfig {
            paths: raw.parsed("sim.paths", 1000)?,
            t_end: raw.parsed("sim.t_end", 1.0)?,
            dt: raw.parsed("sim.dt", 1.0 / 256.0)?,
            record_every: raw.parsed("sim.record_every", 1)?,
            x0: [x0[0], x0.get(1).copied().unwrap_or(0.0)],
            scheme,
            store: raw.parsed("sim.store", true)?,
        };
        let moments = MomentConfig {
            ps: raw.list("moments.ps", &[0.5, 1.0])?,
            capped: raw.list("moments.capped", &[])?,
            lags: raw.parsed("moments.lags", 8)?,
        };
        let theta = match (
            raw.optional::<f64>("predictor.theta1")?,
            raw.optional::<f64>("predictor.theta2")?,
            raw.optional::<f64>("predictor.theta3")?,
        ) {
            (None, None, None) => None,
            (Some(a), Some(b), Some(c)) => Some([a, b, c]),
            _ => {
                return Err(Error::Config(
                    "fields 'predictor.theta1..3' must be given together".into(),
                ))
            }
        };
        let predictor = PredictorConfig {
            k_min: raw.parsed("predictor.k_min", 3)?,
            k_max: raw.parsed("predictor.k_max", 8)?,
            ps: raw.list("predictor.ps", &[0.5, 1.0])?,
            theta,
        };
        let krylov = KrylovConfig {
            mu: raw.parsed("krylov.mu", -0.2)?,
            t0: raw.parsed("krylov.t0", 0.5)?,
            window_min: raw.parsed("krylov.window_min", 4)?,
            windows: raw.parsed("krylov.windows", 8)?,
        };
        let density = DensityConfig {
            gamma: raw.parsed("density.gamma", 0.3)?,
            q: raw.parsed("density.q", 1.0)?,
            bandwidth: raw.optional("density.bandwidth")?,
            empirical: raw.parsed("density.empirical", true)?,
        };
        let splitting = match raw
            .word("fpe.splitting", "strang", &["lie", "strang"])?
            .as_str()
        {
            "lie" => Splitting::Lie,
            _ => Splitting::Strang,
        };
        let symbol = match raw.word("fpe.symbol", "band", &["band", "full"])?.as_str() {
            "full" => FpeSymbol::Full,
            _ => FpeSymbol::Band,
        };
        let fpe = FpeConfig {
            dt: raw.parsed("fpe.dt", 1e-3)?,
            splitting,
            symbol,
            width: raw.parsed("fpe.width", 8.0)?,
            halvings: raw.parsed("fpe.halvings", 2)?,
            paths: raw.parsed("fpe.paths", 0)?,
        };
        let resolvent = ResolventConfig {
            lambdas: raw.list("resolvent.lambdas", &[2.0, 4.0, 8.0])?,
            forcings: raw.parsed("resolvent.forcings", 10)?,
            tol: raw.parsed("resolvent.tol", 1e-8)?,
        };
        let operator = OperatorConfig {
            tests: raw.parsed("operator.tests", 20)?,
            points: raw.parsed("operator.points", 8)?,
            trials: raw.parsed("operator.trials", 100)?,
        };
        let cfg = Self {
            kind,
            seed: raw.parsed("experiment.seed", 1)?,
            out: PathBuf::from(raw.parsed::<String>("experiment.out", "results".into())?),
            grid,
            kernel,
            drift,
            noise,
            sim,
            moments,
            predictor,
            krylov,
            density,
            fpe,
            resolvent,
            operator,
        };
        raw.check_unused()?;
        cfg.check_ranges()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, kind: Option<ExperimentKind>) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, kind)
    }

    /// Defaults for `kind` with no kernel; only `lp-check` and `report` run
    /// without further fields.
    pub fn defaults(kind: ExperimentKind) -> Result<Self> {
        Self::parse("", Some(kind))
    }

    pub fn alpha(&self) -> Option<f64> {
        self.kernel.as_ref().map(|k| k.alpha)
    }

    fn check_ranges(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "field '{name}' must be positive, got {v}"
                )))
            }
        };
        positive("sim.t_end", self.sim.t_end)?;
        positive("sim.dt", self.sim.dt)?;
        positive("fpe.dt", self.fpe.dt)?;
        positive("fpe.width", self.fpe.width)?;
        positive("resolvent.tol", self.resolvent.tol)?;
        if self.sim.paths == 0 {
            return Err(Error::Config("field 'sim.paths' must be at least 1".into()));
        }
        if self.sim.record_every == 0 {
            return Err(Error::Config(
                "field 'sim.record_every' must be at least 1".into(),
            ));
        }
        if self.predictor.k_min > self.predictor.k_max {
            return Err(Error::Config(
                "field 'predictor.k_min' exceeds 'predictor.k_max'".into(),
            ));
        }
        if self.moments.lags < 2 || self.krylov.windows < 2 {
            return Err(Error::Config(
                "slope fits need at least 2 lags or windows".into(),
            ));
        }
        Ok(())
    }

    /// Checks the hypotheses that the chosen experiment relies on.
    pub fn check_admissibility(&self) -> Result<()> {
        let Some(k) = &self.kernel else {
            return Ok(());
        };
        let (alpha, beta, theta) = (k.alpha, self.drift.beta, k.theta);
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(admissibility("α ∈ (0, 2)", format!("α = {alpha}")));
        }
        let drift_matters = matches!(
            self.kind,
            ExperimentKind::Resolvent
                | ExperimentKind::Simulate
                | ExperimentKind::Predictor
                | ExperimentKind::Krylov
                | ExperimentKind::Density
                | ExperimentKind::Fpe
        );
        let rough = self.drift.kind == DriftKind::Rough;
        if (drift_matters && rough) || self.kind == ExperimentKind::Resolvent {
            check_admissible(alpha, beta, theta)?;
        }
        if self.sim.scheme == Scheme::Zvonkin {
            if alpha <= 1.0 {
                return Err(admissibility(
                    "α ∈ (1, 2) for the Zvonkin transform",
                    format!("α = {alpha}"),
                ));
            }
            check_admissible(alpha, beta, theta)?;
        }
        match self.kind {
            ExperimentKind::Density if self.density.empirical => {
                let region = admissible_gamma_q(alpha, beta, theta, self.grid.dim)?;
                if !region.contains(self.density.gamma, self.density.q) {
                    return Err(admissibility(
                        "γ < γ_max and q < d/(d + γ − γ_max) for the density",
                        format!(
                            "γ = {}, q = {}, γ_max = {}",
                            self.density.gamma, self.density.q, region.gamma_max
                        ),
                    ));
                }
            }
            ExperimentKind::Krylov if self.krylov.mu <= -0.5 * alpha || self.krylov.mu > 0.0 => {
                return Err(admissibility(
                    "μ ∈ (−α/2, 0] for the Krylov estimate",
                    format!("μ = {}, α = {alpha}", self.krylov.mu),
                ));
            }
            _ => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_lists() {
        let cfg = ExperimentConfig::parse(
            "kind = simulate\nseed = 9\n[kernel]\nname = constant # comment\nalpha = 1.2\n[moments]\nps = 0.5, 1\n",
            None,
        )
        .unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Simulate);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.moments.ps, vec![0.5, 1.0]);
        assert_eq!(cfg.kernel.unwrap().alpha, 1.2);
    }

    #[test]
    fn missing_kernel_name() {
        let e = ExperimentConfig::parse("[kernel]\nalpha = 1.5\n", Some(ExperimentKind::Simulate))
            .unwrap_err();
        assert!(
            matches!(e, Error::Config(ref m) if m.contains("kernel.name") && m.contains("line 2")),
            "{e}"
        );
        let e = ExperimentConfig::parse("", Some(ExperimentKind::Fpe)).unwrap_err();
        assert!(matches!(e, Error::Config(ref m) if m.contains("kernel.name")));
    }

    #[test]
    fn diagnostics_carry_line_and_field() {
        let e = ExperimentConfig::parse("kind = lp-check\n[grid]\nn = many\n", None).unwrap_err();
        assert!(
            matches!(e, Error::Config(ref m) if m.contains("line 3") && m.contains("grid.n")),
            "{e}"
        );
        let e = ExperimentConfig::parse("kind = lp-check\n[grid]\nsize = 4\n", None).unwrap_err();
        assert!(matches!(e, Error::Config(ref m) if m.contains("unknown key")));
        let e = ExperimentConfig::parse("kind = lp-check\nno equals sign\n", None).unwrap_err();
        assert!(matches!(e, Error::Config(ref m) if m.contains("line 2")));
        let e = ExperimentConfig::parse("kind = lp-check\nseed = 1\nseed = 2\n", None).unwrap_err();
        assert!(matches!(e, Error::Config(ref m) if m.contains("duplicate")));
    }

    #[test]
    fn rough_drift_below_the_hoelder_range_is_rejected() {
        let cfg = ExperimentConfig::parse(
            "[kernel]\nname = constant\nalpha = 1.2\n[drift]\nkind = rough\nbeta = -0.5\n",
            Some(ExperimentKind::Simulate),
        )
        .unwrap();
        let e = cfg.check_admissibility().unwrap_err();
        assert!(
            matches!(e, Error::Admissibility { ref hypothesis, .. } if hypothesis.contains("(α−1)/2"))
        );
    }

    #[test]
    fn density_outside_region_is_rejected() {
        let cfg = ExperimentConfig::parse(
            "[kernel]\nname = rough-x\nalpha = 1.5\n[density]\ngamma = 0.7\n",
            Some(ExperimentKind::Density),
        )
        .unwrap();
        assert!(matches!(
            cfg.check_admissibility(),
            Err(Error::Admissibility { .. })
        ));
    }

    #[test]
    fn lp_check_needs_no_kernel() {
        let cfg = ExperimentConfig::defaults(ExperimentKind::LpCheck).unwrap();
        assert!(cfg.kernel.is_none());
        assert!(cfg.check_admissibility().is_ok());
    }
}
