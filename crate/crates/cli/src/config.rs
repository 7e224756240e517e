//! Experiment configuration: a human-readable `key = value` file with a
//! `schema_version` key. Unknown keys are errors (typos must not pass
//! silently); `#` starts a comment.
//!
//! Example:
//!
//! ```text
//! schema_version = 1
//! experiment = free-two-time
//! dim = 1
//! side = 20.0
//! rho = 1.0
//! kernel_family = gaussian
//! kernel_sigma = 1.0
//! eps = 1,0.5,0.25,0.125
//! t_final = 1.0
//! snap_times = 0.0,1.0
//! ensemble = 10000
//! seed = 42
//! f_window = 0.0,2.0
//! g_window = 0.0,2.0
//! ```

use contiflow_core::potential::{JumpKernel, PairPotential};
use contiflow_core::stream::seed_stream;
use contiflow_core::torus::Torus;
use std::collections::BTreeMap;
use std::fmt;

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    FreeTwoTime,
    Theorem1Poisson,
    Theorem3Generator,
    GibbsValidate,
    GlauberStationarity,
}

impl ExperimentKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "free-two-time" => Ok(ExperimentKind::FreeTwoTime),
            "theorem1-poisson" => Ok(ExperimentKind::Theorem1Poisson),
            "theorem3-generator" => Ok(ExperimentKind::Theorem3Generator),
            "gibbs-validate" => Ok(ExperimentKind::GibbsValidate),
            "glauber-stationarity" => Ok(ExperimentKind::GlauberStationarity),
            other => Err(ConfigError(format!("unknown experiment kind '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::FreeTwoTime => "free-two-time",
            ExperimentKind::Theorem1Poisson => "theorem1-poisson",
            ExperimentKind::Theorem3Generator => "theorem3-generator",
            ExperimentKind::GibbsValidate => "gibbs-validate",
            ExperimentKind::GlauberStationarity => "glauber-stationarity",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub dim: usize,
    pub side: f64,
    pub rho: f64,
    pub kernel: JumpKernel,
    pub potential: PairPotential,
    pub activity: f64,
    pub u: f64,
    pub v: f64,
    pub eps: Vec<f64>,
    pub t_final: f64,
    pub snap_times: Vec<f64>,
    pub ensemble: usize,
    pub seed: u64,
    pub f_window: (f64, f64),
    pub g_window: (f64, f64),
    pub f_height: f64,
    pub mc_draws: usize,
    /// canonical text the params hash is computed from
    canonical: String,
}

impl ExperimentConfig {
    pub fn torus(&self) -> Torus {
        Torus::new(self.dim, self.side).expect("validated at load")
    }

    pub fn params_hash(&self) -> u64 {
        crate::csvout::fnv1a64(self.canonical.as_bytes())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected key = value", lineno + 1)))?;
            let key = k.trim().to_string();
            if map.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(ConfigError(format!("duplicate key '{key}'")));
            }
        }
        Self::from_map(map)
    }

    fn from_map(mut map: BTreeMap<String, String>) -> Result<Self> {
        let mut take = |k: &str| map.remove(k);
        let req = |v: Option<String>, k: &str| {
            v.ok_or_else(|| ConfigError(format!("missing required key '{k}'")))
        };
        let parse_f64 = |s: &str, k: &str| {
            s.parse::<f64>().map_err(|_| ConfigError(format!("key '{k}': bad number '{s}'")))
        };

        let schema = req(take("schema_version"), "schema_version")?;
        if schema.parse::<u64>().ok() != Some(SCHEMA_VERSION) {
            return Err(ConfigError(format!(
                "schema_version {schema} unsupported (expected {SCHEMA_VERSION})"
            )));
        }
        let experiment = ExperimentKind::parse(&req(take("experiment"), "experiment")?)?;
        let dim = req(take("dim"), "dim")?
            .parse::<usize>()
            .map_err(|_| ConfigError("dim must be a positive integer".into()))?;
        let side = parse_f64(&req(take("side"), "side")?, "side")?;
        let rho = take("rho").map(|s| parse_f64(&s, "rho")).transpose()?.unwrap_or(1.0);
        let kernel = match take("kernel_family").as_deref() {
            None | Some("gaussian") => JumpKernel::Gaussian {
                sigma: take("kernel_sigma")
                    .map(|s| parse_f64(&s, "kernel_sigma"))
                    .transpose()?
                    .unwrap_or(1.0),
            },
            Some("uniform_ball") => JumpKernel::UniformBall {
                radius: take("kernel_radius")
                    .map(|s| parse_f64(&s, "kernel_radius"))
                    .transpose()?
                    .unwrap_or(1.0),
            },
            Some(other) => return Err(ConfigError(format!("unknown kernel family '{other}'"))),
        };
        let potential = match take("potential_family").as_deref() {
            None | Some("zero") => PairPotential::zero(),
            Some("square_well") => {
                let depth = parse_f64(&req(take("potential_depth"), "potential_depth")?, "potential_depth")?;
                let range = parse_f64(&req(take("potential_range"), "potential_range")?, "potential_range")?;
                PairPotential::square_well(depth, range).map_err(|e| ConfigError(e.to_string()))?
            }
            Some("gaussian_bump") => {
                let amp = parse_f64(&req(take("potential_amplitude"), "potential_amplitude")?, "potential_amplitude")?;
                let sigma = parse_f64(&req(take("potential_sigma"), "potential_sigma")?, "potential_sigma")?;
                let range = parse_f64(&req(take("potential_range"), "potential_range")?, "potential_range")?;
                PairPotential::gaussian_bump(amp, sigma, range)
                    .map_err(|e| ConfigError(e.to_string()))?
            }
            Some("hard_core_square_well") => {
                let core = parse_f64(&req(take("potential_core"), "potential_core")?, "potential_core")?;
                let depth = parse_f64(&req(take("potential_depth"), "potential_depth")?, "potential_depth")?;
                let range = parse_f64(&req(take("potential_range"), "potential_range")?, "potential_range")?;
                PairPotential::hard_core_square_well(core, depth, range)
                    .map_err(|e| ConfigError(e.to_string()))?
            }
            Some(other) => return Err(ConfigError(format!("unknown potential family '{other}'"))),
        };
        let potential = match take("potential_stability_b") {
            Some(s) => potential
                .with_declared_stability(parse_f64(&s, "potential_stability_b")?)
                .map_err(|e| ConfigError(e.to_string()))?,
            None => potential,
        };
        let activity =
            take("activity").map(|s| parse_f64(&s, "activity")).transpose()?.unwrap_or(0.2);
        let u = take("u").map(|s| parse_f64(&s, "u")).transpose()?.unwrap_or(0.0);
        let v = take("v").map(|s| parse_f64(&s, "v")).transpose()?.unwrap_or(0.0);
        let parse_list = |s: String, k: &str| -> Result<Vec<f64>> {
            s.split(',')
                .map(|p| parse_f64(p.trim(), k))
                .collect()
        };
        let eps = match take("eps") {
            Some(s) => parse_list(s, "eps")?,
            None => vec![1.0, 0.5, 0.25, 0.125],
        };
        let t_final =
            take("t_final").map(|s| parse_f64(&s, "t_final")).transpose()?.unwrap_or(1.0);
        let snap_times = match take("snap_times") {
            Some(s) => parse_list(s, "snap_times")?,
            None => vec![0.0, t_final],
        };
        let ensemble = take("ensemble")
            .map(|s| s.parse::<usize>().map_err(|_| ConfigError("bad ensemble".into())))
            .transpose()?
            .unwrap_or(1000);
        let seed = take("seed")
            .map(|s| s.parse::<u64>().map_err(|_| ConfigError("bad seed".into())))
            .transpose()?
            .unwrap_or(42);
        let window = |key: &str, taken: Option<String>| -> Result<(f64, f64)> {
            match taken {
                None => Ok((0.0, 2.0)),
                Some(s) => {
                    let parts: Vec<f64> = parse_list(s, key)?;
                    if parts.len() != 2 || parts[0] >= parts[1] {
                        return Err(ConfigError(format!("key '{key}': expected lo,hi")));
                    }
                    Ok((parts[0], parts[1]))
                }
            }
        };
        let f_window = window("f_window", take("f_window"))?;
        let g_window = window("g_window", take("g_window"))?;
        let f_height =
            take("f_height").map(|s| parse_f64(&s, "f_height")).transpose()?.unwrap_or(-1.0);
        let mc_draws = take("mc_draws")
            .map(|s| s.parse::<usize>().map_err(|_| ConfigError("bad mc_draws".into())))
            .transpose()?
            .unwrap_or(512);
        if let Some(stray) = map.keys().next() {
            return Err(ConfigError(format!("unknown key '{stray}'")));
        }

        let canonical = format!(
            "v{SCHEMA_VERSION};{};d{dim};L{side};rho{rho};{kernel:?};{potential:?};z{activity};u{u};v{v};eps{eps:?};T{t_final};snaps{snap_times:?};n{ensemble};seed{seed};f{f_window:?}{f_height};g{g_window:?};mc{mc_draws}",
            experiment.name()
        );
        let cfg = ExperimentConfig {
            experiment,
            dim,
            side,
            rho,
            kernel,
            potential,
            activity,
            u,
            v,
            eps,
            t_final,
            snap_times,
            ensemble,
            seed,
            f_window,
            g_window,
            f_height,
            mc_draws,
            canonical,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load-time invariant checks; any failure maps to exit code 2.
    pub fn validate(&self) -> Result<()> {
        let torus = Torus::new(self.dim, self.side).map_err(|e| ConfigError(e.to_string()))?;
        if self.potential.range() >= 0.5 * torus.side() {
            return Err(ConfigError(format!(
                "interaction range {} must be < L/2 = {}",
                self.potential.range(),
                0.5 * torus.side()
            )));
        }
        self.kernel.validate().map_err(|e| ConfigError(e.to_string()))?;
        if self.eps.is_empty() || self.eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(ConfigError("eps list must be strictly decreasing".into()));
        }
        if self.eps.iter().any(|&e| !(e > 0.0)) {
            return Err(ConfigError("eps values must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.u) || !(0.0..=1.0).contains(&self.v) {
            return Err(ConfigError("u, v must lie in [0,1]".into()));
        }
        if self.snap_times.windows(2).any(|w| w[0] > w[1]) {
            return Err(ConfigError("snap_times must be sorted".into()));
        }
        if self.snap_times.iter().any(|&s| s < 0.0 || s > self.t_final) {
            return Err(ConfigError("snap_times must lie in [0, t_final]".into()));
        }
        // substance checks: stability, low activity, (u,v) integrability
        let mut rng = seed_stream(self.seed, u64::MAX);
        let stab = self.potential.check_stability(
            self.potential.stability_b(),
            200,
            self.side,
            self.dim,
            &mut rng,
        );
        if !stab.holds {
            return Err(ConfigError(format!(
                "potential violates its declared stability constant (margin {})",
                stab.worst_margin
            )));
        }
        if !self.potential.is_zero() {
            let low = self
                .potential
                .check_low_activity(self.activity, self.dim)
                .map_err(|e| ConfigError(e.to_string()))?;
            if !low.holds {
                return Err(ConfigError(format!(
                    "low-activity condition fails: {} >= {}",
                    low.lhs, low.threshold
                )));
            }
            let uv = self
                .potential
                .check_uv_integrability(self.u, self.v, self.dim)
                .map_err(|e| ConfigError(e.to_string()))?;
            if !uv.holds {
                return Err(ConfigError("the (u,v) integrability condition fails".into()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "\
schema_version = 1
experiment = free-two-time
dim = 1
side = 20.0
rho = 1.0
kernel_family = gaussian
kernel_sigma = 1.0
eps = 1,0.5,0.25,0.125
t_final = 1.0
snap_times = 0.0,1.0
ensemble = 100
seed = 42
";

    #[test]
    fn parses_and_hashes_deterministically() {
        let a = ExperimentConfig::parse(GOOD).unwrap();
        let b = ExperimentConfig::parse(GOOD).unwrap();
        assert_eq!(a.params_hash(), b.params_hash());
        assert_eq!(a.eps, vec![1.0, 0.5, 0.25, 0.125]);
    }

    #[test]
    fn rejects_wide_potential() {
        let text = format!(
            "{GOOD}potential_family = square_well\npotential_depth = 1.0\npotential_range = 10.0\n"
        );
        assert!(ExperimentConfig::parse(&text).is_err());
    }

    #[test]
    fn rejects_nondecreasing_eps() {
        let text = GOOD.replace("eps = 1,0.5,0.25,0.125", "eps = 1,1,0.5");
        assert!(ExperimentConfig::parse(&text).is_err());
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = format!("{GOOD}tpyo = 3\n");
        let err = ExperimentConfig::parse(&text).unwrap_err();
        assert!(err.0.contains("tpyo"));
    }

    #[test]
    fn rejects_high_activity() {
        let text = format!(
            "{GOOD}potential_family = square_well\npotential_depth = 1.0\npotential_range = 0.5\nactivity = 2.0\n"
        );
        let err = ExperimentConfig::parse(&text).unwrap_err();
        assert!(err.0.contains("low-activity"));
    }
}
