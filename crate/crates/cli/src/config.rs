//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys are an
//! error so that typos never silently fall back to defaults.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use planadapt::{
    load_maze, AdaptConfig, DistanceEstimator, EstimatorKind, MazeWorld, PatternSearchState,
    Protocol, ReactionModel, RolloutOptions, Variant,
};

use crate::error::CliError;

/// Constants of one parameter's pattern search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSpec {
    pub init: f64,
    pub i: f64,
    pub d: f64,
    pub n: u32,
    pub rho: f64,
    pub gamma: f64,
    pub tth: f64,
    pub count: u32,
}

impl SearchSpec {
    fn from_state(s: &PatternSearchState) -> Self {
        Self {
            init: s.value,
            i: s.i,
            d: s.d,
            n: s.n,
            rho: s.rho,
            gamma: s.gamma,
            tth: s.tth,
            count: s.count_reset,
        }
    }

    pub fn state(&self, variant: Variant) -> PatternSearchState {
        PatternSearchState {
            value: self.init,
            i: self.i,
            d: self.d,
            k: 1.0,
            n: self.n,
            rho: self.rho,
            gamma: self.gamma,
            tth: self.tth,
            count_reset: self.count,
            c: 0,
            variant,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    W,
    E,
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::W => "w",
            SweepParam::E => "e",
        })
    }
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "w" => Ok(SweepParam::W),
            "e" => Ok(SweepParam::E),
            other => Err(format!("sweep parameter must be w or e, got {other:?}")),
        }
    }
}

/// One-parameter sweep with the other parameter held fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub swept: SweepParam,
    pub values: Vec<f64>,
    /// Value of the parameter that is not swept.
    pub fixed_value: f64,
    pub repetitions: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            swept: SweepParam::W,
            values: vec![50.0, 100.0, 200.0, 400.0, 800.0],
            fixed_value: 5.0,
            repetitions: 3,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.values.is_empty() {
            return Err(CliError::config("sweep.values must not be empty"));
        }
        if self.repetitions == 0 {
            return Err(CliError::config("sweep.repetitions must be >= 1"));
        }
        let bad_w = |v: f64| !(v.is_finite() && v >= 1.0);
        let bad_e = |v: f64| !(v.is_finite() && v > 0.0);
        let (swept_bad, fixed_bad): (&dyn Fn(f64) -> bool, &dyn Fn(f64) -> bool) = match self.swept
        {
            SweepParam::W => (&bad_w, &bad_e),
            SweepParam::E => (&bad_e, &bad_w),
        };
        if self.values.iter().any(|&v| swept_bad(v)) {
            return Err(CliError::config(format!("sweep.values out of range for {}", self.swept)));
        }
        if fixed_bad(self.fixed_value) {
            return Err(CliError::config("sweep.fixed out of range"));
        }
        Ok(())
    }

    /// `(w, e)` evaluated for the swept value `v`.
    pub fn point(&self, v: f64) -> (f64, f64) {
        match self.swept {
            SweepParam::W => (v, self.fixed_value),
            SweepParam::E => (self.fixed_value, v),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Map file; the shipped default maze when absent.
    pub map: Option<PathBuf>,
    pub cell_size: f64,
    pub noise_std: f64,
    pub max_step: f64,
    pub goal_radius: f64,

    pub estimator: EstimatorKind,
    pub scale: f64,
    pub noise_rel_std: f64,
    pub pierce_fraction: f64,
    pub pierce_cap: f64,
    pub pierce_seed: u64,
    pub resolution: u32,

    pub reaction: ReactionModel,

    pub cth: f64,
    pub variant: Variant,
    pub max_iterations: usize,
    pub w_search: SearchSpec,
    pub e_search: SearchSpec,

    pub protocol: Protocol,
    pub replan: bool,
    pub query_cost: f64,
    pub max_total_steps: Option<u64>,
    /// Parameters of the one-shot `rollout` command.
    pub rollout_w: f64,
    pub rollout_e: f64,

    pub sweep: SweepSpec,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let adapt = AdaptConfig::default();
        Self {
            map: None,
            cell_size: 1.0,
            noise_std: 0.3,
            max_step: 1.0,
            goal_radius: 1.0,
            estimator: EstimatorKind::Oracle,
            scale: 1.0,
            noise_rel_std: 0.0,
            pierce_fraction: 0.0,
            pierce_cap: 10.0,
            pierce_seed: 0,
            resolution: planadapt::distance::DEFAULT_RESOLUTION,
            reaction: ReactionModel::strong(),
            cth: adapt.cth,
            variant: Variant::Alg2,
            max_iterations: adapt.max_iterations,
            w_search: SearchSpec::from_state(&adapt.w_state),
            e_search: SearchSpec::from_state(&adapt.e_state),
            protocol: Protocol::default(),
            replan: false,
            query_cost: RolloutOptions::default().query_cost,
            max_total_steps: None,
            rollout_w: 100.0,
            rollout_e: 5.0,
            sweep: SweepSpec::default(),
            seed: 7,
            out: PathBuf::from("out"),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::config(format!("{key}: cannot parse {value:?}: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(CliError::config(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, CliError> {
    value
        .split([',', ' '])
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

impl RunConfig {
    /// Parses config text; relative paths resolve against `base`.
    pub fn parse_str(text: &str, base: Option<&Path>) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::config(format!("line {}: expected key = value", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim(), base)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        Self::parse_str(&text, path.parent())
    }

    pub fn set(&mut self, key: &str, value: &str, base: Option<&Path>) -> Result<(), CliError> {
        let resolve = |v: &str| {
            let p = PathBuf::from(v);
            match base {
                Some(b) if p.is_relative() => b.join(p),
                _ => p,
            }
        };
        match key {
            "map" => self.map = Some(resolve(value)),
            "cell_size" => self.cell_size = parse(key, value)?,
            "noise_std" => self.noise_std = parse(key, value)?,
            "max_step" => self.max_step = parse(key, value)?,
            "goal_radius" => self.goal_radius = parse(key, value)?,

            "estimator" => self.estimator = parse(key, value)?,
            "estimator.scale" => self.scale = parse(key, value)?,
            "estimator.noise_rel_std" => self.noise_rel_std = parse(key, value)?,
            "estimator.pierce_fraction" => self.pierce_fraction = parse(key, value)?,
            "estimator.pierce_cap" => self.pierce_cap = parse(key, value)?,
            "estimator.pierce_seed" => self.pierce_seed = parse(key, value)?,
            "estimator.resolution" => self.resolution = parse(key, value)?,

            "reaction.step_scale" => self.reaction.step_scale = parse(key, value)?,
            "reaction.extra_noise_std" => self.reaction.extra_noise_std = parse(key, value)?,
            "reaction.budget_factor" => self.reaction.budget_factor = parse(key, value)?,
            "reaction.budget_floor" => self.reaction.budget_floor = parse(key, value)?,

            "cth" => self.cth = parse(key, value)?,
            "variant" => self.variant = parse(key, value)?,
            "max_iterations" => self.max_iterations = parse(key, value)?,

            "protocol.settings" => self.protocol.n_settings = parse(key, value)?,
            "protocol.tasks" => self.protocol.tasks_per_setting = parse(key, value)?,
            "rollout.replan" => self.replan = parse_bool(key, value)?,
            "rollout.query_cost" => self.query_cost = parse(key, value)?,
            "rollout.max_total_steps" => self.max_total_steps = Some(parse(key, value)?),
            "rollout.w" => self.rollout_w = parse(key, value)?,
            "rollout.e" => self.rollout_e = parse(key, value)?,

            "sweep.param" => self.sweep.swept = parse(key, value)?,
            "sweep.values" => self.sweep.values = parse_list(key, value)?,
            "sweep.fixed" => self.sweep.fixed_value = parse(key, value)?,
            "sweep.repetitions" => self.sweep.repetitions = parse(key, value)?,

            "seed" => self.seed = parse(key, value)?,
            "out" => self.out = resolve(value),
            _ => {
                let Some((param, field)) = key.split_once('.') else {
                    return Err(CliError::config(format!("unknown key {key:?}")));
                };
                let spec = match param {
                    "w" => &mut self.w_search,
                    "e" => &mut self.e_search,
                    _ => return Err(CliError::config(format!("unknown key {key:?}"))),
                };
                match field {
                    "init" => spec.init = parse(key, value)?,
                    "i" => spec.i = parse(key, value)?,
                    "d" => spec.d = parse(key, value)?,
                    "n" => spec.n = parse(key, value)?,
                    "rho" => spec.rho = parse(key, value)?,
                    "gamma" => spec.gamma = parse(key, value)?,
                    "tth" => spec.tth = parse(key, value)?,
                    "count" => spec.count = parse(key, value)?,
                    _ => return Err(CliError::config(format!("unknown key {key:?}"))),
                }
            }
        }
        Ok(())
    }

    pub fn world(&self) -> Result<MazeWorld, CliError> {
        let base = match &self.map {
            None => MazeWorld::default_maze(),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::config(format!("map {}: {e}", path.display())))?;
                load_maze(&text)
                    .map_err(|e| CliError::config(format!("map {}: {e}", path.display())))?
            }
        };
        base.with_cell_size(self.cell_size)
            .and_then(|w| w.with_motion(self.noise_std, self.max_step, self.goal_radius))
            .map_err(|e| CliError::config(e.to_string()))
    }

    pub fn estimator(&self) -> Result<DistanceEstimator, CliError> {
        DistanceEstimator::from_parts(
            self.estimator,
            self.scale,
            self.noise_rel_std,
            self.pierce_fraction,
            self.pierce_cap,
        )
        .and_then(|e| e.with_resolution(self.resolution))
        .map(|e| e.with_pierce_seed(self.pierce_seed))
        .map_err(|e| CliError::config(e.to_string()))
    }

    pub fn reaction_model(&self) -> Result<ReactionModel, CliError> {
        self.reaction
            .validate()
            .map_err(|e| CliError::config(e.to_string()))?;
        Ok(self.reaction)
    }

    pub fn adapt_config(&self) -> Result<AdaptConfig, CliError> {
        let cfg = AdaptConfig {
            cth: self.cth,
            w_state: self.w_search.state(self.variant),
            e_state: self.e_search.state(self.variant),
            max_iterations: self.max_iterations,
        };
        cfg.validate().map_err(CliError::config)?;
        if cfg.max_iterations == 0 {
            return Err(CliError::config("max_iterations must be >= 1"));
        }
        Ok(cfg)
    }

    pub fn protocol(&self) -> Result<Protocol, CliError> {
        if self.protocol.n_settings == 0 || self.protocol.tasks_per_setting == 0 {
            return Err(CliError::config("protocol.settings and protocol.tasks must be >= 1"));
        }
        Ok(self.protocol)
    }

    pub fn rollout_options(&self) -> Result<RolloutOptions, CliError> {
        if !(self.query_cost.is_finite() && self.query_cost >= 0.0) {
            return Err(CliError::config("rollout.query_cost must be >= 0"));
        }
        Ok(RolloutOptions {
            replanning: self.replan,
            query_cost: self.query_cost,
            max_total_steps: self.max_total_steps,
            ..RolloutOptions::default()
        })
    }

    /// Checks every section, including that the map file loads.
    pub fn validate(&self) -> Result<(), CliError> {
        self.world()?;
        self.estimator()?;
        self.reaction_model()?;
        self.adapt_config()?;
        self.protocol()?;
        self.rollout_options()?;
        if !(self.rollout_w >= 1.0 && self.rollout_e > 0.0) {
            return Err(CliError::config("rollout.w must be >= 1 and rollout.e > 0"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_comments() {
        let cfg = RunConfig::parse_str(
            "# comment\n\nseed = 11\nvariant = alg3\nw.i = 10\nestimator = wall_piercing\n\
             estimator.pierce_fraction = 0.25\nsweep.values = 2, 3, 5\nrollout.replan = yes\n",
            None,
        )
        .unwrap();
        assert_eq!(cfg.seed, 11);
        assert_eq!(cfg.variant, Variant::Alg3);
        assert_eq!(cfg.w_search.i, 10.0);
        assert_eq!(cfg.estimator, EstimatorKind::WallPiercing);
        assert_eq!(cfg.sweep.values, vec![2.0, 3.0, 5.0]);
        assert!(cfg.replan);
        cfg.validate().unwrap();
        assert_eq!(cfg.estimator().unwrap().pierce_fraction(), 0.25);
    }

    #[test]
    fn defaults_match_search_constants() {
        let cfg = RunConfig::default();
        let a = cfg.adapt_config().unwrap();
        assert_eq!(a, AdaptConfig::default());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::parse_str("bogus = 1", None).is_err());
        assert!(RunConfig::parse_str("w.bogus = 1", None).is_err());
        assert!(RunConfig::parse_str("seed 1", None).is_err());
        assert!(RunConfig::parse_str("seed = x", None).is_err());
        let cfg = RunConfig::parse_str("cth = 2", None).unwrap();
        assert!(cfg.validate().is_err());
        let cfg = RunConfig::parse_str("map = /nonexistent/maze.txt", None).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn sweep_validation() {
        let mut s = SweepSpec::default();
        assert!(s.validate().is_ok());
        s.repetitions = 0;
        assert!(s.validate().is_err());
        let s = SweepSpec {
            values: vec![],
            ..SweepSpec::default()
        };
        assert!(s.validate().is_err());
        let s = SweepSpec {
            swept: SweepParam::E,
            values: vec![2.0, 3.0],
            fixed_value: 0.5,
            repetitions: 1,
        };
        assert!(s.validate().is_err());
        assert_eq!(SweepSpec::default().point(100.0), (100.0, 5.0));
    }
}
