// SPDX-License-Identifier: Apache-2.0
//! Run configuration: TOML, or JSON when the file name ends in `.json`.

use std::path::{Path, PathBuf};

use brokenpt::fock::{FockSpace, DEFAULT_BUFFER};
use brokenpt::static_models::XYModel;
use brokenpt::validation::{InvariantChoice, Settings};
use brokenpt::{Branch, InvariantCoeffs, ProfileKind, Scenario, SuiteProfile, TimeGrid, TimeProfile, Tolerances};
use serde::Deserialize;

pub const BUNDLED: &str = include_str!("../configs/default.toml");

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub scenario: ScenarioConfig,
    pub grid: TimeGrid,
    #[serde(default)]
    pub invariant: InvariantChoice,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub modes: ModesConfig,
    #[serde(default, rename = "static")]
    pub static_models: StaticConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    20_240_601
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub a: ProfileKind,
    pub lambda: ProfileKind,
    #[serde(default)]
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub kappa_plus: f64,
    pub kappa_minus: f64,
    pub n: usize,
    pub m: usize,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub cutoff: Option<usize>,
    pub buffer: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModesConfig {
    pub times: Vec<f64>,
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

impl Default for ModesConfig {
    fn default() -> Self {
        Self { times: vec![0.0, 2.5, 5.0, 7.5, 10.0], x_min: -6.0, x_max: 6.0, points: 241 }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XYConfig {
    pub m: f64,
    pub omega_x: f64,
    pub omega_y: f64,
    pub kappa: f64,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KConfig {
    pub a: f64,
    pub lambda: f64,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StaticConfig {
    pub levels: usize,
    pub xy: XYConfig,
    pub k: KConfig,
}

impl Default for StaticConfig {
    fn default() -> Self {
        Self {
            levels: 4,
            xy: XYConfig { m: 1.0, omega_x: 1.0, omega_y: 2.0, kappa: 0.9 },
            k: KConfig { a: 1.0, lambda: 0.4 },
        }
    }
}

impl XYConfig {
    pub fn model(&self) -> XYModel {
        XYModel { m: self.m, omega_x: self.omega_x, omega_y: self.omega_y, kappa: self.kappa }
    }
}

/// A configuration that failed to load or violates an invariant.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn invalid(e: impl std::fmt::Display) -> ConfigError {
    ConfigError(format!("invalid config: {e}"))
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        match path {
            None => Self::parse(BUNDLED, false),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| ConfigError(format!("cannot read config {}: {e}", p.display())))?;
                Self::parse(&text, p.extension().is_some_and(|e| e == "json"))
            }
        }
    }

    pub fn parse(text: &str, json: bool) -> Result<Self, ConfigError> {
        let cfg: Config =
            if json { serde_json::from_str(text).map_err(invalid)? } else { toml::from_str(text).map_err(invalid)? };
        Ok(cfg)
    }
}

/// Everything a subcommand needs, checked against the config invariants.
pub struct Run {
    pub config: Config,
    pub settings: Settings,
}

impl Run {
    pub fn new(config: Config, profile: Option<SuiteProfile>) -> Result<Self, ConfigError> {
        let g = config.grid;
        let grid = TimeGrid::new(g.t_start, g.t_end, g.samples).map_err(invalid)?;
        if grid.t_start < 0.0 {
            return Err(invalid(format!("t_start ≥ 0 required (got {})", grid.t_start)));
        }
        let s = &config.scenario;
        let profile_on = |kind: &ProfileKind| TimeProfile::new(kind.clone(), grid.t_end).map_err(invalid);
        let scenario = Scenario::new(
            profile_on(&s.a)?,
            profile_on(&s.lambda)?,
            s.q1,
            s.q2,
            s.q3,
            s.kappa_plus,
            s.kappa_minus,
            s.n,
            s.m,
        )
        .map_err(invalid)?;
        let c = config.invariant;
        InvariantCoeffs::from_ep(&scenario.ep_constants(), c.c1, c.c2_re, c.c3_re, Branch::Plus).map_err(invalid)?;
        let cutoff = profile.map(SuiteProfile::cutoff).or(config.oracle.cutoff).unwrap_or(SuiteProfile::Fast.cutoff());
        let space = FockSpace::new(cutoff, config.oracle.buffer.unwrap_or(DEFAULT_BUFFER)).map_err(invalid)?;
        let m = &config.modes;
        if m.points < 2 || m.x_max.partial_cmp(&m.x_min) != Some(std::cmp::Ordering::Greater) {
            return Err(invalid("modes need points ≥ 2 and x_max > x_min"));
        }
        if let Some(t) = m.times.iter().find(|t| !(grid.t_start..=grid.t_end).contains(*t)) {
            return Err(invalid(format!("mode time {t} lies outside the grid [{}, {}]", grid.t_start, grid.t_end)));
        }
        let settings = Settings {
            scenario,
            grid,
            space,
            invariant: config.invariant,
            tolerances: config.tolerances,
            seed: config.seed,
        };
        Ok(Self { config, settings })
    }
}
