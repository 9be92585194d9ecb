//! Experiment configuration: one JSON document describing the plant, the
//! channel, the game and every pipeline stage.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bayesian::{BeliefMode, PayoffMode};
use crate::channel::ChannelSpec;
use crate::error::{Error, Result};
use crate::estimation::SystemModel;
use crate::game::{GameParams, GameSpec, GameState};
use crate::nashq::LearnConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub a: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    /// Defaults to zero.
    #[serde(default)]
    pub pi0: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub gains: Vec<f64>,
    pub kernel: Vec<Vec<f64>>,
    pub sigma2: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BayesConfig {
    /// Holding time of the static game.
    pub m: usize,
    #[serde(default)]
    pub belief: BeliefMode,
    #[serde(default)]
    pub payoff: PayoffMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    /// Policies JSON written by `solve` or `learn`.
    #[serde(default)]
    pub policies: Option<String>,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default)]
    pub start: Option<GameState>,
}

fn default_horizon() -> usize {
    200
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            policies: None,
            horizon: default_horizon(),
            start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub channel: ChannelConfig,
    pub game: GameParams,
    pub learn: LearnConfig,
    #[serde(default)]
    pub bayes: Option<BayesConfig>,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
}

fn default_output_dir() -> String {
    "out".into()
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(if path == "." { String::new() } else { path }, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Cross-field checks with the offending field's path; runs before any
    /// computation.
    pub fn validate(&self) -> Result<()> {
        let g = &self.game;
        for (path, actions) in [
            ("game.actions_attacker", &g.actions_attacker),
            ("game.actions_sensor", &g.actions_sensor),
        ] {
            if actions.is_empty() {
                return Err(Error::config(path, "must be nonempty"));
            }
            if let Some(i) = actions.iter().position(|&a| !(a > 0.0) || !a.is_finite()) {
                return Err(Error::config(format!("{path}[{i}]"), "powers must be positive"));
            }
            if let Some(i) = actions.windows(2).position(|w| w[1] <= w[0]) {
                return Err(Error::config(format!("{path}[{}]", i + 1), "powers must be strictly increasing"));
            }
        }
        if !(g.beta > 0.0 && g.beta < 1.0) {
            return Err(Error::config("game.beta", format!("must lie in (0, 1), got {}", g.beta)));
        }
        for (path, v) in [("game.alpha_s", g.alpha_s), ("game.alpha_a", g.alpha_a)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::config(path, "must be nonnegative"));
            }
        }
        let ch = &self.channel;
        if ch.gains.is_empty() {
            return Err(Error::config("channel.gains", "must be nonempty"));
        }
        if let Some(i) = ch.gains.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::config(format!("channel.gains[{}]", i + 1), "gains must be strictly increasing"));
        }
        if ch.kernel.len() != ch.gains.len() {
            return Err(Error::config("channel.kernel", "needs one row per gain"));
        }
        if let Some(i) = ch.kernel.iter().position(|r| r.len() != ch.gains.len()) {
            return Err(Error::config(format!("channel.kernel[{i}]"), "needs one entry per gain"));
        }
        if let Some(b) = &self.bayes {
            if b.m > g.tau_max {
                return Err(Error::config("bayes.m", format!("exceeds game.tau_max = {}", g.tau_max)));
            }
        }
        if let Some(s) = self.simulate.start {
            if s.tau > g.tau_max || s.gs >= ch.gains.len() || s.ga >= ch.gains.len() {
                return Err(Error::config("simulate.start", "state out of range"));
            }
        }
        self.learn.validate()?;
        self.system_model()?;
        self.channel_spec()?;
        Ok(())
    }

    pub fn system_model(&self) -> Result<SystemModel> {
        let m = &self.model;
        let a = matrix("model.a", &m.a)?;
        let n = a.nrows();
        let pi0 = match &m.pi0 {
            Some(p) => matrix("model.pi0", p)?,
            None => DMatrix::zeros(n, n),
        };
        SystemModel::new(a, matrix("model.c", &m.c)?, matrix("model.q", &m.q)?, matrix("model.r", &m.r)?, pi0)
            .map_err(|e| Error::config("model", e.to_string()))
    }

    pub fn channel_spec(&self) -> Result<ChannelSpec> {
        let c = &self.channel;
        ChannelSpec::new(c.gains.clone(), c.kernel.clone(), c.sigma2, c.alpha)
            .map_err(|e| Error::config("channel", e.to_string()))
    }

    pub fn game_spec(&self) -> Result<GameSpec> {
        GameSpec::new(self.system_model()?, self.channel_spec()?, self.game.clone())
    }
}

fn matrix(path: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 {
        return Err(Error::config(path, "matrix is empty"));
    }
    if let Some(i) = rows.iter().position(|row| row.len() != c) {
        return Err(Error::config(format!("{path}[{i}]"), format!("expected {c} columns")));
    }
    Ok(DMatrix::from_row_iterator(r, c, rows.iter().flatten().copied()))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const DEFAULT: &str = r#"{
        "model": {"a": [[1.2]], "c": [[0.7]], "q": [[0.8]], "r": [[0.8]]},
        "channel": {"gains": [0.6, 0.8], "kernel": [[0.5, 0.5], [0.5, 0.5]], "sigma2": 0.5, "alpha": 1.0},
        "game": {"actions_attacker": [1, 6], "actions_sensor": [2, 5], "alpha_s": 1.0, "alpha_a": 0.25,
                 "beta": 0.75, "tau_max": 4},
        "learn": {"episodes": 100, "seed": 7},
        "bayes": {"m": 1}
    }"#;

    fn path_of(text: &str) -> String {
        match ExperimentConfig::from_json(text) {
            Err(Error::Config { path, .. }) => path,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn default_profile_parses() {
        let cfg = ExperimentConfig::from_json(DEFAULT).unwrap();
        assert_eq!(cfg.output_dir, "out");
        assert_eq!(cfg.learn.steps_per_episode, 20);
        let spec = cfg.game_spec().unwrap();
        assert_eq!(spec.num_states(), 20);
    }

    #[test]
    fn type_errors_carry_the_field_path() {
        let bad = DEFAULT.replace("\"beta\": 0.75", "\"beta\": \"high\"");
        assert_eq!(path_of(&bad), "game.beta");
        let bad = DEFAULT.replace("\"seed\": 7", "\"seed\": -1");
        assert_eq!(path_of(&bad), "learn.seed");
    }

    #[test]
    fn unknown_and_missing_fields_are_rejected() {
        let bad = DEFAULT.replace("\"seed\": 7", "\"seed\": 7, \"sede\": 1");
        assert_eq!(path_of(&bad), "learn.sede");
        let bad = DEFAULT.replace(", \"seed\": 7", "");
        assert!(matches!(ExperimentConfig::from_json(&bad), Err(Error::Config { .. })));
    }

    #[test]
    fn invariant_violations_name_the_field() {
        assert_eq!(path_of(&DEFAULT.replace("\"beta\": 0.75", "\"beta\": 1.0")), "game.beta");
        assert_eq!(path_of(&DEFAULT.replace("[1, 6]", "[6, 1]")), "game.actions_attacker[1]");
        assert_eq!(path_of(&DEFAULT.replace("[2, 5]", "[]")), "game.actions_sensor");
        assert_eq!(path_of(&DEFAULT.replace("\"m\": 1", "\"m\": 9")), "bayes.m");
        assert_eq!(path_of(&DEFAULT.replace("[[0.5, 0.5], [0.5, 0.5]]", "[[1, 0], [0, 1]]")), "channel");
        assert_eq!(path_of(&DEFAULT.replace("\"c\": [[0.7]]", "\"c\": [[0.0]]")), "model");
        assert_eq!(path_of(&DEFAULT.replace("\"exploration\"", "x").replace("\"seed\": 7", "\"seed\": 7, \"exploration\": 2")), "learn.exploration");
    }

    #[test]
    fn malformed_json_is_a_config_error() {
        let err = ExperimentConfig::from_json("{ not json").unwrap_err();
        assert!(err.is_input_error());
    }
}
