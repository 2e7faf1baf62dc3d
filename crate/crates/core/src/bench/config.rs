//! `key = value` override files.
//!
//! ```text
//! # comments and blank lines are ignored
//! trials = 20
//! barrels = 3,5
//! w_obstacle = 4.0
//! ```

use thiserror::Error;

use super::ScenarioConfig;
use crate::learner::TrainConfig;
use crate::planner::{NavConfig, RecoveryWedge};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value `{value}` for `{key}`")]
    BadValue {
        line: usize,
        key: String,
        value: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

pub fn parse_config(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content
            .split_once('=')
            .ok_or(ConfigError::Syntax { line: i + 1 })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(ConfigError::Syntax { line: i + 1 });
        }
        out.push(Entry {
            line: i + 1,
            key: k.to_string(),
            value: v.to_string(),
        });
    }
    Ok(out)
}

const SCENARIO_KEYS: &[&str] = &[
    "trials",
    "barrels",
    "k_values",
    "sweep_barrels",
    "world",
    "seed",
    "recovery",
    "dense_spawn",
    "bias_sigma",
];
const NAV_KEYS: &[&str] = &[
    "replan_period",
    "completion_fraction",
    "control_step",
    "goal_tolerance",
    "timeout",
    "max_recoveries",
    "predict_collisions",
    "lookahead",
    "planning_horizon",
    "collision_margin",
    "grid_resolution",
    "exhaustive_angles",
    "w_goal_heading",
    "w_path_heading",
    "w_path_distance",
    "w_goal_distance",
    "w_obstacle",
    "nose_offset",
    "safe_clearance",
    "wedge_margin",
    "wedge_near",
    "wedge_far",
    "recovery_face_distance",
];
const TRAIN_KEYS: &[&str] = &[
    "learning_rate",
    "batch_size",
    "max_epochs",
    "plateau_window",
    "plateau_tolerance",
    "hidden",
];

/// Apply entries to whichever targets are given. Keys for absent targets
/// are skipped; keys nobody knows are an error.
pub fn apply_config(
    entries: &[Entry],
    mut scenario: Option<&mut ScenarioConfig>,
    mut nav: Option<&mut NavConfig>,
    mut train: Option<&mut TrainConfig>,
) -> Result<(), ConfigError> {
    for e in entries {
        let bad = || ConfigError::BadValue {
            line: e.line,
            key: e.key.clone(),
            value: e.value.clone(),
        };
        let num = || {
            e.value
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(bad)
        };
        let int = || e.value.parse::<usize>().map_err(|_| bad());
        let list = || {
            e.value
                .split(',')
                .map(|v| v.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| bad())
        };
        let flag = || e.value.parse::<bool>().map_err(|_| bad());
        let key = e.key.as_str();
        if SCENARIO_KEYS.contains(&key) {
            let Some(s) = scenario.as_deref_mut() else {
                continue;
            };
            match key {
                "trials" => s.trials = int()?,
                "barrels" => s.barrel_counts = list()?,
                "k_values" => s.k_values = list()?,
                "sweep_barrels" => s.sweep_barrels = int()?,
                "world" => s.world = e.value.clone(),
                "seed" => s.base_seed = e.value.parse().map_err(|_| bad())?,
                "recovery" => s.recovery = e.value.parse().map_err(|_| bad())?,
                "dense_spawn" => s.dense_spawn = flag()?,
                "bias_sigma" => s.bias_sigma = num()?,
                _ => unreachable!(),
            }
        } else if NAV_KEYS.contains(&key) {
            let Some(n) = nav.as_deref_mut() else {
                continue;
            };
            match key {
                "replan_period" => n.episode.replan_period = num()?,
                "completion_fraction" => n.episode.completion_fraction = num()?,
                "control_step" => n.episode.control_step = num()?,
                "goal_tolerance" => n.episode.goal_tolerance = num()?,
                "timeout" => n.episode.timeout = num()?,
                "max_recoveries" => n.episode.max_recoveries = int()?,
                "predict_collisions" => n.episode.predict_collisions = flag()?,
                "lookahead" => n.lookahead = num()?,
                "planning_horizon" => n.planning_horizon = num()?,
                "collision_margin" => n.collision_margin = num()?,
                "grid_resolution" => n.grid_resolution = num()?,
                "exhaustive_angles" => n.exhaustive_angles = int()?,
                "w_goal_heading" => n.weights.goal_heading = num()?,
                "w_path_heading" => n.weights.path_heading = num()?,
                "w_path_distance" => n.weights.path_distance = num()?,
                "w_goal_distance" => n.weights.goal_distance = num()?,
                "w_obstacle" => n.weights.obstacle = num()?,
                "nose_offset" => n.weights.nose_offset = num()?,
                "safe_clearance" => n.weights.safe_clearance = num()?,
                "wedge_margin" => {
                    n.recovery_wedge
                        .get_or_insert_with(RecoveryWedge::default)
                        .margin = num()?
                }
                "wedge_near" => {
                    n.recovery_wedge
                        .get_or_insert_with(RecoveryWedge::default)
                        .near = num()?
                }
                "wedge_far" => {
                    n.recovery_wedge
                        .get_or_insert_with(RecoveryWedge::default)
                        .far = num()?
                }
                "recovery_face_distance" => n.recovery_face_distance = num()?,
                _ => unreachable!(),
            }
        } else if TRAIN_KEYS.contains(&key) {
            let Some(t) = train.as_deref_mut() else {
                continue;
            };
            match key {
                "learning_rate" => t.learning_rate = num()?,
                "batch_size" => t.batch_size = int()?,
                "max_epochs" => t.max_epochs = int()?,
                "plateau_window" => t.plateau_window = int()?,
                "plateau_tolerance" => t.plateau_tolerance = num()?,
                "hidden" => t.hidden = list()?,
                _ => unreachable!(),
            }
        } else {
            return Err(ConfigError::UnknownKey {
                line: e.line,
                key: e.key.clone(),
            });
        }
    }
    Ok(())
}
