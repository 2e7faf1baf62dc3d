//! Benchmark scenarios and their result tables.

mod config;
mod plot;
mod table;

pub use config::{apply_config, parse_config, ConfigError, Entry as ConfigEntry};
pub use plot::{bar_chart_svg, emit_bar_chart, emit_line_chart, line_chart_svg};
pub use table::{
    aggregate, format_summary, read_csv, write_csv, ResultRow, RowSink, SummaryRow, CSV_HEADER,
};

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{generate_scene, Point2, Pose2D, Rect, Scene, WorldSpec};
use crate::planner::{
    run_episode, Models, NavConfig, Planner, PlannerError, RecoveryMode, TrialResult,
};
use crate::world_file::{load_named, WorldFileError};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error(transparent)]
    World(#[from] WorldFileError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("result table is empty")]
    EmptyTable,
    #[error("unexpected CSV header `{0}`")]
    BadHeader(String),
    #[error("existing results do not match this run: {0}")]
    ResumeMismatch(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("nothing to plot")]
    NothingToPlot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    /// Barrels between the start and a goal 8 m ahead, one setting per
    /// barrel count.
    BarrelForest,
    /// Dense barrel forest, one setting per candidate budget `k`.
    CandidateSweep,
    /// Random sector-to-sector trips in a hand-authored world.
    SectorWorld,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::BarrelForest => "barrels",
            ScenarioKind::CandidateSweep => "sweep",
            ScenarioKind::SectorWorld => "sectors",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = BenchError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "barrels" | "barrel-forest" => Ok(ScenarioKind::BarrelForest),
            "sweep" | "candidate-sweep" => Ok(ScenarioKind::CandidateSweep),
            "sectors" | "sector-world" => Ok(ScenarioKind::SectorWorld),
            other => Err(BenchError::Invalid(format!("unknown scenario `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub world_length: f64,
    pub world_width: f64,
    /// Distance from the start to the goal.
    pub goal_distance: f64,
    /// Start offset from the world's rear edge.
    pub start_margin: f64,
    pub barrel_counts: Vec<usize>,
    pub barrel_radius: f64,
    /// Barrel placement band ahead of the start, sparse and dense.
    pub spawn_depth: (f64, f64),
    pub dense_spawn_depth: (f64, f64),
    pub dense_spawn: bool,
    pub sweep_barrels: usize,
    pub k_values: Vec<usize>,
    pub trials: usize,
    /// Sector world name (`sparse`, `dense`) or path.
    pub world: String,
    pub planners: Vec<Planner>,
    pub recovery: RecoveryMode,
    /// Width of the Gaussian goal bias for the learned planners.
    pub bias_sigma: f64,
    pub base_seed: u64,
}

impl ScenarioConfig {
    pub fn new(kind: ScenarioKind) -> Self {
        let planners = match kind {
            ScenarioKind::CandidateSweep => vec!["cartesian-gaussian"],
            _ => Planner::NAMES.to_vec(),
        };
        Self {
            kind,
            world_length: 10.0,
            world_width: 6.0,
            goal_distance: 8.0,
            start_margin: 1.0,
            barrel_counts: vec![3, 5, 7],
            barrel_radius: 0.28,
            spawn_depth: (1.0, 7.0),
            dense_spawn_depth: (1.0, 4.0),
            dense_spawn: kind == ScenarioKind::CandidateSweep,
            sweep_barrels: 5,
            k_values: vec![2, 3, 5, 7],
            trials: if kind == ScenarioKind::SectorWorld {
                35
            } else {
                50
            },
            world: "sparse".to_string(),
            planners: planners
                .iter()
                .map(|n| n.parse().expect("built-in planner name"))
                .collect(),
            recovery: RecoveryMode::Disabled,
            bias_sigma: 0.2,
            base_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let fail = |m: &str| Err(BenchError::Invalid(m.to_string()));
        if self.trials == 0 {
            return fail("trials must be at least 1");
        }
        if self.planners.is_empty() {
            return fail("no planners");
        }
        if self.kind == ScenarioKind::CandidateSweep && self.k_values.iter().any(|&k| k == 0) {
            return fail("k must be at least 1");
        }
        if self.bias_sigma <= 0.0 {
            return fail("bias_sigma must be positive");
        }
        if self.world_length <= self.start_margin + self.goal_distance {
            return fail("goal lies outside the world");
        }
        Ok(())
    }

    /// Setting labels in run order.
    pub fn settings(&self) -> Vec<String> {
        match self.kind {
            ScenarioKind::BarrelForest => self
                .barrel_counts
                .iter()
                .map(|n| format!("barrels={n}"))
                .collect(),
            ScenarioKind::CandidateSweep => {
                self.k_values.iter().map(|k| format!("k={k}")).collect()
            }
            ScenarioKind::SectorWorld => vec![format!("world={}", world_label(&self.world))],
        }
    }
}

fn world_label(world: &str) -> String {
    Path::new(world)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| world.to_string())
}

/// One navigation problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub setting: String,
    pub index: usize,
    pub seed: u64,
    pub scene: Scene,
    pub start: Pose2D,
    pub goal: Point2,
    /// Candidate budget override for the sweep.
    pub k: Option<usize>,
}

/// Barrel forest: robot at the rear of a `length x width` box facing a
/// goal `goal_distance` ahead, barrels uniform over the spawn band.
pub fn barrel_forest(
    config: &ScenarioConfig,
    barrels: usize,
    dense: bool,
    seed: u64,
) -> (Scene, Pose2D, Point2) {
    let half = config.world_width / 2.0;
    let bounds = Rect::new(0.0, -half, config.world_length, half);
    let start = Pose2D::new(config.start_margin, 0.0, 0.0);
    let (near, far) = if dense {
        config.dense_spawn_depth
    } else {
        config.spawn_depth
    };
    let spec = WorldSpec {
        bounds,
        start,
        spawn_region: Rect::new(near, -half, far, half),
        obstacle_count: barrels,
        obstacle_radius: config.barrel_radius,
        seed,
    };
    let goal = Point2::new(config.start_margin + config.goal_distance, 0.0);
    (generate_scene(&spec), start, goal)
}

/// All trials of a scenario in run order.
pub fn scenario_trials(config: &ScenarioConfig) -> Result<Vec<Trial>, BenchError> {
    config.validate()?;
    let n = config.trials;
    let base = config.base_seed;
    let mut trials = Vec::new();
    match config.kind {
        ScenarioKind::BarrelForest => {
            for (s, (&count, label)) in config
                .barrel_counts
                .iter()
                .zip(config.settings())
                .enumerate()
            {
                for t in 0..n {
                    let seed = base + (s * n + t) as u64;
                    let (scene, start, goal) =
                        barrel_forest(config, count, config.dense_spawn, seed);
                    trials.push(Trial {
                        setting: label.clone(),
                        index: t,
                        seed,
                        scene,
                        start,
                        goal,
                        k: None,
                    });
                }
            }
        }
        ScenarioKind::CandidateSweep => {
            for (&k, label) in config.k_values.iter().zip(config.settings()) {
                for t in 0..n {
                    // the same scenes for every k
                    let seed = base + t as u64;
                    let (scene, start, goal) =
                        barrel_forest(config, config.sweep_barrels, config.dense_spawn, seed);
                    trials.push(Trial {
                        setting: label.clone(),
                        index: t,
                        seed,
                        scene,
                        start,
                        goal,
                        k: Some(k),
                    });
                }
            }
        }
        ScenarioKind::SectorWorld => {
            let world = load_named(&config.world)?;
            if world.sectors.len() < 2 {
                return Err(BenchError::Invalid(
                    "sector world needs at least two sectors".into(),
                ));
            }
            let label = config.settings().remove(0);
            let mut pairs = Vec::new();
            for a in 0..world.sectors.len() {
                for b in 0..world.sectors.len() {
                    if a != b {
                        pairs.push((a, b));
                    }
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(base);
            for t in 0..n {
                let &(a, b) = pairs.choose(&mut rng).expect("at least one pair");
                let from = world.sectors[a].region.center();
                let to = world.sectors[b].region.center();
                trials.push(Trial {
                    setting: label.clone(),
                    index: t,
                    seed: base + t as u64,
                    scene: world.scene.clone(),
                    start: Pose2D::new(from.x, from.y, (to - from).angle()),
                    goal: to,
                    k: None,
                });
            }
        }
    }
    Ok(trials)
}

pub fn run_trial(
    trial: &Trial,
    planner: &Planner,
    models: &Models,
    nav: &NavConfig,
) -> Result<TrialResult, BenchError> {
    let planner = match trial.k {
        Some(k) => planner.with_k(k),
        None => *planner,
    };
    Ok(run_episode(
        &trial.scene,
        trial.start,
        trial.goal,
        &planner,
        models,
        nav,
    )?)
}

/// Run every (trial, planner) pair not already in `existing`, in a fixed
/// order, handing each finished row to `sink` as soon as its predecessors
/// are done. Returns the full table including the existing rows.
pub fn run_scenario(
    config: &ScenarioConfig,
    models: &Models,
    nav: &NavConfig,
    existing: &[ResultRow],
    mut sink: impl FnMut(&ResultRow) -> Result<(), BenchError>,
) -> Result<Vec<ResultRow>, BenchError> {
    for p in &config.planners {
        models.check(p)?;
    }
    let mut nav = nav.clone();
    nav.episode.recovery = config.recovery;
    let trials = scenario_trials(config)?;
    let scenario = config.kind.name();
    let planners: Vec<Planner> = config
        .planners
        .iter()
        .map(|p| {
            let mut p = *p;
            p.sampler.bias_sigma = config.bias_sigma;
            p
        })
        .collect();
    let jobs: Vec<(&Trial, &Planner)> = trials
        .iter()
        .flat_map(|t| planners.iter().map(move |p| (t, p)))
        .collect();

    let done: HashSet<_> = existing.iter().map(ResultRow::key).collect();
    for (i, row) in existing.iter().enumerate() {
        let Some((t, p)) = jobs.get(i) else {
            return Err(BenchError::ResumeMismatch(format!(
                "{} extra rows",
                existing.len() - jobs.len()
            )));
        };
        if row.key()
            != (
                scenario.to_string(),
                t.setting.clone(),
                p.name().to_string(),
                t.index,
            )
            || row.seed != t.seed
        {
            return Err(BenchError::ResumeMismatch(format!(
                "row {} is {:?}",
                i + 1,
                row.key()
            )));
        }
    }
    let pending: Vec<_> = jobs
        .into_iter()
        .filter(|(t, p)| {
            !done.contains(&(
                scenario.to_string(),
                t.setting.clone(),
                p.name().to_string(),
                t.index,
            ))
        })
        .collect();

    let mut rows = existing.to_vec();
    let chunk = rayon::current_num_threads().max(1) * 2;
    for batch in pending.chunks(chunk) {
        let results: Vec<Result<TrialResult, BenchError>> = batch
            .par_iter()
            .map(|(t, p)| run_trial(t, p, models, &nav))
            .collect();
        for ((t, p), result) in batch.iter().zip(results) {
            let row = ResultRow::new(scenario, &t.setting, p.name(), t.index, t.seed, &result?);
            sink(&row)?;
            rows.push(row);
        }
    }
    Ok(rows)
}

/// [`run_scenario`] against a CSV file: rows already in the file are kept
/// and only the missing ones are run and appended.
pub fn run_scenario_to_csv(
    config: &ScenarioConfig,
    models: &Models,
    nav: &NavConfig,
    path: impl AsRef<Path>,
) -> Result<Vec<ResultRow>, BenchError> {
    let path = path.as_ref();
    let existing = match std::fs::metadata(path) {
        Ok(m) if m.len() > 0 => read_csv(path)?,
        _ => Vec::new(),
    };
    let mut out = RowSink::open(path)?;
    run_scenario(config, models, nav, &existing, |row| out.append(row))
}
