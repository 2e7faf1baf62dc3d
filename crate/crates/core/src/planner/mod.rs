//! Closed-loop navigation: occupancy mapping, a global grid path, local
//! trajectory selection, recovery and episode simulation.

mod episode;
mod global;
mod grid;
mod local;
mod scoring;

pub use episode::{
    run_episode, EpisodeConfig, NavConfig, Outcome, RecoveryMode, RecoveryWedge, TrialResult,
};
pub use global::{blocked_cells, plan_global, GlobalPath, GlobalPlanError, PathProjection};
pub use grid::{CellState, GridClearance, OccupancyGrid};
pub use local::{
    exhaustive_angles, plan_local, LocalContext, LocalPlan, Models, Planner, PlannerError,
    PlannerKind,
};
pub use scoring::{score_candidate, CostTerms, CostWeights, Score, ScoringContext};
