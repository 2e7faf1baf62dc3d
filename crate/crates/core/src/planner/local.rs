//! Local planners: which departure angles to try and how to pick one.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::global::GlobalPath;
use super::scoring::{score_candidate, CostWeights, Score, ScoringContext};
use crate::geometry::{DepthScan, ObstacleSource, Point2, Pose2D};
use crate::learner::{predict_angle, predict_confidences, HeadKind, LearnerError, Model};
use crate::sampler::{
    goal_departure_angle, select_candidates, SamplerConfig, SamplerError, SamplingMode,
};
use crate::trajectory::{generate_poses_with, PoseSequence, TrajectoryConfig, VelocityProfile};

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("planner `{planner}` needs a {head} model")]
    MissingModel { planner: String, head: HeadKind },
    #[error("unknown planner `{0}`")]
    UnknownPlanner(String),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlannerKind {
    /// Evenly spaced departure angles, all scored against the grid.
    Exhaustive,
    /// Learned top-k, scored against the grid.
    LearnedCartesian,
    /// Learned top-k, scored against the current scan only.
    LearnedPerceptionSpace,
    /// Goal-weighted argmax of the classifier, executed unchecked.
    NaiveLearned,
    /// Regressed departure angle, executed unchecked.
    Regression { goal_informed: bool },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Planner {
    pub kind: PlannerKind,
    pub sampler: SamplerConfig,
}

impl Planner {
    pub const NAMES: [&'static str; 8] = [
        "exhaustive",
        "cartesian-togoal",
        "cartesian-gaussian",
        "perception-togoal",
        "perception-gaussian",
        "naive",
        "regress",
        "regress-goal",
    ];

    pub fn new(kind: PlannerKind, mode: SamplingMode) -> Self {
        Self {
            kind,
            sampler: SamplerConfig::with_mode(mode),
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.sampler.k = k;
        self
    }

    pub fn name(&self) -> &'static str {
        use PlannerKind::*;
        use SamplingMode::*;
        match (self.kind, self.sampler.mode) {
            (Exhaustive, _) => "exhaustive",
            (LearnedCartesian, ToGoal) => "cartesian-togoal",
            (LearnedCartesian, _) => "cartesian-gaussian",
            (LearnedPerceptionSpace, ToGoal) => "perception-togoal",
            (LearnedPerceptionSpace, _) => "perception-gaussian",
            (NaiveLearned, _) => "naive",
            (
                Regression {
                    goal_informed: false,
                },
                _,
            ) => "regress",
            (
                Regression {
                    goal_informed: true,
                },
                _,
            ) => "regress-goal",
        }
    }

    /// Head of the model this planner runs, if any.
    pub fn head(&self) -> Option<HeadKind> {
        match self.kind {
            PlannerKind::Exhaustive => None,
            PlannerKind::LearnedCartesian
            | PlannerKind::LearnedPerceptionSpace
            | PlannerKind::NaiveLearned => Some(HeadKind::CollisionFree),
            PlannerKind::Regression {
                goal_informed: false,
            } => Some(HeadKind::RegressAngle),
            PlannerKind::Regression {
                goal_informed: true,
            } => Some(HeadKind::RegressAngleGoal),
        }
    }

    /// Grid-memory planners replan on a timer; the perception-space planner
    /// replans on progress.
    pub fn uses_grid(&self) -> bool {
        matches!(
            self.kind,
            PlannerKind::Exhaustive | PlannerKind::LearnedCartesian
        )
    }
}

impl fmt::Display for Planner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Planner {
    type Err = PlannerError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        use PlannerKind::*;
        use SamplingMode::*;
        Ok(match s {
            "exhaustive" => Planner::new(Exhaustive, GaussianBias),
            "cartesian-togoal" => Planner::new(LearnedCartesian, ToGoal),
            "cartesian-gaussian" => Planner::new(LearnedCartesian, GaussianBias),
            "perception-togoal" => Planner::new(LearnedPerceptionSpace, ToGoal),
            "perception-gaussian" => Planner::new(LearnedPerceptionSpace, GaussianBias),
            "naive" => Planner::new(NaiveLearned, NaiveArgmax),
            "regress" => Planner::new(
                Regression {
                    goal_informed: false,
                },
                GaussianBias,
            ),
            "regress-goal" => Planner::new(
                Regression {
                    goal_informed: true,
                },
                GaussianBias,
            ),
            other => return Err(PlannerError::UnknownPlanner(other.to_string())),
        })
    }
}

/// Trained networks available to the planners.
#[derive(Debug, Clone, Default)]
pub struct Models {
    pub collision_free: Option<Model>,
    pub regress: Option<Model>,
    pub regress_goal: Option<Model>,
}

impl Models {
    pub fn get(&self, head: HeadKind) -> Option<&Model> {
        match head {
            HeadKind::CollisionFree => self.collision_free.as_ref(),
            HeadKind::RegressAngle => self.regress.as_ref(),
            HeadKind::RegressAngleGoal => self.regress_goal.as_ref(),
            HeadKind::BestAngle => None,
        }
    }

    pub fn insert(&mut self, model: Model) {
        match model.head {
            HeadKind::CollisionFree => self.collision_free = Some(model),
            HeadKind::RegressAngle => self.regress = Some(model),
            HeadKind::RegressAngleGoal => self.regress_goal = Some(model),
            HeadKind::BestAngle => {}
        }
    }

    pub fn check(&self, planner: &Planner) -> Result<(), PlannerError> {
        match planner.head() {
            Some(head) if self.get(head).is_none() => Err(PlannerError::MissingModel {
                planner: planner.name().to_string(),
                head,
            }),
            _ => Ok(()),
        }
    }
}

/// Everything a local planner sees at a replan.
pub struct LocalContext<'a> {
    pub pose: Pose2D,
    pub scan: &'a DepthScan,
    pub goal: Point2,
    pub path: &'a GlobalPath,
    pub lookahead: f64,
    /// Rollouts are cut at the first pose this close to the goal.
    pub goal_tolerance: f64,
    /// Family used for the planner's rollouts (its length is the horizon).
    pub trajectory: &'a TrajectoryConfig,
    pub weights: &'a CostWeights,
    pub exhaustive_angles: usize,
}

impl LocalContext<'_> {
    /// Path point `lookahead` beyond the robot's projection, or the goal.
    pub fn local_goal(&self) -> Point2 {
        match self.path.project(self.pose.position()) {
            Some(pr) => self
                .path
                .point_at(pr.arc_length + self.lookahead)
                .unwrap_or(self.goal),
            None => self.goal,
        }
    }

    fn goal_angle(&self) -> f64 {
        goal_departure_angle(&self.pose, self.local_goal(), self.trajectory.angle_range)
            .unwrap_or(0.0)
    }

    pub fn rollout_poses(&self, angle: f64) -> (VelocityProfile, PoseSequence) {
        let profile = VelocityProfile::new(angle, self.trajectory);
        let mut poses = generate_poses_with(&self.pose, &profile, self.trajectory);
        if let Some(i) = poses
            .poses
            .iter()
            .position(|p| p.position().distance(self.goal) <= self.goal_tolerance)
        {
            poses = poses.truncated(i + 1);
        }
        // nothing past the goal needs checking
        let reach = self.pose.position().distance(self.goal) + self.goal_tolerance;
        let keep = poses.cumulative_length.partition_point(|&l| l <= reach);
        (profile, poses.truncated(keep.max(2)))
    }
}

/// Outcome of one replan.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalPlan {
    /// Chosen trajectory; `None` when every candidate was rejected.
    pub selected: Option<(VelocityProfile, PoseSequence)>,
    /// Departure angles that were generated and scored.
    pub angles: Vec<f64>,
    /// Trajectories generated at this replan.
    pub evaluated: usize,
}

pub fn exhaustive_angles(count: usize, range: f64) -> Vec<f64> {
    if count == 1 {
        return vec![0.0];
    }
    (0..count)
        .map(|i| -range + 2.0 * range * i as f64 / (count - 1) as f64)
        .collect()
}

/// Pick a trajectory. `source` is what candidates are collision checked and
/// scored against; the unchecked planners ignore it.
pub fn plan_local<S: ObstacleSource + ?Sized>(
    ctx: &LocalContext<'_>,
    planner: &Planner,
    models: &Models,
    source: &S,
) -> Result<LocalPlan, PlannerError> {
    let model = |head: HeadKind| {
        models.get(head).ok_or_else(|| PlannerError::MissingModel {
            planner: planner.name().to_string(),
            head,
        })
    };
    let angles: Vec<f64> = match planner.kind {
        PlannerKind::Exhaustive => {
            exhaustive_angles(ctx.exhaustive_angles, ctx.trajectory.angle_range)
        }
        PlannerKind::LearnedCartesian | PlannerKind::LearnedPerceptionSpace => {
            let conf = predict_confidences(model(HeadKind::CollisionFree)?, ctx.scan)?;
            select_candidates(&conf, ctx.goal_angle(), ctx.trajectory, &planner.sampler)?
                .indices
                .iter()
                .map(|&i| ctx.trajectory.angle(i))
                .collect()
        }
        PlannerKind::NaiveLearned => {
            let conf = predict_confidences(model(HeadKind::CollisionFree)?, ctx.scan)?;
            let sampler = SamplerConfig {
                mode: SamplingMode::NaiveArgmax,
                ..planner.sampler
            };
            let set = select_candidates(&conf, ctx.goal_angle(), ctx.trajectory, &sampler)?;
            return Ok(unchecked(ctx, ctx.trajectory.angle(set.indices[0])));
        }
        PlannerKind::Regression { goal_informed } => {
            let angle = if goal_informed {
                predict_angle(
                    model(HeadKind::RegressAngleGoal)?,
                    ctx.scan,
                    Some(ctx.goal_angle()),
                )?
            } else {
                predict_angle(model(HeadKind::RegressAngle)?, ctx.scan, None)?
            };
            let range = ctx.trajectory.angle_range;
            let angle = if angle.is_finite() {
                angle.clamp(-range, range)
            } else {
                0.0
            };
            return Ok(unchecked(ctx, angle));
        }
    };

    let local_goal = ctx.local_goal();
    let scoring = ScoringContext {
        path: ctx.path,
        goal: ctx.goal,
        local_goal,
        distance_scale: ctx.trajectory.max_path_length,
        robot_radius: ctx.trajectory.robot_radius,
        check_from: 1,
    };
    let mut best: Option<(f64, VelocityProfile, PoseSequence)> = None;
    for &angle in &angles {
        let (profile, poses) = ctx.rollout_poses(angle);
        if let Score::Cost { total, .. } = score_candidate(&poses, &scoring, ctx.weights, source) {
            if best.as_ref().map_or(true, |b| total < b.0) {
                best = Some((total, profile, poses));
            }
        }
    }
    Ok(LocalPlan {
        selected: best.map(|(_, profile, poses)| (profile, poses)),
        evaluated: angles.len(),
        angles,
    })
}

fn unchecked(ctx: &LocalContext<'_>, angle: f64) -> LocalPlan {
    LocalPlan {
        selected: Some(ctx.rollout_poses(angle)),
        evaluated: 1,
        angles: vec![angle],
    }
}
