//! Closed-loop simulation of one navigation trial.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use super::global::{plan_global, GlobalPath};
use super::grid::{GridClearance, OccupancyGrid};
use super::local::{plan_local, LocalContext, Models, Planner, PlannerError, PlannerKind};
use super::scoring::CostWeights;
use crate::geometry::{BeamHit, ObstacleSource, Point2, Pose2D, Scene, SensorConfig};
use crate::trajectory::{first_collision_from, PoseSequence, TrajectoryConfig, VelocityProfile};

const SURFACE_BINS: usize = 64;
/// How far along an obstacle's boundary an observation vouches for.
const SEEN_ARC: f64 = 0.1;

fn surface_bin(angle: f64) -> usize {
    let unit = (angle + PI) / TAU;
    ((unit * SURFACE_BINS as f64) as usize).min(SURFACE_BINS - 1)
}

/// Headings closer than this to the new path are left alone after a replan.
const FACE_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecoveryMode {
    Disabled,
    /// Block the wedge ahead in the grid, replan the global path and turn
    /// toward it.
    GlobalReplan,
    /// Turn a full circle in place while mapping.
    Rotate360,
}

impl RecoveryMode {
    pub fn name(self) -> &'static str {
        match self {
            RecoveryMode::Disabled => "none",
            RecoveryMode::GlobalReplan => "global-replan",
            RecoveryMode::Rotate360 => "rotate360",
        }
    }
}

impl fmt::Display for RecoveryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RecoveryMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" | "disabled" => Ok(RecoveryMode::Disabled),
            "global-replan" => Ok(RecoveryMode::GlobalReplan),
            "rotate360" => Ok(RecoveryMode::Rotate360),
            other => Err(format!("unknown recovery mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeConfig {
    /// Timer between replans for all planners except perception-space.
    pub replan_period: f64,
    /// Share of its plan the perception-space planner executes before
    /// replanning.
    pub completion_fraction: f64,
    pub control_step: f64,
    pub goal_tolerance: f64,
    pub timeout: f64,
    pub recovery: RecoveryMode,
    pub max_recoveries: usize,
    /// Let the perception-space planner replan early when the remainder of
    /// its plan runs into the current scan.
    pub predict_collisions: bool,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            replan_period: 1.0,
            completion_fraction: 0.6,
            control_step: 0.05,
            goal_tolerance: 0.5,
            timeout: 120.0,
            recovery: RecoveryMode::Disabled,
            max_recoveries: 3,
            predict_collisions: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NavConfig {
    pub sensor: SensorConfig,
    pub trajectory: TrajectoryConfig,
    pub weights: CostWeights,
    pub episode: EpisodeConfig,
    pub grid_resolution: f64,
    pub lookahead: f64,
    /// Length of the planner's rollouts.
    pub planning_horizon: f64,
    /// Added to the robot radius when checking candidates. Map and scan
    /// points sample surfaces, so clearance to them runs slightly high.
    pub collision_margin: f64,
    pub exhaustive_angles: usize,
    /// Wedge pinned before a global replan; `None` replans on the grid as is.
    pub recovery_wedge: Option<RecoveryWedge>,
    /// After a global replan the robot turns to face the path point this
    /// far along.
    pub recovery_face_distance: f64,
}

/// Region a global-replan recovery marks as blocked: the bearings of the
/// rejected candidates widened by `margin`, between `near` and `far`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryWedge {
    pub margin: f64,
    pub near: f64,
    pub far: f64,
}

impl Default for RecoveryWedge {
    fn default() -> Self {
        Self {
            margin: 0.1,
            near: 0.5,
            far: 2.0,
        }
    }
}

impl Default for NavConfig {
    fn default() -> Self {
        Self {
            sensor: SensorConfig::default(),
            trajectory: TrajectoryConfig::default(),
            weights: CostWeights::default(),
            episode: EpisodeConfig::default(),
            grid_resolution: 0.1,
            lookahead: 3.0,
            planning_horizon: 4.0,
            collision_margin: 0.01,
            exhaustive_angles: 200,
            recovery_wedge: None,
            recovery_face_distance: 0.3,
        }
    }
}

impl NavConfig {
    pub fn planning_trajectory(&self) -> TrajectoryConfig {
        TrajectoryConfig {
            max_path_length: self.planning_horizon,
            robot_radius: self.trajectory.robot_radius + self.collision_margin,
            ..self.trajectory
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Success,
    Collision,
    Stuck,
    Timeout,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::Collision => "collision",
            Outcome::Stuck => "stuck",
            Outcome::Timeout => "timeout",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Outcome {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            Outcome::Success,
            Outcome::Collision,
            Outcome::Stuck,
            Outcome::Timeout,
        ]
        .into_iter()
        .find(|o| o.name() == s)
        .ok_or_else(|| format!("unknown outcome `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub outcome: Outcome,
    pub elapsed: f64,
    pub path_length: f64,
    pub candidates: usize,
    pub replans: usize,
    pub recoveries: usize,
    /// For collisions: whether an earlier scan had observed the part of the
    /// obstacle (within `SEEN_ARC` of the contact point) or wall that was hit.
    pub collided_with_seen: Option<bool>,
}

struct ActivePlan {
    origin: Pose2D,
    started_step: usize,
    profile: VelocityProfile,
    poses: PoseSequence,
    length: f64,
    duration: f64,
}

struct Episode<'a> {
    scene: &'a Scene,
    goal: Point2,
    planner: &'a Planner,
    models: &'a Models,
    nav: &'a NavConfig,
    plan_traj: TrajectoryConfig,
    grid: OccupancyGrid,
    path: GlobalPath,
    pose: Pose2D,
    step: usize,
    path_length: f64,
    candidates: usize,
    replans: usize,
    recoveries: usize,
    /// Per obstacle, which of `SURFACE_BINS` equal arcs of its boundary a
    /// beam has hit.
    seen: Vec<Vec<bool>>,
    seen_boundary: bool,
    /// Bearing span of the candidates rejected at the last failed replan.
    rejected: Option<(f64, f64)>,
}

impl Episode<'_> {
    fn time(&self) -> f64 {
        self.step as f64 * self.nav.episode.control_step
    }

    fn sense(&mut self) -> crate::geometry::DepthScan {
        let (scan, hits) = self.scene.raycast_with_hits(&self.pose, &self.nav.sensor);
        for (beam, hit) in hits.into_iter().enumerate() {
            match hit {
                BeamHit::Obstacle(i) => {
                    let end = self.pose.to_world(Point2::from_polar(
                        scan.ranges[beam],
                        scan.config.beam_angle(beam),
                    ));
                    let bin = surface_bin((end - self.scene.obstacles[i].center).angle());
                    self.seen[i][bin] = true;
                }
                BeamHit::Boundary => self.seen_boundary = true,
                BeamHit::Nothing => {}
            }
        }
        self.grid.update_occupancy(&self.pose, &scan);
        scan
    }

    fn result(&self, outcome: Outcome, collided_with_seen: Option<bool>) -> TrialResult {
        TrialResult {
            outcome,
            elapsed: self.time(),
            path_length: self.path_length,
            candidates: self.candidates,
            replans: self.replans,
            recoveries: self.recoveries,
            collided_with_seen,
        }
    }

    fn collision(&self) -> Option<bool> {
        let r = self.nav.trajectory.robot_radius;
        let p = self.pose.position();
        if self.scene.clearance(p) >= r {
            return None;
        }
        Some(match self.scene.nearest_obstacle(p) {
            Some((i, d)) if d < r => {
                let o = &self.scene.obstacles[i];
                let contact = surface_bin((p - o.center).angle());
                let reach = (SEEN_ARC / (o.radius * TAU / SURFACE_BINS as f64)).ceil() as usize;
                (0..=2 * reach)
                    .any(|k| self.seen[i][(contact + SURFACE_BINS + k - reach) % SURFACE_BINS])
            }
            _ => self.seen_boundary,
        })
    }

    /// Turn in place by `angle` at the yaw-rate limit, mapping as we go.
    fn rotate(&mut self, angle: f64) {
        let per_step = self.nav.trajectory.max_yaw_rate * self.nav.episode.control_step;
        let n = (angle.abs() / per_step - 1e-9).ceil().max(0.0) as usize;
        let start = self.pose.heading();
        for k in 1..=n {
            self.pose.set_heading(start + angle * k as f64 / n as f64);
            self.step += 1;
            self.sense();
        }
    }

    fn should_replan(&self, plan: &ActivePlan, scan: &crate::geometry::DepthScan) -> bool {
        let ep = &self.nav.episode;
        let elapsed = (self.step - plan.started_step) as f64 * ep.control_step;
        if self.planner.kind != PlannerKind::LearnedPerceptionSpace {
            return elapsed >= ep.replan_period - 1e-9;
        }
        if elapsed * plan.profile.speed >= ep.completion_fraction * plan.length - 1e-9 {
            return true;
        }
        if ep.predict_collisions {
            let from = (elapsed / self.plan_traj.time_step).ceil() as usize;
            let points = scan.hit_points(&self.pose);
            return first_collision_from(
                &plan.poses,
                &points,
                self.plan_traj.robot_radius,
                from.max(1),
            )
            .is_some();
        }
        false
    }

    fn replan(
        &mut self,
        scan: &crate::geometry::DepthScan,
    ) -> Result<Option<ActivePlan>, PlannerError> {
        let ctx = LocalContext {
            pose: self.pose,
            scan,
            goal: self.goal,
            path: &self.path,
            lookahead: self.nav.lookahead,
            goal_tolerance: self.nav.episode.goal_tolerance,
            trajectory: &self.plan_traj,
            weights: &self.nav.weights,
            exhaustive_angles: self.nav.exhaustive_angles,
        };
        let plan = if self.planner.kind == PlannerKind::LearnedPerceptionSpace {
            plan_local(
                &ctx,
                self.planner,
                self.models,
                &scan.hit_points(&self.pose),
            )?
        } else {
            let source = GridClearance {
                grid: &self.grid,
                horizon: 1.0,
            };
            plan_local(&ctx, self.planner, self.models, &source)?
        };
        self.replans += 1;
        self.candidates += plan.evaluated;
        if plan.selected.is_none() {
            let lo = plan.angles.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = plan
                .angles
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            self.rejected = (lo <= hi).then_some((lo, hi));
        }
        Ok(plan.selected.map(|(profile, poses)| {
            let length = poses.total_length();
            ActivePlan {
                origin: self.pose,
                started_step: self.step,
                duration: length / profile.speed,
                profile,
                poses,
                length,
            }
        }))
    }

    /// Returns false when recovery is impossible.
    fn recover(&mut self) -> bool {
        let ep = self.nav.episode;
        if ep.recovery == RecoveryMode::Disabled || self.recoveries >= ep.max_recoveries {
            return false;
        }
        self.recoveries += 1;
        match ep.recovery {
            RecoveryMode::Disabled => false,
            RecoveryMode::GlobalReplan => {
                if let Some(w) = self.nav.recovery_wedge {
                    let range = self.plan_traj.angle_range;
                    let (lo, hi) = self.rejected.unwrap_or((-range, range));
                    self.grid
                        .pin_wedge(&self.pose, lo - w.margin, hi + w.margin, w.near, w.far);
                }
                let radius = self.nav.trajectory.robot_radius;
                match plan_global(&self.grid, self.pose.position(), self.goal, radius) {
                    Ok(path) => {
                        let ahead = path
                            .point_at(self.nav.recovery_face_distance)
                            .unwrap_or(self.goal);
                        self.path = path;
                        if ahead != self.pose.position() {
                            let turn = self.pose.bearing_to(ahead);
                            if turn.abs() > FACE_TOLERANCE {
                                self.rotate(turn);
                            }
                        }
                        true
                    }
                    Err(_) => false,
                }
            }
            RecoveryMode::Rotate360 => {
                let heading = self.pose.heading();
                self.rotate(TAU);
                self.pose.set_heading(heading);
                true
            }
        }
    }
}

/// Drive from `start` toward `goal` until success, collision, a dead end
/// or the timeout.
pub fn run_episode(
    scene: &Scene,
    start: Pose2D,
    goal: Point2,
    planner: &Planner,
    models: &Models,
    nav: &NavConfig,
) -> Result<TrialResult, PlannerError> {
    models.check(planner)?;
    let grid = OccupancyGrid::new(scene.bounds, nav.grid_resolution);
    let path = plan_global(&grid, start.position(), goal, nav.trajectory.robot_radius)
        .unwrap_or_else(|_| GlobalPath::empty());
    let mut ep = Episode {
        scene,
        goal,
        planner,
        models,
        nav,
        plan_traj: nav.planning_trajectory(),
        grid,
        path,
        pose: start,
        step: 0,
        path_length: 0.0,
        candidates: 0,
        replans: 0,
        recoveries: 0,
        seen: vec![vec![false; SURFACE_BINS]; scene.obstacles.len()],
        seen_boundary: false,
        rejected: None,
    };
    if let Some(seen) = ep.collision() {
        return Ok(ep.result(Outcome::Collision, Some(seen)));
    }
    let cfg = nav.episode;
    let max_steps = (cfg.timeout / cfg.control_step - 1e-9).ceil() as usize;
    let mut active: Option<ActivePlan> = None;
    loop {
        if ep.pose.position().distance(goal) <= cfg.goal_tolerance {
            return Ok(ep.result(Outcome::Success, None));
        }
        if ep.step >= max_steps {
            return Ok(ep.result(Outcome::Timeout, None));
        }
        let scan = ep.sense();
        let due = active
            .as_ref()
            .map_or(true, |plan| ep.should_replan(plan, &scan));
        if due {
            match ep.replan(&scan)? {
                Some(plan) => active = Some(plan),
                None => {
                    if !ep.recover() {
                        return Ok(ep.result(Outcome::Stuck, None));
                    }
                    active = None;
                    continue;
                }
            }
        }
        let Some(plan) = active.as_ref() else {
            continue;
        };
        let elapsed =
            ((ep.step + 1 - plan.started_step) as f64 * cfg.control_step).min(plan.duration);
        let next = plan.profile.pose_at(&plan.origin, elapsed);
        ep.path_length += next.position().distance(ep.pose.position());
        ep.pose = next;
        ep.step += 1;
        if elapsed >= plan.duration - 1e-9 {
            active = None;
        }
        if let Some(seen) = ep.collision() {
            return Ok(ep.result(Outcome::Collision, Some(seen)));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Obstacle, Rect};
    use crate::sampler::SamplingMode;

    fn exhaustive() -> Planner {
        Planner::new(PlannerKind::Exhaustive, SamplingMode::GaussianBias)
    }

    #[test]
    fn unobstructed_run_reaches_goal() {
        let scene = Scene::empty(Rect::new(0.0, -3.0, 10.0, 3.0));
        let r = run_episode(
            &scene,
            Pose2D::new(1.0, 0.0, 0.0),
            Point2::new(9.0, 0.0),
            &exhaustive(),
            &Models::default(),
            &NavConfig::default(),
        )
        .unwrap();
        assert_eq!(r.outcome, Outcome::Success);
        // goal tolerance stops the run short of the full 8 m
        assert!(
            (r.path_length - 7.5).abs() < 0.05 * 8.0,
            "{}",
            r.path_length
        );
        assert_eq!(r.candidates, 200 * r.replans);
    }

    #[test]
    fn ring_of_obstacles_never_succeeds() {
        let mut scene = Scene::empty(Rect::new(-5.0, -5.0, 5.0, 5.0));
        for i in 0..16 {
            let a = TAU * i as f64 / 16.0;
            scene = scene.with_obstacle(Obstacle::new(Point2::from_polar(0.7, a), 0.15));
        }
        let r = run_episode(
            &scene,
            Pose2D::new(0.0, 0.0, 0.0),
            Point2::new(4.0, 0.0),
            &exhaustive(),
            &Models::default(),
            &NavConfig::default(),
        )
        .unwrap();
        assert!(matches!(r.outcome, Outcome::Stuck | Outcome::Collision));
    }

    #[test]
    fn wall_ahead_without_recovery_is_stuck() {
        let mut scene = Scene::empty(Rect::new(0.0, -3.0, 10.0, 3.0));
        for i in 0..31 {
            scene =
                scene.with_obstacle(Obstacle::new(Point2::new(2.0, -3.0 + 0.2 * i as f64), 0.15));
        }
        let r = run_episode(
            &scene,
            Pose2D::new(1.0, 0.0, 0.0),
            Point2::new(9.0, 0.0),
            &exhaustive(),
            &Models::default(),
            &NavConfig::default(),
        )
        .unwrap();
        assert_eq!(r.outcome, Outcome::Stuck);
        assert_eq!(r.replans, 1);
    }

    #[test]
    fn episodes_are_deterministic() {
        let scene = Scene::empty(Rect::new(0.0, -3.0, 10.0, 3.0))
            .with_obstacle(Obstacle::new(Point2::new(4.0, 0.1), 0.28))
            .with_obstacle(Obstacle::new(Point2::new(6.5, -0.6), 0.28));
        let run = || {
            run_episode(
                &scene,
                Pose2D::new(1.0, 0.0, 0.0),
                Point2::new(9.0, 0.0),
                &exhaustive(),
                &Models::default(),
                &NavConfig::default(),
            )
            .unwrap()
        };
        let a = run();
        assert_eq!(a, run());
        assert_eq!(a.outcome, Outcome::Success);
    }

    #[test]
    fn learned_planner_without_model_is_an_error() {
        let scene = Scene::empty(Rect::new(0.0, -3.0, 10.0, 3.0));
        let planner: Planner = "cartesian-gaussian".parse().unwrap();
        assert!(matches!(
            run_episode(
                &scene,
                Pose2D::new(1.0, 0.0, 0.0),
                Point2::new(9.0, 0.0),
                &planner,
                &Models::default(),
                &NavConfig::default()
            ),
            Err(PlannerError::MissingModel { .. })
        ));
    }
}
