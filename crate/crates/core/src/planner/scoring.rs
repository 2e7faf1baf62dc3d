//! Five-term trajectory cost.

use std::f64::consts::PI;

use super::global::GlobalPath;
use crate::geometry::{wrap_angle, ObstacleSource, Point2};
use crate::trajectory::{segment_clear, PoseSequence};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostWeights {
    pub goal_heading: f64,
    pub path_heading: f64,
    pub path_distance: f64,
    pub goal_distance: f64,
    pub obstacle: f64,
    /// Distance of the virtual nose point ahead of the robot.
    pub nose_offset: f64,
    pub safe_clearance: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            goal_heading: 1.0,
            path_heading: 1.0,
            path_distance: 2.0,
            goal_distance: 2.0,
            obstacle: 3.0,
            nose_offset: 0.2,
            safe_clearance: 0.3,
        }
    }
}

impl CostWeights {
    pub fn is_valid(&self) -> bool {
        [
            self.goal_heading,
            self.path_heading,
            self.path_distance,
            self.goal_distance,
            self.obstacle,
        ]
        .iter()
        .all(|w| *w >= 0.0)
            && self.nose_offset > 0.0
            && self.safe_clearance > 0.0
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            goal_heading: self.goal_heading * factor,
            path_heading: self.path_heading * factor,
            path_distance: self.path_distance * factor,
            goal_distance: self.goal_distance * factor,
            obstacle: self.obstacle * factor,
            ..*self
        }
    }
}

/// Unweighted cost terms, each roughly in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostTerms {
    pub goal_heading: f64,
    pub path_heading: f64,
    pub path_distance: f64,
    pub goal_distance: f64,
    pub obstacle: f64,
}

impl CostTerms {
    pub fn weighted(&self, w: &CostWeights) -> f64 {
        w.goal_heading * self.goal_heading
            + w.path_heading * self.path_heading
            + w.path_distance * self.path_distance
            + w.goal_distance * self.goal_distance
            + w.obstacle * self.obstacle
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Score {
    Rejected,
    Cost { total: f64, terms: CostTerms },
}

impl Score {
    pub fn total(&self) -> Option<f64> {
        match self {
            Score::Rejected => None,
            Score::Cost { total, .. } => Some(*total),
        }
    }
}

/// What a candidate is scored against.
#[derive(Debug, Clone, Copy)]
pub struct ScoringContext<'a> {
    pub path: &'a GlobalPath,
    pub goal: Point2,
    /// Path point a fixed lookahead beyond the robot's projection.
    pub local_goal: Point2,
    /// Divisor for the distance terms.
    pub distance_scale: f64,
    pub robot_radius: f64,
    /// Poses before this index are not collision checked.
    pub check_from: usize,
}

/// Score a pose sequence. Any checked pose, or stretch between consecutive
/// poses, closer than the robot radius to an obstacle rejects the candidate; otherwise the cost is the weighted sum
/// of the five terms. Without a path, the path terms reuse the goal terms.
pub fn score_candidate<S: ObstacleSource + ?Sized>(
    poses: &PoseSequence,
    ctx: &ScoringContext<'_>,
    weights: &CostWeights,
    source: &S,
) -> Score {
    let Some(end) = poses.last() else {
        return Score::Rejected;
    };
    let mut min_clearance = f64::INFINITY;
    let mut prev: Option<(Point2, f64)> = None;
    for p in poses.poses.iter().skip(ctx.check_from) {
        let at = p.position();
        let c = source.clearance(at);
        let grazed =
            prev.is_some_and(|(a, ca)| !segment_clear(source, a, at, ca, c, ctx.robot_radius));
        if c < ctx.robot_radius || grazed {
            return Score::Rejected;
        }
        min_clearance = min_clearance.min(c);
        prev = Some((at, c));
    }
    let end_pos = end.position();
    let heading = end.heading();
    let goal_heading = if end_pos == ctx.goal {
        0.0
    } else {
        wrap_angle(heading - (ctx.goal - end_pos).angle()).abs() / PI
    };
    let goal_distance = end_pos.distance(ctx.local_goal) / ctx.distance_scale;
    let nose = end_pos + Point2::from_polar(weights.nose_offset, heading);
    let (path_heading, path_distance) = match (ctx.path.project(nose), ctx.path.project(end_pos)) {
        (Some(at_nose), Some(at_end)) if ctx.path.points.len() >= 2 => (
            wrap_angle(heading - at_nose.tangent).abs() / PI,
            at_end.distance / ctx.distance_scale,
        ),
        _ => (goal_heading, goal_distance),
    };
    let obstacle = if min_clearance.is_finite() {
        (weights.safe_clearance - min_clearance).max(0.0) / weights.safe_clearance
    } else {
        0.0
    };
    let terms = CostTerms {
        goal_heading,
        path_heading,
        path_distance,
        goal_distance,
        obstacle,
    };
    Score::Cost {
        total: terms.weighted(weights),
        terms,
    }
}
