//! Turning per-angle confidences and a goal into a handful of candidates.

use thiserror::Error;

use crate::geometry::{Point2, Pose2D};
use crate::trajectory::TrajectoryConfig;

#[derive(Debug, Error, PartialEq)]
pub enum SamplerError {
    #[error("goal coincides with the robot position")]
    GoalAtRobot,
    #[error("{confidences} confidences for {angles} angles")]
    LengthMismatch { confidences: usize, angles: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    /// Top-k of the raw confidences plus the grid angle facing the goal.
    ToGoal,
    /// Top-k of the confidences weighted by a Gaussian around the goal angle.
    GaussianBias,
    /// The single best goal-weighted angle.
    NaiveArgmax,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub k: usize,
    pub bias_sigma: f64,
    pub mode: SamplingMode,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            k: 5,
            bias_sigma: 0.2,
            mode: SamplingMode::GaussianBias,
        }
    }
}

impl SamplerConfig {
    pub fn with_mode(mode: SamplingMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }

    pub fn is_valid(&self, angle_count: usize) -> bool {
        (1..=angle_count).contains(&self.k) && self.bias_sigma > 0.0
    }
}

/// Angle indices ordered by descending weight, with their weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.contains(&index)
    }
}

/// Body-frame bearing to the goal, clamped to the trajectory fan.
pub fn goal_departure_angle(
    pose: &Pose2D,
    goal: Point2,
    angle_range: f64,
) -> Result<f64, SamplerError> {
    if pose.position().distance(goal) == 0.0 {
        return Err(SamplerError::GoalAtRobot);
    }
    Ok(pose.bearing_to(goal).clamp(-angle_range, angle_range))
}

/// `w_i = c_i exp(-(θ_i - goal)^2 / 2σ^2)`, unnormalized.
pub fn gaussian_goal_bias(
    confidences: &[f64],
    angles: &[f64],
    goal_angle: f64,
    sigma: f64,
) -> Vec<f64> {
    confidences
        .iter()
        .zip(angles)
        .map(|(c, theta)| {
            let d = theta - goal_angle;
            c * (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect()
}

/// The `k` heaviest angles. Ties go to the angle nearer the goal, then to
/// the lower index.
pub fn select_top_k(weights: &[f64], angles: &[f64], goal_angle: f64, k: usize) -> CandidateSet {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        weights[b]
            .total_cmp(&weights[a])
            .then_with(|| {
                (angles[a] - goal_angle)
                    .abs()
                    .total_cmp(&(angles[b] - goal_angle).abs())
            })
            .then(a.cmp(&b))
    });
    order.truncate(k);
    CandidateSet {
        weights: order.iter().map(|&i| weights[i]).collect(),
        indices: order,
    }
}

/// Append the grid angle nearest the goal unless it is already present.
pub fn to_goal_augment(
    mut set: CandidateSet,
    goal_angle: f64,
    config: &TrajectoryConfig,
    weights: &[f64],
) -> CandidateSet {
    let goal_index = config.nearest_index(goal_angle);
    if !set.contains(goal_index) {
        set.indices.push(goal_index);
        set.weights
            .push(weights.get(goal_index).copied().unwrap_or(0.0));
    }
    set
}

/// Full candidate selection for one replan.
pub fn select_candidates(
    confidences: &[f64],
    goal_angle: f64,
    trajectory: &TrajectoryConfig,
    sampler: &SamplerConfig,
) -> Result<CandidateSet, SamplerError> {
    if confidences.len() != trajectory.angle_count {
        return Err(SamplerError::LengthMismatch {
            confidences: confidences.len(),
            angles: trajectory.angle_count,
        });
    }
    let angles = trajectory.angles();
    Ok(match sampler.mode {
        SamplingMode::ToGoal => {
            let top = select_top_k(confidences, &angles, goal_angle, sampler.k);
            to_goal_augment(top, goal_angle, trajectory, confidences)
        }
        SamplingMode::GaussianBias => {
            let w = gaussian_goal_bias(confidences, &angles, goal_angle, sampler.bias_sigma);
            select_top_k(&w, &angles, goal_angle, sampler.k)
        }
        SamplingMode::NaiveArgmax => {
            let w = gaussian_goal_bias(confidences, &angles, goal_angle, sampler.bias_sigma);
            select_top_k(&w, &angles, goal_angle, 1)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> (TrajectoryConfig, Vec<f64>) {
        let c = TrajectoryConfig::default();
        let a = c.angles();
        (c, a)
    }

    #[test]
    fn goal_angle_examples() {
        let pose = Pose2D::new(1.0, 1.0, 0.5);
        let ahead = pose.to_world(Point2::new(3.0, 0.0));
        assert!(goal_departure_angle(&pose, ahead, 0.4).unwrap().abs() < 1e-12);
        let off = pose.to_world(Point2::from_polar(2.0, 0.2));
        assert!((goal_departure_angle(&pose, off, 0.4).unwrap() - 0.2).abs() < 1e-12);
        let wide = pose.to_world(Point2::from_polar(2.0, 1.5));
        assert_eq!(goal_departure_angle(&pose, wide, 0.4).unwrap(), 0.4);
        assert_eq!(
            goal_departure_angle(&pose, pose.position(), 0.4),
            Err(SamplerError::GoalAtRobot)
        );
    }

    #[test]
    fn bias_is_unit_at_goal() {
        let (_, angles) = grid();
        let c: Vec<f64> = (0..51).map(|i| 0.1 + i as f64 / 100.0).collect();
        let w = gaussian_goal_bias(&c, &angles, angles[30], 0.2);
        assert_eq!(w[30], c[30]);
        assert!(w.iter().zip(&c).all(|(w, c)| w <= c));
    }

    #[test]
    fn uniform_bias_is_symmetric_and_peaks_at_goal() {
        let (_, angles) = grid();
        let w = gaussian_goal_bias(&[0.7; 51], &angles, 0.0, 0.2);
        let top = select_top_k(&w, &angles, 0.0, 1);
        assert_eq!(top.indices, vec![25]);
        for i in 0..25 {
            assert!((w[i] - w[50 - i]).abs() < 1e-15);
        }
        let w = gaussian_goal_bias(&[0.7; 51], &angles, 0.4, 0.2);
        assert_eq!(select_top_k(&w, &angles, 0.4, 1).indices, vec![50]);
    }

    #[test]
    fn top_k_examples() {
        let (_, angles) = grid();
        let w: Vec<f64> = (0..51).map(|i| ((i * 37) % 51) as f64).collect();
        let all = select_top_k(&w, &angles, 0.0, 51);
        assert_eq!(all.len(), 51);
        assert!(all.weights.windows(2).all(|p| p[0] >= p[1]));
        let best = select_top_k(&w, &angles, 0.0, 1);
        assert_eq!(w[best.indices[0]], 50.0);
        let ties = select_top_k(&[1.0; 51], &angles, 0.0, 3);
        assert_eq!(ties.indices, vec![25, 24, 26]);
    }

    #[test]
    fn augment_examples() {
        let (c, angles) = grid();
        let w = vec![0.5; 51];
        let set = select_top_k(&w, &angles, 0.0, 3);
        assert_eq!(to_goal_augment(set.clone(), 0.0, &c, &w), set);
        let grown = to_goal_augment(set.clone(), 0.3, &c, &w);
        assert_eq!(grown.len(), 4);
        assert_eq!(grown.indices[3], c.nearest_index(0.3));
        assert_eq!(to_goal_augment(grown.clone(), 0.3, &c, &w), grown);
    }

    #[test]
    fn modes_respect_budget() {
        let (c, _) = grid();
        let conf: Vec<f64> = (0..51).map(|i| (i as f64 * 0.3).sin().abs()).collect();
        for (mode, max) in [
            (SamplingMode::ToGoal, 6),
            (SamplingMode::GaussianBias, 5),
            (SamplingMode::NaiveArgmax, 1),
        ] {
            let set = select_candidates(&conf, 0.17, &c, &SamplerConfig::with_mode(mode)).unwrap();
            assert!(set.len() <= max && !set.is_empty());
        }
        assert!(matches!(
            select_candidates(&conf[..50], 0.0, &c, &SamplerConfig::default()),
            Err(SamplerError::LengthMismatch { .. })
        ));
    }
}
