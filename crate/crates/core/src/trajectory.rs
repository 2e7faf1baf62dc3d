//! Departure-angle trajectory family, collision checking and distance labels.
//!
//! A trajectory turns at the maximum yaw rate until the heading offset equals
//! the departure angle, then drives straight, all at constant forward speed.
//! Poses are evaluated in closed form from elapsed time, so a sequence sampled
//! at any step size lies exactly on the same curve.

use crate::geometry::{ObstacleSource, Point2, Pose2D, Scene};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryConfig {
    /// Odd so that the straight-ahead angle is part of the family.
    pub angle_count: usize,
    /// Angles span `[-angle_range, angle_range]` inclusive.
    pub angle_range: f64,
    pub forward_speed: f64,
    pub max_yaw_rate: f64,
    pub time_step: f64,
    pub max_path_length: f64,
    pub robot_radius: f64,
    /// Clear distance at or above which an angle counts as collision free.
    pub label_threshold: f64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            angle_count: 51,
            angle_range: 0.4,
            forward_speed: 0.5,
            max_yaw_rate: 1.0,
            time_step: 0.1,
            max_path_length: 5.0,
            robot_radius: 0.18,
            label_threshold: 4.0,
        }
    }
}

impl TrajectoryConfig {
    pub fn is_valid(&self) -> bool {
        self.angle_count >= 3
            && self.angle_count % 2 == 1
            && self.angle_range > 0.0
            && self.forward_speed > 0.0
            && self.max_yaw_rate > 0.0
            && self.time_step > 0.0
            && self.max_path_length > 0.0
            && self.robot_radius >= 0.0
    }

    pub fn angle(&self, i: usize) -> f64 {
        self.angle_range * (2.0 * i as f64 / (self.angle_count - 1) as f64 - 1.0)
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.angle_count).map(|i| self.angle(i)).collect()
    }

    pub fn center_index(&self) -> usize {
        self.angle_count / 2
    }

    /// Grid angle closest to `angle`; ties go to the lower index.
    pub fn nearest_index(&self, angle: f64) -> usize {
        let step = 2.0 * self.angle_range / (self.angle_count - 1) as f64;
        let pos = ((angle + self.angle_range) / step).clamp(0.0, (self.angle_count - 1) as f64);
        let lower = pos.floor();
        (if pos - lower <= 0.5 {
            lower
        } else {
            lower + 1.0
        }) as usize
    }
}

/// Controls of one turn-then-straight trajectory, evaluated in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityProfile {
    pub departure_angle: f64,
    pub speed: f64,
    pub max_yaw_rate: f64,
}

impl VelocityProfile {
    pub fn new(departure_angle: f64, config: &TrajectoryConfig) -> Self {
        Self {
            departure_angle,
            speed: config.forward_speed,
            max_yaw_rate: config.max_yaw_rate,
        }
    }

    pub fn turn_duration(&self) -> f64 {
        self.departure_angle.abs() / self.max_yaw_rate
    }

    /// Commanded `(v, omega)` at elapsed time `t`.
    pub fn command_at(&self, t: f64) -> (f64, f64) {
        if t < self.turn_duration() {
            (self.speed, self.max_yaw_rate.copysign(self.departure_angle))
        } else {
            (self.speed, 0.0)
        }
    }

    /// Pose reached from `start` after `t` seconds.
    pub fn pose_at(&self, start: &Pose2D, t: f64) -> Pose2D {
        let h0 = start.heading();
        let v = self.speed;
        let turn = self.turn_duration();
        if turn == 0.0 {
            let d = v * t;
            return Pose2D::new(start.x + d * h0.cos(), start.y + d * h0.sin(), h0);
        }
        let omega = self.max_yaw_rate.copysign(self.departure_angle);
        let tau = t.min(turn);
        let h1 = if t >= turn {
            h0 + self.departure_angle
        } else {
            h0 + self.departure_angle * (tau / turn)
        };
        let r = v / omega;
        let mut x = start.x + r * (h1.sin() - h0.sin());
        let mut y = start.y - r * (h1.cos() - h0.cos());
        if t > turn {
            let d = v * (t - turn);
            x += d * h1.cos();
            y += d * h1.sin();
        }
        Pose2D::new(x, y, h1)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PoseSequence {
    pub poses: Vec<Pose2D>,
    /// Arc length travelled when each pose is reached.
    pub cumulative_length: Vec<f64>,
}

impl PoseSequence {
    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn last(&self) -> Option<&Pose2D> {
        self.poses.last()
    }

    pub fn total_length(&self) -> f64 {
        self.cumulative_length.last().copied().unwrap_or(0.0)
    }

    pub fn truncated(&self, len: usize) -> Self {
        let len = len.min(self.len());
        Self {
            poses: self.poses[..len].to_vec(),
            cumulative_length: self.cumulative_length[..len].to_vec(),
        }
    }
}

/// Sample the trajectory for `departure_angle` every `time_step` seconds
/// until `max_path_length` of arc has been travelled.
pub fn generate_poses(
    start: &Pose2D,
    departure_angle: f64,
    config: &TrajectoryConfig,
) -> PoseSequence {
    generate_poses_with(
        start,
        &VelocityProfile::new(departure_angle, config),
        config,
    )
}

pub(crate) fn generate_poses_with(
    start: &Pose2D,
    profile: &VelocityProfile,
    config: &TrajectoryConfig,
) -> PoseSequence {
    let total_time = config.max_path_length / profile.speed;
    let steps = (total_time / config.time_step - 1e-9).ceil().max(0.0) as usize;
    let mut poses = Vec::with_capacity(steps + 1);
    let mut cumulative_length = Vec::with_capacity(steps + 1);
    poses.push(*start);
    cumulative_length.push(0.0);
    for k in 1..=steps {
        let t = (k as f64 * config.time_step).min(total_time);
        poses.push(profile.pose_at(start, t));
        cumulative_length.push((profile.speed * t).min(config.max_path_length));
    }
    PoseSequence {
        poses,
        cumulative_length,
    }
}

/// Index of the first pose whose disc footprint touches an obstacle.
pub fn first_collision<S: ObstacleSource + ?Sized>(
    poses: &PoseSequence,
    source: &S,
    robot_radius: f64,
) -> Option<usize> {
    first_collision_from(poses, source, robot_radius, 0)
}

pub(crate) fn first_collision_from<S: ObstacleSource + ?Sized>(
    poses: &PoseSequence,
    source: &S,
    robot_radius: f64,
    from: usize,
) -> Option<usize> {
    let mut prev: Option<(Point2, f64)> = None;
    for (i, p) in poses.poses.iter().enumerate().skip(from) {
        let at = p.position();
        let c = source.clearance(at);
        if c < robot_radius {
            return Some(i);
        }
        if let Some((a, ca)) = prev {
            if !segment_clear(source, a, at, ca, c, robot_radius) {
                return Some(i);
            }
        }
        prev = Some((at, c));
    }
    None
}

/// Whether the chord from `a` to `b` stays at least `radius` from every
/// obstacle, given the clearances `ca` and `cb` at its ends.
///
/// Clearance changes no faster than distance, so a chord is proven clear
/// once `(ca + cb - length) / 2 >= radius`; otherwise it is bisected down
/// to a tenth of a millimetre.
pub fn segment_clear<S: ObstacleSource + ?Sized>(
    source: &S,
    a: Point2,
    b: Point2,
    ca: f64,
    cb: f64,
    radius: f64,
) -> bool {
    let length = a.distance(b);
    if (ca + cb - length) / 2.0 >= radius || length < 1e-4 {
        return true;
    }
    let mid = Point2::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y));
    let cm = source.clearance(mid);
    cm >= radius
        && segment_clear(source, a, mid, ca, cm, radius)
        && segment_clear(source, mid, b, cm, cb, radius)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryCandidate {
    pub departure_angle: f64,
    pub start: Pose2D,
    pub profile: VelocityProfile,
    /// Poses up to (excluding) the first collision.
    pub poses: PoseSequence,
    /// Straight-line distance from the start to the last retained pose.
    pub clear_distance: f64,
    pub collided: bool,
}

impl TrajectoryCandidate {
    pub fn from_poses(
        start: &Pose2D,
        profile: VelocityProfile,
        poses: PoseSequence,
        collision: Option<usize>,
    ) -> Self {
        let retained = match collision {
            Some(i) => poses.truncated(i),
            None => poses,
        };
        let clear_distance = retained
            .last()
            .map(|p| p.position().distance(start.position()))
            .unwrap_or(0.0);
        Self {
            departure_angle: profile.departure_angle,
            start: *start,
            profile,
            poses: retained,
            clear_distance,
            collided: collision.is_some(),
        }
    }
}

/// Roll out one departure angle against an obstacle source.
pub fn rollout<S: ObstacleSource + ?Sized>(
    start: &Pose2D,
    departure_angle: f64,
    config: &TrajectoryConfig,
    source: &S,
) -> TrajectoryCandidate {
    let profile = VelocityProfile::new(departure_angle, config);
    let poses = generate_poses_with(start, &profile, config);
    let hit = first_collision(&poses, source, config.robot_radius);
    TrajectoryCandidate::from_poses(start, profile, poses, hit)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceLabels {
    pub distances: Vec<f64>,
    pub threshold: f64,
}

impl DistanceLabels {
    pub fn binary(&self) -> Vec<bool> {
        self.distances
            .iter()
            .map(|&d| d >= self.threshold)
            .collect()
    }

    /// Index of the largest clear distance; ties prefer the angle closest to
    /// straight ahead, then the lower index.
    pub fn best_index(&self) -> usize {
        let center = self.distances.len() / 2;
        (0..self.distances.len())
            .max_by(|&a, &b| {
                self.distances[a]
                    .total_cmp(&self.distances[b])
                    .then_with(|| a.abs_diff(center).cmp(&b.abs_diff(center)).reverse())
                    .then_with(|| b.cmp(&a))
            })
            .unwrap_or(center)
    }
}

/// Clear distance for every departure angle from `start`.
pub fn label_scene(scene: &Scene, start: &Pose2D, config: &TrajectoryConfig) -> DistanceLabels {
    let distances = config
        .angles()
        .into_iter()
        .map(|a| rollout(start, a, config, scene).clear_distance)
        .collect();
    DistanceLabels {
        distances,
        threshold: config.label_threshold,
    }
}

/// Body-frame point `distance` ahead of a pose, used for nose points.
pub fn point_ahead(pose: &Pose2D, distance: f64) -> Point2 {
    pose.to_world(Point2::new(distance, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Obstacle, PointObstacles, Rect};

    fn open_scene() -> Scene {
        Scene::empty(Rect::new(-100.0, -100.0, 100.0, 100.0))
    }

    #[test]
    fn angle_grid() {
        let c = TrajectoryConfig::default();
        assert_eq!(c.angle(0), -0.4);
        assert_eq!(c.angle(25), 0.0);
        assert_eq!(c.angle(50), 0.4);
        assert!((c.angle(26) - 0.016).abs() < 1e-15);
        assert_eq!(c.nearest_index(0.0), 25);
        assert_eq!(c.nearest_index(1.5), 50);
        assert_eq!(c.nearest_index(-0.0161), 24);
    }

    #[test]
    fn straight_trajectory_ends_five_meters_out() {
        let c = TrajectoryConfig::default();
        let seq = generate_poses(&Pose2D::default(), 0.0, &c);
        assert_eq!(seq.len(), 101);
        let end = seq.last().unwrap();
        assert_eq!((end.x, end.y, end.heading()), (5.0, 0.0, 0.0));
        assert_eq!(seq.total_length(), 5.0);
    }

    #[test]
    fn turn_phase_matches_arc_kinematics() {
        let c = TrajectoryConfig::default();
        let start = Pose2D::new(1.0, 2.0, 0.3);
        let seq = generate_poses(&start, 0.4, &c);
        assert_eq!(seq.last().unwrap().heading(), 0.3 + 0.4);
        // Turn covers 0.4 rad at 1 rad/s and 0.5 m/s: a 0.2 m arc of radius
        // 0.5, so after it the pose sits on the chord of that arc.
        let profile = VelocityProfile::new(0.4, &c);
        assert!((profile.turn_duration() * c.forward_speed - 0.2).abs() < 1e-15);
        let at_turn_end = profile.pose_at(&start, 0.4);
        let local = start.to_body(at_turn_end.position());
        assert!((local.x - 0.5 * 0.4f64.sin()).abs() < 1e-12);
        assert!((local.y - 0.5 * (1.0 - 0.4f64.cos())).abs() < 1e-12);
        // Fine Euler integration of the same controls lands on the same pose.
        let (mut x, mut y, mut h) = (start.x, start.y, start.heading());
        let dt = 1e-6;
        let mut t = 0.0;
        while t < 10.0 - 1e-12 {
            let (v, w) = profile.command_at(t + 0.5 * dt);
            let hm = h + 0.5 * w * dt;
            x += v * hm.cos() * dt;
            y += v * hm.sin() * dt;
            h += w * dt;
            t += dt;
        }
        let end = seq.last().unwrap();
        assert!(
            (end.x - x).abs() < 1e-5 && (end.y - y).abs() < 1e-5,
            "{end:?} vs ({x}, {y})"
        );
    }

    #[test]
    fn mirrored_angles_are_mirror_symmetric() {
        let c = TrajectoryConfig::default();
        for a in c.angles() {
            let left = generate_poses(&Pose2D::default(), a, &c);
            let right = generate_poses(&Pose2D::default(), -a, &c);
            for (l, r) in left.poses.iter().zip(&right.poses) {
                assert!((l.x - r.x).abs() < 1e-9);
                assert!((l.y + r.y).abs() < 1e-9);
                assert!((l.heading() + r.heading()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn empty_source_never_collides() {
        let seq = generate_poses(&Pose2D::default(), 0.1, &TrajectoryConfig::default());
        assert_eq!(
            first_collision(&seq, &PointObstacles::default(), 0.18),
            None
        );
        assert_eq!(first_collision(&seq, &open_scene(), 0.18), None);
    }

    #[test]
    fn straight_into_disc_collides_near_analytic_length() {
        let c = TrajectoryConfig::default();
        let scene = open_scene().with_obstacle(Obstacle::new(Point2::new(2.0, 0.0), 0.28));
        let seq = generate_poses(&Pose2D::default(), 0.0, &c);
        let idx = first_collision(&seq, &scene, c.robot_radius).unwrap();
        // Fine oracle: first arc length s (step 0.005) with 2 - s - 0.28 < 0.18.
        let fine = (0..2000)
            .map(|k| k as f64 * 0.005)
            .find(|s| 2.0 - s - 0.28 < 0.18)
            .unwrap();
        assert!((seq.cumulative_length[idx] - fine).abs() <= 0.05 + 1e-12);
        assert_eq!(idx, 31);
    }

    #[test]
    fn laterally_separated_disc_is_ignored() {
        let c = TrajectoryConfig::default();
        let scene = open_scene().with_obstacle(Obstacle::new(Point2::new(2.0, 0.47), 0.28));
        let seq = generate_poses(&Pose2D::default(), 0.0, &c);
        assert_eq!(first_collision(&seq, &scene, c.robot_radius), None);
    }

    #[test]
    fn empty_scene_labels() {
        let c = TrajectoryConfig::default();
        let labels = label_scene(&open_scene(), &Pose2D::default(), &c);
        assert_eq!(labels.distances[25], 5.0);
        assert!(labels.binary().iter().all(|&b| b));
        // Closed-form end point of the +0.4 trajectory.
        let r = 0.5;
        let turn_arc = 0.2;
        let end = Point2::new(
            r * 0.4f64.sin() + (5.0 - turn_arc) * 0.4f64.cos(),
            r * (1.0 - 0.4f64.cos()) + (5.0 - turn_arc) * 0.4f64.sin(),
        );
        assert!((labels.distances[50] - end.norm()).abs() < 1e-12);
        assert!(labels.distances[50] < 5.0);
        assert_eq!(labels.best_index(), 25);
    }

    #[test]
    fn wall_ahead_blocks_every_angle() {
        let c = TrajectoryConfig::default();
        let mut scene = open_scene();
        let mut y = -4.0;
        while y <= 4.0 {
            scene = scene.with_obstacle(Obstacle::new(Point2::new(1.0 + 0.28, y), 0.28));
            y += 0.5;
        }
        let labels = label_scene(&scene, &Pose2D::default(), &c);
        assert!(
            labels.distances.iter().all(|&d| d < 1.0),
            "{:?}",
            labels.distances
        );
        assert!(labels.binary().iter().all(|&b| !b));
    }

    #[test]
    fn collision_at_start_retains_nothing() {
        let c = TrajectoryConfig::default();
        let scene = open_scene().with_obstacle(Obstacle::new(Point2::new(0.1, 0.0), 0.28));
        let cand = rollout(&Pose2D::default(), 0.0, &c, &scene);
        assert!(cand.collided);
        assert!(cand.poses.is_empty());
        assert_eq!(cand.clear_distance, 0.0);
    }
}
