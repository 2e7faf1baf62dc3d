//! Planar world model: poses, disc obstacles, scene generation, clearance
//! queries and the simulated depth sensor.
//!
//! Everything here is a pure function of its inputs. Scenes are generated
//! from a seeded ChaCha8 stream so a `(WorldSpec, seed)` pair always yields
//! the same obstacle layout.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Wrap an angle into `(-π, π]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let mut wrapped = angle % TAU;
    if wrapped <= -PI {
        wrapped += TAU;
    } else if wrapped > PI {
        wrapped -= TAU;
    }
    wrapped
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(length: f64, angle: f64) -> Self {
        Self::new(length * angle.cos(), length * angle.sin())
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    /// Direction of the vector in radians.
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

/// Planar pose. The heading is kept wrapped to `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    heading: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: wrap_angle(heading),
        }
    }

    pub fn heading(&self) -> f64 {
        self.heading
    }

    pub fn set_heading(&mut self, heading: f64) {
        self.heading = wrap_angle(heading);
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    /// Map a body-frame point (x forward, y left) into the world frame.
    pub fn to_world(&self, local: Point2) -> Point2 {
        let (s, c) = self.heading.sin_cos();
        Point2::new(
            self.x + c * local.x - s * local.y,
            self.y + s * local.x + c * local.y,
        )
    }

    /// Map a world point into this pose's body frame.
    pub fn to_body(&self, world: Point2) -> Point2 {
        let (s, c) = self.heading.sin_cos();
        let d = world - self.position();
        Point2::new(c * d.x + s * d.y, -s * d.x + c * d.y)
    }

    /// Bearing of `target` relative to the heading, wrapped.
    pub fn bearing_to(&self, target: Point2) -> f64 {
        wrap_angle((target - self.position()).angle() - self.heading)
    }
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Point2,
    pub max: Point2,
}

impl Rect {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Self {
            min: Point2::new(min_x.min(max_x), min_y.min(max_y)),
            max: Point2::new(min_x.max(max_x), min_y.max(max_y)),
        }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn center(&self) -> Point2 {
        Point2::new(
            0.5 * (self.min.x + self.max.x),
            0.5 * (self.min.y + self.max.y),
        )
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    /// Distance to the nearest edge; negative outside.
    pub fn inner_distance(&self, p: Point2) -> f64 {
        (p.x - self.min.x)
            .min(self.max.x - p.x)
            .min(p.y - self.min.y)
            .min(self.max.y - p.y)
    }

    pub fn clamp(&self, p: Point2) -> Point2 {
        Point2::new(
            p.x.clamp(self.min.x, self.max.x),
            p.y.clamp(self.min.y, self.max.y),
        )
    }
}

/// Circular obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle {
    pub center: Point2,
    pub radius: f64,
}

impl Obstacle {
    /// # Panics
    /// If `radius` is not strictly positive.
    pub fn new(center: Point2, radius: f64) -> Self {
        assert!(
            radius > 0.0,
            "obstacle radius must be positive, got {radius}"
        );
        Self { center, radius }
    }

    pub fn signed_distance(&self, p: Point2) -> f64 {
        p.distance(self.center) - self.radius
    }

    /// Entry distance of a ray along unit direction `dir`, zero when the
    /// origin is already inside the disc.
    fn ray_entry(&self, origin: Point2, dir: Point2) -> Option<f64> {
        let f = origin - self.center;
        let b = f.dot(dir);
        let c = f.dot(f) - self.radius * self.radius;
        let disc = b * b - c;
        if disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        let far = -b + sq;
        if far < 0.0 {
            return None;
        }
        let near = -b - sq;
        Some(near.max(0.0))
    }
}

/// Anything the planner or the labeler can measure clearance against.
pub trait ObstacleSource {
    /// Free distance from `p` to the nearest obstacle surface; negative
    /// inside an obstacle.
    fn clearance(&self, p: Point2) -> f64;
}

/// Recipe for a randomly populated scene.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldSpec {
    pub bounds: Rect,
    /// Robot start pose; the spawn region is expressed in its body frame.
    pub start: Pose2D,
    /// Body-frame rectangle: x is longitudinal, y is lateral.
    pub spawn_region: Rect,
    pub obstacle_count: usize,
    pub obstacle_radius: f64,
    pub seed: u64,
}

impl Default for WorldSpec {
    /// The training capture setup: three barrels 1-5 m ahead and up to
    /// 3 m to either side, walls far outside sensor and trajectory reach.
    fn default() -> Self {
        Self {
            bounds: Rect::new(-10.0, -15.0, 20.0, 15.0),
            start: Pose2D::new(0.0, 0.0, 0.0),
            spawn_region: Rect::new(1.0, -3.0, 5.0, 3.0),
            obstacle_count: 3,
            obstacle_radius: 0.28,
            seed: 0,
        }
    }
}

impl WorldSpec {
    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub obstacles: Vec<Obstacle>,
    pub bounds: Rect,
}

/// What a single beam ran into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamHit {
    Nothing,
    Obstacle(usize),
    Boundary,
}

/// Place `spec.obstacle_count` discs uniformly over the spawn region.
///
/// Centers that land outside the world bounds are clamped onto them.
pub fn generate_scene(spec: &WorldSpec) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let region = spec.spawn_region;
    let obstacles = (0..spec.obstacle_count)
        .map(|_| {
            let lon = region.min.x + region.width() * rng.gen::<f64>();
            let lat = region.min.y + region.height() * rng.gen::<f64>();
            let center = spec
                .bounds
                .clamp(spec.start.to_world(Point2::new(lon, lat)));
            Obstacle::new(center, spec.obstacle_radius)
        })
        .collect();
    Scene {
        obstacles,
        bounds: spec.bounds,
    }
}

impl Scene {
    pub fn empty(bounds: Rect) -> Self {
        Self {
            obstacles: Vec::new(),
            bounds,
        }
    }

    pub fn with_obstacle(mut self, obstacle: Obstacle) -> Self {
        self.obstacles.push(obstacle);
        self
    }

    /// Reflect the scene about the horizontal line `y = axis_y`.
    pub fn mirrored(&self, axis_y: f64) -> Self {
        let flip = |y: f64| 2.0 * axis_y - y;
        Self {
            obstacles: self
                .obstacles
                .iter()
                .map(|o| Obstacle::new(Point2::new(o.center.x, flip(o.center.y)), o.radius))
                .collect(),
            bounds: Rect::new(
                self.bounds.min.x,
                flip(self.bounds.max.y),
                self.bounds.max.x,
                flip(self.bounds.min.y),
            ),
        }
    }

    /// Index of the obstacle whose surface is nearest to `p`.
    pub fn nearest_obstacle(&self, p: Point2) -> Option<(usize, f64)> {
        self.obstacles
            .iter()
            .enumerate()
            .map(|(i, o)| (i, o.signed_distance(p)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Raw distance along a ray to the first obstacle or boundary.
    pub fn ray_distance(&self, origin: Point2, dir: Point2) -> (f64, BeamHit) {
        let mut best = boundary_exit(&self.bounds, origin, dir);
        let mut hit = BeamHit::Boundary;
        for (i, o) in self.obstacles.iter().enumerate() {
            if let Some(t) = o.ray_entry(origin, dir) {
                if t < best {
                    best = t;
                    hit = BeamHit::Obstacle(i);
                }
            }
        }
        (best, hit)
    }

    /// Simulate the depth sensor at `pose`.
    pub fn raycast_scan(&self, pose: &Pose2D, config: &SensorConfig) -> DepthScan {
        self.raycast_with_hits(pose, config).0
    }

    /// Like [`Scene::raycast_scan`] but also reports what each beam hit
    /// within sensor range.
    pub fn raycast_with_hits(
        &self,
        pose: &Pose2D,
        config: &SensorConfig,
    ) -> (DepthScan, Vec<BeamHit>) {
        let origin = pose.position();
        let mut ranges = Vec::with_capacity(config.beam_count);
        let mut hits = Vec::with_capacity(config.beam_count);
        for i in 0..config.beam_count {
            let dir = Point2::from_polar(1.0, pose.heading() + config.beam_angle(i));
            let (t, hit) = self.ray_distance(origin, dir);
            let range = t.clamp(config.min_range, config.max_range);
            ranges.push(range);
            hits.push(if t < config.max_range {
                hit
            } else {
                BeamHit::Nothing
            });
        }
        (
            DepthScan {
                ranges,
                config: *config,
            },
            hits,
        )
    }
}

fn boundary_exit(bounds: &Rect, origin: Point2, dir: Point2) -> f64 {
    let axis = |o: f64, d: f64, lo: f64, hi: f64| {
        if d > 0.0 {
            (hi - o) / d
        } else if d < 0.0 {
            (lo - o) / d
        } else {
            f64::INFINITY
        }
    };
    let tx = axis(origin.x, dir.x, bounds.min.x, bounds.max.x);
    let ty = axis(origin.y, dir.y, bounds.min.y, bounds.max.y);
    tx.min(ty).max(0.0)
}

impl ObstacleSource for Scene {
    fn clearance(&self, p: Point2) -> f64 {
        self.obstacles
            .iter()
            .map(|o| o.signed_distance(p))
            .fold(self.bounds.inner_distance(p), f64::min)
    }
}

/// Standalone form of [`ObstacleSource::clearance`] for scenes.
pub fn clearance(scene: &Scene, point: Point2) -> f64 {
    scene.clearance(point)
}

/// Scan endpoints used as zero-radius obstacles (memoryless mode).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointObstacles {
    pub points: Vec<Point2>,
}

impl ObstacleSource for PointObstacles {
    fn clearance(&self, p: Point2) -> f64 {
        self.points
            .iter()
            .map(|q| q.distance(p))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorConfig {
    pub beam_count: usize,
    /// Total field of view, symmetric about the heading.
    pub fov: f64,
    pub max_range: f64,
    pub min_range: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            beam_count: 140,
            fov: 1.0,
            max_range: 4.5,
            min_range: 0.45,
        }
    }
}

impl SensorConfig {
    pub fn is_valid(&self) -> bool {
        self.beam_count >= 2
            && self.fov > 0.0
            && self.min_range >= 0.0
            && self.min_range < self.max_range
    }

    /// Body-frame angle of beam `i`; beam 0 is the rightmost.
    pub fn beam_angle(&self, i: usize) -> f64 {
        self.fov * (i as f64 / (self.beam_count - 1) as f64 - 0.5)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthScan {
    pub ranges: Vec<f64>,
    pub config: SensorConfig,
}

impl DepthScan {
    /// World-frame endpoints of beams that returned before max range.
    pub fn hit_points(&self, pose: &Pose2D) -> PointObstacles {
        let points = self
            .ranges
            .iter()
            .enumerate()
            .filter(|(_, &r)| r < self.config.max_range)
            .map(|(i, &r)| pose.to_world(Point2::from_polar(r, self.config.beam_angle(i))))
            .collect();
        PointObstacles { points }
    }
}
