use std::f64::consts::{PI, TAU};

use navsieve::geometry::{
    clearance, generate_scene, wrap_angle, Obstacle, ObstacleSource, Point2, Pose2D, Rect, Scene,
    SensorConfig, WorldSpec,
};
use proptest::prelude::*;

/// Distance to the nearest sampled point on every obstacle boundary and
/// wall, negated when `p` is inside an obstacle.
fn sampled_clearance(scene: &Scene, p: Point2) -> f64 {
    const SAMPLES: usize = 20_000;
    let mut best = f64::INFINITY;
    let mut inside = false;
    for o in &scene.obstacles {
        inside |= p.distance(o.center) < o.radius;
        // coarse pass, then a fine pass around the coarse minimum
        let coarse = (0..SAMPLES)
            .map(|i| i as f64 * TAU / SAMPLES as f64)
            .min_by(|&a, &b| {
                let pa = o.center + Point2::from_polar(o.radius, a);
                let pb = o.center + Point2::from_polar(o.radius, b);
                p.distance(pa).total_cmp(&p.distance(pb))
            })
            .unwrap();
        let step = TAU / SAMPLES as f64;
        for j in 0..=SAMPLES {
            let a = coarse - step + 2.0 * step * j as f64 / SAMPLES as f64;
            best = best.min(p.distance(o.center + Point2::from_polar(o.radius, a)));
        }
    }
    let b = scene.bounds;
    let walls = [p.x - b.min.x, b.max.x - p.x, p.y - b.min.y, b.max.y - p.y];
    let wall = walls.into_iter().fold(f64::INFINITY, f64::min);
    if inside {
        -best
    } else {
        best.min(wall)
    }
}

fn random_scene(seed: u64, count: usize) -> Scene {
    generate_scene(&WorldSpec {
        obstacle_count: count,
        seed,
        ..WorldSpec::default()
    })
}

#[test]
fn clearance_matches_boundary_sampling() {
    for seed in 0..8 {
        let scene = random_scene(seed, 4);
        for k in 0..12 {
            let p = Point2::new(0.5 + 0.4 * k as f64, -2.5 + 0.45 * k as f64);
            let fast = clearance(&scene, p);
            let slow = sampled_clearance(&scene, p);
            assert!(
                (fast - slow).abs() < 1e-9,
                "seed {seed} point {p:?}: {fast} vs {slow}"
            );
        }
    }
}

#[test]
fn spawned_centers_stay_in_bounds() {
    for seed in 0..200 {
        let scene = random_scene(seed, 7);
        assert_eq!(scene.obstacles.len(), 7);
        assert!(scene
            .obstacles
            .iter()
            .all(|o| scene.bounds.contains(o.center)));
    }
}

proptest! {
    #[test]
    fn wrapped_angles_land_in_half_open_range(a in -1e4f64..1e4) {
        let w = wrap_angle(a);
        prop_assert!(w > -PI && w <= PI);
        prop_assert!(((a - w) / TAU - ((a - w) / TAU).round()).abs() < 1e-9);
    }

    #[test]
    fn pose_headings_are_wrapped(x in -5.0f64..5.0, y in -5.0f64..5.0, h in -50.0f64..50.0) {
        let mut pose = Pose2D::new(x, y, h);
        prop_assert!(pose.heading() > -PI && pose.heading() <= PI);
        pose.set_heading(h * 3.0);
        prop_assert!(pose.heading() > -PI && pose.heading() <= PI);
    }

    #[test]
    fn body_and_world_frames_invert(
        x in -5.0f64..5.0, y in -5.0f64..5.0, h in -PI..PI,
        px in -10.0f64..10.0, py in -10.0f64..10.0,
    ) {
        let pose = Pose2D::new(x, y, h);
        let p = Point2::new(px, py);
        let back = pose.to_world(pose.to_body(p));
        prop_assert!(back.distance(p) < 1e-9);
        prop_assert!((pose.to_body(p).norm() - p.distance(pose.position())).abs() < 1e-9);
    }

    #[test]
    fn scan_ranges_respect_sensor_limits(seed in 0u64..10_000, count in 0usize..8, h in -PI..PI) {
        let scene = random_scene(seed, count);
        let config = SensorConfig::default();
        let pose = Pose2D::new(0.0, 0.0, h);
        let scan = scene.raycast_scan(&pose, &config);
        prop_assert_eq!(scan.ranges.len(), config.beam_count);
        for &r in &scan.ranges {
            prop_assert!(r >= config.min_range && r <= config.max_range);
        }
    }

    #[test]
    fn beam_hits_lie_on_the_first_surface(
        cx in 1.0f64..4.0, cy in -1.5f64..1.5, radius in 0.1f64..0.6,
    ) {
        let scene = Scene::empty(Rect::new(-20.0, -20.0, 20.0, 20.0))
            .with_obstacle(Obstacle::new(Point2::new(cx, cy), radius));
        let pose = Pose2D::new(0.0, 0.0, 0.0);
        let config = SensorConfig::default();
        let scan = scene.raycast_scan(&pose, &config);
        for (i, &r) in scan.ranges.iter().enumerate() {
            if r <= config.min_range || r >= config.max_range {
                continue;
            }
            let hit = Point2::from_polar(r, config.beam_angle(i));
            prop_assert!(scene.clearance(hit).abs() < 1e-9);
            // nothing between the sensor and the hit
            for k in 1..20 {
                let q = Point2::from_polar(r * k as f64 / 20.0, config.beam_angle(i));
                prop_assert!(scene.clearance(q) > 0.0);
            }
        }
    }

    #[test]
    fn mirrored_scene_mirrors_clearance(seed in 0u64..10_000, px in 0.0f64..6.0, py in -3.0f64..3.0) {
        let scene = random_scene(seed, 3);
        let mirror = scene.mirrored(0.0);
        let a = clearance(&scene, Point2::new(px, py));
        let b = clearance(&mirror, Point2::new(px, -py));
        prop_assert!((a - b).abs() < 1e-9);
    }
}
