//! Labeled scan datasets: construction, per-beam statistics, normalization,
//! splitting and the line-oriented text format.
//!
//! File layout:
//!
//! ```text
//! navsieve-dataset v1 beams=140 angles=51
//! sensor fov=1 max_range=4.5 min_range=0.45
//! trajectory angle_range=0.4 forward_speed=0.5 ...
//! samples 10000
//! mean <beam values>
//! std <beam values>
//! <beam values> | <label distances> | <goal angle or empty>
//! ```
//!
//! Floats are written in shortest round-trip form, so a load after a save
//! reproduces every value bit for bit.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{generate_scene, DepthScan, SensorConfig, WorldSpec};
use crate::trajectory::{label_scene, DistanceLabels, TrajectoryConfig};

pub const STD_FLOOR: f64 = 1e-6;
const HEADER_MAGIC: &str = "navsieve-dataset v1";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset is empty")]
    Empty,
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: schema violation: {message}")]
    Schema { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub scan: DepthScan,
    pub labels: DistanceLabels,
    /// Body-frame goal direction, for goal-informed heads.
    pub goal_angle: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetStats {
    pub mean: Vec<f64>,
    pub std_dev: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub stats: DatasetStats,
    pub sensor: SensorConfig,
    pub trajectory: TrajectoryConfig,
}

/// Generate `count` labeled scenes seeded `base_seed + index`.
///
/// Every scene is captured from `template.start`; a goal angle is drawn
/// uniformly over the trajectory angle range from a second stream of the
/// scene's seed.
pub fn build_dataset(
    template: &WorldSpec,
    sensor: &SensorConfig,
    trajectory: &TrajectoryConfig,
    count: usize,
    base_seed: u64,
) -> Result<Dataset, DatasetError> {
    if count == 0 {
        return Err(DatasetError::Empty);
    }
    let samples: Vec<Sample> = (0..count)
        .into_par_iter()
        .map(|i| {
            let seed = base_seed.wrapping_add(i as u64);
            let scene = generate_scene(&template.with_seed(seed));
            let scan = scene.raycast_scan(&template.start, sensor);
            let labels = label_scene(&scene, &template.start, trajectory);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1);
            let goal_angle = rng.gen_range(-trajectory.angle_range..=trajectory.angle_range);
            Sample {
                scan,
                labels,
                goal_angle: Some(goal_angle),
            }
        })
        .collect();
    Dataset::from_samples(samples, *sensor, *trajectory)
}

/// Per-beam mean and population standard deviation (Welford), with the
/// deviation floored at [`STD_FLOOR`].
pub fn compute_stats<'a, I>(scans: I) -> Result<DatasetStats, DatasetError>
where
    I: IntoIterator<Item = &'a DepthScan>,
{
    let mut iter = scans.into_iter();
    let first = iter.next().ok_or(DatasetError::Empty)?;
    let beams = first.ranges.len();
    let mut mean = first.ranges.clone();
    let mut m2 = vec![0.0; beams];
    let mut n = 1.0;
    for scan in iter {
        if scan.ranges.len() != beams {
            return Err(DatasetError::LengthMismatch {
                expected: beams,
                found: scan.ranges.len(),
            });
        }
        n += 1.0;
        for ((m, s), &x) in mean.iter_mut().zip(m2.iter_mut()).zip(&scan.ranges) {
            let delta = x - *m;
            *m += delta / n;
            *s += delta * (x - *m);
        }
    }
    let std_dev = m2.iter().map(|s| (s / n).sqrt().max(STD_FLOOR)).collect();
    Ok(DatasetStats { mean, std_dev })
}

pub fn normalize_scan(scan: &DepthScan, stats: &DatasetStats) -> Result<Vec<f64>, DatasetError> {
    check_len(stats.mean.len(), scan.ranges.len())?;
    Ok(scan
        .ranges
        .iter()
        .zip(stats.mean.iter().zip(&stats.std_dev))
        .map(|(x, (m, s))| (x - m) / s)
        .collect())
}

pub fn denormalize(features: &[f64], stats: &DatasetStats) -> Result<Vec<f64>, DatasetError> {
    check_len(stats.mean.len(), features.len())?;
    Ok(features
        .iter()
        .zip(stats.mean.iter().zip(&stats.std_dev))
        .map(|(z, (m, s))| z * s + m)
        .collect())
}

fn check_len(expected: usize, found: usize) -> Result<(), DatasetError> {
    if expected == found {
        Ok(())
    } else {
        Err(DatasetError::LengthMismatch { expected, found })
    }
}

impl Dataset {
    pub fn from_samples(
        samples: Vec<Sample>,
        sensor: SensorConfig,
        trajectory: TrajectoryConfig,
    ) -> Result<Self, DatasetError> {
        let stats = compute_stats(samples.iter().map(|s| &s.scan))?;
        Ok(Self {
            samples,
            stats,
            sensor,
            trajectory,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Seeded disjoint split; the held-out part gets `round(len * test_fraction)`
    /// samples (at least one when the dataset has two or more).
    pub fn split(&self, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset), DatasetError> {
        let n = self.len();
        if n < 2 {
            return Err(DatasetError::Empty);
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let test_n = ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1);
        let (test_idx, train_idx) = order.split_at(test_n);
        let pick = |idx: &[usize]| {
            let mut idx = idx.to_vec();
            idx.sort_unstable();
            let samples = idx.iter().map(|&i| self.samples[i].clone()).collect();
            Dataset::from_samples(samples, self.sensor, self.trajectory)
        };
        Ok((pick(train_idx)?, pick(test_idx)?))
    }

    /// Fraction of positive binary labels at each angle.
    pub fn positive_fraction(&self) -> Vec<f64> {
        let angles = self.trajectory.angle_count;
        let mut counts = vec![0usize; angles];
        for s in &self.samples {
            for (c, b) in counts.iter_mut().zip(s.labels.binary()) {
                *c += b as usize;
            }
        }
        counts
            .into_iter()
            .map(|c| c as f64 / self.len() as f64)
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let s = &self.sensor;
        let t = &self.trajectory;
        let _ = writeln!(
            out,
            "{HEADER_MAGIC} beams={} angles={}",
            s.beam_count, t.angle_count
        );
        let _ = writeln!(
            out,
            "sensor fov={} max_range={} min_range={}",
            s.fov, s.max_range, s.min_range
        );
        let _ = writeln!(
            out,
            "trajectory angle_range={} forward_speed={} max_yaw_rate={} time_step={} max_path_length={} robot_radius={} label_threshold={}",
            t.angle_range, t.forward_speed, t.max_yaw_rate, t.time_step, t.max_path_length, t.robot_radius, t.label_threshold
        );
        let _ = writeln!(out, "samples {}", self.len());
        let _ = writeln!(out, "mean {}", join(&self.stats.mean));
        let _ = writeln!(out, "std {}", join(&self.stats.std_dev));
        for sample in &self.samples {
            let goal = sample.goal_angle.map(|g| g.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{} | {} | {}",
                join(&sample.scan.ranges),
                join(&sample.labels.distances),
                goal
            );
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, DatasetError> {
        parse_dataset(text.lines().map(|l| Ok(l.to_string())))
    }
}

fn join(values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 20);
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v}");
    }
    out
}

pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), DatasetError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(dataset.to_text().as_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset, DatasetError> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    parse_dataset(reader.lines())
}

fn parse_dataset<I>(lines: I) -> Result<Dataset, DatasetError>
where
    I: Iterator<Item = std::io::Result<String>>,
{
    let mut lines = lines.enumerate().map(|(i, l)| l.map(|l| (i + 1, l)));
    let mut next = |what: &str| -> Result<(usize, String), DatasetError> {
        match lines.next() {
            Some(r) => Ok(r?),
            None => Err(DatasetError::Parse {
                line: 0,
                message: format!("unexpected end of file, expected {what}"),
            }),
        }
    };

    let (ln, header) = next("header")?;
    let rest = header
        .strip_prefix(HEADER_MAGIC)
        .ok_or_else(|| DatasetError::Parse {
            line: ln,
            message: format!("missing `{HEADER_MAGIC}` header"),
        })?;
    let header_kv = key_values(ln, rest)?;
    let beams = kv_usize(ln, &header_kv, "beams")?;
    let angles = kv_usize(ln, &header_kv, "angles")?;

    let (ln, sensor_line) = next("sensor line")?;
    let kv = key_values(ln, expect_word(ln, &sensor_line, "sensor")?)?;
    let sensor = SensorConfig {
        beam_count: beams,
        fov: kv_f64(ln, &kv, "fov")?,
        max_range: kv_f64(ln, &kv, "max_range")?,
        min_range: kv_f64(ln, &kv, "min_range")?,
    };

    let (ln, traj_line) = next("trajectory line")?;
    let kv = key_values(ln, expect_word(ln, &traj_line, "trajectory")?)?;
    let trajectory = TrajectoryConfig {
        angle_count: angles,
        angle_range: kv_f64(ln, &kv, "angle_range")?,
        forward_speed: kv_f64(ln, &kv, "forward_speed")?,
        max_yaw_rate: kv_f64(ln, &kv, "max_yaw_rate")?,
        time_step: kv_f64(ln, &kv, "time_step")?,
        max_path_length: kv_f64(ln, &kv, "max_path_length")?,
        robot_radius: kv_f64(ln, &kv, "robot_radius")?,
        label_threshold: kv_f64(ln, &kv, "label_threshold")?,
    };

    let (ln, count_line) = next("samples line")?;
    let count: usize = expect_word(ln, &count_line, "samples")?
        .trim()
        .parse()
        .map_err(|_| DatasetError::Parse {
            line: ln,
            message: "sample count is not an integer".into(),
        })?;

    let (ln, mean_line) = next("mean line")?;
    let mean = floats(ln, expect_word(ln, &mean_line, "mean")?)?;
    schema_len(ln, "mean", beams, mean.len())?;
    let (ln, std_line) = next("std line")?;
    let std_dev = floats(ln, expect_word(ln, &std_line, "std")?)?;
    schema_len(ln, "std", beams, std_dev.len())?;

    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        let (ln, record) = next("sample record")?;
        let mut parts = record.split('|');
        let (Some(scan), Some(labels), Some(goal), None) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(DatasetError::Parse {
                line: ln,
                message: "record must have three `|`-separated fields".into(),
            });
        };
        let ranges = floats(ln, scan)?;
        schema_len(ln, "scan", beams, ranges.len())?;
        let distances = floats(ln, labels)?;
        schema_len(ln, "labels", angles, distances.len())?;
        let goal = goal.trim();
        let goal_angle = if goal.is_empty() {
            None
        } else {
            Some(parse_f64(ln, goal)?)
        };
        samples.push(Sample {
            scan: DepthScan {
                ranges,
                config: sensor,
            },
            labels: DistanceLabels {
                distances,
                threshold: trajectory.label_threshold,
            },
            goal_angle,
        });
    }
    if let Some(extra) = lines.next() {
        let (ln, _) = extra?;
        return Err(DatasetError::Schema {
            line: ln,
            message: format!("more records than the declared {count}"),
        });
    }
    if samples.is_empty() {
        return Err(DatasetError::Empty);
    }
    Ok(Dataset {
        samples,
        stats: DatasetStats { mean, std_dev },
        sensor,
        trajectory,
    })
}

fn expect_word<'a>(line: usize, text: &'a str, word: &str) -> Result<&'a str, DatasetError> {
    text.strip_prefix(word)
        .filter(|r| r.is_empty() || r.starts_with(' '))
        .ok_or_else(|| DatasetError::Parse {
            line,
            message: format!("expected `{word}` line"),
        })
}

fn key_values(line: usize, text: &str) -> Result<Vec<(String, String)>, DatasetError> {
    text.split_whitespace()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| DatasetError::Parse {
                    line,
                    message: format!("expected key=value, found `{kv}`"),
                })
        })
        .collect()
}

fn kv_str<'a>(line: usize, kv: &'a [(String, String)], key: &str) -> Result<&'a str, DatasetError> {
    kv.iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| DatasetError::Parse {
            line,
            message: format!("missing `{key}`"),
        })
}

fn kv_usize(line: usize, kv: &[(String, String)], key: &str) -> Result<usize, DatasetError> {
    kv_str(line, kv, key)?
        .parse()
        .map_err(|_| DatasetError::Parse {
            line,
            message: format!("`{key}` is not an integer"),
        })
}

fn kv_f64(line: usize, kv: &[(String, String)], key: &str) -> Result<f64, DatasetError> {
    parse_f64(line, kv_str(line, kv, key)?)
}

fn parse_f64(line: usize, word: &str) -> Result<f64, DatasetError> {
    word.parse().map_err(|_| DatasetError::Parse {
        line,
        message: format!("`{word}` is not a number"),
    })
}

fn floats(line: usize, text: &str) -> Result<Vec<f64>, DatasetError> {
    text.split_whitespace()
        .map(|w| parse_f64(line, w))
        .collect()
}

fn schema_len(line: usize, what: &str, expected: usize, found: usize) -> Result<(), DatasetError> {
    if expected == found {
        Ok(())
    } else {
        Err(DatasetError::Schema {
            line,
            message: format!("{what} has {found} values, header declares {expected}"),
        })
    }
}
