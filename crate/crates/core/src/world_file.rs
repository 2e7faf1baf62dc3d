//! Plain-text world files for hand-authored scenes.
//!
//! ```text
//! # comment
//! bounds 0 0 12 12
//! obstacle 6.0 5.5 0.3
//! sector A 0.5 0.5 2.5 2.5
//! ```

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::geometry::{Obstacle, Point2, Rect, Scene};

#[derive(Debug, Error)]
pub enum WorldFileError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("world file has no `bounds` directive")]
    MissingBounds,
    #[error("obstacle at line {line} has its center outside the bounds")]
    ObstacleOutOfBounds { line: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sector {
    pub name: String,
    pub region: Rect,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectorWorld {
    pub scene: Scene,
    pub sectors: Vec<Sector>,
}

impl SectorWorld {
    pub fn parse(text: &str) -> Result<Self, WorldFileError> {
        let mut bounds = None;
        let mut obstacles = Vec::new();
        let mut sectors = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let mut words = content.split_whitespace();
            let directive = words.next().unwrap_or_default();
            let rest: Vec<&str> = words.collect();
            let err = |message: String| WorldFileError::Parse { line, message };
            match directive {
                "bounds" => {
                    let v = numbers(&rest, 4).map_err(err)?;
                    if v[2] <= v[0] || v[3] <= v[1] {
                        return Err(WorldFileError::Parse {
                            line,
                            message: "bounds must have positive extent".into(),
                        });
                    }
                    bounds = Some(Rect::new(v[0], v[1], v[2], v[3]));
                }
                "obstacle" => {
                    let v = numbers(&rest, 3).map_err(err)?;
                    if v[2] <= 0.0 {
                        return Err(WorldFileError::Parse {
                            line,
                            message: format!("obstacle radius must be positive, got {}", v[2]),
                        });
                    }
                    obstacles.push((line, Obstacle::new(Point2::new(v[0], v[1]), v[2])));
                }
                "sector" => {
                    let Some((name, coords)) = rest.split_first() else {
                        return Err(err("sector needs a name and 4 coordinates".into()));
                    };
                    let v = numbers(coords, 4).map_err(err)?;
                    sectors.push(Sector {
                        name: (*name).to_string(),
                        region: Rect::new(v[0], v[1], v[2], v[3]),
                    });
                }
                other => return Err(err(format!("unknown directive `{other}`"))),
            }
        }
        let bounds = bounds.ok_or(WorldFileError::MissingBounds)?;
        if let Some((line, _)) = obstacles.iter().find(|(_, o)| !bounds.contains(o.center)) {
            return Err(WorldFileError::ObstacleOutOfBounds { line: *line });
        }
        Ok(Self {
            scene: Scene {
                obstacles: obstacles.into_iter().map(|(_, o)| o).collect(),
                bounds,
            },
            sectors,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, WorldFileError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let b = self.scene.bounds;
        let mut out = format!("bounds {} {} {} {}\n", b.min.x, b.min.y, b.max.x, b.max.y);
        for o in &self.scene.obstacles {
            let _ = writeln!(out, "obstacle {} {} {}", o.center.x, o.center.y, o.radius);
        }
        for s in &self.sectors {
            let r = s.region;
            let _ = writeln!(
                out,
                "sector {} {} {} {} {}",
                s.name, r.min.x, r.min.y, r.max.x, r.max.y
            );
        }
        out
    }

    pub fn sector(&self, name: &str) -> Option<&Sector> {
        self.sectors.iter().find(|s| s.name == name)
    }
}

fn numbers(words: &[&str], count: usize) -> Result<Vec<f64>, String> {
    if words.len() != count {
        return Err(format!("expected {count} numbers, found {}", words.len()));
    }
    words
        .iter()
        .map(|w| {
            w.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("`{w}` is not a finite decimal number"))
        })
        .collect()
}

/// Sparse sector world shipped with the crate.
pub const SPARSE_WORLD: &str = include_str!("../assets/worlds/sparse.world");
/// Dense sector world shipped with the crate.
pub const DENSE_WORLD: &str = include_str!("../assets/worlds/dense.world");

/// Resolve `sparse`/`dense` to the bundled worlds, anything else as a path.
pub fn load_named(name_or_path: &str) -> Result<SectorWorld, WorldFileError> {
    match name_or_path {
        "sparse" => SectorWorld::parse(SPARSE_WORLD),
        "dense" => SectorWorld::parse(DENSE_WORLD),
        path => SectorWorld::load(path),
    }
}
