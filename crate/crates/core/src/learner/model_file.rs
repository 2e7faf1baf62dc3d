//! Text model files.
//!
//! ```text
//! navsieve-model v1 head=collision-free layers=140,256,128,102
//! angles count=51 range=0.4
//! mean <140 values>
//! std <140 values>
//! w <inputs values>      (one line per output unit, per layer)
//! b <outputs values>     (one line per layer)
//! ```
//!
//! Values are written in shortest round-trip form, so a save/load cycle is
//! exact.

use std::fmt::Write as _;
use std::path::Path;

use super::{HeadKind, LearnerError, Model, ModelParams};
use crate::dataset::DatasetStats;

const MAGIC: &str = "navsieve-model v1";

fn join(values: &[f64]) -> String {
    let mut s = String::with_capacity(values.len() * 20);
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{v}");
    }
    s
}

impl Model {
    pub fn to_text(&self) -> String {
        let sizes = self.params.sizes();
        let layers: Vec<String> = sizes.iter().map(|s| s.to_string()).collect();
        let mut out = format!("{MAGIC} head={} layers={}\n", self.head, layers.join(","));
        let _ = writeln!(
            out,
            "angles count={} range={}",
            self.angle_count, self.angle_range
        );
        let _ = writeln!(out, "mean {}", join(&self.stats.mean));
        let _ = writeln!(out, "std {}", join(&self.stats.std_dev));
        for layer in &self.params.layers {
            for row in layer.weights.chunks(layer.inputs) {
                let _ = writeln!(out, "w {}", join(row));
            }
            let _ = writeln!(out, "b {}", join(&layer.biases));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, LearnerError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| {
            lines.next().ok_or_else(|| LearnerError::Parse {
                line: 0,
                message: format!("unexpected end of file, expected {what}"),
            })
        };

        let (line, header) = next("header")?;
        let perr = |line: usize, message: String| LearnerError::Parse { line, message };
        let rest = header
            .strip_prefix(MAGIC)
            .ok_or_else(|| perr(line, format!("expected `{MAGIC}` header")))?;
        let mut head = None;
        let mut sizes = None;
        for field in rest.split_whitespace() {
            match field.split_once('=') {
                Some(("head", v)) => head = Some(v.parse::<HeadKind>()?),
                Some(("layers", v)) => {
                    sizes = Some(
                        v.split(',')
                            .map(|d| d.parse::<usize>().ok().filter(|&d| d > 0))
                            .collect::<Option<Vec<_>>>()
                            .ok_or_else(|| perr(line, format!("bad layer sizes `{v}`")))?,
                    )
                }
                _ => return Err(perr(line, format!("unknown header field `{field}`"))),
            }
        }
        let head = head.ok_or_else(|| perr(line, "missing head".into()))?;
        let sizes: Vec<usize> = sizes.ok_or_else(|| perr(line, "missing layers".into()))?;
        if sizes.len() < 2 {
            return Err(perr(line, "need at least two layer sizes".into()));
        }

        let (line, angles) = next("angles line")?;
        let mut angle_count = None;
        let mut angle_range = None;
        for field in angles
            .strip_prefix("angles")
            .unwrap_or("?")
            .split_whitespace()
        {
            match field.split_once('=') {
                Some(("count", v)) => angle_count = v.parse::<usize>().ok(),
                Some(("range", v)) => angle_range = v.parse::<f64>().ok(),
                _ => return Err(perr(line, format!("bad angles field `{field}`"))),
            }
        }
        let (Some(angle_count), Some(angle_range)) = (angle_count, angle_range) else {
            return Err(perr(line, "expected `angles count=<n> range=<r>`".into()));
        };
        if head.output_size(angle_count) != *sizes.last().unwrap() {
            return Err(perr(
                line,
                format!("{head} head with {angle_count} angles does not match layer sizes"),
            ));
        }

        let mut row = |tag: &str, len: usize| -> Result<Vec<f64>, LearnerError> {
            let (line, text) = next(tag)?;
            let values = text
                .strip_prefix(tag)
                .and_then(|r| {
                    r.strip_prefix(' ')
                        .or(if r.is_empty() { Some(r) } else { None })
                })
                .ok_or_else(|| perr(line, format!("expected `{tag}` line")))?
                .split_whitespace()
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| perr(line, format!("`{v}` is not a number")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if values.len() != len {
                return Err(perr(
                    line,
                    format!("expected {len} values, found {}", values.len()),
                ));
            }
            Ok(values)
        };

        let beams = sizes[0] - usize::from(head == HeadKind::RegressAngleGoal);
        let stats = DatasetStats {
            mean: row("mean", beams)?,
            std_dev: row("std", beams)?,
        };
        let mut params = ModelParams::zeros(&sizes);
        for layer in &mut params.layers {
            let mut weights = Vec::with_capacity(layer.inputs * layer.outputs);
            for _ in 0..layer.outputs {
                weights.extend(row("w", layer.inputs)?);
            }
            layer.weights = weights;
            layer.biases = row("b", layer.outputs)?;
        }
        Ok(Model {
            head,
            params,
            stats,
            angle_count,
            angle_range,
        })
    }
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<(), LearnerError> {
    std::fs::write(path, model.to_text())?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model, LearnerError> {
    Model::parse(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::{architecture, init_params};

    fn model(head: HeadKind) -> Model {
        let sizes = architecture(head, 6, &[5, 4], 3);
        Model {
            head,
            params: init_params(&sizes, 7),
            stats: DatasetStats {
                mean: vec![1.0, 2.0, 3.0, 4.0, 0.1 + 0.2, 1e-300],
                std_dev: vec![0.5; 6],
            },
            angle_count: 3,
            angle_range: 0.4,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        for head in HeadKind::ALL {
            let m = model(head);
            let text = m.to_text();
            assert!(text.starts_with(&format!("navsieve-model v1 head={head} layers=")));
            assert_eq!(Model::parse(&text).unwrap(), m);
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.model");
        let m = model(HeadKind::CollisionFree);
        save_model(&m, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), m);
    }

    #[test]
    fn rejects_corrupt_files() {
        let text = model(HeadKind::BestAngle).to_text();
        assert!(Model::parse("navsieve-model v2 head=best-angle layers=6,3\n").is_err());
        let truncated: String = text.lines().take(6).map(|l| format!("{l}\n")).collect();
        assert!(matches!(
            Model::parse(&truncated),
            Err(LearnerError::Parse { line: 0, .. })
        ));
        let bad = text.replacen("head=best-angle", "head=best", 1);
        assert!(matches!(
            Model::parse(&bad),
            Err(LearnerError::UnknownHead(_))
        ));
        let short = text.replacen("std 0.5 ", "std ", 1);
        assert!(matches!(
            Model::parse(&short),
            Err(LearnerError::Parse { line: 4, .. })
        ));
    }
}
