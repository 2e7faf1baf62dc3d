//! Result rows, their CSV form and per-group summaries.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::planner::{Outcome, TrialResult};

pub const CSV_HEADER: &str =
    "scenario,setting,planner,trial,seed,outcome,time_s,path_m,candidates,replans";

/// One trial of one planner. Times and lengths are kept at the precision
/// they are written with, so a table read back from CSV compares equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    pub setting: String,
    pub planner: String,
    pub trial: usize,
    pub seed: u64,
    #[serde(with = "outcome_text")]
    pub outcome: Outcome,
    pub time_s: String,
    pub path_m: String,
    pub candidates: usize,
    pub replans: usize,
}

mod outcome_text {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::planner::Outcome;

    pub fn serialize<S: Serializer>(o: &Outcome, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(o.name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Outcome, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl ResultRow {
    pub fn new(
        scenario: &str,
        setting: &str,
        planner: &str,
        trial: usize,
        seed: u64,
        r: &TrialResult,
    ) -> Self {
        Self {
            scenario: scenario.to_string(),
            setting: setting.to_string(),
            planner: planner.to_string(),
            trial,
            seed,
            outcome: r.outcome,
            time_s: format!("{:.2}", r.elapsed),
            path_m: format!("{:.3}", r.path_length),
            candidates: r.candidates,
            replans: r.replans,
        }
    }

    pub fn key(&self) -> (String, String, String, usize) {
        (
            self.scenario.clone(),
            self.setting.clone(),
            self.planner.clone(),
            self.trial,
        )
    }

    pub fn time(&self) -> f64 {
        self.time_s.parse().unwrap_or(f64::NAN)
    }
}

pub fn write_csv(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<ResultRow>, BenchError> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(BenchError::BadHeader(header.join(",")));
    }
    Ok(r.deserialize().collect::<Result<Vec<ResultRow>, _>>()?)
}

/// Appends rows to a CSV file one at a time, writing the header first if
/// the file is new or empty.
pub struct RowSink {
    file: File,
}

impl RowSink {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, BenchError> {
        let path = path.as_ref();
        let fresh = std::fs::metadata(path)
            .map(|m| m.len() == 0)
            .unwrap_or(true);
        let mut file = OpenOptions::new().create(true).append(true).open(path)?;
        if fresh {
            writeln!(file, "{CSV_HEADER}")?;
        }
        Ok(Self { file })
    }

    pub fn append(&mut self, row: &ResultRow) -> Result<(), BenchError> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(Vec::new());
        w.serialize(row)?;
        let bytes = w.into_inner().map_err(|e| BenchError::Io(e.into_error()))?;
        self.file.write_all(&bytes)?;
        self.file.flush()?;
        Ok(())
    }
}

/// Per (scenario, setting, planner) statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scenario: String,
    pub setting: String,
    pub planner: String,
    pub trials: usize,
    pub successes: usize,
    pub collisions: usize,
    pub stuck: usize,
    pub timeouts: usize,
    /// Mean time of the successful trials.
    pub mean_time: Option<f64>,
    pub total_candidates: usize,
    pub total_replans: usize,
}

impl SummaryRow {
    /// Success rate in percent.
    pub fn success_rate(&self) -> f64 {
        100.0 * self.successes as f64 / self.trials as f64
    }

    pub fn mean_candidates(&self) -> f64 {
        self.total_candidates as f64 / self.trials as f64
    }

    pub fn candidates_per_replan(&self) -> f64 {
        if self.total_replans == 0 {
            0.0
        } else {
            self.total_candidates as f64 / self.total_replans as f64
        }
    }
}

/// Groups in order of first appearance.
pub fn aggregate(rows: &[ResultRow]) -> Result<Vec<SummaryRow>, BenchError> {
    if rows.is_empty() {
        return Err(BenchError::EmptyTable);
    }
    let mut out: Vec<SummaryRow> = Vec::new();
    let mut time_sums: Vec<f64> = Vec::new();
    for row in rows {
        let idx = match out.iter().position(|s| {
            s.scenario == row.scenario && s.setting == row.setting && s.planner == row.planner
        }) {
            Some(i) => i,
            None => {
                out.push(SummaryRow {
                    scenario: row.scenario.clone(),
                    setting: row.setting.clone(),
                    planner: row.planner.clone(),
                    trials: 0,
                    successes: 0,
                    collisions: 0,
                    stuck: 0,
                    timeouts: 0,
                    mean_time: None,
                    total_candidates: 0,
                    total_replans: 0,
                });
                time_sums.push(0.0);
                out.len() - 1
            }
        };
        let s = &mut out[idx];
        s.trials += 1;
        s.total_candidates += row.candidates;
        s.total_replans += row.replans;
        match row.outcome {
            Outcome::Success => {
                s.successes += 1;
                time_sums[idx] += row.time();
            }
            Outcome::Collision => s.collisions += 1,
            Outcome::Stuck => s.stuck += 1,
            Outcome::Timeout => s.timeouts += 1,
        }
    }
    for (s, sum) in out.iter_mut().zip(time_sums) {
        s.mean_time = (s.successes > 0).then(|| sum / s.successes as f64);
    }
    Ok(out)
}

/// Plain-text summary, one line per group.
pub fn format_summary(summary: &[SummaryRow]) -> String {
    let mut out = String::from("scenario\tsetting\tplanner\ttrials\tsuccess_%\tcollision\tstuck\ttimeout\tmean_time_s\tcand/replan\n");
    for s in summary {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{:.2}\t{}\t{}\t{}\t{}\t{:.2}\n",
            s.scenario,
            s.setting,
            s.planner,
            s.trials,
            s.success_rate(),
            s.collisions,
            s.stuck,
            s.timeouts,
            s.mean_time.map_or("-".to_string(), |t| format!("{t:.2}")),
            s.candidates_per_replan(),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(planner: &str, trial: usize, outcome: Outcome, time: f64) -> ResultRow {
        ResultRow::new(
            "barrels",
            "n=3",
            planner,
            trial,
            trial as u64,
            &TrialResult {
                outcome,
                elapsed: time,
                path_length: 7.5,
                candidates: 1000,
                replans: 5,
                recoveries: 0,
                collided_with_seen: None,
            },
        )
    }

    #[test]
    fn twenty_nine_of_fifty() {
        let rows: Vec<_> = (0..50)
            .map(|i| {
                row(
                    "a",
                    i,
                    if i < 29 {
                        Outcome::Success
                    } else {
                        Outcome::Stuck
                    },
                    20.0,
                )
            })
            .collect();
        let s = aggregate(&rows).unwrap();
        assert_eq!(format!("{:.2}", s[0].success_rate()), "58.00");
        assert_eq!(s[0].stuck, 21);
        assert_eq!(s[0].candidates_per_replan(), 200.0);
    }

    #[test]
    fn mean_time_over_successes() {
        let rows = vec![
            row("a", 0, Outcome::Success, 10.0),
            row("a", 1, Outcome::Success, 20.0),
            row("a", 2, Outcome::Collision, 3.0),
        ];
        let s = aggregate(&rows).unwrap();
        assert_eq!(s[0].mean_time, Some(15.0));
        assert!(matches!(aggregate(&[]), Err(BenchError::EmptyTable)));
    }

    #[test]
    fn aggregation_is_additive() {
        let a: Vec<_> = (0..7)
            .map(|i| {
                row(
                    "a",
                    i,
                    if i % 3 == 0 {
                        Outcome::Success
                    } else {
                        Outcome::Timeout
                    },
                    i as f64,
                )
            })
            .collect();
        let b: Vec<_> = (7..12)
            .map(|i| {
                row(
                    "a",
                    i,
                    if i % 2 == 0 {
                        Outcome::Success
                    } else {
                        Outcome::Stuck
                    },
                    i as f64,
                )
            })
            .collect();
        let sa = &aggregate(&a).unwrap()[0];
        let sb = &aggregate(&b).unwrap()[0];
        let all: Vec<_> = a.iter().chain(&b).cloned().collect();
        let sab = &aggregate(&all).unwrap()[0];
        assert_eq!(sab.trials, sa.trials + sb.trials);
        assert_eq!(sab.successes, sa.successes + sb.successes);
        let merged = (sa.success_rate() * sa.trials as f64 + sb.success_rate() * sb.trials as f64)
            / (sa.trials + sb.trials) as f64;
        assert!((sab.success_rate() - merged).abs() < 1e-12);
        let merged_time = (sa.mean_time.unwrap() * sa.successes as f64
            + sb.mean_time.unwrap() * sb.successes as f64)
            / sab.successes as f64;
        assert!((sab.mean_time.unwrap() - merged_time).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let rows = vec![
            row("a", 0, Outcome::Success, 12.346),
            row("b", 1, Outcome::Collision, 3.0),
        ];
        write_csv(&rows, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(&format!("{CSV_HEADER}\n")));
        assert!(
            text.contains("barrels,n=3,a,0,0,success,12.35,7.500,1000,5\n"),
            "{text}"
        );
        assert_eq!(read_csv(&path).unwrap(), rows);

        let appended = dir.path().join("s.csv");
        let mut sink = RowSink::open(&appended).unwrap();
        for r in &rows {
            sink.append(r).unwrap();
        }
        assert_eq!(
            std::fs::read(&appended).unwrap(),
            std::fs::read(&path).unwrap()
        );
    }
}
