use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use navsieve::bench::{
    aggregate, apply_config, emit_bar_chart, emit_line_chart, format_summary, parse_config,
    read_csv, run_scenario_to_csv, ConfigEntry, ScenarioConfig, ScenarioKind,
};
use navsieve::dataset::{build_dataset, load_dataset, save_dataset};
use navsieve::geometry::{SensorConfig, WorldSpec};
use navsieve::learner::{evaluate, load_model, save_model, train, HeadKind, TrainConfig};
use navsieve::planner::{Models, NavConfig, Planner, RecoveryMode};
use navsieve::trajectory::TrajectoryConfig;

#[derive(Parser)]
#[command(
    name = "navsieve",
    version,
    about = "Learned trajectory pruning for local navigation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labelled dataset of random barrel scenes.
    GenData(GenData),
    /// Train one network head on a dataset.
    Train(Train),
    /// Report held-out metrics of a trained model.
    Eval(Eval),
    /// Run a navigation benchmark and append its rows to a CSV file.
    Bench(Bench),
    /// Render SVG charts from a benchmark CSV.
    Plot(Plot),
}

#[derive(Args)]
struct GenData {
    #[arg(long, default_value_t = 10_000)]
    scenes: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "data/train.dataset")]
    out: PathBuf,
}

#[derive(Args)]
struct Train {
    #[arg(long, value_parser = parse_head)]
    head: HeadKind,
    #[arg(long, default_value = "data/train.dataset")]
    data: PathBuf,
    /// Held-out set used for the plateau stop and progress reports.
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Defaults to `models/<head>.model`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct Eval {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value = "data/test.dataset")]
    data: PathBuf,
}

#[derive(Args)]
struct Bench {
    #[arg(long, value_parser = parse_scenario, default_value = "barrels")]
    scenario: ScenarioKind,
    /// Comma-separated planner names; defaults depend on the scenario.
    #[arg(long, value_delimiter = ',')]
    planner: Vec<String>,
    #[arg(long)]
    trials: Option<usize>,
    /// Candidate budgets for the sweep.
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    #[arg(long)]
    recovery: Option<String>,
    /// Sector world: `sparse`, `dense`, or a path to a world file.
    #[arg(long)]
    world_file: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "results/bench.csv")]
    out: PathBuf,
    /// Directory holding `<head>.model` files.
    #[arg(long, default_value = "models")]
    models: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct Plot {
    /// Benchmark CSV to read.
    input: PathBuf,
    /// Output directory for the SVG files.
    #[arg(long, default_value = "plots")]
    out: PathBuf,
}

fn parse_head(s: &str) -> Result<HeadKind, String> {
    s.parse()
        .map_err(|e: navsieve::learner::LearnerError| e.to_string())
}

fn parse_scenario(s: &str) -> Result<ScenarioKind, String> {
    s.parse()
        .map_err(|e: navsieve::bench::BenchError| e.to_string())
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

fn read_config(path: &Option<PathBuf>) -> Result<Vec<ConfigEntry>> {
    match path {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(parse_config(&text).with_context(|| format!("in {}", p.display()))?)
        }
        None => Ok(Vec::new()),
    }
}

fn gen_data(args: GenData) -> Result<()> {
    let started = Instant::now();
    let data = build_dataset(
        &WorldSpec::default(),
        &SensorConfig::default(),
        &TrajectoryConfig::default(),
        args.scenes,
        args.seed,
    )?;
    ensure_parent(&args.out)?;
    save_dataset(&data, &args.out)?;
    let positive = data.positive_fraction();
    let mean = positive.iter().sum::<f64>() / positive.len() as f64;
    println!(
        "wrote {} scenes to {} in {:.1}s (clear fraction {:.3})",
        data.len(),
        args.out.display(),
        started.elapsed().as_secs_f64(),
        mean
    );
    Ok(())
}

fn train_cmd(args: Train) -> Result<()> {
    let mut config = TrainConfig {
        seed: args.seed,
        ..TrainConfig::default()
    };
    apply_config(&read_config(&args.config)?, None, None, Some(&mut config))?;
    let data =
        load_dataset(&args.data).with_context(|| format!("loading {}", args.data.display()))?;
    let test = args
        .test
        .as_ref()
        .map(|p| load_dataset(p).with_context(|| format!("loading {}", p.display())))
        .transpose()?;
    let started = Instant::now();
    let outcome = train(&data, test.as_ref(), args.head, &config, |r| {
        let held = r.held_out.map_or(String::new(), |e| {
            let mut s = format!(" held-out loss {:.5}", e.loss);
            if let Some(a) = e.accuracy {
                s += &format!(" accuracy {a:.4}");
            }
            if let Some(x) = e.rmse {
                s += &format!(" rmse {x:.4}");
            }
            s
        });
        println!(
            "epoch {:>3} train loss {:.5}{held}",
            r.epoch + 1,
            r.train_loss
        );
    })?;
    let out = args
        .out
        .unwrap_or_else(|| PathBuf::from(format!("models/{}.model", args.head)));
    ensure_parent(&out)?;
    save_model(&outcome.model, &out)?;
    println!(
        "trained {} for {} epochs in {:.1}s, saved to {}",
        args.head,
        outcome.history.len(),
        started.elapsed().as_secs_f64(),
        out.display()
    );
    Ok(())
}

fn eval_cmd(args: Eval) -> Result<()> {
    let model =
        load_model(&args.model).with_context(|| format!("loading {}", args.model.display()))?;
    let data =
        load_dataset(&args.data).with_context(|| format!("loading {}", args.data.display()))?;
    let e = evaluate(&model, &data)?;
    println!("head {} samples {}", model.head, data.len());
    println!("loss {:.6}", e.loss);
    if let Some(a) = e.accuracy {
        println!("accuracy {a:.4}");
    }
    if let Some(r) = e.rmse {
        println!("rmse {r:.4}");
    }
    Ok(())
}

fn load_models(dir: &Path, planners: &[Planner]) -> Result<Models> {
    let mut models = Models::default();
    for head in [
        HeadKind::CollisionFree,
        HeadKind::RegressAngle,
        HeadKind::RegressAngleGoal,
    ] {
        if !planners.iter().any(|p| p.head() == Some(head)) {
            continue;
        }
        let path = dir.join(format!("{head}.model"));
        let model = load_model(&path).with_context(|| format!("loading {}", path.display()))?;
        models.insert(model);
    }
    Ok(models)
}

fn bench_cmd(args: Bench) -> Result<()> {
    let mut scenario = ScenarioConfig::new(args.scenario);
    let mut nav = NavConfig::default();
    apply_config(
        &read_config(&args.config)?,
        Some(&mut scenario),
        Some(&mut nav),
        None,
    )?;
    if !args.planner.is_empty() {
        scenario.planners = args
            .planner
            .iter()
            .map(|p| p.parse::<Planner>())
            .collect::<Result<_, _>>()?;
    }
    if let Some(t) = args.trials {
        scenario.trials = t;
    }
    if !args.k.is_empty() {
        scenario.k_values = args.k;
    }
    if let Some(r) = &args.recovery {
        scenario.recovery = r.parse::<RecoveryMode>().map_err(anyhow::Error::msg)?;
    }
    if let Some(w) = args.world_file {
        scenario.world = w;
    }
    if let Some(s) = args.seed {
        scenario.base_seed = s;
    }
    let models = load_models(&args.models, &scenario.planners)?;
    ensure_parent(&args.out)?;
    let started = Instant::now();
    let rows = run_scenario_to_csv(&scenario, &models, &nav, &args.out)?;
    print!("{}", format_summary(&aggregate(&rows)?));
    eprintln!(
        "{} rows in {} ({:.1}s)",
        rows.len(),
        args.out.display(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

fn plot_cmd(args: Plot) -> Result<()> {
    let rows =
        read_csv(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let summary = aggregate(&rows)?;
    std::fs::create_dir_all(&args.out)?;
    let stem = args
        .input
        .file_stem()
        .map_or("bench".into(), |s| s.to_string_lossy().into_owned());
    let bars = args.out.join(format!("{stem}_success.svg"));
    emit_bar_chart(&summary, &format!("Success rate ({stem})"), &bars)?;
    println!("wrote {}", bars.display());
    if summary.iter().any(|s| s.scenario == "sweep") {
        let line = args.out.join(format!("{stem}_success_vs_k.svg"));
        emit_line_chart(&summary, "Success rate vs candidates", &line)?;
        println!("wrote {}", line.display());
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::GenData(a) => gen_data(a),
        Command::Train(a) => train_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Plot(a) => plot_cmd(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn bench_flags_parse() {
        let cli = Cli::try_parse_from([
            "navsieve",
            "bench",
            "--scenario",
            "sweep",
            "--planner",
            "cartesian-gaussian,exhaustive",
            "--k",
            "2,3",
            "--trials",
            "4",
            "--recovery",
            "global-replan",
            "--seed",
            "9",
        ])
        .unwrap();
        let Command::Bench(b) = cli.command else {
            panic!()
        };
        assert_eq!(b.scenario, ScenarioKind::CandidateSweep);
        assert_eq!(b.planner.len(), 2);
        assert_eq!(b.k, vec![2, 3]);
        assert!(Cli::try_parse_from(["navsieve", "train", "--head", "alexnet"]).is_err());
    }
}
