use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use collision_clustering::decoder::{Decoder, DecodeOutcome, DecoderOptions, Pruning};
use collision_clustering::experiment::{
    fit_suppression, run_memory_experiment, run_scaling, run_threshold_sweep, with_workers, write_outputs,
    ExperimentConfig, Manifest, DEFAULT_P_GRID,
};
use collision_clustering::geometry::{build_graph, NoiseModel};
use collision_clustering::sampler::{syndrome, NoiseParams, RngStream, Sampler};
use collision_clustering::{Error, Result};

#[derive(Parser)]
#[command(name = "ccdecode", version, about = "Collision Clustering decoder and surface-code memory experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the decoding graph as JSON.
    Graph(GraphArgs),
    /// Sample syndromes to a syndrome file.
    Sample(SampleArgs),
    /// Decode a syndrome file and write one outcome row per shot.
    Decode(DecodeArgs),
    /// Logical memory experiment over distances and error rates.
    Memory(RunArgs),
    /// Threshold sweep with pairwise crossing estimates.
    Threshold(RunArgs),
    /// Operation-count scaling over distance.
    Scaling(ScalingArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Phenom,
    Circuit,
}

impl From<ModelArg> for NoiseModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Phenom => NoiseModel::Phenomenological,
            ModelArg::Circuit => NoiseModel::CircuitLevel,
        }
    }
}

fn parse_pruning(s: &str) -> std::result::Result<Pruning, String> {
    Pruning::parse(s).ok_or_else(|| format!("expected none, valid or valid+time, got {s:?}"))
}

#[derive(Args)]
struct Shape {
    #[arg(long, short = 'd')]
    distance: usize,
    /// Syndrome rounds, including the final ideal readout round [default: distance].
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long, value_enum, default_value = "circuit")]
    model: ModelArg,
}

#[derive(Args)]
struct GraphArgs {
    #[command(flatten)]
    shape: Shape,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    shape: Shape,
    /// Physical error probability (fraction, e.g. 0.001).
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 1000)]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DecodeArgs {
    #[command(flatten)]
    shape: Shape,
    /// Syndrome file; stdin when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value = "none", value_parser = parse_pruning)]
    pruning: Pruning,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Code distances, comma separated.
    #[arg(long, short = 'd', value_delimiter = ',', default_values_t = [3, 5, 7, 9, 11])]
    distance: Vec<usize>,
    /// Rounds per shot [default: equal to the distance].
    #[arg(long)]
    rounds: Option<usize>,
    /// Physical error probabilities, comma separated [default: 0.001 for memory,
    /// 0.004..0.012 for threshold].
    #[arg(long, value_delimiter = ',')]
    p: Vec<f64>,
    #[arg(long, value_enum, default_value = "circuit")]
    model: ModelArg,
    #[arg(long, default_value_t = 10_000)]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "valid+time", value_parser = parse_pruning)]
    pruning: Pruning,
    /// Worker threads [default: all cores]. Results do not depend on this.
    #[arg(long)]
    workers: Option<usize>,
    /// Results CSV; the manifest and timings are written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScalingArgs {
    #[arg(long, short = 'd', value_delimiter = ',', default_values_t = [3, 5, 7, 9, 11, 13])]
    distance: Vec<usize>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long, default_value_t = 0.001)]
    p: f64,
    #[arg(long, value_enum, default_value = "circuit")]
    model: ModelArg,
    #[arg(long, default_value_t = 2000)]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "none", value_parser = parse_pruning)]
    pruning: Pruning,
    #[arg(long)]
    workers: Option<usize>,
    /// Also time each decode; fills mean_wall_ns, which then varies run to run.
    #[arg(long)]
    wall_clock: bool,
    #[arg(long)]
    out: PathBuf,
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::io(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_err(path: &Option<PathBuf>) -> impl Fn(io::Error) -> Error + '_ {
    move |e| Error::io(path.as_deref().unwrap_or(Path::new("<stdout>")), e)
}

fn graph_of(shape: &Shape) -> Result<collision_clustering::geometry::DecodingGraph> {
    build_graph(shape.distance, shape.rounds.unwrap_or(shape.distance), shape.model.into())
}

fn run_config(a: &RunArgs, default_ps: &[f64]) -> ExperimentConfig {
    ExperimentConfig {
        distances: a.distance.clone(),
        rounds: a.rounds,
        ps: if a.p.is_empty() { default_ps.to_vec() } else { a.p.clone() },
        model: a.model.into(),
        shots: a.shots,
        seed: a.seed,
        pruning: a.pruning,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Graph(a) => {
            let g = graph_of(&a.shape)?;
            let mut out = output(&a.out)?;
            writeln!(out, "{}", g.to_json()?).map_err(io_err(&a.out))?;
            out.flush().map_err(io_err(&a.out))?;
        }
        Command::Sample(a) => {
            let g = graph_of(&a.shape)?;
            let sampler = Sampler::new(&g, NoiseParams::new(a.p, g.model)?)?;
            let out = output(&a.out)?;
            let shots: Vec<_> = sampler.stream(a.shots, RngStream::new(a.seed, 0)).collect();
            syndrome::write_all(out, &shots).map_err(io_err(&a.out))?;
        }
        Command::Decode(a) => {
            let g = graph_of(&a.shape)?;
            let sets = match &a.input {
                Some(p) => syndrome::read_all(BufReader::new(File::open(p).map_err(|e| Error::io(p, e))?))?,
                None => syndrome::read_all(io::stdin().lock())?,
            };
            let mut dec = Decoder::new(&g, DecoderOptions::with_pruning(a.pruning));
            let mut out = output(&a.out)?;
            writeln!(out, "{}", DecodeOutcome::CSV_HEADER).map_err(io_err(&a.out))?;
            for set in &sets {
                let outcome = dec.decode(set)?;
                writeln!(out, "{}", outcome.csv_row(set)).map_err(io_err(&a.out))?;
            }
            out.flush().map_err(io_err(&a.out))?;
        }
        Command::Memory(a) => {
            let config = run_config(&a, &[0.001]);
            let result = with_workers(a.workers, || run_memory_experiment(&config))??;
            let fit = fit_suppression(&result.rows);
            let manifest = Manifest::new("memory", &config, json!({ "suppression": fit }));
            let paths = write_outputs(&a.out, &result.to_csv(), manifest, &json!(result.timings))?;
            for r in &result.rows {
                eprintln!(
                    "d={:<3} p={:<8} failures={:<8} rate={:.3e} +- {:.1e}",
                    r.distance, r.p, r.failures, r.logical_error_rate, r.standard_error
                );
            }
            report(&paths);
        }
        Command::Threshold(a) => {
            let config = run_config(&a, &DEFAULT_P_GRID);
            let (result, estimate) = with_workers(a.workers, || run_threshold_sweep(&config))??;
            let manifest = Manifest::new("threshold", &config, json!({ "threshold": estimate }));
            let paths = write_outputs(&a.out, &result.to_csv(), manifest, &json!(result.timings))?;
            for c in &estimate.pairs {
                eprintln!("d={} vs d={}: crossing {:?}", c.small, c.large, c.p);
            }
            eprintln!("median crossing {:?}, spread {:?}", estimate.median, estimate.spread);
            report(&paths);
        }
        Command::Scaling(a) => {
            let config = ExperimentConfig {
                distances: a.distance.clone(),
                rounds: a.rounds,
                ps: vec![a.p],
                model: a.model.into(),
                shots: a.shots,
                seed: a.seed,
                pruning: a.pruning,
            };
            let study = with_workers(a.workers, || run_scaling(&config, a.wall_clock))??;
            let summary = json!({
                "ops_per_round": study.ops_per_round,
                "fit": study.fit,
                "comparisons_fit": study.comparisons_fit,
                "wall_clock": a.wall_clock,
            });
            let manifest = Manifest::new("scaling", &config, summary);
            let paths = write_outputs(&a.out, &study.to_csv(), manifest, &json!({ "wall_clock": a.wall_clock }))?;
            eprintln!(
                "ops/round ~ N^{:.3} (r^2 = {:.4})",
                study.fit.exponent, study.fit.r_squared
            );
            report(&paths);
        }
    }
    Ok(())
}

fn report(paths: &[PathBuf]) {
    for p in paths {
        eprintln!("wrote {}", p.display());
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
