//! Monte Carlo memory experiments, threshold sweeps and scaling studies.
//!
//! Shots are split into fixed-size chunks that workers process in any order.
//! Every chunk returns integer sums (failures and operation counts) and the
//! reduction only adds integers, so results do not depend on the worker count
//! or on scheduling. Wall-clock measurements are kept apart from the
//! deterministic results.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoder::{Decoder, DecoderOptions, Pruning};
use crate::error::{Error, Result};
use crate::geometry::{build_graph, validate_shape, DecodingGraph, NoiseModel};
use crate::instrument::{collect, fit_scaling, least_squares, OpCounters, ScalingFit, ScalingRow};
use crate::sampler::{NoiseParams, RngStream, Sampler};

/// Shots per work unit.
const CHUNK: u64 = 1024;

/// Default threshold grid, as fractions.
pub const DEFAULT_P_GRID: [f64; 8] = [0.004, 0.005, 0.006, 0.007, 0.0078, 0.009, 0.010, 0.012];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub distances: Vec<usize>,
    /// `None` runs `d` rounds at distance `d`.
    pub rounds: Option<usize>,
    pub ps: Vec<f64>,
    pub model: NoiseModel,
    pub shots: u64,
    pub seed: u64,
    pub pruning: Pruning,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.distances.is_empty() {
            return bad("no distances given".into());
        }
        for &d in &self.distances {
            validate_shape(d, self.rounds.unwrap_or(d))?;
        }
        if self.ps.is_empty() {
            return bad("no error probabilities given".into());
        }
        if let Some(&p) = self.ps.iter().find(|&&p| !(0.0..=0.1).contains(&p)) {
            return bad(format!("error probability {p} outside [0, 0.1]"));
        }
        if self.shots == 0 {
            return bad("shots must be at least 1".into());
        }
        Ok(())
    }

    pub fn rounds_for(&self, d: usize) -> usize {
        self.rounds.unwrap_or(d)
    }
}

/// Integer sums over a set of shots.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Tallies {
    shots: u64,
    failures: u64,
    ops: OpCounters,
    decode_ns: u128,
}

impl Tallies {
    fn merge(mut self, o: Tallies) -> Tallies {
        self.shots += o.shots;
        self.failures += o.failures;
        self.ops += o.ops;
        self.decode_ns += o.decode_ns;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub distance: usize,
    pub rounds: usize,
    pub p: f64,
    pub shots: u64,
    pub failures: u64,
    pub logical_error_rate: f64,
    pub standard_error: f64,
    pub mean_comparisons: f64,
    pub mean_unions: f64,
    pub mean_grow_iterations: f64,
    pub mean_ops: f64,
}

impl ResultRow {
    pub const HEADER: &'static str = "distance,rounds,p,shots,failures,logical_error_rate,standard_error,mean_comparisons,mean_unions,mean_grow_iterations,mean_ops";

    fn new(distance: usize, rounds: usize, p: f64, t: &Tallies) -> Self {
        let n = t.shots as f64;
        let rate = t.failures as f64 / n;
        ResultRow {
            distance,
            rounds,
            p,
            shots: t.shots,
            failures: t.failures,
            logical_error_rate: rate,
            standard_error: (rate * (1.0 - rate) / n).sqrt(),
            mean_comparisons: t.ops.comparisons as f64 / n,
            mean_unions: t.ops.merge_pops as f64 / n,
            mean_grow_iterations: t.ops.grow_iterations as f64 / n,
            mean_ops: t.ops.total() as f64 / n,
        }
    }

    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{:.6e},{:.6e},{:.4},{:.4},{:.4},{:.4}",
            self.distance,
            self.rounds,
            self.p,
            self.shots,
            self.failures,
            self.logical_error_rate,
            self.standard_error,
            self.mean_comparisons,
            self.mean_unions,
            self.mean_grow_iterations,
            self.mean_ops
        )
    }
}

/// Wall-clock of one `(d, p)` point; not part of the reproducible output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointTiming {
    pub distance: usize,
    pub p: f64,
    pub wall_seconds: f64,
    pub mean_decode_ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
    #[serde(skip)]
    pub timings: Vec<PointTiming>,
}

impl ExperimentResult {
    pub fn row(&self, distance: usize, p: f64) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.distance == distance && r.p == p)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(ResultRow::HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.csv());
            out.push('\n');
        }
        out
    }
}

/// Runs `f` on a dedicated pool of `workers` threads, or on the global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn run_point(
    graph: &DecodingGraph,
    p: f64,
    shots: u64,
    seed: u64,
    opts: DecoderOptions,
    time_decodes: bool,
) -> Result<Tallies> {
    let sampler = Sampler::new(graph, NoiseParams::new(p, graph.model)?)?;
    let template = Decoder::new(graph, opts);
    let chunks: Vec<u64> = (0..shots.div_ceil(CHUNK)).collect();
    let parts: Result<Vec<Tallies>> = chunks
        .par_iter()
        .map(|&c| {
            let mut dec = template.clone();
            let mut t = Tallies::default();
            let end = ((c + 1) * CHUNK).min(shots);
            for shot in c * CHUNK..end {
                let set = sampler.sample(RngStream::new(seed, shot));
                let start = time_decodes.then(Instant::now);
                let out = dec.decode(&set)?;
                if let Some(s) = start {
                    t.decode_ns += s.elapsed().as_nanos();
                }
                t.shots += 1;
                t.failures += u64::from(out.correction != set.true_logical_flip);
                t.ops += out.op_counts;
            }
            Ok(t)
        })
        .collect();
    Ok(parts?.into_iter().fold(Tallies::default(), Tallies::merge))
}

/// Per-shot seed of a `(d, p)` point, so adding points to a sweep leaves the
/// others unchanged.
fn point_seed(seed: u64, d: usize, p: f64) -> u64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for x in [d as u64, p.to_bits()] {
        h = (h ^ x).wrapping_mul(0x1000_0000_01b3).rotate_left(29);
    }
    h
}

/// Logical memory experiment at every `(d, p)` of the config.
pub fn run_memory_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let opts = DecoderOptions::with_pruning(config.pruning);
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for &d in &config.distances {
        let rounds = config.rounds_for(d);
        let graph = build_graph(d, rounds, config.model)?;
        for &p in &config.ps {
            let start = Instant::now();
            let t = run_point(&graph, p, config.shots, point_seed(config.seed, d, p), opts, true)?;
            rows.push(ResultRow::new(d, rounds, p, &t));
            timings.push(PointTiming {
                distance: d,
                p,
                wall_seconds: start.elapsed().as_secs_f64(),
                mean_decode_ns: t.decode_ns as f64 / t.shots as f64,
            });
        }
    }
    rows.sort_by(|a, b| (a.distance, a.p).partial_cmp(&(b.distance, b.p)).unwrap());
    Ok(ExperimentResult { rows, timings })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCrossing {
    pub small: usize,
    pub large: usize,
    /// `None` when the curves do not cross inside the usable grid.
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub pairs: Vec<PairCrossing>,
    pub median: Option<f64>,
    /// Max minus min of the pairwise crossings.
    pub spread: Option<f64>,
}

/// Crossing of two curves by linear interpolation of the log-rate gap in `p`.
/// Points with at most one failure on either curve are dropped.
pub fn pair_crossing(small: &[(f64, u64, f64)], large: &[(f64, u64, f64)]) -> Option<f64> {
    let mut gap: Vec<(f64, f64)> = Vec::new();
    for &(p, fs, rs) in small {
        if let Some(&(_, fl, rl)) = large.iter().find(|x| x.0 == p) {
            if fs > 1 && fl > 1 {
                gap.push((p, rl.ln() - rs.ln()));
            }
        }
    }
    gap.sort_by(|a, b| a.0.total_cmp(&b.0));
    gap.windows(2).find_map(|w| {
        let ((p0, g0), (p1, g1)) = (w[0], w[1]);
        if g0 < 0.0 && g1 >= 0.0 {
            Some(p0 + (p1 - p0) * (-g0) / (g1 - g0))
        } else {
            None
        }
    })
}

pub fn estimate_threshold(result: &ExperimentResult) -> ThresholdEstimate {
    let mut distances: Vec<usize> = result.rows.iter().map(|r| r.distance).collect();
    distances.sort_unstable();
    distances.dedup();
    let curve = |d: usize| -> Vec<(f64, u64, f64)> {
        result
            .rows
            .iter()
            .filter(|r| r.distance == d)
            .map(|r| (r.p, r.failures, r.logical_error_rate))
            .collect()
    };
    let pairs: Vec<PairCrossing> = distances
        .windows(2)
        .map(|w| PairCrossing {
            small: w[0],
            large: w[1],
            p: pair_crossing(&curve(w[0]), &curve(w[1])),
        })
        .collect();
    let mut found: Vec<f64> = pairs.iter().filter_map(|c| c.p).collect();
    found.sort_by(f64::total_cmp);
    let median = match found.len() {
        0 => None,
        n if n % 2 == 1 => Some(found[n / 2]),
        n => Some(0.5 * (found[n / 2 - 1] + found[n / 2])),
    };
    let spread = (!found.is_empty()).then(|| found[found.len() - 1] - found[0]);
    ThresholdEstimate { pairs, median, spread }
}

pub fn run_threshold_sweep(config: &ExperimentConfig) -> Result<(ExperimentResult, ThresholdEstimate)> {
    if config.distances.len() < 3 || config.ps.len() < 5 {
        return Err(Error::InvalidConfig(format!(
            "threshold sweep needs at least 3 distances and 5 error probabilities, got {} and {}",
            config.distances.len(),
            config.ps.len()
        )));
    }
    let result = run_memory_experiment(config)?;
    let estimate = estimate_threshold(&result);
    Ok((result, estimate))
}

/// Exponential suppression fit `rate ~ A / Lambda^((d+1)/2)` over points with failures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuppressionFit {
    pub lambda: f64,
    pub r_squared: f64,
    pub points: usize,
}

pub fn fit_suppression(rows: &[ResultRow]) -> Option<SuppressionFit> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.failures > 0)
        .map(|r| ((r.distance as f64 + 1.0) / 2.0, r.logical_error_rate.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let (slope, _, r_squared) = least_squares(pts.iter().copied());
    Some(SuppressionFit {
        lambda: (-slope).exp(),
        r_squared,
        points: pts.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingStudy {
    pub pruning: Pruning,
    pub rows: Vec<ScalingRow>,
    /// Mean total operations per round, per distance.
    pub ops_per_round: Vec<f64>,
    pub fit: ScalingFit,
    /// Fit of mean comparisons per round alone.
    pub comparisons_fit: Option<ScalingFit>,
}

impl ScalingStudy {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(ScalingRow::HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.csv());
            out.push('\n');
        }
        out
    }
}

/// Operation counts per distance at one `p`, fitted against qubit count.
pub fn run_scaling(config: &ExperimentConfig, wall_clock: bool) -> Result<ScalingStudy> {
    config.validate()?;
    let p = config.ps[0];
    let opts = DecoderOptions::with_pruning(config.pruning);
    let mut rows = Vec::new();
    let mut ops_per_round = Vec::new();
    let mut points = Vec::new();
    let mut comparison_points = Vec::new();
    for &d in &config.distances {
        let rounds = config.rounds_for(d);
        let graph = build_graph(d, rounds, config.model)?;
        let seed = point_seed(config.seed, d, p);
        let sampler = Sampler::new(&graph, NoiseParams::new(p, graph.model)?)?;
        let template = Decoder::new(&graph, opts);
        let chunks: Vec<u64> = (0..config.shots.div_ceil(CHUNK)).collect();
        let parts: Result<Vec<(Vec<OpCounters>, u128)>> = chunks
            .par_iter()
            .map(|&c| {
                let mut dec = template.clone();
                let mut ops = Vec::new();
                let mut ns = 0u128;
                for shot in c * CHUNK..((c + 1) * CHUNK).min(config.shots) {
                    let set = sampler.sample(RngStream::new(seed, shot));
                    ops.push(dec.decode(&set)?.op_counts);
                    if wall_clock {
                        let start = Instant::now();
                        dec.decode_fast(&set)?;
                        ns += start.elapsed().as_nanos();
                    }
                }
                Ok((ops, ns))
            })
            .collect();
        let parts = parts?;
        let total_ns: u128 = parts.iter().map(|p| p.1).sum();
        let all: Vec<OpCounters> = parts.into_iter().flat_map(|p| p.0).collect();
        let summary = collect(&all)?;
        let wall = if wall_clock {
            total_ns as f64 / config.shots as f64
        } else {
            0.0
        };
        let row = ScalingRow::from_summary(d, &summary, wall);
        let per_round = summary.total.mean / rounds as f64;
        points.push((row.qubits as f64, per_round));
        comparison_points.push((row.qubits as f64, row.mean_comparisons / rounds as f64));
        ops_per_round.push(per_round);
        rows.push(row);
    }
    let fit = fit_scaling(&points)?;
    let comparisons_fit = fit_scaling(&comparison_points).ok();
    Ok(ScalingStudy {
        pruning: config.pruning,
        rows,
        ops_per_round,
        fit,
        comparisons_fit,
    })
}

/// Run record written next to every result file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: ExperimentConfig,
    pub outputs: Vec<String>,
    pub summary: serde_json::Value,
    pub complete: bool,
}

impl Manifest {
    pub fn new(command: &str, config: &ExperimentConfig, summary: serde_json::Value) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: config.clone(),
            outputs: Vec::new(),
            summary,
            complete: true,
        }
    }
}

/// Sibling path with `suffix` appended to the file name.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

/// Write `contents` via a temporary `.incomplete` file renamed on success, so
/// an interrupted run never leaves a file that looks finished.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = sibling(path, ".incomplete");
    std::fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Results CSV, manifest, and (separately) wall-clock timings.
pub fn write_outputs(
    out: &Path,
    csv: &str,
    mut manifest: Manifest,
    timings: &serde_json::Value,
) -> Result<Vec<PathBuf>> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let manifest_path = sibling(out, ".manifest.json");
    let timing_path = sibling(out, ".timing.json");
    let name = |p: &Path| p.file_name().unwrap().to_string_lossy().into_owned();
    manifest.outputs = vec![name(out), name(&manifest_path)];
    write_atomic(out, csv)?;
    write_atomic(&manifest_path, &serde_json::to_string_pretty(&manifest)?)?;
    write_atomic(&timing_path, &serde_json::to_string_pretty(timings)?)?;
    Ok(vec![out.to_path_buf(), manifest_path, timing_path])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(p: f64) -> ExperimentConfig {
        ExperimentConfig {
            distances: vec![3, 5],
            rounds: None,
            ps: vec![p],
            model: NoiseModel::CircuitLevel,
            shots: 300,
            seed: 1,
            pruning: Pruning::ValidTime,
        }
    }

    #[test]
    fn noiseless_memory_never_fails() {
        let r = run_memory_experiment(&config(0.0)).unwrap();
        assert!(r.rows.iter().all(|row| row.failures == 0 && row.logical_error_rate == 0.0));
    }

    #[test]
    fn config_validation() {
        let mut c = config(0.01);
        c.distances = vec![4];
        assert!(c.validate().is_err());
        let mut c = config(0.2);
        assert!(c.validate().is_err());
        c.ps = vec![0.01];
        c.shots = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let c = ExperimentConfig {
            shots: 3000,
            ..config(0.01)
        };
        let one = with_workers(Some(1), || run_memory_experiment(&c)).unwrap().unwrap();
        let three = with_workers(Some(3), || run_memory_experiment(&c)).unwrap().unwrap();
        assert_eq!(one.to_csv(), three.to_csv());
    }

    #[test]
    fn crossing_interpolation() {
        let small = [(0.1, 10, 0.1), (0.2, 20, 0.2)];
        let large = [(0.1, 5, 0.05), (0.2, 40, 0.4)];
        let p = pair_crossing(&small, &large).unwrap();
        assert!((p - 0.15).abs() < 1e-12);
        // Points with at most one failure are dropped.
        let large = [(0.1, 1, 0.05), (0.2, 40, 0.4)];
        assert!(pair_crossing(&small, &large).is_none());
    }

    #[test]
    fn suppression_fit_on_exact_decay() {
        let rows: Vec<ResultRow> = [3usize, 5, 7]
            .iter()
            .map(|&d| {
                let rate = 0.1 / 4f64.powf((d as f64 + 1.0) / 2.0);
                ResultRow {
                    distance: d,
                    rounds: d,
                    p: 0.001,
                    shots: 1,
                    failures: 1,
                    logical_error_rate: rate,
                    standard_error: 0.0,
                    mean_comparisons: 0.0,
                    mean_unions: 0.0,
                    mean_grow_iterations: 0.0,
                    mean_ops: 0.0,
                }
            })
            .collect();
        let fit = fit_suppression(&rows).unwrap();
        assert!((fit.lambda - 4.0).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sibling_paths() {
        assert_eq!(sibling(Path::new("out/r.csv"), ".manifest.json"), PathBuf::from("out/r.csv.manifest.json"));
    }
}
