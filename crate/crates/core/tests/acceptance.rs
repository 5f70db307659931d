//! Acceptance criteria at full tolerance. Prints one PASS/FAIL line per
//! criterion, then fails if any criterion failed that is not listed in
//! `KNOWN_DEVIATIONS` (statistical targets this implementation is known to
//! miss; the README explains why). A listed criterion that starts passing
//! also fails the run, so the list cannot go stale.

use std::fmt::Write as _;
use std::io::Write as _;

use rayon::prelude::*;

use collision_clustering::decoder::{decode, decode_optimized, DecoderOptions, Pruning};
use collision_clustering::experiment::{
    estimate_threshold, fit_suppression, run_memory_experiment, run_scaling, with_workers, write_outputs,
    ExperimentConfig, Manifest, DEFAULT_P_GRID,
};
use collision_clustering::geometry::{build_graph, DecodingGraph, DistanceFunction, NoiseModel};
use collision_clustering::oracles::{bfs_all, exhaustive_decode, reference_uf_decode};
use collision_clustering::sampler::{defect_rate, flip_edges, DefectSet, NoiseParams, RngStream, Sampler};

/// 2: the phenomenological defect rate under independent data and measurement
/// errors is about 0.56% at p=0.1%; the 0.38% target matches data errors alone.
const KNOWN_DEVIATIONS: &[u32] = &[2];

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn config(distances: &[usize], ps: &[f64], model: NoiseModel, shots: u64, seed: u64, pruning: Pruning) -> ExperimentConfig {
    ExperimentConfig {
        distances: distances.to_vec(),
        rounds: None,
        ps: ps.to_vec(),
        model,
        shots,
        seed,
        pruning,
    }
}

fn shots(g: &DecodingGraph, p: f64, n: u64, seed: u64) -> Vec<DefectSet> {
    let s = Sampler::new(g, NoiseParams::new(p, g.model).unwrap()).unwrap();
    (0..n).into_par_iter().map(|i| s.sample(RngStream::new(seed, i))).collect()
}

fn threshold_sweep() -> Outcome {
    let c = config(&[3, 5, 7, 9, 11], &DEFAULT_P_GRID, NoiseModel::CircuitLevel, 100_000, 1, Pruning::ValidTime);
    let result = run_memory_experiment(&c).unwrap();
    let est = estimate_threshold(&result);
    let mut detail = String::new();
    for pc in &est.pairs {
        let _ = write!(detail, "d{}/d{}={} ", pc.small, pc.large, pc.p.map_or("none".into(), |p| format!("{:.3}%", 100.0 * p)));
    }
    let pass = est.median.is_some_and(|m| (m - 0.0078).abs() <= 0.0015);
    let _ = write!(detail, "median={}", est.median.map_or("none".into(), |m| format!("{:.3}%", 100.0 * m)));
    Outcome { id: 1, name: "threshold crossing 0.78% +- 0.15pp", pass, detail }
}

fn defect_rates() -> Outcome {
    let rate = |model| {
        let g = build_graph(23, 23, model).unwrap();
        defect_rate(&shots(&g, 0.001, 2000, 2), &g).unwrap()
    };
    let (cl, ph) = (rate(NoiseModel::CircuitLevel), rate(NoiseModel::Phenomenological));
    let ratio = cl / ph;
    let pass = (cl - 0.0135).abs() <= 0.001 && (ph - 0.0038).abs() <= 0.0005 && (ratio - 3.5).abs() <= 0.5;
    let g = build_graph(23, 23, NoiseModel::Phenomenological).unwrap();
    let (all, data_only) = (analytic_rate(&g, |_| true), analytic_rate(&g, |dt| dt == 0));
    Outcome {
        id: 2,
        name: "defect rates at d=23, p=0.1%",
        pass,
        detail: format!(
            "circuit={:.3}% phenomenological={:.3}% ratio={:.2}; exact phenomenological={:.3}%, from data errors alone={:.3}%",
            100.0 * cl,
            100.0 * ph,
            ratio,
            100.0 * all,
            100.0 * data_only
        ),
    }
}

/// Exact mean defect probability when the selected edges fire independently:
/// a vertex lights up with probability (1 - prod(1 - 2q)) / 2 over its edges.
/// The filter sees each edge's time step, 0 for space and boundary edges.
fn analytic_rate(g: &DecodingGraph, keep: impl Fn(i32) -> bool) -> f64 {
    let mut prod = vec![1.0f64; g.num_vertices()];
    for e in &g.edges {
        let dt = e.v.map_or(0, |v| g.vertices[v].t - g.vertices[e.u].t);
        if keep(dt) {
            for x in std::iter::once(e.u).chain(e.v) {
                prod[x] *= 1.0 - 2.0 * e.flip_probability;
            }
        }
    }
    prod.iter().map(|q| (1.0 - q) / 2.0).sum::<f64>() / prod.len() as f64
}

fn suppression() -> Outcome {
    // Large distances get ten times the shots so their rates are resolved at all.
    let small = config(&[3, 5, 7], &[0.001], NoiseModel::CircuitLevel, 1_000_000, 3, Pruning::ValidTime);
    let large = config(&[9, 11], &[0.001], NoiseModel::CircuitLevel, 10_000_000, 3, Pruning::ValidTime);
    let mut result = run_memory_experiment(&small).unwrap();
    result.rows.extend(run_memory_experiment(&large).unwrap().rows);
    let rates: Vec<f64> = result.rows.iter().map(|r| r.logical_error_rate).collect();
    let decreasing = rates.windows(2).all(|w| w[1] < w[0]);
    let fit = fit_suppression(&result.rows);
    let pass = decreasing && fit.is_some_and(|f| f.lambda > 1.0 && f.r_squared >= 0.95);
    let mut detail: String = result.rows.iter().map(|r| format!("d{}:{}/{} ", r.distance, r.failures, r.shots)).collect();
    if let Some(f) = fit {
        let _ = write!(detail, "lambda={:.2} r2={:.3} points={}", f.lambda, f.r_squared, f.points);
    }
    Outcome { id: 3, name: "exponential suppression at p=0.1%", pass, detail }
}

fn uf_equivalence() -> Outcome {
    let mut checked = 0u64;
    let mut mismatches = 0u64;
    for model in [NoiseModel::CircuitLevel, NoiseModel::Phenomenological] {
        for d in [3, 5, 7] {
            let g = build_graph(d, d, model).unwrap();
            for p in [0.001, 0.005] {
                let bad: u64 = shots(&g, p, 10_000, 4)
                    .par_iter()
                    .map(|set| {
                        let mut dec = collision_clustering::decoder::Decoder::new(&g, DecoderOptions::default());
                        let c = dec.decode_fast(set).unwrap();
                        let (partition, uf) = reference_uf_decode(&g, set).unwrap();
                        u64::from(c != uf || dec.partition() != partition)
                    })
                    .sum();
                checked += 10_000;
                mismatches += bad;
            }
        }
    }
    Outcome {
        id: 4,
        name: "partition and correction equal reference union-find",
        pass: mismatches == 0,
        detail: format!("{mismatches} mismatches in {checked} shots"),
    }
}

fn isometry() -> Outcome {
    let mut pairs = 0u64;
    let mut bad = 0u64;
    for model in [NoiseModel::Phenomenological, NoiseModel::CircuitLevel] {
        for d in [3, 5, 7] {
            for rounds in 1..=7 {
                let g = build_graph(d, rounds, model).unwrap();
                let m = g.metric();
                for a in 0..g.num_vertices() {
                    let dist = bfs_all(&g, a);
                    for (b, &want) in dist.iter().enumerate() {
                        pairs += 1;
                        bad += u64::from(m.distance(g.vertices[a], g.vertices[b]) != want);
                    }
                }
            }
        }
    }
    Outcome {
        id: 5,
        name: "closed-form metric equals graph distance",
        pass: bad == 0,
        detail: format!("{bad} mismatches in {pairs} pairs"),
    }
}

fn single_edges() -> Outcome {
    let mut edges = 0;
    let mut bad = 0;
    for model in [NoiseModel::Phenomenological, NoiseModel::CircuitLevel] {
        let g = build_graph(3, 3, model).unwrap();
        for i in 0..g.edges.len() {
            let set = flip_edges(&g, i as u64, &[i]);
            let cc = decode(&g, &set, DecoderOptions::default()).unwrap().correction;
            let oracle = exhaustive_decode(&g, &set, 3).unwrap().correction;
            edges += 1;
            bad += usize::from(cc != oracle || cc != set.true_logical_flip);
        }
    }
    Outcome {
        id: 6,
        name: "d=3 single-edge errors match exhaustive decoding",
        pass: bad == 0,
        detail: format!("{bad} mismatches over {edges} edges"),
    }
}

fn pruning() -> Outcome {
    let mut checked = 0u64;
    let mut bad = 0u64;
    let mut base_cmp = 0u64;
    let mut pruned_cmp = [0u64; 2];
    for model in [NoiseModel::CircuitLevel, NoiseModel::Phenomenological] {
        for d in [3, 5, 7, 9] {
            let g = build_graph(d, d, model).unwrap();
            for p in [0.001, 0.005, 0.01] {
                let sets = shots(&g, p, 3000, 5);
                let (b, c, x) = sets
                    .par_iter()
                    .map(|set| {
                        let base = decode(&g, set, DecoderOptions::default()).unwrap();
                        let mut out = (0u64, [0u64; 2], 0u64);
                        out.0 = base.op_counts.comparisons;
                        for (k, mode) in [Pruning::Valid, Pruning::ValidTime].into_iter().enumerate() {
                            let o = decode_optimized(&g, set, DecoderOptions::with_pruning(mode)).unwrap();
                            out.1[k] = o.op_counts.comparisons;
                            out.2 += u64::from(
                                o.correction != base.correction || o.op_counts.comparisons > base.op_counts.comparisons,
                            );
                        }
                        out
                    })
                    .reduce(|| (0, [0; 2], 0), |a, b| (a.0 + b.0, [a.1[0] + b.1[0], a.1[1] + b.1[1]], a.2 + b.2));
                base_cmp += b;
                pruned_cmp[0] += c[0];
                pruned_cmp[1] += c[1];
                bad += x;
                checked += sets.len() as u64;
            }
        }
    }
    Outcome {
        id: 7,
        name: "pruned decoding equals baseline with no more comparisons",
        pass: bad == 0,
        detail: format!(
            "{bad} violations in {checked} shots; comparisons baseline={base_cmp} valid={} valid+time={}",
            pruned_cmp[0], pruned_cmp[1]
        ),
    }
}

fn scaling() -> Outcome {
    let ds = [3, 5, 7, 9, 11, 13];
    let base = run_scaling(&config(&ds, &[0.001], NoiseModel::CircuitLevel, 10_000, 6, Pruning::None), false).unwrap();
    let pruned =
        run_scaling(&config(&ds, &[0.001], NoiseModel::CircuitLevel, 10_000, 6, Pruning::ValidTime), false).unwrap();
    let (b, q) = (base.fit.exponent, pruned.fit.exponent);
    let pass = (1.3..=1.7).contains(&b) && q < b;
    let cmp = |s: &collision_clustering::experiment::ScalingStudy| s.comparisons_fit.map_or(f64::NAN, |f| f.exponent);
    Outcome {
        id: 8,
        name: "operation scaling exponent",
        pass,
        detail: format!(
            "baseline={b:.3} (r2={:.3}) valid+time={q:.3}; comparisons only: baseline={:.3} valid+time={:.3}",
            base.fit.r_squared,
            cmp(&base),
            cmp(&pruned)
        ),
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let c = config(&[3, 5, 7], &[0.002, 0.008], NoiseModel::CircuitLevel, 5000, 7, Pruning::ValidTime);
    let s = config(&[3, 5, 7, 9], &[0.001], NoiseModel::CircuitLevel, 3000, 7, Pruning::None);
    let mut files: Vec<Vec<Vec<u8>>> = Vec::new();
    for w in [1, 4, 16] {
        let memory = with_workers(Some(w), || run_memory_experiment(&c)).unwrap().unwrap();
        let study = with_workers(Some(w), || run_scaling(&s, false)).unwrap().unwrap();
        let m = dir.path().join(format!("w{w}/memory.csv"));
        let sc = dir.path().join(format!("w{w}/scaling.csv"));
        let mut paths = write_outputs(&m, &memory.to_csv(), Manifest::new("memory", &c, serde_json::json!({})), &serde_json::json!({}))
            .unwrap();
        paths.extend(
            write_outputs(&sc, &study.to_csv(), Manifest::new("scaling", &s, serde_json::json!({ "fit": study.fit })), &serde_json::json!({}))
                .unwrap(),
        );
        files.push(
            paths
                .iter()
                .filter(|p| !p.to_string_lossy().ends_with(".timing.json"))
                .map(|p| std::fs::read(p).unwrap())
                .collect(),
        );
    }
    let pass = files[0] == files[1] && files[0] == files[2];
    Outcome {
        id: 9,
        name: "outputs byte-identical under 1, 4 and 16 workers",
        pass,
        detail: format!("{} files per run compared", files[0].len()),
    }
}

#[test]
fn acceptance() {
    let checks: [fn() -> Outcome; 9] = [
        threshold_sweep,
        defect_rates,
        suppression,
        uf_equivalence,
        isometry,
        single_edges,
        pruning,
        scaling,
        determinism,
    ];
    let mut unexpected = Vec::new();
    for check in checks {
        let o = check();
        let known = KNOWN_DEVIATIONS.contains(&o.id);
        let tag = match (o.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known deviation)",
            (false, false) => "FAIL",
        };
        // Written to stderr directly so the line survives output capture.
        let line = format!("[{tag}] {}. {}: {}\n", o.id, o.name, o.detail);
        std::io::stderr().write_all(line.as_bytes()).unwrap();
        if o.pass == known {
            unexpected.push(o.id);
        }
    }
    assert!(unexpected.is_empty(), "criteria with unexpected status: {unexpected:?}");
}
