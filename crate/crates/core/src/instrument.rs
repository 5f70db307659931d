//! Abstract operation counts for the decoder and power-law fits over them.
//!
//! The decoder is generic over [`Tally`]. With [`NoTally`] every increment
//! compiles away, so timing runs pay nothing for the counters.

use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    CgsRead,
    CgsWrite,
    Comparison,
    ParentLookup,
    MergePush,
    MergePop,
    GrowIteration,
}

pub trait Tally {
    fn bump(&mut self, op: OpKind, n: u64);
}

/// Counter sink that records nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoTally;

impl Tally for NoTally {
    #[inline(always)]
    fn bump(&mut self, _: OpKind, _: u64) {}
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounters {
    pub cgs_reads: u64,
    pub cgs_writes: u64,
    pub comparisons: u64,
    pub parent_lookups: u64,
    pub merge_pushes: u64,
    pub merge_pops: u64,
    pub grow_iterations: u64,
}

impl Tally for OpCounters {
    #[inline]
    fn bump(&mut self, op: OpKind, n: u64) {
        let slot = match op {
            OpKind::CgsRead => &mut self.cgs_reads,
            OpKind::CgsWrite => &mut self.cgs_writes,
            OpKind::Comparison => &mut self.comparisons,
            OpKind::ParentLookup => &mut self.parent_lookups,
            OpKind::MergePush => &mut self.merge_pushes,
            OpKind::MergePop => &mut self.merge_pops,
            OpKind::GrowIteration => &mut self.grow_iterations,
        };
        *slot += n;
    }
}

impl AddAssign for OpCounters {
    fn add_assign(&mut self, o: Self) {
        self.cgs_reads += o.cgs_reads;
        self.cgs_writes += o.cgs_writes;
        self.comparisons += o.comparisons;
        self.parent_lookups += o.parent_lookups;
        self.merge_pushes += o.merge_pushes;
        self.merge_pops += o.merge_pops;
        self.grow_iterations += o.grow_iterations;
    }
}

impl OpCounters {
    /// Sum of all memory and compare operations; the hardware-indicative cost of a decode.
    pub fn total(&self) -> u64 {
        self.cgs_reads
            + self.cgs_writes
            + self.comparisons
            + self.parent_lookups
            + self.merge_pushes
            + self.merge_pops
    }

    pub fn as_array(&self) -> [u64; 7] {
        [
            self.cgs_reads,
            self.cgs_writes,
            self.comparisons,
            self.parent_lookups,
            self.merge_pushes,
            self.merge_pops,
            self.grow_iterations,
        ]
    }

    pub const NAMES: [&'static str; 7] = [
        "cgs_reads",
        "cgs_writes",
        "comparisons",
        "parent_lookups",
        "merge_pushes",
        "merge_pops",
        "grow_iterations",
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub p99: f64,
}

/// Mean and 99th percentile of every counter, plus of the total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterSummary {
    pub shots: u64,
    pub counters: Vec<(String, Stat)>,
    pub total: Stat,
}

impl CounterSummary {
    pub fn get(&self, name: &str) -> Option<Stat> {
        self.counters.iter().find(|(n, _)| n == name).map(|&(_, s)| s)
    }
}

/// Nearest-rank 99th percentile of sorted values.
fn p99(sorted: &[u64]) -> f64 {
    let rank = (0.99 * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1] as f64
}

fn stat(mut values: Vec<u64>) -> Stat {
    let mean = values.iter().map(|&v| v as f64).sum::<f64>() / values.len() as f64;
    values.sort_unstable();
    Stat {
        mean,
        p99: p99(&values),
    }
}

pub fn collect<'a>(outcomes: impl IntoIterator<Item = &'a OpCounters>) -> Result<CounterSummary> {
    let all: Vec<OpCounters> = outcomes.into_iter().copied().collect();
    if all.is_empty() {
        return Err(Error::Empty("outcome stream"));
    }
    let counters = OpCounters::NAMES
        .iter()
        .enumerate()
        .map(|(i, name)| (name.to_string(), stat(all.iter().map(|c| c.as_array()[i]).collect())))
        .collect();
    Ok(CounterSummary {
        shots: all.len() as u64,
        counters,
        total: stat(all.iter().map(OpCounters::total).collect()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl ScalingFit {
    pub fn predict(&self, n: f64) -> f64 {
        (self.intercept + self.exponent * n.ln()).exp()
    }
}

/// Least-squares line through `(ln x, ln y)`.
pub fn fit_scaling(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 4 {
        return Err(Error::TooFewPoints {
            need: 4,
            got: points.len(),
        });
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::InvalidConfig("scaling fit needs positive N and ops".into()));
    }
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    if xs.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidConfig("scaling fit needs distinct N".into()));
    }
    let (slope, intercept, r_squared) =
        least_squares(points.iter().map(|&(x, y)| (x.ln(), y.ln())));
    Ok(ScalingFit {
        exponent: slope,
        intercept,
        r_squared,
    })
}

/// Ordinary least squares: `(slope, intercept, r^2)`.
pub fn least_squares(points: impl IntoIterator<Item = (f64, f64)>) -> (f64, f64, f64) {
    let pts: Vec<(f64, f64)> = points.into_iter().collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    (slope, intercept, r_squared)
}

/// One row of the scaling summary CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub distance: usize,
    pub qubits: usize,
    pub shots: u64,
    pub mean_comparisons: f64,
    pub p99_comparisons: f64,
    pub mean_unions: f64,
    pub mean_grow_iterations: f64,
    pub mean_wall_ns: f64,
}

impl ScalingRow {
    pub const HEADER: &'static str =
        "distance,N,shots,mean_comparisons,p99_comparisons,mean_unions,mean_grow_iterations,mean_wall_ns";

    pub fn from_summary(distance: usize, summary: &CounterSummary, mean_wall_ns: f64) -> Self {
        let get = |n| summary.get(n).unwrap_or_default();
        ScalingRow {
            distance,
            qubits: 2 * distance * distance - 1,
            shots: summary.shots,
            mean_comparisons: get("comparisons").mean,
            p99_comparisons: get("comparisons").p99,
            mean_unions: get("merge_pops").mean,
            mean_grow_iterations: get("grow_iterations").mean,
            mean_wall_ns,
        }
    }

    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{:.6},{},{:.6},{:.6},{:.1}",
            self.distance,
            self.qubits,
            self.shots,
            self.mean_comparisons,
            self.p99_comparisons,
            self.mean_unions,
            self.mean_grow_iterations,
            self.mean_wall_ns
        )
    }
}
