//! Syndrome sampling for logical-memory experiments.
//!
//! Circuit-level shots are drawn by choosing which noise channels fire (with
//! geometric skipping, so the cost is proportional to the number of faults)
//! and then XORing the precomputed effect of each fault. Because Pauli frame
//! propagation is linear this equals walking the circuit with all faults
//! applied; [`CircuitSampler::sample_frame`] does exactly that walk and is
//! kept as a cross-check. Phenomenological shots fire independent data and
//! measurement flips, each of which is a single graph edge.

pub mod circuit;
pub mod faults;
pub mod frame;
pub mod syndrome;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};

use crate::error::{Error, Result};
use crate::geometry::layout::Layout;
use crate::geometry::{DecodingGraph, NoiseModel};
use circuit::{Circuit, ProbClass, Schedule};
use faults::FaultTable;
use frame::{walk, LaneFault, LANES};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub p: f64,
    pub model: NoiseModel,
}

impl NoiseParams {
    pub fn new(p: f64, model: NoiseModel) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::InvalidProbability(p));
        }
        Ok(NoiseParams { p, model })
    }
}

/// Seed plus stream index. Shot `i` of a run always uses stream `i`, so the
/// draw does not depend on how shots are split across workers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        RngStream { seed, stream_index }
    }

    pub fn offset(self, k: u64) -> Self {
        RngStream {
            stream_index: self.stream_index + k,
            ..self
        }
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// Triggered defects of one shot together with the true logical flip.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DefectSet {
    pub shot_id: u64,
    /// Strictly increasing vertex ids.
    pub defects: Vec<u32>,
    pub true_logical_flip: bool,
}

impl DefectSet {
    pub fn new(shot_id: u64, defects: Vec<u32>, true_logical_flip: bool) -> Self {
        DefectSet {
            shot_id,
            defects,
            true_logical_flip,
        }
    }

    /// Check ordering and range against a graph with `vertices` vertices.
    pub fn validate(&self, vertices: usize) -> Result<()> {
        for (i, &v) in self.defects.iter().enumerate() {
            if v as usize >= vertices {
                return Err(Error::DefectOutOfRange {
                    vertex: v as usize,
                    vertices,
                });
            }
            if i > 0 && self.defects[i - 1] >= v {
                return Err(Error::UnsortedDefects(v as usize));
            }
        }
        Ok(())
    }
}

/// Sort `ids` and cancel equal pairs, leaving the symmetric difference.
fn xor_reduce(ids: &mut Vec<u32>) {
    ids.sort_unstable();
    let mut out = 0;
    let mut i = 0;
    while i < ids.len() {
        if i + 1 < ids.len() && ids[i] == ids[i + 1] {
            i += 2;
        } else {
            ids[out] = ids[i];
            out += 1;
            i += 1;
        }
    }
    ids.truncate(out);
}

/// Indices `0..len` selected independently with probability `q`.
fn bernoulli_indices<R: Rng>(rng: &mut R, len: usize, q: f64, mut hit: impl FnMut(usize, &mut R)) {
    if q <= 0.0 || len == 0 {
        return;
    }
    if q >= 1.0 {
        for i in 0..len {
            hit(i, rng);
        }
        return;
    }
    let gap = Geometric::new(q).expect("probability in (0, 1)");
    let mut pos = gap.sample(rng);
    while pos < len as u64 {
        hit(pos as usize, rng);
        pos = pos.saturating_add(1 + gap.sample(rng));
    }
}

fn check_model(graph: &DecodingGraph, noise: NoiseParams, want: NoiseModel) -> Result<()> {
    if graph.model != want || noise.model != want {
        return Err(Error::ModelMismatch {
            graph: graph.model.to_string(),
            noise: noise.model.to_string(),
        });
    }
    Ok(())
}

/// Circuit-level sampler for one `(d, rounds)` memory experiment at fixed `p`.
#[derive(Debug, Clone)]
pub struct CircuitSampler {
    circuit: Circuit,
    table: FaultTable,
    /// Channel ids of each probability class with that class's firing probability.
    classes: Vec<(f64, Vec<u32>)>,
}

impl CircuitSampler {
    pub fn new(graph: &DecodingGraph, noise: NoiseParams) -> Result<Self> {
        check_model(graph, noise, NoiseModel::CircuitLevel)?;
        let layout = Layout::new(graph.distance);
        let circuit = Circuit::memory(&layout, graph.rounds, graph.model, Schedule::default());
        let table = FaultTable::build(&circuit)?;
        let classes = ProbClass::ALL
            .iter()
            .map(|&class| {
                let ids = (0..circuit.channels.len() as u32)
                    .filter(|&c| circuit.channels[c as usize].class == class)
                    .collect();
                (class.probability(noise.p), ids)
            })
            .collect();
        Ok(CircuitSampler {
            circuit,
            table,
            classes,
        })
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn fault_table(&self) -> &FaultTable {
        &self.table
    }

    /// Faults drawn for one shot as `(channel, option)` pairs, sorted by channel.
    pub fn faults(&self, stream: RngStream) -> Vec<(u32, u8)> {
        let mut rng = stream.rng();
        let mut out = Vec::new();
        for (q, ids) in &self.classes {
            bernoulli_indices(&mut rng, ids.len(), *q, |i, rng| {
                let c = ids[i];
                let options = self.circuit.channels[c as usize].kind.options();
                out.push((c, rng.random_range(0..options) as u8));
            });
        }
        out.sort_unstable();
        out
    }

    /// Effect of an explicit fault list, by XOR of single-fault effects.
    pub fn apply(&self, shot_id: u64, faults: &[(u32, u8)]) -> DefectSet {
        let mut defects = Vec::new();
        let mut logical = false;
        for &(c, o) in faults {
            let e = self.table.effect(c, o);
            defects.extend_from_slice(e.defects());
            logical ^= e.logical;
        }
        xor_reduce(&mut defects);
        DefectSet::new(shot_id, defects, logical)
    }

    pub fn sample(&self, stream: RngStream) -> DefectSet {
        self.apply(stream.stream_index, &self.faults(stream))
    }

    /// Up to 64 consecutive shots from `base`, by walking the whole circuit
    /// with every drawn fault applied.
    pub fn sample_frame(&self, base: RngStream, count: usize) -> Vec<DefectSet> {
        assert!(count <= LANES);
        let shots: Vec<Vec<(u32, u8)>> =
            (0..count).map(|k| self.faults(base.offset(k as u64))).collect();
        self.walk_lanes(base.stream_index, &shots)
    }

    /// Frame walk of one fault list per lane.
    pub fn walk_lanes(&self, first_shot: u64, shots: &[Vec<(u32, u8)>]) -> Vec<DefectSet> {
        let mut lanes: Vec<LaneFault> = shots
            .iter()
            .enumerate()
            .flat_map(|(lane, faults)| {
                faults.iter().map(move |&(channel, option)| LaneFault {
                    channel,
                    lane: lane as u8,
                    option,
                })
            })
            .collect();
        lanes.sort_unstable();
        let result = walk(&self.circuit, 0, self.circuit.rounds - 1, &lanes);
        let checks = self.circuit.checks_per_round;
        (0..shots.len())
            .map(|lane| {
                let defects = result.defects(lane, checks).into_iter().map(|v| v as u32).collect();
                DefectSet::new(first_shot + lane as u64, defects, result.logical_flip(lane))
            })
            .collect()
    }
}

/// Phenomenological sampler. Every data-qubit flip and every measurement
/// flip is an independent mechanism firing with probability `p`; each maps to
/// one graph edge, and edges shared by several mechanisms fire with the
/// combined probability.
#[derive(Debug, Clone)]
pub struct EdgeSampler {
    /// `(u, v or u32::MAX, crosses logical)` per mechanism.
    mechanisms: Vec<(u32, u32, bool)>,
    p: f64,
}

impl EdgeSampler {
    pub fn new(graph: &DecodingGraph, noise: NoiseParams) -> Result<Self> {
        check_model(graph, noise, NoiseModel::Phenomenological)?;
        let layout = Layout::new(graph.distance);
        let circuit = Circuit::memory(&layout, graph.rounds, graph.model, Schedule::default());
        let table = FaultTable::build(&circuit)?;
        let mechanisms = table
            .iter()
            .filter_map(|(_, _, e)| match *e.defects() {
                [u] => Some((u, u32::MAX, e.logical)),
                [u, v] => Some((u, v, e.logical)),
                _ => None,
            })
            .collect();
        Ok(EdgeSampler { mechanisms, p: noise.p })
    }

    pub fn num_mechanisms(&self) -> usize {
        self.mechanisms.len()
    }

    pub fn fired(&self, stream: RngStream) -> Vec<usize> {
        let mut rng = stream.rng();
        let mut out = Vec::new();
        bernoulli_indices(&mut rng, self.mechanisms.len(), self.p, |i, _| out.push(i));
        out
    }

    pub fn apply(&self, shot_id: u64, mechanisms: &[usize]) -> DefectSet {
        let mut defects = Vec::new();
        let mut logical = false;
        for &i in mechanisms {
            let (u, v, crosses) = self.mechanisms[i];
            defects.push(u);
            if v != u32::MAX {
                defects.push(v);
            }
            logical ^= crosses;
        }
        xor_reduce(&mut defects);
        DefectSet::new(shot_id, defects, logical)
    }

    pub fn sample(&self, stream: RngStream) -> DefectSet {
        self.apply(stream.stream_index, &self.fired(stream))
    }
}

/// Defects and logical flip caused by flipping the given graph edges.
pub fn flip_edges(graph: &DecodingGraph, shot_id: u64, edges: &[usize]) -> DefectSet {
    let mut defects = Vec::new();
    let mut logical = false;
    for &i in edges {
        let e = &graph.edges[i];
        defects.push(e.u as u32);
        defects.extend(e.v.map(|v| v as u32));
        logical ^= graph.crosses_logical(e);
    }
    xor_reduce(&mut defects);
    DefectSet::new(shot_id, defects, logical)
}

/// Sampler for either noise model.
#[derive(Debug, Clone)]
pub enum Sampler {
    Circuit(Box<CircuitSampler>),
    Phenomenological(EdgeSampler),
}

impl Sampler {
    pub fn new(graph: &DecodingGraph, noise: NoiseParams) -> Result<Self> {
        match graph.model {
            NoiseModel::CircuitLevel => Ok(Sampler::Circuit(Box::new(CircuitSampler::new(graph, noise)?))),
            NoiseModel::Phenomenological => Ok(Sampler::Phenomenological(EdgeSampler::new(graph, noise)?)),
        }
    }

    pub fn sample(&self, stream: RngStream) -> DefectSet {
        match self {
            Sampler::Circuit(s) => s.sample(stream),
            Sampler::Phenomenological(s) => s.sample(stream),
        }
    }

    /// Lazy stream of `shots` consecutive shots starting at `base`.
    pub fn stream(&self, shots: u64, base: RngStream) -> impl Iterator<Item = DefectSet> + '_ {
        (0..shots).map(move |k| self.sample(base.offset(k)))
    }
}

pub fn sample_circuit_level(
    graph: &DecodingGraph,
    noise: NoiseParams,
    shots: u64,
    base: RngStream,
) -> Result<impl Iterator<Item = DefectSet>> {
    let sampler = CircuitSampler::new(graph, noise)?;
    Ok((0..shots).map(move |k| sampler.sample(base.offset(k))))
}

pub fn sample_phenomenological(
    graph: &DecodingGraph,
    noise: NoiseParams,
    shots: u64,
    base: RngStream,
) -> Result<impl Iterator<Item = DefectSet>> {
    let sampler = EdgeSampler::new(graph, noise)?;
    Ok((0..shots).map(move |k| sampler.sample(base.offset(k))))
}

/// Fraction of vertex slots that are defects, over all shots.
pub fn defect_rate<'a>(
    batch: impl IntoIterator<Item = &'a DefectSet>,
    graph: &DecodingGraph,
) -> Result<f64> {
    let mut shots = 0u64;
    let mut total = 0u64;
    for set in batch {
        shots += 1;
        total += set.defects.len() as u64;
    }
    if shots == 0 {
        return Err(Error::Empty("defect batch"));
    }
    Ok(total as f64 / (shots as f64 * graph.num_vertices() as f64))
}
