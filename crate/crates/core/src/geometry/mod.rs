//! Decoding graphs of the rotated planar surface code and their closed-form metrics.
//!
//! Vertices are possible defects of the decoded (Z-check) graph, laid out on
//! an integer lattice `(x1, x2, t)`. The spatial frame is rotated 45 degrees
//! from the data grid so that each data-qubit error is one step along `x1` or
//! `x2`; the distance of a vertex to the logical boundary is its lattice
//! column `x1 - x2`. Edges are never drawn by hand: [`build_graph`] injects
//! every single fault into the syndrome-extraction circuit and records which
//! defects it fires.

pub mod layout;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::circuit::{Circuit, Schedule};
use crate::sampler::faults::FaultTable;
use layout::Layout;

/// Reference physical error rate used for the stored edge flip probabilities.
pub const REFERENCE_P: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    Phenomenological,
    CircuitLevel,
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseModel::Phenomenological => "phenomenological",
            NoiseModel::CircuitLevel => "circuit_level",
        })
    }
}

/// Lattice coordinate of a decoding-graph vertex, in whole edge units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GraphCoord {
    pub x1: i32,
    pub x2: i32,
    pub t: i32,
}

impl GraphCoord {
    pub const fn new(x1: i32, x2: i32, t: i32) -> Self {
        GraphCoord { x1, x2, t }
    }

    /// Lattice column: number of edges to the logical boundary.
    pub fn column(&self) -> i32 {
        self.x1 - self.x2
    }

    fn delta(&self, other: &GraphCoord) -> (i32, i32, i32) {
        (other.x1 - self.x1, other.x2 - self.x2, other.t - self.t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeKind {
    SpaceX1,
    SpaceX2,
    Time,
    Hook1,
    Hook2,
    HookBig,
    Boundary,
}

impl EdgeKind {
    pub fn is_hook(self) -> bool {
        matches!(self, EdgeKind::Hook1 | EdgeKind::Hook2 | EdgeKind::HookBig)
    }

    /// Classify the displacement between the two endpoints of an internal edge.
    pub fn classify(a: GraphCoord, b: GraphCoord) -> Option<EdgeKind> {
        let (mut dx1, mut dx2, mut dt) = a.delta(&b);
        if dt < 0 || (dt == 0 && (dx1 < 0 || (dx1 == 0 && dx2 < 0))) {
            (dx1, dx2, dt) = (-dx1, -dx2, -dt);
        }
        match (dx1, dx2, dt) {
            (1, 0, 0) => Some(EdgeKind::SpaceX1),
            (0, 1, 0) => Some(EdgeKind::SpaceX2),
            (0, 0, 1) => Some(EdgeKind::Time),
            (-1, 0, 1) => Some(EdgeKind::Hook1),
            (0, -1, 1) => Some(EdgeKind::Hook2),
            (-1, -1, 1) => Some(EdgeKind::HookBig),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    /// Second endpoint, `None` for an edge to the boundary.
    pub v: Option<usize>,
    pub kind: EdgeKind,
    pub flip_probability: f64,
}

/// Distance from a vertex to the nearer open boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryDistance {
    pub nearest: u32,
    pub is_logical_side: bool,
}

/// Phenomenological metric: Manhattan distance on `(x1, x2, t)`.
pub fn distance_phenomenological(a: GraphCoord, b: GraphCoord) -> u32 {
    let (dx1, dx2, dt) = a.delta(&b);
    dx1.unsigned_abs() + dx2.unsigned_abs() + dt.unsigned_abs()
}

/// Circuit-level metric: L1 distance after embedding
/// `(x1, x2, t) -> (x1, x2, x1 + t, x2 + t) / 2`.
pub fn distance_circuit(a: GraphCoord, b: GraphCoord) -> u32 {
    let (dx1, dx2, dt) = a.delta(&b);
    let twice = dx1.unsigned_abs()
        + dx2.unsigned_abs()
        + (dx1 + dt).unsigned_abs()
        + (dx2 + dt).unsigned_abs();
    debug_assert!(twice % 2 == 0);
    twice / 2
}

/// Per-axis edge weights `(w1, w2, w3)` for the phenomenological lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisWeights {
    w: [f64; 3],
}

impl AxisWeights {
    pub fn new(w1: f64, w2: f64, w3: f64) -> Result<Self> {
        if [w1, w2, w3].iter().all(|w| w.is_finite() && *w > 0.0) {
            Ok(AxisWeights { w: [w1, w2, w3] })
        } else {
            Err(Error::InvalidWeights(w1, w2, w3))
        }
    }

    pub fn min(&self) -> f64 {
        self.w.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn distance_weighted(a: GraphCoord, b: GraphCoord, weights: AxisWeights) -> f64 {
    let (dx1, dx2, dt) = a.delta(&b);
    let [w1, w2, w3] = weights.w;
    w1 * dx1.unsigned_abs() as f64 + w2 * dx2.unsigned_abs() as f64 + w3 * dt.unsigned_abs() as f64
}

/// `min(k, d - k)` for lattice column `k`, plus which boundary is nearer.
pub fn boundary_distance(a: GraphCoord, distance: usize) -> Result<BoundaryDistance> {
    let column = a.column();
    let d = distance as i32;
    if column <= 0 || column >= d {
        return Err(Error::CoordinateOutOfRange { column, distance });
    }
    let other = d - column;
    // d is odd, so the two sides never tie.
    assert_ne!(column, other, "tie between boundaries requires even distance");
    Ok(BoundaryDistance {
        nearest: column.min(other) as u32,
        is_logical_side: column < other,
    })
}

/// Closed-form distance function used by the decoder in place of graph traversal.
pub trait DistanceFunction: Send + Sync {
    fn distance(&self, a: GraphCoord, b: GraphCoord) -> u32;
    fn boundary(&self, a: GraphCoord) -> BoundaryDistance;
}

/// Metric of the rotated planar code under either noise model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SurfaceCodeMetric {
    pub distance: usize,
    pub model: NoiseModel,
}

impl DistanceFunction for SurfaceCodeMetric {
    #[inline]
    fn distance(&self, a: GraphCoord, b: GraphCoord) -> u32 {
        match self.model {
            NoiseModel::Phenomenological => distance_phenomenological(a, b),
            NoiseModel::CircuitLevel => distance_circuit(a, b),
        }
    }

    #[inline]
    fn boundary(&self, a: GraphCoord) -> BoundaryDistance {
        boundary_distance(a, self.distance).expect("vertex inside the lattice")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodingGraph {
    pub distance: usize,
    pub rounds: usize,
    pub model: NoiseModel,
    pub vertices: Vec<GraphCoord>,
    pub edges: Vec<Edge>,
}

pub fn validate_shape(distance: usize, rounds: usize) -> Result<()> {
    if distance < 3 || distance.is_multiple_of(2) {
        return Err(Error::InvalidDistance(distance));
    }
    if rounds < 1 {
        return Err(Error::InvalidRounds(rounds));
    }
    Ok(())
}

/// Build the decoded graph by exhaustive single-fault injection, with edge
/// flip probabilities evaluated at [`REFERENCE_P`].
pub fn build_graph(distance: usize, rounds: usize, model: NoiseModel) -> Result<DecodingGraph> {
    build_graph_at(distance, rounds, model, REFERENCE_P)
}

pub fn build_graph_at(
    distance: usize,
    rounds: usize,
    model: NoiseModel,
    p: f64,
) -> Result<DecodingGraph> {
    validate_shape(distance, rounds)?;
    let layout = Layout::new(distance);
    let circuit = Circuit::memory(&layout, rounds, model, Schedule::default());
    let table = FaultTable::build(&circuit)?;
    DecodingGraph::from_faults(&layout, &circuit, &table, model, p)
}

impl DecodingGraph {
    pub(crate) fn from_faults(
        layout: &Layout,
        circuit: &Circuit,
        table: &FaultTable,
        model: NoiseModel,
        p: f64,
    ) -> Result<Self> {
        let distance = layout.distance();
        let rounds = circuit.rounds;
        let positions = layout.z_positions();
        let vertices: Vec<GraphCoord> = (0..rounds)
            .flat_map(|t| {
                positions
                    .iter()
                    .map(move |&(x1, x2)| GraphCoord::new(x1, x2, t as i32))
            })
            .collect();

        // (u, v) -> (probability, logical flag); boundary encoded as v = usize::MAX.
        let mut merged: BTreeMap<(usize, usize), (f64, bool)> = BTreeMap::new();
        for (channel, _option, effect) in table.iter() {
            let ch = &circuit.channels[channel as usize];
            let q = ch.class.probability(p) / ch.kind.options() as f64;
            let key = match *effect.defects() {
                [] if effect.logical => return Err(Error::UndetectableLogical),
                [] => continue,
                [a] => (a as usize, usize::MAX),
                [a, b] => (a.min(b) as usize, a.max(b) as usize),
                _ => unreachable!("fault table holds at most two defects"),
            };
            let entry = merged.entry(key).or_insert((0.0, effect.logical));
            if entry.1 != effect.logical {
                return Err(Error::InconsistentLogical {
                    u: key.0,
                    v: if key.1 == usize::MAX {
                        "B".into()
                    } else {
                        key.1.to_string()
                    },
                });
            }
            entry.0 = entry.0 * (1.0 - q) + q * (1.0 - entry.0);
        }

        let mut edges = Vec::with_capacity(merged.len());
        for ((u, v), (prob, logical)) in merged {
            let edge = if v == usize::MAX {
                let side = boundary_distance(vertices[u], distance)?;
                if side.nearest != 1 || side.is_logical_side != logical {
                    return Err(Error::InconsistentLogical { u, v: "B".into() });
                }
                Edge {
                    u,
                    v: None,
                    kind: EdgeKind::Boundary,
                    flip_probability: prob,
                }
            } else {
                if logical {
                    return Err(Error::InconsistentLogical {
                        u,
                        v: v.to_string(),
                    });
                }
                let kind = EdgeKind::classify(vertices[u], vertices[v]).ok_or_else(|| {
                    Error::InvalidConfig(format!(
                        "fault joins non-adjacent vertices {:?} and {:?}",
                        vertices[u], vertices[v]
                    ))
                })?;
                Edge {
                    u,
                    v: Some(v),
                    kind,
                    flip_probability: prob,
                }
            };
            edges.push(edge);
        }

        Ok(DecodingGraph {
            distance,
            rounds,
            model,
            vertices,
            edges,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Number of decoded-type checks per round, `(d^2 - 1) / 2`.
    pub fn checks_per_round(&self) -> usize {
        (self.distance * self.distance - 1) / 2
    }

    /// Physical qubit count `2d^2 - 1`.
    pub fn num_qubits(&self) -> usize {
        2 * self.distance * self.distance - 1
    }

    pub fn metric(&self) -> SurfaceCodeMetric {
        SurfaceCodeMetric {
            distance: self.distance,
            model: self.model,
        }
    }

    /// True when the edge runs to the logical boundary.
    pub fn crosses_logical(&self, edge: &Edge) -> bool {
        edge.v.is_none()
            && boundary_distance(self.vertices[edge.u], self.distance)
                .map(|b| b.is_logical_side)
                .unwrap_or(false)
    }

    /// Adjacency lists over internal edges plus a per-vertex boundary flag.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for e in &self.edges {
            if let Some(v) = e.v {
                adj[e.u].push(v);
                adj[v].push(e.u);
            }
        }
        adj
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&GraphDump::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dump: GraphDump = serde_json::from_str(text)?;
        dump.try_into()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct VertexDump {
    id: usize,
    x1: i32,
    x2: i32,
    t: i32,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum EndDump {
    Vertex(usize),
    Boundary(String),
}

#[derive(Serialize, Deserialize)]
struct EdgeDump {
    u: usize,
    v: EndDump,
    kind: EdgeKind,
    p: f64,
}

#[derive(Serialize, Deserialize)]
struct GraphDump {
    distance: usize,
    rounds: usize,
    model: NoiseModel,
    vertices: Vec<VertexDump>,
    edges: Vec<EdgeDump>,
}

impl From<&DecodingGraph> for GraphDump {
    fn from(g: &DecodingGraph) -> Self {
        GraphDump {
            distance: g.distance,
            rounds: g.rounds,
            model: g.model,
            vertices: g
                .vertices
                .iter()
                .enumerate()
                .map(|(id, c)| VertexDump {
                    id,
                    x1: c.x1,
                    x2: c.x2,
                    t: c.t,
                })
                .collect(),
            edges: g
                .edges
                .iter()
                .map(|e| EdgeDump {
                    u: e.u,
                    v: e.v.map_or(EndDump::Boundary("B".into()), EndDump::Vertex),
                    kind: e.kind,
                    p: e.flip_probability,
                })
                .collect(),
        }
    }
}

impl TryFrom<GraphDump> for DecodingGraph {
    type Error = Error;

    fn try_from(dump: GraphDump) -> Result<Self> {
        validate_shape(dump.distance, dump.rounds)?;
        let n = dump.vertices.len();
        let mut vertices = vec![GraphCoord::new(0, 0, 0); n];
        for v in &dump.vertices {
            if v.id >= n {
                return Err(Error::DefectOutOfRange {
                    vertex: v.id,
                    vertices: n,
                });
            }
            vertices[v.id] = GraphCoord::new(v.x1, v.x2, v.t);
        }
        let check = |id: usize| {
            if id < n {
                Ok(id)
            } else {
                Err(Error::DefectOutOfRange {
                    vertex: id,
                    vertices: n,
                })
            }
        };
        let mut edges = Vec::with_capacity(dump.edges.len());
        for e in dump.edges {
            let v = match e.v {
                EndDump::Vertex(v) => Some(check(v)?),
                EndDump::Boundary(s) if s == "B" => None,
                EndDump::Boundary(s) => {
                    return Err(Error::InvalidConfig(format!("unknown edge endpoint {s:?}")))
                }
            };
            edges.push(Edge {
                u: check(e.u)?,
                v,
                kind: e.kind,
                flip_probability: e.p,
            });
        }
        Ok(DecodingGraph {
            distance: dump.distance,
            rounds: dump.rounds,
            model: dump.model,
            vertices,
            edges,
        })
    }
}
