//! Slow reference implementations for validation only.
//!
//! Nothing here uses the closed-form metrics: distances come from breadth
//! first search over the explicit edge list, clusters from edge-by-edge
//! half-edge growth, and corrections from brute-force enumeration.

use std::collections::{BTreeMap, VecDeque};

use crate::error::{Error, Result};
use crate::geometry::DecodingGraph;
use crate::sampler::DefectSet;

/// Hop counts from `src` to every vertex over internal edges. Unreachable
/// vertices get `u32::MAX`.
pub fn bfs_all(graph: &DecodingGraph, src: usize) -> Vec<u32> {
    bfs_from(&graph.adjacency(), &[src])
}

fn bfs_from(adj: &[Vec<usize>], sources: &[usize]) -> Vec<u32> {
    let mut dist = vec![u32::MAX; adj.len()];
    let mut queue = VecDeque::new();
    for &s in sources {
        dist[s] = 0;
        queue.push_back(s);
    }
    while let Some(u) = queue.pop_front() {
        for &w in &adj[u] {
            if dist[w] == u32::MAX {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

pub fn bfs_distance(graph: &DecodingGraph, a: usize, b: usize) -> u32 {
    let d = bfs_all(graph, a)[b];
    assert_ne!(d, u32::MAX, "vertices {a} and {b} are disconnected");
    d
}

/// Hop count from every vertex to the nearest boundary, and to the nearest
/// logical boundary, counting the boundary edge itself.
pub fn bfs_boundary_distances(graph: &DecodingGraph) -> (Vec<u32>, Vec<u32>) {
    let adj = graph.adjacency();
    let ends = |logical: Option<bool>| -> Vec<usize> {
        graph
            .edges
            .iter()
            .filter(|e| e.v.is_none())
            .filter(|e| logical.is_none_or(|l| graph.crosses_logical(e) == l))
            .map(|e| e.u)
            .collect()
    };
    let plus_one = |v: Vec<u32>| v.into_iter().map(|d| d.saturating_add(1)).collect();
    (plus_one(bfs_from(&adj, &ends(None))), plus_one(bfs_from(&adj, &ends(Some(true)))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterFlags {
    pub parity: bool,
    pub boundary: bool,
    pub logical: bool,
}

/// Defect clusters keyed by their smallest member vertex id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClusterPartition {
    /// Defect vertex id to cluster label.
    pub labels: BTreeMap<u32, u32>,
    pub clusters: BTreeMap<u32, ClusterFlags>,
}

impl ClusterPartition {
    /// Build from `(defect, group key, flags of that group)` triples with any group keys.
    pub fn from_groups(members: impl IntoIterator<Item = (u32, usize, ClusterFlags)>) -> Self {
        let members: Vec<_> = members.into_iter().collect();
        let mut label_of: BTreeMap<usize, u32> = BTreeMap::new();
        for &(v, key, _) in &members {
            let l = label_of.entry(key).or_insert(v);
            *l = (*l).min(v);
        }
        let mut out = ClusterPartition::default();
        for (v, key, flags) in members {
            let label = label_of[&key];
            out.labels.insert(v, label);
            out.clusters.insert(label, flags);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// XOR of the logical flags of odd clusters.
    pub fn correction(&self) -> bool {
        self.clusters
            .values()
            .filter(|f| f.parity)
            .fold(false, |acc, f| acc ^ f.logical)
    }
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

/// Textbook Union-Find clustering with half-edge growth on the explicit graph.
///
/// Each round every odd cluster that has not reached a boundary adds one
/// half-edge of support to every incident edge from each of its vertices.
/// Fully supported edges fuse their endpoints; a fully supported boundary
/// edge marks the cluster as touching that boundary.
pub fn reference_uf_decode(graph: &DecodingGraph, defects: &DefectSet) -> Result<(ClusterPartition, bool)> {
    let n = graph.num_vertices();
    defects.validate(n)?;
    let logical_edge: Vec<bool> = graph.edges.iter().map(|e| graph.crosses_logical(e)).collect();
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, e) in graph.edges.iter().enumerate() {
        incident[e.u].push(i);
        if let Some(v) = e.v {
            incident[v].push(i);
        }
    }

    let mut dsu = Dsu {
        parent: (0..n).collect(),
    };
    let mut in_cluster = vec![false; n];
    let mut parity = vec![false; n];
    let mut boundary = vec![false; n];
    let mut logical = vec![false; n];
    for &d in &defects.defects {
        in_cluster[d as usize] = true;
        parity[d as usize] = true;
    }
    let mut support = vec![0u8; graph.edges.len()];

    loop {
        let growing: Vec<bool> = (0..n)
            .map(|v| {
                if !in_cluster[v] {
                    return false;
                }
                let r = dsu.find(v);
                parity[r] && !boundary[r]
            })
            .collect();
        if !growing.iter().any(|&g| g) {
            break;
        }
        let mut fused = Vec::new();
        for (i, e) in graph.edges.iter().enumerate() {
            if support[i] >= 2 {
                continue;
            }
            let mut add = u8::from(growing[e.u]);
            if let Some(v) = e.v {
                add += u8::from(growing[v]);
            }
            if add > 0 {
                support[i] = (support[i] + add).min(2);
                if support[i] == 2 {
                    fused.push(i);
                }
            }
        }
        for i in fused {
            let e = &graph.edges[i];
            match e.v {
                None => {
                    let r = dsu.find(e.u);
                    boundary[r] = true;
                    logical[r] |= logical_edge[i];
                }
                Some(v) => {
                    let a = e.u;
                    in_cluster[a] = true;
                    in_cluster[v] = true;
                    let (ra, rv) = (dsu.find(a), dsu.find(v));
                    if ra != rv {
                        dsu.parent[rv] = ra;
                        parity[ra] ^= parity[rv];
                        boundary[ra] |= boundary[rv];
                        logical[ra] |= logical[rv];
                    }
                }
            }
        }
    }

    let partition = ClusterPartition::from_groups(defects.defects.iter().map(|&d| {
        let r = dsu.find(d as usize);
        (
            d,
            r,
            ClusterFlags {
                parity: parity[r],
                boundary: boundary[r],
                logical: logical[r],
            },
        )
    }));
    let correction = partition.correction();
    Ok((partition, correction))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExhaustiveResult {
    pub correction: bool,
    /// Weight of the lightest explanation.
    pub weight: usize,
    /// Explanations of that weight exist with both logical parities.
    pub ambiguous: bool,
}

/// Minimum-cardinality edge set reproducing the syndrome, by enumeration.
/// Ties between logical parities resolve to 0.
pub fn exhaustive_decode(graph: &DecodingGraph, defects: &DefectSet, max_weight: usize) -> Result<ExhaustiveResult> {
    let n = graph.num_vertices();
    defects.validate(n)?;
    if n > 128 {
        return Err(Error::InvalidConfig(format!(
            "exhaustive decoding supports at most 128 vertices, graph has {n}"
        )));
    }
    let bit = |v: usize| 1u128 << v;
    let edges: Vec<(u128, bool)> = graph
        .edges
        .iter()
        .map(|e| (bit(e.u) ^ e.v.map_or(0, bit), graph.crosses_logical(e)))
        .collect();
    let target = defects.defects.iter().fold(0u128, |acc, &d| acc ^ bit(d as usize));

    fn search(edges: &[(u128, bool)], start: usize, left: usize, sig: u128, par: bool, target: u128, seen: &mut [bool; 2]) {
        if left == 0 {
            if sig == target {
                seen[par as usize] = true;
            }
            return;
        }
        for i in start..edges.len() {
            let (s, l) = edges[i];
            search(edges, i + 1, left - 1, sig ^ s, par ^ l, target, seen);
            if seen[0] && seen[1] {
                return;
            }
        }
    }

    for weight in 0..=max_weight {
        let mut seen = [false; 2];
        search(&edges, 0, weight, 0, false, target, &mut seen);
        if seen[0] || seen[1] {
            return Ok(ExhaustiveResult {
                correction: !seen[0],
                weight,
                ambiguous: seen[0] && seen[1],
            });
        }
    }
    Err(Error::NoExplanation(max_weight))
}
