//! Collision Clustering.
//!
//! Clusters are never stored as vertex sets. Each defect keeps a growth radius
//! in the Cluster Growth Stack (CGS), and two defects' balls collide once
//! their radii sum to their closed-form distance. The loop is
//!
//! * **grow**: every defect whose cluster is valid (odd, not at a boundary)
//!   grows by half an edge; boundary hits go straight to the merge stack;
//! * **match**: pairwise collision tests, colliding pairs are pushed;
//! * **union**: pop the merge stack and link roots in the parent table,
//!
//! until no cluster is valid. The correction is the XOR of the logical
//! registers of the odd roots.

use crate::error::{Error, Result};
use crate::geometry::{BoundaryDistance, DecodingGraph, DistanceFunction, GraphCoord, SurfaceCodeMetric};
use crate::instrument::{NoTally, OpCounters, OpKind, Tally};
use crate::oracles::{ClusterFlags, ClusterPartition};
use crate::sampler::DefectSet;

/// Merge-stack sentinel for the non-logical boundary.
pub const BOUNDARY: u32 = u32::MAX - 1;
/// Merge-stack sentinel for the logical boundary.
pub const LOGICAL: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pruning {
    /// All `s(s-1)/2` pairs every pass.
    #[default]
    None,
    /// Skip pairs in which neither defect grew this pass.
    Valid,
    /// As `Valid`, and stop scanning once the time gap alone rules out a collision.
    ValidTime,
}

impl Pruning {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(Pruning::None),
            "valid" => Some(Pruning::Valid),
            "valid+time" => Some(Pruning::ValidTime),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Pruning::None => "none",
            Pruning::Valid => "valid",
            Pruning::ValidTime => "valid+time",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DecoderOptions {
    pub pruning: Pruning,
    /// Merge-stack bound; `None` sizes it per shot as `s(s-1)/2 + s`.
    pub merge_stack_capacity: Option<usize>,
    /// Halve parent paths during lookups. Roots are unchanged.
    pub path_halving: bool,
}

impl DecoderOptions {
    pub fn with_pruning(pruning: Pruning) -> Self {
        DecoderOptions {
            pruning,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CgsEntry {
    pub vertex: u32,
    /// Half-edge units.
    pub growth: u32,
    pub valid: bool,
}

#[derive(Debug, Clone, Default)]
pub struct ParentTable {
    parent: Vec<u32>,
}

impl ParentTable {
    fn reset(&mut self, s: usize) {
        self.parent.clear();
        self.parent.extend(0..s as u32);
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn parent(&self, slot: u32) -> u32 {
        self.parent[slot as usize]
    }

    /// Root of `slot` without modifying the table.
    pub fn root(&self, mut slot: u32) -> u32 {
        while self.parent[slot as usize] != slot {
            slot = self.parent[slot as usize];
        }
        slot
    }

    fn find<T: Tally>(&mut self, mut slot: u32, halving: bool, tally: &mut T) -> u32 {
        loop {
            tally.bump(OpKind::ParentLookup, 1);
            let p = self.parent[slot as usize];
            if p == slot {
                return slot;
            }
            if halving {
                let gp = self.parent[p as usize];
                self.parent[slot as usize] = gp;
                slot = gp;
            } else {
                slot = p;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MergeStackEntry {
    pub a: u32,
    /// Defect slot, [`BOUNDARY`], or [`LOGICAL`].
    pub b: u32,
}

#[derive(Debug, Clone, Default)]
pub struct MergeStack {
    entries: Vec<MergeStackEntry>,
    capacity: usize,
}

impl MergeStack {
    fn push<T: Tally>(&mut self, entry: MergeStackEntry, tally: &mut T) -> Result<()> {
        if self.entries.len() >= self.capacity {
            return Err(Error::MergeStackOverflow {
                capacity: self.capacity,
            });
        }
        tally.bump(OpKind::MergePush, 1);
        self.entries.push(entry);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }
}

/// Per-slot registers; meaningful at roots.
#[derive(Debug, Clone, Default)]
pub struct ClusterRegisters {
    pub parity: Vec<bool>,
    pub boundary: Vec<bool>,
    pub logical: Vec<bool>,
}

impl ClusterRegisters {
    fn reset(&mut self, s: usize) {
        for r in [&mut self.parity, &mut self.boundary, &mut self.logical] {
            r.clear();
        }
        self.parity.resize(s, true);
        self.boundary.resize(s, false);
        self.logical.resize(s, false);
    }

    fn is_valid(&self, root: usize) -> bool {
        self.parity[root] && !self.boundary[root]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DecodeOutcome {
    pub correction: bool,
    pub growth_iterations: u64,
    pub op_counts: OpCounters,
}

impl DecodeOutcome {
    pub const CSV_HEADER: &'static str = "shot_id,correction,true_flip,iterations,comparisons,unions";

    pub fn csv_row(&self, set: &DefectSet) -> String {
        format!(
            "{},{},{},{},{},{}",
            set.shot_id,
            u8::from(self.correction),
            u8::from(set.true_logical_flip),
            self.growth_iterations,
            self.op_counts.comparisons,
            self.op_counts.merge_pops
        )
    }
}

/// Reusable decoder for one graph. Buffers persist across shots.
#[derive(Debug, Clone)]
pub struct Decoder<M: DistanceFunction = SurfaceCodeMetric> {
    coords: Vec<GraphCoord>,
    boundary: Vec<BoundaryDistance>,
    metric: M,
    opts: DecoderOptions,
    cgs: Vec<CgsEntry>,
    parents: ParentTable,
    registers: ClusterRegisters,
    merge: MergeStack,
    /// Largest growth in the CGS after the latest grow pass.
    max_growth: u32,
    correction: bool,
    iterations: u64,
}

impl Decoder<SurfaceCodeMetric> {
    pub fn new(graph: &DecodingGraph, opts: DecoderOptions) -> Self {
        Self::with_metric(graph, graph.metric(), opts)
    }
}

impl<M: DistanceFunction> Decoder<M> {
    pub fn with_metric(graph: &DecodingGraph, metric: M, opts: DecoderOptions) -> Self {
        let boundary = graph.vertices.iter().map(|&c| metric.boundary(c)).collect();
        Decoder {
            coords: graph.vertices.clone(),
            boundary,
            metric,
            opts,
            cgs: Vec::new(),
            parents: ParentTable::default(),
            registers: ClusterRegisters::default(),
            merge: MergeStack::default(),
            max_growth: 0,
            correction: false,
            iterations: 0,
        }
    }

    pub fn options(&self) -> DecoderOptions {
        self.opts
    }

    pub fn set_options(&mut self, opts: DecoderOptions) {
        self.opts = opts;
    }

    pub fn cgs(&self) -> &[CgsEntry] {
        &self.cgs
    }

    pub fn parents(&self) -> &ParentTable {
        &self.parents
    }

    pub fn registers(&self) -> &ClusterRegisters {
        &self.registers
    }

    pub fn merge_stack(&self) -> &MergeStack {
        &self.merge
    }

    /// Correction bit as of the latest grow pass.
    pub fn correction(&self) -> bool {
        self.correction
    }

    /// Load a shot: one CGS entry per defect, every slot its own odd root.
    pub fn init(&mut self, defects: &DefectSet) -> Result<()> {
        defects.validate(self.coords.len())?;
        let s = defects.defects.len();
        self.cgs.clear();
        self.cgs.extend(defects.defects.iter().map(|&vertex| CgsEntry {
            vertex,
            growth: 0,
            valid: true,
        }));
        self.parents.reset(s);
        self.registers.reset(s);
        self.merge.entries.clear();
        self.merge.capacity = self
            .opts
            .merge_stack_capacity
            .unwrap_or(s * s.saturating_sub(1) / 2 + s);
        self.max_growth = 0;
        self.correction = false;
        self.iterations = 0;
        Ok(())
    }

    /// One grow pass. Returns `false` when no cluster is valid, in which
    /// case nothing grew and the decode is finished.
    pub fn grow<T: Tally>(&mut self, tally: &mut T) -> Result<bool> {
        let halving = self.opts.path_halving;
        let mut grew = false;
        let mut correction = false;
        let mut max_growth = 0;
        for i in 0..self.cgs.len() {
            tally.bump(OpKind::CgsRead, 1);
            let root = self.parents.find(i as u32, halving, tally) as usize;
            if root == i && self.registers.parity[i] {
                correction ^= self.registers.logical[i];
            }
            let entry = &mut self.cgs[i];
            if self.registers.is_valid(root) {
                entry.growth += 1;
                entry.valid = true;
                tally.bump(OpKind::CgsWrite, 1);
                grew = true;
                let b = self.boundary[entry.vertex as usize];
                if entry.growth >= 2 * b.nearest {
                    let side = if b.is_logical_side { LOGICAL } else { BOUNDARY };
                    let e = MergeStackEntry { a: i as u32, b: side };
                    self.merge.push(e, tally)?;
                }
            } else if entry.valid {
                entry.valid = false;
                tally.bump(OpKind::CgsWrite, 1);
            }
            max_growth = max_growth.max(entry.growth);
        }
        self.correction = correction;
        self.max_growth = max_growth;
        if grew {
            self.iterations += 1;
            tally.bump(OpKind::GrowIteration, 1);
        }
        Ok(grew)
    }

    #[inline]
    fn collides(&self, a: &CgsEntry, b: &CgsEntry) -> bool {
        let d = self
            .metric
            .distance(self.coords[a.vertex as usize], self.coords[b.vertex as usize]);
        a.growth + b.growth >= 2 * d
    }

    /// Pairwise collision tests after a grow pass.
    pub fn match_collisions<T: Tally>(&mut self, tally: &mut T) -> Result<()> {
        let s = self.cgs.len();
        let skip_invalid = self.opts.pruning != Pruning::None;
        let time_window = self.opts.pruning == Pruning::ValidTime;
        for i in 0..s {
            let a = self.cgs[i];
            let ta = self.coords[a.vertex as usize].t;
            for j in i + 1..s {
                let b = self.cgs[j];
                if time_window {
                    // Defects are sorted by round, and the metric is at least |dt|.
                    let dt = (self.coords[b.vertex as usize].t - ta) as u32;
                    if 2 * dt > a.growth + self.max_growth {
                        break;
                    }
                }
                if skip_invalid && !a.valid && !b.valid {
                    continue;
                }
                tally.bump(OpKind::Comparison, 1);
                tally.bump(OpKind::CgsRead, 2);
                if self.collides(&a, &b) {
                    let e = MergeStackEntry { a: i as u32, b: j as u32 };
                    self.merge.push(e, tally)?;
                }
            }
        }
        Ok(())
    }

    /// Drain the merge stack. The lower root slot survives each link.
    pub fn union<T: Tally>(&mut self, tally: &mut T) {
        let halving = self.opts.path_halving;
        while let Some(MergeStackEntry { a, b }) = self.merge.entries.pop() {
            tally.bump(OpKind::MergePop, 1);
            let ra = self.parents.find(a, halving, tally) as usize;
            let regs = &mut self.registers;
            match b {
                BOUNDARY | LOGICAL => {
                    regs.boundary[ra] = true;
                    regs.logical[ra] |= b == LOGICAL;
                }
                _ => {
                    let rb = self.parents.find(b, halving, tally) as usize;
                    if ra == rb {
                        continue;
                    }
                    let (keep, gone) = (ra.min(rb), ra.max(rb));
                    self.parents.parent[gone] = keep as u32;
                    regs.parity[keep] ^= regs.parity[gone];
                    regs.boundary[keep] |= regs.boundary[gone];
                    regs.logical[keep] |= regs.logical[gone];
                }
            }
        }
    }

    /// Run grow, match and union until no cluster is valid.
    pub fn run<T: Tally>(&mut self, tally: &mut T) -> Result<bool> {
        while self.grow(tally)? {
            self.match_collisions(tally)?;
            self.union(tally);
        }
        Ok(self.correction)
    }

    pub fn decode(&mut self, defects: &DefectSet) -> Result<DecodeOutcome> {
        let mut counts = OpCounters::default();
        self.init(defects)?;
        let correction = self.run(&mut counts)?;
        Ok(DecodeOutcome {
            correction,
            growth_iterations: self.iterations,
            op_counts: counts,
        })
    }

    /// Decode without counting operations.
    pub fn decode_fast(&mut self, defects: &DefectSet) -> Result<bool> {
        self.init(defects)?;
        self.run(&mut NoTally)
    }

    /// Current clusters, labelled by smallest defect vertex id.
    pub fn partition(&self) -> ClusterPartition {
        ClusterPartition::from_groups(self.cgs.iter().enumerate().map(|(i, e)| {
            let r = self.parents.root(i as u32) as usize;
            let flags = ClusterFlags {
                parity: self.registers.parity[r],
                boundary: self.registers.boundary[r],
                logical: self.registers.logical[r],
            };
            (e.vertex, r, flags)
        }))
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }
}

/// Baseline decode: every pair is compared on every pass.
pub fn decode(graph: &DecodingGraph, defects: &DefectSet, opts: DecoderOptions) -> Result<DecodeOutcome> {
    let opts = DecoderOptions {
        pruning: Pruning::None,
        ..opts
    };
    Decoder::new(graph, opts).decode(defects)
}

/// Decode with the pruning mode in `opts`. The correction is identical to [`decode`].
pub fn decode_optimized(graph: &DecodingGraph, defects: &DefectSet, opts: DecoderOptions) -> Result<DecodeOutcome> {
    Decoder::new(graph, opts).decode(defects)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_graph, NoiseModel};

    fn graph() -> DecodingGraph {
        build_graph(5, 5, NoiseModel::Phenomenological).unwrap()
    }

    #[test]
    fn empty_syndrome() {
        let g = graph();
        let mut dec = Decoder::new(&g, DecoderOptions::default());
        let out = dec.decode(&DefectSet::default()).unwrap();
        assert!(!out.correction);
        assert_eq!(out.growth_iterations, 0);
        assert!(dec.cgs().is_empty());
    }

    #[test]
    fn init_makes_odd_singletons() {
        let g = graph();
        let mut dec = Decoder::new(&g, DecoderOptions::default());
        dec.init(&DefectSet::new(0, vec![1, 7, 30], false)).unwrap();
        assert_eq!(dec.cgs().len(), 3);
        for i in 0..3u32 {
            assert_eq!(dec.parents().parent(i), i);
            assert!(dec.registers().parity[i as usize]);
            assert!(!dec.registers().boundary[i as usize]);
            assert!(!dec.registers().logical[i as usize]);
        }
        assert!(dec.merge_stack().is_empty());
    }

    #[test]
    fn init_rejects_out_of_range() {
        let g = graph();
        let mut dec = Decoder::new(&g, DecoderOptions::default());
        let n = g.num_vertices() as u32;
        assert!(matches!(
            dec.init(&DefectSet::new(0, vec![n], false)),
            Err(Error::DefectOutOfRange { .. })
        ));
    }

    fn vertex_at(g: &DecodingGraph, column: i32, t: i32) -> u32 {
        g.vertices
            .iter()
            .position(|c| c.column() == column && c.t == t)
            .unwrap() as u32
    }

    #[test]
    fn boundary_hit_after_two_half_edges() {
        let g = build_graph(3, 1, NoiseModel::Phenomenological).unwrap();
        let v = vertex_at(&g, 1, 0);
        let mut dec = Decoder::new(&g, DecoderOptions::default());
        dec.init(&DefectSet::new(0, vec![v], false)).unwrap();
        let mut t = NoTally;
        assert!(dec.grow(&mut t).unwrap());
        assert!(dec.merge_stack().is_empty());
        dec.match_collisions(&mut t).unwrap();
        dec.union(&mut t);
        assert!(dec.grow(&mut t).unwrap());
        assert_eq!(dec.merge_stack().len(), 1);
        dec.union(&mut t);
        assert!(dec.registers().boundary[0] && dec.registers().logical[0]);
        assert!(!dec.grow(&mut t).unwrap());
        assert!(dec.correction());
    }

    #[test]
    fn pair_collision_predicate() {
        let g = graph();
        let mut dec = Decoder::new(&g, DecoderOptions::default());
        let a = CgsEntry { vertex: 0, growth: 2, valid: true };
        let two = g.vertices.iter().position(|&c| g.metric().distance(g.vertices[0], c) == 2).unwrap();
        let three = g.vertices.iter().position(|&c| g.metric().distance(g.vertices[0], c) == 3).unwrap();
        dec.init(&DefectSet::default()).unwrap();
        assert!(dec.collides(&a, &CgsEntry { vertex: two as u32, growth: 2, valid: true }));
        assert!(!dec.collides(&a, &CgsEntry { vertex: three as u32, growth: 2, valid: true }));
    }

    #[test]
    fn baseline_counts_all_pairs() {
        let g = graph();
        let mut dec = Decoder::new(&g, DecoderOptions::default());
        let mut ids = vec![vertex_at(&g, 2, 0), vertex_at(&g, 3, 2), vertex_at(&g, 2, 4), vertex_at(&g, 4, 4)];
        ids.sort_unstable();
        dec.init(&DefectSet::new(0, ids.clone(), false)).unwrap();
        let mut c = OpCounters::default();
        dec.grow(&mut c).unwrap();
        dec.match_collisions(&mut c).unwrap();
        assert_eq!(c.comparisons, 6);
    }

    #[test]
    fn even_merge_and_idempotent_union() {
        let g = graph();
        let e = g.edges.iter().find(|e| e.v.is_some()).unwrap();
        let (a, b) = (e.u.min(e.v.unwrap()) as u32, e.u.max(e.v.unwrap()) as u32);
        let mut dec = Decoder::new(&g, DecoderOptions::default());
        dec.init(&DefectSet::new(0, vec![a, b], false)).unwrap();
        let mut t = NoTally;
        dec.grow(&mut t).unwrap();
        dec.match_collisions(&mut t).unwrap();
        dec.merge.entries.push(MergeStackEntry { a: 0, b: 1 });
        dec.merge.capacity += 1;
        dec.union(&mut t);
        assert_eq!(dec.parents().root(1), 0);
        assert!(!dec.registers().parity[0]);
        assert!(!dec.grow(&mut t).unwrap());
        assert!(dec.cgs().iter().all(|e| !e.valid));
    }

    #[test]
    fn logical_sentinel_sets_both_registers() {
        let g = graph();
        let mut dec = Decoder::new(&g, DecoderOptions::default());
        dec.init(&DefectSet::new(0, vec![3], false)).unwrap();
        dec.merge.entries.push(MergeStackEntry { a: 0, b: LOGICAL });
        dec.union(&mut NoTally);
        assert!(dec.registers().boundary[0]);
        assert!(dec.registers().logical[0]);
    }

    #[test]
    fn overflow_is_reported() {
        let g = graph();
        let opts = DecoderOptions {
            merge_stack_capacity: Some(0),
            ..Default::default()
        };
        let e = g.edges.iter().find(|e| e.v.is_some()).unwrap();
        let (a, b) = (e.u.min(e.v.unwrap()) as u32, e.u.max(e.v.unwrap()) as u32);
        let r = Decoder::new(&g, opts).decode(&DefectSet::new(0, vec![a, b], false));
        assert!(matches!(r, Err(Error::MergeStackOverflow { capacity: 0 })));
    }

    #[test]
    fn pruning_parse_round_trip() {
        for p in [Pruning::None, Pruning::Valid, Pruning::ValidTime] {
            assert_eq!(Pruning::parse(p.as_str()), Some(p));
        }
        assert_eq!(Pruning::parse("fast"), None);
    }
}
