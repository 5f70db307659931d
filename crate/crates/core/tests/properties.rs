use std::sync::OnceLock;

use proptest::prelude::*;

use collision_clustering::decoder::{decode, decode_optimized, Decoder, DecoderOptions, Pruning};
use collision_clustering::geometry::{
    build_graph, distance_circuit, distance_phenomenological, distance_weighted, AxisWeights, DecodingGraph,
    GraphCoord, NoiseModel,
};
use collision_clustering::instrument::{fit_scaling, OpCounters};
use collision_clustering::oracles::{bfs_all, reference_uf_decode};
use collision_clustering::sampler::{flip_edges, syndrome, CircuitSampler, DefectSet, NoiseParams, RngStream};

fn graphs() -> &'static [DecodingGraph; 2] {
    static G: OnceLock<[DecodingGraph; 2]> = OnceLock::new();
    G.get_or_init(|| {
        [
            build_graph(5, 5, NoiseModel::Phenomenological).unwrap(),
            build_graph(5, 5, NoiseModel::CircuitLevel).unwrap(),
        ]
    })
}

fn coord() -> impl Strategy<Value = GraphCoord> {
    (-20i32..20, -20i32..20, -20i32..20).prop_map(|(a, b, c)| GraphCoord::new(a, b, c))
}

fn defects(n: usize) -> impl Strategy<Value = Vec<u32>> {
    proptest::collection::btree_set(0..n as u32, 0..25).prop_map(|s| s.into_iter().collect())
}

proptest! {
    #[test]
    fn metrics_are_symmetric_and_satisfy_the_triangle_inequality(a in coord(), b in coord(), c in coord()) {
        for f in [distance_phenomenological, distance_circuit] {
            prop_assert_eq!(f(a, b), f(b, a));
            prop_assert!(f(a, c) <= f(a, b) + f(b, c));
            prop_assert_eq!(f(a, a), 0);
        }
        let w = AxisWeights::new(2.0, 1.0, 3.0).unwrap();
        prop_assert_eq!(distance_weighted(a, b, w), distance_weighted(b, a, w));
        prop_assert!(distance_weighted(a, c, w) <= distance_weighted(a, b, w) + distance_weighted(b, c, w) + 1e-9);
    }

    #[test]
    fn weighted_metric_bounds(a in coord(), b in coord(), w1 in 0.1f64..5.0, w2 in 0.1f64..5.0, w3 in 0.1f64..5.0) {
        let unit = AxisWeights::new(1.0, 1.0, 1.0).unwrap();
        prop_assert_eq!(distance_weighted(a, b, unit), distance_phenomenological(a, b) as f64);
        let w = AxisWeights::new(w1, w2, w3).unwrap();
        prop_assert!(distance_weighted(a, b, w) >= w.min() * distance_phenomenological(a, b) as f64 - 1e-9);
    }

    #[test]
    fn circuit_metric_is_bounded_by_time_gap(a in coord(), b in coord()) {
        prop_assert!(distance_circuit(a, b) >= (b.t - a.t).unsigned_abs());
        prop_assert!(distance_phenomenological(a, b) >= (b.t - a.t).unsigned_abs());
    }

    #[test]
    fn fit_is_scale_invariant(k in 0.01f64..100.0, e in 0.5f64..2.5) {
        let pts: Vec<(f64, f64)> = [17.0, 49.0, 97.0, 161.0].iter().map(|&n| (n, 2.0 * f64::powf(n, e) * (1.0 + 0.1 * (n % 3.0)))).collect();
        let scaled: Vec<(f64, f64)> = pts.iter().map(|&(n, y)| (n, k * y)).collect();
        let (f, g) = (fit_scaling(&pts).unwrap(), fit_scaling(&scaled).unwrap());
        prop_assert!((f.exponent - g.exponent).abs() < 1e-9);
        prop_assert!((g.intercept - f.intercept - k.ln()).abs() < 1e-9);
    }

    #[test]
    fn syndrome_lines_round_trip(shot in any::<u64>(), ids in defects(500), flip in any::<bool>()) {
        let set = DefectSet::new(shot, ids, flip);
        prop_assert_eq!(syndrome::parse_line(&syndrome::format_line(&set), 1).unwrap(), set);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn decoder_state_invariants(which in 0usize..2, ids in defects(60)) {
        let g = &graphs()[which];
        let set = DefectSet::new(0, ids, false);
        let mut dec = Decoder::new(g, DecoderOptions::default());
        dec.init(&set).unwrap();
        let mut counts = OpCounters::default();
        let mut prev_growth: Vec<u32> = vec![0; set.defects.len()];
        let mut prev_counts = counts;
        while dec.grow(&mut counts).unwrap() {
            for (i, e) in dec.cgs().iter().enumerate() {
                // Growth never shrinks; the valid bit tracks the root's validity.
                prop_assert!(e.growth >= prev_growth[i]);
                prev_growth[i] = e.growth;
                let r = dec.parents().root(i as u32) as usize;
                let regs = dec.registers();
                prop_assert_eq!(e.valid, regs.parity[r] && !regs.boundary[r]);
            }
            dec.match_collisions(&mut counts).unwrap();
            dec.union(&mut counts);
            let now = counts.as_array();
            prop_assert!(prev_counts.as_array().iter().zip(now).all(|(a, b)| *a <= b));
            prop_assert!(counts.merge_pops <= counts.merge_pushes);
            prev_counts = counts;
            // Sum of root parities keeps the parity of the defect count.
            let s = dec.cgs().len() as u32;
            let roots: Vec<u32> = (0..s).filter(|&i| dec.parents().root(i) == i).collect();
            let parity = roots.iter().filter(|&&r| dec.registers().parity[r as usize]).count();
            prop_assert_eq!(parity % 2, set.defects.len() % 2);
            prop_assert!(dec.iterations() <= 4 * 20);
        }
        // Every chain reaches exactly one root and roots are self-parented.
        let s = dec.cgs().len() as u32;
        for i in 0..s {
            let r = dec.parents().root(i);
            prop_assert_eq!(dec.parents().parent(r), r);
        }
        let (partition, uf) = reference_uf_decode(g, &set).unwrap();
        prop_assert_eq!(dec.partition(), partition);
        prop_assert_eq!(dec.correction(), uf);
    }

    #[test]
    fn pruned_modes_match_baseline(which in 0usize..2, ids in defects(60)) {
        let g = &graphs()[which];
        let set = DefectSet::new(0, ids, false);
        let base = decode(g, &set, DecoderOptions::default()).unwrap();
        for pruning in [Pruning::Valid, Pruning::ValidTime] {
            let out = decode_optimized(g, &set, DecoderOptions::with_pruning(pruning)).unwrap();
            prop_assert_eq!(out.correction, base.correction);
            prop_assert!(out.op_counts.comparisons <= base.op_counts.comparisons);
        }
        let halved = decode(g, &set, DecoderOptions { path_halving: true, ..Default::default() }).unwrap();
        prop_assert_eq!(halved.correction, base.correction);
    }

    #[test]
    fn edge_flips_have_even_defect_parity(which in 0usize..2, picks in proptest::collection::vec(any::<prop::sample::Index>(), 0..12)) {
        let g = &graphs()[which];
        let edges: Vec<usize> = picks.iter().map(|i| i.index(g.edges.len())).collect();
        let set = flip_edges(g, 0, &edges);
        let boundary = edges.iter().filter(|&&i| g.edges[i].v.is_none()).count();
        prop_assert_eq!((set.defects.len() + boundary) % 2, 0);
    }

    #[test]
    fn sampled_defects_come_from_single_faults(seed in any::<u64>(), shot in 0u64..1_000_000) {
        let g = &graphs()[1];
        let s = CircuitSampler::new(g, NoiseParams::new(0.01, NoiseModel::CircuitLevel).unwrap()).unwrap();
        let faults = s.faults(RngStream::new(seed, shot));
        let singles = faults.iter().filter(|&&(c, o)| s.fault_table().effect(c, o).defects().len() == 1).count();
        let set = s.sample(RngStream::new(seed, shot));
        prop_assert_eq!((set.defects.len() + singles) % 2, 0);
        set.validate(g.num_vertices()).unwrap();
    }
}

#[test]
fn every_fault_has_at_most_two_defects_and_is_an_edge() {
    let g = &graphs()[1];
    let s = CircuitSampler::new(g, NoiseParams::new(0.001, NoiseModel::CircuitLevel).unwrap()).unwrap();
    let edges: std::collections::BTreeSet<(usize, Option<usize>)> = g.edges.iter().map(|e| (e.u, e.v)).collect();
    let mut seen = std::collections::BTreeSet::new();
    for (_, _, e) in s.fault_table().iter() {
        let key = match *e.defects() {
            [] => continue,
            [a] => (a as usize, None),
            [a, b] => (a.min(b) as usize, Some(a.max(b) as usize)),
            _ => unreachable!(),
        };
        assert!(edges.contains(&key), "{key:?}");
        seen.insert(key);
    }
    assert_eq!(seen, edges);
}

#[test]
fn diameter_bound_used_above() {
    for g in graphs() {
        let diameter = (0..g.num_vertices()).map(|v| *bfs_all(g, v).iter().max().unwrap()).max().unwrap();
        assert!(diameter <= 20);
    }
}

#[test]
fn defect_rate_is_linear_at_small_p() {
    let g = build_graph(9, 9, NoiseModel::CircuitLevel).unwrap();
    let rate = |p: f64| {
        let s = CircuitSampler::new(&g, NoiseParams::new(p, NoiseModel::CircuitLevel).unwrap()).unwrap();
        let total: usize = (0..20_000).map(|i| s.sample(RngStream::new(4, i)).defects.len()).sum();
        total as f64 / (20_000.0 * g.num_vertices() as f64)
    };
    let ratio = rate(0.0005) / rate(0.00025);
    assert!((ratio - 2.0).abs() < 0.1, "ratio {ratio}");
}
