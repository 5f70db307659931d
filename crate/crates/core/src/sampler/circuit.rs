//! Syndrome-extraction circuits with explicit noise channels.
//!
//! A [`Circuit`] is a flat list of Clifford operations interleaved with
//! [`Op::Noise`] markers. Each marker refers to a [`Channel`] describing which
//! Pauli errors may occur at that point and with which probability class.
//! Channels are numbered in circuit order, which lets fault injection and the
//! shot sampler walk the circuit once while consuming faults in order.

use crate::geometry::layout::{Check, Corner, Layout};
use crate::geometry::NoiseModel;

/// Entangling order of the four CNOT layers for each check type.
///
/// Z checks interact with SE, SW, NE, NW and X checks with SE, NE, SW, NW.
/// Each layer pairs corners on the same diagonal, so no data qubit is used
/// twice in a layer, and every X/Z pair of plaquettes touches its two shared
/// data qubits in the same relative order. With this order every hook from an
/// X ancilla lands on a vertical pair of data qubits and every mid-round data
/// error is seen one round later by the check on the positive side of the
/// lattice, matching the diagonals of the hooked metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schedule {
    pub z_order: [Corner; 4],
    pub x_order: [Corner; 4],
}

impl Default for Schedule {
    fn default() -> Self {
        use Corner::*;
        Schedule {
            z_order: [SouthEast, SouthWest, NorthEast, NorthWest],
            x_order: [SouthEast, NorthEast, SouthWest, NorthWest],
        }
    }
}

impl Schedule {
    /// Layer at which `check` touches each of its corners.
    fn layer_of(&self, check: &Check, corner: Corner) -> usize {
        let order = match check.basis {
            crate::geometry::layout::CheckBasis::Z => &self.z_order,
            crate::geometry::layout::CheckBasis::X => &self.x_order,
        };
        order.iter().position(|&c| c == corner).expect("complete order")
    }

    /// True when the schedule measures commuting stabilizers: no data qubit is
    /// used twice in a layer and every overlapping X/Z pair is interleaved
    /// consistently on both shared qubits.
    pub fn is_valid(&self, layout: &Layout) -> bool {
        let mut used = vec![[false; 4]; layout.num_data()];
        for check in layout.z_checks().iter().chain(layout.x_checks()) {
            for corner in Corner::ALL {
                if let Some(q) = check.data_at(corner) {
                    let layer = self.layer_of(check, corner);
                    if used[q][layer] {
                        return false;
                    }
                    used[q][layer] = true;
                }
            }
        }
        for z in layout.z_checks() {
            for x in layout.x_checks() {
                let mut signs = Vec::new();
                for zc in Corner::ALL {
                    for xc in Corner::ALL {
                        if let (Some(a), Some(b)) = (z.data_at(zc), x.data_at(xc)) {
                            if a == b {
                                signs.push(self.layer_of(z, zc) < self.layer_of(x, xc));
                            }
                        }
                    }
                }
                if signs.len() == 2 && signs[0] != signs[1] {
                    return false;
                }
            }
        }
        true
    }
}

/// Probability class of a channel, resolved against `p` at sampling time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProbClass {
    /// Two-qubit depolarization after a CNOT, probability `p`.
    TwoQubit,
    /// Single-qubit depolarization after a one-qubit gate, reset, or idle, `p/10`.
    SingleQubit,
    /// Classical flip of a measurement or a phenomenological data flip, `p`.
    Flip,
}

impl ProbClass {
    pub const ALL: [ProbClass; 3] = [ProbClass::TwoQubit, ProbClass::SingleQubit, ProbClass::Flip];

    pub fn probability(self, p: f64) -> f64 {
        match self {
            ProbClass::TwoQubit | ProbClass::Flip => p,
            ProbClass::SingleQubit => p / 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    Depolarize1(u32),
    Depolarize2(u32, u32),
    FlipX(u32),
}

impl ChannelKind {
    /// Number of equally likely non-identity outcomes.
    pub fn options(self) -> usize {
        match self {
            ChannelKind::Depolarize1(_) => 3,
            ChannelKind::Depolarize2(..) => 15,
            ChannelKind::FlipX(_) => 1,
        }
    }

    /// Pauli applied by outcome `option`, as `(qubit, x, z)` components.
    pub fn paulis(self, option: usize) -> [(u32, bool, bool); 2] {
        // Single-qubit codes: 1 = X, 2 = Y, 3 = Z.
        let code = |k: usize| (k == 1 || k == 2, k == 2 || k == 3);
        match self {
            ChannelKind::Depolarize1(q) => {
                let (x, z) = code(option + 1);
                [(q, x, z), (q, false, false)]
            }
            ChannelKind::Depolarize2(a, b) => {
                let k = option + 1;
                let (xa, za) = code(k / 4);
                let (xb, zb) = code(k % 4);
                [(a, xa, za), (b, xb, zb)]
            }
            ChannelKind::FlipX(q) => [(q, true, false), (q, false, false)],
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Channel {
    pub kind: ChannelKind,
    pub class: ProbClass,
    /// Round whose operations this channel belongs to.
    pub round: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    H(u32),
    Cnot(u32, u32),
    /// Z-basis measurement of a Z ancilla into record `record`.
    Measure { qubit: u32, record: u32 },
    Reset(u32),
    Noise(u32),
}

#[derive(Debug, Clone)]
pub struct Circuit {
    pub ops: Vec<Op>,
    pub channels: Vec<Channel>,
    /// Index into `ops` where each round starts, plus a final end marker.
    pub round_starts: Vec<usize>,
    pub rounds: usize,
    pub num_qubits: usize,
    /// Z checks measured per round; records are `round * checks_per_round + check`.
    pub checks_per_round: usize,
    pub logical_support: Vec<u32>,
}

impl Circuit {
    /// Memory experiment in the Z basis. The last of `rounds` rounds is an
    /// ideal readout round so that every fault is detectable.
    pub fn memory(layout: &Layout, rounds: usize, model: NoiseModel, schedule: Schedule) -> Self {
        let mut b = Builder::new(layout, rounds);
        match model {
            NoiseModel::CircuitLevel => {
                for t in 0..rounds {
                    b.start_round(t);
                    let noisy = t + 1 < rounds;
                    if t == 0 {
                        let all: Vec<u32> = (0..layout.num_qubits() as u32).collect();
                        for &q in &all {
                            b.op(Op::Reset(q));
                        }
                        // Data preparation noise applies even when the only
                        // round is the ideal readout, so every shape has data errors.
                        if noisy {
                            b.depolarize1(&all);
                        } else {
                            b.depolarize1(&all[..layout.num_data()]);
                        }
                    } else if noisy {
                        // Reset noise from the previous round's ancilla reset. It is
                        // booked here so that it lands in the round it disturbs and
                        // never touches the ideal readout round.
                        let ancillas: Vec<u32> =
                            (layout.num_data() as u32..layout.num_qubits() as u32).collect();
                        b.depolarize1(&ancillas);
                    }
                    b.circuit_round(t, schedule, noisy);
                }
            }
            NoiseModel::Phenomenological => {
                for t in 0..rounds {
                    b.start_round(t);
                    let data: Vec<u32> = (0..layout.num_data() as u32).collect();
                    for &q in &data {
                        b.channel(ChannelKind::FlipX(q), ProbClass::Flip);
                    }
                    b.z_extraction(t, schedule, t + 1 < rounds);
                }
            }
        }
        b.finish()
    }
}

struct Builder<'a> {
    layout: &'a Layout,
    round: u32,
    circuit: Circuit,
}

impl<'a> Builder<'a> {
    fn new(layout: &'a Layout, rounds: usize) -> Self {
        Builder {
            layout,
            round: 0,
            circuit: Circuit {
                ops: Vec::new(),
                channels: Vec::new(),
                round_starts: Vec::with_capacity(rounds + 1),
                rounds,
                num_qubits: layout.num_qubits(),
                checks_per_round: layout.z_checks().len(),
                logical_support: layout.logical_support().iter().map(|&q| q as u32).collect(),
            },
        }
    }

    fn start_round(&mut self, t: usize) {
        self.round = t as u32;
        self.circuit.round_starts.push(self.circuit.ops.len());
    }

    fn op(&mut self, op: Op) {
        self.circuit.ops.push(op);
    }

    fn channel(&mut self, kind: ChannelKind, class: ProbClass) {
        let id = self.circuit.channels.len() as u32;
        self.circuit.channels.push(Channel {
            kind,
            class,
            round: self.round,
        });
        self.circuit.ops.push(Op::Noise(id));
    }

    fn depolarize1(&mut self, qubits: &[u32]) {
        for &q in qubits {
            self.channel(ChannelKind::Depolarize1(q), ProbClass::SingleQubit);
        }
    }

    fn idle_except(&mut self, busy: &[bool], noisy: bool) {
        if !noisy {
            return;
        }
        let idle: Vec<u32> = (0..busy.len() as u32).filter(|&q| !busy[q as usize]).collect();
        self.depolarize1(&idle);
    }

    /// CNOT pairs `(control, target)` of one entangling layer.
    fn cnot_layer(&self, layer: usize, schedule: Schedule, with_x: bool) -> Vec<(u32, u32)> {
        let mut pairs = Vec::new();
        for ch in self.layout.z_checks() {
            if let Some(q) = ch.data_at(schedule.z_order[layer]) {
                pairs.push((q as u32, ch.ancilla as u32));
            }
        }
        if with_x {
            for ch in self.layout.x_checks() {
                if let Some(q) = ch.data_at(schedule.x_order[layer]) {
                    pairs.push((ch.ancilla as u32, q as u32));
                }
            }
        }
        pairs
    }

    fn circuit_round(&mut self, t: usize, schedule: Schedule, noisy: bool) {
        let n = self.layout.num_qubits();
        let x_anc: Vec<u32> = self.layout.x_checks().iter().map(|c| c.ancilla as u32).collect();
        let z_anc: Vec<u32> = self.layout.z_checks().iter().map(|c| c.ancilla as u32).collect();

        let h_layer = |b: &mut Self| {
            let mut busy = vec![false; n];
            for &q in &x_anc {
                b.op(Op::H(q));
                busy[q as usize] = true;
            }
            if noisy {
                b.depolarize1(&x_anc);
            }
            b.idle_except(&busy, noisy);
        };

        h_layer(self);
        for layer in 0..4 {
            let pairs = self.cnot_layer(layer, schedule, true);
            let mut busy = vec![false; n];
            for &(c, tq) in &pairs {
                self.op(Op::Cnot(c, tq));
                busy[c as usize] = true;
                busy[tq as usize] = true;
            }
            if noisy {
                for &(c, tq) in &pairs {
                    self.channel(ChannelKind::Depolarize2(c, tq), ProbClass::TwoQubit);
                }
            }
            self.idle_except(&busy, noisy);
        }
        h_layer(self);

        // Measure and reset every ancilla. Only Z-check outcomes are recorded;
        // X-check outcomes feed the X graph, which is decoded separately.
        let mut busy = vec![false; n];
        for (i, &q) in z_anc.iter().enumerate() {
            if noisy {
                self.channel(ChannelKind::FlipX(q), ProbClass::Flip);
            }
            let record = (t * z_anc.len() + i) as u32;
            self.op(Op::Measure { qubit: q, record });
        }
        let ancillas: Vec<u32> = z_anc.iter().chain(&x_anc).copied().collect();
        for &q in &ancillas {
            self.op(Op::Reset(q));
            busy[q as usize] = true;
        }
        self.idle_except(&busy, noisy);
    }

    /// Noiseless Z-check extraction followed by optional measurement flips.
    fn z_extraction(&mut self, t: usize, schedule: Schedule, flips: bool) {
        for layer in 0..4 {
            for (c, tq) in self.cnot_layer(layer, schedule, false) {
                self.op(Op::Cnot(c, tq));
            }
        }
        let z_anc: Vec<u32> = self.layout.z_checks().iter().map(|c| c.ancilla as u32).collect();
        for (i, &q) in z_anc.iter().enumerate() {
            if flips {
                self.channel(ChannelKind::FlipX(q), ProbClass::Flip);
            }
            let record = (t * z_anc.len() + i) as u32;
            self.op(Op::Measure { qubit: q, record });
            self.op(Op::Reset(q));
        }
    }

    fn finish(mut self) -> Circuit {
        self.circuit.round_starts.push(self.circuit.ops.len());
        self.circuit
    }
}
