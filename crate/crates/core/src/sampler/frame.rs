//! Bit-parallel Pauli frame propagation.
//!
//! Each `u64` word holds one bit per lane, so 64 independent frames (shots, or
//! injected faults) are pushed through the circuit together.

use super::circuit::{ChannelKind, Circuit, Op};

pub const LANES: usize = 64;

/// A fault to apply on one lane when the walk reaches its channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct LaneFault {
    pub channel: u32,
    pub lane: u8,
    pub option: u8,
}

#[derive(Debug, Clone)]
pub struct PauliFrame {
    pub x: Vec<u64>,
    pub z: Vec<u64>,
}

impl PauliFrame {
    pub fn new(num_qubits: usize) -> Self {
        PauliFrame {
            x: vec![0; num_qubits],
            z: vec![0; num_qubits],
        }
    }

    fn apply_fault(&mut self, kind: ChannelKind, option: usize, lane: u8) {
        let bit = 1u64 << lane;
        for (q, x, z) in kind.paulis(option) {
            if x {
                self.x[q as usize] ^= bit;
            }
            if z {
                self.z[q as usize] ^= bit;
            }
        }
    }
}

/// Output of a walk: measurement flips per record (lane words) and the
/// logical-observable flip word.
#[derive(Debug, Clone)]
pub struct WalkResult {
    /// First round covered by `records`.
    pub first_round: usize,
    /// `records[(t - first_round) * checks + i]` is the flip word of check `i` in round `t`.
    pub records: Vec<u64>,
    pub last_round: usize,
    pub logical: u64,
}

/// Walk rounds `first..=last` of `circuit`, injecting `faults` (sorted by
/// channel) as their channels are reached.
///
/// Faults must all lie in rounds `first..=last`. Ancillas are reset every
/// round, so once the walk passes the round after the last fault the frame
/// holds only data errors, which leave later detectors untouched.
pub fn walk(circuit: &Circuit, first: usize, last: usize, faults: &[LaneFault]) -> WalkResult {
    let mut frame = PauliFrame::new(circuit.num_qubits);
    let checks = circuit.checks_per_round;
    let mut records = vec![0u64; (last - first + 1) * checks];
    let record_base = first * checks;
    let mut next = 0;
    let ops = &circuit.ops[circuit.round_starts[first]..circuit.round_starts[last + 1]];
    for &op in ops {
        match op {
            Op::H(q) => {
                let q = q as usize;
                std::mem::swap(&mut frame.x[q], &mut frame.z[q]);
            }
            Op::Cnot(c, t) => {
                let (c, t) = (c as usize, t as usize);
                frame.x[t] ^= frame.x[c];
                frame.z[c] ^= frame.z[t];
            }
            Op::Measure { qubit, record } => {
                records[record as usize - record_base] = frame.x[qubit as usize];
            }
            Op::Reset(q) => {
                frame.x[q as usize] = 0;
                frame.z[q as usize] = 0;
            }
            Op::Noise(ch) => {
                while next < faults.len() && faults[next].channel == ch {
                    let f = faults[next];
                    frame.apply_fault(circuit.channels[ch as usize].kind, f.option as usize, f.lane);
                    next += 1;
                }
            }
        }
    }
    debug_assert_eq!(next, faults.len(), "faults outside the walked rounds");
    let logical = circuit
        .logical_support
        .iter()
        .fold(0u64, |acc, &q| acc ^ frame.x[q as usize]);
    WalkResult {
        first_round: first,
        records,
        last_round: last,
        logical,
    }
}

impl WalkResult {
    /// Detector vertex ids fired on `lane`, where vertex `t * checks + i`
    /// compares round `t` against round `t - 1` (round -1 is ideal).
    pub fn defects(&self, lane: usize, checks: usize) -> Vec<usize> {
        let bit = 1u64 << lane;
        let mut out = Vec::new();
        for t in self.first_round..=self.last_round {
            let row = (t - self.first_round) * checks;
            for i in 0..checks {
                let now = self.records[row + i] & bit;
                let before = if t == self.first_round {
                    0
                } else {
                    self.records[row - checks + i] & bit
                };
                if now != before {
                    out.push(t * checks + i);
                }
            }
        }
        out
    }

    pub fn logical_flip(&self, lane: usize) -> bool {
        self.logical >> lane & 1 == 1
    }
}
