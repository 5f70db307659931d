//! Exhaustive single-fault injection.
//!
//! Every non-identity outcome of every channel is pushed through the circuit
//! on its own lane of a [`walk`], 64 faults at a time. The resulting table maps
//! each elementary fault to the defects it fires and whether it flips the
//! logical observable. The decoding graph is read off this table, and the
//! compiled sampler XORs its rows.

use super::circuit::Circuit;
use super::frame::{walk, LaneFault, LANES};
use crate::error::{Error, Result};

/// Effect of one elementary fault: at most two defects plus a logical flip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FaultEffect {
    defects: [u32; 2],
    len: u8,
    pub logical: bool,
}

impl FaultEffect {
    pub fn defects(&self) -> &[u32] {
        &self.defects[..self.len as usize]
    }

    pub fn is_trivial(&self) -> bool {
        self.len == 0 && !self.logical
    }
}

#[derive(Debug, Clone)]
pub struct FaultTable {
    /// `offsets[c]..offsets[c + 1]` indexes the outcomes of channel `c`.
    offsets: Vec<u32>,
    effects: Vec<FaultEffect>,
}

impl FaultTable {
    pub fn build(circuit: &Circuit) -> Result<Self> {
        let mut offsets = Vec::with_capacity(circuit.channels.len() + 1);
        let mut all = Vec::new();
        for (c, ch) in circuit.channels.iter().enumerate() {
            offsets.push(all.len() as u32);
            for option in 0..ch.kind.options() {
                all.push((c as u32, option as u8));
            }
        }
        offsets.push(all.len() as u32);

        let checks = circuit.checks_per_round;
        let mut effects = Vec::with_capacity(all.len());
        for chunk in all.chunks(LANES) {
            let faults: Vec<LaneFault> = chunk
                .iter()
                .enumerate()
                .map(|(lane, &(channel, option))| LaneFault {
                    channel,
                    lane: lane as u8,
                    option,
                })
                .collect();
            let round = |f: &LaneFault| circuit.channels[f.channel as usize].round as usize;
            let first = round(&faults[0]);
            let last = (round(faults.last().unwrap()) + 1).min(circuit.rounds - 1);
            let result = walk(circuit, first, last, &faults);
            for lane in 0..faults.len() {
                let defects = result.defects(lane, checks);
                if defects.len() > 2 {
                    return Err(Error::HyperEdge {
                        count: defects.len(),
                    });
                }
                let mut effect = FaultEffect {
                    logical: result.logical_flip(lane),
                    len: defects.len() as u8,
                    ..Default::default()
                };
                for (slot, v) in effect.defects.iter_mut().zip(&defects) {
                    *slot = *v as u32;
                }
                effects.push(effect);
            }
        }
        Ok(FaultTable { offsets, effects })
    }

    pub fn effect(&self, channel: u32, option: u8) -> &FaultEffect {
        &self.effects[self.offsets[channel as usize] as usize + option as usize]
    }

    /// All `(channel, option, effect)` triples in circuit order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u8, &FaultEffect)> + '_ {
        self.offsets.windows(2).enumerate().flat_map(move |(c, w)| {
            (w[0]..w[1]).map(move |i| (c as u32, (i - w[0]) as u8, &self.effects[i as usize]))
        })
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }
}
