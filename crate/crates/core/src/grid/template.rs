//! Public time template: per-frame cyclic shifts of a binary m-sequence.

use crate::error::{Error, Result};

// Primitive feedback taps by degree (Fibonacci form, a_k = xor of a_{k-t}).
const TAPS: &[&[usize]] = &[
    &[],
    &[],
    &[2, 1],
    &[3, 2],
    &[4, 3],
    &[5, 3],
    &[6, 5],
    &[7, 6],
    &[8, 6, 5, 4],
    &[9, 5],
    &[10, 7],
    &[11, 9],
    &[12, 6, 4, 1],
    &[13, 4, 3, 1],
    &[14, 5, 3, 1],
    &[15, 14],
    &[16, 15, 13, 4],
    &[17, 14],
    &[18, 11],
    &[19, 6, 2, 1],
    &[20, 17],
];

/// One period of the maximal-length sequence of the given degree.
pub fn m_sequence(degree: usize) -> Vec<u8> {
    assert!((2..TAPS.len()).contains(&degree), "unsupported m-sequence degree {degree}");
    let period = (1usize << degree) - 1;
    let mut seq = Vec::with_capacity(period);
    seq.push(1u8);
    seq.resize(degree, 0);
    while seq.len() < period {
        let k = seq.len();
        let bit = TAPS[degree].iter().fold(0u8, |acc, &t| acc ^ seq[k - t]);
        seq.push(bit);
    }
    seq
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeTemplate {
    base: Vec<u8>,
    frames: usize,
    slots_per_frame: usize,
}

impl TimeTemplate {
    /// Picks the smallest degree whose period covers both the frame slots and
    /// the frame count, so every frame gets a distinct shift.
    pub fn new(frames: usize, slots_per_frame: usize) -> Result<Self> {
        let need = slots_per_frame.max(frames + 1);
        let degree = (2..TAPS.len())
            .find(|&d| (1usize << d) > need)
            .ok_or_else(|| Error::LayoutOverflow(format!("time template needs period >= {need}")))?;
        if slots_per_frame < degree {
            return Err(Error::LayoutOverflow(format!(
                "{slots_per_frame} channel-0 slots per frame cannot hold a degree-{degree} template window"
            )));
        }
        Ok(TimeTemplate {
            base: m_sequence(degree),
            frames,
            slots_per_frame,
        })
    }

    pub fn period(&self) -> usize {
        self.base.len()
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn slots_per_frame(&self) -> usize {
        self.slots_per_frame
    }

    /// Base sequence shifted left by `frame`.
    pub fn bit(&self, frame: usize, slot: usize) -> u8 {
        self.base[(slot + frame) % self.base.len()]
    }

    pub fn row(&self, frame: usize) -> Vec<u8> {
        (0..self.slots_per_frame).map(|s| self.bit(frame, s)).collect()
    }
}
