//! Entangled watermark bit grids.
//!
//! The video grid carries the public time template, the plaintext index and
//! keyed base bits. The audio grid carries the same template, a digest of the
//! serialized video grid at the binding slots, and its own keyed base bits.

mod dump;
mod layout;
mod template;

pub use dump::{read_grid_dump, write_grid_dump, GRID_MAGIC};
pub use layout::{GridLayout, Region, DIGEST_BITS};
pub use template::{m_sequence, TimeTemplate};

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::keyring::{keystream, PlainIndex, SessionKeyMaterial};

/// Four-dimensional shape `(C, T, H, W)`, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 4]", into = "[usize; 4]")]
pub struct Dims4 {
    pub c: usize,
    pub t: usize,
    pub h: usize,
    pub w: usize,
}

impl Dims4 {
    pub const fn new(c: usize, t: usize, h: usize, w: usize) -> Self {
        Dims4 { c, t, h, w }
    }

    pub const fn len(&self) -> usize {
        self.c * self.t * self.h * self.w
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub const fn index(&self, c: usize, t: usize, h: usize, w: usize) -> usize {
        ((c * self.t + t) * self.h + h) * self.w + w
    }

    #[inline]
    pub const fn coords(&self, i: usize) -> (usize, usize, usize, usize) {
        let w = i % self.w;
        let h = (i / self.w) % self.h;
        let t = (i / (self.w * self.h)) % self.t;
        let c = i / (self.w * self.h * self.t);
        (c, t, h, w)
    }

    pub const fn with_t(self, t: usize) -> Self {
        Dims4 { t, ..self }
    }
}

impl From<[usize; 4]> for Dims4 {
    fn from([c, t, h, w]: [usize; 4]) -> Self {
        Dims4 { c, t, h, w }
    }
}

impl From<Dims4> for [usize; 4] {
    fn from(d: Dims4) -> Self {
        [d.c, d.t, d.h, d.w]
    }
}

impl fmt::Display for Dims4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.c, self.t, self.h, self.w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Video,
    Audio,
}

impl Modality {
    pub fn tag(self) -> u8 {
        match self {
            Modality::Video => 0,
            Modality::Audio => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Modality::Video),
            1 => Some(Modality::Audio),
            _ => None,
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Video => "video",
            Modality::Audio => "audio",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitGrid {
    pub modality: Modality,
    pub layout: Arc<GridLayout>,
    /// One `0`/`1` per grid position, row-major.
    pub bits: Vec<u8>,
}

impl BitGrid {
    pub fn dims(&self) -> Dims4 {
        self.layout.dims()
    }

    /// Row-major, 8 bits per byte, MSB-first; a short last byte is zero padded.
    pub fn serialize(&self) -> Vec<u8> {
        pack_msb_first(&self.bits)
    }

    /// SHA-256 of [`Self::serialize`].
    pub fn digest(&self) -> [u8; 32] {
        Sha256::digest(self.serialize()).into()
    }

    /// Reads the index back by majority over its repetitions; no key needed.
    pub fn extract_index(&self) -> PlainIndex {
        crate::detect::extract_index(&self.bits, &self.layout)
    }
}

pub fn pack_msb_first(bits: &[u8]) -> Vec<u8> {
    bits.chunks(8)
        .map(|ch| {
            ch.iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | ((b & 1) << (7 - i)))
        })
        .collect()
}

pub fn unpack_msb_first(bytes: &[u8], n_bits: usize) -> Vec<u8> {
    (0..n_bits).map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1).collect()
}

/// Bit `j` of a digest, MSB-first.
pub fn digest_bit(digest: &[u8; 32], j: usize) -> u8 {
    (digest[j / 8] >> (7 - j % 8)) & 1
}

fn base_bits(keys: &SessionKeyMaterial, modality: Modality, len: usize) -> Vec<u8> {
    let own = keystream(keys.modality_subkey(modality), len);
    let shared = keystream(&keys.shared_stream_key(), len);
    own.iter().zip(&shared).map(|(a, b)| a ^ b).collect()
}

fn fill_template(bits: &mut [u8], layout: &GridLayout) {
    let dims = layout.dims();
    let template = layout.template();
    for t in 0..dims.t {
        for h in 0..dims.h {
            for w in 0..dims.w {
                bits[dims.index(0, t, h, w)] = template.bit(t, h * dims.w + w);
            }
        }
    }
}

pub fn build_video_grid(
    keys: &SessionKeyMaterial,
    index: PlainIndex,
    layout: Arc<GridLayout>,
) -> Result<BitGrid> {
    if layout.bind_len() != 0 {
        return Err(Error::dims("video grids take a layout without binding slots"));
    }
    if layout.index_reps() == 0 {
        return Err(Error::dims("video grids need at least one index repetition"));
    }
    let mut bits = base_bits(keys, Modality::Video, layout.len());
    fill_template(&mut bits, &layout);
    let index_bits = index.bits();
    for (k, &p) in layout.index_slots().iter().enumerate() {
        bits[p] = index_bits[layout.index_bit_of(k)];
    }
    Ok(BitGrid {
        modality: Modality::Video,
        layout,
        bits,
    })
}

pub fn build_audio_grid(
    keys: &SessionKeyMaterial,
    video: &BitGrid,
    layout: Arc<GridLayout>,
) -> Result<BitGrid> {
    if video.modality != Modality::Video {
        return Err(Error::dims("binding source must be a video grid"));
    }
    let h_v = video.digest();
    let mut bits = base_bits(keys, Modality::Audio, layout.len());
    fill_template(&mut bits, &layout);
    for (i, &p) in layout.bind_slots().iter().enumerate() {
        bits[p] = digest_bit(&h_v, layout.phi(i));
    }
    Ok(BitGrid {
        modality: Modality::Audio,
        layout,
        bits,
    })
}
