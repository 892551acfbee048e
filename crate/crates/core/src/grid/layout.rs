use serde::{Deserialize, Serialize};

use super::{Dims4, TimeTemplate};
use crate::error::{Error, Result};
use crate::keyring::{Key256, KeystreamReader, INDEX_BITS};

/// Number of digest bits the binding map φ addresses.
pub const DIGEST_BITS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Region {
    Time = 0,
    Index = 1,
    Bind = 2,
    Base = 3,
}

impl Region {
    /// Public regions are decodable without any session key.
    pub fn is_public(self) -> bool {
        matches!(self, Region::Time | Region::Index)
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Region::Time),
            1 => Some(Region::Index),
            2 => Some(Region::Bind),
            3 => Some(Region::Base),
            _ => None,
        }
    }
}

/// Partition of a grid into time-template, index, binding and base slots.
///
/// Channel 0 is the time template. Each frame's first `32 * index_reps`
/// non-channel-0 slots (row-major over `(c, h, w)`) carry the index, at the
/// same positions in every frame. Binding slots are the first `bind_len`
/// entries of a keyed shuffle of what remains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridLayout {
    dims: Dims4,
    regions: Vec<Region>,
    index_reps: usize,
    // frame-major; slot k within a frame carries index bit k % 32
    index_slots: Vec<usize>,
    bind_slots: Vec<usize>,
    template: TimeTemplate,
}

impl GridLayout {
    /// Builds a layout. `bind_key` drives the binding-slot shuffle and is
    /// required when `bind_len > 0`.
    pub fn build(
        dims: Dims4,
        bind_len: usize,
        index_reps: usize,
        bind_key: Option<&Key256>,
    ) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::invalid("grid dims must be nonzero"));
        }
        let template = TimeTemplate::new(dims.t, dims.h * dims.w)?;
        let per_frame_free = (dims.c - 1) * dims.h * dims.w;
        let per_frame_index = INDEX_BITS * index_reps;
        if per_frame_index > per_frame_free {
            return Err(Error::LayoutOverflow(format!(
                "index needs {per_frame_index} slots per frame, only {per_frame_free} available"
            )));
        }
        let free_total = per_frame_free * dims.t;
        if per_frame_index * dims.t + bind_len > free_total {
            return Err(Error::LayoutOverflow(format!(
                "index ({}) + binding ({bind_len}) exceed {free_total} non-template slots",
                per_frame_index * dims.t
            )));
        }

        let mut regions = vec![Region::Base; dims.len()];
        for t in 0..dims.t {
            for h in 0..dims.h {
                for w in 0..dims.w {
                    regions[dims.index(0, t, h, w)] = Region::Time;
                }
            }
        }

        let mut index_slots = Vec::with_capacity(per_frame_index * dims.t);
        for t in 0..dims.t {
            let frame_positions = (1..dims.c)
                .flat_map(|c| (0..dims.h).flat_map(move |h| (0..dims.w).map(move |w| (c, h, w))))
                .take(per_frame_index);
            for (c, h, w) in frame_positions {
                let p = dims.index(c, t, h, w);
                regions[p] = Region::Index;
                index_slots.push(p);
            }
        }

        let mut bind_slots = Vec::new();
        if bind_len > 0 {
            let key = bind_key.ok_or_else(|| Error::invalid("binding layout requires a key"))?;
            let mut remaining: Vec<usize> = (0..dims.len())
                .filter(|&p| regions[p] == Region::Base)
                .collect();
            KeystreamReader::new(key).shuffle(&mut remaining);
            remaining.truncate(bind_len);
            for &p in &remaining {
                regions[p] = Region::Bind;
            }
            bind_slots = remaining;
        }

        Ok(GridLayout {
            dims,
            regions,
            index_reps,
            index_slots,
            bind_slots,
            template,
        })
    }

    /// Video layout: template, index and base, no binding region.
    pub fn video(dims: Dims4, index_reps: usize) -> Result<Self> {
        Self::build(dims, 0, index_reps, None)
    }

    /// Audio layout: template, binding and base, no index region.
    pub fn audio(dims: Dims4, bind_len: usize, subkey_audio: &Key256) -> Result<Self> {
        Self::build(dims, bind_len, 0, Some(subkey_audio))
    }

    /// Rebuilds a layout from an explicit binding-slot list (used by dumps).
    pub fn from_parts(dims: Dims4, index_reps: usize, bind_slots: Vec<usize>) -> Result<Self> {
        let mut layout = Self::build(dims, 0, index_reps, None)?;
        for &p in &bind_slots {
            match layout.regions.get(p) {
                Some(Region::Base) => layout.regions[p] = Region::Bind,
                _ => return Err(Error::Format(format!("binding slot {p} is not a base slot"))),
            }
        }
        layout.bind_slots = bind_slots;
        Ok(layout)
    }

    pub fn dims(&self) -> Dims4 {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn region(&self, pos: usize) -> Region {
        self.regions[pos]
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn index_reps(&self) -> usize {
        self.index_reps
    }

    pub fn index_slots(&self) -> &[usize] {
        &self.index_slots
    }

    /// All slots carrying index bit `bit` (MSB-first numbering).
    pub fn index_copies(&self, bit: usize) -> impl Iterator<Item = usize> + '_ {
        self.index_slots
            .iter()
            .enumerate()
            .filter(move |(k, _)| k % INDEX_BITS == bit)
            .map(|(_, &p)| p)
    }

    /// Index bit carried at the `k`-th entry of [`Self::index_slots`].
    pub fn index_bit_of(&self, k: usize) -> usize {
        k % INDEX_BITS
    }

    pub fn bind_slots(&self) -> &[usize] {
        &self.bind_slots
    }

    pub fn bind_len(&self) -> usize {
        self.bind_slots.len()
    }

    /// φ: binding slot number to digest bit.
    pub fn phi(&self, i: usize) -> usize {
        i % DIGEST_BITS
    }

    pub fn template(&self) -> &TimeTemplate {
        &self.template
    }

    pub fn count(&self, region: Region) -> usize {
        self.regions.iter().filter(|&&r| r == region).count()
    }
}
