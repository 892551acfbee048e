//! Debug dump of a grid: header, region map, binding order, packed bits.
//!
//! ```text
//! "MAVG" | version u16 | modality u8 | dims 4 x u32 | index_reps u32 | bind_len u32
//! | region map (one byte per slot) | bind slots (bind_len x u32) | packed bits (MSB-first)
//! | CRC-32 of everything before it
//! ```
//! Integers are little-endian.

use std::sync::Arc;

use super::{pack_msb_first, unpack_msb_first, BitGrid, Dims4, GridLayout, Modality};
use crate::error::{Error, Result};

pub const GRID_MAGIC: &[u8; 4] = b"MAVG";
const VERSION: u16 = 1;

pub fn write_grid_dump(grid: &BitGrid) -> Vec<u8> {
    let layout = &grid.layout;
    let dims = layout.dims();
    let mut out = Vec::new();
    out.extend_from_slice(GRID_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(grid.modality.tag());
    for d in [dims.c, dims.t, dims.h, dims.w] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(&(layout.index_reps() as u32).to_le_bytes());
    out.extend_from_slice(&(layout.bind_len() as u32).to_le_bytes());
    out.extend(layout.regions().iter().map(|&r| r as u8));
    for &p in layout.bind_slots() {
        out.extend_from_slice(&(p as u32).to_le_bytes());
    }
    out.extend(pack_msb_first(&grid.bits));
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        let s = self
            .buf
            .get(self.pos..end)
            .ok_or_else(|| Error::Format("grid dump truncated".into()))?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }
}

pub fn read_grid_dump(bytes: &[u8]) -> Result<BitGrid> {
    if bytes.len() < 4 + 2 + 1 + 24 + 4 {
        return Err(Error::Format("grid dump too short".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    if crc32fast::hash(body) != u32::from_le_bytes(tail.try_into().unwrap()) {
        return Err(Error::Format("grid dump CRC mismatch".into()));
    }
    let mut cur = Cursor { buf: body, pos: 0 };
    if cur.take(4)? != GRID_MAGIC {
        return Err(Error::Format("bad grid magic".into()));
    }
    let version = u16::from_le_bytes(cur.take(2)?.try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format(format!("unsupported grid dump version {version}")));
    }
    let modality = Modality::from_tag(cur.take(1)?[0])
        .ok_or_else(|| Error::Format("bad modality tag".into()))?;
    let dims = Dims4::new(cur.u32()?, cur.u32()?, cur.u32()?, cur.u32()?);
    let index_reps = cur.u32()?;
    let bind_len = cur.u32()?;
    let map = cur.take(dims.len())?.to_vec();
    let bind_slots = (0..bind_len).map(|_| cur.u32()).collect::<Result<Vec<_>>>()?;
    let bits = unpack_msb_first(cur.take(dims.len().div_ceil(8))?, dims.len());
    let layout = GridLayout::from_parts(dims, index_reps, bind_slots)?;
    if layout.regions().iter().map(|&r| r as u8).ne(map.iter().copied()) {
        return Err(Error::Format("region map disagrees with layout rules".into()));
    }
    Ok(BitGrid {
        modality,
        layout: Arc::new(layout),
        bits,
    })
}
