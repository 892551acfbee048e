//! MAVE latent files.
//!
//! ```text
//! "MAVE" | version u16 | modality u8 | dims 4 x u32 | f32 payload (row-major) | CRC-32
//! ```
//! All integers and floats little-endian; the CRC-32 (IEEE) covers every
//! preceding byte.

use std::path::Path;

use super::LatentTensor;
use crate::error::{Error, Result};
use crate::grid::{Dims4, Modality};

pub const LATENT_MAGIC: &[u8; 4] = b"MAVE";
pub const LATENT_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 1 + 16;

pub fn write_latent(z: &LatentTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * z.values.len() + 4);
    out.extend_from_slice(LATENT_MAGIC);
    out.extend_from_slice(&LATENT_VERSION.to_le_bytes());
    out.push(z.modality.tag());
    for d in [z.dims.c, z.dims.t, z.dims.h, z.dims.w] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in &z.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

pub fn read_latent(bytes: &[u8]) -> Result<LatentTensor> {
    if bytes.len() < HEADER_LEN + 4 {
        return Err(Error::Format("latent file too short".into()));
    }
    if &bytes[..4] != LATENT_MAGIC {
        return Err(Error::Format("bad latent magic".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    if crc32fast::hash(body) != u32::from_le_bytes(tail.try_into().unwrap()) {
        return Err(Error::Format("latent CRC mismatch".into()));
    }
    let version = u16::from_le_bytes([body[4], body[5]]);
    if version != LATENT_VERSION {
        return Err(Error::Format(format!("unsupported latent version {version}")));
    }
    let modality =
        Modality::from_tag(body[6]).ok_or_else(|| Error::Format(format!("bad modality tag {}", body[6])))?;
    let dim = |k: usize| u32::from_le_bytes(body[7 + 4 * k..11 + 4 * k].try_into().unwrap()) as usize;
    let dims = Dims4::new(dim(0), dim(1), dim(2), dim(3));
    let payload = &body[HEADER_LEN..];
    if payload.len() != 4 * dims.len() {
        return Err(Error::Format(format!(
            "payload holds {} bytes, dims {dims} need {}",
            payload.len(),
            4 * dims.len()
        )));
    }
    let values = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    LatentTensor::new(modality, dims, values).map_err(|e| Error::Format(e.to_string()))
}

pub fn save_latent(path: impl AsRef<Path>, z: &LatentTensor) -> Result<()> {
    std::fs::write(path, write_latent(z))?;
    Ok(())
}

pub fn load_latent(path: impl AsRef<Path>) -> Result<LatentTensor> {
    read_latent(&std::fs::read(path)?)
}
