//! Grid -> symbol map -> Gaussian latent, and back.

use std::sync::OnceLock;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::{LatentTensor, RepetitionFactors};
use crate::error::{Error, Result};
use crate::grid::{BitGrid, Dims4, GridLayout, Modality};
use crate::keyring::{keystream_bits, keystream_bytes, Key256};
use crate::normal::{cdf, cdf_centered, ppf_split};

/// Default probability-space truncation of each sampling cell.
pub const DEFAULT_TRUNCATION: f64 = 0.001;

const UNIFORM_LABEL: &[u8] = b"avbind/uniform/v1";
const PUBLIC_MASK_LABEL: &[u8] = b"avbind/public-mask/v1";
const CHUNK: usize = 4096;

/// Per-coordinate `l`-bit symbols over a latent shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolMap {
    pub modality: Modality,
    pub dims: Dims4,
    pub bits_per_symbol: u8,
    /// Row-major, each `< 2^bits_per_symbol`.
    pub symbols: Vec<u8>,
}

impl SymbolMap {
    pub fn new(modality: Modality, dims: Dims4, bits_per_symbol: u8, symbols: Vec<u8>) -> Result<Self> {
        if !(1..=8).contains(&bits_per_symbol) {
            return Err(Error::invalid(format!("bits per symbol {bits_per_symbol} not in 1..=8")));
        }
        if symbols.len() != dims.len() {
            return Err(Error::dims(format!("{} symbols for dims {dims}", symbols.len())));
        }
        let cells = 1u16 << bits_per_symbol;
        if symbols.iter().any(|&s| u16::from(s) >= cells) {
            return Err(Error::invalid("symbol out of range"));
        }
        Ok(SymbolMap {
            modality,
            dims,
            bits_per_symbol,
            symbols,
        })
    }
}

/// Block-wise replication of grid bits over the latent shape.
pub fn diffuse(grid: &BitGrid, factors: RepetitionFactors, latent_dims: Dims4) -> Result<SymbolMap> {
    diffuse_bits(grid.modality, &grid.bits, grid.dims(), factors, latent_dims)
}

/// [`diffuse`] over raw row-major grid bits.
pub fn diffuse_bits(
    modality: Modality,
    bits: &[u8],
    gd: Dims4,
    factors: RepetitionFactors,
    latent_dims: Dims4,
) -> Result<SymbolMap> {
    if bits.len() != gd.len() {
        return Err(Error::dims(format!("{} bits for grid {gd}", bits.len())));
    }
    if factors.latent_dims(gd) != latent_dims || factors.total() == 0 {
        return Err(Error::dims(format!(
            "grid {gd} x factors ({}, {}, {}, {}) != latent {latent_dims}",
            factors.c, factors.t, factors.h, factors.w
        )));
    }
    let symbols = (0..latent_dims.len())
        .map(|i| {
            let (c, t, h, w) = latent_dims.coords(i);
            bits[factors.grid_pos(gd, c, t, h, w)]
        })
        .collect();
    Ok(SymbolMap {
        modality,
        dims: latent_dims,
        bits_per_symbol: 1,
        symbols,
    })
}

/// Key of the public stream that masks key-free (time, index) slots.
pub fn public_mask_key() -> &'static Key256 {
    static KEY: OnceLock<Key256> = OnceLock::new();
    KEY.get_or_init(|| Sha256::digest(PUBLIC_MASK_LABEL).into())
}

/// XOR mask over latent coordinates.
///
/// Stream positions run row-major over `(C, T / k_t, H, W)`, so the `k_t`
/// frames of one temporal block share a keystream segment. Public grid
/// slots draw from [`public_mask_key`], keyed slots from the session key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomizationMask {
    dims: Dims4,
    bits: Vec<u8>,
    keyed: bool,
}

impl RandomizationMask {
    /// Stream positions consumed by one modality.
    pub fn stream_len(latent_dims: Dims4, factors: RepetitionFactors) -> u64 {
        (latent_dims.len() / factors.t.max(1)) as u64
    }

    /// With `session_key = None` keyed slots get a zero mask; only the
    /// public slots of such a mask are meaningful.
    pub fn new(
        layout: &GridLayout,
        factors: RepetitionFactors,
        session_key: Option<&Key256>,
        stream_offset: u64,
    ) -> Self {
        let gd = layout.dims();
        let ld = factors.latent_dims(gd);
        let n = Self::stream_len(ld, factors) as usize;
        let public = keystream_bits(public_mask_key(), stream_offset, n);
        let keyed = session_key.map(|k| keystream_bits(k, stream_offset, n));
        let tb = ld.t / factors.t;
        let bits = (0..ld.len())
            .map(|i| {
                let (c, t, h, w) = ld.coords(i);
                let q = ((c * tb + t / factors.t) * ld.h + h) * ld.w + w;
                if layout.region(factors.grid_pos(gd, c, t, h, w)).is_public() {
                    public[q]
                } else {
                    keyed.as_ref().map_or(0, |k| k[q])
                }
            })
            .collect();
        RandomizationMask {
            dims: ld,
            bits,
            keyed: session_key.is_some(),
        }
    }

    pub fn dims(&self) -> Dims4 {
        self.dims
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn is_keyed(&self) -> bool {
        self.keyed
    }
}

/// `M_rand = B_diff XOR mask`; an involution.
pub fn randomize(map: &SymbolMap, mask: &RandomizationMask) -> Result<SymbolMap> {
    if map.bits_per_symbol != 1 {
        return Err(Error::invalid("randomization is defined for 1-bit symbols"));
    }
    if map.dims != mask.dims {
        return Err(Error::dims(format!("map {} vs mask {}", map.dims, mask.dims)));
    }
    Ok(SymbolMap {
        symbols: map.symbols.iter().zip(&mask.bits).map(|(a, b)| a ^ b).collect(),
        ..map.clone()
    })
}

fn uniform_key(seed: u64) -> Key256 {
    let mut h = Sha256::new();
    h.update(UNIFORM_LABEL);
    h.update(seed.to_le_bytes());
    h.finalize().into()
}

#[inline]
fn to_open_unit(x: u64) -> f64 {
    // 53-bit midpoint grid: never 0, never 1
    ((x >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// The uniform draw used for coordinate `i` under `seed`, in (0, 1).
pub fn uniform_draw(seed: u64, i: usize) -> f64 {
    let mut b = [0u8; 8];
    keystream_bytes(&uniform_key(seed), 8 * i as u64, &mut b);
    to_open_unit(u64::from_le_bytes(b))
}

fn check_delta(delta: f64, l: u8) -> Result<()> {
    let limit = 0.5f64.powi(i32::from(l) + 1);
    if !delta.is_finite() || !(0.0..limit).contains(&delta) {
        return Err(Error::invalid(format!(
            "truncation {delta} outside [0, {limit}) for {l}-bit symbols"
        )));
    }
    Ok(())
}

/// Symbol of a single value: `floor(2^l * Phi(z))` clamped to its half.
#[inline]
pub fn symbol_of(z: f64, l: u8) -> u8 {
    let cells = 1u32 << l;
    let half = cells / 2;
    let s = if z > 0.0 {
        (half + (f64::from(cells) * cdf_centered(z)).floor() as u32).min(cells - 1)
    } else {
        ((f64::from(cells) * cdf(z)).floor() as u32).min(half - 1)
    };
    s as u8
}

/// Inverse-transform sample of symbol `m` from uniform `u`, truncated by
/// `delta` at both ends of its probability cell. Always satisfies
/// `symbol_of(z, l) == m`.
pub fn sample_symbol(m: u8, l: u8, delta: f64, u: f64) -> f32 {
    let cells = 1u32 << l;
    let half = cells / 2;
    let w = 1.0 / f64::from(cells);
    let span = w - 2.0 * delta;
    let m32 = u32::from(m);
    let z = if m32 < half {
        let tail = f64::from(m32) * w + delta + u * span;
        let q = -(f64::from(half - m32) * w - delta - u * span);
        ppf_split(q, tail)
    } else {
        let tail = f64::from(cells - 1 - m32) * w + delta + (1.0 - u) * span;
        let q = f64::from(m32 - half) * w + delta + u * span;
        ppf_split(q, tail)
    };
    let mut z = z as f32;
    loop {
        let s = symbol_of(f64::from(z), l);
        match s.cmp(&m) {
            std::cmp::Ordering::Equal => return z,
            std::cmp::Ordering::Less => z = z.next_up(),
            std::cmp::Ordering::Greater => z = z.next_down(),
        }
    }
}

/// Distribution-preserving sampling of a symbol map. Coordinate `i` uses
/// [`uniform_draw`]`(seed, i)`, so the parallel schedule does not matter.
pub fn sample_latent(map: &SymbolMap, delta: f64, seed: u64) -> Result<LatentTensor> {
    let l = map.bits_per_symbol;
    check_delta(delta, l)?;
    let key = uniform_key(seed);
    let mut values = vec![0f32; map.symbols.len()];
    values
        .par_chunks_mut(CHUNK)
        .zip(map.symbols.par_chunks(CHUNK))
        .enumerate()
        .for_each(|(ci, (out, syms))| {
            let mut bytes = vec![0u8; 8 * syms.len()];
            keystream_bytes(&key, (8 * ci * CHUNK) as u64, &mut bytes);
            for ((o, &m), b) in out.iter_mut().zip(syms).zip(bytes.chunks_exact(8)) {
                let u = to_open_unit(u64::from_le_bytes(b.try_into().unwrap()));
                *o = sample_symbol(m, l, delta, u);
            }
        });
    LatentTensor::new(map.modality, map.dims, values)
}

/// Symbol-wise inverse of [`sample_latent`]; for `l = 1` this is `1[z > 0]`.
pub fn extract_symbols(z: &LatentTensor, l: u8) -> Result<SymbolMap> {
    if !(1..=8).contains(&l) {
        return Err(Error::invalid(format!("bits per symbol {l} not in 1..=8")));
    }
    let symbols = z
        .values
        .par_iter()
        .map(|&v| symbol_of(f64::from(v), l))
        .collect();
    Ok(SymbolMap {
        modality: z.modality,
        dims: z.dims,
        bits_per_symbol: l,
        symbols,
    })
}

/// CDF of a watermarked coordinate when symbols are uniform on `[0, 2^l)`.
/// Equals `Phi` when `delta = 0`.
pub fn watermarked_cdf(l: u8, delta: f64) -> impl Fn(f64) -> f64 {
    let cells = 1u32 << l;
    let w = 1.0 / f64::from(cells);
    move |z: f64| {
        let p = cdf(z);
        (0..cells)
            .map(|m| {
                let lo = f64::from(m) * w + delta;
                ((p - lo) / (w - 2.0 * delta)).clamp(0.0, 1.0)
            })
            .sum::<f64>()
            * w
    }
}
