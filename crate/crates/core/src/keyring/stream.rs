//! ChaCha20 keystreams: 256-bit key, 96-bit all-zero nonce, block counter from 0.
//!
//! Bits are taken from each keystream byte least-significant bit first.

use chacha20::cipher::{KeyIvInit, StreamCipher, StreamCipherSeek};
use chacha20::ChaCha20;

pub type Key256 = [u8; 32];

const ZERO_NONCE: [u8; 12] = [0u8; 12];

fn cipher_at(key: &Key256, byte_offset: u64) -> ChaCha20 {
    let mut cipher = ChaCha20::new(key.into(), &ZERO_NONCE.into());
    cipher.seek(byte_offset);
    cipher
}

/// Fills `out` with keystream bytes starting at `byte_offset`.
pub fn keystream_bytes(key: &Key256, byte_offset: u64, out: &mut [u8]) {
    out.fill(0);
    cipher_at(key, byte_offset).apply_keystream(out);
}

/// First `n_bits` keystream bits, one `0`/`1` per element.
pub fn keystream(key: &Key256, n_bits: usize) -> Vec<u8> {
    keystream_bits(key, 0, n_bits)
}

/// Keystream bits `[bit_offset, bit_offset + n_bits)`.
pub fn keystream_bits(key: &Key256, bit_offset: u64, n_bits: usize) -> Vec<u8> {
    if n_bits == 0 {
        return Vec::new();
    }
    let first_byte = bit_offset / 8;
    let skip = (bit_offset % 8) as usize;
    let n_bytes = (skip + n_bits).div_ceil(8);
    let mut bytes = vec![0u8; n_bytes];
    keystream_bytes(key, first_byte, &mut bytes);
    (skip..skip + n_bits)
        .map(|i| (bytes[i / 8] >> (i % 8)) & 1)
        .collect()
}

/// Sequential reader over a keystream, used for keyed shuffles.
pub struct KeystreamReader {
    cipher: ChaCha20,
}

impl KeystreamReader {
    pub fn new(key: &Key256) -> Self {
        KeystreamReader {
            cipher: cipher_at(key, 0),
        }
    }

    pub fn next_u32(&mut self) -> u32 {
        let mut buf = [0u8; 4];
        self.cipher.apply_keystream(&mut buf);
        u32::from_le_bytes(buf)
    }

    /// Uniform draw from `[0, bound)` by rejection, `bound > 0`.
    pub fn below(&mut self, bound: u32) -> u32 {
        assert!(bound > 0);
        let zone = u32::MAX - (u32::MAX % bound);
        loop {
            let x = self.next_u32();
            if x < zone {
                return x % bound;
            }
        }
    }

    /// Keyed Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u32 + 1) as usize;
            items.swap(i, j);
        }
    }
}
