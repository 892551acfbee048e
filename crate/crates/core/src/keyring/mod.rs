//! Payload structure, session-key derivation, keystreams and the key registry.
//!
//! All derivations are pure functions of `(secret, prompt)`:
//!
//! ```text
//! K_sess      = SHA-256( SHA-256(m)[..16] || SHA-256(normalize(prompt)) )
//! subkey_x    = HMAC-SHA-256(K_sess, x)      for x in {"video", "audio", "time"}
//! shared_seed = SHA-256(m)[..8]
//! ```

mod registry;
mod stream;

pub use registry::{KeyLookup, Registry, RegistryRecord};
pub use stream::{keystream, keystream_bits, keystream_bytes, Key256, KeystreamReader};

use std::fmt;

use hmac::{Hmac, Mac};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Default secret length in bits.
pub const DEFAULT_SECRET_BITS: usize = 256;
/// Minimum accepted secret length in bits.
pub const MIN_SECRET_BITS: usize = 128;
/// Width of the plaintext index.
pub const INDEX_BITS: usize = 32;
/// Number of leading digest bits of SHA-256(m) fed into the session key.
pub const PREFIX_BITS: usize = 128;

/// Server-held secret `m`. Never written into a grid or latent.
#[derive(Clone, PartialEq, Eq)]
pub struct SecretPayload(Vec<u8>);

impl SecretPayload {
    pub fn from_bytes(bytes: impl Into<Vec<u8>>) -> Result<Self> {
        let bytes = bytes.into();
        if bytes.is_empty() {
            return Err(Error::EmptySecret);
        }
        let got = bytes.len() * 8;
        if got < MIN_SECRET_BITS {
            return Err(Error::SecretTooShort {
                min: MIN_SECRET_BITS,
                got,
            });
        }
        Ok(SecretPayload(bytes))
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let bytes = hex::decode(s.trim()).map_err(|e| Error::Format(format!("secret hex: {e}")))?;
        Self::from_bytes(bytes)
    }

    /// Draws a fresh secret of `DEFAULT_SECRET_BITS` bits.
    pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut bytes = vec![0u8; DEFAULT_SECRET_BITS / 8];
        rng.fill_bytes(&mut bytes);
        SecretPayload(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn bit_len(&self) -> usize {
        self.0.len() * 8
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }
}

impl fmt::Debug for SecretPayload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SecretPayload({} bits, redacted)", self.bit_len())
    }
}

/// Public 32-bit session identifier embedded in clear in the video grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PlainIndex(pub u32);

impl PlainIndex {
    /// Bits MSB-first.
    pub fn bits(self) -> [u8; INDEX_BITS] {
        let mut out = [0u8; INDEX_BITS];
        for (j, b) in out.iter_mut().enumerate() {
            *b = ((self.0 >> (31 - j)) & 1) as u8;
        }
        out
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if bits.len() != INDEX_BITS {
            return Err(Error::dims(format!(
                "index needs {INDEX_BITS} bits, got {}",
                bits.len()
            )));
        }
        Ok(PlainIndex(
            bits.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b & 1)),
        ))
    }

    pub fn to_hex(self) -> String {
        format!("{:08x}", self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        u32::from_str_radix(s.trim(), 16)
            .map(PlainIndex)
            .map_err(|e| Error::Format(format!("index hex {s:?}: {e}")))
    }
}

impl fmt::Display for PlainIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:08x}", self.0)
    }
}

/// Every key derived for one generation session.
#[derive(Clone, PartialEq, Eq)]
pub struct SessionKeyMaterial {
    pub session_key: Key256,
    pub subkey_video: Key256,
    pub subkey_audio: Key256,
    /// Derived for completeness; the time template is public and never keyed.
    pub subkey_time: Key256,
    pub shared_seed: u64,
    /// SHA-256 of the normalized prompt.
    pub prompt_digest: Key256,
}

impl SessionKeyMaterial {
    /// ChaCha20 key for the shared base stream `S_shared`.
    pub fn shared_stream_key(&self) -> Key256 {
        Sha256::digest(self.shared_seed.to_be_bytes()).into()
    }

    pub fn modality_subkey(&self, modality: crate::grid::Modality) -> &Key256 {
        match modality {
            crate::grid::Modality::Video => &self.subkey_video,
            crate::grid::Modality::Audio => &self.subkey_audio,
        }
    }
}

impl fmt::Debug for SessionKeyMaterial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SessionKeyMaterial")
            .field("session_key", &format_args!("{}..", hex::encode(&self.session_key[..4])))
            .field("prompt_digest", &format_args!("{}..", hex::encode(&self.prompt_digest[..4])))
            .finish_non_exhaustive()
    }
}

/// Lowercases, trims and collapses internal whitespace runs to one space.
pub fn normalize_prompt(prompt: &str) -> String {
    prompt
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// HMAC-SHA-256, the sub-key derivation primitive.
pub fn hmac_sha256(key: &[u8], message: &[u8]) -> Key256 {
    let mut mac = Hmac::<Sha256>::new_from_slice(key).expect("HMAC accepts keys of any length");
    mac.update(message);
    mac.finalize().into_bytes().into()
}

pub fn derive_session_key(secret: &SecretPayload, prompt: &str) -> SessionKeyMaterial {
    let secret_digest = Sha256::digest(secret.as_bytes());
    let prompt_digest: Key256 = Sha256::digest(normalize_prompt(prompt).as_bytes()).into();

    let mut hasher = Sha256::new();
    hasher.update(&secret_digest[..PREFIX_BITS / 8]);
    hasher.update(prompt_digest);
    let session_key: Key256 = hasher.finalize().into();

    let mut seed = [0u8; 8];
    seed.copy_from_slice(&secret_digest[..8]);

    SessionKeyMaterial {
        session_key,
        subkey_video: hmac_sha256(&session_key, b"video"),
        subkey_audio: hmac_sha256(&session_key, b"audio"),
        subkey_time: hmac_sha256(&session_key, b"time"),
        shared_seed: u64::from_be_bytes(seed),
        prompt_digest,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn secret(byte: u8) -> SecretPayload {
        SecretPayload::from_bytes(vec![byte; 32]).unwrap()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_prompt("  Hello  World "), "hello world");
        assert_eq!(normalize_prompt(""), "");
        assert_eq!(normalize_prompt("abc"), "abc");
        assert_eq!(normalize_prompt("\tA\n dog\r\n"), "a dog");
    }

    #[test]
    fn sha256_reference_vectors() {
        assert_eq!(
            hex::encode(Sha256::digest(b"")),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_eq!(
            hex::encode(Sha256::digest(b"abc")),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn hmac_rfc4231_vectors() {
        assert_eq!(
            hex::encode(hmac_sha256(&[0x0b; 20], b"Hi There")),
            "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7"
        );
        assert_eq!(
            hex::encode(hmac_sha256(b"Jefe", b"what do ya want for nothing?")),
            "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843"
        );
    }

    #[test]
    fn session_key_matches_hand_composition() {
        let m = secret(7);
        let keys = derive_session_key(&m, "A dog");
        let d = Sha256::digest(m.as_bytes());
        let p = Sha256::digest(b"a dog");
        let mut cat = d[..16].to_vec();
        cat.extend_from_slice(&p);
        assert_eq!(keys.session_key.as_slice(), Sha256::digest(&cat).as_slice());
        assert_eq!(keys.shared_seed.to_be_bytes(), d[..8]);
        assert_eq!(keys.prompt_digest.as_slice(), p.as_slice());
        assert_eq!(keys.subkey_video, hmac_sha256(&keys.session_key, b"video"));
    }

    #[test]
    fn prompt_normalization_feeds_session_key() {
        let m = secret(1);
        assert_eq!(
            derive_session_key(&m, "A dog").session_key,
            derive_session_key(&m, "a  DOG ").session_key
        );
        assert_ne!(
            derive_session_key(&m, "a dog").session_key,
            derive_session_key(&m, "a cat").session_key
        );
    }

    #[test]
    fn secret_validation() {
        assert!(matches!(SecretPayload::from_bytes(vec![]), Err(Error::EmptySecret)));
        assert!(matches!(
            SecretPayload::from_bytes(vec![1u8; 8]),
            Err(Error::SecretTooShort { got: 64, .. })
        ));
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        assert_eq!(SecretPayload::random(&mut rng).bit_len(), DEFAULT_SECRET_BITS);
    }

    #[test]
    fn index_bits_msb_first() {
        let i = PlainIndex(0x8000_0001);
        let bits = i.bits();
        assert_eq!(bits[0], 1);
        assert_eq!(bits[31], 1);
        assert_eq!(bits[1..31].iter().sum::<u8>(), 0);
        assert_eq!(PlainIndex::from_bits(&bits).unwrap(), i);
        assert_eq!(PlainIndex::from_hex(&i.to_hex()).unwrap(), i);
    }

    #[test]
    fn key_separation_hamming() {
        let a = derive_session_key(&secret(10), "p");
        let b = derive_session_key(&secret(11), "p");
        assert_ne!(a.session_key, b.session_key);
        let n = 20_000;
        let ka = keystream(&a.session_key, n);
        let kb = keystream(&b.session_key, n);
        let diff = ka.iter().zip(&kb).filter(|(x, y)| x != y).count() as f64 / n as f64;
        assert!((diff - 0.5).abs() < 0.02, "hamming fraction {diff}");
    }

    proptest! {
        #[test]
        fn derivation_is_deterministic(bytes in proptest::collection::vec(any::<u8>(), 16..48), prompt in ".{0,40}") {
            let m = SecretPayload::from_bytes(bytes).unwrap();
            prop_assert!(derive_session_key(&m, &prompt) == derive_session_key(&m, &prompt));
        }

        #[test]
        fn normalization_is_idempotent(prompt in "\\PC{0,40}") {
            let once = normalize_prompt(&prompt);
            prop_assert_eq!(normalize_prompt(&once), once);
        }
    }
}
