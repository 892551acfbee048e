//! End-to-end embedding: keys -> entangled grids -> masks -> latents.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{build_audio_grid, build_video_grid, BitGrid, Dims4, GridLayout, Modality};
use crate::keyring::{derive_session_key, PlainIndex, SecretPayload, SessionKeyMaterial};
use crate::latent::{
    diffuse, randomize, sample_latent, LatentTensor, RandomizationMask, RepetitionFactors,
    DEFAULT_TRUNCATION,
};

/// Watermark geometry and sampling parameters shared by embed and detect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WatermarkConfig {
    pub grid_dims: Dims4,
    pub factors: RepetitionFactors,
    /// Binding length `N`.
    pub bind_len: usize,
    /// Per-frame index repetitions `r`.
    pub index_reps: usize,
    /// Probability-space truncation of each sampling cell.
    pub delta: f64,
}

impl Default for WatermarkConfig {
    fn default() -> Self {
        WatermarkConfig {
            grid_dims: Dims4::new(2, 4, 8, 8),
            factors: RepetitionFactors::new(3, 1, 4, 4),
            bind_len: 128,
            index_reps: 1,
            delta: DEFAULT_TRUNCATION,
        }
    }
}

impl WatermarkConfig {
    pub fn latent_dims(&self) -> Dims4 {
        self.factors.latent_dims(self.grid_dims)
    }

    pub fn video_layout(&self) -> Result<GridLayout> {
        GridLayout::video(self.grid_dims, self.index_reps)
    }

    pub fn audio_layout(&self, keys: &SessionKeyMaterial) -> Result<GridLayout> {
        GridLayout::audio(self.grid_dims, self.bind_len, &keys.subkey_audio)
    }

    /// Stream offset of the audio mask inside the joint keystream.
    pub fn audio_stream_offset(&self) -> u64 {
        RandomizationMask::stream_len(self.latent_dims(), self.factors)
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.factors;
        if f.c == 0 || f.t == 0 || f.h == 0 || f.w == 0 {
            return Err(Error::invalid("repetition factors must be positive"));
        }
        if self.grid_dims.is_empty() {
            return Err(Error::invalid("grid dims must be positive"));
        }
        if !(0.0..0.25).contains(&self.delta) {
            return Err(Error::invalid(format!("truncation {} not in [0, 0.25)", self.delta)));
        }
        // layout constructors carry the capacity checks
        self.video_layout()?;
        GridLayout::audio(self.grid_dims, self.bind_len, &[0u8; 32])?;
        Ok(())
    }
}

/// Everything a session's watermark is determined by, without the noise.
#[derive(Debug, Clone)]
pub struct SessionGrids {
    pub index: PlainIndex,
    pub keys: SessionKeyMaterial,
    pub video: BitGrid,
    pub audio: BitGrid,
    pub video_mask: RandomizationMask,
    pub audio_mask: RandomizationMask,
}

impl SessionGrids {
    pub fn derive(
        secret: &SecretPayload,
        prompt: &str,
        index: PlainIndex,
        config: &WatermarkConfig,
    ) -> Result<Self> {
        config.validate()?;
        let keys = derive_session_key(secret, prompt);
        let video = build_video_grid(&keys, index, Arc::new(config.video_layout()?))?;
        let audio = build_audio_grid(&keys, &video, Arc::new(config.audio_layout(&keys)?))?;
        let video_mask = RandomizationMask::new(&video.layout, config.factors, Some(&keys.session_key), 0);
        let audio_mask = RandomizationMask::new(
            &audio.layout,
            config.factors,
            Some(&keys.session_key),
            config.audio_stream_offset(),
        );
        Ok(SessionGrids {
            index,
            keys,
            video,
            audio,
            video_mask,
            audio_mask,
        })
    }

    pub fn grid(&self, modality: Modality) -> &BitGrid {
        match modality {
            Modality::Video => &self.video,
            Modality::Audio => &self.audio,
        }
    }

    pub fn mask(&self, modality: Modality) -> &RandomizationMask {
        match modality {
            Modality::Video => &self.video_mask,
            Modality::Audio => &self.audio_mask,
        }
    }
}

/// A watermarked session: its grids plus the entangled initial noise.
#[derive(Debug, Clone)]
pub struct Session {
    pub grids: SessionGrids,
    pub video: LatentTensor,
    pub audio: LatentTensor,
}

/// Per-modality uniform-stream seed derived from a master noise seed.
pub fn noise_seed(master: u64, modality: Modality) -> u64 {
    let mut h = Sha256::new();
    h.update(b"avbind/noise-seed/v1");
    h.update(master.to_le_bytes());
    h.update([modality.tag()]);
    u64::from_le_bytes(h.finalize()[..8].try_into().unwrap())
}

/// Builds the joint initial noise `(z_v, z_a)` of one session.
pub fn embed(
    secret: &SecretPayload,
    prompt: &str,
    index: PlainIndex,
    config: &WatermarkConfig,
    seed: u64,
) -> Result<Session> {
    let grids = SessionGrids::derive(secret, prompt, index, config)?;
    let ld = config.latent_dims();
    let sample = |m: Modality| -> Result<LatentTensor> {
        let diffused = diffuse(grids.grid(m), config.factors, ld)?;
        let rand = randomize(&diffused, grids.mask(m))?;
        sample_latent(&rand, config.delta, noise_seed(seed, m))
    };
    let video = sample(Modality::Video)?;
    let audio = sample(Modality::Audio)?;
    Ok(Session { grids, video, audio })
}
