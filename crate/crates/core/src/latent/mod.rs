//! Continuous latents: block diffusion, keystream randomization and
//! distribution-preserving inverse transform sampling.

mod format;
mod sampler;

pub use format::{load_latent, read_latent, save_latent, write_latent, LATENT_MAGIC, LATENT_VERSION};
pub use sampler::{
    diffuse, diffuse_bits, extract_symbols, public_mask_key, randomize, sample_latent, symbol_of, uniform_draw,
    watermarked_cdf, RandomizationMask, SymbolMap, DEFAULT_TRUNCATION,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Dims4, Modality};

/// Block repetition factors `(k_c, k_t, k_h, k_w)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 4]", into = "[usize; 4]")]
pub struct RepetitionFactors {
    pub c: usize,
    pub t: usize,
    pub h: usize,
    pub w: usize,
}

impl RepetitionFactors {
    pub const fn new(c: usize, t: usize, h: usize, w: usize) -> Self {
        RepetitionFactors { c, t, h, w }
    }

    /// `k_all`, copies per grid bit.
    pub const fn total(&self) -> usize {
        self.c * self.t * self.h * self.w
    }

    pub fn latent_dims(&self, grid: Dims4) -> Dims4 {
        Dims4::new(grid.c * self.c, grid.t * self.t, grid.h * self.h, grid.w * self.w)
    }

    /// Grid dims for a latent shape, if the factors divide it exactly.
    pub fn grid_dims(&self, latent: Dims4) -> Result<Dims4> {
        let ok = self.total() > 0
            && latent.c.is_multiple_of(self.c)
            && latent.t.is_multiple_of(self.t)
            && latent.h.is_multiple_of(self.h)
            && latent.w.is_multiple_of(self.w);
        if !ok {
            return Err(Error::dims(format!(
                "factors ({}, {}, {}, {}) do not divide latent {latent}",
                self.c, self.t, self.h, self.w
            )));
        }
        Ok(Dims4::new(latent.c / self.c, latent.t / self.t, latent.h / self.h, latent.w / self.w))
    }

    /// Grid position feeding latent coordinate `(c, t, h, w)`.
    #[inline]
    pub fn grid_pos(&self, grid: Dims4, c: usize, t: usize, h: usize, w: usize) -> usize {
        grid.index(c / self.c, t / self.t, h / self.h, w / self.w)
    }
}

impl From<[usize; 4]> for RepetitionFactors {
    fn from([c, t, h, w]: [usize; 4]) -> Self {
        RepetitionFactors { c, t, h, w }
    }
}

impl From<RepetitionFactors> for [usize; 4] {
    fn from(f: RepetitionFactors) -> Self {
        [f.c, f.t, f.h, f.w]
    }
}

/// Real-valued `(C, T, H, W)` tensor, row-major `f32`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentTensor {
    pub modality: Modality,
    pub dims: Dims4,
    pub values: Vec<f32>,
}

impl LatentTensor {
    pub fn new(modality: Modality, dims: Dims4, values: Vec<f32>) -> Result<Self> {
        if values.len() != dims.len() {
            return Err(Error::dims(format!(
                "{} values for dims {dims}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite latent value at {i}")));
        }
        Ok(LatentTensor {
            modality,
            dims,
            values,
        })
    }

    pub fn zeros(modality: Modality, dims: Dims4) -> Self {
        LatentTensor {
            modality,
            dims,
            values: vec![0.0; dims.len()],
        }
    }

    pub fn frame_count(&self) -> usize {
        self.dims.t
    }

    /// Splits into per-frame vectors, each ordered `(c, h, w)`.
    pub fn to_frames(&self) -> Vec<Vec<f32>> {
        let d = self.dims;
        let plane = d.h * d.w;
        (0..d.t)
            .map(|t| {
                (0..d.c)
                    .flat_map(|c| {
                        let start = d.index(c, t, 0, 0);
                        self.values[start..start + plane].iter().copied()
                    })
                    .collect()
            })
            .collect()
    }

    /// Inverse of [`Self::to_frames`]; every frame must hold `C * H * W` values.
    pub fn from_frames(modality: Modality, c: usize, h: usize, w: usize, frames: &[Vec<f32>]) -> Result<Self> {
        let plane = h * w;
        if frames.iter().any(|f| f.len() != c * plane) {
            return Err(Error::dims("frame size mismatch"));
        }
        let dims = Dims4::new(c, frames.len(), h, w);
        let mut values = vec![0.0f32; dims.len()];
        for (t, frame) in frames.iter().enumerate() {
            for ch in 0..c {
                let start = dims.index(ch, t, 0, 0);
                values[start..start + plane].copy_from_slice(&frame[ch * plane..(ch + 1) * plane]);
            }
        }
        LatentTensor::new(modality, dims, values)
    }

    /// Truncates or zero-pads the time axis to `frames` frames.
    pub fn conform_frames(&self, frames: usize) -> LatentTensor {
        if frames == self.dims.t {
            return self.clone();
        }
        let mut fs = self.to_frames();
        fs.resize(frames, vec![0.0; self.dims.c * self.dims.h * self.dims.w]);
        LatentTensor::from_frames(self.modality, self.dims.c, self.dims.h, self.dims.w, &fs)
            .expect("frames built from a valid tensor")
    }
}
