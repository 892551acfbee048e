//! Closed-form toy rectified flow standing in for a learned joint generator.
//!
//! Every coordinate follows `z_t = t x1 + (1 - t) z0` with
//! `x1 ~ N(mu, s^2)` and `z0 ~ N(0, 1)` independent, so the marginal
//! velocity `E[x1 - z0 | z_t]` is available in closed form.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Bernoulli, Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Modality;
use crate::latent::LatentTensor;

/// Target data law of one modality block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowBlock {
    pub mu: f64,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyFlowSpec {
    pub video: FlowBlock,
    pub audio: FlowBlock,
}

impl Default for ToyFlowSpec {
    fn default() -> Self {
        ToyFlowSpec {
            video: FlowBlock { mu: 0.4, s: 0.8 },
            audio: FlowBlock { mu: -0.2, s: 1.2 },
        }
    }
}

impl ToyFlowSpec {
    /// Identity-law spec, `mu = 0`, `s = 1` for both blocks.
    pub fn standard() -> Self {
        let b = FlowBlock { mu: 0.0, s: 1.0 };
        ToyFlowSpec { video: b, audio: b }
    }

    pub fn block(&self, modality: Modality) -> FlowBlock {
        match modality {
            Modality::Video => self.video,
            Modality::Audio => self.audio,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for b in [self.video, self.audio] {
            if !(b.s > 0.0 && b.s.is_finite() && b.mu.is_finite()) {
                return Err(Error::invalid(format!("flow block needs finite mu and s > 0, got {b:?}")));
            }
        }
        Ok(())
    }
}

/// Uniform Euler schedule on `[delta_t, 1]`.
/// Where generation places the initial noise. Inversion always stops at `delta_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerationStart {
    /// Noise sits at `t = delta_t`; the forward and backward grids coincide.
    #[default]
    Truncated,
    /// Noise sits at `t = 0`; only the inversion is truncated, so the
    /// recovered value is the trajectory at `delta_t`, not the noise itself.
    Origin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub n_steps: usize,
    pub delta_t: f64,
    #[serde(default)]
    pub start: GenerationStart,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        TrajectoryConfig {
            n_steps: 50,
            delta_t: 0.05,
            start: GenerationStart::Truncated,
        }
    }
}

impl TrajectoryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_steps == 0 {
            return Err(Error::invalid("trajectory needs at least one step"));
        }
        if !(0.0..1.0).contains(&self.delta_t) {
            return Err(Error::invalid(format!("delta_t {} not in [0, 1)", self.delta_t)));
        }
        Ok(())
    }

    /// Step endpoints `t_0 = delta_t < ... < t_n = 1`.
    pub fn new(n_steps: usize, delta_t: f64) -> Self {
        TrajectoryConfig { n_steps, delta_t, start: GenerationStart::Truncated }
    }

    pub fn with_start(self, start: GenerationStart) -> Self {
        TrajectoryConfig { start, ..self }
    }

    /// Inversion grid: `n_steps` uniform steps from `delta_t` to exactly 1.
    pub fn times(&self) -> Vec<f64> {
        uniform_grid(self.delta_t, self.n_steps)
    }

    /// Generation grid; differs from [`times`](Self::times) only for [`GenerationStart::Origin`].
    pub fn generation_times(&self) -> Vec<f64> {
        match self.start {
            GenerationStart::Truncated => self.times(),
            GenerationStart::Origin => uniform_grid(0.0, self.n_steps),
        }
    }
}

fn uniform_grid(from: f64, n_steps: usize) -> Vec<f64> {
    let n = n_steps as f64;
    (0..=n_steps)
        .map(|i| if i == n_steps { 1.0 } else { from + (1.0 - from) * (i as f64 / n) })
        .collect()
}

/// Noise-space perturbation standing in for channel noise under H0.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DriftParams {
    pub sigma: f64,
    pub flip_rate: f64,
}

impl DriftParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(format!("drift sigma {} must be >= 0", self.sigma)));
        }
        if !(0.0..=0.5).contains(&self.flip_rate) {
            return Err(Error::invalid(format!("flip rate {} not in [0, 0.5]", self.flip_rate)));
        }
        Ok(())
    }
}

/// `E[x1 - z0 | z_t = z]`.
#[inline]
pub fn velocity(z: f64, t: f64, b: FlowBlock) -> f64 {
    let s2 = b.s * b.s;
    let a = t * t * s2 + (1.0 - t) * (1.0 - t);
    let r = (z - t * b.mu) / a;
    b.mu + (t * s2 - (1.0 - t)) * r
}

fn integrate(x: &LatentTensor, b: FlowBlock, times: &[f64], forward: bool) -> LatentTensor {
    let values = x
        .values
        .par_iter()
        .map(|&v| {
            let mut z = f64::from(v);
            if forward {
                for w in times.windows(2) {
                    z += (w[1] - w[0]) * velocity(z, w[0], b);
                }
            } else {
                for w in times.windows(2).rev() {
                    z -= (w[1] - w[0]) * velocity(z, w[1], b);
                }
            }
            z as f32
        })
        .collect();
    LatentTensor {
        modality: x.modality,
        dims: x.dims,
        values,
    }
}

/// Euler generation from `t = delta_t` to `t = 1`.
pub fn generate(z0: &LatentTensor, spec: &ToyFlowSpec, config: &TrajectoryConfig) -> Result<LatentTensor> {
    spec.validate()?;
    config.validate()?;
    Ok(integrate(z0, spec.block(z0.modality), &config.generation_times(), true))
}

/// Euler inversion from `t = 1` back to `t = delta_t` on the generation grid.
pub fn invert(x: &LatentTensor, spec: &ToyFlowSpec, config: &TrajectoryConfig) -> Result<LatentTensor> {
    spec.validate()?;
    config.validate()?;
    Ok(integrate(x, spec.block(x.modality), &config.times(), false))
}

/// Recovered noise of both modalities plus the number of velocity-model
/// evaluations spent (one per step per pass).
#[derive(Debug, Clone, PartialEq)]
pub struct Inversion {
    pub video: LatentTensor,
    pub audio: LatentTensor,
    pub model_evaluations: u64,
}

fn check_pair(x_v: &LatentTensor, x_a: &LatentTensor) -> Result<()> {
    if x_v.modality != Modality::Video || x_a.modality != Modality::Audio {
        return Err(Error::invalid("expected a (video, audio) tensor pair"));
    }
    Ok(())
}

/// One backward pass over the concatenated video and audio coordinates.
pub fn invert_joint(
    x_v: &LatentTensor,
    x_a: &LatentTensor,
    spec: &ToyFlowSpec,
    config: &TrajectoryConfig,
) -> Result<Inversion> {
    check_pair(x_v, x_a)?;
    spec.validate()?;
    config.validate()?;
    let times = config.times();
    let (bv, ba) = (spec.video, spec.audio);
    let n_v = x_v.values.len();
    let joint: Vec<f32> = x_v.values.iter().chain(&x_a.values).copied().collect();
    let out: Vec<f32> = joint
        .par_iter()
        .enumerate()
        .map(|(i, &v)| {
            let b = if i < n_v { bv } else { ba };
            let mut z = f64::from(v);
            for w in times.windows(2).rev() {
                z -= (w[1] - w[0]) * velocity(z, w[1], b);
            }
            z as f32
        })
        .collect();
    let (ov, oa) = out.split_at(n_v);
    Ok(Inversion {
        video: LatentTensor { values: ov.to_vec(), ..x_v.clone() },
        audio: LatentTensor { values: oa.to_vec(), ..x_a.clone() },
        model_evaluations: config.n_steps as u64,
    })
}

/// Independent backward passes per modality.
pub fn invert_separate(
    x_v: &LatentTensor,
    x_a: &LatentTensor,
    spec: &ToyFlowSpec,
    config: &TrajectoryConfig,
) -> Result<Inversion> {
    check_pair(x_v, x_a)?;
    Ok(Inversion {
        video: invert(x_v, spec, config)?,
        audio: invert(x_a, spec, config)?,
        model_evaluations: 2 * config.n_steps as u64,
    })
}

/// `z + N(0, sigma^2)` per coordinate, then a sign flip with probability
/// `flip_rate`. Draws are sequential from a seeded ChaCha20 generator.
pub fn drift_channel(z: &LatentTensor, params: &DriftParams, seed: u64) -> Result<LatentTensor> {
    params.validate()?;
    if params.sigma == 0.0 && params.flip_rate == 0.0 {
        return Ok(z.clone());
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, params.sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let flip = Bernoulli::new(params.flip_rate).map_err(|e| Error::invalid(e.to_string()))?;
    let values = z
        .values
        .iter()
        .map(|&v| {
            let mut x = f64::from(v) + noise.sample(&mut rng);
            if flip.sample(&mut rng) {
                x = -x;
            }
            x as f32
        })
        .collect();
    LatentTensor::new(z.modality, z.dims, values)
}
