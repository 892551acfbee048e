//! Swap, temporal and signal-level attacks over channel outputs.
//!
//! Temporal attacks act on both modality tensors along the time axis.
//! Every attack returns a transcript that replays it bit-exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::latent::LatentTensor;

pub type Frames = Vec<Vec<f32>>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackSpec {
    /// Video of one session paired with audio of another.
    Swap,
    FrameAverage { n: usize },
    FrameSwap { p: f64, seed: u64 },
    FrameRateAdapt { r_s: f64, r_d: f64 },
    FrameInterpolate { k: usize },
    AdditiveNoise { sigma: f64, seed: u64 },
    Quantize { bits: u32 },
}

/// Realized randomness and alignment of one attack run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackTranscript {
    pub spec: AttackSpec,
    /// Output frame `t` was taken from input frame `permutation[t]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutation: Option<Vec<usize>>,
    /// Fractional input-time position each output frame sits on.
    pub source_positions: Vec<f64>,
    /// `(min, max)` of video and audio values, for quantization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranges: Option<[(f32, f32); 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub swap: Option<SwapPair>,
}

impl AttackTranscript {
    /// True iff every output frame sits on its own input frame index.
    pub fn preserves_alignment(&self) -> bool {
        self.source_positions
            .iter()
            .enumerate()
            .all(|(t, &s)| s == t as f64)
    }

    /// Fraction of output frames not at their own index.
    pub fn misaligned_fraction(&self) -> f64 {
        if self.source_positions.is_empty() {
            return 0.0;
        }
        let bad = self
            .source_positions
            .iter()
            .enumerate()
            .filter(|&(t, &s)| s != t as f64)
            .count();
        bad as f64 / self.source_positions.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapPair {
    pub video_from: String,
    pub audio_from: String,
}

impl SwapPair {
    pub fn is_attack(&self) -> bool {
        self.video_from != self.audio_from
    }
}

/// Pairs session A's video with session B's audio.
pub fn swap_attack(
    video_a: &LatentTensor,
    audio_b: &LatentTensor,
    pair: SwapPair,
) -> (LatentTensor, LatentTensor, AttackTranscript) {
    let transcript = AttackTranscript {
        spec: AttackSpec::Swap,
        permutation: None,
        source_positions: (0..video_a.dims.t).map(|t| t as f64).collect(),
        ranges: None,
        swap: Some(pair),
    };
    (video_a.clone(), audio_b.clone(), transcript)
}

fn identity_positions(t: usize) -> Vec<f64> {
    (0..t).map(|i| i as f64).collect()
}

/// Sliding window mean over `2n + 1` frames with zero padding.
pub fn frame_average(frames: &[Vec<f32>], n: usize) -> Result<Frames> {
    if n == 0 {
        return Err(Error::invalid("frame average window n must be >= 1"));
    }
    let t_len = frames.len() as i64;
    let width = (2 * n + 1) as f32;
    Ok((0..t_len)
        .map(|t| {
            let len = frames[t as usize].len();
            let mut acc = vec![0f32; len];
            for j in (t - n as i64)..=(t + n as i64) {
                if (0..t_len).contains(&j) {
                    for (a, v) in acc.iter_mut().zip(&frames[j as usize]) {
                        *a += v;
                    }
                }
            }
            acc.iter_mut().for_each(|a| *a /= width);
            acc
        })
        .collect())
}

/// Sequential adjacent swaps: for t = 1..T, swap (t-1, t) with probability
/// `p`, acting on the already-swapped sequence. Returns the frames and the
/// permutation `out[t] = in[perm[t]]`.
pub fn frame_swap(frames: &[Vec<f32>], p: f64, seed: u64) -> Result<(Frames, Vec<usize>)> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("swap probability {p} not in [0, 1]")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..frames.len()).collect();
    for t in 1..frames.len() {
        if rng.gen_bool(p) {
            perm.swap(t - 1, t);
        }
    }
    Ok((apply_permutation(frames, &perm), perm))
}

fn apply_permutation(frames: &[Vec<f32>], perm: &[usize]) -> Frames {
    perm.iter().map(|&i| frames[i].clone()).collect()
}

fn rate_positions(t_len: usize, r_s: f64, r_d: f64) -> Result<Vec<f64>> {
    if !(r_s > 0.0 && r_d > 0.0 && r_s.is_finite() && r_d.is_finite()) {
        return Err(Error::invalid("frame rates must be positive"));
    }
    let out = (t_len as f64 * r_d / r_s).floor() as usize;
    if out == 0 {
        return Err(Error::invalid("rate adaptation leaves no frames"));
    }
    Ok((0..out).map(|t| t as f64 * r_s / r_d).collect())
}

fn blend(a: &[f32], b: &[f32], alpha: f64) -> Vec<f32> {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| ((1.0 - alpha) * f64::from(x) + alpha * f64::from(y)) as f32)
        .collect()
}

fn resample(frames: &[Vec<f32>], positions: &[f64]) -> Frames {
    let last = frames.len() - 1;
    positions
        .iter()
        .map(|&s| {
            let lo = (s.floor() as usize).min(last);
            let hi = (s.ceil() as usize).min(last);
            blend(&frames[lo], &frames[hi], s - s.floor())
        })
        .collect()
}

/// Linear-interpolation resampling from rate `r_s` to `r_d`;
/// `T' = floor(T r_d / r_s)`.
pub fn frame_rate_adapt(frames: &[Vec<f32>], r_s: f64, r_d: f64) -> Result<Frames> {
    let pos = rate_positions(frames.len(), r_s, r_d)?;
    Ok(resample(frames, &pos))
}

fn interp_positions(t_len: usize, k: usize) -> Vec<f64> {
    let n = (k + 1) * (t_len - 1) + 1;
    (0..n).map(|i| i as f64 / (k + 1) as f64).collect()
}

/// Inserts `k` blended frames between each adjacent pair;
/// `T' = (k + 1)(T - 1) + 1`.
pub fn frame_interpolate(frames: &[Vec<f32>], k: usize) -> Result<Frames> {
    if k == 0 {
        return Err(Error::invalid("interpolation factor k must be >= 1"));
    }
    if frames.len() < 2 {
        return Err(Error::invalid("interpolation needs at least two frames"));
    }
    let pos = interp_positions(frames.len(), k);
    Ok(resample(frames, &pos))
}

/// `x + N(0, sigma^2)`, drawn sequentially from a seeded generator.
pub fn additive_noise(x: &LatentTensor, sigma: f64, seed: u64) -> Result<LatentTensor> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    noise_with(x, sigma, &mut rng)
}

fn noise_with(x: &LatentTensor, sigma: f64, rng: &mut ChaCha20Rng) -> Result<LatentTensor> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("noise sigma {sigma} must be >= 0")));
    }
    if sigma == 0.0 {
        return Ok(x.clone());
    }
    let d = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let values = x.values.iter().map(|&v| (f64::from(v) + d.sample(rng)) as f32).collect();
    LatentTensor::new(x.modality, x.dims, values)
}

fn value_range(x: &LatentTensor) -> (f32, f32) {
    x.values
        .iter()
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

fn check_bits(bits: u32) -> Result<()> {
    if !(2..=16).contains(&bits) {
        return Err(Error::invalid(format!("quantizer bits {bits} not in [2, 16]")));
    }
    Ok(())
}

fn quantize_in(x: &LatentTensor, bits: u32, (lo, hi): (f32, f32)) -> LatentTensor {
    if x.values.is_empty() || hi <= lo {
        return x.clone();
    }
    let levels = 1u32 << bits;
    let (lo, hi) = (f64::from(lo), f64::from(hi));
    let step = (hi - lo) / f64::from(levels);
    let values = x
        .values
        .iter()
        .map(|&v| {
            let k = ((f64::from(v) - lo) / step).floor().clamp(0.0, f64::from(levels - 1));
            (lo + (k + 0.5) * step) as f32
        })
        .collect();
    LatentTensor { values, ..x.clone() }
}

/// Uniform mid-rise quantizer with `2^bits` levels over `[min, max]`.
pub fn quantize(x: &LatentTensor, bits: u32) -> Result<LatentTensor> {
    check_bits(bits)?;
    Ok(quantize_in(x, bits, value_range(x)))
}

fn map_frames(x: &LatentTensor, f: impl Fn(&[Vec<f32>]) -> Result<Frames>) -> Result<LatentTensor> {
    let out = f(&x.to_frames())?;
    LatentTensor::from_frames(x.modality, x.dims.c, x.dims.h, x.dims.w, &out)
}

/// Applies a single-sample attack to both tensors.
pub fn apply_attack(
    spec: &AttackSpec,
    x_v: &LatentTensor,
    x_a: &LatentTensor,
) -> Result<(LatentTensor, LatentTensor, AttackTranscript)> {
    let t = x_v.dims.t;
    let mut transcript = AttackTranscript {
        spec: *spec,
        permutation: None,
        source_positions: identity_positions(t),
        ranges: None,
        swap: None,
    };
    let (v, a) = match *spec {
        AttackSpec::Swap => return Err(Error::invalid("a swap takes two sessions, use swap_attack")),
        AttackSpec::FrameAverage { n } => (
            map_frames(x_v, |f| frame_average(f, n))?,
            map_frames(x_a, |f| frame_average(f, n))?,
        ),
        AttackSpec::FrameSwap { p, seed } => {
            let (fv, perm) = frame_swap(&x_v.to_frames(), p, seed)?;
            let fa = apply_permutation(&x_a.conform_frames(t).to_frames(), &perm);
            transcript.source_positions = perm.iter().map(|&i| i as f64).collect();
            transcript.permutation = Some(perm);
            (
                LatentTensor::from_frames(x_v.modality, x_v.dims.c, x_v.dims.h, x_v.dims.w, &fv)?,
                LatentTensor::from_frames(x_a.modality, x_a.dims.c, x_a.dims.h, x_a.dims.w, &fa)?,
            )
        }
        AttackSpec::FrameRateAdapt { r_s, r_d } => {
            transcript.source_positions = rate_positions(t, r_s, r_d)?;
            (
                map_frames(x_v, |f| frame_rate_adapt(f, r_s, r_d))?,
                map_frames(x_a, |f| frame_rate_adapt(f, r_s, r_d))?,
            )
        }
        AttackSpec::FrameInterpolate { k } => {
            let v = map_frames(x_v, |f| frame_interpolate(f, k))?;
            transcript.source_positions = interp_positions(t, k);
            (v, map_frames(x_a, |f| frame_interpolate(f, k))?)
        }
        AttackSpec::AdditiveNoise { sigma, seed } => {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            (noise_with(x_v, sigma, &mut rng)?, noise_with(x_a, sigma, &mut rng)?)
        }
        AttackSpec::Quantize { bits } => {
            check_bits(bits)?;
            let ranges = [value_range(x_v), value_range(x_a)];
            transcript.ranges = Some(ranges);
            (quantize_in(x_v, bits, ranges[0]), quantize_in(x_a, bits, ranges[1]))
        }
    };
    Ok((v, a, transcript))
}

/// Re-runs an attack from its transcript alone.
pub fn replay(
    transcript: &AttackTranscript,
    x_v: &LatentTensor,
    x_a: &LatentTensor,
) -> Result<(LatentTensor, LatentTensor)> {
    match (&transcript.spec, &transcript.permutation, &transcript.ranges) {
        (AttackSpec::FrameSwap { .. }, Some(perm), _) => {
            if perm.len() != x_v.dims.t || perm.iter().any(|&i| i >= x_v.dims.t) {
                return Err(Error::dims("permutation does not fit the input"));
            }
            let fv = apply_permutation(&x_v.to_frames(), perm);
            let fa = apply_permutation(&x_a.conform_frames(perm.len()).to_frames(), perm);
            Ok((
                LatentTensor::from_frames(x_v.modality, x_v.dims.c, x_v.dims.h, x_v.dims.w, &fv)?,
                LatentTensor::from_frames(x_a.modality, x_a.dims.c, x_a.dims.h, x_a.dims.w, &fa)?,
            ))
        }
        (AttackSpec::Quantize { bits }, _, Some(r)) => {
            check_bits(*bits)?;
            Ok((quantize_in(x_v, *bits, r[0]), quantize_in(x_a, *bits, r[1])))
        }
        (AttackSpec::Swap, _, _) => Ok((x_v.clone(), x_a.clone())),
        (spec, _, _) => {
            let (v, a, _) = apply_attack(spec, x_v, x_a)?;
            Ok((v, a))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Dims4, Modality};

    fn frames(vals: &[f32]) -> Frames {
        vals.iter().map(|&v| vec![v, 2.0 * v]).collect()
    }

    fn tensor(modality: Modality, t: usize, seed: u64) -> LatentTensor {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let dims = Dims4::new(2, t, 3, 3);
        let v = (0..dims.len()).map(|_| rng.sample::<f32, _>(rand_distr::StandardNormal)).collect();
        LatentTensor::new(modality, dims, v).unwrap()
    }

    #[test]
    fn frame_average_formula() {
        let out = frame_average(&frames(&[3.0, 6.0, 9.0]), 1).unwrap();
        assert_eq!(out[0][0], (0.0 + 3.0 + 6.0) / 3.0);
        assert_eq!(out[1][0], (3.0 + 6.0 + 9.0) / 3.0);
        assert_eq!(out[2][0], (6.0 + 9.0 + 0.0) / 3.0);
        let constant = frames(&[1.5; 5]);
        let avg = frame_average(&constant, 1).unwrap();
        assert_eq!(avg[2], constant[2]);
        assert_eq!(frame_average(&constant, 4).unwrap().len(), 5);
        assert!(frame_average(&constant, 0).is_err());
    }

    #[test]
    fn frame_swap_cascade() {
        let f = frames(&[1.0, 2.0, 3.0]);
        let (out, perm) = frame_swap(&f, 1.0, 0).unwrap();
        assert_eq!(perm, vec![1, 2, 0]);
        assert_eq!(out, frames(&[2.0, 3.0, 1.0]));
        let (same, perm) = frame_swap(&f, 0.0, 0).unwrap();
        assert_eq!(perm, vec![0, 1, 2]);
        assert_eq!(same, f);
        assert!(frame_swap(&f, 1.5, 0).is_err());
    }

    #[test]
    fn rate_adaptation() {
        let f = frames(&(0..30).map(|i| i as f32).collect::<Vec<_>>());
        let out = frame_rate_adapt(&f, 30.0, 24.0).unwrap();
        assert_eq!(out.len(), 24);
        // t' = 1 -> sigma = 1.25 -> 0.75 f1 + 0.25 f2
        assert!((out[1][0] - 1.25).abs() < 1e-6);
        assert_eq!(frame_rate_adapt(&f, 24.0, 24.0).unwrap(), f);
        assert!(frame_rate_adapt(&f, 30.0, 0.5).is_err());
    }

    #[test]
    fn interpolation() {
        let f = frames(&(0..10).map(|i| i as f32).collect::<Vec<_>>());
        let out = frame_interpolate(&f, 1).unwrap();
        assert_eq!(out.len(), 19);
        assert_eq!(out[1][0], 0.5);
        assert_eq!(out[2], f[1]);
        assert_eq!(frame_interpolate(&f, 3).unwrap().len(), 37);
        assert!(frame_interpolate(&f[..1], 1).is_err());
    }

    #[test]
    fn signal_attacks() {
        let x = tensor(Modality::Video, 4, 1);
        assert_eq!(additive_noise(&x, 0.0, 3).unwrap(), x);
        assert_ne!(additive_noise(&x, 0.1, 3).unwrap(), x);
        let ramp: Vec<f32> = (0..=1000).map(|i| -4.0 + 8.0 * i as f32 / 1000.0).collect();
        let r = LatentTensor::new(Modality::Audio, Dims4::new(1, 1, 1, ramp.len()), ramp).unwrap();
        let q = quantize(&r, 16).unwrap();
        let max_err = q.values.iter().zip(&r.values).map(|(a, b)| (a - b).abs()).fold(0.0, f32::max);
        assert!(f64::from(max_err) <= 8.0 / 65536.0, "{max_err}");
        assert!(quantize(&r, 1).is_err());
        let q2 = quantize(&r, 2).unwrap();
        let mut levels: Vec<f32> = q2.values.clone();
        levels.sort_by(f32::total_cmp);
        levels.dedup();
        assert_eq!(levels, vec![-3.0, -1.0, 1.0, 3.0]);
    }

    #[test]
    fn replay_is_exact() {
        let v = tensor(Modality::Video, 8, 2);
        let a = tensor(Modality::Audio, 8, 3);
        let specs = [
            AttackSpec::FrameAverage { n: 1 },
            AttackSpec::FrameSwap { p: 0.25, seed: 9 },
            AttackSpec::FrameRateAdapt { r_s: 30.0, r_d: 24.0 },
            AttackSpec::FrameInterpolate { k: 2 },
            AttackSpec::AdditiveNoise { sigma: 0.1, seed: 4 },
            AttackSpec::Quantize { bits: 6 },
        ];
        for spec in specs {
            let (av, aa, tr) = apply_attack(&spec, &v, &a).unwrap();
            let json = serde_json::to_string(&tr).unwrap();
            let tr: AttackTranscript = serde_json::from_str(&json).unwrap();
            assert_eq!(replay(&tr, &v, &a).unwrap(), (av, aa), "{spec:?}");
        }
    }

    #[test]
    fn alignment_dichotomy() {
        let v = tensor(Modality::Video, 8, 5);
        let a = tensor(Modality::Audio, 8, 6);
        for spec in [
            AttackSpec::FrameAverage { n: 2 },
            AttackSpec::AdditiveNoise { sigma: 0.3, seed: 1 },
            AttackSpec::Quantize { bits: 8 },
        ] {
            assert!(apply_attack(&spec, &v, &a).unwrap().2.preserves_alignment(), "{spec:?}");
        }
        for spec in [
            AttackSpec::FrameRateAdapt { r_s: 30.0, r_d: 24.0 },
            AttackSpec::FrameInterpolate { k: 1 },
        ] {
            let tr = apply_attack(&spec, &v, &a).unwrap().2;
            // aligned up to the first accumulation point, misaligned after
            assert_eq!(tr.source_positions[0], 0.0);
            let first_bad = tr.source_positions.iter().enumerate().position(|(t, &s)| s != t as f64).unwrap();
            assert!(tr.source_positions[first_bad..].iter().enumerate().all(|(j, &s)| s != (first_bad + j) as f64));
        }
    }

    #[test]
    fn swap_pair_metadata_and_serde() {
        let v = tensor(Modality::Video, 4, 7);
        let a = tensor(Modality::Audio, 4, 8);
        let pair = SwapPair { video_from: "a".into(), audio_from: "b".into() };
        assert!(pair.is_attack());
        let (sv, sa, tr) = swap_attack(&v, &a, pair);
        assert_eq!((sv, sa), (v.clone(), a.clone()));
        assert_eq!(tr.swap.as_ref().unwrap().audio_from, "b");
        assert!(apply_attack(&AttackSpec::Swap, &v, &a).is_err());
        let spec: AttackSpec = serde_json::from_str(r#"{"kind":"frame_swap","p":0.25,"seed":3}"#).unwrap();
        assert_eq!(spec, AttackSpec::FrameSwap { p: 0.25, seed: 3 });
    }
}
