//! Temporal synchronization against the public time template.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridLayout;
use crate::latent::{LatentTensor, RandomizationMask, RepetitionFactors};

/// Below this template agreement no offset is accepted.
pub const SYNC_MIN_AGREEMENT: f64 = 0.55;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncResult {
    /// Received frame `p` holds original frame `p - offset` (cyclically).
    pub offset: i64,
    pub agreement: f64,
}

/// Finds the cyclic frame offset whose template rows best match channel 0.
///
/// Candidates run over `[-(T-1), T-1]`; ties go to the smallest `|o|`, then
/// to the positive one. Only the public part of the mask is used.
pub fn synchronize(z_v: &LatentTensor, layout: &GridLayout, factors: RepetitionFactors) -> Result<SyncResult> {
    let ld = factors.latent_dims(layout.dims());
    if z_v.dims != ld {
        return Err(Error::dims(format!("latent {} vs expected {ld}", z_v.dims)));
    }
    if ld.t == 0 {
        return Err(Error::invalid("synchronization needs at least one frame"));
    }
    let mask = RandomizationMask::new(layout, factors, None, 0);
    let gd = layout.dims();
    let template = layout.template();
    let slots = gd.h * gd.w;
    let copies = factors.c * factors.h * factors.w;
    let t_len = ld.t;

    // score[p][q]: template matches of received frame p read as frame q
    let mut score = vec![vec![0usize; t_len]; t_len];
    let mut ones = vec![0usize; slots];
    for (p, row) in score.iter_mut().enumerate() {
        for (q, cell) in row.iter_mut().enumerate() {
            ones.fill(0);
            for c in 0..factors.c {
                for h in 0..ld.h {
                    for w in 0..ld.w {
                        let bit = u8::from(z_v.values[ld.index(c, p, h, w)] > 0.0) ^ mask.bits()[ld.index(c, q, h, w)];
                        ones[(h / factors.h) * gd.w + w / factors.w] += usize::from(bit);
                    }
                }
            }
            *cell = ones
                .iter()
                .enumerate()
                .filter(|&(s, &o)| u8::from(2 * o > copies) == template.bit(q / factors.t, s))
                .count();
        }
    }

    let total = (t_len * slots) as f64;
    let agreement = |o: i64| -> f64 {
        let matched: usize = (0..t_len)
            .map(|p| score[p][(p as i64 - o).rem_euclid(t_len as i64) as usize])
            .sum();
        matched as f64 / total
    };
    let mut candidates: Vec<i64> = (-(t_len as i64 - 1)..t_len as i64).collect();
    candidates.sort_by_key(|&o| (o.abs(), o < 0));
    let mut best = SyncResult {
        offset: 0,
        agreement: f64::NEG_INFINITY,
    };
    for o in candidates {
        let a = agreement(o);
        if a > best.agreement {
            best = SyncResult { offset: o, agreement: a };
        }
    }
    if best.agreement < SYNC_MIN_AGREEMENT {
        return Err(Error::SyncFailed { best: best.agreement });
    }
    Ok(best)
}

/// Undoes a cyclic offset: `aligned[q] = received[(q + offset) mod T]`.
pub fn align_frames(z: &LatentTensor, offset: i64) -> LatentTensor {
    let t = z.dims.t as i64;
    if offset == 0 || t == 0 {
        return z.clone();
    }
    let frames = z.to_frames();
    let aligned: Vec<Vec<f32>> = (0..t)
        .map(|q| frames[(q + offset).rem_euclid(t) as usize].clone())
        .collect();
    LatentTensor::from_frames(z.modality, z.dims.c, z.dims.h, z.dims.w, &aligned)
        .expect("frames of a valid tensor")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Modality;
    use crate::keyring::{PlainIndex, SecretPayload};
    use crate::pipeline::{embed, WatermarkConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn rotate(z: &LatentTensor, by: i64) -> LatentTensor {
        // received[p] = original[p - by]
        align_frames(z, -by)
    }

    fn session(seed: u64) -> (WatermarkConfig, LatentTensor) {
        let c = WatermarkConfig::default();
        let m = SecretPayload::from_bytes(vec![seed as u8; 32]).unwrap();
        (c, embed(&m, "sync", PlainIndex(1), &c, seed).unwrap().video)
    }

    #[test]
    fn aligned_latent_syncs_to_zero() {
        let (c, z) = session(1);
        let layout = c.video_layout().unwrap();
        let r = synchronize(&z, &layout, c.factors).unwrap();
        assert_eq!(r.offset, 0);
        assert_eq!(r.agreement, 1.0);
    }

    #[test]
    fn rotation_is_recovered() {
        let (c, z) = session(2);
        let layout = c.video_layout().unwrap();
        for by in [1, 2, 3] {
            let r = synchronize(&rotate(&z, by), &layout, c.factors).unwrap();
            assert_eq!(r.offset.rem_euclid(4), by.rem_euclid(4));
            assert!(r.offset.abs() <= 2);
            assert_eq!(align_frames(&rotate(&z, by), r.offset), z);
        }
        assert_eq!(synchronize(&rotate(&z, 2), &layout, c.factors).unwrap().offset, 2);
    }

    #[test]
    fn pure_noise_usually_fails() {
        let c = WatermarkConfig::default();
        let layout = c.video_layout().unwrap();
        let ld = c.latent_dims();
        let failures = (0..100u64)
            .filter(|&s| {
                let mut rng = ChaCha20Rng::seed_from_u64(s);
                let v = (0..ld.len()).map(|_| rng.sample::<f32, _>(rand_distr::StandardNormal)).collect();
                let z = LatentTensor::new(Modality::Video, ld, v).unwrap();
                matches!(synchronize(&z, &layout, c.factors), Err(Error::SyncFailed { .. }))
            })
            .count();
        assert!(failures >= 65, "{failures}");
    }
}
