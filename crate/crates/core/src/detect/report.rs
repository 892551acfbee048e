use serde::{Deserialize, Serialize};

use super::sync::{align_frames, synchronize};
use super::{
    binding_score, bit_accuracy, decode_grid, extract_index, verdict, DetectionThresholds, RejectReason,
    Thresholding, Verdict,
};
use crate::error::{Error, Result};
use crate::grid::Modality;
use crate::keyring::{KeyLookup, PlainIndex};
use crate::latent::{LatentTensor, RandomizationMask};
use crate::pipeline::{SessionGrids, WatermarkConfig};

pub const REPORT_SCHEMA: &str = "avbind.detection/v1";

/// Outcome of one detection, with every intermediate that was reached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub schema: String,
    pub ba_video: Option<f64>,
    pub ba_audio: Option<f64>,
    pub s_bind: Option<f64>,
    pub sync_offset: Option<i64>,
    pub sync_agreement: Option<f64>,
    pub index_hex: Option<String>,
    pub verdict: Verdict,
    /// First failed clause: binding, then video, then audio.
    pub reject_reason: Option<RejectReason>,
    pub failed_clauses: Vec<RejectReason>,
    pub thresholds: DetectionThresholds,
    pub thresholding: Thresholding,
}

impl DetectionReport {
    fn rejected(reason: RejectReason, thresholds: DetectionThresholds, thresholding: Thresholding) -> Self {
        DetectionReport {
            schema: REPORT_SCHEMA.to_string(),
            ba_video: None,
            ba_audio: None,
            s_bind: None,
            sync_offset: None,
            sync_agreement: None,
            index_hex: None,
            verdict: Verdict::Rejected,
            reject_reason: Some(reason),
            failed_clauses: vec![reason],
            thresholds,
            thresholding,
        }
    }

    pub fn is_authentic(&self) -> bool {
        self.verdict == Verdict::Authentic
    }
}

/// Registry-backed detector for recovered `(z_v, z_a)` pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detector {
    pub config: WatermarkConfig,
    pub thresholds: DetectionThresholds,
    pub thresholding: Thresholding,
    /// Search for a temporal offset before decoding.
    pub resync: bool,
}

impl Detector {
    pub fn new(config: WatermarkConfig, thresholds: DetectionThresholds) -> Self {
        Detector {
            config,
            thresholds,
            thresholding: Thresholding::Zero,
            resync: true,
        }
    }

    fn conform(&self, z: &LatentTensor, modality: Modality) -> Result<LatentTensor> {
        let ld = self.config.latent_dims();
        if z.modality != modality {
            return Err(Error::invalid(format!("expected a {modality} latent, got {}", z.modality)));
        }
        if (z.dims.c, z.dims.h, z.dims.w) != (ld.c, ld.h, ld.w) {
            return Err(Error::dims(format!("{modality} latent {} vs expected {ld}", z.dims)));
        }
        Ok(z.conform_frames(ld.t))
    }

    /// Sync, public index read, registry lookup, re-derivation, soft match
    /// and verdict. Sync failures and unknown indices are reported as
    /// rejections; other failures are errors.
    pub fn detect(&self, z_v: &LatentTensor, z_a: &LatentTensor, registry: &dyn KeyLookup) -> Result<DetectionReport> {
        self.config.validate()?;
        self.thresholds.validate()?;
        let (thr, rule, f) = (self.thresholds, self.thresholding, self.config.factors);
        let z_v = self.conform(z_v, Modality::Video)?;
        let z_a = self.conform(z_a, Modality::Audio)?;
        let video_layout = self.config.video_layout()?;

        let sync = if self.resync {
            match synchronize(&z_v, &video_layout, f) {
                Ok(s) => Some(s),
                Err(Error::SyncFailed { best }) => {
                    let mut r = DetectionReport::rejected(RejectReason::Sync, thr, rule);
                    r.sync_agreement = Some(best);
                    return Ok(r);
                }
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        let offset = sync.map_or(0, |s| s.offset);
        let z_v = align_frames(&z_v, offset);
        let z_a = align_frames(&z_a, offset);

        let public = RandomizationMask::new(&video_layout, f, None, 0);
        let index: PlainIndex = extract_index(&decode_grid(&z_v, &video_layout, f, &public, rule)?, &video_layout);
        let record = match registry.lookup(index) {
            Ok(r) => r,
            Err(Error::NotFound(_)) => {
                let mut r = DetectionReport::rejected(RejectReason::UnknownIndex, thr, rule);
                r.sync_offset = Some(offset);
                r.sync_agreement = sync.map(|s| s.agreement);
                r.index_hex = Some(index.to_hex());
                return Ok(r);
            }
            Err(e) => return Err(e),
        };

        let ideal = SessionGrids::derive(&record.secret, &record.prompt, index, &self.config)?;
        let bv = decode_grid(&z_v, &ideal.video.layout, f, &ideal.video_mask, rule)?;
        let ba = decode_grid(&z_a, &ideal.audio.layout, f, &ideal.audio_mask, rule)?;
        let ba_video = bit_accuracy(&bv, &ideal.video.bits)?;
        let ba_audio = bit_accuracy(&ba, &ideal.audio.bits)?;
        let s_bind = binding_score(&ba, &ideal.video.digest(), &ideal.audio.layout)?;
        let (v, failed) = verdict(ba_video, ba_audio, s_bind, &thr);
        Ok(DetectionReport {
            schema: REPORT_SCHEMA.to_string(),
            ba_video: Some(ba_video),
            ba_audio: Some(ba_audio),
            s_bind: Some(s_bind),
            sync_offset: Some(offset),
            sync_agreement: sync.map(|s| s.agreement),
            index_hex: Some(index.to_hex()),
            verdict: v,
            reject_reason: failed.first().copied(),
            failed_clauses: failed,
            thresholds: thr,
            thresholding: rule,
        })
    }
}

/// Zero-threshold detection with resynchronization.
pub fn statistical_binding_decision(
    z_v: &LatentTensor,
    z_a: &LatentTensor,
    registry: &dyn KeyLookup,
    config: &WatermarkConfig,
    thresholds: &DetectionThresholds,
) -> Result<DetectionReport> {
    Detector::new(*config, *thresholds).detect(z_v, z_a, registry)
}
