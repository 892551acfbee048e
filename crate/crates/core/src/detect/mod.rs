//! Detection: thresholding, majority voting, bit accuracy, index recovery,
//! binding score, the AND-gate verdict and the full registry-backed decision.

mod report;
mod sync;

pub use report::{statistical_binding_decision, DetectionReport, Detector, REPORT_SCHEMA};
pub use sync::{align_frames, synchronize, SyncResult, SYNC_MIN_AGREEMENT};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{digest_bit, GridLayout};
use crate::keyring::{PlainIndex, INDEX_BITS};
use crate::latent::{LatentTensor, RandomizationMask, RepetitionFactors};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionThresholds {
    pub tau_acc: f64,
    pub tau_bind: f64,
}

impl Default for DetectionThresholds {
    fn default() -> Self {
        DetectionThresholds {
            tau_acc: 0.7,
            tau_bind: 0.8,
        }
    }
}

impl DetectionThresholds {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("tau_acc", self.tau_acc), ("tau_bind", self.tau_bind)] {
            if !(v > 0.5 && v < 1.0) {
                return Err(Error::invalid(format!("{name} = {v} not in (0.5, 1)")));
            }
        }
        Ok(())
    }
}

/// Per-bit decision rule applied to recovered noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Thresholding {
    /// Sign of every copy, then majority vote.
    #[default]
    Zero,
    /// Sign of the per-bit median over sign-corrected copies.
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Authentic,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    Binding,
    Video,
    Audio,
    UnknownIndex,
    Sync,
}

/// `b[i] = 1[z[i] > 0]`.
pub fn decode_zero(z: &LatentTensor) -> Vec<u8> {
    z.values.iter().map(|&v| u8::from(v > 0.0)).collect()
}

/// 1 iff strictly more than half the copies are 1.
pub fn majority_vote(copies: &[u8]) -> u8 {
    let ones = copies.iter().filter(|&&b| b != 0).count();
    u8::from(2 * ones > copies.len())
}

fn check_shapes(z: &LatentTensor, layout: &GridLayout, factors: RepetitionFactors, mask: &RandomizationMask) -> Result<()> {
    let ld = factors.latent_dims(layout.dims());
    if z.dims != ld || mask.dims() != ld {
        return Err(Error::dims(format!(
            "latent {} / mask {} vs expected {ld}",
            z.dims,
            mask.dims()
        )));
    }
    Ok(())
}

/// Recovers grid bits from a latent: threshold, undo the mask, and reduce
/// each grid bit's block of copies.
pub fn decode_grid(
    z: &LatentTensor,
    layout: &GridLayout,
    factors: RepetitionFactors,
    mask: &RandomizationMask,
    rule: Thresholding,
) -> Result<Vec<u8>> {
    check_shapes(z, layout, factors, mask)?;
    let gd = layout.dims();
    let k_all = factors.total();
    match rule {
        Thresholding::Zero => {
            let mut ones = vec![0usize; gd.len()];
            for (i, (&v, &m)) in z.values.iter().zip(mask.bits()).enumerate() {
                let (c, t, h, w) = z.dims.coords(i);
                ones[factors.grid_pos(gd, c, t, h, w)] += usize::from((v > 0.0) as u8 ^ m);
            }
            Ok(ones.iter().map(|&o| u8::from(2 * o > k_all)).collect())
        }
        Thresholding::Median => {
            let mut copies = vec![Vec::with_capacity(k_all); gd.len()];
            for (i, (&v, &m)) in z.values.iter().zip(mask.bits()).enumerate() {
                let (c, t, h, w) = z.dims.coords(i);
                let y = if m == 1 { -v } else { v };
                copies[factors.grid_pos(gd, c, t, h, w)].push(y);
            }
            Ok(copies.iter_mut().map(|c| u8::from(median(c) > 0.0)).collect())
        }
    }
}

/// Median of a nonempty slice; even lengths average the middle pair.
pub fn median(values: &mut [f32]) -> f32 {
    let n = values.len();
    values.sort_unstable_by(f32::total_cmp);
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Fraction of positions where `decoded` and `truth` agree.
pub fn bit_accuracy(decoded: &[u8], truth: &[u8]) -> Result<f64> {
    if decoded.len() != truth.len() {
        return Err(Error::dims(format!("{} decoded bits vs {} truth bits", decoded.len(), truth.len())));
    }
    if truth.is_empty() {
        return Err(Error::invalid("bit accuracy of empty strings"));
    }
    let hits = decoded.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Majority over every repetition of each index bit. Needs no key.
pub fn extract_index(grid_bits: &[u8], layout: &GridLayout) -> PlainIndex {
    let bits: Vec<u8> = (0..INDEX_BITS)
        .map(|b| {
            let copies: Vec<u8> = layout.index_copies(b).map(|p| grid_bits[p]).collect();
            majority_vote(&copies)
        })
        .collect();
    PlainIndex::from_bits(&bits).expect("32 index bits")
}

/// `S = (1/N) sum_i 1[bits[I_bind(i)] = digest[phi(i)]]`. A layout without
/// binding slots scores 1.0.
pub fn binding_score(grid_bits: &[u8], digest: &[u8; 32], layout: &GridLayout) -> Result<f64> {
    if grid_bits.len() != layout.len() {
        return Err(Error::dims(format!("{} bits for a {}-slot layout", grid_bits.len(), layout.len())));
    }
    let n = layout.bind_len();
    if n == 0 {
        return Ok(1.0);
    }
    let hits = layout
        .bind_slots()
        .iter()
        .enumerate()
        .filter(|&(i, &p)| grid_bits[p] == digest_bit(digest, layout.phi(i)))
        .count();
    Ok(hits as f64 / n as f64)
}

/// Strict AND of the three clauses. Failed clauses are listed binding
/// first, then video, then audio. A NaN score fails its clause.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn verdict(ba_v: f64, ba_a: f64, s_bind: f64, thr: &DetectionThresholds) -> (Verdict, Vec<RejectReason>) {
    let mut failed = Vec::new();
    if !(s_bind > thr.tau_bind) {
        failed.push(RejectReason::Binding);
    }
    if !(ba_v > thr.tau_acc) {
        failed.push(RejectReason::Video);
    }
    if !(ba_a > thr.tau_acc) {
        failed.push(RejectReason::Audio);
    }
    let v = if failed.is_empty() { Verdict::Authentic } else { Verdict::Rejected };
    (v, failed)
}
