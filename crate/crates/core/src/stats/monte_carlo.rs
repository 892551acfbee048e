use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bounds::BoundQuery;
use crate::detect::binding_score;
use crate::error::{Error, Result};
use crate::grid::{build_audio_grid, build_video_grid, Dims4, GridLayout};
use crate::keyring::{derive_session_key, PlainIndex, SecretPayload};

/// Two-sided 99% standard normal quantile.
pub const WILSON_Z99: f64 = 2.575_829_303_548_900_4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trials: u64,
    pub hits: u64,
    pub empirical_rate: f64,
    pub wilson_interval: (f64, f64),
    pub n: usize,
    pub tau: f64,
    pub seed: u64,
}

impl TrialSummary {
    pub fn new(trials: u64, hits: u64, n: usize, tau: f64, seed: u64) -> Self {
        TrialSummary {
            trials,
            hits,
            empirical_rate: hits as f64 / trials as f64,
            wilson_interval: wilson_interval(hits, trials, WILSON_Z99),
            n,
            tau,
            seed,
        }
    }

    pub fn contains(&self, p: f64) -> bool {
        self.wilson_interval.0 <= p && p <= self.wilson_interval.1
    }

    pub const CSV_HEADER: &'static str = "n,tau,trials,hits,rate,wilson_lo,wilson_hi,seed";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:e},{:e},{:e},{}",
            self.n,
            self.tau,
            self.trials,
            self.hits,
            self.empirical_rate,
            self.wilson_interval.0,
            self.wilson_interval.1,
            self.seed
        )
    }
}

/// Wilson score interval for `hits / trials` at normal quantile `z`.
pub fn wilson_interval(hits: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn random_words(rng: &mut ChaCha8Rng, n: usize) -> Vec<u64> {
    let words = n.div_ceil(64);
    let mut v: Vec<u64> = (0..words).map(|_| rng.next_u64()).collect();
    if !n.is_multiple_of(64) {
        v[words - 1] &= (1u64 << (n % 64)) - 1;
    }
    v
}

fn matches(a: &[u64], b: &[u64], n: usize) -> usize {
    let mismatches: u32 = a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum();
    n - mismatches as usize
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::invalid("at least one trial required"));
    }
    Ok(())
}

/// Fast-path swap simulation: both the ideal digest bits and the observed
/// audio binding bits are independent fair coins.
pub fn monte_carlo_swap(trials: u64, n: usize, tau: f64, seed: u64) -> Result<TrialSummary> {
    check_trials(trials)?;
    let q = BoundQuery::new(n, tau)?;
    let hits = (0..trials)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = trial_rng(seed, i);
            let ideal = random_words(&mut rng, q.n);
            let seen = random_words(&mut rng, q.n);
            matches(&ideal, &seen, q.n) as f64 / q.n as f64 > q.tau
        })
        .count() as u64;
    Ok(TrialSummary::new(trials, hits, q.n, q.tau, seed))
}

/// Blind-search adversary: a fixed target digest, and per trial audio bits
/// guessed uniformly at random.
pub fn blind_search_attack(trials: u64, n: usize, tau: f64, seed: u64) -> Result<TrialSummary> {
    check_trials(trials)?;
    let q = BoundQuery::new(n, tau)?;
    let target = random_words(&mut trial_rng(seed, u64::MAX), q.n);
    let hits = (0..trials)
        .into_par_iter()
        .filter(|&i| {
            let guess = random_words(&mut trial_rng(seed, i), q.n);
            matches(&target, &guess, q.n) as f64 / q.n as f64 > q.tau
        })
        .count() as u64;
    Ok(TrialSummary::new(trials, hits, q.n, q.tau, seed))
}

/// Full-pipeline swap simulation: two independent sessions per trial, the
/// audio grid of session B read through session A's binding layout and
/// scored against the digest of A's video grid.
pub fn monte_carlo_swap_pipeline(trials: u64, n: usize, tau: f64, seed: u64) -> Result<TrialSummary> {
    check_trials(trials)?;
    let q = BoundQuery::new(n, tau)?;
    let dims = Dims4::new(2, 4, 8, 8);
    let video_layout = Arc::new(GridLayout::video(dims, 1)?);
    let hits: Result<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let session = |rng: &mut ChaCha8Rng| -> Result<_> {
                let keys = derive_session_key(&SecretPayload::random(rng), "swap trial");
                let index = PlainIndex(rng.next_u32());
                let video = build_video_grid(&keys, index, video_layout.clone())?;
                let audio_layout = Arc::new(GridLayout::audio(dims, q.n, &keys.subkey_audio)?);
                let audio = build_audio_grid(&keys, &video, audio_layout.clone())?;
                Ok((video, audio, audio_layout))
            };
            let (video_a, _, layout_a) = session(&mut rng)?;
            let (_, audio_b, _) = session(&mut rng)?;
            Ok(binding_score(&audio_b.bits, &video_a.digest(), &layout_a)? > q.tau)
        })
        .collect();
    let hits = hits?.into_iter().filter(|&h| h).count() as u64;
    Ok(TrialSummary::new(trials, hits, q.n, q.tau, seed))
}
