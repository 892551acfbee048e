//! Cross-session splice: video from one session, audio from another. Both
//! carry valid unimodal marks, so only the binding clause fails.

use std::collections::HashMap;

use avbind::detect::{DetectionThresholds, Detector};
use avbind::keyring::{PlainIndex, RegistryRecord, SecretPayload};
use avbind::pipeline::{embed, WatermarkConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> avbind::Result<()> {
    let config = WatermarkConfig::default();
    let mut registry = HashMap::new();
    let mut sessions = Vec::new();
    for (i, prompt) in ["thunderstorm over a city", "thunderstorm over a city at night"].iter().enumerate() {
        let secret = SecretPayload::random(&mut ChaCha20Rng::seed_from_u64(i as u64));
        let index = PlainIndex(100 + i as u32);
        registry.insert(index, RegistryRecord::new(index, secret.clone(), *prompt));
        sessions.push(embed(&secret, prompt, index, &config, 10 + i as u64)?);
    }
    let detector = Detector::new(config, DetectionThresholds::default());
    for (label, v, a) in [("honest", 0, 0), ("honest", 1, 1), ("swapped", 0, 1), ("swapped", 1, 0)] {
        let r = detector.detect(&sessions[v].video, &sessions[a].audio, &registry)?;
        println!(
            "{label:8} video#{v} audio#{a}: BA_v {:.3} BA_a {:.3} S_bind {:.3} -> {:?} {:?}",
            r.ba_video.unwrap_or(f64::NAN),
            r.ba_audio.unwrap_or(f64::NAN),
            r.s_bind.unwrap_or(f64::NAN),
            r.verdict,
            r.reject_reason
        );
    }
    Ok(())
}
