//! Full honest loop: embed, generate through the toy flow, invert jointly,
//! perturb with channel drift and run the registry-backed detector.

use std::collections::HashMap;

use avbind::detect::{DetectionThresholds, Detector};
use avbind::flow::{drift_channel, generate, invert_joint, DriftParams, ToyFlowSpec, TrajectoryConfig};
use avbind::keyring::{PlainIndex, RegistryRecord, SecretPayload};
use avbind::pipeline::{embed, WatermarkConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> avbind::Result<()> {
    let config = WatermarkConfig::default();
    let secret = SecretPayload::random(&mut ChaCha20Rng::seed_from_u64(1));
    let index = PlainIndex(0x00c0_ffee);
    let prompt = "a violinist playing in the rain";

    let mut registry = HashMap::new();
    registry.insert(index, RegistryRecord::new(index, secret.clone(), prompt));

    let session = embed(&secret, prompt, index, &config, 42)?;
    println!("latent video {} audio {}", session.video.dims, session.audio.dims);

    let (spec, traj) = (ToyFlowSpec::default(), TrajectoryConfig::default());
    let x_v = generate(&session.video, &spec, &traj)?;
    let x_a = generate(&session.audio, &spec, &traj)?;
    let inv = invert_joint(&x_v, &x_a, &spec, &traj)?;
    let drift = DriftParams { sigma: 0.1, flip_rate: 0.05 };
    let z_v = drift_channel(&inv.video, &drift, 7)?;
    let z_a = drift_channel(&inv.audio, &drift, 8)?;

    let report = Detector::new(config, DetectionThresholds::default()).detect(&z_v, &z_a, &registry)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
