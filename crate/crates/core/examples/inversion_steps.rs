//! Raw sign accuracy of the recovered noise against the number of Euler
//! steps, for both placements of the initial noise.

use avbind::detect::decode_zero;
use avbind::flow::{generate, invert, invert_joint, invert_separate, GenerationStart, ToyFlowSpec, TrajectoryConfig};
use avbind::keyring::{PlainIndex, SecretPayload};
use avbind::pipeline::{embed, WatermarkConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> avbind::Result<()> {
    let config = WatermarkConfig::default();
    let secret = SecretPayload::random(&mut ChaCha20Rng::seed_from_u64(9));
    let s = embed(&secret, "a busy market", PlainIndex(1), &config, 9)?;
    let spec = ToyFlowSpec::default();
    let truth = decode_zero(&s.video);

    println!("steps  delta_t  start       raw sign accuracy");
    for (steps, delta_t) in [(1, 0.05), (5, 0.05), (50, 0.05), (1000, 0.0)] {
        for start in [GenerationStart::Truncated, GenerationStart::Origin] {
            let traj = TrajectoryConfig::new(steps, delta_t).with_start(start);
            let back = invert(&generate(&s.video, &spec, &traj)?, &spec, &traj)?;
            let same = decode_zero(&back).iter().zip(&truth).filter(|(a, b)| a == b).count();
            println!("{steps:5}  {delta_t:7}  {:<10}  {:.6}", format!("{start:?}"), same as f64 / truth.len() as f64);
        }
    }

    let traj = TrajectoryConfig::default();
    let x_v = generate(&s.video, &spec, &traj)?;
    let x_a = generate(&s.audio, &spec, &traj)?;
    let joint = invert_joint(&x_v, &x_a, &spec, &traj)?;
    let separate = invert_separate(&x_v, &x_a, &spec, &traj)?;
    println!(
        "joint == separate: {}; model evaluations {} vs {}",
        joint.video == separate.video && joint.audio == separate.audio,
        joint.model_evaluations,
        separate.model_evaluations
    );
    Ok(())
}
