//! Temporal attacks on a 30-frame clip. Rate adaptation and interpolation
//! shift frames off their keystream segment; frame averaging does not.

use avbind::attack::{apply_attack, AttackSpec};
use avbind::detect::{bit_accuracy, decode_grid, Thresholding};
use avbind::flow::{generate, invert, ToyFlowSpec, TrajectoryConfig};
use avbind::keyring::{PlainIndex, SecretPayload};
use avbind::latent::LatentTensor;
use avbind::pipeline::{embed, SessionGrids, WatermarkConfig};
use avbind::Dims4;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn accuracy(config: &WatermarkConfig, grids: &SessionGrids, z: &LatentTensor) -> avbind::Result<f64> {
    let grid = grids.grid(z.modality);
    let bits = decode_grid(z, &grid.layout, config.factors, grids.mask(z.modality), Thresholding::Zero)?;
    bit_accuracy(&bits, &grid.bits)
}

fn main() -> avbind::Result<()> {
    let config = WatermarkConfig { grid_dims: Dims4::new(2, 30, 8, 8), ..WatermarkConfig::default() };
    let secret = SecretPayload::random(&mut ChaCha20Rng::seed_from_u64(3));
    let s = embed(&secret, "waves at sunset", PlainIndex(7), &config, 3)?;
    let (spec, traj) = (ToyFlowSpec::default(), TrajectoryConfig::default());
    let x_v = generate(&s.video, &spec, &traj)?;
    let x_a = generate(&s.audio, &spec, &traj)?;
    let t = config.latent_dims().t;

    let attacks = [
        AttackSpec::FrameSwap { p: 0.0, seed: 0 },
        AttackSpec::FrameAverage { n: 1 },
        AttackSpec::FrameSwap { p: 0.25, seed: 5 },
        AttackSpec::FrameRateAdapt { r_s: 30.0, r_d: 24.0 },
        AttackSpec::FrameInterpolate { k: 1 },
    ];
    for a in attacks {
        let (v, au, tr) = apply_attack(&a, &x_v, &x_a)?;
        let v = invert(&v.conform_frames(t), &spec, &traj)?;
        let au = invert(&au.conform_frames(t), &spec, &traj)?;
        println!(
            "{:<60} aligned {:<5} misaligned {:.2}  BA_v {:.3}  BA_a {:.3}",
            serde_json::to_string(&a)?,
            tr.preserves_alignment(),
            tr.misaligned_fraction(),
            accuracy(&config, &s.grids, &v)?,
            accuracy(&config, &s.grids, &au)?
        );
    }
    Ok(())
}
