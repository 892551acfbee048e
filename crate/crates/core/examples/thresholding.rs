//! Zero-threshold vs per-block median decoding under increasing drift.

use avbind::detect::{bit_accuracy, decode_grid, Thresholding};
use avbind::flow::{drift_channel, DriftParams};
use avbind::keyring::{PlainIndex, SecretPayload};
use avbind::pipeline::{embed, WatermarkConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> avbind::Result<()> {
    let config = WatermarkConfig::default();
    let secret = SecretPayload::random(&mut ChaCha20Rng::seed_from_u64(4));
    let s = embed(&secret, "crowd cheering in a stadium", PlainIndex(4), &config, 4)?;
    let grid = &s.grids.video;
    println!("sigma  flip   zero    median");
    for (sigma, flip_rate) in [(0.0, 0.0), (0.5, 0.1), (1.0, 0.2), (1.5, 0.3)] {
        let z = drift_channel(&s.video, &DriftParams { sigma, flip_rate }, 11)?;
        let ba = |rule| -> avbind::Result<f64> {
            bit_accuracy(&decode_grid(&z, &grid.layout, config.factors, &s.grids.video_mask, rule)?, &grid.bits)
        };
        println!("{sigma:5}  {flip_rate:4}  {:.4}  {:.4}", ba(Thresholding::Zero)?, ba(Thresholding::Median)?);
    }
    Ok(())
}
