//! Region layout of the entangled grids and the grid dump round trip.

use avbind::grid::{read_grid_dump, write_grid_dump, Region};
use avbind::keyring::{PlainIndex, SecretPayload};
use avbind::pipeline::{SessionGrids, WatermarkConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> avbind::Result<()> {
    let config = WatermarkConfig::default();
    let secret = SecretPayload::random(&mut ChaCha20Rng::seed_from_u64(2));
    let grids = SessionGrids::derive(&secret, "night traffic", PlainIndex(0xabcd), &config)?;
    for grid in [&grids.video, &grids.audio] {
        let count = |r: Region| grid.layout.regions().iter().filter(|&&x| x == r).count();
        println!(
            "{:?} {}: time {} index {} bind {} base {}  digest {}",
            grid.modality,
            grid.dims(),
            count(Region::Time),
            count(Region::Index),
            count(Region::Bind),
            count(Region::Base),
            hex::encode(grid.digest())
        );
        let dump = write_grid_dump(grid);
        println!("  dump {} bytes, round trip exact: {}", dump.len(), read_grid_dump(&dump)?.bits == grid.bits);
    }
    Ok(())
}
