//! Swap false-positive probability: Hoeffding bound, exact binomial tail and
//! a Monte Carlo estimate with its 99% Wilson interval.

use avbind::stats::{exact_swap_fp, hoeffding_bound, monte_carlo_swap};

fn main() -> avbind::Result<()> {
    let tau = 0.8;
    println!("    N  hoeffding     exact");
    for n in [16, 32, 64, 128, 256] {
        println!("{n:5}  {:.3e}  {:.3e}", hoeffding_bound(n, tau)?, exact_swap_fp(n, tau)?);
    }
    let mc = monte_carlo_swap(1_000_000, 16, tau, 1)?;
    println!(
        "N=16 Monte Carlo: {} / {} = {:.4e}, 99% interval [{:.4e}, {:.4e}], contains exact: {}",
        mc.hits,
        mc.trials,
        mc.empirical_rate,
        mc.wilson_interval.0,
        mc.wilson_interval.1,
        mc.contains(exact_swap_fp(16, tau)?)
    );
    Ok(())
}
