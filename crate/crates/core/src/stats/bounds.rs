use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binding length and threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundQuery {
    pub n: usize,
    pub tau: f64,
}

impl BoundQuery {
    pub fn new(n: usize, tau: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("binding length must be positive"));
        }
        if !(tau > 0.5 && tau < 1.0) {
            return Err(Error::invalid(format!("tau {tau} not in (0.5, 1)")));
        }
        Ok(BoundQuery { n, tau })
    }
}

/// `exp(-2 N (tau - 1/2)^2)`, an upper bound on `P(S >= tau)` for a swap.
pub fn hoeffding_bound(n: usize, tau: f64) -> Result<f64> {
    let q = BoundQuery::new(n, tau)?;
    let d = q.tau - 0.5;
    Ok((-2.0 * q.n as f64 * d * d).exp())
}

/// `P(S > tau)` for `S = K / N`, `K ~ Binomial(N, 1/2)`, as the exact ratio
/// `(numerator, 2^N)`. `k / N > tau` is evaluated in `f64`, the same
/// comparison the verdict applies to a binding score.
pub fn exact_swap_fp_ratio(n: usize, tau: f64) -> Result<(BigUint, BigUint)> {
    let q = BoundQuery::new(n, tau)?;
    let mut num = BigUint::zero();
    let mut binom = BigUint::one();
    for k in 0..=q.n {
        if k > 0 {
            binom = binom * BigUint::from(q.n - k + 1) / BigUint::from(k);
        }
        if k as f64 / q.n as f64 > q.tau {
            num += &binom;
        }
    }
    Ok((num, BigUint::one() << q.n))
}

pub fn exact_swap_fp(n: usize, tau: f64) -> Result<f64> {
    let (num, den) = exact_swap_fp_ratio(n, tau)?;
    // Shift both down so the quotient survives f64 conversion for large N.
    let shift = den.bits().saturating_sub(1000);
    let num = (num >> shift).to_f64().unwrap_or(f64::INFINITY);
    let den = (den >> shift).to_f64().unwrap_or(f64::INFINITY);
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hoeffding_values() {
        let cases = [
            (16, 5.6135e-2),
            (32, 3.1511e-3),
            (64, 9.9295e-6),
            (128, 9.8595e-11),
            (256, 9.7210e-21),
        ];
        for (n, want) in cases {
            let got = hoeffding_bound(n, 0.8).unwrap();
            assert!((got / want - 1.0).abs() < 1e-4, "N={n}: {got}");
        }
        assert!(hoeffding_bound(16, 0.5).is_err());
        assert!(hoeffding_bound(1000, 0.5 + 1e-9).unwrap() > 0.999_999);
    }

    #[test]
    fn exact_tail_values() {
        let (num, den) = exact_swap_fp_ratio(16, 0.8).unwrap();
        assert_eq!(num, BigUint::from(697u32));
        assert_eq!(den, BigUint::from(65536u32));
        assert!((exact_swap_fp(16, 0.8).unwrap() - 1.063_537_597_656_25e-2).abs() < 1e-15);
        assert_eq!(exact_swap_fp(1, 0.6).unwrap(), 0.5);
        let n128 = exact_swap_fp(128, 0.8).unwrap();
        assert!((n128 / 9.6667e-13 - 1.0).abs() < 1e-4, "{n128}");
    }

    #[test]
    fn exact_never_exceeds_bound() {
        for n in [16, 32, 64, 128, 256] {
            for tau in [0.6, 0.7, 0.8, 0.9] {
                let e = exact_swap_fp(n, tau).unwrap();
                let h = hoeffding_bound(n, tau).unwrap();
                assert!(e <= h, "N={n} tau={tau}: {e} > {h}");
            }
        }
    }
}
