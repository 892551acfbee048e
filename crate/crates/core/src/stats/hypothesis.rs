use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal;

/// Smallest sample accepted by the goodness-of-fit tests.
pub const MIN_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Kolmogorov survival function `Q(lambda) = P(K > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let y = -PI * PI / (8.0 * lambda * lambda);
        let s: f64 = (1..=8).map(|k| ((2 * k - 1) as f64).powi(2) * y).map(f64::exp).sum();
        return (1.0 - (2.0 * PI).sqrt() / lambda * s).clamp(0.0, 1.0);
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

fn ks_p(d: f64, n_eff: f64) -> f64 {
    let sn = n_eff.sqrt();
    kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "{} samples, at least {MIN_SAMPLES} required",
            samples.len()
        )));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::invalid("NaN sample"));
    }
    let mut v = samples.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    Ok(v)
}

/// One-sample KS test against a continuous CDF.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    let x = sorted(samples)?;
    let n = x.len() as f64;
    let d = x
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (((i + 1) as f64 / n) - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max);
    Ok(KsResult {
        statistic: d,
        p_value: ks_p(d, n),
    })
}

/// One-sample KS test against `N(0, 1)`.
pub fn ks_normality(samples: &[f64]) -> Result<KsResult> {
    ks_one_sample(samples, normal::cdf)
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    let (x, y) = (sorted(a)?, sorted(b)?);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let n_eff = (n * m) as f64 / (n + m) as f64;
    Ok(KsResult {
        statistic: d,
        p_value: ks_p(d, n_eff),
    })
}

/// Chi-square goodness of fit of `0`/`1` values to a fair coin, one degree
/// of freedom. Returns `(statistic, p_value)`.
pub fn sign_balance_chi2(bits: &[u8]) -> Result<(f64, f64)> {
    if bits.len() < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "{} bits, at least {MIN_SAMPLES} required",
            bits.len()
        )));
    }
    let n = bits.len() as f64;
    let ones = bits.iter().filter(|&&b| b != 0).count() as f64;
    let chi2 = (2.0 * ones - n).powi(2) / n;
    Ok((chi2, libm::erfc((chi2 / 2.0).sqrt())))
}

/// Two-sided pooled z-test for equal proportions.
pub fn two_proportion_p_value(hits_a: u64, n_a: u64, hits_b: u64, n_b: u64) -> Result<f64> {
    if n_a == 0 || n_b == 0 || hits_a > n_a || hits_b > n_b {
        return Err(Error::invalid("proportions need 0 <= hits <= trials, trials > 0"));
    }
    let (na, nb) = (n_a as f64, n_b as f64);
    let pooled = (hits_a + hits_b) as f64 / (na + nb);
    let var = pooled * (1.0 - pooled) * (1.0 / na + 1.0 / nb);
    if var == 0.0 {
        return Ok(1.0);
    }
    let z = (hits_a as f64 / na - hits_b as f64 / nb) / var.sqrt();
    Ok(2.0 * normal::sf(z.abs()))
}
