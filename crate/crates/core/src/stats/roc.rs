use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Scores `>= threshold` are classified positive.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roc {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

impl Roc {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("fpr,tpr,threshold\n");
        for p in &self.points {
            s.push_str(&format!("{},{},{}\n", p.fpr, p.tpr, p.threshold));
        }
        s
    }
}

/// Threshold sweep with authentic scores as positives; trapezoidal AUC.
/// Points run from `(0, 0)` to `(1, 1)`.
pub fn roc_curve(positives: &[f64], negatives: &[f64]) -> Result<Roc> {
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::invalid("ROC needs nonempty score lists"));
    }
    if positives.iter().chain(negatives).any(|x| x.is_nan()) {
        return Err(Error::invalid("NaN score"));
    }
    let mut scored: Vec<(f64, bool)> = positives
        .iter()
        .map(|&s| (s, true))
        .chain(negatives.iter().map(|&s| (s, false)))
        .collect();
    scored.sort_unstable_by(|a, b| b.0.total_cmp(&a.0));
    let (np, nn) = (positives.len() as f64, negatives.len() as f64);
    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < scored.len() {
        let thr = scored[i].0;
        while i < scored.len() && scored[i].0 == thr {
            if scored[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / nn,
            tpr: tp as f64 / np,
            threshold: thr,
        });
    }
    let auc = points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum();
    Ok(Roc { points, auc })
}
