//! Gradient-based one-side sampling.
//!
//! Rows are ranked by `|g|` (descending, ties to the lower row index). The top
//! `ceil(a * n)` rows are always kept with weight 1. From the remaining rows,
//! `ceil(b * n)` are drawn uniformly without replacement and weighted
//! `(1 - a) / b`, so `b * n` rows stand in for the `(1 - a) * n` they came from.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GossParams {
    /// Fraction `a` of rows with the largest |gradient| always kept.
    pub top_rate: f64,
    /// Rows sampled at random from the remainder, as a fraction `b` of all rows.
    pub other_rate: f64,
}

impl GossParams {
    pub fn new(top_rate: f64, other_rate: f64) -> Result<Self> {
        let p = GossParams {
            top_rate,
            other_rate,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = (self.top_rate, self.other_rate);
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || a + b > 1.0 {
            return Err(Error::InvalidParam(format!(
                "goss rates need a, b in [0, 1] and a + b <= 1, got a={a}, b={b}"
            )));
        }
        if a < 1.0 && b <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "goss with a={a} < 1 needs b > 0 or the low-gradient rows are lost"
            )));
        }
        Ok(())
    }

    /// Multiplier applied to sampled low-gradient rows.
    pub fn amplification(&self) -> f64 {
        (1.0 - self.top_rate) / self.other_rate
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GossSample {
    /// Selected row ids, ascending.
    pub indices: Vec<usize>,
    /// Weight per entry of `indices`.
    pub weights: Vec<f64>,
    /// Size of the always-kept top set.
    pub top_count: usize,
}

/// `ceil(x)` that ignores representation error of a few ulps above an integer.
fn ceil_count(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

pub fn goss_sample(grads: &[f64], top_rate: f64, other_rate: f64, seed: u64) -> Result<GossSample> {
    let params = GossParams::new(top_rate, other_rate)?;
    let n = grads.len();
    let top = ceil_count(top_rate * n as f64).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| grads[j].abs().total_cmp(&grads[i].abs()).then(i.cmp(&j)));
    let mut rest: Vec<usize> = order[top..].to_vec();
    rest.sort_unstable();
    let take = if rest.is_empty() {
        0
    } else {
        ceil_count(other_rate * n as f64).min(rest.len())
    };
    let mut rng = Rng::new(seed);
    let picked = rng.sample_without_replacement(rest.len(), take);

    let mut weight = vec![0.0; n];
    for &i in &order[..top] {
        weight[i] = 1.0;
    }
    if take > 0 {
        let w = params.amplification();
        for p in picked {
            weight[rest[p]] = w;
        }
    }
    let indices: Vec<usize> = (0..n).filter(|&i| weight[i] > 0.0).collect();
    let weights = indices.iter().map(|&i| weight[i]).collect();
    Ok(GossSample {
        indices,
        weights,
        top_count: top,
    })
}
