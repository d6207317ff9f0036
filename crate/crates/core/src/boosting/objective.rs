//! Second-order regularized objective for squared loss.
//!
//! With per-leaf gradient sum `G`, hessian sum `H`, L2 penalty `l2` and
//! per-leaf complexity cost `gamma`:
//!
//! ```text
//! leaf weight      w*    = -G / (H + l2)
//! structure score  score = -1/2 sum_j G_j^2 / (H_j + l2) + gamma * T
//! split gain       gain  = 1/2 [GL^2/(HL+l2) + GR^2/(HR+l2) - (GL+GR)^2/(HL+HR+l2)] - gamma
//! ```
//!
//! so splitting one leaf lowers the structure score by exactly `gain`.

use crate::error::{Error, Result};

fn check_denominator(h: f64, l2: f64, what: &str) -> Result<()> {
    if !(h + l2 > 0.0) || !h.is_finite() || !l2.is_finite() {
        return Err(Error::InvalidParam(format!(
            "{what}: hessian sum + l2 must be positive, got {h} + {l2}"
        )));
    }
    Ok(())
}

pub fn leaf_weight(grad_sum: f64, hess_sum: f64, l2: f64) -> Result<f64> {
    check_denominator(hess_sum, l2, "leaf_weight")?;
    Ok(-grad_sum / (hess_sum + l2))
}

pub fn structure_score(leaves: &[(f64, f64)], l2: f64, gamma: f64) -> Result<f64> {
    let mut total = 0.0;
    for &(g, h) in leaves {
        check_denominator(h, l2, "structure_score")?;
        total += g * g / (h + l2);
    }
    Ok(-0.5 * total + gamma * leaves.len() as f64)
}

pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, l2: f64, gamma: f64) -> Result<f64> {
    check_denominator(hl, l2, "split_gain (left)")?;
    check_denominator(hr, l2, "split_gain (right)")?;
    check_denominator(hl + hr, l2, "split_gain (parent)")?;
    Ok(gain_unchecked(gl, hl, gr, hr, l2, gamma))
}

#[inline]
pub(crate) fn gain_unchecked(gl: f64, hl: f64, gr: f64, hr: f64, l2: f64, gamma: f64) -> f64 {
    let g = gl + gr;
    0.5 * (gl * gl / (hl + l2) + gr * gr / (hr + l2) - g * g / (hl + hr + l2)) - gamma
}

/// Half squared-error loss plus `gamma * T + l2/2 * sum w^2` for each tree,
/// where `tree_leaf_weights[t]` lists tree `t`'s leaf values.
pub fn regularized_objective(
    y: &[f64],
    y_hat: &[f64],
    tree_leaf_weights: &[Vec<f64>],
    l2: f64,
    gamma: f64,
) -> Result<f64> {
    Error::check_len(y.len(), y_hat.len())?;
    let loss: f64 = y
        .iter()
        .zip(y_hat)
        .map(|(a, p)| 0.5 * (a - p).powi(2))
        .sum();
    let penalty: f64 = tree_leaf_weights
        .iter()
        .map(|w| gamma * w.len() as f64 + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>())
        .sum();
    Ok(loss + penalty)
}
