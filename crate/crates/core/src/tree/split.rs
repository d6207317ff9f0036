//! Split search on the regularized second-order gain.

use serde::{Deserialize, Serialize};

use super::histogram::{BinStats, Histogram};
use super::midpoint;
use crate::boosting::objective::gain_unchecked;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GradStats {
    pub grad_sum: f64,
    pub hess_sum: f64,
    pub count: usize,
}

impl GradStats {
    pub fn new(grad_sum: f64, hess_sum: f64, count: usize) -> Self {
        GradStats {
            grad_sum,
            hess_sum,
            count,
        }
    }

    pub fn of_rows(rows: &[usize], grads: &[f64], hessians: &[f64]) -> Self {
        let mut s = GradStats::default();
        for &i in rows {
            s.grad_sum += grads[i];
            s.hess_sum += hessians[i];
            s.count += 1;
        }
        s
    }

    fn minus(self, other: GradStats) -> GradStats {
        GradStats {
            grad_sum: self.grad_sum - other.grad_sum,
            hess_sum: self.hess_sum - other.hess_sum,
            count: self.count - other.count,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitParams {
    pub l2_reg: f64,
    pub min_split_gain: f64,
    pub min_child_hess: f64,
    /// Fewest rows allowed on either side of a split.
    pub min_child_samples: usize,
}

impl Default for SplitParams {
    fn default() -> Self {
        SplitParams {
            l2_reg: 0.0,
            min_split_gain: 0.0,
            min_child_hess: 1e-3,
            min_child_samples: 1,
        }
    }
}

impl SplitParams {
    #[inline]
    fn admissible(&self, left: GradStats, right: GradStats) -> bool {
        left.count >= self.min_child_samples.max(1)
            && right.count >= self.min_child_samples.max(1)
            && left.hess_sum >= self.min_child_hess
            && right.hess_sum >= self.min_child_hess
            && left.hess_sum + self.l2_reg > 0.0
            && right.hess_sum + self.l2_reg > 0.0
    }

    #[inline]
    fn gain(&self, left: GradStats, right: GradStats) -> f64 {
        gain_unchecked(
            left.grad_sum,
            left.hess_sum,
            right.grad_sum,
            right.hess_sum,
            self.l2_reg,
            self.min_split_gain,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
    pub left: GradStats,
    pub right: GradStats,
}

impl SplitCandidate {
    /// Strictly better than `other` under the crate-wide order: higher gain,
    /// then lower feature index, then smaller threshold.
    pub fn beats(&self, other: &SplitCandidate) -> bool {
        match self.gain.total_cmp(&other.gain) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => {
                self.feature < other.feature
                    || (self.feature == other.feature && self.threshold < other.threshold)
            }
        }
    }
}

fn keep_best(best: &mut Option<SplitCandidate>, cand: SplitCandidate) {
    if cand.gain > 0.0 && best.as_ref().is_none_or(|b| cand.beats(b)) {
        *best = Some(cand);
    }
}

/// Best split of one feature over all midpoints between consecutive distinct
/// values of `column` restricted to `rows`.
pub(crate) fn best_split_exact_feature(
    feature: usize,
    column: &[f64],
    rows: &[usize],
    grads: &[f64],
    hessians: &[f64],
    total: GradStats,
    params: &SplitParams,
) -> Option<SplitCandidate> {
    let mut order: Vec<usize> = rows.to_vec();
    order.sort_by(|&a, &b| column[a].total_cmp(&column[b]).then(a.cmp(&b)));
    let mut left = GradStats::default();
    let mut best = None;
    for w in 0..order.len().saturating_sub(1) {
        let i = order[w];
        left.grad_sum += grads[i];
        left.hess_sum += hessians[i];
        left.count += 1;
        let (x, next) = (column[i], column[order[w + 1]]);
        if x == next {
            continue;
        }
        let right = total.minus(left);
        if !params.admissible(left, right) {
            continue;
        }
        keep_best(
            &mut best,
            SplitCandidate {
                feature,
                threshold: midpoint(x, next),
                gain: params.gain(left, right),
                left,
                right,
            },
        );
    }
    best
}

/// Exact greedy split maximizing the regularized gain over every feature and
/// every midpoint between consecutive distinct values.
///
/// Returns `None` when no admissible split has positive gain. `columns[j]` is
/// feature `j` for all samples.
pub fn best_split_exact(
    grads: &[f64],
    hessians: &[f64],
    columns: &[Vec<f64>],
    params: &SplitParams,
) -> Result<Option<SplitCandidate>> {
    let n = grads.len();
    Error::check_len(n, hessians.len())?;
    if n < 2 {
        return Err(Error::InvalidParam(format!(
            "split search needs >= 2 samples, got {n}"
        )));
    }
    for c in columns {
        Error::check_len(n, c.len())?;
    }
    if let Some(i) = grads.iter().chain(hessians).position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!(
            "gradient/hessian entry {}",
            i % n
        )));
    }
    let rows: Vec<usize> = (0..n).collect();
    let total = GradStats::of_rows(&rows, grads, hessians);
    let mut best = None;
    for (j, col) in columns.iter().enumerate() {
        if let Some(c) = best_split_exact_feature(j, col, &rows, grads, hessians, total, params) {
            keep_best(&mut best, c);
        }
    }
    Ok(best)
}

/// Best split of a single feature's histogram; thresholds are restricted to
/// the histogram's cut points.
pub fn best_split_histogram(
    hist: &Histogram,
    feature: usize,
    params: &SplitParams,
) -> Option<SplitCandidate> {
    best_split_bins(&hist.cuts, &hist.bins, feature, params)
}

pub(crate) fn best_split_bins(
    cuts: &[f64],
    bins: &[BinStats],
    feature: usize,
    params: &SplitParams,
) -> Option<SplitCandidate> {
    let mut total = GradStats::default();
    for b in bins {
        total.grad_sum += b.grad_sum;
        total.hess_sum += b.hess_sum;
        total.count += b.count;
    }
    let mut left = GradStats::default();
    let mut best = None;
    for (b, bin) in bins[..bins.len().saturating_sub(1)].iter().enumerate() {
        left.grad_sum += bin.grad_sum;
        left.hess_sum += bin.hess_sum;
        left.count += bin.count;
        if bin.count == 0 {
            // an empty bin adds no new partition
            continue;
        }
        let right = total.minus(left);
        if !params.admissible(left, right) {
            continue;
        }
        keep_best(
            &mut best,
            SplitCandidate {
                feature,
                threshold: cuts[b],
                gain: params.gain(left, right),
                left,
                right,
            },
        );
    }
    best
}

/// Fold per-feature results in feature order.
pub(crate) fn reduce_in_order(
    cands: impl IntoIterator<Item = Option<SplitCandidate>>,
) -> Option<SplitCandidate> {
    let mut best = None;
    for c in cands.into_iter().flatten() {
        keep_best(&mut best, c);
    }
    best
}

/// Best split across per-feature histograms, reduced in feature order.
pub fn best_split_histograms(hists: &[Histogram], params: &SplitParams) -> Option<SplitCandidate> {
    let mut best = None;
    for (j, h) in hists.iter().enumerate() {
        if let Some(c) = best_split_histogram(h, j, params) {
            keep_best(&mut best, c);
        }
    }
    best
}
