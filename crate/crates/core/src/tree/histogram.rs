use serde::{Deserialize, Serialize};

use super::midpoint;
use crate::error::{Error, Result};

pub const DEFAULT_MAX_BINS: usize = 255;

/// Quantile binning of one feature.
///
/// `cuts` are strictly increasing thresholds; bin `b` holds values in
/// `(cuts[b-1], cuts[b]]`, so splitting after bin `b` is the split
/// `x <= cuts[b]`. There are `cuts.len() + 1` bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBins {
    pub cuts: Vec<f64>,
}

impl FeatureBins {
    /// Bin edges from empirical quantiles of `values`.
    ///
    /// With at most `max_bins` distinct values every distinct value gets its
    /// own bin. Otherwise a cut is placed after the first distinct value whose
    /// cumulative count reaches each `i * n / max_bins`; repeated cuts merge.
    /// Cuts are midpoints between neighbouring distinct values.
    pub fn from_values(values: &[f64], max_bins: usize) -> Self {
        let max_bins = max_bins.max(2);
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut distinct: Vec<(f64, usize)> = Vec::new();
        for v in sorted {
            match distinct.last_mut() {
                Some((last, c)) if *last == v => *c += 1,
                _ => distinct.push((v, 1)),
            }
        }
        if distinct.len() <= max_bins {
            let cuts = distinct
                .windows(2)
                .map(|w| midpoint(w[0].0, w[1].0))
                .collect();
            return FeatureBins { cuts };
        }
        let n = values.len() as f64;
        let mut cuts: Vec<f64> = Vec::with_capacity(max_bins - 1);
        let mut cum = 0usize;
        let mut next_boundary = 1usize;
        for (j, &(v, c)) in distinct.iter().enumerate() {
            cum += c;
            if j + 1 == distinct.len() {
                break;
            }
            let mut crossed = false;
            while next_boundary < max_bins
                && cum as f64 >= next_boundary as f64 * n / max_bins as f64
            {
                next_boundary += 1;
                crossed = true;
            }
            if crossed {
                let cut = midpoint(v, distinct[j + 1].0);
                if cuts.last().is_none_or(|&last| cut > last) {
                    cuts.push(cut);
                }
            }
        }
        FeatureBins { cuts }
    }

    pub fn n_bins(&self) -> usize {
        self.cuts.len() + 1
    }

    #[inline]
    pub fn bin(&self, x: f64) -> usize {
        self.cuts.partition_point(|&c| c < x)
    }

    /// Bin index of every value.
    pub fn assign(&self, values: &[f64]) -> Vec<u16> {
        values.iter().map(|&v| self.bin(v) as u16).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BinStats {
    pub grad_sum: f64,
    pub hess_sum: f64,
    pub count: usize,
}

impl BinStats {
    #[inline]
    pub fn add(&mut self, g: f64, h: f64) {
        self.grad_sum += g;
        self.hess_sum += h;
        self.count += 1;
    }
}

/// Gradient/hessian sums and counts per bin of one feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub cuts: Vec<f64>,
    pub bins: Vec<BinStats>,
}

impl Histogram {
    pub fn empty(bins: &FeatureBins) -> Self {
        Histogram {
            cuts: bins.cuts.clone(),
            bins: vec![BinStats::default(); bins.n_bins()],
        }
    }

    /// Per-bin sums of `rows` given each row's precomputed bin index.
    pub(crate) fn accumulate(
        n_bins: usize,
        bin_of_row: &[u16],
        rows: &[usize],
        grads: &[f64],
        hessians: &[f64],
    ) -> Vec<BinStats> {
        let mut bins = vec![BinStats::default(); n_bins];
        for &i in rows {
            bins[bin_of_row[i] as usize].add(grads[i], hessians[i]);
        }
        bins
    }

    pub fn totals(&self) -> BinStats {
        self.bins.iter().fold(BinStats::default(), |mut acc, b| {
            acc.grad_sum += b.grad_sum;
            acc.hess_sum += b.hess_sum;
            acc.count += b.count;
            acc
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.bins.len() != self.cuts.len() + 1 {
            return Err(Error::InvalidParam(format!(
                "histogram has {} bins for {} cuts",
                self.bins.len(),
                self.cuts.len()
            )));
        }
        if self.cuts.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParam(
                "histogram cuts not strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

/// Quantile-bin one feature and accumulate gradients/hessians per bin.
pub fn build_histogram(
    feature_values: &[f64],
    grads: &[f64],
    hessians: &[f64],
    max_bins: usize,
) -> Result<Histogram> {
    Error::check_len(feature_values.len(), grads.len())?;
    Error::check_len(feature_values.len(), hessians.len())?;
    if max_bins < 2 {
        return Err(Error::InvalidParam(format!(
            "max_bins must be >= 2, got {max_bins}"
        )));
    }
    let bins = FeatureBins::from_values(feature_values, max_bins);
    let mut hist = Histogram::empty(&bins);
    for ((&x, &g), &h) in feature_values.iter().zip(grads).zip(hessians) {
        hist.bins[bins.bin(x)].add(g, h);
    }
    Ok(hist)
}
