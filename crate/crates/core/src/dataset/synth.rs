//! Synthetic seismic-drift data with a known ground truth.
//!
//! Every feature is drawn independently and uniformly over its schema range.
//! Draws happen row by row, feature by feature in schema order, then one
//! standard-normal draw per row for noise, all from one [`Rng`] stream seeded
//! with `seed`.
//!
//! With `u(f) = (f - lo) / (hi - lo)` the feature scaled to `[0, 1]`, the
//! planted target is
//!
//! ```text
//! MIDR = 0.8 + 1.5 u(PGA) + 0.8 sqrt(u(HI)) + 1.2 u(PGA) u(H_tot)
//!            - 0.35 (u(n_vx) + u(n_vy)) + 0.3 [u(PP) > 0.5]
//! ```
//!
//! which is increasing in PGA and HI, decreasing in `n_vx + n_vy`, has one
//! interaction (PGA x building height) and one step. It ranges over
//! `[0.1, 4.6]`. Observed targets are `MIDR + noise_sd * z`, floored at
//! [`TARGET_FLOOR`] so drifts stay strictly positive.

use super::{Dataset, FeatureSchema};
use crate::error::{Error, Result};
use crate::rng::Rng;

pub const TARGET_FLOOR: f64 = 1e-3;

/// Default noise level. The planted target has variance of about 0.475, so
/// this caps the attainable R² near 0.92.
pub const DEFAULT_NOISE_SD: f64 = 0.2;

struct Planted {
    pga: usize,
    hi: usize,
    h_tot: usize,
    n_vx: usize,
    n_vy: usize,
    pp: usize,
}

impl Planted {
    fn locate(schema: &FeatureSchema) -> Self {
        let ix = |n: &str| schema.index_of(n).expect("canonical feature present");
        Planted {
            pga: ix("PGA"),
            hi: ix("HI"),
            h_tot: ix("H_tot"),
            n_vx: ix("n_vx"),
            n_vy: ix("n_vy"),
            pp: ix("PP"),
        }
    }
}

fn unit(schema: &FeatureSchema, j: usize, v: f64) -> f64 {
    let [lo, hi] = schema.features[j]
        .range
        .expect("canonical features are ranged");
    (v - lo) / (hi - lo)
}

/// The noiseless planted drift for one row in canonical schema order.
pub fn planted_midr(row: &[f64]) -> f64 {
    let schema = super::seismic_ref();
    let p = Planted::locate(schema);
    let u = |j: usize| unit(schema, j, row[j]);
    let step = if u(p.pp) > 0.5 { 0.3 } else { 0.0 };
    0.8 + 1.5 * u(p.pga) + 0.8 * u(p.hi).sqrt() + 1.2 * u(p.pga) * u(p.h_tot)
        - 0.35 * (u(p.n_vx) + u(p.n_vy))
        + step
}

/// `n` rows of the canonical schema with the planted target plus Gaussian noise.
pub fn synth_generate(n: usize, seed: u64, noise_sd: f64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidParam("synth_generate needs n >= 1".into()));
    }
    if !(noise_sd >= 0.0) || !noise_sd.is_finite() {
        return Err(Error::InvalidParam(format!(
            "noise_sd must be finite and >= 0, got {noise_sd}"
        )));
    }
    let schema = FeatureSchema::seismic();
    let d = schema.len();
    let mut rng = Rng::new(seed);
    let mut rows = Vec::with_capacity(n * d);
    let mut target = Vec::with_capacity(n);
    for _ in 0..n {
        let start = rows.len();
        for spec in &schema.features {
            let [lo, hi] = spec.range.expect("canonical features are ranged");
            rows.push(rng.uniform_in(lo, hi));
        }
        let clean = planted_midr(&rows[start..]);
        let z = rng.standard_normal();
        let y = if noise_sd == 0.0 {
            clean
        } else {
            (clean + noise_sd * z).max(TARGET_FLOOR)
        };
        target.push(y);
    }
    Dataset::new(schema, rows, target)
}
