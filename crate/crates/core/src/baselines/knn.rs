//! k-nearest-neighbour regression on standardized features.

use serde::{Deserialize, Serialize};

use super::Standardizer;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub standardizer: Standardizer,
    /// Standardized training rows, row-major.
    pub train: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

pub fn fit_knn(ds: &Dataset, k: usize) -> Result<KnnModel> {
    if k == 0 || k > ds.n_rows() {
        return Err(Error::InvalidParam(format!(
            "k must lie in [1, {}], got {k}",
            ds.n_rows()
        )));
    }
    let standardizer = Standardizer::fit(ds);
    let train = ds.rows().map(|r| standardizer.row(r)).collect();
    Ok(KnnModel {
        k,
        standardizer,
        train,
        targets: ds.target().to_vec(),
    })
}

impl KnnModel {
    /// Training row ids of the `k` nearest neighbours of `x`, nearest first.
    /// Equal distances go to the lower row id.
    pub fn neighbors(&self, x: &[f64]) -> Result<Vec<usize>> {
        Error::check_len(self.standardizer.means.len(), x.len())?;
        let q = self.standardizer.row(x);
        let mut dist: Vec<(f64, usize)> = self
            .train
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        let order = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, order);
            dist.truncate(self.k);
        }
        dist.sort_by(order);
        Ok(dist.into_iter().map(|(_, i)| i).collect())
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let ids = self.neighbors(x)?;
        Ok(ids.iter().map(|&i| self.targets[i]).sum::<f64>() / ids.len() as f64)
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<f64>> {
        Error::check_len(self.standardizer.means.len(), ds.n_features())?;
        par::map_range(ds.n_rows(), |i| self.predict(ds.row(i)))
            .into_iter()
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureSchema;
    use crate::rng::Rng;

    #[test]
    fn one_neighbour_recalls_training_rows() {
        let ds = Dataset::from_column(&[0.0, 1.0, 4.0, 9.0], &[5.0, -1.0, 2.0, 8.0]).unwrap();
        let m = fit_knn(&ds, 1).unwrap();
        for i in 0..4 {
            assert_eq!(m.predict(ds.row(i)).unwrap(), ds.target()[i]);
        }
    }

    #[test]
    fn all_neighbours_give_the_mean() {
        let ds = Dataset::from_column(&[0.0, 1.0, 4.0, 9.0], &[5.0, -1.0, 2.0, 8.0]).unwrap();
        let m = fit_knn(&ds, 4).unwrap();
        assert_eq!(m.predict(&[100.0]).unwrap(), 3.5);
    }

    #[test]
    fn ties_go_to_lower_index() {
        let ds = Dataset::from_column(&[0.0, 2.0], &[0.0, 10.0]).unwrap();
        let m = fit_knn(&ds, 1).unwrap();
        assert_eq!(m.predict(&[1.0]).unwrap(), 0.0);
        let ds = Dataset::from_column(&[2.0, 0.0], &[10.0, 0.0]).unwrap();
        assert_eq!(fit_knn(&ds, 1).unwrap().predict(&[1.0]).unwrap(), 10.0);
    }

    #[test]
    fn k_out_of_range() {
        let ds = Dataset::from_column(&[0.0, 2.0], &[0.0, 10.0]).unwrap();
        assert!(fit_knn(&ds, 0).is_err());
        assert!(fit_knn(&ds, 3).is_err());
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = Rng::new(12);
        let rows: Vec<Vec<f64>> = (0..80)
            .map(|_| {
                vec![
                    rng.uniform_in(0.0, 100.0),
                    rng.uniform(),
                    rng.uniform_in(-5.0, 5.0),
                ]
            })
            .collect();
        let y: Vec<f64> = (0..80).map(|_| rng.standard_normal()).collect();
        let ds = Dataset::from_rows(FeatureSchema::generic(3), &rows, y.clone()).unwrap();
        let m = fit_knn(&ds, 7).unwrap();
        let stats = crate::dataset::feature_stats(&ds);
        for _ in 0..20 {
            let q = vec![
                rng.uniform_in(0.0, 100.0),
                rng.uniform(),
                rng.uniform_in(-5.0, 5.0),
            ];
            let mut all: Vec<(f64, usize)> = (0..80)
                .map(|i| {
                    let d: f64 = (0..3)
                        .map(|j| ((rows[i][j] - q[j]) / stats[j].sd).powi(2))
                        .sum();
                    (d, i)
                })
                .collect();
            all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let expect = all[..7].iter().map(|&(_, i)| y[i]).sum::<f64>() / 7.0;
            assert!((m.predict(&q).unwrap() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn affine_rescaling_invariance() {
        let mut rng = Rng::new(13);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| vec![rng.uniform(), rng.uniform()])
            .collect();
        let y: Vec<f64> = (0..50).map(|_| rng.uniform()).collect();
        let ds = Dataset::from_rows(FeatureSchema::generic(2), &rows, y.clone()).unwrap();
        let scaled_rows: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| vec![r[0] * 1000.0 + 5.0, r[1]])
            .collect();
        let scaled = Dataset::from_rows(FeatureSchema::generic(2), &scaled_rows, y).unwrap();
        let a = fit_knn(&ds, 3).unwrap().predict_dataset(&ds).unwrap();
        let b = fit_knn(&scaled, 3)
            .unwrap()
            .predict_dataset(&scaled)
            .unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-9);
        }
    }
}
