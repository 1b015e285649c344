//! Gaussian affinities and max-min bandwidth selection.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::par;
use crate::signal::Channel;

/// `M` points of dimension `D`, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    pub rows: DMatrix<f64>,
    pub point_ids: Vec<String>,
}

impl DataMatrix {
    pub fn new(rows: DMatrix<f64>, point_ids: Vec<String>) -> Result<Self> {
        if rows.nrows() < 2 {
            return Err(Error::Size(format!("need at least 2 points, got {}", rows.nrows())));
        }
        if point_ids.len() != rows.nrows() {
            return Err(Error::Size(format!(
                "{} point ids for {} rows",
                point_ids.len(),
                rows.nrows()
            )));
        }
        Ok(DataMatrix { rows, point_ids })
    }

    /// Builds from row vectors, numbering the points `0..M`.
    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::Size("points have differing dimensions".into()));
        }
        let rows = DMatrix::from_fn(points.len(), dim, |i, j| points[i][j]);
        Self::new(rows, (0..points.len()).map(|i| i.to_string()).collect())
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    /// The points with the given indices, in that order.
    pub fn select(&self, idx: &[usize]) -> Result<DataMatrix> {
        let rows = self.rows.select_rows(idx);
        let ids = idx.iter().map(|&i| self.point_ids[i].clone()).collect();
        DataMatrix::new(rows, ids)
    }
}

/// Symmetric affinity matrix together with the bandwidth that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub values: DMatrix<f64>,
    pub sigma2: f64,
    pub view: Option<Channel>,
}

impl KernelMatrix {
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn with_view(mut self, view: Channel) -> Self {
        self.view = Some(view);
        self
    }
}

/// All squared Euclidean distances, each pair summed directly from coordinate
/// differences. The result is exactly symmetric with a zero diagonal.
pub fn squared_distances(x: &DataMatrix) -> DMatrix<f64> {
    let m = x.len();
    // points as contiguous columns
    let cols = x.rows.transpose();
    let rows: Vec<Vec<f64>> = par::map_range(m, |i| {
        let a = cols.column(i);
        (0..m)
            .map(|j| {
                let b = cols.column(j);
                a.iter().zip(b.iter()).map(|(p, q)| (p - q) * (p - q)).sum()
            })
            .collect()
    });
    DMatrix::from_fn(m, m, |i, j| rows[i][j])
}

/// `C · max_j min_{i≠j} ‖x_i − x_j‖²`.
pub fn max_min_bandwidth(x: &DataMatrix, c: f64) -> Result<f64> {
    max_min_from_distances(&squared_distances(x), c)
}

pub fn max_min_from_distances(d2: &DMatrix<f64>, c: f64) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Config(format!("bandwidth factor C must be positive, got {c}")));
    }
    let m = d2.nrows();
    if m < 2 {
        return Err(Error::Size("max-min bandwidth needs at least 2 points".into()));
    }
    let max_nn = (0..m)
        .map(|j| {
            (0..m)
                .filter(|&i| i != j)
                .map(|i| d2[(i, j)])
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0f64, f64::max);
    if max_nn <= 0.0 {
        return Err(Error::DegenerateScale);
    }
    Ok(c * max_nn)
}

/// `K_ij = exp(−‖x_i − x_j‖² / (2σ²))`.
pub fn rbf_kernel(x: &DataMatrix, sigma2: f64) -> Result<KernelMatrix> {
    rbf_from_distances(&squared_distances(x), sigma2)
}

pub fn rbf_from_distances(d2: &DMatrix<f64>, sigma2: f64) -> Result<KernelMatrix> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::Config(format!(
            "kernel bandwidth must be positive, got {sigma2}"
        )));
    }
    let scale = 1.0 / (2.0 * sigma2);
    Ok(KernelMatrix {
        values: d2.map(|d| (-d * scale).exp()),
        sigma2,
        view: None,
    })
}

/// Kernel with its bandwidth chosen by [`max_min_bandwidth`].
pub fn max_min_kernel(x: &DataMatrix, c: f64) -> Result<KernelMatrix> {
    let d2 = squared_distances(x);
    let sigma2 = max_min_from_distances(&d2, c)?;
    rbf_from_distances(&d2, sigma2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_points(m: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..m)
            .map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect())
            .collect()
    }

    fn sq(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
    }

    #[test]
    fn bandwidth_single_pair() {
        let x = DataMatrix::from_points(&[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(max_min_bandwidth(&x, 2.0).unwrap(), 8.0);
    }

    #[test]
    fn bandwidth_matches_exhaustive_search() {
        let pts = [vec![0.0], vec![1.0], vec![3.0]];
        let x = DataMatrix::from_points(&pts).unwrap();
        // nearest-neighbour squared distances {1, 1, 4}
        assert_eq!(max_min_bandwidth(&x, 2.0).unwrap(), 8.0);

        let pts = random_points(25, 4, 7);
        let oracle = (0..25)
            .map(|j| {
                (0..25)
                    .filter(|&i| i != j)
                    .map(|i| sq(&pts[i], &pts[j]))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
        let x = DataMatrix::from_points(&pts).unwrap();
        assert!((max_min_bandwidth(&x, 2.5).unwrap() - 2.5 * oracle).abs() < 1e-12);
    }

    #[test]
    fn duplicate_points_are_degenerate() {
        let x = DataMatrix::from_points(&vec![vec![1.0, 2.0]; 4]).unwrap();
        assert!(matches!(max_min_bandwidth(&x, 2.0), Err(Error::DegenerateScale)));
    }

    #[test]
    fn kernel_values() {
        let x = DataMatrix::from_points(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let k = rbf_kernel(&x, 0.3).unwrap();
        assert!(k.values.iter().all(|&v| v == 1.0));

        // ‖x_i − x_j‖² = 2σ²
        let x = DataMatrix::from_points(&[vec![0.0], vec![2.0]]).unwrap();
        let k = rbf_kernel(&x, 2.0).unwrap();
        assert!((k.values[(0, 1)] - (-1.0f64).exp()).abs() < 1e-15);
        assert!((k.values[(0, 1)] - 0.367879).abs() < 1e-6);
    }

    #[test]
    fn kernel_matches_double_loop() {
        let pts = random_points(6, 3, 1);
        let x = DataMatrix::from_points(&pts).unwrap();
        let k = rbf_kernel(&x, 1.7).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let expect = (-sq(&pts[i], &pts[j]) / 3.4).exp();
                assert!((k.values[(i, j)] - expect).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn kernel_properties() {
        let x = DataMatrix::from_points(&random_points(30, 5, 2)).unwrap();
        let k = max_min_kernel(&x, 2.0).unwrap();
        assert_eq!(k.values, k.values.transpose());
        for i in 0..30 {
            assert_eq!(k.values[(i, i)], 1.0);
        }
        assert!(k.values.iter().all(|&v| v > 0.0 && v <= 1.0));
        let min_eig = k.values.clone().symmetric_eigenvalues().min();
        assert!(min_eig >= -1e-8, "min eigenvalue {min_eig}");
    }

    #[test]
    fn wider_bandwidth_raises_affinities() {
        let x = DataMatrix::from_points(&random_points(12, 3, 4)).unwrap();
        let a = rbf_kernel(&x, 1.0).unwrap();
        let b = rbf_kernel(&x, 2.0).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                if i != j {
                    assert!(b.values[(i, j)] > a.values[(i, j)]);
                }
            }
        }
    }

    #[test]
    fn distant_point_decays() {
        let sigma2: f64 = 0.5;
        let far = 10.0 * sigma2.sqrt();
        let x = DataMatrix::from_points(&[vec![0.0, 0.0], vec![far, 0.0]]).unwrap();
        assert!(rbf_kernel(&x, sigma2).unwrap().values[(0, 1)] < 1e-20);
    }

    #[test]
    fn bad_bandwidth_is_config_error() {
        let x = DataMatrix::from_points(&random_points(3, 2, 0)).unwrap();
        assert!(matches!(rbf_kernel(&x, 0.0), Err(Error::Config(_))));
        assert!(matches!(rbf_kernel(&x, -1.0), Err(Error::Config(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn permutation_equivariance(seed in 0u64..1000) {
            let pts = random_points(10, 3, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xff);
            let mut perm: Vec<usize> = (0..10).collect();
            for i in (1..10).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            let permuted: Vec<Vec<f64>> = perm.iter().map(|&p| pts[p].clone()).collect();
            let a = rbf_kernel(&DataMatrix::from_points(&pts).unwrap(), 1.3).unwrap();
            let b = rbf_kernel(&DataMatrix::from_points(&permuted).unwrap(), 1.3).unwrap();
            for i in 0..10 {
                for j in 0..10 {
                    prop_assert_eq!(b.values[(i, j)], a.values[(perm[i], perm[j])]);
                }
            }
        }
    }
}
