//! Principal component analysis baseline.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernels::DataMatrix;

#[derive(Debug, Clone)]
pub struct PcaModel {
    pub mean: DVector<f64>,
    /// `d × D`, orthonormal rows.
    pub components: DMatrix<f64>,
    /// Sample variance along each component, descending.
    pub explained_variance: Vec<f64>,
}

pub fn pca_fit(x: &DataMatrix, d: usize) -> Result<PcaModel> {
    let (m, dim) = (x.len(), x.dim());
    if d == 0 || d > m.min(dim) {
        return Err(Error::Config(format!(
            "PCA dimension must satisfy 1 <= d <= min(M, D) = {}, got {d}",
            m.min(dim)
        )));
    }
    let mean = DVector::from_fn(dim, |j, _| x.rows.column(j).mean());
    let mut centred = x.rows.clone();
    for mut row in centred.row_iter_mut() {
        row -= mean.transpose();
    }
    let svd = centred
        .try_svd(false, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("PCA singular value decomposition did not converge".into()))?;
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    order.truncate(d);

    let mut components = v_t.select_rows(&order);
    for mut row in components.row_iter_mut() {
        let mut best = 0;
        for (j, v) in row.iter().enumerate() {
            if v.abs() > row[best].abs() {
                best = j;
            }
        }
        if row[best] < 0.0 {
            row.neg_mut();
        }
    }
    let denom = (m - 1).max(1) as f64;
    let explained_variance = order.iter().map(|&i| svd.singular_values[i].powi(2) / denom).collect();
    Ok(PcaModel {
        mean,
        components,
        explained_variance,
    })
}

/// `(x_i − mean) · componentsᵀ`, one row per point.
pub fn pca_project(model: &PcaModel, x: &DataMatrix) -> Result<DMatrix<f64>> {
    if x.dim() != model.mean.len() {
        return Err(Error::Size(format!(
            "PCA model has dimension {}, data has {}",
            model.mean.len(),
            x.dim()
        )));
    }
    let mut centred = x.rows.clone();
    for mut row in centred.row_iter_mut() {
        row -= model.mean.transpose();
    }
    Ok(centred * model.components.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn collinear_points() {
        let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64, 3.0]).collect();
        let x = DataMatrix::from_points(&pts).unwrap();
        let model = pca_fit(&x, 2).unwrap();
        let axis = model.components.row(0);
        let expect = [1.0 / 5f64.sqrt(), 2.0 / 5f64.sqrt(), 0.0];
        for j in 0..3 {
            assert!((axis[j] - expect[j]).abs() < 1e-12);
        }
        assert!(model.explained_variance[1] < 1e-20);
    }

    #[test]
    fn centred_projection_has_zero_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Vec<f64>> = (0..50)
            .map(|_| {
                (0..6)
                    .map(|j| 5.0 + j as f64 * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect();
        let x = DataMatrix::from_points(&pts).unwrap();
        let model = pca_fit(&x, 3).unwrap();
        let z = pca_project(&model, &x).unwrap();
        for c in 0..3 {
            assert!(z.column(c).mean().abs() < 1e-12);
        }
        let gram = &model.components * model.components.transpose();
        assert!((gram - DMatrix::identity(3, 3)).amax() < 1e-12);
        assert!(model.explained_variance.windows(2).all(|w| w[0] >= w[1]));
        // sample variance of each projected column
        for c in 0..3 {
            let var = z.column(c).norm_squared() / 49.0;
            assert!((var - model.explained_variance[c]).abs() < 1e-9 * var);
        }
    }

    #[test]
    fn isotropic_variances_are_close() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pts: Vec<Vec<f64>> = (0..4000)
            .map(|_| (0..3).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        let model = pca_fit(&DataMatrix::from_points(&pts).unwrap(), 3).unwrap();
        let (hi, lo) = (model.explained_variance[0], model.explained_variance[2]);
        assert!(hi / lo < 1.15, "{hi} vs {lo}");
    }

    #[test]
    fn dimension_checks() {
        let x = DataMatrix::from_points(&[vec![0.0, 1.0], vec![1.0, 0.0], vec![2.0, 2.0]]).unwrap();
        assert!(pca_fit(&x, 0).is_err());
        assert!(pca_fit(&x, 3).is_err());
        let model = pca_fit(&x, 2).unwrap();
        let y = DataMatrix::from_points(&[vec![0.0], vec![1.0]]).unwrap();
        assert!(matches!(pca_project(&model, &y), Err(Error::Size(_))));
    }
}
