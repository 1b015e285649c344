//! Single-view diffusion maps.
//!
//! The Markov matrix `P = D⁻¹K` is similar to the symmetric matrix
//! `A = D^{-1/2} K D^{-1/2}`, so the spectrum is computed on `A` and mapped
//! back. Right eigenvectors are scaled as `ψ = √vol · D^{-1/2} φ` with `φ` a
//! unit eigenvector of `A` and `vol = Σ D_ii`; equivalently `Σ_k π_k ψ(k)² = 1`
//! for the stationary measure `π = D / vol`. This is the scaling under which
//! the Euclidean distance between full embeddings equals the `π⁻¹`-weighted
//! distance between rows of `P^t`.

mod pca;

pub use pca::{pca_fit, pca_project, PcaModel};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernels::KernelMatrix;
use crate::linalg;

/// Row-stochastic transition matrix built from a symmetric affinity.
#[derive(Debug, Clone)]
pub struct DiffusionOperator {
    pub p: DMatrix<f64>,
    /// Row sums of the affinity.
    pub degree: DVector<f64>,
    /// Stationary weights `D_ii / Σ D`.
    pub weights: DVector<f64>,
    sym: DMatrix<f64>,
}

impl DiffusionOperator {
    /// Normalises any symmetric, non-negative affinity matrix.
    pub fn from_affinity(k: &DMatrix<f64>) -> Result<Self> {
        let m = k.nrows();
        if m != k.ncols() || m < 2 {
            return Err(Error::Size(format!(
                "affinity must be square with M >= 2, got {}x{}",
                m,
                k.ncols()
            )));
        }
        if k.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::Numeric("affinity has negative or non-finite entries".into()));
        }
        let degree = DVector::from_fn(m, |i, _| k.row(i).sum());
        if let Some(row) = degree.iter().position(|&d| d <= 0.0) {
            return Err(Error::DegenerateKernel { row });
        }
        let vol: f64 = degree.sum();
        let root: Vec<f64> = degree.iter().map(|d| d.sqrt()).collect();
        let p = DMatrix::from_fn(m, m, |i, j| k[(i, j)] / degree[i]);
        let sym = DMatrix::from_fn(m, m, |i, j| k[(i, j)] / (root[i] * root[j]));
        Ok(DiffusionOperator {
            p,
            weights: &degree / vol,
            degree,
            sym,
        })
    }

    pub fn len(&self) -> usize {
        self.p.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.p.nrows() == 0
    }

    /// `D^{-1/2} K D^{-1/2}`, the symmetric matrix similar to `P`.
    pub fn symmetric_form(&self) -> &DMatrix<f64> {
        &self.sym
    }

    pub fn volume(&self) -> f64 {
        self.degree.sum()
    }
}

/// `P = D⁻¹K`.
pub fn row_normalize(k: &KernelMatrix) -> Result<DiffusionOperator> {
    DiffusionOperator::from_affinity(&k.values)
}

/// Non-trivial eigenpairs of a diffusion operator.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// `λ_1 ≥ … ≥ λ_d`.
    pub eigenvalues: Vec<f64>,
    /// Column `m` is `ψ_{m+1}`, a right eigenvector of `P`.
    pub eigenvectors: DMatrix<f64>,
    /// Verified eigenvalue of the discarded constant eigenvector.
    pub trivial_eigenvalue: f64,
}

/// Diffusion-map coordinates `λ_m^t ψ_m(i)`.
#[derive(Debug, Clone)]
pub struct Embedding {
    /// `M × d`.
    pub coords: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    pub t: u32,
}

impl Embedding {
    pub fn dim(&self) -> usize {
        self.coords.ncols()
    }

    pub fn len(&self) -> usize {
        self.coords.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.nrows() == 0
    }
}

impl Spectrum {
    pub fn embedding(&self, t: u32) -> Result<Embedding> {
        if t == 0 {
            return Err(Error::Config("diffusion time must be a positive integer".into()));
        }
        let mut coords = self.eigenvectors.clone();
        for (m, mut col) in coords.column_iter_mut().enumerate() {
            col *= self.eigenvalues[m].powi(t as i32);
        }
        Ok(Embedding {
            coords,
            eigenvalues: self.eigenvalues.clone(),
            t,
        })
    }
}

/// Tolerance on `‖Aφ₀ − φ₀‖` for the trivial eigenvector `φ₀ ∝ √D`.
const TRIVIAL_TOL: f64 = 1e-10;

pub fn spectral_decompose(op: &DiffusionOperator, d: usize) -> Result<Spectrum> {
    let m = op.len();
    if d == 0 || d >= m {
        return Err(Error::Config(format!(
            "embedding dimension must satisfy 1 <= d <= M-1 = {}, got {d}",
            m - 1
        )));
    }
    decompose_symmetric(&op.sym, &op.degree, &op.p, d)
}

/// Shared by single- and multi-view operators: `sym` is the symmetric
/// conjugate of the row-stochastic `p` under `degree`.
pub(crate) fn decompose_symmetric(
    sym: &DMatrix<f64>,
    degree: &DVector<f64>,
    p: &DMatrix<f64>,
    d: usize,
) -> Result<Spectrum> {
    let m = sym.nrows();
    let root = degree.map(f64::sqrt);
    let trivial = &root / root.norm();
    let a_trivial = sym * &trivial;
    let trivial_eigenvalue = trivial.dot(&a_trivial);
    let drift = (&a_trivial - &trivial).norm();
    if drift > TRIVIAL_TOL || (trivial_eigenvalue - 1.0).abs() > TRIVIAL_TOL {
        return Err(Error::Numeric(format!(
            "stationary eigenvector check failed (residual {drift:.3e}, eigenvalue {trivial_eigenvalue})"
        )));
    }

    let pairs = linalg::top_eigenpairs(sym, d, Some(&trivial))?;
    let scale = degree.sum().sqrt();
    let mut vectors = pairs.vectors;
    for mut col in vectors.column_iter_mut() {
        for (i, v) in col.iter_mut().enumerate() {
            *v *= scale / root[i];
        }
        fix_sign(col.as_mut_slice());
    }
    let mut values = pairs.values;
    order_ties(&mut values, &mut vectors);

    let bound = 1e-8 * m as f64;
    for (c, &lambda) in values.iter().enumerate() {
        let psi = vectors.column(c);
        let residual = (p * psi - psi * lambda).norm();
        if !(residual <= bound) {
            let (lo, hi) = degree
                .iter()
                .fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
            return Err(Error::Numeric(format!(
                "eigenpair {} has residual {residual:.3e} > {bound:.1e} (degree range {lo:.3e}..{hi:.3e}, ratio {:.3e})",
                c + 1,
                hi / lo
            )));
        }
    }
    Ok(Spectrum {
        eigenvalues: values,
        eigenvectors: vectors,
        trivial_eigenvalue,
    })
}

/// Makes the largest-magnitude entry positive (first one on ties).
pub(crate) fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn first_sign_change(v: &[f64]) -> usize {
    v.windows(2)
        .position(|w| w[0].signum() != w[1].signum())
        .map_or(v.len(), |i| i + 1)
}

/// Within runs of numerically equal eigenvalues, orders eigenvectors by the
/// ascending index of their first sign change.
fn order_ties(values: &mut [f64], vectors: &mut DMatrix<f64>) {
    let n = values.len();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (values[end] - values[start]).abs() <= 1e-12 * values[start].abs().max(1.0) {
            end += 1;
        }
        if end - start > 1 {
            let mut group: Vec<usize> = (start..end).collect();
            group.sort_by_key(|&c| first_sign_change(vectors.column(c).as_slice()));
            let cols = vectors.select_columns(&group);
            for (offset, col) in cols.column_iter().enumerate() {
                vectors.set_column(start + offset, &col);
            }
        }
        start = end;
    }
}

/// `Ψ_t(x_i) = [λ_1^t ψ_1(i), …, λ_d^t ψ_d(i)]`.
pub fn embed(op: &DiffusionOperator, d: usize, t: u32) -> Result<Embedding> {
    spectral_decompose(op, d)?.embedding(t)
}

/// Row `i` of `P^t`.
fn transition_row(p: &DMatrix<f64>, i: usize, t: u32) -> DVector<f64> {
    let mut row = p.row(i).transpose();
    for _ in 1..t {
        row = p.tr_mul(&row);
    }
    row
}

/// `Σ_k (P^t_ik − P^t_jk)² / W_kk`, evaluated directly from the transition
/// matrix.
pub fn diffusion_distance(op: &DiffusionOperator, i: usize, j: usize, t: u32) -> Result<f64> {
    let m = op.len();
    if i >= m || j >= m {
        return Err(Error::Config(format!("point index out of range for M = {m}")));
    }
    if t == 0 {
        return Err(Error::Config("diffusion time must be a positive integer".into()));
    }
    if i == j {
        return Ok(0.0);
    }
    let (ri, rj) = (transition_row(&op.p, i, t), transition_row(&op.p, j, t));
    Ok((0..m).map(|k| (ri[k] - rj[k]).powi(2) / op.weights[k]).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{max_min_kernel, rbf_kernel, DataMatrix};
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

    fn operator(m: usize, d: usize, seed: u64) -> DiffusionOperator {
        let x = DataMatrix::from_points(&random_points(m, d, seed)).unwrap();
        row_normalize(&max_min_kernel(&x, 2.0).unwrap()).unwrap()
    }

    fn kernel(values: DMatrix<f64>) -> KernelMatrix {
        KernelMatrix {
            values,
            sigma2: 1.0,
            view: None,
        }
    }

    #[test]
    fn two_by_two_normalisation() {
        let op = row_normalize(&kernel(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]))).unwrap();
        let expect = [[2.0 / 3.0, 1.0 / 3.0], [1.0 / 3.0, 2.0 / 3.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((op.p[(i, j)] - expect[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rows_are_stochastic() {
        let op = operator(40, 3, 5);
        let ones = DVector::from_element(40, 1.0);
        let p1 = &op.p * &ones;
        assert!((p1 - ones).amax() <= 1e-12);
        assert!(op.p.iter().all(|&v| v >= 0.0));
        assert!((op.weights.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_row_is_degenerate() {
        let k = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.2, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            row_normalize(&kernel(k)),
            Err(Error::DegenerateKernel { row: 2 })
        ));
    }

    #[test]
    fn trivial_pair_is_verified_and_dropped() {
        let op = operator(30, 4, 1);
        let s = spectral_decompose(&op, 5).unwrap();
        assert!((s.trivial_eigenvalue - 1.0).abs() < 1e-12);
        assert!(s.eigenvalues.iter().all(|&l| l < 1.0 - 1e-9));
        assert!(s.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn right_eigenvector_residuals() {
        let op = operator(60, 3, 2);
        let s = spectral_decompose(&op, 59).unwrap();
        for (c, &l) in s.eigenvalues.iter().enumerate() {
            let psi = s.eigenvectors.column(c);
            assert!((&op.p * psi - psi * l).norm() <= 1e-8 * 60.0);
            assert!(l.abs() <= 1.0 + 1e-10);
            // π-weighted unit norm
            let q: f64 = (0..60).map(|k| op.weights[k] * psi[k] * psi[k]).sum();
            assert!((q - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn leading_eigenvector_splits_two_clusters() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut pts = Vec::new();
        let mut labels = Vec::new();
        for (c, centre) in [(0, -10.0), (1, 10.0)] {
            for _ in 0..15 {
                pts.push(vec![
                    centre + 0.5 * rng.sample::<f64, _>(StandardNormal),
                    0.5 * rng.sample::<f64, _>(StandardNormal),
                ]);
                labels.push(c);
            }
        }
        let x = DataMatrix::from_points(&pts).unwrap();
        let op = row_normalize(&rbf_kernel(&x, 4.0).unwrap()).unwrap();
        let s = spectral_decompose(&op, 2).unwrap();
        let psi1 = s.eigenvectors.column(0);
        let side0 = psi1[0] > 0.0;
        for i in 0..30 {
            assert_eq!(psi1[i] > 0.0, (labels[i] == 0) == side0);
        }
    }

    /// Eigenvalues of a 3×3 matrix by sign-change scanning of its
    /// characteristic polynomial, refined by bisection.
    fn char_poly_roots(p: &DMatrix<f64>) -> Vec<f64> {
        let det = |l: f64| (DMatrix::identity(3, 3) * l - p).determinant();
        let mut roots = Vec::new();
        let steps = 20_000;
        let (lo, hi) = (-1.5, 1.5);
        let h = (hi - lo) / steps as f64;
        for s in 0..steps {
            let (mut a, mut b) = (lo + s as f64 * h, lo + (s + 1) as f64 * h);
            let (fa, fb) = (det(a), det(b));
            if fa == 0.0 {
                roots.push(a);
                continue;
            }
            if fa * fb < 0.0 {
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if det(a) * det(mid) <= 0.0 {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                roots.push(0.5 * (a + b));
            }
        }
        roots.sort_by(|a, b| b.total_cmp(a));
        roots
    }

    #[test]
    fn three_by_three_matches_characteristic_polynomial() {
        let k = DMatrix::from_row_slice(3, 3, &[1.0, 0.6, 0.1, 0.6, 1.0, 0.3, 0.1, 0.3, 1.0]);
        let op = row_normalize(&kernel(k)).unwrap();
        let roots = char_poly_roots(&op.p);
        assert_eq!(roots.len(), 3);
        assert!((roots[0] - 1.0).abs() < 1e-10);
        let s = spectral_decompose(&op, 2).unwrap();
        for m in 0..2 {
            assert!((s.eigenvalues[m] - roots[m + 1]).abs() < 1e-10);
        }
    }

    #[test]
    fn doubling_time_squares_weights() {
        let op = operator(25, 3, 3);
        let s = spectral_decompose(&op, 6).unwrap();
        let e1 = s.embedding(1).unwrap();
        let e2 = s.embedding(2).unwrap();
        for m in 0..6 {
            for i in 0..25 {
                let expect = s.eigenvalues[m] * e1.coords[(i, m)];
                assert!((e2.coords[(i, m)] - expect).abs() < 1e-14);
            }
        }
        assert!(s.embedding(0).is_err());
    }

    #[test]
    fn two_point_closed_form() {
        let a = 0.3;
        let op = row_normalize(&kernel(DMatrix::from_row_slice(2, 2, &[1.0, a, a, 1.0]))).unwrap();
        let e = embed(&op, 1, 1).unwrap();
        let lambda = (1.0 - a) / (1.0 + a);
        assert!((e.eigenvalues[0] - lambda).abs() < 1e-14);
        // uniform stationary measure: ψ₁ = (1, −1)
        assert!((e.coords[(0, 0)] - lambda).abs() < 1e-14);
        assert!((e.coords[(1, 0)] + lambda).abs() < 1e-14);
        let dd = diffusion_distance(&op, 0, 1, 1).unwrap();
        assert!((dd - 4.0 * lambda * lambda).abs() < 1e-14);
    }

    #[test]
    fn diffusion_distance_basics() {
        let op = operator(20, 3, 4);
        assert_eq!(diffusion_distance(&op, 3, 3, 1).unwrap(), 0.0);
        let a = diffusion_distance(&op, 2, 7, 1).unwrap();
        let b = diffusion_distance(&op, 7, 2, 1).unwrap();
        assert!((a - b).abs() <= 1e-15 * a);
        assert!(diffusion_distance(&op, 0, 20, 1).is_err());
    }

    fn identity_gap(op: &DiffusionOperator, t: u32) -> f64 {
        let m = op.len();
        let e = embed(op, m - 1, t).unwrap();
        let mut worst = 0.0f64;
        for i in 0..m {
            for j in i + 1..m {
                let dd = diffusion_distance(op, i, j, t).unwrap();
                let diff = e.coords.row(i) - e.coords.row(j);
                let gap = (dd - diff.norm_squared()).abs() / dd.max(1.0);
                worst = worst.max(gap);
            }
        }
        worst
    }

    #[test]
    fn distance_identity_holds() {
        assert!(identity_gap(&operator(20, 3, 10), 1) <= 1e-8);
        assert!(identity_gap(&operator(20, 3, 11), 3) <= 1e-8);
    }

    #[test]
    fn bad_dimension() {
        let op = operator(10, 2, 0);
        assert!(matches!(spectral_decompose(&op, 0), Err(Error::Config(_))));
        assert!(matches!(spectral_decompose(&op, 10), Err(Error::Config(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn identity_on_random_sets(seed in 0u64..10_000, m in 5usize..50) {
            prop_assert!(identity_gap(&operator(m, 4, seed), 1) <= 1e-8);
        }

        #[test]
        fn permutation_equivariance(seed in 0u64..10_000) {
            let pts = random_points(15, 3, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
            let mut perm: Vec<usize> = (0..15).collect();
            for i in (1..15).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            let permuted: Vec<Vec<f64>> = perm.iter().map(|&p| pts[p].clone()).collect();
            let embed_of = |p: &[Vec<f64>]| {
                let x = DataMatrix::from_points(p).unwrap();
                embed(&row_normalize(&max_min_kernel(&x, 2.0).unwrap()).unwrap(), 3, 1).unwrap()
            };
            let a = embed_of(&pts);
            let b = embed_of(&permuted);
            for i in 0..15 {
                for c in 0..3 {
                    prop_assert!((b.coords[(i, c)] - a.coords[(perm[i], c)]).abs() < 1e-8);
                }
            }
        }
    }
}
