//! Multi-view kernel fusion: the block multi-view diffusion operator, the
//! kernel product and kernel sum baselines, and two-view KCCA.

use nalgebra::{DMatrix, DVector};

use crate::diffusion::{self, DiffusionOperator, Spectrum};
use crate::error::{Error, Result};
use crate::kernels::{max_min_kernel, DataMatrix, KernelMatrix};
use crate::par;
use crate::signal::Channel;

/// Regulariser used when none is configured.
pub const DEFAULT_GAMMA: f64 = 1e-3;

/// `L ≥ 2` views of the same `M` points, rows aligned by point id.
#[derive(Debug, Clone)]
pub struct ViewSet {
    pub views: Vec<DataMatrix>,
    pub channels: Option<Vec<Channel>>,
}

impl ViewSet {
    pub fn new(views: Vec<DataMatrix>) -> Result<Self> {
        if views.len() < 2 {
            return Err(Error::Config(format!("need at least 2 views, got {}", views.len())));
        }
        let ids = &views[0].point_ids;
        for (l, v) in views.iter().enumerate().skip(1) {
            if v.len() != views[0].len() {
                return Err(Error::Size(format!(
                    "view {l} has {} points, view 0 has {}",
                    v.len(),
                    views[0].len()
                )));
            }
            if &v.point_ids != ids {
                return Err(Error::Config(format!("view {l} is not aligned with view 0")));
            }
        }
        Ok(ViewSet { views, channels: None })
    }

    pub fn with_channels(mut self, channels: Vec<Channel>) -> Result<Self> {
        if channels.len() != self.views.len() {
            return Err(Error::Size(format!(
                "{} channel labels for {} views",
                channels.len(),
                self.views.len()
            )));
        }
        self.channels = Some(channels);
        Ok(self)
    }

    pub fn num_views(&self) -> usize {
        self.views.len()
    }

    pub fn num_points(&self) -> usize {
        self.views[0].len()
    }
}

/// One Gaussian kernel per view, each with its own max-min bandwidth.
pub fn per_view_kernels(vs: &ViewSet, c: f64) -> Result<Vec<KernelMatrix>> {
    let kernels: Vec<Result<KernelMatrix>> = par::map_slice(&vs.views, |v| max_min_kernel(v, c));
    let mut out = Vec::with_capacity(kernels.len());
    for (l, k) in kernels.into_iter().enumerate() {
        let k = k?;
        out.push(match &vs.channels {
            Some(ch) => k.with_view(ch[l]),
            None => k,
        });
    }
    Ok(out)
}

fn check_shapes(ks: &[KernelMatrix], min_views: usize) -> Result<usize> {
    if ks.len() < min_views {
        return Err(Error::Config(format!(
            "need at least {min_views} kernels, got {}",
            ks.len()
        )));
    }
    let m = ks[0].len();
    for k in ks {
        if k.values.nrows() != m || k.values.ncols() != m {
            return Err(Error::Size(format!(
                "kernel shapes differ: {}x{} vs {m}x{m}",
                k.values.nrows(),
                k.values.ncols()
            )));
        }
    }
    Ok(m)
}

/// `K̂` with blocks `K^l K^m` off the diagonal and zero blocks on it, and
/// its row-stochastic normalisation `P̂`.
#[derive(Debug, Clone)]
pub struct MultiViewOperator {
    pub k_hat: DMatrix<f64>,
    pub op: DiffusionOperator,
    pub views: usize,
    pub points: usize,
}

impl MultiViewOperator {
    pub fn p_hat(&self) -> &DMatrix<f64> {
        &self.op.p
    }

    /// Row offset of view `l` (zero-based) inside the block matrices.
    pub fn block_offset(&self, l: usize) -> usize {
        l * self.points
    }
}

pub fn build_multiview(ks: &[KernelMatrix]) -> Result<MultiViewOperator> {
    let m = check_shapes(ks, 2)?;
    let l = ks.len();
    let pairs: Vec<(usize, usize)> = (0..l).flat_map(|a| (a + 1..l).map(move |b| (a, b))).collect();
    let products = par::map_slice(&pairs, |&(a, b)| &ks[a].values * &ks[b].values);
    let mut k_hat = DMatrix::zeros(l * m, l * m);
    for (&(a, b), prod) in pairs.iter().zip(&products) {
        k_hat.view_mut((a * m, b * m), (m, m)).copy_from(prod);
        // (K^a K^b)ᵀ = K^b K^a; copying keeps K̂ exactly symmetric
        k_hat.view_mut((b * m, a * m), (m, m)).copy_from(&prod.transpose());
    }
    let op = DiffusionOperator::from_affinity(&k_hat)?;
    Ok(MultiViewOperator {
        k_hat,
        op,
        views: l,
        points: m,
    })
}

#[derive(Debug, Clone)]
pub struct MultiViewEmbedding {
    /// One `M × d` block per view.
    pub per_view_coords: Vec<DMatrix<f64>>,
    /// `M × (L·d)`, per-view blocks side by side in view order.
    pub concatenated: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    pub t: u32,
}

pub fn multiview_spectrum(op: &MultiViewOperator, d: usize) -> Result<Spectrum> {
    diffusion::spectral_decompose(&op.op, d)
}

pub fn multiview_embed(op: &MultiViewOperator, d: usize, t: u32) -> Result<MultiViewEmbedding> {
    let full = multiview_spectrum(op, d)?.embedding(t)?;
    let m = op.points;
    let per_view_coords: Vec<DMatrix<f64>> = (0..op.views).map(|l| full.coords.rows(l * m, m).into_owned()).collect();
    let mut concatenated = DMatrix::zeros(m, op.views * d);
    for (l, block) in per_view_coords.iter().enumerate() {
        concatenated.columns_mut(l * d, d).copy_from(block);
    }
    Ok(MultiViewEmbedding {
        per_view_coords,
        concatenated,
        eigenvalues: full.eigenvalues,
        t,
    })
}

/// Element-wise product of the kernels, row-normalised.
pub fn kernel_product(ks: &[KernelMatrix]) -> Result<DiffusionOperator> {
    check_shapes(ks, 1)?;
    let mut acc = ks[0].values.clone();
    for k in &ks[1..] {
        acc.component_mul_assign(&k.values);
    }
    DiffusionOperator::from_affinity(&acc)
}

/// Element-wise sum of the kernels, row-normalised.
pub fn kernel_sum(ks: &[KernelMatrix]) -> Result<DiffusionOperator> {
    check_shapes(ks, 1)?;
    let mut acc = ks[0].values.clone();
    for k in &ks[1..] {
        acc += &k.values;
    }
    DiffusionOperator::from_affinity(&acc)
}

/// One canonical pair of regularised two-view KCCA.
#[derive(Debug, Clone)]
pub struct KccaResult {
    pub v1: DVector<f64>,
    pub v2: DVector<f64>,
    pub rho: f64,
    pub gamma: f64,
}

impl KccaResult {
    /// Relative backward error of the generalized eigenproblem
    /// `[[0, K¹K²], [K²K¹, 0]] v = ρ · blockdiag((K¹+γI)², (K²+γI)²) v`.
    pub fn residual(&self, k1: &KernelMatrix, k2: &KernelMatrix) -> f64 {
        let (a, b) = kcca_system(&k1.values, &k2.values, self.gamma);
        let mut v = DVector::zeros(2 * self.v1.len());
        v.rows_mut(0, self.v1.len()).copy_from(&self.v1);
        v.rows_mut(self.v1.len(), self.v2.len()).copy_from(&self.v2);
        let r = (&a * &v - &b * &v * self.rho).norm();
        r / ((a.norm() + self.rho.abs() * b.norm()) * v.norm())
    }
}

/// The two sides of the KCCA generalized eigenproblem, assembled densely.
pub fn kcca_system(k1: &DMatrix<f64>, k2: &DMatrix<f64>, gamma: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let m = k1.nrows();
    let mut a = DMatrix::zeros(2 * m, 2 * m);
    a.view_mut((0, m), (m, m)).copy_from(&(k1 * k2));
    a.view_mut((m, 0), (m, m)).copy_from(&(k2 * k1));
    let mut b = DMatrix::zeros(2 * m, 2 * m);
    for (off, k) in [(0, k1), (m, k2)] {
        let c = k + DMatrix::identity(m, m) * gamma;
        b.view_mut((off, off), (m, m)).copy_from(&(&c * &c));
    }
    (a, b)
}

/// Relative backward error allowed for returned canonical pairs.
const KCCA_RESIDUAL_TOL: f64 = 1e-8;

/// The leading `pairs` canonical pairs, by descending ρ.
///
/// With `C_l = K_l + γI` the problem is equivalent to the singular value
/// decomposition of `C₁⁻¹K₁K₂C₂⁻¹ = U Σ Vᵀ`: `ρ = σ`, `v₁ = C₁⁻¹u`,
/// `v₂ = C₂⁻¹v`.
pub fn kcca_pairs(k1: &KernelMatrix, k2: &KernelMatrix, gamma: f64, pairs: usize) -> Result<Vec<KccaResult>> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Config(format!("KCCA regulariser must be positive, got {gamma}")));
    }
    let m = check_shapes(&[k1.clone(), k2.clone()], 2)?;
    if pairs == 0 || pairs > m {
        return Err(Error::Config(format!("requested {pairs} canonical pairs for M = {m}")));
    }
    let chol = |k: &DMatrix<f64>| {
        (k + DMatrix::identity(m, m) * gamma).cholesky().ok_or_else(|| {
            Error::Numeric(format!(
                "K + γI is not positive definite for γ = {gamma}; use a larger γ"
            ))
        })
    };
    let (c1, c2) = (chol(&k1.values)?, chol(&k2.values)?);
    let g1 = c1.solve(&k1.values);
    let g2 = c2.solve(&k2.values);
    let cross = &g1 * g2.transpose();
    let svd = cross
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("KCCA singular value decomposition did not converge".into()))?;
    let (u, v_t) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut out = Vec::with_capacity(pairs);
    for &i in order.iter().take(pairs) {
        let mut left = u.column(i).into_owned();
        let mut right = v_t.row(i).transpose();
        let peak = left.iamax();
        if left[peak] < 0.0 {
            left.neg_mut();
            right.neg_mut();
        }
        let res = KccaResult {
            v1: c1.solve(&left),
            v2: c2.solve(&right),
            rho: svd.singular_values[i].min(1.0),
            gamma,
        };
        if !res.v1.iter().chain(res.v2.iter()).all(|x| x.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite canonical vectors; use a larger γ than {gamma}"
            )));
        }
        out.push(res);
    }
    let worst = out[0].residual(k1, k2);
    if !(worst <= KCCA_RESIDUAL_TOL) {
        return Err(Error::Numeric(format!(
            "KCCA residual {worst:.3e} exceeds {KCCA_RESIDUAL_TOL:.0e}; use a larger γ than {gamma}"
        )));
    }
    Ok(out)
}

/// The leading canonical pair.
pub fn kcca(k1: &KernelMatrix, k2: &KernelMatrix, gamma: f64) -> Result<KccaResult> {
    Ok(kcca_pairs(k1, k2, gamma, 1)?.remove(0))
}

/// `d` columns `[K¹v₁⁽¹⁾, K²v₂⁽¹⁾, K¹v₁⁽²⁾, K²v₂⁽²⁾, …]` from the leading
/// `⌈d/2⌉` canonical pairs.
pub fn kcca_embed(k1: &KernelMatrix, k2: &KernelMatrix, gamma: f64, d: usize) -> Result<DMatrix<f64>> {
    if d == 0 {
        return Err(Error::Config("KCCA embedding dimension must be positive".into()));
    }
    let pairs = kcca_pairs(k1, k2, gamma, d.div_ceil(2))?;
    Ok(kcca_project(k1, k2, &pairs, d))
}

/// Projection of each view's kernel rows onto its canonical vectors; needs
/// at least `⌈d/2⌉` pairs.
pub fn kcca_project(k1: &KernelMatrix, k2: &KernelMatrix, pairs: &[KccaResult], d: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(k1.len(), d);
    for c in 0..d {
        let pair = &pairs[c / 2];
        let col = if c % 2 == 0 {
            &k1.values * &pair.v1
        } else {
            &k2.values * &pair.v2
        };
        out.set_column(c, &col);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::{embed, row_normalize};
    use crate::kernels::rbf_kernel;
    use nalgebra::Complex;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn points(m: usize, d: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        (0..m)
            .map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect())
            .collect()
    }

    fn random_kernels(m: usize, l: usize, seed: u64) -> Vec<KernelMatrix> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let views: Vec<DataMatrix> = (0..l)
            .map(|_| DataMatrix::from_points(&points(m, 3, &mut rng)).unwrap())
            .collect();
        per_view_kernels(&ViewSet::new(views).unwrap(), 2.0).unwrap()
    }

    #[test]
    fn viewset_validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = DataMatrix::from_points(&points(5, 2, &mut rng)).unwrap();
        let b = DataMatrix::from_points(&points(6, 2, &mut rng)).unwrap();
        assert!(ViewSet::new(vec![a.clone()]).is_err());
        assert!(ViewSet::new(vec![a.clone(), b]).is_err());
        let vs = ViewSet::new(vec![a.clone(), a]).unwrap();
        assert!(vs.clone().with_channels(vec![Channel::E]).is_err());
        let ks = per_view_kernels(&vs.with_channels(vec![Channel::E, Channel::N]).unwrap(), 2.0).unwrap();
        assert_eq!(ks[0].values, ks[1].values);
        assert_eq!(ks[1].view, Some(Channel::N));
    }

    #[test]
    fn per_view_bandwidths_are_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = points(12, 3, &mut rng);
        let b: Vec<Vec<f64>> = a.iter().map(|p| p.iter().map(|x| 4.0 * x).collect()).collect();
        let va = DataMatrix::from_points(&a).unwrap();
        let vb = DataMatrix::from_points(&b).unwrap();
        let ks = per_view_kernels(&ViewSet::new(vec![va.clone(), vb.clone()]).unwrap(), 2.0).unwrap();
        assert!((ks[1].sigma2 / ks[0].sigma2 - 16.0).abs() < 1e-12);
        assert_eq!(ks[0], max_min_kernel(&va, 2.0).unwrap());
        assert_eq!(ks[1], max_min_kernel(&vb, 2.0).unwrap());
    }

    #[test]
    fn block_structure() {
        let ks = random_kernels(8, 3, 2);
        let op = build_multiview(&ks).unwrap();
        assert_eq!(op.k_hat.nrows(), 24);
        for a in 0..3 {
            for b in 0..3 {
                let block = op.k_hat.view((a * 8, b * 8), (8, 8));
                if a == b {
                    assert!(block.iter().all(|&v| v == 0.0));
                } else {
                    let expect = &ks[a].values * &ks[b].values;
                    assert!((block - expect).amax() < 1e-12);
                }
            }
        }
        assert_eq!(op.block_offset(2), 16);
    }

    #[test]
    fn identical_views_give_signed_squared_spectrum() {
        let k = random_kernels(5, 2, 3).remove(0);
        let op = build_multiview(&[k.clone(), k.clone()]).unwrap();
        let mut got: Vec<f64> = op.k_hat.clone().symmetric_eigenvalues().iter().copied().collect();
        got.sort_by(f64::total_cmp);
        let sq = (&k.values * &k.values).symmetric_eigenvalues();
        let mut expect: Vec<f64> = sq.iter().flat_map(|&e| [e, -e]).collect();
        expect.sort_by(f64::total_cmp);
        for (g, e) in got.iter().zip(&expect) {
            assert!((g - e).abs() < 1e-10, "{g} vs {e}");
        }
    }

    #[test]
    fn multiview_operator_properties() {
        for l in [2, 3] {
            let ks = random_kernels(20, l, 4 + l as u64);
            let op = build_multiview(&ks).unwrap();
            assert!((&op.k_hat - op.k_hat.transpose()).amax() <= 1e-12);
            let ones = DVector::from_element(20 * l, 1.0);
            assert!((op.p_hat() * &ones - &ones).amax() <= 1e-12);
            let eig = op.op.symmetric_form().clone().symmetric_eigenvalues();
            assert!(eig.min() < 0.0);
            assert!((eig.max() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn multiview_embedding_layout() {
        let ks = random_kernels(15, 3, 6);
        let op = build_multiview(&ks).unwrap();
        let e = multiview_embed(&op, 4, 1).unwrap();
        assert_eq!(e.concatenated.shape(), (15, 12));
        let spec = multiview_spectrum(&op, 4).unwrap();
        for l in 0..3 {
            for c in 0..4 {
                for i in 0..15 {
                    let expect = spec.eigenvalues[c] * spec.eigenvectors[(i + 15 * l, c)];
                    assert_eq!(e.per_view_coords[l][(i, c)], expect);
                    assert_eq!(e.concatenated[(i, 4 * l + c)], expect);
                }
            }
        }
        assert!(e.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        assert!(multiview_embed(&op, 45, 1).is_err());
    }

    #[test]
    fn identical_views_give_matching_blocks() {
        let k = random_kernels(10, 2, 7).remove(0);
        let op = build_multiview(&[k.clone(), k]).unwrap();
        let e = multiview_embed(&op, 3, 1).unwrap();
        for c in 0..3 {
            let a = e.per_view_coords[0].column(c);
            let b = e.per_view_coords[1].column(c);
            let same = (a - b).amax();
            let flipped = (a + b).amax();
            assert!(same.min(flipped) < 1e-9);
        }
    }

    #[test]
    fn kernel_product_and_sum_oracles() {
        let ks = random_kernels(7, 2, 8);
        let kp = kernel_product(&ks).unwrap();
        let ksum = kernel_sum(&ks).unwrap();
        for i in 0..7 {
            let prod_row: f64 = (0..7).map(|j| ks[0].values[(i, j)] * ks[1].values[(i, j)]).sum();
            let sum_row: f64 = (0..7).map(|j| ks[0].values[(i, j)] + ks[1].values[(i, j)]).sum();
            for j in 0..7 {
                let p = ks[0].values[(i, j)] * ks[1].values[(i, j)] / prod_row;
                let s = (ks[0].values[(i, j)] + ks[1].values[(i, j)]) / sum_row;
                assert!((kp.p[(i, j)] - p).abs() < 1e-14);
                assert!((ksum.p[(i, j)] - s).abs() < 1e-14);
            }
            assert!((kp.p.row(i).sum() - 1.0).abs() < 1e-12);
            assert!((ksum.p.row(i).sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_fusions_reduce_to_single_view() {
        let k = random_kernels(12, 2, 9).remove(0);
        let single = row_normalize(&k).unwrap();
        let ones = KernelMatrix {
            values: DMatrix::from_element(12, 12, 1.0),
            sigma2: 1.0,
            view: None,
        };
        let kp = kernel_product(&[k.clone(), ones]).unwrap();
        assert!((&kp.p - &single.p).amax() <= 1e-12);
        let ks = kernel_sum(&[k.clone(), k.clone(), k.clone()]).unwrap();
        assert!((&ks.p - &single.p).amax() <= 1e-12);
    }

    /// Real eigenvalues of `B⁻¹A` from a general (Schur) eigensolve.
    fn generalized_oracle(k1: &DMatrix<f64>, k2: &DMatrix<f64>, gamma: f64) -> f64 {
        let (a, b) = kcca_system(k1, k2, gamma);
        let binv_a = b.clone().lu().solve(&a).unwrap();
        let eig: Vec<Complex<f64>> = binv_a.complex_eigenvalues().iter().copied().collect();
        eig.iter()
            .filter(|z| z.im.abs() < 1e-6)
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn kcca_identical_views() {
        let k = random_kernels(20, 2, 10).remove(0);
        let res = kcca(&k, &k, 1e-3).unwrap();
        assert!(res.rho >= 0.99, "rho {}", res.rho);
        assert!(res.residual(&k, &k) <= 1e-8);
        let oracle = generalized_oracle(&k.values, &k.values, 1e-3);
        assert!((res.rho - oracle).abs() < 1e-6, "{} vs {oracle}", res.rho);
    }

    #[test]
    fn kcca_shrinks_with_regularisation() {
        let ks = random_kernels(20, 2, 11);
        let strong = kcca(&ks[0], &ks[1], 10.0).unwrap();
        let weak = kcca(&ks[0], &ks[1], 0.01).unwrap();
        assert!(strong.rho < weak.rho);
        for (g, r) in [(10.0, &strong), (0.01, &weak)] {
            let oracle = generalized_oracle(&ks[0].values, &ks[1].values, g);
            assert!(
                (r.rho - oracle).abs() < 1e-6 * oracle.max(1e-3),
                "{} vs {oracle}",
                r.rho
            );
            assert!(r.residual(&ks[0], &ks[1]) <= 1e-8);
        }
    }

    #[test]
    fn kcca_errors_and_embedding() {
        let ks = random_kernels(10, 2, 12);
        assert!(matches!(kcca(&ks[0], &ks[1], 0.0), Err(Error::Config(_))));
        let indefinite = KernelMatrix {
            values: DMatrix::from_fn(10, 10, |i, j| if i == j { -1.0 } else { 0.0 }),
            sigma2: 1.0,
            view: None,
        };
        assert!(matches!(kcca(&indefinite, &ks[1], 1e-3), Err(Error::Numeric(_))));
        let z = kcca_embed(&ks[0], &ks[1], 1e-3, 3).unwrap();
        assert_eq!(z.shape(), (10, 3));
        let pairs = kcca_pairs(&ks[0], &ks[1], 1e-3, 2).unwrap();
        assert_eq!(z.column(2), &ks[0].values * &pairs[1].v1);
        assert!(pairs[0].rho >= pairs[1].rho);
    }

    #[test]
    fn single_view_embedding_unchanged_by_trivial_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let x = DataMatrix::from_points(&points(10, 2, &mut rng)).unwrap();
        let k = rbf_kernel(&x, 1.0).unwrap();
        let a = embed(&row_normalize(&k).unwrap(), 3, 1).unwrap();
        let b = embed(&kernel_sum(&[k.clone(), k]).unwrap(), 3, 1).unwrap();
        assert!((a.coords - b.coords).amax() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn multiview_permutation_equivariance(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let views: Vec<Vec<Vec<f64>>> = (0..2).map(|_| points(12, 3, &mut rng)).collect();
            let mut perm: Vec<usize> = (0..12).collect();
            for i in (1..12).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            let run = |vs: &[Vec<Vec<f64>>]| {
                let dms = vs.iter().map(|v| DataMatrix::from_points(v).unwrap()).collect();
                let ks = per_view_kernels(&ViewSet::new(dms).unwrap(), 2.0).unwrap();
                multiview_embed(&build_multiview(&ks).unwrap(), 2, 1).unwrap()
            };
            let a = run(&views);
            let permuted: Vec<Vec<Vec<f64>>> = views
                .iter()
                .map(|v| perm.iter().map(|&p| v[p].clone()).collect())
                .collect();
            let b = run(&permuted);
            for i in 0..12 {
                for c in 0..4 {
                    prop_assert!((b.concatenated[(i, c)] - a.concatenated[(perm[i], c)]).abs() < 1e-8);
                }
            }
        }
    }
}
