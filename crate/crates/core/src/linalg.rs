//! Symmetric eigensolvers.
//!
//! Small problems, or requests for a large share of the spectrum, use the
//! dense QR-based solver. Otherwise the leading eigenpairs come from a Lanczos
//! iteration with full reorthogonalisation, extended until every requested
//! Ritz pair meets the residual tolerance; if it never does, the dense solver
//! takes over.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Eigenpairs sorted by descending eigenvalue; column `m` of `vectors` has
/// unit norm and pairs with `values[m]`.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Above this size the Lanczos path is tried for partial spectra.
pub const DENSE_LIMIT: usize = 500;

const LANCZOS_SEED: u64 = 0x5eed_1a2c;

/// Relative residual target `‖Ay − θy‖ ≤ tol · ‖A‖_∞` for Lanczos Ritz pairs.
const LANCZOS_TOL: f64 = 1e-11;

/// Full spectrum, descending.
pub fn dense_eigen(a: &DMatrix<f64>) -> Result<SymEigen> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Size(format!(
            "eigensolver needs a square matrix, got {n}x{}",
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    let eig = a
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric(format!("symmetric eigensolver did not converge (n = {n})")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    Ok(SymEigen {
        values: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        vectors: eig.eigenvectors.select_columns(&order),
    })
}

/// The `k` algebraically largest eigenpairs of symmetric `a`, restricted to
/// the orthogonal complement of `exclude` when given (which must then be a
/// unit-norm eigenvector of `a`).
pub fn top_eigenpairs(a: &DMatrix<f64>, k: usize, exclude: Option<&DVector<f64>>) -> Result<SymEigen> {
    let n = a.nrows();
    let available = n - usize::from(exclude.is_some());
    if k == 0 || k > available {
        return Err(Error::Config(format!(
            "requested {k} eigenpairs from a space of dimension {available}"
        )));
    }
    if n > DENSE_LIMIT && k <= n / 8 {
        if let Some(e) = lanczos(a, k, exclude)? {
            return Ok(e);
        }
        log::debug!("lanczos did not converge for n = {n}, k = {k}; using dense solver");
    }
    dense_top(a, k, exclude)
}

fn dense_top(a: &DMatrix<f64>, k: usize, exclude: Option<&DVector<f64>>) -> Result<SymEigen> {
    let full = match exclude {
        // push the excluded eigenvalue below the rest of the spectrum
        Some(u) => {
            let shift = 2.0 * inf_norm(a) + 1.0;
            dense_eigen(&(a - u * u.transpose() * shift))?
        }
        None => dense_eigen(a)?,
    };
    Ok(SymEigen {
        values: full.values[..k].to_vec(),
        vectors: full.vectors.columns(0, k).into_owned(),
    })
}

fn inf_norm(a: &DMatrix<f64>) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn orthogonalize(w: &mut DVector<f64>, basis: &[DVector<f64>], exclude: Option<&DVector<f64>>) {
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        if let Some(u) = exclude {
            let c = u.dot(w);
            w.axpy(-c, u, 1.0);
        }
        for q in basis {
            let c = q.dot(w);
            w.axpy(-c, q, 1.0);
        }
    }
}

fn lanczos(a: &DMatrix<f64>, k: usize, exclude: Option<&DVector<f64>>) -> Result<Option<SymEigen>> {
    let n = a.nrows();
    let max_steps = n - usize::from(exclude.is_some());
    let norm = inf_norm(a).max(f64::MIN_POSITIVE);

    let mut rng = ChaCha8Rng::seed_from_u64(LANCZOS_SEED);
    let mut q = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    orthogonalize(&mut q, &[], exclude);
    q /= q.norm();

    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut target = (3 * k + 30).min(max_steps);

    loop {
        while basis.len() < target {
            let mut w = a * &q;
            let j = basis.len();
            let aj = q.dot(&w);
            w.axpy(-aj, &q, 1.0);
            if j > 0 {
                w.axpy(-beta[j - 1], &basis[j - 1], 1.0);
            }
            basis.push(q.clone());
            alpha.push(aj);
            orthogonalize(&mut w, &basis, exclude);
            let b = w.norm();
            if b <= 1e-13 * norm {
                // invariant subspace; Ritz values are exact
                target = basis.len();
                beta.push(0.0);
                break;
            }
            beta.push(b);
            q = w / b;
        }

        let m = basis.len();
        if m < k {
            return Ok(None);
        }
        let t = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let ritz = dense_eigen(&t)?;
        let q_mat = DMatrix::from_columns(&basis);
        let s = ritz.vectors.columns(0, k);
        let y = &q_mat * s;
        let ay = a * &y;
        let converged = (0..k).all(|c| {
            let r = ay.column(c) - y.column(c) * ritz.values[c];
            r.norm() <= LANCZOS_TOL * norm
        });
        if converged {
            let mut vectors = y;
            for mut col in vectors.column_iter_mut() {
                let nrm = col.norm();
                col /= nrm;
            }
            return Ok(Some(SymEigen {
                values: ritz.values[..k].to_vec(),
                vectors,
            }));
        }
        if m >= max_steps || target == m && beta.last() == Some(&0.0) {
            return Ok(None);
        }
        target = (m + 20 + m / 4).min(max_steps);
    }
}
