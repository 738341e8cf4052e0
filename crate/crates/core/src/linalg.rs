//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, Schur, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Largest singular value.
pub fn spectral_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

pub fn spectral_norm_real(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Smallest eigenvalue of a real symmetric matrix.
pub fn symmetric_min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    let sym = (a + a.transpose()) * 0.5;
    SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Smallest eigenvalue of a Hermitian matrix, through its real 2m×2m embedding
/// `[[A, −B], [B, A]]` (each eigenvalue appears twice there).
pub fn hermitian_min_eigenvalue(h: &CMatrix) -> f64 {
    let m = h.nrows();
    let herm = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let mut emb = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            let v = herm[(i, j)];
            emb[(i, j)] = v.re;
            emb[(i + m, j + m)] = v.re;
            emb[(i, j + m)] = -v.im;
            emb[(i + m, j)] = v.im;
        }
    }
    symmetric_min_eigenvalue(&emb)
}

/// Eigenvalues of a general complex matrix via the complex Schur form,
/// sorted by real part then imaginary part.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<Complex64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::EigensolverFailure("matrix is not square".into()));
    }
    if a.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::EigensolverFailure("non-finite matrix entry".into()));
    }
    let mut vals: Vec<Complex64> = if a.nrows() == 1 {
        vec![a[(0, 0)]]
    } else {
        let schur = Schur::try_new(a.clone(), 1e-15, 10_000)
            .ok_or_else(|| Error::EigensolverFailure("Schur iteration did not converge".into()))?;
        let (_, t) = schur.unpack();
        (0..t.nrows()).map(|i| t[(i, i)]).collect()
    };
    vals.sort_by(|x, y| {
        x.re.partial_cmp(&y.re)
            .unwrap()
            .then(x.im.partial_cmp(&y.im).unwrap())
    });
    Ok(vals)
}

/// Matrix exponential.
pub fn expm(a: &CMatrix) -> CMatrix {
    a.clone().exp()
}

/// Solves the Hermitian positive (semi)definite system `(G + λI) x = b`.
pub fn solve_regularized(g: &CMatrix, b: &nalgebra::DVector<Complex64>, lambda: f64) -> Option<nalgebra::DVector<Complex64>> {
    let n = g.nrows();
    let reg = g + CMatrix::identity(n, n) * Complex64::new(lambda, 0.0);
    reg.cholesky().map(|c| c.solve(b))
}
