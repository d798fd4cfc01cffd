//! Dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenpairs of a symmetric matrix, ordered by a caller-chosen key.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    /// One eigenvector per column, aligned with `values`.
    pub vectors: DMatrix<f64>,
}

/// Ordering used when truncating a symmetric spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumOrder {
    /// Largest absolute value first.
    Magnitude,
    /// Largest signed value first.
    Algebraic,
}

/// Leading `k` eigenpairs of symmetric `a`.
///
/// Each eigenvector is sign-normalized so its largest-magnitude entry is
/// positive, which makes the output a deterministic function of `a`.
pub fn symmetric_leading(a: &DMatrix<f64>, k: usize, order: SpectrumOrder) -> Result<EigenPairs> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension(format!("expected square matrix, got {}x{}", n, a.ncols())));
    }
    if k > n {
        return Err(Error::Dimension(format!("requested {k} eigenpairs of a {n}x{n} matrix")));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite entry in symmetric eigenproblem".into()));
    }
    let eig = SymmetricEigen::try_new(a.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("symmetric eigensolver did not converge".into()))?;
    let mut idx: Vec<usize> = (0..n).collect();
    let key = |i: usize| match order {
        SpectrumOrder::Magnitude => eig.eigenvalues[i].abs(),
        SpectrumOrder::Algebraic => eig.eigenvalues[i],
    };
    idx.sort_by(|&i, &j| key(j).total_cmp(&key(i)).then(i.cmp(&j)));
    let mut values = Vec::with_capacity(k);
    let mut vectors = DMatrix::zeros(n, k);
    for (c, &i) in idx.iter().take(k).enumerate() {
        values.push(eig.eigenvalues[i]);
        let mut col = eig.eigenvectors.column(i).into_owned();
        normalize_sign(&mut col);
        vectors.set_column(c, &col);
    }
    Ok(EigenPairs { values, vectors })
}

fn normalize_sign(v: &mut DVector<f64>) {
    let mut best = 0usize;
    for i in 0..v.len() {
        if v[i].abs() > v[best].abs() + 1e-12 {
            best = i;
        }
    }
    if v.len() > 0 && v[best] < 0.0 {
        v.neg_mut();
    }
}

/// Orthonormal basis for the column span of `m`, discarding singular
/// directions below `rtol * sigma_max`. Returns `(basis, rank)`.
pub fn orthonormal_range(m: &DMatrix<f64>, rtol: f64) -> Result<(DMatrix<f64>, usize)> {
    let (n, l) = m.shape();
    if l == 0 || n == 0 {
        return Ok((DMatrix::zeros(n, 0), 0));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite entry in design matrix".into()));
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.as_ref().expect("requested U");
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return Ok((DMatrix::zeros(n, 0), 0));
    }
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > rtol * smax)
        .collect();
    let mut basis = DMatrix::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        basis.set_column(c, &u.column(i));
    }
    let rank = keep.len();
    Ok((basis, rank))
}

pub fn singular_values(m: &DMatrix<f64>) -> DVector<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DVector::zeros(0);
    }
    m.clone().svd(false, false).singular_values
}

/// Ratio of largest to smallest singular value (infinite when singular).
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let s = singular_values(m);
    if s.is_empty() {
        return f64::NAN;
    }
    let min = s.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        s.max() / min
    }
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn spd_inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let sym = symmetrize(m);
    sym.cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::Identification(format!("{what} is not positive definite")))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Column-stacking `vec` of a matrix.
pub fn vec_cols(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_cols`].
pub fn unvec(v: &DVector<f64>, nrows: usize, ncols: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(nrows, ncols, v.as_slice())
}

/// Spectral radius of a small general square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Horizontal concatenation of equally tall blocks.
pub fn hstack(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let n = blocks.first().map_or(0, |b| b.nrows());
    let total: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(n, total);
    let mut c = 0;
    for b in blocks {
        assert_eq!(b.nrows(), n, "hstack blocks must share row count");
        out.columns_mut(c, b.ncols()).copy_from(*b);
        c += b.ncols();
    }
    out
}

pub fn vstack(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let m = blocks.first().map_or(0, |b| b.ncols());
    let total: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(total, m);
    let mut r = 0;
    for b in blocks {
        assert_eq!(b.ncols(), m, "vstack blocks must share column count");
        out.rows_mut(r, b.nrows()).copy_from(*b);
        r += b.nrows();
    }
    out
}

/// Orthogonal `O` minimizing `‖a·O − b‖_F`.
pub fn procrustes(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = (a.transpose() * b).svd(true, true);
    svd.u.expect("requested") * svd.v_t.expect("requested")
}

/// Largest Euclidean row norm.
pub fn two_to_infinity(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.norm()).fold(0.0, f64::max)
}
