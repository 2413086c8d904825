//! Dense complex matrix helpers shared by the analysis modules.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

const EIG_EPS: f64 = 1e-15;
/// Iteration cap for nalgebra's QR sweeps; hitting it is reported as a failure.
const MAX_SWEEPS: usize = 100_000;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn from_real(m: &DMatrix<f64>) -> CMat {
    m.map(c)
}

pub fn from_rows(rows: &[&[f64]]) -> CMat {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    CMat::from_fn(nrows, ncols, |i, j| c(rows[i][j]))
}

pub fn real_vec(v: &[f64]) -> CVec {
    CVec::from_iterator(v.len(), v.iter().copied().map(c))
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entrywise deviation from Hermitian symmetry.
pub fn asymmetry(m: &CMat) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs(&(m - m.adjoint()))
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).map(|z| z * 0.5)
}

// nalgebra's generic complex gemm is far slower than its f64 kernel, so large
// products are split into real and imaginary parts.
struct Parts {
    re: DMatrix<f64>,
    im: Option<DMatrix<f64>>,
}

impl Parts {
    fn of(m: &CMat) -> Self {
        let re = m.map(|z| z.re);
        let im = (!is_real(m)).then(|| m.map(|z| z.im));
        Parts { re, im }
    }

    fn adjoint_of(m: &CMat) -> Self {
        let re = DMatrix::from_fn(m.ncols(), m.nrows(), |i, j| m[(j, i)].re);
        let im = (!is_real(m)).then(|| DMatrix::from_fn(m.ncols(), m.nrows(), |i, j| -m[(j, i)].im));
        Parts { re, im }
    }
}

fn mul_parts(a: &Parts, b: &Parts) -> CMat {
    let re = &a.re * &b.re;
    let (re, im) = match (&a.im, &b.im) {
        (None, None) => (re, None),
        (Some(ai), None) => (re, Some(ai * &b.re)),
        (None, Some(bi)) => (re, Some(&a.re * bi)),
        (Some(ai), Some(bi)) => (re - ai * bi, Some(&a.re * bi + ai * &b.re)),
    };
    match im {
        None => re.map(c),
        Some(im) => re.zip_map(&im, Complex64::new),
    }
}

/// `a b`.
pub fn mul(a: &CMat, b: &CMat) -> CMat {
    mul_parts(&Parts::of(a), &Parts::of(b))
}

/// `a* b`.
pub fn adj_mul(a: &CMat, b: &CMat) -> CMat {
    mul_parts(&Parts::adjoint_of(a), &Parts::of(b))
}

/// `a b*`.
pub fn mul_adj(a: &CMat, b: &CMat) -> CMat {
    mul_parts(&Parts::of(a), &Parts::adjoint_of(b))
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: DVector<f64>,
    pub vectors: CMat,
}

impl HermitianEigen {
    pub fn new(m: &CMat) -> Result<Self> {
        let n = m.nrows();
        if n == 0 {
            return Ok(Self {
                values: DVector::zeros(0),
                vectors: CMat::zeros(0, 0),
            });
        }
        let herm = hermitian_part(m);
        let failed = || Error::Numerical("Hermitian eigensolver failed".into());
        let (raw_values, raw_vectors) = if is_real(&herm) {
            let eig = SymmetricEigen::try_new(herm.map(|z| z.re), EIG_EPS, MAX_SWEEPS).ok_or_else(failed)?;
            (eig.eigenvalues, eig.eigenvectors.map(c))
        } else {
            let eig = SymmetricEigen::try_new(herm, EIG_EPS, MAX_SWEEPS).ok_or_else(failed)?;
            (eig.eigenvalues, eig.eigenvectors)
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| raw_values[a].total_cmp(&raw_values[b]));
        let values = DVector::from_iterator(n, order.iter().map(|&k| raw_values[k]));
        let vectors = CMat::from_fn(n, n, |i, j| raw_vectors[(i, order[j])]);
        Ok(Self { values, vectors })
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// V diag(f(lambda)) V*.
    pub fn reassemble(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let s = f(self.values[j]);
            scaled.column_mut(j).scale_mut(s);
        }
        hermitian_part(&mul_adj(&scaled, &self.vectors))
    }
}

/// Cholesky factor of a Hermitian positive-definite matrix.
///
/// nalgebra takes complex square roots of the pivots, so an indefinite input
/// still "succeeds" with non-real diagonal entries; those are rejected here.
pub fn cholesky_pd(m: &CMat) -> Option<Cholesky<Complex64, Dyn>> {
    let ch = m.clone().cholesky()?;
    let ok = ch.l_dirty().diagonal().iter().all(|z| z.re > 0.0 && z.im.abs() <= 1e-12 * z.re && z.re.is_finite());
    ok.then_some(ch)
}

/// Smallest eigenvalue of the Hermitian part; `+inf` for an empty matrix.
pub fn min_eigenvalue(m: &CMat) -> Result<f64> {
    Ok(HermitianEigen::new(m)?.min())
}

pub fn singular_values(m: &CMat) -> Result<DVector<f64>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(DVector::zeros(0));
    }
    let svd = SVD::try_new(m.clone(), false, false, EIG_EPS, MAX_SWEEPS)
        .ok_or_else(|| Error::Numerical("singular value decomposition failed".into()))?;
    Ok(svd.singular_values)
}

pub fn spectral_norm(m: &CMat) -> Result<f64> {
    Ok(singular_values(m)?.iter().copied().fold(0.0, f64::max))
}

/// Numerical rank: singular values above `rel_tol * sigma_max`.
pub fn rank(m: &CMat, rel_tol: f64) -> Result<usize> {
    let sv = singular_values(m)?;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > rel_tol * smax).count())
}

pub fn hstack(blocks: &[&CMat]) -> CMat {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.view_mut((0, at), (rows, b.ncols())).copy_from(b);
        at += b.ncols();
    }
    out
}

pub fn vstack(blocks: &[&CMat]) -> CMat {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.view_mut((at, 0), (b.nrows(), cols)).copy_from(b);
        at += b.nrows();
    }
    out
}

pub fn block_diag(blocks: &[&CMat]) -> CMat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let (mut r, mut k) = (0, 0);
    for b in blocks {
        out.view_mut((r, k), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        k += b.ncols();
    }
    out
}

/// x* H x for Hermitian H (imaginary round-off discarded).
pub fn quadratic_form(h: &CMat, x: &CVec) -> f64 {
    (x.adjoint() * h * x)[(0, 0)].re
}

pub fn all_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn is_real(m: &CMat) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_products_match_direct() {
        let a = CMat::from_fn(4, 3, |i, j| Complex64::new(i as f64 - 0.5 * j as f64, (i * j) as f64 * 0.3 - 0.2));
        let b = CMat::from_fn(3, 5, |i, j| Complex64::new(0.1 * (i + 2 * j) as f64, -0.4 * i as f64));
        let r = from_rows(&[&[1.0, 2.0, 0.5], &[0.0, -1.0, 3.0], &[2.0, 0.0, 1.0]]);
        assert!(max_abs(&(mul(&a, &b) - &a * &b)) < 1e-13);
        assert!(max_abs(&(adj_mul(&a, &a) - a.adjoint() * &a)) < 1e-13);
        assert!(max_abs(&(mul_adj(&b, &b) - &b * b.adjoint())) < 1e-13);
        assert!(max_abs(&(mul(&r, &b) - &r * &b)) < 1e-13);
        assert!(max_abs(&(mul(&a, &r) - &a * &r)) < 1e-13);
        assert!(is_real(&mul(&r, &r)));
    }

    #[test]
    fn real_and_complex_eigen_paths_agree() {
        let r = from_rows(&[&[2.0, 1.0, 0.0], &[1.0, 3.0, 1.0], &[0.0, 1.0, 4.0]]);
        let mut z = r.clone();
        z[(0, 1)].im = 1e-300;
        z[(1, 0)].im = -1e-300;
        let (er, ez) = (HermitianEigen::new(&r).unwrap(), HermitianEigen::new(&z).unwrap());
        assert!((er.values - ez.values).amax() < 1e-13);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        assert!(cholesky_pd(&from_rows(&[&[2.0, 1.0], &[1.0, 2.0]])).is_some());
        assert!(cholesky_pd(&from_rows(&[&[1.0, 0.0], &[0.0, -3.0]])).is_none());
        assert!(cholesky_pd(&from_rows(&[&[1.0, 2.0], &[2.0, 1.0]])).is_none());
    }

    #[test]
    fn eigen_sorted_ascending() {
        let m = from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let eig = HermitianEigen::new(&m).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 3.0).abs() < 1e-14);
        let back = eig.reassemble(|x| x);
        assert!(frobenius(&(back - m)) < 1e-13);
    }

    #[test]
    fn complex_hermitian_eigen() {
        let m = CMat::from_row_slice(
            2,
            2,
            &[c(1.0), Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0), c(1.0)],
        );
        let eig = HermitianEigen::new(&m).unwrap();
        assert!(eig.values[0].abs() < 1e-14);
        assert!((eig.values[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn empty_matrices() {
        let e = CMat::zeros(0, 0);
        assert_eq!(min_eigenvalue(&e).unwrap(), f64::INFINITY);
        assert_eq!(rank(&CMat::zeros(0, 3), 1e-10).unwrap(), 0);
    }

    #[test]
    fn rank_threshold_is_relative() {
        let m = from_rows(&[&[1e6, 0.0], &[0.0, 1e-3]]);
        assert_eq!(rank(&m, 1e-10).unwrap(), 2);
        assert_eq!(rank(&m, 1e-8).unwrap(), 1);
        assert_eq!(rank(&m.map(|z| z * 1e-20), 1e-10).unwrap(), 2);
    }
}
