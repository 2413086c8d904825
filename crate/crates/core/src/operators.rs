//! Finite-horizon compressions of the sequence-space operators attached to a
//! system: observability and controllability maps, the Hankel operator, the
//! causal Toeplitz blocks of the Laurent operator, defect operators and the
//! Moore-Penrose pseudoinverse.
//!
//! Time ordering: the future window is `0, 1, ..., N-1` (top to bottom / left
//! to right); the past window is `-N, ..., -1`, so the last column block of
//! `wc` is `B` and appending a new most-recent input appends on the right.


use crate::error::{Error, Result};
use crate::linalg::{self, CMat, HermitianEigen};
use crate::system::{taylor_coefficients, StateSpaceSystem};

pub const DEFAULT_CLIP_TOL: f64 = 1e-9;
pub const DEFAULT_RANK_REL_TOL: f64 = 1e-10;
const OVERFLOW_GUARD: f64 = 1e100;

/// Operators compressed to a window of `horizon` steps.
#[derive(Debug, Clone)]
pub struct TruncatedOperatorSet {
    pub horizon: usize,
    /// `(N p) x n`: `C, CA, ..., CA^{N-1}` stacked.
    pub wo: CMat,
    /// `n x (N m)`: `[A^{N-1} B, ..., AB, B]`, column block `k` at time `-N + k`.
    pub wc: CMat,
    /// `(N p) x (N m)`: past inputs to future outputs, block `(i, k) = C A^{i+N-1-k} B`.
    pub hankel: CMat,
    /// `(N p) x (N m)`: future inputs to future outputs, block `(i, j) = F_{i-j}` for `i >= j`.
    pub toeplitz_causal: CMat,
    /// Past inputs to past outputs. With time-ascending ordering of the past
    /// window it carries the same lower block-triangular symbol as `toeplitz_causal`.
    pub toeplitz_anticausal: CMat,
    /// `F_0 = D, F_k = C A^{k-1} B` for `k < 2N`.
    pub taylor: Vec<CMat>,
}

impl TruncatedOperatorSet {
    /// The Laurent operator compressed to times `-N..N`, laid out as
    /// `[[T_past, 0], [H, T_future]]`.
    pub fn laurent(&self) -> CMat {
        let (rp, cp) = self.toeplitz_anticausal.shape();
        let (rf, cf) = self.toeplitz_causal.shape();
        let mut out = CMat::zeros(rp + rf, cp + cf);
        out.view_mut((0, 0), (rp, cp)).copy_from(&self.toeplitz_anticausal);
        out.view_mut((rp, 0), (rf, cp)).copy_from(&self.hankel);
        out.view_mut((rp, cp), (rf, cf)).copy_from(&self.toeplitz_causal);
        out
    }
}

fn lower_block_toeplitz(taylor: &[CMat], horizon: usize, p: usize, m: usize) -> CMat {
    let mut t = CMat::zeros(horizon * p, horizon * m);
    for i in 0..horizon {
        for j in 0..=i {
            t.view_mut((i * p, j * m), (p, m)).copy_from(&taylor[i - j]);
        }
    }
    t
}

fn guard(m: &CMat, horizon: usize) -> Result<()> {
    if m.iter().any(|z| z.norm().is_nan() || z.norm() > OVERFLOW_GUARD) {
        return Err(Error::Overflow { horizon });
    }
    Ok(())
}

pub fn build_operator_set(sys: &StateSpaceSystem, horizon: usize) -> Result<TruncatedOperatorSet> {
    if horizon == 0 {
        return Err(Error::Precondition("horizon must be at least 1".into()));
    }
    let (n, m, p) = (sys.n(), sys.m(), sys.p());

    let mut wo = CMat::zeros(horizon * p, n);
    let mut wc = CMat::zeros(n, horizon * m);
    let mut c_ak = sys.c().clone();
    let mut ak_b = sys.b().clone();
    for k in 0..horizon {
        wo.view_mut((k * p, 0), (p, n)).copy_from(&c_ak);
        wc.view_mut((0, (horizon - 1 - k) * m), (n, m)).copy_from(&ak_b);
        c_ak = &c_ak * sys.a();
        ak_b = sys.a() * &ak_b;
    }
    guard(&wo, horizon)?;
    guard(&wc, horizon)?;

    let taylor = taylor_coefficients(sys, 2 * horizon);
    for f in &taylor {
        guard(f, horizon)?;
    }

    let mut hankel = CMat::zeros(horizon * p, horizon * m);
    for i in 0..horizon {
        for k in 0..horizon {
            hankel
                .view_mut((i * p, k * m), (p, m))
                .copy_from(&taylor[i + horizon - k]);
        }
    }

    let toeplitz_causal = lower_block_toeplitz(&taylor, horizon, p, m);
    let toeplitz_anticausal = toeplitz_causal.clone();
    Ok(TruncatedOperatorSet {
        horizon,
        wo,
        wc,
        hankel,
        toeplitz_causal,
        toeplitz_anticausal,
        taylor,
    })
}

/// `(I - T*T)^{1/2}` held as a clipped eigendecomposition.
#[derive(Debug, Clone)]
pub struct DefectOperator {
    /// Largest singular value of `T`.
    pub base_norm: f64,
    /// Sum of magnitudes of the negative eigenvalues that were set to zero.
    pub clipped_mass: f64,
    spectrum: HermitianEigen,
}

impl DefectOperator {
    /// The dense matrix `(I - T*T)^{1/2}`.
    pub fn matrix(&self) -> CMat {
        self.spectrum.reassemble(f64::sqrt)
    }

    /// Eigenvalues of `I - T*T` after clipping, ascending.
    pub fn squared_spectrum(&self) -> &nalgebra::DVector<f64> {
        &self.spectrum.values
    }

    /// `D^† rhs`, treating singular values of `D` at or below
    /// `rank_rel_tol * max` as zero.
    pub fn pinv_apply(&self, rhs: &CMat, rank_rel_tol: f64) -> CMat {
        let cut = self.cutoff(rank_rel_tol);
        let scale = |lam: f64| if lam.sqrt() > cut { 1.0 / lam.sqrt() } else { 0.0 };
        self.apply_spectral(rhs, scale)
    }

    /// `(D^†)^2 rhs`, i.e. the pseudoinverse of `I - T*T` applied to `rhs`.
    pub fn pinv_squared_apply(&self, rhs: &CMat, rank_rel_tol: f64) -> CMat {
        let cut = self.cutoff(rank_rel_tol);
        let scale = |lam: f64| if lam.sqrt() > cut { 1.0 / lam } else { 0.0 };
        self.apply_spectral(rhs, scale)
    }

    fn cutoff(&self, rank_rel_tol: f64) -> f64 {
        rank_rel_tol * self.spectrum.max().max(0.0).sqrt()
    }

    fn apply_spectral(&self, rhs: &CMat, f: impl Fn(f64) -> f64) -> CMat {
        let v = &self.spectrum.vectors;
        let mut coeffs = linalg::adj_mul(v, rhs);
        for (i, &lam) in self.spectrum.values.iter().enumerate() {
            let s = f(lam);
            coeffs.row_mut(i).scale_mut(s);
        }
        linalg::mul(v, &coeffs)
    }
}

/// Defect operator of `t`. Eigenvalues of `I - T*T` in `[-clip_tol, 0)` are
/// clipped to zero; anything more negative means `t` is not a contraction.
pub fn defect(t: &CMat, clip_tol: f64) -> Result<DefectOperator> {
    let k = t.ncols();
    let gram = linalg::identity(k) - linalg::adj_mul(t, t);
    let mut spectrum = HermitianEigen::new(&gram)?;
    let raw_min = spectrum.min();
    if raw_min < -clip_tol {
        return Err(Error::NotContraction { min_eig: raw_min });
    }
    let base_norm = if k == 0 { 0.0 } else { (1.0 - raw_min).max(0.0).sqrt() };
    let mut clipped_mass = 0.0;
    for lam in spectrum.values.iter_mut() {
        if *lam < 0.0 {
            clipped_mass += -*lam;
            *lam = 0.0;
        }
    }
    Ok(DefectOperator {
        base_norm,
        clipped_mass,
        spectrum,
    })
}

/// Moore-Penrose pseudoinverse; singular values at or below
/// `rank_rel_tol * sigma_max` are treated as zero.
///
/// nalgebra's SVD returns inaccurate singular vectors for some exactly
/// rank-deficient inputs, so the factorization goes through Householder QR
/// and a Hermitian eigendecomposition instead.
pub fn pinv(mtx: &CMat, rank_rel_tol: f64) -> Result<CMat> {
    let (r, c) = mtx.shape();
    if r == 0 || c == 0 {
        return Ok(CMat::zeros(c, r));
    }
    if r < c {
        return Ok(pinv(&mtx.adjoint(), rank_rel_tol)?.adjoint());
    }
    // A = QR with orthonormal Q gives A^† = R^† Q*.
    let qr = mtx.clone().qr();
    Ok(linalg::mul_adj(&square_pinv(&qr.r(), rank_rel_tol)?, &qr.q()))
}

/// Pseudoinverse of a square matrix from the eigenpairs of
/// `[[0, R], [R*, 0]]`: eigenvalue `s > 0` with eigenvector `[u; v] / sqrt 2`
/// for each singular triple `(s, u, v)`.
fn square_pinv(r: &CMat, rank_rel_tol: f64) -> Result<CMat> {
    let k = r.nrows();
    let mut jw = CMat::zeros(2 * k, 2 * k);
    jw.view_mut((0, k), (k, k)).copy_from(r);
    jw.view_mut((k, 0), (k, k)).copy_from(&r.adjoint());
    let eig = HermitianEigen::new(&jw)?;
    let cut = rank_rel_tol * eig.max().max(0.0);
    let kept: Vec<usize> = (0..2 * k).filter(|&j| eig.values[j] > cut && eig.values[j] > 0.0).collect();
    let wu = CMat::from_fn(k, kept.len(), |i, j| eig.vectors[(i, kept[j])]);
    let mut wv = CMat::from_fn(k, kept.len(), |i, j| eig.vectors[(k + i, kept[j])]);
    for (j, &col) in kept.iter().enumerate() {
        wv.column_mut(j).scale_mut(2.0 / eig.values[col]);
    }
    Ok(linalg::mul_adj(&wv, &wu))
}

/// Pseudoinverse of a Hermitian matrix through its eigendecomposition.
pub fn hermitian_pinv(m: &CMat, rank_rel_tol: f64) -> Result<CMat> {
    let eig = HermitianEigen::new(m)?;
    let cut = rank_rel_tol * eig.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Ok(eig.reassemble(|lam| if lam.abs() > cut && lam != 0.0 { 1.0 / lam } else { 0.0 }))
}
