//! KYP-inequality residuals, the duality map `H -> H^{-1}` and the Loewner order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, HermitianEigen};
use crate::storage::{check_hermitian, compute_ha, compute_hr, StorageOptions};
use crate::system::StateSpaceSystem;

/// Absolute tolerance on gap eigenvalues.
pub const PSD_TOL: f64 = 1e-9;
const HERMITIAN_TOL: f64 = 1e-10;
const DUAL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KypFlavor {
    /// `diag(H, I_m) - M* diag(H, I_p) M ⪰ 0`.
    Standard,
    /// The standard gap with threshold `delta`: `gap ⪰ delta I`.
    Strict,
    /// `diag(H, I_p) - M diag(H, I_m) M* ⪰ 0`.
    Adjoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KypReport {
    pub gap: CMat,
    pub min_eig: f64,
    pub feasible: bool,
    pub margin: f64,
    pub flavor: KypFlavor,
}

impl KypReport {
    /// Unit eigenvector of the gap for its smallest eigenvalue; for the
    /// standard flavor this is a `(x, u)` pair violating dissipation when
    /// `min_eig < 0`.
    pub fn worst_direction(&self) -> Result<CVec> {
        let eig = HermitianEigen::new(&self.gap)?;
        Ok(eig.vectors.column(0).into_owned())
    }
}

pub fn kyp_gap(sys: &StateSpaceSystem, h: &CMat, flavor: KypFlavor, delta: f64) -> Result<KypReport> {
    let (n, m, p) = (sys.n(), sys.m(), sys.p());
    if h.shape() != (n, n) {
        return Err(Error::mismatch("H", format!("{n} x {n}"), format!("{} x {}", h.nrows(), h.ncols())));
    }
    check_hermitian(h, HERMITIAN_TOL)?;
    if delta.is_nan() || delta < 0.0 || (flavor != KypFlavor::Strict && delta != 0.0) {
        return Err(Error::Precondition(format!("invalid strictness margin {delta} for {flavor:?} check")));
    }
    let h = linalg::hermitian_part(h);
    let mm = sys.system_matrix();
    let gap = match flavor {
        KypFlavor::Standard | KypFlavor::Strict => {
            let right = linalg::block_diag(&[&h, &linalg::identity(m)]);
            let left = linalg::block_diag(&[&h, &linalg::identity(p)]);
            right - mm.adjoint() * left * &mm
        }
        KypFlavor::Adjoint => {
            let right = linalg::block_diag(&[&h, &linalg::identity(p)]);
            let inner = linalg::block_diag(&[&h, &linalg::identity(m)]);
            right - &mm * inner * mm.adjoint()
        }
    };
    let gap = linalg::hermitian_part(&gap);
    let min_eig = linalg::min_eigenvalue(&gap)?;
    Ok(KypReport {
        feasible: min_eig >= delta - PSD_TOL,
        gap,
        min_eig,
        margin: delta,
        flavor,
    })
}

/// `H^{-1}` for Hermitian positive-definite `H`.
pub fn dual_solution(h: &CMat) -> Result<CMat> {
    check_hermitian(h, HERMITIAN_TOL)?;
    let eig = HermitianEigen::new(h)?;
    if h.nrows() == 0 {
        return Ok(CMat::zeros(0, 0));
    }
    let (lo, hi) = (eig.min(), eig.max());
    if hi.is_nan() || hi <= 0.0 || lo <= DUAL_FLOOR * hi {
        return Err(Error::SingularMatrix { ratio: if hi > 0.0 { lo / hi } else { 0.0 } });
    }
    Ok(eig.reassemble(|lam| 1.0 / lam))
}

/// `H1 ⪯ H2`: the smallest eigenvalue of `H2 - H1` is at least `-tol`.
pub fn loewner_leq(h1: &CMat, h2: &CMat, tol: f64) -> Result<bool> {
    if h1.shape() != h2.shape() || !h1.is_square() {
        return Err(Error::mismatch(
            "H2",
            format!("{} x {}", h1.nrows(), h1.ncols()),
            format!("{} x {}", h2.nrows(), h2.ncols()),
        ));
    }
    Ok(linalg::min_eigenvalue(&(h2 - h1))? >= -tol)
}

/// `H_a ⪯ H_user ⪯ H_r` against precomputed extremal certificates.
pub fn ordering_chain_check_with(
    sys: &StateSpaceSystem,
    h_a: &CMat,
    h_r: &CMat,
    h_user: &CMat,
    tol: f64,
) -> Result<bool> {
    let report = kyp_gap(sys, h_user, KypFlavor::Standard, 0.0)?;
    if !report.feasible {
        return Err(Error::Precondition(format!(
            "H does not satisfy the KYP inequality (min eigenvalue {:e})",
            report.min_eig
        )));
    }
    Ok(loewner_leq(h_a, h_user, tol)? && loewner_leq(h_user, h_r, tol)?)
}

/// Computes `H_a` and `H_r` and checks `H_a ⪯ H_user ⪯ H_r`. The user
/// matrix must itself satisfy the KYP inequality.
pub fn ordering_chain_check(sys: &StateSpaceSystem, h_user: &CMat, tol: f64) -> Result<bool> {
    let report = kyp_gap(sys, h_user, KypFlavor::Standard, 0.0)?;
    if !report.feasible {
        return Err(Error::Precondition(format!(
            "H does not satisfy the KYP inequality (min eigenvalue {:e})",
            report.min_eig
        )));
    }
    let opts = StorageOptions::default();
    let h_a = compute_ha(sys, &opts)?;
    let h_r = compute_hr(sys, &opts)?;
    ordering_chain_check_with(sys, &h_a.h, &h_r.h, h_user, tol)
}
