//! Available storage, the ℓ²-regularized required supply, and the extremal
//! quadratic storage certificates `H_a` and `H_r`.
//!
//! Both certificates are assembled from defect-operator factorizations of
//! the truncated observability and controllability maps:
//!
//! ```text
//! X_a = D_{T*}^† W_o,     H_a = X_a* X_a
//! X_r = D_{T~}^† W_c*,    H_r = (X_r* X_r)^{-1}
//! ```
//!
//! and the truncation horizon is doubled until the relative Frobenius change
//! falls below the requested tolerance. `H_a^{(N)}` grows and `H_r^{(N)}`
//! shrinks monotonically towards their limits.

use nalgebra::{Cholesky, Dyn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, HermitianEigen};
use crate::operators::{self, build_operator_set, defect, DEFAULT_CLIP_TOL, DEFAULT_RANK_REL_TOL};
use crate::system::{spectral_radius, StateSpaceSystem, SystemTrajectory, TimeDirection};

/// Eigenvalue floor (relative to the largest) when inverting `X_r* X_r`.
pub const GRAMIAN_FLOOR: f64 = 1e-12;
/// Reachability residual, relative to `|x0|`, above which `x0` counts as unreachable.
pub const REACH_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertificateKind {
    Available,
    Required,
    User,
}

/// A Hermitian positive-semidefinite matrix `H` whose quadratic form
/// `x* H x` is a candidate storage function.
#[derive(Debug, Clone, PartialEq)]
pub struct StorageCertificate {
    pub h: CMat,
    pub kind: CertificateKind,
    pub horizon: usize,
    /// Frobenius change over the last horizon doubling.
    pub residual: f64,
    pub converged: bool,
}

impl StorageCertificate {
    /// Wraps a caller-supplied matrix, checking it is Hermitian and PSD.
    pub fn user(h: CMat) -> Result<Self> {
        check_hermitian(&h, 1e-10)?;
        let h = linalg::hermitian_part(&h);
        let min = linalg::min_eigenvalue(&h)?;
        if min < -1e-10 {
            return Err(Error::Precondition(format!(
                "storage matrix is not positive semidefinite (min eigenvalue {min:e})"
            )));
        }
        Ok(Self {
            h,
            kind: CertificateKind::User,
            horizon: 0,
            residual: 0.0,
            converged: true,
        })
    }

    /// `S_H(x) = x* H x`.
    pub fn value(&self, x: &CVec) -> f64 {
        linalg::quadratic_form(&self.h, x)
    }
}

pub(crate) fn check_hermitian(h: &CMat, tol: f64) -> Result<()> {
    let asym = linalg::asymmetry(h);
    if asym > tol {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageOptions {
    /// Relative Frobenius tolerance for the doubling loop.
    pub tol: f64,
    /// Largest horizon (in time steps) the doubling loop may reach.
    pub n_cap: usize,
    /// Largest dense operator dimension (horizon times block size) allowed.
    pub max_operator_dim: usize,
    pub clip_tol: f64,
    pub rank_rel_tol: f64,
    /// When false, an unconverged loop returns its last iterate with
    /// `converged = false` instead of an error.
    pub require_convergence: bool,
}

impl Default for StorageOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            n_cap: 1 << 16,
            max_operator_dim: 2048,
            clip_tol: DEFAULT_CLIP_TOL,
            rank_rel_tol: DEFAULT_RANK_REL_TOL,
            require_convergence: true,
        }
    }
}

impl StorageOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

fn check_stable(sys: &StateSpaceSystem) -> Result<()> {
    let rho = spectral_radius(sys)?;
    if rho >= 1.0 {
        return Err(Error::Unstable { spectral_radius: rho });
    }
    Ok(())
}

fn check_state(sys: &StateSpaceSystem, x0: &CVec) -> Result<()> {
    if x0.len() != sys.n() {
        return Err(Error::mismatch("x0", sys.n(), x0.len()));
    }
    Ok(())
}

/// Fails with `NotContraction` if `I - T*T` has an eigenvalue below
/// `-clip_tol`; returns the Cholesky factor when it is positive definite.
fn contraction_gram(t: &CMat, clip_tol: f64) -> Result<(CMat, Option<Cholesky<Complex64, Dyn>>)> {
    let k = t.ncols();
    let gram = linalg::hermitian_part(&(linalg::identity(k) - linalg::adj_mul(t, t)));
    if let Some(ch) = linalg::cholesky_pd(&gram) {
        return Ok((gram, Some(ch)));
    }
    let shifted = &gram + linalg::identity(k).map(|z| z * clip_tol);
    if linalg::cholesky_pd(&shifted).is_none() {
        let min_eig = linalg::min_eigenvalue(&gram)?;
        if min_eig < -clip_tol {
            return Err(Error::NotContraction { min_eig });
        }
    }
    Ok((gram, None))
}

#[derive(Debug, Clone)]
enum PastSolver {
    /// `Y = Q^{-1} W_c*` and `G^† = (W_c Y)^†`.
    Lagrange { y: CMat, g_pinv: CMat },
    /// Projector onto `ker W_c` and `(P Q P)^†`, for singular `Q`.
    Projected { proj: CMat, reduced_pinv: CMat },
}

/// The truncated available storage and ℓ²-regularized required supply at a
/// fixed horizon, factored once so that many initial states can be evaluated.
///
/// `Q = I - T*T` is shared by both problems because the past and future
/// Toeplitz compressions coincide.
#[derive(Debug, Clone)]
pub struct StorageEvaluator {
    horizon: usize,
    wo: CMat,
    wc: CMat,
    wc_pinv: CMat,
    t: CMat,
    q: CMat,
    chol: Option<Cholesky<Complex64, Dyn>>,
    q_pinv: Option<CMat>,
    past: PastSolver,
}

impl StorageEvaluator {
    pub fn new(sys: &StateSpaceSystem, horizon: usize) -> Result<Self> {
        check_stable(sys)?;
        let ops = build_operator_set(sys, horizon)?;
        let t = ops.toeplitz_causal;
        let (q, chol) = contraction_gram(&t, DEFAULT_CLIP_TOL)?;
        let wc = ops.wc;
        let wc_pinv = operators::pinv(&wc, DEFAULT_RANK_REL_TOL)?;
        let (q_pinv, past) = match &chol {
            Some(ch) => {
                let y = ch.solve(&wc.adjoint());
                let g = linalg::hermitian_part(&(&wc * &y));
                let g_pinv = operators::hermitian_pinv(&g, DEFAULT_RANK_REL_TOL)?;
                (None, PastSolver::Lagrange { y, g_pinv })
            }
            None => {
                let k = wc.ncols();
                let proj = linalg::identity(k) - linalg::mul(&wc_pinv, &wc);
                let reduced = linalg::hermitian_part(&linalg::mul(&linalg::mul(&proj, &q), &proj));
                let reduced_pinv = operators::hermitian_pinv(&reduced, DEFAULT_RANK_REL_TOL)?;
                (Some(operators::hermitian_pinv(&q, DEFAULT_RANK_REL_TOL)?), PastSolver::Projected { proj, reduced_pinv })
            }
        };
        Ok(Self { horizon, wo: ops.wo, wc, wc_pinv, t, q, chol, q_pinv, past })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Supremum over inputs `u` on `0..N` of `|W_o x0 + T u|^2 - |u|^2`,
    /// attained at `u = (I - T*T)^{-1} T* W_o x0`.
    pub fn available(&self, x0: &CVec) -> Result<f64> {
        self.check(x0)?;
        let w = &self.wo * x0;
        let rhs = self.t.adjoint() * &w;
        let u = match (&self.chol, &self.q_pinv) {
            (Some(ch), _) => ch.solve(&rhs),
            (None, Some(qp)) => qp * &rhs,
            (None, None) => unreachable!("one factorization is always stored"),
        };
        let value = (&w + &self.t * &u).norm_squared() - u.norm_squared();
        Ok(value.max(0.0))
    }

    /// Infimum of `|u|^2 - |T~ u|^2` over pasts `u` on `-N..-1` with
    /// `W_c u = x0`; `+inf` when `x0` is not reachable in `N` steps.
    pub fn required(&self, x0: &CVec) -> Result<f64> {
        self.check(x0)?;
        if x0.norm() == 0.0 {
            return Ok(0.0);
        }
        let u0 = &self.wc_pinv * x0;
        if (&self.wc * &u0 - x0).norm() > REACH_RESIDUAL_TOL * x0.norm() {
            return Ok(f64::INFINITY);
        }
        let u = match &self.past {
            PastSolver::Lagrange { y, g_pinv } => y * (g_pinv * x0),
            PastSolver::Projected { proj, reduced_pinv } => {
                let grad = proj * (&self.q * &u0);
                let v = -(reduced_pinv * grad);
                u0 + proj * v
            }
        };
        let value = (u.adjoint() * &self.q * &u)[(0, 0)].re;
        Ok(value.max(0.0))
    }

    fn check(&self, x0: &CVec) -> Result<()> {
        if x0.len() != self.wo.ncols() {
            return Err(Error::mismatch("x0", self.wo.ncols(), x0.len()));
        }
        Ok(())
    }
}

/// Truncated available storage at `x0`; see [`StorageEvaluator::available`].
pub fn available_storage(sys: &StateSpaceSystem, x0: &CVec, horizon: usize) -> Result<f64> {
    check_state(sys, x0)?;
    StorageEvaluator::new(sys, horizon)?.available(x0)
}

/// Truncated ℓ²-regularized required supply at `x0`; see
/// [`StorageEvaluator::required`].
///
/// With `Q = I - T~*T~` positive definite the constrained minimizer is
/// `u = Q^{-1} W_c* (W_c Q^{-1} W_c*)^† x0`. Otherwise every feasible past is
/// written `u0 + P v` with `u0 = W_c^† x0` and `P` the projector onto
/// `ker W_c`, and `v` solves the reduced least-squares problem.
pub fn regularized_required_supply(sys: &StateSpaceSystem, x0: &CVec, horizon: usize) -> Result<f64> {
    check_state(sys, x0)?;
    StorageEvaluator::new(sys, horizon)?.required(x0)
}

/// `H_a` at a fixed horizon.
pub fn available_storage_matrix(sys: &StateSpaceSystem, horizon: usize, opts: &StorageOptions) -> Result<CMat> {
    let ops = build_operator_set(sys, horizon)?;
    let d = defect(&ops.toeplitz_causal.adjoint(), opts.clip_tol)?;
    let x_a = d.pinv_apply(&ops.wo, opts.rank_rel_tol);
    Ok(linalg::hermitian_part(&(x_a.adjoint() * x_a)))
}

/// `H_r` at a fixed horizon.
pub fn required_supply_matrix(sys: &StateSpaceSystem, horizon: usize, opts: &StorageOptions) -> Result<CMat> {
    let ops = build_operator_set(sys, horizon)?;
    let d = defect(&ops.toeplitz_anticausal, opts.clip_tol)?;
    let x_r = d.pinv_apply(&ops.wc.adjoint(), opts.rank_rel_tol);
    let gram = x_r.adjoint() * x_r;
    let eig = HermitianEigen::new(&gram)?;
    if sys.n() == 0 {
        return Ok(CMat::zeros(0, 0));
    }
    let (lo, hi) = (eig.min(), eig.max());
    if hi.is_nan() || hi <= 0.0 || lo <= GRAMIAN_FLOOR * hi {
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        return Err(Error::SingularGramian { condition });
    }
    Ok(eig.reassemble(|lam| 1.0 / lam))
}

fn doubling(
    sys: &StateSpaceSystem,
    kind: CertificateKind,
    block: usize,
    opts: &StorageOptions,
    at: impl Fn(usize) -> Result<CMat>,
) -> Result<StorageCertificate> {
    check_stable(sys)?;
    let mut horizon = (2 * sys.n()).max(4);
    let mut h = at(horizon)?;
    let mut residual = f64::INFINITY;
    loop {
        let next = 2 * horizon;
        if next > opts.n_cap || next * block > opts.max_operator_dim {
            if opts.require_convergence {
                return Err(Error::NoConvergence { horizon, residual });
            }
            return Ok(StorageCertificate { h, kind, horizon, residual, converged: false });
        }
        let h_next = at(next)?;
        residual = linalg::frobenius(&(&h_next - &h));
        let scale = 1.0 + linalg::frobenius(&h);
        h = h_next;
        horizon = next;
        if residual <= opts.tol * scale {
            return Ok(StorageCertificate { h, kind, horizon, residual, converged: true });
        }
    }
}

/// The available-storage certificate `H_a` (minimal quadratic storage).
pub fn compute_ha(sys: &StateSpaceSystem, opts: &StorageOptions) -> Result<StorageCertificate> {
    doubling(sys, CertificateKind::Available, sys.p(), opts, |n| {
        available_storage_matrix(sys, n, opts)
    })
}

/// The regularized required-supply certificate `H_r` (maximal quadratic
/// storage). Needs a controllable system so that `H_r` is finite.
pub fn compute_hr(sys: &StateSpaceSystem, opts: &StorageOptions) -> Result<StorageCertificate> {
    doubling(sys, CertificateKind::Required, sys.m(), opts, |n| {
        required_supply_matrix(sys, n, opts)
    })
}

/// Per-step dissipation residuals of a quadratic storage along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipationTrace {
    pub residuals: Vec<f64>,
    /// Largest residual; `-inf` for an empty trajectory.
    pub max_residual: f64,
    pub strict_margin_used: f64,
}

/// Residuals
/// `r(k) = S_H(x(k+1)) - S_H(x(k)) + |y(k)|^2 - (1 - delta)|u(k)|^2 + delta |x(k)|^2`;
/// `H` is a (delta-strict) storage on the trajectory iff all are `<= 0`.
pub fn dissipation_trace(
    sys: &StateSpaceSystem,
    h: &CMat,
    traj: &SystemTrajectory,
    delta: f64,
) -> Result<DissipationTrace> {
    let n = sys.n();
    if h.shape() != (n, n) {
        return Err(Error::mismatch("H", format!("{n} x {n}"), format!("{} x {}", h.nrows(), h.ncols())));
    }
    if traj.direction != TimeDirection::Forward {
        return Err(Error::Precondition("dissipation is checked on forward trajectories".into()));
    }
    if traj.states.len() != traj.inputs.len() + 1 || traj.outputs.len() != traj.inputs.len() {
        return Err(Error::mismatch("trajectory", "states = inputs + 1 = outputs + 1", traj.states.len()));
    }
    let mut residuals = Vec::with_capacity(traj.len());
    for k in 0..traj.len() {
        let (x, x1) = (&traj.states[k], &traj.states[k + 1]);
        let (u, y) = (&traj.inputs[k], &traj.outputs[k]);
        if x.len() != n || u.len() != sys.m() || y.len() != sys.p() {
            return Err(Error::mismatch("trajectory step", "system dimensions", k));
        }
        let r = linalg::quadratic_form(h, x1) - linalg::quadratic_form(h, x) + y.norm_squared()
            - (1.0 - delta) * u.norm_squared()
            + delta * x.norm_squared();
        residuals.push(r);
    }
    let max_residual = residuals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(DissipationTrace { residuals, max_residual, strict_margin_used: delta })
}
