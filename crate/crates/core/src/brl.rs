//! Bounded Real Lemma workflows: the standard decision with an `H_a`
//! certificate, and the strict version through ε-regularization.
//!
//! The strict path augments the system so that its input and output maps are
//! surjective and injective,
//!
//! ```text
//!        | A    | B     εI_n |
//! M_ε =  |------+------------|
//!        | C    | D     0    |
//!        | εI_n | 0     0    |
//!        | 0    | εI_m  0    |
//! ```
//!
//! computes `H_a` for the augmented system, and drops the third block row and
//! column of its KYP gap. What remains is the original gap minus `ε² I`.

use crate::error::{Error, Result};
use crate::kyp::{kyp_gap, KypFlavor, KypReport, PSD_TOL};
use crate::linalg::{self, CMat};
use crate::storage::{compute_ha, CertificateKind, StorageCertificate, StorageOptions};
use crate::system::{hinf_norm, hinf_norm_detailed, minimality_report, spectral_radius, StateSpaceSystem};

pub const DEFAULT_SAFETY: f64 = 0.01;
/// Slack on `|F|_∞ <= 1` for the standard decision.
pub const SCHUR_SLACK: f64 = 1e-9;
const HINF_REL_TOL: f64 = 1e-9;
const MAX_EPSILON_HALVINGS: u32 = 60;
const FALLBACK_HALVINGS: u32 = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct BrlDecision {
    pub schur: bool,
    pub hinf: f64,
    pub certificate: Option<StorageCertificate>,
    pub kyp: Option<KypReport>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrictCertificate {
    pub epsilon: f64,
    pub h: CMat,
    /// Smallest eigenvalue of the original system's KYP gap at `h`.
    pub delta: f64,
    pub augmented_report: KypReport,
    pub strict_report: KypReport,
    pub horizon: usize,
}

/// Decides `|F|_∞ <= 1` for a minimal stable system, returning `H_a` as the
/// certificate when it holds.
pub fn standard_brl(sys: &StateSpaceSystem) -> Result<BrlDecision> {
    if sys.n() == 0 {
        let hinf = hinf_norm(sys, HINF_REL_TOL)?;
        let schur = hinf <= 1.0 + SCHUR_SLACK;
        let certificate = schur.then(|| StorageCertificate {
            h: CMat::zeros(0, 0),
            kind: CertificateKind::Available,
            horizon: 0,
            residual: 0.0,
            converged: true,
        });
        let kyp = if schur { Some(kyp_gap(sys, &CMat::zeros(0, 0), KypFlavor::Standard, 0.0)?) } else { None };
        let reason = if schur {
            format!("static gain with norm {hinf} <= 1")
        } else {
            format!("static gain with norm {hinf} > 1")
        };
        return Ok(BrlDecision { schur, hinf, certificate, kyp, reason });
    }
    let report = minimality_report(sys)?;
    if !report.minimal {
        return Err(Error::NotMinimal { reach_rank: report.reach_rank, obs_rank: report.obs_rank, n: sys.n() });
    }
    if report.spectral_radius >= 1.0 {
        return Err(Error::Unstable { spectral_radius: report.spectral_radius });
    }
    let est = hinf_norm_detailed(sys, HINF_REL_TOL)?;
    if est.norm > 1.0 + SCHUR_SLACK {
        return Ok(BrlDecision {
            schur: false,
            hinf: est.norm,
            certificate: None,
            kyp: None,
            reason: format!(
                "|F(e^(i theta))| = {} > 1 at theta = {} (lambda = {} + {}i)",
                est.norm,
                est.theta,
                est.theta.cos(),
                est.theta.sin()
            ),
        });
    }
    let cert = compute_ha(sys, &StorageOptions::default())?;
    let kyp = kyp_gap(sys, &cert.h, KypFlavor::Standard, 0.0)?;
    if !kyp.feasible {
        return Err(Error::Numerical(format!(
            "H_a failed KYP verification (min eigenvalue {:e})",
            kyp.min_eig
        )));
    }
    Ok(BrlDecision {
        schur: true,
        hinf: est.norm,
        reason: format!("H-infinity norm {} <= 1; certified by H_a at horizon {}", est.norm, cert.horizon),
        certificate: Some(cert),
        kyp: Some(kyp),
    })
}

/// The ε-augmented system: state dimension n, input dimension m + n,
/// output dimension p + n + m.
pub fn augment_system(sys: &StateSpaceSystem, epsilon: f64) -> StateSpaceSystem {
    let (n, m, p) = (sys.n(), sys.m(), sys.p());
    let eps_n = linalg::identity(n).map(|z| z * epsilon);
    let eps_m = linalg::identity(m).map(|z| z * epsilon);
    let b = linalg::hstack(&[sys.b(), &eps_n]);
    let c = linalg::vstack(&[sys.c(), &eps_n, &CMat::zeros(m, n)]);
    let mut d = CMat::zeros(p + n + m, m + n);
    d.view_mut((0, 0), (p, m)).copy_from(sys.d());
    d.view_mut((p + n, 0), (m, m)).copy_from(&eps_m);
    StateSpaceSystem::new(sys.a().clone(), b, c, d).expect("augmented blocks conform by construction")
}

/// Largest `ε = 2^{-k}` whose augmented system has `|F_ε|_∞ <= 1 - safety`.
///
/// If the original norm already exceeds `1 - safety` the target is relaxed
/// to the midpoint between that norm and 1.
pub fn choose_epsilon(sys: &StateSpaceSystem, safety: f64) -> Result<f64> {
    epsilon_search(sys, safety).map(|(epsilon, _)| epsilon)
}

/// Largest admissible ε together with the norm target it was checked against.
fn epsilon_search(sys: &StateSpaceSystem, safety: f64) -> Result<(f64, f64)> {
    if !(safety > 0.0 && safety < 1.0) {
        return Err(Error::Precondition(format!("safety must lie in (0, 1), got {safety}")));
    }
    let hinf = hinf_norm(sys, HINF_REL_TOL)?;
    if hinf >= 1.0 - SCHUR_SLACK {
        return Err(Error::NotStrictSchur { hinf });
    }
    let target = if hinf < 1.0 - safety { 1.0 - safety } else { 0.5 * (1.0 + hinf) };
    for k in 0..=MAX_EPSILON_HALVINGS {
        let epsilon = 0.5f64.powi(k as i32);
        if hinf_norm(&augment_system(sys, epsilon), HINF_REL_TOL)? <= target {
            return Ok((epsilon, target));
        }
    }
    Err(Error::Numerical("no admissible epsilon on the dyadic grid".into()))
}

/// `H_a` of the augmented system, halving ε while the doubling loop runs out
/// of operator budget. Near-lossless augmentations converge slowly.
fn augmented_certificate(
    sys: &StateSpaceSystem,
    safety: f64,
    opts: &StorageOptions,
) -> Result<(f64, StateSpaceSystem, StorageCertificate)> {
    let (mut epsilon, target) = epsilon_search(sys, safety)?;
    let mut last = None;
    for _ in 0..=FALLBACK_HALVINGS {
        let aug = augment_system(sys, epsilon);
        if last.is_none() || hinf_norm(&aug, HINF_REL_TOL)? <= target {
            match compute_ha(&aug, opts) {
                Ok(cert) => return Ok((epsilon, aug, cert)),
                Err(e @ Error::NoConvergence { .. }) => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        epsilon *= 0.5;
    }
    Err(last.expect("at least one attempt"))
}

/// Rows and columns `0..n+m` of the augmented KYP gap, i.e. the gap with its
/// third block row and column removed.
pub fn reduced_augmented_gap(augmented_gap: &CMat, n: usize, m: usize) -> CMat {
    augmented_gap.view((0, 0), (n + m, n + m)).into_owned()
}

pub fn strict_brl(sys: &StateSpaceSystem) -> Result<StrictCertificate> {
    strict_brl_with(sys, DEFAULT_SAFETY, &StorageOptions::default())
}

/// Strict Bounded Real Lemma: for a stable system with `|F|_∞ < 1`, returns
/// a positive-definite `H` with `diag(H, I) - M* diag(H, I) M ⪰ ε² I`.
pub fn strict_brl_with(sys: &StateSpaceSystem, safety: f64, opts: &StorageOptions) -> Result<StrictCertificate> {
    let rho = spectral_radius(sys)?;
    if rho >= 1.0 {
        return Err(Error::Unstable { spectral_radius: rho });
    }
    let (epsilon, aug, cert) = augmented_certificate(sys, safety, opts)?;
    let augmented_report = kyp_gap(&aug, &cert.h, KypFlavor::Standard, 0.0)?;
    if !augmented_report.feasible {
        return Err(Error::Numerical(format!(
            "augmented KYP verification failed (min eigenvalue {:e})",
            augmented_report.min_eig
        )));
    }
    let eps2 = epsilon * epsilon;
    let strict_report = kyp_gap(sys, &cert.h, KypFlavor::Strict, eps2)?;
    let delta = strict_report.min_eig;
    if delta < eps2 - PSD_TOL {
        return Err(Error::Numerical(format!("strict margin {delta:e} below epsilon^2 = {eps2:e}")));
    }
    if sys.n() > 0 && linalg::min_eigenvalue(&cert.h)? <= 0.0 {
        return Err(Error::Numerical("strict certificate is not positive definite".into()));
    }
    Ok(StrictCertificate {
        epsilon,
        h: cert.h,
        delta,
        augmented_report,
        strict_report,
        horizon: cert.horizon,
    })
}

/// Upper bound on `|F|_∞` implied by a strict margin `delta`.
pub fn norm_bound_from_margin(delta: f64) -> f64 {
    (1.0 - delta).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_rows;

    fn scalar_example() -> StateSpaceSystem {
        StateSpaceSystem::scalar(0.5, 1.0, 0.25, 0.0)
    }

    #[test]
    fn standard_decisions() {
        let d = standard_brl(&scalar_example()).unwrap();
        assert!(d.schur);
        let h = d.certificate.unwrap().h[(0, 0)].re;
        assert!((h - 0.086_032_788_563_762_56).abs() < 1e-5);

        let d = standard_brl(&StateSpaceSystem::scalar(0.5, 1.0, 1.0, 0.0)).unwrap();
        assert!(!d.schur);
        assert!((d.hinf - 2.0).abs() < 1e-6);

        let hidden = StateSpaceSystem::new(CMat::zeros(1, 1), CMat::zeros(1, 1), CMat::zeros(1, 1), from_rows(&[&[0.3]])).unwrap();
        assert!(matches!(standard_brl(&hidden), Err(Error::NotMinimal { .. })));

        let ft = StateSpaceSystem::feedthrough(from_rows(&[&[0.3]])).unwrap();
        let d = standard_brl(&ft).unwrap();
        assert!(d.schur);
        assert_eq!(d.certificate.unwrap().h.shape(), (0, 0));
    }

    #[test]
    fn augmented_dimensions_and_blocks() {
        let aug = augment_system(&scalar_example(), 0.5);
        assert_eq!((aug.n(), aug.m(), aug.p()), (1, 2, 3));
        assert_eq!(aug.d()[(0, 0)], *scalar_example().d().index((0, 0)));
        assert_eq!(aug.d()[(2, 0)].re, 0.5);
        assert_eq!(aug.b()[(0, 1)].re, 0.5);
        assert_eq!(aug.c()[(1, 0)].re, 0.5);
    }

    #[test]
    fn epsilon_choice() {
        let eps = choose_epsilon(&scalar_example(), 0.01).unwrap();
        assert!(eps >= 0.5f64.powi(12));
        assert!(hinf_norm(&augment_system(&scalar_example(), eps), 1e-9).unwrap() <= 0.99);
        assert!(matches!(
            choose_epsilon(&StateSpaceSystem::scalar(0.5, 1.0, 1.0, 0.0), 0.01),
            Err(Error::NotStrictSchur { .. })
        ));
        let ft = StateSpaceSystem::feedthrough(from_rows(&[&[0.3]])).unwrap();
        let eps = choose_epsilon(&ft, 0.01).unwrap();
        assert!(eps <= (1.0f64 - 0.09).sqrt());
    }

    #[test]
    fn strict_scalar_pipeline() {
        let cert = strict_brl(&scalar_example()).unwrap();
        let eps2 = cert.epsilon * cert.epsilon;
        assert!(cert.delta >= eps2 - PSD_TOL);
        assert!(kyp_gap(&scalar_example(), &cert.h, KypFlavor::Strict, eps2).unwrap().feasible);
        let bound = norm_bound_from_margin(cert.delta);
        assert!(hinf_norm(&scalar_example(), 1e-9).unwrap() <= bound + 1e-6);
    }

    #[test]
    fn strict_refuses_unstable_and_non_strict() {
        let unstable = StateSpaceSystem::scalar(1.0, 1.0, 0.1, 0.0);
        assert!(matches!(strict_brl(&unstable), Err(Error::Unstable { .. })));
        let big = StateSpaceSystem::scalar(0.5, 1.0, 1.0, 0.0);
        assert!(matches!(strict_brl(&big), Err(Error::NotStrictSchur { .. })));
    }

    #[test]
    fn epsilon_is_halved_when_the_operator_budget_runs_out() {
        let sys = StateSpaceSystem::scalar(0.3, 1.0, 0.2, 0.0);
        assert_eq!(choose_epsilon(&sys, 0.01).unwrap(), 0.5);
        let opts = StorageOptions { max_operator_dim: 48, ..StorageOptions::default() };
        let cert = strict_brl_with(&sys, 0.01, &opts).unwrap();
        assert_eq!(cert.epsilon, 0.25);
        assert!(cert.delta >= 0.0625 - PSD_TOL);
        let tiny = StorageOptions { max_operator_dim: 16, ..StorageOptions::default() };
        assert!(matches!(strict_brl_with(&sys, 0.01, &tiny), Err(Error::NoConvergence { .. })));
    }
}
