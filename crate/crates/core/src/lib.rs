//! Storage functions and KYP certificates for discrete-time linear systems.
//!
//! A system `x(k+1) = A x(k) + B u(k)`, `y(k) = C x(k) + D u(k)` is
//! dissipative for the supply rate `|u|² - |y|²` when some `H ⪰ 0` satisfies
//! the KYP inequality `diag(H, I) - M* diag(H, I) M ⪰ 0`, with `M` the
//! system matrix. This crate computes the available storage `H_a` and the
//! required supply `H_r` (the smallest and largest such `H`) from truncated
//! Hankel/Toeplitz operators, checks KYP residuals, and builds strict
//! certificates through ε-regularization.
//!
//! ```
//! use kyp_core::{compute_ha, kyp_gap, KypFlavor, StateSpaceSystem, StorageOptions};
//!
//! let sys = StateSpaceSystem::scalar(0.5, 1.0, 0.25, 0.0);
//! let ha = compute_ha(&sys, &StorageOptions::default()).unwrap();
//! assert!((ha.h[(0, 0)].re - 0.0860327885637626).abs() < 1e-6);
//! assert!(kyp_gap(&sys, &ha.h, KypFlavor::Standard, 0.0).unwrap().feasible);
//! ```

pub mod brl;
pub mod error;
pub mod format;
pub mod kyp;
pub mod linalg;
pub mod operators;
pub mod random;
pub mod storage;
pub mod system;

pub use brl::{augment_system, choose_epsilon, standard_brl, strict_brl, strict_brl_with, BrlDecision, StrictCertificate};
pub use error::{Error, Result};
pub use kyp::{dual_solution, kyp_gap, loewner_leq, ordering_chain_check, KypFlavor, KypReport};
pub use linalg::{CMat, CVec};
pub use operators::{build_operator_set, defect, hermitian_pinv, pinv, DefectOperator, TruncatedOperatorSet};
pub use storage::{
    available_storage, compute_ha, compute_hr, dissipation_trace, regularized_required_supply, CertificateKind,
    DissipationTrace, StorageCertificate, StorageEvaluator, StorageOptions,
};
pub use system::{
    adjoint_system, hinf_norm, minimality_report, simulate, spectral_radius, transfer_value, StateSpaceSystem,
    SystemTrajectory, TimeDirection,
};
