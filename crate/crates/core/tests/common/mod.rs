//! Shared corpus generator and independent oracles for integration tests.
//!
//! The oracles never touch the truncated Hankel/Toeplitz machinery: storage
//! matrices come from the finite-horizon Riccati value recursion and scalar
//! roots from the closed-form quadratic.
#![allow(dead_code)]

use kyp_core::linalg::{self, CMat, CVec};
use kyp_core::{hinf_norm, spectral_radius, StateSpaceSystem};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn real_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| Complex64::new(rng.random_range(-1.0..1.0), 0.0))
}

pub fn real_vector(rng: &mut ChaCha8Rng, len: usize) -> CVec {
    CVec::from_fn(len, |_, _| Complex64::new(rng.random_range(-1.0..1.0), 0.0))
}

/// Realizations whose Gramians are worse conditioned than this are redrawn;
/// near-unreachable states push `H_r` to norms where an absolute 1e-9 gap
/// floor is below double-precision resolution.
pub const MAX_GRAMIAN_CONDITION: f64 = 1e4;

/// Reachability and observability Gramians by summing the Stein series.
pub fn gramians(sys: &StateSpaceSystem) -> (CMat, CMat) {
    let n = sys.n();
    let (mut wc, mut wo) = (CMat::zeros(n, n), CMat::zeros(n, n));
    let mut ak = linalg::identity(n);
    for _ in 0..2000 {
        let (ab, ca) = (&ak * sys.b(), sys.c() * &ak);
        wc += &ab * ab.adjoint();
        wo += ca.adjoint() * &ca;
        ak = sys.a() * ak;
        if linalg::max_abs(&ak) < 1e-18 {
            break;
        }
    }
    (wc, wo)
}

pub fn condition(h: &CMat) -> f64 {
    let e = linalg::HermitianEigen::new(h).unwrap();
    if e.min() <= 0.0 {
        f64::INFINITY
    } else {
        e.max() / e.min()
    }
}

/// A random real system with spectral radius exactly `rho` and H∞ norm
/// `target` (C and D are rescaled together, which scales F uniformly).
/// `None` when the draw is degenerate or badly conditioned.
pub fn random_system(rng: &mut ChaCha8Rng, n: usize, m: usize, p: usize, rho: f64, target: f64) -> Option<StateSpaceSystem> {
    let a = real_matrix(rng, n, n);
    let b = real_matrix(rng, n, m);
    let c = real_matrix(rng, p, n);
    let d = real_matrix(rng, p, m).map(|z| z * 0.3);
    let r = spectral_radius(&StateSpaceSystem::new(a.clone(), b.clone(), c.clone(), d.clone()).unwrap()).unwrap();
    if r < 1e-3 {
        return None;
    }
    let a = a.map(|z| z * (rho / r));
    let g = hinf_norm(&StateSpaceSystem::new(a.clone(), b.clone(), c.clone(), d.clone()).unwrap(), 1e-10).unwrap();
    if g < 1e-6 {
        return None;
    }
    let s = target / g;
    let sys = StateSpaceSystem::new(a, b, c.map(|z| z * s), d.map(|z| z * s)).unwrap();
    let (wc, wo) = gramians(&sys);
    (condition(&wc) <= MAX_GRAMIAN_CONDITION && condition(&wo) <= MAX_GRAMIAN_CONDITION).then_some(sys)
}

/// Random dimensions n in 1..=6, m, p in 1..=3 and a random realization with
/// spectral radius in [0.3, 0.75] and H∞ norm in `hinf_range`.
pub fn corpus_system(rng: &mut ChaCha8Rng, hinf_range: (f64, f64)) -> StateSpaceSystem {
    loop {
        let n = rng.random_range(1..=6);
        let m = rng.random_range(1..=3);
        let p = rng.random_range(1..=3);
        let rho = rng.random_range(0.3..0.75);
        let target = rng.random_range(hinf_range.0..=hinf_range.1);
        if let Some(sys) = random_system(rng, n, m, p, rho, target) {
            return sys;
        }
    }
}

pub fn corpus(seed: u64, count: usize, hinf_range: (f64, f64)) -> Vec<StateSpaceSystem> {
    let mut r = rng(seed);
    (0..count).map(|_| corpus_system(&mut r, hinf_range)).collect()
}

/// Finite-horizon available storage by dynamic programming:
/// `V_{k+1}(x) = sup_u |Cx + Du|^2 - |u|^2 + V_k(Ax + Bu)` with `V_0 = 0`.
/// Each `V_k` is the quadratic form of `P_k`.
pub fn riccati_available(sys: &StateSpaceSystem, steps: usize) -> CMat {
    let (a, b, c, d) = (sys.a(), sys.b(), sys.c(), sys.d());
    let n = sys.n();
    let mut p = CMat::zeros(n, n);
    for _ in 0..steps {
        let r = linalg::identity(sys.m()) - d.adjoint() * d - b.adjoint() * &p * b;
        let s = b.adjoint() * &p * a + d.adjoint() * c;
        let gain = r.lu().solve(&s).expect("Riccati weight is invertible for contractive systems");
        let next = a.adjoint() * &p * a + c.adjoint() * c + s.adjoint() * gain;
        p = linalg::hermitian_part(&next);
    }
    p
}

/// Iterates the Riccati recursion until successive iterates agree.
pub fn riccati_available_limit(sys: &StateSpaceSystem) -> CMat {
    let mut p = riccati_available(sys, 1);
    for _ in 0..20_000 {
        let next = riccati_available_step(sys, &p);
        let done = linalg::frobenius(&(&next - &p)) <= 1e-15 * (1.0 + linalg::frobenius(&next));
        p = next;
        if done {
            break;
        }
    }
    p
}

fn riccati_available_step(sys: &StateSpaceSystem, p: &CMat) -> CMat {
    let (a, b, c, d) = (sys.a(), sys.b(), sys.c(), sys.d());
    let r = linalg::identity(sys.m()) - d.adjoint() * d - b.adjoint() * p * b;
    let s = b.adjoint() * p * a + d.adjoint() * c;
    let gain = r.lu().solve(&s).unwrap();
    linalg::hermitian_part(&(a.adjoint() * p * a + c.adjoint() * c + s.adjoint() * gain))
}

/// Roots of `a h^2 + b h + c = 0`, smaller first.
pub fn quadratic_roots(a: f64, b: f64, c: f64) -> (f64, f64) {
    let disc = (b * b - 4.0 * a * c).sqrt();
    // Stable form: avoids cancellation in the smaller root.
    let q = -0.5 * (b + b.signum() * disc);
    let (r1, r2) = (q / a, c / q);
    (r1.min(r2), r1.max(r2))
}

/// For the scalar system (a, b, c, 0) the KYP gap at h is
/// `[[h - a^2 h - c^2, -a b h], [-a b h, 1 - b^2 h]]`; its determinant is a
/// quadratic in h whose roots are the extremal storages.
pub fn scalar_extremal_roots(a: f64, b: f64, c: f64) -> (f64, f64) {
    // det = (h(1 - a^2) - c^2)(1 - b^2 h) - a^2 b^2 h^2
    let qa = -(1.0 - a * a) * b * b - a * a * b * b;
    let qb = (1.0 - a * a) + c * c * b * b;
    let qc = -c * c;
    quadratic_roots(qa, qb, qc)
}

/// Transfer function of the ε-augmented system in block form,
/// `[[F, ε λ C R], [ε λ R B, ε² λ R], [ε I, 0]]` with `R = (I - λA)^{-1}`.
pub fn augmented_transfer_blocks(sys: &StateSpaceSystem, eps: f64, lambda: Complex64) -> CMat {
    let (n, m, p) = (sys.n(), sys.m(), sys.p());
    let pencil = linalg::identity(n) - sys.a().map(|z| z * lambda);
    let r = pencil.try_inverse().unwrap();
    let f = sys.d() + (sys.c() * &r * sys.b()).map(|z| z * lambda);
    let e = Complex64::new(eps, 0.0);
    let mut out = CMat::zeros(p + n + m, m + n);
    out.view_mut((0, 0), (p, m)).copy_from(&f);
    out.view_mut((0, m), (p, n)).copy_from(&(sys.c() * &r).map(|z| z * lambda * e));
    out.view_mut((p, 0), (n, m)).copy_from(&(&r * sys.b()).map(|z| z * lambda * e));
    out.view_mut((p, m), (n, n)).copy_from(&r.map(|z| z * lambda * e * e));
    out.view_mut((p + n, 0), (m, m)).copy_from(&linalg::identity(m).map(|z| z * e));
    out
}

pub fn unit_circle(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}
