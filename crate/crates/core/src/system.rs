//! Discrete-time state-space systems: simulation, transfer-function evaluation,
//! stability and minimality.
//!
//! A system is the quadruple `(A, B, C, D)` acting as
//!
//! ```text
//! x(k+1) = A x(k) + B u(k)
//! y(k)   = C x(k) + D u(k)
//! ```
//!
//! All blocks are stored as complex matrices; real data is promoted on
//! construction. A state dimension of zero (pure feedthrough) is allowed.

use std::f64::consts::PI;

use nalgebra::Schur;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};

/// Relative singular-value threshold for numerical rank.
pub const RANK_REL_TOL: f64 = 1e-10;
/// `hinf_norm` refuses systems with spectral radius at or above `1 - STABILITY_MARGIN`.
pub const STABILITY_MARGIN: f64 = 1e-9;
/// Condition number above which `I - lambda*A` is treated as singular.
pub const RESOLVENT_COND_LIMIT: f64 = 1e12;
/// Number of uniform circle samples used before local refinement.
pub const HINF_GRID_POINTS: usize = 4096;
const HINF_BRACKETS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceSystem {
    a: CMat,
    b: CMat,
    c: CMat,
    d: CMat,
}

impl StateSpaceSystem {
    /// Validates conformance (`A` n×n, `B` n×m, `C` p×n, `D` p×m with m, p ≥ 1)
    /// and finiteness of every entry.
    pub fn new(a: CMat, b: CMat, c: CMat, d: CMat) -> Result<Self> {
        let (p, m) = d.shape();
        if m == 0 || p == 0 {
            return Err(Error::mismatch("D", "p x m with m, p >= 1", format!("{p} x {m}")));
        }
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::mismatch("A", "square", format!("{} x {}", a.nrows(), a.ncols())));
        }
        if b.shape() != (n, m) {
            return Err(Error::mismatch("B", format!("{n} x {m}"), format!("{} x {}", b.nrows(), b.ncols())));
        }
        if c.shape() != (p, n) {
            return Err(Error::mismatch("C", format!("{p} x {n}"), format!("{} x {}", c.nrows(), c.ncols())));
        }
        for (name, blk) in [("A", &a), ("B", &b), ("C", &c), ("D", &d)] {
            if !linalg::all_finite(blk) {
                return Err(Error::NonFinite(name.to_string()));
            }
        }
        Ok(Self { a, b, c, d })
    }

    pub fn from_real(
        a: &nalgebra::DMatrix<f64>,
        b: &nalgebra::DMatrix<f64>,
        c: &nalgebra::DMatrix<f64>,
        d: &nalgebra::DMatrix<f64>,
    ) -> Result<Self> {
        Self::new(linalg::from_real(a), linalg::from_real(b), linalg::from_real(c), linalg::from_real(d))
    }

    /// Single-state, single-input, single-output system with real entries.
    pub fn scalar(a: f64, b: f64, c: f64, d: f64) -> Self {
        let one = |x: f64| CMat::from_element(1, 1, linalg::c(x));
        Self::new(one(a), one(b), one(c), one(d)).expect("scalar blocks always conform")
    }

    /// Pure feedthrough `y = D u` with no state.
    pub fn feedthrough(d: CMat) -> Result<Self> {
        let (p, m) = d.shape();
        Self::new(CMat::zeros(0, 0), CMat::zeros(0, m), CMat::zeros(p, 0), d)
    }

    pub fn a(&self) -> &CMat {
        &self.a
    }
    pub fn b(&self) -> &CMat {
        &self.b
    }
    pub fn c(&self) -> &CMat {
        &self.c
    }
    pub fn d(&self) -> &CMat {
        &self.d
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    /// Input dimension.
    pub fn m(&self) -> usize {
        self.d.ncols()
    }
    /// Output dimension.
    pub fn p(&self) -> usize {
        self.d.nrows()
    }

    /// The system matrix `[[A, B], [C, D]]`.
    pub fn system_matrix(&self) -> CMat {
        let top = linalg::hstack(&[&self.a, &self.b]);
        let bottom = linalg::hstack(&[&self.c, &self.d]);
        linalg::vstack(&[&top, &bottom])
    }

    pub fn is_real(&self) -> bool {
        [&self.a, &self.b, &self.c, &self.d].iter().all(|m| linalg::is_real(m))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeDirection {
    Forward,
    Backward,
}

/// Aligned input/state/output sequences.
///
/// For a forward trajectory, entry `k` belongs to time `start_index + k`; for a
/// backward (adjoint) trajectory it belongs to time `start_index - k`, with
/// `states[k + 1]` the state one step further into the past.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemTrajectory {
    pub start_index: i64,
    pub direction: TimeDirection,
    pub inputs: Vec<CVec>,
    pub states: Vec<CVec>,
    pub outputs: Vec<CVec>,
}

impl SystemTrajectory {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Time index of step `k`.
    pub fn time_of(&self, k: usize) -> i64 {
        match self.direction {
            TimeDirection::Forward => self.start_index + k as i64,
            TimeDirection::Backward => self.start_index - k as i64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimalityReport {
    pub reach_rank: usize,
    pub obs_rank: usize,
    pub controllable: bool,
    pub observable: bool,
    pub minimal: bool,
    pub spectral_radius: f64,
}

fn check_len(name: &str, v: &CVec, expected: usize) -> Result<()> {
    if v.len() != expected {
        return Err(Error::mismatch(name, expected, v.len()));
    }
    Ok(())
}

/// Runs the state recursion from `x(n0) = x0`.
pub fn simulate(sys: &StateSpaceSystem, x0: &CVec, inputs: &[CVec], n0: i64) -> Result<SystemTrajectory> {
    check_len("x0", x0, sys.n())?;
    let mut states = Vec::with_capacity(inputs.len() + 1);
    let mut outputs = Vec::with_capacity(inputs.len());
    states.push(x0.clone());
    for (k, u) in inputs.iter().enumerate() {
        check_len(&format!("input {k}"), u, sys.m())?;
        let x = &states[k];
        outputs.push(&sys.c * x + &sys.d * u);
        let next = &sys.a * x + &sys.b * u;
        states.push(next);
    }
    Ok(SystemTrajectory {
        start_index: n0,
        direction: TimeDirection::Forward,
        inputs: inputs.to_vec(),
        states,
        outputs,
    })
}

/// Runs the backward-time dual recursion
/// `x*(k-1) = A* x*(k) + C* u*(k)`, `y*(k) = B* x*(k) + D* u*(k)`
/// from `x*(n_final) = x_final`; `inputs[j]` is applied at time `n_final - j`.
pub fn simulate_adjoint(
    sys: &StateSpaceSystem,
    x_final: &CVec,
    inputs: &[CVec],
    n_final: i64,
) -> Result<SystemTrajectory> {
    check_len("x_final", x_final, sys.n())?;
    let a_adj = sys.a.adjoint();
    let b_adj = sys.b.adjoint();
    let c_adj = sys.c.adjoint();
    let d_adj = sys.d.adjoint();
    let mut states = Vec::with_capacity(inputs.len() + 1);
    let mut outputs = Vec::with_capacity(inputs.len());
    states.push(x_final.clone());
    for (k, u) in inputs.iter().enumerate() {
        check_len(&format!("input {k}"), u, sys.p())?;
        let x = &states[k];
        outputs.push(&b_adj * x + &d_adj * u);
        let prev = &a_adj * x + &c_adj * u;
        states.push(prev);
    }
    Ok(SystemTrajectory {
        start_index: n_final,
        direction: TimeDirection::Backward,
        inputs: inputs.to_vec(),
        states,
        outputs,
    })
}

fn resolvent_solve(a: &CMat, lambda: Complex64, rhs: &CMat) -> Result<CMat> {
    let n = a.nrows();
    let pencil = linalg::identity(n) - a.map(|z| z * lambda);
    let sv = linalg::singular_values(&pencil)?;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition > RESOLVENT_COND_LIMIT {
        return Err(Error::SingularResolvent { condition });
    }
    pencil
        .lu()
        .solve(rhs)
        .ok_or(Error::SingularResolvent { condition })
}

/// `F(lambda) = D + lambda C (I - lambda A)^{-1} B`.
pub fn transfer_value(sys: &StateSpaceSystem, lambda: Complex64) -> Result<CMat> {
    if sys.n() == 0 || lambda == Complex64::new(0.0, 0.0) {
        return Ok(sys.d.clone());
    }
    let x = resolvent_solve(&sys.a, lambda, &sys.b)?;
    Ok(&sys.d + (&sys.c * x).map(|z| z * lambda))
}

/// Transfer function of the backward-time dual system,
/// `D* + B* (lambda I - A*)^{-1} C*`, analytic near infinity.
///
/// Agrees with `transfer_value(sys, 1 / conj(lambda))*`.
pub fn dual_transfer_value(sys: &StateSpaceSystem, lambda: Complex64) -> Result<CMat> {
    let d_adj = sys.d.adjoint();
    if sys.n() == 0 {
        return Ok(d_adj);
    }
    if lambda.norm() == 0.0 {
        return Err(Error::Precondition("dual transfer function is evaluated away from 0".into()));
    }
    // (lambda I - A*)^{-1} = lambda^{-1} (I - lambda^{-1} A*)^{-1}
    let inv = Complex64::new(1.0, 0.0) / lambda;
    let x = resolvent_solve(&sys.a.adjoint(), inv, &sys.c.adjoint())?;
    Ok(d_adj + (sys.b.adjoint() * x).map(|z| z * inv))
}

/// Eigenvalues of `A` via complex Schur decomposition.
pub fn eigenvalues(sys: &StateSpaceSystem) -> Result<Vec<Complex64>> {
    let n = sys.n();
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(sys.a.clone(), 1e-15, 0)
        .ok_or_else(|| Error::Numerical("Schur decomposition failed".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

pub fn spectral_radius(sys: &StateSpaceSystem) -> Result<f64> {
    Ok(eigenvalues(sys)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// `[B, AB, ..., A^{n-1} B]`.
pub fn reachability_matrix(sys: &StateSpaceSystem) -> CMat {
    let n = sys.n();
    let mut blocks = Vec::with_capacity(n);
    let mut cur = sys.b.clone();
    for _ in 0..n {
        let next = &sys.a * &cur;
        blocks.push(cur);
        cur = next;
    }
    let refs: Vec<&CMat> = blocks.iter().collect();
    if refs.is_empty() {
        return CMat::zeros(0, 0);
    }
    linalg::hstack(&refs)
}

/// `[C; CA; ...; CA^{n-1}]`.
pub fn observability_matrix(sys: &StateSpaceSystem) -> CMat {
    let n = sys.n();
    let mut blocks = Vec::with_capacity(n);
    let mut cur = sys.c.clone();
    for _ in 0..n {
        let next = &cur * &sys.a;
        blocks.push(cur);
        cur = next;
    }
    let refs: Vec<&CMat> = blocks.iter().collect();
    if refs.is_empty() {
        return CMat::zeros(0, 0);
    }
    linalg::vstack(&refs)
}

pub fn minimality_report(sys: &StateSpaceSystem) -> Result<MinimalityReport> {
    let n = sys.n();
    let reach_rank = linalg::rank(&reachability_matrix(sys), RANK_REL_TOL)?;
    let obs_rank = linalg::rank(&observability_matrix(sys), RANK_REL_TOL)?;
    let controllable = reach_rank == n;
    let observable = obs_rank == n;
    Ok(MinimalityReport {
        reach_rank,
        obs_rank,
        controllable,
        observable,
        minimal: controllable && observable,
        spectral_radius: spectral_radius(sys)?,
    })
}

/// The dual system `(A*, C*, B*, D*)`: input dimension p, output dimension m.
pub fn adjoint_system(sys: &StateSpaceSystem) -> StateSpaceSystem {
    StateSpaceSystem {
        a: sys.a.adjoint(),
        b: sys.c.adjoint(),
        c: sys.b.adjoint(),
        d: sys.d.adjoint(),
    }
}

/// Peak gain on the unit circle together with the angle where it is attained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HinfEstimate {
    pub norm: f64,
    pub theta: f64,
}

fn gain_at(sys: &StateSpaceSystem, theta: f64) -> Result<f64> {
    let f = transfer_value(sys, Complex64::from_polar(1.0, theta))?;
    linalg::spectral_norm(&f)
}

/// Supremum of the largest singular value of `F` over the unit circle.
///
/// Samples `HINF_GRID_POINTS` equispaced angles, then golden-section refines
/// the brackets around the three largest local maxima until the bracket is
/// narrower than `rel_tol * 2π`.
pub fn hinf_norm_detailed(sys: &StateSpaceSystem, rel_tol: f64) -> Result<HinfEstimate> {
    let rho = spectral_radius(sys)?;
    if rho >= 1.0 - STABILITY_MARGIN {
        return Err(Error::Unstable { spectral_radius: rho });
    }
    if sys.n() == 0 {
        return Ok(HinfEstimate {
            norm: linalg::spectral_norm(&sys.d)?,
            theta: 0.0,
        });
    }
    let step = 2.0 * PI / HINF_GRID_POINTS as f64;
    let samples: Vec<f64> = (0..HINF_GRID_POINTS)
        .map(|k| gain_at(sys, k as f64 * step))
        .collect::<Result<_>>()?;

    let mut peaks: Vec<usize> = (0..HINF_GRID_POINTS)
        .filter(|&k| {
            let prev = samples[(k + HINF_GRID_POINTS - 1) % HINF_GRID_POINTS];
            let next = samples[(k + 1) % HINF_GRID_POINTS];
            samples[k] >= prev && samples[k] >= next
        })
        .collect();
    peaks.sort_by(|&i, &j| samples[j].total_cmp(&samples[i]));
    peaks.truncate(HINF_BRACKETS);

    let mut best = HinfEstimate { norm: 0.0, theta: 0.0 };
    for (k, &v) in samples.iter().enumerate() {
        if v > best.norm {
            best = HinfEstimate { norm: v, theta: k as f64 * step };
        }
    }

    let width_goal = (rel_tol * 2.0 * PI).max(f64::EPSILON);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    for k in peaks {
        let center = k as f64 * step;
        let (mut lo, mut hi) = (center - step, center + step);
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let mut f1 = gain_at(sys, x1)?;
        let mut f2 = gain_at(sys, x2)?;
        let mut iter = 0;
        while hi - lo > width_goal && iter < 200 {
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = gain_at(sys, x2)?;
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = gain_at(sys, x1)?;
            }
            iter += 1;
        }
        for (theta, v) in [(x1, f1), (x2, f2)] {
            if v > best.norm {
                best = HinfEstimate { norm: v, theta: theta.rem_euclid(2.0 * PI) };
            }
        }
    }
    Ok(best)
}

pub fn hinf_norm(sys: &StateSpaceSystem, rel_tol: f64) -> Result<f64> {
    Ok(hinf_norm_detailed(sys, rel_tol)?.norm)
}

/// Markov parameters `D, CB, CAB, ...` (the Taylor coefficients of `F` at 0).
pub fn taylor_coefficients(sys: &StateSpaceSystem, count: usize) -> Vec<CMat> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    out.push(sys.d.clone());
    let mut ak_b = sys.b.clone();
    for _ in 1..count {
        out.push(&sys.c * &ak_b);
        ak_b = &sys.a * ak_b;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, from_rows, real_vec};

    fn scalar_example() -> StateSpaceSystem {
        StateSpaceSystem::scalar(0.5, 1.0, 0.25, 0.0)
    }

    fn reals(vs: &[CVec]) -> Vec<Vec<f64>> {
        vs.iter().map(|v| v.iter().map(|z| z.re).collect()).collect()
    }

    #[test]
    fn rejects_nonconforming_blocks() {
        let err = StateSpaceSystem::new(
            from_rows(&[&[0.5]]),
            from_rows(&[&[1.0], &[0.0]]),
            from_rows(&[&[1.0]]),
            from_rows(&[&[0.0]]),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { ref block, .. } if block == "B"));
    }

    #[test]
    fn rejects_non_finite() {
        let err = StateSpaceSystem::new(
            from_rows(&[&[f64::NAN]]),
            from_rows(&[&[1.0]]),
            from_rows(&[&[1.0]]),
            from_rows(&[&[0.0]]),
        )
        .unwrap_err();
        assert_eq!(err, Error::NonFinite("A".into()));
    }

    #[test]
    fn unit_delay() {
        let sys = StateSpaceSystem::scalar(0.0, 1.0, 1.0, 0.0);
        let inputs = [1.0, 0.0, 0.0].map(|u| real_vec(&[u]));
        let traj = simulate(&sys, &real_vec(&[0.0]), &inputs, 0).unwrap();
        assert_eq!(reals(&traj.outputs), vec![vec![0.0], vec![1.0], vec![0.0]]);
    }

    #[test]
    fn empty_input_gives_single_state() {
        let sys = scalar_example();
        let traj = simulate(&sys, &real_vec(&[3.0]), &[], 7).unwrap();
        assert_eq!(traj.states.len(), 1);
        assert!(traj.outputs.is_empty());
        assert_eq!(traj.states[0], real_vec(&[3.0]));
    }

    #[test]
    fn two_hand_steps() {
        let sys = scalar_example();
        let inputs = [1.0, 0.0].map(|u| real_vec(&[u]));
        let traj = simulate(&sys, &real_vec(&[0.0]), &inputs, 0).unwrap();
        assert_eq!(reals(&traj.states), vec![vec![0.0], vec![1.0], vec![0.5]]);
        assert_eq!(reals(&traj.outputs), vec![vec![0.0], vec![0.25]]);
    }

    #[test]
    fn simulate_checks_dimensions() {
        let sys = scalar_example();
        assert!(simulate(&sys, &real_vec(&[0.0, 1.0]), &[], 0).is_err());
        assert!(simulate(&sys, &real_vec(&[0.0]), &[real_vec(&[1.0, 2.0])], 0).is_err());
    }

    #[test]
    fn adjoint_homogeneous_recursion() {
        let sys = StateSpaceSystem::new(
            from_rows(&[&[0.5, 0.2], &[0.0, 0.3]]),
            from_rows(&[&[1.0], &[2.0]]),
            from_rows(&[&[1.0, -1.0]]),
            from_rows(&[&[0.1]]),
        )
        .unwrap();
        let xf = real_vec(&[1.0, -2.0]);
        let zeros: Vec<CVec> = (0..4).map(|_| real_vec(&[0.0])).collect();
        let traj = simulate_adjoint(&sys, &xf, &zeros, 0).unwrap();
        let a_adj = sys.a().adjoint();
        let mut x = xf.clone();
        for k in 0..4 {
            assert!((&traj.states[k] - &x).norm() < 1e-15);
            let y = sys.b().adjoint() * &x;
            assert!((&traj.outputs[k] - y).norm() < 1e-15);
            x = &a_adj * x;
        }
        assert_eq!(traj.time_of(3), -3);
    }

    #[test]
    fn adjoint_matches_forward_simulation_of_dual_system() {
        let sys = StateSpaceSystem::new(
            from_rows(&[&[0.5, 0.2], &[0.1, 0.3]]),
            from_rows(&[&[1.0, 0.0], &[2.0, 1.0]]),
            from_rows(&[&[1.0, -1.0]]),
            from_rows(&[&[0.1, 0.4]]),
        )
        .unwrap();
        let xf = real_vec(&[1.0, -2.0]);
        let inputs: Vec<CVec> = [0.3, -1.0, 0.7].iter().map(|&u| real_vec(&[u])).collect();
        let back = simulate_adjoint(&sys, &xf, &inputs, 5).unwrap();
        let fwd = simulate(&adjoint_system(&sys), &xf, &inputs, 0).unwrap();
        assert_eq!(back.states, fwd.states);
        assert_eq!(back.outputs, fwd.outputs);
        assert_eq!(back.time_of(2), 3);
    }

    #[test]
    fn adjoint_output_is_b_star_x() {
        let sys = scalar_example();
        let traj = simulate_adjoint(&sys, &real_vec(&[1.0]), &[real_vec(&[0.0])], -1).unwrap();
        assert_eq!(traj.time_of(0), -1);
        assert_eq!(traj.outputs[0][0], c(1.0));
    }

    #[test]
    fn transfer_values() {
        let sys = scalar_example();
        assert_eq!(transfer_value(&sys, c(0.0)).unwrap(), *sys.d());
        let f1 = transfer_value(&sys, c(1.0)).unwrap();
        assert!((f1[(0, 0)] - c(0.5)).norm() < 1e-15);
        assert!(matches!(
            transfer_value(&sys, c(2.0)),
            Err(Error::SingularResolvent { .. })
        ));
    }

    #[test]
    fn spectral_radii() {
        let rho = |rows: &[&[f64]]| {
            let n = rows.len();
            let sys = StateSpaceSystem::new(
                from_rows(rows),
                CMat::from_element(n, 1, c(1.0)),
                CMat::from_element(1, n, c(1.0)),
                CMat::zeros(1, 1),
            )
            .unwrap();
            spectral_radius(&sys).unwrap()
        };
        assert!((rho(&[&[0.5]]) - 0.5).abs() < 1e-15);
        assert!(rho(&[&[0.0, 1.0], &[0.0, 0.0]]).abs() < 1e-12);
        assert!((rho(&[&[0.9, 1.0], &[0.0, 0.9]]) - 0.9).abs() < 1e-12);
        let ft = StateSpaceSystem::feedthrough(from_rows(&[&[0.3]])).unwrap();
        assert_eq!(spectral_radius(&ft).unwrap(), 0.0);
    }

    #[test]
    fn minimality_cases() {
        let r = minimality_report(&scalar_example()).unwrap();
        assert!(r.controllable && r.observable && r.minimal);

        let diag = from_rows(&[&[0.5, 0.0], &[0.0, 0.3]]);
        let sys = StateSpaceSystem::new(diag.clone(), from_rows(&[&[1.0], &[0.0]]), from_rows(&[&[1.0, 1.0]]), CMat::zeros(1, 1)).unwrap();
        let r = minimality_report(&sys).unwrap();
        assert_eq!(r.reach_rank, 1);
        assert!(!r.controllable && r.observable && !r.minimal);

        let sys = StateSpaceSystem::new(diag, from_rows(&[&[1.0], &[1.0]]), from_rows(&[&[1.0, 0.0]]), CMat::zeros(1, 1)).unwrap();
        let r = minimality_report(&sys).unwrap();
        assert_eq!(r.obs_rank, 1);
        assert!(r.controllable && !r.observable);

        let dual = minimality_report(&adjoint_system(&sys)).unwrap();
        assert_eq!((dual.controllable, dual.observable), (r.observable, r.controllable));
    }

    #[test]
    fn adjoint_is_involution_and_transpose() {
        let sys = scalar_example();
        assert_eq!(adjoint_system(&adjoint_system(&sys)), sys);
        assert_eq!(adjoint_system(&sys), StateSpaceSystem::scalar(0.5, 0.25, 1.0, 0.0));
    }

    #[test]
    fn dual_transfer_identity_on_circle_of_radius_two() {
        let sys = StateSpaceSystem::new(
            from_rows(&[&[0.5, 0.2], &[-0.1, 0.3]]),
            CMat::from_row_slice(2, 1, &[Complex64::new(1.0, 0.5), c(2.0)]),
            from_rows(&[&[1.0, -1.0], &[0.0, 0.5]]),
            from_rows(&[&[0.1], &[0.2]]),
        )
        .unwrap();
        for k in 0..32 {
            let lambda = Complex64::from_polar(2.0, 2.0 * PI * k as f64 / 32.0);
            let lhs = dual_transfer_value(&sys, lambda).unwrap();
            let rhs = transfer_value(&sys, Complex64::new(1.0, 0.0) / lambda.conj())
                .unwrap()
                .adjoint();
            assert!(linalg::max_abs(&(lhs - rhs)) < 1e-12);
        }
    }

    #[test]
    fn hinf_examples() {
        let ft = StateSpaceSystem::new(CMat::zeros(1, 1), CMat::zeros(1, 1), CMat::zeros(1, 1), from_rows(&[&[0.3]])).unwrap();
        assert!((hinf_norm(&ft, 1e-9).unwrap() - 0.3).abs() < 1e-12);
        assert!((hinf_norm(&scalar_example(), 1e-9).unwrap() - 0.5).abs() < 1e-6);
        let big = StateSpaceSystem::scalar(0.5, 1.0, 1.0, 0.0);
        assert!((hinf_norm(&big, 1e-9).unwrap() - 2.0).abs() < 1e-6);
        let unstable = StateSpaceSystem::scalar(1.0, 1.0, 1.0, 0.0);
        assert!(matches!(hinf_norm(&unstable, 1e-9), Err(Error::Unstable { .. })));
    }

    #[test]
    fn hinf_oracle_off_grid_peak() {
        // Resonant peak at an angle that is not a grid point; oracle is a
        // 200k-point brute-force scan.
        let r = 0.9;
        let w = 1.2345f64;
        let sys = StateSpaceSystem::new(
            from_rows(&[&[r * w.cos(), -r * w.sin()], &[r * w.sin(), r * w.cos()]]),
            from_rows(&[&[1.0], &[0.0]]),
            from_rows(&[&[0.0, 0.2]]),
            from_rows(&[&[0.05]]),
        )
        .unwrap();
        let est = hinf_norm(&sys, 1e-10).unwrap();
        let brute = (0..200_000)
            .map(|k| gain_at(&sys, 2.0 * PI * k as f64 / 200_000.0).unwrap())
            .fold(0.0, f64::max);
        assert!(est >= brute - 1e-9);
        assert!((est - brute).abs() < 1e-6 * brute);
    }

    #[test]
    fn taylor_coefficients_scalar() {
        let f = taylor_coefficients(&scalar_example(), 4);
        let vals: Vec<f64> = f.iter().map(|m| m[(0, 0)].re).collect();
        assert_eq!(vals, vec![0.0, 0.25, 0.125, 0.0625]);
    }
}
