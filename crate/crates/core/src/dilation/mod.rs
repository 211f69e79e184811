//! Hermitian dilation of the non-Hermitian qubit onto an ancilla-system pair.
//!
//! A state `|0>_a |psi(t)> + |1>_a eta(t)|psi(t)>` evolves unitarily under
//! `H_aq = I (x) Lambda + sigma_y (x) Gamma` whenever `eta^2 + I = M` with `M`
//! the metric. The ancilla is the most significant wire.

pub mod metric;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{pauli_y, ComplexMatrix, StateVector, C64, TOL_PSD};
use crate::nonhermitian::{hamiltonian, propagator_signed, EPS_EP};
use crate::ode::rk4_linear;

pub use metric::{
    closed_form_metric, metric_derivative, metric_norm_ratio, metric_ode_residual, metric_scaled,
};

/// Default RK4 step for the dilated propagator.
pub const DEFAULT_DT: f64 = 1e-3;
/// Unitarity defect above which the step is halved.
pub const MAX_UNITARITY_DEFECT: f64 = 1e-6;
const MAX_REFINEMENTS: usize = 4;

/// Calibrated initial condition `M0 = (m0 / mu_min) f I`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DilationContext {
    pub r: f64,
    pub time_horizon: f64,
    pub m0: f64,
    pub f: f64,
    pub mu_min: f64,
    pub eta0: f64,
    pub theta: f64,
}

impl DilationContext {
    /// Scalar value of `M0 = 1 + eta0^2`.
    pub fn m0_final(&self) -> f64 {
        self.m0 * self.f / self.mu_min
    }
}

/// `mu_min` over a grid of step `grid_step` on `[0, horizon]` (endpoint
/// included), using the preliminary `M0 = m0 I`. The small eigenvalue comes
/// from `det M = m0^2`, which stays accurate when `M` is ill-conditioned.
pub fn calibrate(r: f64, horizon: f64, grid_step: f64, m0: f64, f: f64) -> Result<DilationContext> {
    if !(m0 > 1.0) || !(f > 1.0) {
        return Err(Error::Domain(format!(
            "calibration needs m0 > 1 and f > 1, got m0={m0}, f={f}"
        )));
    }
    if !(horizon >= 0.0) || !(grid_step > 0.0) {
        return Err(Error::Domain(format!(
            "bad calibration grid: horizon {horizon}, step {grid_step}"
        )));
    }
    let n = ((horizon / grid_step) - 1e-9).ceil().max(0.0) as usize;
    let mut mu_min = f64::INFINITY;
    for k in 0..=n {
        let t = (k as f64 * grid_step).min(horizon);
        let hi = metric::metric_scaled(r, t, m0).hermitian_eig()?.values[1];
        let lo = m0 * m0 / hi;
        mu_min = mu_min.min(lo);
    }
    if !(mu_min > 0.0) {
        return Err(Error::Domain(format!(
            "metric lost positivity during calibration (mu_min = {mu_min:e})"
        )));
    }
    let eta0 = (m0 * f / mu_min - 1.0).sqrt();
    Ok(DilationContext {
        r,
        time_horizon: horizon,
        m0,
        f,
        mu_min,
        eta0,
        theta: 2.0 * eta0.atan(),
    })
}

/// How a context is chosen for a given evolution time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSettings {
    pub horizon: f64,
    pub grid_step: f64,
    pub m0: f64,
    pub f: f64,
    /// For `|r| >= 1`, calibrate separately on `[0, k L]` with the smallest
    /// `k` covering `t`.
    pub interval: Option<f64>,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            horizon: 8.0,
            grid_step: 0.01,
            m0: 2.0,
            f: 1.01,
            interval: Some(1.0),
        }
    }
}

/// Context used to simulate time `t` at parameter `r`.
pub fn context_for_time(r: f64, t: f64, s: &CalibrationSettings) -> Result<DilationContext> {
    let horizon = match s.interval {
        Some(len) if r.abs() >= 1.0 - EPS_EP => (((t / len) - 1e-9).ceil().max(1.0)) * len,
        _ => s.horizon.max(t),
    };
    calibrate(r, horizon, s.grid_step, s.m0, s.f)
}

pub fn evolve_m(ctx: &DilationContext, t: f64) -> ComplexMatrix {
    metric::metric_scaled(ctx.r, t, ctx.m0_final())
}

/// Operators of the dilation at a single time.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DilatedFrame {
    pub t: f64,
    pub m: ComplexMatrix,
    pub eta: ComplexMatrix,
    pub eta_dot: ComplexMatrix,
    pub lambda: ComplexMatrix,
    pub gamma: ComplexMatrix,
    pub h_aq: ComplexMatrix,
}

/// `M` in its eigenbasis `V`, with `eta = V diag(s) V^dagger`,
/// `eta' = V y V^dagger` and `h = V^dagger H V`.
struct Eigenframe {
    v: ComplexMatrix,
    lam: [f64; 2],
    s: [f64; 2],
    h: ComplexMatrix,
    y: ComplexMatrix,
}

impl Eigenframe {
    fn lift(&self, x: &ComplexMatrix) -> ComplexMatrix {
        &(&self.v * x) * &self.v.adjoint()
    }

    fn lift_diag(&self, d: [f64; 2]) -> ComplexMatrix {
        let mut x = ComplexMatrix::zeros(2);
        x[(0, 0)] = C64::from(d[0]);
        x[(1, 1)] = C64::from(d[1]);
        self.lift(&x)
    }
}

/// Eigenframe of `M(t)`. The small eigenvalue is taken from `det M = m0^2`
/// so that `M - I` keeps its relative accuracy when `M` is ill-conditioned.
fn eigenframe(ctx: &DilationContext, t: f64, m: &ComplexMatrix) -> Result<Eigenframe> {
    let eig = m.hermitian_eig()?;
    let hi = eig.values[1];
    let lam = [ctx.m0_final().powi(2) / hi, hi];
    let lo = lam[0] - 1.0;
    if lo < -TOL_PSD * lam[1].max(1.0) {
        return Err(Error::PsdViolation { t, min_eig: lo });
    }
    let s = [lo.max(0.0).sqrt(), (lam[1] - 1.0).max(0.0).sqrt()];
    let v = eig.vectors;
    let h = &(&v.adjoint() * &hamiltonian(ctx.r)) * &v;
    let minus_i = C64::new(0.0, -1.0);
    let mut y = ComplexMatrix::zeros(2);
    for i in 0..2 {
        for j in 0..2 {
            let denom = s[i] + s[j];
            if denom <= f64::MIN_POSITIVE {
                return Err(Error::PsdViolation { t, min_eig: lo });
            }
            // V^dagger M' V entrywise, with M' = -i (H^dagger M - M H).
            let x = minus_i * (h[(j, i)].conj() * lam[j] - lam[i] * h[(i, j)]);
            y[(i, j)] = x / denom;
        }
    }
    Ok(Eigenframe { v, lam, s, h, y })
}

pub fn frame_at(ctx: &DilationContext, t: f64) -> Result<DilatedFrame> {
    let m = evolve_m(ctx, t);
    let ef = eigenframe(ctx, t, &m)?;
    let i = C64::new(0.0, 1.0);
    let (s, lam, h, y) = (ef.s, ef.lam, &ef.h, &ef.y);
    let mut lambda = ComplexMatrix::zeros(2);
    let mut gamma = ComplexMatrix::zeros(2);
    for a in 0..2 {
        for b in 0..2 {
            // (H + i eta' eta + eta H eta) M^-1 and i (H eta - eta H - i eta') M^-1.
            lambda[(a, b)] = (h[(a, b)] * (1.0 + s[a] * s[b]) + i * y[(a, b)] * s[b]) / lam[b];
            gamma[(a, b)] = i * (h[(a, b)] * (s[b] - s[a]) - i * y[(a, b)]) / lam[b];
        }
    }
    let lambda = ef.lift(&lambda);
    let gamma = ef.lift(&gamma);
    let h_aq = &ComplexMatrix::identity(2).kron(&lambda)? + &pauli_y().kron(&gamma)?;
    Ok(DilatedFrame {
        t,
        eta: ef.lift_diag(s),
        eta_dot: ef.lift(y),
        m,
        lambda,
        gamma,
        h_aq,
    })
}

/// `eta'` by a symmetric finite difference of `sqrt(M - I)`.
pub fn eta_derivative_fd(ctx: &DilationContext, t: f64, h: f64) -> Result<ComplexMatrix> {
    let root = |tt: f64| (&evolve_m(ctx, tt) - &ComplexMatrix::identity(2)).psd_sqrt();
    Ok((&root(t + h)? - &root(t - h)?).scale_real(0.5 / h))
}

/// Residuals of the defining linear system
/// `Lambda - i Gamma eta = H` and `Lambda eta + i Gamma = i eta' + eta H`.
pub fn frame_residuals(ctx: &DilationContext, frame: &DilatedFrame) -> (f64, f64) {
    let h = hamiltonian(ctx.r);
    let i = C64::new(0.0, 1.0);
    let first = &(&frame.lambda - &(&frame.gamma * &frame.eta).scale(i)) - &h;
    let second = &(&(&frame.lambda * &frame.eta) + &frame.gamma.scale(i))
        - &(&frame.eta_dot.scale(i) + &(&frame.eta * &h));
    (first.two_norm(), second.two_norm())
}

/// RK4 propagation of `dU/dt = -i H_aq(t) U` from the identity.
#[derive(Clone, Debug)]
pub struct Propagation {
    pub u: ComplexMatrix,
    pub dt: f64,
    pub unitarity_defect: f64,
    /// `||U(dt) - U(dt/2)||_2 / 15`, the leading-order RK4 error estimate.
    pub richardson_error: f64,
}

fn integrate(ctx: &DilationContext, t: f64, dt: f64) -> Result<ComplexMatrix> {
    let minus_i = C64::new(0.0, -1.0);
    rk4_linear(
        |tau| Ok(frame_at(ctx, tau)?.h_aq.scale(minus_i)),
        &ComplexMatrix::identity(4),
        0.0,
        t,
        dt,
    )
}

fn defect(u: &ComplexMatrix) -> f64 {
    (&(&u.adjoint() * u) - &ComplexMatrix::identity(u.dim())).two_norm()
}

/// Dilated propagator; the step is halved while the unitarity defect
/// exceeds [`MAX_UNITARITY_DEFECT`].
pub fn propagate_u(ctx: &DilationContext, t: f64, dt: f64) -> Result<ComplexMatrix> {
    let mut step = dt;
    let mut worst = f64::INFINITY;
    for _ in 0..=MAX_REFINEMENTS {
        let u = integrate(ctx, t, step)?;
        worst = defect(&u);
        if worst <= MAX_UNITARITY_DEFECT {
            return Ok(u);
        }
        step *= 0.5;
    }
    Err(Error::StepTooCoarse { defect: worst })
}

/// Propagators at each of the nondecreasing `times`, integrated as one path
/// segment by segment. The whole path is redone with a halved step while any
/// point exceeds [`MAX_UNITARITY_DEFECT`].
pub fn propagate_path(ctx: &DilationContext, times: &[f64], dt: f64) -> Result<Vec<ComplexMatrix>> {
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::Domain(
            "path times must be nonnegative and nondecreasing".into(),
        ));
    }
    let minus_i = C64::new(0.0, -1.0);
    let mut step = dt;
    let mut worst = f64::INFINITY;
    for _ in 0..=MAX_REFINEMENTS {
        let mut out = Vec::with_capacity(times.len());
        let mut u = ComplexMatrix::identity(4);
        let mut t_prev = 0.0;
        worst = 0.0;
        for &t in times {
            u = rk4_linear(
                |tau| Ok(frame_at(ctx, tau)?.h_aq.scale(minus_i)),
                &u,
                t_prev,
                t,
                step,
            )?;
            worst = worst.max(defect(&u));
            t_prev = t;
            out.push(u.clone());
        }
        if worst <= MAX_UNITARITY_DEFECT {
            return Ok(out);
        }
        step *= 0.5;
    }
    Err(Error::StepTooCoarse { defect: worst })
}

/// [`propagate_u`] plus one Richardson halving to estimate the truncation error.
pub fn propagate_with_estimate(ctx: &DilationContext, t: f64, dt: f64) -> Result<Propagation> {
    let u = propagate_u(ctx, t, dt)?;
    let half = integrate(ctx, t, 0.5 * dt)?;
    Ok(Propagation {
        unitarity_defect: defect(&u),
        richardson_error: (&u - &half).two_norm() / 15.0,
        u,
        dt,
    })
}

/// `(|0> + eta0 |1>) / sqrt(1 + eta0^2)`, equal to `Ry(theta)|0>`.
pub fn ancilla_state(eta0: f64) -> StateVector {
    StateVector::from_real(&[1.0, eta0]).normalized()
}

/// Normalized `ancilla (x) system_state`.
pub fn dilated_initial_state(
    ctx: &DilationContext,
    system_state: &StateVector,
) -> Result<StateVector> {
    ancilla_state(ctx.eta0).kron(&system_state.normalized())
}

/// Keeps the ancilla-`|0>` half of a state whose most significant wire is the
/// ancilla; returns the normalized remainder and the success probability.
pub fn postselect_ancilla_zero(state: &StateVector) -> Result<(StateVector, f64)> {
    let n = state.dim();
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::InvalidWires(format!(
            "cannot split ancilla from dimension {n}"
        )));
    }
    let kept = StateVector::new(state.amplitudes()[..n / 2].to_vec());
    let success = kept.norm_sqr();
    let norm = if success > 0.0 {
        kept.normalized()
    } else {
        kept
    };
    Ok((norm, success))
}

/// `max_k || U Psi_k - (|0> psi_k(t) + |1> eta psi_k(t)) || / || Psi_k ||` over
/// system basis inputs `psi_k`, with `Psi_k = (|0> + eta0 |1>) psi_k`.
pub fn solution_structure_residual(
    ctx: &DilationContext,
    t: f64,
    u: &ComplexMatrix,
) -> Result<f64> {
    let eta = frame_at(ctx, t)?.eta;
    let a = propagator_signed(ctx.r, t);
    let anc = StateVector::from_real(&[1.0, ctx.eta0]);
    let mut worst: f64 = 0.0;
    for k in 0..2 {
        let psi0 = StateVector::basis(2, k);
        let big0 = anc.kron(&psi0)?;
        let psi_t = a.apply(&psi0)?;
        let expect = StateVector::basis(2, 0)
            .kron(&psi_t)?
            .add(&StateVector::basis(2, 1).kron(&eta.apply(&psi_t)?)?);
        let got = u.apply(&big0)?;
        worst = worst.max(got.sub(&expect).norm() / big0.norm());
    }
    Ok(worst)
}

pub fn verify_solution_structure(ctx: &DilationContext, t: f64) -> Result<f64> {
    let u = propagate_u(ctx, t, DEFAULT_DT)?;
    solution_structure_residual(ctx, t, &u)
}
