//! The metric operator `M(t)` and its consistency checks.

use crate::error::{Error, Result};
use crate::linalg::{pauli_y, pauli_z, ComplexMatrix, StateVector, C64};
use crate::nonhermitian::{hamiltonian, propagator_signed};

/// `M(t) = exp(-iH^dagger t) M0 exp(iHt)` for a scalar `M0 = m0_scalar * I`.
pub fn metric_scaled(r: f64, t: f64, m0_scalar: f64) -> ComplexMatrix {
    let g = propagator_signed(r, -t);
    (&g.adjoint() * &g).scale_real(m0_scalar)
}

/// Closed form of `M(t)/M0` in the PT-symmetric phase.
pub fn closed_form_metric(r: f64, t: f64) -> Result<ComplexMatrix> {
    if r.abs() >= 1.0 {
        return Err(Error::Domain(format!(
            "closed-form metric needs |r| < 1, got {r}"
        )));
    }
    let x = (1.0 - r) * (1.0 + r);
    let w = x.sqrt();
    let (cos2, sin2) = ((2.0 * w * t).cos(), (2.0 * w * t).sin());
    let id = (1.0 - r * r * cos2) / x;
    let z = -r * sin2 / w;
    let y = r * (1.0 - cos2) / x;
    let m = &(&ComplexMatrix::identity(2).scale_real(id) + &pauli_z().scale_real(z))
        + &pauli_y().scale_real(y);
    Ok(m)
}

/// Right-hand side of `dM/dt = -i (H^dagger M - M H)`.
pub fn metric_derivative(r: f64, m: &ComplexMatrix) -> ComplexMatrix {
    let h = hamiltonian(r);
    (&(&h.adjoint() * m) - &(m * &h)).scale(C64::new(0.0, -1.0))
}

/// `|| i dM/dt - (H^dagger M - M H) ||_2` with `dM/dt` from a symmetric finite
/// difference of step `h`, for unit `M0`.
pub fn metric_ode_residual(r: f64, t: f64, h: f64) -> f64 {
    let fd = (&metric_scaled(r, t + h, 1.0) - &metric_scaled(r, t - h, 1.0)).scale_real(0.5 / h);
    let m = metric_scaled(r, t, 1.0);
    let hq = hamiltonian(r);
    let lhs = fd.scale(C64::new(0.0, 1.0));
    let rhs = &(&hq.adjoint() * &m) - &(&m * &hq);
    (&lhs - &rhs).two_norm()
}

/// `<psi(t)|M(t)|psi(t)> / <psi(0)|M(0)|psi(0)>` with `psi(t)` the unnormalized
/// non-unitary evolution of `psi0`.
pub fn metric_norm_ratio(r: f64, t: f64, psi0: &StateVector) -> Result<f64> {
    let psi_t = propagator_signed(r, t).apply(psi0)?;
    let num = psi_t.inner(&metric_scaled(r, t, 1.0).apply(&psi_t)?).re;
    let den = psi0.norm_sqr();
    Ok(num / den)
}
