//! Closed-form dynamics of the single-qubit Hamiltonian `H = sigma_x + i r sigma_z`.
//!
//! The propagator is `exp(-iHt) = C(t) I - i S(t) H` with
//! `C = cos(w t)`, `S = sin(w t)/w` and `w = sqrt(1 - r^2)`. Both `C` and `S`
//! are even in `w`, hence real for every real `r`: the broken phase uses
//! `cosh`/`sinh` and the exceptional point uses a power series in `1 - r^2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, pauli_x, pauli_z, ComplexMatrix, StateVector, C64, I};

/// Half-width of the band around `|r| = 1` classified as exceptional.
pub const EPS_EP: f64 = 1e-8;
/// Below `|1 - r^2|` the propagator switches to its series expansion.
pub const EPS_TAYLOR: f64 = 1e-5;

/// Gain/loss parameter and evolution time (natural units).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonHermitianParams {
    pub r: f64,
    pub t: f64,
}

impl NonHermitianParams {
    pub fn new(r: f64, t: f64) -> Self {
        Self { r, t }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PtRegime {
    Symmetric,
    Exceptional,
    Broken,
}

pub fn pt_classify(r: f64) -> PtRegime {
    let a = r.abs();
    if (1.0 - a).abs() < EPS_EP {
        PtRegime::Exceptional
    } else if a < 1.0 {
        PtRegime::Symmetric
    } else {
        PtRegime::Broken
    }
}

pub fn hamiltonian(r: f64) -> ComplexMatrix {
    &pauli_x() + &pauli_z().scale(I * r)
}

/// Images of the basis states: `|0> -> alpha0|0> + beta0|1>`,
/// `|1> -> alpha1|0> + beta1|1>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagatorCoefficients {
    pub alpha0: C64,
    pub beta0: C64,
    pub alpha1: C64,
    pub beta1: C64,
}

/// `(cos(w t), sin(w t)/w)` continued to all real `r`.
fn even_pair(r: f64, t: f64) -> (f64, f64) {
    let x = (1.0 - r) * (1.0 + r);
    if x.abs() < EPS_TAYLOR {
        // cos(wt) = sum (-x)^k t^2k / (2k)!, sin(wt)/w = sum (-x)^k t^(2k+1) / (2k+1)!
        let mut cos_term = 1.0;
        let mut sin_term = t;
        let (mut cs, mut sn) = (cos_term, sin_term);
        for k in 1..=4 {
            let kf = k as f64;
            cos_term *= -x * t * t / ((2.0 * kf - 1.0) * (2.0 * kf));
            sin_term *= -x * t * t / ((2.0 * kf) * (2.0 * kf + 1.0));
            cs += cos_term;
            sn += sin_term;
        }
        (cs, sn)
    } else if x > 0.0 {
        let w = x.sqrt();
        ((w * t).cos(), (w * t).sin() / w)
    } else {
        let k = (-x).sqrt();
        ((k * t).cosh(), (k * t).sinh() / k)
    }
}

fn coefficients(r: f64, t: f64) -> PropagatorCoefficients {
    let (cs, sn) = even_pair(r, t);
    let off = c(0.0, -sn);
    PropagatorCoefficients {
        alpha0: c(cs + r * sn, 0.0),
        beta0: off,
        alpha1: off,
        beta1: c(cs - r * sn, 0.0),
    }
}

pub fn propagator_coeffs(p: NonHermitianParams) -> PropagatorCoefficients {
    coefficients(p.r, p.t)
}

fn propagator_matrix(r: f64, t: f64) -> ComplexMatrix {
    let k = coefficients(r, t);
    ComplexMatrix::from_rows([[k.alpha0, k.alpha1], [k.beta0, k.beta1]])
}

/// `exp(-i H t)`.
pub fn nh_propagator(p: NonHermitianParams) -> ComplexMatrix {
    propagator_matrix(p.r, p.t)
}

/// `exp(-i H t)` for any real `t`; negative times give `exp(i H |t|)`.
pub fn propagator_signed(r: f64, t: f64) -> ComplexMatrix {
    propagator_matrix(r, t)
}

/// Unnormalized `exp(-iHt)|psi0>`.
pub fn evolve_state(p: NonHermitianParams, initial: &StateVector) -> Result<StateVector> {
    nh_propagator(p).apply(initial)
}

/// Normalized ground/excited populations after non-unitary evolution.
pub fn populations(p: NonHermitianParams, initial: &StateVector) -> Result<(f64, f64)> {
    if initial.dim() != 2 {
        return Err(Error::DimensionMismatch {
            left: 2,
            right: initial.dim(),
        });
    }
    let psi = evolve_state(p, initial)?;
    let (a, b) = (psi[0].norm_sqr(), psi[1].norm_sqr());
    let n = a + b;
    Ok((a / n, b / n))
}

/// Information recurrence period in the PT-symmetric phase.
pub fn recurrence_time(r: f64) -> Result<f64> {
    if r.abs() >= 1.0 {
        return Err(Error::Domain(format!(
            "recurrence time needs |r| < 1, got {r}"
        )));
    }
    Ok(std::f64::consts::PI / ((1.0 - r) * (1.0 + r)).sqrt())
}

/// e-folding time of the norm in the broken phase.
pub fn decay_time(r: f64) -> Result<f64> {
    if r.abs() <= 1.0 {
        return Err(Error::Domain(format!("decay time needs |r| > 1, got {r}")));
    }
    Ok(1.0 / (2.0 * ((r - 1.0) * (r + 1.0)).sqrt()))
}

/// `1/N(t)` with `N(t) = Tr[exp(-iHt) rho0 exp(iH^dagger t)]`.
pub fn state_norm_inverse(p: NonHermitianParams, rho0: &ComplexMatrix) -> Result<f64> {
    let u = nh_propagator(p);
    let evolved = &(&u * rho0) * &u.adjoint();
    Ok(1.0 / evolved.trace().re)
}

/// Bloch coordinates `(2 Re(a b*), 2 Im(a b*), |a|^2 - |b|^2)` of a
/// normalized state `a|0> + b|1>`.
///
/// This handedness places the exceptional-point eigenvector `(i, 1)/sqrt(2)`
/// at `(0, 1, 0)`.
pub fn bloch_coordinates(psi: &StateVector) -> [f64; 3] {
    let psi = psi.normalized();
    let (a, b) = (psi[0], psi[1]);
    let z = a * b.conj();
    [2.0 * z.re, 2.0 * z.im, a.norm_sqr() - b.norm_sqr()]
}

/// Spectrum and eigenvectors of `H`. At the exceptional point a single
/// coalesced eigenvector is returned.
#[derive(Clone, Debug)]
pub struct Eigensystem {
    pub regime: PtRegime,
    pub eigenvalues: [C64; 2],
    pub eigenvectors: Vec<StateVector>,
    pub bloch: Vec<[f64; 3]>,
}

pub fn eigensystem(r: f64) -> Eigensystem {
    let regime = pt_classify(r);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (eigenvalues, eigenvectors) = match regime {
        PtRegime::Exceptional => {
            let v = StateVector::new(vec![c(0.0, r.signum() * h), c(h, 0.0)]);
            ([c(0.0, 0.0); 2], vec![v])
        }
        PtRegime::Symmetric => {
            let w = ((1.0 - r) * (1.0 + r)).sqrt();
            let plus = StateVector::new(vec![c(w, r), c(1.0, 0.0)]).scale(c(h, 0.0));
            let minus = StateVector::new(vec![c(-w, r), c(1.0, 0.0)]).scale(c(h, 0.0));
            ([c(w, 0.0), c(-w, 0.0)], vec![plus, minus])
        }
        PtRegime::Broken => {
            let k = ((r - 1.0) * (r + 1.0)).sqrt();
            let plus = StateVector::new(vec![c(0.0, r + k), c(1.0, 0.0)]).normalized();
            let minus = StateVector::new(vec![c(0.0, r - k), c(1.0, 0.0)]).normalized();
            ([c(0.0, k), c(0.0, -k)], vec![plus, minus])
        }
    };
    let bloch = eigenvectors.iter().map(bloch_coordinates).collect();
    Eigensystem {
        regime,
        eigenvalues,
        eigenvectors,
        bloch,
    }
}

/// Combined parity-time operation: `sigma_x` applied to the complex conjugate.
pub fn pt_apply(psi: &StateVector) -> StateVector {
    StateVector::new(vec![psi[1].conj(), psi[0].conj()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;

    /// Scaling-and-squaring Taylor exponential of `-i H t`; independent of
    /// the closed form.
    fn expm_series(a: &ComplexMatrix) -> ComplexMatrix {
        let norm = a.frobenius_norm();
        let squarings = if norm > 0.5 {
            (norm / 0.5).log2().ceil() as u32
        } else {
            0
        };
        let scaled = a.scale_real(0.5f64.powi(squarings as i32));
        let n = a.dim();
        let mut term = ComplexMatrix::identity(n);
        let mut sum = ComplexMatrix::identity(n);
        for k in 1..30 {
            term = (&term * &scaled).scale_real(1.0 / k as f64);
            sum = &sum + &term;
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        sum
    }

    fn oracle(r: f64, t: f64) -> ComplexMatrix {
        expm_series(&hamiltonian(r).scale(c(0.0, -t)))
    }

    #[test]
    fn hamiltonian_entries() {
        assert_eq!(hamiltonian(0.0), pauli_x());
        let h1 = hamiltonian(1.0);
        assert_eq!(h1[(0, 0)], I);
        assert_eq!(h1[(1, 1)], -I);
        assert_eq!(h1[(0, 1)], ONE);
        let adj = hamiltonian(0.7).adjoint();
        assert!((&adj - &(&pauli_x() - &pauli_z().scale(I * 0.7))).max_abs() < 1e-15);
        assert!((&adj - &hamiltonian(-0.7)).max_abs() < 1e-15);
    }

    #[test]
    fn classification() {
        assert_eq!(pt_classify(0.6), PtRegime::Symmetric);
        assert_eq!(pt_classify(1.0), PtRegime::Exceptional);
        assert_eq!(pt_classify(-1.0), PtRegime::Exceptional);
        assert_eq!(pt_classify(1.3), PtRegime::Broken);
        assert_eq!(pt_classify(1.0 + 1e-9), PtRegime::Exceptional);
        assert_eq!(pt_classify(1.0 + 1e-7), PtRegime::Broken);
    }

    #[test]
    fn coefficients_at_r_zero() {
        let t = 0.83;
        let k = propagator_coeffs(NonHermitianParams::new(0.0, t));
        assert!((k.alpha0 - c(t.cos(), 0.0)).norm() < 1e-15);
        assert!((k.beta0 - c(0.0, -t.sin())).norm() < 1e-15);
        assert!((k.beta1 - c(t.cos(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn coefficients_at_exceptional_point() {
        let k = propagator_coeffs(NonHermitianParams::new(1.0, 1.0));
        assert!((k.alpha0 - c(2.0, 0.0)).norm() < 1e-9);
        assert!((k.beta0 - c(0.0, -1.0)).norm() < 1e-9);
        assert!(k.beta1.norm() < 1e-9);
        let o = oracle(1.0, 1.0);
        assert!((o[(0, 0)] - k.alpha0).norm() < 1e-9);
        assert!((o[(1, 0)] - k.beta0).norm() < 1e-9);
        assert!((o[(1, 1)] - k.beta1).norm() < 1e-9);
    }

    #[test]
    fn beta0_is_alpha1_bitwise() {
        for r in [-1.2, -0.3, 0.0, 0.6, 0.999_999, 1.0, 1.3, 2.0] {
            for t in [0.0, 0.1, 1.7, 5.0] {
                let k = propagator_coeffs(NonHermitianParams::new(r, t));
                assert_eq!(k.beta0.re.to_bits(), k.alpha1.re.to_bits());
                assert_eq!(k.beta0.im.to_bits(), k.alpha1.im.to_bits());
            }
        }
    }

    #[test]
    fn propagator_examples() {
        let u = nh_propagator(NonHermitianParams::new(0.0, std::f64::consts::FRAC_PI_2));
        assert!((&u - &pauli_x().scale(-I)).max_abs() < 1e-15);
        for r in [0.0, 0.6, 1.0, 1.3] {
            let u0 = nh_propagator(NonHermitianParams::new(r, 0.0));
            assert!((&u0 - &ComplexMatrix::identity(2)).max_abs() < 1e-15);
        }
    }

    #[test]
    fn unimodular_determinant() {
        for r in [-1.5, -1.0, 0.0, 0.3, 0.6, 0.99, 1.0, 1.000_001, 1.3] {
            for i in 0..=16 {
                let u = nh_propagator(NonHermitianParams::new(r, 0.5 * i as f64));
                let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
                let scale = u.max_abs().powi(2).max(1.0);
                assert!((det - ONE).norm() < 1e-12 * scale, "r {r} det {det}");
            }
        }
    }

    #[test]
    fn agrees_with_series_exponential() {
        for r in [0.0, 0.6, 0.999, 1.0, 1.001, 1.3] {
            for i in 0..=32 {
                let t = 0.25 * i as f64;
                let closed = nh_propagator(NonHermitianParams::new(r, t));
                let series = oracle(r, t);
                let scale = series.max_abs().max(1.0);
                assert!((&closed - &series).max_abs() < 1e-9 * scale, "r {r} t {t}");
            }
        }
    }

    #[test]
    fn series_branch_is_continuous() {
        for t in [0.5, 3.0, 8.0] {
            let inside = nh_propagator(NonHermitianParams::new(1.0 - 2e-6, t));
            let outside = nh_propagator(NonHermitianParams::new(1.0 - 2e-5, t));
            let reference = oracle(1.0 - 2e-6, t);
            assert!((&inside - &reference).max_abs() < 1e-9 * reference.max_abs());
            assert!((&inside - &outside).max_abs() < 1e-2 * reference.max_abs());
        }
    }

    #[test]
    fn semigroup_property() {
        for r in [0.2, 0.6, 1.0, 1.3] {
            let (t1, t2) = (0.7, 1.9);
            let whole = nh_propagator(NonHermitianParams::new(r, t1 + t2));
            let split = &nh_propagator(NonHermitianParams::new(r, t1))
                * &nh_propagator(NonHermitianParams::new(r, t2));
            assert!((&whole - &split).max_abs() < 1e-10 * whole.max_abs().max(1.0));
        }
    }

    #[test]
    fn tabulated_populations_at_r_0_6() {
        let zero = StateVector::basis(2, 0);
        let cases = [
            (0.5, 0.8613),
            (1.0, 0.6547),
            (4.0, 0.9951),
            (2.5, 0.0518),
            (6.5, 0.0300),
            (8.0, 0.9821),
        ];
        for (t, expect) in cases {
            let (p0, p1) = populations(NonHermitianParams::new(0.6, t), &zero).unwrap();
            assert!((p0 - expect).abs() < 1e-4, "t {t}: {p0}");
            assert!((p0 + p1 - 1.0).abs() < 1e-15);
        }
        let (p0, _) = populations(
            NonHermitianParams::new(0.0, std::f64::consts::FRAC_PI_4),
            &zero,
        )
        .unwrap();
        assert!((p0 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn populations_are_periodic_in_symmetric_phase() {
        let zero = StateVector::basis(2, 0);
        for r in [0.3, 0.6, 0.9] {
            let tr = recurrence_time(r).unwrap();
            for i in 0..40 {
                let t = 0.2 * i as f64;
                let (a, _) = populations(NonHermitianParams::new(r, t), &zero).unwrap();
                let (b, _) = populations(NonHermitianParams::new(r, t + tr), &zero).unwrap();
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn characteristic_times() {
        assert!((recurrence_time(0.0).unwrap() - std::f64::consts::PI).abs() < 1e-15);
        assert!((recurrence_time(0.6).unwrap() - 3.926991).abs() < 1e-6);
        assert!((recurrence_time(0.99).unwrap() - 22.27).abs() < 5e-3);
        assert!(recurrence_time(1.0).is_err());
        assert!((decay_time(1.3).unwrap() - 0.601929).abs() < 1e-6);
        assert!((decay_time(2f64.sqrt()).unwrap() - 0.5).abs() < 1e-12);
        assert!(decay_time(1.0 + 1e-12).unwrap() > 1e5);
        assert!(decay_time(0.5).is_err());
    }

    #[test]
    fn norm_inverse_behaviour() {
        let rho0 = StateVector::basis(2, 0).density();
        for t in [0.0, 0.4, 2.2] {
            assert!(
                (state_norm_inverse(NonHermitianParams::new(0.0, t), &rho0).unwrap() - 1.0).abs()
                    < 1e-14
            );
        }
        let tr = recurrence_time(0.6).unwrap();
        let at0 = state_norm_inverse(NonHermitianParams::new(0.6, 0.0), &rho0).unwrap();
        let at_tr = state_norm_inverse(NonHermitianParams::new(0.6, tr), &rho0).unwrap();
        assert!((at0 - at_tr).abs() < 1e-12);

        // Broken phase: asymptotic decay by a factor e over one decay time.
        let tau = decay_time(1.3).unwrap();
        let a = state_norm_inverse(NonHermitianParams::new(1.3, 6.0), &rho0).unwrap();
        let b = state_norm_inverse(NonHermitianParams::new(1.3, 6.0 + tau), &rho0).unwrap();
        assert!((a / b - std::f64::consts::E).abs() < 1e-3, "{}", a / b);
    }

    #[test]
    fn eigensystem_cases() {
        let e0 = eigensystem(0.0);
        assert_eq!(e0.eigenvectors.len(), 2);
        assert!((e0.eigenvalues[0] - c(1.0, 0.0)).norm() < 1e-15);
        let xs: Vec<f64> = e0.bloch.iter().map(|b| b[0]).collect();
        assert!(xs.contains(&1.0) || (xs[0] - 1.0).abs() < 1e-12);
        for b in &e0.bloch {
            assert!((b[0].abs() - 1.0).abs() < 1e-12 && b[1].abs() < 1e-12 && b[2].abs() < 1e-12);
        }

        let e1 = eigensystem(1.0);
        assert_eq!(e1.eigenvectors.len(), 1);
        let b = e1.bloch[0];
        assert!(b[0].abs() < 1e-12 && (b[1] - 1.0).abs() < 1e-12 && b[2].abs() < 1e-12);

        let far = eigensystem(1e4);
        for b in &far.bloch {
            assert!((b[2].abs() - 1.0).abs() < 1e-6);
        }
        assert!(far.bloch[0][2] * far.bloch[1][2] < 0.0);

        let e2 = eigensystem(2.0);
        for b in &e2.bloch {
            assert!(b[0].abs() < 1e-12);
        }
        assert!((e2.bloch[0][1] - e2.bloch[1][1]).abs() < 1e-12);
        assert!((e2.bloch[0][2] + e2.bloch[1][2]).abs() < 1e-12);
    }

    #[test]
    fn eigenpairs_satisfy_h_v_equals_lambda_v() {
        for r in [0.0, 0.4, 0.95, 1.0, 1.3, 3.0] {
            let es = eigensystem(r);
            let h = hamiltonian(r);
            for (v, lam) in es.eigenvectors.iter().zip(es.eigenvalues) {
                let res = h.apply(v).unwrap().sub(&v.scale(lam));
                assert!(res.norm() < 1e-12, "r {r}");
                assert!(v.is_normalized());
            }
        }
    }

    #[test]
    fn pt_symmetry_of_eigenvectors() {
        // Symmetric phase: each eigenvector is mapped to a multiple of itself.
        for r in [0.0, 0.3, 0.6, 0.9] {
            for v in eigensystem(r).eigenvectors {
                let w = pt_apply(&v);
                let k = v.inner(&w);
                assert!(w.sub(&v.scale(k)).norm() < 1e-10, "r {r}");
            }
        }
        // Broken phase: the eigenvectors are exchanged.
        for r in [1.3, 2.0] {
            let es = eigensystem(r);
            let w = pt_apply(&es.eigenvectors[0]);
            let other = &es.eigenvectors[1];
            let k = other.inner(&w);
            assert!(w.sub(&other.scale(k)).norm() < 1e-10, "r {r}");
            assert!((k.norm() - 1.0).abs() < 1e-12);
        }
    }
}
