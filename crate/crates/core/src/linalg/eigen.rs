//! Eigen-solvers: cyclic Jacobi for Hermitian matrices, and characteristic
//! polynomial root finding for small general matrices.

use super::{c, ComplexMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

const JACOBI_OFF_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;
const ROOT_MAX_ITERS: usize = 2000;

/// Eigenvalues (ascending) and orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct HermitianEig {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEig {
    /// `V diag(f) V^dagger`.
    pub fn reconstruct_with(&self, f: &[f64]) -> ComplexMatrix {
        let n = self.values.len();
        assert_eq!(f.len(), n);
        let v = &self.vectors;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = (0..n).map(|k| v[(i, k)] * f[k] * v[(j, k)].conj()).sum();
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(&self.values)
    }
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Cyclic complex Jacobi. The input is assumed exactly Hermitian.
pub(super) fn jacobi(m: &ComplexMatrix) -> HermitianEig {
    let n = m.dim();
    let mut a = m.clone();
    let mut v = ComplexMatrix::identity(n);
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= JACOBI_OFF_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let g = apq.norm();
                if g == 0.0 {
                    continue;
                }
                let phase = apq / g;
                let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * g);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * cs;
                // R = diag(1, conj(phase)) * [[c, s], [-s, c]] on the (p, q) plane.
                let r_pp = c(cs, 0.0);
                let r_pq = c(sn, 0.0);
                let r_qp = phase.conj() * (-sn);
                let r_qq = phase.conj() * cs;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * r_pp + akq * r_qp;
                    a[(k, q)] = akp * r_pq + akq * r_qq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = r_pp.conj() * apk + r_qp.conj() * aqk;
                    a[(q, k)] = r_pq.conj() * apk + r_qq.conj() * aqk;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = c(a[(p, p)].re, 0.0);
                a[(q, q)] = c(a[(q, q)].re, 0.0);

                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * r_pp + vkq * r_qp;
                    v[(k, q)] = vkp * r_pq + vkq * r_qq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors[(row, col)] = v[(row, src)];
        }
    }
    HermitianEig { values, vectors }
}

/// Characteristic polynomial coefficients `[c_0, ..., c_n]` (with `c_n = 1`)
/// of `det(z I - A)`, by the Faddeev-LeVerrier recursion.
pub(crate) fn characteristic_polynomial(a: &ComplexMatrix) -> Vec<C64> {
    let n = a.dim();
    let mut coeffs = vec![ZERO; n + 1];
    coeffs[n] = ONE;
    let id = ComplexMatrix::identity(n);
    let mut mk = ComplexMatrix::zeros(n);
    for k in 1..=n {
        mk = &(a * &mk) + &id.scale(coeffs[n - k + 1]);
        coeffs[n - k] = -(a * &mk).trace() / k as f64;
    }
    coeffs
}

fn horner(coeffs: &[C64], z: C64) -> (C64, C64) {
    let mut p = ZERO;
    let mut dp = ZERO;
    for &a in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

/// Roots of a monic polynomial by Weierstrass (Durand-Kerner) iteration,
/// each polished with a few guarded Newton steps.
fn polynomial_roots(coeffs: &[C64]) -> Result<Vec<C64>> {
    let n = coeffs.len() - 1;
    let bound = 1.0 + coeffs[..n].iter().map(|a| a.norm()).fold(0.0, f64::max);
    let seed = c(0.4, 0.9);
    let mut roots: Vec<C64> = (0..n).map(|k| seed.powu(k as u32) * bound * 0.5).collect();

    let mut converged = false;
    for _ in 0..ROOT_MAX_ITERS {
        let mut max_step: f64 = 0.0;
        for i in 0..n {
            let (p, _) = horner(coeffs, roots[i]);
            let mut denom = ONE;
            for j in 0..n {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() == 0.0 {
                roots[i] += c(1e-10 * bound, 1e-10 * bound);
                max_step = f64::INFINITY;
                continue;
            }
            let step = p / denom;
            roots[i] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step <= 1e-15 * bound {
            converged = true;
            break;
        }
    }
    if !converged {
        // Clustered roots converge only linearly; accept if the residual is small.
        let worst = roots
            .iter()
            .map(|&z| horner(coeffs, z).0.norm())
            .fold(0.0, f64::max);
        if worst > 1e-10 * bound.powi(n as i32) {
            return Err(Error::NoConvergence {
                routine: "durand-kerner",
                iterations: ROOT_MAX_ITERS,
            });
        }
    }

    for z in roots.iter_mut() {
        for _ in 0..4 {
            let (p, dp) = horner(coeffs, *z);
            if dp.norm() == 0.0 {
                break;
            }
            let cand = *z - p / dp;
            if horner(coeffs, cand).0.norm() < p.norm() {
                *z = cand;
            } else {
                break;
            }
        }
    }
    Ok(roots)
}

/// All eigenvalues of a general complex matrix of dimension at most 4,
/// sorted by descending real part, then descending imaginary part.
pub fn general_eigvals(m: &ComplexMatrix) -> Result<Vec<C64>> {
    let n = m.dim();
    let mut vals = match n {
        1 => vec![m[(0, 0)]],
        2 => {
            let mean = (m[(0, 0)] + m[(1, 1)]) * 0.5;
            let half_diff = (m[(0, 0)] - m[(1, 1)]) * 0.5;
            let disc = (half_diff * half_diff + m[(0, 1)] * m[(1, 0)]).sqrt();
            vec![mean + disc, mean - disc]
        }
        3 | 4 => polynomial_roots(&characteristic_polynomial(m))?,
        _ => return Err(Error::UnsupportedDimension(n)),
    };
    vals.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Ok(vals)
}
