//! Distinguishability and entanglement measures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{pauli_y, ComplexMatrix, StateVector, C64};

/// Eigenvalues of `rho` below this fraction of its trace are treated as zero
/// when forming the concurrence.
const RANK_CUTOFF: f64 = 1e-14;

fn same_dim(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(())
}

/// `tr|rho1 - rho2| / 2`.
pub fn trace_distance(rho1: &ComplexMatrix, rho2: &ComplexMatrix) -> Result<f64> {
    same_dim(rho1, rho2)?;
    let eig = (rho1 - rho2).hermitian_eig()?;
    Ok(0.5 * eig.values.iter().map(|v| v.abs()).sum::<f64>())
}

/// Uhlmann fidelity `(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`.
pub fn fidelity(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    same_dim(rho, sigma)?;
    let s = rho.psd_sqrt()?;
    let inner = (&(&s * sigma) * &s).hermitian_part();
    let eig = inner.hermitian_eig()?;
    Ok(eig
        .values
        .iter()
        .map(|v| v.max(0.0).sqrt())
        .sum::<f64>()
        .powi(2))
}

pub fn linear_entropy(rho: &ComplexMatrix) -> f64 {
    1.0 - (rho * rho).trace().re
}

/// Singular values of a small complex matrix by one-sided Jacobi rotations,
/// in descending order.
pub fn singular_values(a: &ComplexMatrix) -> Vec<f64> {
    let n = a.dim();
    let mut cols: Vec<Vec<C64>> = (0..n)
        .map(|j| (0..n).map(|i| a[(i, j)]).collect())
        .collect();
    for _ in 0..60 {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha: f64 = cols[i].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cols[j].iter().map(|z| z.norm_sqr()).sum();
                let gamma: C64 = cols[i]
                    .iter()
                    .zip(&cols[j])
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                let g = gamma.norm();
                if g <= 1e-15 * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                for z in cols[j].iter_mut() {
                    *z *= phase.conj();
                }
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                let (head, tail) = cols.split_at_mut(j);
                for (x, y) in head[i].iter_mut().zip(tail[0].iter_mut()) {
                    (*x, *y) = (*x * cs - *y * sn, *x * sn + *y * cs);
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// `sigma_y (x) sigma_y`.
fn spin_flip() -> ComplexMatrix {
    pauli_y().kron(&pauli_y()).expect("4x4")
}

/// The values `sqrt(lambda_i)` in descending order, where `lambda_i` are the
/// eigenvalues of `rho (sy sy) rho* (sy sy)`. They are the singular values of
/// `tau_kl = <w_k| sy sy |w_l*>` over the weighted eigenvectors
/// `|w_k> = sqrt(mu_k) |v_k>` of `rho`.
pub fn concurrence_spectrum(rho: &ComplexMatrix) -> Result<Vec<f64>> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            left: 4,
            right: rho.dim(),
        });
    }
    let eig = rho.hermitian_eig()?;
    let scale = rho.trace().re.abs().max(f64::MIN_POSITIVE);
    if let Some(&lo) = eig.values.first() {
        if lo < -1e-8 * scale.max(1.0) {
            return Err(Error::NegativeEigenvalue { value: lo });
        }
    }
    let flip = spin_flip();
    let weighted: Vec<StateVector> = (0..4)
        .filter(|&k| eig.values[k] > RANK_CUTOFF * scale)
        .map(|k| {
            eig.vectors
                .column(k)
                .scale(C64::new(eig.values[k].sqrt(), 0.0))
        })
        .collect();
    let r = weighted.len();
    let mut out = Vec::with_capacity(4);
    if r > 0 {
        let flipped: Vec<StateVector> = weighted
            .iter()
            .map(|w| {
                flip.apply(&StateVector::new(
                    w.amplitudes().iter().map(|z| z.conj()).collect(),
                ))
                .expect("dim 4")
            })
            .collect();
        let mut tau = ComplexMatrix::zeros(r);
        for k in 0..r {
            for l in 0..r {
                tau[(k, l)] = weighted[k].inner(&flipped[l]);
            }
        }
        out = singular_values(&tau);
    }
    out.resize(4, 0.0);
    Ok(out)
}

/// Wootters concurrence `max(0, s1 - s2 - s3 - s4)`.
pub fn concurrence(rho: &ComplexMatrix) -> Result<f64> {
    let s = concurrence_spectrum(rho)?;
    Ok((s[0] - s[1] - s[2] - s[3]).max(0.0))
}

/// `|<psi| sy sy |psi*>|` for a two-qubit pure state.
pub fn concurrence_pure(psi: &StateVector) -> Result<f64> {
    if psi.dim() != 4 {
        return Err(Error::DimensionMismatch {
            left: 4,
            right: psi.dim(),
        });
    }
    let conj = StateVector::new(psi.amplitudes().iter().map(|z| z.conj()).collect());
    Ok(psi.inner(&spin_flip().apply(&conj)?).norm() / psi.norm_sqr())
}

fn check_pure_three(psi: &StateVector) -> Result<()> {
    if psi.dim() != 8 {
        return Err(Error::DimensionMismatch {
            left: 8,
            right: psi.dim(),
        });
    }
    if (psi.norm_sqr() - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "three-tangle needs a normalized pure state (norm^2 = {})",
            psi.norm_sqr()
        )));
    }
    Ok(())
}

/// Pairwise concurrence between two wires of a three-qubit pure state.
pub fn pair_concurrence(psi: &StateVector, w1: usize, w2: usize) -> Result<f64> {
    let (a, b) = (w1.min(w2), w1.max(w2));
    concurrence(&psi.density().partial_trace(&[a, b])?)
}

/// `2 s_focus - C^2(focus, x) - C^2(focus, y)` for a pure three-qubit state.
pub fn three_tangle_with_focus(psi: &StateVector, focus: usize) -> Result<f64> {
    check_pure_three(psi)?;
    if focus > 2 {
        return Err(Error::InvalidWires(format!(
            "focus wire {focus} outside 3 wires"
        )));
    }
    let rho = psi.density();
    let s = linear_entropy(&rho.partial_trace(&[focus])?);
    let others: Vec<usize> = (0..3).filter(|&w| w != focus).collect();
    let c1 = pair_concurrence(psi, focus, others[0])?;
    let c2 = pair_concurrence(psi, focus, others[1])?;
    Ok(2.0 * s - c1 * c1 - c2 * c2)
}

/// Three-tangle with the system qubit (wire 1 of `(a, q, q')`) as focus.
pub fn three_tangle(psi: &StateVector) -> Result<f64> {
    three_tangle_with_focus(psi, 1)
}

/// Power-law fit `value ~ t^(-delta)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    /// Magnitude of the log-log slope.
    pub delta: f64,
    pub stderr: f64,
    pub points: usize,
}

/// Ordinary least squares of `ln value` on `ln t` over `t_lo <= t <= t_hi`.
pub fn fit_critical_exponent(series: &[(f64, f64)], window: (f64, f64)) -> Result<ExponentFit> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(t, _)| t >= window.0 && t <= window.1)
        .collect();
    if pts.len() < 3 {
        return Err(Error::Domain(format!(
            "exponent fit needs at least 3 points in window, got {}",
            pts.len()
        )));
    }
    if let Some(&(t, v)) = pts.iter().find(|&&(t, v)| !(t > 0.0 && v > 0.0)) {
        return Err(Error::Domain(format!(
            "log-log fit needs positive data, got ({t}, {v})"
        )));
    }
    let n = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = (ssr / (n - 2.0) / sxx).sqrt();
    Ok(ExponentFit {
        delta: slope.abs(),
        stderr,
        points: pts.len(),
    })
}

/// Correlations of one time point of the three-qubit evolution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRecord {
    pub t: f64,
    pub r: f64,
    pub distance: f64,
    pub concurrence_qq: f64,
    pub concurrence_aq: f64,
    pub concurrence_aqp: f64,
    pub linear_entropy_q: f64,
    pub linear_entropy_a: f64,
    pub tangle: f64,
}

impl CorrelationRecord {
    /// Entries for a normalized state on wires `(a, q, q')`; `distance` is
    /// supplied by the caller.
    pub fn from_state(r: f64, t: f64, psi: &StateVector, distance: f64) -> Result<Self> {
        check_pure_three(psi)?;
        let rho = psi.density();
        Ok(Self {
            t,
            r,
            distance,
            concurrence_qq: pair_concurrence(psi, 1, 2)?,
            concurrence_aq: pair_concurrence(psi, 0, 1)?,
            concurrence_aqp: pair_concurrence(psi, 0, 2)?,
            linear_entropy_q: linear_entropy(&rho.partial_trace(&[1])?),
            linear_entropy_a: linear_entropy(&rho.partial_trace(&[0])?),
            tangle: three_tangle(psi)?,
        })
    }
}
