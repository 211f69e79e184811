//! One-parameter least-squares fits of the distinguishability series for the
//! recurrence time (unbroken phase) and the decay time (broken phase).

use ptdilate_core::linalg::{c, ComplexMatrix};
use ptdilate_core::metrics::{fit_critical_exponent, ExponentFit};
use ptdilate_core::nonhermitian::{decay_time, hamiltonian, recurrence_time};
use serde::Serialize;

use crate::error::{HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeKind {
    Recurrence,
    Decay,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TimeFit {
    pub r: f64,
    pub kind: TimeKind,
    pub fitted: f64,
    pub stderr: f64,
    pub analytic: f64,
    pub rel_err: f64,
    pub points: usize,
}

/// Trace distance between the normalized evolutions of `|0>` and `|1>` under
/// `C I - i S H` where the frequency is set by the characteristic time:
/// `omega = pi / T` (recurrence) or `omega = i / (2 tau)` (decay).
pub fn distance_model(r: f64, kind: TimeKind, param: f64, t: f64) -> f64 {
    let (cc, ss) = match kind {
        TimeKind::Recurrence => {
            let w = std::f64::consts::PI / param;
            ((w * t).cos(), (w * t).sin() / w)
        }
        TimeKind::Decay => {
            let k = 0.5 / param;
            ((k * t).cosh(), (k * t).sinh() / k)
        }
    };
    let a = &ComplexMatrix::identity(2).scale_real(cc) + &hamiltonian(r).scale(c(0.0, -ss));
    let (p0, p1) = (a.column(0), a.column(1));
    let overlap = p0.inner(&p1).norm_sqr() / (p0.norm_sqr() * p1.norm_sqr());
    (1.0 - overlap).max(0.0).sqrt()
}

fn sse(r: f64, kind: TimeKind, param: f64, series: &[(f64, f64)]) -> f64 {
    series
        .iter()
        .map(|&(t, d)| (distance_model(r, kind, param, t) - d).powi(2))
        .sum()
}

/// Least-squares characteristic time: log-spaced scan, then golden-section
/// refinement between the neighbours of the best scan point.
pub fn fit_characteristic_time(r: f64, series: &[(f64, f64)]) -> Result<TimeFit> {
    let (kind, analytic, lo, hi): (TimeKind, f64, f64, f64) = if r.abs() < 1.0 {
        (TimeKind::Recurrence, recurrence_time(r)?, 1.0, 200.0)
    } else if r.abs() > 1.0 {
        (TimeKind::Decay, decay_time(r)?, 0.01, 50.0)
    } else {
        return Err(HarnessError::Fit(
            "no characteristic time at the exceptional point".into(),
        ));
    };
    if series.len() < 3 {
        return Err(HarnessError::Fit(format!(
            "need at least 3 points, got {}",
            series.len()
        )));
    }
    let n = 4000;
    let grid: Vec<f64> = (0..=n)
        .map(|k| lo * (hi / lo).powf(k as f64 / n as f64))
        .collect();
    let best = (0..=n)
        .min_by(|&i, &j| sse(r, kind, grid[i], series).total_cmp(&sse(r, kind, grid[j], series)))
        .expect("nonempty grid");
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(n)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        if b - a < 1e-12 * b {
            break;
        }
        let x1 = b - g * (b - a);
        let x2 = a + g * (b - a);
        if sse(r, kind, x1, series) < sse(r, kind, x2, series) {
            b = x2;
        } else {
            a = x1;
        }
    }
    let fitted = 0.5 * (a + b);
    if !fitted.is_finite() || best == 0 || best == n {
        return Err(HarnessError::Fit(format!(
            "optimum at the scan boundary for r={r}"
        )));
    }
    let h = 1e-6 * fitted;
    let jac2: f64 = series
        .iter()
        .map(|&(t, _)| {
            ((distance_model(r, kind, fitted + h, t) - distance_model(r, kind, fitted - h, t))
                / (2.0 * h))
                .powi(2)
        })
        .sum();
    let dof = (series.len() - 1) as f64;
    let stderr = if jac2 > 0.0 {
        (sse(r, kind, fitted, series) / dof / jac2).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(TimeFit {
        r,
        kind,
        fitted,
        stderr,
        analytic,
        rel_err: (fitted - analytic).abs() / analytic,
        points: series.len(),
    })
}

/// Critical-exponent report for one observable at the exceptional point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentReport {
    pub observable: String,
    pub r: f64,
    pub window: (f64, f64),
    /// Fit on the theory curve sampled with step 0.01.
    pub theory: ExponentFit,
    /// Fit on the run's own series, where one exists.
    pub series: Option<ExponentFit>,
    pub series_source: Option<String>,
}

pub const EXPONENT_WINDOW: (f64, f64) = (1.0, 3.0);

/// Theory curve `f` on `[1, 3]` with step 0.01.
pub fn dense_theory_fit(f: impl Fn(f64) -> Result<f64>) -> Result<ExponentFit> {
    let series = (0..=200)
        .map(|k| 1.0 + 0.01 * k as f64)
        .map(|t| Ok((t, f(t)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(fit_critical_exponent(&series, EXPONENT_WINDOW)?)
}
