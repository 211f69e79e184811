//! Fixed-step classical Runge-Kutta for linear matrix equations `dY/dt = K(t) Y`.

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

/// Integrates `dY/dt = K(t) Y` from `t0` to `t1` with step `dt`; the last step
/// is shortened so that `t1` is hit exactly. `generator` is evaluated once per
/// stage time (`t`, `t + h/2`, `t + h`).
pub fn rk4_linear<F>(
    generator: F,
    y0: &ComplexMatrix,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<ComplexMatrix>
where
    F: Fn(f64) -> Result<ComplexMatrix>,
{
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Domain(format!("step must be positive, got {dt}")));
    }
    if t1 < t0 {
        return Err(Error::Domain(format!("end time {t1} precedes start {t0}")));
    }
    let span = t1 - t0;
    let steps = ((span / dt) - 1e-9).ceil().max(0.0) as usize;
    let mut y = y0.clone();
    let mut k_start = if steps > 0 {
        Some(generator(t0)?)
    } else {
        None
    };
    for n in 0..steps {
        let ta = t0 + n as f64 * dt;
        let tb = if n + 1 == steps {
            t1
        } else {
            t0 + (n + 1) as f64 * dt
        };
        let h = tb - ta;
        let ka = k_start.take().expect("generator at step start");
        let km = generator(ta + 0.5 * h)?;
        let kb = generator(tb)?;
        let s1 = &ka * &y;
        let s2 = &km * &(&y + &s1.scale_real(0.5 * h));
        let s3 = &km * &(&y + &s2.scale_real(0.5 * h));
        let s4 = &kb * &(&y + &s3.scale_real(h));
        let incr = &(&s1 + &s4) + &(&s2 + &s3).scale_real(2.0);
        y = &y + &incr.scale_real(h / 6.0);
        k_start = Some(kb);
    }
    Ok(y)
}
