//! Numerical synthesis of two-qubit unitaries into a three-CNOT template.
//!
//! `U = e^{i phi} K4 X K3 X K2 X K1` with `Kj = U3(a) (x) U3(q)` and `X` a
//! CNOT. The 25 real parameters (8 slots of three angles plus the phase) are
//! fitted by Nelder-Mead followed by Levenberg-Marquardt on the Frobenius
//! residual, restarted from seeded random points.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{cnot_matrix, rz, u3, Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::seeding;

pub const N_PARAMS: usize = 25;
const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CnotOrientation {
    /// Control on the system qubit `q`, target on the ancilla `a`.
    #[default]
    ControlSystem,
    ControlAncilla,
}

impl CnotOrientation {
    fn wires(self) -> (&'static str, &'static str) {
        match self {
            CnotOrientation::ControlSystem => ("q", "a"),
            CnotOrientation::ControlAncilla => ("a", "q"),
        }
    }

    fn matrix(self) -> ComplexMatrix {
        match self {
            CnotOrientation::ControlSystem => cnot_matrix(1, 0, 2).expect("two wires"),
            CnotOrientation::ControlAncilla => cnot_matrix(0, 1, 2).expect("two wires"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisConfig {
    pub seed: u64,
    /// RNG stream; derive from the grid point with [`seeding::stream_for_point`].
    pub stream: u64,
    pub restarts: usize,
    pub nm_max_evals: usize,
    pub lm_max_iters: usize,
    /// Restarts stop once this `err_u` is reached.
    pub target_err: f64,
    /// Reports above this `err_u` are flagged as failed.
    pub accept_err: f64,
    pub orientation: CnotOrientation,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            stream: 0,
            restarts: 8,
            nm_max_evals: 3000,
            lm_max_iters: 400,
            target_err: 1e-9,
            accept_err: 5e-4,
            orientation: CnotOrientation::ControlSystem,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SynthesisReport {
    pub circuit: Circuit,
    pub err_u: f64,
    pub fidelity_fu: f64,
    /// Objective evaluations plus Levenberg-Marquardt iterations, over all restarts.
    pub iterations: usize,
    pub restarts_used: usize,
    pub failed: bool,
}

/// `||target - candidate||_2 / ||target||_2`.
pub fn err_u(target: &ComplexMatrix, candidate: &ComplexMatrix) -> Result<f64> {
    if target.dim() != candidate.dim() {
        return Err(Error::DimensionMismatch {
            left: target.dim(),
            right: candidate.dim(),
        });
    }
    Ok((target - candidate).two_norm() / target.two_norm())
}

/// Unitary of an arbitrary circuit, global phase included.
pub fn assemble(circuit: &Circuit) -> Result<ComplexMatrix> {
    circuit.unitary()
}

/// True when `circuit` has the two-wire, three-CNOT, eight-slot layout.
pub fn is_template(circuit: &Circuit) -> bool {
    if circuit.wires != ["a", "q"] || circuit.gates.len() != 11 {
        return false;
    }
    let mut idx = 0;
    for slot in 0..4 {
        for wire in ["a", "q"] {
            let g = &circuit.gates[idx];
            if g.kind != GateKind::U3 || g.wires != [wire] {
                return false;
            }
            idx += 1;
        }
        if slot < 3 {
            if circuit.gates[idx].kind != GateKind::Cnot {
                return false;
            }
            idx += 1;
        }
    }
    true
}

/// Wraps to `(-2pi, 2pi]`, which leaves `Rz` and `Ry` unchanged.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * TWO_PI);
    if w > TWO_PI {
        w - 2.0 * TWO_PI
    } else {
        w
    }
}

fn wrap_phase(p: f64) -> f64 {
    let w = p.rem_euclid(TWO_PI);
    if w > std::f64::consts::PI {
        w - TWO_PI
    } else {
        w
    }
}

/// Template circuit for a parameter vector laid out as
/// `[a1(3), q1(3), a2(3), q2(3), ..., phase]`.
pub fn template_circuit(params: &[f64], orientation: CnotOrientation) -> Circuit {
    assert_eq!(params.len(), N_PARAMS);
    let (ctrl, tgt) = orientation.wires();
    let mut c = Circuit::new(&["a", "q"]);
    for slot in 0..4 {
        let base = 6 * slot;
        let a: Vec<f64> = params[base..base + 3]
            .iter()
            .map(|&x| wrap_angle(x))
            .collect();
        let q: Vec<f64> = params[base + 3..base + 6]
            .iter()
            .map(|&x| wrap_angle(x))
            .collect();
        c.push(Gate::single(GateKind::U3, "a", &a));
        c.push(Gate::single(GateKind::U3, "q", &q));
        if slot < 3 {
            c.push(Gate::cnot(ctrl, tgt));
        }
    }
    c.global_phase = wrap_phase(params[24]);
    c
}

/// `d/d(alpha, beta, gamma)` of `Rz(alpha) Ry(beta) Rz(gamma)`.
fn u3_with_derivatives(a: f64, b: f64, g: f64) -> (ComplexMatrix, [ComplexMatrix; 3]) {
    let u = u3(a, b, g);
    let minus_half_i_z = ComplexMatrix::diag(&[C64::new(0.0, -0.5), C64::new(0.0, 0.5)]);
    let da = &minus_half_i_z * &u;
    let dg = &u * &minus_half_i_z;
    let (s, c) = (b / 2.0).sin_cos();
    let dry = ComplexMatrix::from_real_rows([[-0.5 * s, -0.5 * c], [0.5 * c, -0.5 * s]]);
    let db = &(&rz(a) * &dry) * &rz(g);
    (u, [da, db, dg])
}

/// Evaluates the template unitary for fixed orientation.
struct Template {
    cx: ComplexMatrix,
}

impl Template {
    fn slots(&self, p: &[f64]) -> Vec<ComplexMatrix> {
        (0..4)
            .map(|s| {
                let b = 6 * s;
                u3(p[b], p[b + 1], p[b + 2])
                    .kron(&u3(p[b + 3], p[b + 4], p[b + 5]))
                    .expect("4x4")
            })
            .collect()
    }

    fn unitary(&self, p: &[f64]) -> ComplexMatrix {
        let k = self.slots(p);
        let mut v = k[0].clone();
        for slot in &k[1..] {
            v = &(slot * &self.cx) * &v;
        }
        v.scale(C64::from_polar(1.0, p[24]))
    }

    fn cost(&self, p: &[f64], target: &ComplexMatrix) -> f64 {
        let d = &self.unitary(p) - target;
        d.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }

    /// Residual vector (32 reals) and its Jacobian (32 x 25, row-major).
    fn residual_and_jacobian(&self, p: &[f64], target: &ComplexMatrix) -> (Vec<f64>, Vec<f64>) {
        let phase = C64::from_polar(1.0, p[24]);
        let mut u_a = Vec::with_capacity(4);
        let mut u_q = Vec::with_capacity(4);
        for s in 0..4 {
            let b = 6 * s;
            u_a.push(u3_with_derivatives(p[b], p[b + 1], p[b + 2]));
            u_q.push(u3_with_derivatives(p[b + 3], p[b + 4], p[b + 5]));
        }
        let k: Vec<ComplexMatrix> = (0..4)
            .map(|s| u_a[s].0.kron(&u_q[s].0).expect("4x4"))
            .collect();
        // right[s] = X K_{s-1} ... X K_0 (identity for s = 0); left[s] = K_3 X ... K_{s+1} X.
        let mut right = vec![ComplexMatrix::identity(4)];
        for s in 1..4 {
            let prev = &k[s - 1] * &right[s - 1];
            right.push(&self.cx * &prev);
        }
        let mut left = vec![ComplexMatrix::identity(4); 4];
        for s in (0..3).rev() {
            left[s] = &(&left[s + 1] * &k[s + 1]) * &self.cx;
        }
        let v = (&(&left[0] * &k[0]) * &right[0]).scale(phase);
        let mut res = vec![0.0; 32];
        for (m, (a, b)) in v.as_slice().iter().zip(target.as_slice()).enumerate() {
            res[2 * m] = a.re - b.re;
            res[2 * m + 1] = a.im - b.im;
        }
        let mut jac = vec![0.0; 32 * N_PARAMS];
        let mut put = |col: usize, d: &ComplexMatrix| {
            for (m, z) in d.as_slice().iter().enumerate() {
                jac[(2 * m) * N_PARAMS + col] = z.re;
                jac[(2 * m + 1) * N_PARAMS + col] = z.im;
            }
        };
        for s in 0..4 {
            for j in 0..3 {
                let dk_a = u_a[s].1[j].kron(&u_q[s].0).expect("4x4");
                put(6 * s + j, &(&(&left[s] * &dk_a) * &right[s]).scale(phase));
                let dk_q = u_a[s].0.kron(&u_q[s].1[j]).expect("4x4");
                put(
                    6 * s + 3 + j,
                    &(&(&left[s] * &dk_q) * &right[s]).scale(phase),
                );
            }
        }
        put(24, &v.scale(C64::new(0.0, 1.0)));
        (res, jac)
    }
}

/// Nelder-Mead with dimension-adaptive coefficients. Returns the best point,
/// its value and the number of evaluations.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    step: f64,
    max_evals: usize,
    ftol: f64,
) -> (Vec<f64>, f64, usize) {
    let n = x0.len();
    let nf = n as f64;
    let (alpha, beta, gamma, delta) =
        (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut evals = n + 1;
    while evals < max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        if values[n] - values[0] < ftol {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|d| simplex[..n].iter().map(|v| v[d]).sum::<f64>() / nf)
            .collect();
        let along = |coef: f64| -> Vec<f64> {
            (0..n)
                .map(|d| centroid[d] + coef * (simplex[n][d] - centroid[d]))
                .collect()
        };
        let xr = along(-alpha);
        let fr = f(&xr);
        evals += 1;
        if fr < values[0] {
            let xe = along(-alpha * beta);
            let fe = f(&xe);
            evals += 1;
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
        } else {
            let (xc, fc) = if fr < values[n] {
                let x = along(-alpha * gamma);
                let v = f(&x);
                (x, v)
            } else {
                let x = along(gamma);
                let v = f(&x);
                (x, v)
            };
            evals += 1;
            if fc < values[n].min(fr) {
                simplex[n] = xc;
                values[n] = fc;
            } else {
                for i in 1..=n {
                    let shrunk: Vec<f64> = (0..n)
                        .map(|d| simplex[0][d] + delta * (simplex[i][d] - simplex[0][d]))
                        .collect();
                    values[i] = f(&shrunk);
                    simplex[i] = shrunk;
                }
                evals += n;
            }
        }
    }
    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("non-empty simplex");
    (simplex[best].clone(), values[best], evals)
}

/// Solves `A x = b` for symmetric positive-definite `A` (row-major, `n x n`).
fn cholesky_solve(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = a[i * n + j] - (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum::<f64>();
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (b[i] - (0..i).map(|k| l[i * n + k] * y[k]).sum::<f64>()) / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = (y[i] - (i + 1..n).map(|k| l[k * n + i] * x[k]).sum::<f64>()) / l[i * n + i];
    }
    Some(x)
}

/// Levenberg-Marquardt on the template residual; returns the refined point,
/// its cost and the iteration count.
fn levenberg_marquardt(
    tpl: &Template,
    target: &ComplexMatrix,
    x0: &[f64],
    max_iters: usize,
    cost_goal: f64,
) -> (Vec<f64>, f64, usize) {
    let n = N_PARAMS;
    let mut x = x0.to_vec();
    let mut cost = tpl.cost(&x, target);
    let mut lambda = 1e-3;
    let mut iters = 0;
    while iters < max_iters && cost > cost_goal {
        iters += 1;
        let (res, jac) = tpl.residual_and_jacobian(&x, target);
        let mut jtj = vec![0.0; n * n];
        let mut jtr = vec![0.0; n];
        for row in 0..32 {
            let jr = &jac[row * n..(row + 1) * n];
            for i in 0..n {
                jtr[i] += jr[i] * res[row];
                for j in 0..=i {
                    jtj[i * n + j] += jr[i] * jr[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                jtj[j * n + i] = jtj[i * n + j];
            }
        }
        let mut improved = false;
        while lambda < 1e12 {
            let mut damped = jtj.clone();
            for i in 0..n {
                damped[i * n + i] += lambda * (jtj[i * n + i] + 1e-9);
            }
            let rhs: Vec<f64> = jtr.iter().map(|g| -g).collect();
            if let Some(step) = cholesky_solve(&damped, &rhs, n) {
                let trial: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
                let c = tpl.cost(&trial, target);
                if c < cost {
                    let rel = (cost - c) / cost.max(f64::MIN_POSITIVE);
                    x = trial;
                    cost = c;
                    lambda = (lambda / 3.0).max(1e-12);
                    improved = rel > 1e-14 || cost <= cost_goal;
                    break;
                }
            }
            lambda *= 4.0;
        }
        if !improved {
            break;
        }
    }
    (x, cost, iters)
}

/// Fits the template to `target`. Deterministic for a given config.
pub fn decompose(target: &ComplexMatrix, config: &SynthesisConfig) -> Result<SynthesisReport> {
    if target.dim() != 4 {
        return Err(Error::DimensionMismatch {
            left: 4,
            right: target.dim(),
        });
    }
    if target.unitarity_defect() > 1e-8 {
        return Err(Error::Domain(format!(
            "synthesis target is not unitary (defect {:.3e})",
            target.unitarity_defect()
        )));
    }
    let tpl = Template {
        cx: config.orientation.matrix(),
    };
    let mut rng = seeding::rng(config.seed, config.stream);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut iterations = 0;
    let mut restarts_used = 0;
    // err_u <= ||.||_F, so this Frobenius goal guarantees the err_u goal.
    let cost_goal = (config.target_err * 0.5).powi(2);
    for _ in 0..config.restarts.max(1) {
        restarts_used += 1;
        let x0: Vec<f64> = (0..N_PARAMS)
            .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
            .collect();
        let (xn, _, evals) = nelder_mead(
            |p| tpl.cost(p, target),
            &x0,
            0.5,
            config.nm_max_evals,
            1e-12,
        );
        let (xl, cl, its) = levenberg_marquardt(&tpl, target, &xn, config.lm_max_iters, cost_goal);
        iterations += evals + its;
        if best.as_ref().is_none_or(|(_, c)| cl < *c) {
            best = Some((xl, cl));
        }
        let circuit = template_circuit(&best.as_ref().expect("set above").0, config.orientation);
        if err_u(target, &assemble(&circuit)?)? <= config.target_err {
            break;
        }
    }
    let (params, _) = best.expect("at least one restart");
    let circuit = template_circuit(&params, config.orientation);
    let e = err_u(target, &assemble(&circuit)?)?;
    Ok(SynthesisReport {
        circuit,
        err_u: e,
        fidelity_fu: 1.0 - e,
        iterations,
        restarts_used,
        failed: e > config.accept_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::ry;
    use crate::linalg::I;

    fn finite_difference_jacobian_matches(p: &[f64], target: &ComplexMatrix, tpl: &Template) {
        let (_, jac) = tpl.residual_and_jacobian(p, target);
        let h = 1e-6;
        for col in 0..N_PARAMS {
            let mut a = p.to_vec();
            let mut b = p.to_vec();
            a[col] += h;
            b[col] -= h;
            let da = &tpl.unitary(&a) - &tpl.unitary(&b);
            for (m, z) in da.as_slice().iter().enumerate() {
                let fd = z.scale(0.5 / h);
                assert!(
                    (jac[(2 * m) * N_PARAMS + col] - fd.re).abs() < 1e-7,
                    "col {col}"
                );
                assert!(
                    (jac[(2 * m + 1) * N_PARAMS + col] - fd.im).abs() < 1e-7,
                    "col {col}"
                );
            }
        }
    }

    #[test]
    fn jacobian_is_exact() {
        let p: Vec<f64> = (0..N_PARAMS).map(|i| 0.37 * i as f64 - 2.0).collect();
        for o in [
            CnotOrientation::ControlSystem,
            CnotOrientation::ControlAncilla,
        ] {
            let tpl = Template { cx: o.matrix() };
            finite_difference_jacobian_matches(&p, &ComplexMatrix::identity(4), &tpl);
        }
    }

    #[test]
    fn template_unitary_matches_circuit_assembly() {
        let p: Vec<f64> = (0..N_PARAMS)
            .map(|i| (i as f64 * 1.3).sin() * 3.0)
            .collect();
        for o in [
            CnotOrientation::ControlSystem,
            CnotOrientation::ControlAncilla,
        ] {
            let tpl = Template { cx: o.matrix() };
            let c = template_circuit(&p, o);
            assert!(is_template(&c));
            assert_eq!(c.cnot_count(), 3);
            assert!((&tpl.unitary(&p) - &assemble(&c).unwrap()).max_abs() < 1e-13);
        }
    }

    #[test]
    fn zero_angles_give_cnot() {
        let c = template_circuit(&[0.0; N_PARAMS], CnotOrientation::ControlSystem);
        assert_eq!(assemble(&c).unwrap(), cnot_matrix(1, 0, 2).unwrap());
    }

    #[test]
    fn err_u_examples() {
        let id = ComplexMatrix::identity(4);
        assert_eq!(err_u(&id, &id).unwrap(), 0.0);
        assert!(
            (err_u(&id, &id.scale(C64::from_polar(1.0, std::f64::consts::PI))).unwrap() - 2.0)
                .abs()
                < 1e-12
        );
        assert!(err_u(&id, &ComplexMatrix::identity(2)).is_err());
    }

    #[test]
    fn wrapping() {
        for a in [-13.0, -2.0 * TWO_PI, -5.19, 0.0, 3.0, TWO_PI, 7.0, 20.0] {
            let w = wrap_angle(a);
            assert!(w > -TWO_PI && w <= TWO_PI + 1e-12, "{a} -> {w}");
            assert!((&u3(w, w, w) - &u3(a, a, a)).max_abs() < 1e-12);
        }
        assert_eq!(wrap_angle(-5.19), -5.19);
    }

    #[test]
    fn exact_targets() {
        let cfg = SynthesisConfig::default();
        for target in [
            cnot_matrix(1, 0, 2).unwrap(),
            ComplexMatrix::identity(4),
            cnot_matrix(0, 1, 2).unwrap(),
        ] {
            let rep = decompose(&target, &cfg).unwrap();
            assert!(rep.err_u < 1e-9, "{}", rep.err_u);
            assert!(!rep.failed);
            assert!((rep.fidelity_fu - (1.0 - rep.err_u)).abs() < 1e-15);
            let again = err_u(&target, &assemble(&rep.circuit).unwrap()).unwrap();
            assert!((again - rep.err_u).abs() < 1e-14);
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let target = &cnot_matrix(0, 1, 2).unwrap() * &u3(0.2, 0.4, 0.6).kron(&ry(1.0)).unwrap();
        let cfg = SynthesisConfig {
            seed: 11,
            stream: 5,
            ..Default::default()
        };
        let a = decompose(&target, &cfg).unwrap();
        let b = decompose(&target, &cfg).unwrap();
        assert_eq!(a.circuit, b.circuit);
        assert_eq!(a.err_u.to_bits(), b.err_u.to_bits());
    }

    #[test]
    fn phase_shifted_target() {
        let target =
            &cnot_matrix(1, 0, 2).unwrap() * &u3(1.0, -0.3, 0.9).kron(&u3(0.1, 2.0, -1.0)).unwrap();
        let cfg = SynthesisConfig::default();
        let plain = decompose(&target, &cfg).unwrap();
        let shifted = decompose(&target.scale(C64::from_polar(1.0, 0.77)), &cfg).unwrap();
        assert!(plain.err_u < 1e-9 && shifted.err_u < 1e-9);
        let neg = decompose(&target.scale(I), &cfg).unwrap();
        assert!(neg.err_u < 1e-9);
    }

    #[test]
    fn rejects_non_unitary() {
        assert!(decompose(&ComplexMatrix::zeros(4), &SynthesisConfig::default()).is_err());
        assert!(decompose(&ComplexMatrix::identity(2), &SynthesisConfig::default()).is_err());
    }

    #[test]
    fn nelder_mead_minimizes_quadratic() {
        let (x, fx, _) = nelder_mead(
            |p| (p[0] - 1.0).powi(2) + 10.0 * (p[1] + 2.0).powi(2),
            &[0.0, 0.0],
            0.5,
            5000,
            1e-20,
        );
        assert!(fx < 1e-12 && (x[0] - 1.0).abs() < 1e-5 && (x[1] + 2.0).abs() < 1e-5);
    }

    #[test]
    fn cholesky_small_system() {
        let a = [4.0, 2.0, 2.0, 3.0];
        let x = cholesky_solve(&a, &[2.0, 1.0], 2).unwrap();
        assert!(
            (4.0 * x[0] + 2.0 * x[1] - 2.0).abs() < 1e-14
                && (2.0 * x[0] + 3.0 * x[1] - 1.0).abs() < 1e-14
        );
        assert!(cholesky_solve(&[-1.0], &[1.0], 1).is_none());
    }
}
