use ptdilate_core::dilation::{
    ancilla_state, context_for_time, postselect_ancilla_zero, propagate_u, CalibrationSettings,
    DEFAULT_DT,
};
use ptdilate_core::linalg::{ComplexMatrix, StateVector};
use ptdilate_core::metrics::{
    concurrence, concurrence_pure, fit_critical_exponent, linear_entropy, three_tangle,
    three_tangle_with_focus, trace_distance, CorrelationRecord,
};
use ptdilate_core::nonhermitian::{evolve_state, recurrence_time, NonHermitianParams};

fn phi_plus() -> StateVector {
    StateVector::from_real(&[1.0, 0.0, 0.0, 1.0]).normalized()
}

/// Full `(a, q, q')` state after `U_aq (x) I` acting on `Ry(theta)|0> (x) |Phi+>`.
fn three_qubit_state(r: f64, t: f64) -> StateVector {
    let ctx = context_for_time(r, t, &CalibrationSettings::default()).unwrap();
    let u = propagate_u(&ctx, t, DEFAULT_DT).unwrap();
    let big = u.kron(&ComplexMatrix::identity(2)).unwrap();
    big.apply(&ancilla_state(ctx.eta0).kron(&phi_plus()).unwrap())
        .unwrap()
}

fn swap_qubits(psi: &StateVector) -> StateVector {
    let a = psi.amplitudes();
    StateVector::new(vec![a[0], a[2], a[1], a[3]])
}

fn analytic_pair(r: f64, t: f64) -> StateVector {
    let big = ptdilate_core::nonhermitian::nh_propagator(NonHermitianParams::new(r, t))
        .kron(&ComplexMatrix::identity(2))
        .unwrap();
    big.apply(&phi_plus()).unwrap().normalized()
}

fn grid(stop: f64, step: f64) -> Vec<f64> {
    let n = (stop / step).round() as usize;
    (0..=n).map(|k| k as f64 * step).collect()
}

#[test]
fn correlation_identities_along_ideal_trajectory() {
    for r in [0.6, 1.0, 1.3] {
        for t in grid(4.0, 0.5) {
            let psi = three_qubit_state(r, t);
            let rec = CorrelationRecord::from_state(r, t, &psi, 0.0).unwrap();
            let tag = format!("r {r} t {t}");
            assert!(
                (rec.tangle + rec.concurrence_qq.powi(2) - 1.0).abs() < 1e-8,
                "{tag}: {rec:?}"
            );
            assert!(
                rec.concurrence_aq < 1e-8 && rec.concurrence_aqp < 1e-8,
                "{tag}: {rec:?}"
            );
            assert!((rec.linear_entropy_q - 0.5).abs() < 1e-8, "{tag}");
            assert!(
                (rec.tangle - 2.0 * rec.linear_entropy_a).abs() < 1e-8,
                "{tag}"
            );
            assert!(
                (three_tangle_with_focus(&psi, 0).unwrap() - rec.tangle).abs() < 1e-8,
                "{tag}"
            );
            for v in [
                rec.concurrence_qq,
                rec.linear_entropy_q,
                rec.linear_entropy_a,
                rec.tangle,
            ] {
                assert!((-1e-12..=1.0 + 1e-12).contains(&v), "{tag}: {v}");
            }

            let (pair, _) = postselect_ancilla_zero(&psi).unwrap();
            let swapped = swap_qubits(&pair);
            assert!(pair.sub(&swapped).norm() < 1e-9, "{tag}");
            let analytic = analytic_pair(r, t);
            assert!(
                analytic.sub(&swap_qubits(&analytic)).norm() < 1e-10,
                "{tag}"
            );
            assert!(1.0 - pair.inner(&analytic).norm_sqr() < 1e-7, "{tag}");
        }
    }
}

#[test]
fn hermitian_limit_keeps_maximal_entanglement() {
    for t in grid(8.0, 0.25) {
        let psi = three_qubit_state(0.0, t);
        let (pair, _) = postselect_ancilla_zero(&psi).unwrap();
        assert!(
            (concurrence(&pair.density()).unwrap() - 1.0).abs() < 1e-9,
            "t {t}"
        );
        assert!((three_tangle(&psi).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn postselected_concurrence_recurs() {
    let tr = recurrence_time(0.6).unwrap();
    let (pair, _) = postselect_ancilla_zero(&three_qubit_state(0.6, tr)).unwrap();
    assert!((concurrence(&pair.density()).unwrap() - 1.0).abs() < 1e-6);
    let (mid, _) = postselect_ancilla_zero(&three_qubit_state(0.6, 0.5 * tr)).unwrap();
    assert!(concurrence(&mid.density()).unwrap() < 1.0 - 1e-3);
}

fn theory_distance(r: f64, t: f64) -> f64 {
    let p = NonHermitianParams::new(r, t);
    let a = evolve_state(p, &StateVector::basis(2, 0))
        .unwrap()
        .normalized()
        .density();
    let b = evolve_state(p, &StateVector::basis(2, 1))
        .unwrap()
        .normalized()
        .density();
    trace_distance(&a, &b).unwrap()
}

#[test]
fn critical_exponents_at_the_exceptional_point() {
    let ts = grid(3.0, 0.01);
    let dist: Vec<(f64, f64)> = ts.iter().map(|&t| (t, theory_distance(1.0, t))).collect();
    let fit = fit_critical_exponent(&dist, (1.0, 3.0)).unwrap();
    assert!((fit.delta - 1.93).abs() < 0.08, "{fit:?}");
    assert_eq!(fit.points, 201);

    let conc: Vec<(f64, f64)> = ts
        .iter()
        .map(|&t| (t, concurrence_pure(&analytic_pair(1.0, t)).unwrap()))
        .collect();
    let fit = fit_critical_exponent(&conc, (1.0, 3.0)).unwrap();
    assert!((fit.delta - 1.71).abs() < 0.05, "{fit:?}");
}

#[test]
fn trace_distance_triangle_inequality_on_trajectory_states() {
    let states: Vec<ComplexMatrix> = [0.3, 1.1, 2.7]
        .iter()
        .map(|&t| {
            evolve_state(
                NonHermitianParams::new(0.6, t),
                &StateVector::from_real(&[0.8, 0.6]),
            )
            .unwrap()
            .normalized()
            .density()
        })
        .collect();
    let d = |i: usize, j: usize| trace_distance(&states[i], &states[j]).unwrap();
    assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-9);
    assert!((d(0, 1) - d(1, 0)).abs() < 1e-15);
    assert!((linear_entropy(&states[0])).abs() < 1e-12);
}

#[test]
fn records_serialize_with_full_header() {
    let psi = three_qubit_state(0.6, 1.0);
    let rec = CorrelationRecord::from_state(0.6, 1.0, &psi, 0.25).unwrap();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.serialize(rec).unwrap();
    let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(
        header,
        "t,r,distance,concurrence_qq,concurrence_aq,concurrence_aqp,linear_entropy_q,linear_entropy_a,tangle"
    );
}
