//! Experiment drivers. Each returns typed rows in deterministic `(r, t)` order.

use ptdilate_core::dilation::DilationContext;
use ptdilate_core::linalg::{c, ComplexMatrix, StateVector};
use ptdilate_core::metrics::{
    concurrence, concurrence_pure, linear_entropy, pair_concurrence, three_tangle, trace_distance,
};
use ptdilate_core::nonhermitian::{
    eigensystem, populations, state_norm_inverse, NonHermitianParams, PtRegime,
};
use ptdilate_core::tomography::{
    psd_project, single_qubit_from_expectations, single_qubit_gates, two_qubit_from_distributions,
    two_qubit_settings,
};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

use crate::config::{Experiment, ExperimentConfig, Mode};
use crate::engine::{
    contexts, dilated_state, ideal_state, point_ops, postselected_state, rotate, subspace_operator,
    timed, PointOps, Sampler,
};
use crate::error::Result;
use crate::fit::{
    dense_theory_fit, fit_characteristic_time, ExponentReport, TimeFit, EXPONENT_WINDOW,
};
use ptdilate_core::metrics::fit_critical_exponent;

/// Wall time of one stage of one `r` (propagation) or one point.
#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub r: f64,
    pub t: Option<f64>,
    pub stage: &'static str,
    pub seconds: f64,
}

/// Inputs available to a point computation.
pub struct PointInput<'a> {
    pub r: f64,
    pub t: f64,
    pub ctx: DilationContext,
    pub ops: Option<&'a PointOps>,
}

/// Mode actually used by an experiment: the Bloch data is analytic only and
/// the table always runs the dilation.
pub fn effective_mode(cfg: &ExperimentConfig) -> Mode {
    match cfg.experiment {
        Experiment::SuppBloch => Mode::Analytic,
        Experiment::TableS1 => cfg.mode.max(Mode::DilatedExact),
        _ => cfg.mode,
    }
}

fn drive<R, F>(cfg: &ExperimentConfig, synth: bool, point: F) -> Result<(Vec<R>, Vec<Timing>)>
where
    R: Send,
    F: Fn(&PointInput) -> Result<Vec<R>> + Sync,
{
    let times = cfg.times()?;
    let dilated = effective_mode(cfg).dilated();
    let per_r = cfg
        .r_values
        .par_iter()
        .map(|&r| {
            let (prep, secs) = timed(|| {
                if dilated {
                    let ops = point_ops(r, &times, cfg, synth)?;
                    let ctxs = ops.iter().map(|o| o.ctx).collect();
                    Ok((Some(ops), ctxs))
                } else {
                    Ok((None, contexts(r, &times, cfg)?))
                }
            })?;
            let (ops, ctxs): (Option<Vec<PointOps>>, Vec<DilationContext>) = prep;
            let mut timings = vec![Timing {
                r,
                t: None,
                stage: "propagate",
                seconds: secs,
            }];
            let points = times
                .par_iter()
                .enumerate()
                .map(|(k, &t)| {
                    let input = PointInput {
                        r,
                        t,
                        ctx: ctxs[k],
                        ops: ops.as_ref().map(|o| &o[k]),
                    };
                    let (rows, secs) = timed(|| point(&input))?;
                    Ok((
                        rows,
                        Timing {
                            r,
                            t: Some(t),
                            stage: "point",
                            seconds: secs,
                        },
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut rows = Vec::new();
            for (rs, tm) in points {
                rows.extend(rs);
                timings.push(tm);
            }
            Ok((rows, timings))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for (rs, ts) in per_r {
        rows.extend(rs);
        timings.extend(ts);
    }
    Ok((rows, timings))
}

fn label(cfg: &ExperimentConfig, r: f64, t: f64, setting: &str) -> String {
    format!("{}/r={r}/t={t}/{setting}", cfg.experiment.as_str())
}

fn ground(k: usize) -> StateVector {
    StateVector::basis(2, k)
}

/// `p0` of a normalized single-qubit state.
fn p0_of(psi: &StateVector) -> f64 {
    psi[0].norm_sqr()
}

#[derive(Clone, Debug, Serialize)]
pub struct PopulationRow {
    pub mode: &'static str,
    pub r: f64,
    pub t: f64,
    pub p0_theory: f64,
    pub p0_sim: Option<f64>,
    pub p0_num: Option<f64>,
    pub err_u: Option<f64>,
    pub p0_sampled: Option<f64>,
    pub p0_stderr: Option<f64>,
    pub success: Option<f64>,
    /// Concurrence between ancilla and system in the dilated state.
    pub c_aq: f64,
}

fn population_point(cfg: &ExperimentConfig, p: &PointInput) -> Result<PopulationRow> {
    let mode = effective_mode(cfg);
    let v = cfg.postselect_on;
    let p0_theory = if v == 0 {
        populations(NonHermitianParams::new(p.r, p.t), &ground(0))?.0
    } else {
        p0_of(&postselected_state(&ideal_state(&p.ctx, p.t, &ground(0), 0)?, v)?.0)
    };
    let mut row = PopulationRow {
        mode: mode.as_str(),
        r: p.r,
        t: p.t,
        p0_theory,
        p0_sim: None,
        p0_num: None,
        err_u: None,
        p0_sampled: None,
        p0_stderr: None,
        success: None,
        c_aq: 0.0,
    };
    let Some(ops) = p.ops else {
        row.c_aq = concurrence_pure(&ideal_state(&p.ctx, p.t, &ground(0), 0)?)?;
        return Ok(row);
    };
    let exact = dilated_state(&ops.u_exact, &ops.ctx, &ground(0), 0)?;
    let (kept, success) = postselected_state(&exact, v)?;
    row.p0_sim = Some(p0_of(&kept));
    row.success = Some(success);
    row.c_aq = concurrence_pure(&exact)?;
    let sim = dilated_state(&ops.u_sim, &ops.ctx, &ground(0), 0)?;
    if let Some(rep) = &ops.synthesis {
        row.p0_num = Some(p0_of(&postselected_state(&sim, v)?.0));
        row.err_u = Some(rep.err_u);
    }
    if mode.sampled() {
        let sampler = Sampler::new(cfg);
        let freqs = vec![sampler.measure(&sim, &label(cfg, p.r, p.t, "Z"))?];
        let est = sampler.estimate(&freqs, |f| Ok(sampler.postselected(&f[0], v)?.0[0]))?;
        row.p0_sampled = Some(est.value);
        row.p0_stderr = Some(est.stderr);
    }
    Ok(row)
}

pub fn run_fig1(cfg: &ExperimentConfig) -> Result<(Vec<PopulationRow>, Vec<Timing>)> {
    drive(cfg, cfg.synthesize, |p| Ok(vec![population_point(cfg, p)?]))
}

pub fn run_table_s1(cfg: &ExperimentConfig) -> Result<(Vec<PopulationRow>, Vec<Timing>)> {
    drive(cfg, true, |p| Ok(vec![population_point(cfg, p)?]))
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceRow {
    pub mode: &'static str,
    pub r: f64,
    pub t: f64,
    pub d_theory: f64,
    pub d_sim: Option<f64>,
    pub d_sampled: Option<f64>,
    pub d_stderr: Option<f64>,
}

const BLOCH_SETTINGS: [&str; 3] = ["X", "Y", "Z"];

fn distance_point(cfg: &ExperimentConfig, p: &PointInput) -> Result<DistanceRow> {
    let mode = effective_mode(cfg);
    let v = cfg.postselect_on;
    let op = subspace_operator(&p.ctx, p.t, v)?;
    let rho =
        |k: usize| -> Result<ComplexMatrix> { Ok(op.apply(&ground(k))?.normalized().density()) };
    let mut row = DistanceRow {
        mode: mode.as_str(),
        r: p.r,
        t: p.t,
        d_theory: trace_distance(&rho(0)?, &rho(1)?)?,
        d_sim: None,
        d_sampled: None,
        d_stderr: None,
    };
    let Some(ops) = p.ops else { return Ok(row) };
    let post = |u: &ComplexMatrix, k: usize| -> Result<StateVector> {
        Ok(postselected_state(&dilated_state(u, &ops.ctx, &ground(k), 0)?, v)?.0)
    };
    row.d_sim = Some(trace_distance(
        &post(&ops.u_exact, 0)?.density(),
        &post(&ops.u_exact, 1)?.density(),
    )?);
    if mode.sampled() {
        let sampler = Sampler::new(cfg);
        let mut freqs = Vec::with_capacity(6);
        for k in 0..2 {
            let state = dilated_state(&ops.u_sim, &ops.ctx, &ground(k), 0)?;
            for s in BLOCH_SETTINGS {
                let rotated = rotate(&state, &["a", "q"], single_qubit_gates(s, "q")?)?;
                freqs.push(
                    sampler.measure(&rotated, &label(cfg, p.r, p.t, &format!("{s}/init={k}")))?,
                );
            }
        }
        let est = sampler.estimate(&freqs, |f| {
            let mut rhos = Vec::with_capacity(2);
            for k in 0..2 {
                let mut e = [0.0; 3];
                for (j, ej) in e.iter_mut().enumerate() {
                    let q = sampler.postselected(&f[3 * k + j], v)?.0;
                    *ej = q[0] - q[1];
                }
                rhos.push(psd_project(&single_qubit_from_expectations(e[0], e[1], e[2]))?.matrix);
            }
            Ok(trace_distance(&rhos[0], &rhos[1])?)
        })?;
        row.d_sampled = Some(est.value);
        row.d_stderr = Some(est.stderr);
    }
    Ok(row)
}

/// Characteristic-time fit for one `r`, or the reason it is unavailable.
#[derive(Clone, Debug, Serialize)]
pub struct TimeFitEntry {
    pub r: f64,
    pub source: &'static str,
    pub fit: Option<TimeFit>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceFits {
    pub characteristic_times: Vec<TimeFitEntry>,
    pub exponents: Vec<ExponentReport>,
}

fn best_column<R>(
    rows: &[&R],
    pick: impl Fn(&R) -> (f64, Option<f64>, Option<f64>),
) -> (&'static str, Vec<f64>) {
    let vals: Vec<_> = rows.iter().map(|r| pick(r)).collect();
    if vals.iter().all(|v| v.2.is_some()) {
        ("sampled", vals.iter().map(|v| v.2.unwrap()).collect())
    } else if vals.iter().all(|v| v.1.is_some()) {
        ("sim", vals.iter().map(|v| v.1.unwrap()).collect())
    } else {
        ("theory", vals.iter().map(|v| v.0).collect())
    }
}

fn is_ep(r: f64) -> bool {
    (r.abs() - 1.0).abs() < 1e-12
}

fn series_exponent(ts: &[f64], vals: &[f64]) -> Option<ptdilate_core::metrics::ExponentFit> {
    let series: Vec<(f64, f64)> = ts.iter().copied().zip(vals.iter().copied()).collect();
    fit_critical_exponent(&series, EXPONENT_WINDOW).ok()
}

pub fn run_fig2(cfg: &ExperimentConfig) -> Result<(Vec<DistanceRow>, Vec<Timing>, DistanceFits)> {
    let (rows, timings) = drive(cfg, cfg.synthesize, |p| Ok(vec![distance_point(cfg, p)?]))?;
    let mut fits = DistanceFits {
        characteristic_times: Vec::new(),
        exponents: Vec::new(),
    };
    for &r in &cfg.r_values {
        let sel: Vec<&DistanceRow> = rows.iter().filter(|row| row.r == r).collect();
        let (source, vals) = best_column(&sel, |row| (row.d_theory, row.d_sim, row.d_sampled));
        let ts: Vec<f64> = sel.iter().map(|row| row.t).collect();
        if is_ep(r) {
            let theory = dense_theory_fit(|t| {
                let a = ptdilate_core::nonhermitian::nh_propagator(NonHermitianParams::new(r, t));
                Ok(trace_distance(
                    &a.column(0).normalized().density(),
                    &a.column(1).normalized().density(),
                )?)
            })?;
            fits.exponents.push(ExponentReport {
                observable: "distance".into(),
                r,
                window: EXPONENT_WINDOW,
                theory,
                series: series_exponent(&ts, &vals),
                series_source: Some(source.to_string()),
            });
        }
        let series: Vec<(f64, f64)> = ts.into_iter().zip(vals).collect();
        let (fit, error) = match fit_characteristic_time(r, &series) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        };
        fits.characteristic_times.push(TimeFitEntry {
            r,
            source,
            fit,
            error,
        });
    }
    Ok((rows, timings, fits))
}

#[derive(Clone, Debug, Serialize)]
pub struct EntanglementRow {
    pub mode: &'static str,
    pub r: f64,
    pub t: f64,
    pub subspace: u8,
    pub c_theory: f64,
    pub c_sim: Option<f64>,
    pub c_sampled: Option<f64>,
    pub c_stderr: Option<f64>,
    pub success: f64,
    pub c_qq_full: f64,
    pub c_aq: f64,
    pub c_aqp: f64,
    pub s_q: f64,
    pub s_a: f64,
    pub tangle: f64,
    pub vn_entropy_q: f64,
}

fn phi_plus() -> StateVector {
    StateVector::from_real(&[1.0, 0.0, 0.0, 1.0]).normalized()
}

/// `cos(th)|Phi-> - i sin(th)|Psi+>`.
pub fn partially_entangled(theta_deg: f64) -> StateVector {
    let th = theta_deg.to_radians();
    let phi_minus = StateVector::from_real(&[1.0, 0.0, 0.0, -1.0]).normalized();
    let psi_plus = StateVector::from_real(&[0.0, 1.0, 1.0, 0.0]).normalized();
    phi_minus
        .scale(c(th.cos(), 0.0))
        .add(&psi_plus.scale(c(0.0, -th.sin())))
}

fn von_neumann_bits(rho: &ComplexMatrix) -> Result<f64> {
    let eig = rho.hermitian_eig()?;
    Ok(eig
        .values
        .iter()
        .filter(|&&l| l > 1e-15)
        .map(|&l| -l * l.log2())
        .sum())
}

fn entanglement_point(
    cfg: &ExperimentConfig,
    p: &PointInput,
    initial: &StateVector,
    subspaces: &[u8],
) -> Result<Vec<EntanglementRow>> {
    let mode = effective_mode(cfg);
    let ideal = ideal_state(&p.ctx, p.t, initial, 1)?;
    let exact = match p.ops {
        Some(ops) => Some(dilated_state(&ops.u_exact, &ops.ctx, initial, 1)?),
        None => None,
    };
    let full = exact.as_ref().unwrap_or(&ideal);
    let rho = full.density();
    let rho_q = rho.partial_trace(&[1])?;
    let base = EntanglementRow {
        mode: mode.as_str(),
        r: p.r,
        t: p.t,
        subspace: 0,
        c_theory: 0.0,
        c_sim: None,
        c_sampled: None,
        c_stderr: None,
        success: 0.0,
        c_qq_full: pair_concurrence(full, 1, 2)?,
        c_aq: pair_concurrence(full, 0, 1)?,
        c_aqp: pair_concurrence(full, 0, 2)?,
        s_q: linear_entropy(&rho_q),
        s_a: linear_entropy(&rho.partial_trace(&[0])?),
        tangle: three_tangle(full)?,
        vn_entropy_q: von_neumann_bits(&rho_q)?,
    };
    let sampled_freqs = match (p.ops, mode.sampled()) {
        (Some(ops), true) => {
            let sampler = Sampler::new(cfg);
            let state = dilated_state(&ops.u_sim, &ops.ctx, initial, 1)?;
            let mut freqs = Vec::with_capacity(7);
            for s in two_qubit_settings(cfg.tomography_convention) {
                let rotated = rotate(&state, &["a", "q", "qp"], s.gates("q", "qp"))?;
                freqs.push((
                    s.id.clone(),
                    sampler.measure(&rotated, &label(cfg, p.r, p.t, &s.id))?,
                ));
            }
            Some(freqs)
        }
        _ => None,
    };
    let mut out = Vec::with_capacity(subspaces.len());
    for &v in subspaces {
        let (ideal_pair, ideal_success) = postselected_state(&ideal, v)?;
        let mut row = EntanglementRow {
            subspace: v,
            c_theory: concurrence_pure(&ideal_pair)?,
            success: ideal_success,
            ..base.clone()
        };
        if let Some(ex) = &exact {
            let (pair, success) = postselected_state(ex, v)?;
            row.c_sim = Some(concurrence_pure(&pair)?);
            row.success = success;
        }
        if let Some(freqs) = &sampled_freqs {
            let sampler = Sampler::new(cfg);
            let ids: Vec<&String> = freqs.iter().map(|f| &f.0).collect();
            let raw: Vec<Vec<f64>> = freqs.iter().map(|f| f.1.clone()).collect();
            let est = sampler.estimate(&raw, |f| {
                let mut dists = BTreeMap::new();
                for (id, p) in ids.iter().zip(f) {
                    dists.insert((*id).clone(), sampler.postselected(p, v)?.0);
                }
                let rho = psd_project(&two_qubit_from_distributions(
                    &dists,
                    cfg.tomography_convention,
                )?)?;
                Ok(concurrence(&rho.matrix)?)
            })?;
            row.c_sampled = Some(est.value);
            row.c_stderr = Some(est.stderr);
        }
        out.push(row);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct EntanglementFits {
    pub exponents: Vec<ExponentReport>,
}

pub fn run_fig3(
    cfg: &ExperimentConfig,
) -> Result<(Vec<EntanglementRow>, Vec<Timing>, EntanglementFits)> {
    let init = phi_plus();
    let subspaces = [cfg.postselect_on];
    let (rows, timings) = drive(cfg, cfg.synthesize, |p| {
        entanglement_point(cfg, p, &init, &subspaces)
    })?;
    let mut fits = EntanglementFits {
        exponents: Vec::new(),
    };
    for &r in cfg.r_values.iter().filter(|&&r| is_ep(r)) {
        let sel: Vec<&EntanglementRow> = rows.iter().filter(|row| row.r == r).collect();
        let (source, vals) = best_column(&sel, |row| (row.c_theory, row.c_sim, row.c_sampled));
        let ts: Vec<f64> = sel.iter().map(|row| row.t).collect();
        let theory = dense_theory_fit(|t| {
            let a = ptdilate_core::nonhermitian::nh_propagator(NonHermitianParams::new(r, t))
                .kron(&ComplexMatrix::identity(2))?;
            Ok(concurrence_pure(&a.apply(&phi_plus())?.normalized())?)
        })?;
        fits.exponents.push(ExponentReport {
            observable: "concurrence".into(),
            r,
            window: EXPONENT_WINDOW,
            theory,
            series: series_exponent(&ts, &vals),
            series_source: Some(source.to_string()),
        });
    }
    Ok((rows, timings, fits))
}

pub fn run_fig3e(cfg: &ExperimentConfig) -> Result<(Vec<EntanglementRow>, Vec<Timing>)> {
    let init = partially_entangled(cfg.prep_angle_deg);
    let subspaces = [cfg.postselect_on];
    drive(cfg, cfg.synthesize, |p| {
        entanglement_point(cfg, p, &init, &subspaces)
    })
}

pub fn run_supp_subspace(cfg: &ExperimentConfig) -> Result<(Vec<EntanglementRow>, Vec<Timing>)> {
    let init = phi_plus();
    drive(cfg, cfg.synthesize, |p| {
        entanglement_point(cfg, p, &init, &[0, 1])
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct NormRow {
    pub mode: &'static str,
    pub r: f64,
    pub t: f64,
    pub norm_inv_theory: f64,
    pub norm_inv_sim: Option<f64>,
    pub norm_inv_sampled: Option<f64>,
    pub norm_inv_stderr: Option<f64>,
}

fn norm_point(cfg: &ExperimentConfig, p: &PointInput) -> Result<NormRow> {
    let mode = effective_mode(cfg);
    let rho0 = ground(0).density();
    let mut row = NormRow {
        mode: mode.as_str(),
        r: p.r,
        t: p.t,
        norm_inv_theory: state_norm_inverse(NonHermitianParams::new(p.r, p.t), &rho0)?,
        norm_inv_sim: None,
        norm_inv_sampled: None,
        norm_inv_stderr: None,
    };
    let Some(ops) = p.ops else { return Ok(row) };
    // success = N(t) / (1 + eta0^2)
    let scale = 1.0 + ops.ctx.eta0 * ops.ctx.eta0;
    let (_, success) =
        postselected_state(&dilated_state(&ops.u_exact, &ops.ctx, &ground(0), 0)?, 0)?;
    row.norm_inv_sim = Some(1.0 / (success * scale));
    if mode.sampled() {
        let sampler = Sampler::new(cfg);
        let sim = dilated_state(&ops.u_sim, &ops.ctx, &ground(0), 0)?;
        let freqs = vec![sampler.measure(&sim, &label(cfg, p.r, p.t, "Z"))?];
        let est = sampler.estimate(&freqs, |f| {
            Ok(1.0 / (sampler.postselected(&f[0], 0)?.1 * scale))
        })?;
        row.norm_inv_sampled = Some(est.value);
        row.norm_inv_stderr = Some(est.stderr);
    }
    Ok(row)
}

pub fn run_supp_norm(cfg: &ExperimentConfig) -> Result<(Vec<NormRow>, Vec<Timing>)> {
    drive(cfg, cfg.synthesize, |p| Ok(vec![norm_point(cfg, p)?]))
}

#[derive(Clone, Debug, Serialize)]
pub struct BlochRow {
    pub mode: &'static str,
    pub r: f64,
    pub regime: &'static str,
    pub bloch_x_plus: f64,
    pub bloch_y_plus: f64,
    pub bloch_z_plus: f64,
    pub bloch_x_minus: f64,
    pub bloch_y_minus: f64,
    pub bloch_z_minus: f64,
    pub eig_re_plus: f64,
    pub eig_im_plus: f64,
    pub eig_re_minus: f64,
    pub eig_im_minus: f64,
}

pub fn run_supp_bloch(cfg: &ExperimentConfig) -> Result<(Vec<BlochRow>, Vec<Timing>)> {
    let rows = cfg
        .r_values
        .iter()
        .map(|&r| {
            let es = eigensystem(r);
            let plus = es.bloch[0];
            let minus = *es.bloch.last().expect("at least one eigenvector");
            BlochRow {
                mode: Mode::Analytic.as_str(),
                r,
                regime: match es.regime {
                    PtRegime::Symmetric => "symmetric",
                    PtRegime::Exceptional => "exceptional",
                    PtRegime::Broken => "broken",
                },
                bloch_x_plus: plus[0],
                bloch_y_plus: plus[1],
                bloch_z_plus: plus[2],
                bloch_x_minus: minus[0],
                bloch_y_minus: minus[1],
                bloch_z_minus: minus[2],
                eig_re_plus: es.eigenvalues[0].re,
                eig_im_plus: es.eigenvalues[0].im,
                eig_re_minus: es.eigenvalues[1].re,
                eig_im_minus: es.eigenvalues[1].im,
            }
        })
        .collect();
    Ok((rows, Vec::new()))
}
