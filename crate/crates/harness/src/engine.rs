//! Per-point physics shared by the experiments: dilation contexts,
//! propagators, ideal and simulated states, sampling and error propagation.

use std::collections::BTreeMap;
use std::time::Instant;

use ptdilate_core::circuit::{Circuit, Gate};
use ptdilate_core::circuitsim::{
    apply_readout_noise, correct_readout, postselect, run_ideal, sample_setting,
};
use ptdilate_core::dilation::{
    ancilla_state, context_for_time, frame_at, propagate_path, DilationContext,
};
use ptdilate_core::linalg::{ComplexMatrix, StateVector};
use ptdilate_core::nonhermitian::propagator_signed;
use ptdilate_core::seeding::stream_for_point;
use ptdilate_core::synthesis::{assemble, decompose, SynthesisConfig, SynthesisReport};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

/// Everything deterministic about one `(r, t)` point of a dilated run.
#[derive(Clone, Debug)]
pub struct PointOps {
    pub t: f64,
    pub ctx: DilationContext,
    pub u_exact: ComplexMatrix,
    /// Synthesized circuit unitary when synthesis is on, else `u_exact`.
    pub u_sim: ComplexMatrix,
    pub synthesis: Option<SynthesisReport>,
}

/// Calibrated contexts for each time, reusing one calibration per horizon.
pub fn contexts(r: f64, times: &[f64], cfg: &ExperimentConfig) -> Result<Vec<DilationContext>> {
    let mut cache: BTreeMap<u64, DilationContext> = BTreeMap::new();
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let probe = horizon_for(r, t, cfg);
        let ctx = match cache.get(&probe.to_bits()) {
            Some(c) => *c,
            None => {
                let c = context_for_time(r, t, &cfg.calibration)?;
                cache.insert(probe.to_bits(), c);
                c
            }
        };
        out.push(ctx);
    }
    Ok(out)
}

fn horizon_for(r: f64, t: f64, cfg: &ExperimentConfig) -> f64 {
    use ptdilate_core::nonhermitian::EPS_EP;
    match cfg.calibration.interval {
        Some(len) if r.abs() >= 1.0 - EPS_EP => ((t / len) - 1e-9).ceil().max(1.0) * len,
        _ => cfg.calibration.horizon.max(t),
    }
}

/// Dilated propagators along sorted `times`; one RK4 path per calibration.
pub fn propagators(
    times: &[f64],
    ctxs: &[DilationContext],
    cfg: &ExperimentConfig,
) -> Result<Vec<ComplexMatrix>> {
    let mut out = Vec::with_capacity(times.len());
    let mut start = 0;
    while start < times.len() {
        let horizon = ctxs[start].time_horizon;
        let mut end = start + 1;
        while end < times.len() && ctxs[end].time_horizon == horizon {
            end += 1;
        }
        out.extend(propagate_path(&ctxs[start], &times[start..end], cfg.dt)?);
        start = end;
    }
    Ok(out)
}

pub fn synthesize(
    r: f64,
    t: f64,
    u: &ComplexMatrix,
    base: &SynthesisConfig,
) -> Result<SynthesisReport> {
    let cfg = SynthesisConfig {
        stream: stream_for_point(r, t),
        ..*base
    };
    let rep = decompose(u, &cfg)?;
    if rep.failed {
        return Err(HarnessError::SynthesisFailed {
            r,
            t,
            err_u: rep.err_u,
        });
    }
    Ok(rep)
}

/// Contexts, propagators and optional synthesis for every time of one `r`.
pub fn point_ops(
    r: f64,
    times: &[f64],
    cfg: &ExperimentConfig,
    synth: bool,
) -> Result<Vec<PointOps>> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(HarnessError::Config(
            "time grid must be nondecreasing".into(),
        ));
    }
    let ctxs = contexts(r, times, cfg)?;
    let us = propagators(times, &ctxs, cfg)?;
    times
        .par_iter()
        .zip(ctxs.par_iter())
        .zip(us.into_par_iter())
        .map(|((&t, ctx), u)| {
            let synthesis = if synth {
                Some(synthesize(r, t, &u, &cfg.synthesis)?)
            } else {
                None
            };
            let u_sim = match &synthesis {
                Some(rep) => assemble(&rep.circuit)?,
                None => u.clone(),
            };
            Ok(PointOps {
                t,
                ctx: *ctx,
                u_exact: u,
                u_sim,
                synthesis,
            })
        })
        .collect()
}

/// `A` for the ancilla-0 subspace, `eta A` for ancilla 1.
pub fn subspace_operator(ctx: &DilationContext, t: f64, subspace: u8) -> Result<ComplexMatrix> {
    let a = propagator_signed(ctx.r, t);
    if subspace == 0 {
        Ok(a)
    } else {
        Ok(&frame_at(ctx, t)?.eta * &a)
    }
}

fn embed_first(op: &ComplexMatrix, extra_wires: usize) -> Result<ComplexMatrix> {
    Ok(op.kron(&ComplexMatrix::identity(1 << extra_wires))?)
}

/// Normalized `|0> A psi + |1> eta A psi` with `A` on the first system wire.
pub fn ideal_state(
    ctx: &DilationContext,
    t: f64,
    system: &StateVector,
    extra_wires: usize,
) -> Result<StateVector> {
    let a = embed_first(&subspace_operator(ctx, t, 0)?, extra_wires)?;
    let eta_a = embed_first(&subspace_operator(ctx, t, 1)?, extra_wires)?;
    let zero = StateVector::basis(2, 0).kron(&a.apply(system)?)?;
    let one = StateVector::basis(2, 1).kron(&eta_a.apply(system)?)?;
    Ok(zero.add(&one).normalized())
}

/// `(U (x) I) (Ry(theta)|0> (x) psi)`.
pub fn dilated_state(
    u: &ComplexMatrix,
    ctx: &DilationContext,
    system: &StateVector,
    extra_wires: usize,
) -> Result<StateVector> {
    let big = embed_first(u, extra_wires)?;
    Ok(big.apply(&ancilla_state(ctx.eta0).kron(&system.normalized())?)?)
}

/// Normalized post-selected system state and the success probability.
pub fn postselected_state(state: &StateVector, subspace: u8) -> Result<(StateVector, f64)> {
    let half = state.dim() / 2;
    let amps = state.amplitudes();
    let part = if subspace == 0 {
        &amps[..half]
    } else {
        &amps[half..]
    };
    let kept = StateVector::new(part.to_vec());
    let success = kept.norm_sqr();
    if success < ptdilate_core::circuitsim::EPS_PS {
        return Err(ptdilate_core::Error::PostselectionStarved {
            success,
            floor: ptdilate_core::circuitsim::EPS_PS,
        }
        .into());
    }
    Ok((kept.normalized(), success))
}

/// Applies measurement-basis gates to a state over `wires`.
pub fn rotate(state: &StateVector, wires: &[&str], gates: Vec<Gate>) -> Result<StateVector> {
    let mut circ = Circuit::new(wires);
    for g in gates {
        circ.push(g);
    }
    Ok(run_ideal(&circ, state)?)
}

/// Value with a linearly propagated multinomial standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Shot sampling with the configured shots, seed and readout model.
pub struct Sampler<'a> {
    pub cfg: &'a ExperimentConfig,
}

impl<'a> Sampler<'a> {
    pub fn new(cfg: &'a ExperimentConfig) -> Self {
        Self { cfg }
    }

    /// Measured frequencies of one setting, including readout flips in the
    /// noisy mode.
    pub fn measure(&self, state: &StateVector, label: &str) -> Result<Vec<f64>> {
        let table = sample_setting(state, self.cfg.shots, self.cfg.seed, label)?;
        let table = if self.cfg.mode.noisy() {
            apply_readout_noise(&table, &self.cfg.readout, self.cfg.seed)?
        } else {
            table
        };
        Ok(table.frequencies()?)
    }

    /// Readout-corrected distribution (identity outside the noisy mode).
    pub fn prepare(&self, p: &[f64]) -> Result<Vec<f64>> {
        if self.cfg.mode.noisy() {
            Ok(correct_readout(p, &self.cfg.readout)?)
        } else {
            Ok(p.to_vec())
        }
    }

    /// Post-selected distribution of one measured setting.
    pub fn postselected(&self, p: &[f64], subspace: u8) -> Result<(Vec<f64>, f64)> {
        let post = postselect(&self.prepare(p)?, subspace)?;
        Ok((post.probs, post.success))
    }

    pub fn estimate<F>(&self, freqs: &[Vec<f64>], f: F) -> Result<Estimate>
    where
        F: Fn(&[Vec<f64>]) -> Result<f64>,
    {
        estimate(freqs, self.cfg.shots, f)
    }
}

/// `f(freqs)` with standard error `sqrt(sum_s g_s^T Sigma_s g_s)`, where
/// `Sigma_s = (diag p_s - p_s p_s^T) / shots` and `g_s` is a central
/// finite-difference gradient.
pub fn estimate<F>(freqs: &[Vec<f64>], shots: u64, f: F) -> Result<Estimate>
where
    F: Fn(&[Vec<f64>]) -> Result<f64>,
{
    let value = f(freqs)?;
    let mut work = freqs.to_vec();
    let mut var = 0.0;
    for s in 0..freqs.len() {
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for i in 0..freqs[s].len() {
            let p = freqs[s][i];
            if p <= 0.0 {
                continue;
            }
            let h = (1e-6f64).min(0.5 * p);
            work[s][i] = p + h;
            let up = f(&work)?;
            work[s][i] = p - h;
            let down = f(&work)?;
            work[s][i] = p;
            let g = (up - down) / (2.0 * h);
            m1 += p * g;
            m2 += p * g * g;
        }
        var += (m2 - m1 * m1).max(0.0) / shots as f64;
    }
    Ok(Estimate {
        value,
        stderr: var.sqrt(),
    })
}

/// Runs `f` and reports its wall time in seconds.
pub fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let out = f()?;
    Ok((out, start.elapsed().as_secs_f64()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Experiment, Mode};
    use ptdilate_core::circuitsim::postselect;

    #[test]
    fn binomial_error_of_a_frequency() {
        let p = vec![vec![0.3, 0.7]];
        let e = estimate(&p, 100, |f| Ok(f[0][0])).unwrap();
        assert!((e.stderr - (0.3f64 * 0.7 / 100.0).sqrt()).abs() < 1e-9);
        let ratio = estimate(&[vec![0.2, 0.2, 0.3, 0.3]], 1000, |f| {
            Ok(postselect(&f[0], 0)?.probs[0])
        })
        .unwrap();
        // Conditional binomial: p(1 - p) / (N P(a = 0)).
        assert!((ratio.stderr - (0.25f64 / (1000.0 * 0.4)).sqrt()).abs() < 1e-7);
    }

    #[test]
    fn ideal_and_dilated_states_agree() {
        let cfg = ExperimentConfig::for_experiment(Experiment::Fig1)
            .resolved()
            .unwrap();
        let times = [0.0, 0.7, 1.9];
        let ops = point_ops(0.6, &times, &cfg, false).unwrap();
        for op in &ops {
            let ideal = ideal_state(&op.ctx, op.t, &StateVector::basis(2, 0), 0).unwrap();
            let dil = dilated_state(&op.u_exact, &op.ctx, &StateVector::basis(2, 0), 0).unwrap();
            assert!(1.0 - ideal.inner(&dil).norm_sqr() < 1e-9, "t {}", op.t);
        }
    }

    #[test]
    fn contexts_follow_intervals() {
        let cfg = ExperimentConfig {
            mode: Mode::DilatedExact,
            ..Default::default()
        };
        let ctxs = contexts(1.3, &[0.5, 1.0, 1.5, 2.5], &cfg).unwrap();
        let h: Vec<f64> = ctxs.iter().map(|c| c.time_horizon).collect();
        assert_eq!(h, vec![1.0, 1.0, 2.0, 3.0]);
        assert_eq!(
            contexts(0.6, &[0.5, 7.0], &cfg).unwrap()[1].time_horizon,
            8.0
        );
    }

    #[test]
    fn subspace_one_selection() {
        let psi = StateVector::from_real(&[0.6, 0.0, 0.0, 0.8]);
        let (kept, p) = postselected_state(&psi, 1).unwrap();
        assert!((p - 0.64).abs() < 1e-12 && (kept[1].re - 1.0).abs() < 1e-12);
        assert!(postselected_state(&StateVector::basis(4, 0), 1).is_err());
    }
}
