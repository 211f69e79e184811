//! State-vector execution, shot sampling, readout errors and post-selection.
//!
//! Basis strings list wires most-significant first, so `"10"` on wires
//! `(a, q)` means the ancilla reads 1 and the system reads 0.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{rx_half_pi, ry, rz, u3, Circuit, GateKind};
use crate::error::{Error, Result};
use crate::linalg::{hadamard, wire_count, ComplexMatrix, StateVector, TOL_NORM};
use crate::seeding;

pub const DEFAULT_SHOTS: u64 = 8192;
/// Post-selection success probability below which a run is considered starved.
pub const EPS_PS: f64 = 1e-3;

fn apply_single(state: &mut StateVector, op: &ComplexMatrix, wire: usize, n: usize) {
    let bit = 1 << (n - 1 - wire);
    for i in 0..state.dim() {
        if i & bit == 0 {
            let (a, b) = (state[i], state[i | bit]);
            state[i] = op[(0, 0)] * a + op[(0, 1)] * b;
            state[i | bit] = op[(1, 0)] * a + op[(1, 1)] * b;
        }
    }
}

fn apply_cnot(state: &mut StateVector, control: usize, target: usize, n: usize) {
    let cbit = 1 << (n - 1 - control);
    let tbit = 1 << (n - 1 - target);
    for i in 0..state.dim() {
        if i & cbit != 0 && i & tbit == 0 {
            let j = i | tbit;
            let tmp = state[i];
            state[i] = state[j];
            state[j] = tmp;
        }
    }
}

/// Exact amplitudes after running `circuit` on `initial`.
pub fn run_ideal(circuit: &Circuit, initial: &StateVector) -> Result<StateVector> {
    circuit.validate()?;
    let n = circuit.wires.len();
    if initial.dim() != 1 << n {
        return Err(Error::DimensionMismatch {
            left: 1 << n,
            right: initial.dim(),
        });
    }
    let mut state = initial.clone();
    for g in &circuit.gates {
        let w0 = circuit.wire_index(&g.wires[0])?;
        let a = &g.angles;
        match g.kind {
            GateKind::Cnot => apply_cnot(&mut state, w0, circuit.wire_index(&g.wires[1])?, n),
            GateKind::Ry | GateKind::Prep => apply_single(&mut state, &ry(a[0]), w0, n),
            GateKind::Rz => apply_single(&mut state, &rz(a[0]), w0, n),
            GateKind::U3 => apply_single(&mut state, &u3(a[0], a[1], a[2]), w0, n),
            GateKind::H => apply_single(&mut state, &hadamard(), w0, n),
            GateKind::RxHalfPi => apply_single(&mut state, &rx_half_pi(), w0, n),
        }
    }
    Ok(state.scale(num_complex::Complex64::from_polar(
        1.0,
        circuit.global_phase,
    )))
}

pub fn basis_label(index: usize, n: usize) -> String {
    (0..n)
        .map(|w| {
            if index >> (n - 1 - w) & 1 == 1 {
                '1'
            } else {
                '0'
            }
        })
        .collect()
}

fn parse_label(label: &str) -> Result<usize> {
    if label.is_empty() || label.len() > 3 || !label.chars().all(|c| c == '0' || c == '1') {
        return Err(Error::InvalidShots(format!("bad basis string {label:?}")));
    }
    Ok(usize::from_str_radix(label, 2).expect("binary digits"))
}

/// Measurement counts for one setting.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotTable {
    pub setting_id: String,
    pub shots: u64,
    pub seed: u64,
    pub counts: BTreeMap<String, u64>,
}

impl ShotTable {
    /// Number of wires (length of the basis strings).
    pub fn wires(&self) -> usize {
        self.counts.keys().next().map_or(0, |k| k.len())
    }

    pub fn count(&self, label: &str) -> u64 {
        self.counts.get(label).copied().unwrap_or(0)
    }

    /// Checks basis strings and that the counts add up to `shots`.
    pub fn validate(&self) -> Result<()> {
        let n = self.wires();
        for k in self.counts.keys() {
            parse_label(k)?;
            if k.len() != n {
                return Err(Error::InvalidShots(format!(
                    "basis string {k:?} has length {} not {n}",
                    k.len()
                )));
            }
        }
        let total: u64 = self.counts.values().sum();
        if total != self.shots {
            return Err(Error::InvalidShots(format!(
                "counts sum to {total}, expected {}",
                self.shots
            )));
        }
        Ok(())
    }

    /// Relative frequencies indexed by basis state.
    pub fn frequencies(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let n = self.wires();
        let mut p = vec![0.0; 1 << n];
        for (k, &c) in &self.counts {
            p[parse_label(k)?] = c as f64 / self.shots as f64;
        }
        Ok(p)
    }

    fn from_indices(setting_id: &str, seed: u64, n: usize, counts: &[u64]) -> Self {
        let map = counts
            .iter()
            .enumerate()
            .map(|(i, &c)| (basis_label(i, n), c))
            .collect();
        Self {
            setting_id: setting_id.to_string(),
            shots: counts.iter().sum(),
            seed,
            counts: map,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: ShotTable = serde_json::from_str(text)?;
        t.validate()?;
        Ok(t)
    }

    /// CSV with columns `basis,count`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::InvalidShots(e.to_string());
        w.write_record(["basis", "count"]).map_err(csv_err)?;
        for (k, c) in &self.counts {
            w.write_record([k.as_str(), &c.to_string()])
                .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::InvalidShots(e.to_string()))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, setting_id: &str, seed: u64) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            basis: String,
            count: u64,
        }
        let mut counts = BTreeMap::new();
        for row in csv::Reader::from_reader(input).deserialize::<Row>() {
            let row = row.map_err(|e| Error::InvalidShots(e.to_string()))?;
            counts.insert(row.basis, row.count);
        }
        let t = Self {
            setting_id: setting_id.to_string(),
            shots: counts.values().sum(),
            seed,
            counts,
        };
        t.validate()?;
        Ok(t)
    }
}

fn draw_counts(probs: &[f64], shots: u64, rng: &mut impl Rng) -> Vec<u64> {
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in probs {
        acc += p.max(0.0);
        cdf.push(acc);
    }
    let mut counts = vec![0u64; probs.len()];
    for _ in 0..shots {
        let u = rng.gen::<f64>() * acc;
        let idx = cdf.partition_point(|&c| c <= u).min(probs.len() - 1);
        counts[idx] += 1;
    }
    counts
}

/// Multinomial sample of `shots` computational-basis outcomes. The RNG stream
/// is derived from `setting_id`.
pub fn sample_setting(
    state: &StateVector,
    shots: u64,
    seed: u64,
    setting_id: &str,
) -> Result<ShotTable> {
    if shots == 0 {
        return Err(Error::InvalidShots("shots must be positive".into()));
    }
    if (state.norm_sqr() - 1.0).abs() > 1e3 * TOL_NORM {
        return Err(Error::Domain(format!(
            "state is not normalized (norm^2 = {})",
            state.norm_sqr()
        )));
    }
    let n = wire_count(state.dim()).ok_or(Error::UnsupportedDimension(state.dim()))?;
    sample_probabilities(&state.probabilities(), n, shots, seed, setting_id)
}

pub fn sample(state: &StateVector, shots: u64, seed: u64) -> Result<ShotTable> {
    sample_setting(state, shots, seed, "")
}

/// Multinomial sample from an explicit distribution over `n` wires.
pub fn sample_probabilities(
    probs: &[f64],
    n: usize,
    shots: u64,
    seed: u64,
    setting_id: &str,
) -> Result<ShotTable> {
    if shots == 0 {
        return Err(Error::InvalidShots("shots must be positive".into()));
    }
    if probs.len() != 1 << n {
        return Err(Error::DimensionMismatch {
            left: 1 << n,
            right: probs.len(),
        });
    }
    let mut rng = seeding::rng(seed, seeding::stream_for_label(setting_id));
    let counts = draw_counts(probs, shots, &mut rng);
    Ok(ShotTable::from_indices(setting_id, seed, n, &counts))
}

/// Assignment fidelities of one wire: `P(read 0 | 0)` and `P(read 1 | 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireFidelity {
    pub f0: f64,
    pub f1: f64,
}

impl WireFidelity {
    pub const PERFECT: WireFidelity = WireFidelity { f0: 1.0, f1: 1.0 };

    /// Column-stochastic `[[f0, 1-f1], [1-f0, f1]]`.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.f0, 1.0 - self.f1], [1.0 - self.f0, self.f1]]
    }

    fn inverse(&self) -> Result<[[f64; 2]; 2]> {
        let det = self.f0 + self.f1 - 1.0;
        if det <= 1e-12 {
            return Err(Error::SingularReadout);
        }
        Ok([
            [self.f1 / det, -(1.0 - self.f1) / det],
            [-(1.0 - self.f0) / det, self.f0 / det],
        ])
    }
}

/// Independent per-wire readout errors, `F = F_0 (x) F_1 (x) ...`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutModel {
    pub wires: Vec<WireFidelity>,
}

impl ReadoutModel {
    pub fn new(wires: Vec<WireFidelity>) -> Result<Self> {
        for w in &wires {
            if !(0.0..=1.0).contains(&w.f0) || !(0.0..=1.0).contains(&w.f1) {
                return Err(Error::Domain(format!(
                    "readout fidelities must lie in [0, 1], got {w:?}"
                )));
            }
        }
        Ok(Self { wires })
    }

    pub fn perfect(n: usize) -> Self {
        Self {
            wires: vec![WireFidelity::PERFECT; n],
        }
    }

    /// Calibrated fidelities of the ancilla and the two system qubits.
    pub fn device_default() -> Self {
        Self {
            wires: vec![
                WireFidelity { f0: 0.99, f1: 0.89 },
                WireFidelity { f0: 0.99, f1: 0.98 },
                WireFidelity { f0: 0.99, f1: 0.98 },
            ],
        }
    }

    fn covering(&self, n: usize) -> Result<&[WireFidelity]> {
        if self.wires.len() < n {
            return Err(Error::InvalidWires(format!(
                "readout model has {} wires, data has {n}",
                self.wires.len()
            )));
        }
        Ok(&self.wires[..n])
    }
}

/// Applies a per-wire 2x2 map to a probability vector over `n` wires.
fn apply_per_wire(p: &[f64], maps: &[[[f64; 2]; 2]]) -> Vec<f64> {
    let n = maps.len();
    let mut out = p.to_vec();
    for (w, m) in maps.iter().enumerate() {
        let bit = 1 << (n - 1 - w);
        for i in 0..out.len() {
            if i & bit == 0 {
                let (a, b) = (out[i], out[i | bit]);
                out[i] = m[0][0] * a + m[0][1] * b;
                out[i | bit] = m[1][0] * a + m[1][1] * b;
            }
        }
    }
    out
}

fn wires_of(len: usize) -> Result<usize> {
    wire_count(len)
        .filter(|&n| n >= 1)
        .ok_or(Error::UnsupportedDimension(len))
}

/// `F p` without sampling.
pub fn apply_readout_matrix(p: &[f64], model: &ReadoutModel) -> Result<Vec<f64>> {
    let n = wires_of(p.len())?;
    let maps: Vec<_> = model.covering(n)?.iter().map(|w| w.matrix()).collect();
    Ok(apply_per_wire(p, &maps))
}

/// `F^-1 p` without clipping.
pub fn invert_readout(p: &[f64], model: &ReadoutModel) -> Result<Vec<f64>> {
    let n = wires_of(p.len())?;
    let maps = model
        .covering(n)?
        .iter()
        .map(|w| w.inverse())
        .collect::<Result<Vec<_>>>()?;
    Ok(apply_per_wire(p, &maps))
}

/// `F^-1 p_m`, negative entries clipped to zero, renormalized.
pub fn correct_readout(p_m: &[f64], model: &ReadoutModel) -> Result<Vec<f64>> {
    let raw = invert_readout(p_m, model)?;
    let clipped: Vec<f64> = raw.iter().map(|&x| x.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total <= 0.0 {
        return Err(Error::Domain(
            "corrected distribution vanished after clipping".into(),
        ));
    }
    Ok(clipped.iter().map(|x| x / total).collect())
}

/// Flips each recorded bit independently: a 0 becomes 1 with probability
/// `1 - f0`, a 1 becomes 0 with probability `1 - f1`.
pub fn apply_readout_noise(
    table: &ShotTable,
    model: &ReadoutModel,
    seed: u64,
) -> Result<ShotTable> {
    table.validate()?;
    let n = table.wires();
    let fids = model.covering(n)?;
    let mut rng = seeding::rng(
        seed,
        seeding::stream_for_label(&format!("readout/{}", table.setting_id)),
    );
    let mut counts = vec![0u64; 1 << n];
    for (label, &c) in &table.counts {
        let idx = parse_label(label)?;
        for _ in 0..c {
            let mut out = idx;
            for (w, f) in fids.iter().enumerate() {
                let bit = 1 << (n - 1 - w);
                let flip = if idx & bit == 0 {
                    1.0 - f.f0
                } else {
                    1.0 - f.f1
                };
                if flip > 0.0 && rng.gen::<f64>() < flip {
                    out ^= bit;
                }
            }
            counts[out] += 1;
        }
    }
    Ok(ShotTable::from_indices(
        &table.setting_id,
        table.seed,
        n,
        &counts,
    ))
}

/// Distribution over the remaining wires given the ancilla (most significant
/// wire) outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct Postselected {
    pub probs: Vec<f64>,
    pub success: f64,
}

pub fn postselect_with_floor(p: &[f64], ancilla_value: u8, floor: f64) -> Result<Postselected> {
    if p.len() < 2 || !p.len().is_power_of_two() {
        return Err(Error::UnsupportedDimension(p.len()));
    }
    if ancilla_value > 1 {
        return Err(Error::Domain(format!(
            "ancilla value must be 0 or 1, got {ancilla_value}"
        )));
    }
    let half = p.len() / 2;
    let part = if ancilla_value == 0 {
        &p[..half]
    } else {
        &p[half..]
    };
    let success: f64 = part.iter().sum();
    if success < floor {
        return Err(Error::PostselectionStarved { success, floor });
    }
    Ok(Postselected {
        probs: part.iter().map(|x| x / success).collect(),
        success,
    })
}

pub fn postselect(p: &[f64], ancilla_value: u8) -> Result<Postselected> {
    postselect_with_floor(p, ancilla_value, EPS_PS)
}

pub fn postselect_table(table: &ShotTable, ancilla_value: u8) -> Result<Postselected> {
    postselect(&table.frequencies()?, ancilla_value)
}
