//! Single- and two-qubit state tomography from computational-basis counts.
//!
//! Two-qubit settings act on the system pair `(q, q')`, `q` most significant.
//! Matrix positions in element maps are 1-based, matching the usual
//! `rho_{row,col}` labelling of the basis `00, 01, 10, 11`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::circuit::{cnot_matrix, embed_single, rx_half_pi, Gate, GateKind};
use crate::circuitsim::{correct_readout, postselect, ReadoutModel, ShotTable};
use crate::error::{Error, Result};
use crate::linalg::{c, hadamard, pauli_x, pauli_y, pauli_z, ComplexMatrix, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Part {
    Re,
    Im,
}

/// One real parameter of the density matrix fixed by a setting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementRef {
    pub row: usize,
    pub col: usize,
    pub part: Part,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rotation {
    H,
    RxHalfPi,
}

/// Placement of the post-CNOT rotation in the last two settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroQuantumConvention {
    /// `(R (x) I) CNOT(q -> q')`.
    #[default]
    RotateFirst,
    /// `(I (x) R) CNOT(q' -> q)`.
    RotateSecond,
}

/// A pre-measurement operation followed by a computational-basis readout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomographySetting {
    pub id: String,
    /// CNOT `(control, target)` on wires 0 = q, 1 = q', applied first.
    pub cnot: Option<(usize, usize)>,
    /// Rotation and the wire it acts on, applied after the CNOT.
    pub rotation: Option<(Rotation, usize)>,
    pub element_map: Vec<ElementRef>,
}

fn rotation_matrix(r: Rotation) -> ComplexMatrix {
    match r {
        Rotation::H => hadamard(),
        Rotation::RxHalfPi => rx_half_pi(),
    }
}

fn cnot_perm(cnot: Option<(usize, usize)>, i: usize) -> usize {
    match cnot {
        None => i,
        Some((ctrl, tgt)) => {
            let cbit = 1 << (1 - ctrl);
            let tbit = 1 << (1 - tgt);
            if i & cbit != 0 {
                i ^ tbit
            } else {
                i
            }
        }
    }
}

/// For a rotation on `wire` with the other qubit fixed to `b`: the pre-CNOT
/// basis indices `(i0, i1)` whose coherence is read out.
fn coherence_pair(setting_cnot: Option<(usize, usize)>, wire: usize, b: usize) -> (usize, usize) {
    let other = 1 - wire;
    let wbit = 1 << (1 - wire);
    let obit = if b == 1 { 1 << (1 - other) } else { 0 };
    let (j0, j1) = (obit, obit | wbit);
    (cnot_perm(setting_cnot, j0), cnot_perm(setting_cnot, j1))
}

impl TomographySetting {
    fn new(id: &str, cnot: Option<(usize, usize)>, rotation: Option<(Rotation, usize)>) -> Self {
        let mut s = Self {
            id: id.to_string(),
            cnot,
            rotation,
            element_map: Vec::new(),
        };
        s.element_map = match rotation {
            None => (1..=4)
                .map(|k| ElementRef {
                    row: k,
                    col: k,
                    part: Part::Re,
                })
                .collect(),
            Some((rot, wire)) => {
                let part = if rot == Rotation::H {
                    Part::Re
                } else {
                    Part::Im
                };
                (0..2)
                    .map(|b| {
                        let (i0, i1) = coherence_pair(cnot, wire, b);
                        ElementRef {
                            row: i0.min(i1) + 1,
                            col: i0.max(i1) + 1,
                            part,
                        }
                    })
                    .collect()
            }
        };
        s
    }

    /// Pre-measurement unitary on `(q, q')`.
    pub fn unitary(&self) -> ComplexMatrix {
        let mut u = ComplexMatrix::identity(4);
        if let Some((ctrl, tgt)) = self.cnot {
            u = cnot_matrix(ctrl, tgt, 2).expect("two wires");
        }
        if let Some((rot, wire)) = self.rotation {
            u = &embed_single(&rotation_matrix(rot), wire, 2).expect("two wires") * &u;
        }
        u
    }

    /// Gates implementing the setting on the named system wires.
    pub fn gates(&self, q: &str, qp: &str) -> Vec<Gate> {
        let name = |w: usize| if w == 0 { q } else { qp };
        let mut out = Vec::new();
        if let Some((ctrl, tgt)) = self.cnot {
            out.push(Gate::cnot(name(ctrl), name(tgt)));
        }
        if let Some((rot, wire)) = self.rotation {
            let kind = if rot == Rotation::H {
                GateKind::H
            } else {
                GateKind::RxHalfPi
            };
            out.push(Gate::single(kind, name(wire), &[]));
        }
        out
    }

    /// Exact outcome distribution for a two-qubit density matrix.
    pub fn probabilities(&self, rho: &ComplexMatrix) -> Vec<f64> {
        let u = self.unitary();
        let out = &(&u * rho) * &u.adjoint();
        (0..4).map(|k| out[(k, k)].re).collect()
    }
}

/// The seven two-qubit settings.
pub fn two_qubit_settings(convention: ZeroQuantumConvention) -> Vec<TomographySetting> {
    let (cnot, wire) = match convention {
        ZeroQuantumConvention::RotateFirst => ((0, 1), 0),
        ZeroQuantumConvention::RotateSecond => ((1, 0), 1),
    };
    vec![
        TomographySetting::new("T1", None, None),
        TomographySetting::new("T2", None, Some((Rotation::H, 0))),
        TomographySetting::new("T3", None, Some((Rotation::RxHalfPi, 0))),
        TomographySetting::new("T4", None, Some((Rotation::H, 1))),
        TomographySetting::new("T5", None, Some((Rotation::RxHalfPi, 1))),
        TomographySetting::new("T6", Some(cnot), Some((Rotation::H, wire))),
        TomographySetting::new("T7", Some(cnot), Some((Rotation::RxHalfPi, wire))),
    ]
}

/// Single-qubit settings `X`, `Y`, `Z`: a basis change before readout.
pub fn single_qubit_gates(id: &str, wire: &str) -> Result<Vec<Gate>> {
    match id {
        "X" => Ok(vec![Gate::single(GateKind::H, wire, &[])]),
        "Y" => Ok(vec![Gate::single(GateKind::RxHalfPi, wire, &[])]),
        "Z" => Ok(Vec::new()),
        other => Err(Error::MissingSetting(format!(
            "unknown single-qubit setting {other}"
        ))),
    }
}

/// Density matrix with the JSON layout `{dim, re, im}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    pub matrix: ComplexMatrix,
}

#[derive(Serialize, Deserialize)]
struct DensityJson {
    dim: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.matrix.dim();
        let re = (0..n)
            .map(|i| (0..n).map(|j| self.matrix[(i, j)].re).collect())
            .collect();
        let im = (0..n)
            .map(|i| (0..n).map(|j| self.matrix[(i, j)].im).collect())
            .collect();
        DensityJson { dim: n, re, im }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = DensityJson::deserialize(d)?;
        let n = j.dim;
        if j.re.len() != n || j.im.len() != n || j.re.iter().chain(&j.im).any(|r| r.len() != n) {
            return Err(serde::de::Error::custom(
                "density matrix rows do not match dim",
            ));
        }
        let data = (0..n * n)
            .map(|k| c(j.re[k / n][k % n], j.im[k / n][k % n]))
            .collect();
        let matrix = ComplexMatrix::from_vec(n, data).map_err(serde::de::Error::custom)?;
        Ok(DensityMatrix { matrix })
    }
}

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `<psi|rho|psi>` for a normalized `psi`.
    pub fn fidelity_pure(&self, psi: &StateVector) -> Result<f64> {
        Ok(psi.inner(&self.matrix.apply(psi)?).re)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Frobenius-nearest positive semidefinite unit-trace matrix: the eigenvalues
/// are projected onto the probability simplex.
pub fn psd_project(h: &ComplexMatrix) -> Result<DensityMatrix> {
    let eig = h.hermitian_eig()?;
    let mut sorted = eig.values.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut shift = 0.0;
    let mut acc = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        acc += v;
        let candidate = (acc - 1.0) / (k + 1) as f64;
        if v - candidate > 0.0 {
            shift = candidate;
        }
    }
    let clipped: Vec<f64> = eig.values.iter().map(|&v| (v - shift).max(0.0)).collect();
    Ok(DensityMatrix {
        matrix: eig.reconstruct_with(&clipped),
    })
}

/// Distribution over the system wires of one setting: readout-corrected,
/// then post-selected on ancilla 0 when the table carries an extra wire.
pub fn setting_distribution(
    table: &ShotTable,
    system_wires: usize,
    readout: Option<&ReadoutModel>,
) -> Result<Vec<f64>> {
    setting_distribution_on(table, system_wires, readout, 0)
}

/// [`setting_distribution`] post-selecting the ancilla on `ancilla_value`.
pub fn setting_distribution_on(
    table: &ShotTable,
    system_wires: usize,
    readout: Option<&ReadoutModel>,
    ancilla_value: u8,
) -> Result<Vec<f64>> {
    let mut p = table.frequencies()?;
    if let Some(model) = readout {
        p = correct_readout(&p, model)?;
    }
    let n = table.wires();
    if n == system_wires + 1 {
        p = postselect(&p, ancilla_value)?.probs;
    } else if n != system_wires {
        return Err(Error::InvalidShots(format!(
            "setting {} has {n} wires, expected {system_wires} or {}",
            table.setting_id,
            system_wires + 1
        )));
    }
    Ok(p)
}

fn lookup<'a>(tables: &'a [ShotTable], id: &str) -> Result<&'a ShotTable> {
    tables
        .iter()
        .find(|t| t.setting_id == id)
        .ok_or_else(|| Error::MissingSetting(id.to_string()))
}

/// `(I + x X + y Y + z Z) / 2` from Pauli expectation values (unprojected).
pub fn single_qubit_from_expectations(x: f64, y: f64, z: f64) -> ComplexMatrix {
    let terms = &(&pauli_x().scale_real(x) + &pauli_y().scale_real(y)) + &pauli_z().scale_real(z);
    (&ComplexMatrix::identity(2) + &terms).scale_real(0.5)
}

fn z_expectation(p: &[f64]) -> f64 {
    p[0] - p[1]
}

/// Single-qubit state from settings `X`, `Y`, `Z`.
pub fn single_qubit_reconstruct(
    tables: &[ShotTable],
    readout: Option<&ReadoutModel>,
) -> Result<DensityMatrix> {
    single_qubit_reconstruct_on(tables, readout, 0)
}

/// [`single_qubit_reconstruct`] in the subspace with ancilla `ancilla_value`.
pub fn single_qubit_reconstruct_on(
    tables: &[ShotTable],
    readout: Option<&ReadoutModel>,
    ancilla_value: u8,
) -> Result<DensityMatrix> {
    let e = |id: &str| -> Result<f64> {
        Ok(z_expectation(&setting_distribution_on(
            lookup(tables, id)?,
            1,
            readout,
            ancilla_value,
        )?))
    };
    let (x, y, z) = (e("X")?, e("Y")?, e("Z")?);
    psd_project(&single_qubit_from_expectations(x, y, z))
}

/// Hermitian matrix assembled from the seven setting distributions (before projection).
pub fn two_qubit_from_distributions(
    dists: &BTreeMap<String, Vec<f64>>,
    convention: ZeroQuantumConvention,
) -> Result<ComplexMatrix> {
    let mut rho = ComplexMatrix::zeros(4);
    for s in two_qubit_settings(convention) {
        let p = dists
            .get(&s.id)
            .ok_or_else(|| Error::MissingSetting(s.id.clone()))?;
        if p.len() != 4 {
            return Err(Error::DimensionMismatch {
                left: 4,
                right: p.len(),
            });
        }
        match s.rotation {
            None => {
                for k in 0..4 {
                    rho[(k, k)] = c(p[k], 0.0);
                }
            }
            Some((rot, wire)) => {
                let wbit = 1 << (1 - wire);
                for b in 0..2 {
                    let obit = if b == 1 { 1 << wire } else { 0 };
                    let diff = p[obit] - p[obit | wbit];
                    let (i0, i1) = coherence_pair(s.cnot, wire, b);
                    // Coherence rho_{i0,i1}: H gives 2 Re, Rx(pi/2) gives -2 Im.
                    let (re_part, im_part) = match rot {
                        Rotation::H => (Some(diff / 2.0), None),
                        Rotation::RxHalfPi => (None, Some(-diff / 2.0)),
                    };
                    let mut cur = rho[(i0, i1)];
                    if let Some(v) = re_part {
                        cur.re = v;
                    }
                    if let Some(v) = im_part {
                        cur.im = v;
                    }
                    rho[(i0, i1)] = cur;
                    rho[(i1, i0)] = cur.conj();
                }
            }
        }
    }
    Ok(rho)
}

/// Post-selected two-qubit state from the seven settings.
pub fn two_qubit_reconstruct(
    tables: &[ShotTable],
    readout: Option<&ReadoutModel>,
    convention: ZeroQuantumConvention,
) -> Result<DensityMatrix> {
    two_qubit_reconstruct_on(tables, readout, convention, 0)
}

/// [`two_qubit_reconstruct`] in the subspace with ancilla `ancilla_value`.
pub fn two_qubit_reconstruct_on(
    tables: &[ShotTable],
    readout: Option<&ReadoutModel>,
    convention: ZeroQuantumConvention,
    ancilla_value: u8,
) -> Result<DensityMatrix> {
    let mut dists = BTreeMap::new();
    let mut shots = None;
    for s in two_qubit_settings(convention) {
        let t = lookup(tables, &s.id)?;
        match shots {
            None => shots = Some(t.shots),
            Some(n) if n != t.shots => {
                return Err(Error::InvalidShots(format!(
                    "setting {} has {} shots, others {n}",
                    s.id, t.shots
                )));
            }
            _ => {}
        }
        dists.insert(
            s.id.clone(),
            setting_distribution_on(t, 2, readout, ancilla_value)?,
        );
    }
    psd_project(&two_qubit_from_distributions(&dists, convention)?)
}

/// Pauli expectations `(<X>, <Y>, <Z>)` of a single-qubit density matrix.
pub fn bloch_vector(rho: &ComplexMatrix) -> [f64; 3] {
    let e = |p: ComplexMatrix| (&p * rho).trace().re;
    [e(pauli_x()), e(pauli_y()), e(pauli_z())]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Circuit;
    use crate::circuitsim::{run_ideal, sample_probabilities};
    use crate::linalg::I;

    fn exact_tables(
        rho: &ComplexMatrix,
        convention: ZeroQuantumConvention,
    ) -> BTreeMap<String, Vec<f64>> {
        two_qubit_settings(convention)
            .iter()
            .map(|s| (s.id.clone(), s.probabilities(rho)))
            .collect()
    }

    fn one_based(map: &[ElementRef]) -> Vec<(usize, usize, Part)> {
        map.iter().map(|e| (e.row, e.col, e.part)).collect()
    }

    #[test]
    fn element_maps_match_table() {
        use Part::{Im, Re};
        let s = two_qubit_settings(ZeroQuantumConvention::RotateFirst);
        assert_eq!(
            one_based(&s[0].element_map),
            vec![(1, 1, Re), (2, 2, Re), (3, 3, Re), (4, 4, Re)]
        );
        assert_eq!(one_based(&s[1].element_map), vec![(1, 3, Re), (2, 4, Re)]);
        assert_eq!(one_based(&s[2].element_map), vec![(1, 3, Im), (2, 4, Im)]);
        assert_eq!(one_based(&s[3].element_map), vec![(1, 2, Re), (3, 4, Re)]);
        assert_eq!(one_based(&s[4].element_map), vec![(1, 2, Im), (3, 4, Im)]);
        assert_eq!(one_based(&s[5].element_map), vec![(1, 4, Re), (2, 3, Re)]);
        assert_eq!(one_based(&s[6].element_map), vec![(1, 4, Im), (2, 3, Im)]);
        let alt = two_qubit_settings(ZeroQuantumConvention::RotateSecond);
        let mut a5 = one_based(&alt[5].element_map);
        a5.sort();
        assert_eq!(a5, vec![(1, 4, Re), (2, 3, Re)]);
    }

    #[test]
    fn element_maps_cover_every_parameter_once() {
        let mut seen = std::collections::BTreeSet::new();
        for s in two_qubit_settings(ZeroQuantumConvention::RotateFirst) {
            for e in s.element_map {
                assert!(seen.insert((e.row, e.col, e.part)), "duplicate {e:?}");
            }
        }
        assert_eq!(seen.len(), 16);
    }

    #[test]
    fn setting_gates_match_unitary() {
        for conv in [
            ZeroQuantumConvention::RotateFirst,
            ZeroQuantumConvention::RotateSecond,
        ] {
            for s in two_qubit_settings(conv) {
                let mut circ = Circuit::new(&["q", "qp"]);
                for g in s.gates("q", "qp") {
                    circ.push(g);
                }
                assert!(
                    (&circ.unitary().unwrap() - &s.unitary()).max_abs() < 1e-15,
                    "{}",
                    s.id
                );
            }
        }
    }

    #[test]
    fn psd_projection_examples() {
        let phys = StateVector::from_real(&[0.6, 0.0, 0.0, 0.8]).density();
        assert!((&psd_project(&phys).unwrap().matrix - &phys).max_abs() < 1e-12);
        let bad = ComplexMatrix::diag_real(&[1.1, -0.1, 0.0, 0.0]);
        assert!(
            (&psd_project(&bad).unwrap().matrix - &ComplexMatrix::diag_real(&[1.0, 0.0, 0.0, 0.0]))
                .max_abs()
                < 1e-12
        );
        let mixed = ComplexMatrix::identity(4).scale_real(0.25);
        assert!((&psd_project(&mixed).unwrap().matrix - &mixed).max_abs() < 1e-12);
        let noisy =
            ComplexMatrix::from_rows([[c(0.7, 0.0), c(0.1, 0.5)], [c(0.1, -0.5), c(0.35, 0.0)]]);
        let once = psd_project(&noisy).unwrap().matrix;
        let twice = psd_project(&once).unwrap().matrix;
        assert!((&once - &twice).max_abs() < 1e-12);
        assert!((once.trace().re - 1.0).abs() < 1e-12);
        assert!(once.hermitian_eig().unwrap().values[0] > -1e-12);
    }

    #[test]
    fn two_qubit_ideal_examples() {
        let phi = StateVector::from_real(&[1.0, 0.0, 0.0, 1.0])
            .normalized()
            .density();
        for conv in [
            ZeroQuantumConvention::RotateFirst,
            ZeroQuantumConvention::RotateSecond,
        ] {
            let r = two_qubit_from_distributions(&exact_tables(&phi, conv), conv).unwrap();
            assert!((&r - &phi).max_abs() < 1e-12);
            for (i, j) in [(0, 0), (3, 3), (0, 3), (3, 0)] {
                assert!((r[(i, j)].re - 0.5).abs() < 1e-12);
            }
        }
        let p01 = StateVector::basis(4, 1).density();
        let r = two_qubit_from_distributions(
            &exact_tables(&p01, ZeroQuantumConvention::RotateFirst),
            ZeroQuantumConvention::RotateFirst,
        )
        .unwrap();
        assert!((&r - &ComplexMatrix::diag_real(&[0.0, 1.0, 0.0, 0.0])).max_abs() < 1e-12);
    }

    #[test]
    fn complex_coherences_are_decoded() {
        let psi = StateVector::new(vec![c(0.3, 0.1), c(-0.2, 0.5), c(0.4, -0.3), c(0.1, 0.6)])
            .normalized();
        let rho = psi.density();
        for conv in [
            ZeroQuantumConvention::RotateFirst,
            ZeroQuantumConvention::RotateSecond,
        ] {
            let r = two_qubit_from_distributions(&exact_tables(&rho, conv), conv).unwrap();
            assert!((&r - &rho).max_abs() < 1e-12, "{conv:?}");
        }
    }

    #[test]
    fn single_qubit_examples() {
        let tables_for = |psi: &StateVector| -> Vec<ShotTable> {
            ["X", "Y", "Z"]
                .iter()
                .map(|id| {
                    let mut circ = Circuit::new(&["q"]);
                    for g in single_qubit_gates(id, "q").unwrap() {
                        circ.push(g);
                    }
                    let out = run_ideal(&circ, psi).unwrap();
                    let p = out.probabilities();
                    // Exact frequencies from a large count budget.
                    let shots = 1u64 << 40;
                    let counts = [(p[0] * shots as f64).round() as u64, 0];
                    let counts = [counts[0], shots - counts[0]];
                    ShotTable {
                        setting_id: id.to_string(),
                        shots,
                        seed: 0,
                        counts: [("0".to_string(), counts[0]), ("1".to_string(), counts[1])]
                            .into_iter()
                            .collect(),
                    }
                })
                .collect()
        };
        let zero = StateVector::basis(2, 0);
        let r = single_qubit_reconstruct(&tables_for(&zero), None).unwrap();
        assert!((&r.matrix - &zero.density()).max_abs() < 1e-9);
        let plus = StateVector::from_real(&[1.0, 1.0]).normalized();
        let r = single_qubit_reconstruct(&tables_for(&plus), None).unwrap();
        assert!((bloch_vector(&r.matrix)[0] - 1.0).abs() < 1e-9);
        let yplus = StateVector::new(vec![c(1.0, 0.0), I]).normalized();
        let r = single_qubit_reconstruct(&tables_for(&yplus), None).unwrap();
        assert!((bloch_vector(&r.matrix)[1] - 1.0).abs() < 1e-9);
        assert!(matches!(
            single_qubit_reconstruct(&tables_for(&zero)[..2], None),
            Err(Error::MissingSetting(_))
        ));
    }

    #[test]
    fn missing_or_inconsistent_settings() {
        let phi = StateVector::from_real(&[1.0, 0.0, 0.0, 1.0])
            .normalized()
            .density();
        let mut tables: Vec<ShotTable> = two_qubit_settings(ZeroQuantumConvention::RotateFirst)
            .iter()
            .map(|s| sample_probabilities(&s.probabilities(&phi), 2, 100, 1, &s.id).unwrap())
            .collect();
        assert!(two_qubit_reconstruct(&tables, None, ZeroQuantumConvention::RotateFirst).is_ok());
        let good = std::mem::replace(
            &mut tables[3],
            sample_probabilities(&[0.25; 4], 2, 50, 1, "T4").unwrap(),
        );
        assert!(matches!(
            two_qubit_reconstruct(&tables, None, ZeroQuantumConvention::RotateFirst),
            Err(Error::InvalidShots(_))
        ));
        tables[3] = good;
        tables.remove(6);
        assert!(matches!(
            two_qubit_reconstruct(&tables, None, ZeroQuantumConvention::RotateFirst),
            Err(Error::MissingSetting(_))
        ));
    }

    #[test]
    fn density_json_layout() {
        let d = DensityMatrix {
            matrix: StateVector::new(vec![c(0.6, 0.0), c(0.0, 0.8)]).density(),
        };
        let text = d.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["dim"], 2);
        assert!((v["im"][0][1].as_f64().unwrap() + 0.48).abs() < 1e-12);
        let back = DensityMatrix::from_json(&text).unwrap();
        assert!((&back.matrix - &d.matrix).max_abs() < 1e-15);
        assert!(DensityMatrix::from_json(r#"{"dim":2,"re":[[1]],"im":[[0]]}"#).is_err());
    }
}
