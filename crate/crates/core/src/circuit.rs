//! Gate-level circuits on up to three named wires.
//!
//! Wire 0 is the most significant qubit of the assembled matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, hadamard, ComplexMatrix, StateVector, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateKind {
    Ry,
    Rz,
    /// `Rz(alpha) Ry(beta) Rz(gamma)`.
    U3,
    H,
    RxHalfPi,
    #[serde(rename = "CNOT")]
    Cnot,
    /// Ancilla preparation `Ry(theta)`.
    Prep,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Cnot => 2,
            _ => 1,
        }
    }

    pub fn angle_count(self) -> usize {
        match self {
            GateKind::Ry | GateKind::Rz | GateKind::Prep => 1,
            GateKind::U3 => 3,
            GateKind::H | GateKind::RxHalfPi | GateKind::Cnot => 0,
        }
    }
}

/// A gate acting on named wires; CNOT wires are `[control, target]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub wires: Vec<String>,
    #[serde(default)]
    pub angles: Vec<f64>,
}

impl Gate {
    pub fn single(kind: GateKind, wire: &str, angles: &[f64]) -> Self {
        Self {
            kind,
            wires: vec![wire.to_string()],
            angles: angles.to_vec(),
        }
    }

    pub fn cnot(control: &str, target: &str) -> Self {
        Self {
            kind: GateKind::Cnot,
            wires: vec![control.to_string(), target.to_string()],
            angles: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub wires: Vec<String>,
    pub gates: Vec<Gate>,
    #[serde(default)]
    pub global_phase: f64,
}

pub fn rz(a: f64) -> ComplexMatrix {
    ComplexMatrix::diag(&[
        C64::from_polar(1.0, -a / 2.0),
        C64::from_polar(1.0, a / 2.0),
    ])
}

pub fn ry(b: f64) -> ComplexMatrix {
    let (s, co) = (b / 2.0).sin_cos();
    ComplexMatrix::from_real_rows([[co, -s], [s, co]])
}

pub fn rx_half_pi() -> ComplexMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_rows([[c(h, 0.0), c(0.0, -h)], [c(0.0, -h), c(h, 0.0)]])
}

pub fn u3(alpha: f64, beta: f64, gamma: f64) -> ComplexMatrix {
    &(&rz(alpha) * &ry(beta)) * &rz(gamma)
}

/// Embeds a single-qubit operator on `wire` of an `n`-wire register.
pub fn embed_single(op: &ComplexMatrix, wire: usize, n: usize) -> Result<ComplexMatrix> {
    if wire >= n {
        return Err(Error::InvalidWires(format!(
            "wire {wire} outside {n}-wire register"
        )));
    }
    let mut out = ComplexMatrix::identity(1);
    for w in 0..n {
        let factor = if w == wire {
            op.clone()
        } else {
            ComplexMatrix::identity(2)
        };
        out = out.kron(&factor)?;
    }
    Ok(out)
}

/// CNOT permutation on an `n`-wire register.
pub fn cnot_matrix(control: usize, target: usize, n: usize) -> Result<ComplexMatrix> {
    if control >= n || target >= n || control == target {
        return Err(Error::InvalidWires(format!(
            "bad CNOT wires ({control}, {target}) on {n} wires"
        )));
    }
    let dim = 1 << n;
    let cbit = 1 << (n - 1 - control);
    let tbit = 1 << (n - 1 - target);
    let mut m = ComplexMatrix::zeros(dim);
    for col in 0..dim {
        let row = if col & cbit != 0 { col ^ tbit } else { col };
        m[(row, col)] = c(1.0, 0.0);
    }
    Ok(m)
}

impl Gate {
    fn single_qubit_matrix(&self) -> ComplexMatrix {
        let a = &self.angles;
        match self.kind {
            GateKind::Ry | GateKind::Prep => ry(a[0]),
            GateKind::Rz => rz(a[0]),
            GateKind::U3 => u3(a[0], a[1], a[2]),
            GateKind::H => hadamard(),
            GateKind::RxHalfPi => rx_half_pi(),
            GateKind::Cnot => unreachable!("two-qubit gate"),
        }
    }
}

impl Circuit {
    pub fn new(wires: &[&str]) -> Self {
        Self {
            wires: wires.iter().map(|w| w.to_string()).collect(),
            gates: Vec::new(),
            global_phase: 0.0,
        }
    }

    pub fn push(&mut self, gate: Gate) -> &mut Self {
        self.gates.push(gate);
        self
    }

    pub fn wire_index(&self, name: &str) -> Result<usize> {
        self.wires
            .iter()
            .position(|w| w == name)
            .ok_or_else(|| Error::InvalidWires(format!("unknown wire {name:?}")))
    }

    pub fn cnot_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| g.kind == GateKind::Cnot)
            .count()
    }

    /// Checks wire names, arities and angle counts.
    pub fn validate(&self) -> Result<()> {
        let n = self.wires.len();
        if n == 0 || n > 3 {
            return Err(Error::InvalidCircuit(format!(
                "circuits need 1 to 3 wires, got {n}"
            )));
        }
        for (i, w) in self.wires.iter().enumerate() {
            if self.wires[..i].contains(w) {
                return Err(Error::InvalidCircuit(format!("duplicate wire {w:?}")));
            }
        }
        for (k, g) in self.gates.iter().enumerate() {
            if g.wires.len() != g.kind.arity() {
                return Err(Error::InvalidCircuit(format!(
                    "gate {k} ({:?}) needs {} wires",
                    g.kind,
                    g.kind.arity()
                )));
            }
            if g.angles.len() != g.kind.angle_count() {
                return Err(Error::InvalidCircuit(format!(
                    "gate {k} ({:?}) needs {} angles",
                    g.kind,
                    g.kind.angle_count()
                )));
            }
            if g.angles.iter().any(|a| !a.is_finite()) {
                return Err(Error::InvalidCircuit(format!(
                    "gate {k} has a non-finite angle"
                )));
            }
            for w in &g.wires {
                self.wire_index(w)?;
            }
            if g.kind == GateKind::Cnot && g.wires[0] == g.wires[1] {
                return Err(Error::InvalidCircuit(format!(
                    "gate {k}: CNOT control equals target"
                )));
            }
        }
        Ok(())
    }

    /// Full unitary including the global phase.
    pub fn unitary(&self) -> Result<ComplexMatrix> {
        self.validate()?;
        let n = self.wires.len();
        let mut u = ComplexMatrix::identity(1 << n);
        for g in &self.gates {
            let op = if g.kind == GateKind::Cnot {
                cnot_matrix(
                    self.wire_index(&g.wires[0])?,
                    self.wire_index(&g.wires[1])?,
                    n,
                )?
            } else {
                embed_single(&g.single_qubit_matrix(), self.wire_index(&g.wires[0])?, n)?
            };
            u = &op * &u;
        }
        Ok(u.scale(C64::from_polar(1.0, self.global_phase)))
    }

    /// Applies the circuit to `state` gate by gate.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        self.unitary()?.apply(state)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Circuit = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{pauli_x, pauli_y, I};

    #[test]
    fn rotation_matrices() {
        assert!(
            (&ry(std::f64::consts::PI) - &ComplexMatrix::from_real_rows([[0.0, -1.0], [1.0, 0.0]]))
                .max_abs()
                < 1e-15
        );
        assert!((&ry(std::f64::consts::PI) - &pauli_y().scale(-I)).max_abs() < 1e-15);
        let u = u3(0.3, 1.1, -0.7);
        assert!(u.is_unitary(1e-14));
        let rx = rx_half_pi();
        assert!((&(&rx * &rx) - &pauli_x().scale(-I)).max_abs() < 1e-15);
    }

    #[test]
    fn single_gate_circuit() {
        let mut c = Circuit::new(&["a"]);
        c.push(Gate::single(
            GateKind::U3,
            "a",
            &[0.0, std::f64::consts::PI, 0.0],
        ));
        let u = c.unitary().unwrap();
        assert!((&u - &ComplexMatrix::from_real_rows([[0.0, -1.0], [1.0, 0.0]])).max_abs() < 1e-15);
    }

    #[test]
    fn cnot_orientation() {
        let cq = cnot_matrix(1, 0, 2).unwrap();
        // control q (LSB), target a (MSB): |01> <-> |11>
        assert_eq!(cq[(3, 1)], c(1.0, 0.0));
        assert_eq!(cq[(1, 3)], c(1.0, 0.0));
        assert_eq!(cq[(2, 2)], c(1.0, 0.0));
        let ca = cnot_matrix(0, 1, 2).unwrap();
        assert_eq!(ca[(3, 2)], c(1.0, 0.0));
        assert!(cnot_matrix(1, 1, 2).is_err());
        let three = cnot_matrix(1, 2, 3).unwrap();
        assert_eq!(three[(0b011, 0b010)], c(1.0, 0.0));
    }

    #[test]
    fn triple_cnot_collapses() {
        let mut c = Circuit::new(&["a", "q"]);
        for _ in 0..3 {
            c.push(Gate::cnot("q", "a"));
        }
        assert_eq!(c.unitary().unwrap(), cnot_matrix(1, 0, 2).unwrap());
    }

    #[test]
    fn validation_errors() {
        let mut c = Circuit::new(&["a", "q"]);
        c.push(Gate::single(GateKind::Ry, "b", &[0.1]));
        assert!(c.unitary().is_err());
        let mut c = Circuit::new(&["a", "q"]);
        c.push(Gate::single(GateKind::U3, "a", &[0.1]));
        assert!(c.validate().is_err());
        let mut c = Circuit::new(&["a", "q"]);
        c.push(Gate::cnot("a", "a"));
        assert!(c.validate().is_err());
        assert!(Circuit::new(&["a", "a"]).validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut c = Circuit::new(&["a", "q"]);
        c.push(Gate::single(GateKind::Prep, "a", &[2.1001]));
        c.push(Gate::cnot("q", "a"));
        c.push(Gate::single(GateKind::RxHalfPi, "q", &[]));
        c.global_phase = -0.4;
        let text = c.to_json().unwrap();
        assert!(text.contains("\"CNOT\""));
        assert_eq!(Circuit::from_json(&text).unwrap(), c);
    }
}
