//! Elementary gate vocabulary: 1-qubit unitaries, CNOT, multi-controlled
//! unitaries, and two-level unitaries acting on amplitude index pairs.
//!
//! Qubit labels are 1-based throughout; bit `j` (0-based, least significant)
//! of an amplitude index holds the value of qubit `q_{j+1}`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Unitarity tolerance applied when a 2x2 matrix is constructed.
pub const UNITARITY_TOL: f64 = 1e-10;

/// A validated 2x2 unitary matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Unitary2 {
    m: [[Complex64; 2]; 2],
}

impl Unitary2 {
    /// Validates `U† U = I` to within [`UNITARITY_TOL`].
    pub fn new(m: [[Complex64; 2]; 2]) -> Result<Self> {
        for row in &m {
            for e in row {
                if !e.re.is_finite() || !e.im.is_finite() {
                    return Err(Error::NotUnitary {
                        deviation: f64::INFINITY,
                        tolerance: UNITARITY_TOL,
                    });
                }
            }
        }
        let mut deviation: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                // (U† U)_{ij} = sum_k conj(U_{ki}) U_{kj}
                let mut s = Complex64::new(0.0, 0.0);
                for row in &m {
                    s += row[i].conj() * row[j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                deviation = deviation.max((s - target).norm());
            }
        }
        if deviation > UNITARITY_TOL {
            return Err(Error::NotUnitary {
                deviation,
                tolerance: UNITARITY_TOL,
            });
        }
        Ok(Self { m })
    }

    /// Completes a normalized first column `(alpha, beta)` into the unitary
    /// `[[alpha, -conj(beta)], [beta, conj(alpha)]]`.
    pub fn from_first_column(alpha: Complex64, beta: Complex64) -> Result<Self> {
        Self::new([[alpha, -beta.conj()], [beta, alpha.conj()]])
    }

    pub fn identity() -> Self {
        Self {
            m: [
                [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
                [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            ],
        }
    }

    pub fn pauli_x() -> Self {
        Self {
            m: [
                [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
                [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            ],
        }
    }

    pub fn entries(&self) -> &[[Complex64; 2]; 2] {
        &self.m
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        Self {
            m: [
                [self.m[0][0].conj(), self.m[1][0].conj()],
                [self.m[0][1].conj(), self.m[1][1].conj()],
            ],
        }
    }

    /// Matrix product `self * rhs`.
    pub fn mul(&self, rhs: &Self) -> Self {
        let a = &self.m;
        let b = &rhs.m;
        let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self { m }
    }

    /// Applies the matrix to a 2-component amplitude vector.
    pub fn apply(&self, v: (Complex64, Complex64)) -> (Complex64, Complex64) {
        (
            self.m[0][0] * v.0 + self.m[0][1] * v.1,
            self.m[1][0] * v.0 + self.m[1][1] * v.1,
        )
    }
}

/// One elementary operation of a gate script.
#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    /// Arbitrary 1-qubit unitary on `target`.
    SingleQubit { target: usize, matrix: Unitary2 },
    /// CNOT with `control` driving `target`.
    Cnot { control: usize, target: usize },
    /// Unitary on `target` applied only where every `(qubit, bit)` control
    /// matches. An empty control list degenerates to `SingleQubit`.
    ControlledU {
        controls: Vec<(usize, bool)>,
        target: usize,
        matrix: Unitary2,
    },
    /// Unitary mixing exactly two amplitude entries `index_i` and `index_j`.
    TwoLevel {
        index_i: usize,
        index_j: usize,
        matrix: Unitary2,
    },
}

impl Gate {
    /// Checks all qubit labels and amplitude indices against an `n`-qubit state.
    pub fn validate(&self, n: usize) -> Result<()> {
        let check_qubit = |q: usize| {
            if q == 0 || q > n {
                Err(Error::QubitOutOfRange { qubit: q, n })
            } else {
                Ok(())
            }
        };
        match self {
            Gate::SingleQubit { target, .. } => check_qubit(*target),
            Gate::Cnot { control, target } => {
                check_qubit(*control)?;
                check_qubit(*target)?;
                if control == target {
                    return Err(Error::DuplicateQubit { qubit: *control });
                }
                Ok(())
            }
            Gate::ControlledU {
                controls, target, ..
            } => {
                check_qubit(*target)?;
                let mut seen = vec![false; n + 1];
                seen[*target] = true;
                for (q, _) in controls {
                    check_qubit(*q)?;
                    if seen[*q] {
                        return Err(Error::DuplicateQubit { qubit: *q });
                    }
                    seen[*q] = true;
                }
                Ok(())
            }
            Gate::TwoLevel {
                index_i, index_j, ..
            } => {
                let dim = 1usize << n;
                if *index_i >= dim {
                    return Err(Error::IndexOutOfRange { index: *index_i, n });
                }
                if *index_j >= dim {
                    return Err(Error::IndexOutOfRange { index: *index_j, n });
                }
                if index_i == index_j {
                    return Err(Error::DuplicateIndex { index: *index_i });
                }
                Ok(())
            }
        }
    }

    /// The inverse gate.
    pub fn dagger(&self) -> Gate {
        match self {
            Gate::SingleQubit { target, matrix } => Gate::SingleQubit {
                target: *target,
                matrix: matrix.dagger(),
            },
            Gate::Cnot { control, target } => Gate::Cnot {
                control: *control,
                target: *target,
            },
            Gate::ControlledU {
                controls,
                target,
                matrix,
            } => Gate::ControlledU {
                controls: controls.clone(),
                target: *target,
                matrix: matrix.dagger(),
            },
            Gate::TwoLevel {
                index_i,
                index_j,
                matrix,
            } => Gate::TwoLevel {
                index_i: *index_i,
                index_j: *index_j,
                matrix: matrix.dagger(),
            },
        }
    }
}

/// An ordered list of gates.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GateScript {
    gates: Vec<Gate>,
}

impl GateScript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_gates(gates: Vec<Gate>) -> Self {
        Self { gates }
    }

    pub fn push(&mut self, gate: Gate) {
        self.gates.push(gate);
    }

    pub fn extend(&mut self, other: GateScript) {
        self.gates.extend(other.gates);
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.gates.iter().try_for_each(|g| g.validate(n))
    }

    /// The inverse script: reversed order, inverted gates.
    pub fn dagger(&self) -> GateScript {
        GateScript {
            gates: self.gates.iter().rev().map(Gate::dagger).collect(),
        }
    }
}

impl IntoIterator for GateScript {
    type Item = Gate;
    type IntoIter = std::vec::IntoIter<Gate>;
    fn into_iter(self) -> Self::IntoIter {
        self.gates.into_iter()
    }
}

impl<'a> IntoIterator for &'a GateScript {
    type Item = &'a Gate;
    type IntoIter = std::slice::Iter<'a, Gate>;
    fn into_iter(self) -> Self::IntoIter {
        self.gates.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_non_unitary_matrix() {
        let err = Unitary2::new([[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(2.0, 0.0)]]);
        assert!(matches!(err, Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn first_column_completion_is_unitary() {
        let u = Unitary2::from_first_column(c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        let (a, b) = u.apply((c(1.0, 0.0), c(0.0, 0.0)));
        assert!((a - c(0.6, 0.0)).norm() < 1e-12);
        assert!((b - c(0.0, 0.8)).norm() < 1e-12);
    }

    #[test]
    fn dagger_reverses_product() {
        let u = Unitary2::from_first_column(c(0.6, 0.0), c(0.8, 0.0)).unwrap();
        let prod = u.mul(&u.dagger());
        let id = Unitary2::identity();
        for i in 0..2 {
            for j in 0..2 {
                assert!((prod.entries()[i][j] - id.entries()[i][j]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn gate_validation_catches_bad_indices() {
        let g = Gate::Cnot {
            control: 1,
            target: 1,
        };
        assert!(matches!(g.validate(2), Err(Error::DuplicateQubit { .. })));
        let g = Gate::SingleQubit {
            target: 3,
            matrix: Unitary2::identity(),
        };
        assert!(matches!(g.validate(2), Err(Error::QubitOutOfRange { .. })));
        let g = Gate::TwoLevel {
            index_i: 4,
            index_j: 1,
            matrix: Unitary2::identity(),
        };
        assert!(matches!(g.validate(2), Err(Error::IndexOutOfRange { .. })));
    }
}
