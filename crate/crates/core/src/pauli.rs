//! Phase-free n-qubit Pauli operators in binary symplectic form.
//!
//! An operator is stored as two bit vectors (x, z); qubit `i` carries X iff
//! `x[i]` is set, Z iff `z[i]` is set, Y iff both. Overall phases are never
//! tracked: syndrome and population bookkeeping is insensitive to them, and
//! dropping them makes multiplication a plain XOR.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    /// (x, z) bit pair of the letter.
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PauliParseError {
    #[error("empty Pauli string")]
    Empty,
    #[error("invalid Pauli letter {letter:?} at position {position} (expected one of I, X, Y, Z)")]
    InvalidLetter { letter: char, position: usize },
}

/// Phase-free Pauli operator on `n` qubits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliOperator {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
}

fn words_for(n: usize) -> usize {
    n.div_ceil(64)
}

fn parity_of_and(a: &[u64], b: &[u64]) -> bool {
    a.iter()
        .zip(b)
        .fold(0u32, |acc, (wa, wb)| acc ^ (wa & wb).count_ones())
        & 1
        == 1
}

impl PauliOperator {
    pub fn identity(n: usize) -> Self {
        assert!(n >= 1, "Pauli operator needs at least one qubit");
        let w = words_for(n);
        Self {
            n,
            x: vec![0; w],
            z: vec![0; w],
        }
    }

    /// Single-letter operator acting on `qubit` (0-based).
    pub fn single(n: usize, qubit: usize, letter: Pauli) -> Self {
        assert!(qubit < n, "qubit {qubit} out of range for {n} qubits");
        let mut op = Self::identity(n);
        op.set(qubit, letter);
        op
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn get(&self, qubit: usize) -> Pauli {
        assert!(qubit < self.n);
        let (w, b) = (qubit / 64, qubit % 64);
        Pauli::from_bits(self.x[w] >> b & 1 == 1, self.z[w] >> b & 1 == 1)
    }

    pub fn set(&mut self, qubit: usize, letter: Pauli) {
        assert!(qubit < self.n);
        let (w, b) = (qubit / 64, qubit % 64);
        let (xb, zb) = letter.bits();
        self.x[w] = self.x[w] & !(1 << b) | (xb as u64) << b;
        self.z[w] = self.z[w] & !(1 << b) | (zb as u64) << b;
    }

    /// Number of qubits acted on non-trivially.
    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(wx, wz)| (wx | wz).count_ones() as usize)
            .sum()
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().all(|w| *w == 0) && self.z.iter().all(|w| *w == 0)
    }

    /// True iff `self` and `other` commute (symplectic inner product is even).
    pub fn commutes(&self, other: &Self) -> bool {
        assert_eq!(
            self.n, other.n,
            "commutes: operators act on different qubit counts"
        );
        !(parity_of_and(&self.x, &other.z) ^ parity_of_and(&self.z, &other.x))
    }

    /// Phase-free product: componentwise XOR of the symplectic vectors.
    pub fn multiply(&self, other: &Self) -> Self {
        assert_eq!(
            self.n, other.n,
            "multiply: operators act on different qubit counts"
        );
        Self {
            n: self.n,
            x: self.x.iter().zip(&other.x).map(|(a, b)| a ^ b).collect(),
            z: self.z.iter().zip(&other.z).map(|(a, b)| a ^ b).collect(),
        }
    }

    /// Qubits in the support, ascending, with their letters.
    pub fn support(&self) -> Vec<(usize, Pauli)> {
        (0..self.n)
            .filter_map(|q| {
                let p = self.get(q);
                (p != Pauli::I).then_some((q, p))
            })
            .collect()
    }

    /// Concatenated (x|z) bit row, used for GF(2) linear algebra.
    pub(crate) fn symplectic_row(&self) -> Vec<u64> {
        let mut row = Vec::with_capacity(2 * self.x.len());
        row.extend_from_slice(&self.x);
        row.extend_from_slice(&self.z);
        row
    }
}

impl FromStr for PauliOperator {
    type Err = PauliParseError;

    /// Parses strings like `"ZIZIZIZ"`; leftmost letter is qubit 0.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Err(PauliParseError::Empty);
        }
        let mut op = PauliOperator::identity(s.chars().count());
        for (i, c) in s.chars().enumerate() {
            let letter = match c {
                'I' | 'i' => Pauli::I,
                'X' | 'x' => Pauli::X,
                'Y' | 'y' => Pauli::Y,
                'Z' | 'z' => Pauli::Z,
                other => {
                    return Err(PauliParseError::InvalidLetter {
                        letter: other,
                        position: i,
                    })
                }
            };
            op.set(i, letter);
        }
        Ok(op)
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n {
            write!(f, "{}", self.get(q).letter())?;
        }
        Ok(())
    }
}
