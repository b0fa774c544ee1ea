//! Stabilizer codes, syndromes, and elementary-error models.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pauli::{Pauli, PauliOperator, PauliParseError};

/// Syndrome bit vector; bit `m` is set iff the operator anticommutes with
/// generator `S_m`. At most 64 generators are supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Syndrome {
    bits: u64,
    len: u8,
}

impl Syndrome {
    pub fn new(bits: u64, len: usize) -> Self {
        assert!(len <= 64);
        assert!(len == 64 || bits < 1u64 << len);
        Self {
            bits,
            len: len as u8,
        }
    }

    pub fn zero(len: usize) -> Self {
        Self::new(0, len)
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_zero(&self) -> bool {
        self.bits == 0
    }

    pub fn bit(&self, m: usize) -> bool {
        assert!(m < self.len());
        self.bits >> m & 1 == 1
    }

    /// Little-endian integer value; doubles as the canonical node index.
    pub fn as_index(&self) -> usize {
        self.bits as usize
    }

    /// Binary addition of syndromes (XOR).
    pub fn xor(&self, other: &Self) -> Self {
        assert_eq!(self.len, other.len);
        Self {
            bits: self.bits ^ other.bits,
            len: self.len,
        }
    }

    /// Number of set bits shared with `other` (integer dot product).
    pub fn dot(&self, other: &Self) -> u32 {
        assert_eq!(self.len, other.len);
        (self.bits & other.bits).count_ones()
    }

    pub fn count_ones(&self) -> u32 {
        self.bits.count_ones()
    }
}

impl fmt::Display for Syndrome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for m in 0..self.len() {
            write!(f, "{}", if self.bit(m) { '1' } else { '0' })?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum CodeError {
    #[error("code needs at least one stabilizer generator")]
    NoGenerators,
    #[error("generator {index} acts on {got} qubits, expected {expected}")]
    GeneratorLength {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("generators {a} and {b} anticommute; stabilizer generators must mutually commute")]
    NonCommutingGenerators { a: usize, b: usize },
    #[error("generators are dependent: symplectic rank {rank} < {count} generators")]
    DependentGenerators { rank: usize, count: usize },
    #[error("at most 64 generators are supported, got {0}")]
    TooManyGenerators(usize),
    #[error("generator {index}: {source}")]
    Parse {
        index: usize,
        source: PauliParseError,
    },
    #[error("elementary error {index} must have weight 1, got {weight}")]
    ErrorWeight { index: usize, weight: usize },
    #[error("elementary error {index} ({op}) commutes with every generator and is undetectable")]
    UndetectableError { index: usize, op: String },
    #[error("unknown code {0:?}; known registry codes: bit-flip, five-qubit, steane")]
    UnknownCode(String),
}

/// GF(2) rank of the stacked (x|z) rows.
fn symplectic_rank(rows: &[Vec<u64>]) -> usize {
    let mut basis: Vec<Vec<u64>> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    for row in rows {
        let mut r = row.clone();
        for (b, &p) in basis.iter().zip(&pivots) {
            if r[p / 64] >> (p % 64) & 1 == 1 {
                for (rw, bw) in r.iter_mut().zip(b) {
                    *rw ^= bw;
                }
            }
        }
        if let Some(p) = first_set_bit(&r) {
            basis.push(r);
            pivots.push(p);
        }
    }
    basis.len()
}

fn first_set_bit(row: &[u64]) -> Option<usize> {
    row.iter()
        .enumerate()
        .find(|(_, w)| **w != 0)
        .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

/// An [[n, k]] stabilizer code given by its generator list.
#[derive(Debug, Clone)]
pub struct StabilizerCode {
    name: String,
    n: usize,
    k: usize,
    generators: Vec<PauliOperator>,
    declared_distance: Option<usize>,
}

impl StabilizerCode {
    pub fn new(
        name: impl Into<String>,
        generators: Vec<PauliOperator>,
        declared_distance: Option<usize>,
    ) -> Result<Self, CodeError> {
        if generators.is_empty() {
            return Err(CodeError::NoGenerators);
        }
        if generators.len() > 64 {
            return Err(CodeError::TooManyGenerators(generators.len()));
        }
        let n = generators[0].num_qubits();
        for (i, g) in generators.iter().enumerate() {
            if g.num_qubits() != n {
                return Err(CodeError::GeneratorLength {
                    index: i,
                    got: g.num_qubits(),
                    expected: n,
                });
            }
        }
        for a in 0..generators.len() {
            for b in a + 1..generators.len() {
                if !generators[a].commutes(&generators[b]) {
                    return Err(CodeError::NonCommutingGenerators { a, b });
                }
            }
        }
        let rows: Vec<Vec<u64>> = generators.iter().map(|g| g.symplectic_row()).collect();
        let rank = symplectic_rank(&rows);
        if rank != generators.len() {
            return Err(CodeError::DependentGenerators {
                rank,
                count: generators.len(),
            });
        }
        let k = n - generators.len();
        Ok(Self {
            name: name.into(),
            n,
            k,
            generators,
            declared_distance,
        })
    }

    pub fn from_strings(
        name: impl Into<String>,
        generators: &[&str],
        declared_distance: Option<usize>,
    ) -> Result<Self, CodeError> {
        let ops = generators
            .iter()
            .enumerate()
            .map(|(index, s)| {
                s.parse()
                    .map_err(|source| CodeError::Parse { index, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(name, ops, declared_distance)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn num_logical(&self) -> usize {
        self.k
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[PauliOperator] {
        &self.generators
    }

    pub fn declared_distance(&self) -> Option<usize> {
        self.declared_distance
    }

    /// Number of syndrome values, `2^(n-k)`.
    pub fn num_syndromes(&self) -> usize {
        1usize << self.generators.len()
    }

    /// Syndrome of `op`: bit `m` set iff `op` anticommutes with `S_m`.
    pub fn syndrome(&self, op: &PauliOperator) -> Syndrome {
        assert_eq!(
            op.num_qubits(),
            self.n,
            "syndrome: operator acts on {} qubits, code has {}",
            op.num_qubits(),
            self.n
        );
        let mut bits = 0u64;
        for (m, g) in self.generators.iter().enumerate() {
            if !op.commutes(g) {
                bits |= 1 << m;
            }
        }
        Syndrome::new(bits, self.generators.len())
    }
}

/// One elementary (weight-1) error channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementaryError {
    pub qubit: usize,
    pub pauli: Pauli,
}

impl ElementaryError {
    pub fn operator(&self, n: usize) -> PauliOperator {
        PauliOperator::single(n, self.qubit, self.pauli)
    }

    /// Label like `X1` (1-based qubit, matching figure conventions).
    pub fn label(&self) -> String {
        format!("{}{}", self.pauli.letter(), self.qubit + 1)
    }
}

/// Ordered list of elementary errors coupled to the environment.
#[derive(Debug, Clone)]
pub struct ErrorModel {
    errors: Vec<ElementaryError>,
}

impl ErrorModel {
    /// Validates weight-1 and detectability against `code`.
    pub fn new(code: &StabilizerCode, errors: Vec<ElementaryError>) -> Result<Self, CodeError> {
        for (index, e) in errors.iter().enumerate() {
            if e.pauli == Pauli::I {
                return Err(CodeError::ErrorWeight { index, weight: 0 });
            }
            if e.qubit >= code.num_qubits() {
                return Err(CodeError::GeneratorLength {
                    index,
                    got: e.qubit + 1,
                    expected: code.num_qubits(),
                });
            }
            let op = e.operator(code.num_qubits());
            if code.syndrome(&op).is_zero() {
                return Err(CodeError::UndetectableError {
                    index,
                    op: e.label(),
                });
            }
        }
        Ok(Self { errors })
    }

    /// One channel per qubit per listed letter, qubit-major order
    /// (X1, Z1, X2, Z2, ... for `letters = [X, Z]`).
    pub fn per_qubit(
        code: &StabilizerCode,
        letters: &[Pauli],
    ) -> Result<Self, CodeError> {
        let mut errors = Vec::new();
        for qubit in 0..code.num_qubits() {
            for &pauli in letters {
                errors.push(ElementaryError { qubit, pauli });
            }
        }
        Self::new(code, errors)
    }

    pub fn errors(&self) -> &[ElementaryError] {
        &self.errors
    }

    pub fn len(&self) -> usize {
        self.errors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn operator(&self, j: usize, n: usize) -> PauliOperator {
        self.errors[j].operator(n)
    }
}

/// JSON shape for user-supplied code definitions.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSpec {
    pub name: String,
    pub n: usize,
    pub k: usize,
    pub generators: Vec<String>,
    #[serde(default)]
    pub distance: Option<usize>,
}

impl CodeSpec {
    pub fn build(&self) -> Result<StabilizerCode, CodeError> {
        let refs: Vec<&str> = self.generators.iter().map(String::as_str).collect();
        let code = StabilizerCode::from_strings(self.name.clone(), &refs, self.distance)?;
        if code.num_qubits() != self.n || code.num_logical() != self.k {
            return Err(CodeError::DependentGenerators {
                rank: code.num_qubits() - code.num_logical(),
                count: self.n - self.k,
            });
        }
        Ok(code)
    }
}

/// Three-qubit repetition (bit-flip) code, generators ZZI and IZZ.
pub fn bit_flip_code() -> StabilizerCode {
    StabilizerCode::from_strings("bit-flip", &["ZZI", "IZZ"], None).unwrap()
}

/// The [[5,1,3]] code, generators IXZZX, XIXZZ, ZXIXZ, ZZXIX.
pub fn five_qubit_code() -> StabilizerCode {
    StabilizerCode::from_strings("five-qubit", &["IXZZX", "XIXZZ", "ZXIXZ", "ZZXIX"], Some(3))
        .unwrap()
}

/// The Steane [[7,1,3]] code with the usual six CSS generators.
pub fn steane_code() -> StabilizerCode {
    StabilizerCode::from_strings(
        "steane",
        &[
            "ZIZIZIZ", "IZZIIZZ", "IIIZZZZ", "XIXIXIX", "IXXIIXX", "IIIXXXX",
        ],
        Some(3),
    )
    .unwrap()
}

/// Built-in code registry.
pub fn registry() -> Vec<StabilizerCode> {
    vec![bit_flip_code(), five_qubit_code(), steane_code()]
}

pub fn registry_code(name: &str) -> Result<StabilizerCode, CodeError> {
    match name {
        "bit-flip" | "bitflip" | "repetition" => Ok(bit_flip_code()),
        "five-qubit" | "5-qubit" | "[[5,1,3]]" => Ok(five_qubit_code()),
        "steane" | "[[7,1,3]]" => Ok(steane_code()),
        other => Err(CodeError::UnknownCode(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_zero_syndrome() {
        let code = steane_code();
        assert!(code
            .syndrome(&PauliOperator::identity(7))
            .is_zero());
    }

    #[test]
    fn bit_flip_x2_syndrome_is_11() {
        let code = bit_flip_code();
        let x2 = PauliOperator::single(3, 1, Pauli::X);
        let s = code.syndrome(&x2);
        assert!(s.bit(0) && s.bit(1));
        assert_eq!(s.as_index(), 0b11);
    }

    #[test]
    fn steane_x1_trips_only_first_generator() {
        let code = steane_code();
        let s = code.syndrome(&PauliOperator::single(7, 0, Pauli::X));
        assert_eq!(s.to_string(), "100000");
    }

    #[test]
    fn registry_codes_validate() {
        for code in registry() {
            assert_eq!(code.num_generators(), code.num_qubits() - code.num_logical());
        }
        assert_eq!(steane_code().num_syndromes(), 64);
        assert_eq!(five_qubit_code().num_syndromes(), 16);
    }

    #[test]
    fn anticommuting_generators_rejected() {
        let err = StabilizerCode::from_strings("bad", &["XI", "ZI"], None).unwrap_err();
        assert!(matches!(err, CodeError::NonCommutingGenerators { .. }));
    }

    #[test]
    fn dependent_generators_rejected() {
        // ZZI * IZZ = ZIZ
        let err = StabilizerCode::from_strings("bad", &["ZZI", "IZZ", "ZIZ"], None).unwrap_err();
        assert!(matches!(err, CodeError::DependentGenerators { .. }));
    }

    #[test]
    fn undetectable_error_rejected() {
        let code = bit_flip_code();
        // Z1 commutes with both ZZI and IZZ
        let err = ErrorModel::new(
            &code,
            vec![ElementaryError {
                qubit: 0,
                pauli: Pauli::Z,
            }],
        )
        .unwrap_err();
        assert!(matches!(err, CodeError::UndetectableError { .. }));
    }

    #[test]
    fn syndrome_additivity_on_random_steane_pairs() {
        use rand::{Rng, SeedableRng};
        let code = steane_code();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let mut a = PauliOperator::identity(7);
            let mut b = PauliOperator::identity(7);
            for q in 0..7 {
                a.set(q, [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][rng.gen_range(0..4)]);
                b.set(q, [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][rng.gen_range(0..4)]);
            }
            let lhs = code.syndrome(&a.multiply(&b));
            let rhs = code.syndrome(&a).xor(&code.syndrome(&b));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn code_spec_round_trip() {
        let json = r#"{"name":"steane","n":7,"k":1,
            "generators":["ZIZIZIZ","IZZIIZZ","IIIZZZZ","XIXIXIX","IXXIIXX","IIIXXXX"],
            "distance":3}"#;
        let spec: CodeSpec = serde_json::from_str(json).unwrap();
        let code = spec.build().unwrap();
        assert_eq!(code.num_generators(), 6);
    }

    #[test]
    fn code_spec_rejects_unknown_keys() {
        let json = r#"{"name":"x","n":3,"k":1,"generators":["ZZI","IZZ"],"oops":1}"#;
        assert!(serde_json::from_str::<CodeSpec>(json).is_err());
    }
}
