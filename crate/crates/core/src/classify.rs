//! Correctability classification of accumulated error products.
//!
//! Products of elementary errors are enumerated by increasing Pauli weight;
//! the first product reaching a syndrome becomes the decoder's correction for
//! it. A product E is *correctable* iff applying the decoder's correction
//! returns it to the stabilizer group exactly, i.e. decoder(syndrome(E)) * E
//! is a stabilizer. Equal-weight candidates for the same syndrome are logged
//! as ties; logically inequivalent ties mark the syndrome ambiguous.

use itertools::Itertools;
use thiserror::Error;

use crate::code::{ErrorModel, StabilizerCode, Syndrome};
use crate::pauli::{Pauli, PauliOperator};

/// Hard cap on generator count for full syndrome enumeration.
pub const MAX_ENUMERATION_GENERATORS: usize = 20;

/// Guard on candidate-product count before enumeration starts.
const MAX_CANDIDATES: u128 = 20_000_000;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("max_weight must be >= 1, got {0}")]
    MaxWeightZero(usize),
    #[error(
        "code has {count} generators; full enumeration is capped at {max}",
        count = .0,
        max = MAX_ENUMERATION_GENERATORS
    )]
    TooManyGenerators(usize),
    #[error("enumeration of {0} candidate products is infeasible")]
    EnumerationTooLarge(u128),
}

/// How a transition (source syndrome, elementary error) is classified.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum TransitionClass {
    /// The concatenated product is still exactly recoverable.
    Correctable,
    /// Applying this error leaks out of the correctable set.
    Uncorrectable,
}

/// Per-syndrome classification record.
#[derive(Debug, Clone)]
pub struct SyndromeRecord {
    pub syndrome: Syndrome,
    /// Minimal-weight product reaching this syndrome, if any was found.
    pub representative: Option<PauliOperator>,
    pub weight: Option<usize>,
    /// True when logically inequivalent minimal representatives exist.
    pub ambiguous: bool,
}

impl SyndromeRecord {
    pub fn correctable(&self) -> bool {
        self.representative.is_some()
    }
}

/// A decoder tie observed during enumeration.
#[derive(Debug, Clone)]
pub struct TieRecord {
    pub syndrome: Syndrome,
    pub kept: PauliOperator,
    pub discarded: PauliOperator,
    /// True when kept * discarded is a stabilizer (harmless degeneracy).
    pub stabilizer_equivalent: bool,
}

/// Classification of every syndrome and every (syndrome, error) transition.
#[derive(Debug, Clone)]
pub struct CorrectabilityTable {
    records: Vec<SyndromeRecord>,
    /// classes[s][j] for syndromes with a representative; empty otherwise.
    classes: Vec<Vec<TransitionClass>>,
    ties: Vec<TieRecord>,
    error_syndromes: Vec<Syndrome>,
    max_weight: usize,
}

impl CorrectabilityTable {
    pub fn records(&self) -> &[SyndromeRecord] {
        &self.records
    }

    pub fn record(&self, syndrome: &Syndrome) -> &SyndromeRecord {
        &self.records[syndrome.as_index()]
    }

    pub fn ties(&self) -> &[TieRecord] {
        &self.ties
    }

    pub fn max_weight(&self) -> usize {
        self.max_weight
    }

    /// Syndromes of the model's elementary errors, indexed by j.
    pub fn error_syndromes(&self) -> &[Syndrome] {
        &self.error_syndromes
    }

    pub fn num_errors(&self) -> usize {
        self.error_syndromes.len()
    }

    /// Class of applying error `j` while carrying the accumulated error of
    /// `syndrome`. Only defined for correctable source syndromes.
    pub fn transition_class(&self, syndrome: &Syndrome, j: usize) -> TransitionClass {
        debug_assert!(self.records[syndrome.as_index()].correctable());
        self.classes[syndrome.as_index()][j]
    }

    pub fn num_correctable(&self) -> usize {
        self.records.iter().filter(|r| r.correctable()).count()
    }
}

/// GF(2) row basis for stabilizer-group membership tests.
struct MembershipBasis {
    rows: Vec<Vec<u64>>,
    pivots: Vec<usize>,
}

impl MembershipBasis {
    fn new(code: &StabilizerCode) -> Self {
        let mut basis = Self {
            rows: Vec::new(),
            pivots: Vec::new(),
        };
        for g in code.generators() {
            let r = basis.reduce(g.symplectic_row());
            if let Some(p) = first_set_bit(&r) {
                basis.rows.push(r);
                basis.pivots.push(p);
            }
        }
        basis
    }

    fn reduce(&self, mut row: Vec<u64>) -> Vec<u64> {
        for (b, &p) in self.rows.iter().zip(&self.pivots) {
            if row[p / 64] >> (p % 64) & 1 == 1 {
                for (rw, bw) in row.iter_mut().zip(b) {
                    *rw ^= bw;
                }
            }
        }
        row
    }

    /// True iff `op` lies in the group generated by the code's stabilizers
    /// (phases ignored).
    fn contains(&self, op: &PauliOperator) -> bool {
        self.reduce(op.symplectic_row()).iter().all(|w| *w == 0)
    }
}

fn first_set_bit(row: &[u64]) -> Option<usize> {
    row.iter()
        .enumerate()
        .find(|(_, w)| **w != 0)
        .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

/// Per-qubit letters reachable as products of the model's elementary errors
/// on that qubit: one letter generates {letter}, two distinct generate all
/// three.
fn reachable_letters(code: &StabilizerCode, model: &ErrorModel) -> Vec<Vec<Pauli>> {
    let mut present: Vec<[bool; 3]> = vec![[false; 3]; code.num_qubits()];
    for e in model.errors() {
        let slot = match e.pauli {
            Pauli::X => 0,
            Pauli::Y => 1,
            Pauli::Z => 2,
            Pauli::I => unreachable!("error models hold non-identity letters"),
        };
        present[e.qubit][slot] = true;
    }
    present
        .into_iter()
        .map(|flags| {
            let count = flags.iter().filter(|f| **f).count();
            if count >= 2 {
                vec![Pauli::X, Pauli::Y, Pauli::Z]
            } else {
                [Pauli::X, Pauli::Y, Pauli::Z]
                    .into_iter()
                    .zip(flags)
                    .filter_map(|(p, f)| f.then_some(p))
                    .collect()
            }
        })
        .collect()
}

fn candidate_count(letters: &[Vec<Pauli>], max_weight: usize) -> u128 {
    // sum over supports of prod |letters[q]|, grouped by weight
    let active: Vec<u128> = letters
        .iter()
        .filter(|l| !l.is_empty())
        .map(|l| l.len() as u128)
        .collect();
    // dp over qubits: ways[w] = number of weight-w assignments
    let mut ways = vec![0u128; max_weight + 1];
    ways[0] = 1;
    for &choices in &active {
        for w in (1..=max_weight).rev() {
            let add = ways[w - 1].saturating_mul(choices);
            ways[w] = ways[w].saturating_add(add);
        }
    }
    ways.iter().sum()
}

/// Builds the correctability table for `(code, model)` by breadth-first
/// enumeration of error products up to `max_weight`.
pub fn classify(
    code: &StabilizerCode,
    model: &ErrorModel,
    max_weight: usize,
) -> Result<CorrectabilityTable, ClassifyError> {
    if max_weight == 0 {
        return Err(ClassifyError::MaxWeightZero(max_weight));
    }
    let g = code.num_generators();
    if g > MAX_ENUMERATION_GENERATORS {
        return Err(ClassifyError::TooManyGenerators(g));
    }
    let letters = reachable_letters(code, model);
    let n_candidates = candidate_count(&letters, max_weight);
    if n_candidates > MAX_CANDIDATES {
        return Err(ClassifyError::EnumerationTooLarge(n_candidates));
    }

    let membership = MembershipBasis::new(code);
    let n = code.num_qubits();
    let num_syndromes = code.num_syndromes();

    let mut records: Vec<SyndromeRecord> = (0..num_syndromes)
        .map(|i| SyndromeRecord {
            syndrome: Syndrome::new(i as u64, g),
            representative: None,
            weight: None,
            ambiguous: false,
        })
        .collect();
    let mut ties = Vec::new();
    let mut assigned = 0usize;

    records[0].representative = Some(PauliOperator::identity(n));
    records[0].weight = Some(0);
    assigned += 1;

    let active_qubits: Vec<usize> = (0..n).filter(|q| !letters[*q].is_empty()).collect();

    'levels: for w in 1..=max_weight {
        if w > active_qubits.len() {
            break;
        }
        // combinations() yields qubit supports in lexicographic order; the
        // letter odometer below walks X<Y<Z fastest on the last qubit, so
        // candidates appear in (qubit sequence, letter) lexicographic order
        // within each weight level.
        for support in active_qubits.iter().copied().combinations(w) {
            let mut choice = vec![0usize; w];
            loop {
                let mut op = PauliOperator::identity(n);
                for (slot, &q) in support.iter().enumerate() {
                    op.set(q, letters[q][choice[slot]]);
                }
                if op.weight() == w {
                    let s = code.syndrome(&op);
                    let rec = &mut records[s.as_index()];
                    match rec.weight {
                        None => {
                            rec.representative = Some(op);
                            rec.weight = Some(w);
                            assigned += 1;
                        }
                        Some(prev) if prev == w => {
                            let kept = rec.representative.clone().unwrap();
                            let equivalent = membership.contains(&kept.multiply(&op));
                            if !equivalent {
                                rec.ambiguous = true;
                            }
                            ties.push(TieRecord {
                                syndrome: s,
                                kept,
                                discarded: op,
                                stabilizer_equivalent: equivalent,
                            });
                        }
                        Some(_) => {}
                    }
                }
                // odometer increment
                let mut slot = w;
                loop {
                    if slot == 0 {
                        break;
                    }
                    slot -= 1;
                    choice[slot] += 1;
                    if choice[slot] < letters[support[slot]].len() {
                        break;
                    }
                    choice[slot] = 0;
                    if slot == 0 {
                        // odometer wrapped: support done
                        break;
                    }
                }
                if choice.iter().all(|c| *c == 0) {
                    break;
                }
            }
        }
        if assigned == num_syndromes && w < max_weight {
            // complete level already processed; deeper levels cannot change
            // minimal representatives or same-weight ties
            break 'levels;
        }
    }

    // Transition classes: from each correctable syndrome, per elementary
    // error, exact recovery of the concatenated product decides the class.
    let error_syndromes: Vec<Syndrome> = (0..model.len())
        .map(|j| code.syndrome(&model.operator(j, n)))
        .collect();
    let mut classes = vec![Vec::new(); num_syndromes];
    for s in 0..num_syndromes {
        let Some(rep) = records[s].representative.clone() else {
            continue;
        };
        let mut row = Vec::with_capacity(model.len());
        for j in 0..model.len() {
            let product = model.operator(j, n).multiply(&rep);
            let target = records[s].syndrome.xor(&error_syndromes[j]);
            let class = match &records[target.as_index()].representative {
                Some(target_rep) if membership.contains(&target_rep.multiply(&product)) => {
                    TransitionClass::Correctable
                }
                _ => TransitionClass::Uncorrectable,
            };
            row.push(class);
        }
        classes[s] = row;
    }

    Ok(CorrectabilityTable {
        records,
        classes,
        ties,
        error_syndromes,
        max_weight,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{bit_flip_code, five_qubit_code, steane_code, ErrorModel};

    fn xz_model(code: &StabilizerCode) -> ErrorModel {
        ErrorModel::per_qubit(code, &[Pauli::X, Pauli::Z]).unwrap()
    }

    #[test]
    fn steane_all_64_syndromes_within_weight_two() {
        let code = steane_code();
        let table = classify(&code, &xz_model(&code), 2).unwrap();
        assert_eq!(table.num_correctable(), 64);
        for rec in table.records() {
            assert!(rec.weight.unwrap() <= 2, "syndrome {}", rec.syndrome);
        }
    }

    #[test]
    fn steane_all_elementary_errors_correctable() {
        let code = steane_code();
        let model = xz_model(&code);
        let table = classify(&code, &model, 2).unwrap();
        let zero = Syndrome::zero(6);
        let correctable = (0..model.len())
            .filter(|&j| table.transition_class(&zero, j) == TransitionClass::Correctable)
            .count();
        assert_eq!(correctable, 14);
    }

    #[test]
    fn steane_has_logged_weight_two_ties() {
        let code = steane_code();
        let table = classify(&code, &xz_model(&code), 2).unwrap();
        assert!(!table.ties().is_empty());
        // the inequivalent ones surface as ambiguity flags, not errors
        assert!(table
            .ties()
            .iter()
            .any(|t| !t.stabilizer_equivalent));
        for tie in table.ties().iter().filter(|t| !t.stabilizer_equivalent) {
            assert!(table.record(&tie.syndrome).ambiguous);
        }
    }

    #[test]
    fn five_qubit_weight_one_covers_all_nonzero_syndromes() {
        let code = five_qubit_code();
        let model = ErrorModel::per_qubit(&code, &[Pauli::X, Pauli::Y, Pauli::Z]).unwrap();
        let table = classify(&code, &model, 1).unwrap();
        assert_eq!(table.num_correctable(), 16);
        let weight_one = table
            .records()
            .iter()
            .filter(|r| r.weight == Some(1))
            .count();
        assert_eq!(weight_one, 15);
        for rec in table.records() {
            assert!(!rec.ambiguous);
        }
    }

    #[test]
    fn bit_flip_x1x2_is_uncorrectable() {
        let code = bit_flip_code();
        let model = ErrorModel::per_qubit(&code, &[Pauli::X]).unwrap();
        let table = classify(&code, &model, 2).unwrap();

        // decoder picks the weight-1 X3 for syndrome 01
        let x3_syndrome = code.syndrome(&PauliOperator::single(3, 2, Pauli::X));
        let rec = table.record(&x3_syndrome);
        assert_eq!(rec.weight, Some(1));
        assert_eq!(
            rec.representative.as_ref().unwrap().to_string(),
            "IIX"
        );

        // from nu(X1), applying X2 builds X1X2 -> shares 01 with X3 -> leaks
        let x1_syndrome = code.syndrome(&PauliOperator::single(3, 0, Pauli::X));
        assert_eq!(
            table.transition_class(&x1_syndrome, 1),
            TransitionClass::Uncorrectable
        );
        // returning via X1 itself stays correctable
        assert_eq!(
            table.transition_class(&x1_syndrome, 0),
            TransitionClass::Correctable
        );
        // all four syndromes are reached by weight<=1 errors
        assert_eq!(table.num_correctable(), 4);
    }

    #[test]
    fn decoder_times_representative_is_stabilizer() {
        let code = steane_code();
        let table = classify(&code, &xz_model(&code), 2).unwrap();
        let membership = MembershipBasis::new(&code);
        for rec in table.records() {
            let rep = rec.representative.as_ref().unwrap();
            // decoder(nu) is rep(nu) itself: exact recovery means the
            // product of correction and accumulated error is a stabilizer
            assert!(membership.contains(&rep.multiply(rep)));
        }
    }

    #[test]
    fn transition_class_symmetry_between_correctable_pairs() {
        let code = steane_code();
        let model = xz_model(&code);
        let table = classify(&code, &model, 2).unwrap();
        for rec in table.records() {
            for j in 0..model.len() {
                if table.transition_class(&rec.syndrome, j) == TransitionClass::Correctable {
                    let target = rec.syndrome.xor(&table.error_syndromes()[j]);
                    assert_eq!(
                        table.transition_class(&target, j),
                        TransitionClass::Correctable
                    );
                }
            }
        }
    }

    #[test]
    fn steane_x_only_model_leaves_z_sector_unreachable() {
        let code = steane_code();
        let model = ErrorModel::per_qubit(&code, &[Pauli::X]).unwrap();
        let table = classify(&code, &model, 7).unwrap();
        assert_eq!(table.num_correctable(), 8);
    }

    #[test]
    fn generator_cap_enforced() {
        use crate::pauli::PauliOperator;
        // 21 independent single-Z generators on 22 qubits
        let gens: Vec<PauliOperator> = (0..21)
            .map(|q| PauliOperator::single(22, q, Pauli::Z))
            .collect();
        let code = StabilizerCode::new("wide", gens, None).unwrap();
        let model = ErrorModel::per_qubit(&code, &[Pauli::X]);
        // X on qubit 21 is undetectable for this code, so restrict to qubit 0
        let model = match model {
            Ok(m) => m,
            Err(_) => ErrorModel::new(
                &code,
                vec![crate::code::ElementaryError {
                    qubit: 0,
                    pauli: Pauli::X,
                }],
            )
            .unwrap(),
        };
        assert!(matches!(
            classify(&code, &model, 1),
            Err(ClassifyError::TooManyGenerators(21))
        ));
    }
}
