//! Classical side of superdense coding: dibits, the dibit/Pauli convention,
//! message chunking and secret-order permutations.
//!
//! The convention `00 → I`, `11 → σz`, `01 → σx`, `10 → iσy` is a group
//! isomorphism from the Pauli group modulo phase onto `Z₂ × Z₂`, so applying
//! two encodings in sequence corresponds to XOR of their dibits.

use alloc::vec::Vec;
use core::fmt;
use core::ops::BitXor;

use rand::Rng;

use crate::qsim::{BellOutcome, PauliLabel};

/// Two classical bits, the payload of one EPR pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "u8", into = "u8"))]
pub struct Dibit(u8);

impl Dibit {
    pub const ZERO: Dibit = Dibit(0b00);
    pub const ALL: [Dibit; 4] = [Dibit(0b00), Dibit(0b01), Dibit(0b10), Dibit(0b11)];

    pub fn new(value: u8) -> Option<Dibit> {
        (value < 4).then_some(Dibit(value))
    }

    /// `high` is the first transmitted bit.
    pub fn from_bits(high: bool, low: bool) -> Dibit {
        Dibit((u8::from(high) << 1) | u8::from(low))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn high(self) -> bool {
        self.0 & 0b10 != 0
    }

    pub fn low(self) -> bool {
        self.0 & 0b01 != 0
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Dibit {
        Dibit(rng.random_range(0..4))
    }
}

impl BitXor for Dibit {
    type Output = Dibit;

    fn bitxor(self, rhs: Dibit) -> Dibit {
        Dibit(self.0 ^ rhs.0)
    }
}

impl fmt::Display for Dibit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02b}", self.0)
    }
}

impl From<Dibit> for u8 {
    fn from(d: Dibit) -> u8 {
        d.0
    }
}

impl TryFrom<u8> for Dibit {
    type Error = CodingError;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Dibit::new(value).ok_or(CodingError::DibitRange(value))
    }
}

pub fn dibit_to_pauli(d: Dibit) -> PauliLabel {
    match d.0 {
        0b00 => PauliLabel::I,
        0b11 => PauliLabel::Z,
        0b01 => PauliLabel::X,
        _ => PauliLabel::Y,
    }
}

pub fn pauli_to_dibit(p: PauliLabel) -> Dibit {
    match p {
        PauliLabel::I => Dibit(0b00),
        PauliLabel::Z => Dibit(0b11),
        PauliLabel::X => Dibit(0b01),
        PauliLabel::Y => Dibit(0b10),
    }
}

/// Dibit whose encoding turns a singlet into `outcome`.
pub fn decode_outcome(outcome: BellOutcome) -> Dibit {
    match outcome {
        BellOutcome::PsiMinus => Dibit(0b00),
        BellOutcome::PsiPlus => Dibit(0b11),
        BellOutcome::PhiMinus => Dibit(0b01),
        BellOutcome::PhiPlus => Dibit(0b10),
    }
}

/// Inverse of [`decode_outcome`].
pub fn encode_outcome(d: Dibit) -> BellOutcome {
    crate::qsim::bell_transform_of(dibit_to_pauli(d))
}

/// Net dibit of two successive encodings on the same particle.
pub fn compose_dibits(a: Dibit, b: Dibit) -> Dibit {
    a ^ b
}

/// An ordered bit string.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Message {
    bits: Vec<bool>,
}

impl Message {
    pub fn new(bits: Vec<bool>) -> Self {
        Message { bits }
    }

    pub fn empty() -> Self {
        Message::default()
    }

    /// Bytes read most significant bit first.
    pub fn from_bytes(bytes: &[u8]) -> Self {
        let bits = bytes
            .iter()
            .flat_map(|b| (0..8).rev().map(move |i| b >> i & 1 == 1))
            .collect();
        Message { bits }
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Message {
            bits: (0..len).map(|_| rng.random_bool(0.5)).collect(),
        }
    }

    /// Rebuilds a message of `len` bits from received dibits, dropping the
    /// padding bit and any unused trailing dibits.
    pub fn from_dibits(dibits: &[Dibit], len: usize) -> Result<Self, CodingError> {
        if len > 2 * dibits.len() {
            return Err(CodingError::LengthMismatch {
                expected: len.div_ceil(2),
                actual: dibits.len(),
            });
        }
        let bits = dibits
            .iter()
            .flat_map(|d| [d.high(), d.low()])
            .take(len)
            .collect();
        Ok(Message { bits })
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Number of dibits needed to carry the message.
    pub fn dibit_len(&self) -> usize {
        self.bits.len().div_ceil(2)
    }
}

/// Pads to even length with a trailing 0 and splits into dibits, first bit
/// most significant.
pub fn chunk_message(m: &Message) -> Vec<Dibit> {
    m.bits
        .chunks(2)
        .map(|pair| Dibit::from_bits(pair[0], pair.get(1).copied().unwrap_or(false)))
        .collect()
}

/// A bijection on `0..n`, read as "output position `j` takes input
/// `mapping[j]`".
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            mapping: (0..n).collect(),
        }
    }

    pub fn from_mapping(mapping: Vec<usize>) -> Result<Self, CodingError> {
        let n = mapping.len();
        let mut seen = alloc::vec![false; n];
        for &m in &mapping {
            if m >= n || core::mem::replace(&mut seen[m], true) {
                return Err(CodingError::NotBijective);
            }
        }
        Ok(Permutation { mapping })
    }

    /// Uniform draw by Fisher–Yates.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut mapping: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            mapping.swap(i, j);
        }
        Permutation { mapping }
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    /// Input index feeding output position `j`.
    pub fn get(&self, j: usize) -> usize {
        self.mapping[j]
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = alloc::vec![0; self.mapping.len()];
        for (j, &m) in self.mapping.iter().enumerate() {
            inv[m] = j;
        }
        Permutation { mapping: inv }
    }

    /// Function composition: `(self ∘ other)(j) = self(other(j))`.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation, CodingError> {
        if self.len() != other.len() {
            return Err(CodingError::LengthMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(Permutation {
            mapping: other.mapping.iter().map(|&j| self.mapping[j]).collect(),
        })
    }

    pub fn is_identity(&self) -> bool {
        self.mapping.iter().enumerate().all(|(j, &m)| j == m)
    }

    /// `out[j] = seq[mapping[j]]`.
    pub fn apply<T: Clone>(&self, seq: &[T]) -> Result<Vec<T>, CodingError> {
        if seq.len() != self.len() {
            return Err(CodingError::LengthMismatch {
                expected: self.len(),
                actual: seq.len(),
            });
        }
        Ok(self.mapping.iter().map(|&m| seq[m].clone()).collect())
    }
}

pub fn random_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Permutation {
    Permutation::random(n, rng)
}

pub fn apply_permutation<T: Clone>(perm: &Permutation, seq: &[T]) -> Result<Vec<T>, CodingError> {
    perm.apply(seq)
}

pub fn invert_permutation(perm: &Permutation) -> Permutation {
    perm.inverse()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodingError {
    #[error("dibit value {0} is out of range")]
    DibitRange(u8),
    #[error("mapping is not a bijection")]
    NotBijective,
    #[error("expected {expected} elements, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn d(v: u8) -> Dibit {
        Dibit::new(v).unwrap()
    }

    #[test]
    fn encoding_convention() {
        assert_eq!(dibit_to_pauli(d(0b00)), PauliLabel::I);
        assert_eq!(dibit_to_pauli(d(0b11)), PauliLabel::Z);
        assert_eq!(dibit_to_pauli(d(0b01)), PauliLabel::X);
        assert_eq!(dibit_to_pauli(d(0b10)), PauliLabel::Y);
        assert_eq!(pauli_to_dibit(PauliLabel::I), d(0b00));
        assert_eq!(pauli_to_dibit(PauliLabel::X), d(0b01));
        for x in Dibit::ALL {
            assert_eq!(pauli_to_dibit(dibit_to_pauli(x)), x);
            assert_eq!(
                decode_outcome(crate::qsim::bell_transform_of(dibit_to_pauli(x))),
                x
            );
            assert_eq!(decode_outcome(encode_outcome(x)), x);
        }
    }

    #[test]
    fn decode_table() {
        assert_eq!(decode_outcome(BellOutcome::PsiMinus), d(0b00));
        assert_eq!(decode_outcome(BellOutcome::PsiPlus), d(0b11));
        assert_eq!(decode_outcome(BellOutcome::PhiMinus), d(0b01));
        assert_eq!(decode_outcome(BellOutcome::PhiPlus), d(0b10));
    }

    #[test]
    fn composition_is_xor() {
        assert_eq!(compose_dibits(d(0b11), d(0b01)), d(0b10));
        for a in Dibit::ALL {
            assert_eq!(compose_dibits(a, a), Dibit::ZERO);
            assert_eq!(compose_dibits(Dibit::ZERO, a), a);
        }
        assert_eq!(Dibit::new(4), None);
        assert_eq!(Dibit::try_from(7u8), Err(CodingError::DibitRange(7)));
    }

    #[test]
    fn chunking() {
        // 01 00 10 11 01
        let bits = [
            false, true, false, false, true, false, true, true, false, true,
        ];
        let dibits = chunk_message(&Message::new(bits.to_vec()));
        assert_eq!(dibits, vec![d(0b01), d(0b00), d(0b10), d(0b11), d(0b01)]);
        assert!(chunk_message(&Message::empty()).is_empty());
        assert_eq!(chunk_message(&Message::new(vec![true])), vec![d(0b10)]);
    }

    #[test]
    fn reassembly_strips_padding() {
        let m = Message::new(vec![true, false, true]);
        let dibits = chunk_message(&m);
        assert_eq!(Message::from_dibits(&dibits, 3).unwrap(), m);
        let mut longer = dibits.clone();
        longer.push(d(0b11));
        assert_eq!(Message::from_dibits(&longer, 3).unwrap(), m);
        assert!(Message::from_dibits(&dibits, 5).is_err());
    }

    #[test]
    fn bytes_are_msb_first() {
        let m = Message::from_bytes(&[0xA0]);
        assert_eq!(
            m.bits(),
            &[true, false, true, false, false, false, false, false]
        );
    }

    #[test]
    fn permutation_basics() {
        assert!(Permutation::random(1, &mut ChaCha8Rng::seed_from_u64(1)).is_identity());
        assert!(Permutation::random(0, &mut ChaCha8Rng::seed_from_u64(1)).is_empty());
        let id = Permutation::identity(3);
        assert_eq!(id.apply(&['a', 'b', 'c']).unwrap(), vec!['a', 'b', 'c']);
        let swap = Permutation::from_mapping(vec![1, 0]).unwrap();
        assert_eq!(swap.apply(&['a', 'b']).unwrap(), vec!['b', 'a']);
        assert_eq!(
            swap.apply(&['a']),
            Err(CodingError::LengthMismatch {
                expected: 2,
                actual: 1
            })
        );
        assert_eq!(
            Permutation::from_mapping(vec![0, 0]),
            Err(CodingError::NotBijective)
        );
        assert_eq!(
            Permutation::from_mapping(vec![0, 2]),
            Err(CodingError::NotBijective)
        );
    }

    #[test]
    fn permutations_of_three_are_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 10_000;
        let mut counts = std::collections::BTreeMap::new();
        for _ in 0..draws {
            *counts
                .entry(Permutation::random(3, &mut rng).mapping)
                .or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 6);
        for &c in counts.values() {
            assert!(
                (c as f64 / draws as f64 - 1.0 / 6.0).abs() < 0.02,
                "{counts:?}"
            );
        }
    }

    #[test]
    fn permutations_of_four_pass_chi_square() {
        // 24 cells, 23 degrees of freedom; the p = 0.001 critical value is 49.73.
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let draws = 100_000;
        let mut counts = std::collections::BTreeMap::new();
        for _ in 0..draws {
            *counts
                .entry(Permutation::random(4, &mut rng).mapping)
                .or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 24);
        let expected = draws as f64 / 24.0;
        let chi2: f64 = counts
            .values()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 49.73, "chi2 = {chi2}");
    }

    proptest! {
        #[test]
        fn group_laws(n in 0usize..=64, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = Permutation::random(n, &mut rng);
            let inv = p.inverse();
            prop_assert!(p.compose(&inv).unwrap().is_identity());
            prop_assert!(inv.compose(&p).unwrap().is_identity());
            let seq: Vec<usize> = (0..n).map(|i| i * 7 + 3).collect();
            let there = p.apply(&seq).unwrap();
            prop_assert_eq!(inv.apply(&there).unwrap(), seq);
        }

        #[test]
        fn chunk_roundtrip(bits in proptest::collection::vec(any::<bool>(), 0..200)) {
            let m = Message::new(bits);
            let dibits = chunk_message(&m);
            prop_assert_eq!(dibits.len(), m.dibit_len());
            prop_assert_eq!(Message::from_dibits(&dibits, m.len()).unwrap(), m);
        }
    }
}
