use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::{BellOutcome, PauliLabel, QsimError};

/// Largest joint state the simulator will build: one EPR pair plus two
/// ancillas.
pub const MAX_QUBITS: usize = 4;

/// Tolerance on `Σ|a|² = 1`.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Normalized amplitude vector over 1 to [`MAX_QUBITS`] qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct QState {
    amps: Vec<Complex64>,
}

impl QState {
    /// Computational basis state `|index⟩` on `num_qubits` qubits.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self, QsimError> {
        let dim = dimension(num_qubits)?;
        if index >= dim {
            return Err(QsimError::InvalidDimension(index));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(QState { amps })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self, QsimError> {
        let len = amps.len();
        if !len.is_power_of_two() || !(2..=1 << MAX_QUBITS).contains(&len) {
            return Err(QsimError::InvalidDimension(len));
        }
        let state = QState { amps };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(QsimError::NotNormalized(norm));
        }
        Ok(state)
    }

    pub fn bell(outcome: BellOutcome) -> Self {
        QState {
            amps: outcome.amplitudes().to_vec(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `|⟨self|other⟩|²`; both states must have the same size.
    pub fn fidelity(&self, other: &QState) -> f64 {
        assert_eq!(
            self.amps.len(),
            other.amps.len(),
            "fidelity of mismatched states"
        );
        let ip: Complex64 = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum();
        ip.norm_sqr()
    }

    fn mask(&self, qubit: usize) -> usize {
        debug_assert!(qubit < self.num_qubits());
        1 << (self.num_qubits() - 1 - qubit)
    }

    pub fn apply_single(&mut self, qubit: usize, m: &[[Complex64; 2]; 2]) {
        let mask = self.mask(qubit);
        for idx in 0..self.amps.len() {
            if idx & mask != 0 {
                continue;
            }
            let a0 = self.amps[idx];
            let a1 = self.amps[idx | mask];
            self.amps[idx] = m[0][0] * a0 + m[0][1] * a1;
            self.amps[idx | mask] = m[1][0] * a0 + m[1][1] * a1;
        }
    }

    pub fn apply_pauli(&mut self, qubit: usize, op: PauliLabel) {
        if op != PauliLabel::I {
            self.apply_single(qubit, &op.matrix());
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        assert_ne!(control, target, "CNOT control equals target");
        let cm = self.mask(control);
        let tm = self.mask(target);
        for idx in 0..self.amps.len() {
            if idx & cm != 0 && idx & tm == 0 {
                self.amps.swap(idx, idx | tm);
            }
        }
    }

    /// Joint state with `self`'s qubits first.
    pub fn tensor(&self, other: &QState) -> Result<QState, QsimError> {
        let n = self.num_qubits() + other.num_qubits();
        if n > MAX_QUBITS {
            return Err(QsimError::QubitBudget { requested: n });
        }
        let mut amps = Vec::with_capacity(1 << n);
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(QState { amps })
    }

    /// Applies `⟨bra|` to the `targets` qubits (in the given order) and
    /// returns the unnormalized residual over the remaining qubits in
    /// ascending order. With no remaining qubits the result has length 1.
    pub(crate) fn contract(&self, targets: &[usize], bra: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(bra.len(), 1 << targets.len());
        let n = self.num_qubits();
        let rest: Vec<usize> = (0..n).filter(|q| !targets.contains(q)).collect();
        let mut out = vec![Complex64::new(0.0, 0.0); 1 << rest.len()];
        for (idx, amp) in self.amps.iter().enumerate() {
            let t = targets.iter().fold(0, |acc, &q| {
                (acc << 1) | usize::from(idx & self.mask(q) != 0)
            });
            let r = rest.iter().fold(0, |acc, &q| {
                (acc << 1) | usize::from(idx & self.mask(q) != 0)
            });
            out[r] += bra[t].conj() * amp;
        }
        out
    }

    /// Born probabilities of the four Bell outcomes on qubits `(a, b)`, in
    /// [`BellOutcome::ALL`] order.
    pub fn bell_probabilities(&self, a: usize, b: usize) -> [f64; 4] {
        let mut probs = [0.0; 4];
        for outcome in BellOutcome::ALL {
            probs[outcome.index()] = self
                .contract(&[a, b], &outcome.amplitudes())
                .iter()
                .map(|c| c.norm_sqr())
                .sum();
        }
        probs
    }

    /// Probability that qubit `q` reads 1 in the Z basis.
    pub fn prob_one(&self, qubit: usize) -> f64 {
        let mask = self.mask(qubit);
        self.amps
            .iter()
            .enumerate()
            .filter(|(idx, _)| idx & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }
}

fn dimension(num_qubits: usize) -> Result<usize, QsimError> {
    if num_qubits == 0 || num_qubits > MAX_QUBITS {
        return Err(QsimError::InvalidDimension(num_qubits));
    }
    Ok(1 << num_qubits)
}

/// Scales `amps` to unit norm; `norm_sqr` is its current squared norm.
pub(crate) fn renormalize(amps: &mut [Complex64], norm_sqr: f64) {
    let scale = 1.0 / libm::sqrt(norm_sqr);
    for a in amps {
        *a *= scale;
    }
}
