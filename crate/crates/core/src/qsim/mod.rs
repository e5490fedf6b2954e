//! Pure-state simulation of EPR pairs and the few extra qubits an
//! eavesdropper attaches to them.
//!
//! Amplitudes are stored densely, qubit 0 being the most significant bit of
//! the basis index, so a two-qubit vector is ordered `|00⟩, |01⟩, |10⟩, |11⟩`.
//! Global phase is never tracked: Bell outcomes and fidelities are defined
//! on rays.

mod registry;
mod state;

pub use registry::Registry;
pub use state::{QState, MAX_QUBITS, NORM_TOLERANCE};

use core::f64::consts::FRAC_1_SQRT_2;
use core::fmt;

use num_complex::Complex64;

/// Opaque token naming one physical particle for the lifetime of a trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParticleHandle(u32);

impl ParticleHandle {
    pub fn id(self) -> u32 {
        self.0
    }

    pub(crate) fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ParticleHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "particle#{}", self.0)
    }
}

/// The four local encoding operations `U0 = I`, `U1 = σz`, `U2 = σx` and
/// `U3 = iσy`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PauliLabel {
    I,
    Z,
    X,
    /// `iσy = |0⟩⟨1| − |1⟩⟨0|`, a real matrix.
    Y,
}

impl PauliLabel {
    pub const ALL: [PauliLabel; 4] = [PauliLabel::I, PauliLabel::Z, PauliLabel::X, PauliLabel::Y];

    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let o = Complex64::new(0.0, 0.0);
        let p = Complex64::new(1.0, 0.0);
        let m = Complex64::new(-1.0, 0.0);
        match self {
            PauliLabel::I => [[p, o], [o, p]],
            PauliLabel::Z => [[p, o], [o, m]],
            PauliLabel::X => [[o, p], [p, o]],
            PauliLabel::Y => [[o, p], [m, o]],
        }
    }
}

/// Outcome of a projective measurement in the Bell basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BellOutcome {
    /// `(|01⟩ − |10⟩)/√2`, the singlet.
    PsiMinus,
    /// `(|01⟩ + |10⟩)/√2`
    PsiPlus,
    /// `(|00⟩ − |11⟩)/√2`
    PhiMinus,
    /// `(|00⟩ + |11⟩)/√2`
    PhiPlus,
}

impl BellOutcome {
    pub const ALL: [BellOutcome; 4] = [
        BellOutcome::PsiMinus,
        BellOutcome::PsiPlus,
        BellOutcome::PhiMinus,
        BellOutcome::PhiPlus,
    ];

    /// Position of this outcome within [`BellOutcome::ALL`].
    pub fn index(self) -> usize {
        match self {
            BellOutcome::PsiMinus => 0,
            BellOutcome::PsiPlus => 1,
            BellOutcome::PhiMinus => 2,
            BellOutcome::PhiPlus => 3,
        }
    }

    /// Two-qubit amplitudes in `|00⟩, |01⟩, |10⟩, |11⟩` order.
    pub fn amplitudes(self) -> [Complex64; 4] {
        let z = Complex64::new(0.0, 0.0);
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        match self {
            BellOutcome::PsiMinus => [z, h, -h, z],
            BellOutcome::PsiPlus => [z, h, h, z],
            BellOutcome::PhiMinus => [h, z, z, -h],
            BellOutcome::PhiPlus => [h, z, z, h],
        }
    }

    /// True for the anti-correlated `Ψ±` pair, false for `Φ±`.
    pub fn is_psi(self) -> bool {
        matches!(self, BellOutcome::PsiMinus | BellOutcome::PsiPlus)
    }
}

/// Bell state reached by applying `op` to one half of a singlet.
pub fn bell_transform_of(op: PauliLabel) -> BellOutcome {
    match op {
        PauliLabel::I => BellOutcome::PsiMinus,
        PauliLabel::Z => BellOutcome::PsiPlus,
        PauliLabel::X => BellOutcome::PhiMinus,
        PauliLabel::Y => BellOutcome::PhiPlus,
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QsimError {
    #[error("{0} is not bound in the registry")]
    UnknownHandle(ParticleHandle),
    #[error("two-particle operation given {0} twice")]
    SameParticle(ParticleHandle),
    #[error("joint state of {requested} qubits exceeds the {MAX_QUBITS}-qubit budget")]
    QubitBudget { requested: usize },
    #[error("amplitude vector of length {0} is not a 1..=4 qubit state")]
    InvalidDimension(usize),
    #[error("state norm {0} differs from 1")]
    NotNormalized(f64),
    #[error("registry audit failed: {0}")]
    Corrupt(&'static str),
}
