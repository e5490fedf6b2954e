//! Simulation core for quantum secure direct communication protocols whose
//! security rests on a secret transmission order of EPR particles.
//!
//! The crate is `no_std` and needs only `alloc`. Every stochastic operation
//! takes an explicit random generator, so a seeded generator reproduces a
//! whole protocol run draw for draw.
//!
//! Layout:
//!
//! - [`qsim`]: pure-state simulator of up to four entangled qubits plus the
//!   particle registry.
//! - [`coding`]: dibits, superdense-coding tables, messages and permutations.
//! - [`channel`]: noisy quantum channel with an interception hook and the
//!   public classical log.
//! - [`eve`]: eavesdropping strategies.
//! - [`protocols`]: round-trip, one-way and dialogue state machines.

#![no_std]
#![deny(missing_debug_implementations, rust_2018_idioms)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod channel;
pub mod coding;
pub mod eve;
pub mod protocols;
pub mod qsim;

pub use channel::{
    Announcement, ClassicalLog, Direction, NoiseModel, Party, Payload, TransitBatch,
};
pub use coding::{Dibit, Message, Permutation};
pub use eve::{AttackKind, Eve};
pub use protocols::{ProtocolConfig, ProtocolError, ProtocolKind, RunOutcome};
pub use qsim::{BellOutcome, ParticleHandle, PauliLabel, QState, QsimError, Registry};
