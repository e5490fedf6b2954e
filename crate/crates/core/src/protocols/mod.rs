//! Protocol state machines: round-trip and one-way direct communication,
//! and the two-way dialogue.
//!
//! Parties exchange information only through the quantum channel and the
//! [`ClassicalLog`]. Each run owns its registry, log and eavesdropper, and
//! draws every random choice from the generator it is given.

mod dialogue;
mod one_way;
mod round_trip;

pub use dialogue::{run_dialogue, DialoguePhase};
pub use one_way::{run_one_way, OneWayPhase};
pub use round_trip::{run_round_trip, RoundTripPhase};

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;

use crate::channel::{
    transmit, ChannelError, ClassicalLog, Direction, MatchEntry, NoiseModel, OrderEntry, Party,
    Payload, TransitBatch,
};
use crate::coding::{decode_outcome, CodingError, Dibit, Message, Permutation};
use crate::eve::{AttackKind, Eve, Layout};
use crate::qsim::{BellOutcome, ParticleHandle, QsimError, Registry};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ProtocolKind {
    RoundTrip,
    OneWay,
    Dialogue,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 3] = [
        ProtocolKind::RoundTrip,
        ProtocolKind::OneWay,
        ProtocolKind::Dialogue,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::RoundTrip => "round_trip",
            ProtocolKind::OneWay => "one_way",
            ProtocolKind::Dialogue => "dialogue",
        }
    }

    /// Whether `attack` has a meaningful instantiation on this protocol's
    /// transits.
    pub fn supports(self, attack: AttackKind) -> bool {
        match attack {
            AttackKind::None | AttackKind::MeasureResendZ | AttackKind::EntangleMeasure => true,
            AttackKind::InterceptResendEpr => self != ProtocolKind::OneWay,
            AttackKind::InterceptBellGuess => self == ProtocolKind::OneWay,
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProtocolKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or(ProtocolError::UnknownProtocol)
    }
}

/// Parameters of one protocol run.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProtocolConfig {
    /// Number of EPR pairs `N`.
    pub n_pairs: usize,
    /// Fraction of pairs sacrificed for the security check.
    pub check_fraction: f64,
    /// Largest checking error rate that still lets the run proceed.
    pub abort_threshold: f64,
    pub noise: NoiseModel,
    pub attack: AttackKind,
    /// Campaign seed; runs themselves draw from the generator they are given.
    pub seed: u64,
    /// Secret reordering of transmitted particles. Disabling it is only
    /// useful as a negative control.
    pub permute: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            n_pairs: 64,
            check_fraction: 0.25,
            abort_threshold: 0.0,
            noise: NoiseModel::None,
            attack: AttackKind::None,
            seed: 0,
            permute: true,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self, protocol: ProtocolKind) -> Result<(), ProtocolError> {
        checking_set_size(self.n_pairs, self.check_fraction)?;
        if !(0.0..=1.0).contains(&self.abort_threshold) {
            return Err(ProtocolError::Threshold(self.abort_threshold));
        }
        self.noise.validate()?;
        if !protocol.supports(self.attack) {
            return Err(ProtocolError::UnsupportedAttack {
                attack: self.attack,
                protocol,
            });
        }
        Ok(())
    }

    pub fn checking_set_size(&self) -> Result<usize, ProtocolError> {
        checking_set_size(self.n_pairs, self.check_fraction)
    }

    /// Number of message-set pairs, each carrying one dibit.
    pub fn message_slots(&self) -> Result<usize, ProtocolError> {
        Ok(self.n_pairs - self.checking_set_size()?)
    }

    /// Longest message, in bits, one run can carry.
    pub fn capacity_bits(&self) -> Result<usize, ProtocolError> {
        Ok(2 * self.message_slots()?)
    }
}

/// `max(1, round(fraction · n))`, rounding half up and leaving at least one
/// message pair.
pub fn checking_set_size(n: usize, fraction: f64) -> Result<usize, ProtocolError> {
    if n < 2 {
        return Err(ProtocolError::TooFewPairs(n));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(ProtocolError::CheckFraction(fraction));
    }
    let rounded = libm::floor(fraction * n as f64 + 0.5) as usize;
    Ok(rounded.clamp(1, n - 1))
}

/// Random split of `0..n` into sorted checking and message index sets.
pub fn select_checking_set<R: Rng + ?Sized>(
    n: usize,
    fraction: f64,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>), ProtocolError> {
    let size = checking_set_size(n, fraction)?;
    let shuffled = Permutation::random(n, rng);
    let mut checking = shuffled.mapping()[..size].to_vec();
    let mut message = shuffled.mapping()[size..].to_vec();
    checking.sort_unstable();
    message.sort_unstable();
    Ok((checking, message))
}

/// Result of comparing announced checking dibits with the true ones.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecurityVerdict {
    pub checked: usize,
    pub errors: usize,
    pub error_rate: f64,
    pub abort: bool,
}

/// Proof that a security check passed. Message-set order can only be
/// disclosed by presenting one.
#[derive(Debug)]
pub struct Clearance(());

impl SecurityVerdict {
    pub fn clearance(&self) -> Option<Clearance> {
        (!self.abort).then_some(Clearance(()))
    }
}

/// Error rate over the checking set; aborts when it exceeds `threshold`.
pub fn check_security(
    expected: &[Dibit],
    observed: &[Dibit],
    threshold: f64,
) -> Result<SecurityVerdict, ProtocolError> {
    if expected.len() != observed.len() || expected.is_empty() {
        return Err(ProtocolError::CheckLength {
            expected: expected.len(),
            observed: observed.len(),
        });
    }
    let errors = expected
        .iter()
        .zip(observed)
        .filter(|(a, b)| a != b)
        .count();
    let error_rate = errors as f64 / expected.len() as f64;
    Ok(SecurityVerdict {
        checked: expected.len(),
        errors,
        error_rate,
        abort: error_rate > threshold,
    })
}

pub(crate) fn disclose_message_order(
    log: &mut ClassicalLog,
    sender: Party,
    entries: Vec<OrderEntry>,
    _: &Clearance,
) {
    log.announce(sender, Payload::MessageOrder { entries });
}

pub(crate) fn disclose_message_matching(
    log: &mut ClassicalLog,
    sender: Party,
    entries: Vec<MatchEntry>,
    _: &Clearance,
) {
    log.announce(sender, Payload::MessageMatching { entries });
}

/// Protocol steps in their fixed order, with a terminal abort state
/// reachable only from the security check.
pub trait Phase: Copy + Eq + fmt::Debug + 'static {
    const ORDER: &'static [Self];
    const SECURITY_CHECK: Self;
    const ABORTED: Self;

    fn name(self) -> &'static str;
}

#[derive(Clone, Debug)]
pub struct PhaseTracker<P: Phase> {
    current: P,
}

impl<P: Phase> Default for PhaseTracker<P> {
    fn default() -> Self {
        PhaseTracker {
            current: P::ORDER[0],
        }
    }
}

impl<P: Phase> PhaseTracker<P> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn current(&self) -> P {
        self.current
    }

    pub fn advance(&mut self, next: P) -> Result<(), ProtocolError> {
        let allowed = if next == P::ABORTED {
            self.current == P::SECURITY_CHECK
        } else {
            let at = P::ORDER.iter().position(|&p| p == self.current);
            at.and_then(|i| P::ORDER.get(i + 1)) == Some(&next)
        };
        if !allowed {
            return Err(ProtocolError::PhaseOrder {
                from: self.current.name(),
                to: next.name(),
            });
        }
        self.current = next;
        Ok(())
    }
}

/// Named per-run statistics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Counters {
    pub pairs_checked: usize,
    pub check_errors: usize,
    pub eve_interceptions: usize,
    /// Dibits of the message Eve targets.
    pub message_dibits: usize,
    /// How many of those Eve guessed right.
    pub eve_correct_dibits: usize,
}

/// One checked pair: the dibit the checker expected and what was reported.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CheckRecord {
    pub expected: Dibit,
    pub observed: Dibit,
}

/// Everything one run produced.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub protocol: ProtocolKind,
    pub aborted: bool,
    pub checking_error_rate: f64,
    /// Message recovered by the receiver; in a dialogue, Bob's copy of
    /// Alice's message. Absent when aborted.
    pub decoded_message: Option<Message>,
    /// Dialogue only: Alice's copy of Bob's message.
    pub decoded_message_peer: Option<Message>,
    pub transcript: ClassicalLog,
    pub counters: Counters,
    pub checks: Vec<CheckRecord>,
    /// Eve's guesses for the targeted message, one per dibit. Empty without
    /// an attack.
    pub eve_guess: Vec<Dibit>,
}

impl RunOutcome {
    pub fn eve_dibit_accuracy(&self) -> Option<f64> {
        (self.counters.message_dibits > 0 && !self.eve_guess.is_empty())
            .then(|| self.counters.eve_correct_dibits as f64 / self.counters.message_dibits as f64)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error("need at least 2 pairs, got {0}")]
    TooFewPairs(usize),
    #[error("check fraction {0} outside (0, 1)")]
    CheckFraction(f64),
    #[error("abort threshold {0} outside [0, 1]")]
    Threshold(f64),
    #[error("attack {attack} does not apply to the {protocol} protocol")]
    UnsupportedAttack {
        attack: AttackKind,
        protocol: ProtocolKind,
    },
    #[error("unknown protocol name")]
    UnknownProtocol,
    #[error("message of {bits} bits exceeds the capacity of {capacity} bits")]
    Capacity { bits: usize, capacity: usize },
    #[error("security check over {expected} expected and {observed} observed dibits")]
    CheckLength { expected: usize, observed: usize },
    #[error("protocol step {to} cannot follow {from}")]
    PhaseOrder {
        from: &'static str,
        to: &'static str,
    },
    #[error("expected announcement `{0}` is missing from the log")]
    MissingAnnouncement(&'static str),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Coding(#[from] CodingError),
}

impl From<QsimError> for ProtocolError {
    fn from(e: QsimError) -> Self {
        ProtocolError::Channel(ChannelError::Qsim(e))
    }
}

/// Runs one session of `protocol`. The round trip carries only
/// `bob_message` and the one-way scheme only `alice_message`.
pub fn run_protocol<R: Rng + ?Sized>(
    protocol: ProtocolKind,
    config: &ProtocolConfig,
    alice_message: &Message,
    bob_message: &Message,
    rng: &mut R,
) -> Result<RunOutcome, ProtocolError> {
    match protocol {
        ProtocolKind::RoundTrip => run_round_trip(config, bob_message, rng),
        ProtocolKind::OneWay => run_one_way(config, alice_message, rng),
        ProtocolKind::Dialogue => run_dialogue(config, alice_message, bob_message, rng),
    }
}

/// Shared per-run machinery.
struct Trial {
    noise: NoiseModel,
    registry: Registry,
    log: ClassicalLog,
    eve: Eve,
}

impl Trial {
    fn new(config: &ProtocolConfig) -> Self {
        Trial {
            noise: config.noise,
            registry: Registry::new(),
            log: ClassicalLog::new(),
            eve: Eve::new(config.attack),
        }
    }

    fn send<R: Rng + ?Sized>(
        &mut self,
        items: Vec<ParticleHandle>,
        direction: Direction,
        sender: Party,
        receiver: Party,
        rng: &mut R,
    ) -> Result<Vec<ParticleHandle>, ProtocolError> {
        let batch = TransitBatch::new(items, direction, sender, receiver)?;
        let out = transmit(batch, &self.noise, &mut self.eve, &mut self.registry, rng)?;
        self.log.announce(
            receiver,
            Payload::Received {
                particles: out.items.len(),
            },
        );
        Ok(out.items)
    }

    fn encode(&mut self, handle: ParticleHandle, d: Dibit) -> Result<(), ProtocolError> {
        self.registry
            .apply_pauli(handle, crate::coding::dibit_to_pauli(d))?;
        Ok(())
    }

    /// Measures `(a, b)` and decodes relative to the known initial state.
    fn measure<R: Rng + ?Sized>(
        &mut self,
        a: ParticleHandle,
        b: ParticleHandle,
        initial: BellOutcome,
        rng: &mut R,
    ) -> Result<Dibit, ProtocolError> {
        let outcome = self.registry.bell_measure(a, b, rng)?;
        Ok(decode_outcome(outcome) ^ decode_outcome(initial))
    }

    /// Lets Eve run deferred measurements and scores her guess of `target`.
    fn score_eve<R: Rng + ?Sized>(
        &mut self,
        layout: Layout,
        target: &[Dibit],
        rng: &mut R,
    ) -> Result<(Vec<Dibit>, usize), ProtocolError> {
        if !self.eve.is_active() {
            return Ok((Vec::new(), 0));
        }
        self.eve.finish(&mut self.registry, rng)?;
        let mut guess = self.eve.guess_message(&self.log, layout, rng);
        guess.truncate(target.len());
        let correct = guess.iter().zip(target).filter(|(g, t)| g == t).count();
        Ok((guess, correct))
    }
}

/// Message dibits followed by random filler up to `slots`.
fn fill_slots<R: Rng + ?Sized>(
    message: &Message,
    slots: usize,
    rng: &mut R,
) -> Result<Vec<Dibit>, ProtocolError> {
    let mut dibits = crate::coding::chunk_message(message);
    if dibits.len() > slots {
        return Err(ProtocolError::Capacity {
            bits: message.len(),
            capacity: 2 * slots,
        });
    }
    while dibits.len() < slots {
        dibits.push(Dibit::random(rng));
    }
    Ok(dibits)
}

fn check_capacity(config: &ProtocolConfig, message: &Message) -> Result<(), ProtocolError> {
    let capacity = config.capacity_bits()?;
    if message.len() > capacity {
        return Err(ProtocolError::Capacity {
            bits: message.len(),
            capacity,
        });
    }
    Ok(())
}

fn random_dibits<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Dibit> {
    (0..n).map(|_| Dibit::random(rng)).collect()
}

fn secret_order<R: Rng + ?Sized>(n: usize, permute: bool, rng: &mut R) -> Permutation {
    if permute {
        Permutation::random(n, rng)
    } else {
        Permutation::identity(n)
    }
}

fn latest_message_length(log: &ClassicalLog, sender: Party) -> Result<usize, ProtocolError> {
    log.find_last(|a| match a.payload {
        Payload::MessageLength { bits } if a.sender == sender => Some(bits),
        _ => None,
    })
    .ok_or(ProtocolError::MissingAnnouncement("message_length"))
}

fn latest_dibits(
    log: &ClassicalLog,
    sender: Party,
    results: bool,
) -> Result<Vec<Dibit>, ProtocolError> {
    log.find_last(|a| match &a.payload {
        Payload::CheckingResults { dibits } if results && a.sender == sender => {
            Some(dibits.clone())
        }
        Payload::CheckingMessages { dibits } if !results && a.sender == sender => {
            Some(dibits.clone())
        }
        _ => None,
    })
    .ok_or(ProtocolError::MissingAnnouncement(if results {
        "checking_results"
    } else {
        "checking_messages"
    }))
}

fn latest_order(log: &ClassicalLog, message: bool) -> Result<Vec<OrderEntry>, ProtocolError> {
    log.find_last(|a| match &a.payload {
        Payload::CheckingOrder { entries } if !message => Some(entries.clone()),
        Payload::MessageOrder { entries } if message => Some(entries.clone()),
        _ => None,
    })
    .ok_or(ProtocolError::MissingAnnouncement(if message {
        "message_order"
    } else {
        "checking_order"
    }))
}

fn checks_of(expected: &[Dibit], observed: &[Dibit]) -> Vec<CheckRecord> {
    expected
        .iter()
        .zip(observed)
        .map(|(&expected, &observed)| CheckRecord { expected, observed })
        .collect()
}
