//! Quantum and classical transmission media.
//!
//! The quantum channel applies independent Pauli noise to each particle on
//! each traversal and hands the batch to an [`Interceptor`] sitting in the
//! middle of the fiber. The classical channel is an authenticated, public,
//! append-only [`ClassicalLog`].

use alloc::vec::Vec;

use rand::Rng;

use crate::coding::Dibit;
use crate::qsim::{BellOutcome, ParticleHandle, PauliLabel, QsimError, Registry};

/// Legitimate communicating parties. The eavesdropper never writes the log.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Party {
    Alice,
    Bob,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Direction {
    /// First traversal, from the preparing party outward.
    Forward,
    /// Second traversal of a round trip.
    Return,
}

/// Per-particle, per-traversal noise.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum NoiseModel {
    #[default]
    None,
    /// With probability `p` one of X, Y, Z, chosen uniformly, hits the particle.
    Pauli { p: f64 },
}

impl NoiseModel {
    pub fn pauli(p: f64) -> Result<Self, ChannelError> {
        let model = NoiseModel::Pauli { p };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        match *self {
            NoiseModel::Pauli { p } if !(0.0..=1.0).contains(&p) => {
                Err(ChannelError::NoiseProbability(p))
            }
            _ => Ok(()),
        }
    }

    /// Error probability per traversal; zero for [`NoiseModel::None`].
    pub fn probability(&self) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::Pauli { p } => p,
        }
    }

    fn disturb<R: Rng + ?Sized>(
        &self,
        handle: ParticleHandle,
        registry: &mut Registry,
        rng: &mut R,
    ) -> Result<(), QsimError> {
        if let NoiseModel::Pauli { p } = *self {
            if rng.random_bool(p) {
                let op = [PauliLabel::X, PauliLabel::Y, PauliLabel::Z][rng.random_range(0..3)];
                registry.apply_pauli(handle, op)?;
            }
        }
        Ok(())
    }
}

/// Particles in flight, in transmission order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitBatch {
    pub items: Vec<ParticleHandle>,
    pub direction: Direction,
    pub sender: Party,
    pub receiver: Party,
}

impl TransitBatch {
    pub fn new(
        items: Vec<ParticleHandle>,
        direction: Direction,
        sender: Party,
        receiver: Party,
    ) -> Result<Self, ChannelError> {
        check_distinct(&items)?;
        Ok(TransitBatch {
            items,
            direction,
            sender,
            receiver,
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Same routing metadata, different payload.
    pub fn with_items(&self, items: Vec<ParticleHandle>) -> TransitBatch {
        TransitBatch {
            items,
            direction: self.direction,
            sender: self.sender,
            receiver: self.receiver,
        }
    }
}

fn check_distinct(items: &[ParticleHandle]) -> Result<(), ChannelError> {
    let mut sorted = items.to_vec();
    sorted.sort_unstable();
    match sorted.windows(2).find(|w| w[0] == w[1]) {
        Some(w) => Err(ChannelError::DuplicateHandle(w[0])),
        None => Ok(()),
    }
}

/// A party sitting on the quantum channel.
pub trait Interceptor {
    fn intercept<R: Rng + ?Sized>(
        &mut self,
        batch: TransitBatch,
        registry: &mut Registry,
        rng: &mut R,
    ) -> Result<TransitBatch, ChannelError>;
}

/// Forwards every batch untouched.
#[derive(Clone, Copy, Debug, Default)]
pub struct Passthrough;

impl Interceptor for Passthrough {
    fn intercept<R: Rng + ?Sized>(
        &mut self,
        batch: TransitBatch,
        _registry: &mut Registry,
        _rng: &mut R,
    ) -> Result<TransitBatch, ChannelError> {
        Ok(batch)
    }
}

/// One traversal of the quantum channel.
///
/// Noise acts on the segment between sender and interceptor on forward
/// legs, and between interceptor and receiver on return legs. The channel
/// itself never reorders or drops particles.
pub fn transmit<I, R>(
    batch: TransitBatch,
    noise: &NoiseModel,
    hook: &mut I,
    registry: &mut Registry,
    rng: &mut R,
) -> Result<TransitBatch, ChannelError>
where
    I: Interceptor + ?Sized,
    R: Rng + ?Sized,
{
    noise.validate()?;
    for &h in &batch.items {
        if !registry.contains(h) {
            return Err(QsimError::UnknownHandle(h).into());
        }
    }
    let sent = batch.len();
    if batch.direction == Direction::Forward {
        for &h in &batch.items {
            noise.disturb(h, registry, rng)?;
        }
    }
    let out = hook.intercept(batch, registry, rng)?;
    if out.len() != sent {
        return Err(ChannelError::Conservation {
            sent,
            forwarded: out.len(),
        });
    }
    check_distinct(&out.items)?;
    if out.direction == Direction::Return {
        for &h in &out.items {
            noise.disturb(h, registry, rng)?;
        }
    }
    Ok(out)
}

/// Return position `position` carries the travel particle of `pair`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OrderEntry {
    pub position: usize,
    pub pair: usize,
}

/// Transmission slots of the first and second particle of one pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MatchEntry {
    pub first: usize,
    pub second: usize,
}

/// Everything said over the public channel.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Payload {
    /// The receiver confirms arrival of a batch.
    Received {
        particles: usize,
    },
    /// State every pair was prepared in.
    InitialState {
        state: BellOutcome,
    },
    /// Pair indices of the checking and message sets.
    Split {
        checking: Vec<usize>,
        message: Vec<usize>,
    },
    /// Return order of the checking set, in checking-set order.
    CheckingOrder {
        entries: Vec<OrderEntry>,
    },
    /// Slot matching of the checking set, in checking-set order.
    CheckingMatching {
        entries: Vec<MatchEntry>,
    },
    /// Decoded Bell results on the checking set.
    CheckingResults {
        dibits: Vec<Dibit>,
    },
    /// The true checking dibits of the announcing party.
    CheckingMessages {
        dibits: Vec<Dibit>,
    },
    Verdict {
        error_rate: f64,
        abort: bool,
    },
    /// Bit length of the announcing party's secret message.
    MessageLength {
        bits: usize,
    },
    /// Return order of the message set, in message-slot order.
    MessageOrder {
        entries: Vec<OrderEntry>,
    },
    /// Slot matching of the message set, in message-slot order.
    MessageMatching {
        entries: Vec<MatchEntry>,
    },
    /// Decoded Bell results on the message set.
    MessageResults {
        dibits: Vec<Dibit>,
    },
}

impl Payload {
    /// True for announcements that reveal how message-set particles are
    /// ordered or paired.
    pub fn discloses_message_order(&self) -> bool {
        matches!(
            self,
            Payload::MessageOrder { .. } | Payload::MessageMatching { .. }
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Announcement {
    pub sender: Party,
    pub payload: Payload,
}

/// Append-only public record, readable by everyone including Eve.
#[derive(Clone, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct ClassicalLog {
    entries: Vec<Announcement>,
}

impl ClassicalLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn announce(&mut self, sender: Party, payload: Payload) {
        self.entries.push(Announcement { sender, payload });
    }

    pub fn entries(&self) -> &[Announcement] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Most recent payload satisfying `pred`.
    pub fn find_last<'a, T: 'a>(
        &'a self,
        mut pick: impl FnMut(&'a Announcement) -> Option<T>,
    ) -> Option<T> {
        self.entries.iter().rev().find_map(&mut pick)
    }

    pub fn discloses_message_order(&self) -> bool {
        self.entries
            .iter()
            .any(|a| a.payload.discloses_message_order())
    }
}

pub fn announce(log: &mut ClassicalLog, sender: Party, payload: Payload) {
    log.announce(sender, payload);
}

pub fn read_log(log: &ClassicalLog) -> &[Announcement] {
    log.entries()
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChannelError {
    #[error(transparent)]
    Qsim(#[from] QsimError),
    #[error("{0} appears twice in one batch")]
    DuplicateHandle(ParticleHandle),
    #[error("interceptor received {sent} particles but forwarded {forwarded}")]
    Conservation { sent: usize, forwarded: usize },
    #[error("noise probability {0} outside [0, 1]")]
    NoiseProbability(f64),
    #[error("interceptor fault: {0}")]
    Hook(&'static str),
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn forward(items: Vec<ParticleHandle>) -> TransitBatch {
        TransitBatch::new(items, Direction::Forward, Party::Alice, Party::Bob).unwrap()
    }

    #[test]
    fn noiseless_passthrough_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut reg = Registry::new();
        let pairs: Vec<_> = (0..8).map(|_| reg.make_epr()).collect();
        let before = reg.clone();
        let batch = forward(pairs.iter().map(|p| p.1).collect());
        let out = transmit(
            batch.clone(),
            &NoiseModel::None,
            &mut Passthrough,
            &mut reg,
            &mut rng,
        )
        .unwrap();
        assert_eq!(out, batch);
        for (a, _) in &pairs {
            assert_eq!(reg.state_of(*a).unwrap().0, before.state_of(*a).unwrap().0);
        }
    }

    #[test]
    fn certain_noise_always_flips_the_bell_outcome() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let noise = NoiseModel::pauli(1.0).unwrap();
        let mut counts = [0usize; 4];
        let trials = 10_000;
        for _ in 0..trials {
            let mut reg = Registry::new();
            let (h, t) = reg.make_epr();
            let out = transmit(
                forward(vec![t]),
                &noise,
                &mut Passthrough,
                &mut reg,
                &mut rng,
            )
            .unwrap();
            counts[reg.bell_measure(h, out.items[0], &mut rng).unwrap().index()] += 1;
        }
        assert_eq!(counts[BellOutcome::PsiMinus.index()], 0);
        for c in &counts[1..] {
            assert!(
                (*c as f64 / trials as f64 - 1.0 / 3.0).abs() < 0.02,
                "{counts:?}"
            );
        }
    }

    #[test]
    fn flip_rate_tracks_p() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = 0.1;
        let noise = NoiseModel::pauli(p).unwrap();
        let n = 10_000;
        let mut reg = Registry::new();
        let pairs: Vec<_> = (0..n).map(|_| reg.make_epr()).collect();
        let out = transmit(
            forward(pairs.iter().map(|p| p.1).collect()),
            &noise,
            &mut Passthrough,
            &mut reg,
            &mut rng,
        )
        .unwrap();
        let flips = pairs
            .iter()
            .zip(&out.items)
            .filter(|((h, _), t)| {
                reg.bell_measure(*h, **t, &mut rng).unwrap() != BellOutcome::PsiMinus
            })
            .count();
        let rate = flips as f64 / n as f64;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((rate - p).abs() < 3.0 * sigma, "rate {rate}");
    }

    #[test]
    fn rejects_duplicates_and_bad_noise() {
        let mut reg = Registry::new();
        let (a, _) = reg.make_epr();
        assert_eq!(
            TransitBatch::new(vec![a, a], Direction::Forward, Party::Alice, Party::Bob),
            Err(ChannelError::DuplicateHandle(a))
        );
        assert_eq!(
            NoiseModel::pauli(1.5),
            Err(ChannelError::NoiseProbability(1.5))
        );
    }

    struct Dropper;

    impl Interceptor for Dropper {
        fn intercept<R: Rng + ?Sized>(
            &mut self,
            batch: TransitBatch,
            _: &mut Registry,
            _: &mut R,
        ) -> Result<TransitBatch, ChannelError> {
            let items = batch.items[1..].to_vec();
            Ok(batch.with_items(items))
        }
    }

    #[test]
    fn interceptor_must_conserve_particles() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut reg = Registry::new();
        let (a, b) = reg.make_epr();
        let err = transmit(
            forward(vec![a, b]),
            &NoiseModel::None,
            &mut Dropper,
            &mut reg,
            &mut rng,
        )
        .unwrap_err();
        assert_eq!(
            err,
            ChannelError::Conservation {
                sent: 2,
                forwarded: 1
            }
        );
    }

    #[test]
    fn log_is_append_only_broadcast() {
        let mut log = ClassicalLog::new();
        announce(&mut log, Party::Bob, Payload::Received { particles: 4 });
        announce(
            &mut log,
            Party::Alice,
            Payload::CheckingResults {
                dibits: vec![Dibit::ZERO],
            },
        );
        let bob_view = read_log(&log);
        let eve_view = read_log(&log);
        assert_eq!(bob_view, eve_view);
        assert_eq!(bob_view.len(), 2);
        assert_eq!(bob_view[0].payload, Payload::Received { particles: 4 });
        assert_eq!(bob_view[1].sender, Party::Alice);
        assert!(!log.discloses_message_order());
        announce(
            &mut log,
            Party::Alice,
            Payload::MessageMatching { entries: vec![] },
        );
        assert!(log.discloses_message_order());
    }
}
