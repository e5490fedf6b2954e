//! Eavesdropping strategies.
//!
//! Eve acts only inside channel interception hooks and only reads the
//! public log. After a run, [`Eve::guess_message`] turns her private records
//! plus whatever the log discloses into one dibit guess per message slot.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;

use crate::channel::{ChannelError, ClassicalLog, Direction, Interceptor, Payload, TransitBatch};
use crate::coding::{decode_outcome, dibit_to_pauli, Dibit, Permutation};
use crate::qsim::{BellOutcome, ParticleHandle, Registry};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AttackKind {
    #[default]
    None,
    /// Substitute Eve's own EPR halves on the way out, Bell-measure them on
    /// the way back and re-encode the genuine particles.
    InterceptResendEpr,
    /// Z-measure every particle in transit and forward it.
    MeasureResendZ,
    /// Capture a whole interleaved batch, guess the pairing, Bell-measure and
    /// re-prepare.
    InterceptBellGuess,
    /// CNOT a fresh ancilla onto every particle and measure the ancillas at
    /// the end.
    EntangleMeasure,
}

impl AttackKind {
    pub const ALL: [AttackKind; 5] = [
        AttackKind::None,
        AttackKind::InterceptResendEpr,
        AttackKind::MeasureResendZ,
        AttackKind::InterceptBellGuess,
        AttackKind::EntangleMeasure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AttackKind::None => "none",
            AttackKind::InterceptResendEpr => "intercept_resend_epr",
            AttackKind::MeasureResendZ => "measure_resend_z",
            AttackKind::InterceptBellGuess => "intercept_bell_guess",
            AttackKind::EntangleMeasure => "entangle_measure",
        }
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown attack `{0}`")]
pub struct UnknownAttack(pub alloc::string::String);

impl FromStr for AttackKind {
    type Err = UnknownAttack;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AttackKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| UnknownAttack(s.into()))
    }
}

/// How message slots map onto transmitted particles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    /// One travel particle per pair, sent in pair order and returned in a
    /// secret order.
    Travel { pairs: usize },
    /// Both particles of every pair interleaved over `2 * pairs` slots.
    Interleaved { pairs: usize },
}

/// Eve's belief about where one message slot lives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlotHypothesis {
    /// Pair `pair` went out at forward position `pair` and came back at
    /// return position `position`.
    Travel { pair: usize, position: usize },
    /// The pair occupied these two slots.
    Interleaved { first: usize, second: usize },
}

/// Message-slot hypotheses from the public log.
///
/// Disclosed orders are used verbatim. Otherwise message pairs are the
/// complement of the checking set, travel particles are assumed to return
/// unpermuted and undisclosed slots are paired consecutively.
pub fn message_hypotheses(log: &ClassicalLog, layout: Layout) -> Vec<SlotHypothesis> {
    match layout {
        Layout::Travel { pairs } => {
            if let Some(entries) = log.find_last(|a| match &a.payload {
                Payload::MessageOrder { entries } => Some(entries),
                _ => None,
            }) {
                return entries
                    .iter()
                    .map(|e| SlotHypothesis::Travel {
                        pair: e.pair,
                        position: e.position,
                    })
                    .collect();
            }
            let mut checking = vec![false; pairs];
            for a in log.entries() {
                match &a.payload {
                    Payload::CheckingOrder { entries } => {
                        for e in entries.iter().filter(|e| e.pair < pairs) {
                            checking[e.pair] = true;
                        }
                    }
                    Payload::Split { checking: c, .. } => {
                        for &i in c.iter().filter(|&&i| i < pairs) {
                            checking[i] = true;
                        }
                    }
                    _ => {}
                }
            }
            (0..pairs)
                .filter(|&i| !checking[i])
                .map(|i| SlotHypothesis::Travel {
                    pair: i,
                    position: i,
                })
                .collect()
        }
        Layout::Interleaved { pairs } => {
            if let Some(entries) = log.find_last(|a| match &a.payload {
                Payload::MessageMatching { entries } => Some(entries),
                _ => None,
            }) {
                return entries
                    .iter()
                    .map(|e| SlotHypothesis::Interleaved {
                        first: e.first,
                        second: e.second,
                    })
                    .collect();
            }
            let slots = 2 * pairs;
            let mut used = vec![false; slots];
            if let Some(entries) = log.find_last(|a| match &a.payload {
                Payload::CheckingMatching { entries } => Some(entries),
                _ => None,
            }) {
                for e in entries {
                    for s in [e.first, e.second] {
                        if s < slots {
                            used[s] = true;
                        }
                    }
                }
            }
            let free: Vec<usize> = (0..slots).filter(|&s| !used[s]).collect();
            free.chunks_exact(2)
                .map(|c| SlotHypothesis::Interleaved {
                    first: c[0],
                    second: c[1],
                })
                .collect()
        }
    }
}

/// A uniformly random dibit from the `Ψ` class (`{00, 11}`) when
/// `psi` holds, else from the `Φ` class (`{01, 10}`).
fn guess_in_class<R: Rng + ?Sized>(psi: bool, rng: &mut R) -> Dibit {
    let r = rng.random_bool(0.5);
    Dibit::from_bits(r, r ^ !psi)
}

/// Guess from Z-basis records: `forward`/`returned` for travel layouts,
/// `forward` indexed by slot for interleaved ones.
fn guess_from_z_records<R: Rng + ?Sized>(
    forward: &[u8],
    returned: &[u8],
    hyp: &SlotHypothesis,
    rng: &mut R,
) -> Dibit {
    match *hyp {
        SlotHypothesis::Travel { pair, position } => {
            match (forward.get(pair), returned.get(position)) {
                // A flipped Z value means Bob applied X or iσy.
                (Some(f), Some(r)) => guess_in_class(f == r, rng),
                _ => Dibit::random(rng),
            }
        }
        SlotHypothesis::Interleaved { first, second } => {
            match (forward.get(first), forward.get(second)) {
                // The singlet is anti-correlated; Ψ-class encodings keep it so.
                (Some(a), Some(b)) => guess_in_class(a != b, rng),
                _ => Dibit::random(rng),
            }
        }
    }
}

/// Substitutes her own singlet halves on the forward leg and reads Bob's
/// encoding from them on the return leg.
#[derive(Clone, Debug, Default)]
pub struct InterceptResendEpr {
    homes: Vec<ParticleHandle>,
    genuine: Vec<ParticleHandle>,
    decoded: Vec<Dibit>,
}

impl InterceptResendEpr {
    /// Keeps the genuine particles by position and forwards fresh partners
    /// of Eve's own singlets.
    pub fn intercept_forward(
        &mut self,
        batch: TransitBatch,
        registry: &mut Registry,
    ) -> TransitBatch {
        let mut out = Vec::with_capacity(batch.len());
        for &item in &batch.items {
            let (h, t) = registry.make_epr();
            self.homes.push(h);
            self.genuine.push(item);
            out.push(t);
        }
        batch.with_items(out)
    }

    /// Bell-measures her home particle `j` with whatever arrives at return
    /// position `j`, copies the decoded operation onto genuine particle `j`
    /// and forwards the genuine particles.
    pub fn intercept_return<R: Rng + ?Sized>(
        &mut self,
        batch: TransitBatch,
        registry: &mut Registry,
        rng: &mut R,
    ) -> Result<TransitBatch, ChannelError> {
        if batch.len() != self.homes.len() {
            return Err(ChannelError::Hook(
                "return leg does not match the intercepted forward leg",
            ));
        }
        for (j, &arrived) in batch.items.iter().enumerate() {
            let d = decode_outcome(registry.bell_measure(self.homes[j], arrived, rng)?);
            registry.apply_pauli(self.genuine[j], dibit_to_pauli(d))?;
            self.decoded.push(d);
        }
        Ok(batch.with_items(self.genuine.clone()))
    }

    /// Dibit read at each return position.
    pub fn decoded(&self) -> &[Dibit] {
        &self.decoded
    }

    pub fn homes(&self) -> &[ParticleHandle] {
        &self.homes
    }

    /// Genuine particles held back on the forward leg, by position.
    pub fn stored(&self) -> &[ParticleHandle] {
        &self.genuine
    }

    fn guess<R: Rng + ?Sized>(&self, hyp: &SlotHypothesis, rng: &mut R) -> Dibit {
        match *hyp {
            SlotHypothesis::Travel { position, .. } => self
                .decoded
                .get(position)
                .copied()
                .unwrap_or_else(|| Dibit::random(rng)),
            SlotHypothesis::Interleaved { .. } => Dibit::random(rng),
        }
    }
}

/// Z-measures every particle in place.
#[derive(Clone, Debug, Default)]
pub struct MeasureResendZ {
    forward: Vec<u8>,
    returned: Vec<u8>,
}

impl MeasureResendZ {
    pub fn measure_resend<R: Rng + ?Sized>(
        &mut self,
        batch: TransitBatch,
        registry: &mut Registry,
        rng: &mut R,
    ) -> Result<TransitBatch, ChannelError> {
        let record = match batch.direction {
            Direction::Forward => &mut self.forward,
            Direction::Return => &mut self.returned,
        };
        for &h in &batch.items {
            record.push(registry.z_measure(h, rng)?);
        }
        Ok(batch)
    }

    pub fn forward_bits(&self) -> &[u8] {
        &self.forward
    }

    pub fn return_bits(&self) -> &[u8] {
        &self.returned
    }
}

/// Captures an interleaved batch, pairs positions by a uniformly random
/// perfect matching, Bell-measures each guessed pair and forwards fresh
/// pairs in the measured states.
#[derive(Clone, Debug, Default)]
pub struct InterceptBellGuess {
    /// `partner[s] = Some((u, outcome))` when slot `s` was matched with `u`.
    partner: Vec<Option<(usize, BellOutcome)>>,
}

impl InterceptBellGuess {
    pub fn intercept<R: Rng + ?Sized>(
        &mut self,
        batch: TransitBatch,
        registry: &mut Registry,
        rng: &mut R,
    ) -> Result<TransitBatch, ChannelError> {
        let n = batch.len();
        if !n.is_multiple_of(2) {
            return Err(ChannelError::Hook("pairing guess needs an even batch"));
        }
        let order = Permutation::random(n, rng);
        let mut out = batch.items.clone();
        self.partner = vec![None; n];
        for pair in order.mapping().chunks_exact(2) {
            let (s, u) = (pair[0], pair[1]);
            let outcome = registry.bell_measure(batch.items[s], batch.items[u], rng)?;
            let (x, y) = registry.prepare_bell(outcome);
            out[s] = x;
            out[u] = y;
            self.partner[s] = Some((u, outcome));
            self.partner[u] = Some((s, outcome));
        }
        Ok(batch.with_items(out))
    }

    /// Eve's guessed partner of `slot` and the Bell outcome she saw.
    pub fn partner(&self, slot: usize) -> Option<(usize, BellOutcome)> {
        self.partner.get(slot).copied().flatten()
    }

    fn guess<R: Rng + ?Sized>(&self, hyp: &SlotHypothesis, rng: &mut R) -> Dibit {
        match *hyp {
            SlotHypothesis::Interleaved { first, second } => match self.partner(first) {
                Some((u, outcome)) if u == second => decode_outcome(outcome),
                _ => Dibit::random(rng),
            },
            SlotHypothesis::Travel { .. } => Dibit::random(rng),
        }
    }
}

/// Copies the Z value of each transiting particle onto a fresh ancilla and
/// reads the ancillas only after the run.
#[derive(Clone, Debug, Default)]
pub struct EntangleMeasure {
    forward: Vec<ParticleHandle>,
    returned: Vec<ParticleHandle>,
    forward_bits: Vec<u8>,
    return_bits: Vec<u8>,
}

impl EntangleMeasure {
    pub fn entangle(
        &mut self,
        batch: TransitBatch,
        registry: &mut Registry,
    ) -> Result<TransitBatch, ChannelError> {
        for &h in &batch.items {
            let ancilla = registry.fresh_qubit();
            registry.apply_cnot(h, ancilla)?;
            match batch.direction {
                Direction::Forward => self.forward.push(ancilla),
                Direction::Return => self.returned.push(ancilla),
            }
        }
        Ok(batch)
    }

    /// Deferred Z measurement of every ancilla.
    pub fn measure_ancillas<R: Rng + ?Sized>(
        &mut self,
        registry: &mut Registry,
        rng: &mut R,
    ) -> Result<(), ChannelError> {
        self.forward_bits = self
            .forward
            .iter()
            .map(|&a| registry.z_measure(a, rng))
            .collect::<Result<_, _>>()?;
        self.return_bits = self
            .returned
            .iter()
            .map(|&a| registry.z_measure(a, rng))
            .collect::<Result<_, _>>()?;
        Ok(())
    }

    pub fn ancillas(&self, direction: Direction) -> &[ParticleHandle] {
        match direction {
            Direction::Forward => &self.forward,
            Direction::Return => &self.returned,
        }
    }
}

#[derive(Clone, Debug)]
enum Strategy {
    Idle,
    InterceptResend(InterceptResendEpr),
    MeasureResend(MeasureResendZ),
    BellGuess(InterceptBellGuess),
    Entangle(EntangleMeasure),
}

/// The eavesdropper: one strategy plus its private memory.
#[derive(Clone, Debug)]
pub struct Eve {
    kind: AttackKind,
    strategy: Strategy,
    interceptions: usize,
}

impl Eve {
    pub fn new(kind: AttackKind) -> Self {
        let strategy = match kind {
            AttackKind::None => Strategy::Idle,
            AttackKind::InterceptResendEpr => {
                Strategy::InterceptResend(InterceptResendEpr::default())
            }
            AttackKind::MeasureResendZ => Strategy::MeasureResend(MeasureResendZ::default()),
            AttackKind::InterceptBellGuess => Strategy::BellGuess(InterceptBellGuess::default()),
            AttackKind::EntangleMeasure => Strategy::Entangle(EntangleMeasure::default()),
        };
        Eve {
            kind,
            strategy,
            interceptions: 0,
        }
    }

    pub fn kind(&self) -> AttackKind {
        self.kind
    }

    pub fn is_active(&self) -> bool {
        self.kind != AttackKind::None
    }

    /// Particles that passed through Eve's hands.
    pub fn interceptions(&self) -> usize {
        self.interceptions
    }

    pub fn intercept_resend(&self) -> Option<&InterceptResendEpr> {
        match &self.strategy {
            Strategy::InterceptResend(s) => Some(s),
            _ => None,
        }
    }

    pub fn measure_resend(&self) -> Option<&MeasureResendZ> {
        match &self.strategy {
            Strategy::MeasureResend(s) => Some(s),
            _ => None,
        }
    }

    pub fn bell_guess(&self) -> Option<&InterceptBellGuess> {
        match &self.strategy {
            Strategy::BellGuess(s) => Some(s),
            _ => None,
        }
    }

    pub fn entangle_measure(&self) -> Option<&EntangleMeasure> {
        match &self.strategy {
            Strategy::Entangle(s) => Some(s),
            _ => None,
        }
    }

    /// Runs any deferred measurements. Call once the protocol is over.
    pub fn finish<R: Rng + ?Sized>(
        &mut self,
        registry: &mut Registry,
        rng: &mut R,
    ) -> Result<(), ChannelError> {
        if let Strategy::Entangle(s) = &mut self.strategy {
            s.measure_ancillas(registry, rng)?;
        }
        Ok(())
    }

    /// One guess per message slot, built from Eve's records and the log.
    pub fn guess_message<R: Rng + ?Sized>(
        &self,
        log: &ClassicalLog,
        layout: Layout,
        rng: &mut R,
    ) -> Vec<Dibit> {
        message_hypotheses(log, layout)
            .iter()
            .map(|hyp| match &self.strategy {
                Strategy::Idle => Dibit::random(rng),
                Strategy::InterceptResend(s) => s.guess(hyp, rng),
                Strategy::MeasureResend(s) => {
                    guess_from_z_records(&s.forward, &s.returned, hyp, rng)
                }
                Strategy::BellGuess(s) => s.guess(hyp, rng),
                Strategy::Entangle(s) => {
                    guess_from_z_records(&s.forward_bits, &s.return_bits, hyp, rng)
                }
            })
            .collect()
    }
}

impl Interceptor for Eve {
    fn intercept<R: Rng + ?Sized>(
        &mut self,
        batch: TransitBatch,
        registry: &mut Registry,
        rng: &mut R,
    ) -> Result<TransitBatch, ChannelError> {
        if self.kind != AttackKind::None {
            self.interceptions += batch.len();
        }
        match &mut self.strategy {
            Strategy::Idle => Ok(batch),
            Strategy::InterceptResend(s) => match batch.direction {
                Direction::Forward => Ok(s.intercept_forward(batch, registry)),
                Direction::Return => s.intercept_return(batch, registry, rng),
            },
            Strategy::MeasureResend(s) => s.measure_resend(batch, registry, rng),
            Strategy::BellGuess(s) => s.intercept(batch, registry, rng),
            Strategy::Entangle(s) => s.entangle(batch, registry),
        }
    }
}
