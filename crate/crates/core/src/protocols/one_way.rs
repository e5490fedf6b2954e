use alloc::vec::Vec;

use rand::Rng;

use super::{
    check_capacity, check_security, checks_of, disclose_message_matching, fill_slots,
    latest_dibits, latest_message_length, random_dibits, secret_order, select_checking_set,
    Counters, Phase, PhaseTracker, ProtocolConfig, ProtocolError, ProtocolKind, RunOutcome, Trial,
};
use crate::channel::{ClassicalLog, Direction, MatchEntry, Party, Payload};
use crate::coding::{Dibit, Message};
use crate::eve::Layout;
use crate::qsim::{BellOutcome, ParticleHandle};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OneWayPhase {
    /// Alice prepares pairs, splits them and encodes on the first particle.
    Prepare,
    /// All particles go out one by one in Alice's secret order.
    Send,
    /// Alice discloses the initial state and the checking-set matching.
    CheckDisclosure,
    /// Bob measures and reports; Alice judges the error rate.
    SecurityCheck,
    MessageDisclosure,
    Done,
    Aborted,
}

impl Phase for OneWayPhase {
    const ORDER: &'static [Self] = &[
        OneWayPhase::Prepare,
        OneWayPhase::Send,
        OneWayPhase::CheckDisclosure,
        OneWayPhase::SecurityCheck,
        OneWayPhase::MessageDisclosure,
        OneWayPhase::Done,
    ];
    const SECURITY_CHECK: Self = OneWayPhase::SecurityCheck;
    const ABORTED: Self = OneWayPhase::Aborted;

    fn name(self) -> &'static str {
        match self {
            OneWayPhase::Prepare => "prepare",
            OneWayPhase::Send => "send",
            OneWayPhase::CheckDisclosure => "check_disclosure",
            OneWayPhase::SecurityCheck => "security_check",
            OneWayPhase::MessageDisclosure => "message_disclosure",
            OneWayPhase::Done => "done",
            OneWayPhase::Aborted => "aborted",
        }
    }
}

fn latest_matching(log: &ClassicalLog, message: bool) -> Result<Vec<MatchEntry>, ProtocolError> {
    log.find_last(|a| match &a.payload {
        Payload::CheckingMatching { entries } if !message => Some(entries.clone()),
        Payload::MessageMatching { entries } if message => Some(entries.clone()),
        _ => None,
    })
    .ok_or(ProtocolError::MissingAnnouncement(if message {
        "message_matching"
    } else {
        "checking_matching"
    }))
}

fn latest_initial_state(log: &ClassicalLog) -> Result<BellOutcome, ProtocolError> {
    log.find_last(|a| match a.payload {
        Payload::InitialState { state } => Some(state),
        _ => None,
    })
    .ok_or(ProtocolError::MissingAnnouncement("initial_state"))
}

/// Bob measures every disclosed slot pair.
fn bob_measure<R: Rng + ?Sized>(
    trial: &mut Trial,
    arrived: &[ParticleHandle],
    entries: &[MatchEntry],
    rng: &mut R,
) -> Result<Vec<Dibit>, ProtocolError> {
    let initial = latest_initial_state(&trial.log)?;
    entries
        .iter()
        .map(|e| trial.measure(arrived[e.first], arrived[e.second], initial, rng))
        .collect()
}

/// Alice sends `alice_message` to Bob in a single pass, both particles of
/// every pair travelling separately in Alice's secret order.
pub fn run_one_way<R: Rng + ?Sized>(
    config: &ProtocolConfig,
    alice_message: &Message,
    rng: &mut R,
) -> Result<RunOutcome, ProtocolError> {
    config.validate(ProtocolKind::OneWay)?;
    check_capacity(config, alice_message)?;
    let n = config.n_pairs;
    let mut trial = Trial::new(config);
    let mut phase = PhaseTracker::<OneWayPhase>::new();

    // Particle 2i is the first member of pair i, 2i + 1 the second.
    let mut particles = Vec::with_capacity(2 * n);
    for _ in 0..n {
        let (a, b) = trial.registry.make_epr();
        particles.push(a);
        particles.push(b);
    }
    let (checking, message) = select_checking_set(n, config.check_fraction, rng)?;
    let checking_dibits = random_dibits(checking.len(), rng);
    let slot_dibits = fill_slots(alice_message, message.len(), rng)?;
    for (&i, &d) in checking
        .iter()
        .zip(&checking_dibits)
        .chain(message.iter().zip(&slot_dibits))
    {
        trial.encode(particles[2 * i], d)?;
    }

    phase.advance(OneWayPhase::Send)?;
    let order = secret_order(2 * n, config.permute, rng);
    let slot_of = order.inverse();
    let matching = |pairs: &[usize]| -> Vec<MatchEntry> {
        pairs
            .iter()
            .map(|&i| MatchEntry {
                first: slot_of.get(2 * i),
                second: slot_of.get(2 * i + 1),
            })
            .collect()
    };
    let sent = order.apply(&particles)?;
    let arrived = trial.send(sent, Direction::Forward, Party::Alice, Party::Bob, rng)?;

    phase.advance(OneWayPhase::CheckDisclosure)?;
    trial.log.announce(
        Party::Alice,
        Payload::InitialState {
            state: BellOutcome::PsiMinus,
        },
    );
    trial.log.announce(
        Party::Alice,
        Payload::CheckingMatching {
            entries: matching(&checking),
        },
    );

    phase.advance(OneWayPhase::SecurityCheck)?;
    let disclosed = latest_matching(&trial.log, false)?;
    let results = bob_measure(&mut trial, &arrived, &disclosed, rng)?;
    trial
        .log
        .announce(Party::Bob, Payload::CheckingResults { dibits: results });
    let reported = latest_dibits(&trial.log, Party::Bob, true)?;
    let verdict = check_security(&checking_dibits, &reported, config.abort_threshold)?;
    trial.log.announce(
        Party::Alice,
        Payload::Verdict {
            error_rate: verdict.error_rate,
            abort: verdict.abort,
        },
    );

    let decoded = match verdict.clearance() {
        None => {
            phase.advance(OneWayPhase::Aborted)?;
            None
        }
        Some(clearance) => {
            phase.advance(OneWayPhase::MessageDisclosure)?;
            disclose_message_matching(&mut trial.log, Party::Alice, matching(&message), &clearance);
            trial.log.announce(
                Party::Alice,
                Payload::MessageLength {
                    bits: alice_message.len(),
                },
            );
            let entries = latest_matching(&trial.log, true)?;
            let dibits = bob_measure(&mut trial, &arrived, &entries, rng)?;
            let bits = latest_message_length(&trial.log, Party::Alice)?;
            phase.advance(OneWayPhase::Done)?;
            Some(Message::from_dibits(&dibits, bits)?)
        }
    };

    let target = &slot_dibits[..alice_message.dibit_len()];
    let (eve_guess, eve_correct) =
        trial.score_eve(Layout::Interleaved { pairs: n }, target, rng)?;
    debug_assert!(trial.registry.audit().is_ok());
    Ok(RunOutcome {
        protocol: ProtocolKind::OneWay,
        aborted: verdict.abort,
        checking_error_rate: verdict.error_rate,
        decoded_message: decoded,
        decoded_message_peer: None,
        counters: Counters {
            pairs_checked: verdict.checked,
            check_errors: verdict.errors,
            eve_interceptions: trial.eve.interceptions(),
            message_dibits: if trial.eve.is_active() {
                target.len()
            } else {
                0
            },
            eve_correct_dibits: eve_correct,
        },
        checks: checks_of(&checking_dibits, &reported),
        eve_guess,
        transcript: trial.log,
    })
}
