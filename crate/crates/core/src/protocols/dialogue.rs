use alloc::vec::Vec;

use rand::Rng;

use super::{
    check_capacity, check_security, checks_of, disclose_message_order, fill_slots, latest_dibits,
    latest_message_length, latest_order, random_dibits, secret_order, select_checking_set,
    Counters, Phase, PhaseTracker, ProtocolConfig, ProtocolError, ProtocolKind, RunOutcome, Trial,
};
use crate::channel::{ClassicalLog, Direction, OrderEntry, Party, Payload};
use crate::coding::{Dibit, Message};
use crate::eve::Layout;
use crate::qsim::{BellOutcome, ParticleHandle};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DialoguePhase {
    /// Alice prepares singlets and encodes on the travel particles.
    Prepare,
    Send,
    /// Alice names the split; Bob encodes, reorders and returns.
    Encode,
    /// Bob discloses checking-set order; Alice measures and reports.
    CheckDisclosure,
    /// Both sides publish true checking dibits and judge.
    SecurityCheck,
    MessageDisclosure,
    Done,
    Aborted,
}

impl Phase for DialoguePhase {
    const ORDER: &'static [Self] = &[
        DialoguePhase::Prepare,
        DialoguePhase::Send,
        DialoguePhase::Encode,
        DialoguePhase::CheckDisclosure,
        DialoguePhase::SecurityCheck,
        DialoguePhase::MessageDisclosure,
        DialoguePhase::Done,
    ];
    const SECURITY_CHECK: Self = DialoguePhase::SecurityCheck;
    const ABORTED: Self = DialoguePhase::Aborted;

    fn name(self) -> &'static str {
        match self {
            DialoguePhase::Prepare => "prepare",
            DialoguePhase::Send => "send",
            DialoguePhase::Encode => "encode",
            DialoguePhase::CheckDisclosure => "check_disclosure",
            DialoguePhase::SecurityCheck => "security_check",
            DialoguePhase::MessageDisclosure => "message_disclosure",
            DialoguePhase::Done => "done",
            DialoguePhase::Aborted => "aborted",
        }
    }
}

fn latest_split(log: &ClassicalLog) -> Result<(Vec<usize>, Vec<usize>), ProtocolError> {
    log.find_last(|a| match &a.payload {
        Payload::Split { checking, message } => Some((checking.clone(), message.clone())),
        _ => None,
    })
    .ok_or(ProtocolError::MissingAnnouncement("split"))
}

fn latest_message_results(log: &ClassicalLog) -> Result<Vec<Dibit>, ProtocolError> {
    log.find_last(|a| match &a.payload {
        Payload::MessageResults { dibits } => Some(dibits.clone()),
        _ => None,
    })
    .ok_or(ProtocolError::MissingAnnouncement("message_results"))
}

fn xor_all(a: &[Dibit], b: &[Dibit]) -> Vec<Dibit> {
    a.iter().zip(b).map(|(&x, &y)| x ^ y).collect()
}

fn alice_measure<R: Rng + ?Sized>(
    trial: &mut Trial,
    home: &[ParticleHandle],
    arrived: &[ParticleHandle],
    entries: &[OrderEntry],
    rng: &mut R,
) -> Result<Vec<Dibit>, ProtocolError> {
    entries
        .iter()
        .map(|e| {
            trial.measure(
                home[e.pair],
                arrived[e.position],
                BellOutcome::PsiMinus,
                rng,
            )
        })
        .collect()
}

/// Two-way exchange: both parties encode on the same travel particles and
/// each recovers the other's message by XOR with their own.
pub fn run_dialogue<R: Rng + ?Sized>(
    config: &ProtocolConfig,
    alice_message: &Message,
    bob_message: &Message,
    rng: &mut R,
) -> Result<RunOutcome, ProtocolError> {
    config.validate(ProtocolKind::Dialogue)?;
    check_capacity(config, alice_message)?;
    check_capacity(config, bob_message)?;
    let n = config.n_pairs;
    let mut trial = Trial::new(config);
    let mut phase = PhaseTracker::<DialoguePhase>::new();

    let (home, travel): (Vec<_>, Vec<_>) = (0..n).map(|_| trial.registry.make_epr()).unzip();
    let (checking, message) = select_checking_set(n, config.check_fraction, rng)?;
    let alice_checking = random_dibits(checking.len(), rng);
    let alice_slots = fill_slots(alice_message, message.len(), rng)?;
    for (&i, &d) in checking
        .iter()
        .zip(&alice_checking)
        .chain(message.iter().zip(&alice_slots))
    {
        trial.encode(travel[i], d)?;
    }

    phase.advance(DialoguePhase::Send)?;
    let at_bob = trial.send(travel, Direction::Forward, Party::Alice, Party::Bob, rng)?;

    phase.advance(DialoguePhase::Encode)?;
    trial
        .log
        .announce(Party::Alice, Payload::Split { checking, message });
    let (checking, message) = latest_split(&trial.log)?;
    let bob_checking = random_dibits(checking.len(), rng);
    let bob_slots = fill_slots(bob_message, message.len(), rng)?;
    for (&i, &d) in checking
        .iter()
        .zip(&bob_checking)
        .chain(message.iter().zip(&bob_slots))
    {
        trial.encode(at_bob[i], d)?;
    }
    let order = secret_order(n, config.permute, rng);
    let return_position = order.inverse().mapping().to_vec();
    let entries = |pairs: &[usize]| -> Vec<OrderEntry> {
        pairs
            .iter()
            .map(|&pair| OrderEntry {
                position: return_position[pair],
                pair,
            })
            .collect()
    };
    let returned = order.apply(&at_bob)?;
    let arrived = trial.send(returned, Direction::Return, Party::Bob, Party::Alice, rng)?;

    phase.advance(DialoguePhase::CheckDisclosure)?;
    trial.log.announce(
        Party::Bob,
        Payload::CheckingOrder {
            entries: entries(&checking),
        },
    );
    let disclosed = latest_order(&trial.log, false)?;
    let results = alice_measure(&mut trial, &home, &arrived, &disclosed, rng)?;
    trial
        .log
        .announce(Party::Alice, Payload::CheckingResults { dibits: results });

    phase.advance(DialoguePhase::SecurityCheck)?;
    let r_c = latest_dibits(&trial.log, Party::Alice, true)?;
    trial.log.announce(
        Party::Alice,
        Payload::CheckingMessages {
            dibits: alice_checking.clone(),
        },
    );
    trial.log.announce(
        Party::Bob,
        Payload::CheckingMessages {
            dibits: bob_checking.clone(),
        },
    );
    let published_alice = latest_dibits(&trial.log, Party::Alice, false)?;
    let published_bob = latest_dibits(&trial.log, Party::Bob, false)?;
    // Each side deduces the peer's checking dibits from R_c and its own.
    let alice_view = check_security(
        &published_bob,
        &xor_all(&r_c, &alice_checking),
        config.abort_threshold,
    )?;
    let bob_view = check_security(
        &published_alice,
        &xor_all(&r_c, &bob_checking),
        config.abort_threshold,
    )?;
    for (party, v) in [(Party::Alice, &alice_view), (Party::Bob, &bob_view)] {
        trial.log.announce(
            party,
            Payload::Verdict {
                error_rate: v.error_rate,
                abort: v.abort,
            },
        );
    }
    let verdict = if bob_view.error_rate >= alice_view.error_rate {
        bob_view
    } else {
        alice_view
    };

    let (decoded, decoded_peer) = match verdict.clearance() {
        None => {
            phase.advance(DialoguePhase::Aborted)?;
            (None, None)
        }
        Some(clearance) => {
            phase.advance(DialoguePhase::MessageDisclosure)?;
            disclose_message_order(&mut trial.log, Party::Bob, entries(&message), &clearance);
            let order = latest_order(&trial.log, true)?;
            let r_m = alice_measure(&mut trial, &home, &arrived, &order, rng)?;
            trial
                .log
                .announce(Party::Alice, Payload::MessageResults { dibits: r_m });
            trial.log.announce(
                Party::Alice,
                Payload::MessageLength {
                    bits: alice_message.len(),
                },
            );
            trial.log.announce(
                Party::Bob,
                Payload::MessageLength {
                    bits: bob_message.len(),
                },
            );
            let r_m = latest_message_results(&trial.log)?;
            let at_bob = Message::from_dibits(
                &xor_all(&r_m, &bob_slots),
                latest_message_length(&trial.log, Party::Alice)?,
            )?;
            let at_alice = Message::from_dibits(
                &xor_all(&r_m, &alice_slots),
                latest_message_length(&trial.log, Party::Bob)?,
            )?;
            phase.advance(DialoguePhase::Done)?;
            (Some(at_bob), Some(at_alice))
        }
    };

    let target = &bob_slots[..bob_message.dibit_len()];
    let (eve_guess, eve_correct) = trial.score_eve(Layout::Travel { pairs: n }, target, rng)?;
    debug_assert!(trial.registry.audit().is_ok());
    Ok(RunOutcome {
        protocol: ProtocolKind::Dialogue,
        aborted: verdict.abort,
        checking_error_rate: verdict.error_rate,
        decoded_message: decoded,
        decoded_message_peer: decoded_peer,
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
        checks: checks_of(&xor_all(&alice_checking, &bob_checking), &r_c),
        eve_guess,
        transcript: trial.log,
    })
}
