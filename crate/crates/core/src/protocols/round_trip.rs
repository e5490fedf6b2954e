use alloc::vec::Vec;

use rand::Rng;

use super::{
    check_capacity, check_security, checks_of, disclose_message_order, fill_slots, latest_dibits,
    latest_message_length, latest_order, random_dibits, secret_order, select_checking_set,
    Counters, Phase, PhaseTracker, ProtocolConfig, ProtocolError, ProtocolKind, RunOutcome, Trial,
};
use crate::channel::{Direction, OrderEntry, Party, Payload};
use crate::coding::{Dibit, Message};
use crate::eve::Layout;
use crate::qsim::{BellOutcome, ParticleHandle};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RoundTripPhase {
    /// Alice prepares singlets and sends the travel halves.
    Prepare,
    /// Bob picks checking and message sets and encodes.
    Encode,
    /// Bob reorders the travel particles and sends them back.
    Return,
    /// Bob discloses checking-set order; Alice measures and reports.
    CheckDisclosure,
    SecurityCheck,
    MessageDisclosure,
    Done,
    Aborted,
}

impl Phase for RoundTripPhase {
    const ORDER: &'static [Self] = &[
        RoundTripPhase::Prepare,
        RoundTripPhase::Encode,
        RoundTripPhase::Return,
        RoundTripPhase::CheckDisclosure,
        RoundTripPhase::SecurityCheck,
        RoundTripPhase::MessageDisclosure,
        RoundTripPhase::Done,
    ];
    const SECURITY_CHECK: Self = RoundTripPhase::SecurityCheck;
    const ABORTED: Self = RoundTripPhase::Aborted;

    fn name(self) -> &'static str {
        match self {
            RoundTripPhase::Prepare => "prepare",
            RoundTripPhase::Encode => "encode",
            RoundTripPhase::Return => "return",
            RoundTripPhase::CheckDisclosure => "check_disclosure",
            RoundTripPhase::SecurityCheck => "security_check",
            RoundTripPhase::MessageDisclosure => "message_disclosure",
            RoundTripPhase::Done => "done",
            RoundTripPhase::Aborted => "aborted",
        }
    }
}

struct Alice {
    home: Vec<ParticleHandle>,
    arrived: Vec<ParticleHandle>,
}

struct Bob {
    checking: Vec<usize>,
    message: Vec<usize>,
    checking_dibits: Vec<Dibit>,
    slot_dibits: Vec<Dibit>,
    /// Return position of each pair's travel particle.
    return_position: Vec<usize>,
}

impl Bob {
    fn entries(&self, pairs: &[usize]) -> Vec<OrderEntry> {
        pairs
            .iter()
            .map(|&pair| OrderEntry {
                position: self.return_position[pair],
                pair,
            })
            .collect()
    }
}

/// Alice measures each disclosed (home, returned) pair.
fn alice_measure<R: Rng + ?Sized>(
    trial: &mut Trial,
    alice: &Alice,
    entries: &[OrderEntry],
    rng: &mut R,
) -> Result<Vec<Dibit>, ProtocolError> {
    entries
        .iter()
        .map(|e| {
            trial.measure(
                alice.home[e.pair],
                alice.arrived[e.position],
                BellOutcome::PsiMinus,
                rng,
            )
        })
        .collect()
}

/// Bob sends `bob_message` to Alice on travel particles that make a round
/// trip and come back in Bob's secret order.
pub fn run_round_trip<R: Rng + ?Sized>(
    config: &ProtocolConfig,
    bob_message: &Message,
    rng: &mut R,
) -> Result<RunOutcome, ProtocolError> {
    config.validate(ProtocolKind::RoundTrip)?;
    check_capacity(config, bob_message)?;
    let n = config.n_pairs;
    let mut trial = Trial::new(config);
    let mut phase = PhaseTracker::<RoundTripPhase>::new();

    let (home, travel): (Vec<_>, Vec<_>) = (0..n).map(|_| trial.registry.make_epr()).unzip();
    let arrived_at_bob = trial.send(travel, Direction::Forward, Party::Alice, Party::Bob, rng)?;

    phase.advance(RoundTripPhase::Encode)?;
    let (checking, message) = select_checking_set(n, config.check_fraction, rng)?;
    let checking_dibits = random_dibits(checking.len(), rng);
    let slot_dibits = fill_slots(bob_message, message.len(), rng)?;
    for (&i, &d) in checking
        .iter()
        .zip(&checking_dibits)
        .chain(message.iter().zip(&slot_dibits))
    {
        trial.encode(arrived_at_bob[i], d)?;
    }

    phase.advance(RoundTripPhase::Return)?;
    let order = secret_order(n, config.permute, rng);
    let bob = Bob {
        checking,
        message,
        checking_dibits,
        slot_dibits,
        return_position: order.inverse().mapping().to_vec(),
    };
    let returned = order.apply(&arrived_at_bob)?;
    let arrived = trial.send(returned, Direction::Return, Party::Bob, Party::Alice, rng)?;
    let alice = Alice { home, arrived };

    phase.advance(RoundTripPhase::CheckDisclosure)?;
    trial.log.announce(
        Party::Bob,
        Payload::CheckingOrder {
            entries: bob.entries(&bob.checking),
        },
    );
    let disclosed = latest_order(&trial.log, false)?;
    let results = alice_measure(&mut trial, &alice, &disclosed, rng)?;
    trial
        .log
        .announce(Party::Alice, Payload::CheckingResults { dibits: results });

    phase.advance(RoundTripPhase::SecurityCheck)?;
    let reported = latest_dibits(&trial.log, Party::Alice, true)?;
    let verdict = check_security(&bob.checking_dibits, &reported, config.abort_threshold)?;
    trial.log.announce(
        Party::Bob,
        Payload::Verdict {
            error_rate: verdict.error_rate,
            abort: verdict.abort,
        },
    );

    let decoded = match verdict.clearance() {
        None => {
            phase.advance(RoundTripPhase::Aborted)?;
            None
        }
        Some(clearance) => {
            phase.advance(RoundTripPhase::MessageDisclosure)?;
            disclose_message_order(
                &mut trial.log,
                Party::Bob,
                bob.entries(&bob.message),
                &clearance,
            );
            trial.log.announce(
                Party::Bob,
                Payload::MessageLength {
                    bits: bob_message.len(),
                },
            );
            let entries = latest_order(&trial.log, true)?;
            let dibits = alice_measure(&mut trial, &alice, &entries, rng)?;
            let bits = latest_message_length(&trial.log, Party::Bob)?;
            phase.advance(RoundTripPhase::Done)?;
            Some(Message::from_dibits(&dibits, bits)?)
        }
    };

    let target = &bob.slot_dibits[..bob_message.dibit_len()];
    let (eve_guess, eve_correct) = trial.score_eve(Layout::Travel { pairs: n }, target, rng)?;
    debug_assert!(trial.registry.audit().is_ok());
    Ok(RunOutcome {
        protocol: ProtocolKind::RoundTrip,
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
        checks: checks_of(&bob.checking_dibits, &reported),
        eve_guess,
        transcript: trial.log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::NoiseModel;
    use crate::eve::AttackKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn honest_noiseless_run_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let config = ProtocolConfig::default();
        for len in [0, 1, 7, 96] {
            let msg = Message::random(len, &mut rng);
            let out = run_round_trip(&config, &msg, &mut rng).unwrap();
            assert!(!out.aborted);
            assert_eq!(out.checking_error_rate, 0.0);
            assert_eq!(out.decoded_message.as_ref(), Some(&msg));
            assert_eq!(out.counters.pairs_checked, 16);
            assert!(out.transcript.discloses_message_order());
        }
    }

    #[test]
    fn rejects_oversized_message_before_sending() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let config = ProtocolConfig::default();
        let msg = Message::random(97, &mut rng);
        assert_eq!(
            run_round_trip(&config, &msg, &mut rng),
            Err(ProtocolError::Capacity {
                bits: 97,
                capacity: 96
            })
        );
    }

    #[test]
    fn intercept_resend_is_caught_and_discloses_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let config = ProtocolConfig {
            attack: AttackKind::InterceptResendEpr,
            ..ProtocolConfig::default()
        };
        let msg = Message::random(96, &mut rng);
        let out = run_round_trip(&config, &msg, &mut rng).unwrap();
        assert!(out.aborted);
        assert!(out.decoded_message.is_none());
        assert!(!out.transcript.discloses_message_order());
        assert_eq!(out.counters.eve_interceptions, 128);
        assert_eq!(out.eve_guess.len(), 48);
    }

    #[test]
    fn unpermuted_round_trip_leaks_to_intercept_resend() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let config = ProtocolConfig {
            attack: AttackKind::InterceptResendEpr,
            permute: false,
            ..ProtocolConfig::default()
        };
        let msg = Message::random(96, &mut rng);
        let out = run_round_trip(&config, &msg, &mut rng).unwrap();
        assert!(!out.aborted);
        assert_eq!(out.decoded_message.as_ref(), Some(&msg));
        assert_eq!(out.eve_dibit_accuracy(), Some(1.0));
    }

    #[test]
    fn zero_probability_noise_is_harmless() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let config = ProtocolConfig {
            noise: NoiseModel::pauli(0.0).unwrap(),
            abort_threshold: 0.15,
            ..ProtocolConfig::default()
        };
        let msg = Message::random(40, &mut rng);
        let out = run_round_trip(&config, &msg, &mut rng).unwrap();
        assert_eq!(out.decoded_message, Some(msg));
    }
}
