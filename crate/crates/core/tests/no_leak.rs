mod common;

use common::{attack_matrix, attacked, rng, run_full};
use qsdc_core::AttackKind;

#[test]
fn aborted_runs_leave_eve_at_chance() {
    for (kind, attack) in attack_matrix() {
        let config = attacked(attack, 128);
        let (mut correct, mut dibits) = (0, 0);
        for t in 0.. {
            let out = run_full(kind, &config, &mut rng(41, t));
            if !out.aborted {
                continue;
            }
            assert!(!out.transcript.discloses_message_order());
            assert_eq!(out.eve_guess.len(), out.counters.message_dibits);
            correct += out.counters.eve_correct_dibits;
            dibits += out.counters.message_dibits;
            if dibits >= 10_000 {
                break;
            }
        }
        let accuracy = correct as f64 / dibits as f64;
        assert!(
            (accuracy - 0.25).abs() < 0.02,
            "{kind} {attack}: {accuracy}"
        );
    }
}

#[test]
fn order_disclosed_after_the_fact_does_not_help() {
    // Eve's Bell measurements happen in transit, before any disclosure.
    let config = qsdc_core::ProtocolConfig {
        abort_threshold: 1.0,
        ..attacked(AttackKind::InterceptResendEpr, 64)
    };
    let out = run_full(qsdc_core::ProtocolKind::RoundTrip, &config, &mut rng(42, 0));
    assert!(!out.aborted);
    assert!(out.transcript.discloses_message_order());
    assert!(out.eve_dibit_accuracy().unwrap() < 0.45);
}
