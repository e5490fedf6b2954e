#![allow(dead_code)]

use qsdc_core::protocols::run_protocol;
use qsdc_core::{AttackKind, Message, ProtocolConfig, ProtocolKind, RunOutcome};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One run with full-capacity random messages for both parties.
pub fn run_full(kind: ProtocolKind, config: &ProtocolConfig, rng: &mut ChaCha8Rng) -> RunOutcome {
    let bits = config.capacity_bits().unwrap();
    let alice = Message::random(bits, rng);
    let bob = Message::random(bits, rng);
    run_protocol(kind, config, &alice, &bob, rng).unwrap()
}

/// Pooled checking statistics `(errors, checked)` over `trials` runs.
pub fn pooled_errors(
    kind: ProtocolKind,
    config: &ProtocolConfig,
    trials: u64,
    seed: u64,
) -> (usize, usize) {
    (0..trials).fold((0, 0), |(e, c), t| {
        let out = run_full(kind, config, &mut rng(seed, t));
        (
            e + out.counters.check_errors,
            c + out.counters.pairs_checked,
        )
    })
}

pub fn attacked(attack: AttackKind, n_pairs: usize) -> ProtocolConfig {
    ProtocolConfig {
        n_pairs,
        attack,
        ..ProtocolConfig::default()
    }
}

/// Every supported (protocol, attack) combination with a live attack.
pub fn attack_matrix() -> Vec<(ProtocolKind, AttackKind)> {
    let mut out = Vec::new();
    for kind in ProtocolKind::ALL {
        for attack in AttackKind::ALL {
            if attack != AttackKind::None && kind.supports(attack) {
                out.push((kind, attack));
            }
        }
    }
    out
}
