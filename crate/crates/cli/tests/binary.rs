use std::fs;
use std::process::{Command, Output};

use qsdc::{parse_args, run_campaign};
use serde_json::Value;

fn qsdc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsdc"))
        .args(args)
        .output()
        .unwrap()
}

fn lines(out: &Output) -> Vec<Value> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn two_trials_give_three_json_lines() {
    let out = qsdc(&["--trials", "2", "--seed", "5"]);
    assert!(out.status.success());
    let v = lines(&out);
    assert_eq!(v.len(), 3);
    assert_eq!(v[0]["type"], "trial");
    assert_eq!(v[1]["type"], "trial");
    assert_eq!(v[2]["type"], "aggregate");
    assert_eq!(v[2]["seed"], 5);
}

#[test]
fn json_numbers_round_trip_exactly() {
    let argv = [
        "qsdc",
        "--trials",
        "20",
        "--seed",
        "6",
        "--noise-p",
        "0.07",
        "--threshold",
        "0.3",
    ];
    let summary = run_campaign(&parse_args(argv).unwrap()).unwrap();
    let v = lines(&qsdc(&argv[1..]));
    for (r, line) in summary.records.iter().zip(&v) {
        assert_eq!(line["error_rate"].as_f64().unwrap(), r.error_rate);
        assert_eq!(
            line["checked_pairs"].as_u64().unwrap() as usize,
            r.checked_pairs
        );
        assert_eq!(
            line["check_errors"].as_u64().unwrap() as usize,
            r.check_errors
        );
    }
    let agg = &v[20];
    assert_eq!(
        agg["mean_error_rate"].as_f64().unwrap(),
        summary.aggregate.mean_error_rate
    );
    assert_eq!(
        agg["stddev_error_rate"].as_f64().unwrap(),
        summary.aggregate.stddev_error_rate
    );
    assert_eq!(
        agg["abort_rate"].as_f64().unwrap(),
        summary.aggregate.abort_rate
    );
}

#[test]
fn csv_schema_and_footer() {
    let out = qsdc(&["--trials", "3", "--seed", "7", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rows = text.lines();
    let header: Vec<_> = rows.next().unwrap().split(',').collect();
    for col in [
        "trial",
        "aborted",
        "error_rate",
        "fidelity_exact",
        "eve_dibit_accuracy",
    ] {
        assert!(header.contains(&col), "missing column {col}");
    }
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 4);
    assert!(text.lines().any(|l| l == "# seed=7"));
    assert!(text.lines().any(|l| l == "# abort_rate=0"));
}

#[test]
fn same_seed_is_byte_identical() {
    for args in [
        &[
            "--protocol",
            "dialogue",
            "--attack",
            "entangle_measure",
            "--trials",
            "50",
            "--seed",
            "8",
        ][..],
        &[
            "--protocol",
            "one_way",
            "--noise-p",
            "0.05",
            "--threshold",
            "0.2",
            "--trials",
            "50",
            "--seed",
            "8",
            "--format",
            "csv",
        ],
    ] {
        let a = qsdc(args);
        let b = qsdc(args);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn omitted_seed_is_echoed() {
    let out = qsdc(&["--trials", "1"]);
    let v = lines(&out);
    let seed = v[1]["seed"].as_u64().unwrap();
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains(&format!("seed={seed}")));
    let again = qsdc(&["--trials", "1", "--seed", &seed.to_string()]);
    assert_eq!(lines(&again), v);
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        &["--check-fraction", "1.5"][..],
        &["--protocol", "teleport"],
        &["--pairs", "4", "--message-hex", "abcd"],
        &[
            "--protocol",
            "round_trip",
            "--attack",
            "intercept_bell_guess",
        ],
    ] {
        let out = qsdc(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn unwritable_output_fails_without_panicking() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("out.jsonl");
    let out = qsdc(&[
        "--trials",
        "1",
        "--seed",
        "1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn aborts_are_data_not_errors() {
    let out = qsdc(&[
        "--attack",
        "measure_resend_z",
        "--trials",
        "20",
        "--seed",
        "9",
    ]);
    assert!(out.status.success());
    assert_eq!(lines(&out)[20]["abort_rate"], 1.0);
}

#[test]
fn config_file_sits_under_explicit_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("campaign.conf");
    fs::write(
        &cfg,
        "# comment\nprotocol = one_way\npairs = 32\ntrials = 4\nseed = 10\nno-permutation = true\n",
    )
    .unwrap();
    let c = parse_args(["qsdc", "--config", cfg.to_str().unwrap(), "--pairs", "40"]).unwrap();
    assert_eq!(c.protocol, qsdc_core::ProtocolKind::OneWay);
    assert_eq!(c.config.n_pairs, 40);
    assert_eq!(c.trials, 4);
    assert_eq!(c.config.seed, 10);
    assert!(!c.config.permute);
    let out = qsdc(&["--config", cfg.to_str().unwrap()]);
    let v = lines(&out);
    assert_eq!(v.len(), 5);
    assert_eq!(v[4]["n_pairs"], 32);
}

#[test]
fn fixed_message_is_recovered() {
    let out = qsdc(&[
        "--protocol",
        "dialogue",
        "--message-hex",
        "c0ffee",
        "--trials",
        "5",
        "--seed",
        "11",
    ]);
    let v = lines(&out);
    assert!(v[..5]
        .iter()
        .all(|l| l["fidelity_exact"] == true && l["message_bits"] == 24));
}

#[test]
fn dumped_aborted_transcripts_hold_no_message_order() {
    let dir = tempfile::tempdir().unwrap();
    for (protocol, attack) in [
        ("round_trip", "intercept_resend_epr"),
        ("one_way", "intercept_bell_guess"),
        ("dialogue", "measure_resend_z"),
    ] {
        let sub = dir.path().join(protocol);
        let out = qsdc(&[
            "--protocol",
            protocol,
            "--attack",
            attack,
            "--trials",
            "30",
            "--seed",
            "12",
            "--dump-transcripts",
            sub.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        let files: Vec<_> = fs::read_dir(&sub).unwrap().collect();
        assert_eq!(files.len(), 30);
        for f in files {
            let text = fs::read_to_string(f.unwrap().path()).unwrap();
            let v: Value = serde_json::from_str(&text).unwrap();
            assert_eq!(v["aborted"], true);
            let kinds: Vec<_> = v["transcript"]
                .as_array()
                .unwrap()
                .iter()
                .map(|a| a["payload"]["kind"].clone())
                .collect();
            assert!(!kinds
                .iter()
                .any(|k| k == "message_order" || k == "message_matching"));
            assert!(kinds.iter().any(|k| k == "verdict"));
        }
    }
}

#[test]
fn honest_and_attacked_campaign_summaries() {
    let honest = run_campaign(
        &parse_args([
            "qsdc",
            "--protocol",
            "one_way",
            "--trials",
            "1000",
            "--seed",
            "13",
        ])
        .unwrap(),
    )
    .unwrap();
    assert_eq!(honest.aggregate.abort_rate, 0.0);
    assert_eq!(honest.aggregate.fidelity, Some(1.0));
    let attacked = run_campaign(
        &parse_args([
            "qsdc",
            "--attack",
            "intercept_resend_epr",
            "--threshold",
            "0.15",
            "--trials",
            "1000",
            "--seed",
            "14",
        ])
        .unwrap(),
    )
    .unwrap();
    assert!(attacked.aggregate.abort_rate >= 0.999);
    assert_eq!(attacked.aggregate.fidelity, None);
}
