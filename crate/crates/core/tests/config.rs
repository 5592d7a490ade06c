use std::path::Path;

use nlpme::config::{parse_config, parse_config_at, Experiment, InitialData};
use nlpme::error::Error;

const MINIMAL: &str = r#"experiment = "simulate"

[model]
m = 2.0
s = 0.5

[grid]
half_length = 4.0
n = 64

[time]
t_end = 1.0

[initial_data]
kind = "gaussian"
mass = 1.0
width = 0.5
"#;

#[test]
fn minimal_simulate_config_is_valid() {
    let cfg = parse_config(MINIMAL).unwrap();
    assert_eq!(cfg.experiment, Experiment::Simulate);
    assert_eq!((cfg.model.m, cfg.model.s), (2.0, 0.5));
    assert_eq!(cfg.alpha(), 0.5);
    assert!(matches!(cfg.initial_data, InitialData::Gaussian { .. }));
    assert_eq!(cfg.seed, 0);
    assert_eq!(cfg.source, MINIMAL);
}

#[test]
fn slow_diffusion_exponent_below_one_names_the_key_and_line() {
    let text = MINIMAL.replace("m = 2.0", "m = 0.5");
    match parse_config(&text) {
        Err(Error::Config { line, key, .. }) => {
            assert_eq!(key, "model.m");
            assert_eq!(line, 4);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn unknown_experiment_lists_valid_names() {
    let text = MINIMAL.replace("\"simulate\"", "\"simmulate\"");
    let msg = parse_config(&text).unwrap_err().to_string();
    for e in Experiment::ALL {
        assert!(msg.contains(e.name()), "{msg}");
    }
    assert!(msg.contains("line 1"));
}

#[test]
fn syntax_errors_carry_a_line() {
    let text = MINIMAL.replace("n = 64", "n = = 64");
    match parse_config(&text) {
        Err(Error::Syntax { line, .. }) => assert_eq!(line, 9),
        other => panic!("{other:?}"),
    }
}

#[test]
fn unknown_keys_are_rejected() {
    let text = MINIMAL.replace("n = 64", "n = 64\nspacing = 0.1");
    match parse_config(&text) {
        Err(Error::Config { key, line, .. }) => {
            assert!(key.contains("spacing"), "{key}");
            assert_eq!(line, 10);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn every_shipped_config_parses() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        parse_config_at(&text, Some(&dir)).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        count += 1;
    }
    assert!(count >= 10);
}
