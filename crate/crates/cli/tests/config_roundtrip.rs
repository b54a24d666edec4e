use std::path::PathBuf;

use proptest::prelude::*;
use sampling_recovery_cli::{CliError, ExperimentConfig, Mode, SystemChoice, WeightChoice};

fn config() -> impl Strategy<Value = ExperimentConfig> {
    (
        (
            prop_oneof![
                Just(Mode::RandomPoints),
                Just(Mode::Subsampled),
                Just(Mode::HatOracle),
                Just(Mode::Concentration)
            ],
            prop_oneof![Just(SystemChoice::FourierTorus), Just(SystemChoice::NormalizedHat)],
            prop_oneof![Just(WeightChoice::Power), Just(WeightChoice::Log)],
            prop::option::of(0.51..2.0f64),
            prop::collection::vec(1usize..512, 1..6),
        ),
        (
            0.1..5.0f64,
            any::<u64>(),
            1usize..100,
            prop::option::of("[a-z]{1,8}\\.txt"),
            any::<bool>(),
            -1.0..1.0f64,
        ),
    )
        .prop_map(|((mode, system, weights, delta, n_list), (alpha, seed, trials, summary, timing, beta))| {
            ExperimentConfig {
                mode,
                system,
                weights,
                delta,
                n_list,
                alpha,
                beta,
                seed,
                trials,
                summary: summary.map(PathBuf::from),
                timing,
                ..ExperimentConfig::default()
            }
        })
}

proptest! {
    #[test]
    fn serialize_then_parse_is_identity(c in config()) {
        let text = c.serialize();
        prop_assert_eq!(ExperimentConfig::parse(&text).unwrap(), c);
    }
}

#[test]
fn serialized_config_lists_every_key_once() {
    let text = ExperimentConfig::default().serialize();
    for key in ExperimentConfig::keys() {
        let hits = text.lines().filter(|l| l.split('=').next().unwrap().trim() == *key).count();
        assert_eq!(hits, 1, "{key}");
    }
}

#[test]
fn malformed_configs_are_rejected() {
    assert!(matches!(ExperimentConfig::parse("mode"), Err(CliError::Syntax { line: 1 })));
    assert!(matches!(ExperimentConfig::parse("colour = red"), Err(CliError::UnknownKey(_))));
    assert!(matches!(
        ExperimentConfig::parse("seed = 1\nseed = 2"),
        Err(CliError::DuplicateKey(_))
    ));
    assert!(matches!(ExperimentConfig::parse("trials = many"), Err(CliError::BadValue { .. })));
}
