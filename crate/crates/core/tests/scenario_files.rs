use fracgame::scenarios::{load_scenario, parse_scenario, preset_source, ScenarioError, PRESET_NAMES};

#[test]
fn file_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    for name in PRESET_NAMES {
        let original = load_scenario(name).unwrap();
        let path = dir.path().join(format!("{name}.toml"));
        std::fs::write(&path, original.scenario.to_toml()).unwrap();
        let reloaded = load_scenario(path.to_str().unwrap()).unwrap();
        assert_eq!(original.scenario, reloaded.scenario, "{name}");
        // a second pass is a fixed point of the serializer
        assert_eq!(reloaded.scenario.to_toml(), original.scenario.to_toml());
    }
}

#[test]
fn loaded_bytes_are_the_source() {
    let loaded = load_scenario("heterogeneous-paper").unwrap();
    assert_eq!(loaded.source, preset_source("heterogeneous-paper").unwrap().as_bytes());
}

#[test]
fn off_simplex_initial_strategy_in_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let text = preset_source("heterogeneous-paper").unwrap().replacen(
        "coverage = [\"U1\", \"M1\"]",
        "coverage = [\"U1\", \"M1\"]\ninitial = [0.5, 0.4]",
        1,
    );
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, text).unwrap();
    match load_scenario(path.to_str().unwrap()) {
        Err(ScenarioError::Invalid(msg)) => assert!(msg.contains("N1") && msg.contains("0.9"), "{msg}"),
        other => panic!("expected a validation error, got {other:?}"),
    }
}

#[test]
fn homogeneous_scenario_needs_one_bs_per_kind() {
    let text = preset_source("homogeneous-paper").unwrap().replace("kind = \"uav\"", "kind = \"mmwave\"");
    // the UAV table does not fit the mmWave schema
    assert!(matches!(parse_scenario(&text), Err(ScenarioError::Schema(_))));
    let text = preset_source("homogeneous-paper").unwrap().replace("group_size = 10", "group_size = 0");
    assert!(matches!(parse_scenario(&text), Err(ScenarioError::Invalid(_))));
}

#[test]
fn unknown_fields_are_schema_errors() {
    let text = preset_source("homogeneous-paper").unwrap().replace("beta = 1.0", "beta = 1.0\ngamma = 3");
    let err = parse_scenario(&text).unwrap_err();
    assert!(matches!(err, ScenarioError::Schema(_)), "{err}");
    assert!(err.to_string().contains("gamma"), "{err}");
}
