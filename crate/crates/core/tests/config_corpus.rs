use std::fs;
use std::path::{Path, PathBuf};

use sitesim_core::config::*;

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config")
}

fn files(sub: &str) -> Vec<PathBuf> {
    let mut v: Vec<_> = fs::read_dir(corpus().join(sub))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    v.sort();
    v
}

#[test]
fn shipped_directory_validates() {
    let set = ConfigSet::load_dir(corpus()).unwrap();
    assert_eq!(set.vehicles.len(), 6);
    assert!(set.sessions.contains_key("main"));
    assert!(set.ssq.is_some() && set.ipq.is_some());
    for name in set.sessions.keys() {
        set.bundle(name).unwrap();
    }
}

#[test]
fn every_scenario_event_has_a_handler() {
    let set = ConfigSet::load_dir(corpus()).unwrap();
    for s in set.scenarios.values() {
        for e in &s.events {
            resolve_handler(&e.vehicle, e.condition, e.id, &set.registry).unwrap();
        }
    }
}

#[test]
fn corpus_files_round_trip() {
    let set = ConfigSet::load_dir(corpus()).unwrap();
    for p in files("vehicles") {
        let v = load_vehicle_config(&fs::read_to_string(&p).unwrap()).unwrap();
        let again = load_vehicle_config(&serde_yaml::to_string(&v).unwrap()).unwrap();
        assert_eq!(v, again, "{}", p.display());
    }
    for p in files("scenarios") {
        let s = load_scenario(&fs::read_to_string(&p).unwrap(), &set.vehicles).unwrap();
        let again = load_scenario(&serde_yaml::to_string(&s).unwrap(), &set.vehicles).unwrap();
        assert_eq!(s, again, "{}", p.display());
    }
    for p in files("tasks") {
        let t = load_task(&fs::read_to_string(&p).unwrap()).unwrap();
        assert_eq!(t, load_task(&serde_yaml::to_string(&t).unwrap()).unwrap());
    }
    for p in files("sessions") {
        let s = load_session(&fs::read_to_string(&p).unwrap()).unwrap();
        assert_eq!(s, load_session(&serde_yaml::to_string(&s).unwrap()).unwrap());
    }
    for p in files("layouts") {
        let l = load_layout(&fs::read_to_string(&p).unwrap()).unwrap();
        assert_eq!(l, load_layout(&serde_yaml::to_string(&l).unwrap()).unwrap());
    }
    for p in files("menus") {
        let m = load_menu(&fs::read_to_string(&p).unwrap()).unwrap();
        assert_eq!(m, load_menu(&serde_yaml::to_string(&m).unwrap()).unwrap());
    }
    for p in files("behaviors") {
        let b = load_behaviors(&fs::read_to_string(&p).unwrap()).unwrap();
        assert_eq!(b, load_behaviors(&serde_yaml::to_string(&b).unwrap()).unwrap());
    }
}

#[test]
fn condition_mismatch_detected_by_partition_check() {
    let text = fs::read_to_string(corpus().join("vehicles/crane.yaml")).unwrap();
    // Flip the second normal event to Accident.
    let idx = text.match_indices("condition: \"Normal\"").nth(1).unwrap().0;
    let mut edited = text.clone();
    edited.replace_range(idx..idx + "condition: \"Normal\"".len(), "condition: \"Accident\"");
    // Oracle: re-check each entry's condition against its partition name.
    let raw: serde_yaml::Value = serde_yaml::from_str(&edited).unwrap();
    let oracle_mismatch = ["normals", "accidents"].iter().any(|part| {
        let want = if *part == "normals" { "Normal" } else { "Accident" };
        raw["events"][*part]
            .as_sequence()
            .unwrap()
            .iter()
            .any(|e| e["condition"].as_str() != Some(want))
    });
    assert!(oracle_mismatch);
    assert!(matches!(
        load_vehicle_config(&edited),
        Err(ConfigError::ConditionMismatch { index: 1, .. })
    ));
}

#[test]
fn errors_name_the_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    for sub in [
        "vehicles",
        "behaviors",
        "scenarios",
        "menus",
        "layouts",
        "tasks",
        "sessions",
    ] {
        fs::create_dir_all(dir.path().join(sub)).unwrap();
        for p in files(sub) {
            fs::copy(&p, dir.path().join(sub).join(p.file_name().unwrap())).unwrap();
        }
    }
    let bad = dir.path().join("tasks/main.yaml");
    let text = fs::read_to_string(&bad).unwrap();
    fs::write(
        &bad,
        text.replace("menu: \"pipe_installation\"", "menu: \"pipe_installation\"\nbogus: 1"),
    )
    .unwrap();
    let err = ConfigSet::load_dir(dir.path()).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("tasks/main.yaml"), "{msg}");
    assert!(err.line().is_some(), "{msg}");

    fs::write(&bad, text).unwrap();
    let scen = dir.path().join("scenarios/main.yaml");
    let s = fs::read_to_string(&scen).unwrap();
    fs::write(&scen, s.replacen("id: 1", "id: 99", 1)).unwrap();
    let err = ConfigSet::load_dir(dir.path()).unwrap_err();
    assert!(matches!(err.root(), ConfigError::UnknownEvent { id: 99, .. }));
    assert!(err.to_string().contains("scenarios/main.yaml"));
}

#[test]
fn session_rule_overrides_apply_and_reject_typos() {
    let set = ConfigSet::load_dir(corpus()).unwrap();
    let b = set.bundle("hazards").unwrap();
    assert_eq!(b.stages[0].task.rules.snap_tol_deg, 4.0);
    assert_eq!(b.stages[0].task.rules.clamp_tol, 0.25);
    let mut m = serde_yaml::Mapping::new();
    m.insert("snap_tol".into(), 3.0.into());
    assert!(merge_rules(&TaskRules::default(), &m).is_err());
}

#[test]
fn study_session_has_training_then_main() {
    let set = ConfigSet::load_dir(corpus()).unwrap();
    let b = set.bundle("study").unwrap();
    let kinds: Vec<_> = b.stages.iter().map(|s| s.kind).collect();
    assert_eq!(kinds, [StageKind::Training, StageKind::Main]);
    assert_eq!(set.bundle("main").unwrap().stages.len(), 1);
}
