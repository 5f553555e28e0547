use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use sitesim_core::config::*;
use sitesim_core::events::*;
use sitesim_core::geometry::{Pose2, Vec2};
use sitesim_core::task::*;
use sitesim_core::types::*;

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config")
}

fn corpus() -> ConfigSet {
    ConfigSet::load_dir(corpus_dir()).unwrap()
}

fn firing_order(set: &ConfigSet, session: &str) -> Vec<(u64, String, Condition, u32)> {
    let b = set.bundle(session).unwrap();
    let stage = b.stages.last().unwrap();
    let mut t = Timeline::build(&stage.scenarios, &b.vehicles, b.session.tick_rate_hz);
    t.advance(u64::MAX)
        .into_iter()
        .map(|e| (e.fire_tick, e.vehicle, e.condition, e.event_id))
        .collect()
}

#[test]
fn main_scenario_fires_ten_in_time_then_file_order() {
    let set = corpus();
    let order = firing_order(&set, "main");
    assert_eq!(order.len(), 10);
    // Oracle: stable sort of (time, index) over the raw file.
    let mut raw: Vec<(usize, &ScenarioEntry)> = set.scenarios["main"].events.iter().enumerate().collect();
    raw.sort_by(|a, b| a.1.time.partial_cmp(&b.1.time).unwrap().then(a.0.cmp(&b.0)));
    let expect: Vec<_> = raw
        .iter()
        .map(|(_, e)| ((e.time * 20.0).round() as u64, e.vehicle.clone(), e.condition, e.id))
        .collect();
    assert_eq!(order, expect);
    // Equal-time pair keeps file order (Crane before Excavator at 2.0 s).
    assert_eq!(order[1].1, "Crane");
    assert_eq!(order[2].1, "Excavator");
}

#[test]
fn firing_order_ignores_directory_listing_order() {
    let baseline = firing_order(&corpus(), "hazards");
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    for _ in 0..3 {
        let dir = tempfile::tempdir().unwrap();
        for sub in fs::read_dir(corpus_dir()).unwrap() {
            let sub = sub.unwrap().path();
            let name = sub.file_name().unwrap().to_owned();
            fs::create_dir_all(dir.path().join(&name)).unwrap();
            let mut files: Vec<PathBuf> = fs::read_dir(&sub).unwrap().map(|e| e.unwrap().path()).collect();
            files.shuffle(&mut rng);
            for f in files {
                fs::copy(&f, dir.path().join(&name).join(f.file_name().unwrap())).unwrap();
            }
        }
        let set = ConfigSet::load_dir(dir.path()).unwrap();
        assert_eq!(firing_order(&set, "hazards"), baseline);
    }
}

proptest! {
    #[test]
    fn timeline_is_stable_sort(times in prop::collection::vec(0u32..40, 0..30), cut in 0u64..900) {
        let scenario = ScenarioConfig {
            name: "p".into(),
            desc: None,
            events: times.iter().enumerate().map(|(i, &t)| ScenarioEntry {
                time: t as f64 * 0.5,
                vehicle: "Crane".into(),
                condition: Condition::Normal,
                id: i as u32,
            }).collect(),
        };
        let mut t = Timeline::build(std::slice::from_ref(&scenario), &[], 20);
        let first: Vec<u32> = t.advance(cut).iter().map(|e| e.event_id).collect();
        let rest: Vec<u32> = t.advance(u64::MAX).iter().map(|e| e.event_id).collect();
        let mut oracle: Vec<(u64, u32)> = times.iter().enumerate().map(|(i, &t)| (t as u64 * 10, i as u32)).collect();
        oracle.sort();
        let expect_first: Vec<u32> = oracle.iter().filter(|(t, _)| *t <= cut).map(|(_, i)| *i).collect();
        let expect_rest: Vec<u32> = oracle.iter().filter(|(t, _)| *t > cut).map(|(_, i)| *i).collect();
        prop_assert_eq!(first, expect_first);
        prop_assert_eq!(rest, expect_rest);
    }

    #[test]
    fn n_small_steps_equal_one_big_step(
        pts in prop::collection::vec((-20.0f64..20.0, -20.0f64..20.0), 2..6),
        speed in 0.1f64..5.0,
        n in 1usize..50,
        dt in 0.001f64..0.05,
    ) {
        let script = BehaviorScript {
            id: "Truck_normals_1".into(),
            vehicle: "Truck".into(),
            speed,
            path: pts.iter().map(|&(x, y)| Vec2::new(x, y)).collect(),
            overhead_load: false,
            ground: true,
        };
        let total: f64 = script.path.windows(2).map(|w| w[0].distance(w[1])).sum();
        prop_assume!(speed * dt * n as f64 <= total - 1e-6);
        let mut a = VehicleState::parked("Truck", [0.0, 0.0, 0.0], [1.0, 1.0]);
        a.start_script(&script);
        let mut b = a.clone();
        for _ in 0..n {
            a.step(dt);
        }
        b.step(dt * n as f64);
        prop_assert!(a.position().distance(b.position()) <= 1e-9);
        prop_assert!(a.is_moving() && b.is_moving());
    }
}

#[test]
fn corner_carries_remaining_distance() {
    let script = BehaviorScript {
        id: "Truck_normals_1".into(),
        vehicle: "Truck".into(),
        speed: 1.0,
        path: vec![Vec2::new(0.0, 0.0), Vec2::new(3.0, 0.0), Vec2::new(3.0, 4.0)],
        overhead_load: false,
        ground: true,
    };
    let mut v = VehicleState::parked("Truck", [0.0, 0.0, 0.0], [1.0, 1.0]);
    v.start_script(&script);
    v.step(5.0);
    // Oracle: arc length 5 lands 2 units up the second leg.
    let s = 5.0;
    let oracle = if s <= 3.0 {
        Vec2::new(s, 0.0)
    } else {
        Vec2::new(3.0, s - 3.0)
    };
    assert!(v.position().distance(oracle) < 1e-12);
    assert!((v.pose.theta - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
}

fn main_world(seed: u64) -> (SessionBundle, WorldState) {
    let b = corpus().bundle("main").unwrap();
    let w = WorldState::new(&b.stages[0], &b.behaviors, seed);
    (b, w)
}

fn event(vehicle: &str, condition: Condition, id: u32, b: &SessionBundle) -> TriggeredEvent {
    TriggeredEvent {
        fire_tick: 0,
        vehicle: vehicle.into(),
        condition,
        event_id: id,
        warning: b
            .vehicle(vehicle)
            .unwrap()
            .event(condition, id)
            .unwrap()
            .warning
            .clone(),
    }
}

#[test]
fn crane_events_assign_paths_and_warn() {
    let (b, mut w) = main_world(1);
    let (signals, _) = fire(&event("Crane", Condition::Accident, 1, &b), &mut w, &b.registry).unwrap();
    assert_eq!(
        signals,
        vec![Signal::Warning {
            text: "Warning: A cargo is going to pass overhead.".into()
        }]
    );
    let crane = w.vehicles().find(|v| v.name == "Crane").unwrap();
    assert_eq!(crane.active_script.as_deref(), Some("Crane_accidents_1"));
    assert!(crane.overhead_load);

    let (signals, _) = fire(&event("Crane", Condition::Normal, 2, &b), &mut w, &b.registry).unwrap();
    assert!(signals.is_empty());
    assert_eq!(w.meta.events_fired, 2);
}

#[test]
fn unbound_handler_is_an_error() {
    let (b, mut w) = main_world(1);
    let ev = event("Crane", Condition::Normal, 1, &b);
    let err = fire(&ev, &mut w, &HandlerRegistry::new()).unwrap_err();
    assert!(matches!(err, ConfigError::UnboundHandler { .. }));
}

#[test]
fn no_signal_without_warning_field() {
    let set = corpus();
    let b = set.bundle("hazards").unwrap();
    let mut w = WorldState::new(&b.stages[0], &b.behaviors, 3);
    let mut t = Timeline::build(&b.stages[0].scenarios, &b.vehicles, 20);
    for ev in t.advance(u64::MAX) {
        let (signals, _) = fire(&ev, &mut w, &b.registry).unwrap();
        assert_eq!(signals.is_empty(), ev.warning.is_none());
    }
}

fn loose_pipe(w: &mut WorldState, at: Vec2, status: PartStatus) -> EntityId {
    let id = w.alloc_id();
    let mut p = Part::new_pipe(
        id,
        PipeKind::Gas,
        PipeColor::Green,
        Diameter::new(1).unwrap(),
        Length::from_units(2.0).unwrap(),
    );
    p.ground = at;
    p.status = status;
    if status == PartStatus::Fixed {
        p.wall_pose = Some(Pose2::new(5.0, 1.0, 0.0));
    }
    w.entities.insert(id, Entity::Part(p));
    id
}

fn run_forklift(seed: u64) -> (WorldState, Vec<Note>, [EntityId; 3]) {
    let (b, mut w) = main_world(seed);
    w.entities.retain(|_, e| !matches!(e, Entity::Part(_)));
    let a = loose_pipe(&mut w, Vec2::new(-15.0, 6.5), PartStatus::Storage);
    let c = loose_pipe(&mut w, Vec2::new(-8.0, 6.4), PartStatus::Storage);
    let fixed = loose_pipe(&mut w, Vec2::new(-12.0, 6.5), PartStatus::Fixed);
    fire(&event("Forklift", Condition::Accident, 1, &b), &mut w, &b.registry).unwrap();
    let mut notes = Vec::new();
    for _ in 0..2000 {
        notes.extend(step_vehicles(&mut w, 0.05, 3.0));
    }
    (w, notes, [a, c, fixed])
}

#[test]
fn forklift_scatters_loose_pipes_only() {
    let (w, notes, [a, c, fixed]) = run_forklift(17);
    let moved: Vec<EntityId> = notes
        .iter()
        .filter_map(|n| match n {
            Note::PipeDisplaced { part, .. } => Some(*part),
            _ => None,
        })
        .collect();
    assert!(moved.contains(&a) && moved.contains(&c), "{notes:?}");
    assert!(!moved.contains(&fixed));
    assert_eq!(w.part(fixed).unwrap().ground, Vec2::new(-12.0, 6.5));
    for n in &notes {
        let Note::PipeDisplaced {
            part,
            from,
            to,
            vehicle,
        } = n
        else {
            continue;
        };
        assert_eq!(vehicle, "Forklift");
        assert!(from.distance(*to) <= 3.0 + 1e-9, "{from:?} -> {to:?}");
        let p = w.part(*part).unwrap();
        // Final spots overlap no other loose part.
        for q in w.parts().filter(|q| q.id != p.id && q.status.on_ground()) {
            let overlap = (p.ground.x - q.ground.x).abs() < p.footprint()[0] + q.footprint()[0]
                && (p.ground.y - q.ground.y).abs() < p.footprint()[1] + q.footprint()[1];
            assert!(!overlap);
        }
    }
    let forklift = w.vehicles().find(|v| v.name == "Forklift").unwrap();
    assert!(!forklift.is_moving());
}

#[test]
fn scatter_is_seed_deterministic() {
    let (w1, n1, _) = run_forklift(4);
    let (w2, n2, _) = run_forklift(4);
    assert_eq!(n1, n2);
    assert_eq!(w1, w2);
}

#[test]
fn main_timeline_runs_fast_at_twenty_hertz() {
    let start = Instant::now();
    let (b, mut w) = main_world(2);
    let mut t = Timeline::build(&b.stages[0].scenarios, &b.vehicles, 20);
    let mut fired = 0;
    for tick in 1..=20 * 60 {
        w.tick = tick;
        for ev in t.advance(tick) {
            fire(&ev, &mut w, &b.registry).unwrap();
            fired += 1;
        }
        step_vehicles(&mut w, 0.05, 3.0);
    }
    assert_eq!(fired, t.len());
    assert_eq!(w.meta.events_fired as usize, t.len());
    assert!(start.elapsed().as_secs_f64() < 5.0);
}
