use std::path::Path;
use std::sync::Arc;

use proptest::prelude::*;
use sitesim_core::config::*;
use sitesim_core::geometry::*;
use sitesim_core::sync::*;
use sitesim_core::task::*;
use sitesim_core::types::*;

fn bundle(name: &str) -> Arc<SessionBundle> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config");
    Arc::new(ConfigSet::load_dir(dir).unwrap().bundle(name).unwrap())
}

fn started(name: &str, seed: u64) -> Session {
    let mut s = Session::new("s1", bundle(name), seed);
    s.join(Role::Installer, None).unwrap();
    s.join(Role::Fetcher, None).unwrap();
    s
}

#[test]
fn create_is_lobby_and_seeded() {
    let b = bundle("main");
    let a = Session::new("a", b.clone(), 3);
    let c = Session::new("c", b.clone(), 3);
    let d = Session::new("d", b, 4);
    assert_eq!(a.phase(), Phase::Lobby);
    assert_ne!(a.id(), c.id());
    assert_eq!(a.snapshot().hash, c.snapshot().hash);
    assert_ne!(a.snapshot().hash, d.snapshot().hash);
}

#[test]
fn join_rules() {
    let mut s = Session::new("s", bundle("study"), 1);
    let w = s.join(Role::Installer, None).unwrap();
    assert_eq!(w.role, Role::Installer);
    assert_eq!(w.snapshot.phase, Phase::Lobby);
    assert!(w.briefing.is_none());
    assert_eq!(
        s.join(Role::Installer, None),
        Err(SessionError::RoleTaken(Role::Installer))
    );
    let w = s.join(Role::Fetcher, None).unwrap();
    assert_eq!(s.phase(), Phase::Training);
    assert_eq!(w.snapshot.world.tick, 0);
    let brief = w.briefing.unwrap();
    assert_eq!(brief.stage, StageKind::Training);
    assert_eq!(brief.view.role, Role::Fetcher);
    // The first joiner is briefed through the outbox.
    let out = s.drain_outbox();
    assert!(
        matches!(&out[..], [(Recipient::AllBut(Role::Fetcher), ServerMsg::Briefing(b))] if b.view.role == Role::Installer)
    );
    assert_eq!(s.join(Role::Fetcher, None), Err(SessionError::SessionFull));
}

#[test]
fn session_without_training_starts_in_main() {
    let s = started("main", 1);
    assert_eq!(s.phase(), Phase::Main);
}

#[test]
fn quiet_tick_is_empty_and_warning_rides_the_batch() {
    let mut s = started("main", 1);
    let first = s.tick().unwrap().unwrap();
    assert_eq!(first.batch_seq, 1);
    assert!(first.deltas.is_empty() && first.signals.is_empty() && first.outcomes.is_empty());
    let mut warnings = Vec::new();
    for _ in 0..110 {
        let b = s.tick().unwrap().unwrap();
        for sig in &b.signals {
            if let Signal::Warning { text } = sig {
                warnings.push((b.tick, text.clone()));
            }
        }
    }
    let b = bundle("main");
    let mut t = sitesim_core::events::Timeline::build(&b.stages[0].scenarios, &b.vehicles, 20);
    let expect: Vec<(u64, String)> = t
        .advance(111)
        .into_iter()
        .filter_map(|e| e.warning.map(|w| (e.fire_tick, w)))
        .collect();
    assert!(expect.contains(&(100, "Warning: A cargo is going to pass overhead.".to_string())));
    assert_eq!(warnings, expect);
}

#[test]
fn rejected_intent_is_an_outcome_without_state_change() {
    let mut s = started("main", 1);
    let mut idle = started("main", 1);
    s.submit(Role::Fetcher, 7, Intent::EnterLift).unwrap();
    let b = s.tick().unwrap().unwrap();
    let before = idle.tick().unwrap().unwrap().hash;
    assert_eq!(b.outcomes.len(), 1);
    assert_eq!(b.outcomes[0].result, "RoleViolationError");
    assert_eq!(b.outcomes[0].client_ref, 7);
    assert!(b.deltas.is_empty());
    assert_eq!(b.hash, before);
    let log = s.drain_log();
    assert!(matches!(&log[..], [sitesim_core::metrics::LogRecord::Action(a)] if a.outcome == "RoleViolationError"));
}

#[test]
fn grab_changes_hash() {
    let mut a = started("main", 1);
    let mut b = started("main", 1);
    let id = a.world().parts().next().unwrap().id;
    a.submit(Role::Installer, 1, Intent::Grab { entity: id }).unwrap();
    let ha = a.tick().unwrap().unwrap().hash;
    let hb = b.tick().unwrap().unwrap().hash;
    assert_ne!(ha, hb);
}

#[test]
fn mirror_detects_gaps_and_resyncs() {
    let mut s = started("main", 1);
    let mut m = Mirror::from_snapshot(s.snapshot());
    let b1 = s.tick().unwrap().unwrap();
    let _lost = s.tick().unwrap().unwrap();
    let b3 = s.tick().unwrap().unwrap();
    assert!(m.apply(&b1).unwrap());
    let before = m.clone();
    assert!(matches!(m.apply(&b3), Err(MirrorError::Gap { expected: 2, got: 3 })));
    assert_eq!(m, before);
    m.resync(s.snapshot());
    assert_eq!(m.batch_seq, 3);
    assert_eq!(m.hash(), b3.hash);
    assert!(!m.apply(&b1).unwrap());
}

#[test]
fn tampered_batch_is_rejected() {
    let mut s = started("main", 1);
    let mut m = Mirror::from_snapshot(s.snapshot());
    let id = s.world().parts().next().unwrap().id;
    s.submit(Role::Installer, 1, Intent::Grab { entity: id }).unwrap();
    let mut b = s.tick().unwrap().unwrap();
    b.deltas.clear();
    assert!(matches!(
        m.apply(&b),
        Err(MirrorError::HashMismatch { batch_seq: 1, .. })
    ));
}

#[test]
fn disconnect_pauses_then_resumes_with_token() {
    let mut s = Session::new("s", bundle("main"), 1);
    let token = s.join(Role::Installer, None).unwrap().resume_token;
    s.join(Role::Fetcher, None).unwrap();
    s.tick().unwrap().unwrap();
    s.drain_outbox();
    s.disconnect(Role::Installer);
    assert!(s.is_paused());
    assert!(matches!(
        &s.drain_outbox()[..],
        [(
            Recipient::AllBut(Role::Installer),
            ServerMsg::Paused {
                waiting_for: Role::Installer,
                timeout_s: 60
            }
        )]
    ));
    assert_eq!(s.tick().unwrap(), None);
    assert_eq!(
        s.join(Role::Installer, Some("nope")),
        Err(SessionError::BadToken(Role::Installer))
    );
    let w = s.join(Role::Installer, Some(&token)).unwrap();
    assert_eq!(w.snapshot.batch_seq, 1);
    assert!(w.briefing.is_some());
    assert!(!s.is_paused());
    assert_eq!(s.tick().unwrap().unwrap().batch_seq, 2);
}

#[test]
fn pause_times_out_into_abort() {
    let mut s = started("main", 1);
    s.disconnect(Role::Fetcher);
    let hz = s.tick_rate_hz() as u64;
    for _ in 0..PAUSE_TIMEOUT_S * hz - 1 {
        assert_eq!(s.tick().unwrap(), None);
        assert_eq!(s.phase(), Phase::Main);
    }
    s.tick().unwrap();
    assert_eq!(s.phase(), Phase::Aborted);
    assert!(s
        .drain_log()
        .iter()
        .any(|l| matches!(l, sitesim_core::metrics::LogRecord::Outcome(o) if o.session_outcome == "aborted")));
    assert_eq!(
        s.join(Role::Fetcher, None),
        Err(SessionError::NotJoinable(Phase::Aborted))
    );
}

#[test]
fn lobby_disconnect_frees_the_seat() {
    let mut s = Session::new("s", bundle("main"), 1);
    s.join(Role::Installer, None).unwrap();
    s.disconnect(Role::Installer);
    s.join(Role::Installer, None).unwrap();
    assert_eq!(
        s.submit(Role::Installer, 0, Intent::Release),
        Err(SessionError::NotRunning(Phase::Lobby))
    );
}

#[test]
fn envelope_carries_version() {
    let e = Envelope::new("s1", 4, 9, ClientMsg::Ping { nonce: 2 });
    let v = serde_json::to_value(&e).unwrap();
    assert_eq!(v["v"], PROTOCOL_VERSION);
    assert_eq!(v["body"]["type"], "ping");
    let back: ClientEnvelope = serde_json::from_value(v).unwrap();
    assert_eq!(back, e);
}

type Step = (bool, u8, u8, f64, f64);

fn arb_step() -> impl Strategy<Value = Step> {
    (any::<bool>(), 0u8..9, any::<u8>(), -30.0f64..30.0, -1.0f64..12.0)
}

fn decode(s: &Session, (installer, op, pick, a, b): Step) -> (Role, Intent) {
    let role = if installer { Role::Installer } else { Role::Fetcher };
    let ids: Vec<EntityId> = s.world().parts().map(|p| p.id).collect();
    let id = ids[pick as usize % ids.len()];
    let intent = match op {
        0 => Intent::Grab { entity: id },
        1 => Intent::Release,
        2 => Intent::MoveHeld {
            pose: WallPlane::site().embed(&Pose2::new(a.abs() % 25.0, b, 0.0)),
        },
        3 => Intent::OrderPipes {
            items: vec![OrderItem {
                kind: PipeKind::Gas,
                color: PipeColor::Yellow,
                diameter: Diameter::new(1 + (pick % 4) as i64).unwrap(),
                length: Length::from_units(b.abs() + 0.5).unwrap(),
                qty: 1 + (pick % 3) as u32,
            }],
        },
        4 => Intent::RobotDogJob {
            cuts: vec![CutRequest {
                pipe: id,
                length: Length::from_units(b.abs() + 0.1).unwrap(),
            }],
            connectors: vec![],
        },
        5 => Intent::EnterLift,
        6 => Intent::LiftControl {
            dir: [LiftDir::Up, LiftDir::Down, LiftDir::Left, LiftDir::Right][pick as usize % 4],
        },
        7 => Intent::MoveAvatar {
            position: Vec2::new(a, b),
        },
        _ => Intent::Chat {
            text: format!("seg {pick}"),
        },
    };
    (role, intent)
}

fn run(seed: u64, steps: &[Step]) -> (Session, Vec<DeltaBatch>) {
    let mut s = started("main", seed);
    let mut batches = Vec::new();
    for (i, st) in steps.iter().enumerate() {
        let (role, intent) = decode(&s, *st);
        s.submit(role, i as u64, intent).unwrap();
        // Idle ticks in between let vehicles and deliveries run.
        for _ in 0..(st.1 as usize % 3) * 10 + 1 {
            batches.push(s.tick().unwrap().unwrap());
        }
    }
    (s, batches)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn two_mirrors_converge_every_batch(seed in 0u64..1000, steps in prop::collection::vec(arb_step(), 1..40)) {
        let s0 = Session::new("x", bundle("main"), seed).snapshot();
        let (s, batches) = run(seed, &steps);
        let mut a = Mirror::from_snapshot(s0.clone());
        let mut b = Mirror::from_snapshot(s0);
        for batch in &batches {
            // Batches survive the wire.
            let wire: DeltaBatch = serde_json::from_str(&serde_json::to_string(batch).unwrap()).unwrap();
            prop_assert!(a.apply(batch).unwrap());
            prop_assert!(b.apply(&wire).unwrap());
            prop_assert_eq!(a.hash(), b.hash());
        }
        prop_assert_eq!(a.world, s.world().clone());
    }

    #[test]
    fn replay_reproduces_final_hash(seed in 0u64..1000, steps in prop::collection::vec(arb_step(), 0..30)) {
        let (s, batches) = run(seed, &steps);
        let r = replay(bundle("main"), seed, &batches).unwrap();
        prop_assert_eq!(r.snapshot().hash, s.snapshot().hash);
        prop_assert_eq!(r.batch_seq(), s.batch_seq());
    }
}

#[test]
fn replay_is_sensitive_and_empty_replay_is_initial() {
    let empty = replay(bundle("main"), 5, &[]).unwrap();
    assert_eq!(
        empty.snapshot().hash,
        Session::new("y", bundle("main"), 5).snapshot().hash
    );

    let mut s = started("main", 5);
    let id = s.world().parts().next().unwrap().id;
    s.submit(Role::Installer, 1, Intent::Grab { entity: id }).unwrap();
    let mut batches = vec![s.tick().unwrap().unwrap()];
    batches.push(s.tick().unwrap().unwrap());
    let full = replay(bundle("main"), 5, &batches).unwrap();
    assert_eq!(full.snapshot().hash, s.snapshot().hash);
    batches[0].outcomes.clear();
    let cut = replay(bundle("main"), 5, &batches).unwrap();
    assert_ne!(cut.snapshot().hash, s.snapshot().hash);
}
