use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use sitesim_bots::{run_installer_alone, run_pair, BotScript, HarnessOptions, LatencyProfile, Policy, Transcript};
use sitesim_core::config::{ConfigSet, Orientation, TargetLayout, TaskConfig};
use sitesim_core::sync::{replay, DeltaBatch, Phase, Session};
use sitesim_core::task::{check_completion, Note, PartKind, PartStatus, WorldState};
use sitesim_core::types::{EntityId, Role};
use sitesim_server::{start, RunningServer, ServerOptions};

/// Fast enough for training runs; main runs slow down so the ten events (up to 9 s) land mid-run.
const HZ: u32 = 100;
const MAIN_HZ: u32 = 50;

fn configs() -> ConfigSet {
    ConfigSet::load_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config")).unwrap()
}

async fn server(configs: &ConfigSet) -> RunningServer {
    server_at(configs, HZ).await
}

async fn server_at(configs: &ConfigSet, hz: u32) -> RunningServer {
    let mut opts = ServerOptions::new(configs.clone(), "main");
    opts.tick_rate_hz = Some(hz);
    start("127.0.0.1:0", opts).await.unwrap()
}

fn canonical() -> (BotScript, BotScript) {
    (
        BotScript::new(Role::Installer, Policy::Canonical),
        BotScript::new(Role::Fetcher, Policy::Canonical),
    )
}

async fn play(srv: &RunningServer, config: &str, seed: u64, opts: HarnessOptions) -> Transcript {
    let (i, f) = canonical();
    run_pair(&srv.addr.to_string(), config, seed, i, f, opts).await.unwrap()
}

fn assert_completed(t: &Transcript) {
    let f = &t.footer;
    assert_eq!(f.error, None);
    assert_eq!(f.phase, Phase::Complete);
    assert!(f.completion.as_ref().is_some_and(|c| c.complete), "{:?}", f.completion);
    for (role, h) in &f.mirror_hashes {
        assert_eq!(Some(*h), f.final_hash, "{role} mirror diverged");
    }
    for s in f.stats.values() {
        assert!(!s.errors.contains_key("RoleViolationError"));
    }
}

fn rejected_codes(t: &Transcript) -> BTreeSet<String> {
    t.batches()
        .iter()
        .flat_map(|b| b.outcomes.iter())
        .filter(|o| !o.is_ok())
        .map(|o| o.result.clone())
        .collect()
}

fn session_of(configs: &ConfigSet, t: &Transcript, batches: &[DeltaBatch]) -> Session {
    let mut bundle = configs.bundle(&t.header.config).unwrap();
    bundle.session.tick_rate_hz = t.header.tick_rate_hz;
    replay(Arc::new(bundle), t.header.seed, batches).unwrap()
}

/// Exhaustive search over every attribute-compatible assignment of fixed wall pipes to slots.
fn brute_force_complete(world: &WorldState, layout: &TargetLayout, task: &TaskConfig) -> bool {
    let tol = task.rules.length_tol;
    let mut linked = BTreeSet::new();
    for c in world.parts().filter(|p| !p.is_pipe() && p.status == PartStatus::Fixed) {
        if let [Some(a), Some(b)] = c.joined {
            linked.insert((a.part, b.part));
            linked.insert((b.part, a.part));
        }
    }
    let fits = |slot: u32, id: EntityId| {
        let p = world.part(id).unwrap();
        let seg = task.segment(slot).unwrap();
        let want = layout.slot(slot).unwrap().orientation;
        let PartKind::Pipe { kind, color, length } = p.spec else {
            return false;
        };
        let theta = p.wall_pose.unwrap().theta;
        let horizontal = theta.sin().abs() < 1e-6;
        let vertical = theta.cos().abs() < 1e-6;
        kind == seg.kind
            && color == seg.color
            && p.diameter == seg.size
            && (length.units() - seg.length.units()).abs() <= tol + 1e-9
            && p.status == PartStatus::Fixed
            && match want {
                Orientation::Horizontal => horizontal,
                Orientation::Vertical => vertical,
            }
    };
    let pipes: Vec<EntityId> = world
        .parts()
        .filter(|p| p.is_pipe() && p.wall_pose.is_some())
        .map(|p| p.id)
        .collect();
    let slots: Vec<u32> = layout.slots.iter().map(|s| s.index).collect();

    fn go(
        i: usize,
        slots: &[u32],
        pipes: &[EntityId],
        pick: &mut BTreeMap<u32, EntityId>,
        ok: &dyn Fn(&BTreeMap<u32, EntityId>) -> bool,
        fits: &dyn Fn(u32, EntityId) -> bool,
    ) -> bool {
        if i == slots.len() {
            return ok(pick);
        }
        for &p in pipes {
            if pick.values().any(|&q| q == p) || !fits(slots[i], p) {
                continue;
            }
            pick.insert(slots[i], p);
            if go(i + 1, slots, pipes, pick, ok, fits) {
                return true;
            }
            pick.remove(&slots[i]);
        }
        false
    }
    let edges = layout.edges();
    let ok = |pick: &BTreeMap<u32, EntityId>| edges.iter().all(|(a, b)| linked.contains(&(pick[a], pick[b])));
    go(0, &slots, &pipes, &mut BTreeMap::new(), &ok, &fits)
}

#[tokio::test(flavor = "multi_thread")]
async fn canonical_pair_completes_training_and_main() {
    let configs = configs();
    let srv = server_at(&configs, MAIN_HZ).await;
    for (config, events) in [("training", None), ("main", Some(10))] {
        let t = play(&srv, config, 42, HarnessOptions::default()).await;
        assert_completed(&t);
        assert!(!rejected_codes(&t).contains("RoleViolationError"));
        let batches = t.batches();
        let fired: Vec<u64> = batches
            .iter()
            .filter(|b| b.notes.iter().any(|n| matches!(n, Note::EventFired { .. })))
            .map(|b| b.batch_seq)
            .collect();
        let n_fired: usize = batches
            .iter()
            .map(|b| b.notes.iter().filter(|n| matches!(n, Note::EventFired { .. })).count())
            .sum();
        if let Some(n) = events {
            assert_eq!(n_fired, n);
            assert!(
                fired.last().unwrap() < &t.footer.final_batch_seq,
                "events fired after completion"
            );
        }

        let s = session_of(&configs, &t, &batches);
        let stage = s.stage();
        let server_view = check_completion(s.world(), &stage.layout, &stage.task);
        assert!(server_view.complete);
        assert_eq!(
            brute_force_complete(s.world(), &stage.layout, &stage.task),
            server_view.complete
        );
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn batch_fetcher_completes_training() {
    let configs = configs();
    let srv = server(&configs).await;
    let t = run_pair(
        &srv.addr.to_string(),
        "training",
        5,
        BotScript::new(Role::Installer, Policy::Canonical),
        BotScript::new(Role::Fetcher, Policy::Batch),
        HarnessOptions::default(),
    )
    .await
    .unwrap();
    assert_completed(&t);
}

#[tokio::test(flavor = "multi_thread")]
async fn study_session_runs_training_then_main() {
    let configs = configs();
    let srv = server_at(&configs, MAIN_HZ).await;
    let t = play(&srv, "study", 3, HarnessOptions::default()).await;
    assert_completed(&t);
    let batches = t.batches();
    assert!(batches.iter().any(|b| b.phase == Phase::Training));
    assert!(batches.iter().any(|b| b.phase == Phase::Main));
    t.verify(&configs).unwrap();
}

#[tokio::test(flavor = "multi_thread")]
async fn installer_alone_times_out() {
    let configs = configs();
    let srv = server(&configs).await;
    let opts = HarnessOptions {
        budget: Duration::from_secs(2),
        ..HarnessOptions::default()
    };
    let t = run_installer_alone(&srv.addr.to_string(), "training", 1, opts)
        .await
        .unwrap();
    assert_eq!(t.footer.error_code.as_deref(), Some("TimeoutError"));
    assert!(t.footer.phase.is_running());
    assert!(t.footer.completion.is_none());
}

#[tokio::test(flavor = "multi_thread")]
async fn replay_reproduces_recorded_hash() {
    let configs = configs();
    let srv = server(&configs).await;
    let opts = HarnessOptions::default();
    let (a, b, c) = tokio::join!(
        play(&srv, "training", 1, opts),
        play(&srv, "training", 2, opts),
        play(&srv, "training", 3, opts),
    );
    for t in [a, b, c] {
        assert_completed(&t);
        let text = t.to_jsonl();
        let back = Transcript::from_jsonl(&text).unwrap();
        assert_eq!(back.verify(&configs).unwrap(), t.footer.final_hash.unwrap());

        // Dropping one accepted grab changes the outcome.
        let mut batches = t.batches();
        let b = batches
            .iter_mut()
            .find(|b| {
                b.outcomes
                    .iter()
                    .any(|o| o.is_ok() && o.intent.kind().as_str() == "grab")
            })
            .unwrap();
        let i = b
            .outcomes
            .iter()
            .position(|o| o.is_ok() && o.intent.kind().as_str() == "grab")
            .unwrap();
        b.outcomes.remove(i);
        let s = session_of(&configs, &t, &batches);
        assert_ne!(s.snapshot().hash, t.footer.final_hash.unwrap());
    }

    let t = play(&srv, "training", 9, HarnessOptions::default()).await;
    let mut empty = t.clone();
    empty.wire.clear();
    let mut bundle = configs.bundle("training").unwrap();
    bundle.session.tick_rate_hz = t.header.tick_rate_hz;
    let initial = Session::new("x", Arc::new(bundle), 9).snapshot().hash;
    assert_eq!(empty.replay_hash(&configs).unwrap(), initial);
}

#[tokio::test(flavor = "multi_thread")]
async fn tampered_transcript_fails_verification() {
    let configs = configs();
    let srv = server(&configs).await;
    let mut t = play(&srv, "training", 4, HarnessOptions::default()).await;
    let recorded = t.footer.final_hash.unwrap();
    t.header.seed += 1;
    let err = t.verify(&configs).unwrap_err();
    assert_eq!(err.code(), "HashMismatchError");
    t.header.seed -= 1;
    assert_eq!(t.verify(&configs).unwrap(), recorded);
}

#[tokio::test(flavor = "multi_thread")]
async fn latency_profiles_keep_clients_converged() {
    let configs = configs();
    let srv = server(&configs).await;
    let profiled = |latency, seed| HarnessOptions {
        latency,
        latency_seed: seed,
        ..HarnessOptions::default()
    };
    let (fixed, jitter) = tokio::join!(
        play(&srv, "training", 11, profiled(LatencyProfile::Fixed { ms: 100 }, 11)),
        play(&srv, "training", 12, profiled(LatencyProfile::Jitter { ms: 250 }, 12)),
    );
    for t in [fixed, jitter] {
        assert_completed(&t);
        for s in t.footer.stats.values() {
            assert_eq!(s.envelope_seq_gaps, 0);
            assert_eq!(s.batch_seq_gaps, 0);
            assert_eq!(s.resyncs, 0);
        }
        t.verify(&configs).unwrap();
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn dropped_batches_recover_through_resync() {
    let configs = configs();
    let srv = server(&configs).await;
    let opts = HarnessOptions {
        corrupt_every: Some(7),
        ..HarnessOptions::default()
    };
    let t = play(&srv, "training", 8, opts).await;
    assert_completed(&t);
    assert!(t.footer.stats.values().all(|s| s.resyncs > 0));
    t.verify(&configs).unwrap();
}
