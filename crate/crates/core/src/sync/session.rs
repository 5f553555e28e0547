use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use thiserror::Error;

use crate::config::{ConfigError, SessionBundle, Stage, StageKind};
use crate::events::{fire, step_vehicles, Timeline};
use crate::metrics::{ActionLogLine, LogRecord, OutcomeLogLine, OUTCOME_OK};
use crate::task::{
    apply_intent, check_completion, process_due_jobs, role_view, CompletionReport, Intent, TaskContext, WorldState,
};
use crate::types::Role;

use super::delta::{diff, Delta};
use super::hash::snapshot_hash;
use super::protocol::{Briefing, DeltaBatch, IntentOutcome, Phase, ServerMsg, Snapshot, Welcome};

/// A disconnected seat is held this long before the session aborts.
pub const PAUSE_TIMEOUT_S: u64 = 60;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SessionError {
    #[error("role {0} is already taken")]
    RoleTaken(Role),
    #[error("session already has two participants")]
    SessionFull,
    #[error("resume token does not match the {0} seat")]
    BadToken(Role),
    #[error("session is {0:?} and cannot be joined")]
    NotJoinable(Phase),
    #[error("{0} has not joined")]
    NotJoined(Role),
    #[error("session is {0:?}, not running")]
    NotRunning(Phase),
}

impl SessionError {
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::RoleTaken(_) => "RoleTakenError",
            SessionError::SessionFull => "SessionFullError",
            SessionError::BadToken(_) => "BadTokenError",
            SessionError::NotJoinable(_) => "NotJoinableError",
            SessionError::NotJoined(_) => "NotJoinedError",
            SessionError::NotRunning(_) => "NotRunningError",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recipient {
    All,
    Only(Role),
    AllBut(Role),
}

impl Recipient {
    pub fn includes(self, role: Role) -> bool {
        match self {
            Recipient::All => true,
            Recipient::Only(r) => r == role,
            Recipient::AllBut(r) => r != role,
        }
    }
}

#[derive(Debug, Clone)]
struct Seat {
    token: String,
    connected: bool,
}

#[derive(Debug, Clone)]
struct Queued {
    role: Role,
    client_ref: u64,
    intent: Intent,
}

/// One two-participant run. Pure state machine: the caller owns sockets and clocks,
/// calls `tick` at the tick rate and forwards batches and the outbox.
#[derive(Debug, Clone)]
pub struct Session {
    id: String,
    bundle: Arc<SessionBundle>,
    seed: u64,
    phase: Phase,
    stage_index: usize,
    world: WorldState,
    timeline: Timeline,
    seats: BTreeMap<Role, Seat>,
    queue: VecDeque<Queued>,
    batch_seq: u64,
    paused_ticks: Option<u64>,
    last_report: Option<CompletionReport>,
    outbox: Vec<(Recipient, ServerMsg)>,
    log: Vec<LogRecord>,
}

impl Session {
    pub fn new(id: impl Into<String>, bundle: Arc<SessionBundle>, seed: u64) -> Session {
        let world = WorldState::new(&bundle.stages[0], &bundle.behaviors, stage_seed(seed, 0));
        let timeline = Timeline::build(
            &bundle.stages[0].scenarios,
            &bundle.vehicles,
            bundle.session.tick_rate_hz,
        );
        Session {
            id: id.into(),
            bundle,
            seed,
            phase: Phase::Lobby,
            stage_index: 0,
            world,
            timeline,
            seats: BTreeMap::new(),
            queue: VecDeque::new(),
            batch_seq: 0,
            paused_ticks: None,
            last_report: None,
            outbox: Vec::new(),
            log: Vec::new(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn bundle(&self) -> &SessionBundle {
        &self.bundle
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn stage(&self) -> &Stage {
        &self.bundle.stages[self.stage_index]
    }

    pub fn batch_seq(&self) -> u64 {
        self.batch_seq
    }

    pub fn tick_rate_hz(&self) -> u32 {
        self.bundle.session.tick_rate_hz
    }

    pub fn is_paused(&self) -> bool {
        self.paused_ticks.is_some()
    }

    pub fn connected(&self, role: Role) -> bool {
        self.seats.get(&role).is_some_and(|s| s.connected)
    }

    /// Latest completion report for the current stage, refreshed every tick.
    pub fn completion(&self) -> Option<&CompletionReport> {
        self.last_report.as_ref()
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            phase: self.phase,
            batch_seq: self.batch_seq,
            world: self.world.clone(),
            hash: snapshot_hash(&self.world),
        }
    }

    pub fn briefing(&self, role: Role) -> Briefing {
        let stage = self.stage();
        Briefing {
            phase: self.phase,
            stage: stage.kind,
            task: stage.task.name.clone(),
            tick_rate_hz: self.tick_rate_hz(),
            view: role_view(&stage.task, role),
            layout: stage.layout.clone(),
            menu: stage.menu.items(role).to_vec(),
            rules: stage.task.rules.clone(),
        }
    }

    /// Messages for connected clients produced since the last call.
    pub fn drain_outbox(&mut self) -> Vec<(Recipient, ServerMsg)> {
        std::mem::take(&mut self.outbox)
    }

    /// Log lines produced since the last call.
    pub fn drain_log(&mut self) -> Vec<LogRecord> {
        std::mem::take(&mut self.log)
    }

    /// Bind a role, or resume a disconnected seat with its token. The second join starts the run.
    pub fn join(&mut self, role: Role, token: Option<&str>) -> Result<Welcome, SessionError> {
        if self.phase.is_over() {
            return Err(SessionError::NotJoinable(self.phase));
        }
        if let Some(seat) = self.seats.get(&role) {
            if seat.connected {
                return Err(if self.seats.values().all(|s| s.connected) && self.seats.len() == 2 {
                    SessionError::SessionFull
                } else {
                    SessionError::RoleTaken(role)
                });
            }
            if token != Some(seat.token.as_str()) {
                return Err(SessionError::BadToken(role));
            }
            self.seats.get_mut(&role).expect("seat exists").connected = true;
            if self.phase.is_running() && self.seats.values().all(|s| s.connected) {
                self.paused_ticks = None;
                self.outbox.push((Recipient::AllBut(role), ServerMsg::Resumed));
            }
            return Ok(self.welcome(role));
        }
        if self.phase != Phase::Lobby {
            return Err(SessionError::NotJoinable(self.phase));
        }
        self.seats.insert(
            role,
            Seat {
                token: format!("{:032x}", rand::random::<u128>()),
                connected: true,
            },
        );
        if self.seats.len() == 2 {
            self.phase = Phase::for_stage(self.stage().kind);
            self.outbox.push((
                Recipient::AllBut(role),
                ServerMsg::Briefing(self.briefing(role.other())),
            ));
        }
        Ok(self.welcome(role))
    }

    fn welcome(&self, role: Role) -> Welcome {
        Welcome {
            role,
            resume_token: self.seats[&role].token.clone(),
            snapshot: self.snapshot(),
            briefing: self.phase.is_running().then(|| self.briefing(role)),
        }
    }

    /// A client connection closed. In the lobby the seat is freed; while running the session pauses.
    pub fn disconnect(&mut self, role: Role) {
        if self.phase == Phase::Lobby {
            self.seats.remove(&role);
            return;
        }
        let Some(seat) = self.seats.get_mut(&role) else { return };
        seat.connected = false;
        if self.phase.is_running() && self.paused_ticks.is_none() {
            self.paused_ticks = Some(0);
            self.outbox.push((
                Recipient::AllBut(role),
                ServerMsg::Paused {
                    waiting_for: role,
                    timeout_s: PAUSE_TIMEOUT_S,
                },
            ));
        }
    }

    /// Queue an intent; it is applied, in arrival order, on the next running tick.
    pub fn submit(&mut self, role: Role, client_ref: u64, intent: Intent) -> Result<(), SessionError> {
        if !self.seats.contains_key(&role) {
            return Err(SessionError::NotJoined(role));
        }
        if !self.phase.is_running() {
            return Err(SessionError::NotRunning(self.phase));
        }
        self.queue.push_back(Queued {
            role,
            client_ref,
            intent,
        });
        Ok(())
    }

    pub fn abort(&mut self, reason: &str) {
        if self.phase.is_over() {
            return;
        }
        self.phase = Phase::Aborted;
        self.queue.clear();
        self.log.push(LogRecord::Outcome(OutcomeLogLine {
            stage: Some(stage_label(self.stage().kind)),
            tick: self.world.tick,
            session_outcome: "aborted".into(),
            reason: Some(reason.into()),
        }));
        self.outbox
            .push((Recipient::All, ServerMsg::Aborted { reason: reason.into() }));
    }

    /// Advance one tick. Returns the batch to broadcast, or `None` when not running or paused.
    pub fn tick(&mut self) -> Result<Option<DeltaBatch>, ConfigError> {
        if !self.phase.is_running() {
            return Ok(None);
        }
        if let Some(n) = self.paused_ticks.as_mut() {
            *n += 1;
            if *n >= PAUSE_TIMEOUT_S * self.tick_rate_hz() as u64 {
                self.abort("participant did not resume within the pause window");
            }
            return Ok(None);
        }
        let bundle = Arc::clone(&self.bundle);
        let stage = &bundle.stages[self.stage_index];
        let label = stage_label(stage.kind);
        let hz = bundle.session.tick_rate_hz;
        let ctx = TaskContext::new(&stage.task, &stage.menu, hz);
        let before = self.world.clone();
        self.world.tick += 1;
        let tick = self.world.tick;

        let mut outcomes = Vec::new();
        let mut notes = Vec::new();
        let mut signals = Vec::new();
        while let Some(q) = self.queue.pop_front() {
            let res = apply_intent(&mut self.world, &ctx, q.role, &q.intent);
            let (result, message) = match res {
                Ok(applied) => {
                    signals.extend(applied.signals);
                    notes.extend(applied.notes);
                    (OUTCOME_OK.to_string(), None)
                }
                Err(e) => (e.code().to_string(), Some(e.to_string())),
            };
            self.log.push(LogRecord::Action(ActionLogLine {
                stage: Some(label.clone()),
                tick,
                role: q.role,
                kind: q.intent.kind().as_str().to_string(),
                payload: q.intent.payload(),
                outcome: result.clone(),
            }));
            outcomes.push(IntentOutcome {
                role: q.role,
                client_ref: q.client_ref,
                intent: q.intent,
                result,
                message,
            });
        }
        for ev in self.timeline.advance(tick) {
            let (s, n) = fire(&ev, &mut self.world, &bundle.registry)?;
            signals.extend(s);
            notes.push(n);
            self.log.push(LogRecord::Event(ev.log_line(tick, Some(label.clone()))));
        }
        notes.extend(step_vehicles(
            &mut self.world,
            1.0 / hz as f64,
            stage.task.rules.scatter_radius,
        ));
        notes.extend(process_due_jobs(&mut self.world, &stage.task));

        let mut deltas = diff(&before, &self.world);
        let report = check_completion(&self.world, &stage.layout, &stage.task);
        let complete = report.complete;
        self.last_report = Some(report);
        if complete {
            self.log.push(LogRecord::Outcome(OutcomeLogLine {
                stage: Some(label.clone()),
                tick,
                session_outcome: "complete".into(),
                reason: None,
            }));
            if self.stage_index + 1 < bundle.stages.len() {
                self.stage_index += 1;
                let next = &bundle.stages[self.stage_index];
                self.world = WorldState::new(next, &bundle.behaviors, stage_seed(self.seed, self.stage_index));
                self.timeline = Timeline::build(&next.scenarios, &bundle.vehicles, hz);
                self.phase = Phase::for_stage(next.kind);
                self.last_report = None;
                deltas = vec![Delta::Reset {
                    world: self.world.clone(),
                }];
                for role in Role::ALL {
                    self.outbox
                        .push((Recipient::Only(role), ServerMsg::Briefing(self.briefing(role))));
                }
            } else {
                self.phase = Phase::Complete;
            }
        }
        self.batch_seq += 1;
        Ok(Some(DeltaBatch {
            batch_seq: self.batch_seq,
            tick: self.world.tick,
            phase: self.phase,
            deltas,
            outcomes,
            notes,
            signals,
            hash: snapshot_hash(&self.world),
        }))
    }
}

fn stage_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(index as u64)
}

pub fn stage_label(kind: StageKind) -> String {
    match kind {
        StageKind::Training => "training".into(),
        StageKind::Main => "main".into(),
    }
}

/// Re-run recorded batches against a fresh session and return it.
/// Each batch is one tick; its outcomes are resubmitted in order.
pub fn replay<'a>(
    bundle: Arc<SessionBundle>,
    seed: u64,
    batches: impl IntoIterator<Item = &'a DeltaBatch>,
) -> Result<Session, ConfigError> {
    let mut s = Session::new("replay", bundle, seed);
    for role in Role::ALL {
        s.join(role, None).expect("fresh session has free seats");
    }
    for b in batches {
        for o in &b.outcomes {
            if s.submit(o.role, o.client_ref, o.intent.clone()).is_err() {
                break;
            }
        }
        s.tick()?;
    }
    Ok(s)
}
