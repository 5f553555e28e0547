use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use sitesim_core::config::SessionBundle;
use sitesim_core::sync::{Phase, ServerMsg, Session, SessionError};
use sitesim_core::task::Intent;
use sitesim_core::types::Role;
use tokio::sync::{mpsc, oneshot};
use tokio::time::MissedTickBehavior;

use crate::logs::JsonlSink;
use crate::{ServerError, ServerOptions};

/// Messages for one connection's writer, with the tick they were produced at.
pub(crate) type OutTx = mpsc::UnboundedSender<(Option<u64>, ServerMsg)>;

pub(crate) enum Cmd {
    Join {
        role: Role,
        token: Option<String>,
        conn: u64,
        out: OutTx,
        reply: oneshot::Sender<Result<(), SessionError>>,
    },
    Submit {
        role: Role,
        conn: u64,
        client_ref: u64,
        intent: Intent,
    },
    Resync {
        role: Role,
        conn: u64,
    },
    Disconnect {
        role: Role,
        conn: u64,
    },
}

/// Registry of live sessions.
#[derive(Debug)]
pub struct SessionHost {
    opts: ServerOptions,
    bundles: Mutex<HashMap<String, Arc<SessionBundle>>>,
    sessions: Mutex<HashMap<String, mpsc::UnboundedSender<Cmd>>>,
    next_conn: AtomicU64,
    pub(crate) wire: Option<JsonlSink>,
    actions: Option<JsonlSink>,
}

impl SessionHost {
    pub fn new(opts: ServerOptions) -> Result<Self, ServerError> {
        let wire = opts.wire_log.as_deref().map(JsonlSink::create).transpose()?;
        let actions = opts.action_log.as_deref().map(JsonlSink::create).transpose()?;
        let host = SessionHost {
            opts,
            bundles: Mutex::new(HashMap::new()),
            sessions: Mutex::new(HashMap::new()),
            next_conn: AtomicU64::new(1),
            wire,
            actions,
        };
        host.bundle(None)?;
        Ok(host)
    }

    fn bundle(&self, name: Option<&str>) -> Result<Arc<SessionBundle>, ServerError> {
        let name = name.unwrap_or(&self.opts.default_session);
        let mut cache = self.bundles.lock().expect("bundle lock");
        if let Some(b) = cache.get(name) {
            return Ok(Arc::clone(b));
        }
        let mut b = self.opts.configs.bundle(name)?;
        if let Some(hz) = self.opts.tick_rate_hz {
            b.session.tick_rate_hz = hz;
        }
        let b = Arc::new(b);
        cache.insert(name.to_string(), Arc::clone(&b));
        Ok(b)
    }

    pub(crate) fn next_conn(&self) -> u64 {
        self.next_conn.fetch_add(1, Ordering::Relaxed)
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.lock().expect("session lock").keys().cloned().collect();
        ids.sort();
        ids
    }

    /// Create a Lobby session and return its id. Ids are generated when `id` is `None`.
    pub fn create_session(
        self: &Arc<Self>,
        id: Option<&str>,
        config: Option<&str>,
        seed: Option<u64>,
    ) -> Result<String, ServerError> {
        let id = id
            .map(str::to_string)
            .unwrap_or_else(|| uuid::Uuid::new_v4().to_string());
        let bundle = self.bundle(config)?;
        let seed = seed.unwrap_or(self.opts.seed);
        let mut sessions = self.sessions.lock().expect("session lock");
        if !sessions.contains_key(&id) {
            let (tx, rx) = mpsc::unbounded_channel();
            let session = Session::new(id.clone(), bundle, seed);
            tracing::info!(session = %id, seed, "session created");
            tokio::spawn(run_session(session, rx, Arc::clone(self)));
            sessions.insert(id.clone(), tx);
        }
        Ok(id)
    }

    pub(crate) fn sender(&self, id: &str) -> Option<mpsc::UnboundedSender<Cmd>> {
        self.sessions.lock().expect("session lock").get(id).cloned()
    }

    fn remove(&self, id: &str) {
        self.sessions.lock().expect("session lock").remove(id);
    }
}

async fn run_session(mut session: Session, mut rx: mpsc::UnboundedReceiver<Cmd>, host: Arc<SessionHost>) {
    let period = Duration::from_secs_f64(1.0 / session.tick_rate_hz().max(1) as f64);
    let mut interval = tokio::time::interval(period);
    interval.set_missed_tick_behavior(MissedTickBehavior::Delay);
    let mut conns: BTreeMap<Role, (u64, OutTx)> = BTreeMap::new();
    let mut ever_joined = false;
    loop {
        tokio::select! {
            cmd = rx.recv() => {
                let Some(cmd) = cmd else { break };
                handle(&mut session, &mut conns, cmd);
            }
            _ = interval.tick(), if session.phase().is_running() => {
                match session.tick() {
                    Ok(Some(batch)) => {
                        let tick = batch.tick;
                        for (_, out) in conns.values() {
                            let _ = out.send((Some(tick), ServerMsg::DeltaBatch(batch.clone())));
                        }
                    }
                    Ok(None) => {}
                    Err(e) => session.abort(&format!("config error: {e}")),
                }
            }
        }
        flush(&mut session, &conns, &host);
        ever_joined |= !conns.is_empty();
        let abandoned = session.phase() == Phase::Lobby && ever_joined;
        if conns.is_empty() && (session.phase().is_over() || abandoned) {
            break;
        }
    }
    tracing::info!(session = %session.id(), phase = ?session.phase(), "session closed");
    host.remove(session.id());
}

fn handle(session: &mut Session, conns: &mut BTreeMap<Role, (u64, OutTx)>, cmd: Cmd) {
    let tick = Some(session.world().tick);
    match cmd {
        Cmd::Join {
            role,
            token,
            conn,
            out,
            reply,
        } => match session.join(role, token.as_deref()) {
            Ok(welcome) => {
                let _ = out.send((tick, ServerMsg::Welcome(welcome)));
                conns.insert(role, (conn, out));
                let _ = reply.send(Ok(()));
            }
            Err(e) => {
                let _ = reply.send(Err(e));
            }
        },
        Cmd::Submit {
            role,
            conn,
            client_ref,
            intent,
        } => {
            if !owns(conns, role, conn) {
                return;
            }
            if let Err(e) = session.submit(role, client_ref, intent) {
                send_error(conns, role, tick, e.code(), &e.to_string());
            }
        }
        Cmd::Resync { role, conn } => {
            if owns(conns, role, conn) {
                let _ = conns[&role].1.send((tick, ServerMsg::Snapshot(session.snapshot())));
            }
        }
        Cmd::Disconnect { role, conn } => {
            if owns(conns, role, conn) {
                conns.remove(&role);
                session.disconnect(role);
            }
        }
    }
}

fn owns(conns: &BTreeMap<Role, (u64, OutTx)>, role: Role, conn: u64) -> bool {
    conns.get(&role).is_some_and(|(c, _)| *c == conn)
}

fn send_error(conns: &BTreeMap<Role, (u64, OutTx)>, role: Role, tick: Option<u64>, code: &str, message: &str) {
    if let Some((_, out)) = conns.get(&role) {
        let _ = out.send((
            tick,
            ServerMsg::Error {
                code: code.into(),
                message: message.into(),
            },
        ));
    }
}

fn flush(session: &mut Session, conns: &BTreeMap<Role, (u64, OutTx)>, host: &SessionHost) {
    let tick = Some(session.world().tick);
    for (to, msg) in session.drain_outbox() {
        for (role, (_, out)) in conns {
            if to.includes(*role) {
                let _ = out.send((tick, msg.clone()));
            }
        }
    }
    let lines = session.drain_log();
    if let Some(sink) = &host.actions {
        for l in &lines {
            sink.write(l);
        }
    }
}
