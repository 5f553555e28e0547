use std::collections::{BTreeMap, HashMap, VecDeque};
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use serde::{Deserialize, Serialize};
use sitesim_core::config::StageKind;
use sitesim_core::sync::{
    Briefing, ClientEnvelope, ClientMsg, Delta, Envelope, IntentOutcome, Mirror, Phase, ServerEnvelope, ServerMsg,
    StateHash,
};
use sitesim_core::task::{Intent, Note, WorldState};
use sitesim_core::types::Role;
use tokio::sync::mpsc;
use tokio::time::Instant;
use tokio_tungstenite::tungstenite::Message;

use crate::latency::{delay_line, LatencyProfile};
use crate::transcript::WireLine;
use crate::BotError;

/// Per-connection knobs.
#[derive(Debug, Clone, Copy)]
pub struct ConnOptions {
    pub latency: LatencyProfile,
    pub latency_seed: u64,
    /// Treat every n-th batch as corrupted: skip it locally so the mirror must resync.
    pub corrupt_every: Option<u64>,
    pub deadline: Instant,
    /// Zero point for transcript timestamps, shared by both bots of a run.
    pub epoch: std::time::Instant,
}

/// Counters a harness checks after a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConnStats {
    /// Envelope seq values that did not follow their predecessor by exactly one.
    pub envelope_seq_gaps: u64,
    /// Batches whose seq skipped ahead of the previous batch received.
    pub batch_seq_gaps: u64,
    pub batches: u64,
    pub resyncs: u64,
    pub errors: BTreeMap<String, u64>,
}

/// One bot's connection: socket behind delay lines, a mirror and inbound queues.
pub struct BotConn {
    pub role: Role,
    pub session: String,
    pub token: String,
    mirror: Option<Mirror>,
    pub briefing: Option<Briefing>,
    pub stats: ConnStats,
    pub log: Vec<WireLine>,
    pub last_batch_hash: Option<StateHash>,
    out: Option<mpsc::UnboundedSender<(Instant, String)>>,
    inc: mpsc::UnboundedReceiver<String>,
    opts: ConnOptions,
    seq: u64,
    next_ref: u64,
    last_in_seq: u64,
    last_batch_seq: u64,
    awaiting_resync: bool,
    chats: VecDeque<String>,
    notes: VecDeque<Note>,
    outcomes: HashMap<u64, IntentOutcome>,
    server_errors: VecDeque<(String, String)>,
    started: std::time::Instant,
    waiting_for: String,
}

impl BotConn {
    /// Connect and join. An empty `session` asks the server to create one.
    pub async fn join(
        addr: &str,
        role: Role,
        session: &str,
        config: Option<&str>,
        seed: Option<u64>,
        opts: ConnOptions,
    ) -> Result<BotConn, BotError> {
        let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/"))
            .await
            .map_err(|e| BotError::Ws(e.to_string()))?;
        let (mut sink, mut stream) = ws.split();

        let (out_tx, out_rx) = mpsc::unbounded_channel::<(Instant, String)>();
        let (wire_out_tx, mut wire_out_rx) = mpsc::unbounded_channel::<String>();
        tokio::spawn(delay_line(out_rx, wire_out_tx, opts.latency, opts.latency_seed));
        tokio::spawn(async move {
            while let Some(t) = wire_out_rx.recv().await {
                if sink.send(Message::Text(t)).await.is_err() {
                    break;
                }
            }
            let _ = sink.close().await;
        });

        let (raw_tx, raw_rx) = mpsc::unbounded_channel::<(Instant, String)>();
        let (inc_tx, inc) = mpsc::unbounded_channel::<String>();
        tokio::spawn(delay_line(
            raw_rx,
            inc_tx,
            opts.latency,
            opts.latency_seed.wrapping_add(1),
        ));
        tokio::spawn(async move {
            while let Some(Ok(m)) = stream.next().await {
                match m {
                    Message::Text(t) => {
                        if raw_tx.send((Instant::now(), t)).is_err() {
                            break;
                        }
                    }
                    Message::Close(_) => break,
                    _ => {}
                }
            }
        });

        let mut c = BotConn {
            role,
            session: session.to_string(),
            token: String::new(),
            mirror: None,
            briefing: None,
            stats: ConnStats::default(),
            log: Vec::new(),
            last_batch_hash: None,
            out: Some(out_tx),
            inc,
            opts,
            seq: 0,
            next_ref: 0,
            last_in_seq: 0,
            last_batch_seq: 0,
            awaiting_resync: false,
            chats: VecDeque::new(),
            notes: VecDeque::new(),
            outcomes: HashMap::new(),
            server_errors: VecDeque::new(),
            started: opts.epoch,
            waiting_for: "welcome".into(),
        };
        c.send(ClientMsg::Hello {
            role,
            token: None,
            config: config.map(str::to_string),
            seed,
        });
        let env = c.recv().await?;
        match env.body {
            ServerMsg::Welcome(w) => {
                c.session = env.session;
                c.token = w.resume_token;
                c.last_batch_seq = w.snapshot.batch_seq;
                c.mirror = Some(Mirror::from_snapshot(w.snapshot));
                c.briefing = w.briefing;
                Ok(c)
            }
            ServerMsg::Error { code, message } => Err(BotError::Refused { role, code, message }),
            other => Err(BotError::Protocol(format!("expected welcome, got {other:?}"))),
        }
    }

    pub fn mirror(&self) -> &Mirror {
        self.mirror.as_ref().expect("joined")
    }

    pub fn world(&self) -> &WorldState {
        &self.mirror().world
    }

    pub fn phase(&self) -> Phase {
        self.mirror.as_ref().map_or(Phase::Lobby, |m| m.phase)
    }

    pub fn stage(&self) -> StageKind {
        self.world().meta.stage
    }

    /// False while a resync request is outstanding.
    pub fn in_sync(&self) -> bool {
        !self.awaiting_resync
    }

    pub fn elapsed_ms(&self) -> u64 {
        self.started.elapsed().as_millis() as u64
    }

    fn send(&mut self, body: ClientMsg) {
        self.seq += 1;
        let tick = self.mirror.as_ref().map_or(0, |m| m.world.tick);
        let env: ClientEnvelope = Envelope::new(self.session.clone(), self.seq, tick, body);
        self.log.push(WireLine::new(
            self.role,
            crate::transcript::Dir::Out,
            self.elapsed_ms(),
            &env,
        ));
        if let Some(out) = &self.out {
            let _ = out.send((
                Instant::now(),
                serde_json::to_string(&env).expect("envelope serializes"),
            ));
        }
    }

    /// Close the outbound side; the socket closes once queued messages drain.
    pub fn close(&mut self) {
        self.out = None;
    }

    async fn recv(&mut self) -> Result<ServerEnvelope, BotError> {
        let text = match tokio::time::timeout_at(self.opts.deadline, self.inc.recv()).await {
            Ok(Some(t)) => t,
            Ok(None) => return Err(BotError::Disconnected(self.role)),
            Err(_) => {
                return Err(BotError::Timeout {
                    role: self.role,
                    waiting_for: self.waiting_for.clone(),
                })
            }
        };
        let env: ServerEnvelope =
            serde_json::from_str(&text).map_err(|e| BotError::Protocol(format!("bad server message: {e}")))?;
        if env.v != sitesim_core::sync::PROTOCOL_VERSION {
            return Err(BotError::Protocol(format!("server speaks version {}", env.v)));
        }
        if env.seq != self.last_in_seq + 1 {
            self.stats.envelope_seq_gaps += 1;
        }
        self.last_in_seq = env.seq;
        self.log.push(WireLine::new(
            self.role,
            crate::transcript::Dir::In,
            self.elapsed_ms(),
            &env,
        ));
        Ok(env)
    }

    /// Receive and absorb one server message.
    pub async fn pump(&mut self) -> Result<(), BotError> {
        let env = self.recv().await?;
        match env.body {
            ServerMsg::DeltaBatch(b) => {
                self.stats.batches += 1;
                if b.batch_seq != self.last_batch_seq + 1 {
                    self.stats.batch_seq_gaps += 1;
                }
                self.last_batch_seq = b.batch_seq;
                self.last_batch_hash = Some(b.hash);
                // Anything said up to a stage reset belongs to the old stage.
                let reset = b.deltas.iter().any(|d| matches!(d, Delta::Reset { .. }));
                if reset {
                    self.chats.clear();
                }
                for o in &b.outcomes {
                    if o.role == self.role {
                        self.outcomes.insert(o.client_ref, o.clone());
                    }
                }
                for n in &b.notes {
                    if let Note::Chat { role, text } = n {
                        if *role != self.role && !reset {
                            self.chats.push_back(text.clone());
                        }
                    }
                    self.notes.push_back(n.clone());
                }
                let corrupt = self.opts.corrupt_every.is_some_and(|n| n > 0 && b.batch_seq % n == 0);
                let mirror = self.mirror.as_mut().expect("joined");
                let applied = if corrupt {
                    Err(())
                } else {
                    mirror.apply(&b).map_err(|_| ())
                };
                if applied.is_err() && !self.awaiting_resync {
                    self.awaiting_resync = true;
                    self.stats.resyncs += 1;
                    tracing::debug!(role = %self.role, batch = b.batch_seq, "mirror rejected batch, resyncing");
                    self.send(ClientMsg::ResyncRequest);
                }
            }
            ServerMsg::Snapshot(s) => {
                if let Some(m) = self.mirror.as_mut() {
                    m.resync(s);
                }
                self.awaiting_resync = false;
            }
            ServerMsg::Briefing(b) => self.briefing = Some(b),
            ServerMsg::Aborted { reason } => return Err(BotError::Aborted(reason)),
            ServerMsg::Error { code, message } => {
                *self.stats.errors.entry(code.clone()).or_default() += 1;
                self.server_errors.push_back((code, message));
            }
            ServerMsg::Welcome(_) => return Err(BotError::Protocol("second welcome".into())),
            ServerMsg::Paused { .. } | ServerMsg::Resumed | ServerMsg::Pong { .. } => {}
        }
        Ok(())
    }

    /// Pump until `done` holds.
    pub async fn wait_until(&mut self, what: &str, mut done: impl FnMut(&mut BotConn) -> bool) -> Result<(), BotError> {
        self.waiting_for = what.to_string();
        while !done(self) {
            self.pump().await?;
        }
        Ok(())
    }

    /// Let `ticks` batches go by.
    pub async fn idle(&mut self, ticks: u64) -> Result<(), BotError> {
        let until = self.last_batch_seq + ticks;
        self.wait_until("idle", |c| c.last_batch_seq >= until).await
    }

    /// Send an intent and wait for its outcome, accepted or not.
    pub async fn submit(&mut self, intent: Intent) -> Result<IntentOutcome, BotError> {
        self.next_ref += 1;
        let r = self.next_ref;
        let what = format!("outcome of {}", intent.kind());
        self.server_errors.clear();
        self.send(ClientMsg::Intent { client_ref: r, intent });
        self.waiting_for = what;
        loop {
            if let Some(o) = self.outcomes.remove(&r) {
                return Ok(o);
            }
            if let Some((code, message)) = self.server_errors.pop_front() {
                return Err(BotError::Refused {
                    role: self.role,
                    code,
                    message,
                });
            }
            if self.phase().is_over() {
                return Err(BotError::Ended(self.phase()));
            }
            self.pump().await?;
        }
    }

    /// Like `submit`, but a rejection is an error.
    pub async fn act(&mut self, intent: Intent) -> Result<IntentOutcome, BotError> {
        let o = self.submit(intent).await?;
        if o.is_ok() {
            Ok(o)
        } else {
            Err(BotError::Rejected {
                role: self.role,
                kind: o.intent.kind().to_string(),
                code: o.result,
                message: o.message.unwrap_or_default(),
            })
        }
    }

    pub async fn say(&mut self, text: impl Into<String>) -> Result<(), BotError> {
        self.act(Intent::Chat { text: text.into() }).await.map(|_| ())
    }

    pub fn send_ping(&mut self, nonce: u64) {
        self.send(ClientMsg::Ping { nonce });
    }

    pub fn take_chats(&mut self) -> Vec<String> {
        self.chats.drain(..).collect()
    }

    pub fn take_notes(&mut self) -> Vec<Note> {
        self.notes.drain(..).collect()
    }

    pub fn batch_seq(&self) -> u64 {
        self.last_batch_seq
    }
}

pub(crate) fn deadline_in(budget: Duration) -> Instant {
    Instant::now() + budget
}
