use std::collections::{BTreeMap, BTreeSet};

use sitesim_core::config::StageKind;
use sitesim_core::sync::Briefing;
use sitesim_core::task::{ConnectorRequest, CutRequest, Intent, OrderItem, Part, PartKind, PartStatus, Supply};
use sitesim_core::types::{Diameter, EntityId};

use crate::board::{chains, Board};
use crate::chat::ChatLine;
use crate::client::BotConn;
use crate::installer::wait_for_stage;
use crate::{BotError, BotScript, Policy, Verbosity};

/// Play the Fetcher through every stage.
pub(crate) async fn run_fetcher(conn: &mut BotConn, script: BotScript) -> Result<(), BotError> {
    loop {
        let Some(briefing) = wait_for_stage(conn).await? else {
            return Ok(());
        };
        let stage = conn.stage();
        if script.policy != Policy::Idle {
            let mut run = Fetcher::new(&mut *conn, script, stage, &briefing);
            match run.stage(&briefing).await {
                Ok(()) | Err(BotError::StageChanged) | Err(BotError::Ended(_)) => {}
                Err(e) => return Err(e),
            }
        }
        conn.wait_until("end of stage", |c| c.phase().is_over() || c.stage() != stage)
            .await?;
    }
}

struct Fetcher<'a> {
    conn: &'a mut BotConn,
    script: BotScript,
    stage: StageKind,
    board: Board,
    /// Segments in installation order.
    order: Vec<u32>,
    /// Segments followed by a junction.
    junctions: BTreeSet<u32>,
    pipe: BTreeMap<u32, EntityId>,
    connector: BTreeMap<u32, EntityId>,
    /// Parts set aside for a segment, including pipes out for cutting.
    reserved: BTreeMap<EntityId, u32>,
    requested: BTreeSet<u32>,
    requested_connector: BTreeSet<u32>,
    announced: BTreeSet<u32>,
}

impl<'a> Fetcher<'a> {
    fn new(conn: &'a mut BotConn, script: BotScript, stage: StageKind, briefing: &Briefing) -> Self {
        let steps: Vec<_> = chains(&briefing.layout).into_iter().flatten().collect();
        Fetcher {
            conn,
            script,
            stage,
            order: steps.iter().map(|s| s.index).collect(),
            junctions: steps
                .iter()
                .filter(|s| s.connector_by.is_some())
                .map(|s| s.index)
                .collect(),
            board: Board::new(&briefing.view),
            pipe: BTreeMap::new(),
            connector: BTreeMap::new(),
            reserved: BTreeMap::new(),
            requested: BTreeSet::new(),
            requested_connector: BTreeSet::new(),
            announced: BTreeSet::new(),
        }
    }

    /// Connector size a segment needs, if a junction follows it.
    fn connector_size(&self, k: u32) -> Option<Diameter> {
        if self.junctions.contains(&k) {
            self.board.specs.get(&k).and_then(|v| v.size)
        } else {
            None
        }
    }

    fn guard(&self) -> Result<(), BotError> {
        if self.conn.phase().is_over() {
            return Err(BotError::Ended(self.conn.phase()));
        }
        if self.conn.stage() != self.stage {
            return Err(BotError::StageChanged);
        }
        Ok(())
    }

    async fn act(&mut self, intent: Intent) -> Result<(), BotError> {
        self.guard()?;
        if self.script.think_ticks > 0 {
            self.conn.idle(self.script.think_ticks).await?;
        }
        self.conn.act(intent).await?;
        self.conn.wait_until("resync", |c| c.in_sync()).await?;
        self.guard()
    }

    async fn say(&mut self, line: impl ToString) -> Result<(), BotError> {
        self.act(Intent::Chat { text: line.to_string() }).await
    }

    /// Segments to work on now.
    fn active(&self) -> Vec<u32> {
        let open = self.order.iter().copied().filter(|k| !self.board.installed.contains(k));
        match self.script.policy {
            Policy::Canonical => open.take(1).collect(),
            Policy::Batch => open.collect(),
            Policy::Idle => Vec::new(),
        }
    }

    fn free_for(&self, id: EntityId, k: u32) -> bool {
        self.reserved.get(&id).is_none_or(|&r| r == k)
    }

    fn storage(&self) -> impl Iterator<Item = &Part> {
        self.conn.world().parts().filter(|p| p.status == PartStatus::Storage)
    }

    /// Claim parts already in storage that match exactly.
    fn claim(&mut self, active: &[u32]) {
        for &k in active {
            if !self.pipe.contains_key(&k) {
                let spec = self.board.spec(k).expect("all segments known");
                let found = self
                    .storage()
                    .find(|p| {
                        matches!(p.spec, PartKind::Pipe { kind, color, length }
                            if kind == spec.kind && color == spec.color && length == spec.length)
                            && p.diameter == spec.size
                            && self.free_for(p.id, k)
                    })
                    .map(|p| p.id);
                if let Some(id) = found {
                    self.pipe.insert(k, id);
                    self.reserved.insert(id, k);
                }
            }
            if let Some(d) = self.connector_size(k) {
                if !self.connector.contains_key(&k) {
                    let found = self
                        .storage()
                        .find(|p| !p.is_pipe() && p.diameter == d && self.free_for(p.id, k))
                        .map(|p| p.id);
                    if let Some(id) = found {
                        self.connector.insert(k, id);
                        self.reserved.insert(id, k);
                    }
                }
            }
        }
    }

    fn is_ready(&self, k: u32) -> bool {
        self.pipe.contains_key(&k) && (!self.junctions.contains(&k) || self.connector.contains_key(&k))
    }

    async fn request(&mut self, active: &[u32]) -> Result<bool, BotError> {
        let mut cuts = Vec::new();
        let mut items = Vec::new();
        let mut connectors: Vec<ConnectorRequest> = Vec::new();
        for &k in active {
            if !self.pipe.contains_key(&k) && !self.requested.contains(&k) {
                let spec = self.board.spec(k).expect("all segments known");
                let stock = self
                    .storage()
                    .filter(|p| {
                        matches!(p.spec, PartKind::Pipe { kind, color, length }
                            if kind == spec.kind && color == spec.color && length > spec.length)
                            && p.diameter == spec.size
                            && !self.reserved.contains_key(&p.id)
                    })
                    .min_by_key(|p| (p.length(), p.id))
                    .map(|p| p.id);
                match stock {
                    Some(id) => {
                        cuts.push(CutRequest {
                            pipe: id,
                            length: spec.length,
                        });
                        self.reserved.insert(id, k);
                    }
                    None => items.push(OrderItem {
                        kind: spec.kind,
                        color: spec.color,
                        diameter: spec.size,
                        length: spec.length,
                        qty: 1,
                    }),
                }
                self.requested.insert(k);
            }
            if let Some(d) = self.connector_size(k) {
                if !self.connector.contains_key(&k) && self.requested_connector.insert(k) {
                    match connectors.iter_mut().find(|c| c.diameter == d) {
                        Some(c) => c.qty += 1,
                        None => connectors.push(ConnectorRequest { diameter: d, qty: 1 }),
                    }
                }
            }
        }
        let acted = !(cuts.is_empty() && connectors.is_empty() && items.is_empty());
        if acted && self.script.verbosity == Verbosity::Chatty {
            self.say(format!("preparing {active:?}")).await?;
        }
        if !cuts.is_empty() || !connectors.is_empty() {
            self.act(Intent::RobotDogJob { cuts, connectors }).await?;
        }
        if !items.is_empty() {
            self.act(Intent::OrderPipes { items }).await?;
        }
        Ok(acted)
    }

    async fn stage(&mut self, briefing: &Briefing) -> Result<(), BotError> {
        for seg in briefing.view.segments.clone() {
            self.say(ChatLine::Seg(seg)).await?;
        }
        loop {
            self.guard()?;
            let chats = self.conn.take_chats();
            self.board.absorb(chats);
            if std::mem::take(&mut self.board.need_glue) {
                self.act(Intent::Refill { supply: Supply::Glue }).await?;
                continue;
            }
            if std::mem::take(&mut self.board.need_clamps) {
                self.act(Intent::Refill { supply: Supply::Clamp }).await?;
                continue;
            }
            if !self.conn.in_sync() || !self.board.all_known() {
                self.conn.pump().await?;
                continue;
            }
            let active = self.active();
            self.claim(&active);
            if let Some(k) = active
                .iter()
                .copied()
                .find(|&k| self.is_ready(k) && !self.announced.contains(&k))
            {
                self.announced.insert(k);
                self.say(ChatLine::Ready {
                    index: k,
                    pipe: self.pipe[&k],
                    connector: self.connector.get(&k).copied(),
                })
                .await?;
                continue;
            }
            if !self.request(&active).await? {
                self.conn.pump().await?;
            }
        }
    }
}
