use sitesim_core::config::{StageKind, TaskRules};
use sitesim_core::geometry::{PipeEnd, Pose2, WallPlane};
use sitesim_core::sync::Briefing;
use sitesim_core::task::{EndRef, Intent, LiftDir};
use sitesim_core::types::{Diameter, EntityId};

use crate::board::{chains, Board};
use crate::chat::ChatLine;
use crate::client::BotConn;
use crate::{BotError, BotScript, Verbosity};

const EPS: f64 = 1e-9;

/// Play the Installer through every stage. Returns the board of the last stage worked on.
pub(crate) async fn run_installer(conn: &mut BotConn, script: BotScript) -> Result<Board, BotError> {
    let mut board = Board::default();
    loop {
        let briefing = match wait_for_stage(conn).await? {
            Some(b) => b,
            None => return Ok(board),
        };
        let stage = conn.stage();
        board = Board::new(&briefing.view);
        if script.policy != crate::Policy::Idle {
            let mut run = Installer {
                conn: &mut *conn,
                script,
                stage,
                rules: briefing.rules.clone(),
                wall: WallPlane::site(),
            };
            match run.stage(&briefing, &mut board).await {
                Ok(()) | Err(BotError::StageChanged) | Err(BotError::Ended(_)) => {}
                Err(e) => return Err(e),
            }
        }
        conn.wait_until("end of stage", |c| c.phase().is_over() || c.stage() != stage)
            .await?;
    }
}

/// Wait until the session runs a stage this bot holds the briefing for; `None` once it is over.
pub(crate) async fn wait_for_stage(conn: &mut BotConn) -> Result<Option<Briefing>, BotError> {
    conn.wait_until("stage briefing", |c| {
        c.phase().is_over()
            || (c.phase().is_running() && c.in_sync() && c.briefing.as_ref().is_some_and(|b| b.stage == c.stage()))
    })
    .await?;
    if conn.phase().is_over() {
        return Ok(None);
    }
    Ok(conn.briefing.clone())
}

struct Installer<'a> {
    conn: &'a mut BotConn,
    script: BotScript,
    stage: StageKind,
    rules: TaskRules,
    wall: WallPlane,
}

impl Installer<'_> {
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

    /// Raise the lift until `y` is within reach.
    async fn reach(&mut self, y: f64) -> Result<(), BotError> {
        let lift = self.conn.world().meta.lift;
        let short = y - self.rules.reach_height - lift.height;
        if short > EPS {
            let steps = (short / self.rules.lift_step - EPS).ceil() as u32;
            for _ in 0..steps {
                self.act(Intent::LiftControl { dir: LiftDir::Up }).await?;
            }
        }
        Ok(())
    }

    async fn ensure_glue(&mut self) -> Result<(), BotError> {
        if self.conn.world().meta.glue_charges == 0 {
            self.say(ChatLine::NeedGlue).await?;
            let stage = self.stage;
            self.conn
                .wait_until("glue refill", |c| c.stage() != stage || c.world().meta.glue_charges > 0)
                .await?;
            self.guard()?;
        }
        Ok(())
    }

    async fn ensure_clamps(&mut self, d: Diameter) -> Result<(), BotError> {
        if self.conn.world().clamp_stock(d) == 0 {
            self.say(ChatLine::NeedClamps).await?;
            let stage = self.stage;
            self.conn
                .wait_until("clamp refill", |c| c.stage() != stage || c.world().clamp_stock(d) > 0)
                .await?;
            self.guard()?;
        }
        Ok(())
    }

    fn end_y(&self, end: EndRef) -> Result<f64, BotError> {
        let part = self
            .conn
            .world()
            .part(end.part)
            .map_err(|e| BotError::Protocol(e.to_string()))?;
        part.end_frame(end.end)
            .map(|f| f.position.y)
            .ok_or_else(|| BotError::Protocol(format!("{} is not on the wall", end.part)))
    }

    async fn glue(&mut self, end: EndRef) -> Result<(), BotError> {
        self.ensure_glue().await?;
        let y = self.end_y(end)?;
        self.reach(y).await?;
        self.act(Intent::ApplyGlue { target: end }).await
    }

    async fn clamp_all(&mut self, pipe: EntityId) -> Result<(), BotError> {
        loop {
            let part = self
                .conn
                .world()
                .part(pipe)
                .map_err(|e| BotError::Protocol(e.to_string()))?;
            let Some((i, z)) = part.zones.iter().enumerate().find(|(_, z)| !z.clamped) else {
                return Ok(());
            };
            let z = *z;
            self.ensure_clamps(z.diameter).await?;
            self.reach(z.center.y).await?;
            self.act(Intent::PlaceClamp {
                pipe,
                zone: i,
                diameter: z.diameter,
                position: self.wall.to_world(z.center),
            })
            .await?;
        }
    }

    async fn stage(&mut self, briefing: &Briefing, board: &mut Board) -> Result<(), BotError> {
        for seg in briefing.view.segments.clone() {
            self.say(ChatLine::Seg(seg)).await?;
        }
        if self.conn.world().meta.lift.occupant != Some(self.conn.role) {
            self.act(Intent::EnterLift).await?;
        }
        for chain in chains(&briefing.layout) {
            let mut free: Option<EndRef> = None;
            for step in chain {
                let k = step.index;
                let stage = self.stage;
                self.conn
                    .wait_until(&format!("ready {k}"), |c| {
                        board.absorb(c.take_chats());
                        board.ready.contains_key(&k) || c.stage() != stage || c.phase().is_over()
                    })
                    .await?;
                self.guard()?;
                let (pipe, connector) = board.ready[&k];
                if self.script.verbosity == Verbosity::Chatty {
                    self.say(format!("installing {k}")).await?;
                }
                self.act(Intent::Grab { entity: pipe }).await?;
                match free {
                    None => {
                        let pose = Pose2::new(step.anchor.x, step.anchor.y, step.dir.angle());
                        let len = self
                            .conn
                            .world()
                            .part(pipe)
                            .ok()
                            .and_then(|p| p.length())
                            .map_or(0.0, |l| l.units());
                        let top = step.anchor.y + (step.dir.y * len / 2.0).abs();
                        self.reach(top).await?;
                        self.act(Intent::MoveHeld {
                            pose: self.wall.embed(&pose),
                        })
                        .await?;
                        self.act(Intent::Release).await?;
                    }
                    Some(target) => {
                        let y = self.end_y(target)?;
                        self.reach(y).await?;
                        self.act(Intent::ConnectHeldToEnd {
                            target,
                            held_end: PipeEnd::A,
                        })
                        .await?;
                    }
                }
                self.clamp_all(pipe).await?;
                free = None;
                if let Some(by) = step.connector_by {
                    let connector = connector
                        .ok_or_else(|| BotError::Protocol(format!("segment {k} is ready without a connector")))?;
                    let end_b = EndRef {
                        part: pipe,
                        end: PipeEnd::B,
                    };
                    self.glue(end_b).await?;
                    self.act(Intent::Grab { entity: connector }).await?;
                    self.act(Intent::ConnectHeldToEnd {
                        target: end_b,
                        held_end: by,
                    })
                    .await?;
                    let out = EndRef {
                        part: connector,
                        end: by.other(),
                    };
                    self.glue(out).await?;
                    free = Some(out);
                }
                self.say(ChatLine::Installed(k)).await?;
            }
        }
        Ok(())
    }
}
