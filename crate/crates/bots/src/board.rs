use std::collections::{BTreeMap, BTreeSet};

use sitesim_core::config::{Orientation, SegmentField, SegmentSpec, SiteConfig, TargetLayout, TaskConfig};
use sitesim_core::geometry::{PipeEnd, Vec2};
use sitesim_core::sync::Briefing;
use sitesim_core::task::{FilteredView, SegmentView};
use sitesim_core::types::EntityId;

use crate::chat::{is_complete, merge, ChatLine};

/// What a bot has learned from its own view and the partner's chat.
#[derive(Debug, Clone, Default)]
pub struct Board {
    pub specs: BTreeMap<u32, SegmentView>,
    pub ready: BTreeMap<u32, (EntityId, Option<EntityId>)>,
    pub installed: BTreeSet<u32>,
    pub need_glue: bool,
    pub need_clamps: bool,
}

impl Board {
    pub fn new(view: &FilteredView) -> Board {
        Board {
            specs: view.segments.iter().map(|s| (s.index, s.clone())).collect(),
            ..Board::default()
        }
    }

    pub fn absorb(&mut self, chats: Vec<String>) {
        for text in chats {
            match ChatLine::parse(&text) {
                Some(ChatLine::Seg(v)) => {
                    if let Some(mine) = self.specs.get_mut(&v.index) {
                        merge(mine, &v);
                    }
                }
                Some(ChatLine::Ready { index, pipe, connector }) => {
                    self.ready.insert(index, (pipe, connector));
                }
                Some(ChatLine::Installed(i)) => {
                    self.installed.insert(i);
                }
                Some(ChatLine::NeedGlue) => self.need_glue = true,
                Some(ChatLine::NeedClamps) => self.need_clamps = true,
                None => {}
            }
        }
    }

    pub fn all_known(&self) -> bool {
        self.specs.values().all(is_complete)
    }

    pub fn spec(&self, index: u32) -> Option<SegmentSpec> {
        let v = self.specs.get(&index)?;
        Some(SegmentSpec {
            index,
            color: v.color?,
            kind: v.kind?,
            size: v.size?,
            length: v.length?,
            installer: Vec::new(),
            fetcher: Vec::new(),
        })
    }
}

/// One slot in installation order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainStep {
    pub index: u32,
    pub anchor: Vec2,
    /// Unit direction from end A to end B once placed.
    pub dir: Vec2,
    /// Connector end that attaches to this pipe's B end, if the chain continues.
    pub connector_by: Option<PipeEnd>,
}

fn axis(o: Orientation) -> Vec2 {
    match o {
        Orientation::Horizontal => Vec2::new(1.0, 0.0),
        Orientation::Vertical => Vec2::new(0.0, 1.0),
    }
}

fn toward(axis: Vec2, from: Vec2, to: Vec2) -> Vec2 {
    let s = (to - from).dot(axis);
    if s < 0.0 {
        axis * -1.0
    } else {
        axis
    }
}

/// Connected runs of slots, each starting at a slot nothing connects into.
pub fn chains(layout: &TargetLayout) -> Vec<Vec<ChainStep>> {
    let has_incoming: BTreeSet<u32> = layout.edges().iter().map(|&(_, b)| b).collect();
    let mut out = Vec::new();
    for start in layout.slots.iter().filter(|s| !has_incoming.contains(&s.index)) {
        let mut run = vec![start];
        while let Some(next) = run
            .last()
            .and_then(|s| s.connects_to.first())
            .and_then(|&i| layout.slot(i))
        {
            run.push(next);
        }
        let mut steps: Vec<ChainStep> = Vec::with_capacity(run.len());
        for (i, s) in run.iter().enumerate() {
            let anchor = Vec2::new(s.anchor[0], s.anchor[1]);
            let dir = if i == 0 {
                match run.get(1) {
                    Some(n) => toward(axis(s.orientation), anchor, Vec2::new(n.anchor[0], n.anchor[1])),
                    None => axis(s.orientation),
                }
            } else {
                toward(axis(s.orientation), steps[i - 1].anchor, anchor)
            };
            steps.push(ChainStep {
                index: s.index,
                anchor,
                dir,
                connector_by: None,
            });
        }
        for i in 0..steps.len().saturating_sub(1) {
            let (a, b) = (steps[i].dir, steps[i + 1].dir);
            // Counter-clockwise turns take the elbow by end A.
            steps[i].connector_by = Some(if a.x * b.y - a.y * b.x > 0.0 {
                PipeEnd::A
            } else {
                PipeEnd::B
            });
        }
        out.push(steps);
    }
    out
}

/// The task as reconstructed from the merged segment info, for client-side completion checks.
pub fn client_task(briefing: &Briefing, board: &Board) -> Option<TaskConfig> {
    let segments = board
        .specs
        .keys()
        .map(|&i| {
            board.spec(i).map(|mut s| {
                s.installer = vec![
                    SegmentField::Color,
                    SegmentField::Type,
                    SegmentField::Size,
                    SegmentField::Length,
                ];
                s.fetcher = s.installer.clone();
                s
            })
        })
        .collect::<Option<Vec<_>>>()?;
    Some(TaskConfig {
        name: briefing.task.clone(),
        layout: briefing.layout.name.clone(),
        menu: String::new(),
        rules: briefing.rules.clone(),
        site: SiteConfig::default(),
        segments,
        storage: Vec::new(),
    })
}
