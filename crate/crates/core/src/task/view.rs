use serde::{Deserialize, Serialize};

use crate::config::{SegmentField, TaskConfig};
use crate::types::{Diameter, Length, PipeColor, PipeKind, Role};

/// One segment as a role is allowed to see it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentView {
    pub index: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<PipeColor>,
    #[serde(default, rename = "type", skip_serializing_if = "Option::is_none")]
    pub kind: Option<PipeKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<Diameter>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<Length>,
}

impl SegmentView {
    pub fn fields(&self) -> Vec<SegmentField> {
        let mut out = Vec::new();
        if self.color.is_some() {
            out.push(SegmentField::Color);
        }
        if self.kind.is_some() {
            out.push(SegmentField::Type);
        }
        if self.size.is_some() {
            out.push(SegmentField::Size);
        }
        if self.length.is_some() {
            out.push(SegmentField::Length);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilteredView {
    pub task: String,
    pub role: Role,
    pub segments: Vec<SegmentView>,
}

/// Task instructions masked to what `role` is shown.
pub fn role_view(task: &TaskConfig, role: Role) -> FilteredView {
    let segments = task
        .segments
        .iter()
        .map(|s| {
            let sees = |f| s.visible_to(role).contains(&f);
            SegmentView {
                index: s.index,
                color: sees(SegmentField::Color).then_some(s.color),
                kind: sees(SegmentField::Type).then_some(s.kind),
                size: sees(SegmentField::Size).then_some(s.size),
                length: sees(SegmentField::Length).then_some(s.length),
            }
        })
        .collect();
    FilteredView {
        task: task.name.clone(),
        role,
        segments,
    }
}
