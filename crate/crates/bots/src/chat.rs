//! Line formats the bots use to share what each role was shown.

use std::fmt;

use serde::de::DeserializeOwned;
use sitesim_core::task::SegmentView;
use sitesim_core::types::{Diameter, EntityId, Length};

#[derive(Debug, Clone, PartialEq)]
pub enum ChatLine {
    /// `seg 3: color=green length=7.5`
    Seg(SegmentView),
    /// `ready 3 pipe=12 conn=15`
    Ready {
        index: u32,
        pipe: EntityId,
        connector: Option<EntityId>,
    },
    /// `installed 3`
    Installed(u32),
    NeedGlue,
    NeedClamps,
}

impl fmt::Display for ChatLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChatLine::Seg(s) => {
                write!(f, "seg {}:", s.index)?;
                if let Some(c) = s.color {
                    write!(f, " color={}", c.as_str())?;
                }
                if let Some(k) = s.kind {
                    write!(f, " type={}", k.as_str())?;
                }
                if let Some(d) = s.size {
                    write!(f, " size={}", d.inches())?;
                }
                if let Some(l) = s.length {
                    write!(f, " length={}", l.units())?;
                }
                Ok(())
            }
            ChatLine::Ready { index, pipe, connector } => {
                write!(f, "ready {index} pipe={}", pipe.0)?;
                if let Some(c) = connector {
                    write!(f, " conn={}", c.0)?;
                }
                Ok(())
            }
            ChatLine::Installed(i) => write!(f, "installed {i}"),
            ChatLine::NeedGlue => f.write_str("need glue"),
            ChatLine::NeedClamps => f.write_str("need clamps"),
        }
    }
}

fn named<T: DeserializeOwned>(s: &str) -> Option<T> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).ok()
}

impl ChatLine {
    /// Parse a line; anything else (free text) is `None`.
    pub fn parse(text: &str) -> Option<ChatLine> {
        let text = text.trim();
        match text {
            "need glue" => return Some(ChatLine::NeedGlue),
            "need clamps" => return Some(ChatLine::NeedClamps),
            _ => {}
        }
        let (head, rest) = text.split_once(' ')?;
        match head {
            "seg" => {
                let (idx, fields) = rest.split_once(':')?;
                let mut v = SegmentView {
                    index: idx.trim().parse().ok()?,
                    color: None,
                    kind: None,
                    size: None,
                    length: None,
                };
                for kv in fields.split_whitespace() {
                    let (k, val) = kv.split_once('=')?;
                    match k {
                        "color" => v.color = Some(named(val)?),
                        "type" => v.kind = Some(named(val)?),
                        "size" => v.size = Some(Diameter::new(val.parse().ok()?).ok()?),
                        "length" => v.length = Some(Length::from_units(val.parse().ok()?).ok()?),
                        _ => return None,
                    }
                }
                Some(ChatLine::Seg(v))
            }
            "ready" => {
                let mut it = rest.split_whitespace();
                let index = it.next()?.parse().ok()?;
                let mut pipe = None;
                let mut connector = None;
                for kv in it {
                    let (k, val) = kv.split_once('=')?;
                    let id = EntityId(val.parse().ok()?);
                    match k {
                        "pipe" => pipe = Some(id),
                        "conn" => connector = Some(id),
                        _ => return None,
                    }
                }
                Some(ChatLine::Ready {
                    index,
                    pipe: pipe?,
                    connector,
                })
            }
            "installed" => Some(ChatLine::Installed(rest.trim().parse().ok()?)),
            _ => None,
        }
    }
}

/// Fill the gaps in `into` from `from`.
pub fn merge(into: &mut SegmentView, from: &SegmentView) {
    into.color = into.color.or(from.color);
    into.kind = into.kind.or(from.kind);
    into.size = into.size.or(from.size);
    into.length = into.length.or(from.length);
}

pub fn is_complete(s: &SegmentView) -> bool {
    s.color.is_some() && s.kind.is_some() && s.size.is_some() && s.length.is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use sitesim_core::types::{PipeColor, PipeKind};

    #[test]
    fn lines_round_trip() {
        let lines = [
            ChatLine::Seg(SegmentView {
                index: 3,
                color: Some(PipeColor::Magenta),
                kind: None,
                size: Some(Diameter::new(4).unwrap()),
                length: Some(Length::from_units(18.5).unwrap()),
            }),
            ChatLine::Seg(SegmentView {
                index: 1,
                color: None,
                kind: Some(PipeKind::Electricity),
                size: None,
                length: None,
            }),
            ChatLine::Ready {
                index: 2,
                pipe: EntityId(40),
                connector: Some(EntityId(41)),
            },
            ChatLine::Ready {
                index: 10,
                pipe: EntityId(7),
                connector: None,
            },
            ChatLine::Installed(4),
            ChatLine::NeedGlue,
            ChatLine::NeedClamps,
        ];
        for l in lines {
            assert_eq!(ChatLine::parse(&l.to_string()), Some(l.clone()), "{l}");
        }
        assert_eq!(ChatLine::parse("hello there"), None);
        assert_eq!(ChatLine::parse("seg 1: color=plaid"), None);
    }
}
