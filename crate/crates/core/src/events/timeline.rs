use serde::{Deserialize, Serialize};

use crate::config::{Condition, ScenarioConfig, ScenarioEntry, VehicleConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub fire_tick: u64,
    /// Position across all scenario files, in the order they were listed.
    pub seq: usize,
    pub scenario: String,
    pub entry: ScenarioEntry,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggeredEvent {
    pub fire_tick: u64,
    pub vehicle: String,
    pub condition: Condition,
    pub event_id: u32,
    pub warning: Option<String>,
}

/// Events sorted by (fire_tick, seq) with a cursor over those already fired.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Timeline {
    entries: Vec<TimelineEntry>,
    cursor: usize,
}

pub fn seconds_to_tick(seconds: f64, tick_rate_hz: u32) -> u64 {
    (seconds * tick_rate_hz as f64).round().max(0.0) as u64
}

impl Timeline {
    /// Entries are assumed validated against `vehicles`; unresolved ones carry no warning.
    pub fn build(scenarios: &[ScenarioConfig], vehicles: &[VehicleConfig], tick_rate_hz: u32) -> Timeline {
        let mut entries: Vec<TimelineEntry> = scenarios
            .iter()
            .flat_map(|s| s.events.iter().map(move |e| (s, e)))
            .enumerate()
            .map(|(seq, (s, e))| TimelineEntry {
                fire_tick: seconds_to_tick(e.time, tick_rate_hz),
                seq,
                scenario: s.name.clone(),
                entry: e.clone(),
                warning: vehicles
                    .iter()
                    .find(|v| v.name == e.vehicle)
                    .and_then(|v| v.event(e.condition, e.id))
                    .and_then(|d| d.warning.clone()),
            })
            .collect();
        entries.sort_by_key(|e| (e.fire_tick, e.seq));
        Timeline { entries, cursor: 0 }
    }

    pub fn entries(&self) -> &[TimelineEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn fired(&self) -> usize {
        self.cursor
    }

    /// Every not-yet-fired entry due at or before `tick`, in queue order.
    pub fn advance(&mut self, tick: u64) -> Vec<TriggeredEvent> {
        let start = self.cursor;
        while self.cursor < self.entries.len() && self.entries[self.cursor].fire_tick <= tick {
            self.cursor += 1;
        }
        self.entries[start..self.cursor]
            .iter()
            .map(|e| TriggeredEvent {
                fire_tick: e.fire_tick,
                vehicle: e.entry.vehicle.clone(),
                condition: e.entry.condition,
                event_id: e.entry.id,
                warning: e.warning.clone(),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(name: &str, times: &[f64]) -> ScenarioConfig {
        ScenarioConfig {
            name: name.into(),
            desc: None,
            events: times
                .iter()
                .enumerate()
                .map(|(i, &t)| ScenarioEntry {
                    time: t,
                    vehicle: "Crane".into(),
                    condition: Condition::Normal,
                    id: i as u32 + 1,
                })
                .collect(),
        }
    }

    #[test]
    fn equal_times_keep_file_order() {
        let mut t = Timeline::build(&[scenario("a", &[2.0, 1.0, 1.0])], &[], 20);
        let ids: Vec<u32> = t.advance(100).iter().map(|e| e.event_id).collect();
        assert_eq!(ids, [2, 3, 1]);
    }

    #[test]
    fn advance_is_idempotent() {
        let mut t = Timeline::build(&[scenario("a", &[1.0, 2.0])], &[], 20);
        assert!(t.advance(19).is_empty());
        assert_eq!(t.advance(20).len(), 1);
        assert!(t.advance(20).is_empty());
        assert_eq!(t.advance(40).len(), 1);
        assert_eq!(t.fired(), 2);
    }

    #[test]
    fn empty_scenarios_give_empty_timeline() {
        assert!(Timeline::build(&[], &[], 20).is_empty());
    }
}
