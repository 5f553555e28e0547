//! Scenario timeline, vehicle motion and event side effects.

mod scatter;
mod timeline;
mod vehicle;

pub use scatter::{collide_and_scatter, step_vehicles, SCATTER_ATTEMPTS};
pub use timeline::{Timeline, TimelineEntry, TriggeredEvent};
pub use vehicle::VehicleState;

use crate::config::{resolve_handler, ConfigError, HandlerRegistry};
use crate::metrics::EventLogLine;
use crate::task::{Entity, Note, Signal, WorldState};

/// Start the bound behavior for an event and return its signals.
pub fn fire(
    ev: &TriggeredEvent,
    world: &mut WorldState,
    registry: &HandlerRegistry,
) -> Result<(Vec<Signal>, Note), ConfigError> {
    let script = resolve_handler(&ev.vehicle, ev.condition, ev.event_id, registry)?;
    if !script.is_noop() {
        let vehicle = world.entities.values_mut().find_map(|e| match e {
            Entity::Vehicle(v) if v.name == script.vehicle => Some(v),
            _ => None,
        });
        if let Some(v) = vehicle {
            v.start_script(script);
        }
    }
    world.meta.events_fired += 1;
    let signals = ev
        .warning
        .iter()
        .map(|text| Signal::Warning { text: text.clone() })
        .collect();
    let note = Note::EventFired {
        vehicle: ev.vehicle.clone(),
        condition: ev.condition,
        event_id: ev.event_id,
        warning: ev.warning.clone(),
    };
    Ok((signals, note))
}

impl TriggeredEvent {
    pub fn log_line(&self, tick: u64, stage: Option<String>) -> EventLogLine {
        EventLogLine {
            stage,
            tick,
            vehicle: self.vehicle.clone(),
            condition: self.condition,
            event_id: self.event_id,
            warning: self.warning.clone(),
        }
    }
}
