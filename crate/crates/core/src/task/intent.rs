use std::fmt;

use serde::{Deserialize, Serialize};

use super::world::EndRef;
use crate::geometry::{JoystickInput, PipeEnd, RawPose, Vec2, Vec3};
use crate::types::{Diameter, EntityId, Length, PipeColor, PipeKind, Role};

/// Largest quantity a single order or connector request may ask for.
pub const MAX_ORDER_QTY: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderItem {
    #[serde(rename = "type")]
    pub kind: PipeKind,
    pub color: PipeColor,
    pub diameter: Diameter,
    pub length: Length,
    pub qty: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutRequest {
    pub pipe: EntityId,
    pub length: Length,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectorRequest {
    pub diameter: Diameter,
    pub qty: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Supply {
    Glue,
    Clamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiftDir {
    Left,
    Right,
    Up,
    Down,
}

/// A participant's request to change the world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Intent {
    Grab {
        entity: EntityId,
    },
    Release,
    MoveHeld {
        pose: RawPose,
    },
    Joystick {
        input: JoystickInput,
    },
    ApplyGlue {
        target: EndRef,
    },
    PlaceClamp {
        pipe: EntityId,
        zone: usize,
        diameter: Diameter,
        position: Vec3,
    },
    ConnectHeldToEnd {
        target: EndRef,
        held_end: PipeEnd,
    },
    MenuAction {
        item: String,
    },
    OrderPipes {
        items: Vec<OrderItem>,
    },
    RobotDogJob {
        #[serde(default)]
        cuts: Vec<CutRequest>,
        #[serde(default)]
        connectors: Vec<ConnectorRequest>,
    },
    Refill {
        supply: Supply,
    },
    LiftControl {
        dir: LiftDir,
    },
    EnterLift,
    ExitLift,
    MoveAvatar {
        position: Vec2,
    },
    Chat {
        text: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntentKind {
    Grab,
    Release,
    MoveHeld,
    Joystick,
    ApplyGlue,
    PlaceClamp,
    ConnectHeldToEnd,
    MenuAction,
    OrderPipes,
    RobotDogJob,
    Refill,
    LiftControl,
    EnterLift,
    ExitLift,
    MoveAvatar,
    Chat,
}

impl IntentKind {
    pub const ALL: [IntentKind; 16] = [
        IntentKind::Grab,
        IntentKind::Release,
        IntentKind::MoveHeld,
        IntentKind::Joystick,
        IntentKind::ApplyGlue,
        IntentKind::PlaceClamp,
        IntentKind::ConnectHeldToEnd,
        IntentKind::MenuAction,
        IntentKind::OrderPipes,
        IntentKind::RobotDogJob,
        IntentKind::Refill,
        IntentKind::LiftControl,
        IntentKind::EnterLift,
        IntentKind::ExitLift,
        IntentKind::MoveAvatar,
        IntentKind::Chat,
    ];

    /// Role capability table. Menu items are further restricted per role by the menu file.
    pub fn allowed(self, role: Role) -> bool {
        use IntentKind::*;
        match self {
            Grab | Release | MoveHeld | Joystick | ApplyGlue | PlaceClamp | ConnectHeldToEnd | LiftControl
            | EnterLift | ExitLift => role == Role::Installer,
            OrderPipes | RobotDogJob | Refill => role == Role::Fetcher,
            MenuAction | MoveAvatar | Chat => true,
        }
    }

    pub fn as_str(self) -> &'static str {
        use IntentKind::*;
        match self {
            Grab => "grab",
            Release => "release",
            MoveHeld => "move_held",
            Joystick => "joystick",
            ApplyGlue => "apply_glue",
            PlaceClamp => "place_clamp",
            ConnectHeldToEnd => "connect_held_to_end",
            MenuAction => "menu_action",
            OrderPipes => "order_pipes",
            RobotDogJob => "robot_dog_job",
            Refill => "refill",
            LiftControl => "lift_control",
            EnterLift => "enter_lift",
            ExitLift => "exit_lift",
            MoveAvatar => "move_avatar",
            Chat => "chat",
        }
    }
}

impl fmt::Display for IntentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Intent {
    pub fn kind(&self) -> IntentKind {
        match self {
            Intent::Grab { .. } => IntentKind::Grab,
            Intent::Release => IntentKind::Release,
            Intent::MoveHeld { .. } => IntentKind::MoveHeld,
            Intent::Joystick { .. } => IntentKind::Joystick,
            Intent::ApplyGlue { .. } => IntentKind::ApplyGlue,
            Intent::PlaceClamp { .. } => IntentKind::PlaceClamp,
            Intent::ConnectHeldToEnd { .. } => IntentKind::ConnectHeldToEnd,
            Intent::MenuAction { .. } => IntentKind::MenuAction,
            Intent::OrderPipes { .. } => IntentKind::OrderPipes,
            Intent::RobotDogJob { .. } => IntentKind::RobotDogJob,
            Intent::Refill { .. } => IntentKind::Refill,
            Intent::LiftControl { .. } => IntentKind::LiftControl,
            Intent::EnterLift => IntentKind::EnterLift,
            Intent::ExitLift => IntentKind::ExitLift,
            Intent::MoveAvatar { .. } => IntentKind::MoveAvatar,
            Intent::Chat { .. } => IntentKind::Chat,
        }
    }

    /// The payload without its kind tag, as written to the action log.
    pub fn payload(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("intents serialize");
        if let Some(m) = v.as_object_mut() {
            m.remove("kind");
        }
        v
    }
}
