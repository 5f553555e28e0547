use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{parse_yaml, ConfigError};
use crate::types::Role;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MenuActionKind {
    /// Ask the experimenter NPC for help; logged as a marker.
    NpcRequest,
    OpenDrone,
    OpenRobotDog,
    RefillGlue,
    RefillClamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MenuItem {
    pub id: String,
    pub label: String,
    pub action: MenuActionKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MenuConfig {
    pub name: String,
    #[serde(default)]
    pub installer: Vec<MenuItem>,
    #[serde(default)]
    pub fetcher: Vec<MenuItem>,
}

impl MenuConfig {
    pub fn items(&self, role: Role) -> &[MenuItem] {
        match role {
            Role::Installer => &self.installer,
            Role::Fetcher => &self.fetcher,
        }
    }

    pub fn item(&self, role: Role, id: &str) -> Option<&MenuItem> {
        self.items(role).iter().find(|i| i.id == id)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for role in Role::ALL {
            let mut seen = BTreeSet::new();
            for item in self.items(role) {
                if !seen.insert(item.id.as_str()) {
                    return Err(ConfigError::Invalid(format!(
                        "menu `{}`: item `{}` listed twice for {role}",
                        self.name, item.id
                    )));
                }
            }
        }
        Ok(())
    }
}

pub fn load_menu(yaml_text: &str) -> Result<MenuConfig, ConfigError> {
    let m: MenuConfig = parse_yaml(yaml_text)?;
    m.validate()?;
    Ok(m)
}
