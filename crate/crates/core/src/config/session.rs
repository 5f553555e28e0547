use serde::{Deserialize, Serialize};

use super::{parse_yaml, ConfigError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    pub task: String,
    #[serde(default)]
    pub scenarios: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    pub name: String,
    pub task: String,
    #[serde(default)]
    pub scenarios: Vec<String>,
    #[serde(default = "default_tick_rate")]
    pub tick_rate_hz: u32,
    #[serde(default)]
    pub seed: u64,
    /// Optional warm-up stage run before the main task.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<StageConfig>,
    /// Task rule overrides applied to every stage.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rules: Option<serde_yaml::Mapping>,
}

fn default_tick_rate() -> u32 {
    20
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(1..=1000).contains(&self.tick_rate_hz) {
            return Err(ConfigError::Invalid(format!(
                "session `{}`: tick_rate_hz must be in 1..=1000",
                self.name
            )));
        }
        Ok(())
    }
}

pub fn load_session(yaml_text: &str) -> Result<SessionConfig, ConfigError> {
    let s: SessionConfig = parse_yaml(yaml_text)?;
    s.validate()?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_training_block() {
        let s = load_session(include_str!("../../../../config/sessions/study.yaml")).unwrap();
        assert_eq!(s.tick_rate_hz, 20);
        assert_eq!(s.training.as_ref().unwrap().task, "training");
        let s = load_session("name: s\ntask: t\n").unwrap();
        assert_eq!((s.tick_rate_hz, s.seed), (20, 0));
        assert!(load_session("name: s\ntask: t\ntick_rate_hz: 0\n").is_err());
    }
}
