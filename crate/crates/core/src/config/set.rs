use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::*;
use crate::metrics::{load_ipq_mapping, load_ssq_weights, IpqMapping, SsqWeights};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageKind {
    Training,
    Main,
}

/// One task run inside a session, with everything it references resolved.
#[derive(Debug, Clone)]
pub struct Stage {
    pub kind: StageKind,
    /// Task with session rule overrides already applied.
    pub task: TaskConfig,
    pub layout: TargetLayout,
    pub menu: MenuConfig,
    pub scenarios: Vec<ScenarioConfig>,
}

/// A session config with all references resolved, ready to run.
#[derive(Debug, Clone)]
pub struct SessionBundle {
    pub session: SessionConfig,
    pub stages: Vec<Stage>,
    pub vehicles: Vec<VehicleConfig>,
    pub behaviors: Vec<BehaviorConfig>,
    pub registry: HandlerRegistry,
}

/// Every config file under one directory.
#[derive(Debug, Clone, Default)]
pub struct ConfigSet {
    pub root: PathBuf,
    pub vehicles: Vec<VehicleConfig>,
    pub behaviors: Vec<BehaviorConfig>,
    pub scenarios: BTreeMap<String, ScenarioConfig>,
    pub sessions: BTreeMap<String, SessionConfig>,
    pub tasks: BTreeMap<String, TaskConfig>,
    pub menus: BTreeMap<String, MenuConfig>,
    pub layouts: BTreeMap<String, TargetLayout>,
    pub ssq: Option<SsqWeights>,
    pub ipq: Option<IpqMapping>,
    pub registry: HandlerRegistry,
    files: BTreeMap<(&'static str, String), PathBuf>,
}

fn yaml_files(dir: &Path) -> Result<Vec<PathBuf>, ConfigError> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let entries = fs::read_dir(dir).map_err(|source| ConfigError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("yaml" | "yml")))
        .collect();
    files.sort();
    Ok(files)
}

fn read(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load_each<T>(
    root: &Path,
    sub: &str,
    mut f: impl FnMut(&str) -> Result<T, ConfigError>,
) -> Result<Vec<(PathBuf, T)>, ConfigError> {
    yaml_files(&root.join(sub))?
        .into_iter()
        .map(|p| {
            let text = read(&p)?;
            f(&text).map(|v| (p.clone(), v)).map_err(|e| e.in_file(&p))
        })
        .collect()
}

/// Apply a mapping of rule overrides onto `base`. Unknown keys are rejected.
pub fn merge_rules(base: &TaskRules, overrides: &serde_yaml::Mapping) -> Result<TaskRules, ConfigError> {
    let mut value = serde_yaml::to_value(base).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let map = value.as_mapping_mut().expect("rules serialize to a mapping");
    for (k, v) in overrides {
        map.insert(k.clone(), v.clone());
    }
    let rules: TaskRules = serde_yaml::from_value(value).map_err(|e| ConfigError::Schema {
        line: None,
        message: format!("rules: {e}"),
    })?;
    rules.validate()?;
    Ok(rules)
}

impl ConfigSet {
    /// Load and cross-check a config directory. Fails on the first error, naming its file.
    pub fn load_dir(root: impl AsRef<Path>) -> Result<ConfigSet, ConfigError> {
        let root = root.as_ref();
        if !root.is_dir() {
            return Err(ConfigError::Io {
                path: root.to_path_buf(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
            });
        }
        let mut set = ConfigSet {
            root: root.to_path_buf(),
            ..Default::default()
        };

        for (p, v) in load_each(root, "vehicles", load_vehicle_config)? {
            set.claim("vehicle", &v.name, &p)?;
            set.vehicles.push(v);
        }
        for (p, b) in load_each(root, "behaviors", load_behaviors)? {
            set.claim("behaviors", &b.vehicle, &p)?;
            if !set.vehicles.iter().any(|v| v.name == b.vehicle) {
                return Err(ConfigError::UnknownReference {
                    kind: "vehicle",
                    name: b.vehicle.clone(),
                    from: "behavior file".into(),
                }
                .in_file(&p));
            }
            set.behaviors.push(b);
        }
        set.registry = HandlerRegistry::from_behaviors(&set.behaviors)?;

        let vehicles = set.vehicles.clone();
        for (p, s) in load_each(root, "scenarios", |t| load_scenario(t, &vehicles))? {
            set.claim("scenario", &s.name, &p)?;
            for e in &s.events {
                resolve_handler(&e.vehicle, e.condition, e.id, &set.registry).map_err(|err| err.in_file(&p))?;
            }
            set.scenarios.insert(s.name.clone(), s);
        }
        for (p, m) in load_each(root, "menus", load_menu)? {
            set.claim("menu", &m.name, &p)?;
            set.menus.insert(m.name.clone(), m);
        }
        for (p, l) in load_each(root, "layouts", load_layout)? {
            set.claim("layout", &l.name, &p)?;
            set.layouts.insert(l.name.clone(), l);
        }
        for (p, t) in load_each(root, "tasks", load_task)? {
            set.claim("task", &t.name, &p)?;
            let from = format!("task `{}`", t.name);
            let layout = set.layouts.get(&t.layout).ok_or_else(|| {
                ConfigError::UnknownReference {
                    kind: "layout",
                    name: t.layout.clone(),
                    from: from.clone(),
                }
                .in_file(&p)
            })?;
            layout.check_against(&t).map_err(|e| e.in_file(&p))?;
            if !set.menus.contains_key(&t.menu) {
                return Err(ConfigError::UnknownReference {
                    kind: "menu",
                    name: t.menu.clone(),
                    from,
                }
                .in_file(&p));
            }
            set.tasks.insert(t.name.clone(), t);
        }
        for (p, s) in load_each(root, "sessions", load_session)? {
            set.claim("session", &s.name, &p)?;
            set.sessions.insert(s.name.clone(), s);
        }
        let names: Vec<String> = set.sessions.keys().cloned().collect();
        for name in names {
            let path = set.files[&("session", name.clone())].clone();
            set.bundle(&name).map_err(|e| e.in_file(&path))?;
        }

        let ssq = root.join("instruments").join("ssq.yaml");
        if ssq.is_file() {
            set.ssq =
                Some(load_ssq_weights(&read(&ssq)?).map_err(|e| ConfigError::Invalid(e.to_string()).in_file(&ssq))?);
        }
        let ipq = root.join("instruments").join("ipq.yaml");
        if ipq.is_file() {
            set.ipq =
                Some(load_ipq_mapping(&read(&ipq)?).map_err(|e| ConfigError::Invalid(e.to_string()).in_file(&ipq))?);
        }
        Ok(set)
    }

    fn claim(&mut self, kind: &'static str, name: &str, path: &Path) -> Result<(), ConfigError> {
        if let Some(prev) = self.files.insert((kind, name.to_string()), path.to_path_buf()) {
            return Err(
                ConfigError::Invalid(format!("{kind} `{name}` is already defined in {}", prev.display())).in_file(path),
            );
        }
        Ok(())
    }

    /// File a named config came from.
    pub fn source_of(&self, kind: &'static str, name: &str) -> Option<&Path> {
        self.files.get(&(kind, name.to_string())).map(PathBuf::as_path)
    }

    pub fn file_count(&self) -> usize {
        self.files.len() + usize::from(self.ssq.is_some()) + usize::from(self.ipq.is_some())
    }

    fn stage(
        &self,
        kind: StageKind,
        task_name: &str,
        scenarios: &[String],
        session: &SessionConfig,
    ) -> Result<Stage, ConfigError> {
        let from = format!("session `{}`", session.name);
        let unknown = |kind: &'static str, name: &str| ConfigError::UnknownReference {
            kind,
            name: name.to_string(),
            from: from.clone(),
        };
        let mut task = self
            .tasks
            .get(task_name)
            .cloned()
            .ok_or_else(|| unknown("task", task_name))?;
        if let Some(overrides) = &session.rules {
            task.rules = merge_rules(&task.rules, overrides)?;
        }
        let layout = self
            .layouts
            .get(&task.layout)
            .cloned()
            .ok_or_else(|| unknown("layout", &task.layout))?;
        let menu = self
            .menus
            .get(&task.menu)
            .cloned()
            .ok_or_else(|| unknown("menu", &task.menu))?;
        let scenarios = scenarios
            .iter()
            .map(|s| self.scenarios.get(s).cloned().ok_or_else(|| unknown("scenario", s)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Stage {
            kind,
            task,
            layout,
            menu,
            scenarios,
        })
    }

    pub fn bundle(&self, session_name: &str) -> Result<SessionBundle, ConfigError> {
        let session = self
            .sessions
            .get(session_name)
            .cloned()
            .ok_or_else(|| ConfigError::UnknownReference {
                kind: "session",
                name: session_name.to_string(),
                from: self.root.display().to_string(),
            })?;
        let mut stages = Vec::new();
        if let Some(t) = &session.training {
            stages.push(self.stage(StageKind::Training, &t.task, &t.scenarios, &session)?);
        }
        stages.push(self.stage(StageKind::Main, &session.task, &session.scenarios, &session)?);
        Ok(SessionBundle {
            session,
            stages,
            vehicles: self.vehicles.clone(),
            behaviors: self.behaviors.clone(),
            registry: self.registry.clone(),
        })
    }
}

impl SessionBundle {
    pub fn vehicle(&self, name: &str) -> Option<&VehicleConfig> {
        self.vehicles.iter().find(|v| v.name == name)
    }
}
