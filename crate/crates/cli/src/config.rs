//! Flag / config-file / default resolution.
//!
//! A config file is any JSON object, or any artifact this tool wrote: a JSON
//! report with a top-level `config`, a JSON-lines report whose first record
//! holds it, or a CSV whose first line is `# config: {...}`.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

pub const CONFIG_PREFIX: &str = "# config: ";

pub struct Resolver {
    file: Map<String, Value>,
    used: Map<String, Value>,
}

impl Resolver {
    pub fn new(command: &str, path: Option<&Path>) -> Result<Self, CliError> {
        let file = match path {
            Some(p) => load_config(p)?,
            None => Map::new(),
        };
        if let Some(Value::String(other)) = file.get("command") {
            if other != command {
                return Err(CliError::Usage(format!(
                    "config was written by `{other}`, not `{command}`"
                )));
            }
        }
        let mut used = Map::new();
        used.insert("command".into(), Value::String(command.into()));
        Ok(Resolver { file, used })
    }

    /// Flag if given, else the config file's value, else `default`.
    pub fn get<T: Serialize + DeserializeOwned>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: Option<T>,
    ) -> Result<Option<T>, CliError> {
        let value = match flag {
            Some(v) => Some(v),
            None => match self.file.get(key) {
                Some(raw) => Some(serde_json::from_value(raw.clone()).map_err(|e| {
                    CliError::Usage(format!("config key `{key}`: {e}"))
                })?),
                None => default,
            },
        };
        if let Some(v) = &value {
            let json = serde_json::to_value(v).expect("config values serialise");
            self.used.insert(key.into(), json);
        }
        Ok(value)
    }

    pub fn require<T: Serialize + DeserializeOwned>(
        &mut self,
        key: &str,
        flag: Option<T>,
    ) -> Result<T, CliError> {
        self.get(key, flag, None)?
            .ok_or_else(|| CliError::Usage(format!("missing required option --{}", key.replace('_', "-"))))
    }

    pub fn or<T: Serialize + DeserializeOwned>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T, CliError> {
        Ok(self.get(key, flag, Some(default))?.expect("default given"))
    }

    /// The resolved configuration, keys sorted.
    pub fn config(&self) -> Value {
        Value::Object(self.used.clone())
    }

    pub fn line(&self) -> String {
        format!("{CONFIG_PREFIX}{}", self.config())
    }
}

fn load_config(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let first = text.lines().next().unwrap_or("");
    let parsed: Option<Value> = if let Some(rest) = first.strip_prefix(CONFIG_PREFIX) {
        serde_json::from_str(rest).ok()
    } else {
        serde_json::from_str(&text)
            .ok()
            .or_else(|| serde_json::from_str(first).ok())
    };
    let mut object = match parsed {
        Some(Value::Object(m)) => m,
        _ => {
            return Err(CliError::Usage(format!(
                "{} is not a JSON config or a report with one",
                path.display()
            )))
        }
    };
    if let Some(Value::Object(inner)) = object.remove("config") {
        return Ok(inner);
    }
    Ok(object)
}
