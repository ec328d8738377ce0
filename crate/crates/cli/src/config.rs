//! Flat `key = value` run configuration with per-command key sets.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::failure::Failure;

/// Resolved settings of one command; keys are fixed by the command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: String,
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn new(command: &str, defaults: &[(&str, &str)]) -> Self {
        RunConfig {
            command: command.into(),
            values: defaults.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Failure> {
        if key == "command" {
            if value != self.command {
                return Err(Failure::config(format!("config is for command {value:?}, not {:?}", self.command)));
            }
            return Ok(());
        }
        match self.values.get_mut(key) {
            Some(v) => {
                *v = value.to_string();
                Ok(())
            }
            None => {
                let known = self.values.keys().cloned().collect::<Vec<_>>().join(", ");
                Err(Failure::config(format!("unknown key {key:?} for {}; known keys: {known}", self.command)))
            }
        }
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn merge_text(&mut self, text: &str, origin: &str) -> Result<(), Failure> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Failure::config(format!("{origin}:{}: expected key = value, got {raw:?}", i + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<(), Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::io(format!("cannot read {}: {e}", path.display())))?;
        self.merge_text(&text, &path.display().to_string())
    }

    pub fn merge_assignment(&mut self, kv: &str) -> Result<(), Failure> {
        let (k, v) = kv.split_once('=').ok_or_else(|| Failure::config(format!("expected KEY=VALUE, got {kv:?}")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("key {key} is not declared for {}", self.command))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, Failure>
    where
        T::Err: Display,
    {
        let v = self.raw(key);
        v.parse().map_err(|e| Failure::config(format!("{key} = {v:?}: {e}")))
    }

    /// Empty values mean "not set".
    pub fn optional<T: FromStr>(&self, key: &str) -> Result<Option<T>, Failure>
    where
        T::Err: Display,
    {
        if self.raw(key).is_empty() {
            Ok(None)
        } else {
            self.get(key).map(Some)
        }
    }

    pub fn required(&self, key: &str) -> Result<String, Failure> {
        let v = self.raw(key);
        if v.is_empty() {
            return Err(Failure::config(format!("{} needs {key}", self.command)));
        }
        Ok(v.to_string())
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, Failure>
    where
        T::Err: Display,
    {
        self.raw(key)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|e| Failure::config(format!("{key}: {s:?}: {e}"))))
            .collect()
    }

    pub fn echo(&self) -> String {
        let mut s = format!("command = {}\n", self.command);
        for (k, v) in &self.values {
            s += &format!("{k} = {v}\n");
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut m = serde_json::Map::new();
        m.insert("command".into(), self.command.clone().into());
        for (k, v) in &self.values {
            m.insert(k.clone(), v.clone().into());
        }
        serde_json::Value::Object(m)
    }
}
