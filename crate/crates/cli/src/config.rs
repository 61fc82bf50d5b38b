//! Run configuration: a flat `key = value` file, overridden by flags.
//!
//! ```text
//! # comments start with '#'
//! listen = 127.0.0.1
//! port = 8080
//! window = 1024
//! window.R = 16            # per-relation window
//! log = data/run.jsonl     # persistence log
//! cascade = 64
//! call_timeout = 5000      # ms
//! webhook.R = http://localhost:9000/hook
//! module_base = http://localhost:9000/app/
//! queue = 4096
//! ```

use std::collections::HashMap;
use std::net::IpAddr;
use std::path::PathBuf;
use std::str::FromStr;

use logiciot::engine::runtime::DEFAULT_QUEUE_CAPACITY;
use logiciot::engine::{EngineConfig, DEFAULT_CALL_TIMEOUT_MS, DEFAULT_MAX_CASCADE};
use logiciot::store::DEFAULT_WINDOW;
use url::Url;

pub const DEFAULT_PORT: u16 = 8080;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub listen: IpAddr,
    pub port: u16,
    pub window: usize,
    pub windows: HashMap<String, usize>,
    pub log: Option<PathBuf>,
    pub cascade: usize,
    pub call_timeout_ms: u64,
    pub webhooks: HashMap<String, String>,
    pub module_base: Option<Url>,
    pub queue: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            listen: IpAddr::from([127, 0, 0, 1]),
            port: DEFAULT_PORT,
            window: DEFAULT_WINDOW,
            windows: HashMap::new(),
            log: None,
            cascade: DEFAULT_MAX_CASCADE,
            call_timeout_ms: DEFAULT_CALL_TIMEOUT_MS,
            webhooks: HashMap::new(),
            module_base: None,
            queue: DEFAULT_QUEUE_CAPACITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("`{key}`: {message}")]
    Value { key: String, message: String },
}

fn positive<T: FromStr + PartialEq + Default>(key: &str, raw: &str) -> Result<T, ConfigError> {
    match raw.parse::<T>() {
        Ok(v) if v != T::default() => Ok(v),
        _ => Err(ConfigError::Value {
            key: key.into(),
            message: format!("expected a positive integer, got `{raw}`"),
        }),
    }
}

fn parse<T: FromStr>(key: &str, raw: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    raw.parse::<T>().map_err(|e| ConfigError::Value {
        key: key.into(),
        message: e.to_string(),
    })
}

impl RunConfig {
    /// Applies one setting; used for both file lines and flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "listen" => self.listen = parse(key, value)?,
            "port" => self.port = parse(key, value)?,
            "window" => self.window = positive(key, value)?,
            "log" => self.log = Some(PathBuf::from(value)),
            "cascade" => self.cascade = positive(key, value)?,
            "call_timeout" => self.call_timeout_ms = positive(key, value)?,
            "module_base" => self.module_base = Some(parse(key, value)?),
            "queue" => self.queue = positive(key, value)?,
            _ => {
                if let Some(rel) = key.strip_prefix("window.") {
                    self.windows.insert(rel.to_string(), positive(key, value)?);
                } else if let Some(rel) = key.strip_prefix("webhook.") {
                    parse::<Url>(key, value)?;
                    self.webhooks.insert(rel.to_string(), value.to_string());
                } else {
                    return Err(ConfigError::UnknownKey { line: 0, key: key.into() });
                }
            }
        }
        Ok(())
    }

    pub fn apply_file(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: line_no })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(ConfigError::Syntax { line: line_no });
            }
            self.set(k, v).map_err(|e| match e {
                ConfigError::UnknownKey { key, .. } => ConfigError::UnknownKey { line: line_no, key },
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            default_window: self.window,
            windows: self.windows.clone(),
            max_cascade: self.cascade,
            call_timeout_ms: self.call_timeout_ms,
            webhooks: self.webhooks.clone(),
            journal: self.log.clone(),
            ..EngineConfig::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_override() {
        let mut c = RunConfig::default();
        c.apply_file(
            "# demo\nport = 9000\nwindow = 8   # small\nwindow.R = 3\nwebhook.R = http://h/x\n\nlog = a.jsonl\n",
        )
        .unwrap();
        c.set("port", "0").unwrap();
        assert_eq!(c.port, 0);
        assert_eq!(c.window, 8);
        assert_eq!(c.windows["R"], 3);
        assert_eq!(c.webhooks["R"], "http://h/x");
        let e = c.engine_config();
        assert_eq!(e.journal, Some(PathBuf::from("a.jsonl")));
        assert_eq!(e.max_cascade, 64);
    }

    #[test]
    fn rejects_bad_lines() {
        let mut c = RunConfig::default();
        assert_eq!(c.apply_file("port 80"), Err(ConfigError::Syntax { line: 1 }));
        assert_eq!(
            c.apply_file("\nspeed = 3"),
            Err(ConfigError::UnknownKey { line: 2, key: "speed".into() })
        );
        assert!(c.apply_file("window = 0").is_err());
        assert!(c.apply_file("cascade = -1").is_err());
        assert!(c.apply_file("webhook.R = not a url").is_err());
        assert!(c.apply_file("listen = nowhere").is_err());
    }
}
