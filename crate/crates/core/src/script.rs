//! Timed action scripts for deterministic runs under the virtual clock.
//!
//! One JSON object per line, blank lines ignored:
//!
//! ```text
//! {"at": 0,    "insert":   {"rel": "R", "values": {"MAC": "aa", "RSSI": -87}}}
//! {"at": 500,  "endpoint": {"name": "NEW_RECORD", "args": {"M": "bb", "RS": -40}}}
//! {"at": 1000, "advance":  10000}
//! ```
//!
//! `at` is an absolute virtual time in milliseconds and defaults to the
//! current time; it may not go backwards. Before an action runs, time moves
//! to `at`, firing every timer due on the way. `advance` then moves time
//! forward by the given amount.

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::dsl::Program;
use crate::engine::{run_steps, EngineConfig, EventKind, LoadError, Step, Transcript};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ScriptError {
    pub line: usize,
    pub message: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAction {
    at: Option<u64>,
    insert: Option<RawInsert>,
    endpoint: Option<RawEndpoint>,
    advance: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInsert {
    rel: String,
    values: BTreeMap<String, serde_json::Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEndpoint {
    name: String,
    #[serde(default)]
    args: BTreeMap<String, serde_json::Value>,
}

/// Orders named values by `names`, requiring each exactly once.
fn positional(
    what: &str,
    names: &[String],
    mut given: BTreeMap<String, serde_json::Value>,
) -> Result<Vec<Value>, String> {
    let mut out = Vec::with_capacity(names.len());
    for name in names {
        let raw = given
            .remove(name)
            .ok_or_else(|| format!("{what}: missing `{name}`"))?;
        let v = Value::from_json(&raw)
            .ok_or_else(|| format!("{what}: `{name}` must be a string, number, boolean or null"))?;
        out.push(v);
    }
    if let Some(extra) = given.keys().next() {
        return Err(format!("{what}: unexpected `{extra}`"));
    }
    Ok(out)
}

/// Translates a script into engine steps, checking names against `program`.
pub fn parse_script(text: &str, program: &Program) -> Result<Vec<Step>, ScriptError> {
    let mut steps = Vec::new();
    let mut now = 0u64;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |message: String| ScriptError { line: line_no, message };
        if line.trim().is_empty() {
            continue;
        }
        let action: RawAction = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        let kinds = [action.insert.is_some(), action.endpoint.is_some(), action.advance.is_some()];
        if kinds.iter().filter(|k| **k).count() != 1 {
            return Err(err("expected exactly one of `insert`, `endpoint`, `advance`".into()));
        }
        if let Some(at) = action.at {
            if at < now {
                return Err(err(format!("`at` {at} is earlier than the current time {now}")));
            }
            now = at;
        }
        steps.push(Step::AdvanceTo(now));
        if let Some(ins) = action.insert {
            let decl = program
                .relation(&ins.rel)
                .ok_or_else(|| err(format!("unknown relation `{}`", ins.rel)))?;
            let values = positional(&ins.rel, &decl.fields, ins.values).map_err(err)?;
            steps.push(Step::Event(EventKind::ExternalInsert {
                relation: ins.rel,
                values,
            }));
        } else if let Some(ep) = action.endpoint {
            let decl = program
                .endpoint(&ep.name)
                .ok_or_else(|| err(format!("unknown endpoint `{}`", ep.name)))?;
            let args = positional(&ep.name, &decl.params, ep.args).map_err(err)?;
            steps.push(Step::Event(EventKind::EndpointCall { name: ep.name, args }));
        } else if let Some(by) = action.advance {
            now = now
                .checked_add(by)
                .ok_or_else(|| err("virtual time overflow".into()))?;
            steps.push(Step::AdvanceTo(now));
        }
    }
    Ok(steps)
}

#[derive(Debug, thiserror::Error)]
pub enum ScriptRunError {
    #[error("script {0}")]
    Script(#[from] ScriptError),
    #[error(transparent)]
    Load(#[from] LoadError),
}

/// Parses and runs a script from virtual time 0.
pub fn run_script(program: &Program, config: EngineConfig, script: &str) -> Result<Transcript, ScriptRunError> {
    let steps = parse_script(script, program)?;
    Ok(run_steps(program, config, &steps)?)
}
