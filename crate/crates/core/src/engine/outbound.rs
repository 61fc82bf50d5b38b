//! The engine's view of outbound HTTP: module calls, relation backends
//! and per-record trigger webhooks. The gateway crate supplies the real
//! transport.

use std::collections::BTreeMap;

use crate::dsl::RelationDecl;
use crate::store::Record;
use crate::value::Value;

/// Default timeout for synchronous module calls and forwards.
pub const DEFAULT_CALL_TIMEOUT_MS: u64 = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BindingKind {
    Module,
    RelationBackend,
    TriggerWebhook,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutboundBinding {
    pub name: String,
    /// Absolute URL or a path relative to the configured module base.
    pub target: String,
    pub kind: BindingKind,
    pub timeout_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CallMode {
    Sync,
    Async,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OutboundError {
    #[error("timed out")]
    Timeout,
    #[error("HTTP status {0}")]
    Status(u16),
    #[error("malformed response body: {0}")]
    MalformedBody(String),
    #[error("response lacks declared output `{0}`")]
    MissingOutput(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("{0}")]
    Unavailable(String),
}

pub trait Outbound: Send + Sync {
    /// Sync mode returns exactly the declared outputs; async mode queues
    /// the request and returns no outputs.
    fn invoke_module(
        &self,
        binding: &OutboundBinding,
        outputs: &[String],
        args: &[Value],
        mode: CallMode,
    ) -> Result<BTreeMap<String, Value>, OutboundError>;

    /// Forwards an insert to a mapped relation backend; `Ok` means 2xx.
    fn forward_insert(
        &self,
        binding: &OutboundBinding,
        relation: &RelationDecl,
        values: &[Value],
    ) -> Result<(), OutboundError>;

    /// Fire-and-forget notification for one freshly inserted record.
    fn fire_trigger_webhook(&self, binding: &OutboundBinding, relation: &RelationDecl, record: &Record);
}

/// No network: sync calls and forwards fail, async calls and webhooks are
/// dropped.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullOutbound;

impl Outbound for NullOutbound {
    fn invoke_module(
        &self,
        binding: &OutboundBinding,
        _outputs: &[String],
        _args: &[Value],
        mode: CallMode,
    ) -> Result<BTreeMap<String, Value>, OutboundError> {
        match mode {
            CallMode::Async => Ok(BTreeMap::new()),
            CallMode::Sync => Err(OutboundError::Unavailable(format!(
                "no outbound transport for `{}`",
                binding.name
            ))),
        }
    }

    fn forward_insert(
        &self,
        binding: &OutboundBinding,
        _relation: &RelationDecl,
        _values: &[Value],
    ) -> Result<(), OutboundError> {
        Err(OutboundError::Unavailable(format!(
            "no outbound transport for `{}`",
            binding.name
        )))
    }

    fn fire_trigger_webhook(&self, _: &OutboundBinding, _: &RelationDecl, _: &Record) {}
}
