//! LogicIoT: a small declarative language for sensor-driven programs.
//!
//! Programs declare relations (bounded windows of timestamped records),
//! triggers, endpoints, timers, production rules and HTTP-mapped modules.
//! This crate parses them, stores relation windows, evaluates conditions
//! and runs the serialized rule engine. The HTTP surface lives in the
//! gateway crate and plugs in through [`engine::Outbound`].

pub mod dsl;
pub mod engine;
pub mod eval;
pub mod journal;
pub mod randgen;
pub mod script;
pub mod store;
pub mod value;

pub use dsl::{format_program, parse_expression, parse_program, ParseError, Program};
pub use engine::{Engine, EngineConfig, EventKind, Firing, FiringKind};
pub use store::Store;
pub use value::Value;
