//! HTTP surface for a running LogicIoT engine.
//!
//! Inbound, every relation gets `GET /rel/{name}/insert` and
//! `GET /rel/{name}/read`, every endpoint `GET /endpoint/{name}`. Handlers
//! only enqueue events or read a store snapshot. Outbound, [`HttpOutbound`]
//! turns module calls, relation forwards and trigger webhooks into GET
//! requests.

mod outbound;
mod rows;
mod server;

pub use outbound::{HttpOutbound, OutboundOptions, MAX_BODY_BYTES};
pub use rows::{read_json, RowJson};
pub use server::{router, Server};
