//! Support code for the `logiciot` binary.

pub mod config;
pub mod sim;
