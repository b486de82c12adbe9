//! DeliverC server side: task bank, model gateway, grading, sessions and the
//! HTTP API. The game rules and the C interpreter live in `deliverc-core`.

pub use deliverc_core as core;

pub mod bank;
pub mod config;
pub mod gateway;
pub mod grading;
pub mod http;
pub mod session;
