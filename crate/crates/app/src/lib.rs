//! Command line tools, the questionnaire service and its session log.

pub mod cli;
pub mod http;
pub mod service;
pub mod session;
pub mod store;
