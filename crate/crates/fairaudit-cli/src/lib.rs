//! Library surface of the audit CLI, exposed so integration tests can
//! drive the pipeline in-process.

pub mod config;
pub mod interactive;
pub mod run;
