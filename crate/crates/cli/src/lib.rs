//! Library surface of the experiment runner: configuration, CSV emission,
//! error classification, and experiment dispatch. The binary is a thin
//! argument-parsing wrapper over [`experiments::run`].

pub mod config;
pub mod csv;
pub mod error;
pub mod experiments;
