//! Command line and HTTP front ends over the archbot engines.

pub mod app;
pub mod cli;
pub mod config;
pub mod error;
pub mod http;
