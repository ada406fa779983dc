//! Files, configuration, the Monte Carlo harness and the CLI around
//! [`hashprop_core`].

pub mod checks;
pub mod cli;
pub mod config;
pub mod harness;
pub mod matrix_io;

pub use hashprop_core as core;
