//! `hardy-lab`: JSON-configured experiments on top of `hardy-core`, plus the
//! acceptance suite run by `hardy-lab reproduce-all`.

pub mod acceptance;
pub mod config;
pub mod error;
pub mod run;
