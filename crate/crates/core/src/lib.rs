//! Healthcare accessibility with the two-step floating catchment area
//! method over walking networks, and facility placement that lifts every
//! demand point to a target accessibility with as few new sites as
//! possible.
//!
//! The pipeline is [`geodata`] → [`routing`] → [`accessibility`] →
//! [`optimizer`], with [`cli`] wiring it to files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accessibility;
pub mod cli;
pub mod config;
pub mod error;
pub mod export;
pub mod geodata;
pub mod optimizer;
pub mod routing;

pub use error::{Error, Result};
