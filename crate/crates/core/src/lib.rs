//! Busy periods of the M|G|∞ queue and sojourn times in open networks of
//! infinite-server nodes.
//!
//! - [`distributions`]: service laws, including the β family whose busy
//!   periods have closed forms.
//! - [`busy_transform`], [`moments`], [`busy_law`]: the busy-period transform,
//!   its moments and its distribution.
//! - [`tail_analysis`]: recovering a service law from a busy-period transform,
//!   and checking whether a candidate β can come from any service law.
//! - [`network`]: traffic equations and the sojourn-time transform.
//! - [`laplace_inversion`]: Gaver–Stehfest and Talbot inversion.
//! - [`simulator`]: discrete-event checks for all of the above.
//! - [`cli`], [`schema`], [`verify`]: the `busyq` command line.

// `!(x > 0.0)` is used deliberately so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod busy_law;
pub mod busy_transform;
pub mod cli;
pub mod distributions;
pub mod error;
pub mod expr;
pub mod laplace_inversion;
pub mod moments;
pub mod network;
pub mod numeric;
pub mod quadrature;
pub mod schema;
pub mod simulator;
pub mod tail_analysis;
pub mod verify;

pub use error::{Error, Result};
