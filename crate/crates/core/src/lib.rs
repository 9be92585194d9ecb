//! Remote state estimation under DoS jamming, cast as a stochastic game
//! between a sensor and an attacker sharing a fading channel.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bayesian;
pub mod channel;
pub mod cli;
pub mod config;
pub mod equilibria;
pub mod error;
pub mod estimation;
pub mod game;
pub mod io;
pub mod nashq;
pub mod structure;

pub use error::{Error, Result};
