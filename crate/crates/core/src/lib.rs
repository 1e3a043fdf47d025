//! Model-reference adaptive inner loops under an outer-loop policy, with the
//! set-point randomized inverted pendulum benchmark.
//!
//! The policy only ever drives a simulated reference model; the adaptive
//! inner loop shapes the torque sent to the true plant so that the plant
//! tracks the reference despite parameter mismatch.

// `!(x > 0.0)` style checks are kept so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod mrac;
pub mod num_core;
pub mod plant;
pub mod policy;
pub mod srip;

pub use error::{Error, Result};
