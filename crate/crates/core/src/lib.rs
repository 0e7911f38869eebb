//! Tactile pin-grid chart sessions.

// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod bus;
pub mod chart;
pub mod device;
pub mod input;
pub mod output;
pub mod render;
pub mod session;
pub mod transform;
