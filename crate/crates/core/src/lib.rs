#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod channel;
pub mod error;
pub mod montecarlo;
pub mod specfun;
pub mod sweep;
pub mod system;
