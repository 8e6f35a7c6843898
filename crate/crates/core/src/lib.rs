#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod consistency;
pub mod diff;
pub mod error;
pub mod gaussian;
pub mod geometry;
pub mod linalg;
pub mod losses;
pub mod selftest;
