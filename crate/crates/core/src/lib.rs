//! Star and convex transform order checks for the lifetimes of parallel
//! systems built from independent exponential components.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod expsum;
pub mod oracle;
pub mod orders;
pub mod systems;

pub use error::{Error, Result};
