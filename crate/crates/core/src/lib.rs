#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod diffusion;
pub mod error;
pub mod features;
pub mod fusion;
pub mod kernels;
pub mod linalg;
pub mod par;
pub mod pipeline;
pub mod signal;

pub use error::{Error, Result};
