#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;

pub mod bounds;
pub mod coresets;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod math;
pub mod models;
pub mod quadrature;
pub mod rng;
pub mod solver;
pub mod stats;
pub mod target;
pub mod weights;

pub use error::{CoresetError, Result};
