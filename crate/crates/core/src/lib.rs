//! Topological descriptors extracted directly from tensor-product B-spline
//! models: isocontours, Jacobi sets and ridge-valley graphs.
//!
//! Every query goes through the continuous model, so extracted vertices sit
//! on the requested level set up to a user tolerance instead of up to the
//! resolution of a sampling grid. A marching-squares baseline over sampled
//! models is included for comparison.
//!
//! The crate is `no_std` and only needs `alloc`. Parallel execution is
//! plugged in through [`exec::SpanExecutor`]; [`exec::Sequential`] is the
//! built-in single-threaded executor.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analytic;
pub mod baseline;
pub mod critical;
pub mod error;
pub mod exec;
pub mod features;
pub mod field;
pub mod geom;
pub mod graph;
pub mod model;
pub mod synthetic;
pub mod tracer;

pub(crate) mod linalg;
pub(crate) mod math;

pub use error::{Error, Result, Warning};
pub use geom::{Mat2, Rect, Vec2};
pub use model::{GridData, KnotVector, MfaModel};
