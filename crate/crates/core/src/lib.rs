//! Graph prompting over frozen message-passing models.
//!
//! The crate trains graph prompts (GPF, GPF-Plus, All-in-One) against
//! targets produced by randomized graph data operations, and checks the
//! resulting errors against closed-form bounds: exact recovery under full
//! rank, a single-token lower bound, a multi-token eigenvalue bound, and the
//! Chi law of projection errors.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod gnn;
pub mod graphs;
pub mod lab;
pub mod numerics;
pub mod optim;
pub mod prompts;
pub mod theory;

pub use error::{Error, Result};
