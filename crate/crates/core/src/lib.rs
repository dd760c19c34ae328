//! Piecewise-smooth ("pinched") models of the folded-node singularity.
//!
//! * [`models`]: the canonical folded-node system, its slow flow and primary canards.
//! * [`pinch`]: pinched vector fields and switching-manifold classification.
//! * [`filippov`]: Filippov sliding and crossing dynamics with event location.
//! * [`specfun`]: confluent hypergeometric and Hermite functions.
//! * [`canard`]: closed-form secondary canards at the second pinch.
//! * [`continuation`]: tanh regularization, slow-manifold sections and canard branches in `k`.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]
pub mod bvp;
pub mod canard;
pub mod continuation;
pub mod error;
pub mod export;
pub mod filippov;
pub mod linalg;
pub mod models;
pub mod ode;
pub mod pinch;
pub mod roots;
pub mod specfun;

pub use error::{Error, Result};
pub use models::FoldedNodeParams;
