//! Product-state classical capacities of qubit channels with classical
//! memory. Amplitude-damping branches use closed forms; other branches go
//! through a grid ensemble search. The scales of capacities trade rate
//! against the fraction of branches a code must serve.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod channels;
pub mod cli;
pub mod error;
pub mod holevo;
pub mod linalg;
pub mod optim;
pub mod report;
pub mod scales;
pub mod simulate;

pub use error::{Error, Result};
