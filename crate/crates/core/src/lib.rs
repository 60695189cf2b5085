//! Entangling capacities, Holevo-information lower bounds and the induced
//! channels of bipartite unitaries on small qudit systems.

#![allow(clippy::single_range_in_vec_init)]

pub mod capacities;
pub mod channels;
pub mod ensembles;
pub mod error;
pub mod linalg;
pub mod optimize;
pub mod qstate;
pub mod unitary;

pub use error::{Error, Result};
