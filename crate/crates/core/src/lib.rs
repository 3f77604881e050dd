//! Heterogeneous graph surrogates for stiffened panels under non-uniform
//! boundary conditions and loads.

pub mod cli;
pub mod error;
pub mod graph;
pub mod io;
pub mod nn;
pub mod oracle;
pub mod panel;
pub mod training;

pub use error::{Error, Result};
