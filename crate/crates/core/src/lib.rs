//! Spherically symmetric steady states of the Vlasov–Poisson system, their
//! one-parameter families and the spiral traced by the mass–radius curve.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod cli;
pub mod eos;
pub mod error;
pub mod family;
pub mod io;
pub mod lm;
pub mod ode;
pub mod phase_plane;
pub mod polytrope;
pub mod quad;
pub mod roots;
pub mod special;
pub mod spiral;
pub mod steady_state;
pub mod svg;

pub use eos::{AnsatzSpec, MacroEos};
pub use error::{Error, Result};
