//! Coupled pure-feedback systems whose coupling is lower-triangular stay
//! differentially flat. This crate builds the joint flatness diffeomorphism
//! recursively with jet arithmetic, derives the information sets each
//! subsystem needs, and uses them in a distributed flat-space tracking
//! controller. A planar-quadrotor swarm coupled by rotor downwash is the
//! worked instance, with a deterministic RK4 simulator and a CLI.

// NaN-rejecting `!(x > 0.0)` guards and index loops over jet coefficients are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod control;
pub mod downwash;
pub mod error;
pub mod flatness;
pub mod graph;
pub mod jets;
pub mod oracle;
pub mod plant;
pub mod sim;
pub mod verify;

pub use error::{Error, Result};
pub use jets::{Jet, Real};
