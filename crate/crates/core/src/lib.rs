//! Cayley-transform realizations of rational inner and Herglotz functions on the
//! polydisk and poly-halfplane, with long-resolvent pencil synthesis.

// `!(x <= t)` is used on purpose so NaN residuals fail.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aglerkit;
pub mod bessmertnyi;
pub mod cayley;
pub mod cli;
pub mod error;
pub mod herglotz;
pub mod numerics;
pub mod pipeline;
pub mod polyalg;
pub mod realization;
pub mod verify;

pub use error::{Error, Result};
pub use numerics::{CMatrix, Tolerances};
