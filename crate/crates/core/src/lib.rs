//! Driven optomechanics in the single-photon strong-coupling regime.
//!
//! A cavity mode `a` couples to a mechanical mode `b` through radiation
//! pressure and is driven by a classical field. The crate provides the
//! closed-form undriven propagator, an approximate analytic propagator for the
//! driven system, a truncated-Fock numerical reference, Wigner functions and
//! post-processing helpers.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;
mod params;

pub mod driven;
pub mod fock;
pub mod oracle;
pub mod postproc;
pub mod presets;
pub mod undriven;
pub mod wigner;

pub use error::{Error, Result};
pub use params::SystemParams;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/conventions.md")]
    mod conventions {}
    #[doc = include_str!("../../../book/src/undriven.md")]
    mod undriven {}
    #[doc = include_str!("../../../book/src/driven.md")]
    mod driven {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/wigner.md")]
    mod wigner {}
    #[doc = include_str!("../../../book/src/postproc.md")]
    mod postproc {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
