//! Simulation of a superconducting microwave frequency divider: a pumped
//! cavity `a` converts photons into pairs of qubit excitations that are
//! emitted into two output cavities `b` and `c` at half the pump frequency.
//!
//! The crate evolves the Lindblad master equation on
//! `q1 ⊗ q2 ⊗ a ⊗ b ⊗ c` in the frame rotating at `ω_a / 2`, or in the lab
//! frame, and derives populations, steady states and conversion
//! efficiencies from it.

pub mod algebra;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod model;
pub mod oracle;
pub mod units;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    pub mod model {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    pub mod dynamics {}
    #[doc = include_str!("../../../book/src/steady-state.md")]
    pub mod steady_state {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    pub mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
