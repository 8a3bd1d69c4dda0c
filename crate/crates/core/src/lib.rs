//! Secret-key authentication over Slepian–Wolf random binning.
//!
//! An enrollment source vector is mapped by a randomly drawn binning code to
//! a secret key (rate `r_s` nats/symbol) and a public helper message (rate
//! `r_w` nats/symbol). Authentication decodes the key from a correlated
//! observation plus the helper message, through a parametric family of
//! stochastic likelihood decoders. This crate provides:
//!
//! * exact finite-alphabet probability objects and method-of-types machinery
//!   ([`measures`]),
//! * the random-binning enrollment ensemble ([`codec`]),
//! * the stochastic decoder family, its MAP limit and the helper-only
//!   imposter estimator ([`decoders`]),
//! * numerical evaluation of the single-letter false-reject, false-accept
//!   and secrecy exponents by simplex grid search ([`exponents`]),
//! * exact and Monte Carlo measurement of false-reject / false-accept
//!   probabilities and key leakage at small blocklengths ([`montecarlo`]),
//! * a batch CLI emitting reproducible CSV/JSON ([`cli`]).
//!
//! All rates and information quantities are in nats; the CLI offers a
//! display-only bits conversion.

pub mod cli;
pub mod codec;
pub mod decoders;
mod error;
pub mod exponents;
pub mod extreal;
pub mod measures;
pub mod montecarlo;
pub mod rng;

pub use error::{Error, Result};
