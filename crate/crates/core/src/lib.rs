//! Gradient optimizers treated as discrete feedback controllers, together with
//! the closed-loop systems they drive.
//!
//! The crate has three layers that share one controller implementation:
//!
//! - [`lti`] builds and simulates continuous-time closed loops (transfer
//!   functions, state-space realization, RK4 step responses, pole analysis).
//! - [`controllers`] holds the discrete update rules (SGD, SGDM, Adam, PID,
//!   IIR-filtered SGD, fuzzy PID, residual-style SGD) plus their
//!   continuous-time transfer functions.
//! - [`simloop`] and [`nn`] run those controllers in scalar feedback loops and
//!   in dense-network training (backprop, forward-forward, a minimal GAN).
//!
//! [`metrics`] extracts step-response figures (rise time, overshoot, settling
//! time) from any trace so simulated responses and empirical training curves
//! can be compared on the same footing.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the default `std`
//! feature only switches float math from `libm` to the standard library.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod controllers;
pub mod data;
pub mod error;
pub mod fmt;
pub mod lti;
pub mod metrics;
pub mod nn;
pub mod poly;
pub mod rng;
pub mod simloop;

mod num;

pub use error::{Error, Result};
