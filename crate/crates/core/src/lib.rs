//! Diagrammatic Green's-function engine for few-photon scattering off
//! correlated emitters coupled to one-dimensional waveguides.
//!
//! The crate is `no_std` (with `alloc`). Enable the `std` feature to get
//! `std::error::Error` on [`Error`].

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod diagrams;
pub mod error;
pub mod fockspace;
pub mod greens;
pub mod models;
pub mod peaks;
pub mod quadrature;
pub mod smatrix;
pub mod spectral;

pub use error::{Error, Result};

/// Complex double used throughout.
pub type C64 = num_complex::Complex<f64>;
