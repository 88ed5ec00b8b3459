//! Regularization operators, their Radon-domain kernels and variational fitters.

pub mod activations;
pub mod catalog;
pub mod error;
pub mod fftutil;
pub mod interp;
pub mod io;
pub mod lp;
pub mod nullspace;
pub mod par;
pub mod radon;
pub mod rbf;
pub mod special;
pub mod sparse;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
