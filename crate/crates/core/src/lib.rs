//! Multiquadric cardinal interpolation on the lattices `hZ^d`.
//!
//! The crate is `no_std` (with `alloc`) and uses `libm` for every
//! transcendental, so results are reproducible bit for bit across
//! platforms. Spatial quantities are synthesized from spectra through a
//! small radix-2 FFT in [`fft`].
//!
//! Module map:
//! - [`specfun`]: Γ, signed log-Γ and the modified Bessel function `K_ν`.
//! - [`kernel`]: the multiquadric, its radial transform, `L̂` and `P_α`.
//! - [`cardinal`]: tabulated cardinal functions and symbol coefficients.
//! - [`interp`]: lattice interpolants and discrete error norms.
//! - [`multiplier`]: the multiplier `m_{α,h}` and its derivative norms.
//! - [`bench`]: test functions and convergence experiments.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bench;
pub mod cardinal;
mod error;
pub mod fft;
pub mod interp;
pub mod kernel;
pub mod lattice;
pub mod multiplier;
pub mod quad;
pub mod specfun;
pub mod sum;

pub use error::{Error, Result};
