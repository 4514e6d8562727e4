//! Core algebra and geometry for cyclic `SL(2m+1, R)` Higgs bundles seen through
//! para-complex hyperbolic space.
//!
//! Everything here is allocation-only (`no_std` + `alloc`):
//!
//! * [`paracomplex`]: the algebra `R_tau`, bicomplex numbers, matrices stored as
//!   idempotent pairs, the para-hermitian form `q` and the isomorphism `Psi`.
//! * [`hspace`]: the hyperboloid model of `H^n_tau`, its para-Kähler triple,
//!   curvature and the flag (boundary) model.
//! * [`higgs`]: cyclic Higgs data, stability windows, moduli dimensions and
//!   gauge equivalence.
//! * [`devmap`]: the flag-valued developing map of the Fuchsian `m = 1` case.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod devmap;
pub mod error;
pub mod higgs;
pub mod hspace;
pub mod paracomplex;

pub use error::{Error, Result};
pub use num_complex::Complex64;
