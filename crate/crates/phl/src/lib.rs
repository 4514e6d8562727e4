//! Numerical layer for cyclic `SL(2m+1, R)` Higgs bundles: the Hitchin
//! solver on a flat torus, the flat connection and its parallel transport,
//! the isotropic `P`-alternating immersion into `H^{2m}_tau` and its
//! structure checks, the harmonic sequence, the Gauss map, and the `phl`
//! command-line front-end.
//!
//! The pure algebra lives in [`phl_core`].

pub mod background;
pub mod cli;
pub mod config;
pub mod connection;
pub mod error;
pub mod gauss;
pub mod grid;
pub mod harmseq;
pub mod immersion;
pub mod io;
pub mod jet;
pub mod solver;
pub mod transport;

pub use error::{PhlError, Result};
