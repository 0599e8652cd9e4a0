//! Non-Markovian Gaussian dynamics of a harmonic probe coupled to an Ohmic
//! Lorentz-Drude reservoir, and the quantum Fisher information it carries
//! about the reservoir parameters.

// `!(x >= lo)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod model;
pub mod noise;
pub mod oracle;
pub mod propagators;
pub mod qfi;
pub mod quadrature;
pub mod special;

pub use error::{Error, Result};
pub use model::*;
pub use num_complex::Complex64;
pub use propagators::{
    build_propagators, characteristic_roots, markovian_propagators, CubicRoots, G6Form,
    PropagatorSet,
};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
