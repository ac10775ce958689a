//! Coarse-grained beam-splitter lattice model of dynamical diffraction.
//!
//! A perfect crystal blade is cut into `N` vertical planes of scattering nodes.
//! Every node is a two-port beam splitter acting on an upward ray `|a_j⟩` and a
//! downward ray `|b_j⟩`; repeated application of the node unitary spreads a
//! single incident ray over the Borrmann fan. On top of the lattice kernel the
//! crate provides single-blade experiments ([`crystal`]), multi-blade
//! Mach-Zehnder interferometers ([`interferometer`]) and the closed-form
//! two-beam Laue-case amplitudes used to cross-check the lattice
//! ([`ddref`]).
//!
//! ```
//! use lauewalk_core::lattice::{BeamState, NodeParameterSource, SplitterParams, propagate};
//! use std::f64::consts::FRAC_PI_4;
//!
//! let params = SplitterParams::new(0.0, FRAC_PI_4, 0.0).unwrap();
//! let source = NodeParameterSource::uniform(params);
//! let out = propagate(&BeamState::ray_up(0), 150, &source);
//! assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
//! ```

pub mod crystal;
pub mod ddref;
mod error;
pub mod exec;
pub mod interferometer;
pub mod lattice;
pub mod stats;

pub use error::{Error, Result};
pub use num_complex::Complex64;
