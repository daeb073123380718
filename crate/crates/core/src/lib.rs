//! Fourier-analytic counting of three-term arithmetic progressions.
//!
//! The crate works on two kinds of objects: densities on the finite grid
//! `Z_N^d` (with the normalized counting measure) and self-similar measures
//! on `[0,1]^d` with closed-form Fourier transforms. On top of these it
//! provides Bohr-set decompositions, progression-free constructions,
//! spherical averages of triple spectra, and named verification checks.

pub mod constructions;
pub mod bessel;
pub mod decompose;
pub mod error;
pub mod fractal_spectral;
pub mod group_fourier;
pub mod io;
pub mod numeric;
pub mod tolerances;
pub mod verify;

pub use error::{ApError, Result};
