//! Scalar-diffraction toolkit for structured ultraviolet light.
//!
//! The crate synthesizes diffractive optical elements that imprint orbital
//! angular momentum onto a beam (fork gratings, spiral phase plates, binary
//! axicons), propagates sampled complex fields through them with the
//! angular-spectrum method, and measures what comes out: OAM spectra, radial
//! profiles, stripe counts after astigmatic mode conversion, and ring-lobe
//! counts for quasi-Bessel beams.
//!
//! Everything operates on desk-scale sampled fields ([`field::Field`]) over
//! a centered grid ([`grid::GridSpec`]); all functions are pure and
//! deterministic, so identical inputs give bit-identical outputs on a given
//! platform.
//!
//! ```
//! use twistbeam_core::{gaussian_source, apply_mask, GridSpec};
//! use twistbeam_core::analysis::oam_spectrum;
//! use twistbeam_core::masks::{spp_phase, SppSpec};
//! use twistbeam_core::propagation::{propagate, PropagationPlan};
//!
//! // A charge-3 spiral phase plate on a Gaussian beam.
//! let grid = GridSpec::square(256, 8e-6, 266e-9)?;
//! let beam = gaussian_source(grid, 300e-6, 1.0)?;
//! let spec = SppSpec::new(3, 64, 266e-9, 1.49, 1.0, 0.0, 2e-3)?;
//! let (phase, _height) = spp_phase(grid, &spec)?;
//! let vortex = apply_mask(&beam, &phase, None)?;
//!
//! // Propagate and read the OAM content back off the field.
//! let out = propagate(&vortex, &PropagationPlan::paraxial(0.05))?;
//! let spectrum = oam_spectrum(&out, -8, 8)?;
//! assert_eq!(spectrum.dominant_ell, 3);
//! # Ok::<(), twistbeam_core::Error>(())
//! ```

pub mod analysis;
pub mod error;
mod fft;
pub mod field;
pub mod grid;
pub mod io;
pub mod masks;
pub mod propagation;

pub use error::{Error, Result};
pub use field::{apply_mask, energy, gaussian_source, intensity, Field, IntensityMap};
pub use grid::GridSpec;
