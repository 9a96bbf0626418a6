//! Error types shared across the toolkit.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Grid construction rejected (odd/too-small sample counts, non-positive pitch, ...).
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// A structure is too fine for the grid it is sampled on (beam waist,
    /// grating period, spiral period below the resolution floor).
    #[error("under-sampled: {0}")]
    Sampling(String),

    /// Two grid-shaped arrays do not live on the same grid.
    #[error("grid mismatch: expected {expected:?}, got {got:?}")]
    GridMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    /// A spec or argument violates its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An operation that divides by total power received an identically zero field.
    #[error("zero field: {0}")]
    ZeroField(String),

    /// Field values must stay finite; NaN/Inf indicates an upstream defect.
    #[error("non-finite value at pixel ({iy}, {ix})")]
    NonFinite { iy: usize, ix: usize },

    /// Lens quadratic phase would alias at the grid edge.
    #[error(
        "lens phase aliases beyond radius {max_radius:.6e} m (grid edge at {edge_radius:.6e} m); \
         increase the focal length or refine the grid"
    )]
    LensAliasing { max_radius: f64, edge_radius: f64 },

    /// Diffraction-order extraction windows would overlap.
    #[error("order windows collide: half-width {half_width:.6e} m exceeds half the order spacing {spacing:.6e} m")]
    WindowCollision { half_width: f64, spacing: f64 },

    /// The intensity map has no interior minimum, so it is not a ring beam.
    #[error("not a ring beam: {0}")]
    NotARing(String),

    /// The intensity map does not look like a cylindrical-lens-converted vortex.
    #[error("not a converted vortex: {0}")]
    NotConverted(String),

    /// Malformed file payload (bad magic, truncated data, ...).
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
