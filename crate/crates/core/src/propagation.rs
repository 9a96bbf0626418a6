//! Free-space propagation and thin-lens transforms.
//!
//! Propagation uses the angular-spectrum method: transform the field,
//! multiply by a frequency-domain transfer function, transform back. The
//! default (paraxial) transfer function is
//!
//! ```text
//! H(fx, fy, z) = exp[-i pi lambda z (fx^2 + fy^2)]
//! ```
//!
//! An exact (non-paraxial) variant `exp[i z sqrt(k^2 - kx^2 - ky^2)]` with
//! evanescent components zeroed is available as a cross-check; the beams
//! treated here are strongly paraxial (waists of hundreds of wavelengths), so
//! the two agree closely.
//!
//! Sign conventions: a converging lens (`f > 0`) applies
//! `exp[-i pi (x^2 + y^2) / (lambda f)]`, so a collimated Gaussian focuses at
//! `z = +f` under the transfer function above. The thin-lens phase is applied
//! in the field plane, which for a thin element is identical to applying the
//! same quadratic phase against the spectrum of a lens placed there.

use ndarray::Zip;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::fft::{fft2, ifft2};
use crate::field::Field;

/// Transfer-function flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropagationMethod {
    /// Fresnel transfer function; unitary for any distance.
    #[default]
    Paraxial,
    /// Full angular-spectrum propagator; evanescent waves are dropped, so
    /// energy is non-increasing.
    Exact,
}

/// Frequency-domain band limiting policy.
///
/// The sampled transfer function aliases once its local fringe period falls
/// below the frequency-bin spacing, which happens for
/// `|f| > W / (2 lambda |z|)`. `Auto` clips spatial frequencies beyond that
/// limit (a no-op for short distances where the limit exceeds Nyquist);
/// `Off` disables clipping, keeping propagation exactly unitary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandLimit {
    #[default]
    Auto,
    Off,
}

/// A propagation step: signed distance, method, band-limit policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationPlan {
    pub distance: f64,
    pub method: PropagationMethod,
    pub band_limit: BandLimit,
}

impl PropagationPlan {
    /// Paraxial propagation over `distance` with automatic band limiting.
    pub fn paraxial(distance: f64) -> Self {
        Self {
            distance,
            method: PropagationMethod::Paraxial,
            band_limit: BandLimit::Auto,
        }
    }

    /// Exact-propagator variant with automatic band limiting.
    pub fn exact(distance: f64) -> Self {
        Self {
            distance,
            method: PropagationMethod::Exact,
            band_limit: BandLimit::Auto,
        }
    }

    pub fn with_band_limit(mut self, band_limit: BandLimit) -> Self {
        self.band_limit = band_limit;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.distance.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "propagation distance must be finite, got {}",
                self.distance
            )));
        }
        Ok(())
    }
}

/// Propagate a field through free space.
pub fn propagate(field: &Field, plan: &PropagationPlan) -> Result<Field> {
    plan.validate()?;
    let grid = field.grid();
    let z = plan.distance;
    let lambda = grid.wavelength();
    let k = TAU / lambda;

    // Aliasing-free frequency limits for the sampled transfer function.
    let (fx_cut, fy_cut) = match plan.band_limit {
        BandLimit::Off => (f64::INFINITY, f64::INFINITY),
        BandLimit::Auto => {
            if z == 0.0 {
                (f64::INFINITY, f64::INFINITY)
            } else {
                (
                    grid.width() / (2.0 * lambda * z.abs()),
                    grid.height() / (2.0 * lambda * z.abs()),
                )
            }
        }
    };

    let mut spectrum = fft2(field.amplitude().clone());
    Zip::indexed(&mut spectrum).par_for_each(|(iy, ix), v| {
        let fx = grid.fx_at(ix);
        let fy = grid.fy_at(iy);
        if fx.abs() > fx_cut || fy.abs() > fy_cut {
            *v = Complex64::new(0.0, 0.0);
            return;
        }
        let h = match plan.method {
            PropagationMethod::Paraxial => {
                Complex64::new(0.0, -PI * lambda * z * (fx * fx + fy * fy)).exp()
            }
            PropagationMethod::Exact => {
                let kt2 = (TAU * fx).powi(2) + (TAU * fy).powi(2);
                let kz2 = k * k - kt2;
                if kz2 < 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, z * kz2.sqrt()).exp()
                }
            }
        };
        *v *= h;
    });
    Ok(Field::from_parts_unchecked(grid, ifft2(spectrum)))
}

/// Cylindrical-lens orientation: the axis along which the quadratic phase
/// varies (an `X` lens focuses along x and leaves y untouched).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LensAxis {
    X,
    Y,
}

/// Thin-lens geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LensKind {
    Spherical,
    Cylindrical(LensAxis),
}

/// Thin lens with a nonzero focal length (negative = diverging).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LensSpec {
    pub focal_length: f64,
    pub kind: LensKind,
}

impl LensSpec {
    pub fn spherical(focal_length: f64) -> Self {
        Self {
            focal_length,
            kind: LensKind::Spherical,
        }
    }

    pub fn cylindrical(focal_length: f64, axis: LensAxis) -> Self {
        Self {
            focal_length,
            kind: LensKind::Cylindrical(axis),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.focal_length == 0.0 || !self.focal_length.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "focal length must be nonzero and finite, got {}",
                self.focal_length
            )));
        }
        Ok(())
    }
}

/// Multiply by the thin-lens quadratic phase
/// `exp[-i pi (x^2 + y^2) / (lambda f)]` (spherical) or its single-axis
/// cylindrical variant.
///
/// The phase must be sampled without aliasing out to the grid edge
/// (`|d(phase)/dx| dx < pi`); a lens too strong for the grid is rejected with
/// the radius at which sampling breaks down.
pub fn apply_lens(field: &Field, lens: &LensSpec) -> Result<Field> {
    lens.validate()?;
    let grid = field.grid();
    let lambda_f = grid.wavelength() * lens.focal_length.abs();

    // |d phi / dx| dx = 2 pi x dx / (lambda |f|) < pi  =>  x < lambda |f| / (2 dx)
    let check_axis = |extent: f64, pitch: f64| -> Result<()> {
        let max_radius = lambda_f / (2.0 * pitch);
        if extent > max_radius {
            return Err(Error::LensAliasing {
                max_radius,
                edge_radius: extent,
            });
        }
        Ok(())
    };
    let x_edge = grid.width() / 2.0;
    let y_edge = grid.height() / 2.0;
    match lens.kind {
        LensKind::Spherical => {
            check_axis(x_edge, grid.dx())?;
            check_axis(y_edge, grid.dy())?;
        }
        LensKind::Cylindrical(LensAxis::X) => check_axis(x_edge, grid.dx())?,
        LensKind::Cylindrical(LensAxis::Y) => check_axis(y_edge, grid.dy())?,
    }

    let coeff = -PI / (grid.wavelength() * lens.focal_length);
    let mut out = field.amplitude().clone();
    Zip::indexed(&mut out).par_for_each(|(iy, ix), v| {
        let x = grid.x_at(ix);
        let y = grid.y_at(iy);
        let r2 = match lens.kind {
            LensKind::Spherical => x * x + y * y,
            LensKind::Cylindrical(LensAxis::X) => x * x,
            LensKind::Cylindrical(LensAxis::Y) => y * y,
        };
        *v *= Complex64::new(0.0, coeff * r2).exp();
    });
    Ok(Field::from_parts_unchecked(grid, out))
}

/// Astigmatic mode conversion: apply a cylindrical lens and propagate to its
/// focal plane, where a charge-`ell` vortex shows `|ell| + 1` intensity
/// stripes.
pub fn mode_convert(field: &Field, f_cyl: f64) -> Result<Field> {
    mode_convert_along(field, f_cyl, LensAxis::X)
}

/// [`mode_convert`] with an explicit cylindrical-lens axis.
pub fn mode_convert_along(field: &Field, f_cyl: f64, axis: LensAxis) -> Result<Field> {
    if !(f_cyl > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mode conversion needs a positive focal length, got {f_cyl}"
        )));
    }
    let lensed = apply_lens(field, &LensSpec::cylindrical(f_cyl, axis))?;
    propagate(&lensed, &PropagationPlan::paraxial(f_cyl))
}
