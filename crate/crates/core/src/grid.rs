//! Sampled-grid geometry.
//!
//! A [`GridSpec`] describes a rectangular window of `nx x ny` samples with
//! physical pixel pitch `(dx, dy)` in meters and the design wavelength of the
//! light it carries. The geometric center of the grid is the optical axis:
//! pixel `(ix, iy)` sits at `x = (ix - nx/2) dx`, `y = (iy - ny/2) dy`, so a
//! vortex singularity placed "at the origin" lands on a well-defined sample.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum sample count per axis. Below this the DC bin and the center pixel
/// convention stop being meaningful.
pub const MIN_SAMPLES: usize = 16;

/// Geometry of a sampled 2-D field: sample counts, pixel pitch and wavelength.
///
/// Invariants enforced at construction: `nx, ny >= 16` and even, `dx, dy > 0`,
/// `wavelength > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    wavelength: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64, wavelength: f64) -> Result<Self> {
        if nx < MIN_SAMPLES || ny < MIN_SAMPLES {
            return Err(Error::InvalidGrid(format!(
                "sample counts {nx}x{ny} below the minimum of {MIN_SAMPLES}"
            )));
        }
        if nx % 2 != 0 || ny % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "sample counts must be even, got {nx}x{ny}"
            )));
        }
        if !(dx > 0.0 && dx.is_finite()) || !(dy > 0.0 && dy.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "pixel pitch must be positive and finite, got ({dx}, {dy})"
            )));
        }
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "wavelength must be positive and finite, got {wavelength}"
            )));
        }
        Ok(Self {
            nx,
            ny,
            dx,
            dy,
            wavelength,
        })
    }

    /// Square grid with equal pitch on both axes.
    pub fn square(n: usize, pitch: f64, wavelength: f64) -> Result<Self> {
        Self::new(n, n, pitch, pitch, wavelength)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// Array shape in `ndarray` row-major order: `(ny, nx)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.ny, self.nx)
    }

    /// Physical window width `nx * dx`.
    pub fn width(&self) -> f64 {
        self.nx as f64 * self.dx
    }

    /// Physical window height `ny * dy`.
    pub fn height(&self) -> f64 {
        self.ny as f64 * self.dy
    }

    /// Pixel area `dx * dy`.
    pub fn pixel_area(&self) -> f64 {
        self.dx * self.dy
    }

    /// x coordinate of column `ix`, grid-centered.
    #[inline]
    pub fn x_at(&self, ix: usize) -> f64 {
        (ix as f64 - (self.nx / 2) as f64) * self.dx
    }

    /// y coordinate of row `iy`, grid-centered.
    #[inline]
    pub fn y_at(&self, iy: usize) -> f64 {
        (iy as f64 - (self.ny / 2) as f64) * self.dy
    }

    /// Spatial frequency of FFT bin `ix` along x, in cycles per meter,
    /// following the unshifted FFT ordering (bin 0 is DC).
    #[inline]
    pub fn fx_at(&self, ix: usize) -> f64 {
        let n = self.nx;
        let k = if ix < n / 2 {
            ix as f64
        } else {
            ix as f64 - n as f64
        };
        k / (n as f64 * self.dx)
    }

    /// Spatial frequency of FFT bin `iy` along y, in cycles per meter.
    #[inline]
    pub fn fy_at(&self, iy: usize) -> f64 {
        let n = self.ny;
        let k = if iy < n / 2 {
            iy as f64
        } else {
            iy as f64 - n as f64
        };
        k / (n as f64 * self.dy)
    }

    /// Largest radius around `(x, y)` that stays inside the sampled window.
    pub fn max_inscribed_radius(&self, x: f64, y: f64) -> f64 {
        let half_w = self.width() / 2.0;
        let half_h = self.height() / 2.0;
        (half_w - x.abs()).min(half_h - y.abs()).max(0.0)
    }

    /// Whether the physical point `(x, y)` lies inside the sampled window.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x.abs() <= self.width() / 2.0 && y.abs() <= self.height() / 2.0
    }

    /// Index of the sample nearest to the physical point `(x, y)`.
    /// Returns `(iy, ix)` in array order.
    pub fn nearest_index(&self, x: f64, y: f64) -> Result<(usize, usize)> {
        if !self.contains(x, y) {
            return Err(Error::InvalidParameter(format!(
                "point ({x:.6e}, {y:.6e}) m lies outside the {:.6e} x {:.6e} m window",
                self.width(),
                self.height()
            )));
        }
        let ix = ((x / self.dx).round() + (self.nx / 2) as f64)
            .clamp(0.0, (self.nx - 1) as f64) as usize;
        let iy = ((y / self.dy).round() + (self.ny / 2) as f64)
            .clamp(0.0, (self.ny - 1) as f64) as usize;
        Ok((iy, ix))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_and_small_grids() {
        assert!(GridSpec::new(15, 16, 1e-6, 1e-6, 266e-9).is_err());
        assert!(GridSpec::new(18, 17, 1e-6, 1e-6, 266e-9).is_err());
        assert!(GridSpec::new(8, 8, 1e-6, 1e-6, 266e-9).is_err());
        assert!(GridSpec::new(16, 16, 0.0, 1e-6, 266e-9).is_err());
        assert!(GridSpec::new(16, 16, 1e-6, 1e-6, -1.0).is_err());
        assert!(GridSpec::new(16, 16, 1e-6, 1e-6, 266e-9).is_ok());
    }

    #[test]
    fn center_pixel_is_origin() {
        let g = GridSpec::square(32, 2e-6, 266e-9).unwrap();
        assert_eq!(g.x_at(16), 0.0);
        assert_eq!(g.y_at(16), 0.0);
        assert_eq!(g.x_at(0), -16.0 * 2e-6);
        assert_eq!(g.x_at(31), 15.0 * 2e-6);
    }

    #[test]
    fn window_is_positive_and_derivable() {
        let g = GridSpec::new(64, 32, 1e-6, 2e-6, 500e-9).unwrap();
        assert!((g.width() - 64e-6).abs() < 1e-18);
        assert!((g.height() - 64e-6).abs() < 1e-18);
    }

    #[test]
    fn fft_frequencies_cover_both_signs() {
        let g = GridSpec::square(16, 1e-6, 266e-9).unwrap();
        assert_eq!(g.fx_at(0), 0.0);
        assert!(g.fx_at(1) > 0.0);
        assert!(g.fx_at(15) < 0.0);
        // Nyquist bin maps to the negative edge.
        assert!((g.fx_at(8) + 0.5 / 1e-6).abs() < 1e-3);
    }

    #[test]
    fn nearest_index_roundtrips_pixel_centers() {
        let g = GridSpec::square(32, 1e-6, 266e-9).unwrap();
        let (iy, ix) = g.nearest_index(g.x_at(5), g.y_at(20)).unwrap();
        assert_eq!((iy, ix), (20, 5));
        assert!(g.nearest_index(1.0, 0.0).is_err());
    }
}
