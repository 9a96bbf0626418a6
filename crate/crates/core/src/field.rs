//! Sampled complex scalar fields and the primitives every pipeline needs:
//! a Gaussian source, mask application, energy and intensity.
//!
//! Field units are arbitrary; every diagnostic downstream works with ratios,
//! so only relative amplitudes matter.

use ndarray::{Array2, Zip};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::masks::PhaseProfile;

/// A sampled 2-D complex scalar field on a [`GridSpec`].
///
/// The amplitude array is stored row-major as `[iy, ix]`; the grid center is
/// the optical axis. All values are finite (checked at construction).
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    amplitude: Array2<Complex64>,
}

impl Field {
    /// Wrap an amplitude array, checking shape and finiteness.
    pub fn new(grid: GridSpec, amplitude: Array2<Complex64>) -> Result<Self> {
        if amplitude.dim() != grid.shape() {
            return Err(Error::GridMismatch {
                expected: grid.shape(),
                got: amplitude.dim(),
            });
        }
        for ((iy, ix), v) in amplitude.indexed_iter() {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonFinite { iy, ix });
            }
        }
        Ok(Self { grid, amplitude })
    }

    /// Build a field by evaluating `f(x, y)` at every grid-centered sample.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> Complex64 + Sync) -> Result<Self> {
        let mut amplitude = Array2::zeros(grid.shape());
        Zip::indexed(&mut amplitude).par_for_each(|(iy, ix), v| {
            *v = f(grid.x_at(ix), grid.y_at(iy));
        });
        Self::new(grid, amplitude)
    }

    /// All-zero field.
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            amplitude: Array2::zeros(grid.shape()),
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn amplitude(&self) -> &Array2<Complex64> {
        &self.amplitude
    }

    /// Consume the field, returning the raw amplitude array.
    pub fn into_amplitude(self) -> Array2<Complex64> {
        self.amplitude
    }

    /// Internal constructor for amplitudes already known to be finite and
    /// grid-shaped (FFT outputs of valid fields, pointwise phase products).
    pub(crate) fn from_parts_unchecked(grid: GridSpec, amplitude: Array2<Complex64>) -> Self {
        debug_assert_eq!(amplitude.dim(), grid.shape());
        Self { grid, amplitude }
    }
}

/// Gaussian beam `e0 * exp(-(x^2+y^2)/w0^2)` centered on the optical axis.
///
/// `w0` is the 1/e amplitude radius (1/e^2 intensity radius). The waist must
/// be resolved by at least four pixels, otherwise the source is rejected.
pub fn gaussian_source(grid: GridSpec, w0: f64, e0: f64) -> Result<Field> {
    if !(w0 > 0.0 && w0.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "waist must be positive, got {w0}"
        )));
    }
    if !e0.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "source amplitude must be finite, got {e0}"
        )));
    }
    let min_w0 = 4.0 * grid.dx().max(grid.dy());
    if w0 < min_w0 {
        return Err(Error::Sampling(format!(
            "waist {w0:.3e} m under-resolved: needs at least 4 pixels ({min_w0:.3e} m) on this grid"
        )));
    }
    let inv_w0_sq = 1.0 / (w0 * w0);
    Field::from_fn(grid, |x, y| {
        Complex64::new(e0 * (-(x * x + y * y) * inv_w0_sq).exp(), 0.0)
    })
}

/// Multiply a field by `exp(i phase)` and, optionally, a real amplitude
/// window with values in `[0, 1]`.
///
/// A pure phase mask (no window) preserves `|E|` pointwise and therefore the
/// total energy.
pub fn apply_mask(
    field: &Field,
    phase: &PhaseProfile,
    window: Option<&Array2<f64>>,
) -> Result<Field> {
    if phase.grid() != field.grid() {
        return Err(Error::GridMismatch {
            expected: field.grid().shape(),
            got: phase.grid().shape(),
        });
    }
    if let Some(w) = window {
        if w.dim() != field.grid().shape() {
            return Err(Error::GridMismatch {
                expected: field.grid().shape(),
                got: w.dim(),
            });
        }
        if let Some(bad) = w.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!(
                "amplitude window value {bad} outside [0, 1]"
            )));
        }
    }

    let mut out = field.amplitude().clone();
    Zip::from(&mut out)
        .and(phase.values())
        .par_for_each(|v, &p| {
            *v *= Complex64::new(0.0, p).exp();
        });
    if let Some(w) = window {
        Zip::from(&mut out).and(w).par_for_each(|v, &a| {
            *v *= a;
        });
    }
    Ok(Field::from_parts_unchecked(field.grid(), out))
}

/// Total energy `dx dy sum |E|^2`, in field units squared times m^2.
pub fn energy(field: &Field) -> f64 {
    // Sequential sum: bit-identical results run to run.
    let sum: f64 = field.amplitude().iter().map(|v| v.norm_sqr()).sum();
    sum * field.grid().pixel_area()
}

/// Pointwise intensity `|E|^2`, optionally peak-normalized to 1.
///
/// Normalizing an identically zero field is an error: a degenerate pipeline
/// should surface early, not propagate silently.
pub fn intensity(field: &Field, normalize: bool) -> Result<IntensityMap> {
    let mut values = field.amplitude().mapv(|v| v.norm_sqr());
    if normalize {
        let max = values.iter().copied().fold(0.0_f64, f64::max);
        if max <= 0.0 {
            return Err(Error::ZeroField(
                "cannot peak-normalize an identically zero intensity".into(),
            ));
        }
        values.mapv_inplace(|v| v / max);
    }
    Ok(IntensityMap {
        grid: field.grid(),
        values,
    })
}

/// Non-negative intensity samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityMap {
    grid: GridSpec,
    values: Array2<f64>,
}

impl IntensityMap {
    /// Wrap raw intensity values, checking shape and non-negativity.
    pub fn new(grid: GridSpec, values: Array2<f64>) -> Result<Self> {
        if values.dim() != grid.shape() {
            return Err(Error::GridMismatch {
                expected: grid.shape(),
                got: values.dim(),
            });
        }
        for ((iy, ix), v) in values.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite { iy, ix });
            }
            if *v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "negative intensity {v} at ({iy}, {ix})"
                )));
            }
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0_f64, f64::max)
    }

    /// Intensity-weighted centroid `(x, y)` in meters.
    ///
    /// Errors on an identically zero map.
    pub fn centroid(&self) -> Result<(f64, f64)> {
        let mut total = 0.0;
        let mut mx = 0.0;
        let mut my = 0.0;
        for ((iy, ix), &v) in self.values.indexed_iter() {
            total += v;
            mx += v * self.grid.x_at(ix);
            my += v * self.grid.y_at(iy);
        }
        if total <= 0.0 {
            return Err(Error::ZeroField("centroid of a zero map".into()));
        }
        Ok((mx / total, my / total))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::masks::PhaseProfile;
    use std::f64::consts::PI;

    fn grid_256() -> GridSpec {
        GridSpec::square(256, 10e-6, 266e-9).unwrap()
    }

    #[test]
    fn gaussian_center_and_waist_values() {
        // 256^2 grid at 10 um pitch, w0 = 400 um: center value e0, value at
        // (400 um, 0) is exactly e^-1.
        let g = grid_256();
        let f = gaussian_source(g, 400e-6, 1.0).unwrap();
        let center = f.amplitude()[[128, 128]];
        assert_eq!(center, Complex64::new(1.0, 0.0));
        let at_waist = f.amplitude()[[128, 128 + 40]];
        assert!((at_waist.re - (-1.0_f64).exp()).abs() < 1e-12);
        assert_eq!(at_waist.im, 0.0);
    }

    #[test]
    fn gaussian_is_real_and_positive() {
        let f = gaussian_source(grid_256(), 200e-6, 2.5).unwrap();
        assert!(f.amplitude().iter().all(|v| v.im == 0.0 && v.re > 0.0));
    }

    #[test]
    fn gaussian_flat_limit() {
        // w0 = 10x the window acts as a plane wave: constant to 1% over the
        // central half of the grid.
        let g = grid_256();
        let f = gaussian_source(g, 10.0 * g.width(), 1.0).unwrap();
        let center = f.amplitude()[[128, 128]].re;
        for iy in (64..192).step_by(7) {
            for ix in (64..192).step_by(7) {
                let v = f.amplitude()[[iy, ix]].re;
                assert!((v - center).abs() / center < 0.01);
            }
        }
    }

    #[test]
    fn gaussian_rejects_under_resolved_waist() {
        let g = grid_256();
        let err = gaussian_source(g, 30e-6, 1.0).unwrap_err();
        assert!(matches!(err, Error::Sampling(_)));
    }

    #[test]
    fn gaussian_energy_matches_closed_form() {
        // Continuum integral of e0^2 exp(-2 r^2/w0^2) is e0^2 pi w0^2 / 2.
        let g = GridSpec::square(1024, 10e-6, 266e-9).unwrap();
        let w0 = 400e-6;
        let f = gaussian_source(g, w0, 1.0).unwrap();
        let expected = PI * w0 * w0 / 2.0;
        let got = energy(&f);
        assert!(
            (got - expected).abs() / expected < 1e-3,
            "energy {got:.6e} vs closed form {expected:.6e}"
        );
    }

    #[test]
    fn gaussian_is_rotation_symmetric() {
        let g = grid_256();
        let f = gaussian_source(g, 300e-6, 1.0).unwrap();
        let a = f.amplitude();
        for iy in (0..256).step_by(13) {
            for ix in (0..256).step_by(13) {
                // Transposition swaps x and y; reflection maps i -> 256 - i
                // (skipping the unpaired row/col 0 of an even grid).
                assert_eq!(a[[iy, ix]], a[[ix, iy]]);
                if iy > 0 && ix > 0 {
                    assert_eq!(a[[iy, ix]], a[[256 - iy, 256 - ix]]);
                }
            }
        }
    }

    #[test]
    fn zero_phase_mask_is_identity() {
        let g = grid_256();
        let f = gaussian_source(g, 300e-6, 1.0).unwrap();
        let phase = PhaseProfile::flat(g, 0.0);
        let out = apply_mask(&f, &phase, None).unwrap();
        assert_eq!(out.amplitude(), f.amplitude());
    }

    #[test]
    fn pi_phase_mask_flips_sign() {
        let g = grid_256();
        let f = gaussian_source(g, 300e-6, 1.0).unwrap();
        let phase = PhaseProfile::flat(g, PI);
        let out = apply_mask(&f, &phase, None).unwrap();
        for (o, i) in out.amplitude().iter().zip(f.amplitude().iter()) {
            assert!((o + i).norm() < 1e-15);
        }
    }

    #[test]
    fn mask_rejects_dimension_mismatch() {
        let g = grid_256();
        let other = GridSpec::square(128, 10e-6, 266e-9).unwrap();
        let f = gaussian_source(g, 300e-6, 1.0).unwrap();
        let phase = PhaseProfile::flat(other, 0.0);
        assert!(matches!(
            apply_mask(&f, &phase, None),
            Err(Error::GridMismatch { .. })
        ));
    }

    #[test]
    fn mask_rejects_window_outside_unit_range() {
        let g = grid_256();
        let f = gaussian_source(g, 300e-6, 1.0).unwrap();
        let phase = PhaseProfile::flat(g, 0.0);
        let mut w = Array2::from_elem(g.shape(), 0.5);
        w[[0, 0]] = 1.5;
        assert!(apply_mask(&f, &phase, Some(&w)).is_err());
    }

    #[test]
    fn energy_of_zero_field_and_single_pixel() {
        let g = GridSpec::square(16, 1e-6, 266e-9).unwrap();
        assert_eq!(energy(&Field::zeros(g)), 0.0);
        let mut a = Array2::zeros(g.shape());
        a[[3, 7]] = Complex64::new(1.0, 0.0);
        let f = Field::new(g, a).unwrap();
        assert!((energy(&f) - 1e-12).abs() < 1e-24);
    }

    #[test]
    fn energy_invariant_under_transposition() {
        let g = grid_256();
        let f = gaussian_source(g, 300e-6, 1.3).unwrap();
        let phase = PhaseProfile::from_fn(g, |x, y| 1e4 * x + 3e4 * y).unwrap();
        let f = apply_mask(&f, &phase, None).unwrap();
        let t = Field::new(g, f.amplitude().t().to_owned()).unwrap();
        let (a, b) = (energy(&f), energy(&t));
        assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn intensity_of_a_pixel() {
        let g = GridSpec::square(16, 1e-6, 266e-9).unwrap();
        let mut a = Array2::zeros(g.shape());
        a[[5, 5]] = Complex64::new(3.0, 4.0);
        let f = Field::new(g, a).unwrap();
        let m = intensity(&f, false).unwrap();
        assert!((m.values()[[5, 5]] - 25.0).abs() < 1e-12);
    }

    #[test]
    fn normalized_intensity_peaks_at_one() {
        let g = grid_256();
        let f = gaussian_source(g, 300e-6, 7.0).unwrap();
        let m = intensity(&f, true).unwrap();
        assert_eq!(m.max(), 1.0);
        assert!(m.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn normalizing_zero_field_errors() {
        let g = grid_256();
        let err = intensity(&Field::zeros(g), true).unwrap_err();
        assert!(matches!(err, Error::ZeroField(_)));
    }

    #[test]
    fn intensity_one_over_e2_radius_matches_waist() {
        let g = grid_256();
        let w0 = 400e-6;
        let f = gaussian_source(g, w0, 1.0).unwrap();
        let m = intensity(&f, true).unwrap();
        // Walk outward from the center along +x until I < e^-2.
        let target = (-2.0_f64).exp();
        let row = 128;
        let mut crossing = None;
        for ix in 129..256 {
            if m.values()[[row, ix]] < target {
                crossing = Some(ix);
                break;
            }
        }
        let ix = crossing.expect("intensity never fell below e^-2");
        // Linear interpolation across the crossing pixel pair.
        let (above, below) = (m.values()[[row, ix - 1]], m.values()[[row, ix]]);
        let r = g.x_at(ix - 1) + g.dx() * (above - target) / (above - below);
        assert!(
            (r - w0).abs() <= g.dx(),
            "1/e^2 radius {r:.3e} not within one pixel of {w0:.3e}"
        );
    }

    #[test]
    fn field_rejects_non_finite() {
        let g = GridSpec::square(16, 1e-6, 266e-9).unwrap();
        let mut a = Array2::zeros(g.shape());
        a[[2, 2]] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(
            Field::new(g, a),
            Err(Error::NonFinite { iy: 2, ix: 2 })
        ));
    }

    #[test]
    fn centroid_of_offset_spot() {
        let g = GridSpec::square(64, 1e-6, 266e-9).unwrap();
        let mut a = Array2::zeros(g.shape());
        a[[40, 20]] = Complex64::new(2.0, 0.0);
        let f = Field::new(g, a).unwrap();
        let m = intensity(&f, false).unwrap();
        let (cx, cy) = m.centroid().unwrap();
        assert!((cx - g.x_at(20)).abs() < 1e-12);
        assert!((cy - g.y_at(40)).abs() < 1e-12);
    }
}
