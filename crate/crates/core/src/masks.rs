//! Synthesis of the three diffractive optical elements and their
//! fabrication-facing representations.
//!
//! Three element families are covered:
//!
//! * **Fork grating** — a linear grating with an embedded phase dislocation,
//!   `Phi(x, y) = 2 pi x / x0 + m theta`. Binarized through a cosine
//!   modulation function, diffraction order `n` of the mask carries an
//!   optical vortex of charge `n * m`.
//! * **Spiral phase plate (SPP)** — a helical surface relief imprinting
//!   `ell * theta` of phase per revolution. The relief is exported as a
//!   monotone staircase of `sectors` azimuthal steps rising to the total
//!   height `h_s = ell lambda / (n - n0)`; the transmitted phase is the
//!   helical ramp quantized to `sectors` levels per 2 pi wrap.
//! * **Binary axicon** — a two-level Archimedean-spiral phase,
//!   `sign(sin(m theta - k_r r))`, producing a quasi-Bessel vortex beam.
//!
//! All azimuths use the full-range two-argument arctangent measured
//! counterclockwise from the +x axis; the singular pixel at the exact origin
//! gets azimuth 0.

use std::f64::consts::{PI, TAU};

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;

// ---------------------------------------------------------------------------
// Grid-shaped DOE representations
// ---------------------------------------------------------------------------

/// Continuous phase samples in radians on a grid. All values finite.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseProfile {
    grid: GridSpec,
    values: Array2<f64>,
}

impl PhaseProfile {
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
        }
        Ok(Self { grid, values })
    }

    /// Constant phase everywhere.
    pub fn flat(grid: GridSpec, value: f64) -> Self {
        Self {
            grid,
            values: Array2::from_elem(grid.shape(), value),
        }
    }

    /// Evaluate `f(x, y)` on grid-centered coordinates.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64 + Sync) -> Result<Self> {
        let mut values = Array2::zeros(grid.shape());
        Zip::indexed(&mut values).par_for_each(|(iy, ix), v| {
            *v = f(grid.x_at(ix), grid.y_at(iy));
        });
        Self::new(grid, values)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }
}

/// Binary transmission mask with values in {0, 1}.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    grid: GridSpec,
    values: Array2<u8>,
}

impl BinaryMask {
    pub fn new(grid: GridSpec, values: Array2<u8>) -> Result<Self> {
        if values.dim() != grid.shape() {
            return Err(Error::GridMismatch {
                expected: grid.shape(),
                got: values.dim(),
            });
        }
        if let Some(bad) = values.iter().find(|&&v| v > 1) {
            return Err(Error::InvalidParameter(format!(
                "binary mask value {bad} outside {{0, 1}}"
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &Array2<u8> {
        &self.values
    }

    /// Fraction of pixels equal to 1.
    pub fn fill_factor(&self) -> f64 {
        let ones: usize = self.values.iter().map(|&v| v as usize).sum();
        ones as f64 / self.values.len() as f64
    }

    /// View the mask as a real amplitude window (0.0 or 1.0 per pixel),
    /// suitable for [`crate::field::apply_mask`].
    pub fn to_window(&self) -> Array2<f64> {
        self.values.mapv(f64::from)
    }
}

/// Physical surface relief in meters, non-negative everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightMap {
    grid: GridSpec,
    values: Array2<f64>,
}

impl HeightMap {
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
                    "negative height {v} at ({iy}, {ix})"
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
}

// ---------------------------------------------------------------------------
// Element parameter records
// ---------------------------------------------------------------------------

/// Fork-grating parameters: topological charge `m`, grating period `x0`,
/// modulation depth `alpha` in (0, 1] and binarization threshold in
/// `[0, alpha]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForkGratingSpec {
    pub m: i32,
    pub period: f64,
    pub alpha: f64,
    pub threshold: f64,
}

impl ForkGratingSpec {
    /// 50% duty-cycle defaults: `alpha = 1`, `threshold = alpha / 2`.
    pub fn new(m: i32, period: f64) -> Result<Self> {
        Self::with_binarization(m, period, 1.0, 0.5)
    }

    pub fn with_binarization(m: i32, period: f64, alpha: f64, threshold: f64) -> Result<Self> {
        let spec = Self {
            m,
            period,
            alpha,
            threshold,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grating period must be positive, got {}",
                self.period
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "modulation depth {} outside (0, 1]",
                self.alpha
            )));
        }
        if !(0.0..=self.alpha).contains(&self.threshold) {
            return Err(Error::InvalidParameter(format!(
                "threshold {} outside [0, alpha = {}]",
                self.threshold, self.alpha
            )));
        }
        Ok(())
    }
}

/// Spiral-phase-plate parameters.
///
/// `ell` is the target OAM per photon (non-negative; mirror the plate for the
/// opposite handedness), `sectors` the number of azimuthal quantization
/// steps, `wavelength` the design wavelength, `n_plate`/`n_medium` the
/// refractive indices, `h0` the base thickness and `aperture_d` the clear
/// aperture diameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SppSpec {
    pub ell: u32,
    pub sectors: u32,
    pub wavelength: f64,
    pub n_plate: f64,
    pub n_medium: f64,
    pub h0: f64,
    pub aperture_d: f64,
}

impl SppSpec {
    pub fn new(
        ell: u32,
        sectors: u32,
        wavelength: f64,
        n_plate: f64,
        n_medium: f64,
        h0: f64,
        aperture_d: f64,
    ) -> Result<Self> {
        let spec = Self {
            ell,
            sectors,
            wavelength,
            n_plate,
            n_medium,
            h0,
            aperture_d,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sectors < 1 {
            return Err(Error::InvalidParameter("sectors must be >= 1".into()));
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "wavelength must be positive, got {}",
                self.wavelength
            )));
        }
        if !(self.n_plate > self.n_medium) {
            return Err(Error::InvalidParameter(format!(
                "plate index {} must exceed medium index {}",
                self.n_plate, self.n_medium
            )));
        }
        if !(self.h0 >= 0.0 && self.h0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "base thickness must be non-negative, got {}",
                self.h0
            )));
        }
        if !(self.aperture_d > 0.0 && self.aperture_d.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "aperture must be positive, got {}",
                self.aperture_d
            )));
        }
        Ok(())
    }

    /// Total height variation over one revolution,
    /// `h_s = ell lambda / (n - n0)`.
    pub fn total_height(&self) -> f64 {
        self.ell as f64 * self.wavelength / (self.n_plate - self.n_medium)
    }

    /// Height increment per azimuthal sector, `h_s / sectors`.
    pub fn sector_height_step(&self) -> f64 {
        self.total_height() / self.sectors as f64
    }

    /// Constant phase offset from the base thickness,
    /// `2 pi n_plate h0 / lambda`.
    pub fn base_phase(&self) -> f64 {
        TAU * self.n_plate * self.h0 / self.wavelength
    }
}

/// Binary-axicon parameters: topological charge `m`, radial wave number
/// `k_r = 2 pi / p` for spiral period `p`, and clear aperture diameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxiconSpec {
    pub m: i32,
    pub k_r: f64,
    pub aperture_d: f64,
}

impl AxiconSpec {
    pub fn new(m: i32, k_r: f64, aperture_d: f64) -> Result<Self> {
        let spec = Self { m, k_r, aperture_d };
        spec.validate()?;
        Ok(spec)
    }

    /// Construct from the spiral period `p = 2 pi / k_r`.
    pub fn from_period(m: i32, period: f64, aperture_d: f64) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "spiral period must be positive, got {period}"
            )));
        }
        Self::new(m, TAU / period, aperture_d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_r > 0.0 && self.k_r.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "radial wave number must be positive, got {}",
                self.k_r
            )));
        }
        if !(self.aperture_d > 0.0 && self.aperture_d.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "aperture must be positive, got {}",
                self.aperture_d
            )));
        }
        Ok(())
    }

    /// Spiral period `p = 2 pi / k_r`.
    pub fn period(&self) -> f64 {
        TAU / self.k_r
    }
}

/// Apodization window parameters: outer truncation radius `r0` with exponent
/// `p_out`, central suppression radius `rc` with exponent `q_in`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApodizationSpec {
    pub r0: f64,
    pub p_out: f64,
    pub rc: f64,
    pub q_in: f64,
}

impl ApodizationSpec {
    pub fn new(r0: f64, p_out: f64, rc: f64, q_in: f64) -> Result<Self> {
        let spec = Self {
            r0,
            p_out,
            rc,
            q_in,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rc > 0.0 && self.r0 > self.rc && self.r0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need r0 > rc > 0, got r0 = {}, rc = {}",
                self.r0, self.rc
            )));
        }
        if !(self.p_out >= 1.0 && self.q_in >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "exponents must be >= 1, got p_out = {}, q_in = {}",
                self.p_out, self.q_in
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Synthesis operations
// ---------------------------------------------------------------------------

/// Azimuth in radians measured counterclockwise from +x; the origin pixel
/// gets 0.
#[inline]
pub(crate) fn azimuth(x: f64, y: f64) -> f64 {
    if x == 0.0 && y == 0.0 {
        0.0
    } else {
        y.atan2(x)
    }
}

fn check_period_sampling(period: f64, grid: &GridSpec, what: &str) -> Result<()> {
    let min = 4.0 * grid.dx().max(grid.dy());
    if period < min {
        return Err(Error::Sampling(format!(
            "{what} period {period:.3e} m needs at least 4 samples ({min:.3e} m on this grid)"
        )));
    }
    Ok(())
}

fn check_aperture_fits(aperture_d: f64, grid: &GridSpec, what: &str) -> Result<()> {
    let window = grid.width().min(grid.height());
    if aperture_d > window {
        return Err(Error::InvalidParameter(format!(
            "{what} aperture {aperture_d:.3e} m exceeds the {window:.3e} m grid window"
        )));
    }
    Ok(())
}

/// Continuous fork-grating phase `2 pi x / x0 + m * theta`.
pub fn fork_phase(grid: GridSpec, spec: &ForkGratingSpec) -> Result<PhaseProfile> {
    spec.validate()?;
    check_period_sampling(spec.period, &grid, "grating")?;
    let m = spec.m as f64;
    let inv_period = 1.0 / spec.period;
    PhaseProfile::from_fn(grid, move |x, y| {
        TAU * x * inv_period + m * azimuth(x, y)
    })
}

/// Threshold the cosine modulation `M = alpha (1 + cos Phi) / 2` of a phase
/// profile into a `{0, 1}` mask: 1 where `M > threshold`.
pub fn binarize(phase: &PhaseProfile, alpha: f64, threshold: f64) -> Result<BinaryMask> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "modulation depth {alpha} outside (0, 1]"
        )));
    }
    if !(0.0..=alpha).contains(&threshold) {
        return Err(Error::InvalidParameter(format!(
            "threshold {threshold} outside [0, alpha = {alpha}]"
        )));
    }
    let values = phase.values().mapv(|p| {
        let modulation = 0.5 * alpha * (1.0 + p.cos());
        u8::from(modulation > threshold)
    });
    BinaryMask::new(phase.grid(), values)
}

/// Synthesize the SPP transmission phase and its surface relief.
///
/// The transmitted phase is the helical ramp `ell * theta` quantized to
/// `sectors` levels per 2 pi wrap (each level is a step of
/// `2 pi / sectors`), plus the constant base-thickness phase. The height map
/// is the fabrication staircase: `sectors` flat azimuthal steps of
/// `h_s / sectors` each, rising monotonically from `h0` to `h0 + h_s` over
/// one revolution. Outside the clear aperture the phase is 0 and the height
/// is the base thickness.
pub fn spp_phase(grid: GridSpec, spec: &SppSpec) -> Result<(PhaseProfile, HeightMap)> {
    spec.validate()?;
    check_aperture_fits(spec.aperture_d, &grid, "SPP")?;

    let sectors = spec.sectors as f64;
    let ell = spec.ell as f64;
    let base_phase = spec.base_phase();
    let h0 = spec.h0;
    let dh = spec.sector_height_step();
    let r_ap = spec.aperture_d / 2.0;
    let level = TAU / sectors;

    let shape = grid.shape();
    let mut phase = Array2::zeros(shape);
    let mut height = Array2::from_elem(shape, h0);
    Zip::indexed(&mut phase)
        .and(&mut height)
        .par_for_each(|(iy, ix), p, h| {
            let x = grid.x_at(ix);
            let y = grid.y_at(iy);
            if x * x + y * y > r_ap * r_ap {
                *p = 0.0;
                *h = h0;
                return;
            }
            // theta in [0, 2 pi)
            let theta = azimuth(x, y).rem_euclid(TAU);
            // Phase ramp quantized within each 2 pi wrap.
            let windings = ell * theta / TAU;
            let cell = (windings.fract() * sectors).floor().min(sectors - 1.0);
            *p = level * cell + base_phase;
            // Fabrication staircase: one flat step per azimuthal sector.
            let sector = (theta * sectors / TAU).floor().min(sectors - 1.0);
            *h = h0 + dh * sector;
        });

    Ok((
        PhaseProfile::new(grid, phase)?,
        HeightMap::new(grid, height)?,
    ))
}

/// Two-level axicon phase: `pi` where `sin(m theta - k_r r) >= 0`, else 0,
/// inside the clear aperture; 0 outside (opacity is handled by a separate
/// aperture window). The inter-level difference is exactly pi.
pub fn axicon_phase(grid: GridSpec, spec: &AxiconSpec) -> Result<PhaseProfile> {
    spec.validate()?;
    check_period_sampling(spec.period(), &grid, "axicon spiral")?;
    check_aperture_fits(spec.aperture_d, &grid, "axicon")?;
    let m = spec.m as f64;
    let k_r = spec.k_r;
    let r_ap = spec.aperture_d / 2.0;
    PhaseProfile::from_fn(grid, move |x, y| {
        let r2 = x * x + y * y;
        if r2 > r_ap * r_ap {
            return 0.0;
        }
        let u = m * azimuth(x, y) - k_r * r2.sqrt();
        // sign(0) counts as +.
        if u.sin() >= 0.0 {
            PI
        } else {
            0.0
        }
    })
}

/// Thickness of a binary (pi-shift) phase layer: `lambda / (2 (n - 1))`.
pub fn binary_layer_thickness(wavelength: f64, n: f64) -> Result<f64> {
    if !(wavelength > 0.0 && wavelength.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "wavelength must be positive, got {wavelength}"
        )));
    }
    if !(n > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "refractive index must exceed 1, got {n}"
        )));
    }
    Ok(wavelength / (2.0 * (n - 1.0)))
}

/// Radial apodization window
/// `A(R) = exp(-(R/r0)^p_out) * (1 - exp(-(R/rc)^q_in))`.
///
/// Suppresses both the window edge and the on-axis region: `A(0) = 0`,
/// `A -> 0` as `R -> inf`, and all values lie in `[0, 1)`.
pub fn apodization_window(grid: GridSpec, spec: &ApodizationSpec) -> Result<Array2<f64>> {
    spec.validate()?;
    let mut w = Array2::zeros(grid.shape());
    Zip::indexed(&mut w).par_for_each(|(iy, ix), v| {
        let x = grid.x_at(ix);
        let y = grid.y_at(iy);
        let r = (x * x + y * y).sqrt();
        let outer = (-(r / spec.r0).powf(spec.p_out)).exp();
        let inner = 1.0 - (-(r / spec.rc).powf(spec.q_in)).exp();
        *v = outer * inner;
    });
    Ok(w)
}

/// Hard-edged circular aperture window: 1 inside the diameter, 0 outside.
pub fn aperture_window(grid: GridSpec, diameter: f64) -> Result<Array2<f64>> {
    if !(diameter > 0.0 && diameter.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "aperture diameter must be positive, got {diameter}"
        )));
    }
    let r2 = diameter * diameter / 4.0;
    let mut w = Array2::zeros(grid.shape());
    Zip::indexed(&mut w).par_for_each(|(iy, ix), v| {
        let x = grid.x_at(ix);
        let y = grid.y_at(iy);
        *v = if x * x + y * y <= r2 { 1.0 } else { 0.0 };
    });
    Ok(w)
}

/// Vortex charge carried by diffraction order `n` of a charge-`m` fork
/// grating: `ell = n * m`.
pub fn predicted_charge(order: i32, m: i32) -> i64 {
    order as i64 * m as i64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, pitch: f64) -> GridSpec {
        GridSpec::square(n, pitch, 266e-9).unwrap()
    }

    #[test]
    fn fork_m0_is_pure_linear_grating() {
        let g = grid(64, 1e-6);
        let spec = ForkGratingSpec::new(0, 10e-6).unwrap();
        let p = fork_phase(g, &spec).unwrap();
        // Constant along y.
        for ix in 0..64 {
            let col0 = p.values()[[0, ix]];
            for iy in 1..64 {
                assert_eq!(p.values()[[iy, ix]], col0);
            }
        }
    }

    #[test]
    fn fork_azimuthal_term_on_positive_y_axis() {
        let g = grid(64, 1e-6);
        let spec = ForkGratingSpec::new(2, 10e-6).unwrap();
        let p = fork_phase(g, &spec).unwrap();
        // On (0, y > 0) the azimuth is pi/2, so m = 2 contributes exactly pi.
        let v = p.values()[[40, 32]]; // x = 0, y = 8 um
        assert!((v - PI).abs() < 1e-12);
    }

    #[test]
    fn fork_linear_term_half_period() {
        // Phi(x0/2, 0) - Phi(0+, 0) = pi from the linear term alone.
        let g = grid(64, 1e-6);
        let x0 = 100e-6;
        let spec = ForkGratingSpec::new(2, x0).unwrap();
        let p = fork_phase(g, &spec).unwrap();
        let at = |x: f64| TAU * x / x0; // azimuth = 0 on the +x axis
        assert!((at(50e-6) - at(0.0) - PI).abs() < 1e-12);
        // And the sampled value at (x, 0) matches the formula.
        let v = p.values()[[32, 42]]; // x = 10 um, y = 0
        assert!((v - TAU * 10e-6 / x0).abs() < 1e-12);
    }

    #[test]
    fn fork_rejects_under_sampled_period() {
        let g = grid(64, 1e-6);
        let spec = ForkGratingSpec::new(2, 3e-6).unwrap();
        assert!(matches!(fork_phase(g, &spec), Err(Error::Sampling(_))));
    }

    #[test]
    fn fork_mirror_symmetry_in_m() {
        // Subtracting the m = 0 profile isolates the vortex term; +m and -m
        // negate each other up to the rounding of the original sums.
        let g = grid(64, 1e-6);
        let plus = fork_phase(g, &ForkGratingSpec::new(3, 10e-6).unwrap()).unwrap();
        let minus = fork_phase(g, &ForkGratingSpec::new(-3, 10e-6).unwrap()).unwrap();
        let linear = fork_phase(g, &ForkGratingSpec::new(0, 10e-6).unwrap()).unwrap();
        for iy in 0..64 {
            for ix in 0..64 {
                let a = plus.values()[[iy, ix]] - linear.values()[[iy, ix]];
                let b = minus.values()[[iy, ix]] - linear.values()[[iy, ix]];
                assert!((a + b).abs() < 1e-12, "({iy}, {ix}): {a} vs {b}");
            }
        }
    }

    #[test]
    fn binarize_constants() {
        let g = grid(32, 1e-6);
        let all_ones = binarize(&PhaseProfile::flat(g, 0.0), 1.0, 0.5).unwrap();
        assert_eq!(all_ones.fill_factor(), 1.0);
        let all_zeros = binarize(&PhaseProfile::flat(g, PI), 1.0, 0.5).unwrap();
        assert_eq!(all_zeros.fill_factor(), 0.0);
    }

    #[test]
    fn binarize_duty_cycle_is_half_at_midpoint_threshold() {
        // Fork with a 10-pixel period: the cosine spends half of each period
        // above its midline, so the fill factor is 0.5 +- 0.02.
        let g = grid(256, 1e-6);
        let spec = ForkGratingSpec::new(2, 10e-6).unwrap();
        let p = fork_phase(g, &spec).unwrap();
        let mask = binarize(&p, 1.0, 0.5).unwrap();
        let fill = mask.fill_factor();
        assert!((fill - 0.5).abs() < 0.02, "fill factor {fill}");
    }

    #[test]
    fn binarize_depends_on_phase_only_through_cosine() {
        let g = grid(64, 1e-6);
        let spec = ForkGratingSpec::new(2, 8e-6).unwrap();
        let p = fork_phase(g, &spec).unwrap();
        let neg = PhaseProfile::new(g, p.values().mapv(|v| -v)).unwrap();
        let a = binarize(&p, 0.8, 0.3).unwrap();
        let b = binarize(&neg, 0.8, 0.3).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn spp_heights_match_design_numbers() {
        // ell = 64, 64 sectors, fused silica at the design wavelength:
        // total height 34.7 um, per-sector step ~543 nm.
        let spec = SppSpec::new(64, 64, 266e-9, 1.49, 1.0, 0.0, 20e-3).unwrap();
        assert!((spec.total_height() - 34.743e-6).abs() < 0.05e-6);
        assert!((spec.sector_height_step() - 542.9e-9).abs() < 1e-9);
    }

    #[test]
    fn spp_zero_charge_is_flat() {
        let g = grid(64, 1e-6);
        let spec = SppSpec::new(0, 16, 266e-9, 1.49, 1.0, 1e-6, 50e-6).unwrap();
        let (phase, height) = spp_phase(g, &spec).unwrap();
        let base = spec.base_phase();
        for ((iy, ix), &v) in phase.values().indexed_iter() {
            let x = g.x_at(ix);
            let y = g.y_at(iy);
            if x * x + y * y <= 25e-6 * 25e-6 {
                assert!((v - base).abs() < 1e-12, "phase {v} at ({iy}, {ix})");
            }
        }
        assert!(height.values().iter().all(|&h| h == 1e-6));
    }

    #[test]
    fn spp_quarter_turn_steps() {
        // ell = 1 with 4 sectors: phase steps 0, pi/2, pi, 3pi/2 by quadrant.
        let g = grid(64, 1e-6);
        let spec = SppSpec::new(1, 4, 266e-9, 1.49, 1.0, 0.0, 60e-6).unwrap();
        let (phase, _) = spp_phase(g, &spec).unwrap();
        let probe = |x: f64, y: f64| {
            let ix = (x / 1e-6).round() as i64 + 32;
            let iy = (y / 1e-6).round() as i64 + 32;
            phase.values()[[iy as usize, ix as usize]]
        };
        assert_eq!(probe(10e-6, 5e-6), 0.0); // theta in [0, pi/2)
        assert_eq!(probe(-5e-6, 10e-6), PI / 2.0); // theta in [pi/2, pi)
        assert_eq!(probe(-10e-6, -5e-6), PI); // theta in [pi, 3pi/2)
        assert_eq!(probe(5e-6, -10e-6), 3.0 * PI / 2.0); // theta in [3pi/2, 2pi)
    }

    #[test]
    fn spp_phase_has_sector_many_levels() {
        let g = grid(128, 1e-6);
        let spec = SppSpec::new(3, 8, 266e-9, 1.49, 1.0, 0.0, 120e-6).unwrap();
        let (phase, _) = spp_phase(g, &spec).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for ((iy, ix), &v) in phase.values().indexed_iter() {
            let x = g.x_at(ix);
            let y = g.y_at(iy);
            if x * x + y * y <= 55e-6 * 55e-6 {
                // Quantized levels are exact multiples of 2 pi / sectors.
                let level = (v / (TAU / 8.0)).round() as i64;
                assert!((v - level as f64 * TAU / 8.0).abs() < 1e-12);
                seen.insert(level);
            }
        }
        assert_eq!(seen.len(), 8, "levels seen: {seen:?}");
    }

    #[test]
    fn spp_height_staircase_monotone_and_wraps_by_total() {
        let g = grid(128, 1e-6);
        let spec = SppSpec::new(5, 16, 266e-9, 1.49, 1.0, 2e-6, 120e-6).unwrap();
        let (_, height) = spp_phase(g, &spec).unwrap();
        // Sample a circle inside the aperture at increasing theta, staying
        // clear of the wrap at theta = 0 where pixel rounding can jump the
        // seam early (the wrap is checked separately below).
        let r = 40e-6;
        let n = 4096;
        let margin = 0.05;
        let mut prev = None;
        let mut max_seen: f64 = 0.0;
        for k in 0..n {
            let theta = margin + (TAU - 2.0 * margin) * k as f64 / n as f64;
            let x = r * theta.cos();
            let y = r * theta.sin();
            let (iy, ix) = g.nearest_index(x, y).unwrap();
            let h = height.values()[[iy, ix]];
            if let Some(p) = prev {
                // Nearest-pixel azimuth jitter can momentarily re-sample the
                // previous sector but never skips backwards by more than one
                // step.
                assert!(h >= p - spec.sector_height_step() * (1.0 + 1e-12));
            }
            max_seen = max_seen.max(h);
            prev = Some(h);
        }
        let expected_top = spec.h0 + spec.total_height() * 15.0 / 16.0;
        assert!((max_seen - expected_top).abs() < 1e-12);
        // Wrap at theta = 0: top step down to h0.
        let (iy0, ix0) = g.nearest_index(r, -1e-6).unwrap();
        let (iy1, ix1) = g.nearest_index(r, 1e-6).unwrap();
        let drop = height.values()[[iy0, ix0]] - height.values()[[iy1, ix1]];
        assert!((drop - spec.total_height() * 15.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn spp_accumulated_phase_over_revolution() {
        // Sum of wrapped per-step increments around a full circle is
        // exactly 2 pi ell.
        let g = grid(256, 1e-6);
        for (ell, sectors) in [(1u32, 8u32), (3, 16), (5, 64)] {
            let spec = SppSpec::new(ell, sectors, 266e-9, 1.49, 1.0, 0.0, 250e-6).unwrap();
            let (phase, _) = spp_phase(g, &spec).unwrap();
            let r = 100e-6;
            let n = 1 << 16;
            let mut acc = 0.0;
            let mut prev = phase.values()[g.nearest_index(r, 0.0).unwrap()];
            for k in 1..=n {
                let theta = TAU * k as f64 / n as f64;
                let (iy, ix) = g.nearest_index(r * theta.cos(), r * theta.sin()).unwrap();
                let v = phase.values()[[iy, ix]];
                let mut d = v - prev;
                // Wrap increments into (-pi, pi].
                while d <= -PI {
                    d += TAU;
                }
                while d > PI {
                    d -= TAU;
                }
                acc += d;
                prev = v;
            }
            assert!(
                (acc - TAU * ell as f64).abs() < 1e-9,
                "ell {ell}, sectors {sectors}: accumulated {acc}"
            );
        }
    }

    #[test]
    fn spp_rejects_oversized_aperture() {
        let g = grid(64, 1e-6);
        let spec = SppSpec::new(1, 4, 266e-9, 1.49, 1.0, 0.0, 100e-6).unwrap();
        assert!(spp_phase(g, &spec).is_err());
    }

    #[test]
    fn axicon_is_binary_with_pi_contrast() {
        let g = grid(256, 1e-6);
        let spec = AxiconSpec::from_period(3, 20e-6, 200e-6).unwrap();
        let p = axicon_phase(g, &spec).unwrap();
        let mut levels = std::collections::BTreeSet::new();
        for ((iy, ix), &v) in p.values().indexed_iter() {
            let x = g.x_at(ix);
            let y = g.y_at(iy);
            if x * x + y * y <= 100e-6 * 100e-6 {
                levels.insert((v * 1e12).round() as i64);
            }
        }
        let expected: std::collections::BTreeSet<i64> =
            [0, (PI * 1e12).round() as i64].into_iter().collect();
        assert_eq!(levels, expected);
    }

    #[test]
    fn axicon_level_flips_every_half_period_on_x_axis() {
        // Along +x the argument is -k_r r: zero crossings at r = j p / 2.
        let g = grid(512, 1e-6);
        let period = 100e-6;
        let spec = AxiconSpec::from_period(3, period, 500e-6).unwrap();
        let p = axicon_phase(g, &spec).unwrap();
        let sample = |x: f64| p.values()[g.nearest_index(x, 0.0).unwrap()];
        // Stay clear of the exact crossings; probe mid-step.
        assert_eq!(sample(25e-6), 0.0); // sin(-k r) < 0 for r in (0, p/2)
        assert_eq!(sample(75e-6), PI); // sin back above zero
        assert_eq!(sample(125e-6), 0.0);
        assert_eq!(sample(175e-6), PI);
    }

    #[test]
    fn axicon_m0_is_concentric_rings() {
        let g = grid(256, 1e-6);
        let spec = AxiconSpec::from_period(0, 20e-6, 250e-6).unwrap();
        let p = axicon_phase(g, &spec).unwrap();
        // Rotational symmetry: value depends only on radius. Compare the
        // +x and +y axes.
        for k in 1..100 {
            let r = k as f64 * 1e-6;
            let vx = p.values()[g.nearest_index(r, 0.0).unwrap()];
            let vy = p.values()[g.nearest_index(0.0, r).unwrap()];
            assert_eq!(vx, vy, "ring mismatch at r = {r}");
        }
    }

    #[test]
    fn axicon_four_fold_symmetry_for_m4() {
        // Rotating the m = 4 mask by 90 degrees maps samples onto samples;
        // allow a small mismatch budget for pixels that sit numerically on a
        // sign change.
        let g = grid(256, 1e-6);
        let spec = AxiconSpec::from_period(4, 20e-6, 250e-6).unwrap();
        let p = axicon_phase(g, &spec).unwrap();
        let v = p.values();
        let n = 256usize;
        let mut mismatches = 0usize;
        let mut total = 0usize;
        for iy in 1..n {
            for ix in 1..n {
                // (x, y) -> (-y, x): in index space (ix, iy) -> (n - iy, ix).
                let jx = n - iy;
                let jy = ix;
                if jx >= n || jy >= n {
                    continue;
                }
                total += 1;
                if (v[[iy, ix]] - v[[jy, jx]]).abs() > 1e-9 {
                    mismatches += 1;
                }
            }
        }
        assert!(
            (mismatches as f64) < 0.01 * total as f64,
            "{mismatches} of {total} pixels break 4-fold symmetry"
        );
    }

    #[test]
    fn axicon_rejects_under_sampled_period() {
        let g = grid(64, 10e-6);
        let spec = AxiconSpec::from_period(3, 20e-6, 500e-6).unwrap();
        assert!(matches!(axicon_phase(g, &spec), Err(Error::Sampling(_))));
    }

    #[test]
    fn binary_layer_thickness_values() {
        // SU-8 at 266 nm: ~201.5 nm; n = 1.5 gives exactly the wavelength;
        // doubling the wavelength doubles the thickness.
        let h = binary_layer_thickness(266e-9, 1.66).unwrap();
        assert!((h - 201.5e-9).abs() < 0.1e-9);
        let h = binary_layer_thickness(266e-9, 1.5).unwrap();
        assert!((h - 266e-9).abs() < 1e-15);
        let h = binary_layer_thickness(532e-9, 1.66).unwrap();
        assert!((h - 403.0e-9).abs() < 0.1e-9);
        assert!(binary_layer_thickness(266e-9, 1.0).is_err());
        assert!(binary_layer_thickness(266e-9, 0.9).is_err());
    }

    #[test]
    fn apodization_zero_on_axis_and_bounded() {
        let g = grid(128, 1e-6);
        let spec = ApodizationSpec::new(50e-6, 4.0, 5e-6, 4.0).unwrap();
        let w = apodization_window(g, &spec).unwrap();
        assert_eq!(w[[64, 64]], 0.0);
        assert!(w.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn apodization_at_outer_radius_with_saturated_core() {
        // rc << r0 and a steep inner exponent: A(r0) ~ 1/e.
        let g = grid(256, 1e-6);
        let spec = ApodizationSpec::new(100e-6, 2.0, 2e-6, 8.0).unwrap();
        let w = apodization_window(g, &spec).unwrap();
        let v = w[g.nearest_index(100e-6, 0.0).unwrap()];
        assert!((v - (-1.0_f64).exp()).abs() < 1e-6, "A(r0) = {v}");
    }

    #[test]
    fn apodization_rises_then_falls() {
        let g = grid(256, 1e-6);
        let spec = ApodizationSpec::new(60e-6, 4.0, 10e-6, 2.0).unwrap();
        let w = apodization_window(g, &spec).unwrap();
        // Radial slice along +x from the center.
        let slice: Vec<f64> = (0..128).map(|k| w[[128, 128 + k]]).collect();
        let peak = slice
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        assert!(peak > 0 && peak < 127);
        for k in 1..=peak {
            assert!(slice[k] >= slice[k - 1] - 1e-15);
        }
        for k in peak + 1..128 {
            assert!(slice[k] <= slice[k - 1] + 1e-15);
        }
    }

    #[test]
    fn aperture_window_hard_edge() {
        let g = grid(64, 1e-6);
        let w = aperture_window(g, 40e-6).unwrap();
        assert_eq!(w[[32, 32]], 1.0);
        assert_eq!(w[g.nearest_index(19e-6, 0.0).unwrap()], 1.0);
        assert_eq!(w[g.nearest_index(21e-6, 0.0).unwrap()], 0.0);
    }

    #[test]
    fn predicted_charges() {
        assert_eq!(predicted_charge(1, 2), 2);
        assert_eq!(predicted_charge(-4, 2), -8);
        assert_eq!(predicted_charge(0, 17), 0);
        assert_eq!(predicted_charge(2, -3), -6);
        // No overflow at i32 extremes.
        assert_eq!(
            predicted_charge(i32::MAX, 2),
            2 * i32::MAX as i64
        );
    }
}
