//! Pipeline configuration: a single JSON document with SI units throughout.
//!
//! The document describes a source beam, an ordered list of optical elements,
//! the diagnostics to run on the final field, and which files to write.
//! Unknown keys are rejected at parse time; semantic violations are collected
//! all at once by [`PipelineConfig::validate`].

use serde::{Deserialize, Serialize};

use twistbeam_core::grid::GridSpec;
use twistbeam_core::masks::{ApodizationSpec, AxiconSpec, ForkGratingSpec, SppSpec};
use twistbeam_core::propagation::{BandLimit, LensAxis, PropagationMethod};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub wavelength: f64,
}

impl GridConfig {
    pub fn build(&self) -> twistbeam_core::Result<GridSpec> {
        GridSpec::new(self.nx, self.ny, self.dx, self.dy, self.wavelength)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    /// 1/e amplitude waist radius, meters.
    pub w0: f64,
    /// Peak amplitude (arbitrary units).
    #[serde(default = "default_e0")]
    pub e0: f64,
}

fn default_e0() -> f64 {
    1.0
}

/// One optical element of the pipeline, applied in order.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Element {
    /// Binarized fork grating used as an amplitude mask.
    ForkAmplitude {
        m: i32,
        period: f64,
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_threshold")]
        threshold: f64,
    },
    /// Continuous fork-grating phase (transmissive phase element).
    ForkPhase { m: i32, period: f64 },
    /// Spiral phase plate.
    Spp {
        ell: u32,
        sectors: u32,
        #[serde(default = "default_n_plate")]
        n_plate: f64,
        #[serde(default = "default_n_medium")]
        n_medium: f64,
        #[serde(default)]
        h0: f64,
        aperture: f64,
    },
    /// Binary spiral axicon. `phase_scale` models a fabricated layer whose
    /// step deviates from exactly pi (1.0 = design depth).
    Axicon {
        m: i32,
        period: f64,
        aperture: f64,
        #[serde(default = "default_phase_scale")]
        phase_scale: f64,
    },
    /// Radial apodization window.
    Apodization {
        r0: f64,
        p_out: f64,
        rc: f64,
        q_in: f64,
    },
    /// Hard circular aperture.
    Aperture { diameter: f64 },
    /// Thin spherical lens.
    Lens { focal_length: f64 },
    /// Thin cylindrical lens.
    CylindricalLens {
        focal_length: f64,
        #[serde(default = "default_axis")]
        axis: LensAxis,
    },
    /// Free-space propagation.
    Propagate {
        z: f64,
        #[serde(default)]
        method: PropagationMethod,
        #[serde(default)]
        band_limit: BandLimit,
    },
}

fn default_alpha() -> f64 {
    1.0
}

fn default_threshold() -> f64 {
    0.5
}

fn default_n_plate() -> f64 {
    1.49
}

fn default_n_medium() -> f64 {
    1.0
}

fn default_phase_scale() -> f64 {
    1.0
}

fn default_axis() -> LensAxis {
    LensAxis::X
}

/// One diagnostic, run on the field after the last element.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnalysisStep {
    /// Azimuthal OAM decomposition of the final field.
    Spectrum {
        ell_min: i32,
        ell_max: i32,
        #[serde(default)]
        center: Option<(f64, f64)>,
    },
    /// Azimuthally averaged intensity profile.
    RadialProfile {
        #[serde(default = "default_bins")]
        bins: usize,
        #[serde(default)]
        center: Option<(f64, f64)>,
    },
    /// Ring lobe count (quasi-Bessel charge identification).
    RingLobes {
        #[serde(default = "default_prominence")]
        prominence: f64,
        #[serde(default)]
        center: Option<(f64, f64)>,
    },
    /// Stripe count after cylindrical-lens conversion.
    HgFringes,
    /// Crop one diffraction order and decompose it.
    ExtractOrder {
        order: i32,
        period: f64,
        focal_length: f64,
        ell_min: i32,
        ell_max: i32,
        #[serde(default)]
        half_width: Option<f64>,
    },
    /// Fraction of source energy inside an annulus of the final field.
    EfficiencyAnnulus { r_min: f64, r_max: f64 },
}

fn default_bins() -> usize {
    256
}

fn default_prominence() -> f64 {
    0.3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory all outputs are written into (created if missing).
    pub dir: String,
    /// Peak-normalized intensity of the final field, PGM16.
    #[serde(default)]
    pub intensity: Option<String>,
    /// Raw complex final field (with a JSON grid sidecar).
    #[serde(default)]
    pub raw_field: Option<String>,
    /// Analysis report, JSON.
    #[serde(default = "default_report")]
    pub report: Option<String>,
    /// Radial profile rows, CSV.
    #[serde(default)]
    pub profile_csv: Option<String>,
    /// OAM spectrum rows, CSV.
    #[serde(default)]
    pub spectrum_csv: Option<String>,
}

fn default_report() -> Option<String> {
    Some("report.json".to_owned())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub grid: GridConfig,
    pub source: SourceConfig,
    pub elements: Vec<Element>,
    #[serde(default)]
    pub analysis: Vec<AnalysisStep>,
    pub output: OutputConfig,
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("config parse error: {e}"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }

    /// Collect every semantic violation at once (empty = valid).
    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        let grid = match self.grid.build() {
            Ok(g) => Some(g),
            Err(e) => {
                errors.push(format!("grid: {e}"));
                None
            }
        };
        if !(self.source.w0 > 0.0) {
            errors.push(format!("source: waist must be positive, got {}", self.source.w0));
        } else if let Some(g) = grid {
            if self.source.w0 < 4.0 * g.dx().max(g.dy()) {
                errors.push(format!(
                    "source: waist {:.3e} m under-resolved on a {:.3e} m pitch",
                    self.source.w0,
                    g.dx().max(g.dy())
                ));
            }
        }
        if self.elements.is_empty() {
            errors.push("elements: list must not be empty".into());
        }
        for (i, el) in self.elements.iter().enumerate() {
            if let Err(e) = validate_element(el) {
                errors.push(format!("elements[{i}]: {e}"));
            }
        }
        for (i, step) in self.analysis.iter().enumerate() {
            if let Err(e) = validate_step(step) {
                errors.push(format!("analysis[{i}]: {e}"));
            }
        }
        if self.output.dir.is_empty() {
            errors.push("output: dir must not be empty".into());
        }
        errors
    }
}

fn validate_element(el: &Element) -> Result<(), String> {
    match el {
        Element::ForkAmplitude {
            m,
            period,
            alpha,
            threshold,
        } => ForkGratingSpec::with_binarization(*m, *period, *alpha, *threshold)
            .map(|_| ())
            .map_err(|e| e.to_string()),
        Element::ForkPhase { m, period } => ForkGratingSpec::new(*m, *period)
            .map(|_| ())
            .map_err(|e| e.to_string()),
        Element::Spp {
            ell,
            sectors,
            n_plate,
            n_medium,
            h0,
            aperture,
        } => SppSpec::new(*ell, *sectors, 266e-9, *n_plate, *n_medium, *h0, *aperture)
            .map(|_| ())
            .map_err(|e| e.to_string()),
        Element::Axicon {
            m,
            period,
            aperture,
            phase_scale,
        } => {
            AxiconSpec::from_period(*m, *period, *aperture).map_err(|e| e.to_string())?;
            if !(*phase_scale > 0.0 && *phase_scale <= 1.2) {
                return Err(format!("phase_scale {phase_scale} outside (0, 1.2]"));
            }
            Ok(())
        }
        Element::Apodization { r0, p_out, rc, q_in } => {
            ApodizationSpec::new(*r0, *p_out, *rc, *q_in)
                .map(|_| ())
                .map_err(|e| e.to_string())
        }
        Element::Aperture { diameter } => {
            if *diameter > 0.0 {
                Ok(())
            } else {
                Err(format!("aperture diameter must be positive, got {diameter}"))
            }
        }
        Element::Lens { focal_length } | Element::CylindricalLens { focal_length, .. } => {
            if *focal_length != 0.0 && focal_length.is_finite() {
                Ok(())
            } else {
                Err(format!("focal length must be nonzero, got {focal_length}"))
            }
        }
        Element::Propagate { z, .. } => {
            if z.is_finite() {
                Ok(())
            } else {
                Err(format!("propagation distance must be finite, got {z}"))
            }
        }
    }
}

fn validate_step(step: &AnalysisStep) -> Result<(), String> {
    match step {
        AnalysisStep::Spectrum { ell_min, ell_max, .. } => {
            if ell_min > ell_max {
                return Err(format!("empty charge range [{ell_min}, {ell_max}]"));
            }
            Ok(())
        }
        AnalysisStep::RadialProfile { bins, .. } => {
            if *bins < 8 {
                return Err(format!("need at least 8 bins, got {bins}"));
            }
            Ok(())
        }
        AnalysisStep::RingLobes { prominence, .. } => {
            if !(*prominence > 0.0 && *prominence < 1.0) {
                return Err(format!("prominence {prominence} outside (0, 1)"));
            }
            Ok(())
        }
        AnalysisStep::HgFringes => Ok(()),
        AnalysisStep::ExtractOrder {
            period,
            focal_length,
            ell_min,
            ell_max,
            ..
        } => {
            if !(*period > 0.0) || !(*focal_length > 0.0) {
                return Err("period and focal_length must be positive".into());
            }
            if ell_min > ell_max {
                return Err(format!("empty charge range [{ell_min}, {ell_max}]"));
            }
            Ok(())
        }
        AnalysisStep::EfficiencyAnnulus { r_min, r_max } => {
            if !(*r_min >= 0.0 && r_max > r_min) {
                return Err(format!("bad annulus [{r_min}, {r_max}]"));
            }
            Ok(())
        }
    }
}
