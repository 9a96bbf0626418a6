//! Structured results of a pipeline run, serialized as the JSON report.

use serde::{Deserialize, Serialize};

/// One analysis result, in the same order as the config's analysis list.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AnalysisResult {
    Spectrum {
        ell_min: i32,
        ell_max: i32,
        dominant_ell: i32,
        bandwidth: f64,
        range_warning: bool,
        /// `[charge, power]` pairs over the requested range.
        power: Vec<(i32, f64)>,
    },
    RadialProfile {
        bins: usize,
        peak_radius: f64,
        center: (f64, f64),
    },
    RingLobes {
        n_lobes: usize,
        ring_radius: f64,
        lobe_angles: Vec<f64>,
        prominence_threshold: f64,
    },
    HgFringes {
        n_fringes: usize,
        stripe_normal_angle: f64,
        axis_ratio: f64,
    },
    ExtractOrder {
        order: i32,
        predicted_center: f64,
        dominant_ell: i32,
        bandwidth: f64,
        /// Window energy as a fraction of the post-source energy.
        energy_fraction: f64,
        power: Vec<(i32, f64)>,
    },
    EfficiencyAnnulus {
        r_min: f64,
        r_max: f64,
        efficiency: f64,
    },
}

/// Top-level report written by `twistbeam run`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    /// Energy of the source beam before any element.
    pub source_energy: f64,
    /// Energy of the field after the last element.
    pub final_energy: f64,
    pub results: Vec<AnalysisResult>,
}

/// Report written by `twistbeam analyze`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub input: String,
    pub results: Vec<AnalysisResult>,
}
