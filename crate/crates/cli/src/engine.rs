//! Pipeline execution: build the source, apply elements in order, run the
//! requested diagnostics, write output files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use twistbeam_core::analysis::{
    self, EfficiencyRegion, LobeOptions, OamOptions, OamSpectrum,
};
use twistbeam_core::field::{self, Field};
use twistbeam_core::grid::GridSpec;
use twistbeam_core::io as fio;
use twistbeam_core::masks::{
    self, ApodizationSpec, AxiconSpec, ForkGratingSpec, PhaseProfile, SppSpec,
};
use twistbeam_core::propagation::{self, LensSpec, PropagationPlan};

use crate::config::{AnalysisStep, Element, PipelineConfig};
use crate::report::{AnalysisResult, RunReport};

/// Grid metadata written next to raw field files so they can be re-imported
/// with their physical scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldSidecar {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub wavelength: f64,
}

impl FieldSidecar {
    pub fn of(grid: &GridSpec) -> Self {
        Self {
            nx: grid.nx(),
            ny: grid.ny(),
            dx: grid.dx(),
            dy: grid.dy(),
            wavelength: grid.wavelength(),
        }
    }

    pub fn build(&self) -> twistbeam_core::Result<GridSpec> {
        GridSpec::new(self.nx, self.ny, self.dx, self.dy, self.wavelength)
    }
}

/// Apply one element to the running field.
pub fn apply_element(field: &Field, element: &Element) -> Result<Field> {
    let grid = field.grid();
    let out = match element {
        Element::ForkAmplitude {
            m,
            period,
            alpha,
            threshold,
        } => {
            let spec = ForkGratingSpec::with_binarization(*m, *period, *alpha, *threshold)?;
            let phase = masks::fork_phase(grid, &spec)?;
            let mask = masks::binarize(&phase, spec.alpha, spec.threshold)?;
            field::apply_mask(field, &PhaseProfile::flat(grid, 0.0), Some(&mask.to_window()))?
        }
        Element::ForkPhase { m, period } => {
            let spec = ForkGratingSpec::new(*m, *period)?;
            let phase = masks::fork_phase(grid, &spec)?;
            field::apply_mask(field, &phase, None)?
        }
        Element::Spp {
            ell,
            sectors,
            n_plate,
            n_medium,
            h0,
            aperture,
        } => {
            let spec = SppSpec::new(
                *ell,
                *sectors,
                grid.wavelength(),
                *n_plate,
                *n_medium,
                *h0,
                *aperture,
            )?;
            let (phase, _) = masks::spp_phase(grid, &spec)?;
            let window = masks::aperture_window(grid, *aperture)?;
            field::apply_mask(field, &phase, Some(&window))?
        }
        Element::Axicon {
            m,
            period,
            aperture,
            phase_scale,
        } => {
            let spec = AxiconSpec::from_period(*m, *period, *aperture)?;
            let phase = masks::axicon_phase(grid, &spec)?;
            let phase = if *phase_scale == 1.0 {
                phase
            } else {
                PhaseProfile::new(grid, phase.values().mapv(|v| v * phase_scale))?
            };
            let window = masks::aperture_window(grid, *aperture)?;
            field::apply_mask(field, &phase, Some(&window))?
        }
        Element::Apodization { r0, p_out, rc, q_in } => {
            let spec = ApodizationSpec::new(*r0, *p_out, *rc, *q_in)?;
            let window = masks::apodization_window(grid, &spec)?;
            field::apply_mask(field, &PhaseProfile::flat(grid, 0.0), Some(&window))?
        }
        Element::Aperture { diameter } => {
            let window = masks::aperture_window(grid, *diameter)?;
            field::apply_mask(field, &PhaseProfile::flat(grid, 0.0), Some(&window))?
        }
        Element::Lens { focal_length } => {
            propagation::apply_lens(field, &LensSpec::spherical(*focal_length))?
        }
        Element::CylindricalLens { focal_length, axis } => {
            propagation::apply_lens(field, &LensSpec::cylindrical(*focal_length, *axis))?
        }
        Element::Propagate {
            z,
            method,
            band_limit,
        } => {
            let plan = PropagationPlan {
                distance: *z,
                method: *method,
                band_limit: *band_limit,
            };
            propagation::propagate(field, &plan)?
        }
    };
    Ok(out)
}

fn spectrum_pairs(s: &OamSpectrum) -> Vec<(i32, f64)> {
    s.power
        .iter()
        .enumerate()
        .map(|(i, &p)| (s.ell_min + i as i32, p))
        .collect()
}

/// Everything a run produced, before any files are written.
pub struct RunOutcome {
    pub report: RunReport,
    pub final_field: Field,
    pub source_field: Field,
    pub profile_csv: Option<String>,
    pub spectrum_csv: Option<String>,
}

/// Execute the pipeline described by a validated config.
pub fn execute(config: &PipelineConfig) -> Result<RunOutcome> {
    let violations = config.validate();
    if !violations.is_empty() {
        bail!("config violations:\n  {}", violations.join("\n  "));
    }
    let grid = config.grid.build()?;
    let source = field::gaussian_source(grid, config.source.w0, config.source.e0)?;
    let source_energy = field::energy(&source);

    let mut current = source.clone();
    for (i, element) in config.elements.iter().enumerate() {
        current = apply_element(&current, element)
            .with_context(|| format!("element {i} ({})", element_name(element)))?;
    }
    let final_energy = field::energy(&current);

    let mut results = Vec::new();
    let mut profile_csv = None;
    let mut spectrum_csv = None;
    for (i, step) in config.analysis.iter().enumerate() {
        let result = run_step(&source, &current, step, source_energy)
            .with_context(|| format!("analysis {i}"))?;
        match &result {
            AnalysisResult::Spectrum {
                ell_min,
                ell_max,
                power,
                ..
            } => {
                let spectrum = OamSpectrum {
                    ell_min: *ell_min,
                    ell_max: *ell_max,
                    power: power.iter().map(|&(_, p)| p).collect(),
                    dominant_ell: 0,
                    bandwidth: 0.0,
                    range_warning: false,
                };
                spectrum_csv = Some(fio::spectrum_to_csv(&spectrum));
            }
            AnalysisResult::RadialProfile { bins, center, .. } => {
                let map = field::intensity(&current, false)?;
                let profile = analysis::radial_profile(&map, *center, *bins)?;
                profile_csv = Some(fio::profile_to_csv(&profile));
            }
            _ => {}
        }
        results.push(result);
    }

    Ok(RunOutcome {
        report: RunReport {
            source_energy,
            final_energy,
            results,
        },
        final_field: current,
        source_field: source,
        profile_csv,
        spectrum_csv,
    })
}

fn element_name(el: &Element) -> &'static str {
    match el {
        Element::ForkAmplitude { .. } => "fork_amplitude",
        Element::ForkPhase { .. } => "fork_phase",
        Element::Spp { .. } => "spp",
        Element::Axicon { .. } => "axicon",
        Element::Apodization { .. } => "apodization",
        Element::Aperture { .. } => "aperture",
        Element::Lens { .. } => "lens",
        Element::CylindricalLens { .. } => "cylindrical_lens",
        Element::Propagate { .. } => "propagate",
    }
}

fn run_step(
    source: &Field,
    final_field: &Field,
    step: &AnalysisStep,
    source_energy: f64,
) -> Result<AnalysisResult> {
    Ok(match step {
        AnalysisStep::Spectrum {
            ell_min,
            ell_max,
            center,
        } => {
            let opts = OamOptions {
                center: *center,
                ..Default::default()
            };
            let s = analysis::oam_spectrum_with(final_field, *ell_min, *ell_max, &opts)?;
            AnalysisResult::Spectrum {
                ell_min: s.ell_min,
                ell_max: s.ell_max,
                dominant_ell: s.dominant_ell,
                bandwidth: s.bandwidth,
                range_warning: s.range_warning,
                power: spectrum_pairs(&s),
            }
        }
        AnalysisStep::RadialProfile { bins, center } => {
            let map = field::intensity(final_field, false)?;
            let center = match center {
                Some(c) => *c,
                None => map.centroid()?,
            };
            let profile = analysis::radial_profile(&map, center, *bins)?;
            AnalysisResult::RadialProfile {
                bins: *bins,
                peak_radius: profile.peak_radius(),
                center,
            }
        }
        AnalysisStep::RingLobes { prominence, center } => {
            let map = field::intensity(final_field, true)?;
            let center = match center {
                Some(c) => *c,
                None => (0.0, 0.0),
            };
            let opts = LobeOptions {
                prominence_threshold: *prominence,
                ..Default::default()
            };
            let report = analysis::count_ring_lobes_with(&map, center, &opts)?;
            AnalysisResult::RingLobes {
                n_lobes: report.n_lobes,
                ring_radius: report.ring_radius,
                lobe_angles: report.lobe_angles,
                prominence_threshold: report.prominence_threshold,
            }
        }
        AnalysisStep::HgFringes => {
            let map = field::intensity(final_field, true)?;
            let report = analysis::fringe_report(&map)?;
            AnalysisResult::HgFringes {
                n_fringes: report.n_fringes,
                stripe_normal_angle: report.stripe_normal_angle,
                axis_ratio: report.axis_ratio,
            }
        }
        AnalysisStep::ExtractOrder {
            order,
            period,
            focal_length,
            ell_min,
            ell_max,
            half_width,
        } => {
            let window =
                analysis::extract_order(final_field, *order, *period, *focal_length, *half_width)?;
            let opts = OamOptions {
                center: Some((0.0, 0.0)),
                ..Default::default()
            };
            let s = analysis::oam_spectrum_with(&window, *ell_min, *ell_max, &opts)?;
            AnalysisResult::ExtractOrder {
                order: *order,
                predicted_center: *order as f64 * final_field.grid().wavelength() * focal_length
                    / period,
                dominant_ell: s.dominant_ell,
                bandwidth: s.bandwidth,
                energy_fraction: field::energy(&window) / source_energy,
                power: spectrum_pairs(&s),
            }
        }
        AnalysisStep::EfficiencyAnnulus { r_min, r_max } => {
            let efficiency = analysis::conversion_efficiency(
                source,
                final_field,
                &EfficiencyRegion::Annulus {
                    r_min: *r_min,
                    r_max: *r_max,
                    center: None,
                },
            )?;
            AnalysisResult::EfficiencyAnnulus {
                r_min: *r_min,
                r_max: *r_max,
                efficiency,
            }
        }
    })
}

/// Execute a config and write every requested output file under
/// `output.dir`. Returns the paths written.
pub fn execute_and_write(config: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let outcome = execute(config)?;
    let dir = Path::new(&config.output.dir);
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();

    if let Some(name) = &config.output.intensity {
        let map = field::intensity(&outcome.final_field, true)?;
        let bytes = fio::encode_pgm16(map.values(), 0.0, 1.0)?;
        let path = dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    if let Some(name) = &config.output.raw_field {
        let path = dir.join(name);
        fs::write(&path, fio::encode_raw_field(outcome.final_field.amplitude()))
            .with_context(|| format!("writing {}", path.display()))?;
        let sidecar = FieldSidecar::of(&outcome.final_field.grid());
        let sidecar_path = dir.join(format!("{name}.json"));
        fs::write(&sidecar_path, serde_json::to_string_pretty(&sidecar)?)?;
        written.push(path);
        written.push(sidecar_path);
    }
    if let (Some(name), Some(csv)) = (&config.output.profile_csv, &outcome.profile_csv) {
        let path = dir.join(name);
        fs::write(&path, csv)?;
        written.push(path);
    }
    if let (Some(name), Some(csv)) = (&config.output.spectrum_csv, &outcome.spectrum_csv) {
        let path = dir.join(name);
        fs::write(&path, csv)?;
        written.push(path);
    }
    if let Some(name) = &config.output.report {
        let path = dir.join(name);
        fs::write(&path, serde_json::to_string_pretty(&outcome.report)?)?;
        written.push(path);
    }
    Ok(written)
}
