//! Implementations of the `mask`, `run` and `analyze` subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ndarray::Array2;
use serde::Serialize;
use serde_json::json;

use twistbeam_core::analysis::{self, LobeOptions, OamOptions};
use twistbeam_core::field::{Field, IntensityMap};
use twistbeam_core::grid::GridSpec;
use twistbeam_core::io as fio;
use twistbeam_core::masks::{
    self, AxiconSpec, ForkGratingSpec, SppSpec,
};

use crate::engine::FieldSidecar;
use crate::report::{AnalysisResult, AnalyzeReport};

/// Grid parameters shared by every `mask` subcommand.
#[derive(Debug, Clone, Copy)]
pub struct MaskGrid {
    pub nx: usize,
    pub ny: usize,
    pub pitch: f64,
    pub wavelength: f64,
}

impl MaskGrid {
    pub fn build(&self) -> twistbeam_core::Result<GridSpec> {
        GridSpec::new(self.nx, self.ny, self.pitch, self.pitch, self.wavelength)
    }
}

fn write_sidecar<T: Serialize>(prefix: &Path, value: &T) -> Result<PathBuf> {
    let path = prefix.with_extension("json");
    fs::write(&path, serde_json::to_string_pretty(value)?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn phase_pgm(prefix: &Path, suffix: &str, values: &Array2<f64>) -> Result<PathBuf> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bytes = fio::encode_pgm16(values, min, max)?;
    let path = prefix.with_extension(suffix);
    fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// `mask fork`: binarized amplitude mask (PBM), continuous phase (PGM16),
/// JSON sidecar with the spec and derived numbers.
pub fn cmd_mask_fork(grid: MaskGrid, spec: ForkGratingSpec, out_prefix: &Path) -> Result<Vec<PathBuf>> {
    let g = grid.build()?;
    let phase = masks::fork_phase(g, &spec)?;
    let mask = masks::binarize(&phase, spec.alpha, spec.threshold)?;
    let mut written = Vec::new();

    let pbm_path = out_prefix.with_extension("pbm");
    fs::write(&pbm_path, fio::encode_pbm(mask.values()))
        .with_context(|| format!("writing {}", pbm_path.display()))?;
    written.push(pbm_path);
    written.push(phase_pgm(out_prefix, "phase.pgm", phase.values())?);

    let order_charges: Vec<(i32, i64)> = (-4..=4)
        .map(|n| (n, masks::predicted_charge(n, spec.m)))
        .collect();
    let sidecar = json!({
        "kind": "fork",
        "spec": spec,
        "grid": FieldSidecar::of(&g),
        "derived": {
            "fill_factor": mask.fill_factor(),
            "order_charges": order_charges,
        }
    });
    written.push(write_sidecar(out_prefix, &sidecar)?);
    Ok(written)
}

/// `mask spp`: quantized phase and height staircase (PGM16), JSON sidecar
/// recording the design heights.
pub fn cmd_mask_spp(grid: MaskGrid, spec: SppSpec, out_prefix: &Path) -> Result<Vec<PathBuf>> {
    let g = grid.build()?;
    let (phase, height) = masks::spp_phase(g, &spec)?;
    let mut written = Vec::new();
    written.push(phase_pgm(out_prefix, "phase.pgm", phase.values())?);
    written.push(phase_pgm(out_prefix, "height.pgm", height.values())?);

    let sidecar = json!({
        "kind": "spp",
        "spec": spec,
        "grid": FieldSidecar::of(&g),
        "derived": {
            "total_height": spec.total_height(),
            "sector_height_step": spec.sector_height_step(),
            "base_phase": spec.base_phase(),
        }
    });
    written.push(write_sidecar(out_prefix, &sidecar)?);
    Ok(written)
}

/// `mask axicon`: binary level mask (PBM), two-level phase (PGM16), JSON
/// sidecar with the pi-layer thickness for the given material index.
pub fn cmd_mask_axicon(
    grid: MaskGrid,
    spec: AxiconSpec,
    layer_index: f64,
    out_prefix: &Path,
) -> Result<Vec<PathBuf>> {
    let g = grid.build()?;
    let phase = masks::axicon_phase(g, &spec)?;
    let mut written = Vec::new();

    // Binary view: 1 where the phase level is pi.
    let bits = phase.values().mapv(|v| u8::from(v > 0.0));
    let pbm_path = out_prefix.with_extension("pbm");
    fs::write(&pbm_path, fio::encode_pbm(&bits))
        .with_context(|| format!("writing {}", pbm_path.display()))?;
    written.push(pbm_path);
    written.push(phase_pgm(out_prefix, "phase.pgm", phase.values())?);

    let sidecar = json!({
        "kind": "axicon",
        "spec": spec,
        "grid": FieldSidecar::of(&g),
        "derived": {
            "period": spec.period(),
            "layer_index": layer_index,
            "layer_thickness": masks::binary_layer_thickness(g.wavelength(), layer_index)?,
        }
    });
    written.push(write_sidecar(out_prefix, &sidecar)?);
    Ok(written)
}

/// What `analyze` loaded from disk.
pub enum LoadedInput {
    /// Complex field plus its grid (raw format + sidecar, or explicit flags).
    Field(Field),
    /// Intensity-only input (PGM16).
    Intensity(IntensityMap),
}

/// Optional physical-scale overrides for `analyze` inputs.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScaleFlags {
    pub dx: Option<f64>,
    pub dy: Option<f64>,
    pub wavelength: Option<f64>,
}

/// Load a `.fld` raw field or 16-bit PGM intensity, sniffing by magic bytes.
///
/// Raw fields carry no physical scale, so the grid comes from a `<path>.json`
/// sidecar or from the explicit flags; flags win over the sidecar.
pub fn load_input(path: &Path, flags: ScaleFlags) -> Result<LoadedInput> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if bytes.len() < 2 {
        bail!("{}: file too short to identify", path.display());
    }
    if bytes.starts_with(fio::FIELD_MAGIC) {
        let values = fio::parse_raw_field(&bytes)?;
        let (ny, nx) = values.dim();
        let sidecar: Option<FieldSidecar> = {
            let sc_path = PathBuf::from(format!("{}.json", path.display()));
            match fs::read_to_string(&sc_path) {
                Ok(text) => Some(serde_json::from_str(&text).with_context(|| {
                    format!("parsing sidecar {}", sc_path.display())
                })?),
                Err(_) => None,
            }
        };
        let dx = flags.dx.or(sidecar.as_ref().map(|s| s.dx));
        let dy = flags.dy.or(flags.dx).or(sidecar.as_ref().map(|s| s.dy));
        let wavelength = flags.wavelength.or(sidecar.as_ref().map(|s| s.wavelength));
        let (Some(dx), Some(dy), Some(wavelength)) = (dx, dy, wavelength) else {
            bail!(
                "{}: raw fields need --dx and --wavelength (no sidecar found)",
                path.display()
            );
        };
        let grid = GridSpec::new(nx, ny, dx, dy, wavelength)?;
        Ok(LoadedInput::Field(Field::new(grid, values)?))
    } else if bytes.starts_with(b"P5") {
        let parsed = fio::parse_pgm16(&bytes)?;
        let (ny, nx) = parsed.values.dim();
        let dx = flags.dx.unwrap_or(1e-6);
        let dy = flags.dy.or(flags.dx).unwrap_or(1e-6);
        let wavelength = flags.wavelength.unwrap_or(266e-9);
        let grid = GridSpec::new(nx, ny, dx, dy, wavelength)?;
        Ok(LoadedInput::Intensity(IntensityMap::new(
            grid,
            parsed.values,
        )?))
    } else {
        bail!(
            "{}: unrecognized format; expected raw-field magic {:?} or PGM magic \"P5\"",
            path.display(),
            String::from_utf8_lossy(fio::FIELD_MAGIC)
        );
    }
}

/// Diagnostics requested on an `analyze` input.
#[derive(Debug, Clone, Default)]
pub struct AnalyzeRequest {
    pub spectrum: Option<(i32, i32)>,
    pub profile_bins: Option<usize>,
    pub ring_lobes: bool,
    pub prominence: f64,
    pub fringes: bool,
}

/// Run the requested diagnostics on a loaded input. Spectrum requests need a
/// complex field; intensity-only diagnostics accept both.
pub fn run_analyze(input: &LoadedInput, request: &AnalyzeRequest, name: &str) -> Result<AnalyzeReport> {
    let mut results = Vec::new();
    let map = match input {
        LoadedInput::Field(f) => twistbeam_core::field::intensity(f, true)?,
        LoadedInput::Intensity(m) => m.clone(),
    };

    if let Some((ell_min, ell_max)) = request.spectrum {
        let LoadedInput::Field(f) = input else {
            bail!("OAM spectrum needs a complex field input, not an intensity image");
        };
        let s = analysis::oam_spectrum_with(f, ell_min, ell_max, &OamOptions::default())?;
        results.push(AnalysisResult::Spectrum {
            ell_min: s.ell_min,
            ell_max: s.ell_max,
            dominant_ell: s.dominant_ell,
            bandwidth: s.bandwidth,
            range_warning: s.range_warning,
            power: s
                .power
                .iter()
                .enumerate()
                .map(|(i, &p)| (s.ell_min + i as i32, p))
                .collect(),
        });
    }
    if let Some(bins) = request.profile_bins {
        let center = map.centroid()?;
        let profile = analysis::radial_profile(&map, center, bins)?;
        results.push(AnalysisResult::RadialProfile {
            bins,
            peak_radius: profile.peak_radius(),
            center,
        });
    }
    if request.ring_lobes {
        let opts = LobeOptions {
            prominence_threshold: request.prominence,
            ..Default::default()
        };
        let report = analysis::count_ring_lobes_with(&map, (0.0, 0.0), &opts)?;
        results.push(AnalysisResult::RingLobes {
            n_lobes: report.n_lobes,
            ring_radius: report.ring_radius,
            lobe_angles: report.lobe_angles,
            prominence_threshold: report.prominence_threshold,
        });
    }
    if request.fringes {
        let report = analysis::fringe_report(&map)?;
        results.push(AnalysisResult::HgFringes {
            n_fringes: report.n_fringes,
            stripe_normal_angle: report.stripe_normal_angle,
            axis_ratio: report.axis_ratio,
        });
    }

    Ok(AnalyzeReport {
        input: name.to_owned(),
        results,
    })
}
