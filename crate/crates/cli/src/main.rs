use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use twistbeam_cli::commands::{
    self, AnalyzeRequest, MaskGrid, ScaleFlags,
};
use twistbeam_cli::config::PipelineConfig;
use twistbeam_cli::engine;
use twistbeam_core::masks::{AxiconSpec, ForkGratingSpec, SppSpec};

/// Synthesize vortex-beam diffractive optics, simulate propagation through
/// them, and measure the OAM content of what comes out.
#[derive(Parser)]
#[command(name = "twistbeam", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a DOE mask and write its files.
    Mask {
        #[command(subcommand)]
        kind: MaskKind,
    },
    /// Execute a pipeline config and write its outputs.
    Run {
        /// Path to the JSON pipeline config.
        config: PathBuf,
    },
    /// Run diagnostics on a stored field (.fld) or intensity image (.pgm).
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct GridArgs {
    /// Samples along x.
    #[arg(long, default_value_t = 1024)]
    nx: usize,
    /// Samples along y (defaults to nx).
    #[arg(long)]
    ny: Option<usize>,
    /// Pixel pitch in meters.
    #[arg(long, default_value_t = 4e-6)]
    pitch: f64,
    /// Wavelength in meters.
    #[arg(long, default_value_t = 266e-9)]
    wavelength: f64,
}

impl GridArgs {
    fn build(&self) -> MaskGrid {
        MaskGrid {
            nx: self.nx,
            ny: self.ny.unwrap_or(self.nx),
            pitch: self.pitch,
            wavelength: self.wavelength,
        }
    }
}

#[derive(Subcommand)]
enum MaskKind {
    /// Fork grating: linear grating with an embedded phase dislocation.
    Fork {
        /// Topological charge of the dislocation.
        #[arg(long, allow_hyphen_values = true)]
        m: i32,
        /// Grating period in meters.
        #[arg(long)]
        period: f64,
        /// Modulation depth in (0, 1].
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Binarization threshold in [0, alpha].
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[command(flatten)]
        grid: GridArgs,
        /// Output path prefix.
        #[arg(long)]
        out: PathBuf,
    },
    /// Spiral phase plate: sectored helical relief.
    Spp {
        /// Target OAM per photon.
        #[arg(long)]
        ell: u32,
        /// Azimuthal quantization sectors.
        #[arg(long, default_value_t = 64)]
        sectors: u32,
        /// Plate refractive index.
        #[arg(long, default_value_t = 1.49)]
        n_plate: f64,
        /// Surrounding medium refractive index.
        #[arg(long, default_value_t = 1.0)]
        n_medium: f64,
        /// Base thickness in meters.
        #[arg(long, default_value_t = 0.0)]
        h0: f64,
        /// Clear aperture diameter in meters.
        #[arg(long)]
        aperture: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Binary spiral axicon.
    Axicon {
        /// Topological charge.
        #[arg(long, allow_hyphen_values = true)]
        m: i32,
        /// Spiral period in meters.
        #[arg(long)]
        period: f64,
        /// Working aperture diameter in meters.
        #[arg(long)]
        aperture: f64,
        /// Refractive index of the binary layer material.
        #[arg(long, default_value_t = 1.66)]
        layer_index: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Input file: raw complex field (.fld) or 16-bit PGM intensity.
    input: PathBuf,
    /// Pixel pitch override in meters (required for raw fields without a sidecar).
    #[arg(long)]
    dx: Option<f64>,
    /// Pixel pitch along y (defaults to --dx).
    #[arg(long)]
    dy: Option<f64>,
    /// Wavelength override in meters.
    #[arg(long)]
    wavelength: Option<f64>,
    /// OAM decomposition range: --spectrum MIN MAX.
    #[arg(long, num_args = 2, value_names = ["MIN", "MAX"], allow_hyphen_values = true)]
    spectrum: Option<Vec<i32>>,
    /// Radial profile with this many bins.
    #[arg(long)]
    profile_bins: Option<usize>,
    /// Count ring lobes.
    #[arg(long)]
    ring_lobes: bool,
    /// Lobe prominence threshold (fraction of ring max).
    #[arg(long, default_value_t = 0.3)]
    prominence: f64,
    /// Count stripes of a converted vortex.
    #[arg(long)]
    fringes: bool,
    /// Write the JSON report here (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            // Config violations exit 2, runtime failures exit 1.
            if err.to_string().contains("config violations")
                || err.to_string().contains("config parse error")
            {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Mask { kind } => {
            let written = match kind {
                MaskKind::Fork {
                    m,
                    period,
                    alpha,
                    threshold,
                    grid,
                    out,
                } => {
                    let spec = ForkGratingSpec::with_binarization(m, period, alpha, threshold)?;
                    commands::cmd_mask_fork(grid.build(), spec, &out)?
                }
                MaskKind::Spp {
                    ell,
                    sectors,
                    n_plate,
                    n_medium,
                    h0,
                    aperture,
                    grid,
                    out,
                } => {
                    let g = grid.build();
                    let spec =
                        SppSpec::new(ell, sectors, g.wavelength, n_plate, n_medium, h0, aperture)?;
                    commands::cmd_mask_spp(g, spec, &out)?
                }
                MaskKind::Axicon {
                    m,
                    period,
                    aperture,
                    layer_index,
                    grid,
                    out,
                } => {
                    let spec = AxiconSpec::from_period(m, period, aperture)?;
                    commands::cmd_mask_axicon(grid.build(), spec, layer_index, &out)?
                }
            };
            for path in written {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Run { config } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let parsed = PipelineConfig::from_json(&text).map_err(anyhow::Error::msg)?;
            let violations = parsed.validate();
            if !violations.is_empty() {
                anyhow::bail!("config violations:\n  {}", violations.join("\n  "));
            }
            let written = engine::execute_and_write(&parsed)?;
            for path in written {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Analyze(args) => {
            let flags = ScaleFlags {
                dx: args.dx,
                dy: args.dy,
                wavelength: args.wavelength,
            };
            let input = commands::load_input(&args.input, flags)?;
            let request = AnalyzeRequest {
                spectrum: args.spectrum.map(|v| (v[0], v[1])),
                profile_bins: args.profile_bins,
                ring_lobes: args.ring_lobes,
                prominence: args.prominence,
                fringes: args.fringes,
            };
            let report =
                commands::run_analyze(&input, &request, &args.input.display().to_string())?;
            let text = serde_json::to_string_pretty(&report)?;
            match args.out {
                Some(path) => std::fs::write(&path, text)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => println!("{text}"),
            }
            Ok(())
        }
    }
}
