//! Command-line surface for the tactile reconstruction pipeline.
//!
//! Subcommands: `reconstruct` (frame + rest reference -> point cloud +
//! height grid), `evaluate` (metrics between two clouds), `stitch`
//! (manifest of contacts -> fused cloud), `simulate` (synthetic frames with
//! ground truth) and `grey` (intermediate images for inspection).
//!
//! Exit codes: 0 success, 1 I/O failure, 2 validation failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tacshade_core::{Error, PipelineConfig};

#[derive(Parser)]
#[command(name = "tacshade", version, about = "Tactile image 3D reconstruction pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reconstruct a point cloud and height grid from one tactile frame.
    Reconstruct(ReconstructArgs),
    /// Compare a reconstructed cloud against ground truth.
    Evaluate(EvaluateArgs),
    /// Reconstruct every manifest row and fuse the clouds in a world frame.
    Stitch(StitchArgs),
    /// Render a synthetic contact frame with ground-truth heights.
    Simulate(SimulateArgs),
    /// Emit the intermediate greyscale images of one reconstruction.
    Grey(GreyArgs),
}

/// Configuration file plus command-line overrides; a flag always wins over
/// the file.
#[derive(Args, Clone)]
struct ConfigArgs {
    /// Pipeline configuration file (key = value lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Ratio window size (odd, square).
    #[arg(long)]
    window: Option<usize>,
    /// Ratio window stride.
    #[arg(long)]
    stride: Option<usize>,
    /// Height-solver iteration count.
    #[arg(long)]
    iters: Option<usize>,
    /// Fixed height scale factor.
    #[arg(long)]
    alpha: Option<f64>,
    /// Hemisphere radius in millimetres.
    #[arg(long = "radius-mm")]
    radius_mm: Option<f64>,
    /// Worker threads for stitch rows (default: TACSHADE_THREADS or 1).
    #[arg(long)]
    threads: Option<usize>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<PipelineConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                PipelineConfig::from_text(&text)?
            }
            None => PipelineConfig::default(),
        };
        if let Some(w) = self.window {
            cfg.window = (w, w);
        }
        if let Some(s) = self.stride {
            cfg.stride = s;
        }
        if let Some(i) = self.iters {
            cfg.iterations = i;
        }
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        if let Some(r) = self.radius_mm {
            cfg.radius_mm = r;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn thread_count(&self) -> usize {
        self.threads
            .or_else(|| {
                std::env::var("TACSHADE_THREADS")
                    .ok()
                    .and_then(|v| v.parse().ok())
            })
            .unwrap_or(1)
            .max(1)
    }
}

#[derive(Args)]
struct ReconstructArgs {
    /// Tactile frame (PGM or PNG).
    #[arg(long)]
    frame: PathBuf,
    /// Rest-state reference frame.
    #[arg(long)]
    g0: PathBuf,
    /// Known contact depth in millimetres; calibrates the height scale.
    #[arg(long)]
    depth: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Reconstructed cloud (PLY or CSV).
    recon: PathBuf,
    /// Ground-truth cloud (PLY or CSV).
    truth: PathBuf,
    /// Maximum contact depth in millimetres.
    #[arg(long = "h-max")]
    h_max: f64,
    /// Also write the report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SmoothOrder {
    After,
    Before,
    Off,
}

#[derive(Args)]
struct StitchArgs {
    /// Contact manifest CSV.
    #[arg(long)]
    manifest: PathBuf,
    /// When to average z-values laterally.
    #[arg(long = "smooth-order", value_enum, default_value = "after")]
    smooth_order: SmoothOrder,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PrimitiveName {
    Sphere,
    Box,
    Cylinder,
    Crescent,
}

#[derive(Args)]
struct SimulateArgs {
    /// Contact shape.
    #[arg(long, value_enum)]
    kind: PrimitiveName,
    /// Indent depth in millimetres.
    #[arg(long)]
    depth: f64,
    /// Shape dimensions in millimetres: sphere R; box LX,LY; cylinder R;
    /// crescent OUTER,INNER,OFFSET. Defaults per kind.
    #[arg(long, value_delimiter = ',')]
    size: Option<Vec<f64>>,
    /// Lateral press position in millimetres.
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [0.0, 0.0])]
    pos: Vec<f64>,
    /// Yaw in radians.
    #[arg(long, default_value_t = 0.0)]
    yaw: f64,
    /// Frame width in pixels.
    #[arg(long, default_value_t = 640)]
    width: usize,
    /// Frame height in pixels.
    #[arg(long, default_value_t = 480)]
    height: usize,
    /// Pin lattice pitch in pixels.
    #[arg(long, default_value_t = 28.0)]
    pitch: f64,
    /// Pin radius in pixels.
    #[arg(long = "pin-radius", default_value_t = 10.0)]
    pin_radius: f64,
    /// Sensor field as CX,CY,R pixels (default: frame center, radius fits).
    #[arg(long, value_delimiter = ',', num_args = 3)]
    field: Option<Vec<f64>>,
    /// Hemisphere radius in millimetres.
    #[arg(long = "radius-mm", default_value_t = 20.0)]
    radius_mm: f64,
    /// Pin shrink factor at saturation.
    #[arg(long, default_value_t = 0.6)]
    kappa: f64,
    /// Gaussian skirt sigma in pixels.
    #[arg(long, default_value_t = 8.0)]
    skirt: f64,
    /// Exposure saturation depth in millimetres.
    #[arg(long, default_value_t = 4.0)]
    saturation: f64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct GreyArgs {
    #[arg(long)]
    frame: PathBuf,
    #[arg(long)]
    g0: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Reconstruct(args) => commands::reconstruct(args),
        Command::Evaluate(args) => commands::evaluate(args),
        Command::Stitch(args) => commands::stitch(args),
        Command::Simulate(args) => commands::simulate(args),
        Command::Grey(args) => commands::grey(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io(_) => 1,
        _ => 2,
    }
}
