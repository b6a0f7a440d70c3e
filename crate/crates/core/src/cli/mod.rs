//! The `rpv` command-line front end.
//!
//! Exit codes: 0 success, 1 a self-check or invariant check failed, 2 usage or
//! configuration error, 3 file I/O error, 4 malformed or invalid input data.

mod commands;
mod config;
mod demo;
mod selfcheck;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::encode_pgm;
pub use config::{RunConfig, DATASET_ROOT_ENV};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_DATA: i32 = 4;

/// A failure carrying its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub(crate) fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub(crate) fn check(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CHECK_FAILED,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io { .. } => EXIT_IO,
            Error::Config(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: EXIT_IO,
            message: e.to_string(),
        }
    }
}

pub(crate) type CliResult<T = ()> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "rpv",
    version,
    about = "Range-point-voxel indexing, propagation, fusion and evaluation tools"
)]
pub struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// `key = value` run configuration file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Seed for every random draw.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for per-frame work (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Root for relative input paths [env: RPV_DATASET_ROOT].
    #[arg(long, global = true, value_name = "DIR")]
    dataset_root: Option<PathBuf>,
    /// "raw train" label map file.
    #[arg(long, global = true, value_name = "FILE")]
    label_map: Option<PathBuf>,
}

/// Range-image geometry overrides.
#[derive(Debug, Args, Clone, Default)]
pub(crate) struct RangeArgs {
    #[arg(long)]
    height: Option<u32>,
    #[arg(long)]
    width: Option<u32>,
    /// Upper field of view, degrees.
    #[arg(long, allow_hyphen_values = true)]
    fov_up: Option<f64>,
    /// Lower field of view, degrees.
    #[arg(long, allow_hyphen_values = true)]
    fov_down: Option<f64>,
}

/// Where a command's scan comes from: a KITTI `.bin` file or a synthetic street scene.
#[derive(Debug, Args, Clone, Default)]
pub(crate) struct ScanArgs {
    /// KITTI `.bin` scan (relative paths resolve against the dataset root).
    input: Option<PathBuf>,
    /// Generate a synthetic scan of this many points instead.
    #[arg(long, value_name = "N", conflicts_with = "input")]
    synthetic: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Project a scan to a range image (PGM depth + per-pixel mean features).
    Project {
        #[command(flatten)]
        scan: ScanArgs,
        #[command(flatten)]
        range: RangeArgs,
        /// Range mapped to full white in the PGM, meters.
        #[arg(long, default_value_t = 80.0)]
        max_range: f64,
    },
    /// Voxelize a scan at several resolutions and report occupancy.
    Voxelize {
        #[command(flatten)]
        scan: ScanArgs,
        /// Comma-separated voxel edge lengths in meters.
        #[arg(long, value_name = "R,R,..")]
        resolutions: Option<String>,
    },
    /// Run point/voxel/range propagation and gated fusion on one scan and check invariants.
    FuseDemo {
        #[command(flatten)]
        scan: ScanArgs,
        #[command(flatten)]
        range: RangeArgs,
        /// Use this constant for every point feature instead of random values.
        #[arg(long, allow_hyphen_values = true)]
        constant: Option<f32>,
        /// Feature channels.
        #[arg(long, default_value_t = 4)]
        channels: usize,
        /// Scale every trilinear weight by this factor (fault injection).
        #[arg(long, hide = true)]
        corrupt_weights: Option<f64>,
    },
    /// Paste rare-class instances into every frame of a directory.
    Cutmix {
        /// Directory of `<id>.bin` scans with matching `<id>.label` files.
        input_dir: PathBuf,
        /// Rare class ids (raw semantic ids), comma-separated.
        #[arg(long, value_delimiter = ',', required = true)]
        rare: Vec<u32>,
        /// Ground class ids (raw semantic ids), comma-separated.
        #[arg(long, value_delimiter = ',', required = true)]
        ground: Vec<u32>,
        /// Instances pasted per frame.
        #[arg(short = 'k', long, default_value_t = 0)]
        count: usize,
        /// Load the instance bank from this directory instead of extracting it.
        #[arg(long, value_name = "DIR")]
        bank: Option<PathBuf>,
        /// Single-linkage distance for instance extraction, meters.
        #[arg(long, default_value_t = 0.5)]
        link_distance: f64,
        /// Smallest extracted instance, points.
        #[arg(long, default_value_t = 10)]
        min_points: usize,
    },
    /// Compute per-class IoU and mIoU for a directory of predictions.
    Eval {
        /// Directory of predicted `.label` files.
        pred_dir: PathBuf,
        /// Directory of ground-truth `.label` files.
        gt_dir: PathBuf,
        /// Treat labels as train ids `0..N` (identity map) when no label map is given.
        #[arg(long)]
        num_classes: Option<u32>,
        /// Count classes absent from both prediction and ground truth as IoU 0.
        #[arg(long)]
        count_absent: bool,
    },
    /// Time indexing, scatter and gathers on one scan.
    Bench {
        #[command(flatten)]
        scan: ScanArgs,
        #[command(flatten)]
        range: RangeArgs,
        /// Timed repetitions; the median is reported.
        #[arg(long, default_value_t = 5)]
        repeats: usize,
    },
    /// Run the built-in invariant checks.
    Selfcheck,
}

fn build_config(common: &CommonArgs) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &common.config {
        cfg.apply_file(path).map_err(|e| match e {
            Error::Io { .. } => CliError::usage(format!("cannot read config: {e}")),
            other => other.into(),
        })?;
    }
    if let Some(v) = &common.dataset_root {
        cfg.dataset_root = v.clone();
    }
    if let Some(v) = &common.label_map {
        cfg.label_map = Some(v.clone());
    }
    if let Some(v) = common.seed {
        cfg.seed = v;
    }
    if let Some(v) = common.threads {
        cfg.threads = v;
    }
    if let Some(v) = &common.out {
        cfg.out_dir = v.clone();
    }
    Ok(cfg)
}

impl RangeArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(v) = self.height {
            cfg.range_height = v;
        }
        if let Some(v) = self.width {
            cfg.range_width = v;
        }
        if let Some(v) = self.fov_up {
            cfg.fov_up_deg = v;
        }
        if let Some(v) = self.fov_down {
            cfg.fov_down_deg = v;
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> CliResult {
    let mut cfg = build_config(&cli.common)?;
    match cli.command {
        Command::Project { scan, range, max_range } => {
            range.apply(&mut cfg);
            commands::cmd_project(&cfg, &scan, max_range, out)
        }
        Command::Voxelize { scan, resolutions } => {
            if let Some(r) = resolutions {
                cfg.voxel_resolutions = config::parse_resolutions(&r)?;
            }
            commands::cmd_voxelize(&cfg, &scan, out)
        }
        Command::FuseDemo {
            scan,
            range,
            constant,
            channels,
            corrupt_weights,
        } => {
            range.apply(&mut cfg);
            demo::fuse_demo(
                &cfg,
                &demo::DemoOptions {
                    scan,
                    constant,
                    channels,
                    corrupt_weights,
                },
                out,
            )
        }
        Command::Cutmix {
            input_dir,
            rare,
            ground,
            count,
            bank,
            link_distance,
            min_points,
        } => commands::cmd_cutmix(
            &cfg,
            &commands::CutmixOptions {
                input_dir,
                rare,
                ground,
                count,
                bank,
                link_distance,
                min_points,
            },
            out,
        ),
        Command::Eval {
            pred_dir,
            gt_dir,
            num_classes,
            count_absent,
        } => commands::cmd_eval(&cfg, &pred_dir, &gt_dir, num_classes, count_absent, out),
        Command::Bench { scan, range, repeats } => {
            range.apply(&mut cfg);
            commands::cmd_bench(&cfg, &scan, repeats, out)
        }
        Command::Selfcheck => selfcheck::selfcheck(&cfg, out),
    }
}

/// Parses `args` (including the program name) and runs the command, writing
/// reports to `out` and diagnostics to stderr. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = e.print();
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("rpv: {}", e.message);
            e.code
        }
    }
}

/// Entry point for the `rpv` binary.
pub fn main() -> std::process::ExitCode {
    let stdout = std::io::stdout();
    let code = run(std::env::args_os(), &mut stdout.lock());
    std::process::ExitCode::from(code as u8)
}
