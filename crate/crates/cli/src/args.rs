use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "porofem",
    version,
    about = "Stabilized P1/P1/P0 finite elements for Biot poroelasticity: benchmarks and config-driven runs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Manufactured-solution convergence study on the unit square.
    Converge2d(RunArgs),
    /// Manufactured-solution convergence study on the unit cube.
    Converge3d(RunArgs),
    /// Locking-prone cantilever, with and without the jump penalty.
    Cantilever(RunArgs),
    /// Unconfined compression of a cylinder against the analytic series.
    Unconfined(RunArgs),
    /// Run the problem described by a TOML config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        args: RunArgs,
    },
}

/// Flags shared by every subcommand. Each one can also be set through the
/// `POROFEM_*` variable named in its help text; flags win over variables,
/// variables win over config files.
#[derive(Args, Debug, Clone, Default)]
pub struct RunArgs {
    /// Jump penalty values, comma separated.
    #[arg(
        long,
        env = "POROFEM_DELTA",
        value_delimiter = ',',
        allow_hyphen_values = true
    )]
    pub delta: Vec<f64>,

    /// Time step. For the convergence studies this is the factor `c` in `dt = c h`.
    #[arg(long, env = "POROFEM_DT", allow_hyphen_values = true)]
    pub dt: Option<f64>,

    /// Final time.
    #[arg(long = "T", env = "POROFEM_T", allow_hyphen_values = true)]
    pub t_final: Option<f64>,

    /// Resolutions, comma separated. Unconfined takes `rings,layers`.
    #[arg(long, env = "POROFEM_RES", value_delimiter = ',')]
    pub res: Vec<usize>,

    /// Output directory, created if absent.
    #[arg(long, env = "POROFEM_OUT")]
    pub out: Option<PathBuf>,

    /// Write a VTK snapshot every k steps (k >= 1).
    #[arg(long = "vtk-every", env = "POROFEM_VTK_EVERY")]
    pub vtk_every: Option<usize>,

    /// Acceptance threshold (smallest convergence rate, or largest unconfined RMSE).
    #[arg(long, env = "POROFEM_THRESHOLD")]
    pub threshold: Option<f64>,

    /// Unconfined only: ramp the plate displacement over this time instead of a step.
    #[arg(long, env = "POROFEM_RAMP")]
    pub ramp: Option<f64>,
}
