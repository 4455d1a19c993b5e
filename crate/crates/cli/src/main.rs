//! `coorbit` — group-invariant embeddings from sorted coorbits.
//!
//! Subcommands: verify, gamma, plan, sample, embed, bounds, separate,
//! collide, run. Exit codes: 0 success, 2 domain failure, 3 parse error,
//! 4 I/O error. Every seeded command is bit-reproducible; `COORBIT_SEED`
//! overrides `--seed` when set.

mod commands;
mod fail;
mod jsonfmt;
mod manifest;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use fail::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "coorbit", version, about = "Group-invariant embeddings from sorted coorbits")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Suppress the summary line on stderr.
    #[arg(long, global = true)]
    quiet: bool,

    /// Worker threads for the data-parallel paths (0 = auto).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Check the group laws of a group spec and report per-check residuals.
    Verify { group: PathBuf },

    /// Spectral profile: per-element real spectra and minimal ranks, the
    /// descending profile, and minimal window counts per selection depth.
    Gamma { group: PathBuf },

    /// Plan the per-window rank selection for a window count and depth.
    Plan {
        group: PathBuf,
        /// Window count.
        #[arg(long)]
        p: usize,
        /// Entries per rich window.
        #[arg(long)]
        n: usize,
    },

    /// Sample a seeded Gaussian window bank (and optionally a reduction).
    Sample {
        group: PathBuf,
        /// Window count.
        #[arg(long)]
        p: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also sample a reduction from this input dimension to 2d.
        #[arg(long)]
        reduction_m: Option<usize>,
    },

    /// Embed a dataset CSV; writes the embedded CSV and, with
    /// --manifest-out, a replayable manifest.
    Embed {
        group: PathBuf,
        dataset: PathBuf,
        /// Window count (default: 2d for --n 1, else the minimal count).
        #[arg(long)]
        p: Option<usize>,
        /// Entries per rich window (1 = max-filter plan).
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Treat the first CSV column as point ids.
        #[arg(long)]
        ids: bool,
        #[arg(long)]
        manifest_out: Option<PathBuf>,
    },

    /// Extremal ratio constants of a rank-j coorbit coordinate on the
    /// orbit closure of a dataset.
    Bounds {
        group: PathBuf,
        dataset: PathBuf,
        #[arg(long, default_value_t = 0)]
        window_seed: u64,
        /// Coorbit rank to scan (1-based).
        #[arg(long, default_value_t = 1)]
        j: usize,
        #[arg(long)]
        ids: bool,
        #[arg(long)]
        manifest_out: Option<PathBuf>,
    },

    /// List orbit pairs of a dataset that the selected-coorbit map fails
    /// to separate.
    Separate {
        group: PathBuf,
        dataset: PathBuf,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = commands::SEPARATION_TOL_DEFAULT)]
        tol: f64,
        #[arg(long)]
        ids: bool,
        #[arg(long)]
        manifest_out: Option<PathBuf>,
    },

    /// Adversarial search for near-collisions of the embedding.
    Collide {
        group: PathBuf,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Random restarts.
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        /// Minimum orbit distance of searched pairs.
        #[arg(long, default_value_t = 1e-2)]
        floor: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        manifest_out: Option<PathBuf>,
    },

    /// Replay a recorded manifest; numeric outputs reproduce byte for byte.
    Run {
        #[arg(long)]
        manifest: PathBuf,
    },
}

fn seed_override(seed: u64) -> CliResult<u64> {
    match std::env::var("COORBIT_SEED") {
        Ok(text) => text
            .trim()
            .parse::<u64>()
            .map_err(|_| CliError::Parse(format!("COORBIT_SEED is not a u64: {text:?}"))),
        Err(_) => Ok(seed),
    }
}

fn dispatch(cli: Cli) -> CliResult<u8> {
    if cli.threads > 0 {
        // ignore the error when a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    let out = cli.out;
    let quiet = cli.quiet;
    match cli.command {
        Command::Verify { group } => commands::cmd_verify(&group, &out, quiet),
        Command::Gamma { group } => commands::cmd_gamma(&group, &out, quiet),
        Command::Plan { group, p, n } => commands::cmd_plan(&group, p, n, &out, quiet),
        Command::Sample {
            group,
            p,
            seed,
            reduction_m,
        } => commands::cmd_sample(&group, p, seed_override(seed)?, reduction_m, &out, quiet),
        Command::Embed {
            group,
            dataset,
            p,
            n,
            seed,
            ids,
            manifest_out,
        } => commands::cmd_embed(
            &group,
            &dataset,
            p,
            n,
            seed_override(seed)?,
            ids,
            &out,
            &manifest_out,
            quiet,
        ),
        Command::Bounds {
            group,
            dataset,
            window_seed,
            j,
            ids,
            manifest_out,
        } => commands::cmd_bounds(
            &group,
            &dataset,
            window_seed,
            j,
            ids,
            &out,
            &manifest_out,
            quiet,
        ),
        Command::Separate {
            group,
            dataset,
            p,
            n,
            seed,
            tol,
            ids,
            manifest_out,
        } => commands::cmd_separate(
            &group,
            &dataset,
            p,
            n,
            seed_override(seed)?,
            tol,
            ids,
            &out,
            &manifest_out,
            quiet,
        ),
        Command::Collide {
            group,
            p,
            n,
            budget,
            floor,
            seed,
            manifest_out,
        } => commands::cmd_collide(
            &group,
            p,
            n,
            budget,
            floor,
            seed_override(seed)?,
            &out,
            &manifest_out,
            quiet,
        ),
        Command::Run { manifest } => commands::cmd_run(&manifest, &out, quiet),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
