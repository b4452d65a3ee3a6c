//! `silloc` command line.

mod commands;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use silloc_core::Pose;

pub use commands::Status;

#[derive(Debug, Parser)]
#[command(name = "silloc", version, about = "Camera localization against LoD1 city models by silhouette alignment")]
pub struct Cli {
    /// Run configuration (JSON). Defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads; 0 means one per core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a city model, query poses, priors and query masks.
    GenScene,
    /// Localize every query and write the records CSV.
    Localize {
        /// Stop after coarse selection.
        #[arg(long, conflicts_with = "no_select")]
        no_refine: bool,
        /// Refine directly from the prior.
        #[arg(long)]
        no_select: bool,
        /// Record wall-clock stage times (otherwise written as 0).
        #[arg(long)]
        timings: bool,
        /// Write per-query refinement traces.
        #[arg(long)]
        traces: bool,
        /// Write per-query cost volumes.
        #[arg(long)]
        dump_volumes: bool,
        /// Records file; defaults to `<output>/records.csv`.
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Recall table of a records file against ground truth.
    Evaluate {
        #[arg(long)]
        records: Option<PathBuf>,
        /// Ground-truth poses; defaults to the configured queries file.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Recall as a function of the prior error.
    Basin {
        /// Prior half-widths in meters, comma separated.
        #[arg(long, value_delimiter = ',')]
        deltas: Option<Vec<f64>>,
        /// Use only the first N queries.
        #[arg(long)]
        queries: Option<usize>,
    },
    /// Write the query mask, the mask rendered at a pose, and their XOR.
    Overlay {
        id: String,
        /// `x,y,z,yaw,pitch,roll`; defaults to the final pose in the records.
        #[arg(long, value_parser = parse_pose, allow_hyphen_values = true)]
        pose: Option<Pose>,
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Render the model silhouette at a pose.
    Render {
        #[arg(long, value_parser = parse_pose, allow_hyphen_values = true)]
        pose: Pose,
        #[arg(long)]
        out: PathBuf,
        /// Output size; defaults to the fine resolution.
        #[arg(long)]
        width: Option<u32>,
        #[arg(long)]
        height: Option<u32>,
    },
}

fn parse_pose(s: &str) -> Result<Pose, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("`{t}` is not a number")))
        .collect::<Result<_, _>>()?;
    let [x, y, z, yaw, pitch, roll] = v[..] else {
        return Err("expected x,y,z,yaw,pitch,roll".into());
    };
    Pose::new(x, y, z, yaw, pitch, roll).map_err(|e| e.to_string())
}

/// Runs a parsed command line, writing human-readable output to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> anyhow::Result<Status> {
    commands::dispatch(cli, out)
}

/// Entry point of the binary: 0 success, 1 contract or I/O error, 2 partial failure.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    match run(&cli, &mut stdout) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Partial) => ExitCode::from(2),
        Err(e) => {
            let _ = stdout.flush();
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pose_argument() {
        let p = parse_pose("1,2,3,370,-45,0").unwrap();
        assert_eq!((p.x, p.yaw, p.pitch), (1.0, 10.0, -45.0));
        assert!(parse_pose("1,2,3").is_err());
        assert!(parse_pose("1,2,3,4,95,0").is_err());
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from(["silloc", "--threads", "8", "localize", "--no-refine", "--seed", "5"]).unwrap();
        assert_eq!((cli.threads, cli.seed), (8, Some(5)));
        assert!(matches!(cli.command, Command::Localize { no_refine: true, no_select: false, .. }));
        assert!(Cli::try_parse_from(["silloc", "localize", "--no-refine", "--no-select"]).is_err());
        let cli = Cli::try_parse_from(["silloc", "render", "--pose", "-1,2,100,0,-90,0", "--out", "a.pgm"]).unwrap();
        assert!(matches!(cli.command, Command::Render { .. }));
    }
}
