//! `motionground` command-line driver.
//!
//! Exit status: 0 on success, 1 for invalid input or usage, 2 for file
//! system errors, 3 for numerical failures during optimization.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, LevelFilter};

use motionground::io::{load_bundle, read_json, read_motion_json, to_json_bytes, TruthFile};
use motionground::optimizer::OptimizeConfig;
use motionground::pipeline::reconstruct;
use motionground::synth::{evaluate, generate, SynthSpec};
use motionground::{Error, ErrorKind, Result};

#[derive(Debug, Parser)]
#[command(
    name = "motionground",
    version,
    about = "Ground monocular human motion in a static scene"
)]
struct Cli {
    /// More log output (repeat for trace).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Only log warnings and errors.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Reconstruct the scene and optimize translations for an input bundle.
    Reconstruct {
        /// Input bundle directory.
        input: PathBuf,
        /// Output directory for scene.ply, motion.json and report.json.
        output: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Generate a synthetic input bundle plus truth.json.
    Synth {
        /// Output directory.
        output: PathBuf,
        /// JSON generator spec; omitted fields take their defaults.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Overrides the seed from the generator spec.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print root and vertex errors of a motion file against ground truth.
    Eval {
        motion: PathBuf,
        truth: PathBuf,
        /// Bundle the motion was reconstructed from.
        bundle: PathBuf,
    },
}

#[derive(Debug, Args)]
struct Overrides {
    /// JSON optimizer config; flags below take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long = "lr")]
    learning_rate: Option<f64>,
    /// Temporal smoothing width of the initial root trajectory, in frames.
    #[arg(long)]
    sigma: Option<f64>,
    /// Use every n-th body vertex in the Chamfer terms.
    #[arg(long)]
    vertex_stride: Option<usize>,
}

impl Overrides {
    fn resolve(&self) -> Result<OptimizeConfig> {
        let mut config: OptimizeConfig = match &self.config {
            Some(path) => read_json(path)?,
            None => OptimizeConfig::default(),
        };
        if let Some(v) = self.iterations {
            config.iterations = v;
        }
        if let Some(v) = self.learning_rate {
            config.learning_rate = v;
        }
        if let Some(v) = self.sigma {
            config.gaussian_sigma = v;
        }
        if let Some(v) = self.vertex_stride {
            config.vertex_stride = v;
        }
        config.validate()?;
        Ok(config)
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Reconstruct {
            input,
            output,
            overrides,
        } => {
            let config = overrides.resolve()?;
            let bundle = load_bundle(&input)?;
            info!(
                "loaded {} frames from {}",
                bundle.frame_count(),
                input.display()
            );
            let result = reconstruct(&bundle, &config)?;
            result.write_outputs(&output)?;
            info!(
                "final loss {:.6e} after {} iterations; wrote {}",
                result.optimization.final_loss.total,
                result.optimization.iterations_run,
                output.display()
            );
        }
        Command::Synth { output, spec, seed } => {
            let mut spec: SynthSpec = match spec {
                Some(path) => read_json(path)?,
                None => SynthSpec::default(),
            };
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            generate(&spec)?.write(&output)?;
            info!("wrote synthetic bundle to {}", output.display());
        }
        Command::Eval {
            motion,
            truth,
            bundle,
        } => {
            let motion = read_motion_json(&motion)?;
            let truth: TruthFile = read_json(&truth)?;
            let bundle = load_bundle(&bundle)?;
            let report = evaluate(
                &motion.translations(),
                &truth.translations(),
                &bundle.sequence,
            )?;
            let stdout = std::io::stdout();
            stdout
                .lock()
                .write_all(&to_json_bytes(&report))
                .map_err(|e| Error::Io {
                    path: PathBuf::from("<stdout>"),
                    source: e,
                })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => LevelFilter::Warn,
        (false, 0) => LevelFilter::Info,
        (false, 1) => LevelFilter::Debug,
        _ => LevelFilter::Trace,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .init();

    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Validation => 1,
                ErrorKind::Io => 2,
                ErrorKind::Numerical => 3,
            })
        }
    }
}
