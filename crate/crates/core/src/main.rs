use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use landfast::ellipticity::{
    normal_ellipticity_report, random_state_points, strong_ellipticity_report,
};
use landfast::params::{load_config, preset, Params, ScenarioSpec, PRESET_NAMES};
use landfast::scenario::{compare, run, RunOptions};
use landfast::{Error, Result};

#[derive(Parser)]
#[command(name = "landfast", version, about = "Landfast sea-ice simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its output directory.
    Run(RunArgs),
    /// Compare two run directories at their latest common snapshot.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Sampled strong and normal ellipticity checks.
    Ellipticity(EllipticityArgs),
    /// Preset utilities.
    Presets {
        #[command(subcommand)]
        command: PresetsCommand,
    },
}

#[derive(Subcommand)]
enum PresetsCommand {
    /// List the preset names.
    List,
    /// Print a preset as a config file.
    Show { name: String },
}

#[derive(Args)]
struct Source {
    /// Preset name (see `presets list`).
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Config file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Source {
    fn load(&self) -> Result<Option<(Params, ScenarioSpec)>> {
        match (&self.preset, &self.config) {
            (Some(name), _) => preset(name).map(Some),
            (None, Some(path)) => load_config(path).map(Some),
            (None, None) => Ok(None),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Snapshot interval in seconds (default: the scenario's, 12 h for presets).
    #[arg(long)]
    snapshots_every: Option<f64>,
    /// Recorded in the manifest.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Stop after this many steps and leave a checkpoint.
    #[arg(long)]
    stop_after_steps: Option<usize>,
    /// Continue from the checkpoint in the output directory.
    #[arg(long)]
    resume: bool,
}

#[derive(Args)]
struct EllipticityArgs {
    /// Take parameters from this preset or config instead of the defaults.
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 100_000)]
    normal_samples: usize,
    /// Number of random local states the samples draw from.
    #[arg(long, default_value_t = 1_000)]
    states: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run(args) => {
            let (params, spec) = match args.source.load()? {
                Some(loaded) => loaded,
                None if args.resume => {
                    let text = std::fs::read_to_string(
                        args.out.join(landfast::scenario::CHECKPOINT_FILE),
                    )?;
                    let sim = landfast::scenario::Simulation::from_checkpoint(&text)?;
                    (sim.params, sim.spec)
                }
                None => {
                    return Err(Error::Validation(
                        "one of --preset or --config is required".into(),
                    ))
                }
            };
            let opts = RunOptions {
                out_dir: args.out,
                snapshot_interval: args.snapshots_every,
                stop_after_steps: args.stop_after_steps,
                resume: args.resume,
                seed: args.seed,
            };
            let m = run(params, spec, &opts)?;
            println!(
                "{}: {}/{} steps in {:.1} s, {} non-converged momentum solves, output in {}",
                m.name,
                m.steps_completed,
                m.total_steps,
                m.wall_clock_seconds,
                m.step_reports.iter().filter(|s| !s.converged).count(),
                opts.out_dir.display()
            );
            Ok(true)
        }
        Command::Compare { a, b, json } => {
            let r = compare(&a, &b)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&r)?);
            } else {
                println!("compared {} at t = {} s", r.snapshot, r.t);
                println!(
                    "max |diff|: v {:.6e}  h {:.6e}  A {:.6e}",
                    r.max_abs_diff.v, r.max_abs_diff.h, r.max_abs_diff.a
                );
                for (name, d) in &r.timeseries_max_abs_diff {
                    println!("  {name:<18} {d:.6e}");
                }
                for (label, m) in [("A", &r.metrics_a), ("B", &r.metrics_b)] {
                    let grounded = m
                        .grounded_strip_speed
                        .map(|s| format!("{s:.6e}"))
                        .unwrap_or_else(|| "none".into());
                    println!(
                        "{label}: mean eastward {:.6e}  left strip speed {:.6e}  grounded strip speed {}  min A left half {:.4}",
                        m.mean_eastward_velocity, m.left_strip_speed, grounded, m.min_concentration_left_half
                    );
                }
            }
            Ok(true)
        }
        Command::Ellipticity(args) => {
            let params = args.source.load()?.map(|(p, _)| p).unwrap_or_default();
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            let points = random_state_points(&mut rng, args.states.max(1));
            let strong = strong_ellipticity_report(&points, args.samples, args.seed, &params)?;
            let normal =
                normal_ellipticity_report(&points, args.normal_samples, args.seed, &params)?;
            println!("{strong}");
            println!("{normal}");
            let ok = strong.violations == 0 && normal.violations() == 0;
            if let Some(w) = &strong.first_violation {
                println!("first strong violation: {w:?}");
            }
            if let Some(w) = &normal.first_violation {
                println!("first normal violation: {w:?}");
            }
            println!("{}", if ok { "PASS" } else { "FAIL" });
            Ok(ok)
        }
        Command::Presets { command } => {
            match command {
                PresetsCommand::List => {
                    for name in PRESET_NAMES {
                        println!("{name}");
                    }
                }
                PresetsCommand::Show { name } => {
                    let (params, spec) = preset(&name)?;
                    print!("{}", landfast::params::to_toml(&params, &spec)?);
                }
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
