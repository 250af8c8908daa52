use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use macc::delivery::{generate_transmissions, measured_rate_per_user, verify_delivery};
use macc::poly::RatePolynomial;
use macc::prefetch::decentralized_prefetch;
use macc::rates::{lower_bound_per_user, rate_per_user};

use macc_harness::config::{DemandMode, ExperimentConfig};
use macc_harness::reproduce::reproduce;
use macc_harness::sweep::{run_sweep, to_csv, to_json};

#[derive(Parser)]
#[command(
    name = "macc",
    version,
    about = "Multi-access coded caching: delivery simulation and exact rate analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(clap::Args)]
struct AnalyzeArgs {
    /// Experiment config (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Per-user achievable rate: exact polynomial and value at the
    /// configured memory point
    Rate(AnalyzeArgs),
    /// Per-user lower bound on any linear delivery scheme
    LowerBound(AnalyzeArgs),
    /// Symbolic delivery log of the configured instance, one record per line
    Transmissions {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate delivery over seeded trials and verify every user decodes
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Override the config base seed
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config trial count (at least 1)
        #[arg(long)]
        trials: Option<u32>,
    },
    /// Evaluate the configured sweep, one row per grid value
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Emit a bundled reference artifact (example1_association,
    /// example2_transmissions, example3_A_sets, example4_E_sets,
    /// example5_Y_sets)
    Reproduce {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Rate(args) => analyze("rate", args),
        Command::LowerBound(args) => analyze("lower_bound", args),
        Command::Transmissions { config, out } => {
            let config = load(&config)?;
            let instance = config.base_instance().map_err(|e| e.to_string())?;
            let demands = fixed_demands(&instance).map_err(|e| e.to_string())?;
            let log =
                macc::delivery::generate_symbolic_transmissions(&instance.table, &demands)
                    .map_err(|e| e.to_string())?;
            write_out(out.as_deref(), &log.to_text())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            config,
            seed,
            trials,
        } => {
            let mut config = load(&config)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            if let Some(trials) = trials {
                config.trials = trials;
            }
            verify(&config)
        }
        Command::Sweep {
            config,
            seed,
            trials,
            out,
            format,
        } => {
            let mut config = load(&config)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            if let Some(trials) = trials {
                config.trials = trials;
            }
            let rows = run_sweep(&config).map_err(|e| e.to_string())?;
            let text = match format {
                Format::Csv => to_csv(&rows),
                Format::Json => to_json(&rows),
            };
            write_out(out.as_deref(), &text)?;
            if rows.iter().all(|r| r.decode_ok) {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("error: decoding failed at some sweep point");
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Reproduce { name, out } => {
            let text = reproduce(&name).map_err(|e| e.to_string())?;
            write_out(out.as_deref(), &text)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn load(path: &std::path::Path) -> Result<ExperimentConfig, String> {
    ExperimentConfig::from_path(path).map_err(|e| e.to_string())
}

fn analyze(quantity: &str, args: AnalyzeArgs) -> Result<ExitCode, String> {
    let config = load(&args.config)?;
    let instance = config.base_instance().map_err(|e| e.to_string())?;
    let poly = match quantity {
        "rate" => rate_per_user(&instance.table, &instance.params),
        _ => lower_bound_per_user(&instance.table, &instance.params),
    };
    let gamma = instance.params.gamma();
    let text = render_poly(quantity, &poly, gamma, args.format);
    write_out(args.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn render_poly(quantity: &str, poly: &RatePolynomial, gamma: f64, format: Format) -> String {
    match format {
        Format::Csv => format!(
            "quantity,gamma,users,per_user,terms\n{},{:.10},{},{:.10},{}\n",
            quantity,
            gamma,
            poly.users(),
            poly.eval(gamma),
            poly.to_text(),
        ),
        Format::Json => {
            let value = serde_json::json!({
                "quantity": quantity,
                "gamma": gamma,
                "users": poly.users(),
                "per_user": poly.eval(gamma),
                "terms": poly.to_text(),
            });
            format!("{value:#}\n")
        }
    }
}

fn fixed_demands(
    instance: &macc_harness::config::Instance,
) -> macc::Result<macc::model::DemandVector> {
    match &instance.demand {
        DemandMode::Explicit(files) => {
            macc::model::DemandVector::new(files.clone(), &instance.table, &instance.params)
        }
        DemandMode::Distinct => {
            macc::model::DemandVector::identity(&instance.table, &instance.params)
        }
    }
}

fn verify(config: &ExperimentConfig) -> Result<ExitCode, String> {
    let instance = config.base_instance().map_err(|e| e.to_string())?;
    let trials = config.trials.max(1) as u64;
    let mut all_ok = true;
    for trial in 0..trials {
        let seed = config.seed.wrapping_add(trial);
        let demands = match &instance.demand {
            DemandMode::Explicit(files) => macc::model::DemandVector::new(
                files.clone(),
                &instance.table,
                &instance.params,
            ),
            DemandMode::Distinct => {
                // Same per-trial assignment the sweep uses.
                let mut rng = macc::rng::SplitMix64::new(seed ^ 0xD15_71C7);
                let mut pool: Vec<usize> = (0..instance.params.files as usize).collect();
                for i in 0..instance.params.users as usize {
                    let j = i + rng.next_below((pool.len() - i) as u64) as usize;
                    pool.swap(i, j);
                }
                pool.truncate(instance.params.users as usize);
                macc::model::DemandVector::new_distinct(pool, &instance.table, &instance.params)
            }
        }
        .map_err(|e| e.to_string())?;
        let state = decentralized_prefetch(&instance.params, seed);
        let log = generate_transmissions(&state, &instance.table, &demands)
            .map_err(|e| e.to_string())?;
        let report = verify_delivery(&log, &state, &instance.table, &demands);
        let rate = measured_rate_per_user(&log, &instance.params);
        println!("trial={trial} seed={seed} rate_pu={rate:.6} ok={}", report.ok);
        if !report.ok {
            all_ok = false;
            for (user, fraction) in report.per_user.iter().filter(|(_, f)| *f < 1.0) {
                eprintln!("  user {user} recovered {fraction:.4} of its file");
            }
        }
    }
    if all_ok {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("error: delivery verification failed");
        Ok(ExitCode::FAILURE)
    }
}

fn write_out(path: Option<&std::path::Path>, text: &str) -> Result<(), String> {
    match path {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
