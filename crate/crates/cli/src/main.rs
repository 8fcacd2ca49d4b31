use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spde_frame::experiments::{experiment_spec, list_experiments, parse_config, run, ExperimentConfig};
use spde_frame::report::{Relation, Verdict};

/// Exit statuses.
const EXIT_FAIL: u8 = 1;
const EXIT_WARN: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_RUNTIME: u8 = 4;

#[derive(Parser)]
#[command(name = "spde-frame", version, about = "Moving-frame SPDE experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Output directory for report.json and CSV files.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the experiment's path count.
        #[arg(long)]
        paths: Option<u64>,
    },
    /// List experiments, parameters, units and defaults.
    List {
        /// Print the default config file of one experiment instead.
        #[arg(long, value_name = "EXPERIMENT")]
        config: Option<String>,
    },
}

fn load(path: &PathBuf, seed: Option<u64>, paths: Option<u64>) -> Result<ExperimentConfig, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut cfg = parse_config(&text).map_err(|e| e.to_string())?;
    if let Some(s) = seed {
        cfg.set_seed(s);
    }
    if let Some(n) = paths {
        cfg.set_paths(n).map_err(|e| e.to_string())?;
    }
    Ok(cfg)
}

fn label(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "PASS",
        Verdict::Warn => "WARN",
        Verdict::Fail => "FAIL",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List { config: None } => {
            print!("{}", list_experiments());
            ExitCode::SUCCESS
        }
        Command::List { config: Some(name) } => match experiment_spec(&name) {
            Some(spec) => {
                print!("{}", ExperimentConfig::defaults(spec.kind).to_text());
                ExitCode::SUCCESS
            }
            None => {
                eprintln!("error: unknown experiment {name:?}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
        Command::Run {
            config,
            out,
            seed,
            paths,
        } => {
            let cfg = match load(&config, seed, paths) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            let output = match run(&cfg) {
                Ok(o) => o,
                Err(e) => {
                    eprintln!("run failed: {e}");
                    return ExitCode::from(EXIT_RUNTIME);
                }
            };
            if let Err(e) = output.write_to(&out) {
                eprintln!("cannot write {}: {e}", out.display());
                return ExitCode::from(EXIT_RUNTIME);
            }
            let report = &output.report;
            for c in &report.checks {
                let rel = match c.relation {
                    Relation::AtMost => "<=",
                    Relation::AtLeast => ">=",
                    Relation::Note => "  ",
                };
                println!("{} {:<52} {:>12.4e} {rel} {:.4e}", label(c.verdict), c.name, c.value, c.tolerance);
            }
            for n in &report.notes {
                println!("note: {n}");
            }
            println!(
                "{}: {} in {:.2}s, outputs in {}",
                report.experiment,
                label(report.verdict),
                report.wall_time_s,
                out.display()
            );
            match report.verdict {
                Verdict::Pass => ExitCode::SUCCESS,
                Verdict::Warn => ExitCode::from(EXIT_WARN),
                Verdict::Fail => ExitCode::from(EXIT_FAIL),
            }
        }
    }
}
