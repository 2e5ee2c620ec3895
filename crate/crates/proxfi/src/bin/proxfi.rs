use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use proxfi::error::Error;
use proxfi::harness::{emit_plot_data, run_experiment, ExperimentConfig, Mode, RunReport, SeriesKind};

#[derive(Parser)]
#[command(name = "proxfi", about = "Proximal-sampler verification harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment described by a TOML config file.
    Run { config: PathBuf },
    /// Run the built-in verification suite across all modes and targets.
    VerifyAll,
    /// Re-emit one data series from a saved report.json as CSV on stdout.
    Emit {
        report: PathBuf,
        /// One of: fi_vs_k, kl_vs_k, queries_vs_epsilon, slack_table.
        #[arg(long)]
        kind: String,
    },
}

const EXIT_PASS: u8 = 0;
const EXIT_ASSERTION: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn exit_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::InvalidParameter(_) | Error::MissingSeries(_) => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    }
}

fn apply_seed_override(config: &mut ExperimentConfig) -> Result<(), String> {
    if let Ok(raw) = std::env::var("PROXFI_SEED") {
        let seeds: Result<Vec<u64>, _> =
            raw.split(',').map(|s| s.trim().parse::<u64>()).collect();
        config.seeds = seeds.map_err(|e| format!("bad PROXFI_SEED {raw:?}: {e}"))?;
    }
    Ok(())
}

fn print_slack_summary(report: &RunReport) {
    let failed: Vec<_> = report.slack_table.iter().filter(|r| !r.pass).collect();
    println!(
        "{} inequality rows, {} failed, wall time {:.2}s",
        report.slack_table.len(),
        failed.len(),
        report.wall_time_secs
    );
    for row in failed {
        println!(
            "  FAIL {}: lhs {} > rhs {} (slack {})",
            row.name, row.lhs, row.rhs, row.slack
        );
    }
}

fn cmd_run(path: &PathBuf) -> u8 {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return EXIT_USAGE;
        }
    };
    let mut config = match ExperimentConfig::from_toml(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if let Err(msg) = apply_seed_override(&mut config) {
        eprintln!("error: {msg}");
        return EXIT_USAGE;
    }
    match run_experiment(&config) {
        Ok(report) => {
            print_slack_summary(&report);
            println!("report written to {}", config.output_dir.display());
            if report.passed() {
                EXIT_PASS
            } else {
                EXIT_ASSERTION
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    }
}

fn cmd_verify_all() -> u8 {
    let suite: Vec<(&str, ExperimentConfig)> = vec![
        ("verify_ideal gaussian", {
            let mut c = ExperimentConfig::minimal("gaussian(0,1)", Mode::VerifyIdeal);
            c.h = Some(0.5);
            c.k_iters = Some(20);
            c.init_mean = Some(2.0);
            c.grid_n = Some(2049);
            c
        }),
        ("verify_ideal mixture2", {
            let mut c = ExperimentConfig::minimal("mixture2(-2,2,1)", Mode::VerifyIdeal);
            c.k_iters = Some(20);
            c.grid_n = Some(2049);
            c
        }),
        ("verify_ideal doublewell", {
            let mut c = ExperimentConfig::minimal("doublewell(1,4)", Mode::VerifyIdeal);
            c.k_iters = Some(20);
            c.grid_n = Some(1025);
            c
        }),
        ("verify_perturbed gaussian", {
            let mut c = ExperimentConfig::minimal("gaussian(0,1)", Mode::VerifyPerturbed);
            c.eps_mix = Some(0.01);
            c.init_mean = Some(1.0);
            c.init_variance = Some(0.02);
            c.grid_n = Some(2049);
            c
        }),
        ("mc_exact gaussian", {
            let mut c = ExperimentConfig::minimal("gaussian(0,1)", Mode::McExact);
            c.n_chains = Some(20_000);
            c.k_iters = Some(3);
            c.grid_n = Some(2049);
            c
        }),
        ("mc_smoothed gaussian", {
            let mut c = ExperimentConfig::minimal("gaussian(0,1)", Mode::McSmoothed);
            c.n_chains = Some(20_000);
            c.k_iters = Some(3);
            c.grid_n = Some(2049);
            c.inner_method = Some(proxfi::inner::InnerMethod::ExactGaussian);
            c.delta = Some(0.0);
            c.smoothing_variance = Some(0.0);
            c
        }),
        ("ula_baseline gaussian", {
            let mut c = ExperimentConfig::minimal("gaussian(0,1)", Mode::UlaBaseline);
            c.ula_step = Some(0.1);
            c.k_iters = Some(400_000);
            c
        }),
        ("restart gaussian", {
            let mut c = ExperimentConfig::minimal("gaussian(0,1)", Mode::Restart);
            c.init_mean = Some(2.0);
            c.init_variance = Some(1.0);
            c.restart_kl0 = Some(2.0);
            c.restart_epsilon_final = Some(0.25);
            c.grid_n = Some(2049);
            c
        }),
        ("sweep_epsilon doublewell", {
            let mut c = ExperimentConfig::minimal("doublewell(1,4)", Mode::SweepEpsilon);
            c.init_mean = Some(1.0);
            c.init_variance = Some(0.25);
            c.grid_n = Some(1025);
            c
        }),
        ("check_lemmas", ExperimentConfig::minimal("gaussian(0,1)", Mode::CheckLemmas)),
    ];

    let mut worst = EXIT_PASS;
    for (label, mut config) in suite {
        config.output_dir = PathBuf::from("proxfi-out").join(label.replace(' ', "_"));
        if let Err(msg) = apply_seed_override(&mut config) {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
        match run_experiment(&config) {
            Ok(report) => {
                let status = if report.passed() { "pass" } else { "FAIL" };
                println!("[{status}] {label}");
                if !report.passed() {
                    print_slack_summary(&report);
                    worst = worst.max(EXIT_ASSERTION);
                }
            }
            Err(e) => {
                println!("[FAIL] {label}: {e}");
                worst = worst.max(exit_for(&e));
            }
        }
    }
    worst
}

fn cmd_emit(path: &PathBuf, kind: &str) -> u8 {
    let kind: SeriesKind = match kind.parse() {
        Ok(k) => k,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return EXIT_USAGE;
        }
    };
    let report: RunReport = match serde_json::from_str(&text) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {} is not a valid report: {e}", path.display());
            return EXIT_USAGE;
        }
    };
    match emit_plot_data(&report, kind) {
        Ok(csv) => {
            print!("{csv}");
            EXIT_PASS
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config } => cmd_run(&config),
        Command::VerifyAll => cmd_verify_all(),
        Command::Emit { report, kind } => cmd_emit(&report, &kind),
    };
    ExitCode::from(code)
}
