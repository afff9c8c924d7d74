use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ssn_l1::harness::{
    self, render, run_certify, run_experiment, run_scaling, run_solve, Command, ExitStatus, OutputFormat, Settings,
    SolverKind,
};
use ssn_l1::{Error, ExperimentKind, StopRule};

#[derive(Parser)]
#[command(name = "ssn-l1", version, about = "Semismooth Newton solver for l1-penalized least squares")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve an instance bundle (JSON file or CSV directory).
    Solve {
        #[arg(long)]
        instance: Option<PathBuf>,
    },
    /// Run one of the built-in experiments.
    Experiment {
        #[arg(value_parser = parse_kind)]
        kind: Option<ExperimentKind>,
        /// Compressed sensing at n = 8192, m = 512.
        #[arg(long)]
        paper_scale: bool,
    },
    /// Time the solver over a range of problem sizes.
    Scaling {
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// Check a stored solution with the duality gap.
    Certify {
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long)]
        solution: Option<PathBuf>,
        #[arg(long)]
        gap_tol: Option<f64>,
    },
}

#[derive(Args)]
struct Flags {
    /// TOML file with default settings; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    m: Option<usize>,
    #[arg(long, global = true)]
    w: Option<f64>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long, global = true)]
    noise_rel: Option<f64>,
    #[arg(long, global = true)]
    noise_abs: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_parser = parse_solver)]
    solver: Option<SolverKind>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    #[arg(long, global = true, value_parser = parse_stop_rule)]
    stop_rule: Option<StopRule>,
    /// Record cond(M_AA) for every Newton system.
    #[arg(long, global = true)]
    record_condition: bool,
    #[arg(long, global = true)]
    certify: bool,
    #[arg(long, global = true, value_parser = parse_format)]
    format: Option<OutputFormat>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<ExperimentKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_solver(s: &str) -> Result<SolverKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_stop_rule(s: &str) -> Result<StopRule, String> {
    match s {
        "residual-norm" => Ok(StopRule::ResidualNorm),
        "sign-stabilization" => Ok(StopRule::SignStabilization),
        "both" => Ok(StopRule::Both),
        _ => Err(format!("unknown stop rule {s:?}")),
    }
}

fn settings(cli: Cli) -> Result<(Command, Settings), Error> {
    let f = cli.flags;
    let base = match &f.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    let mut top = Settings {
        n: f.n,
        m: f.m,
        w: f.w,
        gamma: f.gamma,
        noise_rel: f.noise_rel,
        noise_abs: f.noise_abs,
        seed: f.seed,
        solver: f.solver,
        tol: f.tol,
        max_iters: f.max_iters,
        stop_rule: f.stop_rule,
        record_condition: f.record_condition.then_some(true),
        certify: f.certify.then_some(true),
        format: f.format,
        out: f.out,
        ..Settings::default()
    };
    let command = match cli.command {
        Cmd::Solve { instance } => {
            top.instance = instance;
            Command::Solve
        }
        Cmd::Experiment { kind, paper_scale } => {
            top.experiment = kind;
            if paper_scale {
                top.n = top.n.or(Some(8192));
                top.m = top.m.or(Some(512));
            }
            Command::Experiment
        }
        Cmd::Scaling { sizes, repeats } => {
            top.sizes = sizes;
            top.repeats = repeats;
            Command::Scaling
        }
        Cmd::Certify {
            instance,
            solution,
            gap_tol,
        } => {
            top.instance = instance;
            top.solution = solution;
            top.gap_tol = gap_tol;
            Command::Certify
        }
    };
    Ok((command, base.overlay(top)))
}

fn emit(text: &str, out: Option<&PathBuf>) {
    if out.is_none() {
        print!("{text}");
    }
}

fn run(command: Command, settings: Settings) -> Result<ExitStatus, Error> {
    let cfg = settings.into_config(command)?;
    match command {
        Command::Solve | Command::Experiment => {
            let outcome = if command == Command::Solve {
                run_solve(&cfg)?
            } else {
                run_experiment(&cfg)?
            };
            emit(&render(&outcome, cfg.output_format)?, cfg.output_path.as_ref());
            for w in &outcome.report.warnings {
                eprintln!("warning: {w}");
            }
            Ok(outcome.exit_status())
        }
        Command::Scaling => {
            let result = run_scaling(&cfg, &cfg.sizes)?;
            let text = match cfg.output_format {
                OutputFormat::Json => serde_json::to_string_pretty(&result)? + "\n",
                OutputFormat::Csv => {
                    let mut s = String::from("n,seconds,iterations\n");
                    for ((n, t), k) in result.sizes.iter().zip(&result.cpu_seconds).zip(&result.iterations) {
                        s.push_str(&format!("{n},{t},{k}\n"));
                    }
                    s
                }
                OutputFormat::Table => result.format_table(),
            };
            match &cfg.output_path {
                Some(path) => std::fs::write(path, &text)?,
                None => print!("{text}"),
            }
            Ok(if result.failed.is_empty() {
                ExitStatus::Success
            } else {
                ExitStatus::NotConverged
            })
        }
        Command::Certify => {
            let outcome = run_certify(&cfg)?;
            print!("{}", harness::format_certificate(&outcome.certificate));
            println!(
                "{} (tolerance {})",
                if outcome.certified { "certified" } else { "not certified" },
                harness::format_sci(outcome.gap_tolerance)
            );
            Ok(outcome.exit_status())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let status = settings(cli).and_then(|(command, s)| run(command, s)).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitStatus::ConfigError
    });
    ExitCode::from(status.code() as u8)
}
