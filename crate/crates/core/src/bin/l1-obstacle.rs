use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use l1_obstacle::acceptance::{run_all, run_criterion};
use l1_obstacle::config::{parse_override, RunConfig};
use l1_obstacle::harness::{exit_code, run};
use l1_obstacle::problems::problems;
use l1_obstacle::Error;

#[derive(Parser)]
#[command(version, about = "Obstacle, two-phase and Hele-Shaw solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in problems.
    List,
    /// Solve one problem, or run the study named in the configuration.
    Run {
        /// Problem id; may instead come from the configuration file.
        problem: Option<String>,
        #[command(flatten)]
        opts: RunArgs,
    },
    /// Refinement (`refine 128,256,512`) or time sweep (`time-sweep 0.1,0.2`).
    Study {
        problem: String,
        /// `refine` or `time-sweep`.
        mode: String,
        /// Comma-separated grid sizes or times.
        values: String,
        #[command(flatten)]
        opts: RunArgs,
    },
    /// Run the acceptance suite.
    Check {
        /// Only these criteria.
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// Penalty weight (`γ` for Hele-Shaw).
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_outer: Option<usize>,
    /// Inner step of the minimal-surface solver.
    #[arg(long)]
    tau: Option<f64>,
    /// `preset` or `auto`.
    #[arg(long)]
    penalty: Option<String>,
    /// Hele-Shaw time.
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// `single`, `refine 128,256,...` or `time-sweep 0.1,...`.
    #[arg(long, num_args = 1..=2)]
    study: Vec<String>,
    /// Any configuration key, as `key=value`.
    #[arg(long = "set")]
    set: Vec<String>,
}

impl RunArgs {
    fn overrides(&self, problem: Option<&str>) -> Result<BTreeMap<String, String>, Error> {
        let mut o = BTreeMap::new();
        for s in &self.set {
            let (k, v) = parse_override(s)?;
            o.insert(k, v);
        }
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                o.insert(k.to_string(), v);
            }
        };
        put("problem", problem.map(str::to_string));
        put("n", self.n.map(|v| v.to_string()));
        put("mu", self.mu.map(|v| v.to_string()));
        put("lambda", self.lambda.map(|v| v.to_string()));
        put("tol", self.tol.map(|v| v.to_string()));
        put("max_outer", self.max_outer.map(|v| v.to_string()));
        put("tau", self.tau.map(|v| v.to_string()));
        put("penalty", self.penalty.clone());
        put("t", self.t.map(|v| v.to_string()));
        put("out", self.out.as_ref().map(|p| p.display().to_string()));
        if !self.study.is_empty() {
            put("study", Some(self.study.join(" ")));
        }
        Ok(o)
    }
}

fn execute(problem: Option<&str>, args: &RunArgs, study: Option<String>) -> Result<bool, Error> {
    let mut o = args.overrides(problem)?;
    if let Some(s) = study {
        o.insert("study".into(), s);
    }
    let cfg = RunConfig::load(args.config.as_deref(), &o)?;
    let summary = run(&cfg)?;
    print!("{}", summary.report);
    println!("artifacts in {}", cfg.out.display());
    Ok(summary.all_converged())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::List => {
            for p in problems() {
                println!("{:<22} {:<10} n={:<5} {}", p.id, p.kind.name(), p.preset.n, p.note);
            }
            Ok(true)
        }
        Command::Run { problem, opts } => execute(problem.as_deref(), &opts, None),
        Command::Study { problem, mode, values, opts } => {
            execute(Some(&problem), &opts, Some(format!("{mode} {values}")))
        }
        Command::Check { only } => {
            let results = if only.is_empty() {
                run_all(|r| println!("{r}"))
            } else {
                let mut out = Vec::new();
                for id in only {
                    match run_criterion(id) {
                        Ok(r) => {
                            println!("{r}");
                            out.push(r);
                        }
                        Err(e) => {
                            eprintln!("error: {e}");
                            return ExitCode::from(2);
                        }
                    }
                }
                out
            };
            let failed = results.iter().filter(|r| !r.passed).count();
            println!("{} of {} criteria passed", results.len() - failed, results.len());
            Ok(failed == 0)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
