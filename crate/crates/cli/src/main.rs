use std::path::PathBuf;
use std::process::ExitCode;

use arlda::{OracleKind, OuterKind, ProblemId};
use arlda_cli::{audit_command, solve_command, sweep_command, CliError, ExperimentConfig, OutputFormat, EXIT_ERROR};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "arlda", version, about = "Adaptive regularization with dynamic accuracy on composite test problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem at one accuracy and write the iteration trace.
    Solve(RunArgs),
    /// Solve at several accuracies and report counts against the bounds.
    Sweep(RunArgs),
    /// Re-check a stored trace against the exact problem data.
    Audit {
        /// Trace written by `solve` (CSV with its summary, or JSON).
        #[arg(long)]
        run: PathBuf,
        /// Findings file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    /// Outer function: zero, l1, l2, linf or weighted-l1.
    #[arg(long)]
    h: Option<String>,
    #[arg(long)]
    h_weight: Option<f64>,
    /// exact, noise, adversarial, series or partial-sum.
    #[arg(long)]
    oracle: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    floor_f: Option<f64>,
    #[arg(long)]
    floor_g: Option<f64>,
    #[arg(long)]
    floor_c: Option<f64>,
    #[arg(long = "floor-J")]
    floor_j: Option<f64>,
    /// Target accuracy; repeat for a sweep.
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Vec<f64>,
    #[arg(long)]
    monotonic: bool,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    sigma0: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
}

impl RunArgs {
    fn into_config(self) -> Result<ExperimentConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(p) = self.problem {
            c.problem = p.parse::<ProblemId>()?;
        }
        if self.dim.is_some() {
            c.dim = self.dim;
        }
        if let Some(h) = self.h {
            c.h = Some(h.parse::<OuterKind>().map_err(CliError::Config)?);
        }
        if self.h_weight.is_some() {
            c.h_weight = self.h_weight;
        }
        if let Some(o) = self.oracle {
            c.oracle = o.parse::<OracleKind>()?;
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        let fl = &mut c.floors;
        for (slot, v) in
            [(&mut fl.f, self.floor_f), (&mut fl.g, self.floor_g), (&mut fl.c, self.floor_c), (&mut fl.j, self.floor_j)]
        {
            if let Some(v) = v {
                *slot = v;
            }
        }
        if !self.epsilon.is_empty() {
            c.epsilon = self.epsilon;
        }
        if self.monotonic {
            c.monotonic = true;
        }
        if self.max_iters.is_some() {
            c.max_iters = self.max_iters;
        }
        if self.sigma0.is_some() {
            c.sigma0 = self.sigma0;
        }
        if self.out.is_some() {
            c.out = self.out;
        }
        if let Some(f) = self.format {
            c.format = f.parse::<OutputFormat>()?;
        }
        c.validate()?;
        Ok(c)
    }
}

fn dispatch(cmd: Command) -> Result<i32, CliError> {
    match cmd {
        Command::Solve(a) => solve_command(&a.into_config()?),
        Command::Sweep(a) => sweep_command(&a.into_config()?),
        Command::Audit { run, out } => audit_command(&run, out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ARLDA_LOG", "warn")).init();
    let cli = Cli::parse();
    let code = match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    };
    ExitCode::from(code as u8)
}
