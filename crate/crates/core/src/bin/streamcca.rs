use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use streamcca::harness::dataset::{load_truth, FileSource};
use streamcca::harness::generate_files;
use streamcca::harness::run::{run, write_outputs, Algo, EtaMode, RunConfig};
use streamcca::harness::synthetic::SyntheticSpec;
use streamcca::{CcaError, Result};

#[derive(Parser)]
#[command(
    name = "streamcca",
    version,
    about = "Streaming CCA by stochastic approximation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset and its ground truth.
    Gen(GenArgs),
    /// Run a solver over a dataset file.
    Run(RunArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    dx: usize,
    #[arg(long)]
    dy: usize,
    /// Number of nonzero canonical correlations; must match the length of --rho.
    #[arg(long)]
    k_true: usize,
    /// Comma-separated correlations in (0, 1).
    #[arg(long, value_delimiter = ',', required = true)]
    rho: Vec<f64>,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    cond_x: f64,
    #[arg(long, default_value_t = 1.0)]
    cond_y: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output prefix; writes <out>.data.txt and <out>.truth.txt.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    algo: Algo,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    k: usize,
    /// Rank cap for capped-msg; defaults to 2k.
    #[arg(long)]
    cap_rank: Option<usize>,
    /// Streamed iterations. Ignored by saa.
    #[arg(long = "T", default_value_t = 0)]
    iterations: usize,
    /// Auxiliary sample count; derived from --bound-b and --truth when omitted.
    #[arg(long)]
    tau: Option<usize>,
    #[arg(long, value_enum, default_value_t = EtaMode::Sqrt)]
    eta: EtaMode,
    #[arg(long, default_value_t = 0.1)]
    eta_c: f64,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    eval_every: usize,
    #[arg(long, default_value_t = 10)]
    rounding_draws: usize,
    #[arg(long, default_value_t = 1)]
    whitener_cadence: usize,
    /// Declared bound on max(|x|^2, |y|^2); violating samples are rejected.
    #[arg(long)]
    bound_b: Option<f64>,
    /// Write wall_ms as 0 so repeated runs give identical files.
    #[arg(long)]
    freeze_clock: bool,
    /// Output prefix; writes <out>.metrics.csv, .solution.txt and .summary.json.
    #[arg(long)]
    out: PathBuf,
}

fn gen(a: GenArgs) -> Result<()> {
    if a.k_true != a.rho.len() {
        return Err(CcaError::Input(format!(
            "--k-true is {} but --rho has {} entries",
            a.k_true,
            a.rho.len()
        )));
    }
    let spec = SyntheticSpec {
        d_x: a.dx,
        d_y: a.dy,
        rho: a.rho,
        cond_x: a.cond_x,
        cond_y: a.cond_y,
    };
    let (data, truth) = generate_files(&spec, a.n, a.seed, &a.out)?;
    log::info!("wrote {} and {}", data.display(), truth.display());
    Ok(())
}

fn run_cmd(a: RunArgs) -> Result<()> {
    let source = FileSource::open(&a.data)?;
    let truth = a.truth.as_deref().map(load_truth).transpose()?;
    let cfg = RunConfig {
        algo: a.algo,
        k: a.k,
        cap_rank: a.cap_rank,
        iterations: a.iterations,
        tau: a.tau,
        eta_mode: a.eta,
        eta_c: a.eta_c,
        reg_lambda: a.lambda,
        seed: a.seed,
        eval_every: a.eval_every,
        rounding_draws: a.rounding_draws,
        whitener_cadence: a.whitener_cadence,
        bound_b: a.bound_b,
        freeze_clock: a.freeze_clock,
    };
    let out = run(&cfg, &source, truth.as_ref())?;
    write_outputs(&a.out, &out)?;
    if let Some(s) = out.summary.final_subopt {
        log::info!("final suboptimality {s}");
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Run(a) => run_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
