use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use ehrelay::analytic::{self, XiQuadrature};
use ehrelay::montecarlo::{estimate_outage, SimulationPlan};
use ehrelay::sweep::{self, SweepSpec};
use ehrelay::{CombiningScheme, SystemParams};

/// Worker count for parallel sections; unset means one per CPU.
const THREADS_ENV: &str = "EHRELAY_THREADS";

#[derive(Parser)]
#[command(
    name = "ehrelay",
    version,
    about = "Outage analysis of an energy-harvesting two-way relay"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic outage at a single point.
    Analytic(PointArgs),
    /// Monte Carlo outage at a single point.
    Montecarlo(PointArgs),
    /// Run the configured sweep and write CSV.
    Sweep(SweepArgs),
    /// Compare analytic and Monte Carlo rows; exits nonzero on failure.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Common {
    /// Key-value configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Base seed for Monte Carlo streams.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Monte Carlo trial count.
    #[arg(long, value_name = "N")]
    trials: Option<u64>,
    /// Gauss-Chebyshev quadrature order.
    #[arg(long, value_name = "N")]
    m: Option<usize>,
}

#[derive(Args)]
struct PointArgs {
    #[command(flatten)]
    common: Common,
    /// optimal, relay_only, direct_only or fixed:THETA.
    #[arg(long, value_name = "NAME[:theta]", default_value = "optimal")]
    scheme: CombiningScheme,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Output CSV; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Compare rows of an existing CSV instead of running the sweep.
    #[arg(long, value_name = "PATH", conflicts_with = "config")]
    csv: Option<PathBuf>,
}

type AnyResult<T> = Result<T, Box<dyn std::error::Error>>;

fn load(common: &Common) -> AnyResult<(SystemParams, SweepSpec)> {
    let (params, mut spec) = match &common.config {
        Some(path) => sweep::parse_config(path)?,
        None => (SystemParams::reference(), SweepSpec::default()),
    };
    if let Some(seed) = common.seed {
        spec.base_seed = seed;
    }
    if let Some(trials) = common.trials {
        spec.mc_trials = trials;
    }
    if let Some(m) = common.m {
        spec.m_count = m;
    }
    Ok((params, spec))
}

fn run_analytic(args: &PointArgs) -> AnyResult<()> {
    let (params, spec) = load(&args.common)?;
    let c = params.derive()?;
    match args.scheme {
        CombiningScheme::OptimalCombining => {
            let t = analytic::analytic_terms(&params, spec.m_count, XiQuadrature::default())?;
            println!("m_count {}", t.m_count);
            println!("p1 {}", sweep::format_number(t.p1));
            println!("p21 {}", sweep::format_number(t.p21));
            println!("p22 {}", sweep::format_number(t.p22));
            println!("t_min {}", sweep::format_number(t.bounds.t_min));
            println!("delta_min {}", sweep::format_number(t.bounds.delta_min));
            println!("delta_max {}", sweep::format_number(t.bounds.delta_max));
            println!("outage_quadrature {}", sweep::format_number(t.outage));
            let high = analytic::outage_high_snr(&params)?;
            println!("outage_high_snr {}", sweep::format_number(high));
            if t.clamp_events > 0 {
                println!("clamp_events {}", t.clamp_events);
            }
        }
        CombiningScheme::DirectOnly => {
            println!(
                "outage_direct {}",
                sweep::format_number(analytic::direct_outage(&c))
            );
        }
        other => return Err(format!("no analytic form for scheme {other}").into()),
    }
    Ok(())
}

fn run_montecarlo(args: &PointArgs) -> AnyResult<()> {
    let (params, spec) = load(&args.common)?;
    let plan = SimulationPlan::new(params, args.scheme, spec.mc_trials, spec.base_seed);
    let est = estimate_outage(&plan)?;
    println!("scheme {}", est.scheme);
    println!("seed {}", est.seed);
    println!("n_trials {}", est.n_trials);
    println!("n_outages {}", est.n_outages);
    println!("p_hat {}", sweep::format_number(est.p_hat));
    println!("ci_low {}", sweep::format_number(est.ci_low));
    println!("ci_high {}", sweep::format_number(est.ci_high));
    Ok(())
}

fn run_sweep(args: &SweepArgs) -> AnyResult<()> {
    let (params, spec) = load(&args.common)?;
    let rows = sweep::run_sweep(&params, &spec)?;
    info!("{} rows", rows.len());
    match &args.out {
        Some(path) => sweep::emit_csv(&rows, path)?,
        None => sweep::write_csv(&rows, std::io::stdout().lock())?,
    }
    Ok(())
}

fn run_verify(args: &VerifyArgs) -> AnyResult<bool> {
    let rows = match &args.csv {
        Some(path) => sweep::read_csv(path)?,
        None => {
            let (params, spec) = load(&args.common)?;
            sweep::run_sweep(&params, &spec)?
        }
    };
    let report = sweep::compare_report(&rows)?;
    println!("{report}");
    Ok(report.passed())
}

fn configure_threads() -> AnyResult<()> {
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw
            .parse()
            .map_err(|_| format!("{THREADS_ENV} must be a positive integer (got {raw:?})"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Analytic(a) => run_analytic(a).map(|()| true),
        Command::Montecarlo(a) => run_montecarlo(a).map(|()| true),
        Command::Sweep(a) => run_sweep(a).map(|()| true),
        Command::Verify(a) => run_verify(a),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
