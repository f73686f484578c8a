use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wpcn::calibration::{EpochAllocator, Multiuser, PointToPoint};
use wpcn::oracle::{self, Grid, ValidationSummary};
use wpcn::point_to_point::ActivationRule;
use wpcn::sim::{self, Format, ResultRows, Scheme};
use wpcn::{generate_trace, load_trace, save_trace, ChannelTrace, Error, NetworkConfig, Result};

/// Epochs used by `--long-run`.
const LONG_RUN_EPOCHS: usize = 100_000;

#[derive(Parser)]
#[command(
    name = "wpcn",
    version,
    about = "Joint BS power and TDMA time allocation for wireless powered networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scheme at the configured budget.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "joint_t1")]
        scheme: Scheme,
        #[command(flatten)]
        output: Output,
    },
    /// Throughput vs average power budget on one shared trace.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated scheme ids; defaults to every applicable scheme.
        #[arg(long, value_delimiter = ',')]
        schemes: Vec<Scheme>,
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, default_value_t = 1e-3)]
        min: f64,
        /// Largest budget; defaults to P_max.
        #[arg(long)]
        max: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Check the closed-form allocators against a brute-force grid search.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2000)]
        tau_points: usize,
        #[arg(long, default_value_t = 100)]
        power_points: usize,
        /// Point-to-point activation rule: window or dual-optimal.
        #[arg(long, default_value = "window")]
        rule: String,
    },
    /// Draw a channel trace and write it as CSV.
    GenTrace {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Channel trace CSV; replaces the generated draws.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Use the full-length run of 1e5 epochs.
    #[arg(long, conflicts_with = "epochs")]
    long_run: bool,
}

#[derive(Args)]
struct Output {
    /// Result file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: Format,
}

impl Common {
    fn config(&self) -> Result<NetworkConfig> {
        let mut cfg = match &self.config {
            Some(p) => NetworkConfig::load(p)?,
            None => NetworkConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.rng_seed = s;
        }
        if let Some(m) = self.epochs {
            cfg.num_epochs = m;
        }
        if self.long_run {
            cfg.num_epochs = LONG_RUN_EPOCHS;
        }
        cfg.validate()
    }

    fn trace(&self, cfg: &NetworkConfig) -> Result<ChannelTrace> {
        match &self.trace {
            Some(p) => load_trace(p, cfg),
            None => generate_trace(cfg),
        }
    }
}

fn write_output(results: &dyn ResultRows, output: &Output) -> Result<()> {
    match &output.out {
        Some(p) => sim::emit_results(results, p, output.format),
        None => {
            print!("{}", sim::render_results(results, output.format)?);
            Ok(())
        }
    }
}

fn report_suite(name: &str, s: &ValidationSummary) {
    println!(
        "{name}: checks={} value_failures={} interior_argmax={} window_disagreements={} worst_gap={:e} {}",
        s.checks.len(),
        s.value_failures(),
        s.interior_argmax(),
        s.window_disagreements(),
        s.worst_gap(),
        if s.passed() { "PASS" } else { "FAIL" }
    );
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate { common, scheme, output } => {
            let cfg = common.config()?;
            let trace = common.trace(&cfg)?;
            let report = sim::run_on_trace(&cfg, &trace, scheme)?;
            eprintln!(
                "{scheme}: {:.6} bits/symbol, achieved {:e} W, lambda {:e}, {} of {} epochs active, {:.2} s",
                report.throughput_bits,
                report.achieved_power_w,
                report.lambda,
                report.active_epochs,
                report.num_epochs,
                report.wall_time_s
            );
            write_output(&report, &output)?;
        }
        Command::Sweep {
            common,
            schemes,
            points,
            min,
            max,
            output,
        } => {
            let cfg = common.config()?;
            let trace = common.trace(&cfg)?;
            let schemes = if schemes.is_empty() {
                Scheme::applicable(&cfg)
            } else {
                schemes
            };
            let budgets = sim::log_spaced(min, max.unwrap_or(cfg.max_power), points)?;
            let curve = sim::sweep_on_trace(&cfg, &trace, &budgets, &schemes)?;
            write_output(&curve, &output)?;
        }
        Command::Validate {
            common,
            tau_points,
            power_points,
            rule,
        } => {
            let cfg = common.config()?;
            let trace = common.trace(&cfg)?;
            let grid = Grid::new(tau_points, power_points);
            let rule = match rule.as_str() {
                "window" => ActivationRule::Window,
                "dual-optimal" => ActivationRule::DualOptimal,
                r => return Err(Error::InvalidArgument(format!("unknown rule '{r}'"))),
            };
            let prices = oracle::price_ladder(Multiuser { cfg: &cfg }.lambda_scale(&trace));
            let multi = oracle::validate_multiuser(&trace, &prices, &cfg, grid)?;
            report_suite("multiuser", &multi);
            let mut ok = multi.passed();
            if cfg.num_nodes == 1 {
                let prices = oracle::price_ladder(PointToPoint { cfg: &cfg, rule }.lambda_scale(&trace));
                let p2p = oracle::validate_point_to_point(&trace, &prices, &cfg, grid, rule)?;
                report_suite("point_to_point", &p2p);
                ok &= p2p.passed();
            }
            return Ok(ok);
        }
        Command::GenTrace { common, out } => {
            let cfg = common.config()?;
            let trace = generate_trace(&cfg)?;
            save_trace(&trace, Path::new(&out))?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error kind=validation_failed message=\"oracle checks failed\"");
            ExitCode::FAILURE
        }
        Err(e) => {
            let message = serde_json::to_string(&e.to_string()).unwrap_or_default();
            eprintln!("error kind={} message={message}", e.kind());
            ExitCode::FAILURE
        }
    }
}
