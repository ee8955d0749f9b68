use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand};

use wlanfair::analytic::{self, ModelError, ModelVariant, ScenarioParams};
use wlanfair::harness::{self, HarnessError, SweepSpec};
use wlanfair::sim::{self, SimConfig, SimError};

const EXIT_USAGE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(
    name = "wlanfair",
    version,
    about = "Up/down TCP fairness over a WLAN access point buffer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Point {
    /// Uplink stations
    #[arg(long)]
    up: u32,
    /// Downlink stations
    #[arg(long)]
    down: u32,
    /// TCP window in packets
    #[arg(long, default_value_t = ScenarioParams::DEFAULT_WINDOW)]
    wnd: u32,
    /// AP buffer in packets
    #[arg(long)]
    buffer: u32,
}

impl Point {
    fn params(&self) -> ScenarioParams {
        ScenarioParams::new(self.up, self.down, self.wnd, self.buffer)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the analytic model at one point
    Model {
        #[command(flatten)]
        point: Point,
        /// new, old or exact
        #[arg(long, default_value = "new")]
        variant: ModelVariant,
    },
    /// Run one simulation
    Simulate {
        #[command(flatten)]
        point: Point,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Simulated seconds
        #[arg(long, default_value_t = 100.0)]
        duration: f64,
        /// Seconds excluded from throughput
        #[arg(long, default_value_t = 0.0)]
        warmup: f64,
    },
    /// Sweep buffer sizes and write a CSV
    #[command(group(ArgGroup::new("source").required(true).args(["config", "scenario"])))]
    Sweep {
        /// TOML sweep description
        #[arg(long)]
        config: Option<PathBuf>,
        /// Built-in scenario s1, s2, s3 or s4
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        out: PathBuf,
        /// Directory for plot tables
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Compare a sweep CSV against a reference CSV
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

type Failure = (u8, String);

fn model_failure(e: ModelError) -> Failure {
    let code = match e {
        ModelError::NoPhysicalRoot(_)
        | ModelError::NonPhysical(_)
        | ModelError::NumericRange(_)
        | ModelError::Solver(_) => EXIT_NUMERIC,
        _ => EXIT_USAGE,
    };
    (code, e.to_string())
}

fn sim_failure(e: SimError) -> Failure {
    let code = match e {
        SimError::InvalidConfig(_) => EXIT_USAGE,
        _ => EXIT_CONFIG,
    };
    (code, e.to_string())
}

fn harness_failure(e: HarnessError) -> Failure {
    (EXIT_CONFIG, e.to_string())
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Model { point, variant } => {
            let sol = analytic::solve_model(&point.params(), variant).map_err(model_failure)?;
            println!("variant         {}", sol.variant);
            println!("E               {}", sol.extra_service.value());
            println!("R_model         {}", sol.ratio_down_up);
            println!("ratio_up_down   {}", sol.ratio_up_down);
            println!("Pr              {}", sol.loss_prob);
            println!("pr_raw          {}", sol.pr_raw);
            println!("pr_clamped      {}", sol.pr_clamped);
            println!("utilization     {}", sol.utilization);
            println!("residual_eq13   {:e}", sol.residual_eq13);
            for c in &sol.candidates {
                let status = c.rejection.map_or("accepted", |r| r.as_str());
                match c.residual {
                    Some(res) => {
                        println!("candidate       {} residual {:e} {}", c.root, res, status)
                    }
                    None => println!("candidate       {} {}", c.root, status),
                }
            }
        }
        Command::Simulate {
            point,
            seed,
            duration,
            warmup,
        } => {
            let mut cfg = SimConfig::new(point.params(), seed);
            cfg.duration = duration;
            cfg.warmup = warmup;
            let res = sim::run_simulation(&cfg).map_err(sim_failure)?;
            println!("up_pps          {}", res.up_total);
            println!("down_pps        {}", res.down_total);
            println!("ratio_up_down   {}", res.ratio_up_down);
            match res.jain_index {
                Some(j) => println!("jain_index      {j}"),
                None => println!("jain_index      nan"),
            }
            println!(
                "ap_drops        data {} ack {}",
                res.ap_drops.data, res.ap_drops.ack
            );
            println!("max_ap_queue    {}", res.max_ap_occupancy);
            for f in &res.per_flow {
                println!(
                    "flow {:<3} {:<4} throughput {:.3} sent {} dropped {}",
                    f.id,
                    f.direction.as_str(),
                    f.throughput,
                    f.sent,
                    f.dropped
                );
            }
        }
        Command::Sweep {
            config,
            scenario,
            out,
            plot,
        } => {
            let spec = match (config, scenario) {
                (Some(path), _) => harness::load_config(&path).map_err(harness_failure)?,
                (None, Some(name)) => SweepSpec::builtin(&name)
                    .ok_or_else(|| (EXIT_USAGE, format!("unknown scenario `{name}`")))?,
                (None, None) => unreachable!("clap enforces one source"),
            };
            let rows = harness::run_sweep(&spec).map_err(harness_failure)?;
            harness::write_csv(&rows, &out).map_err(harness_failure)?;
            if let Some(dir) = plot {
                harness::emit_plot_data(&rows, &dir).map_err(harness_failure)?;
            }
            eprintln!("{} rows written to {}", rows.len(), out.display());
        }
        Command::Compare { a, b, out } => {
            let model = harness::read_csv(&a).map_err(harness_failure)?;
            let reference = harness::read_csv(&b).map_err(harness_failure)?;
            let cmp = harness::compare(&model, &reference).map_err(harness_failure)?;
            harness::write_comparison_csv(&cmp, &out).map_err(harness_failure)?;
            for s in &cmp.summary {
                let fmt = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.6}"));
                println!(
                    "{:<22} points {:<4} flagged {:<4} mean_abs {} mean_rel {}",
                    s.variant,
                    s.points,
                    s.flagged,
                    fmt(s.mean_abs_error),
                    fmt(s.mean_rel_error)
                );
            }
        }
    }
    Ok(())
}
