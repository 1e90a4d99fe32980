use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fdcrn::analytic::InterferenceMode;
use fdcrn::markov::BlockMode;
use fdcrn::montecarlo::{run_simulation, BatteryMode, SimOptions};
use fdcrn::params::{dbm_to_watts, Scenario};
use fdcrn_cli::{
    chain_dump, describe, divergence_warnings, emit_csv, emit_gnuplot, fig2_grid, fig3_grid,
    run_experiment, Engine, ExperimentKind, RunConfig, SweepPoint,
};

/// Throughput engines for a wireless-powered relaying network: an
/// analytical battery-chain model and an independent Monte Carlo simulator.
#[derive(Parser)]
#[command(name = "fdcrn", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a sweep (or a single point) and emit CSV
    Run(RunArgs),
    /// Emit a gnuplot script for a CSV produced by `run`
    Plot(PlotArgs),
    /// Dump the battery chain: stationary law and transition matrix
    Chain(ChainArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentArg {
    /// Primary-power sweep preset
    Fig2,
    /// Transmit-energy sweep preset
    Fig3,
    /// Single point from a scenario file
    Custom,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Analytic,
    Sim,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum BatteryArg {
    /// Track battery energy exactly
    Continuous,
    /// Mirror the analytical chain's level arithmetic
    Discretized,
}

#[derive(Clone, Copy, ValueEnum)]
enum InterferenceArg {
    /// ST transmissions degrade the relay hop
    Exact,
    /// Ignore ST interference
    Off,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment grid to evaluate
    #[arg(long, value_enum, default_value_t = ExperimentArg::Fig2)]
    experiment: ExperimentArg,
    /// Scenario file; replaces the preset as the base of the grid, and is
    /// mandatory for `--experiment custom`
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = EngineArg::Both)]
    engine: EngineArg,
    /// Simulated blocks per sweep point (all replicas combined)
    #[arg(long, default_value_t = 1_000_000)]
    blocks: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Independent simulator replicas per point
    #[arg(long, default_value_t = 8)]
    replicas: u32,
    /// Override the battery level count everywhere
    #[arg(long)]
    levels: Option<u32>,
    #[arg(long, value_enum, default_value_t = BatteryArg::Continuous)]
    battery: BatteryArg,
    /// ST interference on the relay hop in the simulator
    #[arg(long, value_enum, default_value_t = InterferenceArg::Exact)]
    interference: InterferenceArg,
    /// Condition the analytical transmitting branch on the ST->PR gain
    /// instead of dropping the interference term
    #[arg(long)]
    analytic_exact: bool,
    /// Evaluate one point at this primary power instead of the whole grid
    #[arg(long)]
    power_dbm: Option<f64>,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a gnuplot script next to the CSV
    #[arg(long, requires = "out")]
    plot_script: bool,
    /// Print the first blocks of the first point as a table (simulator)
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct PlotArgs {
    /// CSV produced by `run`
    #[arg(long)]
    csv: PathBuf,
    /// Experiment the CSV came from (sets the axis labels)
    #[arg(long, value_enum, default_value_t = ExperimentArg::Fig2)]
    experiment: ExperimentArg,
    /// Script path; defaults to the CSV path with a .gp extension
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ChainArgs {
    /// Scenario file; defaults to the power-sweep preset
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    levels: Option<u32>,
    /// Output prefix: writes <prefix>_pi.csv and <prefix>_v.csv
    #[arg(long, default_value = "chain")]
    out: String,
}

fn base_scenario(kind: ExperimentArg, config: &Option<PathBuf>) -> Result<Scenario> {
    if let Some(path) = config {
        return Scenario::from_path(path)
            .with_context(|| format!("loading scenario {}", path.display()));
    }
    match kind {
        ExperimentArg::Fig2 => Ok(Scenario::fig2()),
        ExperimentArg::Fig3 => Ok(Scenario::fig3()),
        ExperimentArg::Custom => bail!("--experiment custom needs --config"),
    }
}

fn run(args: RunArgs) -> Result<()> {
    let base = base_scenario(args.experiment, &args.config)?;
    let kind = match args.experiment {
        ExperimentArg::Fig2 => ExperimentKind::Fig2,
        ExperimentArg::Fig3 => ExperimentKind::Fig3,
        ExperimentArg::Custom => ExperimentKind::Custom,
    };
    let points: Vec<SweepPoint> = if let Some(dbm) = args.power_dbm {
        let scenario = base.with_powers(dbm_to_watts(dbm), base.config.p_d);
        vec![SweepPoint { sweep_var: dbm, scenario }]
    } else {
        match kind {
            ExperimentKind::Fig2 => fig2_grid(&base),
            ExperimentKind::Fig3 => fig3_grid(&base)?,
            ExperimentKind::Custom => vec![SweepPoint {
                sweep_var: fdcrn::params::watts_to_dbm(base.config.p_a),
                scenario: base.clone(),
            }],
        }
    };

    let cfg = RunConfig {
        engine: match args.engine {
            EngineArg::Analytic => Engine::Analytic,
            EngineArg::Sim => Engine::Sim,
            EngineArg::Both => Engine::Both,
        },
        n_blocks: args.blocks,
        seed: args.seed,
        replicas: args.replicas,
        battery_mode: match args.battery {
            BatteryArg::Continuous => BatteryMode::Continuous,
            BatteryArg::Discretized => BatteryMode::Discretized,
        },
        sim_interference: match args.interference {
            InterferenceArg::Exact => InterferenceMode::Exact,
            InterferenceArg::Off => InterferenceMode::Off,
        },
        analytic_exact: args.analytic_exact,
        levels: args.levels,
    };

    eprintln!("base scenario: {}", describe(&base));
    eprintln!("evaluating {} point(s)", points.len());
    let rows = run_experiment(&points, &cfg)?;
    for warning in divergence_warnings(&rows) {
        eprintln!("warning: {warning}");
    }

    let csv = emit_csv(&rows);
    match &args.out {
        Some(path) => {
            std::fs::write(path, &csv)
                .with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
            if args.plot_script {
                let gp = path.with_extension("gp");
                std::fs::write(&gp, emit_gnuplot(&path.to_string_lossy(), kind))
                    .with_context(|| format!("writing {}", gp.display()))?;
                eprintln!("wrote {}", gp.display());
            }
        }
        None => print!("{csv}"),
    }

    if args.trace {
        print_trace(&points[0].scenario, &cfg)?;
    }
    Ok(())
}

fn print_trace(scenario: &Scenario, cfg: &RunConfig) -> Result<()> {
    let opts = SimOptions {
        n_blocks: cfg.n_blocks.min(40),
        seed: cfg.seed,
        battery_mode: cfg.battery_mode,
        interference: cfg.sim_interference,
        replicas: 1,
        record_trace: true,
        ..SimOptions::default()
    };
    let report = run_simulation(scenario, &opts)?;
    let trace = report.trace.unwrap_or_default();
    eprintln!("trace of the first {} block(s), first point:", trace.len());
    println!("block,start_level,mode,secondary_ok,primary_ok");
    for row in trace {
        let mode = match row.mode {
            BlockMode::Transmit => "transmit",
            BlockMode::Harvest => "harvest",
        };
        println!(
            "{},{},{mode},{},{}",
            row.block, row.start_level, row.secondary_ok, row.primary_ok
        );
    }
    Ok(())
}

fn plot(args: PlotArgs) -> Result<()> {
    let kind = match args.experiment {
        ExperimentArg::Fig2 => ExperimentKind::Fig2,
        ExperimentArg::Fig3 => ExperimentKind::Fig3,
        ExperimentArg::Custom => ExperimentKind::Custom,
    };
    let out = args.out.unwrap_or_else(|| args.csv.with_extension("gp"));
    let script = emit_gnuplot(&args.csv.to_string_lossy(), kind);
    std::fs::write(&out, script).with_context(|| format!("writing {}", out.display()))?;
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn chain(args: ChainArgs) -> Result<()> {
    let mut scenario = match &args.config {
        Some(path) => Scenario::from_path(path)
            .with_context(|| format!("loading scenario {}", path.display()))?,
        None => Scenario::fig2(),
    };
    if let Some(levels) = args.levels {
        scenario = scenario.with_levels(levels)?;
    }
    eprintln!("scenario: {}", describe(&scenario));
    let (pi_csv, v_csv) = chain_dump(&scenario)?;
    let pi_path = format!("{}_pi.csv", args.out);
    let v_path = format!("{}_v.csv", args.out);
    std::fs::write(Path::new(&pi_path), pi_csv).with_context(|| format!("writing {pi_path}"))?;
    std::fs::write(Path::new(&v_path), v_csv).with_context(|| format!("writing {v_path}"))?;
    eprintln!("wrote {pi_path} and {v_path}");
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Plot(args) => plot(args),
        Command::Chain(args) => chain(args),
    }
}
