//! `epsim` — event-by-event simulator for single-photon interference and
//! photon-pair experiments, with a time-tagged coincidence analysis
//! pipeline. Every subcommand builds one flat run configuration, so a run
//! is equally reproducible from flags or from a `key = value` config file.

mod commands;

use clap::{Args, Parser, Subcommand};
use epsim_core::config::{RunConfig, RunKind};
use epsim_core::Error;

#[derive(Parser)]
#[command(name = "epsim", version, about = "Event-by-event optics and pair-experiment simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single beam splitter: event stream on two input channels.
    Bs(BsArgs),
    /// Interferometer sweep over the phase-shift grid.
    Mzi(MziArgs),
    /// Two-station pair experiment.
    #[command(subcommand)]
    Eprb(EprbCommand),
    /// CHSH maximum as a function of the coincidence window.
    SmaxSweep(SmaxArgs),
    /// Histogram of time-tag differences for matched pairs.
    Histogram(HistogramArgs),
    /// Closed-form reference table on an angle grid.
    Oracle(OracleArgs),
    /// Sweep the delay exponent and report singlet agreement.
    CalibrateD(CalibrateArgs),
    /// Run from a key = value config file.
    RunConfig { path: String },
}

#[derive(Subcommand)]
enum EprbCommand {
    /// Generate both station datasets.
    Generate(GenerateArgs),
    /// Analyze a pair of station dataset files.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct BsArgs {
    /// Number of input events.
    #[arg(long, default_value_t = 100_000)]
    events: u64,
    /// Probability of a channel-0 input event.
    #[arg(long, default_value_t = 0.5)]
    p0: f64,
    /// Channel-0 input phase, degrees.
    #[arg(long, default_value_t = 30.0)]
    psi0: f64,
    /// Channel-1 input phase, degrees.
    #[arg(long, default_value_t = 0.0)]
    psi1: f64,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct MziArgs {
    /// Events per grid point.
    #[arg(long, default_value_t = 10_000)]
    events_per_point: u64,
    /// First phase-shift grid: start, degrees.
    #[arg(long, default_value_t = 0.0)]
    phi0_start: f64,
    /// First phase-shift grid: stop (exclusive), degrees.
    #[arg(long, default_value_t = 360.0)]
    phi0_stop: f64,
    /// First phase-shift grid: step, degrees.
    #[arg(long, default_value_t = 10.0)]
    phi0_step: f64,
    /// Second path phase, degrees.
    #[arg(long, default_value_t = 0.0)]
    phi1: f64,
    /// Fix the input phase (degrees) instead of one random draw per point.
    #[arg(long)]
    psi0: Option<f64>,
    /// Draw a fresh random input phase per event (washes out interference).
    #[arg(long)]
    psi0_per_event: bool,
    /// Write a per-event route trace CSV (requires a single grid point).
    #[arg(long)]
    trace: Option<String>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of pair events.
    #[arg(long, default_value_t = 1_000_000)]
    events: u64,
    /// Settings per station when drawing random angle lists.
    #[arg(long, default_value_t = 20)]
    settings: u32,
    /// Explicit station-1 angles (degrees, comma-separated).
    #[arg(long)]
    angles1: Option<String>,
    /// Explicit station-2 angles (degrees, comma-separated).
    #[arg(long)]
    angles2: Option<String>,
    /// Source mode: singlet | fixed.
    #[arg(long, default_value = "singlet")]
    mode: String,
    /// Fixed-mode polarization for station 1, degrees.
    #[arg(long, default_value_t = 0.0)]
    xi1: f64,
    /// Fixed-mode polarization for station 2, degrees.
    #[arg(long, default_value_t = 0.0)]
    xi2: f64,
    /// Maximum delay (time unit).
    #[arg(long, default_value_t = 1.0)]
    t0: f64,
    /// Delay exponent.
    #[arg(long, default_value_t = 2.0)]
    d: f64,
    /// Output prefix; writes <prefix>.station1.txt and <prefix>.station2.txt.
    #[arg(long, default_value = "eprb")]
    out_prefix: String,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    window: WindowArgs,
    /// Estimate the clock shift from the data first and apply it.
    #[arg(long)]
    auto_delta: bool,
    /// Histogram resolution for the clock-shift search.
    #[arg(long, default_value_t = 0.0005)]
    resolution: f64,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SmaxArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    window: WindowArgs,
    /// Comma-separated window list (ascending); default is a geometric grid.
    #[arg(long)]
    windows: Option<String>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct HistogramArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Station-1 outcome filter (+1 or -1).
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    x: i8,
    /// Station-2 outcome filter (+1 or -1).
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    y: i8,
    /// Station-1 setting filter (1-based).
    #[arg(long)]
    m1: Option<u32>,
    /// Station-2 setting filter (1-based).
    #[arg(long)]
    m2: Option<u32>,
    /// Histogram bin width.
    #[arg(long, default_value_t = 0.01)]
    bin_width: f64,
    /// Only pairs within this raw time difference enter ("inf" for all).
    #[arg(long, default_value = "inf")]
    match_window: String,
    /// Shift added to station-2 tags.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    delta: f64,
    /// Pairing: by-index | by-time-matching.
    #[arg(long, default_value = "by-index")]
    pairing: String,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct OracleArgs {
    /// Angle grid step, degrees.
    #[arg(long, default_value_t = 5.0)]
    grid_step: f64,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Pair events per exponent candidate.
    #[arg(long, default_value_t = 1_000_000)]
    events: u64,
    /// Random settings per station.
    #[arg(long, default_value_t = 20)]
    settings: u32,
    /// Exponent candidates, comma-separated.
    #[arg(long, default_value = "0,1,2,3,4")]
    d_values: String,
    #[command(flatten)]
    window: WindowArgs,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct DataArgs {
    /// Station-1 dataset file.
    #[arg(long)]
    station1: String,
    /// Station-2 dataset file.
    #[arg(long)]
    station2: String,
}

#[derive(Args)]
struct WindowArgs {
    /// Time-tag resolution.
    #[arg(long, default_value_t = 0.00025)]
    tau: f64,
    /// Coincidence window.
    #[arg(long, default_value_t = 0.00025)]
    window: f64,
    /// Clock shift added to station-2 tags.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    delta: f64,
    /// Coincidence rule: discretized | continuous.
    #[arg(long, default_value = "discretized")]
    rule: String,
    /// Pairing: by-index | by-time-matching.
    #[arg(long, default_value = "by-index")]
    pairing: String,
}

#[derive(Args)]
struct CommonArgs {
    /// Base seed for all random streams.
    #[arg(long, default_value_t = 12345)]
    seed: u64,
    /// Learning parameter of the machines.
    #[arg(long, default_value_t = 0.99)]
    alpha: f64,
    /// Output file (CSV); command-specific default when omitted.
    #[arg(long)]
    out: Option<String>,
}

fn build_config(command: &Command) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::default();
    let set = |cfg: &mut RunConfig, key: &str, value: String| cfg.set(key, &value);
    match command {
        Command::Bs(a) => {
            cfg.kind = RunKind::Bs;
            set(&mut cfg, "events", a.events.to_string())?;
            set(&mut cfg, "p0", a.p0.to_string())?;
            set(&mut cfg, "psi0_deg", a.psi0.to_string())?;
            set(&mut cfg, "psi1_deg", a.psi1.to_string())?;
            apply_common(&mut cfg, &a.common)?;
        }
        Command::Mzi(a) => {
            cfg.kind = RunKind::Mzi;
            set(&mut cfg, "events_per_point", a.events_per_point.to_string())?;
            set(&mut cfg, "phi0_start_deg", a.phi0_start.to_string())?;
            set(&mut cfg, "phi0_stop_deg", a.phi0_stop.to_string())?;
            set(&mut cfg, "phi0_step_deg", a.phi0_step.to_string())?;
            set(&mut cfg, "phi1_deg", a.phi1.to_string())?;
            if let Some(psi0) = a.psi0 {
                set(&mut cfg, "psi0_deg", psi0.to_string())?;
            }
            set(&mut cfg, "psi0_per_event", a.psi0_per_event.to_string())?;
            if let Some(trace) = &a.trace {
                set(&mut cfg, "trace", trace.clone())?;
            }
            apply_common(&mut cfg, &a.common)?;
        }
        Command::Eprb(EprbCommand::Generate(a)) => {
            cfg.kind = RunKind::EprbGenerate;
            set(&mut cfg, "events", a.events.to_string())?;
            set(&mut cfg, "settings_per_station", a.settings.to_string())?;
            if let Some(angles) = &a.angles1 {
                set(&mut cfg, "angles1_deg", angles.clone())?;
            }
            if let Some(angles) = &a.angles2 {
                set(&mut cfg, "angles2_deg", angles.clone())?;
            }
            set(&mut cfg, "source_mode", a.mode.clone())?;
            set(&mut cfg, "xi1_deg", a.xi1.to_string())?;
            set(&mut cfg, "xi2_deg", a.xi2.to_string())?;
            set(&mut cfg, "t0", a.t0.to_string())?;
            set(&mut cfg, "d", a.d.to_string())?;
            set(&mut cfg, "out_prefix", a.out_prefix.clone())?;
            apply_common(&mut cfg, &a.common)?;
        }
        Command::Eprb(EprbCommand::Analyze(a)) => {
            cfg.kind = RunKind::EprbAnalyze;
            apply_data(&mut cfg, &a.data)?;
            apply_window(&mut cfg, &a.window)?;
            set(&mut cfg, "auto_delta", a.auto_delta.to_string())?;
            set(&mut cfg, "resolution", a.resolution.to_string())?;
            apply_common(&mut cfg, &a.common)?;
        }
        Command::SmaxSweep(a) => {
            cfg.kind = RunKind::SmaxSweep;
            apply_data(&mut cfg, &a.data)?;
            apply_window(&mut cfg, &a.window)?;
            if let Some(w) = &a.windows {
                set(&mut cfg, "windows", w.clone())?;
            }
            apply_common(&mut cfg, &a.common)?;
        }
        Command::Histogram(a) => {
            cfg.kind = RunKind::Histogram;
            apply_data(&mut cfg, &a.data)?;
            set(&mut cfg, "filter_x", a.x.to_string())?;
            set(&mut cfg, "filter_y", a.y.to_string())?;
            if let Some(m) = a.m1 {
                set(&mut cfg, "filter_m1", m.to_string())?;
            }
            if let Some(m) = a.m2 {
                set(&mut cfg, "filter_m2", m.to_string())?;
            }
            set(&mut cfg, "bin_width", a.bin_width.to_string())?;
            set(&mut cfg, "match_window", a.match_window.clone())?;
            set(&mut cfg, "delta", a.delta.to_string())?;
            set(&mut cfg, "pairing", a.pairing.clone())?;
            apply_common(&mut cfg, &a.common)?;
        }
        Command::Oracle(a) => {
            cfg.kind = RunKind::Oracle;
            set(&mut cfg, "grid_step_deg", a.grid_step.to_string())?;
            apply_common(&mut cfg, &a.common)?;
        }
        Command::CalibrateD(a) => {
            cfg.kind = RunKind::CalibrateD;
            set(&mut cfg, "events", a.events.to_string())?;
            set(&mut cfg, "settings_per_station", a.settings.to_string())?;
            set(&mut cfg, "d_values", a.d_values.clone())?;
            apply_window(&mut cfg, &a.window)?;
            apply_common(&mut cfg, &a.common)?;
        }
        Command::RunConfig { path } => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::Io(std::io::Error::new(e.kind(), format!("{path}: {e}")))
            })?;
            cfg = RunConfig::from_kv_text(&text)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn apply_common(cfg: &mut RunConfig, a: &CommonArgs) -> Result<(), Error> {
    cfg.set("seed", &a.seed.to_string())?;
    cfg.set("alpha", &a.alpha.to_string())?;
    if let Some(out) = &a.out {
        cfg.set("out", out)?;
    }
    Ok(())
}

fn apply_data(cfg: &mut RunConfig, a: &DataArgs) -> Result<(), Error> {
    cfg.set("station1_path", &a.station1)?;
    cfg.set("station2_path", &a.station2)?;
    Ok(())
}

fn apply_window(cfg: &mut RunConfig, a: &WindowArgs) -> Result<(), Error> {
    cfg.set("tau", &a.tau.to_string())?;
    cfg.set("window", &a.window.to_string())?;
    cfg.set("delta", &a.delta.to_string())?;
    cfg.set("rule", &a.rule)?;
    cfg.set("pairing", &a.pairing)?;
    Ok(())
}

/// Exit codes: 2 configuration, 3 data/files, 4 runtime.
fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) => 2,
        Error::Parse { .. } | Error::Io(_) => 3,
        Error::InvalidMessage { .. }
        | Error::DegenerateEmission { .. }
        | Error::NoValidQuadruple => 4,
    }
}

fn main() {
    let cli = Cli::parse();
    let cfg = match build_config(&cli.command) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    };
    if let Err(e) = commands::run(&cfg) {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}
