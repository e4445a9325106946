//! `satsched` — run scheduling campaigns, validate scenario files, and
//! spot-check the solver against exhaustive grid search.
//!
//! Exit codes: 0 success, 2 invalid input or configuration, 3 runtime
//! failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use satsched::flsim::ScheduleMode;
use satsched::runner::{export_campaign, load_scenario, run_campaign_modes, RunnerError};
use satsched::scheduler::{build_problem, ccp_solve, grid_oracle};
use satsched::{
    BatterySpec, CcpSettings, EnergyProfile, PeriodEnergy, ProblemInstance, SunEclipseTimeline,
    SunPeriod, TrainingTask,
};

#[derive(Parser)]
#[command(
    name = "satsched",
    version,
    about = "Battery-aware on-board training schedules for satellite fleets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a campaign scenario and export its result files.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Which scheduling arm(s) to simulate.
        #[arg(long, value_enum, default_value_t = ModeArg::Both)]
        mode: ModeArg,
        /// Parent directory for the export; files land in `<out>/<name>/`.
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        /// Overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the scenario's capacity sweep, W*min.
        #[arg(long, value_delimiter = ',')]
        sweep: Option<Vec<f64>>,
    },
    /// Parse and validate a scenario file without running it.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Solve a small instance file and compare against grid search.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        /// Grid resolution in minutes; the training duration must be a
        /// whole number of ticks.
        #[arg(long, default_value_t = 1.0)]
        tick_min: f64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Aware,
    Agnostic,
    Both,
}

impl ModeArg {
    fn modes(self) -> &'static [ScheduleMode] {
        match self {
            ModeArg::Aware => &[ScheduleMode::Aware],
            ModeArg::Agnostic => &[ScheduleMode::Agnostic],
            ModeArg::Both => &[ScheduleMode::Aware, ScheduleMode::Agnostic],
        }
    }
}

enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<RunnerError> for CliError {
    fn from(e: RunnerError) -> Self {
        match e.exit_code() {
            2 => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { scenario, mode, out, seed, sweep } => {
            run(&scenario, mode, &out, seed, sweep)
        }
        Command::Validate { scenario } => validate(&scenario),
        Command::Oracle { instance, tick_min } => oracle(&instance, tick_min),
    }
}

fn run(
    path: &Path,
    mode: ModeArg,
    out: &Path,
    seed: Option<u64>,
    sweep: Option<Vec<f64>>,
) -> Result<(), CliError> {
    let mut scenario = load_scenario(path)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    if let Some(capacities) = sweep {
        if capacities.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(CliError::Config(
                "--sweep capacities must be finite and positive".into(),
            ));
        }
        scenario.sweep_capacities_wmin = capacities;
    }
    let result = run_campaign_modes(&scenario, mode.modes())?;
    let dir = out.join(&result.scenario_name);
    export_campaign(&result, &dir)?;
    println!(
        "scenario {}: {} satellites, {} rounds, task {} min at {} W",
        result.scenario_name,
        result.contexts.len(),
        result.slots.len().min(scenario.fl.rounds),
        scenario.task.duration_min,
        scenario.task.power_w,
    );
    for run in &result.runs {
        let solves: usize = run.rounds.iter().map(|r| r.participants.len()).sum();
        let cycles: f64 = run
            .rounds
            .iter()
            .flat_map(|r| &r.participants)
            .map(|p| p.cycle_cost)
            .sum();
        let final_loss = run.rounds.last().map_or(f64::NAN, |r| r.global_loss);
        println!(
            "{:<8} {} solves, consumed cycles {:.6}, final loss {:.6}",
            run.mode.label(),
            solves,
            cycles,
            final_loss
        );
    }
    println!("exported to {}", dir.display());
    Ok(())
}

fn validate(path: &Path) -> Result<(), CliError> {
    let scenario = load_scenario(path)?;
    println!(
        "ok: {} — {} satellites, {} stations, {} rounds of {:.1} s, task {} min at {} W",
        scenario.name,
        scenario.constellation.satellites.len(),
        scenario.stations.len(),
        scenario.fl.rounds,
        scenario.fl.slot_s,
        scenario.task.duration_min,
        scenario.task.power_w,
    );
    Ok(())
}

// On-disk shape of a standalone solver instance for `satsched oracle`.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    task: InstanceTask,
    battery: InstanceBattery,
    #[serde(rename = "period")]
    periods: Vec<InstancePeriod>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceTask {
    power_w: f64,
    duration_min: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceBattery {
    capacity_wmin: f64,
    /// Defaults to a full battery.
    initial_charge_wmin: Option<f64>,
    aging: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstancePeriod {
    sunlight_min: f64,
    eclipse_min: f64,
    #[serde(default)]
    demand_sunlight_wmin: f64,
    #[serde(default)]
    demand_eclipse_wmin: f64,
    harvest_sunlight_wmin: f64,
}

fn load_instance(path: &Path) -> Result<ProblemInstance, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let file: InstanceFile =
        toml::from_str(&text).map_err(|e| CliError::Config(format!("parse: {e}")))?;
    if file.periods.is_empty() {
        return Err(CliError::Config("instance needs at least one [[period]]".into()));
    }
    let mut t = 0.0;
    let mut periods = Vec::new();
    let mut energies = Vec::new();
    for p in &file.periods {
        if !(p.sunlight_min >= 0.0 && p.eclipse_min >= 0.0) {
            return Err(CliError::Config("period lengths must be non-negative".into()));
        }
        let sunlight_start_s = t;
        let eclipse_start_s = t + p.sunlight_min * 60.0;
        t = eclipse_start_s + p.eclipse_min * 60.0;
        periods.push(SunPeriod { sunlight_start_s, eclipse_start_s, next_sunlight_start_s: t });
        energies.push(PeriodEnergy {
            demand_sunlight_wmin: p.demand_sunlight_wmin,
            demand_eclipse_wmin: p.demand_eclipse_wmin,
            harvest_sunlight_wmin: p.harvest_sunlight_wmin,
        });
    }
    let timeline = SunEclipseTimeline { start_s: 0.0, end_s: t, periods };
    let profile = EnergyProfile { periods: energies };
    let task = TrainingTask::new(file.task.power_w, file.task.duration_min)
        .map_err(|e| CliError::Config(format!("task: {e}")))?;
    let initial = file.battery.initial_charge_wmin.unwrap_or(file.battery.capacity_wmin);
    let battery = BatterySpec::new(file.battery.capacity_wmin, initial, file.battery.aging)
        .map_err(|e| CliError::Config(format!("battery: {e}")))?;
    build_problem(timeline, profile, task, battery)
        .map_err(|e| CliError::Config(format!("instance: {e}")))
}

fn oracle(path: &Path, tick_min: f64) -> Result<(), CliError> {
    let inst = load_instance(path)?;
    let reference = grid_oracle(&inst, tick_min)
        .map_err(|e| CliError::Runtime(format!("grid search: {e}")))?;
    let solution = ccp_solve(&inst, &CcpSettings::default())
        .map_err(|e| CliError::Runtime(format!("solver: {e}")))?;
    println!(
        "periods {}, training {} min, tick {} min",
        inst.timeline.len(),
        inst.task.duration_min,
        tick_min
    );
    println!(
        "oracle   cost {:.12} over {} schedules",
        reference.cost, reference.evaluated
    );
    println!(
        "solver   cost {:.12} in {} outer iterations",
        solution.cost(),
        solution.diagnostics.iterations
    );
    println!("difference {:+.3e} (solver - oracle)", solution.cost() - reference.cost);
    Ok(())
}
