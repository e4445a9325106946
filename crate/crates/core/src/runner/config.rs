//! Scenario files: the on-disk TOML schema and its validation.
//!
//! The file is strict — unknown keys are rejected — and angles are given
//! in degrees, converted to radians on load. `slot` length is not a knob:
//! the horizon is always divided evenly among the configured rounds.

use std::path::Path;

use serde::Deserialize;

use crate::energy::{BatterySpec, TrainingTask};
use crate::flsim::{EnergyPolicy, FlConfig, LogisticLoss, Loss, SquaredLoss};
use crate::orbital::{Constellation, EarthRotation, GroundStation, OrbitSpec, SunModel, Vec3};
use crate::scheduler::CcpSettings;

use super::RunnerError;

pub const FORMAT_VERSION: u32 = 1;

/// Which per-sample loss the campaign trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Logistic,
    Squared,
}

impl LossKind {
    pub fn instance(self) -> &'static dyn Loss {
        match self {
            LossKind::Logistic => &LogisticLoss,
            LossKind::Squared => &SquaredLoss,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            LossKind::Logistic => "logistic",
            LossKind::Squared => "squared",
        }
    }
}

/// A fully validated campaign description, in solver units.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub start_s: f64,
    pub horizon_s: f64,
    pub fl: FlConfig,
    pub feature_dim: usize,
    /// Inclusive bounds on the per-satellite dataset size.
    pub data_size_range: (usize, usize),
    pub loss: LossKind,
    pub task: TrainingTask<f64>,
    pub battery: BatterySpec<f64>,
    pub solver: CcpSettings<f64>,
    pub policy: EnergyPolicy,
    pub constellation: Constellation<f64>,
    pub stations: Vec<GroundStation<f64>>,
    pub sun: SunModel<f64>,
    pub earth: EarthRotation<f64>,
    /// Battery capacities for the optional capacity sweep; empty skips it.
    pub sweep_capacities_wmin: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    format_version: u32,
    scenario: RawScenario,
    fl: RawFl,
    task: RawTask,
    battery: RawBattery,
    #[serde(default)]
    solver: RawSolver,
    energy_policy: RawPolicy,
    constellation: RawConstellation,
    #[serde(default)]
    ground_station: Vec<RawStation>,
    #[serde(default)]
    sun: RawSun,
    #[serde(default)]
    earth: RawEarth,
    sweep: Option<RawSweep>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    seed: u64,
    #[serde(default)]
    start_s: f64,
    horizon_s: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFl {
    rounds: usize,
    local_epochs: usize,
    batch_size: usize,
    learning_rate: f64,
    #[serde(default)]
    aggregate_by_participants: bool,
    feature_dim: usize,
    data_size_min: usize,
    data_size_max: usize,
    #[serde(default = "default_loss")]
    loss: LossKind,
}

fn default_loss() -> LossKind {
    LossKind::Logistic
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTask {
    power_w: f64,
    duration_min: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBattery {
    capacity_wmin: f64,
    aging: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawSolver {
    epsilon: f64,
    lambda: f64,
    max_iterations: usize,
    inner_tolerance: f64,
    inner_max_iterations: usize,
}

impl Default for RawSolver {
    fn default() -> Self {
        let d = CcpSettings::<f64>::default();
        Self {
            epsilon: d.epsilon,
            lambda: d.lambda,
            max_iterations: d.max_iterations,
            inner_tolerance: d.inner_tolerance,
            inner_max_iterations: d.inner_max_iterations,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawPolicy {
    FullRecharge,
    Rates { demand_sunlight_w: f64, demand_eclipse_w: f64, harvest_w: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawConstellation {
    Walker {
        planes: usize,
        per_plane: usize,
        altitude_m: f64,
        inclination_deg: f64,
        #[serde(default = "full_circle_deg")]
        raan_spread_deg: f64,
        #[serde(default = "one_u32")]
        phasing_factor: u32,
    },
    Explicit {
        satellite: Vec<RawSatellite>,
    },
}

fn full_circle_deg() -> f64 {
    360.0
}

fn one_u32() -> u32 {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSatellite {
    altitude_m: f64,
    inclination_deg: f64,
    raan_deg: f64,
    phase_deg: f64,
    #[serde(default)]
    epoch_s: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStation {
    name: String,
    latitude_deg: f64,
    longitude_deg: f64,
    min_elevation_deg: f64,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawSun {
    Fixed { direction: [f64; 3] },
    Circular {
        #[serde(default)]
        initial_longitude_deg: f64,
    },
}

impl Default for RawSun {
    fn default() -> Self {
        RawSun::Circular { initial_longitude_deg: 0.0 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawEarth {
    initial_angle_deg: f64,
    rate_rad_s: f64,
}

impl Default for RawEarth {
    fn default() -> Self {
        let d = EarthRotation::<f64>::default();
        Self { initial_angle_deg: 0.0, rate_rad_s: d.rate_rad_s }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    capacities_wmin: Vec<f64>,
}

/// Parses and validates a scenario file. Every violated invariant is
/// named in the error.
pub fn load_scenario(path: &Path) -> Result<Scenario, RunnerError> {
    let text = std::fs::read_to_string(path)?;
    scenario_from_str(&text)
}

pub fn scenario_from_str(text: &str) -> Result<Scenario, RunnerError> {
    let raw: RawFile =
        toml::from_str(text).map_err(|e| RunnerError::Config(format!("parse: {e}")))?;
    raw.try_into()
}

impl TryFrom<RawFile> for Scenario {
    type Error = RunnerError;

    fn try_from(raw: RawFile) -> Result<Self, RunnerError> {
        let mut bad: Vec<String> = Vec::new();
        if raw.format_version != FORMAT_VERSION {
            bad.push(format!(
                "format_version must be {FORMAT_VERSION}, got {}",
                raw.format_version
            ));
        }
        if raw.scenario.name.is_empty() {
            bad.push("scenario.name must not be empty".into());
        }
        if !(raw.scenario.horizon_s.is_finite() && raw.scenario.horizon_s > 0.0) {
            bad.push("scenario.horizon_s must be finite and positive".into());
        }
        if !raw.scenario.start_s.is_finite() {
            bad.push("scenario.start_s must be finite".into());
        }
        if raw.fl.rounds == 0 {
            bad.push("fl.rounds must be at least 1".into());
        }
        if raw.fl.feature_dim == 0 {
            bad.push("fl.feature_dim must be at least 1".into());
        }
        if raw.fl.data_size_min == 0 || raw.fl.data_size_min > raw.fl.data_size_max {
            bad.push("fl.data_size_min must be in [1, fl.data_size_max]".into());
        }
        let slot_s = if raw.fl.rounds > 0 {
            raw.scenario.horizon_s / raw.fl.rounds as f64
        } else {
            f64::NAN
        };
        let fl = FlConfig {
            rounds: raw.fl.rounds,
            slot_s,
            local_epochs: raw.fl.local_epochs,
            batch_size: raw.fl.batch_size,
            learning_rate: raw.fl.learning_rate,
            aggregate_by_participants: raw.fl.aggregate_by_participants,
        };
        if let Err(e) = fl.validate() {
            bad.push(e.to_string());
        }
        let task = match TrainingTask::new(raw.task.power_w, raw.task.duration_min) {
            Ok(t) => Some(t),
            Err(e) => {
                bad.push(format!("task: {e}"));
                None
            }
        };
        let battery = match BatterySpec::new(
            raw.battery.capacity_wmin,
            raw.battery.capacity_wmin,
            raw.battery.aging,
        ) {
            Ok(b) => Some(b),
            Err(e) => {
                bad.push(format!("battery: {e}"));
                None
            }
        };
        let solver = CcpSettings {
            epsilon: raw.solver.epsilon,
            lambda: raw.solver.lambda,
            max_iterations: raw.solver.max_iterations,
            inner_tolerance: raw.solver.inner_tolerance,
            inner_max_iterations: raw.solver.inner_max_iterations,
        };
        if !(solver.epsilon.is_finite() && solver.epsilon > 0.0) {
            bad.push("solver.epsilon must be finite and positive".into());
        }
        if !(solver.lambda.is_finite() && solver.lambda >= 0.0) {
            bad.push("solver.lambda must be finite and non-negative".into());
        }
        if !(solver.inner_tolerance.is_finite() && solver.inner_tolerance > 0.0) {
            bad.push("solver.inner_tolerance must be finite and positive".into());
        }
        if solver.max_iterations == 0 || solver.inner_max_iterations == 0 {
            bad.push("solver iteration limits must be at least 1".into());
        }
        let policy = match raw.energy_policy {
            RawPolicy::FullRecharge => EnergyPolicy::FullRecharge,
            RawPolicy::Rates { demand_sunlight_w, demand_eclipse_w, harvest_w } => {
                for (name, v) in [
                    ("demand_sunlight_w", demand_sunlight_w),
                    ("demand_eclipse_w", demand_eclipse_w),
                    ("harvest_w", harvest_w),
                ] {
                    if !(v.is_finite() && v >= 0.0) {
                        bad.push(format!(
                            "energy_policy.{name} must be finite and non-negative"
                        ));
                    }
                }
                EnergyPolicy::Rates { demand_sunlight_w, demand_eclipse_w, harvest_w }
            }
        };
        let constellation = match raw.constellation {
            RawConstellation::Walker {
                planes,
                per_plane,
                altitude_m,
                inclination_deg,
                raan_spread_deg,
                phasing_factor,
            } => Constellation::walker(
                planes,
                per_plane,
                altitude_m,
                inclination_deg.to_radians(),
                raan_spread_deg.to_radians(),
                phasing_factor,
                0.0,
            )
            .map_err(|e| format!("constellation: {e}")),
            RawConstellation::Explicit { satellite } => {
                if satellite.is_empty() {
                    Err("constellation must list at least one satellite".to_string())
                } else {
                    satellite
                        .iter()
                        .map(|s| {
                            OrbitSpec::new(
                                s.altitude_m,
                                s.inclination_deg.to_radians(),
                                s.raan_deg.to_radians(),
                                s.phase_deg.to_radians(),
                                s.epoch_s,
                            )
                            .map_err(|e| format!("constellation: {e}"))
                        })
                        .collect::<Result<Vec<_>, _>>()
                        .map(Constellation::from_orbits)
                }
            }
        };
        let constellation = match constellation {
            Ok(c) => Some(c),
            Err(msg) => {
                bad.push(msg);
                None
            }
        };
        if raw.ground_station.is_empty() {
            bad.push("at least one [[ground_station]] is required".into());
        }
        let mut stations = Vec::new();
        for s in &raw.ground_station {
            match GroundStation::new(
                s.name.clone(),
                s.latitude_deg.to_radians(),
                s.longitude_deg.to_radians(),
                s.min_elevation_deg.to_radians(),
            ) {
                Ok(gs) => stations.push(gs),
                Err(e) => bad.push(format!("ground_station {:?}: {e}", s.name)),
            }
        }
        let sun = match raw.sun {
            RawSun::Fixed { direction } => {
                let v = Vec3::new(direction[0], direction[1], direction[2]);
                if v.norm() <= 0.0 || !v.norm().is_finite() {
                    bad.push("sun.direction must be a nonzero finite vector".into());
                }
                SunModel::Fixed(v)
            }
            RawSun::Circular { initial_longitude_deg } => {
                SunModel::circular(initial_longitude_deg.to_radians())
            }
        };
        if !(raw.earth.rate_rad_s.is_finite() && raw.earth.initial_angle_deg.is_finite()) {
            bad.push("earth rotation parameters must be finite".into());
        }
        let earth = EarthRotation {
            initial_angle_rad: raw.earth.initial_angle_deg.to_radians(),
            rate_rad_s: raw.earth.rate_rad_s,
        };
        let sweep_capacities_wmin = raw.sweep.map(|s| s.capacities_wmin).unwrap_or_default();
        for c in &sweep_capacities_wmin {
            if !(c.is_finite() && *c > 0.0) {
                bad.push(format!("sweep capacity {c} must be finite and positive"));
            }
        }
        if !bad.is_empty() {
            return Err(RunnerError::Config(bad.join("; ")));
        }
        Ok(Scenario {
            name: raw.scenario.name,
            seed: raw.scenario.seed,
            start_s: raw.scenario.start_s,
            horizon_s: raw.scenario.horizon_s,
            fl,
            feature_dim: raw.fl.feature_dim,
            data_size_range: (raw.fl.data_size_min, raw.fl.data_size_max),
            loss: raw.fl.loss,
            task: task.expect("validated"),
            battery: battery.expect("validated"),
            solver,
            policy,
            constellation: constellation.expect("validated"),
            stations,
            sun,
            earth,
            sweep_capacities_wmin,
        })
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) const SMOKE: &str = r#"
format_version = 1

[scenario]
name = "smoke"
seed = 7
horizon_s = 11520.0

[fl]
rounds = 2
local_epochs = 1
batch_size = 16
learning_rate = 0.1
feature_dim = 3
data_size_min = 40
data_size_max = 80

[task]
power_w = 50.0
duration_min = 10.0

[battery]
capacity_wmin = 2000.0
aging = 0.8

[energy_policy]
kind = "full_recharge"

[constellation]
kind = "walker"
planes = 1
per_plane = 2
altitude_m = 550000.0
inclination_deg = 53.0

[[ground_station]]
name = "bremen"
latitude_deg = 53.11
longitude_deg = 8.85
min_elevation_deg = 10.0

[sun]
kind = "fixed"
direction = [1.0, 0.0, 0.0]
"#;

    #[test]
    fn smoke_scenario_parses_with_defaults() {
        let sc = scenario_from_str(SMOKE).unwrap();
        assert_eq!(sc.name, "smoke");
        assert_eq!(sc.fl.rounds, 2);
        assert_eq!(sc.fl.slot_s, 5760.0);
        assert_eq!(sc.constellation.satellites.len(), 2);
        assert_eq!(sc.stations.len(), 1);
        assert_eq!(sc.loss, LossKind::Logistic);
        assert_eq!(sc.solver.max_iterations, 200);
        assert!(sc.sweep_capacities_wmin.is_empty());
        assert_eq!(sc.battery.initial_charge_wmin, sc.battery.capacity_wmin);
        assert!(matches!(sc.sun, SunModel::Fixed(_)));
        assert_eq!(sc.earth.initial_angle_rad, 0.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = SMOKE.replace("power_w = 50.0", "power_w = 50.0\nwattage = 2");
        let err = scenario_from_str(&text).unwrap_err().to_string();
        assert!(err.contains("wattage"), "{err}");
    }

    #[test]
    fn violations_are_named_and_collected() {
        let text = SMOKE
            .replace("horizon_s = 11520.0", "horizon_s = -1.0")
            .replace("duration_min = 10.0", "duration_min = -1.0")
            .replace("aging = 0.8", "aging = -0.5");
        let err = scenario_from_str(&text).unwrap_err().to_string();
        for needle in ["horizon_s", "task:", "battery:"] {
            assert!(err.contains(needle), "missing {needle} in {err}");
        }
    }

    #[test]
    fn explicit_constellation_and_rates_policy() {
        let text = SMOKE
            .replace(
                "[energy_policy]\nkind = \"full_recharge\"",
                "[energy_policy]\nkind = \"rates\"\ndemand_sunlight_w = 10.0\ndemand_eclipse_w = 5.0\nharvest_w = 80.0",
            )
            .replace(
                "[constellation]\nkind = \"walker\"\nplanes = 1\nper_plane = 2\naltitude_m = 550000.0\ninclination_deg = 53.0",
                "[constellation]\nkind = \"explicit\"\n\n[[constellation.satellite]]\naltitude_m = 550000.0\ninclination_deg = 53.0\nraan_deg = 0.0\nphase_deg = 0.0",
            );
        let sc = scenario_from_str(&text).unwrap();
        assert_eq!(sc.constellation.satellites.len(), 1);
        assert!(matches!(sc.policy, EnergyPolicy::Rates { harvest_w, .. } if harvest_w == 80.0));
    }

    #[test]
    fn sweep_capacities_must_be_positive() {
        let text = format!("{SMOKE}\n[sweep]\ncapacities_wmin = [1000.0, -3.0]\n");
        let err = scenario_from_str(&text).unwrap_err().to_string();
        assert!(err.contains("sweep capacity"), "{err}");
        let ok = format!("{SMOKE}\n[sweep]\ncapacities_wmin = [1000.0, 2000.0]\n");
        assert_eq!(scenario_from_str(&ok).unwrap().sweep_capacities_wmin.len(), 2);
    }

    #[test]
    fn format_version_is_checked() {
        let text = SMOKE.replace("format_version = 1", "format_version = 9");
        let err = scenario_from_str(&text).unwrap_err().to_string();
        assert!(err.contains("format_version"), "{err}");
    }
}
