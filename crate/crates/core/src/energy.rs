//! Battery model: depth of discharge, cycle-life accounting, and the charge
//! recursion over sunlight/eclipse periods.
//!
//! Conventions in this module: energy in watt-minutes, power in watts, time
//! in minutes. Timelines arrive in seconds and are converted at the
//! boundary.
//!
//! The cycle-life model charges every deepening of the depth of discharge
//! `d = (capacity - charge)/capacity`. A discharge excursion from `d1` to
//! `d2 > d1` consumes
//!
//! ```text
//! 10^(a*(d2-1)) * d2  -  10^(a*(d1-1)) * d1
//! ```
//!
//! equivalent full cycles, where `a` is a chemistry-specific aging
//! constant; recharging consumes nothing. Discharging the battery in two
//! shallow excursions with a recharge in between is strictly cheaper than
//! one deep excursion of the same total energy, which is the entire reason
//! scheduling training time across eclipse periods pays off.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::orbital::SunEclipseTimeline;
use crate::scalar::{real, Real};

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("{field} must be finite and {constraint}, got {value}")]
    InvalidParameter { field: &'static str, constraint: &'static str, value: f64 },
    #[error("charge {charge_wmin} W*min outside [0, {capacity_wmin}] W*min")]
    ChargeOutOfRange { charge_wmin: f64, capacity_wmin: f64 },
    #[error("profile has {profile} periods but timeline has {timeline}")]
    PeriodCountMismatch { profile: usize, timeline: usize },
    #[error("schedule has {schedule} periods but timeline has {timeline}")]
    ScheduleCountMismatch { schedule: usize, timeline: usize },
    #[error(
        "period {period}: training time {tau_min} min outside its window of {window_min} min"
    )]
    ScheduleOutOfWindow { period: usize, tau_min: f64, window_min: f64 },
    #[error(
        "period {period}: sunlight energy balance is short by {deficit_wmin} W*min \
         (harvest must cover demand plus training)"
    )]
    SunlightDeficit { period: usize, deficit_wmin: f64 },
    #[error("period {period}: battery depleted, charge would reach {charge_wmin} W*min")]
    BatteryDepleted { period: usize, charge_wmin: f64 },
}

/// Battery parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BatterySpec<T> {
    /// Usable capacity, W*min. Strictly positive.
    pub capacity_wmin: T,
    /// Charge at the start of the horizon, W*min, within `[0, capacity]`.
    pub initial_charge_wmin: T,
    /// Aging constant `a` of the cycle-life model. Strictly positive.
    pub aging: T,
}

impl<T: Real> BatterySpec<T> {
    pub fn new(capacity_wmin: T, initial_charge_wmin: T, aging: T) -> Result<Self, EnergyError> {
        if !(capacity_wmin.is_finite() && capacity_wmin > T::zero()) {
            return Err(EnergyError::InvalidParameter {
                field: "capacity_wmin",
                constraint: "> 0",
                value: capacity_wmin.to_f64().unwrap_or(f64::NAN),
            });
        }
        if !(initial_charge_wmin.is_finite()
            && initial_charge_wmin >= T::zero()
            && initial_charge_wmin <= capacity_wmin)
        {
            return Err(EnergyError::ChargeOutOfRange {
                charge_wmin: initial_charge_wmin.to_f64().unwrap_or(f64::NAN),
                capacity_wmin: capacity_wmin.to_f64().unwrap_or(f64::NAN),
            });
        }
        if !(aging.is_finite() && aging > T::zero()) {
            return Err(EnergyError::InvalidParameter {
                field: "aging",
                constraint: "> 0",
                value: aging.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { capacity_wmin, initial_charge_wmin, aging })
    }
}

/// The training task: constant power draw and required total time.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrainingTask<T> {
    /// Power drawn while training, W. Strictly positive.
    pub power_w: T,
    /// Required total training time, minutes. Non-negative.
    pub duration_min: T,
}

impl<T: Real> TrainingTask<T> {
    pub fn new(power_w: T, duration_min: T) -> Result<Self, EnergyError> {
        if !(power_w.is_finite() && power_w > T::zero()) {
            return Err(EnergyError::InvalidParameter {
                field: "power_w",
                constraint: "> 0",
                value: power_w.to_f64().unwrap_or(f64::NAN),
            });
        }
        if !(duration_min.is_finite() && duration_min >= T::zero()) {
            return Err(EnergyError::InvalidParameter {
                field: "duration_min",
                constraint: ">= 0",
                value: duration_min.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { power_w, duration_min })
    }
}

/// Non-training energy flows of one period, W*min.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct PeriodEnergy<T> {
    /// Non-training demand during the sunlight part.
    pub demand_sunlight_wmin: T,
    /// Non-training demand during the eclipse part.
    pub demand_eclipse_wmin: T,
    /// Harvested energy during the sunlight part.
    pub harvest_sunlight_wmin: T,
}

/// Per-period energy flows matching a timeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyProfile<T> {
    pub periods: Vec<PeriodEnergy<T>>,
}

impl<T: Real> EnergyProfile<T> {
    /// Profile from constant power rates; truncated edge periods get
    /// proportionally smaller energies because the rates multiply the
    /// actual part lengths.
    pub fn from_rates(
        timeline: &SunEclipseTimeline<T>,
        demand_sunlight_w: T,
        demand_eclipse_w: T,
        harvest_w: T,
    ) -> Self {
        let sixty = real::<T>(60.0);
        let periods = timeline
            .periods
            .iter()
            .map(|p| {
                let sun_min = p.sunlight_len_s() / sixty;
                let ecl_min = p.eclipse_len_s() / sixty;
                PeriodEnergy {
                    demand_sunlight_wmin: demand_sunlight_w * sun_min,
                    demand_eclipse_wmin: demand_eclipse_w * ecl_min,
                    harvest_sunlight_wmin: harvest_w * sun_min,
                }
            })
            .collect();
        Self { periods }
    }

    /// Idealized profile with zero non-training demand and harvest generous
    /// enough to refill the battery in every sunlight part regardless of
    /// how much training runs there.
    pub fn full_recharge(timeline: &SunEclipseTimeline<T>, capacity_wmin: T, power_w: T) -> Self {
        let sixty = real::<T>(60.0);
        let periods = timeline
            .periods
            .iter()
            .map(|p| PeriodEnergy {
                demand_sunlight_wmin: T::zero(),
                demand_eclipse_wmin: T::zero(),
                harvest_sunlight_wmin: capacity_wmin + power_w * p.sunlight_len_s() / sixty,
            })
            .collect();
        Self { periods }
    }

    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }
}

/// Training time allocated to the sunlight and eclipse parts of each
/// period, minutes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule<T> {
    pub tau_sunlight_min: Vec<T>,
    pub tau_eclipse_min: Vec<T>,
}

impl<T: Real> Schedule<T> {
    pub fn zeros(j: usize) -> Self {
        Self { tau_sunlight_min: vec![T::zero(); j], tau_eclipse_min: vec![T::zero(); j] }
    }

    pub fn len(&self) -> usize {
        self.tau_sunlight_min.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau_sunlight_min.is_empty()
    }

    /// Total scheduled training time, minutes.
    pub fn total_min(&self) -> T {
        self.tau_sunlight_min.iter().copied().sum::<T>()
            + self.tau_eclipse_min.iter().copied().sum::<T>()
    }
}

/// Depth of discharge of a charge level: `(capacity - charge)/capacity`.
pub fn dod<T: Real>(charge_wmin: T, battery: &BatterySpec<T>) -> Result<T, EnergyError> {
    if !(charge_wmin.is_finite()
        && charge_wmin >= T::zero()
        && charge_wmin <= battery.capacity_wmin)
    {
        return Err(EnergyError::ChargeOutOfRange {
            charge_wmin: charge_wmin.to_f64().unwrap_or(f64::NAN),
            capacity_wmin: battery.capacity_wmin.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok((battery.capacity_wmin - charge_wmin) / battery.capacity_wmin)
}

/// The weight `10^(a*(d-1)) * d` a single excursion to depth `d` carries.
#[inline]
pub fn cycle_weight<T: Real>(d: T, aging: T) -> T {
    real::<T>(10.0).powf(aging * (d - T::one())) * d
}

/// Derivative of [`cycle_weight`] in `d`: `10^(a*(d-1)) * (1 + a*d*ln10)`.
#[inline]
pub fn cycle_weight_slope<T: Real>(d: T, aging: T) -> T {
    real::<T>(10.0).powf(aging * (d - T::one())) * (T::one() + aging * d * real::<T>(10.0).ln())
}

/// Second derivative of [`cycle_weight`] in `d`:
/// `a*ln10 * (a*d*ln10 + 2) * 10^(a*(d-1))`.
#[inline]
pub fn cycle_weight_curvature<T: Real>(d: T, aging: T) -> T {
    let ln10 = real::<T>(10.0).ln();
    aging * ln10 * (aging * d * ln10 + real::<T>(2.0)) * real::<T>(10.0).powf(aging * (d - T::one()))
}

/// Cycle-life cost of one discharge excursion from depth `d1` to `d2`.
/// Zero when the depth does not deepen.
pub fn cycle_life_cost<T: Real>(d1: T, d2: T, aging: T) -> T {
    debug_assert!(d1 >= T::zero() && d1 <= T::one(), "d1 out of [0,1]");
    debug_assert!(d2 >= T::zero() && d2 <= T::one(), "d2 out of [0,1]");
    debug_assert!(aging > T::zero(), "aging must be positive");
    if d2 > d1 {
        cycle_weight(d2, aging) - cycle_weight(d1, aging)
    } else {
        T::zero()
    }
}

/// Per-period battery state along a horizon.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PeriodState<T> {
    /// Charge at the start of the sunlight part, W*min.
    pub charge_sunlight_start_wmin: T,
    /// Charge at the start of the eclipse part (end of sunlight), W*min.
    pub charge_eclipse_start_wmin: T,
    /// Charge at the start of the next sunlight part (end of eclipse), W*min.
    pub charge_next_sunlight_wmin: T,
    /// Depth of discharge entering the eclipse.
    pub dod_eclipse_start: T,
    /// Depth of discharge leaving the eclipse.
    pub dod_eclipse_end: T,
}

/// Battery evolution over a horizon, one record per period.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatteryTrajectory<T> {
    pub periods: Vec<PeriodState<T>>,
}

impl<T: Real> BatteryTrajectory<T> {
    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }

    /// Largest depth of discharge reached anywhere on the trajectory.
    pub fn max_dod(&self) -> T {
        self.periods
            .iter()
            .map(|p| p.dod_eclipse_end.max(p.dod_eclipse_start))
            .fold(T::zero(), T::max)
    }
}

/// Total cycle-life cost of a trajectory: the per-period excursion costs
/// summed over the horizon.
pub fn horizon_cycle_cost<T: Real>(traj: &BatteryTrajectory<T>, aging: T) -> T {
    traj.periods
        .iter()
        .map(|p| cycle_life_cost(p.dod_eclipse_start, p.dod_eclipse_end, aging))
        .sum()
}

/// Battery recursion over the horizon.
///
/// Per period `j`: the sunlight part nets `harvest - demand - P*tau_s` into
/// the battery, clamped at capacity (excess harvest is shed); the balance
/// must be non-negative — a sunlit satellite must not run down its battery.
/// The eclipse part then draws `demand + P*tau_e` out of the battery. A
/// charge that would fall below zero is a hard error, not a clamp.
///
/// `slack_wmin` absorbs solver-level rounding: deficits and depletions
/// within the slack are treated as exact zeros. The default slack is
/// `1e-9 * capacity`.
pub fn simulate_battery<T: Real>(
    timeline: &SunEclipseTimeline<T>,
    profile: &EnergyProfile<T>,
    task: &TrainingTask<T>,
    schedule: &Schedule<T>,
    battery: &BatterySpec<T>,
) -> Result<BatteryTrajectory<T>, EnergyError> {
    let slack = battery.capacity_wmin * real::<T>(1e-9);
    simulate_battery_with_slack(timeline, profile, task, schedule, battery, slack)
}

/// [`simulate_battery`] with an explicit rounding slack.
pub fn simulate_battery_with_slack<T: Real>(
    timeline: &SunEclipseTimeline<T>,
    profile: &EnergyProfile<T>,
    task: &TrainingTask<T>,
    schedule: &Schedule<T>,
    battery: &BatterySpec<T>,
    slack_wmin: T,
) -> Result<BatteryTrajectory<T>, EnergyError> {
    let j = timeline.len();
    if profile.len() != j {
        return Err(EnergyError::PeriodCountMismatch { profile: profile.len(), timeline: j });
    }
    if schedule.len() != j || schedule.tau_eclipse_min.len() != j {
        return Err(EnergyError::ScheduleCountMismatch {
            schedule: schedule.len().max(schedule.tau_eclipse_min.len()),
            timeline: j,
        });
    }
    let sixty = real::<T>(60.0);
    // Window-bound tolerance in minutes, scaled off the energy slack.
    let tau_tol = slack_wmin / task.power_w;
    let check_tau = |period: usize, tau: T, window_min: T| -> Result<T, EnergyError> {
        if tau < -tau_tol || tau > window_min + tau_tol {
            return Err(EnergyError::ScheduleOutOfWindow {
                period,
                tau_min: tau.to_f64().unwrap_or(f64::NAN),
                window_min: window_min.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(tau.max(T::zero()).min(window_min))
    };

    let mut periods = Vec::with_capacity(j);
    let mut charge = battery.initial_charge_wmin;
    for (idx, (win, flows)) in timeline.periods.iter().zip(&profile.periods).enumerate() {
        let sun_min = win.sunlight_len_s() / sixty;
        let ecl_min = win.eclipse_len_s() / sixty;
        let tau_s = check_tau(idx, schedule.tau_sunlight_min[idx], sun_min)?;
        let tau_e = check_tau(idx, schedule.tau_eclipse_min[idx], ecl_min)?;

        let balance =
            flows.harvest_sunlight_wmin - flows.demand_sunlight_wmin - task.power_w * tau_s;
        if balance < -slack_wmin {
            return Err(EnergyError::SunlightDeficit {
                period: idx,
                deficit_wmin: (-balance).to_f64().unwrap_or(f64::NAN),
            });
        }
        let charge_eclipse_start =
            (charge + balance.max(T::zero())).min(battery.capacity_wmin);

        let draw = flows.demand_eclipse_wmin + task.power_w * tau_e;
        let mut next = charge_eclipse_start - draw;
        if next < -slack_wmin {
            return Err(EnergyError::BatteryDepleted {
                period: idx,
                charge_wmin: next.to_f64().unwrap_or(f64::NAN),
            });
        }
        next = next.max(T::zero());

        periods.push(PeriodState {
            charge_sunlight_start_wmin: charge,
            charge_eclipse_start_wmin: charge_eclipse_start,
            charge_next_sunlight_wmin: next,
            dod_eclipse_start: dod(charge_eclipse_start, battery)?,
            dod_eclipse_end: dod(next, battery)?,
        });
        charge = next;
    }
    Ok(BatteryTrajectory { periods })
}
