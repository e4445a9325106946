//! Exhaustive grid search over training-time allocations.
//!
//! Enumerates every split of the required training time onto a fixed time
//! tick across all sunlight/eclipse windows, simulating the battery as it
//! goes, and returns the cheapest feasible allocation. Complexity is
//! exponential in the period count, so this is strictly a verification
//! tool for small instances; branch-and-bound pruning (accumulated cost,
//! budget suffix capacity, monotone depletion) keeps tiny cases fast.

use crate::energy::{cycle_life_cost, Schedule};
use crate::scalar::{real, Real};

use super::{ProblemInstance, ScheduleError};

#[derive(Debug, Clone)]
pub struct GridOracleResult<T> {
    pub cost: T,
    pub schedule: Schedule<T>,
    /// Number of complete candidate schedules whose cost was computed.
    pub evaluated: u64,
}

struct Search<T> {
    aging: T,
    cap_wmin: T,
    wmin_per_tick: T,
    demand_s: Vec<T>,
    demand_e: Vec<T>,
    harvest_s: Vec<T>,
    cap_s_ticks: Vec<u32>,
    cap_e_ticks: Vec<u32>,
    suffix_ticks: Vec<u32>,
    slack: T,
    best_cost: T,
    best: Option<Vec<u32>>,
    evaluated: u64,
}

impl<T: Real> Search<T> {
    /// Enumerate period `j` onward given the sunlight-start charge and the
    /// remaining budget in ticks. `taus` holds committed (ts, te) pairs.
    fn run(&mut self, j: usize, charge: T, remaining: u32, acc: T, taus: &mut Vec<u32>) {
        if acc >= self.best_cost {
            return;
        }
        let last = j + 1 == self.cap_s_ticks.len();
        let suffix_after = if last { 0 } else { self.suffix_ticks[j + 1] };
        let ts_max = self.cap_s_ticks[j].min(remaining);
        for ts in 0..=ts_max {
            let ts_wmin = real::<T>(ts as f64) * self.wmin_per_tick;
            let net_sun = self.harvest_s[j] - self.demand_s[j] - ts_wmin;
            if net_sun < -self.slack {
                break; // larger ts only deepens the deficit
            }
            let b_ecl = (charge + net_sun).min(self.cap_wmin).max(T::zero());
            let d1 = (self.cap_wmin - b_ecl) / self.cap_wmin;
            let after_ts = remaining - ts;
            // te must leave no more budget than later periods can absorb,
            // and on the last period it is forced by the budget.
            let te_lo = if last { after_ts } else { after_ts.saturating_sub(suffix_after) };
            let te_hi = if last { after_ts } else { self.cap_e_ticks[j].min(after_ts) };
            if te_lo > self.cap_e_ticks[j] {
                continue;
            }
            for te in te_lo..=te_hi {
                let te_wmin = real::<T>(te as f64) * self.wmin_per_tick;
                let b_next_raw = b_ecl - self.demand_e[j] - te_wmin;
                if b_next_raw < -self.slack {
                    break; // larger te only deepens the depletion
                }
                let b_next = b_next_raw.max(T::zero());
                let d2 = (self.cap_wmin - b_next) / self.cap_wmin;
                let cost = acc + cycle_life_cost(d1, d2, self.aging);
                taus.push(ts);
                taus.push(te);
                if last {
                    self.evaluated += 1;
                    if cost < self.best_cost {
                        self.best_cost = cost;
                        self.best = Some(taus.clone());
                    }
                } else {
                    self.run(j + 1, b_next, after_ts - te, cost, taus);
                }
                taus.pop();
                taus.pop();
            }
        }
    }
}

/// Brute-force the optimal schedule on a uniform time grid.
///
/// `tick_min` is the grid resolution in minutes; the total training time
/// must be an integer number of ticks. Window capacities are rounded down
/// to the grid, so the result is optimal among grid-aligned schedules.
pub fn grid_oracle<T: Real>(
    inst: &ProblemInstance<T>,
    tick_min: T,
) -> Result<GridOracleResult<T>, ScheduleError> {
    if !(tick_min > T::zero()) {
        return Err(ScheduleError::InfeasibleBudget {
            required_min: 0.0,
            available_min: 0.0,
        });
    }
    let tc = inst.task.duration_min;
    let ticks_f = tc / tick_min;
    let tc_ticks = ticks_f.round();
    if (ticks_f - tc_ticks).abs() > real::<T>(1e-6) {
        return Err(ScheduleError::InfeasibleBudget {
            required_min: tc.to_f64().unwrap_or(f64::NAN),
            available_min: f64::NAN,
        });
    }
    let tc_ticks = tc_ticks.to_f64().unwrap_or(0.0) as u32;
    let (cap_s_min, cap_e_min) = inst.caps_min();
    let to_ticks = |m: T| -> u32 {
        ((m / tick_min) + real::<T>(1e-9)).floor().to_f64().unwrap_or(0.0) as u32
    };
    let cap_s_ticks: Vec<u32> = cap_s_min.iter().map(|&c| to_ticks(c)).collect();
    let cap_e_ticks: Vec<u32> = cap_e_min.iter().map(|&c| to_ticks(c)).collect();
    let j = cap_s_ticks.len();
    let mut suffix_ticks = vec![0u32; j];
    let mut acc = 0u32;
    for jj in (0..j).rev() {
        acc += cap_s_ticks[jj] + cap_e_ticks[jj];
        suffix_ticks[jj] = acc;
    }
    if suffix_ticks.first().copied().unwrap_or(0) < tc_ticks {
        return Err(ScheduleError::InfeasibleBudget {
            required_min: tc.to_f64().unwrap_or(f64::NAN),
            available_min: (suffix_ticks.first().copied().unwrap_or(0) as f64)
                * tick_min.to_f64().unwrap_or(f64::NAN),
        });
    }

    let cap = inst.battery.capacity_wmin;
    let mut search = Search {
        aging: inst.battery.aging,
        cap_wmin: cap,
        wmin_per_tick: inst.task.power_w * tick_min,
        demand_s: inst.profile.periods.iter().map(|p| p.demand_sunlight_wmin).collect(),
        demand_e: inst.profile.periods.iter().map(|p| p.demand_eclipse_wmin).collect(),
        harvest_s: inst.profile.periods.iter().map(|p| p.harvest_sunlight_wmin).collect(),
        cap_s_ticks,
        cap_e_ticks,
        suffix_ticks,
        slack: real::<T>(1e-9) * cap,
        best_cost: T::infinity(),
        best: None,
        evaluated: 0,
    };
    let mut taus = Vec::with_capacity(2 * j);
    search.run(0, inst.battery.initial_charge_wmin, tc_ticks, T::zero(), &mut taus);

    let Some(best) = search.best else {
        return Err(ScheduleError::InfeasibleBudget {
            required_min: tc.to_f64().unwrap_or(f64::NAN),
            available_min: f64::NAN,
        });
    };
    let mut schedule = Schedule::zeros(j);
    for jj in 0..j {
        schedule.tau_sunlight_min[jj] = real::<T>(best[2 * jj] as f64) * tick_min;
        schedule.tau_eclipse_min[jj] = real::<T>(best[2 * jj + 1] as f64) * tick_min;
    }
    Ok(GridOracleResult {
        cost: search.best_cost,
        schedule,
        evaluated: search.evaluated,
    })
}
