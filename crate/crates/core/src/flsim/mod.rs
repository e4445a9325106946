//! Synchronous federated-learning rounds over a satellite fleet.
//!
//! The campaign horizon is cut into equal slots, one round per slot. A
//! satellite participates in a round when its ground-contact pattern
//! leaves enough usable time inside the slot: it must hear the new global
//! model at its first contact (`receive`), fit the full training duration,
//! and deliver the update by its last contact (`deadline`). Participants
//! place their training inside `[receive, deadline]` — battery-aware via
//! the cycle-life solver, or battery-agnostic as one contiguous block —
//! run local SGD on their on-board data, and their updates are averaged
//! into the next global model. A round with no surviving participants
//! keeps the model unchanged and is flagged. Satellites whose schedule
//! turns out infeasible are dropped from the round, not the campaign.

pub mod data;
pub mod train;

pub use data::{LocalDataset, ModelState, Sample};
pub use train::{
    aggregate, dataset_loss, local_train, LocalUpdate, LogisticLoss, Loss, SquaredLoss,
    TrainError,
};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::energy::{
    horizon_cycle_cost, simulate_battery_with_slack, BatterySpec, BatteryTrajectory,
    EnergyProfile, Schedule, TrainingTask,
};
use crate::orbital::SunEclipseTimeline;
use crate::scheduler::{
    build_problem, ccp_solve, energy_agnostic_schedule, CcpSettings, ProblemInstance,
};

#[derive(Debug, Error)]
pub enum FlError {
    #[error("satellite {sat_id}, round {round}: {source}")]
    Train {
        sat_id: u32,
        round: usize,
        #[source]
        source: TrainError,
    },
    #[error("invalid federated-learning configuration: {0}")]
    Config(String),
}

/// How participants place their training time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    /// Minimize battery cycle-life cost with the solver.
    Aware,
    /// Train in one contiguous block starting at the receive contact.
    Agnostic,
}

impl ScheduleMode {
    pub fn label(self) -> &'static str {
        match self {
            ScheduleMode::Aware => "aware",
            ScheduleMode::Agnostic => "agnostic",
        }
    }
}

/// Where the per-period energy figures come from.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyPolicy {
    /// Harvest always refills the battery within each sunlight window.
    FullRecharge,
    /// Constant power rates integrated over the window lengths.
    Rates { demand_sunlight_w: f64, demand_eclipse_w: f64, harvest_w: f64 },
}

/// Round structure and local-training hyperparameters.
#[derive(Debug, Clone, Serialize)]
pub struct FlConfig {
    pub rounds: usize,
    /// Slot length in seconds; one round per slot.
    pub slot_s: f64,
    pub local_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Plain average instead of data-size weighting.
    pub aggregate_by_participants: bool,
}

impl FlConfig {
    pub fn validate(&self) -> Result<(), FlError> {
        let mut bad: Vec<&str> = Vec::new();
        if self.rounds == 0 {
            bad.push("rounds must be at least 1");
        }
        if !(self.slot_s.is_finite() && self.slot_s > 0.0) {
            bad.push("slot_s must be finite and positive");
        }
        if self.local_epochs == 0 {
            bad.push("local_epochs must be at least 1");
        }
        if self.batch_size == 0 {
            bad.push("batch_size must be at least 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            bad.push("learning_rate must be finite and non-negative");
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(FlError::Config(bad.join("; ")))
        }
    }
}

/// The usable communication span a satellite has within one slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Contact {
    /// First visible instant in the slot: the global model arrives here.
    pub receive_s: f64,
    /// Last visible instant in the slot: the update must be up by here.
    pub deadline_s: f64,
}

/// Everything fixed about one satellite for the whole campaign.
#[derive(Debug, Clone)]
pub struct SatContext {
    pub sat_id: u32,
    /// Sunlight/eclipse structure over the full campaign horizon.
    pub timeline: SunEclipseTimeline<f64>,
    /// Merged ground-station visibility windows, seconds, sorted.
    pub windows_s: Vec<(f64, f64)>,
    pub dataset: LocalDataset,
}

/// Campaign-constant inputs shared by every round.
pub struct RoundInputs<'a> {
    pub contexts: &'a [SatContext],
    pub task: TrainingTask<f64>,
    pub battery: BatterySpec<f64>,
    pub policy: EnergyPolicy,
    pub mode: ScheduleMode,
    pub settings: CcpSettings<f64>,
    pub fl: &'a FlConfig,
    pub loss: &'a dyn Loss,
    /// Mixed with round and satellite ids for per-training seeds.
    pub base_seed: u64,
}

/// One satellite's contribution to a round.
#[derive(Debug, Clone)]
pub struct ParticipantRecord {
    pub sat_id: u32,
    pub receive_s: f64,
    pub deadline_s: f64,
    pub schedule: Schedule<f64>,
    pub trajectory: BatteryTrajectory<f64>,
    pub cycle_cost: f64,
    pub max_dod: f64,
    pub solver_iterations: usize,
    pub fallback_used: bool,
    pub data_size: usize,
}

/// A satellite that had contact but could not produce an update.
#[derive(Debug, Clone, Serialize)]
pub struct DroppedRecord {
    pub sat_id: u32,
    pub reason: String,
}

/// Result of one synchronous round.
#[derive(Debug, Clone)]
pub struct RoundOutcome {
    pub round: usize,
    pub slot_start_s: f64,
    pub slot_end_s: f64,
    /// Global model after aggregation (unchanged if nobody participated).
    pub model: ModelState,
    /// Mean per-sample loss of `model` over every satellite's data.
    pub global_loss: f64,
    pub no_participants: bool,
    pub participants: Vec<ParticipantRecord>,
    pub dropped: Vec<DroppedRecord>,
}

/// Stateless splitmix-style mixer: one independent stream per
/// (round, satellite) pair from a single campaign seed.
pub fn mix_seed(base: u64, round: u64, sat: u64) -> u64 {
    let mut z = base
        ^ round.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ sat.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Cuts `[start, end]` into consecutive slots of `slot_s` seconds. A
/// trailing remainder shorter than a slot is dropped.
pub fn partition_slots(start_s: f64, end_s: f64, slot_s: f64) -> Vec<(f64, f64)> {
    assert!(slot_s > 0.0, "slot_s must be positive");
    let count = ((end_s - start_s) / slot_s + 1e-9).floor().max(0.0) as usize;
    (0..count)
        .map(|i| {
            let lo = start_s + i as f64 * slot_s;
            let hi = (start_s + (i + 1) as f64 * slot_s).min(end_s);
            (lo, hi)
        })
        .collect()
}

/// Decides whether a satellite can take part in the round owning `slot`:
/// its first and last visible instants inside the slot must be at least
/// the training duration apart.
pub fn participation(
    windows_s: &[(f64, f64)],
    slot: (f64, f64),
    training_min: f64,
) -> Option<Contact> {
    let needed_s = training_min * 60.0;
    let mut receive: Option<f64> = None;
    let mut deadline: Option<f64> = None;
    for &(lo, hi) in windows_s {
        let lo = lo.max(slot.0);
        let hi = hi.min(slot.1);
        if lo <= hi {
            receive = Some(receive.map_or(lo, |r| r.min(lo)));
            deadline = Some(deadline.map_or(hi, |d| d.max(hi)));
        }
    }
    let (receive_s, deadline_s) = (receive?, deadline?);
    (deadline_s - receive_s >= needed_s).then_some(Contact { receive_s, deadline_s })
}

/// Builds the scheduling problem a participant faces: the timeline slice
/// between its contacts, the configured energy figures, and a battery
/// starting the slot fully recharged.
pub fn build_slot_instance(
    ctx: &SatContext,
    contact: &Contact,
    task: &TrainingTask<f64>,
    battery: &BatterySpec<f64>,
    policy: &EnergyPolicy,
) -> Result<ProblemInstance<f64>, String> {
    let timeline = ctx
        .timeline
        .slice(contact.receive_s, contact.deadline_s)
        .map_err(|e| e.to_string())?;
    let profile = match policy {
        EnergyPolicy::FullRecharge => {
            EnergyProfile::full_recharge(&timeline, battery.capacity_wmin, task.power_w)
        }
        EnergyPolicy::Rates { demand_sunlight_w, demand_eclipse_w, harvest_w } => {
            EnergyProfile::from_rates(&timeline, *demand_sunlight_w, *demand_eclipse_w, *harvest_w)
        }
    };
    let fresh = BatterySpec::new(battery.capacity_wmin, battery.capacity_wmin, battery.aging)
        .map_err(|e| e.to_string())?;
    build_problem(timeline, profile, *task, fresh).map_err(|e| e.to_string())
}

enum PerSat {
    Out,
    Trained(ParticipantRecord, LocalUpdate),
    Dropped(DroppedRecord),
}

fn solve_participant(
    ctx: &SatContext,
    contact: Contact,
    inputs: &RoundInputs<'_>,
) -> Result<(Schedule<f64>, BatteryTrajectory<f64>, f64, usize, bool), String> {
    let inst = build_slot_instance(ctx, &contact, &inputs.task, &inputs.battery, &inputs.policy)?;
    match inputs.mode {
        ScheduleMode::Aware => {
            let sol = ccp_solve(&inst, &inputs.settings).map_err(|e| e.to_string())?;
            let cost = sol.cost();
            let iters = sol.diagnostics.iterations;
            let fallback = sol.diagnostics.fallback_used;
            Ok((sol.schedule, sol.trajectory, cost, iters, fallback))
        }
        ScheduleMode::Agnostic => {
            let schedule =
                energy_agnostic_schedule(&inst, contact.receive_s).map_err(|e| e.to_string())?;
            let slack = 1e-6 * inst.battery.capacity_wmin;
            let trajectory = simulate_battery_with_slack(
                &inst.timeline,
                &inst.profile,
                &inst.task,
                &schedule,
                &inst.battery,
                slack,
            )
            .map_err(|e: crate::energy::EnergyError| e.to_string())?;
            let cost = horizon_cycle_cost(&trajectory, inst.battery.aging);
            Ok((schedule, trajectory, cost, 0, false))
        }
    }
}

/// Mean per-sample loss of `model` over every satellite's dataset.
pub fn global_loss(model: &ModelState, contexts: &[SatContext], loss: &dyn Loss) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for ctx in contexts {
        let (s, n) = dataset_loss(model, &ctx.dataset, loss);
        sum += s;
        count += n;
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Runs one synchronous round in the slot `slot`: select participants,
/// schedule and simulate their training windows, train locally, and
/// aggregate. Scheduling failures drop the satellite from this round
/// only; training divergence aborts with an error.
pub fn run_round(
    inputs: &RoundInputs<'_>,
    slot: (f64, f64),
    round: usize,
    model: &ModelState,
) -> Result<RoundOutcome, FlError> {
    inputs.fl.validate()?;
    let per_sat: Vec<PerSat> = inputs
        .contexts
        .par_iter()
        .map(|ctx| {
            let Some(contact) = participation(&ctx.windows_s, slot, inputs.task.duration_min)
            else {
                return Ok(PerSat::Out);
            };
            match solve_participant(ctx, contact, inputs) {
                Err(reason) => Ok(PerSat::Dropped(DroppedRecord { sat_id: ctx.sat_id, reason })),
                Ok((schedule, trajectory, cycle_cost, solver_iterations, fallback_used)) => {
                    let seed = mix_seed(inputs.base_seed, round as u64, u64::from(ctx.sat_id));
                    let update = local_train(
                        model,
                        &ctx.dataset,
                        inputs.loss,
                        inputs.fl.local_epochs,
                        inputs.fl.batch_size,
                        inputs.fl.learning_rate,
                        seed,
                    )
                    .map_err(|source| FlError::Train { sat_id: ctx.sat_id, round, source })?;
                    let record = ParticipantRecord {
                        sat_id: ctx.sat_id,
                        receive_s: contact.receive_s,
                        deadline_s: contact.deadline_s,
                        max_dod: trajectory.max_dod(),
                        schedule,
                        trajectory,
                        cycle_cost,
                        solver_iterations,
                        fallback_used,
                        data_size: ctx.dataset.len(),
                    };
                    Ok(PerSat::Trained(record, update))
                }
            }
        })
        .collect::<Result<_, FlError>>()?;

    let mut participants = Vec::new();
    let mut dropped = Vec::new();
    let mut updates = Vec::new();
    for entry in per_sat {
        match entry {
            PerSat::Out => {}
            PerSat::Dropped(d) => dropped.push(d),
            PerSat::Trained(record, update) => {
                participants.push(record);
                updates.push(update);
            }
        }
    }
    let no_participants = updates.is_empty();
    let next_model = if no_participants {
        model.clone()
    } else {
        aggregate(&updates, model.dim(), inputs.fl.aggregate_by_participants)
    };
    let loss = global_loss(&next_model, inputs.contexts, inputs.loss);
    Ok(RoundOutcome {
        round,
        slot_start_s: slot.0,
        slot_end_s: slot.1,
        model: next_model,
        global_loss: loss,
        no_participants,
        participants,
        dropped,
    })
}
