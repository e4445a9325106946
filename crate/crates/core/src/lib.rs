//! Battery-aware scheduling of on-board training for LEO satellite fleets.
//!
//! A satellite that trains a model on board draws constant power; during
//! eclipse that power comes out of the battery, and every deepening of the
//! depth of discharge consumes a share of the battery's finite cycle life.
//! This crate plans *when* a satellite trains inside a scheduling window so
//! that a required total training time is met at minimum cycle-life cost,
//! and embeds that planner in a synchronous federated-learning simulation
//! driven by orbit geometry.
//!
//! The crate is organized in layers:
//!
//! * [`orbital`] — circular-orbit propagation, sunlight/eclipse timelines,
//!   ground-station visibility windows.
//! * [`energy`] — battery model: depth of discharge, cycle-life cost of a
//!   discharge excursion, and the charge recursion over sunlight/eclipse
//!   periods.
//! * [`scheduler`] — the training-time allocation problem and its solver
//!   (difference-of-convex iteration with an interior-point inner step),
//!   plus a contiguous energy-agnostic baseline and a grid-search oracle.
//! * [`flsim`] — synchronous federated rounds: slot partitioning,
//!   participation, local SGD, aggregation.
//! * [`runner`] — scenario files, campaign orchestration, capacity sweeps,
//!   CSV/JSON export.
//!
//! The numeric core (`orbital`, `energy`, `scheduler`) is generic over the
//! scalar type via [`scalar::Real`]; the simulation layers and the aliases
//! below fix `f64`.
//!
//! # Example
//!
//! Plan a 100-minute task across two orbits whose sunlight windows hold
//! only 80 minutes, so 20 minutes must come out of the batteries:
//!
//! ```
//! use satsched::scheduler::{build_problem, ccp_solve};
//! use satsched::{
//!     BatterySpec, CcpSettings, EnergyProfile, SunEclipseTimeline, SunPeriod, TrainingTask,
//! };
//!
//! // Two periods of 40 min sunlight + 30 min eclipse.
//! let periods = vec![
//!     SunPeriod { sunlight_start_s: 0.0, eclipse_start_s: 2400.0, next_sunlight_start_s: 4200.0 },
//!     SunPeriod { sunlight_start_s: 4200.0, eclipse_start_s: 6600.0, next_sunlight_start_s: 8400.0 },
//! ];
//! let timeline = SunEclipseTimeline { start_s: 0.0, end_s: 8400.0, periods };
//! let profile = EnergyProfile::full_recharge(&timeline, 2000.0, 50.0);
//! let task = TrainingTask::new(50.0, 100.0).unwrap();
//! let battery = BatterySpec::new(2000.0, 2000.0, 0.8).unwrap();
//!
//! let problem = build_problem(timeline, profile, task, battery).unwrap();
//! let solution = ccp_solve(&problem, &CcpSettings::default()).unwrap();
//! assert!((solution.schedule.total_min() - 100.0).abs() < 1e-9);
//! // The leftover 20 min split evenly across the two eclipses.
//! assert!(solution.cost() > 0.0);
//! ```

pub mod energy;
pub mod flsim;
pub mod orbital;
pub mod runner;
pub mod scalar;
pub mod scheduler;

/// Default scalar used by the simulation layers.
pub type Scalar = f64;

pub type Vec3 = orbital::Vec3<Scalar>;
pub type OrbitSpec = orbital::OrbitSpec<Scalar>;
pub type Constellation = orbital::Constellation<Scalar>;
pub type GroundStation = orbital::GroundStation<Scalar>;
pub type SunModel = orbital::SunModel<Scalar>;
pub type EarthRotation = orbital::EarthRotation<Scalar>;
pub type SunPeriod = orbital::SunPeriod<Scalar>;
pub type SunEclipseTimeline = orbital::SunEclipseTimeline<Scalar>;

pub type BatterySpec = energy::BatterySpec<Scalar>;
pub type EnergyProfile = energy::EnergyProfile<Scalar>;
pub type PeriodEnergy = energy::PeriodEnergy<Scalar>;
pub type TrainingTask = energy::TrainingTask<Scalar>;
pub type Schedule = energy::Schedule<Scalar>;
pub type BatteryTrajectory = energy::BatteryTrajectory<Scalar>;

pub type ProblemInstance = scheduler::ProblemInstance<Scalar>;
pub type CcpSettings = scheduler::CcpSettings<Scalar>;
pub type CcpIterate = scheduler::CcpIterate<Scalar>;
pub type CcpSolution = scheduler::CcpSolution<Scalar>;
