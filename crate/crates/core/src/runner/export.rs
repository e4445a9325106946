//! File exports of a campaign run.
//!
//! All writers emit fixed-precision text in a fixed row order, so a rerun
//! of the same scenario produces byte-identical files.

use std::fs::{self, File};
use std::io::{BufWriter, Write as _};
use std::path::Path;

use serde::Serialize;

use super::{CampaignResult, ModeRun, RunnerError};

/// Writes every export file into `dir`, creating it if needed.
pub fn export_campaign(result: &CampaignResult, dir: &Path) -> Result<(), RunnerError> {
    fs::create_dir_all(dir)?;
    write_timeline(result, dir)?;
    write_participation(result, dir)?;
    write_rounds(result, dir)?;
    write_loss(result, dir)?;
    write_schedule(result, dir)?;
    write_trajectory(result, dir)?;
    write_dod_per_slot(result, dir)?;
    write_cycle_life(result, dir)?;
    write_dod_bars(result, dir)?;
    write_sweep(result, dir)?;
    write_sweep_detail(result, dir)?;
    write_diagnostics(result, dir)?;
    write_model(result, dir)?;
    Ok(())
}

fn writer(dir: &Path, name: &str) -> Result<BufWriter<File>, RunnerError> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_timeline(result: &CampaignResult, dir: &Path) -> Result<(), RunnerError> {
    let mut w = writer(dir, "timeline.csv")?;
    writeln!(w, "sat_id,period_index,sunlight_start_s,eclipse_start_s,next_sunlight_start_s")?;
    for ctx in &result.contexts {
        for (i, p) in ctx.timeline.periods.iter().enumerate() {
            writeln!(
                w,
                "{},{},{:.3},{:.3},{:.3}",
                ctx.sat_id, i, p.sunlight_start_s, p.eclipse_start_s, p.next_sunlight_start_s
            )?;
        }
    }
    Ok(())
}

fn write_participation(result: &CampaignResult, dir: &Path) -> Result<(), RunnerError> {
    let mut w = writer(dir, "participation.csv")?;
    writeln!(w, "round,sat_id,participates,receive_s,deadline_s")?;
    for (round, row) in result.participation.iter().enumerate() {
        for (ctx, contact) in result.contexts.iter().zip(row) {
            match contact {
                Some(c) => writeln!(
                    w,
                    "{},{},1,{:.3},{:.3}",
                    round, ctx.sat_id, c.receive_s, c.deadline_s
                )?,
                None => writeln!(w, "{},{},0,,", round, ctx.sat_id)?,
            }
        }
    }
    Ok(())
}

fn write_rounds(result: &CampaignResult, dir: &Path) -> Result<(), RunnerError> {
    let mut w = writer(dir, "rounds.csv")?;
    writeln!(
        w,
        "mode,round,slot_start_s,slot_end_s,participant_count,dropped_count,\
         no_participants,global_loss"
    )?;
    for run in &result.runs {
        for r in &run.rounds {
            writeln!(
                w,
                "{},{},{:.3},{:.3},{},{},{},{:.6}",
                run.mode.label(),
                r.round,
                r.slot_start_s,
                r.slot_end_s,
                r.participants.len(),
                r.dropped.len(),
                u8::from(r.no_participants),
                r.global_loss
            )?;
        }
    }
    Ok(())
}

fn write_loss(result: &CampaignResult, dir: &Path) -> Result<(), RunnerError> {
    let mut w = writer(dir, "loss.csv")?;
    writeln!(w, "mode,round,global_loss")?;
    for run in &result.runs {
        for r in &run.rounds {
            writeln!(w, "{},{},{:.6}", run.mode.label(), r.round, r.global_loss)?;
        }
    }
    Ok(())
}

fn write_schedule(result: &CampaignResult, dir: &Path) -> Result<(), RunnerError> {
    let mut w = writer(dir, "schedule.csv")?;
    writeln!(w, "mode,round,sat_id,period_index,tau_sunlight_min,tau_eclipse_min")?;
    for run in &result.runs {
        for r in &run.rounds {
            for p in &r.participants {
                for i in 0..p.schedule.len() {
                    writeln!(
                        w,
                        "{},{},{},{},{:.6},{:.6}",
                        run.mode.label(),
                        r.round,
                        p.sat_id,
                        i,
                        p.schedule.tau_sunlight_min[i],
                        p.schedule.tau_eclipse_min[i]
                    )?;
                }
            }
        }
    }
    Ok(())
}

fn write_trajectory(result: &CampaignResult, dir: &Path) -> Result<(), RunnerError> {
    let mut w = writer(dir, "battery_trajectory.csv")?;
    writeln!(
        w,
        "mode,round,sat_id,period_index,charge_sunlight_start_wmin,\
         charge_eclipse_start_wmin,charge_next_sunlight_wmin,dod_eclipse_start,dod_eclipse_end"
    )?;
    for run in &result.runs {
        for r in &run.rounds {
            for p in &r.participants {
                for (i, st) in p.trajectory.periods.iter().enumerate() {
                    writeln!(
                        w,
                        "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
                        run.mode.label(),
                        r.round,
                        p.sat_id,
                        i,
                        st.charge_sunlight_start_wmin,
                        st.charge_eclipse_start_wmin,
                        st.charge_next_sunlight_wmin,
                        st.dod_eclipse_start,
                        st.dod_eclipse_end
                    )?;
                }
            }
        }
    }
    Ok(())
}

fn write_dod_per_slot(result: &CampaignResult, dir: &Path) -> Result<(), RunnerError> {
    let mut w = writer(dir, "dod_per_slot.csv")?;
    writeln!(w, "mode,round,sat_id,max_dod")?;
    for run in &result.runs {
        for r in &run.rounds {
            for p in &r.participants {
                writeln!(w, "{},{},{},{:.6}", run.mode.label(), r.round, p.sat_id, p.max_dod)?;
            }
        }
    }
    Ok(())
}

fn write_cycle_life(result: &CampaignResult, dir: &Path) -> Result<(), RunnerError> {
    let mut w = writer(dir, "cycle_life.csv")?;
    writeln!(w, "sat_id,mode,tc_min,consumed_cycles")?;
    for ctx in &result.contexts {
        for run in &result.runs {
            let consumed: f64 = run
                .rounds
                .iter()
                .flat_map(|r| &r.participants)
                .filter(|p| p.sat_id == ctx.sat_id)
                .map(|p| p.cycle_cost)
                .sum();
            writeln!(
                w,
                "{},{},{:.6},{:.6}",
                ctx.sat_id,
                run.mode.label(),
                result.tc_min,
                consumed
            )?;
        }
    }
    Ok(())
}

fn write_dod_bars(result: &CampaignResult, dir: &Path) -> Result<(), RunnerError> {
    let mut w = writer(dir, "dod_bars.csv")?;
    writeln!(w, "mode,sat_id,mean_max_dod,peak_dod,rounds_counted")?;
    for run in &result.runs {
        for ctx in &result.contexts {
            let dods: Vec<f64> = run
                .rounds
                .iter()
                .flat_map(|r| &r.participants)
                .filter(|p| p.sat_id == ctx.sat_id)
                .map(|p| p.max_dod)
                .collect();
            let (mean, peak) = if dods.is_empty() {
                (0.0, 0.0)
            } else {
                let sum: f64 = dods.iter().sum();
                (sum / dods.len() as f64, dods.iter().fold(0.0f64, |a, b| a.max(*b)))
            };
            writeln!(
                w,
                "{},{},{:.6},{:.6},{}",
                run.mode.label(),
                ctx.sat_id,
                mean,
                peak,
                dods.len()
            )?;
        }
    }
    Ok(())
}

/// Fleet-level sweep summary: one row per (capacity, mode).
fn write_sweep(result: &CampaignResult, dir: &Path) -> Result<(), RunnerError> {
    let mut w = writer(dir, "sweep.csv")?;
    writeln!(
        w,
        "capacity_wmin,mode,fleet_avg_cycles,fleet_total_cycles,counted_slots,skipped_slots"
    )?;
    // entries arrive grouped by capacity, satellites inner
    let mut capacities: Vec<f64> = Vec::new();
    for e in &result.sweep {
        if capacities.last() != Some(&e.capacity_wmin) {
            capacities.push(e.capacity_wmin);
        }
    }
    for &cap in &capacities {
        let entries: Vec<_> =
            result.sweep.iter().filter(|e| e.capacity_wmin == cap).collect();
        let sats = entries.len().max(1) as f64;
        let counted: usize = entries.iter().map(|e| e.counted_slots).sum();
        let skipped: usize = entries.iter().map(|e| e.skipped_slots).sum();
        for (label, total) in [
            ("aware", entries.iter().map(|e| e.aware_cycles).sum::<f64>()),
            ("agnostic", entries.iter().map(|e| e.agnostic_cycles).sum::<f64>()),
        ] {
            writeln!(
                w,
                "{:.6},{},{:.6},{:.6},{},{}",
                cap,
                label,
                total / sats,
                total,
                counted,
                skipped
            )?;
        }
    }
    Ok(())
}

/// Per-satellite sweep detail backing the capacity plot.
fn write_sweep_detail(result: &CampaignResult, dir: &Path) -> Result<(), RunnerError> {
    let mut w = writer(dir, "cycle_life_vs_capacity.csv")?;
    writeln!(
        w,
        "capacity_wmin,sat_id,aware_cycles,agnostic_cycles,counted_slots,skipped_slots"
    )?;
    for e in &result.sweep {
        writeln!(
            w,
            "{:.6},{},{:.6},{:.6},{},{}",
            e.capacity_wmin,
            e.sat_id,
            e.aware_cycles,
            e.agnostic_cycles,
            e.counted_slots,
            e.skipped_slots
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ModeDiagnostics {
    mode: &'static str,
    solves: usize,
    fallbacks: usize,
    outer_iterations: usize,
    dropped: usize,
    empty_rounds: usize,
    total_consumed_cycles: f64,
}

#[derive(Serialize)]
struct Diagnostics<'a> {
    scenario: &'a str,
    satellites: usize,
    rounds: usize,
    modes: Vec<ModeDiagnostics>,
}

fn mode_diagnostics(run: &ModeRun) -> ModeDiagnostics {
    let participants = || run.rounds.iter().flat_map(|r| &r.participants);
    ModeDiagnostics {
        mode: run.mode.label(),
        solves: participants().count(),
        fallbacks: participants().filter(|p| p.fallback_used).count(),
        outer_iterations: participants().map(|p| p.solver_iterations).sum(),
        dropped: run.rounds.iter().map(|r| r.dropped.len()).sum(),
        empty_rounds: run.rounds.iter().filter(|r| r.no_participants).count(),
        total_consumed_cycles: participants().map(|p| p.cycle_cost).sum(),
    }
}

fn write_diagnostics(result: &CampaignResult, dir: &Path) -> Result<(), RunnerError> {
    let diag = Diagnostics {
        scenario: &result.scenario_name,
        satellites: result.contexts.len(),
        rounds: result.slots.len().min(
            result.runs.first().map_or(result.slots.len(), |r| r.rounds.len()),
        ),
        modes: result.runs.iter().map(mode_diagnostics).collect(),
    };
    let mut w = writer(dir, "solver_diagnostics.json")?;
    let text = serde_json::to_string_pretty(&diag)
        .map_err(|e| RunnerError::Config(format!("diagnostics serialization: {e}")))?;
    writeln!(w, "{text}")?;
    Ok(())
}

fn write_model(result: &CampaignResult, dir: &Path) -> Result<(), RunnerError> {
    let mut w = writer(dir, "model_final.txt")?;
    writeln!(w, "satsched-model v1")?;
    writeln!(w, "scenario {}", result.scenario_name)?;
    writeln!(w, "loss {}", result.loss.label())?;
    for run in &result.runs {
        writeln!(w, "mode {} dim {}", run.mode.label(), run.final_model.dim())?;
        for weight in &run.final_model.weights {
            writeln!(w, "{weight:e}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{BatteryTrajectory, PeriodState, Schedule};
    use crate::flsim::{
        Contact, LocalDataset, ModelState, ParticipantRecord, RoundOutcome, SatContext,
        ScheduleMode,
    };
    use crate::orbital::{SunEclipseTimeline, SunPeriod};
    use crate::runner::{LossKind, SweepEntry};

    fn tiny_result() -> CampaignResult {
        let timeline = SunEclipseTimeline {
            start_s: 0.0,
            end_s: 3600.0,
            periods: vec![SunPeriod {
                sunlight_start_s: 0.0,
                eclipse_start_s: 2400.0,
                next_sunlight_start_s: 3600.0,
            }],
        };
        let ctx = SatContext {
            sat_id: 1,
            timeline,
            windows_s: vec![(0.0, 3600.0)],
            dataset: LocalDataset::synthetic(1, 10, 2),
        };
        let record = ParticipantRecord {
            sat_id: 1,
            receive_s: 0.0,
            deadline_s: 3600.0,
            schedule: Schedule {
                tau_sunlight_min: vec![12.5],
                tau_eclipse_min: vec![2.5],
            },
            trajectory: BatteryTrajectory {
                periods: vec![PeriodState {
                    charge_sunlight_start_wmin: 2000.0,
                    charge_eclipse_start_wmin: 2000.0,
                    charge_next_sunlight_wmin: 1875.0,
                    dod_eclipse_start: 0.0,
                    dod_eclipse_end: 0.0625,
                }],
            },
            cycle_cost: 0.0123456789,
            max_dod: 0.0625,
            solver_iterations: 4,
            fallback_used: false,
            data_size: 10,
        };
        let outcome = RoundOutcome {
            round: 0,
            slot_start_s: 0.0,
            slot_end_s: 3600.0,
            model: ModelState { weights: vec![0.5, -0.25, 0.125] },
            global_loss: 0.654321,
            no_participants: false,
            participants: vec![record],
            dropped: vec![],
        };
        CampaignResult {
            scenario_name: "tiny".into(),
            loss: LossKind::Logistic,
            tc_min: 15.0,
            slots: vec![(0.0, 3600.0)],
            contexts: vec![ctx],
            participation: vec![vec![Some(Contact { receive_s: 0.0, deadline_s: 3600.0 })]],
            runs: vec![super::super::ModeRun {
                mode: ScheduleMode::Aware,
                rounds: vec![outcome],
                final_model: ModelState { weights: vec![0.5, -0.25, 0.125] },
            }],
            sweep: vec![],
        }
    }

    #[test]
    fn exports_expected_files_with_fixed_precision() {
        let dir = tempfile::tempdir().unwrap();
        let result = tiny_result();
        export_campaign(&result, dir.path()).unwrap();
        for name in [
            "timeline.csv",
            "participation.csv",
            "rounds.csv",
            "loss.csv",
            "schedule.csv",
            "battery_trajectory.csv",
            "dod_per_slot.csv",
            "cycle_life.csv",
            "dod_bars.csv",
            "sweep.csv",
            "cycle_life_vs_capacity.csv",
            "solver_diagnostics.json",
            "model_final.txt",
        ] {
            assert!(dir.path().join(name).exists(), "missing {name}");
        }
        // no sweep entries: sweep files are headers only
        for name in ["sweep.csv", "cycle_life_vs_capacity.csv"] {
            let text = fs::read_to_string(dir.path().join(name)).unwrap();
            assert_eq!(text.lines().count(), 1, "{name} should be header-only");
        }
        let timeline = fs::read_to_string(dir.path().join("timeline.csv")).unwrap();
        assert_eq!(
            timeline.lines().nth(1).unwrap(),
            "1,0,0.000,2400.000,3600.000"
        );
        let cycle = fs::read_to_string(dir.path().join("cycle_life.csv")).unwrap();
        assert_eq!(cycle.lines().nth(1).unwrap(), "1,aware,15.000000,0.012346");
        let model = fs::read_to_string(dir.path().join("model_final.txt")).unwrap();
        assert!(model.starts_with("satsched-model v1\nscenario tiny\nloss logistic\n"));
        assert!(model.contains("mode aware dim 3"));
        assert!(model.contains("-2.5e-1"));
    }

    #[test]
    fn sweep_summary_aggregates_per_capacity_and_mode() {
        let dir = tempfile::tempdir().unwrap();
        let mut result = tiny_result();
        result.sweep = vec![
            SweepEntry {
                capacity_wmin: 1000.0,
                sat_id: 1,
                aware_cycles: 0.25,
                agnostic_cycles: 0.5,
                counted_slots: 3,
                skipped_slots: 1,
            },
            SweepEntry {
                capacity_wmin: 1000.0,
                sat_id: 2,
                aware_cycles: 0.75,
                agnostic_cycles: 1.5,
                counted_slots: 4,
                skipped_slots: 0,
            },
        ];
        export_campaign(&result, dir.path()).unwrap();
        let sweep = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
        let lines: Vec<&str> = sweep.lines().collect();
        // one capacity times two modes
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], "1000.000000,aware,0.500000,1.000000,7,1");
        assert_eq!(lines[2], "1000.000000,agnostic,1.000000,2.000000,7,1");
        let detail =
            fs::read_to_string(dir.path().join("cycle_life_vs_capacity.csv")).unwrap();
        assert_eq!(detail.lines().nth(1).unwrap(), "1000.000000,1,0.250000,0.500000,3,1");
    }

    #[test]
    fn reruns_are_byte_identical() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let result = tiny_result();
        export_campaign(&result, a.path()).unwrap();
        export_campaign(&result, b.path()).unwrap();
        for entry in fs::read_dir(a.path()).unwrap() {
            let name = entry.unwrap().file_name();
            let left = fs::read(a.path().join(&name)).unwrap();
            let right = fs::read(b.path().join(&name)).unwrap();
            assert_eq!(left, right, "{name:?} differs");
        }
    }
}
