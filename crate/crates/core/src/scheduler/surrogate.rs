//! Normalized form of the per-window allocation problem and the convex
//! surrogate objective minimized at each outer iteration.
//!
//! The solver works on a scaled copy of the problem: charges are fractions
//! of capacity and training times are expressed as the charge fraction they
//! would draw (`tau * P / capacity`). Everything is then O(1), which keeps
//! one set of tolerances meaningful across battery sizes.
//!
//! Variable layout, `J` periods, `n = 6J` entries:
//!
//! ```text
//! [ tau_s | tau_e | b_ecl | b_next | d_ecl | d_next ]   (J entries each)
//! ```
//!
//! `b_ecl` is the charge fraction entering eclipse, `b_next` the fraction
//! leaving it; `d_ecl`/`d_next` are the matching depths of discharge, kept
//! as explicit variables tied by equality rows so the solved point exposes
//! whether the relaxed charge-link inequality went tight on its own.

use crate::energy::{cycle_weight, cycle_weight_curvature, cycle_weight_slope, BatteryTrajectory, Schedule};
use crate::scalar::{real, Real};

use super::linalg::Mat;
use super::{CcpIterate, ProblemInstance, ScheduleError};

/// Equality-row labels, for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum EqRow {
    EclipseBalance(usize),
    DodDef(usize),
    DodNextDef(usize),
    Budget,
    FixedTauSun(usize),
    FixedTauEcl(usize),
}

/// Inequality-row labels, for diagnostics and activity reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum IneqRow {
    ChargeLink(usize),
    ChargeCap(usize),
    TauSunMin(usize),
    TauSunMax(usize),
    TauEclMin(usize),
    TauEclMax(usize),
    ChargeMin(usize),
    NextMin(usize),
    NextMax(usize),
}

impl IneqRow {
    pub fn describe(&self) -> String {
        match self {
            IneqRow::ChargeLink(j) => format!("charge_link[{j}]"),
            IneqRow::ChargeCap(j) => format!("charge_cap[{j}]"),
            IneqRow::TauSunMin(j) => format!("tau_sun_min[{j}]"),
            IneqRow::TauSunMax(j) => format!("tau_sun_max[{j}]"),
            IneqRow::TauEclMin(j) => format!("tau_ecl_min[{j}]"),
            IneqRow::TauEclMax(j) => format!("tau_ecl_max[{j}]"),
            IneqRow::ChargeMin(j) => format!("charge_min[{j}]"),
            IneqRow::NextMin(j) => format!("next_min[{j}]"),
            IneqRow::NextMax(j) => format!("next_max[{j}]"),
        }
    }
}

/// Scaled problem data shared by all outer iterations.
#[derive(Debug, Clone)]
pub(crate) struct NormalizedProblem<T> {
    pub j: usize,
    pub n: usize,
    pub aging: T,
    /// Capacity, W*min (for converting back to physical units).
    pub capacity_wmin: T,
    /// `P / capacity`, per minute: converts minutes to charge fraction.
    pub p_scale: T,
    /// Initial charge fraction.
    pub b0: T,
    /// Scaled training budget.
    pub tc: T,
    /// Scaled per-period caps on `tau_s` (time and energy combined).
    pub cap_s: Vec<T>,
    /// Scaled per-period caps on `tau_e` (window length).
    pub cap_e: Vec<T>,
    /// Scaled sunlight balance `(harvest - demand)/capacity` per period.
    pub ecap: Vec<T>,
    /// Scaled eclipse demand per period.
    pub ed_e: Vec<T>,
    pub fixed_ts: Vec<bool>,
    pub fixed_te: Vec<bool>,
    pub a_mat: Mat<T>,
    pub b_vec: Vec<T>,
    pub a_rows: Vec<EqRow>,
    pub g_mat: Mat<T>,
    pub h_vec: Vec<T>,
    pub g_rows: Vec<IneqRow>,
}

/// Caps smaller than this (scaled) pin the variable to zero by equality.
const FIXED_EPS: f64 = 1e-12;

impl<T: Real> NormalizedProblem<T> {
    #[inline]
    pub fn ts(&self, j: usize) -> usize {
        j
    }
    #[inline]
    pub fn te(&self, j: usize) -> usize {
        self.j + j
    }
    #[inline]
    pub fn be(&self, j: usize) -> usize {
        2 * self.j + j
    }
    #[inline]
    pub fn bn(&self, j: usize) -> usize {
        3 * self.j + j
    }
    #[inline]
    pub fn d(&self, j: usize) -> usize {
        4 * self.j + j
    }
    #[inline]
    pub fn dh(&self, j: usize) -> usize {
        5 * self.j + j
    }

    pub fn from_instance(inst: &ProblemInstance<T>) -> Result<Self, ScheduleError> {
        let j = inst.timeline.len();
        let n = 6 * j;
        let cap = inst.battery.capacity_wmin;
        let p_scale = inst.task.power_w / cap;
        let sixty = real::<T>(60.0);

        let mut cap_s = Vec::with_capacity(j);
        let mut cap_e = Vec::with_capacity(j);
        let mut ecap = Vec::with_capacity(j);
        let mut ed_e = Vec::with_capacity(j);
        for (idx, (win, flows)) in
            inst.timeline.periods.iter().zip(&inst.profile.periods).enumerate()
        {
            let balance = (flows.harvest_sunlight_wmin - flows.demand_sunlight_wmin) / cap;
            if balance < -real::<T>(1e-12) {
                return Err(ScheduleError::SunlightInfeasible { period: idx });
            }
            let balance = balance.max(T::zero());
            let time_cap = win.sunlight_len_s() / sixty * p_scale;
            cap_s.push(time_cap.min(balance));
            cap_e.push(win.eclipse_len_s() / sixty * p_scale);
            ecap.push(balance);
            ed_e.push(flows.demand_eclipse_wmin / cap);
        }
        let fixed_eps = real::<T>(FIXED_EPS);
        let fixed_ts: Vec<bool> = cap_s.iter().map(|c| *c < fixed_eps).collect();
        let fixed_te: Vec<bool> = cap_e.iter().map(|c| *c < fixed_eps).collect();

        let b0 = inst.battery.initial_charge_wmin / cap;
        let tc = inst.task.duration_min * p_scale;

        // Equality rows.
        let n_fixed = fixed_ts.iter().chain(&fixed_te).filter(|f| **f).count();
        let p_rows = 3 * j + 1 + n_fixed;
        let mut a_mat = Mat::zeros(p_rows, n);
        let mut b_vec = vec![T::zero(); p_rows];
        let mut a_rows = Vec::with_capacity(p_rows);
        let mut prob = Self {
            j,
            n,
            aging: inst.battery.aging,
            capacity_wmin: cap,
            p_scale,
            b0,
            tc,
            cap_s,
            cap_e,
            ecap,
            ed_e,
            fixed_ts,
            fixed_te,
            a_mat: Mat::zeros(0, 0),
            b_vec: Vec::new(),
            a_rows: Vec::new(),
            g_mat: Mat::zeros(0, 0),
            h_vec: Vec::new(),
            g_rows: Vec::new(),
        };
        let mut r = 0;
        for jj in 0..j {
            a_mat.set(r, prob.bn(jj), T::one());
            a_mat.set(r, prob.be(jj), -T::one());
            a_mat.set(r, prob.te(jj), T::one());
            b_vec[r] = -prob.ed_e[jj];
            a_rows.push(EqRow::EclipseBalance(jj));
            r += 1;
        }
        for jj in 0..j {
            a_mat.set(r, prob.d(jj), T::one());
            a_mat.set(r, prob.be(jj), T::one());
            b_vec[r] = T::one();
            a_rows.push(EqRow::DodDef(jj));
            r += 1;
        }
        for jj in 0..j {
            a_mat.set(r, prob.dh(jj), T::one());
            a_mat.set(r, prob.bn(jj), T::one());
            b_vec[r] = T::one();
            a_rows.push(EqRow::DodNextDef(jj));
            r += 1;
        }
        for jj in 0..j {
            a_mat.set(r, prob.ts(jj), T::one());
            a_mat.set(r, prob.te(jj), T::one());
        }
        b_vec[r] = prob.tc;
        a_rows.push(EqRow::Budget);
        r += 1;
        for jj in 0..j {
            if prob.fixed_ts[jj] {
                a_mat.set(r, prob.ts(jj), T::one());
                a_rows.push(EqRow::FixedTauSun(jj));
                r += 1;
            }
            if prob.fixed_te[jj] {
                a_mat.set(r, prob.te(jj), T::one());
                a_rows.push(EqRow::FixedTauEcl(jj));
                r += 1;
            }
        }
        debug_assert_eq!(r, p_rows);

        // Inequality rows.
        let mut g_entries: Vec<(IneqRow, Vec<(usize, T)>, T)> = Vec::new();
        for jj in 0..j {
            let mut coeffs = vec![(prob.be(jj), T::one()), (prob.ts(jj), T::one())];
            let mut rhs = prob.ecap[jj];
            if jj == 0 {
                rhs += prob.b0;
            } else {
                coeffs.push((prob.bn(jj - 1), -T::one()));
            }
            g_entries.push((IneqRow::ChargeLink(jj), coeffs, rhs));
            g_entries.push((IneqRow::ChargeCap(jj), vec![(prob.be(jj), T::one())], T::one()));
            if !prob.fixed_ts[jj] {
                g_entries.push((IneqRow::TauSunMin(jj), vec![(prob.ts(jj), -T::one())], T::zero()));
                g_entries.push((IneqRow::TauSunMax(jj), vec![(prob.ts(jj), T::one())], prob.cap_s[jj]));
            }
            if !prob.fixed_te[jj] {
                g_entries.push((IneqRow::TauEclMin(jj), vec![(prob.te(jj), -T::one())], T::zero()));
                g_entries.push((IneqRow::TauEclMax(jj), vec![(prob.te(jj), T::one())], prob.cap_e[jj]));
            }
            g_entries.push((IneqRow::ChargeMin(jj), vec![(prob.be(jj), -T::one())], T::zero()));
            g_entries.push((IneqRow::NextMin(jj), vec![(prob.bn(jj), -T::one())], T::zero()));
            g_entries.push((IneqRow::NextMax(jj), vec![(prob.bn(jj), T::one())], T::one()));
        }
        let m = g_entries.len();
        let mut g_mat = Mat::zeros(m, n);
        let mut h_vec = vec![T::zero(); m];
        let mut g_rows = Vec::with_capacity(m);
        for (row, (label, coeffs, rhs)) in g_entries.into_iter().enumerate() {
            for (c, v) in coeffs {
                g_mat.set(row, c, v);
            }
            h_vec[row] = rhs;
            g_rows.push(label);
        }

        prob.a_mat = a_mat;
        prob.b_vec = b_vec;
        prob.a_rows = a_rows;
        prob.g_mat = g_mat;
        prob.h_vec = h_vec;
        prob.g_rows = g_rows;
        Ok(prob)
    }

    /// Scaled point from a physical schedule plus its simulated trajectory.
    pub fn embed(&self, schedule: &Schedule<T>, traj: &BatteryTrajectory<T>) -> Vec<T> {
        debug_assert_eq!(schedule.len(), self.j);
        debug_assert_eq!(traj.len(), self.j);
        let mut x = vec![T::zero(); self.n];
        for jj in 0..self.j {
            x[self.ts(jj)] = schedule.tau_sunlight_min[jj] * self.p_scale;
            x[self.te(jj)] = schedule.tau_eclipse_min[jj] * self.p_scale;
            let p = &traj.periods[jj];
            x[self.be(jj)] = p.charge_eclipse_start_wmin / self.capacity_wmin;
            x[self.bn(jj)] = p.charge_next_sunlight_wmin / self.capacity_wmin;
            x[self.d(jj)] = p.dod_eclipse_start;
            x[self.dh(jj)] = p.dod_eclipse_end;
        }
        x
    }

    /// Physical-unit view of a scaled point.
    pub fn to_iterate(&self, x: &[T], iteration: usize) -> CcpIterate<T> {
        let grab = |f: &dyn Fn(usize) -> usize| (0..self.j).map(|jj| x[f(jj)]).collect::<Vec<_>>();
        CcpIterate {
            tau_sunlight_min: (0..self.j).map(|jj| x[self.ts(jj)] / self.p_scale).collect(),
            tau_eclipse_min: (0..self.j).map(|jj| x[self.te(jj)] / self.p_scale).collect(),
            charge_eclipse_start_wmin: (0..self.j)
                .map(|jj| x[self.be(jj)] * self.capacity_wmin)
                .collect(),
            charge_next_sunlight_wmin: (0..self.j)
                .map(|jj| x[self.bn(jj)] * self.capacity_wmin)
                .collect(),
            dod_eclipse_start: grab(&|jj| self.d(jj)),
            dod_eclipse_end: grab(&|jj| self.dh(jj)),
            objective: self.objective(x),
            surrogate_objective: T::nan(),
            iteration,
        }
    }

    /// The difference-of-convex objective `u(x) - v(x)` at a scaled point:
    /// per-period excursion weight at the eclipse end minus the weight at
    /// the eclipse start.
    pub fn objective(&self, x: &[T]) -> T {
        (0..self.j)
            .map(|jj| {
                cycle_weight(x[self.dh(jj)], self.aging) - cycle_weight(x[self.d(jj)], self.aging)
            })
            .sum()
    }

    /// Per-period slack of the relaxed charge link, W*min: how far the
    /// eclipse-start charge sits below its ceiling
    /// `min(previous charge + sunlight balance - training draw, capacity)`.
    pub fn charge_link_slack_wmin(&self, x: &[T]) -> Vec<T> {
        (0..self.j)
            .map(|jj| {
                let b_prev = if jj == 0 { self.b0 } else { x[self.bn(jj - 1)] };
                let ceil = (b_prev + self.ecap[jj] - x[self.ts(jj)]).min(T::one());
                (ceil - x[self.be(jj)]) * self.capacity_wmin
            })
            .collect()
    }

    /// Euclidean distance between the depth-of-discharge blocks of two
    /// scaled points — the default outer stopping quantity.
    pub fn dod_distance(&self, a: &[T], b: &[T]) -> T {
        (0..self.j)
            .map(|jj| {
                let dd = a[self.d(jj)] - b[self.d(jj)];
                let dh = a[self.dh(jj)] - b[self.dh(jj)];
                dd * dd + dh * dh
            })
            .sum::<T>()
            .sqrt()
    }
}

/// The convex surrogate: `sum_j w(d_next_j) - sum_j g_j * d_j`, plus an
/// optional proximal term `lambda * |x - x_ref|^2`.
pub(crate) struct SurrogateObjective<'a, T> {
    pub aging: T,
    /// Linearization coefficients `g_j` multiplying `d_j`.
    pub lin_d: &'a [T],
    pub lambda: T,
    pub x_ref: Option<&'a [T]>,
    pub j: usize,
}

impl<'a, T: Real> SurrogateObjective<'a, T> {
    #[inline]
    fn d(&self, jj: usize) -> usize {
        4 * self.j + jj
    }
    #[inline]
    fn dh(&self, jj: usize) -> usize {
        5 * self.j + jj
    }

    pub fn value(&self, x: &[T]) -> T {
        let mut v = T::zero();
        for jj in 0..self.j {
            v += cycle_weight(x[self.dh(jj)], self.aging);
            v -= self.lin_d[jj] * x[self.d(jj)];
        }
        if self.lambda > T::zero() {
            let r = self.x_ref.expect("proximal term requires a reference point");
            for (xi, ri) in x.iter().zip(r) {
                let dxi = *xi - *ri;
                v += self.lambda * dxi * dxi;
            }
        }
        v
    }

    pub fn grad_into(&self, x: &[T], out: &mut [T]) {
        for g in out.iter_mut() {
            *g = T::zero();
        }
        for jj in 0..self.j {
            out[self.dh(jj)] = cycle_weight_slope(x[self.dh(jj)], self.aging);
            out[self.d(jj)] = -self.lin_d[jj];
        }
        if self.lambda > T::zero() {
            let r = self.x_ref.expect("proximal term requires a reference point");
            let two = real::<T>(2.0);
            for (g, (xi, ri)) in out.iter_mut().zip(x.iter().zip(r)) {
                *g += two * self.lambda * (*xi - *ri);
            }
        }
    }

    /// Diagonal Hessian. The excursion weight loses convexity far below
    /// zero depth, a region transiently reachable by an infeasible-start
    /// method, so entries are floored at a small positive value.
    pub fn hess_diag_into(&self, x: &[T], out: &mut [T]) {
        let floor = real::<T>(1e-11);
        let two = real::<T>(2.0);
        for h in out.iter_mut() {
            *h = T::zero();
        }
        for jj in 0..self.j {
            out[self.dh(jj)] = cycle_weight_curvature(x[self.dh(jj)], self.aging).max(floor);
        }
        if self.lambda > T::zero() {
            for h in out.iter_mut() {
                *h += two * self.lambda;
            }
        }
    }
}
