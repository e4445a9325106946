//! Primal-dual interior-point method for the convex surrogate.
//!
//! The subproblem is: minimize a smooth convex separable objective over
//! affine equalities `A x = b` and inequalities `G x <= h`. Dimensions are
//! tiny (tens of variables), so each Newton step assembles the reduced KKT
//! system densely and factors it with partial-pivot LU:
//!
//! ```text
//! [ H + G' W G    A' ] [dx]   [ rhs_x ]        W = diag(z / s)
//! [ A            -dI ] [dy] = [ -r_eq ]
//! ```
//!
//! The method is infeasible-start (slacks are clamped positive at entry)
//! with a Mehrotra-style predictor-corrector and a fraction-to-boundary
//! step. The objective Hessian is re-evaluated every iteration; since the
//! objective is separable with bounded curvature on the region the iterates
//! visit, no line-search globalization is needed.

use serde::Serialize;

use crate::scalar::{real, Real};

use super::linalg::{dot, norm_inf, solve_in_place, Mat};
use super::surrogate::{NormalizedProblem, SurrogateObjective};

/// Scaled KKT residual norms at the returned point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KktResiduals<T> {
    pub stationarity: T,
    pub equality: T,
    pub inequality: T,
    pub complementarity: T,
}

impl<T: Real> KktResiduals<T> {
    pub fn max(&self) -> T {
        self.stationarity.max(self.equality).max(self.inequality).max(self.complementarity)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct IpmOutcome<T> {
    pub x: Vec<T>,
    pub iterations: usize,
    pub kkt: KktResiduals<T>,
    pub converged: bool,
}

const STATIC_REG: f64 = 1e-11;
const FRACTION_TO_BOUNDARY: f64 = 0.995;

pub(crate) fn solve_ipm<T: Real>(
    prob: &NormalizedProblem<T>,
    obj: &SurrogateObjective<'_, T>,
    x0: &[T],
    tol: T,
    max_iter: usize,
) -> IpmOutcome<T> {
    let n = prob.n;
    let p = prob.a_mat.rows;
    let m = prob.g_mat.rows;
    let delta = real::<T>(STATIC_REG);

    let mut x = x0.to_vec();
    let mut y = vec![T::zero(); p];
    // Start slacks at the true values clamped away from zero; the matching
    // multipliers put the initial complementarity at ~1e-2.
    let mut gx = vec![T::zero(); m];
    prob.g_mat.mul_vec_into(&x, &mut gx);
    let s_floor = real::<T>(1e-3);
    let mut s: Vec<T> =
        (0..m).map(|i| (prob.h_vec[i] - gx[i]).max(s_floor)).collect();
    let mut z: Vec<T> = s.iter().map(|si| real::<T>(1e-2) / *si).collect();

    let mut grad = vec![T::zero(); n];
    let mut hess = vec![T::zero(); n];
    let mut best: Option<(T, IpmOutcome<T>)> = None;

    for iter in 0..max_iter {
        obj.grad_into(&x, &mut grad);
        obj.hess_diag_into(&x, &mut hess);

        // Residuals.
        let mut r_dual = grad.clone();
        prob.a_mat.mul_transpose_vec_into(&y, &mut r_dual);
        prob.g_mat.mul_transpose_vec_into(&z, &mut r_dual);
        let mut r_eq: Vec<T> = prob.b_vec.iter().map(|bi| -*bi).collect();
        prob.a_mat.mul_vec_into(&x, &mut r_eq);
        let mut r_ineq: Vec<T> = (0..m).map(|i| s[i] - prob.h_vec[i]).collect();
        prob.g_mat.mul_vec_into(&x, &mut r_ineq);
        let mu = dot(&s, &z) / real::<T>(m as f64);

        let kkt = KktResiduals {
            stationarity: norm_inf(&r_dual),
            equality: norm_inf(&r_eq),
            inequality: norm_inf(&r_ineq),
            complementarity: mu,
        };
        let scale_d = T::one() + norm_inf(&grad);
        let scale_p = T::one() + norm_inf(&prob.b_vec).max(norm_inf(&prob.h_vec));
        let done = kkt.stationarity <= tol * scale_d
            && kkt.equality <= tol * scale_p
            && kkt.inequality <= tol * scale_p
            && kkt.complementarity <= tol;
        let outcome = IpmOutcome { x: x.clone(), iterations: iter, kkt, converged: done };
        let score = kkt.max();
        if best.as_ref().map_or(true, |(b, _)| score < *b) {
            best = Some((score, outcome.clone()));
        }
        if done {
            return outcome;
        }

        // Reduced KKT matrix, shared by predictor and corrector.
        let dim = n + p;
        let mut kkt_mat = Mat::zeros(dim, dim);
        for i in 0..n {
            kkt_mat.set(i, i, hess[i] + delta);
        }
        let w_cap = real::<T>(1e12);
        let w: Vec<T> = (0..m).map(|i| (z[i] / s[i]).min(w_cap).max(real::<T>(1e-12))).collect();
        for row in 0..m {
            let grow = prob.g_mat.row(row);
            let wr = w[row];
            // Rows are sparse (<= 3 entries); skip zeros cheaply.
            for (a_idx, &ga) in grow.iter().enumerate() {
                if ga == T::zero() {
                    continue;
                }
                for (b_idx, &gb) in grow.iter().enumerate() {
                    if gb != T::zero() {
                        kkt_mat.add_at(a_idx, b_idx, wr * ga * gb);
                    }
                }
            }
        }
        for r in 0..p {
            let arow = prob.a_mat.row(r);
            for (c, &v) in arow.iter().enumerate() {
                if v != T::zero() {
                    kkt_mat.set(n + r, c, v);
                    kkt_mat.set(c, n + r, v);
                }
            }
            kkt_mat.set(n + r, n + r, -delta);
        }

        let solve_step = |rc: &[T]| -> Option<(Vec<T>, Vec<T>, Vec<T>, Vec<T>)> {
            // rc is the complementarity residual target: S z - target.
            let mut rhs = vec![T::zero(); dim];
            for i in 0..n {
                rhs[i] = -r_dual[i];
            }
            // - G' [ (z .* r_ineq - rc) ./ s ]
            let tmp: Vec<T> = (0..m).map(|i| (z[i] * r_ineq[i] - rc[i]) / s[i]).collect();
            let mut gt = vec![T::zero(); n];
            prob.g_mat.mul_transpose_vec_into(&tmp, &mut gt);
            for i in 0..n {
                rhs[i] -= gt[i];
            }
            for r in 0..p {
                rhs[n + r] = -r_eq[r];
            }
            let mut mat = kkt_mat.clone();
            solve_in_place(&mut mat, &mut rhs)?;
            let dx = rhs[..n].to_vec();
            let dy = rhs[n..].to_vec();
            let mut gdx = vec![T::zero(); m];
            prob.g_mat.mul_vec_into(&dx, &mut gdx);
            let ds: Vec<T> = (0..m).map(|i| -r_ineq[i] - gdx[i]).collect();
            let dz: Vec<T> = (0..m).map(|i| (-rc[i] - z[i] * ds[i]) / s[i]).collect();
            Some((dx, dy, ds, dz))
        };

        // Predictor (affine scaling).
        let rc_aff: Vec<T> = (0..m).map(|i| s[i] * z[i]).collect();
        let Some((_dx_a, _dy_a, ds_a, dz_a)) = solve_step(&rc_aff) else {
            break;
        };
        let alpha_aff = step_length(&s, &ds_a, &z, &dz_a);
        let mu_aff = (0..m)
            .map(|i| (s[i] + alpha_aff * ds_a[i]) * (z[i] + alpha_aff * dz_a[i]))
            .sum::<T>()
            / real::<T>(m as f64);
        let sigma = ((mu_aff / mu).max(T::zero()).min(T::one())).powi(3);

        // Corrector.
        let rc: Vec<T> =
            (0..m).map(|i| s[i] * z[i] + ds_a[i] * dz_a[i] - sigma * mu).collect();
        let Some((dx, dy, ds, dz)) = solve_step(&rc) else {
            break;
        };

        let mut alpha = step_length(&s, &ds, &z, &dz);
        // Guard against a step into non-finite territory.
        let mut ok = false;
        for _ in 0..8 {
            let finite = x
                .iter()
                .zip(&dx)
                .all(|(xi, di)| (*xi + alpha * *di).is_finite());
            if finite {
                ok = true;
                break;
            }
            alpha = alpha * real::<T>(0.5);
        }
        if !ok {
            break;
        }
        for i in 0..n {
            x[i] += alpha * dx[i];
        }
        for r in 0..p {
            y[r] += alpha * dy[r];
        }
        for i in 0..m {
            s[i] += alpha * ds[i];
            z[i] += alpha * dz[i];
        }
    }

    // Out of iterations or a singular step: hand back the best point seen.
    let (_, mut out) = best.expect("at least one iterate is always recorded");
    out.converged = false;
    out.iterations = max_iter;
    out
}

/// Largest step in (0, 1] keeping `s + a*ds > 0` and `z + a*dz > 0`, with
/// the usual fraction-to-boundary backoff.
fn step_length<T: Real>(s: &[T], ds: &[T], z: &[T], dz: &[T]) -> T {
    let mut alpha = T::one();
    let ftb = real::<T>(FRACTION_TO_BOUNDARY);
    for (v, dv) in s.iter().zip(ds).chain(z.iter().zip(dz)) {
        if *dv < T::zero() {
            alpha = alpha.min(ftb * (-*v / *dv));
        }
    }
    alpha
}
