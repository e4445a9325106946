//! Projected-gradient fallback in the reduced training-time space.
//!
//! Used when the interior-point subproblem solver fails (singular KKT or
//! stalled progress). Charges are eliminated by running the battery
//! recursion forward — capacity clamps included — so the only variables
//! are the 2J training times. Feasibility of the time budget and the
//! per-window boxes is kept by projection; battery depletion is discouraged
//! with a quadratic hinge penalty. The objective is the true (nonconvex)
//! cycle-life cost, so this is a direct method, not an inner-loop stand-in.

use crate::energy::{cycle_weight, cycle_weight_slope};
use crate::scalar::{real, Real};

use super::surrogate::NormalizedProblem;

const HINGE_WEIGHT: f64 = 1e4;
const MAX_ITER: usize = 400;
const ARMIJO_C: f64 = 1e-4;

/// Forward recursion value and reverse-mode gradient of the penalized
/// objective at `taus = [ts | te]` (scaled units).
fn eval<T: Real>(prob: &NormalizedProblem<T>, taus: &[T]) -> (T, Vec<T>) {
    let j = prob.j;
    let hinge = real::<T>(HINGE_WEIGHT);
    let ts = &taus[..j];
    let te = &taus[j..];

    // Forward pass. Record clamp decisions for the reverse sweep.
    let mut b_prev = prob.b0;
    let mut obj = T::zero();
    let mut capped = vec![false; j];
    let mut be_raw = vec![T::zero(); j];
    let mut bn_raw = vec![T::zero(); j];
    let mut be = vec![T::zero(); j];
    let mut bn = vec![T::zero(); j];
    for jj in 0..j {
        let raw = b_prev + prob.ecap[jj] - ts[jj];
        be_raw[jj] = raw;
        capped[jj] = raw > T::one();
        let b_ecl = raw.min(T::one()).max(T::zero());
        be[jj] = b_ecl;
        let next_raw = b_ecl - prob.ed_e[jj] - te[jj];
        bn_raw[jj] = next_raw;
        let b_next = next_raw.max(T::zero());
        bn[jj] = b_next;
        let d = T::one() - b_ecl;
        let dh = T::one() - b_next;
        obj += cycle_weight(dh, prob.aging) - cycle_weight(d, prob.aging);
        if raw < T::zero() {
            obj += hinge * raw * raw;
        }
        if next_raw < T::zero() {
            obj += hinge * next_raw * next_raw;
        }
        b_prev = b_next;
    }

    // Reverse pass: accumulate d(obj)/d(b_prev entering period jj).
    let mut grad = vec![T::zero(); 2 * j];
    let mut carry = T::zero(); // sensitivity wrt b_next[jj]
    for jj in (0..j).rev() {
        // b_next -> objective directly via dh, plus downstream carry.
        let dh = T::one() - bn[jj];
        let mut sens_next = carry - cycle_weight_slope(dh, prob.aging);
        // Clamp at zero kills the path below; the hinge supplies it instead.
        if bn_raw[jj] < T::zero() {
            sens_next = real::<T>(2.0) * hinge * bn_raw[jj];
        }
        // te enters b_next with coefficient -1.
        grad[j + jj] = -sens_next;
        // b_ecl -> objective via d (minus sign on w(d)) and via b_next;
        // then through the clamp back to the raw pre-clamp value.
        let d = T::one() - be[jj];
        let mut sens_raw = sens_next + cycle_weight_slope(d, prob.aging);
        if capped[jj] {
            sens_raw = T::zero();
        } else if be_raw[jj] < T::zero() {
            sens_raw = real::<T>(2.0) * hinge * be_raw[jj];
        }
        grad[jj] = -sens_raw;
        carry = sens_raw;
    }
    (obj, grad)
}

/// Euclidean projection onto `{ l <= t <= u, sum(t) = budget }` by
/// bisection on the simplex shift.
fn project<T: Real>(t: &mut [T], lo: &[T], hi: &[T], budget: T) {
    let sum_at = |nu: T, t: &[T]| -> T {
        t.iter()
            .zip(lo.iter().zip(hi))
            .map(|(ti, (l, h))| (*ti - nu).max(*l).min(*h))
            .sum()
    };
    // Bracket the shift.
    let mut lo_nu = -T::one();
    let mut hi_nu = T::one();
    for _ in 0..200 {
        if sum_at(lo_nu, t) >= budget {
            break;
        }
        lo_nu = lo_nu * real::<T>(2.0);
    }
    for _ in 0..200 {
        if sum_at(hi_nu, t) <= budget {
            break;
        }
        hi_nu = hi_nu * real::<T>(2.0);
    }
    for _ in 0..200 {
        let mid = (lo_nu + hi_nu) * real::<T>(0.5);
        if sum_at(mid, t) >= budget {
            lo_nu = mid;
        } else {
            hi_nu = mid;
        }
        if hi_nu - lo_nu < real::<T>(1e-15) {
            break;
        }
    }
    let nu = (lo_nu + hi_nu) * real::<T>(0.5);
    for (ti, (l, h)) in t.iter_mut().zip(lo.iter().zip(hi)) {
        *ti = (*ti - nu).max(*l).min(*h);
    }
}

/// Minimize the penalized cycle-life objective over feasible training
/// times, starting from the taus embedded in `x0` (full variable layout).
/// Returns the full-layout solution with charges recomputed by recursion.
pub(crate) fn solve_projected_gradient<T: Real>(
    prob: &NormalizedProblem<T>,
    x0: &[T],
) -> Vec<T> {
    let j = prob.j;
    let mut taus: Vec<T> = (0..2 * j)
        .map(|i| if i < j { x0[prob.ts(i)] } else { x0[prob.te(i - j)] })
        .collect();
    let mut lo = vec![T::zero(); 2 * j];
    let mut hi: Vec<T> = prob.cap_s.iter().chain(prob.cap_e.iter()).copied().collect();
    for (i, fixed) in prob.fixed_ts.iter().chain(prob.fixed_te.iter()).enumerate() {
        if *fixed {
            lo[i] = T::zero();
            hi[i] = T::zero();
        }
    }
    project(&mut taus, &lo, &hi, prob.tc);

    let (mut f, mut g) = eval(prob, &taus);
    let mut step = real::<T>(0.1);
    for _ in 0..MAX_ITER {
        // Trial point: project the gradient step, then backtrack on the arc.
        let mut trial: Vec<T> = taus.iter().zip(&g).map(|(t, gi)| *t - step * *gi).collect();
        project(&mut trial, &lo, &hi, prob.tc);
        let dir: Vec<T> = trial.iter().zip(&taus).map(|(a, b)| *a - *b).collect();
        let dir_norm: T = dir.iter().map(|d| *d * *d).sum::<T>().sqrt();
        if dir_norm < real::<T>(1e-12) {
            break;
        }
        let slope: T = dir.iter().zip(&g).map(|(d, gi)| *d * *gi).sum();
        let mut alpha = T::one();
        let mut accepted = false;
        for _ in 0..30 {
            let cand: Vec<T> =
                taus.iter().zip(&dir).map(|(t, d)| *t + alpha * *d).collect();
            let (fc, gc) = eval(prob, &cand);
            if fc <= f + real::<T>(ARMIJO_C) * alpha * slope.min(T::zero()) {
                taus = cand;
                f = fc;
                g = gc;
                accepted = true;
                break;
            }
            alpha = alpha * real::<T>(0.5);
        }
        if !accepted {
            step = step * real::<T>(0.25);
            if step < real::<T>(1e-14) {
                break;
            }
        } else {
            step = (step * real::<T>(1.5)).min(real::<T>(1.0));
        }
    }

    // Rebuild the full layout from the recursion.
    let mut x = vec![T::zero(); prob.n];
    let mut b_prev = prob.b0;
    for jj in 0..j {
        let ts = taus[jj].max(T::zero()).min(prob.cap_s[jj]);
        let te = taus[j + jj].max(T::zero()).min(prob.cap_e[jj]);
        let be = (b_prev + prob.ecap[jj] - ts).min(T::one()).max(T::zero());
        let bn = (be - prob.ed_e[jj] - te).max(T::zero());
        x[prob.ts(jj)] = ts;
        x[prob.te(jj)] = te;
        x[prob.be(jj)] = be;
        x[prob.bn(jj)] = bn;
        x[prob.d(jj)] = T::one() - be;
        x[prob.dh(jj)] = T::one() - bn;
        b_prev = bn;
    }
    x
}
