//! Interval extraction for boolean predicates of time.
//!
//! All timeline and visibility computation reduces to the same primitive:
//! scan a predicate on a coarse grid, then bisect each detected transition
//! down to a sharp boundary. A coarse step of 10 s resolves every event of
//! interest here (eclipse passages and ground passes last minutes), and the
//! bisection width of 1e-3 s puts boundaries well inside the documented
//! 0.1 s accuracy.

use crate::scalar::{real, Real};

#[derive(Debug, Clone, Copy)]
pub struct EventOptions<T> {
    /// Coarse scan step, seconds.
    pub coarse_step_s: T,
    /// Bisection terminates when the bracket is narrower than this, seconds.
    pub refine_width_s: T,
}

impl<T: Real> Default for EventOptions<T> {
    fn default() -> Self {
        Self { coarse_step_s: real(10.0), refine_width_s: real(1e-3) }
    }
}

/// Maximal intervals of `[t0, t1]` on which `pred` is true.
///
/// Transitions shorter than the coarse step can be missed; callers choose
/// the step against the shortest event they care about.
pub(crate) fn scan_intervals<T: Real>(
    t0: T,
    t1: T,
    opts: &EventOptions<T>,
    pred: impl Fn(T) -> bool,
) -> Vec<(T, T)> {
    debug_assert!(t1 >= t0);
    let mut out = Vec::new();
    let mut prev_t = t0;
    let mut prev_v = pred(t0);
    let mut open: Option<T> = if prev_v { Some(t0) } else { None };

    let mut t = t0;
    loop {
        t = if t + opts.coarse_step_s >= t1 { t1 } else { t + opts.coarse_step_s };
        let v = pred(t);
        if v != prev_v {
            let edge = refine(prev_t, t, prev_v, opts.refine_width_s, &pred);
            if v {
                open = Some(edge);
            } else if let Some(s) = open.take() {
                out.push((s, edge));
            }
        }
        prev_t = t;
        prev_v = v;
        if t >= t1 {
            break;
        }
    }
    if let Some(s) = open {
        out.push((s, t1));
    }
    out
}

/// Bisect a bracket `[lo, hi]` with `pred(lo) == lo_val != pred(hi)` down to
/// `width` and return the midpoint.
fn refine<T: Real>(mut lo: T, mut hi: T, lo_val: bool, width: T, pred: &impl Fn(T) -> bool) -> T {
    while hi - lo > width {
        let mid = (lo + hi) * real::<T>(0.5);
        if pred(mid) == lo_val {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * real::<T>(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extracts_a_periodic_predicate() {
        // True on [100k, 100k+300) for every k.
        let pred = |t: f64| t.rem_euclid(1000.0) >= 100.0 && t.rem_euclid(1000.0) < 400.0;
        let opts = EventOptions::default();
        let iv = scan_intervals(0.0, 2500.0, &opts, pred);
        assert_eq!(iv.len(), 3);
        let expect = [(100.0, 400.0), (1100.0, 1400.0), (2100.0, 2400.0)];
        for ((s, e), (es, ee)) in iv.iter().zip(expect) {
            assert!((s - es).abs() < 0.05, "start {s} vs {es}");
            assert!((e - ee).abs() < 0.05, "end {e} vs {ee}");
        }
    }

    #[test]
    fn handles_true_at_both_ends() {
        let pred = |t: f64| !(400.0..600.0).contains(&t);
        let iv = scan_intervals(0.0, 1000.0, &EventOptions::default(), pred);
        assert_eq!(iv.len(), 2);
        assert_eq!(iv[0].0, 0.0);
        assert_eq!(iv[1].1, 1000.0);
    }

    #[test]
    fn constant_predicates() {
        let opts = EventOptions::default();
        assert_eq!(scan_intervals(0.0, 500.0, &opts, |_| false), vec![]);
        assert_eq!(scan_intervals(0.0, 500.0, &opts, |_| true), vec![(0.0, 500.0)]);
    }

    #[test]
    fn boundaries_refined_below_tolerance() {
        let edge = 333.337_777f64;
        let iv = scan_intervals(0.0, 1000.0, &EventOptions::default(), |t| t < edge);
        assert_eq!(iv.len(), 1);
        assert!((iv[0].1 - edge).abs() < 1e-3);
    }
}
