//! Sunlight/eclipse timelines under a cylindrical Earth-shadow model.

use serde::{Deserialize, Serialize};

use crate::scalar::{real, Real};

use super::events::{scan_intervals, EventOptions};
use super::sun::SunModel;
use super::{propagate, OrbitSpec, OrbitalError, Vec3, EARTH_RADIUS_M};

/// One sunlight-then-eclipse period.
///
/// Sunlight spans `[sunlight_start, eclipse_start]`, eclipse spans
/// `[eclipse_start, next_sunlight_start]`. Either part may be empty at the
/// horizon edges: a horizon that opens in shadow yields a zero-length
/// sunlight part in the first period, and a horizon that closes in sunlight
/// yields a zero-length eclipse part in the last.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SunPeriod<T> {
    pub sunlight_start_s: T,
    pub eclipse_start_s: T,
    pub next_sunlight_start_s: T,
}

impl<T: Real> SunPeriod<T> {
    pub fn sunlight_len_s(&self) -> T {
        self.eclipse_start_s - self.sunlight_start_s
    }

    pub fn eclipse_len_s(&self) -> T {
        self.next_sunlight_start_s - self.eclipse_start_s
    }
}

/// Alternating sunlight/eclipse periods tiling a time horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SunEclipseTimeline<T> {
    pub start_s: T,
    pub end_s: T,
    pub periods: Vec<SunPeriod<T>>,
}

impl<T: Real> SunEclipseTimeline<T> {
    /// Number of periods `J` (at least 1 for a non-empty horizon).
    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }

    /// Panics if the tiling structure is broken; used by tests and after
    /// construction in debug builds.
    pub fn check_tiling(&self) {
        assert!(!self.periods.is_empty(), "timeline must hold at least one period");
        assert_eq!(self.periods[0].sunlight_start_s, self.start_s);
        let mut prev_end = self.start_s;
        for (j, p) in self.periods.iter().enumerate() {
            assert_eq!(p.sunlight_start_s, prev_end, "gap before period {j}");
            assert!(p.eclipse_start_s >= p.sunlight_start_s, "negative sunlight in period {j}");
            assert!(p.next_sunlight_start_s >= p.eclipse_start_s, "negative eclipse in period {j}");
            prev_end = p.next_sunlight_start_s;
        }
        assert_eq!(prev_end, self.end_s, "timeline does not reach the horizon end");
    }

    /// Restriction of the timeline to `[t0, t1]`, which must lie inside the
    /// original horizon. Edge periods are truncated; fully clipped periods
    /// are dropped.
    pub fn slice(&self, t0: T, t1: T) -> Result<Self, OrbitalError> {
        if !(t0 < t1 && t0 >= self.start_s && t1 <= self.end_s) {
            return Err(OrbitalError::EmptyHorizon {
                start: t0.to_f64().unwrap_or(f64::NAN),
                end: t1.to_f64().unwrap_or(f64::NAN),
            });
        }
        let clamp = |v: T| v.max(t0).min(t1);
        let mut periods: Vec<SunPeriod<T>> = Vec::new();
        for p in &self.periods {
            if p.next_sunlight_start_s <= t0 || p.sunlight_start_s >= t1 {
                continue;
            }
            periods.push(SunPeriod {
                sunlight_start_s: clamp(p.sunlight_start_s),
                eclipse_start_s: clamp(p.eclipse_start_s),
                next_sunlight_start_s: clamp(p.next_sunlight_start_s),
            });
        }
        // A slice landing exactly on a period boundary can produce an empty
        // leading/trailing record; drop zero-width periods unless they are
        // all we have.
        periods.retain(|p| p.next_sunlight_start_s > p.sunlight_start_s);
        if periods.is_empty() {
            periods.push(SunPeriod { sunlight_start_s: t0, eclipse_start_s: t1, next_sunlight_start_s: t1 });
        }
        periods[0].sunlight_start_s = t0;
        if let Some(last) = periods.last_mut() {
            last.next_sunlight_start_s = t1;
            last.eclipse_start_s = last.eclipse_start_s.min(t1);
        }
        let out = Self { start_s: t0, end_s: t1, periods };
        out.check_tiling();
        Ok(out)
    }

    /// Total eclipse time, seconds.
    pub fn total_eclipse_s(&self) -> T {
        self.periods.iter().map(|p| p.eclipse_len_s()).sum()
    }

    /// Total sunlight time, seconds.
    pub fn total_sunlight_s(&self) -> T {
        self.periods.iter().map(|p| p.sunlight_len_s()).sum()
    }
}

/// True when the satellite position is inside the cylindrical umbra: on the
/// anti-Sun side and within one Earth radius of the shadow axis.
pub(crate) fn in_shadow<T: Real>(pos: Vec3<T>, sun_dir: Vec3<T>) -> bool {
    let along = pos.dot(sun_dir);
    if along >= T::zero() {
        return false;
    }
    let perp_sq = pos.dot(pos) - along * along;
    let r = real::<T>(EARTH_RADIUS_M);
    perp_sq < r * r
}

/// Sunlight/eclipse timeline of one satellite over `[t0, t1]`.
pub fn sun_eclipse_timeline<T: Real>(
    spec: &OrbitSpec<T>,
    sun: &SunModel<T>,
    t0_s: T,
    t1_s: T,
    opts: &EventOptions<T>,
) -> Result<SunEclipseTimeline<T>, OrbitalError> {
    if !(t1_s > t0_s) {
        return Err(OrbitalError::EmptyHorizon {
            start: t0_s.to_f64().unwrap_or(f64::NAN),
            end: t1_s.to_f64().unwrap_or(f64::NAN),
        });
    }
    let sunlit = |t: T| !in_shadow(propagate(spec, t), sun.direction(t));
    let sun_intervals = scan_intervals(t0_s, t1_s, opts, sunlit);

    // Fold sunlight intervals into (sunlight, eclipse) periods. Gaps before
    // the first interval and between intervals are eclipse; a gap at the
    // start becomes a zero-length sunlight part so the tiling still opens
    // at t0.
    let mut periods: Vec<SunPeriod<T>> = Vec::new();
    let mut cursor = t0_s;
    for (s, e) in &sun_intervals {
        if *s > cursor {
            // Horizon opens in eclipse (or numerical sliver): attach the
            // leading eclipse to an empty sunlight part.
            periods.push(SunPeriod {
                sunlight_start_s: cursor,
                eclipse_start_s: cursor,
                next_sunlight_start_s: *s,
            });
        }
        periods.push(SunPeriod { sunlight_start_s: *s, eclipse_start_s: *e, next_sunlight_start_s: *e });
        cursor = *e;
    }
    if periods.is_empty() {
        // Never sunlit over the horizon: single all-eclipse period.
        periods.push(SunPeriod { sunlight_start_s: t0_s, eclipse_start_s: t0_s, next_sunlight_start_s: t1_s });
    }
    // Each sunlight interval currently ends its own period; extend each
    // period's eclipse to the start of the next sunlight interval.
    let n = periods.len();
    for i in 0..n {
        let next_start =
            if i + 1 < n { periods[i + 1].sunlight_start_s } else { t1_s };
        if periods[i].next_sunlight_start_s == periods[i].eclipse_start_s
            || periods[i].next_sunlight_start_s < next_start
        {
            periods[i].next_sunlight_start_s = next_start;
        }
    }
    // Merge the artificial split produced when a leading eclipse period is
    // followed immediately by sunlight (the zero-length-sunlight period
    // already carries that eclipse, so nothing to merge) — but drop any
    // zero-width periods that can appear when intervals touch.
    periods.retain(|p| p.next_sunlight_start_s > p.sunlight_start_s);
    if periods.is_empty() {
        periods.push(SunPeriod { sunlight_start_s: t0_s, eclipse_start_s: t0_s, next_sunlight_start_s: t1_s });
    }
    periods[0].sunlight_start_s = t0_s;
    if let Some(last) = periods.last_mut() {
        last.next_sunlight_start_s = t1_s;
    }

    let tl = SunEclipseTimeline { start_s: t0_s, end_s: t1_s, periods };
    tl.check_tiling();
    Ok(tl)
}
