//! Circular-orbit geometry: propagation, eclipse timelines, ground-station
//! visibility.
//!
//! The model is deliberately small. Orbits are circular with two-body
//! dynamics in an Earth-centered inertial frame whose `z` axis is the
//! rotation axis. The Earth is a sphere, its shadow a cylinder (Sun at
//! infinity), the Sun either fixed or on a circular ecliptic, and ground
//! stations rotate uniformly at the sidereal rate. No drag, no J2, no
//! ephemerides — the point is reproducible sunlight/eclipse/visibility
//! interval structure, not flight-grade prediction.
//!
//! Distances are meters, times are seconds from the scenario epoch, angles
//! are radians unless a name says otherwise.

mod eclipse;
mod events;
mod sun;
mod visibility;

pub use eclipse::{sun_eclipse_timeline, SunEclipseTimeline, SunPeriod};
pub use events::EventOptions;
pub use sun::SunModel;
pub use visibility::{gs_visibility_windows, merge_windows, GroundStation};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{real, Real};

/// Mean Earth radius, meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;
/// Geocentric gravitational parameter, m^3/s^2.
pub const EARTH_MU_M3_S2: f64 = 3.98e14;
/// Sidereal Earth rotation rate, rad/s.
pub const EARTH_ROTATION_RAD_S: f64 = 7.292_115_9e-5;

#[derive(Debug, Error)]
pub enum OrbitalError {
    #[error("{field} must be finite and {constraint}, got {value}")]
    InvalidParameter {
        field: &'static str,
        constraint: &'static str,
        value: f64,
    },
    #[error("time horizon is empty or reversed: [{start}, {end}]")]
    EmptyHorizon { start: f64, end: f64 },
}

/// Minimal 3-vector used throughout the geometry code.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    pub fn scale(self, k: T) -> Self {
        Self::new(self.x * k, self.y * k, self.z * k)
    }

    pub fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    pub fn normalized(self) -> Self {
        self.scale(T::one() / self.norm())
    }
}

/// A circular orbit: altitude above the mean Earth radius plus the plane
/// orientation and the phase angle at the epoch.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OrbitSpec<T> {
    /// Altitude above [`EARTH_RADIUS_M`], meters. Strictly positive.
    pub altitude_m: T,
    /// Inclination, radians in `[0, pi]`.
    pub inclination_rad: T,
    /// Right ascension of the ascending node, radians.
    pub raan_rad: T,
    /// Argument of latitude at the epoch, radians.
    pub phase_rad: T,
    /// Epoch the phase refers to, seconds on the scenario time axis.
    pub epoch_s: T,
}

impl<T: Real> OrbitSpec<T> {
    pub fn new(
        altitude_m: T,
        inclination_rad: T,
        raan_rad: T,
        phase_rad: T,
        epoch_s: T,
    ) -> Result<Self, OrbitalError> {
        if !(altitude_m.is_finite() && altitude_m > T::zero()) {
            return Err(OrbitalError::InvalidParameter {
                field: "altitude_m",
                constraint: "> 0",
                value: altitude_m.to_f64().unwrap_or(f64::NAN),
            });
        }
        if !(inclination_rad.is_finite()
            && inclination_rad >= T::zero()
            && inclination_rad <= T::PI())
        {
            return Err(OrbitalError::InvalidParameter {
                field: "inclination_rad",
                constraint: "in [0, pi]",
                value: inclination_rad.to_f64().unwrap_or(f64::NAN),
            });
        }
        for (field, v) in [("raan_rad", raan_rad), ("phase_rad", phase_rad), ("epoch_s", epoch_s)] {
            if !v.is_finite() {
                return Err(OrbitalError::InvalidParameter {
                    field,
                    constraint: "finite",
                    value: v.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(Self { altitude_m, inclination_rad, raan_rad, phase_rad, epoch_s })
    }

    /// Orbit radius from the Earth center, meters.
    pub fn radius_m(&self) -> T {
        real::<T>(EARTH_RADIUS_M) + self.altitude_m
    }
}

/// Orbital period of a circular orbit, seconds: `2*pi*sqrt(o^3/mu)` with
/// `o` the orbit radius.
pub fn orbit_period<T: Real>(spec: &OrbitSpec<T>) -> T {
    let o = spec.radius_m();
    let two = real::<T>(2.0);
    two * T::PI() * (o * o * o / real::<T>(EARTH_MU_M3_S2)).sqrt()
}

/// Inertial position at time `t_s`, meters.
///
/// The in-plane position at argument of latitude `u` is rotated by the
/// inclination about the node line and by the RAAN about `z`.
pub fn propagate<T: Real>(spec: &OrbitSpec<T>, t_s: T) -> Vec3<T> {
    let n = real::<T>(2.0) * T::PI() / orbit_period(spec);
    let u = spec.phase_rad + n * (t_s - spec.epoch_s);
    let (su, cu) = u.sin_cos();
    let (si, ci) = spec.inclination_rad.sin_cos();
    let (so, co) = spec.raan_rad.sin_cos();
    let o = spec.radius_m();
    Vec3::new(
        o * (co * cu - so * su * ci),
        o * (so * cu + co * su * ci),
        o * (su * si),
    )
}

/// Uniform sidereal Earth rotation: the angle of the prime meridian past
/// the inertial `x` axis is `initial_angle + rate * t`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EarthRotation<T> {
    pub initial_angle_rad: T,
    pub rate_rad_s: T,
}

impl<T: Real> Default for EarthRotation<T> {
    fn default() -> Self {
        Self { initial_angle_rad: T::zero(), rate_rad_s: real(EARTH_ROTATION_RAD_S) }
    }
}

impl<T: Real> EarthRotation<T> {
    pub fn angle_rad(&self, t_s: T) -> T {
        self.initial_angle_rad + self.rate_rad_s * t_s
    }
}

/// A named fleet of satellites. Ids are 1-based and unique.
#[derive(Debug, Clone)]
pub struct Constellation<T> {
    pub satellites: Vec<(u32, OrbitSpec<T>)>,
}

impl<T: Real> Constellation<T> {
    pub fn from_orbits(orbits: Vec<OrbitSpec<T>>) -> Self {
        Self { satellites: orbits.into_iter().enumerate().map(|(i, o)| (i as u32 + 1, o)).collect() }
    }

    /// Walker-style shell: `planes` planes spread over `raan_spread_rad`,
    /// `per_plane` evenly phased satellites per plane, and an inter-plane
    /// phase offset of `phasing_factor * 2*pi / total`.
    pub fn walker(
        planes: usize,
        per_plane: usize,
        altitude_m: T,
        inclination_rad: T,
        raan_spread_rad: T,
        phasing_factor: u32,
        epoch_s: T,
    ) -> Result<Self, OrbitalError> {
        let total = planes * per_plane;
        let two_pi = real::<T>(2.0) * T::PI();
        let mut orbits = Vec::with_capacity(total);
        for p in 0..planes {
            let raan = raan_spread_rad * real::<T>(p as f64) / real::<T>(planes as f64);
            for m in 0..per_plane {
                let phase = two_pi * real::<T>(m as f64) / real::<T>(per_plane as f64)
                    + two_pi * real::<T>((phasing_factor as usize * p) as f64)
                        / real::<T>(total as f64);
                orbits.push(OrbitSpec::new(altitude_m, inclination_rad, raan, phase, epoch_s)?);
            }
        }
        Ok(Self::from_orbits(orbits))
    }

    pub fn len(&self) -> usize {
        self.satellites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.satellites.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leo_550<T: Real>() -> OrbitSpec<T> {
        OrbitSpec::new(real(550_000.0), T::zero(), T::zero(), T::zero(), T::zero()).unwrap()
    }

    #[test]
    fn period_of_550_km_orbit() {
        let p = orbit_period(&leo_550::<f64>());
        assert!((p - 5734.5).abs() < 0.5, "period {p}");
    }

    #[test]
    fn period_at_sea_level_radius() {
        let spec = OrbitSpec::<f64>::new(1e-6, 0.0, 0.0, 0.0, 0.0).unwrap();
        let p = orbit_period(&spec);
        assert!((p - 5064.6).abs() < 1.0, "period {p}");
    }

    #[test]
    fn doubling_radius_scales_period_by_two_sqrt_two() {
        let r = EARTH_RADIUS_M;
        let a1 = OrbitSpec::new(550_000.0, 0.3, 0.1, 0.0, 0.0).unwrap();
        let o1 = a1.radius_m();
        let a2 = OrbitSpec::new(2.0 * o1 - r, 0.3, 0.1, 0.0, 0.0).unwrap();
        let ratio = orbit_period(&a2) / orbit_period(&a1);
        assert!((ratio - 2.0 * 2.0f64.sqrt()).abs() < 1e-9, "ratio {ratio}");
    }

    #[test]
    fn period_is_monotone_in_altitude() {
        let mut prev = 0.0;
        for alt_km in [200.0, 400.0, 550.0, 800.0, 1200.0, 2000.0] {
            let spec = OrbitSpec::new(alt_km * 1000.0, 0.9, 0.0, 0.0, 0.0).unwrap();
            let p = orbit_period(&spec);
            assert!(p > prev);
            prev = p;
        }
    }

    #[test]
    fn propagation_stays_on_the_sphere_and_closes_after_one_period() {
        let spec = OrbitSpec::new(550_000.0, 0.9250245, 1.2, 0.4, 0.0).unwrap();
        let p = orbit_period(&spec);
        let start = propagate(&spec, 0.0);
        for k in 0..=20 {
            let t = p * k as f64 / 20.0;
            let pos = propagate(&spec, t);
            assert!((pos.norm() - spec.radius_m()).abs() < 1e-6);
        }
        let end = propagate(&spec, p);
        assert!(end.sub(start).norm() < 1e-5, "gap {}", end.sub(start).norm());
    }

    #[test]
    fn equatorial_orbit_stays_in_plane() {
        let spec = leo_550::<f64>();
        for t in [0.0, 977.0, 3000.5, 5000.0] {
            assert_eq!(propagate(&spec, t).z, 0.0);
        }
    }

    #[test]
    fn rejects_nonpositive_altitude() {
        assert!(OrbitSpec::new(-1.0, 0.0, 0.0, 0.0, 0.0).is_err());
        assert!(OrbitSpec::new(0.0, 0.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn walker_shell_counts_and_distinct_phases() {
        let c = Constellation::walker(4, 5, 550_000.0, 0.925, 2.0 * std::f64::consts::PI, 1, 0.0)
            .unwrap();
        assert_eq!(c.len(), 20);
        assert_eq!(c.satellites[0].0, 1);
        assert_eq!(c.satellites[19].0, 20);
        // No two satellites share an orbit slot. (Positions of different
        // planes may still cross momentarily; that is real geometry.)
        let two_pi = 2.0 * std::f64::consts::PI;
        for i in 0..c.len() {
            for j in (i + 1)..c.len() {
                let a = &c.satellites[i].1;
                let b = &c.satellites[j].1;
                let d_raan = (a.raan_rad - b.raan_rad).rem_euclid(two_pi);
                let d_phase = (a.phase_rad - b.phase_rad).rem_euclid(two_pi);
                assert!(
                    d_raan.min(two_pi - d_raan) > 1e-9 || d_phase.min(two_pi - d_phase) > 1e-9,
                    "sats {i} and {j} share raan and phase"
                );
            }
        }
    }

    #[test]
    fn f32_instantiation_is_usable() {
        let p = orbit_period(&leo_550::<f32>());
        assert!((p - 5734.5).abs() < 2.0, "f32 period {p}");
    }
}
