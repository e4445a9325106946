//! Ground-station visibility windows.

use serde::{Deserialize, Serialize};

use crate::scalar::{real, Real};

use super::events::{scan_intervals, EventOptions};
use super::{propagate, EarthRotation, OrbitSpec, OrbitalError, Vec3, EARTH_RADIUS_M};

/// A ground station on the spherical Earth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundStation<T> {
    pub name: String,
    pub latitude_rad: T,
    pub longitude_rad: T,
    /// Satellites below this elevation are not visible. Radians in
    /// `[0, pi/2)`.
    pub min_elevation_rad: T,
}

impl<T: Real> GroundStation<T> {
    pub fn new(
        name: impl Into<String>,
        latitude_rad: T,
        longitude_rad: T,
        min_elevation_rad: T,
    ) -> Result<Self, OrbitalError> {
        let half_pi = T::FRAC_PI_2();
        if !(latitude_rad.is_finite() && latitude_rad.abs() <= half_pi) {
            return Err(OrbitalError::InvalidParameter {
                field: "latitude_rad",
                constraint: "in [-pi/2, pi/2]",
                value: latitude_rad.to_f64().unwrap_or(f64::NAN),
            });
        }
        if !longitude_rad.is_finite() {
            return Err(OrbitalError::InvalidParameter {
                field: "longitude_rad",
                constraint: "finite",
                value: longitude_rad.to_f64().unwrap_or(f64::NAN),
            });
        }
        if !(min_elevation_rad.is_finite()
            && min_elevation_rad >= T::zero()
            && min_elevation_rad < half_pi)
        {
            return Err(OrbitalError::InvalidParameter {
                field: "min_elevation_rad",
                constraint: "in [0, pi/2)",
                value: min_elevation_rad.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { name: name.into(), latitude_rad, longitude_rad, min_elevation_rad })
    }

    /// Inertial station position at time `t`, meters.
    pub fn position(&self, earth: &EarthRotation<T>, t_s: T) -> Vec3<T> {
        let lon = self.longitude_rad + earth.angle_rad(t_s);
        let (slat, clat) = self.latitude_rad.sin_cos();
        let (slon, clon) = lon.sin_cos();
        Vec3::new(clat * clon, clat * slon, slat).scale(real(EARTH_RADIUS_M))
    }

    /// Sine of the satellite elevation seen from the station.
    pub fn elevation_sin(&self, earth: &EarthRotation<T>, sat_pos: Vec3<T>, t_s: T) -> T {
        let gs = self.position(earth, t_s);
        let up = gs.normalized();
        let rel = sat_pos.sub(gs);
        rel.dot(up) / rel.norm()
    }
}

/// Visibility windows of one satellite from one station over `[t0, t1]`,
/// as closed intervals in seconds.
pub fn gs_visibility_windows<T: Real>(
    spec: &OrbitSpec<T>,
    station: &GroundStation<T>,
    earth: &EarthRotation<T>,
    t0_s: T,
    t1_s: T,
    opts: &EventOptions<T>,
) -> Result<Vec<(T, T)>, OrbitalError> {
    if !(t1_s > t0_s) {
        return Err(OrbitalError::EmptyHorizon {
            start: t0_s.to_f64().unwrap_or(f64::NAN),
            end: t1_s.to_f64().unwrap_or(f64::NAN),
        });
    }
    let threshold = station.min_elevation_rad.sin();
    let visible = |t: T| station.elevation_sin(earth, propagate(spec, t), t) >= threshold;
    Ok(scan_intervals(t0_s, t1_s, opts, visible))
}

/// Union of interval collections, merged and sorted by start time.
/// Touching intervals coalesce.
pub fn merge_windows<T: Real>(collections: &[Vec<(T, T)>]) -> Vec<(T, T)> {
    let mut all: Vec<(T, T)> = collections.iter().flatten().copied().collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("window times must be comparable"));
    let mut out: Vec<(T, T)> = Vec::with_capacity(all.len());
    for (s, e) in all {
        match out.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => out.push((s, e)),
        }
    }
    out
}
