//! Sun direction models.

use serde::{Deserialize, Serialize};

use crate::scalar::{real, Real};

use super::Vec3;

/// Mean length of a year, seconds (365.25 days).
pub const YEAR_S: f64 = 365.25 * 86_400.0;
/// Default obliquity of the ecliptic, degrees.
pub const OBLIQUITY_DEG: f64 = 23.44;

/// Direction from the Earth to the Sun, unit vector in the inertial frame.
///
/// `Fixed` pins the direction (useful for tests with exact shadow
/// geometry); `Circular` moves the Sun on a circular ecliptic inclined by
/// the obliquity, with `+x` pointing at the Sun when the longitude is zero.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum SunModel<T> {
    Fixed(Vec3<T>),
    Circular {
        initial_longitude_rad: T,
        obliquity_rad: T,
        /// Angular rate along the ecliptic, rad/s.
        rate_rad_s: T,
    },
}

impl<T: Real> SunModel<T> {
    /// Circular model with the default year length and obliquity.
    pub fn circular(initial_longitude_rad: T) -> Self {
        SunModel::Circular {
            initial_longitude_rad,
            obliquity_rad: real::<T>(OBLIQUITY_DEG).to_radians(),
            rate_rad_s: real::<T>(2.0) * T::PI() / real::<T>(YEAR_S),
        }
    }

    pub fn direction(&self, t_s: T) -> Vec3<T> {
        match *self {
            SunModel::Fixed(v) => v.normalized(),
            SunModel::Circular { initial_longitude_rad, obliquity_rad, rate_rad_s } => {
                let lon = initial_longitude_rad + rate_rad_s * t_s;
                let (sl, cl) = lon.sin_cos();
                let (se, ce) = obliquity_rad.sin_cos();
                Vec3::new(cl, sl * ce, sl * se)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circular_sun_is_unit_and_starts_along_x() {
        let sun = SunModel::<f64>::circular(0.0);
        let d0 = sun.direction(0.0);
        assert!((d0.x - 1.0).abs() < 1e-12 && d0.y.abs() < 1e-12 && d0.z.abs() < 1e-12);
        for t in [0.0, 1e6, 2e7, 1.5e7] {
            assert!((sun.direction(t).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn circular_sun_returns_after_a_year() {
        let sun = SunModel::<f64>::circular(0.3);
        let a = sun.direction(0.0);
        let b = sun.direction(YEAR_S);
        assert!(a.sub(b).norm() < 1e-9);
    }

    #[test]
    fn obliquity_tilts_the_summer_direction() {
        let sun = SunModel::<f64>::circular(0.0);
        // Quarter year after longitude 0 the Sun is at its highest declination.
        let d = sun.direction(YEAR_S / 4.0);
        let decl = d.z.asin().to_degrees();
        assert!((decl - OBLIQUITY_DEG).abs() < 1e-6, "declination {decl}");
    }
}
