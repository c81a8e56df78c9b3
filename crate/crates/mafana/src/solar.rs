//! Solar geometry and tilted-surface irradiance.
//!
//! Position comes from the usual declination/hour-angle spherical
//! trigonometry with an equation-of-time correction; tilted irradiance uses
//! the isotropic-sky model with the direct normal component reconstructed
//! from global and diffuse horizontal values.

use chrono::{Datelike, NaiveDateTime, Timelike};

use crate::weather::{SiteInfo, WeatherRecord};

/// Solar constant, W/m2.
pub const SOLAR_CONSTANT: f64 = 1367.0;

/// Below this solar altitude (degrees) the beam component is forced to
/// zero: the 1/sin(altitude) reconstruction of direct normal irradiance
/// blows up near the horizon.
pub const MIN_BEAM_ALTITUDE_DEG: f64 = 2.0;

/// Sun position in the local horizontal frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolarPosition {
    /// Degrees above the horizon; negative at night.
    pub altitude: f64,
    /// Degrees clockwise from north, in [0, 360).
    pub azimuth: f64,
}

/// Irradiance components on a tilted surface, all W/m2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceIrradiance {
    pub beam: f64,
    pub sky_diffuse: f64,
    pub ground_reflected: f64,
    pub total: f64,
}

impl SurfaceIrradiance {
    pub const ZERO: SurfaceIrradiance = SurfaceIrradiance {
        beam: 0.0,
        sky_diffuse: 0.0,
        ground_reflected: 0.0,
        total: 0.0,
    };
}

/// Solar declination in degrees for a (fractional) day of year.
pub fn declination(day_of_year: f64) -> f64 {
    23.45 * (2.0 * std::f64::consts::PI * (284.0 + day_of_year) / 365.0).sin()
}

/// Equation of time in minutes for a (fractional) day of year.
pub fn equation_of_time(day_of_year: f64) -> f64 {
    let b = 2.0 * std::f64::consts::PI * (day_of_year - 81.0) / 364.0;
    9.87 * (2.0 * b).sin() - 7.53 * b.cos() - 1.5 * b.sin()
}

/// Extraterrestrial normal irradiance for a (fractional) day of year, W/m2.
pub fn extraterrestrial_normal(day_of_year: f64) -> f64 {
    SOLAR_CONSTANT * (1.0 + 0.033 * (2.0 * std::f64::consts::PI * day_of_year / 365.0).cos())
}

/// Computes the sun's altitude and azimuth for a local civil timestamp.
pub fn solar_position(site: &SiteInfo, timestamp: NaiveDateTime) -> SolarPosition {
    let doy = timestamp.ordinal() as f64;
    let clock_hours = timestamp.hour() as f64 + timestamp.minute() as f64 / 60.0;
    // Local solar time: shift by longitude offset from the time-zone
    // meridian (4 min per degree) plus the equation of time.
    let meridian = 15.0 * site.utc_offset;
    let solar_hours = clock_hours + (4.0 * (site.longitude - meridian) + equation_of_time(doy)) / 60.0;
    let hour_angle = (15.0 * (solar_hours - 12.0)).to_radians();

    let phi = site.latitude.to_radians();
    let delta = declination(doy).to_radians();
    let sin_alt = phi.sin() * delta.sin() + phi.cos() * delta.cos() * hour_angle.cos();
    let altitude = sin_alt.clamp(-1.0, 1.0).asin();

    let cos_alt = altitude.cos();
    let azimuth = if cos_alt.abs() < 1e-9 {
        0.0 // sun at zenith/nadir: azimuth is arbitrary
    } else {
        let cos_az = ((delta.sin() - sin_alt * phi.sin()) / (cos_alt * phi.cos())).clamp(-1.0, 1.0);
        let az = cos_az.acos().to_degrees();
        if hour_angle > 0.0 {
            (360.0 - az) % 360.0
        } else {
            az
        }
    };
    SolarPosition {
        altitude: altitude.to_degrees(),
        azimuth,
    }
}

/// Cosine of the incidence angle between the sun and a surface normal.
///
/// `tilt` is the angle between the outward normal and the zenith (wall 90,
/// horizontal roof 0); `surface_azimuth` is the normal's compass direction.
pub fn incidence_cosine(pos: &SolarPosition, tilt: f64, surface_azimuth: f64) -> f64 {
    let alt = pos.altitude.to_radians();
    let beta = tilt.to_radians();
    let gamma = (pos.azimuth - surface_azimuth).to_radians();
    beta.cos() * alt.sin() + beta.sin() * alt.cos() * gamma.cos()
}

/// Isotropic-sky irradiance on a tilted surface.
///
/// Direct normal irradiance is reconstructed as `(ghi - dhi)/sin(altitude)`
/// and clamped to be non-negative; below [`MIN_BEAM_ALTITUDE_DEG`] the beam
/// is suppressed entirely. Sky diffuse and ground reflected use the usual
/// `(1 +- cos tilt)/2` view factors.
pub fn tilt_irradiance(
    record: &WeatherRecord,
    pos: &SolarPosition,
    tilt: f64,
    surface_azimuth: f64,
    albedo: f64,
) -> SurfaceIrradiance {
    debug_assert!((0.0..=180.0).contains(&tilt));
    let ghi = record.global_horizontal.max(0.0);
    let dhi = record.diffuse_horizontal.max(0.0);
    let beam = if pos.altitude <= MIN_BEAM_ALTITUDE_DEG {
        0.0
    } else {
        let dni = ((ghi - dhi) / pos.altitude.to_radians().sin()).max(0.0);
        dni * incidence_cosine(pos, tilt, surface_azimuth).max(0.0)
    };
    let cos_tilt = tilt.to_radians().cos();
    let sky_diffuse = dhi * (1.0 + cos_tilt) / 2.0;
    let ground_reflected = ghi * albedo * (1.0 - cos_tilt) / 2.0;
    SurfaceIrradiance {
        beam,
        sky_diffuse,
        ground_reflected,
        total: beam + sky_diffuse + ground_reflected,
    }
}
