//! LEO coverage-time geometry.
//!
//! A satellite passing over a vehicle stays visible while the earth central
//! angle between the sub-satellite point and the vehicle is below `theta_0`,
//! the angle at which the satellite sits at the minimum elevation. The
//! coverage time of a pass follows from the closest approach `theta_m` of
//! the ground trace and the relative angular velocity of the satellite.
//!
//! All angles are radians.

use crate::error::{Error, Result};

/// Standard gravitational parameter of the Earth, km^3/s^2.
pub const EARTH_MU_KM3_S2: f64 = 398600.4418;
pub const EARTH_RADIUS_KM: f64 = 6371.0;
pub const EARTH_ROTATION_RAD_S: f64 = 7.2921e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitParams {
    pub altitude_km: f64,
    pub earth_radius_km: f64,
    pub min_elevation: f64,
    pub sat_angular_velocity: f64,
    pub earth_angular_velocity: f64,
    pub inclination: f64,
    /// Closest angular distance between the ground trace and the vehicle.
    pub theta_m: f64,
}

impl OrbitParams {
    /// Circular orbit at `altitude_km` with the Kepler angular velocity and
    /// the vehicle directly under the ground trace.
    pub fn circular(altitude_km: f64, min_elevation: f64, inclination: f64) -> Self {
        OrbitParams {
            altitude_km,
            earth_radius_km: EARTH_RADIUS_KM,
            min_elevation,
            sat_angular_velocity: kepler_angular_velocity(EARTH_RADIUS_KM, altitude_km),
            earth_angular_velocity: EARTH_ROTATION_RAD_S,
            inclination,
            theta_m: 0.0,
        }
    }

    pub fn with_theta_m(mut self, theta_m: f64) -> Self {
        self.theta_m = theta_m;
        self
    }

    pub fn theta_0(&self) -> Result<f64> {
        earth_central_angle(self.earth_radius_km, self.altitude_km, self.min_elevation)
    }

    pub fn eta(&self) -> Result<f64> {
        relative_angular_velocity(
            self.sat_angular_velocity,
            self.earth_angular_velocity,
            self.inclination,
        )
    }
}

/// Angular velocity of a circular orbit, rad/s.
pub fn kepler_angular_velocity(earth_radius_km: f64, altitude_km: f64) -> f64 {
    let r = earth_radius_km + altitude_km;
    (EARTH_MU_KM3_S2 / (r * r * r)).sqrt()
}

/// Earth central angle `theta_0` at the minimum elevation `xi0`.
pub fn earth_central_angle(earth_radius_km: f64, altitude_km: f64, xi0: f64) -> Result<f64> {
    if !(earth_radius_km > 0.0) || !(altitude_km > 0.0) {
        return Err(Error::Domain(format!(
            "radius {earth_radius_km} km and altitude {altitude_km} km must be positive"
        )));
    }
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&xi0) {
        return Err(Error::Domain(format!(
            "minimum elevation {xi0} rad outside [0, pi/2]"
        )));
    }
    let arg = earth_radius_km / (earth_radius_km + altitude_km) * xi0.cos();
    if !(-1.0..=1.0).contains(&arg) {
        return Err(Error::Domain(format!("arccos argument {arg} outside [-1, 1]")));
    }
    // cos(pi/2) is not exactly zero in f64; clamp so theta_0 cannot go negative.
    Ok((arg.acos() - xi0).max(0.0))
}

/// Relative angular velocity `eta = (eta_m - eta_e cos i) / 2`.
pub fn relative_angular_velocity(eta_m: f64, eta_e: f64, incl: f64) -> Result<f64> {
    if !(eta_m > 0.0) {
        return Err(Error::Domain(format!(
            "satellite angular velocity {eta_m} must be positive"
        )));
    }
    let eta = (eta_m - eta_e * incl.cos()) / 2.0;
    if !(eta > 0.0) {
        return Err(Error::Domain(format!(
            "relative angular velocity {eta} is not positive"
        )));
    }
    Ok(eta)
}

/// Coverage time of one pass in seconds.
pub fn coverage_time(params: &OrbitParams) -> Result<f64> {
    let theta_0 = params.theta_0()?;
    let eta = params.eta()?;
    if params.theta_m < 0.0 {
        return Err(Error::Domain(format!(
            "theta_m {} must be non-negative",
            params.theta_m
        )));
    }
    let ratio = theta_0.cos() / params.theta_m.cos();
    if !(ratio <= 1.0) {
        return Err(Error::Domain(format!(
            "theta_m {} exceeds theta_0 {theta_0}: vehicle outside the coverage band",
            params.theta_m
        )));
    }
    Ok(ratio.acos() / eta)
}
