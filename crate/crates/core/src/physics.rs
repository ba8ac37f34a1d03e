//! Laser energy density and radiation pressure at a scanned point.
//!
//! Functions here take and return SI quantities (W, m², Pa, W/m²). The
//! millimetre units used in configuration and reports are converted in
//! [`units`] only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::LaserSpec;
use crate::scalar::Real;

pub mod units {
    use crate::scalar::Real;

    const MM2_PER_M2: f64 = 1e6;

    pub fn mm2_to_m2<T: Real>(a: T) -> T {
        a / T::lit(MM2_PER_M2)
    }

    pub fn m2_to_mm2<T: Real>(a: T) -> T {
        a * T::lit(MM2_PER_M2)
    }

    pub fn w_per_m2_to_w_per_mm2<T: Real>(e: T) -> T {
        e / T::lit(MM2_PER_M2)
    }

    pub fn w_per_mm2_to_w_per_m2<T: Real>(e: T) -> T {
        e * T::lit(MM2_PER_M2)
    }
}

pub const PLANCK_H: f64 = 6.626_070_15e-34;
pub const LIGHT_SPEED_C: f64 = 2.997_924_58e8;

/// Default reference spot: a 50 µm diameter disc, in mm².
pub fn default_spot_area_mm2() -> f64 {
    std::f64::consts::PI * 0.025 * 0.025
}

pub const DEFAULT_POWER_W: f64 = 160.0;
pub const DEFAULT_WAVELENGTH_M: f64 = 1.07e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants<T> {
    pub planck_h: T,
    pub light_speed_c: T,
}

impl<T: Real> Default for PhysicalConstants<T> {
    fn default() -> Self {
        Self {
            planck_h: T::lit(PLANCK_H),
            light_speed_c: T::lit(LIGHT_SPEED_C),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonBudget<T> {
    pub photon_energy_j: T,
    pub photon_momentum: T,
    pub photons_per_second: T,
    pub total_force_n: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiationPressure<T> {
    pub absolute: T,
    pub vertical: T,
    pub horizontal: T,
}

fn check_angle<T: Real>(theta: T) -> Result<()> {
    if !(theta >= T::zero() && theta < T::lit(std::f64::consts::FRAC_PI_2)) {
        return Err(Error::GrazingIncidence {
            theta: theta.to_f64_lossy(),
        });
    }
    Ok(())
}

fn check_positive<T: Real>(v: T, name: &str) -> Result<()> {
    if !(v > T::zero()) || !v.is_finite() {
        return Err(Error::InvalidParameter(format!("{name} must be positive and finite")));
    }
    Ok(())
}

/// Beam footprint area at incidence `theta`: `s0 / cos(theta)`.
pub fn projection_area<T: Real>(s0: T, theta: T) -> Result<T> {
    check_angle(theta)?;
    check_positive(s0, "s0")?;
    Ok(s0 / theta.cos())
}

/// Average power intensity over the footprint, `w0 cos(theta) / s0`.
pub fn energy_density<T: Real>(w0: T, s0: T, theta: T) -> Result<T> {
    check_angle(theta)?;
    check_positive(s0, "s0")?;
    check_positive(w0, "w0")?;
    Ok(w0 * theta.cos() / s0)
}

pub fn photon_budget<T: Real>(w0: T, wavelength: T, constants: &PhysicalConstants<T>) -> Result<PhotonBudget<T>> {
    check_positive(w0, "w0")?;
    check_positive(wavelength, "wavelength")?;
    let hc = constants.planck_h * constants.light_speed_c;
    Ok(PhotonBudget {
        photon_energy_j: hc / wavelength,
        photon_momentum: constants.planck_h / wavelength,
        photons_per_second: w0 * wavelength / hc,
        // N p0 collapses to w0 / c
        total_force_n: w0 / constants.light_speed_c,
    })
}

pub fn radiation_pressure<T: Real>(
    w0: T,
    s0: T,
    theta: T,
    constants: &PhysicalConstants<T>,
) -> Result<RadiationPressure<T>> {
    check_angle(theta)?;
    check_positive(s0, "s0")?;
    check_positive(w0, "w0")?;
    let (sin, cos) = theta.sin_cos();
    let absolute = w0 / (constants.light_speed_c * s0) * cos;
    Ok(RadiationPressure {
        absolute,
        vertical: absolute * cos,
        horizontal: absolute * sin,
    })
}

/// Physical effects at one scanned point, in reporting units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointEffects<T> {
    pub projection_area_mm2: T,
    pub power_intensity_w_mm2: T,
    pub radiation_pressure_pa: T,
    pub vertical_pressure_pa: T,
    pub horizontal_pressure_pa: T,
    pub incident_angle: T,
}

impl<T: Real> PointEffects<T> {
    pub fn evaluate(
        power_w: T,
        spot_area_mm2: T,
        theta: T,
        constants: &PhysicalConstants<T>,
    ) -> Result<Self> {
        let s0 = units::mm2_to_m2(spot_area_mm2);
        let s1 = projection_area(s0, theta)?;
        let e = energy_density(power_w, s0, theta)?;
        let p = radiation_pressure(power_w, s0, theta, constants)?;
        Ok(Self {
            projection_area_mm2: units::m2_to_mm2(s1),
            power_intensity_w_mm2: units::w_per_m2_to_w_per_mm2(e),
            radiation_pressure_pa: p.absolute,
            vertical_pressure_pa: p.vertical,
            horizontal_pressure_pa: p.horizontal,
            incident_angle: theta,
        })
    }

    pub fn for_laser(laser: &LaserSpec<T>, theta: T, constants: &PhysicalConstants<T>) -> Result<Self> {
        Self::evaluate(laser.power_w, laser.spot_area_mm2, theta, constants)
    }
}
