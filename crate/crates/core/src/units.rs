//! Normalized units anchored on the plasma frequency: frequency in w_p,
//! length in c/w_p, time in 1/w_p.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const C_LIGHT: f64 = 299_792_458.0;
pub const HBAR: f64 = 1.054_571_817e-34;
pub const EPS0: f64 = 8.854_187_8128e-12;

/// Default anchor: w_p = 2 pi x 200 THz.
pub const DEFAULT_PLASMA_HZ: f64 = 200e12;

/// The plasma frequency is stored as a cyclic frequency so that scenario
/// files (which quote Hz) round-trip exactly; `omega_p_si` is derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    pub plasma_hz: f64,
}

impl Default for UnitSystem {
    fn default() -> Self {
        UnitSystem { plasma_hz: DEFAULT_PLASMA_HZ }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Frequency,
    Length,
    Time,
}

impl UnitSystem {
    pub fn from_hz(plasma_hz: f64) -> Result<Self> {
        if !(plasma_hz > 0.0) || !plasma_hz.is_finite() {
            return Err(Error::Config(format!("omega_p must be positive, got {plasma_hz} Hz")));
        }
        Ok(UnitSystem { plasma_hz })
    }

    /// Plasma angular frequency in rad/s.
    pub fn omega_p_si(&self) -> f64 {
        2.0 * PI * self.plasma_hz
    }

    pub fn time_unit(&self) -> f64 {
        1.0 / self.omega_p_si()
    }

    pub fn length_unit(&self) -> f64 {
        C_LIGHT / self.omega_p_si()
    }

    fn scale(&self, q: Quantity) -> f64 {
        match q {
            Quantity::Frequency => self.omega_p_si(),
            Quantity::Length => self.length_unit(),
            Quantity::Time => self.time_unit(),
        }
    }

    pub fn to_si(&self, q: Quantity, x: f64) -> f64 {
        x * self.scale(q)
    }

    pub fn to_normalized(&self, q: Quantity, x_si: f64) -> f64 {
        x_si / self.scale(q)
    }

    /// Dimensionless dipole strength |d|^2 w_p^2 / (hbar eps0 c^3). The
    /// spectral density is J = (kappa/pi) w^2 Im G_zz in normalized units.
    pub fn kappa(&self, dipole_cm: f64) -> f64 {
        dipole_cm * dipole_cm * self.omega_p_si() * self.omega_p_si() / (HBAR * EPS0 * C_LIGHT.powi(3))
    }

    pub fn dipole_from_kappa(&self, kappa: f64) -> f64 {
        (kappa * HBAR * EPS0 * C_LIGHT.powi(3)).sqrt() / self.omega_p_si()
    }

    /// Force scale 3|d|^2/(16 pi z0^4 eps0) in newtons for a normalized height.
    pub fn force_scale_newton(&self, dipole_cm: f64, z0: f64) -> f64 {
        let z_si = self.to_si(Quantity::Length, z0);
        3.0 * dipole_cm * dipole_cm / (16.0 * PI * z_si.powi(4) * EPS0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DipoleSpec {
    /// Transition dipole magnitude in C m.
    Explicit(f64),
    /// Target coupling g, inverted at the configured height.
    TargetG(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomConfig {
    pub omega0: f64,
    pub z0: f64,
    pub dipole: DipoleSpec,
}

impl AtomConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega0 > 0.0) || !(self.z0 > 0.0) {
            return Err(Error::Config(format!(
                "omega0 and z0 must be positive (omega0 = {}, z0 = {})",
                self.omega0, self.z0
            )));
        }
        match self.dipole {
            DipoleSpec::Explicit(d) if !(d >= 0.0) => Err(Error::Config(format!("dipole_cm must be >= 0, got {d}"))),
            DipoleSpec::TargetG(g) if !(g > 0.0) => Err(Error::Config(format!("coupling_g must be > 0, got {g}"))),
            _ => Ok(()),
        }
    }

    /// Dipole magnitude in C m.
    pub fn dipole_cm(&self, units: &UnitSystem) -> Result<f64> {
        match self.dipole {
            DipoleSpec::Explicit(d) => Ok(d),
            DipoleSpec::TargetG(g) => invert_g_for_dipole(g, self.z0, self.omega0, units),
        }
    }

    pub fn kappa(&self, units: &UnitSystem) -> Result<f64> {
        Ok(units.kappa(self.dipole_cm(units)?))
    }
}

/// g = (|d| / hbar w) sqrt(hbar w / (32 pi eps0 z0^3)) with w = omega0.
pub fn compute_coupling_g(atom: &AtomConfig, units: &UnitSystem) -> Result<f64> {
    atom.validate()?;
    let d = atom.dipole_cm(units)?;
    Ok(coupling_g_from_dipole(d, atom.z0, atom.omega0, units))
}

pub fn coupling_g_from_dipole(dipole_cm: f64, z0: f64, omega0: f64, units: &UnitSystem) -> f64 {
    let w = units.to_si(Quantity::Frequency, omega0);
    let z = units.to_si(Quantity::Length, z0);
    (dipole_cm / (HBAR * w)) * (HBAR * w / (32.0 * PI * EPS0 * z.powi(3))).sqrt()
}

pub fn invert_g_for_dipole(g_target: f64, z0: f64, omega0: f64, units: &UnitSystem) -> Result<f64> {
    if !(g_target > 0.0) || !(z0 > 0.0) || !(omega0 > 0.0) {
        return Err(Error::Domain(format!("cannot invert g = {g_target} at z0 = {z0}, omega0 = {omega0}")));
    }
    let w = units.to_si(Quantity::Frequency, omega0);
    let z = units.to_si(Quantity::Length, z0);
    Ok(g_target * (32.0 * PI * EPS0 * HBAR * w * z.powi(3)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_units() {
        let u = UnitSystem::default();
        for q in [Quantity::Frequency, Quantity::Length, Quantity::Time] {
            for x in [1e-3, 0.7, 12.5] {
                let back = u.to_normalized(q, u.to_si(q, x));
                assert!((back - x).abs() <= 4.0 * f64::EPSILON * x);
            }
        }
    }

    #[test]
    fn kappa_round_trip() {
        let u = UnitSystem::default();
        let d = 3.2e-29;
        assert!((u.dipole_from_kappa(u.kappa(d)) - d).abs() < 1e-14 * d);
    }

    #[test]
    fn kappa_matches_g_relation() {
        let u = UnitSystem::default();
        let d = invert_g_for_dipole(0.044, 0.7, 0.65, &u).unwrap();
        let g2 = u.kappa(d) / (32.0 * PI * 0.65 * 0.7f64.powi(3));
        assert!((g2.sqrt() - 0.044).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_atoms() {
        let u = UnitSystem::default();
        let a = AtomConfig { omega0: 0.65, z0: -1.0, dipole: DipoleSpec::Explicit(1e-29) };
        assert!(compute_coupling_g(&a, &u).is_err());
        assert!(UnitSystem::from_hz(0.0).is_err());
    }
}
