use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Single-pole model reservoir:
/// J(w) = (g^2/pi) lambda / ((w - wc)^2 + lambda^2) for w > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianModel {
    pub g_rabi: f64,
    pub lambda: f64,
    pub omega_center: f64,
}

impl LorentzianModel {
    pub fn new(g_rabi: f64, lambda: f64, omega_center: f64) -> Result<Self> {
        if !(g_rabi > 0.0) || !(lambda > 0.0) || !(omega_center > 0.0) {
            return Err(Error::Config(format!(
                "Lorentzian model needs positive parameters (g = {g_rabi}, lambda = {lambda}, center = {omega_center})"
            )));
        }
        Ok(LorentzianModel { g_rabi, lambda, omega_center })
    }

    pub fn j(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            return 0.0;
        }
        let d = omega - self.omega_center;
        self.g_rabi * self.g_rabi / PI * self.lambda / (d * d + self.lambda * self.lambda)
    }

    /// Function analytic in the upper half plane whose imaginary part on the
    /// real axis is J.
    pub fn continuation(&self, omega: Complex64) -> Complex64 {
        -(self.g_rabi * self.g_rabi / PI) / (omega - self.omega_center + Complex64::new(0.0, self.lambda))
    }

    /// Exact integral of J over [a, b] (0 <= a < b).
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        let at = |x: f64| ((x - self.omega_center) / self.lambda).atan();
        self.g_rabi * self.g_rabi / PI * (at(b) - at(a.max(0.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_and_peak() {
        let m = LorentzianModel::new(0.2, 1e-6, 0.65).unwrap();
        let total = m.mass(0.0, 1e9);
        assert!((total / 0.04 - 1.0).abs() < 1e-6);
        assert!(m.j(0.65) > m.j(0.650001) && m.j(0.65) > m.j(0.649999));
    }

    #[test]
    fn broad_width_rate() {
        let g = 0.1;
        for lam in [10.0, 100.0] {
            let m = LorentzianModel::new(g, lam, 0.65).unwrap();
            let rate = 2.0 * PI * m.j(0.65);
            assert!((rate - 2.0 * g * g / lam).abs() < 1e-15);
        }
    }

    #[test]
    fn continuation_imag_is_j() {
        let m = LorentzianModel::new(0.3, 0.05, 0.7).unwrap();
        for w in [0.2, 0.7, 1.9] {
            assert!((m.continuation(Complex64::new(w, 0.0)).im - m.j(w)).abs() < 1e-14);
        }
    }
}
