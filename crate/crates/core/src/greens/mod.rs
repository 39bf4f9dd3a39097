//! Scattered dyadic Green function of the plasma half-space at coincident
//! points, for a vertical dipole at height z0.
//!
//! Convention: E = i w mu0 \int G . J, so the vacuum part has
//! Im G_zz = k/(6 pi). Only the reflected part is returned.

mod fresnel;
mod gyrotropic;
mod lorentzian;
mod quasistatic;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::material::MaterialConfig;
use crate::quad::Tolerance;

pub use fresnel::{fresnel_rp, sommerfeld_isotropic};
pub use gyrotropic::{reflection_zz, sommerfeld_gyrotropic, GyroOptions};
pub use lorentzian::LorentzianModel;
pub use quasistatic::{mean_image_factor, quasistatic_gzz};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GreensBackend {
    Sommerfeld,
    Quasistatic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy)]
pub struct GreensSample {
    /// zz element of the scattered Green function (units w_p/c).
    pub g_zz: Complex64,
    /// d/dz of the first argument at the source point.
    pub d_dz_g_zz: Complex64,
    /// d/dx and d/dy of the first argument (nonzero only without azimuthal symmetry).
    pub d_dx_g_zz: Complex64,
    pub d_dy_g_zz: Complex64,
    pub error: f64,
    pub backend: GreensBackend,
}

impl GreensSample {
    fn zero(backend: GreensBackend) -> Self {
        let z = Complex64::new(0.0, 0.0);
        GreensSample { g_zz: z, d_dz_g_zz: z, d_dx_g_zz: z, d_dy_g_zz: z, error: 0.0, backend }
    }
}

/// Knobs for the spectral integrals.
#[derive(Debug, Clone, Copy)]
pub struct GreensOptions {
    pub tol: Tolerance,
    pub gyro: GyroOptions,
    /// Use the boundary-matching solver even for a reciprocal material.
    pub force_boundary_matching: bool,
}

impl Default for GreensOptions {
    fn default() -> Self {
        GreensOptions {
            tol: Tolerance { abs: 1e-300, rel: 1e-11, max_intervals: 4000 },
            gyro: GyroOptions::default(),
            force_boundary_matching: false,
        }
    }
}

pub fn scattered_gzz(
    z0: f64,
    omega: f64,
    material: &MaterialConfig,
    backend: GreensBackend,
) -> Result<GreensSample> {
    scattered_gzz_with(z0, omega, material, backend, &GreensOptions::default())
}

pub fn scattered_gzz_with(
    z0: f64,
    omega: f64,
    material: &MaterialConfig,
    backend: GreensBackend,
    opts: &GreensOptions,
) -> Result<GreensSample> {
    if !(z0 > 0.0) || !(omega > 0.0) {
        return Err(Error::Domain(format!("scattered_gzz needs z0 > 0 and omega > 0 (z0 = {z0}, omega = {omega})")));
    }
    if material.is_reflectionless() {
        return Ok(GreensSample::zero(backend));
    }
    match backend {
        GreensBackend::Quasistatic => quasistatic_gzz(z0, Complex64::new(omega, 0.0), material),
        GreensBackend::Sommerfeld => {
            if material.is_reciprocal() && !opts.force_boundary_matching {
                sommerfeld_isotropic(z0, omega, material, opts.tol)
            } else {
                sommerfeld_gyrotropic(z0, omega, material, opts.tol, &opts.gyro)
            }
        }
    }
}

/// Imaginary-part derivative weight entering the force: Im dG/dz for the
/// vertical axis and Re dG/dx_alpha for the lateral axes (the lateral branch
/// carries an extra -i that the force assembly applies).
pub fn d_alpha_force_weight(
    z0: f64,
    omega: f64,
    material: &MaterialConfig,
    backend: GreensBackend,
    axis: Axis,
) -> Result<f64> {
    let s = scattered_gzz(z0, omega, material, backend)?;
    Ok(match axis {
        Axis::Z => s.d_dz_g_zz.im,
        Axis::X => s.d_dx_g_zz.re,
        Axis::Y => s.d_dy_g_zz.re,
    })
}

/// Same quantity as the vertical branch of [`d_alpha_force_weight`], from a
/// fourth-order central difference of Im G(z0, z0) in the height. The
/// coincident-point derivative acts on both arguments, hence the factor 1/2.
pub fn d_z_force_weight_fd(z0: f64, omega: f64, material: &MaterialConfig, backend: GreensBackend, rel_step: f64) -> Result<f64> {
    let h = rel_step * z0;
    let opts = GreensOptions {
        tol: Tolerance { abs: 1e-300, rel: 1e-13, max_intervals: 8000 },
        ..GreensOptions::default()
    };
    let f = |z: f64| -> Result<f64> { Ok(scattered_gzz_with(z, omega, material, backend, &opts)?.g_zz.im) };
    let d = (f(z0 - 2.0 * h)? - 8.0 * f(z0 - h)? + 8.0 * f(z0 + h)? - f(z0 + 2.0 * h)?) / (12.0 * h);
    Ok(0.5 * d)
}

/// Principal square root with the branch Im >= 0 (outgoing or decaying).
pub(crate) fn sqrt_upper(z: Complex64) -> Complex64 {
    let s = z.sqrt();
    if s.im < 0.0 || (s.im == 0.0 && s.re < 0.0) {
        -s
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflectionless_is_zero() {
        let m = MaterialConfig { omega_p: 0.0, gamma_c: 1e-3, omega_c: 0.0 };
        for b in [GreensBackend::Sommerfeld, GreensBackend::Quasistatic] {
            let s = scattered_gzz(0.3, 0.65, &m, b).unwrap();
            assert_eq!(s.g_zz, Complex64::new(0.0, 0.0));
            assert_eq!(d_alpha_force_weight(0.3, 0.65, &m, b, Axis::Z).unwrap(), 0.0);
        }
    }

    #[test]
    fn derivative_paths_agree() {
        let m = MaterialConfig::default();
        for (z0, w) in [(0.7, 0.65), (0.1, 0.7), (0.3, 1.4)] {
            let a = d_alpha_force_weight(z0, w, &m, GreensBackend::Sommerfeld, Axis::Z).unwrap();
            let f = d_z_force_weight_fd(z0, w, &m, GreensBackend::Sommerfeld, 1e-3).unwrap();
            assert!(((a - f) / a).abs() < 1e-6, "z0 = {z0}, w = {w}: {a} vs {f}");
        }
    }

    #[test]
    fn sqrt_branch() {
        let s = sqrt_upper(Complex64::new(-4.0, -1e-20));
        assert!(s.im > 0.0);
    }
}
