use num_complex::Complex64;
use std::f64::consts::PI;

use super::{GreensBackend, GreensSample};
use crate::error::Result;
use crate::material::{permittivity, MaterialConfig, PermittivityTensor};
use crate::quad::{integrate1, Tolerance};

/// Azimuthal average of the electrostatic image factor (eps_eff - 1)/(eps_eff + 1).
///
/// For the magnetized plasma the potential inside decays as
/// exp(kappa z) with kappa = sqrt(kx^2 + (eps_a/eps_t) ky^2), and the normal
/// displacement gives eps_eff kr = eps_t kappa + eps_g kx.
pub fn mean_image_factor(e: &PermittivityTensor) -> Result<Complex64> {
    if e.eps_g.norm() == 0.0 && (e.eps_a - e.eps_t).norm() == 0.0 {
        return Ok((e.eps_t - 1.0) / (e.eps_t + 1.0));
    }
    let ratio = e.eps_a / e.eps_t;
    let r = |phi: f64| {
        let (s, c) = phi.sin_cos();
        let mut kappa = (c * c + ratio * s * s).sqrt();
        if kappa.re < 0.0 {
            kappa = -kappa;
        }
        let eff = e.eps_t * kappa + e.eps_g * c;
        (eff - 1.0) / (eff + 1.0)
    };
    let tol = Tolerance { abs: 1e-300, rel: 1e-12, max_intervals: 4000 };
    let (v, _) = integrate1(r, 0.0, 2.0 * PI, &[0.5 * PI, PI, 1.5 * PI], tol)?;
    Ok(v / (2.0 * PI))
}

/// Near-field image expression, valid for complex frequency:
/// G = <R> / (16 pi k0^2 z0^3).
pub fn quasistatic_gzz(z0: f64, omega: Complex64, m: &MaterialConfig) -> Result<GreensSample> {
    let e = permittivity(m, omega)?;
    let rbar = mean_image_factor(&e)?;
    let g = rbar / (16.0 * PI * omega * omega * z0.powi(3));
    let zero = Complex64::new(0.0, 0.0);
    Ok(GreensSample {
        g_zz: g,
        d_dz_g_zz: -1.5 * g / z0,
        d_dx_g_zz: zero,
        d_dy_g_zz: zero,
        error: 0.0,
        backend: GreensBackend::Quasistatic,
    })
}
