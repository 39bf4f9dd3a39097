use num_complex::Complex64;
use std::f64::consts::PI;

use super::{sqrt_upper, GreensBackend, GreensSample};
use crate::error::Result;
use crate::material::{permittivity_real, MaterialConfig};
use crate::quad::{integrate, Tolerance};

/// p-polarized reflection coefficient of the E_z component.
pub fn fresnel_rp(eps: Complex64, kz1: Complex64, kz2: Complex64) -> Complex64 {
    (eps * kz1 - kz2) / (eps * kz1 + kz2)
}

/// The three radial moments
/// `\int kr dkr (kr^2/kz1) rho e^{2 i kz1 z0} m`, with m = 1, i kz1, i kr.
///
/// The real-kr axis is split at kr = k0: the propagating part is integrated
/// in the polar angle, the evanescent part in u = sqrt(kr^2 - k0^2). The
/// evanescent range is truncated at `max(20/z0, 10 k0)` with a closed-form
/// tail using `rho_inf`.
pub(crate) fn radial_moments<F>(
    k0: f64,
    z0: f64,
    rho: F,
    rho_inf: Complex64,
    theta_breaks: &[f64],
    u_breaks: &[f64],
    tol: Tolerance,
) -> Result<([Complex64; 3], f64)>
where
    F: Fn(f64, Complex64) -> Complex64,
{
    let i = Complex64::i();
    let prop = integrate(
        |th: f64| {
            let (s, c) = th.sin_cos();
            let kr = k0 * s;
            let kz1 = Complex64::new(k0 * c, 0.0);
            let base = k0.powi(3) * s * s * s * rho(kr, kz1) * Complex64::new(0.0, 2.0 * k0 * z0 * c).exp();
            [base, base * i * kz1, base * i * kr]
        },
        0.0,
        0.5 * PI,
        theta_breaks,
        tol,
    )?;

    let u_max = (20.0 / z0).max(10.0 * k0);
    let mut ub: Vec<f64> = u_breaks.to_vec();
    for m in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
        ub.push(m / z0);
    }
    let evan = integrate(
        |u: f64| {
            let kr = (k0 * k0 + u * u).sqrt();
            let kz1 = Complex64::new(0.0, u);
            let base = -i * (k0 * k0 + u * u) * rho(kr, kz1) * (-2.0 * u * z0).exp();
            [base, -base * u, base * i * kr]
        },
        0.0,
        u_max,
        &ub,
        tol,
    )?;

    // Closed-form tail of -i rho_inf \int_U^inf (k0^2 + u^2) u^n e^{-a u} du.
    let a = 2.0 * z0;
    let uu = u_max;
    let e = (-a * uu).exp();
    let m0 = e / a;
    let m1 = e * (uu / a + 1.0 / (a * a));
    let m2 = e * (uu * uu / a + 2.0 * uu / (a * a) + 2.0 / a.powi(3));
    let m3 = e * (uu.powi(3) / a + 3.0 * uu * uu / (a * a) + 6.0 * uu / a.powi(3) + 6.0 / a.powi(4));
    let t_base = -i * rho_inf * (k0 * k0 * m0 + m2);
    let t_dz = i * rho_inf * (k0 * k0 * m1 + m3);
    let t_lat = -i * rho_inf * i * (k0 * k0 * m1 + m3);

    let tails = [t_base, t_dz, t_lat];
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for n in 0..3 {
        out[n] = prop.value[n] + evan.value[n] + tails[n];
    }
    let err = prop.error.iter().chain(evan.error.iter()).copied().fold(0.0, f64::max);
    Ok((out, err))
}

/// Breakpoints that bracket the surface plasmon pole of an interface with
/// (effective) permittivity `eps`, in the evanescent variable u.
pub(crate) fn pole_breaks(k0: f64, eps: Complex64) -> Vec<f64> {
    let q = -(eps + 1.0);
    let mut out = Vec::new();
    if q.re > 0.0 {
        let up = k0 / q.sqrt();
        let c = up.re.abs();
        let w = up.im.abs().max(1e-9 * c);
        out.push(c);
        for m in [1.0, 3.0, 10.0, 30.0, 100.0] {
            out.push(c + m * w);
            if c - m * w > 0.0 {
                out.push(c - m * w);
            }
        }
    }
    out
}

pub(crate) fn critical_angle_breaks(eps: Complex64) -> Vec<f64> {
    if eps.re > 0.0 && eps.re < 1.0 {
        vec![eps.re.sqrt().asin()]
    } else {
        vec![]
    }
}

/// Reflected Green function of an isotropic half-space by a 1-D Sommerfeld
/// integral.
pub fn sommerfeld_isotropic(z0: f64, omega: f64, m: &MaterialConfig, tol: Tolerance) -> Result<GreensSample> {
    let eps = permittivity_real(m, omega)?.eps_t;
    let k0 = omega;
    let rho = |kr: f64, kz1: Complex64| {
        let kz2 = sqrt_upper(eps * k0 * k0 - kr * kr);
        fresnel_rp(eps, kz1, kz2)
    };
    let r_inf = (eps - 1.0) / (eps + 1.0);
    let (mom, err) = radial_moments(k0, z0, rho, r_inf, &critical_angle_breaks(eps), &pole_breaks(k0, eps), tol)?;
    let pre = Complex64::i() / (4.0 * PI * k0 * k0);
    let zero = Complex64::new(0.0, 0.0);
    Ok(GreensSample {
        g_zz: pre * mom[0],
        d_dz_g_zz: pre * mom[1],
        d_dx_g_zz: zero,
        d_dy_g_zz: zero,
        error: pre.norm() * err,
        backend: GreensBackend::Sommerfeld,
    })
}
