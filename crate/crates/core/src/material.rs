//! Magnetized (gyrotropic) Drude plasma. The bias field is along +y, parallel
//! to the interface, so the tensor couples x and z.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialConfig {
    /// Plasma frequency in units of the reference plasma frequency. 1 for the
    /// physical half-space, 0 gives a reflectionless (vacuum) half-space.
    pub omega_p: f64,
    pub gamma_c: f64,
    pub omega_c: f64,
}

impl Default for MaterialConfig {
    fn default() -> Self {
        MaterialConfig { omega_p: 1.0, gamma_c: 1e-3, omega_c: 0.0 }
    }
}

impl MaterialConfig {
    pub fn validate(&self) -> Result<()> {
        // the sign of the bias is carried by the geometry, so w_c itself is >= 0
        if !(self.gamma_c >= 0.0) || !(self.omega_p >= 0.0) || !(self.omega_c >= 0.0 && self.omega_c.is_finite()) {
            return Err(Error::Config(format!("invalid material {self:?}")));
        }
        Ok(())
    }

    pub fn is_reflectionless(&self) -> bool {
        self.omega_p == 0.0
    }

    pub fn is_reciprocal(&self) -> bool {
        self.omega_c == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermittivityTensor {
    pub eps_t: Complex64,
    pub eps_a: Complex64,
    pub eps_g: Complex64,
}

impl PermittivityTensor {
    /// Row-major 3x3 relative permittivity.
    pub fn matrix(&self) -> [[Complex64; 3]; 3] {
        let z = Complex64::new(0.0, 0.0);
        let i = Complex64::i();
        [
            [self.eps_t, z, i * self.eps_g],
            [z, self.eps_a, z],
            [-i * self.eps_g, z, self.eps_t],
        ]
    }

    /// Eigenvalues of the anti-Hermitian part (eps - eps^H)/2i, ascending.
    pub fn loss_eigenvalues(&self) -> [f64; 3] {
        let m = self.matrix();
        // The x-z block is a 2x2 Hermitian matrix [[a, b], [conj b, d]].
        let ah = |r: usize, c: usize| (m[r][c] - m[c][r].conj()) / Complex64::new(0.0, 2.0);
        let a = ah(0, 0).re;
        let d = ah(2, 2).re;
        let b = ah(0, 2);
        let mean = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        let mut ev = [mean - rad, mean + rad, ah(1, 1).re];
        ev.sort_by(|x, y| x.total_cmp(y));
        ev
    }
}

/// Permittivity components at complex frequency `omega` (units of the
/// reference plasma frequency).
pub fn permittivity(m: &MaterialConfig, omega: Complex64) -> Result<PermittivityTensor> {
    let i = Complex64::i();
    let wp2 = m.omega_p * m.omega_p;
    let wg = omega + i * m.gamma_c;
    let d_t = wg * wg - m.omega_c * m.omega_c;
    let d_a = omega * wg;
    let floor = 1e-300;
    if d_t.norm() < floor || d_a.norm() < floor {
        return Err(Error::Domain(format!("permittivity pole at omega = {omega}")));
    }
    let eps_t = 1.0 - wp2 * (1.0 + i * m.gamma_c / omega) / d_t;
    let eps_a = 1.0 - wp2 / d_a;
    let eps_g = m.omega_c * wp2 / (omega * (m.omega_c * m.omega_c - wg * wg));
    Ok(PermittivityTensor { eps_t, eps_a, eps_g })
}

pub fn permittivity_real(m: &MaterialConfig, omega: f64) -> Result<PermittivityTensor> {
    permittivity(m, Complex64::new(omega, 0.0))
}

/// Surface plasmon frequencies of the quasistatic interface: 1/sqrt(2) for
/// the isotropic case, and the pair `(sqrt(wc^2 + 2) +- wc)/2` for the
/// magnetized plasma (propagation normal to the bias).
pub fn surface_plasmon_frequencies(m: &MaterialConfig) -> Vec<f64> {
    let wp = m.omega_p;
    if wp == 0.0 {
        return vec![];
    }
    let wc = m.omega_c.abs();
    let mut out = vec![wp / 2f64.sqrt()];
    if wc > 0.0 {
        let r = (wc * wc + 2.0 * wp * wp).sqrt();
        out.push(0.5 * (r + wc));
        out.push(0.5 * (r - wc));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lossless(wc: f64) -> MaterialConfig {
        MaterialConfig { omega_p: 1.0, gamma_c: 0.0, omega_c: wc }
    }

    #[test]
    fn plasma_zero_and_spp_condition() {
        let e = permittivity_real(&lossless(0.0), 1.0).unwrap();
        assert!(e.eps_t.norm() < 1e-15 && e.eps_a.norm() < 1e-15);
        let e = permittivity_real(&lossless(0.0), 1.0 / 2f64.sqrt()).unwrap();
        assert!((e.eps_t + 1.0).norm() < 1e-14);
    }

    #[test]
    fn high_frequency_limit() {
        for wc in [0.0, 0.3, 1.2] {
            let m = MaterialConfig { omega_p: 1.0, gamma_c: 1e-3, omega_c: wc };
            let e = permittivity_real(&m, 100.0).unwrap();
            assert!((e.eps_t - 1.0).norm() < 1e-3);
            assert!((e.eps_a - 1.0).norm() < 1e-3);
            assert!(e.eps_g.norm() < 1e-3);
        }
    }

    #[test]
    fn lossless_is_hermitian() {
        let e = permittivity_real(&lossless(0.4), 0.55).unwrap();
        let m = e.matrix();
        for r in 0..3 {
            for c in 0..3 {
                assert!((m[r][c] - m[c][r].conj()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn nonreciprocal_surface_modes() {
        let m = lossless(0.3);
        let f = surface_plasmon_frequencies(&m);
        let e = permittivity_real(&m, f[1]).unwrap();
        assert!((e.eps_t + e.eps_g + 1.0).norm() < 1e-12);
        let e = permittivity_real(&m, f[2]).unwrap();
        assert!((e.eps_t - e.eps_g + 1.0).norm() < 1e-12);
    }
}
