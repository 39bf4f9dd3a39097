//! Reflection of a p-polarized plane wave by the magnetized plasma, by
//! matching tangential E and H at the interface, and the resulting 2-D
//! spectral integral for the coincident-point Green function.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use std::f64::consts::PI;

use super::fresnel::{critical_angle_breaks, pole_breaks, radial_moments};
use super::{sqrt_upper, GreensBackend, GreensSample};
use crate::error::{Error, Result};
use crate::material::{permittivity_real, MaterialConfig, PermittivityTensor};
use crate::quad::Tolerance;

type C = Complex64;
type V3 = [C; 3];

#[derive(Debug, Clone, Copy)]
pub struct GyroOptions {
    /// Azimuthal nodes of the periodic trapezoid rule.
    pub n_phi: usize,
}

impl Default for GyroOptions {
    fn default() -> Self {
        GyroOptions { n_phi: 32 }
    }
}

fn cross(a: &V3, b: &V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm3(a: &V3) -> f64 {
    (a[0].norm_sqr() + a[1].norm_sqr() + a[2].norm_sqr()).sqrt()
}

fn scale3(a: &V3, s: C) -> V3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

type Poly = [C; 5];

fn pmul(a: &Poly, b: &Poly) -> Poly {
    let mut out = [C::new(0.0, 0.0); 5];
    for i in 0..5 {
        for j in 0..5 - i {
            out[i + j] += a[i] * b[j];
        }
    }
    out
}

fn psub(a: &Poly, b: &Poly) -> Poly {
    let mut out = *a;
    for i in 0..5 {
        out[i] -= b[i];
    }
    out
}

fn peval(p: &Poly, x: C) -> (C, C) {
    let mut v = C::new(0.0, 0.0);
    let mut d = C::new(0.0, 0.0);
    for c in p.iter().rev() {
        d = d * x + v;
        v = v * x + c;
    }
    (v, d)
}

/// Roots of a degree-4 polynomial (coefficients in ascending order) by
/// Aberth-Ehrlich iteration.
fn quartic_roots(p: &Poly) -> Result<[C; 4]> {
    let lead = p[4];
    if lead.norm() == 0.0 {
        return Err(Error::Domain("degenerate dispersion polynomial".into()));
    }
    let r = 1.0 + (0..4).map(|i| (p[i] / lead).norm()).fold(0.0, f64::max);
    let mut z: [C; 4] = std::array::from_fn(|k| C::from_polar(0.5 * r, 0.4 + 2.0 * PI * k as f64 / 4.0));
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for k in 0..4 {
            let (v, d) = peval(p, z[k]);
            if v.norm() == 0.0 {
                continue;
            }
            let ratio = v / d;
            let mut s = C::new(0.0, 0.0);
            for j in 0..4 {
                if j != k {
                    s += 1.0 / (z[k] - z[j]);
                }
            }
            let w = ratio / (1.0 - ratio * s);
            z[k] -= w;
            moved = moved.max(w.norm() / z[k].norm().max(1e-300));
        }
        if moved < 1e-15 {
            break;
        }
    }
    for zk in z.iter_mut() {
        for _ in 0..3 {
            let (v, d) = peval(p, *zk);
            if d.norm() == 0.0 {
                break;
            }
            let step = v / d;
            if !step.re.is_finite() {
                break;
            }
            *zk -= step;
        }
    }
    Ok(z)
}

/// A double root of p is a simple root of p'; Newton on p' recovers it to
/// full precision where the split pair from the quartic solver does not.
fn polish_double_root(p: &Poly, x0: C) -> C {
    let z = C::new(0.0, 0.0);
    let dp: Poly = [p[1], 2.0 * p[2], 3.0 * p[3], 4.0 * p[4], z];
    let mut x = x0;
    for _ in 0..4 {
        let (v, d) = peval(&dp, x);
        if d.norm() == 0.0 {
            break;
        }
        let step = v / d;
        if !step.re.is_finite() || step.norm() > 1e-3 * x.norm().max(1e-300) {
            break;
        }
        x -= step;
    }
    x
}

fn m_poly(kx: f64, ky: f64, k0: f64, e: &PermittivityTensor) -> [[Poly; 3]; 3] {
    let z = C::new(0.0, 0.0);
    let c = |x: f64| C::new(x, 0.0);
    let i = C::i();
    let k02 = k0 * k0;
    let mut m = [[[z; 5]; 3]; 3];
    m[0][0] = [c(-ky * ky) + k02 * e.eps_t, z, c(-1.0), z, z];
    m[0][1] = [c(kx * ky), z, z, z, z];
    m[0][2] = [i * k02 * e.eps_g, c(kx), z, z, z];
    m[1][0] = m[0][1];
    m[1][1] = [c(-kx * kx) + k02 * e.eps_a, z, c(-1.0), z, z];
    m[1][2] = [z, c(ky), z, z, z];
    m[2][0] = [-i * k02 * e.eps_g, c(kx), z, z, z];
    m[2][1] = [z, c(ky), z, z, z];
    m[2][2] = [c(-kx * kx - ky * ky) + k02 * e.eps_t, z, z, z, z];
    m
}

fn det_poly(m: &[[Poly; 3]; 3]) -> Poly {
    let c1 = psub(&pmul(&m[1][1], &m[2][2]), &pmul(&m[1][2], &m[2][1]));
    let c2 = psub(&pmul(&m[1][0], &m[2][2]), &pmul(&m[1][2], &m[2][0]));
    let c3 = psub(&pmul(&m[1][0], &m[2][1]), &pmul(&m[1][1], &m[2][0]));
    let t1 = pmul(&m[0][0], &c1);
    let t2 = pmul(&m[0][1], &c2);
    let t3 = pmul(&m[0][2], &c3);
    let mut out = psub(&t1, &t2);
    for i in 0..5 {
        out[i] += t3[i];
    }
    out
}

fn eval_matrix(m: &[[Poly; 3]; 3], kz: C) -> [V3; 3] {
    let mut out = [[C::new(0.0, 0.0); 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            out[r][c] = peval(&m[r][c], kz).0;
        }
    }
    out
}

fn null_vector(rows: &[V3; 3]) -> V3 {
    let cands = [cross(&rows[0], &rows[1]), cross(&rows[1], &rows[2]), cross(&rows[2], &rows[0])];
    let best = cands
        .iter()
        .max_by(|a, b| norm3(a).total_cmp(&norm3(b)))
        .copied()
        .expect("three candidates");
    scale3(&best, C::new(1.0 / norm3(&best), 0.0))
}

fn null_plane(rows: &[V3; 3]) -> [V3; 2] {
    let r = *rows.iter().max_by(|a, b| norm3(a).total_cmp(&norm3(b))).expect("rows");
    let j = (0..3).min_by(|&a, &b| r[a].norm().total_cmp(&r[b].norm())).expect("index");
    let mut a = [C::new(0.0, 0.0); 3];
    a[j] = C::new(1.0, 0.0);
    let e1 = cross(&r, &a);
    let e2 = cross(&r, &e1);
    [
        scale3(&e1, C::new(1.0 / norm3(&e1), 0.0)),
        scale3(&e2, C::new(1.0 / norm3(&e2), 0.0)),
    ]
}

/// zz element of the reflection dyadic, E_z^refl / E_z^inc, for a p-polarized
/// wave with tangential wavevector (kx, ky). Works in units scaled by
/// max(k0, kr) so the dispersion polynomial is well conditioned.
pub fn reflection_zz(k0: f64, kx: f64, ky: f64, e: &PermittivityTensor) -> Result<C> {
    let kr0 = (kx * kx + ky * ky).sqrt();
    if kr0 == 0.0 {
        return Err(Error::Domain("reflection_zz needs a nonzero tangential wavevector".into()));
    }
    let sc = kr0.max(k0);
    let (kx, ky, k0, kr) = (kx / sc, ky / sc, k0 / sc, kr0 / sc);
    let kz1 = sqrt_upper(C::new(k0 * k0 - kr * kr, 0.0));

    let mp = m_poly(kx, ky, k0, e);
    let roots = quartic_roots(&det_poly(&mp))?;
    let mut down: Vec<C> = roots.iter().copied().filter(|z| z.im < 0.0 || (z.im == 0.0 && z.re < 0.0)).collect();
    if down.len() != 2 {
        let mut all = roots.to_vec();
        all.sort_by(|a, b| a.im.total_cmp(&b.im));
        down = all[..2].to_vec();
    }
    let sep = (down[0] - down[1]).norm() / down[0].norm().max(down[1].norm()).max(1e-300);
    let fields: [(C, V3); 2] = if sep < 1e-6 {
        let kz = polish_double_root(&det_poly(&mp), 0.5 * (down[0] + down[1]));
        let plane = null_plane(&eval_matrix(&mp, kz));
        [(kz, plane[0]), (kz, plane[1])]
    } else {
        [
            (down[0], null_vector(&eval_matrix(&mp, down[0]))),
            (down[1], null_vector(&eval_matrix(&mp, down[1]))),
        ]
    };

    let cx = |x: f64| C::new(x, 0.0);
    let inv_k0 = C::new(1.0 / k0, 0.0);
    let s: V3 = [cx(-ky / kr), cx(kx / kr), cx(0.0)];
    let k_r: V3 = [cx(kx), cx(ky), kz1];
    let k_i: V3 = [cx(kx), cx(ky), -kz1];
    let p_r = scale3(&cross(&s, &k_r), inv_k0);
    let p_i = scale3(&cross(&s, &k_i), inv_k0);
    let h = |k: &V3, ev: &V3| scale3(&cross(k, ev), inv_k0);

    let cols: [(V3, V3); 4] = [
        (s, h(&k_r, &s)),
        (p_r, h(&k_r, &p_r)),
        {
            let k: V3 = [cx(kx), cx(ky), fields[0].0];
            (scale3(&fields[0].1, cx(-1.0)), scale3(&h(&k, &fields[0].1), cx(-1.0)))
        },
        {
            let k: V3 = [cx(kx), cx(ky), fields[1].0];
            (scale3(&fields[1].1, cx(-1.0)), scale3(&h(&k, &fields[1].1), cx(-1.0)))
        },
    ];
    let a = Matrix4::from_fn(|r, c| {
        let (ev, hv) = &cols[c];
        match r {
            0 => ev[0],
            1 => ev[1],
            2 => hv[0],
            _ => hv[1],
        }
    });
    let hi = h(&k_i, &p_i);
    let b = Vector4::new(-p_i[0], -p_i[1], -hi[0], -hi[1]);
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Domain(format!("singular boundary-matching system at kx = {kx}, ky = {ky}")))?;
    Ok(x[1])
}

fn effective_eps(e: &PermittivityTensor, phi: f64) -> C {
    let (s, c) = phi.sin_cos();
    let mut kappa = (c * c + e.eps_a / e.eps_t * s * s).sqrt();
    if kappa.re < 0.0 {
        kappa = -kappa;
    }
    e.eps_t * kappa + e.eps_g * c
}

/// Reflected Green function from the 2-D (kr, phi) spectral integral with the
/// boundary-matching reflection coefficient.
pub fn sommerfeld_gyrotropic(
    z0: f64,
    omega: f64,
    m: &MaterialConfig,
    tol: Tolerance,
    opts: &GyroOptions,
) -> Result<GreensSample> {
    let e = permittivity_real(m, omega)?;
    let k0 = omega;
    let n = opts.n_phi.max(4);
    let dphi = 2.0 * PI / n as f64;
    let mut acc = [C::new(0.0, 0.0); 4];
    let mut err = 0.0f64;
    for j in 0..n {
        let phi = (j as f64 + 0.5) * dphi;
        let (sn, cs) = phi.sin_cos();
        let eff = effective_eps(&e, phi);
        let rho = |kr: f64, _kz1: C| reflection_zz(k0, kr * cs, kr * sn, &e).unwrap_or(C::new(f64::NAN, f64::NAN));
        let r_inf = (eff - 1.0) / (eff + 1.0);
        let (mom, er) = radial_moments(
            k0,
            z0,
            rho,
            r_inf,
            &critical_angle_breaks(e.eps_t),
            &pole_breaks(k0, eff),
            tol,
        )?;
        if !mom[0].re.is_finite() {
            return Err(Error::Quadrature { detail: format!("non-finite reflection at phi = {phi}"), estimate: f64::INFINITY });
        }
        acc[0] += mom[0] * dphi;
        acc[1] += mom[1] * dphi;
        acc[2] += mom[2] * cs * dphi;
        acc[3] += mom[2] * sn * dphi;
        err += er * dphi;
    }
    let pre = C::i() / (8.0 * PI * PI * k0 * k0);
    Ok(GreensSample {
        g_zz: pre * acc[0],
        d_dz_g_zz: pre * acc[1],
        d_dx_g_zz: pre * acc[2],
        d_dy_g_zz: pre * acc[3],
        error: pre.norm() * err,
        backend: GreensBackend::Sommerfeld,
    })
}
