//! Long-time ground-state analysis in the Laplace domain. With
//! Gamma(s) = \int J(w)/(s + i(w + w0)) dw the amplitude transform is
//! 1/D(s), D(s) = s + Gamma(s).

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quad::{bisect, pairwise_sum, trapezoid_weights};
use crate::spectral::{ForceWeightTable, SpectralDensity};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoleSummary {
    /// s_p = i alpha_p, in units of w_p
    pub alpha_p: f64,
    pub c_mag: f64,
    pub dprime: f64,
    pub delta_g_ref: f64,
    pub omega0: f64,
}

/// Distance from the cut (relative to w0) below which gamma_of_s refuses.
const CUT_GUARD: f64 = 1e-12;

/// Gamma(s) by exact integration of the piecewise-linear J against 1/z,
/// z = s + i(w + w0).
pub fn gamma_of_s(sd: &SpectralDensity, omega0: f64, s: Complex64) -> Result<Complex64> {
    let i = Complex64::i();
    let z_of = |w: f64| s + i * (w + omega0);
    let x = &sd.omega;
    let y = &sd.j;
    let mut terms = Vec::with_capacity(x.len());
    for k in 0..x.len() - 1 {
        let (za, zb) = (z_of(x[k]), z_of(x[k + 1]));
        if za.norm() < CUT_GUARD * omega0 || zb.norm() < CUT_GUARD * omega0 {
            return Err(Error::Domain(format!("s = {s} lies on the branch cut of Gamma(s)")));
        }
        let m = (y[k + 1] - y[k]) / (x[k + 1] - x[k]);
        let w = (zb - za) / za;
        // l = Log(1 + w), r = w - Log(1 + w)
        let (l, r) = if w.norm() < 1e-3 {
            let w2 = w * w;
            let r = w2 * (0.5 - w / 3.0 + w2 / 4.0 - w2 * w / 5.0 + w2 * w2 / 6.0);
            (w - r, r)
        } else {
            let l = (Complex64::new(1.0, 0.0) + w).ln();
            (l, w - l)
        };
        terms.push((y[k] * l + (m / i) * za * r) / i);
    }
    Ok(pairwise_sum(&terms))
}

/// alpha - \int J/(w + w0 + alpha) along s = i alpha.
fn root_fn(sd: &SpectralDensity, omega0: f64, alpha: f64) -> Result<f64> {
    let g = gamma_of_s(sd, omega0, Complex64::new(0.0, alpha))?;
    Ok(alpha + g.im)
}

/// Pole s_p = i alpha_p of 1/D(s) on the positive imaginary axis.
pub fn find_pole(sd: &SpectralDensity, omega0: f64) -> Result<PoleSummary> {
    let lo = 1e-8 * omega0;
    let hi = 0.9 * omega0;
    let flo = root_fn(sd, omega0, lo)?;
    let fhi = root_fn(sd, omega0, hi)?;
    if !(flo < 0.0 && fhi > 0.0) {
        return Err(Error::NoPole { lo, hi, f_lo: flo, f_hi: fhi });
    }
    let err = std::cell::Cell::new(None);
    let alpha = bisect(
        |a| match root_fn(sd, omega0, a) {
            Ok(v) => v,
            Err(e) => {
                err.set(Some(e));
                0.0
            }
        },
        lo,
        hi,
        1e-12,
    );
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    let dprime = 1.0 + sd.integrate(|w| 1.0 / (w + omega0 + alpha).powi(2));
    Ok(PoleSummary {
        alpha_p: alpha,
        c_mag: 1.0 / dprime.abs(),
        dprime,
        delta_g_ref: sd.integrate(|w| 1.0 / (w + omega0)),
        omega0,
    })
}

/// Number of sign changes of the root function on a uniform alpha scan.
pub fn root_sign_changes(sd: &SpectralDensity, omega0: f64, n: usize) -> Result<usize> {
    let lo = 1e-8 * omega0;
    let hi = 0.9 * omega0;
    let mut count = 0;
    let mut prev = root_fn(sd, omega0, lo)?;
    for k in 1..=n {
        let a = lo + (hi - lo) * k as f64 / n as f64;
        let v = root_fn(sd, omega0, a)?;
        if v.signum() != prev.signum() {
            count += 1;
        }
        prev = v;
    }
    Ok(count)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutProbe {
    pub y: f64,
    pub measured: Complex64,
    pub predicted: Complex64,
}

impl CutProbe {
    pub fn relative_error(&self) -> f64 {
        (self.measured - self.predicted).norm() / self.predicted.norm().max(f64::MIN_POSITIVE)
    }
}

/// Jump of Gamma across the imaginary axis, Gamma(x + iy) - Gamma(-x + iy),
/// and its x -> 0 limit: 2 pi J(w*) on the cut (w* = -y - w0 > 0), 0 off it.
/// On the cut, y is snapped so that w* is the nearest grid node.
pub fn branch_cut_probe(sd: &SpectralDensity, omega0: f64, x: f64, y: f64) -> Result<CutProbe> {
    let target = -y - omega0;
    let (y, predicted) = if target > sd.omega_min() && target < sd.omega_max() {
        let k = sd.omega.partition_point(|w| *w < target);
        let k = if k > 0 && (target - sd.omega[k - 1]) < (sd.omega[k] - target) { k - 1 } else { k };
        (-(sd.omega[k] + omega0), Complex64::new(2.0 * PI * sd.j[k], 0.0))
    } else {
        (y, Complex64::new(0.0, 0.0))
    };
    let measured = gamma_of_s(sd, omega0, Complex64::new(x, y))? - gamma_of_s(sd, omega0, Complex64::new(-x, y))?;
    Ok(CutProbe { y, measured, predicted })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticForce {
    /// |c|^2 2 \int W/(w + w0 + alpha_p)
    pub non_markov: f64,
    /// 2 \int W/(w + w0 + delta_g)
    pub fm: f64,
}

pub fn asymptotic_cp_force(pole: &PoleSummary, weights: &ForceWeightTable) -> AsymptoticForce {
    let q = trapezoid_weights(&weights.omega);
    let sum = |shift: f64| {
        let t: Vec<f64> = (0..q.len()).map(|k| q[k] * weights.w[k] / (weights.omega[k] + pole.omega0 + shift)).collect();
        2.0 * pairwise_sum(&t)
    };
    AsymptoticForce {
        non_markov: pole.c_mag * pole.c_mag * sum(pole.alpha_p),
        fm: sum(pole.delta_g_ref),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::LorentzianModel;
    use crate::material::MaterialConfig;
    use crate::quad::{integrate1, Tolerance};
    use crate::scenario::ReservoirBackend;
    use crate::spectral::ReservoirSpec;

    fn lorentz(m: LorentzianModel, n: usize) -> SpectralDensity {
        let omega: Vec<f64> = (1..=n).map(|k| k as f64 * 3.0 / n as f64).collect();
        let j = omega.iter().map(|w| m.j(*w)).collect();
        let spec = ReservoirSpec {
            backend: ReservoirBackend::LorentzianModel,
            material: MaterialConfig::default(),
            z0: 1.0,
            kappa: 0.0,
            lorentzian: Some(m),
        };
        SpectralDensity::from_samples(omega, j, spec).unwrap()
    }

    #[test]
    fn imaginary_axis_is_pure_imaginary() {
        let sd = lorentz(LorentzianModel::new(0.2, 0.03, 0.7).unwrap(), 3000);
        for a in [1e-4, 0.1, 0.5] {
            let g = gamma_of_s(&sd, 0.65, Complex64::new(0.0, a)).unwrap();
            assert!(g.re.abs() < 1e-10 * g.norm());
        }
    }

    #[test]
    fn product_rule_matches_adaptive_quadrature() {
        let m = LorentzianModel::new(0.2, 0.03, 0.7).unwrap();
        let sd = lorentz(m, 3000);
        let tol = Tolerance { abs: 1e-16, rel: 1e-12, max_intervals: 20000 };
        for s in [Complex64::new(0.01, 0.2), Complex64::new(0.3, -0.1), Complex64::new(-0.02, -1.0)] {
            let g = gamma_of_s(&sd, 0.65, s).unwrap();
            let (r, _) = integrate1(
                |w| Complex64::new(sd.value(w), 0.0) / (s + Complex64::new(0.0, w + 0.65)),
                sd.omega_min(),
                sd.omega_max(),
                &sd.omega[..],
                tol,
            )
            .unwrap();
            assert!((g - r).norm() < 1e-8 * r.norm(), "s = {s}: {g} vs {r}");
        }
    }

    #[test]
    fn weak_pole_tracks_delta_g() {
        let sd = lorentz(LorentzianModel::new(0.02, 0.03, 0.7).unwrap(), 3000);
        let p = find_pole(&sd, 0.65).unwrap();
        assert!((p.alpha_p / p.delta_g_ref - 1.0).abs() < 1e-3);
        assert!(p.c_mag > 0.999 && p.c_mag <= 1.0);
        assert_eq!(root_sign_changes(&sd, 0.65, 200).unwrap(), 1);
    }

    #[test]
    fn no_pole_without_reservoir() {
        let mut sd = lorentz(LorentzianModel::new(0.02, 0.03, 0.7).unwrap(), 300);
        sd.j.iter_mut().for_each(|v| *v = 0.0);
        let e = find_pole(&sd, 0.65).unwrap_err();
        assert_eq!(e.exit_code(), 5);
        let g = gamma_of_s(&sd, 0.65, Complex64::new(0.1, 0.2)).unwrap();
        assert_eq!(g, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn cut_jump_matches_prediction() {
        let m = LorentzianModel::new(0.2, 0.03, 0.7).unwrap();
        let sd = lorentz(m, 3000);
        let x = 1e-4 * 0.65;
        let on = branch_cut_probe(&sd, 0.65, x, -(0.65 + 0.7)).unwrap();
        assert!(on.relative_error() < 0.1, "{on:?}");
        let off = branch_cut_probe(&sd, 0.65, x, 0.065).unwrap();
        assert!(off.measured.norm() < 1e-3 * sd.total_mass());
    }

    #[test]
    fn asymptotic_force_weak_limit() {
        let sd = lorentz(LorentzianModel::new(0.02, 0.03, 0.7).unwrap(), 3000);
        let p = find_pole(&sd, 0.65).unwrap();
        let w = ForceWeightTable { omega: sd.omega.clone(), w: sd.j.iter().map(|v| -v * 50.0).collect(), axis: crate::spectral::AxisTag::Z };
        let f = asymptotic_cp_force(&p, &w);
        assert!((f.non_markov / f.fm - 1.0).abs() < 1e-2);
    }
}
