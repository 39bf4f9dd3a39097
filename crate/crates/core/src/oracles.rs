//! Brute-force reference: the atom coupled to M discrete modes,
//! dc/dt = -i sum u_m a_m, da_m/dt = -i v_m c - i D_m a_m,
//! integrated with classical RK4. Eliminating the modes gives the memory
//! kernel -sum u_m v_m e^{-i D_m tau}, so u_m v_m is the J mass of mode m.

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::greens::LorentzianModel;
use crate::scenario::State;
use crate::spectral::SpectralDensity;
use crate::volterra::AmplitudeTrace;

#[derive(Debug, Clone, Serialize)]
pub struct DiscretizedContinuum {
    pub omega: Vec<f64>,
    /// Signed J mass carried by each mode.
    pub mass: Vec<f64>,
}

impl DiscretizedContinuum {
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// sum_m mass_m f(w_m)
    pub fn moment<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.omega.iter().zip(self.mass.iter()).map(|(w, m)| m * f(*w)).sum()
    }

    /// Midpoint modes on [w_c - L lambda, w_c + L lambda], L = 100, with
    /// mass J(w_m) dw. Equal-mass quantiles converge slowly here because the
    /// outermost cells sit in the infinitely oscillating tails of the kernel
    /// integrand. The recurrence time is 2 pi M / (200 lambda).
    pub fn lorentzian(m: &LorentzianModel, modes: usize) -> Self {
        const HALF_WIDTH: f64 = 100.0;
        let a = m.omega_center - HALF_WIDTH * m.lambda;
        let d = 2.0 * HALF_WIDTH * m.lambda / modes as f64;
        let g2 = m.g_rabi * m.g_rabi;
        let omega: Vec<f64> = (0..modes).map(|k| a + (k as f64 + 0.5) * d).collect();
        let mass = omega
            .iter()
            .map(|w| g2 / PI * m.lambda / ((w - m.omega_center).powi(2) + m.lambda * m.lambda) * d)
            .collect();
        DiscretizedContinuum { omega, mass }
    }

    /// Inverse-CDF sampling of |J| on its grid: cells of |J| mass 1/M of the
    /// total, also split where J changes sign, one mode per cell at the
    /// |J|-weighted centre carrying the cell's signed mass. A sub-segment
    /// heavier than a cell is not divided, so sharp peaks can yield fewer
    /// than M modes.
    pub fn from_spectral(sd: &SpectralDensity, modes: usize) -> Result<Self> {
        if modes == 0 {
            return Ok(DiscretizedContinuum { omega: vec![], mass: vec![] });
        }
        let x = &sd.omega;
        let y = &sd.j;
        // fine sub-segments, so that a cell boundary can fall inside a segment
        const SUB: usize = 16;
        let mut seg: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(x.len() * SUB);
        for k in 0..x.len() - 1 {
            for s in 0..SUB {
                let u0 = s as f64 / SUB as f64;
                let u1 = (s + 1) as f64 / SUB as f64;
                let (a, b) = (x[k] + u0 * (x[k + 1] - x[k]), x[k] + u1 * (x[k + 1] - x[k]));
                let (ya, yb) = (y[k] + u0 * (y[k + 1] - y[k]), y[k] + u1 * (y[k + 1] - y[k]));
                seg.push((a, b, ya, yb));
            }
        }
        let abs_mass: Vec<f64> = seg.iter().map(|(a, b, ya, yb)| 0.5 * (b - a) * (ya.abs() + yb.abs())).collect();
        let total: f64 = abs_mass.iter().sum();
        if total == 0.0 {
            return Err(Error::Domain("cannot discretize an identically zero spectral density".into()));
        }
        let target = total / modes as f64;
        let mut omega = Vec::with_capacity(modes);
        let mut mass = Vec::with_capacity(modes);
        let (mut acc_abs, mut acc_signed, mut acc_first) = (0.0, 0.0, 0.0);
        for (i, (a, b, ya, yb)) in seg.iter().enumerate() {
            // close the cell where J changes sign so every mode is single-signed
            if acc_abs > 0.0 && acc_signed * (ya + yb) < 0.0 {
                omega.push(acc_first / acc_abs);
                mass.push(acc_signed);
                acc_abs = 0.0;
                acc_signed = 0.0;
                acc_first = 0.0;
            }
            let ma = abs_mass[i];
            acc_abs += ma;
            acc_signed += 0.5 * (b - a) * (ya + yb);
            acc_first += ma * 0.5 * (a + b);
            let last = i + 1 == seg.len();
            if (acc_abs >= target && omega.len() + 1 < modes) || last {
                if acc_abs > 0.0 {
                    omega.push(acc_first / acc_abs);
                    mass.push(acc_signed);
                }
                acc_abs = 0.0;
                acc_signed = 0.0;
                acc_first = 0.0;
            }
        }
        Ok(DiscretizedContinuum { omega, mass })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleRun {
    pub trace: AmplitudeTrace,
    /// max_t |1 - (|c|^2 + sum sign_m |a_m|^2)|
    pub probability_deficit: f64,
    pub rk_step: f64,
}

/// Integrate the mode system with RK4 at step h <= 0.05 / max|D_m| and
/// sample the atomic amplitude every `stride` steps so that the output step
/// equals t_final / n_out.
pub fn brute_force_evolution(
    cont: &DiscretizedContinuum,
    omega0: f64,
    state: State,
    t_final: f64,
    n_out: usize,
) -> Result<OracleRun> {
    if !(t_final > 0.0) || n_out == 0 {
        return Err(Error::Config("oracle needs t_final > 0 and n_out > 0".into()));
    }
    let d: Vec<f64> = cont.omega.iter().map(|w| state.detuning(*w, omega0)).collect();
    let u: Vec<f64> = cont.mass.iter().map(|m| m.signum() * m.abs().sqrt()).collect();
    let v: Vec<f64> = cont.mass.iter().map(|m| m.abs().sqrt()).collect();
    let sign: Vec<f64> = cont.mass.iter().map(|m| m.signum()).collect();
    let dmax = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let h_out = t_final / n_out as f64;
    let stride = if dmax > 0.0 { (h_out * dmax / 0.05).ceil().max(1.0) as usize } else { 1 };
    let h = h_out / stride as f64;
    let i = Complex64::i();
    let m = cont.len();
    let rhs = |c: Complex64, a: &[Complex64], dc: &mut Complex64, da: &mut [Complex64]| {
        let mut s = Complex64::new(0.0, 0.0);
        for k in 0..m {
            s += u[k] * a[k];
            da[k] = -i * (v[k] * c + d[k] * a[k]);
        }
        *dc = -i * s;
    };
    let norm = |c: Complex64, a: &[Complex64]| c.norm_sqr() + (0..m).map(|k| sign[k] * a[k].norm_sqr()).sum::<f64>();
    let mut c = Complex64::new(1.0, 0.0);
    let mut a = vec![Complex64::new(0.0, 0.0); m];
    let (mut k1, mut k2, mut k3, mut k4) = (vec![Complex64::default(); m], vec![Complex64::default(); m], vec![Complex64::default(); m], vec![Complex64::default(); m]);
    let mut tmp = vec![Complex64::default(); m];
    let mut out = Vec::with_capacity(n_out + 1);
    out.push(c);
    let mut deficit: f64 = 0.0;
    for _ in 0..n_out {
        for _ in 0..stride {
            let (mut c1, mut c2, mut c3, mut c4) = (Complex64::default(), Complex64::default(), Complex64::default(), Complex64::default());
            rhs(c, &a, &mut c1, &mut k1);
            for k in 0..m {
                tmp[k] = a[k] + 0.5 * h * k1[k];
            }
            rhs(c + 0.5 * h * c1, &tmp, &mut c2, &mut k2);
            for k in 0..m {
                tmp[k] = a[k] + 0.5 * h * k2[k];
            }
            rhs(c + 0.5 * h * c2, &tmp, &mut c3, &mut k3);
            for k in 0..m {
                tmp[k] = a[k] + h * k3[k];
            }
            rhs(c + h * c3, &tmp, &mut c4, &mut k4);
            c += h / 6.0 * (c1 + 2.0 * c2 + 2.0 * c3 + c4);
            for k in 0..m {
                a[k] += h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
            }
        }
        deficit = deficit.max((1.0 - norm(c, &a)).abs());
        out.push(c);
    }
    Ok(OracleRun {
        trace: AmplitudeTrace { state, h: h_out, omega0, scheme: Default::default(), values: out },
        probability_deficit: deficit,
        rk_step: h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volterra::lorentzian_closed_form;

    #[test]
    fn no_modes_is_identity() {
        let c = DiscretizedContinuum { omega: vec![], mass: vec![] };
        let r = brute_force_evolution(&c, 0.65, State::Excited, 10.0, 20).unwrap();
        assert!(r.trace.values.iter().all(|v| *v == Complex64::new(1.0, 0.0)));
        assert_eq!(r.probability_deficit, 0.0);
    }

    #[test]
    fn lorentzian_modes_match_closed_form() {
        let m = LorentzianModel::new(0.05, 0.02, 0.67).unwrap();
        let cont = DiscretizedContinuum::lorentzian(&m, 400);
        let tf = 2.0 / m.lambda;
        let r = brute_force_evolution(&cont, 0.65, State::Excited, tf, 200).unwrap();
        let err = r
            .trace
            .values
            .iter()
            .enumerate()
            .map(|(i, c)| (c - lorentzian_closed_form(&m, 0.65, r.trace.t(i))).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-4, "max error {err:e}");
        assert!(r.probability_deficit < 1e-4);
    }
}
