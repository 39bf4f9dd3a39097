//! Markov ladder: decay rate, level shifts and the FM / PM amplitudes.

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::greens::{mean_image_factor, LorentzianModel};
use crate::material::{permittivity, MaterialConfig};
use crate::quad::{integrate1_semi_infinite, Tolerance};
use crate::scenario::State;
use crate::spectral::{pv_integral, refined_trapezoid, ReservoirSpec, SpectralDensity};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarkovSummary {
    pub gamma: f64,
    pub delta: f64,
    pub delta_g: f64,
    pub omega0: f64,
}

impl MarkovSummary {
    pub fn compute(sd: &SpectralDensity, omega0: f64) -> Result<Self> {
        Ok(MarkovSummary {
            gamma: decay_rate(sd, omega0)?,
            delta: lamb_shift_excited(sd, omega0)?,
            delta_g: lamb_shift_ground(sd, omega0),
            omega0,
        })
    }

    pub fn shift(&self, state: State) -> f64 {
        match state {
            State::Excited => self.delta,
            State::Ground => self.delta_g,
        }
    }
}

/// Gamma = 2 pi J(w0), read from the tabulated grid.
pub fn decay_rate(sd: &SpectralDensity, omega0: f64) -> Result<f64> {
    let k = sd
        .omega
        .iter()
        .position(|w| *w == omega0)
        .ok_or_else(|| Error::Grid(format!("omega0 = {omega0} is not a node of the J grid")))?;
    Ok(2.0 * PI * sd.j[k])
}

/// Gamma from a fresh Green-function evaluation at w0 (no table).
pub fn decay_rate_direct(spec: &ReservoirSpec, omega0: f64) -> Result<f64> {
    Ok(2.0 * PI * spec.sample(omega0)?.0)
}

/// delta = PV \int J/(w - w0) dw by singularity subtraction.
pub fn lamb_shift_excited(sd: &SpectralDensity, omega0: f64) -> Result<f64> {
    if sd.is_zero() {
        return Ok(0.0);
    }
    pv_integral(&sd.omega, &sd.j, omega0)
}

/// Analytic continuation F with Im F(w) = J(w) on the real axis.
#[derive(Debug, Clone, Copy)]
pub enum Continuation {
    Lorentzian(LorentzianModel),
    /// Near-field image model: F = kappa / (16 pi^2 z0^3) R(w).
    Quasistatic { material: MaterialConfig, z0: f64, kappa: f64 },
}

impl Continuation {
    pub fn eval(&self, w: Complex64) -> Result<Complex64> {
        match self {
            Continuation::Lorentzian(m) => Ok(m.continuation(w)),
            Continuation::Quasistatic { material, z0, kappa } => {
                let r = mean_image_factor(&permittivity(material, w)?)?;
                Ok(kappa / (16.0 * PI * PI * z0.powi(3)) * r)
            }
        }
    }
}

/// delta over (0, inf) with the contour rotated onto the positive imaginary
/// axis: Im[i \int F(i xi)/(i xi - w0) d xi] + pi Re F(w0).
pub fn lamb_shift_excited_rotated(f: &Continuation, omega0: f64, tol: Tolerance) -> Result<f64> {
    let i = Complex64::i();
    let cell = std::cell::RefCell::new(None);
    let (v, _) = integrate1_semi_infinite(
        |xi| {
            let w = Complex64::new(0.0, xi);
            match f.eval(w) {
                Ok(fv) => fv / (w - omega0),
                Err(e) => {
                    cell.borrow_mut().get_or_insert(e);
                    Complex64::new(0.0, 0.0)
                }
            }
        },
        0.0,
        tol,
    )?;
    if let Some(e) = cell.into_inner() {
        return Err(e);
    }
    Ok((i * v).im + PI * f.eval(Complex64::new(omega0, 0.0))?.re)
}

/// delta_g = \int J/(w + w0) dw.
pub fn lamb_shift_ground(sd: &SpectralDensity, omega0: f64) -> f64 {
    sd.integrate(|w| 1.0 / (w + omega0))
}

/// FM amplitude in the frame rotating with the bare level.
pub fn fm_amplitude(state: State, s: &MarkovSummary, t: f64) -> Complex64 {
    match state {
        State::Excited => Complex64::new(-0.5 * s.gamma * t, s.delta * t).exp(),
        State::Ground => Complex64::new(0.0, s.delta_g * t).exp(),
    }
}

/// (e^{-ix} - 1 + ix)/x^2 scaled by t^2, i.e. phi = (e^{-i D t} - 1 + i D t)/D^2.
fn phi(d: f64, t: f64) -> Complex64 {
    let x = d * t;
    if x.abs() < 1e-3 {
        let t2 = t * t;
        return Complex64::new(-0.5 * t2 + d * d * t2 * t2 / 24.0, d * t2 * t / 6.0);
    }
    (Complex64::new(0.0, -x).exp() - 1.0 + Complex64::new(0.0, x)) / (d * d)
}

/// PM amplitude: ln c(t) = \int J(w) phi(w -+ w0, t) dw, the memory integral
/// with c frozen at the current time.
pub fn pm_amplitude(state: State, sd: &SpectralDensity, omega0: f64, t: f64) -> Complex64 {
    if t == 0.0 || sd.is_zero() {
        return Complex64::new(1.0, 0.0);
    }
    let dmax = PI / (5.0 * t);
    let q = refined_trapezoid(&sd.omega, &sd.j, |w| phi(state.detuning(w, omega0), t), dmax);
    q.exp()
}
