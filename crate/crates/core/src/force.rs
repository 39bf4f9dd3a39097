//! Transient vertical (and optionally lateral) force on the atom, in units of
//! F0 = 3|d|^2/(16 pi z0^4 eps0).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::greens::{d_alpha_force_weight, Axis, GreensBackend};
use crate::markov::{fm_amplitude, pm_amplitude, MarkovSummary};
use crate::quad::{pairwise_sum, trapezoid_weights};
use crate::scenario::{ReservoirBackend, State};
use crate::spectral::{pv_integral, spectral_on_grid, AxisTag, ForceWeightTable, ReservoirSpec, SpectralDensity};
use crate::volterra::AmplitudeTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ForceMethod {
    Exact,
    Fm,
    Pm,
    Pm2,
    Fm2,
}

#[derive(Debug, Clone, Serialize)]
pub struct ForceTrace {
    pub method: ForceMethod,
    pub state: State,
    pub times: Vec<f64>,
    /// F/F0
    pub values: Vec<f64>,
    pub f0_newton: f64,
}

impl ForceTrace {
    pub fn to_newton(&self) -> Vec<f64> {
        self.values.iter().map(|v| v * self.f0_newton).collect()
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Denominator of the FM excited-state force integrand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum FmDenominator {
    /// Gamma/2 - i D', consistent with the FM amplitude decaying as e^{-Gamma t/2}.
    #[default]
    HalfGamma,
    /// Gamma - i D'.
    FullGamma,
}

/// Weight table resampled so that adjacent nodes satisfy dw <= pi/(5 t_final),
/// with w0 kept as a node. Carries the trapezoid weight of each node.
#[derive(Debug, Clone)]
pub struct ForceGrid {
    pub omega: Vec<f64>,
    /// trapezoid weight x W/F0
    pub aw: Vec<f64>,
    pub w: Vec<f64>,
    pub axis: AxisTag,
}

impl ForceGrid {
    pub fn new(table: &ForceWeightTable, omega0: f64, t_final: f64) -> Self {
        let dmax = if t_final > 0.0 { PI / (5.0 * t_final) } else { f64::INFINITY };
        let mut omega = Vec::with_capacity(table.omega.len());
        let mut w = Vec::with_capacity(table.omega.len());
        for k in 0..table.omega.len() {
            let (a, wa) = (table.omega[k], table.w[k]);
            omega.push(a);
            w.push(wa);
            if k + 1 < table.omega.len() {
                let (b, wb) = (table.omega[k + 1], table.w[k + 1]);
                let m = ((b - a) / dmax).ceil().max(1.0) as usize;
                for s in 1..m {
                    let u = s as f64 / m as f64;
                    omega.push(a + u * (b - a));
                    w.push(wa + u * (wb - wa));
                }
            }
            if k + 1 < table.omega.len() && omega0 > a && omega0 < table.omega[k + 1] && !table.omega.contains(&omega0) {
                // keep w0 on the grid for the principal-value pieces
                let v = table.value(omega0);
                let pos = omega.partition_point(|x| *x < omega0);
                if omega.get(pos) != Some(&omega0) {
                    omega.insert(pos, omega0);
                    w.insert(pos, v);
                }
            }
        }
        let q = trapezoid_weights(&omega);
        let aw = q.iter().zip(w.iter()).map(|(a, b)| a * b).collect();
        ForceGrid { omega, aw, w, axis: table.axis }
    }

    /// Factor multiplying conj(c) sum(...) before taking 2 Re: i for the
    /// vertical weight (Im branch), 1 for the lateral (Re branch, extra -i).
    fn branch(&self) -> Complex64 {
        match self.axis {
            AxisTag::Z => Complex64::i(),
            AxisTag::X | AxisTag::Y => Complex64::new(1.0, 0.0),
        }
    }
}

/// Inner products of the linear hat functions with e^{-i x u} on [0, 1]:
/// (int e^{-ixu} du, int u e^{-ixu} du).
fn hat_moments(x: f64) -> (Complex64, Complex64) {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        let e0 = Complex64::new(1.0 - x2 / 6.0 + x2 * x2 / 120.0, -x / 2.0 + x2 * x / 24.0);
        let e1 = Complex64::new(0.5 - x2 / 8.0 + x2 * x2 / 144.0, -x / 3.0 + x2 * x / 30.0);
        return (e0, e1);
    }
    let i = Complex64::i();
    let e = Complex64::new(0.0, -x).exp();
    let e0 = (1.0 - e) / (i * x);
    let e1 = (e * (1.0 + i * x) - 1.0) / (x * x);
    (e0, e1)
}

const FORCE_CHUNK: usize = 256;

/// Exact force from an amplitude trace. The running integral
/// I(w, t) = \int_0^t e^{-i D (t - s)} c(s) ds is advanced per frequency with
/// c linear on each step, D = w -+ w0.
pub fn exact_force(trace: &AmplitudeTrace, grid: &ForceGrid, f0_newton: f64) -> ForceTrace {
    exact_force_with(trace, grid, f0_newton, ForceMethod::Exact)
}

fn exact_force_with(trace: &AmplitudeTrace, grid: &ForceGrid, f0_newton: f64, method: ForceMethod) -> ForceTrace {
    let n = trace.values.len();
    let h = trace.h;
    let c = &trace.values;
    let idx: Vec<usize> = (0..grid.omega.len()).step_by(FORCE_CHUNK).collect();
    let parts: Vec<Vec<Complex64>> = idx
        .par_iter()
        .map(|&start| {
            let end = (start + FORCE_CHUNK).min(grid.omega.len());
            let mut acc = vec![Complex64::new(0.0, 0.0); n];
            for k in start..end {
                let a = grid.aw[k];
                if a == 0.0 {
                    continue;
                }
                let d = trace.state.detuning(grid.omega[k], trace.omega0);
                let x = d * h;
                let (e0, e1) = hat_moments(x);
                let rot = Complex64::new(0.0, -x).exp();
                // c_b weight h (E0 - E1), c_a weight h E1 in hat-moment units
                let wb = h * (e0 - e1);
                let wa = h * e1;
                let mut run = Complex64::new(0.0, 0.0);
                for i in 0..n - 1 {
                    run = rot * run + wb * c[i + 1] + wa * c[i];
                    acc[i + 1] += a * run;
                }
            }
            acc
        })
        .collect();
    let br = grid.branch();
    let values = (0..n)
        .map(|i| {
            let col: Vec<Complex64> = parts.iter().map(|p| p[i]).collect();
            let s = pairwise_sum(&col);
            2.0 * (br * c[i].conj() * s).re
        })
        .collect();
    ForceTrace { method, state: trace.state, times: trace.times(), values, f0_newton }
}

/// PM force: the exact expression evaluated with the PM amplitude.
pub fn pm_force(
    state: State,
    sd: &SpectralDensity,
    omega0: f64,
    times_h: f64,
    n: usize,
    grid: &ForceGrid,
    f0_newton: f64,
) -> ForceTrace {
    let values: Vec<Complex64> = (0..=n).into_par_iter().map(|i| pm_amplitude(state, sd, omega0, i as f64 * times_h)).collect();
    let tr = AmplitudeTrace { state, h: times_h, omega0, scheme: Default::default(), values };
    exact_force_with(&tr, grid, f0_newton, ForceMethod::Pm)
}

/// FM force at time t (closed form of the inner time integral).
pub fn fm_force(state: State, s: &MarkovSummary, grid: &ForceGrid, t: f64, denom: FmDenominator) -> f64 {
    let i = Complex64::i();
    let br = grid.branch();
    let terms: Vec<f64> = grid
        .omega
        .iter()
        .zip(grid.aw.iter())
        .map(|(&w, &a)| {
            let z = match state {
                State::Excited => {
                    let dp = w - s.omega0 + s.delta;
                    let g = match denom {
                        FmDenominator::HalfGamma => 0.5 * s.gamma,
                        FmDenominator::FullGamma => s.gamma,
                    };
                    let e = (-0.5 * s.gamma * t).exp();
                    let num = e * ((-i * dp * t).exp() - e);
                    // conj(c) I
                    num / Complex64::new(g, -dp)
                }
                State::Ground => {
                    let sp = w + s.omega0 + s.delta_g;
                    let x = sp * t;
                    if x.abs() < 1e-8 {
                        Complex64::new(t, 0.0)
                    } else {
                        -i * (1.0 - (-i * x).exp()) / sp
                    }
                }
            };
            2.0 * a * (br * z).re
        })
        .collect();
    pairwise_sum(&terms)
}

pub fn fm_force_trace(
    state: State,
    s: &MarkovSummary,
    grid: &ForceGrid,
    times: &[f64],
    denom: FmDenominator,
    f0_newton: f64,
) -> ForceTrace {
    let values = times.par_iter().map(|&t| fm_force(state, s, grid, t, denom)).collect();
    ForceTrace { method: ForceMethod::Fm, state, times: times.to_vec(), values, f0_newton }
}

/// (1 - cos(D t))/D with its small-argument series.
fn one_minus_cos_over(d: f64, t: f64) -> f64 {
    let x = d * t;
    if x.abs() < 1e-3 {
        return d * t * t * (0.5 - x * x / 24.0);
    }
    (1.0 - x.cos()) / d
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pm2Point {
    pub total: f64,
    /// |c|^2 x 2 \int W/D (principal value in the excited case)
    pub static_part: f64,
    pub dynamic_part: f64,
}

/// PM2 force at time t given |c(t)|^2.
pub fn pm2_force(state: State, abs2_c: f64, grid: &ForceGrid, omega0: f64, t: f64, fm2_static: f64) -> Pm2Point {
    let terms: Vec<f64> = grid
        .omega
        .iter()
        .zip(grid.aw.iter())
        .map(|(&w, &a)| a * one_minus_cos_over(state.detuning(w, omega0), t))
        .collect();
    let total = 2.0 * abs2_c * pairwise_sum(&terms);
    let static_part = abs2_c * fm2_static;
    Pm2Point { total, static_part, dynamic_part: total - static_part }
}

pub fn pm2_force_trace(trace: &AmplitudeTrace, grid: &ForceGrid, fm2_static: f64, f0_newton: f64) -> ForceTrace {
    let times = trace.times();
    let values = times
        .par_iter()
        .zip(trace.values.par_iter())
        .map(|(&t, c)| pm2_force(trace.state, c.norm_sqr(), grid, trace.omega0, t, fm2_static).total)
        .collect();
    ForceTrace { method: ForceMethod::Pm2, state: trace.state, times, values, f0_newton }
}

/// Static FM2 value: 2 \int W/(w + w0) (ground) or 2 PV \int W/(w - w0) (excited).
pub fn fm2_static_force(table: &ForceWeightTable, omega0: f64, state: State) -> Result<f64> {
    if table.w.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    match state {
        State::Ground => {
            let q = trapezoid_weights(&table.omega);
            let terms: Vec<f64> = (0..q.len()).map(|k| q[k] * table.w[k] / (table.omega[k] + omega0)).collect();
            Ok(2.0 * pairwise_sum(&terms))
        }
        State::Excited => Ok(2.0 * pv_integral(&table.omega, &table.w, omega0)?),
    }
}

/// FM2 trace: |c_FM(t)|^2 times the static value.
pub fn fm2_force_trace(state: State, s: &MarkovSummary, fm2_static: f64, times: &[f64], f0_newton: f64) -> ForceTrace {
    let values = times.iter().map(|&t| fm_amplitude(state, s, t).norm_sqr() * fm2_static).collect();
    ForceTrace { method: ForceMethod::Fm2, state, times: times.to_vec(), values, f0_newton }
}

/// Casimir-Polder force from the height derivative of the level shift,
/// F/F0 = (16 pi z0^4 / (3 kappa)) d(shift)/dz0, with J re-tabulated on the
/// same frequency grid at four neighbouring heights.
pub fn cp_force_from_shift(spec: &ReservoirSpec, omega: &[f64], omega0: f64, state: State, rel_step: f64) -> Result<f64> {
    if spec.backend == ReservoirBackend::LorentzianModel || spec.kappa == 0.0 || spec.material.is_reflectionless() {
        return Ok(0.0);
    }
    let z0 = spec.z0;
    let h = rel_step * z0;
    let shift_at = |z: f64| -> Result<f64> {
        let sp = ReservoirSpec { z0: z, ..*spec };
        let j = spectral_on_grid(&sp, omega)?;
        match state {
            State::Ground => {
                let q = trapezoid_weights(omega);
                let t: Vec<f64> = (0..q.len()).map(|k| q[k] * j[k] / (omega[k] + omega0)).collect();
                Ok(pairwise_sum(&t))
            }
            State::Excited => pv_integral(omega, &j, omega0),
        }
    };
    let d = (shift_at(z0 - 2.0 * h)? - 8.0 * shift_at(z0 - h)? + 8.0 * shift_at(z0 + h)? - shift_at(z0 + 2.0 * h)?)
        / (12.0 * h);
    Ok(16.0 * PI * z0.powi(4) / (3.0 * spec.kappa) * d)
}

/// Lateral weight table (Re dG/dx or Re dG/dy branch); zero for a
/// reciprocal half-space by symmetry.
pub fn lateral_weight_table(spec: &ReservoirSpec, omega: &[f64], axis: Axis) -> Result<ForceWeightTable> {
    if axis == Axis::Z {
        return Err(Error::Config("lateral_weight_table needs the x or y axis".into()));
    }
    let backend = match spec.backend {
        ReservoirBackend::LorentzianModel => {
            return Ok(ForceWeightTable { omega: omega.to_vec(), w: vec![0.0; omega.len()], axis: axis.into() })
        }
        ReservoirBackend::SommerfeldHalfSpace => GreensBackend::Sommerfeld,
        ReservoirBackend::QuasistaticHalfSpace => GreensBackend::Quasistatic,
    };
    let z4 = 16.0 * spec.z0.powi(4) / 3.0;
    let w: Vec<f64> = omega
        .par_iter()
        .map(|&w| Ok(z4 * w * w * d_alpha_force_weight(spec.z0, w, &spec.material, backend, axis)?))
        .collect::<Result<_>>()?;
    Ok(ForceWeightTable { omega: omega.to_vec(), w, axis: axis.into() })
}
