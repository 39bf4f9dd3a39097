//! Second-kind Volterra equation dc/dt = \int_0^t K(t - s) c(s) ds, c(0) = 1.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::greens::LorentzianModel;
use crate::quad::pairwise_sum;
use crate::scenario::State;
use crate::spectral::{MemoryKernel, SpectralDensity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum Scheme {
    /// Trapezoid in time and in the memory integral; second order.
    #[default]
    Trapezoidal,
    /// Forward difference in time with trapezoid memory; first order.
    ForwardDifference,
}

#[derive(Debug, Clone, Serialize)]
pub struct AmplitudeTrace {
    pub state: State,
    pub h: f64,
    pub omega0: f64,
    pub scheme: Scheme,
    pub values: Vec<Complex64>,
}

impl AmplitudeTrace {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn t(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.values.len()).map(|i| self.t(i)).collect()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.values.iter().map(|c| c.norm_sqr()).collect()
    }

    /// Amplitude with the bare phase restored: c e^{-i w0 t} for the excited
    /// state and c e^{+i w0 t} for the ground state.
    pub fn with_bare_phase(&self) -> Vec<Complex64> {
        let s = match self.state {
            State::Excited => -1.0,
            State::Ground => 1.0,
        };
        self.values
            .iter()
            .enumerate()
            .map(|(i, c)| c * Complex64::new(0.0, s * self.omega0 * self.t(i)).exp())
            .collect()
    }

    /// Linear interpolation of the amplitude at time t (clamped to the trace).
    pub fn at(&self, t: f64) -> Complex64 {
        let x = (t / self.h).max(0.0);
        let k = (x.floor() as usize).min(self.values.len() - 1);
        if k + 1 >= self.values.len() {
            return self.values[self.values.len() - 1];
        }
        let f = x - k as f64;
        self.values[k] * (1.0 - f) + self.values[k + 1] * f
    }
}

/// Above this length the convolution sum is split into fixed-size chunks
/// reduced in parallel and combined pairwise in index order.
const PAR_THRESHOLD: usize = 8192;
const CHUNK: usize = 2048;

/// sum_{j=1}^{m} K[i - j] c[j]
fn conv(k: &[Complex64], c: &[Complex64], i: usize, m: usize) -> Complex64 {
    let term = |j: usize| k[i - j] * c[j];
    if m < PAR_THRESHOLD {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 1..=m {
            acc += term(j);
        }
        return acc;
    }
    let starts: Vec<usize> = (1..=m).step_by(CHUNK).collect();
    let parts: Vec<Complex64> = starts
        .par_iter()
        .map(|&a| {
            let b = (a + CHUNK - 1).min(m);
            let mut acc = Complex64::new(0.0, 0.0);
            for j in a..=b {
                acc += term(j);
            }
            acc
        })
        .collect();
    pairwise_sum(&parts)
}

/// Solve on the kernel's native step for `n_steps` steps.
pub fn solve_vie(kernel: &MemoryKernel, n_steps: usize, scheme: Scheme) -> Result<AmplitudeTrace> {
    let k = &kernel.samples;
    if k.len() < n_steps + 1 {
        return Err(Error::Grid(format!(
            "kernel has {} samples, {} steps need {}",
            k.len(),
            n_steps,
            n_steps + 1
        )));
    }
    let h = kernel.h;
    let mut c = Vec::with_capacity(n_steps + 1);
    c.push(Complex64::new(1.0, 0.0));
    // S_i = h [K_i c_0 / 2 + sum_{j=1}^{i-1} K_{i-j} c_j]; F_i = S_i + h K_0 c_i / 2
    let s_of = |c: &[Complex64], i: usize| -> Complex64 {
        if i == 0 {
            return Complex64::new(0.0, 0.0);
        }
        h * (0.5 * k[i] * c[0] + conv(k, c, i, i - 1))
    };
    let k0 = k[0];
    let denom = Complex64::new(1.0, 0.0) - 0.25 * h * h * k0;
    let mut s_i = Complex64::new(0.0, 0.0);
    for i in 0..n_steps {
        let ci = c[i];
        let f_i = s_i + 0.5 * h * k0 * ci;
        // S_{i+1} only involves c_0..c_i
        let s_next = s_of(&c, i + 1);
        let next = match scheme {
            Scheme::Trapezoidal => (ci + 0.5 * h * (f_i + s_next)) / denom,
            Scheme::ForwardDifference => ci + h * f_i,
        };
        c.push(next);
        s_i = s_next;
    }
    Ok(AmplitudeTrace { state: kernel.state, h, omega0: kernel.omega0, scheme, values: c })
}

/// Largest step that resolves the fastest kernel oscillation.
pub fn step_budget(omega_max: f64, omega0: f64, gamma: f64, state: State) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    match state {
        State::Ground => tau / (20.0 * (omega_max + omega0)),
        State::Excited => tau / (20.0 * (omega_max - omega0).max(gamma)),
    }
}

pub fn check_budget(h: f64, limit: f64, state: State) -> Result<()> {
    if h > limit * (1.0 + 1e-12) {
        return Err(Error::StepBudget { h, limit, state: state.label().to_string() });
    }
    Ok(())
}

/// Steps needed to reach t_final within the budget, rounded up to even so
/// that a half-resolution rerun shares every other time.
pub fn default_steps(t_final: f64, limit: f64) -> usize {
    let n = (t_final / limit).ceil().max(2.0) as usize;
    n + n % 2
}

/// Tabulate the kernel of `sd` and solve up to t_final.
pub fn run_population(
    sd: &SpectralDensity,
    state: State,
    omega0: f64,
    gamma: f64,
    t_final: f64,
    n_steps: Option<usize>,
    scheme: Scheme,
) -> Result<AmplitudeTrace> {
    if !(t_final > 0.0) {
        return Err(Error::Config(format!("t_final must be positive, got {t_final}")));
    }
    let limit = step_budget(sd.omega_max(), omega0, gamma, state);
    let n = n_steps.unwrap_or_else(|| default_steps(t_final, limit));
    if n == 0 {
        return Err(Error::Config("n_steps must be positive".into()));
    }
    let h = t_final / n as f64;
    check_budget(h, limit, state)?;
    let kernel = MemoryKernel::precompute(sd, state, omega0, h, n);
    solve_vie(&kernel, n, scheme)
}

/// Closed form for the kernel -g^2 exp(-(lambda + i Delta) tau), Delta = w_c - w0.
pub fn lorentzian_closed_form(m: &LorentzianModel, omega0: f64, t: f64) -> Complex64 {
    let a = Complex64::new(m.lambda, m.omega_center - omega0);
    let om = (a * a - 4.0 * m.g_rabi * m.g_rabi).sqrt();
    let half = 0.5 * t;
    let e = (-a * half).exp();
    if om.norm() < 1e-12 {
        return e * (1.0 + a * half);
    }
    e * ((om * half).cosh() + a / om * (om * half).sinh())
}

pub fn lorentzian_kernel(m: &LorentzianModel, omega0: f64, tau: f64) -> Complex64 {
    -m.g_rabi * m.g_rabi * (-Complex64::new(m.lambda, m.omega_center - omega0) * tau).exp()
}

/// Max abs error against the closed form on [0, t_final] with n steps.
pub fn lorentzian_error(m: &LorentzianModel, omega0: f64, t_final: f64, n: usize, scheme: Scheme) -> Result<f64> {
    let h = t_final / n as f64;
    let kernel = MemoryKernel::from_fn(State::Excited, omega0, h, n, |t| lorentzian_kernel(m, omega0, t));
    let tr = solve_vie(&kernel, n, scheme)?;
    Ok(tr
        .values
        .iter()
        .enumerate()
        .map(|(i, c)| (c - lorentzian_closed_form(m, omega0, tr.t(i))).norm())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Order {
    Exact,
    Measured(f64),
}

/// Observed order from errors at (h, h/2, h/4) against the Lorentzian oracle.
pub fn convergence_order(m: &LorentzianModel, omega0: f64, t_final: f64, n: usize, scheme: Scheme) -> Result<Order> {
    let e: Vec<f64> = [n, 2 * n, 4 * n]
        .iter()
        .map(|&k| lorentzian_error(m, omega0, t_final, k, scheme))
        .collect::<Result<_>>()?;
    if e.iter().all(|v| *v == 0.0) {
        return Ok(Order::Exact);
    }
    let p1 = (e[0] / e[1]).log2();
    let p2 = (e[1] / e[2]).log2();
    Ok(Order::Measured(0.5 * (p1 + p2)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_kernel_is_identity() {
        let k = MemoryKernel::from_fn(State::Excited, 0.65, 0.1, 50, |_| Complex64::new(0.0, 0.0));
        for s in [Scheme::Trapezoidal, Scheme::ForwardDifference] {
            let tr = solve_vie(&k, 50, s).unwrap();
            assert!(tr.values.iter().all(|c| *c == Complex64::new(1.0, 0.0)));
        }
    }

    #[test]
    fn closed_form_satisfies_ode() {
        let m = LorentzianModel::new(0.3, 0.05, 0.7).unwrap();
        let f = |t| lorentzian_closed_form(&m, 0.65, t);
        let a = Complex64::new(m.lambda, m.omega_center - 0.65);
        let dt = 1e-4;
        for t in [0.5, 3.0, 11.0] {
            let d1 = (f(t + dt) - f(t - dt)) / (2.0 * dt);
            let d2 = (f(t + dt) - 2.0 * f(t) + f(t - dt)) / (dt * dt);
            let r = d2 + a * d1 + m.g_rabi * m.g_rabi * f(t);
            assert!(r.norm() < 1e-6, "residual {r}");
        }
        assert!((f(0.0) - 1.0).norm() < 1e-15);
    }

    #[test]
    fn trapezoid_second_order_forward_first() {
        let m = LorentzianModel::new(0.1, 0.05, 0.67).unwrap();
        match convergence_order(&m, 0.65, 40.0, 200, Scheme::Trapezoidal).unwrap() {
            Order::Measured(p) => assert!((p - 2.0).abs() < 0.2, "p = {p}"),
            Order::Exact => panic!(),
        }
        match convergence_order(&m, 0.65, 40.0, 200, Scheme::ForwardDifference).unwrap() {
            Order::Measured(p) => assert!((p - 1.0).abs() < 0.2, "p = {p}"),
            Order::Exact => panic!(),
        }
    }

    #[test]
    fn budget_violation_is_reported() {
        let e = check_budget(0.2, 0.1, State::Ground).unwrap_err();
        assert_eq!(e.exit_code(), 4);
        assert!(check_budget(0.1, 0.1, State::Ground).is_ok());
    }

    #[test]
    fn chunked_sum_matches_serial() {
        let n = PAR_THRESHOLD + 3 * CHUNK + 17;
        let k: Vec<Complex64> = (0..=n).map(|i| Complex64::new((i as f64 * 0.01).cos(), (i as f64 * 0.003).sin())).collect();
        let c: Vec<Complex64> = (0..=n).map(|i| Complex64::new(1.0 / (1.0 + i as f64), 0.5)).collect();
        let a = conv(&k, &c, n, n - 1);
        let mut b = Complex64::new(0.0, 0.0);
        for j in 1..n {
            b += k[n - j] * c[j];
        }
        assert!((a - b).norm() < 1e-10 * b.norm());
        assert_eq!(a, conv(&k, &c, n, n - 1));
    }
}
