//! Reservoir spectral density J(w), the force weight table sampled on the same
//! grid, and the memory kernels built from J.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::greens::{scattered_gzz, Axis, GreensBackend, LorentzianModel};
use crate::material::{surface_plasmon_frequencies, MaterialConfig};
use crate::quad::{golden_max, pairwise_sum};
use crate::scenario::{ReservoirBackend, Scenario, State};

/// Everything needed to evaluate J and W at a single frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReservoirSpec {
    pub backend: ReservoirBackend,
    pub material: MaterialConfig,
    pub z0: f64,
    pub kappa: f64,
    pub lorentzian: Option<LorentzianModel>,
}

impl ReservoirSpec {
    pub fn from_scenario(s: &Scenario) -> Result<Self> {
        s.validate()?;
        Ok(ReservoirSpec {
            backend: s.backend,
            material: s.material,
            z0: s.atom.z0,
            kappa: s.kappa()?,
            lorentzian: s.lorentzian,
        })
    }

    /// (J, W/F0, quadrature error estimate of J) at one frequency.
    pub fn sample(&self, omega: f64) -> Result<(f64, f64, f64)> {
        let gb = match self.backend {
            ReservoirBackend::LorentzianModel => {
                let l = self
                    .lorentzian
                    .ok_or_else(|| Error::Config("Lorentzian backend without parameters".into()))?;
                return Ok((l.j(omega), 0.0, 0.0));
            }
            ReservoirBackend::SommerfeldHalfSpace => GreensBackend::Sommerfeld,
            ReservoirBackend::QuasistaticHalfSpace => GreensBackend::Quasistatic,
        };
        let g = scattered_gzz(self.z0, omega, &self.material, gb)?;
        let w2 = omega * omega;
        let j = self.kappa / PI * w2 * g.g_zz.im;
        let wt = 16.0 * self.z0.powi(4) / 3.0 * w2 * g.d_dz_g_zz.im;
        Ok((j, wt, self.kappa / PI * w2 * g.error))
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SpectralMeta {
    pub max_quadrature_error: f64,
    pub clipped_points: usize,
    /// Integral of the noise-level negatives set to zero.
    pub clipped_mass: f64,
    /// Integral of |J| over the retained negative part.
    pub negative_mass: f64,
    pub peak_omega: f64,
    pub peak_value: f64,
    pub fwhm: f64,
    pub samples_in_fwhm: usize,
}

/// Piecewise-linear J(w) on a strictly increasing grid in (0, omega_max].
#[derive(Debug, Clone, Serialize)]
pub struct SpectralDensity {
    pub omega: Vec<f64>,
    pub j: Vec<f64>,
    pub spec: ReservoirSpec,
    pub meta: SpectralMeta,
}

/// W(w)/F0 for the vertical force on the spectral grid.
#[derive(Debug, Clone, Serialize)]
pub struct ForceWeightTable {
    pub omega: Vec<f64>,
    pub w: Vec<f64>,
    pub axis: AxisTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AxisTag {
    X,
    Y,
    Z,
}

impl From<Axis> for AxisTag {
    fn from(a: Axis) -> Self {
        match a {
            Axis::X => AxisTag::X,
            Axis::Y => AxisTag::Y,
            Axis::Z => AxisTag::Z,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReservoirTables {
    pub spectral: SpectralDensity,
    pub weights: ForceWeightTable,
}

fn interp(x: &[f64], y: &[f64], t: f64) -> f64 {
    if t <= x[0] {
        return if t == x[0] { y[0] } else { 0.0 };
    }
    let n = x.len();
    if t >= x[n - 1] {
        return if t == x[n - 1] { y[n - 1] } else { 0.0 };
    }
    let k = x.partition_point(|v| *v <= t) - 1;
    let f = (t - x[k]) / (x[k + 1] - x[k]);
    y[k] + f * (y[k + 1] - y[k])
}

impl SpectralDensity {
    /// Piecewise-linear interpolant, zero outside the grid.
    pub fn value(&self, omega: f64) -> f64 {
        interp(&self.omega, &self.j, omega)
    }

    pub fn omega_min(&self) -> f64 {
        self.omega[0]
    }

    pub fn omega_max(&self) -> f64 {
        self.omega[self.omega.len() - 1]
    }

    /// Trapezoid integral of f(w) J(w) over the grid.
    pub fn integrate<F: Fn(f64) -> f64 + Sync>(&self, f: F) -> f64 {
        let terms: Vec<f64> = self
            .omega
            .windows(2)
            .zip(self.j.windows(2))
            .map(|(w, j)| 0.5 * (w[1] - w[0]) * (j[0] * f(w[0]) + j[1] * f(w[1])))
            .collect();
        pairwise_sum(&terms)
    }

    pub fn total_mass(&self) -> f64 {
        self.integrate(|_| 1.0)
    }

    pub fn is_zero(&self) -> bool {
        self.j.iter().all(|v| *v == 0.0)
    }

    /// Same spectral density restricted to every other grid node.
    pub fn coarsened(&self) -> SpectralDensity {
        let n = self.omega.len();
        let mut idx: Vec<usize> = (0..n).step_by(2).collect();
        if *idx.last().expect("non-empty grid") != n - 1 {
            idx.push(n - 1);
        }
        SpectralDensity {
            omega: idx.iter().map(|&i| self.omega[i]).collect(),
            j: idx.iter().map(|&i| self.j[i]).collect(),
            spec: self.spec,
            meta: self.meta.clone(),
        }
    }

    /// Build directly from samples (used by tests and analytic models).
    pub fn from_samples(omega: Vec<f64>, j: Vec<f64>, spec: ReservoirSpec) -> Result<Self> {
        Self::from_samples_with_noise(omega, j, &[], spec)
    }

    fn from_samples_with_noise(omega: Vec<f64>, j: Vec<f64>, noise: &[f64], spec: ReservoirSpec) -> Result<Self> {
        if omega.len() != j.len() || omega.len() < 2 {
            return Err(Error::Grid("omega and J lengths differ or fewer than 2 points".into()));
        }
        if omega.windows(2).any(|w| !(w[1] > w[0])) || !(omega[0] > 0.0) {
            return Err(Error::Grid("grid must be strictly increasing and positive".into()));
        }
        let mut sd = SpectralDensity { omega, j, spec, meta: SpectralMeta::default() };
        sd.clip(noise);
        sd.fill_peak_meta();
        Ok(sd)
    }

    /// Zero negatives at the noise level. Larger negative values are physical
    /// (the scattered field can lower the local density of states below its
    /// vacuum value above w_p) and are kept; their mass is recorded.
    fn clip(&mut self, noise: &[f64]) {
        let w = crate::quad::trapezoid_weights(&self.omega);
        let mut clipped = Vec::new();
        let mut kept = Vec::new();
        for k in 0..self.j.len() {
            let v = self.j[k];
            if v < 0.0 {
                if -v <= CLIP_FLOOR + noise.get(k).copied().unwrap_or(0.0) {
                    clipped.push(v * w[k]);
                    self.j[k] = 0.0;
                } else {
                    kept.push(v * w[k]);
                }
            }
        }
        self.meta.clipped_points = clipped.len();
        self.meta.clipped_mass = -pairwise_sum(&clipped);
        self.meta.negative_mass = -pairwise_sum(&kept);
    }

    fn fill_peak_meta(&mut self) {
        let (k, &pv) = self
            .j
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty");
        self.meta.peak_omega = self.omega[k];
        self.meta.peak_value = pv;
        if pv <= 0.0 {
            return;
        }
        let half = 0.5 * pv;
        let mut lo = k;
        while lo > 0 && self.j[lo] > half {
            lo -= 1;
        }
        let mut hi = k;
        while hi + 1 < self.j.len() && self.j[hi] > half {
            hi += 1;
        }
        let cross = |a: usize, b: usize| {
            let (ja, jb) = (self.j[a], self.j[b]);
            if ja == jb {
                self.omega[a]
            } else {
                self.omega[a] + (half - ja) / (jb - ja) * (self.omega[b] - self.omega[a])
            }
        };
        let left = if lo < k { cross(lo, lo + 1) } else { self.omega[k] };
        let right = if hi > k { cross(hi - 1, hi) } else { self.omega[k] };
        self.meta.fwhm = right - left;
        self.meta.samples_in_fwhm = self.omega.iter().filter(|w| **w >= left && **w <= right).count();
    }
}

fn sample_many(spec: &ReservoirSpec, omega: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
    omega.par_iter().map(|&w| spec.sample(w)).collect()
}

const CLIP_FLOOR: f64 = 1e-14;
/// Samples per FWHM used for the dense window around the peak.
const PEAK_SAMPLES_PER_FWHM: f64 = 60.0;
const PEAK_WINDOW_FWHM: f64 = 15.0;

/// Tabulate J and W on a peak-refined grid.
pub fn build_tables(s: &Scenario) -> Result<ReservoirTables> {
    let spec = ReservoirSpec::from_scenario(s)?;
    let g = s.omega_grid;
    let n = g.n_points;
    let dw = g.omega_max / n as f64;
    let mut grid: Vec<f64> = (1..=n).map(|k| k as f64 * dw).collect();
    grid.push(s.atom.omega0);

    let j_at = |w: f64| spec.sample(w).map(|v| v.0).unwrap_or(f64::NEG_INFINITY);
    if g.refine_peak {
        let base = sample_many(&spec, &grid)?;
        let mut cands: Vec<(f64, f64)> = grid.iter().zip(base.iter()).map(|(w, v)| (*w, v.0)).collect();
        let mut seeds = surface_plasmon_frequencies(&s.material);
        if let Some(l) = s.lorentzian {
            seeds.push(l.omega_center);
        }
        for w in seeds.into_iter().filter(|w| *w > 0.0 && *w < g.omega_max) {
            cands.push((w, j_at(w)));
        }
        let (wp, jp) = cands.iter().copied().max_by(|a, b| a.1.total_cmp(&b.1)).expect("candidates");
        if jp > 0.0 {
            let lo = (wp - dw).max(0.5 * dw);
            let hi = (wp + dw).min(g.omega_max);
            let w_star = golden_max(j_at, lo, hi, 1e-9 * wp.max(1.0));
            let (w_star, j_star) = if j_at(w_star) >= jp { (w_star, j_at(w_star)) } else { (wp, jp) };
            let half = 0.5 * j_star;
            let edge = |dir: f64| -> f64 {
                let mut step = dw.min(1e-4 * w_star.max(1e-3));
                let mut inside = w_star;
                loop {
                    let x = w_star + dir * step;
                    if x <= 0.5 * dw || x >= g.omega_max {
                        return x.clamp(0.5 * dw, g.omega_max);
                    }
                    if j_at(x) < half {
                        return crate::quad::bisect(|t| j_at(t) - half, inside, x, 1e-10);
                    }
                    inside = x;
                    step *= 2.0;
                }
            };
            let left = edge(-1.0);
            let right = edge(1.0);
            let fwhm = (right - left).max(1e-12);
            let spacing = fwhm / PEAK_SAMPLES_PER_FWHM;
            let a = (w_star - PEAK_WINDOW_FWHM * fwhm).max(0.5 * dw);
            let b = (w_star + PEAK_WINDOW_FWHM * fwhm).min(g.omega_max);
            let m = ((b - a) / spacing).ceil() as usize;
            for i in 0..=m {
                grid.push(a + (b - a) * i as f64 / m as f64);
            }
            grid.push(w_star);
        }
    }
    grid.sort_by(|a, b| a.total_cmp(b));
    grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * b.abs());

    let vals = sample_many(&spec, &grid)?;
    let j: Vec<f64> = vals.iter().map(|v| v.0).collect();
    let w: Vec<f64> = vals.iter().map(|v| v.1).collect();
    let max_err = vals
        .iter()
        .filter(|v| v.0.abs() > 0.0)
        .map(|v| v.2 / v.0.abs())
        .fold(0.0, f64::max);
    let noise: Vec<f64> = vals.iter().map(|v| v.2).collect();
    let mut sd = SpectralDensity::from_samples_with_noise(grid.clone(), j, &noise, spec)?;
    sd.meta.max_quadrature_error = max_err;
    Ok(ReservoirTables {
        spectral: sd,
        weights: ForceWeightTable { omega: grid, w, axis: AxisTag::Z },
    })
}

pub fn build_spectral_density(s: &Scenario) -> Result<SpectralDensity> {
    Ok(build_tables(s)?.spectral)
}

/// J re-tabulated on an existing grid with a different atom height (used by
/// the finite-difference route to the Casimir-Polder force).
pub fn spectral_on_grid(spec: &ReservoirSpec, omega: &[f64]) -> Result<Vec<f64>> {
    Ok(sample_many(spec, omega)?.into_iter().map(|v| v.0).collect())
}

impl ForceWeightTable {
    pub fn value(&self, omega: f64) -> f64 {
        interp(&self.omega, &self.w, omega)
    }

    pub fn zeros_like(sd: &SpectralDensity) -> Self {
        ForceWeightTable { omega: sd.omega.clone(), w: vec![0.0; sd.omega.len()], axis: AxisTag::Z }
    }
}

/// \int J(w) exp(-i w tau) dw by the trapezoid rule on the J grid. Segments
/// wider than pi/(5 tau) are subdivided with the linear interpolant of J.
pub fn spectral_transform(sd: &SpectralDensity, tau: f64) -> Complex64 {
    transform_on(&sd.omega, &sd.j, tau)
}

fn transform_on(x: &[f64], y: &[f64], tau: f64) -> Complex64 {
    let i = Complex64::i();
    if tau == 0.0 {
        let terms: Vec<f64> = x.windows(2).zip(y.windows(2)).map(|(w, j)| 0.5 * (w[1] - w[0]) * (j[0] + j[1])).collect();
        return Complex64::new(pairwise_sum(&terms), 0.0);
    }
    let dmax = PI / (5.0 * tau.abs());
    let mut terms: Vec<Complex64> = Vec::with_capacity(x.len());
    let mut ea = (-i * x[0] * tau).exp();
    for k in 0..x.len() - 1 {
        let (a, b) = (x[k], x[k + 1]);
        let (ja, jb) = (y[k], y[k + 1]);
        let eb = (-i * b * tau).exp();
        let len = b - a;
        let m = (len / dmax).ceil().max(1.0) as usize;
        if m == 1 {
            terms.push(0.5 * len * (ja * ea + jb * eb));
        } else {
            let d = len / m as f64;
            let step = (-i * d * tau).exp();
            let mut acc = 0.5 * (ja * ea + jb * eb);
            let mut ph = ea;
            for s in 1..m {
                ph *= step;
                let f = s as f64 / m as f64;
                acc += (ja + f * (jb - ja)) * ph;
            }
            terms.push(d * acc);
        }
        ea = eb;
    }
    pairwise_sum(&terms)
}

/// Trapezoid integral of y(w) f(w) on the nodes x, where segments wider than
/// `dmax` are subdivided and y is taken from its linear interpolant.
pub fn refined_trapezoid<F: Fn(f64) -> Complex64>(x: &[f64], y: &[f64], f: F, dmax: f64) -> Complex64 {
    let mut terms = Vec::with_capacity(x.len());
    for k in 0..x.len() - 1 {
        let (a, b) = (x[k], x[k + 1]);
        let (ya, yb) = (y[k], y[k + 1]);
        let len = b - a;
        let m = if dmax.is_finite() { (len / dmax).ceil().max(1.0) as usize } else { 1 };
        let d = len / m as f64;
        let mut acc = 0.5 * (ya * f(a) + yb * f(b));
        for s in 1..m {
            let u = s as f64 / m as f64;
            acc += (ya + u * (yb - ya)) * f(a + s as f64 * d);
        }
        terms.push(d * acc);
    }
    pairwise_sum(&terms)
}

/// PV \int y(w)/(w - x0) dw over the grid by singularity subtraction; x0
/// must be a grid node strictly inside the grid.
pub fn pv_integral(x: &[f64], y: &[f64], x0: f64) -> Result<f64> {
    let n = x.len();
    let k0 = x
        .iter()
        .position(|v| *v == x0)
        .ok_or_else(|| Error::Grid(format!("principal-value point {x0} is not a grid node")))?;
    if k0 == 0 || k0 == n - 1 {
        return Err(Error::Grid(format!("principal-value point {x0} on the grid boundary")));
    }
    let y0 = y[k0];
    let slope = 0.5 * ((y[k0] - y[k0 - 1]) / (x[k0] - x[k0 - 1]) + (y[k0 + 1] - y[k0]) / (x[k0 + 1] - x[k0]));
    let g: Vec<f64> = (0..n).map(|k| if k == k0 { slope } else { (y[k] - y0) / (x[k] - x0) }).collect();
    let terms: Vec<f64> = (0..n - 1).map(|k| 0.5 * (x[k + 1] - x[k]) * (g[k] + g[k + 1])).collect();
    Ok(pairwise_sum(&terms) + y0 * ((x[n - 1] - x0) / (x0 - x[0])).ln())
}

/// Memory kernel K(tau) = -\int J(w) exp(-i (w -+ w0) tau) dw.
pub fn kernel_at(tau: f64, sd: &SpectralDensity, state: State, omega0: f64) -> Complex64 {
    let t = spectral_transform(sd, tau);
    let shift = match state {
        State::Excited => Complex64::new(0.0, omega0 * tau).exp(),
        State::Ground => Complex64::new(0.0, -omega0 * tau).exp(),
    };
    -shift * t
}

/// Kernel sampled at tau = i h, i = 0..=n.
#[derive(Debug, Clone)]
pub struct MemoryKernel {
    pub state: State,
    pub omega0: f64,
    pub h: f64,
    pub samples: Vec<Complex64>,
}

impl MemoryKernel {
    pub fn precompute(sd: &SpectralDensity, state: State, omega0: f64, h: f64, n: usize) -> Self {
        let samples: Vec<Complex64> = (0..=n).into_par_iter().map(|k| kernel_at(k as f64 * h, sd, state, omega0)).collect();
        MemoryKernel { state, omega0, h, samples }
    }

    /// Kernel from a closure, e.g. an analytic model.
    pub fn from_fn<F: Fn(f64) -> Complex64 + Sync>(state: State, omega0: f64, h: f64, n: usize, f: F) -> Self {
        let samples = (0..=n).into_par_iter().map(|k| f(k as f64 * h)).collect();
        MemoryKernel { state, omega0, h, samples }
    }
}

/// Change of K(tau) when the J grid is coarsened by 2x; a conservative
/// estimate of the frequency-quadrature error on the full grid.
pub fn kernel_quadrature_estimate(sd: &SpectralDensity, tau: f64) -> f64 {
    let c = sd.coarsened();
    (spectral_transform(sd, tau) - spectral_transform(&c, tau)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate1, Tolerance};

    fn lorentz_sd(m: LorentzianModel, wmax: f64, n: usize) -> SpectralDensity {
        lorentz_on(m, wmax / n as f64, wmax, n)
    }

    fn lorentz_on(m: LorentzianModel, a: f64, b: f64, n: usize) -> SpectralDensity {
        let omega: Vec<f64> = (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect();
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
    fn kernel_zero_lag_is_minus_mass() {
        let m = LorentzianModel::new(0.1, 0.05, 0.65).unwrap();
        let sd = lorentz_sd(m, 3.0, 3000);
        let k0 = kernel_at(0.0, &sd, State::Excited, 0.65);
        assert!(k0.im == 0.0 && k0.re < 0.0);
        assert!((k0.re + sd.total_mass()).abs() < 1e-15);
    }

    #[test]
    fn lorentzian_kernel_matches_band_integral() {
        let m = LorentzianModel::new(0.1, 0.05, 0.65).unwrap();
        let sd = lorentz_sd(m, 3.0, 30000);
        let (a, b) = (sd.omega_min(), sd.omega_max());
        let tol = Tolerance { abs: 1e-16, rel: 1e-12, max_intervals: 20000 };
        for lt in [0.0, 0.5, 2.0, 5.0] {
            let tau = lt / m.lambda;
            let k = kernel_at(tau, &sd, State::Excited, 0.65);
            let (oracle, _) = integrate1(
                |w| -m.j(w) * Complex64::new(0.0, -(w - 0.65) * tau).exp(),
                a,
                b,
                &[0.65],
                tol,
            )
            .unwrap();
            assert!((k - oracle).norm() < 1e-7 * 0.01, "lt = {lt}: {k} vs {oracle}");
            // the infinite-band closed form differs only by the clipped tails
            let closed = -0.01 * (-m.lambda * tau).exp();
            assert!((k.re - closed).abs() < 0.05 * 0.01);
        }
    }

    #[test]
    fn hermitian_autocorrelation() {
        let m = LorentzianModel::new(0.1, 0.02, 0.7).unwrap();
        let sd = lorentz_sd(m, 3.0, 2000);
        for tau in [0.3, 4.0, 17.0] {
            let p = spectral_transform(&sd, tau);
            let q = spectral_transform(&sd, -tau);
            assert!((p - q.conj()).norm() < 1e-14);
        }
    }

    #[test]
    fn ground_and_excited_differ_by_phase_only() {
        let m = LorentzianModel::new(0.1, 0.02, 0.7).unwrap();
        let sd = lorentz_sd(m, 3.0, 2000);
        for tau in [0.0, 1.3, 40.0] {
            let e = kernel_at(tau, &sd, State::Excited, 0.65);
            let g = kernel_at(tau, &sd, State::Ground, 0.65);
            assert!((e.norm() - g.norm()).abs() < 1e-12 * e.norm().max(1e-300));
            let e_neg = kernel_at(tau, &sd, State::Excited, -0.65);
            assert!((e_neg - g).norm() < 1e-12 * g.norm().max(1e-300));
        }
    }

    #[test]
    fn grid_doubling_within_estimate() {
        let m = LorentzianModel::new(0.1, 0.03, 0.65).unwrap();
        let sd = lorentz_on(m, 0.002, 3.0, 1500);
        let fine = lorentz_on(m, 0.002, 3.0, 2999);
        for tau in [1.0, 10.0, 60.0] {
            let est = kernel_quadrature_estimate(&sd, tau);
            let change = (spectral_transform(&sd, tau) - spectral_transform(&fine, tau)).norm();
            assert!(change <= est, "tau = {tau}: change {change:e} > estimate {est:e}");
        }
    }

    #[test]
    fn lorentzian_pass_through() {
        let m = LorentzianModel::new(0.2, 0.01, 0.66).unwrap();
        let mut s = Scenario::weak(State::Excited);
        s.backend = ReservoirBackend::LorentzianModel;
        s.lorentzian = Some(m);
        s.omega_grid.n_points = 500;
        let t = build_tables(&s).unwrap();
        for (w, j) in t.spectral.omega.iter().zip(t.spectral.j.iter()) {
            assert!((j - m.j(*w)).abs() <= 1e-12 * m.j(*w));
        }
        assert!(t.spectral.meta.samples_in_fwhm >= 30);
    }

    #[test]
    fn reflectionless_gives_zero_density() {
        let mut s = Scenario::weak(State::Excited);
        s.material.omega_p = 0.0;
        s.omega_grid.n_points = 200;
        let t = build_tables(&s).unwrap();
        assert!(t.spectral.is_zero());
    }
}
