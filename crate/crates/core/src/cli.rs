//! Subcommand runner behind the `reservoir-dyn` binary. Every subcommand
//! produces its tables in memory; files are written only once all succeed.

use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::force::{
    cp_force_from_shift, exact_force, fm2_force_trace, fm2_static_force, fm_force_trace, pm2_force_trace, FmDenominator,
    ForceGrid,
};
use crate::greens::{scattered_gzz, GreensBackend};
use crate::laplace::{asymptotic_cp_force, find_pole, root_sign_changes};
use crate::markov::{decay_rate_direct, fm_amplitude, pm_amplitude, MarkovSummary};
use crate::output::{module_versions, write_all, CsvTable, RunManifest};
use crate::scenario::{ReservoirBackend, Scenario, State};
use crate::spectral::{build_tables, kernel_quadrature_estimate, MemoryKernel, ReservoirTables};
use crate::units::{compute_coupling_g, DipoleSpec};
use crate::volterra::{run_population, solve_vie, AmplitudeTrace, Scheme};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Z0Sweep {
    pub z0_min: f64,
    pub z0_max: f64,
    pub count: usize,
}

impl Z0Sweep {
    /// Geometric spacing from z0_min to z0_max.
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.z0_min > 0.0 && self.z0_max > self.z0_min) || self.count < 2 {
            return Err(Error::Config(format!(
                "z0 sweep needs 0 < z0_min < z0_max and count >= 2 (got {}, {}, {})",
                self.z0_min, self.z0_max, self.count
            )));
        }
        let r = (self.z0_max / self.z0_min).ln();
        Ok((0..self.count)
            .map(|k| self.z0_min * (r * k as f64 / (self.count - 1) as f64).exp())
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Command {
    Population { markov: bool },
    Force { denominator: FmDenominator },
    CpAsymptotic(Z0Sweep),
    Poles,
    MarkovSummary,
    GreensDump,
    SpectralDump,
    SweepZ0(Z0Sweep),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Population { .. } => "population",
            Command::Force { .. } => "force",
            Command::CpAsymptotic(_) => "cp-asymptotic",
            Command::Poles => "poles",
            Command::MarkovSummary => "markov-summary",
            Command::GreensDump => "greens-dump",
            Command::SpectralDump => "spectral-dump",
            Command::SweepZ0(_) => "sweep-z0",
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Overrides the scenario's n_steps.
    pub n_steps: Option<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub tables: Vec<CsvTable>,
    pub estimates: BTreeMap<String, f64>,
}

/// Tables and Markov quantities shared by the time-domain subcommands.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub scenario: Scenario,
    pub tables: ReservoirTables,
    pub markov: MarkovSummary,
    /// Final time in 1/w_p.
    pub t_final: f64,
    pub f0_newton: f64,
}

pub fn prepare(s: &Scenario) -> Result<Prepared> {
    let tables = build_tables(s)?;
    let markov = MarkovSummary::compute(&tables.spectral, s.atom.omega0)?;
    let t_final = s.t_final_omega_p(markov.gamma)?;
    let d = s.atom.dipole_cm(&s.units)?;
    Ok(Prepared { scenario: *s, tables, markov, t_final, f0_newton: s.units.force_scale_newton(d, s.atom.z0) })
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read scenario {}: {e}", path.display())))?;
    Scenario::parse(&text)
}

/// Amplitude trace plus a Richardson estimate of the |c|^2 error, max over
/// the shared times of |p_n - p_{n/2}| / 3 (second-order scheme). NaN when
/// the step count is odd.
pub fn population_with_estimate(p: &Prepared, state: State, n_steps: Option<usize>) -> Result<(AmplitudeTrace, f64)> {
    let sd = &p.tables.spectral;
    let w0 = p.scenario.atom.omega0;
    let tr = run_population(sd, state, w0, p.markov.gamma, p.t_final, n_steps, Scheme::Trapezoidal)?;
    let n = tr.len() - 1;
    if n % 2 != 0 || n < 4 {
        return Ok((tr, f64::NAN));
    }
    // the coarse run is only a yardstick, so it may exceed the step budget
    let half = n / 2;
    let k = MemoryKernel::precompute(sd, state, w0, 2.0 * tr.h, half);
    let coarse = solve_vie(&k, half, Scheme::Trapezoidal)?;
    let est = (0..=half)
        .map(|i| (coarse.values[i].norm_sqr() - tr.values[2 * i].norm_sqr()).abs() / 3.0)
        .fold(0.0, f64::max);
    Ok((tr, est))
}

fn common_comments(t: &mut CsvTable, p: &Prepared, state: State) {
    t.comment(format!("state: {}", state.label()));
    t.comment(format!("gamma_over_omega_p: {:.11e}", p.markov.gamma));
    t.comment(format!("f0_newton: {:.11e}", p.f0_newton));
}

fn population(p: &Prepared, markov: bool, opts: &RunOptions, est: &mut BTreeMap<String, f64>) -> Result<CsvTable> {
    let s = &p.scenario;
    let (tr, rich) = population_with_estimate(p, s.state, opts.n_steps.or(s.time_grid.n_steps))?;
    est.insert("volterra.richardson_abs2".into(), rich);
    est.insert("kernels.quadrature_at_t_final".into(), kernel_quadrature_estimate(&p.tables.spectral, p.t_final));
    let mut cols = vec!["t_gamma", "t_omega_p", "re_c", "im_c", "abs2_c"];
    if markov {
        cols.extend(["abs2_fm", "abs2_pm"]);
    }
    let mut t = CsvTable::new("population", &cols);
    common_comments(&mut t, p, s.state);
    t.comment(format!("n_steps: {}", tr.len() - 1));
    let times = tr.times();
    let pm: Vec<Complex64> = if markov {
        times
            .par_iter()
            .map(|&x| pm_amplitude(s.state, &p.tables.spectral, s.atom.omega0, x))
            .collect()
    } else {
        Vec::new()
    };
    for (i, c) in tr.values.iter().enumerate() {
        let x = times[i];
        let mut row = vec![x * p.markov.gamma, x, c.re, c.im, c.norm_sqr()];
        if markov {
            row.push(fm_amplitude(s.state, &p.markov, x).norm_sqr());
            row.push(pm[i].norm_sqr());
        }
        t.push(row);
    }
    let ys: &[&str] = if markov { &["abs2_c", "abs2_fm", "abs2_pm"] } else { &["abs2_c"] };
    Ok(t.with_plot("t_gamma", ys))
}

fn force(p: &Prepared, denom: FmDenominator, opts: &RunOptions, est: &mut BTreeMap<String, f64>) -> Result<CsvTable> {
    let s = &p.scenario;
    let state = s.state;
    let (tr, rich) = population_with_estimate(p, state, opts.n_steps.or(s.time_grid.n_steps))?;
    est.insert("volterra.richardson_abs2".into(), rich);
    let grid = ForceGrid::new(&p.tables.weights, s.atom.omega0, p.t_final);
    let times = tr.times();
    let exact = exact_force(&tr, &grid, p.f0_newton);
    let fm = fm_force_trace(state, &p.markov, &grid, &times, denom, p.f0_newton);
    let fm2_static = fm2_static_force(&p.tables.weights, s.atom.omega0, state)?;
    let pm2 = pm2_force_trace(&tr, &grid, fm2_static, p.f0_newton);
    let fm2 = fm2_force_trace(state, &p.markov, fm2_static, &times, p.f0_newton);
    let peak = exact.peak();
    if peak > 0.0 {
        est.insert("force.exact_f0_over_peak".into(), exact.values[0].abs() / peak);
    }
    let mut t = CsvTable::new("force", &["t_gamma", "f_exact_over_f0", "f_fm_over_f0", "f_pm2_over_f0", "f_fm2_over_f0"]);
    common_comments(&mut t, p, state);
    t.comment(format!("fm2_static_over_f0: {fm2_static:.11e}"));
    t.comment(format!("fm_denominator: {denom:?}"));
    for i in 0..times.len() {
        t.push(vec![times[i] * p.markov.gamma, exact.values[i], fm.values[i], pm2.values[i], fm2.values[i]]);
    }
    Ok(t.with_plot("t_gamma", &["f_exact_over_f0", "f_fm_over_f0", "f_pm2_over_f0", "f_fm2_over_f0"]))
}

fn markov_summary(p: &Prepared, est: &mut BTreeMap<String, f64>) -> Result<CsvTable> {
    let w0 = p.scenario.atom.omega0;
    let m = &p.markov;
    let direct = decay_rate_direct(&p.tables.spectral.spec, w0)?;
    if m.gamma != 0.0 {
        est.insert("markov.gamma_cross_path".into(), (direct - m.gamma).abs() / m.gamma.abs());
    }
    let mut t = CsvTable::new("markov_summary", &["gamma_over_omega0", "delta_over_omega0", "delta_g_over_omega0"]);
    t.push(vec![m.gamma / w0, m.delta / w0, m.delta_g / w0]);
    Ok(t)
}

fn poles(p: &Prepared, est: &mut BTreeMap<String, f64>) -> Result<CsvTable> {
    let s = &p.scenario;
    let w0 = s.atom.omega0;
    let sd = &p.tables.spectral;
    let pole = find_pole(sd, w0)?;
    est.insert("laplace.root_sign_changes".into(), root_sign_changes(sd, w0, 400)? as f64);
    est.insert("laplace.dprime".into(), pole.dprime);
    let cp = asymptotic_cp_force(&pole, &p.tables.weights);
    let mut t = CsvTable::new(
        "poles",
        &["alpha_p_over_omega0", "c_mag", "delta_g_over_omega0", "cp_nm_over_f0", "cp_fm_over_f0"],
    );
    t.comment("state: ground (pole of the ground-state amplitude transform)");
    t.push(vec![pole.alpha_p / w0, pole.c_mag, pole.delta_g_ref / w0, cp.non_markov, cp.fm]);
    Ok(t)
}

/// Scenario at a new height with the dipole held fixed.
fn at_height(s: &Scenario, z0: f64) -> Result<Scenario> {
    let d = s.atom.dipole_cm(&s.units)?;
    let mut out = *s;
    out.atom.dipole = DipoleSpec::Explicit(d);
    out.atom.z0 = z0;
    out.validate()?;
    Ok(out)
}

fn cp_asymptotic(s: &Scenario, sweep: &Z0Sweep) -> Result<CsvTable> {
    let mut t = CsvTable::new(
        "cp_asymptotic",
        &["z0_over_c_omega_p", "g", "cp_nm_over_f0", "cp_fm_over_f0", "cp_shift_over_f0"],
    );
    t.comment("ground state, dipole fixed across heights");
    for z in sweep.points()? {
        let sz = at_height(s, z)?;
        let tb = build_tables(&sz)?;
        let pole = find_pole(&tb.spectral, sz.atom.omega0)?;
        let cp = asymptotic_cp_force(&pole, &tb.weights);
        let shift = cp_force_from_shift(&tb.spectral.spec, &tb.spectral.omega, sz.atom.omega0, State::Ground, 1e-3)?;
        t.push(vec![z, compute_coupling_g(&sz.atom, &sz.units)?, cp.non_markov, cp.fm, shift]);
    }
    Ok(t.with_plot("z0_over_c_omega_p", &["cp_nm_over_f0", "cp_fm_over_f0"]))
}

fn sweep_z0(s: &Scenario, sweep: &Z0Sweep) -> Result<CsvTable> {
    let mut t = CsvTable::new(
        "sweep_z0",
        &["z0_over_c_omega_p", "g", "gamma_over_omega0", "delta_g_over_omega0"],
    );
    t.comment("dipole fixed across heights");
    let w0 = s.atom.omega0;
    let mut last_g = f64::INFINITY;
    for z in sweep.points()? {
        let sz = at_height(s, z)?;
        let g = compute_coupling_g(&sz.atom, &sz.units)?;
        if !(g < last_g) {
            return Err(Error::Domain(format!("g is not decreasing in z0 at z0 = {z}")));
        }
        last_g = g;
        let tb = build_tables(&sz)?;
        let m = MarkovSummary::compute(&tb.spectral, w0)?;
        t.push(vec![z, g, m.gamma / w0, m.delta_g / w0]);
    }
    Ok(t.with_plot("z0_over_c_omega_p", &["g"]))
}

fn greens_dump(p: &Prepared) -> Result<CsvTable> {
    let s = &p.scenario;
    let backend = match s.backend {
        ReservoirBackend::SommerfeldHalfSpace => GreensBackend::Sommerfeld,
        ReservoirBackend::QuasistaticHalfSpace => GreensBackend::Quasistatic,
        ReservoirBackend::LorentzianModel => {
            return Err(Error::Config("greens-dump needs a half-space backend".into()));
        }
    };
    let w = &p.tables.weights;
    let g: Vec<Complex64> = w
        .omega
        .par_iter()
        .map(|&x| Ok(scattered_gzz(s.atom.z0, x, &s.material, backend)?.g_zz))
        .collect::<Result<_>>()?;
    let mut t = CsvTable::new("greens_dump", &["omega_over_omega_p", "re_gzz", "im_gzz", "dz_weight"]);
    t.comment(format!("z0_over_c_omega_p: {:.11e}", s.atom.z0));
    for k in 0..w.omega.len() {
        t.push(vec![w.omega[k], g[k].re, g[k].im, w.w[k]]);
    }
    Ok(t.with_plot("omega_over_omega_p", &["im_gzz"]))
}

fn spectral_dump(p: &Prepared, est: &mut BTreeMap<String, f64>) -> CsvTable {
    let sd = &p.tables.spectral;
    est.insert("kernels.max_relative_quadrature_error".into(), sd.meta.max_quadrature_error);
    est.insert("kernels.negative_mass".into(), sd.meta.negative_mass);
    let mut t = CsvTable::new("spectral_dump", &["omega_over_omega_p", "J"]);
    t.comment(format!("peak_omega: {:.11e}", sd.meta.peak_omega));
    for (w, j) in sd.omega.iter().zip(sd.j.iter()) {
        t.push(vec![*w, *j]);
    }
    t.with_plot("omega_over_omega_p", &["J"])
}

pub fn execute(cmd: &Command, s: &Scenario, opts: &RunOptions) -> Result<RunOutput> {
    s.validate()?;
    let mut out = RunOutput::default();
    let est = &mut out.estimates;
    let table = match cmd {
        Command::CpAsymptotic(sw) => cp_asymptotic(s, sw)?,
        Command::SweepZ0(sw) => sweep_z0(s, sw)?,
        _ => {
            let p = prepare(s)?;
            est.insert("greens.max_relative_quadrature_error".into(), p.tables.spectral.meta.max_quadrature_error);
            match cmd {
                Command::Population { markov } => population(&p, *markov, opts, est)?,
                Command::Force { denominator } => force(&p, *denominator, opts, est)?,
                Command::Poles => poles(&p, est)?,
                Command::MarkovSummary => markov_summary(&p, est)?,
                Command::GreensDump => greens_dump(&p)?,
                Command::SpectralDump => spectral_dump(&p, est),
                Command::CpAsymptotic(_) | Command::SweepZ0(_) => unreachable!(),
            }
        }
    };
    out.tables.push(table);
    Ok(out)
}

/// Built-in scenario and command of preset figN (2..=9).
pub fn preset(fig: u32) -> Result<(Scenario, Command)> {
    let pop = Command::Population { markov: true };
    let force = Command::Force { denominator: FmDenominator::default() };
    Ok(match fig {
        2 => (Scenario::weak(State::Excited), pop),
        3 => (Scenario::strong(State::Excited), pop),
        4 => (Scenario::weak(State::Excited), force),
        5 => (Scenario::strong(State::Excited), force),
        6 => (Scenario::strong(State::Ground), pop),
        7 => (Scenario::weak(State::Ground), force),
        8 => (Scenario::strong(State::Ground), force),
        9 => (
            Scenario::weak(State::Ground),
            Command::CpAsymptotic(Z0Sweep { z0_min: 0.5, z0_max: 1.0, count: 6 }),
        ),
        _ => return Err(Error::Config(format!("no preset for fig{fig}; expected fig2..fig9"))),
    })
}

/// Run one subcommand and write its CSVs (and SVGs when `plot`) plus
/// manifest.json into `out_dir`.
pub fn run_to_dir(cmd: &Command, s: &Scenario, opts: &RunOptions, out_dir: &Path, plot: bool) -> Result<RunManifest> {
    let start = Instant::now();
    let out = execute(cmd, s, opts)?;
    let digest = s.digest();
    let manifest = RunManifest {
        subcommand: cmd.name().to_string(),
        scenario_digest: digest.clone(),
        versions: module_versions(),
        wall_clock_s: start.elapsed().as_secs_f64(),
        estimates: out.estimates,
        outputs: Vec::new(),
    };
    let files = write_all(out_dir, &digest, &out.tables, plot, manifest.clone())?;
    Ok(RunManifest {
        outputs: files.iter().filter_map(|f| f.file_name()).map(|n| n.to_string_lossy().into_owned()).collect(),
        ..manifest
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_points_are_geometric() {
        let p = Z0Sweep { z0_min: 0.1, z0_max: 1.0, count: 3 }.points().unwrap();
        assert!((p[1] - 0.1f64.sqrt()).abs() < 1e-15);
        assert!((p[2] - 1.0).abs() < 1e-15);
        assert!(Z0Sweep { z0_min: 1.0, z0_max: 0.5, count: 3 }.points().is_err());
    }

    #[test]
    fn presets_cover_fig2_to_fig9() {
        for f in 2..=9 {
            assert!(preset(f).is_ok());
        }
        assert_eq!(preset(10).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn fixed_dipole_height_change() {
        let s = Scenario::weak(State::Ground);
        let t = at_height(&s, 0.1).unwrap();
        let g = compute_coupling_g(&t.atom, &t.units).unwrap();
        assert!((g - 0.044 * 7f64.powf(1.5)).abs() < 1e-12);
    }
}
