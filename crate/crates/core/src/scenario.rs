//! Scenario files: `key = value` lines with `#` comments.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::greens::LorentzianModel;
use crate::material::MaterialConfig;
use crate::units::{AtomConfig, DipoleSpec, UnitSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReservoirBackend {
    SommerfeldHalfSpace,
    QuasistaticHalfSpace,
    LorentzianModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum State {
    Excited,
    Ground,
}

impl State {
    pub fn label(&self) -> &'static str {
        match self {
            State::Excited => "excited",
            State::Ground => "ground",
        }
    }

    /// Detuning of reservoir frequency w from the atom: w - w0 or w + w0.
    pub fn detuning(&self, omega: f64, omega0: f64) -> f64 {
        match self {
            State::Excited => omega - omega0,
            State::Ground => omega + omega0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeUnits {
    /// Multiples of 1/Gamma, resolved once the decay rate is known.
    Gamma,
    OmegaP,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaGrid {
    pub omega_max: f64,
    pub n_points: usize,
    /// Dense sampling around the spectral peak.
    pub refine_peak: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_final: f64,
    pub units: TimeUnits,
    /// `None` picks the smallest count meeting the step budget.
    pub n_steps: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub units: UnitSystem,
    pub atom: AtomConfig,
    pub material: MaterialConfig,
    pub backend: ReservoirBackend,
    pub lorentzian: Option<LorentzianModel>,
    pub omega_grid: OmegaGrid,
    pub time_grid: TimeGrid,
    pub state: State,
}

const KEYS: &[&str] = &[
    "omega_p_hz",
    "omega0_over_omega_p",
    "z0_in_c_over_omega_p",
    "collision_over_omega_p",
    "cyclotron_over_omega_p",
    "coupling_g",
    "dipole_cm",
    "reservoir_backend",
    "omega_max_over_omega_p",
    "n_omega",
    "refine_peak",
    "t_final",
    "t_final_units",
    "n_steps",
    "state",
    "lorentzian_g",
    "lorentzian_width",
    "lorentzian_center",
];

impl Scenario {
    /// Weak coupling: z0 = 0.7 c/w_p with g = 0.044.
    pub fn weak(state: State) -> Self {
        Scenario {
            units: UnitSystem::default(),
            atom: AtomConfig { omega0: 0.65, z0: 0.7, dipole: DipoleSpec::TargetG(0.044) },
            material: MaterialConfig::default(),
            backend: ReservoirBackend::SommerfeldHalfSpace,
            lorentzian: None,
            omega_grid: OmegaGrid { omega_max: 3.0, n_points: 3000, refine_peak: true },
            time_grid: TimeGrid { t_final: 5.0, units: TimeUnits::Gamma, n_steps: None },
            state,
        }
    }

    /// Strong coupling: z0 = 0.1 c/w_p with g = 0.808.
    pub fn strong(state: State) -> Self {
        let mut s = Scenario::weak(state);
        s.atom.z0 = 0.1;
        s.atom.dipole = DipoleSpec::TargetG(0.808);
        s
    }

    pub fn validate(&self) -> Result<()> {
        self.atom.validate()?;
        self.material.validate()?;
        let g = &self.omega_grid;
        if !(g.omega_max > self.atom.omega0) {
            return Err(Error::Config(format!("omega_max ({}) must exceed omega0 ({})", g.omega_max, self.atom.omega0)));
        }
        if g.n_points < 2 {
            return Err(Error::Config("n_omega must be >= 2".into()));
        }
        if !(self.time_grid.t_final > 0.0) {
            return Err(Error::Config("t_final must be positive".into()));
        }
        if let Some(n) = self.time_grid.n_steps {
            if n < 2 {
                return Err(Error::Config("n_steps must be >= 2".into()));
            }
        }
        if self.backend == ReservoirBackend::LorentzianModel && self.lorentzian.is_none() {
            return Err(Error::Config("lorentzian backend needs lorentzian_g, lorentzian_width, lorentzian_center".into()));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Scenario::weak(State::Excited);
        let mut seen = BTreeSet::new();
        let (mut lg, mut lw, mut lc) = (None, None, None);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(Error::Config(format!("line {}: unknown key `{k}`", lineno + 1)));
            }
            if !seen.insert(k.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key `{k}`", lineno + 1)));
            }
            let num = || -> Result<f64> {
                v.parse::<f64>().map_err(|_| Error::Config(format!("line {}: `{k}` expects a number, got `{v}`", lineno + 1)))
            };
            let int = || -> Result<usize> {
                v.parse::<usize>().map_err(|_| Error::Config(format!("line {}: `{k}` expects an integer, got `{v}`", lineno + 1)))
            };
            match k {
                "omega_p_hz" => s.units = UnitSystem::from_hz(num()?)?,
                "omega0_over_omega_p" => s.atom.omega0 = num()?,
                "z0_in_c_over_omega_p" => s.atom.z0 = num()?,
                "collision_over_omega_p" => s.material.gamma_c = num()?,
                "cyclotron_over_omega_p" => s.material.omega_c = num()?,
                "coupling_g" => s.atom.dipole = DipoleSpec::TargetG(num()?),
                "dipole_cm" => s.atom.dipole = DipoleSpec::Explicit(num()?),
                "reservoir_backend" => {
                    s.backend = match v {
                        "sommerfeld" => ReservoirBackend::SommerfeldHalfSpace,
                        "quasistatic" => ReservoirBackend::QuasistaticHalfSpace,
                        "lorentzian" => ReservoirBackend::LorentzianModel,
                        _ => return Err(Error::Config(format!("line {}: unknown backend `{v}`", lineno + 1))),
                    }
                }
                "omega_max_over_omega_p" => s.omega_grid.omega_max = num()?,
                "n_omega" => s.omega_grid.n_points = int()?,
                "refine_peak" => {
                    s.omega_grid.refine_peak = v
                        .parse::<bool>()
                        .map_err(|_| Error::Config(format!("line {}: refine_peak expects true/false", lineno + 1)))?
                }
                "t_final" => s.time_grid.t_final = num()?,
                "t_final_units" => {
                    s.time_grid.units = match v {
                        "gamma" => TimeUnits::Gamma,
                        "omega_p" => TimeUnits::OmegaP,
                        _ => return Err(Error::Config(format!("line {}: t_final_units must be gamma or omega_p", lineno + 1))),
                    }
                }
                "n_steps" => s.time_grid.n_steps = Some(int()?),
                "state" => {
                    s.state = match v {
                        "excited" => State::Excited,
                        "ground" => State::Ground,
                        _ => return Err(Error::Config(format!("line {}: state must be excited or ground", lineno + 1))),
                    }
                }
                "lorentzian_g" => lg = Some(num()?),
                "lorentzian_width" => lw = Some(num()?),
                "lorentzian_center" => lc = Some(num()?),
                _ => unreachable!("key list checked above"),
            }
        }
        if seen.contains("coupling_g") && seen.contains("dipole_cm") {
            return Err(Error::Config("give either coupling_g or dipole_cm, not both".into()));
        }
        s.lorentzian = match (lg, lw, lc) {
            (None, None, None) => None,
            (Some(g), Some(w), Some(c)) => Some(LorentzianModel::new(g, w, c)?),
            _ => return Err(Error::Config("lorentzian_g, lorentzian_width and lorentzian_center go together".into())),
        };
        s.validate()?;
        Ok(s)
    }

    /// Canonical text form. Floats use the shortest round-trip representation.
    pub fn render(&self) -> String {
        let mut o = String::new();
        let _ = writeln!(o, "omega_p_hz = {:?}", self.units.plasma_hz);
        let _ = writeln!(o, "omega0_over_omega_p = {:?}", self.atom.omega0);
        let _ = writeln!(o, "z0_in_c_over_omega_p = {:?}", self.atom.z0);
        let _ = writeln!(o, "collision_over_omega_p = {:?}", self.material.gamma_c);
        let _ = writeln!(o, "cyclotron_over_omega_p = {:?}", self.material.omega_c);
        match self.atom.dipole {
            DipoleSpec::TargetG(g) => {
                let _ = writeln!(o, "coupling_g = {g:?}");
            }
            DipoleSpec::Explicit(d) => {
                let _ = writeln!(o, "dipole_cm = {d:?}");
            }
        }
        let b = match self.backend {
            ReservoirBackend::SommerfeldHalfSpace => "sommerfeld",
            ReservoirBackend::QuasistaticHalfSpace => "quasistatic",
            ReservoirBackend::LorentzianModel => "lorentzian",
        };
        let _ = writeln!(o, "reservoir_backend = {b}");
        let _ = writeln!(o, "omega_max_over_omega_p = {:?}", self.omega_grid.omega_max);
        let _ = writeln!(o, "n_omega = {}", self.omega_grid.n_points);
        let _ = writeln!(o, "refine_peak = {}", self.omega_grid.refine_peak);
        let _ = writeln!(o, "t_final = {:?}", self.time_grid.t_final);
        let u = match self.time_grid.units {
            TimeUnits::Gamma => "gamma",
            TimeUnits::OmegaP => "omega_p",
        };
        let _ = writeln!(o, "t_final_units = {u}");
        if let Some(n) = self.time_grid.n_steps {
            let _ = writeln!(o, "n_steps = {n}");
        }
        let _ = writeln!(o, "state = {}", self.state.label());
        if let Some(l) = self.lorentzian {
            let _ = writeln!(o, "lorentzian_g = {:?}", l.g_rabi);
            let _ = writeln!(o, "lorentzian_width = {:?}", l.lambda);
            let _ = writeln!(o, "lorentzian_center = {:?}", l.omega_center);
        }
        o
    }

    /// SHA-256 of the canonical rendering.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.render().as_bytes()))
    }

    pub fn kappa(&self) -> Result<f64> {
        self.atom.kappa(&self.units)
    }

    /// Final time in units of 1/w_p given the Markov decay rate.
    pub fn t_final_omega_p(&self, gamma: f64) -> Result<f64> {
        match self.time_grid.units {
            TimeUnits::OmegaP => Ok(self.time_grid.t_final),
            TimeUnits::Gamma => {
                if !(gamma > 0.0) {
                    return Err(Error::Config("t_final given in 1/Gamma but Gamma = 0".into()));
                }
                Ok(self.time_grid.t_final / gamma)
            }
        }
    }
}
