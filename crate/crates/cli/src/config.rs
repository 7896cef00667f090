//! TOML run configuration. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use collective_ramsey::dynamics::RkTolerances;
use collective_ramsey::ramsey::SensitivityOptions;
use collective_ramsey::{CouplingMatrices, EmitterEnsemble, Method};
use nalgebra::Vector3;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: Option<Geometry>,
    pub couplings: Option<CouplingsSection>,
    pub sensitivity: Option<SensitivitySection>,
    pub two_atom: Option<TwoAtomSection>,
    pub spectrum: Option<SpectrumSection>,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default)]
    pub output: Output,
}

/// Emitter arrangement. Lengths in wavelengths, rates in units of `gamma`.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Geometry {
    Chain {
        n: usize,
        spacing: f64,
        #[serde(default = "unit")]
        gamma: f64,
        dipole: Option<[f64; 3]>,
    },
    Square {
        spacing: f64,
        #[serde(default = "unit")]
        gamma: f64,
        dipole: Option<[f64; 3]>,
    },
    Dicke {
        n: usize,
        #[serde(default = "unit")]
        gamma: f64,
        #[serde(default)]
        omega_d: f64,
    },
    Positions {
        positions: Vec<[f64; 3]>,
        #[serde(default = "unit")]
        gamma: f64,
        dipole: Option<[f64; 3]>,
    },
}

fn unit() -> f64 {
    1.0
}

/// Either an explicit list or `{ start, stop, points }` (inclusive, linear).
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Linear(LinearGrid),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearGrid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Grid {
    pub fn values(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let v = match self {
            Grid::List(v) => v.clone(),
            Grid::Linear(g) => match g.points {
                0 => Vec::new(),
                1 => vec![g.start],
                p => (0..p)
                    .map(|i| g.start + (g.stop - g.start) * i as f64 / (p - 1) as f64)
                    .collect(),
            },
        };
        if v.is_empty() {
            return Err(CliError::Config(format!("{name}: grid is empty")));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Config(format!("{name}: grid values must be finite")));
        }
        Ok(v)
    }

    /// Strictly positive, strictly ascending values.
    pub fn times(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let v = self.values(name)?;
        if v.iter().any(|&t| t <= 0.0) {
            return Err(CliError::Config(format!("{name}: interrogation times must be > 0")));
        }
        if v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config(format!("{name}: times must be strictly ascending")));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingsSection {
    /// Separations in wavelengths.
    pub r: Grid,
    /// Cosine of the angle between dipole and separation.
    #[serde(default)]
    pub cos_theta: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivitySection {
    /// Phase indices `m`; 0 is the symmetric sequence.
    pub schemes: Vec<usize>,
    pub tau: Grid,
    /// Detuning samples over one fringe period `[0, pi / tau]`.
    pub omega_points: Option<usize>,
    /// Relative tolerance of the detuning refinement.
    pub omega_rel_tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoAtomSection {
    pub separation: f64,
    #[serde(default = "unit")]
    pub gamma: f64,
    pub tau: Grid,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    /// Phase index of the asymmetric comparison state.
    #[serde(default = "one")]
    pub m: usize,
    #[serde(default)]
    pub detuning: f64,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Integrator {
    #[serde(default)]
    pub method: MethodName,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub max_steps: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    #[default]
    Auto,
    Exponential,
    RungeKutta,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub path: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn section<'a, T>(&self, section: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        section
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("missing [{name}] section")))
    }

    pub fn couplings(&self) -> Result<CouplingMatrices, CliError> {
        self.section(&self.geometry, "geometry")?.couplings()
    }
}

impl Geometry {
    pub fn couplings(&self) -> Result<CouplingMatrices, CliError> {
        let with_dipole = |ens: EmitterEnsemble, dipole: &Option<[f64; 3]>| match dipole {
            Some(d) => ens.with_dipole(Vector3::from(*d)),
            None => Ok(ens),
        };
        let built = match self {
            Geometry::Chain {
                n,
                spacing,
                gamma,
                dipole,
            } => EmitterEnsemble::chain(*n, *spacing, *gamma).and_then(|e| with_dipole(e, dipole)),
            Geometry::Square { spacing, gamma, dipole } => {
                EmitterEnsemble::square(*spacing, *gamma).and_then(|e| with_dipole(e, dipole))
            }
            Geometry::Dicke { n, gamma, omega_d } => return config(CouplingMatrices::dicke(*n, *gamma, *omega_d)),
            Geometry::Positions {
                positions,
                gamma,
                dipole,
            } => EmitterEnsemble::new(
                positions.iter().map(|p| Vector3::from(*p)).collect(),
                Vector3::from(dipole.unwrap_or([0.0, 0.0, 1.0])),
                *gamma,
                1.0,
            ),
        };
        config(built.and_then(|e| e.couplings()))
    }
}

fn config<T>(r: collective_ramsey::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Config(e.to_string()))
}

impl Integrator {
    pub fn method(&self) -> Result<Method, CliError> {
        let has_rk_options = self.rtol.is_some() || self.atol.is_some() || self.max_steps.is_some();
        match self.method {
            MethodName::RungeKutta => {
                let d = RkTolerances::default();
                let tol = RkTolerances {
                    rtol: self.rtol.unwrap_or(d.rtol),
                    atol: self.atol.unwrap_or(d.atol),
                    max_steps: self.max_steps.unwrap_or(d.max_steps),
                };
                if !(tol.rtol > 0.0 && tol.atol > 0.0 && tol.max_steps > 0) {
                    return Err(CliError::Config("integrator tolerances must be positive".into()));
                }
                Ok(Method::RungeKutta(tol))
            }
            _ if has_rk_options => Err(CliError::Config(
                "rtol, atol and max_steps apply only to method = \"runge-kutta\"".into(),
            )),
            MethodName::Auto => Ok(Method::Auto),
            MethodName::Exponential => Ok(Method::Exponential),
        }
    }
}

impl SensitivitySection {
    pub fn options(&self) -> Result<SensitivityOptions, CliError> {
        let mut opts = SensitivityOptions::default();
        if let Some(p) = self.omega_points {
            if p < 3 {
                return Err(CliError::Config("omega_points must be at least 3".into()));
            }
            opts.grid_points = p;
        }
        if let Some(t) = self.omega_rel_tol {
            if !(t.is_finite() && t > 0.0) {
                return Err(CliError::Config("omega_rel_tol must be positive".into()));
            }
            opts.omega_rel_tol = t;
        }
        Ok(opts)
    }

    pub fn validate_schemes(&self, n: usize) -> Result<(), CliError> {
        if self.schemes.is_empty() {
            return Err(CliError::Config("sensitivity: schemes is empty".into()));
        }
        if let Some(&m) = self.schemes.iter().find(|&&m| m > n / 2) {
            return Err(CliError::Config(format!(
                "sensitivity: m = {m} exceeds N/2 for N = {n}"
            )));
        }
        Ok(())
    }
}
