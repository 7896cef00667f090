//! Emitter geometries and the pairwise couplings they induce.
//!
//! Positions are measured in units of the transition wavelength and rates in
//! units of the single-atom decay rate. The pair couplings are the free-space
//! dipole-dipole kernels: with `xi = k0 r` and `c = cos(theta)` between the
//! common dipole axis and the separation,
//!
//! ```text
//! Gamma_ij = 3/2 Gamma [ (1 - c^2) sin(xi)/xi + (1 - 3c^2)(cos(xi)/xi^2 - sin(xi)/xi^3) ]
//! Omega_ij = 3/4 Gamma [ -(1 - c^2) cos(xi)/xi + (1 - 3c^2)(sin(xi)/xi^2 + cos(xi)/xi^3) ]
//! ```
//!
//! The default dipole orientation is perpendicular to every separation
//! (`theta = pi/2`). At `r = 0.3 lambda` this gives `Gamma_12 = 0.4134 Gamma`
//! and `Omega_12 = 0.2891 Gamma`.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, SymmetricEigen, Unit, Vector3};

use crate::error::{invalid, Error, Result};

/// Below this `k0 r` the decay kernel switches to its Taylor series.
const SMALL_XI: f64 = 1e-2;

/// Positions, dipole axis and decay rate of `N` identical two-level emitters.
#[derive(Debug, Clone, PartialEq)]
pub struct EmitterEnsemble {
    positions: Vec<Vector3<f64>>,
    dipole: Unit<Vector3<f64>>,
    gamma: f64,
    lambda0: f64,
    dicke_limit: bool,
}

impl EmitterEnsemble {
    /// Builds an ensemble from explicit positions (in units of `lambda0`).
    ///
    /// Coincident emitters are rejected; use [`EmitterEnsemble::dicke`] for
    /// the co-located limit.
    pub fn new(positions: Vec<Vector3<f64>>, dipole: Vector3<f64>, gamma: f64, lambda0: f64) -> Result<Self> {
        let ens = Self::build(positions, dipole, gamma, lambda0, false)?;
        if let Some((first, second)) = ens.coincident_pair() {
            return Err(Error::DegenerateGeometry { first, second });
        }
        Ok(ens)
    }

    fn build(
        positions: Vec<Vector3<f64>>,
        dipole: Vector3<f64>,
        gamma: f64,
        lambda0: f64,
        dicke_limit: bool,
    ) -> Result<Self> {
        if positions.is_empty() {
            return Err(invalid("an ensemble needs at least one emitter"));
        }
        if positions.iter().any(|p| !p.iter().all(|x| x.is_finite())) {
            return Err(invalid("emitter positions must be finite"));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(invalid(format!("decay rate must be positive, got {gamma}")));
        }
        if !(lambda0.is_finite() && lambda0 > 0.0) {
            return Err(invalid(format!("wavelength must be positive, got {lambda0}")));
        }
        let norm = dipole.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(invalid("dipole orientation must be a non-zero vector"));
        }
        Ok(Self {
            positions,
            dipole: Unit::new_normalize(dipole),
            gamma,
            lambda0,
            dicke_limit,
        })
    }

    /// Linear chain along `z` with lattice constant `spacing`; dipoles along `x`.
    pub fn chain(n: usize, spacing: f64, gamma: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("chain needs at least one emitter"));
        }
        check_spacing(spacing)?;
        let positions = (0..n).map(|j| Vector3::new(0.0, 0.0, j as f64 * spacing)).collect();
        Self::new(positions, Vector3::x(), gamma, 1.0)
    }

    /// Four emitters on the corners of a square in the `xy` plane; dipoles along `z`.
    pub fn square(spacing: f64, gamma: f64) -> Result<Self> {
        check_spacing(spacing)?;
        let positions = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(spacing, 0.0, 0.0),
            Vector3::new(spacing, spacing, 0.0),
            Vector3::new(0.0, spacing, 0.0),
        ];
        Self::new(positions, Vector3::z(), gamma, 1.0)
    }

    /// `n` emitters at the same point. Couplings come from [`CouplingMatrices::dicke`].
    pub fn dicke(n: usize, gamma: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("Dicke ensemble needs at least one emitter"));
        }
        Self::build(vec![Vector3::zeros(); n], Vector3::x(), gamma, 1.0, true)
    }

    /// Replaces the common dipole orientation.
    pub fn with_dipole(mut self, dipole: Vector3<f64>) -> Result<Self> {
        let norm = dipole.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(invalid("dipole orientation must be a non-zero vector"));
        }
        self.dipole = Unit::new_normalize(dipole);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    pub fn dipole(&self) -> &Unit<Vector3<f64>> {
        &self.dipole
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    /// `k0 = 2 pi / lambda0`.
    pub fn wavenumber(&self) -> f64 {
        TAU / self.lambda0
    }

    pub fn is_dicke_limit(&self) -> bool {
        self.dicke_limit
    }

    fn coincident_pair(&self) -> Option<(usize, usize)> {
        let n = self.positions.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .find(|&(i, j)| (self.positions[i] - self.positions[j]).norm() == 0.0)
    }

    /// Pairwise decay and shift matrices for this geometry.
    pub fn couplings(&self) -> Result<CouplingMatrices> {
        if self.dicke_limit {
            return CouplingMatrices::dicke(self.len(), self.gamma, 0.0);
        }
        let n = self.len();
        let mut gamma_matrix = DMatrix::from_diagonal_element(n, n, self.gamma);
        let mut omega_matrix = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let sep = self.positions[j] - self.positions[i];
                let r = sep.norm();
                if r == 0.0 {
                    return Err(Error::DegenerateGeometry { first: i, second: j });
                }
                let cos_theta = self.dipole.dot(&sep) / r;
                let (g, o) = pair_couplings(r, cos_theta)?;
                gamma_matrix[(i, j)] = g * self.gamma;
                gamma_matrix[(j, i)] = g * self.gamma;
                omega_matrix[(i, j)] = o * self.gamma;
                omega_matrix[(j, i)] = o * self.gamma;
            }
        }
        Ok(CouplingMatrices {
            gamma_matrix,
            omega_matrix,
            gamma: self.gamma,
        })
    }
}

fn check_spacing(spacing: f64) -> Result<()> {
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(invalid(format!("spacing must be positive, got {spacing}")));
    }
    Ok(())
}

/// Normalized pair couplings `(Gamma_12 / Gamma, Omega_12 / Gamma)` at
/// separation `r` (units of the wavelength) and dipole angle `cos_theta`.
///
/// `Omega_12` diverges as `r -> 0`, so a zero separation is an error.
pub fn pair_couplings(r: f64, cos_theta: f64) -> Result<(f64, f64)> {
    if !(r.is_finite() && r > 0.0) {
        return Err(invalid(format!("pair separation must be positive and finite, got {r}")));
    }
    let c2 = cos_theta.clamp(-1.0, 1.0).powi(2);
    let xi = TAU * r;
    let (s, c) = xi.sin_cos();
    let transverse = 1.0 - c2;
    let longitudinal = 1.0 - 3.0 * c2;

    // sin(xi)/xi and (xi cos xi - sin xi)/xi^3 lose all digits for tiny xi.
    let (sinc, near) = if xi < SMALL_XI {
        let x2 = xi * xi;
        (
            1.0 - x2 / 6.0 + x2 * x2 / 120.0,
            -1.0 / 3.0 + x2 / 30.0 - x2 * x2 / 840.0,
        )
    } else {
        (s / xi, c / (xi * xi) - s / (xi * xi * xi))
    };
    let gamma = 1.5 * (transverse * sinc + longitudinal * near);
    let omega = 0.75 * (-transverse * c / xi + longitudinal * (s / (xi * xi) + c / (xi * xi * xi)));
    Ok((gamma, omega))
}

/// Mutual decay rates `Gamma_ij` and dipole shifts `Omega_ij`.
///
/// The diagonal of the decay matrix is the single-atom rate; the shift matrix
/// has zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrices {
    gamma_matrix: DMatrix<f64>,
    omega_matrix: DMatrix<f64>,
    gamma: f64,
}

impl CouplingMatrices {
    /// Validates and wraps user-supplied matrices.
    pub fn from_parts(gamma_matrix: DMatrix<f64>, omega_matrix: DMatrix<f64>, gamma: f64) -> Result<Self> {
        let n = gamma_matrix.nrows();
        if n == 0 || !gamma_matrix.is_square() {
            return Err(invalid("decay matrix must be square and non-empty"));
        }
        if omega_matrix.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: omega_matrix.nrows(),
            });
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(invalid(format!("decay rate must be positive, got {gamma}")));
        }
        let sym_tol = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(gamma);
        for i in 0..n {
            if gamma_matrix[(i, i)] != gamma {
                return Err(invalid(format!(
                    "decay matrix diagonal must equal the single-atom rate ({} != {gamma})",
                    gamma_matrix[(i, i)]
                )));
            }
            if omega_matrix[(i, i)] != 0.0 {
                return Err(invalid("shift matrix must have zero diagonal"));
            }
            for j in 0..n {
                let (g, o) = (gamma_matrix[(i, j)], omega_matrix[(i, j)]);
                if !(g.is_finite() && o.is_finite()) {
                    return Err(invalid("coupling matrices must be finite"));
                }
                if i != j && g.abs() > gamma * (1.0 + 1e-12) {
                    return Err(invalid(format!(
                        "|Gamma_{i}{j}| = {} exceeds the single-atom rate",
                        g.abs()
                    )));
                }
                if !sym_tol(g, gamma_matrix[(j, i)]) || !sym_tol(o, omega_matrix[(j, i)]) {
                    return Err(invalid("coupling matrices must be symmetric"));
                }
            }
        }
        Ok(Self {
            gamma_matrix,
            omega_matrix,
            gamma,
        })
    }

    /// All emitters coupled identically: `Gamma_ij = Gamma` and a common
    /// shift `omega_d` between every pair.
    pub fn dicke(n: usize, gamma: f64, omega_d: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("Dicke couplings need at least one emitter"));
        }
        if !omega_d.is_finite() {
            return Err(invalid("Dicke shift must be finite"));
        }
        let omega_matrix = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { omega_d });
        Self::from_parts(DMatrix::from_element(n, n, gamma), omega_matrix, gamma)
    }

    /// Non-interacting emitters.
    pub fn independent(n: usize, gamma: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("need at least one emitter"));
        }
        Self::from_parts(DMatrix::from_diagonal_element(n, n, gamma), DMatrix::zeros(n, n), gamma)
    }

    pub fn len(&self) -> usize {
        self.gamma_matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn gamma_matrix(&self) -> &DMatrix<f64> {
        &self.gamma_matrix
    }

    pub fn omega_matrix(&self) -> &DMatrix<f64> {
        &self.omega_matrix
    }

    /// Eigenvalues of the decay matrix in ascending order: the rates of the
    /// independent collective decay channels (`Gamma +- gamma` for two atoms).
    pub fn channel_rates(&self) -> Vec<f64> {
        let mut rates = SymmetricEigen::new(self.gamma_matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect::<Vec<_>>();
        rates.sort_by(f64::total_cmp);
        rates
    }

    /// Smallest channel rate; negative values would make the dissipator unphysical.
    pub fn min_channel_rate(&self) -> f64 {
        self.channel_rates()[0]
    }

    /// Relabels emitters: new emitter `k` is old emitter `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.len();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(invalid("not a permutation of the emitter labels"));
        }
        Ok(Self {
            gamma_matrix: DMatrix::from_fn(n, n, |i, j| self.gamma_matrix[(perm[i], perm[j])]),
            omega_matrix: DMatrix::from_fn(n, n, |i, j| self.omega_matrix[(perm[i], perm[j])]),
            gamma: self.gamma,
        })
    }
}
