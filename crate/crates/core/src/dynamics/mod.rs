//! Master-equation generator and free evolution.
//!
//! The generator is
//!
//! ```text
//! d rho / dt = i [rho, H] + 1/2 sum_ij Gamma_ij (2 s_i^- rho s_j^+ - s_i^+ s_j^- rho - rho s_i^+ s_j^-)
//! H = omega/2 sum_i s_i^z + sum_{i != j} Omega_ij s_i^+ s_j^-
//! ```
//!
//! `i [rho, H]` is the same as the more common `-i [H, rho]`. Internally the
//! coherent part and the anticommutator are folded into the non-Hermitian
//! `H_eff = H - i/2 sum_ij Gamma_ij s_i^+ s_j^-`, so that
//! `L[rho] = -i H_eff rho + i rho H_eff^dag + sum_ij Gamma_ij s_i^- rho s_j^+`.
//!
//! Every term conserves the excitation difference between the row and column
//! of an element, so the vectorized generator is block diagonal in that
//! difference (see [`superop`]). Detuning only adds `-i omega k` on the
//! diagonal of block `k`.

mod rk45;
pub mod superop;

use std::sync::OnceLock;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::ensemble::CouplingMatrices;
use crate::error::{invalid, Error, Result};
use crate::quantum::{dim, excitations, is_excited, spin_mask, sz_eigenvalue, DensityMatrix, C64, ZERO};

pub use rk45::RkTolerances;
pub use superop::Superoperator;

/// Accumulated-evolution tolerance on trace and Hermiticity.
pub const EVOLUTION_TOL: f64 = 1e-8;

/// Largest `dim^2` propagated by matrix exponentials under [`Method::Auto`].
pub const EXPONENTIAL_LIMIT: usize = 4096;

/// How free evolution is computed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Method {
    /// Exponential for `dim^2 <= 4096`, Runge-Kutta above.
    #[default]
    Auto,
    /// Sector-wise matrix exponential of the vectorized generator.
    Exponential,
    /// Adaptive Dormand-Prince 5(4).
    RungeKutta(RkTolerances),
}

impl Method {
    pub(crate) fn resolve(self, n_spins: usize) -> Method {
        match self {
            Method::Auto if dim(n_spins).pow(2) <= EXPONENTIAL_LIMIT => Method::Exponential,
            Method::Auto => Method::RungeKutta(RkTolerances::default()),
            m => m,
        }
    }
}

/// Sparse row of a `dim x dim` operator.
pub(crate) type SparseRow = Vec<(usize, C64)>;

/// The Lindblad generator for given couplings and detuning.
#[derive(Debug)]
pub struct LindbladGenerator {
    n_spins: usize,
    detuning: f64,
    couplings: CouplingMatrices,
    hamiltonian: DMatrix<C64>,
    h_eff_rows: Vec<SparseRow>,
    superop: OnceLock<Superoperator>,
}

impl Clone for LindbladGenerator {
    fn clone(&self) -> Self {
        Self {
            n_spins: self.n_spins,
            detuning: self.detuning,
            couplings: self.couplings.clone(),
            hamiltonian: self.hamiltonian.clone(),
            h_eff_rows: self.h_eff_rows.clone(),
            superop: OnceLock::new(),
        }
    }
}

/// `sum_{ij} M_ij s_i^+ s_j^-` as a dense matrix.
pub(crate) fn exchange_operator(n: usize, m: &DMatrix<f64>) -> DMatrix<f64> {
    let d = dim(n);
    let mut out = DMatrix::zeros(d, d);
    // s_i^+ s_j^- |b> is non-zero when spin j is excited in b and, after
    // lowering it, spin i is in the ground state.
    for b in 0..d {
        for j in 0..n {
            if !is_excited(n, b, j) {
                continue;
            }
            let lowered = b | spin_mask(n, j);
            for i in 0..n {
                if is_excited(n, lowered, i) {
                    continue;
                }
                let a = lowered & !spin_mask(n, i);
                out[(a, b)] += m[(i, j)];
            }
        }
    }
    out
}

impl LindbladGenerator {
    pub fn new(couplings: &CouplingMatrices, detuning: f64) -> Result<Self> {
        let n = couplings.len();
        crate::quantum::check_spins(n)?;
        if !detuning.is_finite() {
            return Err(invalid("detuning must be finite"));
        }
        let d = dim(n);
        let exchange = exchange_operator(n, couplings.omega_matrix());
        let decay = exchange_operator(n, couplings.gamma_matrix());
        let hamiltonian = DMatrix::from_fn(d, d, |a, b| {
            let diag = if a == b { detuning * sz_eigenvalue(n, a) } else { 0.0 };
            C64::new(exchange[(a, b)] + diag, 0.0)
        });
        let h_eff_rows = (0..d)
            .map(|a| {
                (0..d)
                    .filter_map(|c| {
                        let z = hamiltonian[(a, c)] - C64::new(0.0, 0.5 * decay[(a, c)]);
                        (z != ZERO).then_some((c, z))
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            n_spins: n,
            detuning,
            couplings: couplings.clone(),
            hamiltonian,
            h_eff_rows,
            superop: OnceLock::new(),
        })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        dim(self.n_spins)
    }

    pub fn detuning(&self) -> f64 {
        self.detuning
    }

    pub fn couplings(&self) -> &CouplingMatrices {
        &self.couplings
    }

    /// `H` (units of rate).
    pub fn hamiltonian(&self) -> &DMatrix<C64> {
        &self.hamiltonian
    }

    pub(crate) fn h_eff_rows(&self) -> &[SparseRow] {
        &self.h_eff_rows
    }

    /// Vectorized generator, built on first use.
    pub fn superoperator(&self) -> &Superoperator {
        self.superop.get_or_init(|| Superoperator::new(self))
    }

    /// `L[rho]` for an arbitrary square matrix.
    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let n = self.n_spins;
        let d = self.dim();
        let gamma = self.couplings.gamma_matrix();
        let i = C64::i();
        let mut out = DMatrix::zeros(d, d);
        for a in 0..d {
            for (c, h) in &self.h_eff_rows[a] {
                let coeff = -i * h;
                for b in 0..d {
                    out[(a, b)] += coeff * rho[(*c, b)];
                }
            }
        }
        for b in 0..d {
            for (col, h) in &self.h_eff_rows[b] {
                let coeff = i * h.conj();
                for a in 0..d {
                    out[(a, b)] += rho[(a, *col)] * coeff;
                }
            }
        }
        // Jumps: (s_i^- rho s_j^+)_ab = rho[raise_i a, raise_j b] for a_i, b_j in |g>.
        for a in 0..d {
            for b in 0..d {
                let mut acc = ZERO;
                for si in (0..n).filter(|&s| !is_excited(n, a, s)) {
                    let ra = a & !spin_mask(n, si);
                    for sj in (0..n).filter(|&s| !is_excited(n, b, s)) {
                        acc += rho[(ra, b & !spin_mask(n, sj))] * gamma[(si, sj)];
                    }
                }
                out[(a, b)] += acc;
            }
        }
        out
    }
}

/// Builds the generator for `couplings` at detuning `detuning`.
pub fn build_generator(couplings: &CouplingMatrices, detuning: f64) -> Result<LindbladGenerator> {
    LindbladGenerator::new(couplings, detuning)
}

/// Evolves `rho` for time `tau` with the default method.
pub fn evolve(gen: &LindbladGenerator, rho: &DensityMatrix, tau: f64) -> Result<DensityMatrix> {
    evolve_with(gen, rho, tau, Method::Auto)
}

/// Evolves `rho` for time `tau`.
///
/// The result is re-symmetrized; trace or Hermiticity drift beyond
/// [`EVOLUTION_TOL`] is reported as [`Error::EvolutionDiverged`].
pub fn evolve_with(gen: &LindbladGenerator, rho: &DensityMatrix, tau: f64, method: Method) -> Result<DensityMatrix> {
    if rho.n_spins() != gen.n_spins() {
        return Err(Error::DimensionMismatch {
            expected: gen.dim(),
            found: rho.dim(),
        });
    }
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(invalid(format!("evolution time must be >= 0, got {tau}")));
    }
    if tau == 0.0 {
        return Ok(rho.clone());
    }
    let matrix = match method.resolve(gen.n_spins()) {
        Method::Exponential => gen.superoperator().propagate(rho.matrix(), tau, None),
        Method::RungeKutta(tol) => rk45::integrate(gen, rho.matrix(), tau, tol)?,
        Method::Auto => unreachable!("resolved above"),
    };
    finish(gen.n_spins(), matrix)
}

pub(crate) fn finish(n_spins: usize, matrix: DMatrix<C64>) -> Result<DensityMatrix> {
    let mut out = DensityMatrix::from_raw(n_spins, matrix);
    let herm = out.hermiticity_error();
    let trace_err = (out.matrix().trace() - C64::new(1.0, 0.0)).norm();
    let (violation, what) = if herm > trace_err {
        (herm, "hermiticity")
    } else {
        (trace_err, "trace")
    };
    if violation.is_nan() || violation > EVOLUTION_TOL {
        return Err(Error::EvolutionDiverged {
            violation,
            what: what.to_string(),
        });
    }
    if herm > 1e-12 {
        log::debug!("re-symmetrizing evolved state, hermiticity drift {herm:.3e}");
    }
    out.symmetrize();
    Ok(out)
}

/// Evolves `rho` under every detuning in `detunings` for every time in `taus`.
///
/// Output is indexed `[detuning][tau]`, identical to separate [`evolve`] calls.
pub fn evolve_batch(
    couplings: &CouplingMatrices,
    detunings: &[f64],
    rho: &DensityMatrix,
    taus: &[f64],
) -> Result<Vec<Vec<DensityMatrix>>> {
    if detunings.is_empty() || taus.is_empty() {
        return Err(invalid("detuning and time grids must be non-empty"));
    }
    detunings
        .par_iter()
        .map(|&w| {
            let gen = build_generator(couplings, w)?;
            taus.iter().map(|&t| evolve(&gen, rho, t)).collect()
        })
        .collect()
}

/// Excitation difference `k` of element `(a, b)`.
#[inline]
pub(crate) fn sector_of(n_spins: usize, a: usize, b: usize) -> i32 {
    excitations(n_spins, a) as i32 - excitations(n_spins, b) as i32
}
