//! Hamiltonian eigenstates with effective decay rates.
//!
//! `H = omega S^z + sum_{i != j} Omega_ij s_i^+ s_j^-` and
//! `K = sum_ij Gamma_ij s_i^+ s_j^-` both conserve the number of excitations
//! and are real symmetric, so each excitation sector is diagonalized on its
//! own. Degenerate eigenspaces of `H` are further diagonalized in `K`, which
//! makes the basis simultaneous whenever `[H, K] = 0`. The effective rate of
//! a state is `Gamma_j = <phi_j|K|phi_j>`.
//!
//! Ordering: ascending rate, then excitation number, then lexicographic
//! amplitudes. Each vector has its first non-negligible amplitude positive.
//! Inside a subspace that is still degenerate in both `H` and `K`, the basis
//! is obtained by Gram-Schmidt on the projected unit vectors, in index order,
//! so it depends on the subspace only.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::dynamics::exchange_operator;
use crate::ensemble::CouplingMatrices;
use crate::error::{Error, Result};
use crate::quantum::{check_spins, dim, excitations, sz_eigenvalue, DensityMatrix, C64};

/// Eigenvalues closer than this (relative to the matrix scale) are degenerate.
const DEGENERACY_TOL: f64 = 1e-9;
/// Rates closer than this share a rank in the ordering.
const RATE_TIE_TOL: f64 = 1e-9;
/// Commutator norm above which `H` and `K` count as non-commuting.
const COMMUTE_TOL: f64 = 1e-10;

/// One eigenstate with its effective decay rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    pub excitations: usize,
    pub energy: f64,
    pub decay_rate: f64,
    /// Real amplitudes in the product basis.
    pub vector: DVector<f64>,
}

/// All `2^N` eigenstates, sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    n_spins: usize,
    states: Vec<SpectralState>,
    commutator_norm: f64,
}

impl SpectralDecomposition {
    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn states(&self) -> &[SpectralState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Rates in state order (ascending).
    pub fn effective_decay_rates(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.decay_rate).collect()
    }

    /// Whether `H` and `K` commute, i.e. the basis diagonalizes both.
    pub fn is_simultaneous(&self) -> bool {
        self.commutator_norm <= COMMUTE_TOL
    }

    /// Largest element of `|[H, K]|`.
    pub fn commutator_norm(&self) -> f64 {
        self.commutator_norm
    }

    /// Largest deviation of `V^T V` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.states.iter().enumerate() {
            for (j, b) in self.states.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.vector.dot(&b.vector) - target).abs());
            }
        }
        worst
    }
}

fn block(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])])
}

/// Groups sorted-by-value eigenpairs into clusters of equal eigenvalue.
fn clusters(values: &[f64], scale: f64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out: Vec<Vec<usize>> = Vec::new();
    for i in order {
        match out.last_mut() {
            Some(group) if (values[i] - values[*group.last().unwrap()]).abs() <= DEGENERACY_TOL * scale => {
                group.push(i)
            }
            _ => out.push(vec![i]),
        }
    }
    out
}

/// Orthonormal basis of `span(columns)` that depends on the span only.
fn canonical_basis(columns: &DMatrix<f64>) -> DMatrix<f64> {
    let (d, k) = columns.shape();
    if k == 1 {
        return fix_sign(columns.clone());
    }
    let projector = columns * columns.transpose();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(k);
    for i in 0..d {
        if basis.len() == k {
            break;
        }
        let mut v = projector.column(i).into_owned();
        for _ in 0..2 {
            for b in &basis {
                let overlap = b.dot(&v);
                v -= b * overlap;
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            basis.push(v / norm);
        }
    }
    debug_assert_eq!(basis.len(), k);
    fix_sign(DMatrix::from_columns(&basis))
}

/// Makes the first amplitude above `1e-12` of every column positive.
fn fix_sign(mut m: DMatrix<f64>) -> DMatrix<f64> {
    for mut col in m.column_iter_mut() {
        if let Some(first) = col.iter().find(|x| x.abs() > 1e-12).copied() {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }
    m
}

fn scale_of(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(1.0f64, |acc, x| acc.max(x.abs()))
}

/// Diagonalizes `H` per excitation sector and attaches effective rates.
///
/// Non-commuting `H` and `K` are not an error; check
/// [`SpectralDecomposition::is_simultaneous`].
pub fn decompose(couplings: &CouplingMatrices, detuning: f64) -> Result<SpectralDecomposition> {
    let n = couplings.len();
    check_spins(n)?;
    let d = dim(n);
    let mut h = exchange_operator(n, couplings.omega_matrix());
    for a in 0..d {
        h[(a, a)] += detuning * sz_eigenvalue(n, a);
    }
    let k = exchange_operator(n, couplings.gamma_matrix());
    let commutator = &h * &k - &k * &h;
    let commutator_norm = commutator.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if commutator_norm > COMMUTE_TOL {
        log::warn!("H and the decay operator do not commute (|[H,K]| = {commutator_norm:.3e}); rates are diagonal expectations only");
    }

    let mut states = Vec::with_capacity(d);
    for exc in 0..=n {
        let idx: Vec<usize> = (0..d).filter(|&a| excitations(n, a) == exc).collect();
        let h_n = block(&h, &idx);
        let k_n = block(&k, &idx);
        let eig = SymmetricEigen::new(h_n.clone());
        let h_scale = scale_of(&h_n);
        let k_scale = scale_of(&k_n);
        for group in clusters(eig.eigenvalues.as_slice(), h_scale) {
            let cols: Vec<DVector<f64>> = group.iter().map(|&g| eig.eigenvectors.column(g).into_owned()).collect();
            let v = DMatrix::from_columns(&cols);
            let k_sub = v.transpose() * &k_n * &v;
            let k_sub = (&k_sub + k_sub.transpose()) * 0.5;
            let k_eig = SymmetricEigen::new(k_sub);
            let rotated = &v * &k_eig.eigenvectors;
            for sub in clusters(k_eig.eigenvalues.as_slice(), k_scale) {
                let cols: Vec<DVector<f64>> = sub.iter().map(|&s| rotated.column(s).into_owned()).collect();
                let basis = canonical_basis(&DMatrix::from_columns(&cols));
                for local in basis.column_iter() {
                    let mut vector = DVector::zeros(d);
                    for (p, &a) in idx.iter().enumerate() {
                        vector[a] = local[p];
                    }
                    let local = local.into_owned();
                    let decay_rate = local.dot(&(&k_n * &local));
                    let energy = local.dot(&(&h_n * &local));
                    states.push(SpectralState {
                        excitations: exc,
                        energy,
                        decay_rate,
                        vector,
                    });
                }
            }
        }
    }
    states.sort_by(compare_states);
    Ok(SpectralDecomposition {
        n_spins: n,
        states,
        commutator_norm,
    })
}

fn compare_states(a: &SpectralState, b: &SpectralState) -> Ordering {
    let rate = if (a.decay_rate - b.decay_rate).abs() <= RATE_TIE_TOL {
        Ordering::Equal
    } else {
        a.decay_rate.total_cmp(&b.decay_rate)
    };
    rate.then(a.excitations.cmp(&b.excitations)).then_with(|| {
        a.vector
            .iter()
            .zip(b.vector.iter())
            .map(|(x, y)| {
                if (x - y).abs() <= 1e-12 {
                    Ordering::Equal
                } else {
                    y.total_cmp(x)
                }
            })
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

/// Occupations `w_j = <phi_j|rho|phi_j>` in state order.
pub fn population_histogram(decomp: &SpectralDecomposition, rho: &DensityMatrix) -> Result<Vec<f64>> {
    if rho.n_spins() != decomp.n_spins {
        return Err(Error::DimensionMismatch {
            expected: dim(decomp.n_spins),
            found: rho.dim(),
        });
    }
    let m = rho.matrix();
    Ok(decomp
        .states
        .iter()
        .map(|s| {
            let v = &s.vector;
            let mut acc = C64::new(0.0, 0.0);
            for (a, va) in v.iter().enumerate().filter(|(_, x)| **x != 0.0) {
                for (b, vb) in v.iter().enumerate().filter(|(_, x)| **x != 0.0) {
                    acc += m[(a, b)] * (va * vb);
                }
            }
            acc.re
        })
        .collect())
}

/// `sum_j w_j Gamma_j`.
pub fn mean_decay_rate(decomp: &SpectralDecomposition, rho: &DensityMatrix) -> Result<f64> {
    let w = population_histogram(decomp, rho)?;
    Ok(w.iter().zip(&decomp.states).map(|(w, s)| w * s.decay_rate).sum())
}

/// `tr(rho K)`, the initial excitation loss rate, computed directly.
pub fn direct_decay_rate(couplings: &CouplingMatrices, rho: &DensityMatrix) -> Result<f64> {
    let n = couplings.len();
    if rho.n_spins() != n {
        return Err(Error::DimensionMismatch {
            expected: dim(n),
            found: rho.dim(),
        });
    }
    let k = exchange_operator(n, couplings.gamma_matrix());
    let m = rho.matrix();
    let mut acc = C64::new(0.0, 0.0);
    for a in 0..k.nrows() {
        for b in 0..k.ncols() {
            if k[(b, a)] != 0.0 {
                acc += m[(a, b)] * k[(b, a)];
            }
        }
    }
    Ok(acc.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::EmitterEnsemble;
    use crate::ramsey::PulseSequence;
    use proptest::prelude::*;

    fn binomial(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    fn zero_rate_count(d: &SpectralDecomposition, exc: usize) -> usize {
        d.states()
            .iter()
            .filter(|s| s.excitations == exc && s.decay_rate.abs() < 1e-9)
            .count()
    }

    #[test]
    fn dicke_pair_rates() {
        let d = decompose(&CouplingMatrices::dicke(2, 1.0, 0.0).unwrap(), 0.0).unwrap();
        let rates = d.effective_decay_rates();
        assert_eq!(rates.len(), 4);
        assert!(rates[0].abs() < 1e-12 && rates[1].abs() < 1e-12);
        assert!((rates[2] - 2.0).abs() < 1e-12 && (rates[3] - 2.0).abs() < 1e-12);
        // Ground state and |A> are dark; |S> and |E> decay at 2 Gamma.
        assert_eq!(d.states()[0].excitations, 0);
        assert_eq!(d.states()[1].excitations, 1);
        assert!(d.is_simultaneous());
    }

    #[test]
    fn two_atom_rates_follow_channels() {
        let c = EmitterEnsemble::chain(2, 0.3, 1.0).unwrap().couplings().unwrap();
        let d = decompose(&c, 0.0).unwrap();
        let single: Vec<f64> = d
            .states()
            .iter()
            .filter(|s| s.excitations == 1)
            .map(|s| s.decay_rate)
            .collect();
        let g = c.gamma_matrix()[(0, 1)];
        assert!((single[0] - (1.0 - g)).abs() < 1e-12);
        assert!((single[1] - (1.0 + g)).abs() < 1e-12);
    }

    #[test]
    fn w_state_rate() {
        let d = decompose(&CouplingMatrices::dicke(5, 1.0, 0.0).unwrap(), 0.0).unwrap();
        let w = d
            .states()
            .iter()
            .find(|s| s.excitations == 1 && s.decay_rate > 1.0)
            .unwrap();
        assert!((w.decay_rate - 5.0).abs() < 1e-12);
        let amp = 1.0 / 5f64.sqrt();
        assert!(w
            .vector
            .iter()
            .filter(|x| x.abs() > 1e-12)
            .all(|x| (x - amp).abs() < 1e-12));
    }

    #[test]
    fn dark_state_counts() {
        let n = 5;
        let c = CouplingMatrices::dicke(n, 1.0, 0.0).unwrap();
        let d = decompose(&c, 0.0).unwrap();
        let k = exchange_operator(n, c.gamma_matrix());
        let mut total = 0;
        for exc in 0..=n {
            let idx: Vec<usize> = (0..dim(n)).filter(|&a| excitations(n, a) == exc).collect();
            let rank = block(&k, &idx).rank(1e-9);
            let kernel = idx.len() - rank;
            let combinatorial = if 2 * exc <= n {
                binomial(n, exc) - if exc > 0 { binomial(n, exc - 1) } else { 0 }
            } else {
                0
            };
            assert_eq!(kernel, combinatorial);
            assert_eq!(zero_rate_count(&d, exc), kernel);
            total += kernel;
        }
        assert_eq!(total, 10);
    }

    #[test]
    fn decomposition_is_orthonormal_and_sorted() {
        for c in [
            CouplingMatrices::dicke(4, 1.0, 0.3).unwrap(),
            EmitterEnsemble::square(0.2, 1.0).unwrap().couplings().unwrap(),
        ] {
            let d = decompose(&c, 0.4).unwrap();
            assert_eq!(d.len(), 16);
            assert!(d.orthonormality_error() < 1e-10);
            let r = d.effective_decay_rates();
            assert!(r.windows(2).all(|w| w[0] <= w[1] + RATE_TIE_TOL));
            assert!(r.iter().all(|&x| x >= -1e-10));
        }
    }

    #[test]
    fn non_commuting_geometry_is_flagged() {
        let c = EmitterEnsemble::chain(3, 0.2, 1.0).unwrap().couplings().unwrap();
        let d = decompose(&c, 0.0).unwrap();
        assert!(!d.is_simultaneous());
        assert!(d.orthonormality_error() < 1e-10);
    }

    #[test]
    fn ground_state_histogram() {
        let d = decompose(&CouplingMatrices::dicke(3, 1.0, 0.0).unwrap(), 0.0).unwrap();
        let w = population_histogram(&d, &DensityMatrix::ground_state(3).unwrap()).unwrap();
        let ground = d.states().iter().position(|s| s.excitations == 0).unwrap();
        assert!((w[ground] - 1.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(population_histogram(&d, &DensityMatrix::ground_state(2).unwrap()).is_err());
    }

    #[test]
    fn prepared_state_mean_rates() {
        let c = CouplingMatrices::dicke(5, 1.0, 0.0).unwrap();
        let d = decompose(&c, 0.0).unwrap();
        let sym = PulseSequence::symmetric(5).unwrap().prepared_state().unwrap();
        let asym = PulseSequence::new(5, 1).unwrap().prepared_state().unwrap();
        assert!((mean_decay_rate(&d, &sym).unwrap() - 7.5).abs() < 1e-10);
        assert!((mean_decay_rate(&d, &asym).unwrap() - 1.25).abs() < 1e-10);
        for rho in [&sym, &asym] {
            let w = population_histogram(&d, rho).unwrap();
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn canonical_basis_ignores_input_rotation() {
        let a = DMatrix::from_column_slice(4, 2, &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, -1.0])
            * std::f64::consts::FRAC_1_SQRT_2;
        let (c, s) = 0.37f64.sin_cos();
        let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let b1 = canonical_basis(&a);
        let b2 = canonical_basis(&(&a * rot));
        assert!((b1 - b2).amax() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn rate_paths_agree_for_pure_states(re in prop::collection::vec(-1.0f64..1.0, 16), im in prop::collection::vec(-1.0f64..1.0, 16), omega_d in -1.0f64..1.0) {
            let c = CouplingMatrices::dicke(4, 1.0, omega_d).unwrap();
            let d = decompose(&c, 0.3).unwrap();
            let mut psi: Vec<C64> = re.iter().zip(&im).map(|(a, b)| C64::new(*a, *b)).collect();
            let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            prop_assume!(norm > 1e-3);
            psi.iter_mut().for_each(|z| *z /= norm);
            let rho = DensityMatrix::pure(4, &psi).unwrap();
            let a = mean_decay_rate(&d, &rho).unwrap();
            let b = direct_decay_rate(&c, &rho).unwrap();
            prop_assert!((a - b).abs() < 1e-10);
        }

        #[test]
        fn rate_multiset_is_basis_independent(entries in prop::collection::vec(-1.0f64..1.0, 400), omega_d in -0.5f64..0.5) {
            let n = 5;
            let c = CouplingMatrices::dicke(n, 1.0, omega_d).unwrap();
            let d = decompose(&c, 0.2).unwrap();
            let k = exchange_operator(n, c.gamma_matrix());
            let mut groups: Vec<Vec<&SpectralState>> = Vec::new();
            for s in d.states() {
                match groups.last_mut() {
                    Some(g) if g[0].excitations == s.excitations
                        && (g[0].decay_rate - s.decay_rate).abs() < 1e-9
                        && (g[0].energy - s.energy).abs() < 1e-9 => g.push(s),
                    _ => groups.push(vec![s]),
                }
            }
            let mut rates = Vec::new();
            let mut cursor = 0;
            for g in &groups {
                let m = g.len();
                let raw = DMatrix::from_fn(m, m, |r, col| entries[(cursor + r * m + col) % entries.len()] + if r == col { 2.0 } else { 0.0 });
                cursor += m * m;
                let q = raw.qr().q();
                for col in q.column_iter() {
                    let v = g.iter().zip(col.iter()).fold(DVector::zeros(dim(n)), |acc, (s, w)| acc + &s.vector * *w);
                    rates.push(v.dot(&(&k * &v)));
                }
            }
            rates.sort_by(f64::total_cmp);
            let mut original = d.effective_decay_rates();
            original.sort_by(f64::total_cmp);
            for (a, b) in rates.iter().zip(&original) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }
}
