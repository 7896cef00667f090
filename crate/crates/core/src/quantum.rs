//! Dense many-spin states and operators.
//!
//! Basis convention: tensor-product basis of `N` spins with spin 1 the most
//! significant factor and `|e>` ordered before `|g>`. A basis index is read as
//! an `N`-bit word where bit `N-1-i` is set when spin `i` (zero-based) is in
//! `|g>`. Index `0` is the fully excited state and `2^N - 1` the ground state.

use std::fmt;

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

pub type C64 = Complex64;

/// Largest supported ensemble (Hilbert dimension 256).
pub const MAX_SPINS: usize = 8;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Hilbert-space dimension `2^n`.
pub fn dim(n_spins: usize) -> usize {
    1 << n_spins
}

pub(crate) fn check_spins(n_spins: usize) -> Result<()> {
    if n_spins == 0 || n_spins > MAX_SPINS {
        return Err(invalid(format!(
            "number of spins must be in 1..={MAX_SPINS}, got {n_spins}"
        )));
    }
    Ok(())
}

/// Bit mask of spin `spin` in a basis index.
#[inline]
pub(crate) fn spin_mask(n_spins: usize, spin: usize) -> usize {
    1 << (n_spins - 1 - spin)
}

/// Whether `spin` is excited in basis state `index`.
#[inline]
pub fn is_excited(n_spins: usize, index: usize, spin: usize) -> bool {
    index & spin_mask(n_spins, spin) == 0
}

/// Number of excited spins in basis state `index`.
#[inline]
pub fn excitations(n_spins: usize, index: usize) -> usize {
    n_spins - index.count_ones() as usize
}

/// `S^z` eigenvalue of basis state `index`.
#[inline]
pub fn sz_eigenvalue(n_spins: usize, index: usize) -> f64 {
    excitations(n_spins, index) as f64 - n_spins as f64 / 2.0
}

/// Single-spin operators in the `{|e>, |g>}` basis.
pub mod single {
    use super::*;

    pub fn raising() -> Matrix2<C64> {
        Matrix2::new(ZERO, ONE, ZERO, ZERO)
    }

    pub fn lowering() -> Matrix2<C64> {
        Matrix2::new(ZERO, ZERO, ONE, ZERO)
    }

    pub fn pauli_x() -> Matrix2<C64> {
        Matrix2::new(ZERO, ONE, ONE, ZERO)
    }

    pub fn pauli_y() -> Matrix2<C64> {
        let i = C64::i();
        Matrix2::new(ZERO, -i, i, ZERO)
    }

    pub fn pauli_z() -> Matrix2<C64> {
        Matrix2::new(ONE, ZERO, ZERO, -ONE)
    }
}

/// Rotation axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn pauli(self) -> Matrix2<C64> {
        match self {
            Axis::X => single::pauli_x(),
            Axis::Y => single::pauli_y(),
            Axis::Z => single::pauli_z(),
        }
    }

    /// `exp(i angle sigma / 2) = cos(angle/2) I + i sin(angle/2) sigma`.
    pub fn rotation(self, angle: f64) -> Matrix2<C64> {
        let (s, c) = (angle / 2.0).sin_cos();
        Matrix2::identity() * C64::new(c, 0.0) + self.pauli() * C64::new(0.0, s)
    }
}

/// `(1 (x) .. (x) u (x) .. (x) 1) * m`, with `u` acting on `spin`.
pub(crate) fn left_mul_local(m: &mut DMatrix<C64>, n_spins: usize, spin: usize, u: &Matrix2<C64>) {
    let mask = spin_mask(n_spins, spin);
    let d = m.nrows();
    for a in (0..d).filter(|a| a & mask == 0) {
        let b = a | mask;
        for col in 0..m.ncols() {
            let (x, y) = (m[(a, col)], m[(b, col)]);
            m[(a, col)] = u[(0, 0)] * x + u[(0, 1)] * y;
            m[(b, col)] = u[(1, 0)] * x + u[(1, 1)] * y;
        }
    }
}

/// `m * (1 (x) .. (x) u (x) .. (x) 1)`, with `u` acting on `spin`.
pub(crate) fn right_mul_local(m: &mut DMatrix<C64>, n_spins: usize, spin: usize, u: &Matrix2<C64>) {
    let mask = spin_mask(n_spins, spin);
    let d = m.ncols();
    for a in (0..d).filter(|a| a & mask == 0) {
        let b = a | mask;
        for row in 0..m.nrows() {
            let (x, y) = (m[(row, a)], m[(row, b)]);
            m[(row, a)] = x * u[(0, 0)] + y * u[(1, 0)];
            m[(row, b)] = x * u[(0, 1)] + y * u[(1, 1)];
        }
    }
}

/// Lifts a single-spin operator to the full space.
pub fn embed(n_spins: usize, spin: usize, op: &Matrix2<C64>) -> DMatrix<C64> {
    let mut m = DMatrix::identity(dim(n_spins), dim(n_spins));
    left_mul_local(&mut m, n_spins, spin, op);
    m
}

/// A labelled operator on the `N`-spin space.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinOperator {
    n_spins: usize,
    matrix: DMatrix<C64>,
    label: String,
}

impl SpinOperator {
    pub fn new(n_spins: usize, matrix: DMatrix<C64>, label: impl Into<String>) -> Result<Self> {
        check_spins(n_spins)?;
        if matrix.shape() != (dim(n_spins), dim(n_spins)) {
            return Err(Error::DimensionMismatch {
                expected: dim(n_spins),
                found: matrix.nrows(),
            });
        }
        Ok(Self {
            n_spins,
            matrix,
            label: label.into(),
        })
    }

    fn local(n_spins: usize, spin: usize, op: Matrix2<C64>, name: &str) -> Result<Self> {
        check_spins(n_spins)?;
        if spin >= n_spins {
            return Err(invalid(format!("spin index {spin} out of range for {n_spins} spins")));
        }
        Ok(Self {
            n_spins,
            matrix: embed(n_spins, spin, &op),
            label: format!("{name}_{}", spin + 1),
        })
    }

    /// `sigma_i^+` (zero-based `spin`).
    pub fn raising(n_spins: usize, spin: usize) -> Result<Self> {
        Self::local(n_spins, spin, single::raising(), "sigma+")
    }

    pub fn lowering(n_spins: usize, spin: usize) -> Result<Self> {
        Self::local(n_spins, spin, single::lowering(), "sigma-")
    }

    pub fn pauli(n_spins: usize, spin: usize, axis: Axis) -> Result<Self> {
        let name = match axis {
            Axis::X => "sigmax",
            Axis::Y => "sigmay",
            Axis::Z => "sigmaz",
        };
        Self::local(n_spins, spin, axis.pauli(), name)
    }

    /// `S^mu = sum_i sigma_i^mu / 2`.
    pub fn collective(n_spins: usize, axis: Axis) -> Result<Self> {
        check_spins(n_spins)?;
        let d = dim(n_spins);
        let matrix = match axis {
            Axis::Z => DMatrix::from_fn(d, d, |a, b| {
                if a == b {
                    C64::new(sz_eigenvalue(n_spins, a), 0.0)
                } else {
                    ZERO
                }
            }),
            _ => (0..n_spins)
                .map(|i| embed(n_spins, i, &axis.pauli()))
                .fold(DMatrix::zeros(d, d), |acc, m| acc + m)
                .scale(0.5),
        };
        let label = match axis {
            Axis::X => "Sx",
            Axis::Y => "Sy",
            Axis::Z => "Sz",
        };
        Self::new(n_spins, matrix, label)
    }

    pub fn identity(n_spins: usize) -> Result<Self> {
        check_spins(n_spins)?;
        Self::new(n_spins, DMatrix::identity(dim(n_spins), dim(n_spins)), "1")
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Operator product, labelled `"A*B"`.
    pub fn mul(&self, other: &SpinOperator) -> Result<SpinOperator> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(SpinOperator {
            n_spins: self.n_spins,
            matrix: &self.matrix * &other.matrix,
            label: format!("{}*{}", self.label, other.label),
        })
    }
}

impl fmt::Display for SpinOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}x{}]", self.label, self.dim(), self.dim())
    }
}

/// Density matrix of `N` spins.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_spins: usize,
    matrix: DMatrix<C64>,
}

/// Construction-time tolerance for Hermiticity and trace.
pub const STATE_TOL: f64 = 1e-10;

impl DensityMatrix {
    /// Wraps a matrix after checking Hermiticity and unit trace.
    pub fn new(n_spins: usize, matrix: DMatrix<C64>) -> Result<Self> {
        Self::with_tolerance(n_spins, matrix, STATE_TOL)
    }

    pub fn with_tolerance(n_spins: usize, matrix: DMatrix<C64>, tol: f64) -> Result<Self> {
        check_spins(n_spins)?;
        if matrix.shape() != (dim(n_spins), dim(n_spins)) {
            return Err(Error::DimensionMismatch {
                expected: dim(n_spins),
                found: matrix.nrows(),
            });
        }
        let rho = Self { n_spins, matrix };
        let herm = rho.hermiticity_error();
        if herm > tol {
            return Err(Error::NumericalConsistency(format!(
                "density matrix not Hermitian (max |rho - rho^dag| = {herm:.3e})"
            )));
        }
        let tr = (rho.trace() - 1.0).abs();
        if tr > tol {
            return Err(Error::NumericalConsistency(format!(
                "density matrix trace off by {tr:.3e}"
            )));
        }
        Ok(rho)
    }

    pub(crate) fn from_raw(n_spins: usize, matrix: DMatrix<C64>) -> Self {
        Self { n_spins, matrix }
    }

    /// `|G><G|`, all spins in `|g>`.
    pub fn ground_state(n_spins: usize) -> Result<Self> {
        check_spins(n_spins)?;
        let d = dim(n_spins);
        let mut matrix = DMatrix::zeros(d, d);
        matrix[(d - 1, d - 1)] = ONE;
        Ok(Self { n_spins, matrix })
    }

    /// `|psi><psi|` for a normalized state vector.
    pub fn pure(n_spins: usize, psi: &[C64]) -> Result<Self> {
        check_spins(n_spins)?;
        if psi.len() != dim(n_spins) {
            return Err(Error::DimensionMismatch {
                expected: dim(n_spins),
                found: psi.len(),
            });
        }
        let d = psi.len();
        let matrix = DMatrix::from_fn(d, d, |a, b| psi[a] * psi[b].conj());
        Self::new(n_spins, matrix)
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        // tr(rho^2) = sum |rho_ab|^2 for Hermitian rho.
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest elementwise `|rho - rho^dag|`.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in a..d {
                worst = worst.max((self.matrix[(a, b)] - self.matrix[(b, a)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue; a diagnostic for positivity.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + self.matrix.adjoint()).scale(0.5);
        SymmetricEigen::new(h).eigenvalues.min()
    }

    /// `(rho + rho^dag) / 2`.
    pub(crate) fn symmetrize(&mut self) {
        let adj = self.matrix.adjoint();
        self.matrix = (&self.matrix + adj).scale(0.5);
    }

    /// `tr(rho * op)`.
    pub fn expectation(&self, op: &SpinOperator) -> Result<C64> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: op.dim(),
            });
        }
        Ok(trace_product(&self.matrix, op.matrix()))
    }

    /// `<S^z>`.
    pub fn mean_sz(&self) -> f64 {
        (0..self.dim())
            .map(|a| self.matrix[(a, a)].re * sz_eigenvalue(self.n_spins, a))
            .sum()
    }

    /// `Delta S^z = sqrt(<(S^z)^2> - <S^z>^2)`.
    ///
    /// Radicands down to `-1e-10` are rounding noise and clamp to zero.
    pub fn collective_variance(&self) -> Result<f64> {
        let n = self.n_spins;
        let (mut m1, mut m2) = (0.0, 0.0);
        for a in 0..self.dim() {
            let p = self.matrix[(a, a)].re;
            let s = sz_eigenvalue(n, a);
            m1 += p * s;
            m2 += p * s * s;
        }
        radicand_sqrt(m2 - m1 * m1)
    }

    /// `U rho U^dag` for the tensor-product rotation.
    pub fn rotated(&self, rot: &Rotation) -> Result<Self> {
        if rot.n_spins() != self.n_spins {
            return Err(Error::DimensionMismatch {
                expected: self.n_spins,
                found: rot.n_spins(),
            });
        }
        let mut m = self.matrix.clone();
        rot.conjugate_in_place(&mut m, self.n_spins);
        Ok(Self::from_raw(self.n_spins, m))
    }
}

pub(crate) fn radicand_sqrt(x: f64) -> Result<f64> {
    if x < -1e-10 {
        return Err(Error::NumericalConsistency(format!("negative variance {x:.3e}")));
    }
    Ok(x.max(0.0).sqrt())
}

/// `tr(a * b)` without forming the product.
pub(crate) fn trace_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    let d = a.nrows();
    let mut acc = ZERO;
    for i in 0..d {
        for k in 0..d {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// `U = (x)_j exp(i phi_j sigma_j^mu / 2)` about a common axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    axis: Axis,
    angles: Vec<f64>,
}

impl Rotation {
    pub fn new(axis: Axis, angles: Vec<f64>) -> Result<Self> {
        check_spins(angles.len())?;
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(invalid("rotation angles must be finite"));
        }
        Ok(Self { axis, angles })
    }

    /// Same angle on every spin.
    pub fn uniform(axis: Axis, n_spins: usize, angle: f64) -> Result<Self> {
        Self::new(axis, vec![angle; n_spins])
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn n_spins(&self) -> usize {
        self.angles.len()
    }

    /// Per-spin 2x2 factors.
    pub fn factors(&self) -> Vec<Matrix2<C64>> {
        self.angles.iter().map(|&a| self.axis.rotation(a)).collect()
    }

    /// Full `2^N x 2^N` unitary.
    pub fn unitary(&self) -> DMatrix<C64> {
        let n = self.n_spins();
        let mut u = DMatrix::identity(dim(n), dim(n));
        for (spin, f) in self.factors().iter().enumerate() {
            left_mul_local(&mut u, n, spin, f);
        }
        u
    }

    pub(crate) fn conjugate_in_place(&self, m: &mut DMatrix<C64>, n_spins: usize) {
        for (spin, f) in self.factors().iter().enumerate() {
            left_mul_local(m, n_spins, spin, f);
            right_mul_local(m, n_spins, spin, &f.adjoint());
        }
    }
}

/// Applies `rot` to `rho`.
pub fn apply_rotation(rho: &DensityMatrix, rot: &Rotation) -> Result<DensityMatrix> {
    rho.rotated(rot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn close(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn ground_state_properties() {
        let g1 = DensityMatrix::ground_state(1).unwrap();
        assert_eq!(g1.mean_sz(), -0.5);

        let g2 = DensityMatrix::ground_state(2).unwrap();
        let expected = DMatrix::from_fn(4, 4, |a, b| if a == 3 && b == 3 { ONE } else { ZERO });
        assert_eq!(g2.matrix(), &expected);

        let g5 = DensityMatrix::ground_state(5).unwrap();
        assert_eq!(g5.trace(), 1.0);
        assert_eq!(g5.purity(), 1.0);
        assert_eq!(g5.mean_sz(), -2.5);
        assert_eq!(g5.collective_variance().unwrap(), 0.0);
        let sz2 = SpinOperator::collective(5, Axis::Z)
            .unwrap()
            .mul(&SpinOperator::collective(5, Axis::Z).unwrap())
            .unwrap();
        assert!((g5.expectation(&sz2).unwrap().re - 6.25).abs() < 1e-15);
    }

    #[test]
    fn spin_count_is_bounded() {
        assert!(DensityMatrix::ground_state(0).is_err());
        assert!(DensityMatrix::ground_state(MAX_SPINS + 1).is_err());
    }

    #[test]
    fn pi_pulse_excites_everything() {
        for n in 1..=4 {
            let rho = DensityMatrix::ground_state(n)
                .unwrap()
                .rotated(&Rotation::uniform(Axis::Y, n, PI).unwrap())
                .unwrap();
            assert!((rho.mean_sz() - n as f64 / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn z_rotation_leaves_diagonal_states() {
        let d = DMatrix::from_fn(8, 8, |a, b| {
            if a == b {
                C64::new((a + 1) as f64 / 36.0, 0.0)
            } else {
                ZERO
            }
        });
        let rho = DensityMatrix::new(3, d.clone()).unwrap();
        let out = rho
            .rotated(&Rotation::new(Axis::Z, vec![0.3, -1.1, 2.0]).unwrap())
            .unwrap();
        assert!(close(out.matrix(), &d) < 1e-15);
    }

    #[test]
    fn half_pulse_on_two_spins() {
        // Hand computation: each spin ends in (|e> + |g>)/sqrt2, so every
        // element of the 4x4 density matrix equals 1/4.
        let rho = DensityMatrix::ground_state(2)
            .unwrap()
            .rotated(&Rotation::uniform(Axis::Y, 2, FRAC_PI_2).unwrap())
            .unwrap();
        let quarter = DMatrix::from_element(4, 4, C64::new(0.25, 0.0));
        assert!(close(rho.matrix(), &quarter) < 1e-15);
        assert!(rho.mean_sz().abs() < 1e-15);
        let sx = SpinOperator::collective(2, Axis::X).unwrap();
        assert!((rho.expectation(&sx).unwrap() - ONE).norm() < 1e-15);
        // Equatorial state of one spin: Delta S^z = 1/2.
        let one = DensityMatrix::ground_state(1)
            .unwrap()
            .rotated(&Rotation::uniform(Axis::Y, 1, FRAC_PI_2).unwrap())
            .unwrap();
        assert!((one.collective_variance().unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ladder_algebra() {
        for n in 1..=3 {
            for i in 0..n {
                let up = SpinOperator::raising(n, i).unwrap();
                let down = SpinOperator::lowering(n, i).unwrap();
                let anti = up.mul(&down).unwrap().matrix() + down.mul(&up).unwrap().matrix();
                assert!(close(&anti, &DMatrix::identity(dim(n), dim(n))) < 1e-15);
                let z = up.mul(&down).unwrap().matrix() - down.mul(&up).unwrap().matrix();
                assert!(close(&z, SpinOperator::pauli(n, i, Axis::Z).unwrap().matrix()) < 1e-15);
                let y = (up.matrix() - down.matrix()) * C64::new(0.0, -1.0);
                assert!(close(&y, SpinOperator::pauli(n, i, Axis::Y).unwrap().matrix()) < 1e-15);
            }
        }
    }

    #[test]
    fn sz_spectrum() {
        let sz = SpinOperator::collective(4, Axis::Z).unwrap();
        let mut eig: Vec<f64> = (0..16).map(|a| sz.matrix()[(a, a)].re).collect();
        eig.sort_by(f64::total_cmp);
        eig.dedup();
        assert_eq!(eig, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        let from_paulis = (0..4)
            .map(|i| SpinOperator::pauli(4, i, Axis::Z).unwrap().matrix().clone())
            .fold(DMatrix::zeros(16, 16), |a, m| a + m)
            .scale(0.5);
        assert!(close(&from_paulis, sz.matrix()) < 1e-15);
    }

    #[test]
    fn expectation_dimension_mismatch() {
        let rho = DensityMatrix::ground_state(2).unwrap();
        let sz = SpinOperator::collective(3, Axis::Z).unwrap();
        assert!(matches!(rho.expectation(&sz), Err(Error::DimensionMismatch { .. })));
        let rot = Rotation::uniform(Axis::X, 3, 1.0).unwrap();
        assert!(rho.rotated(&rot).is_err());
    }

    #[test]
    fn construction_checks() {
        let bad = DMatrix::from_fn(2, 2, |a, b| if a == 0 && b == 1 { ONE } else { ZERO });
        assert!(DensityMatrix::new(1, bad).is_err());
        let bad_trace = DMatrix::identity(2, 2);
        assert!(DensityMatrix::new(1, bad_trace).is_err());
        assert!(Rotation::new(Axis::X, vec![f64::NAN]).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn random_state(n: usize, re: &[f64], im: &[f64]) -> DensityMatrix {
            let psi: Vec<C64> = re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect();
            let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let psi: Vec<C64> = psi.iter().map(|z| z / norm).collect();
            DensityMatrix::pure(n, &psi).unwrap()
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(100))]

            #[test]
            fn rotations_preserve_trace_and_purity(
                re in prop::collection::vec(-1.0f64..1.0, 8),
                im in prop::collection::vec(-1.0f64..1.0, 8),
                angles in prop::collection::vec(-7.0f64..7.0, 3),
                axis in prop::sample::select(vec![Axis::X, Axis::Y, Axis::Z]),
            ) {
                prop_assume!(re.iter().chain(&im).map(|x| x * x).sum::<f64>() > 1e-3);
                let rho = random_state(3, &re, &im);
                let rot = Rotation::new(axis, angles).unwrap();
                let out = rho.rotated(&rot).unwrap();
                prop_assert!((out.trace() - rho.trace()).abs() < 1e-12);
                prop_assert!((out.purity() - rho.purity()).abs() < 1e-10);
                let u = rot.unitary();
                let uu = &u * u.adjoint();
                prop_assert!(close(&uu, &DMatrix::identity(8, 8)) < 1e-10);
            }

            #[test]
            fn z_rotation_inverse_is_identity(
                re in prop::collection::vec(-1.0f64..1.0, 4),
                im in prop::collection::vec(-1.0f64..1.0, 4),
                phi in prop::collection::vec(-7.0f64..7.0, 2),
            ) {
                prop_assume!(re.iter().chain(&im).map(|x| x * x).sum::<f64>() > 1e-3);
                let rho = random_state(2, &re, &im);
                let fwd = Rotation::new(Axis::Z, phi.clone()).unwrap();
                let back = Rotation::new(Axis::Z, phi.iter().map(|p| -p).collect()).unwrap();
                let out = rho.rotated(&fwd).unwrap().rotated(&back).unwrap();
                prop_assert!(close(out.matrix(), rho.matrix()) < 1e-12);
            }
        }
    }
}
