//! Vectorized generator split into excitation-difference sectors.
//!
//! Element `(a, b)` of the density matrix belongs to sector
//! `k = exc(a) - exc(b)`. The sectors evolve independently; each block is
//! exponentiated through its real `2m x 2m` embedding
//! `[[Re L, -Im L], [Im L, Re L]]`.

use nalgebra::{DMatrix, DVector};

use super::{sector_of, LindbladGenerator};
use crate::quantum::{dim, is_excited, spin_mask, C64, ZERO};

/// One sector of the vectorized generator.
#[derive(Debug, Clone)]
pub struct SectorBlock {
    k: i32,
    elements: Vec<(usize, usize)>,
    matrix: DMatrix<C64>,
}

impl SectorBlock {
    pub fn k(&self) -> i32 {
        self.k
    }

    /// Density-matrix elements `(row, col)` in block order.
    pub fn elements(&self) -> &[(usize, usize)] {
        &self.elements
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// `exp(t L_k)` in real embedding.
    pub fn exp_real(&self, t: f64) -> DMatrix<f64> {
        let m = self.len();
        let mut big = DMatrix::<f64>::zeros(2 * m, 2 * m);
        for c in 0..m {
            for r in 0..m {
                let z = self.matrix[(r, c)] * t;
                big[(r, c)] = z.re;
                big[(r + m, c + m)] = z.re;
                big[(r, c + m)] = -z.im;
                big[(r + m, c)] = z.im;
            }
        }
        big.exp()
    }

    /// `[Re; Im]` of this sector's elements of `rho`.
    pub fn gather(&self, rho: &DMatrix<C64>) -> DVector<f64> {
        let m = self.len();
        let mut v = DVector::zeros(2 * m);
        for (p, &(a, b)) in self.elements.iter().enumerate() {
            v[p] = rho[(a, b)].re;
            v[p + m] = rho[(a, b)].im;
        }
        v
    }

    /// Writes a `[Re; Im]` vector back into `rho`.
    pub fn scatter(&self, v: &DVector<f64>, rho: &mut DMatrix<C64>) {
        let m = self.len();
        for (p, &(a, b)) in self.elements.iter().enumerate() {
            rho[(a, b)] = C64::new(v[p], v[p + m]);
        }
    }
}

/// The generator as a list of sector blocks, `k = -N ..= N`.
#[derive(Debug, Clone)]
pub struct Superoperator {
    n_spins: usize,
    blocks: Vec<SectorBlock>,
}

impl Superoperator {
    pub(crate) fn new(gen: &LindbladGenerator) -> Self {
        let n = gen.n_spins();
        let d = dim(n);
        let gamma = gen.couplings().gamma_matrix();
        let h_rows = gen.h_eff_rows();
        let i_unit = C64::i();

        let mut position = vec![0usize; d * d];
        let mut elements: Vec<Vec<(usize, usize)>> = vec![Vec::new(); 2 * n + 1];
        for a in 0..d {
            for b in 0..d {
                let slot = (sector_of(n, a, b) + n as i32) as usize;
                position[a * d + b] = elements[slot].len();
                elements[slot].push((a, b));
            }
        }

        let blocks = elements
            .into_iter()
            .enumerate()
            .map(|(slot, elements)| {
                let m = elements.len();
                let mut matrix = DMatrix::<C64>::zeros(m, m);
                for (p, &(a, b)) in elements.iter().enumerate() {
                    for &(c, h) in &h_rows[a] {
                        matrix[(p, position[c * d + b])] += -i_unit * h;
                    }
                    for &(c, h) in &h_rows[b] {
                        matrix[(p, position[a * d + c])] += i_unit * h.conj();
                    }
                    for si in (0..n).filter(|&s| !is_excited(n, a, s)) {
                        let ra = a & !spin_mask(n, si);
                        for sj in (0..n).filter(|&s| !is_excited(n, b, s)) {
                            let rb = b & !spin_mask(n, sj);
                            matrix[(p, position[ra * d + rb])] += C64::new(gamma[(si, sj)], 0.0);
                        }
                    }
                }
                SectorBlock {
                    k: slot as i32 - n as i32,
                    elements,
                    matrix,
                }
            })
            .collect();
        Self { n_spins: n, blocks }
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn blocks(&self) -> &[SectorBlock] {
        &self.blocks
    }

    /// Block of sector `k`, if `|k| <= N`.
    pub fn block(&self, k: i32) -> Option<&SectorBlock> {
        let slot = k + self.n_spins as i32;
        (slot >= 0).then(|| self.blocks.get(slot as usize)).flatten()
    }

    /// Propagator for time `t`, restricted to `sectors` when given.
    pub fn propagator(&self, t: f64, sectors: Option<&[i32]>) -> SectorPropagator {
        let parts = self
            .blocks
            .iter()
            .filter(|b| sectors.is_none_or(|s| s.contains(&b.k)))
            .map(|b| (b.k, b.exp_real(t)))
            .collect();
        SectorPropagator {
            n_spins: self.n_spins,
            parts,
        }
    }

    /// `exp(t L) rho`; elements outside `sectors` come out as zero.
    pub fn propagate(&self, rho: &DMatrix<C64>, t: f64, sectors: Option<&[i32]>) -> DMatrix<C64> {
        self.propagator(t, sectors).apply(self, rho)
    }
}

/// Precomputed sector propagators for one evolution time.
#[derive(Debug, Clone)]
pub struct SectorPropagator {
    n_spins: usize,
    parts: Vec<(i32, DMatrix<f64>)>,
}

impl SectorPropagator {
    pub fn sectors(&self) -> impl Iterator<Item = i32> + '_ {
        self.parts.iter().map(|(k, _)| *k)
    }

    pub fn apply(&self, superop: &Superoperator, rho: &DMatrix<C64>) -> DMatrix<C64> {
        debug_assert_eq!(superop.n_spins, self.n_spins);
        let d = dim(self.n_spins);
        let mut out = DMatrix::from_element(d, d, ZERO);
        for (k, prop) in &self.parts {
            let block = superop.block(*k).expect("sector in range");
            let v = prop * block.gather(rho);
            block.scatter(&v, &mut out);
        }
        out
    }
}
