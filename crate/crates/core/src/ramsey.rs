//! Ramsey sequences, the detected signal and the frequency sensitivity
//! `delta_omega = min_omega Delta S^z / |d<S^z>/d omega|`.
//!
//! The first pulse is `R1 = (x)_j R_z(phi_j) R_y(pi/2)` and the second
//! `R2 = (x)_j R_y(pi/2) R_z(-phi_j)`, with `phi_j = 2 pi m j / N` for
//! `j = 0..N`. Index `m = 0` is the symmetric sequence.
//!
//! Sensitivities are evaluated through a [`Fringe`]: the detuning only
//! multiplies excitation sector `k` of the state by `exp(-i k omega tau)`, and
//! the measured `S^z` after `R2` only sees sectors `k = +-1` (its square sees
//! `k = 0, +-2`). One evolution at zero detuning therefore gives the signal
//! and variance for every `omega` in closed form.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dynamics::{build_generator, evolve, evolve_with, sector_of, LindbladGenerator, Method, EVOLUTION_TOL};
use crate::ensemble::CouplingMatrices;
use crate::error::{invalid, Error, Result};
use crate::optimize::{argmin, golden_section};
use crate::quantum::{check_spins, dim, radicand_sqrt, sz_eigenvalue, Axis, DensityMatrix, Rotation, C64, ZERO};

/// Derivatives smaller than this count as a flat signal.
pub const FLAT_DERIVATIVE: f64 = 1e-12;

/// A Ramsey pulse pair with per-spin phase spread.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    n_spins: usize,
    phase_index: Option<usize>,
    phases: Vec<f64>,
}

fn indexed_phases(n: usize, m: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * (m * j) as f64 / n as f64).collect()
}

impl PulseSequence {
    /// Sequence with phases `2 pi m j / N`, `m <= N / 2`.
    pub fn new(n_spins: usize, m: usize) -> Result<Self> {
        check_spins(n_spins)?;
        if m > n_spins / 2 {
            return Err(invalid(format!(
                "phase index {m} exceeds floor(N/2) = {} for N = {n_spins}",
                n_spins / 2
            )));
        }
        Ok(Self {
            n_spins,
            phase_index: Some(m),
            phases: indexed_phases(n_spins, m),
        })
    }

    pub fn symmetric(n_spins: usize) -> Result<Self> {
        Self::new(n_spins, 0)
    }

    /// Sequence with arbitrary per-spin phases, e.g. from a tilted beam.
    pub fn with_phases(phases: Vec<f64>) -> Result<Self> {
        check_spins(phases.len())?;
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(invalid("phases must be finite"));
        }
        Ok(Self {
            n_spins: phases.len(),
            phase_index: None,
            phases,
        })
    }

    /// The complex-conjugate phase set, index `m -> N - m`.
    pub fn mirrored(&self) -> Self {
        match self.phase_index {
            Some(m) if m > 0 => Self {
                n_spins: self.n_spins,
                phase_index: Some(self.n_spins - m),
                phases: indexed_phases(self.n_spins, self.n_spins - m),
            },
            Some(_) => self.clone(),
            None => Self {
                n_spins: self.n_spins,
                phase_index: None,
                phases: self.phases.iter().map(|p| -p).collect(),
            },
        }
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    /// `m`, or `None` for a custom phase set.
    pub fn phase_index(&self) -> Option<usize> {
        self.phase_index
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn is_symmetric(&self) -> bool {
        self.phases.iter().all(|&p| p == 0.0)
    }

    fn y_half(&self) -> Rotation {
        Rotation::uniform(Axis::Y, self.n_spins, PI / 2.0).expect("valid spin count")
    }

    fn z_spread(&self, sign: f64) -> Rotation {
        Rotation::new(Axis::Z, self.phases.iter().map(|p| sign * p).collect()).expect("finite phases")
    }

    pub fn first_pulse_unitary(&self) -> DMatrix<C64> {
        self.z_spread(1.0).unitary() * self.y_half().unitary()
    }

    pub fn second_pulse_unitary(&self) -> DMatrix<C64> {
        self.y_half().unitary() * self.z_spread(-1.0).unitary()
    }

    /// Applies `R1`. The sequence is meant to start from `|G>`; other inputs
    /// are accepted with a warning.
    pub fn first_pulse(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.check_dim(rho)?;
        let d = rho.dim();
        if (rho.matrix()[(d - 1, d - 1)].re - 1.0).abs() > 1e-10 {
            log::warn!("first Ramsey pulse applied to a state other than the ground state");
        }
        rho.rotated(&self.y_half())?.rotated(&self.z_spread(1.0))
    }

    /// Applies `R2`.
    pub fn second_pulse(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.check_dim(rho)?;
        rho.rotated(&self.z_spread(-1.0))?.rotated(&self.y_half())
    }

    /// `R1 |G><G| R1^dag`.
    pub fn prepared_state(&self) -> Result<DensityMatrix> {
        self.first_pulse(&DensityMatrix::ground_state(self.n_spins)?)
    }

    fn check_dim(&self, rho: &DensityMatrix) -> Result<()> {
        if rho.n_spins() != self.n_spins {
            return Err(Error::DimensionMismatch {
                expected: dim(self.n_spins),
                found: rho.dim(),
            });
        }
        Ok(())
    }
}

/// `<S^z>` and `Delta S^z` after the second pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamseySignal {
    pub signal: f64,
    pub delta_sz: f64,
}

/// Runs the full sequence at detuning `omega`: `R1`, free evolution for
/// `tau`, `R2`, then reads out `S^z`.
pub fn ramsey_signal(couplings: &CouplingMatrices, seq: &PulseSequence, omega: f64, tau: f64) -> Result<RamseySignal> {
    check_sequence(couplings, seq)?;
    let gen = build_generator(couplings, omega)?;
    let rho = evolve(&gen, &seq.prepared_state()?, tau)?;
    let fin = seq.second_pulse(&rho)?;
    Ok(RamseySignal {
        signal: fin.mean_sz(),
        delta_sz: fin.collective_variance()?,
    })
}

fn check_sequence(couplings: &CouplingMatrices, seq: &PulseSequence) -> Result<()> {
    if couplings.len() != seq.n_spins() {
        return Err(Error::DimensionMismatch {
            expected: couplings.len(),
            found: seq.n_spins(),
        });
    }
    Ok(())
}

/// Signal and second moment of `S^z` as functions of detuning at fixed `tau`.
///
/// `<S^z>(omega) = 2 Re(c1 e^{-i omega tau})` and
/// `<(S^z)^2>(omega) = c0 + 2 Re(c2 e^{-2 i omega tau})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fringe {
    pub tau: f64,
    pub c1: C64,
    pub c0: f64,
    pub c2: C64,
}

impl Fringe {
    pub fn signal(&self, omega: f64) -> f64 {
        2.0 * (self.c1 * C64::from_polar(1.0, -omega * self.tau)).re
    }

    pub fn second_moment(&self, omega: f64) -> f64 {
        self.c0 + 2.0 * (self.c2 * C64::from_polar(1.0, -2.0 * omega * self.tau)).re
    }

    pub fn delta_sz(&self, omega: f64) -> Result<f64> {
        let s = self.signal(omega);
        radicand_sqrt(self.second_moment(omega) - s * s)
    }

    /// Exact `d<S^z>/d omega`.
    pub fn derivative(&self, omega: f64) -> f64 {
        2.0 * (C64::new(0.0, -self.tau) * self.c1 * C64::from_polar(1.0, -omega * self.tau)).re
    }

    /// Fringe amplitude `2 |c1|`.
    pub fn contrast(&self) -> f64 {
        2.0 * self.c1.norm()
    }
}

/// `R2^dag S^z R2` and its square.
fn readout_operators(seq: &PulseSequence) -> (DMatrix<C64>, DMatrix<C64>) {
    let n = seq.n_spins();
    let u = seq.second_pulse_unitary();
    let sz = DMatrix::from_fn(dim(n), dim(n), |a, b| {
        if a == b {
            C64::new(sz_eigenvalue(n, a), 0.0)
        } else {
            ZERO
        }
    });
    let o = u.adjoint() * sz * &u;
    let o2 = &o * &o;
    (o, o2)
}

/// Evaluates fringes for a fixed set of couplings, sharing propagators across
/// pulse sequences and evolution times.
#[derive(Debug)]
pub struct FringeEngine {
    generator: LindbladGenerator,
    method: Method,
}

struct Tracked {
    o: DMatrix<C64>,
    o2: DMatrix<C64>,
}

impl Tracked {
    fn new(seq: &PulseSequence) -> Self {
        let (o, o2) = readout_operators(seq);
        Self { o, o2 }
    }

    fn fringe_from_dense(&self, tau: f64, rho: &DMatrix<C64>) -> Fringe {
        let n = (rho.nrows() as f64).log2().round() as usize;
        let (mut c1, mut c0, mut c2) = (ZERO, ZERO, ZERO);
        for a in 0..rho.nrows() {
            for b in 0..rho.ncols() {
                match sector_of(n, a, b) {
                    0 => c0 += rho[(a, b)] * self.o2[(b, a)],
                    1 => c1 += rho[(a, b)] * self.o[(b, a)],
                    2 => c2 += rho[(a, b)] * self.o2[(b, a)],
                    _ => {}
                }
            }
        }
        Fringe { tau, c1, c0: c0.re, c2 }
    }
}

/// Sectors that carry the readout.
const READOUT_SECTORS: [i32; 3] = [0, 1, 2];

impl FringeEngine {
    pub fn new(couplings: &CouplingMatrices) -> Result<Self> {
        Self::with_method(couplings, Method::Auto)
    }

    pub fn with_method(couplings: &CouplingMatrices, method: Method) -> Result<Self> {
        let generator = build_generator(couplings, 0.0)?;
        let method = method.resolve(couplings.len());
        Ok(Self { generator, method })
    }

    pub fn n_spins(&self) -> usize {
        self.generator.n_spins()
    }

    fn sectors(&self) -> Vec<i32> {
        READOUT_SECTORS
            .iter()
            .copied()
            .filter(|&k| k <= self.n_spins() as i32)
            .collect()
    }

    /// Fringe of `seq` at a single `tau`.
    pub fn fringe(&self, seq: &PulseSequence, tau: f64) -> Result<Fringe> {
        Ok(self.fringes(std::slice::from_ref(seq), &[tau])?.remove(0).remove(0))
    }

    /// Fringes indexed `[sequence][tau]`; `taus` must be ascending and `>= 0`.
    pub fn fringes(&self, seqs: &[PulseSequence], taus: &[f64]) -> Result<Vec<Vec<Fringe>>> {
        if seqs.is_empty() || taus.is_empty() {
            return Err(invalid("need at least one sequence and one time"));
        }
        for seq in seqs {
            check_sequence(self.generator.couplings(), seq)?;
        }
        check_time_grid(taus, true)?;
        match self.method {
            Method::Exponential => self.fringes_exponential(seqs, taus),
            _ => self.fringes_stepped(seqs, taus),
        }
    }

    fn fringes_stepped(&self, seqs: &[PulseSequence], taus: &[f64]) -> Result<Vec<Vec<Fringe>>> {
        seqs.iter()
            .map(|seq| {
                let tracked = Tracked::new(seq);
                let mut rho = seq.prepared_state()?;
                let mut t = 0.0;
                taus.iter()
                    .map(|&tau| {
                        rho = evolve_with(&self.generator, &rho, tau - t, self.method)?;
                        t = tau;
                        Ok(tracked.fringe_from_dense(tau, rho.matrix()))
                    })
                    .collect()
            })
            .collect()
    }

    fn fringes_exponential(&self, seqs: &[PulseSequence], taus: &[f64]) -> Result<Vec<Vec<Fringe>>> {
        let superop = self.generator.superoperator();
        let sectors = self.sectors();
        let blocks: Vec<_> = sectors
            .iter()
            .map(|&k| superop.block(k).expect("sector within range"))
            .collect();
        let tracked: Vec<Tracked> = seqs.iter().map(Tracked::new).collect();
        let mut states: Vec<Vec<DVector<f64>>> = seqs
            .iter()
            .map(|seq| {
                let rho = seq.prepared_state()?;
                Ok(blocks.iter().map(|b| b.gather(rho.matrix())).collect())
            })
            .collect::<Result<_>>()?;

        let horizon = taus[taus.len() - 1].max(1.0);
        let mut cache: Option<(f64, Vec<DMatrix<f64>>)> = None;
        let mut out = vec![Vec::with_capacity(taus.len()); seqs.len()];
        let mut t = 0.0;
        for &tau in taus {
            let step = tau - t;
            if step > 0.0 {
                // Uniform grids differ in their steps only by rounding; reuse
                // the propagator when the time error stays at the 1e-13 level.
                let reuse = matches!(&cache, Some((h, _)) if (h - step).abs() <= 1e-13 * horizon);
                if !reuse {
                    let props = blocks.par_iter().map(|b| b.exp_real(step)).collect();
                    cache = Some((step, props));
                }
                let props = &cache.as_ref().expect("filled above").1;
                for state in &mut states {
                    for (v, p) in state.iter_mut().zip(props) {
                        *v = p * &*v;
                    }
                }
            }
            t = tau;
            for ((state, tr), row) in states.iter().zip(&tracked).zip(&mut out) {
                row.push(fringe_from_sectors(tau, &blocks, state, tr)?);
            }
        }
        Ok(out)
    }
}

fn fringe_from_sectors(
    tau: f64,
    blocks: &[&crate::dynamics::superop::SectorBlock],
    state: &[DVector<f64>],
    tracked: &Tracked,
) -> Result<Fringe> {
    let (mut c1, mut c0, mut c2) = (ZERO, ZERO, ZERO);
    let mut trace = 0.0;
    for (block, v) in blocks.iter().zip(state) {
        let m = block.len();
        let (op, acc) = match block.k() {
            0 => (&tracked.o2, &mut c0),
            1 => (&tracked.o, &mut c1),
            _ => (&tracked.o2, &mut c2),
        };
        for (p, &(a, b)) in block.elements().iter().enumerate() {
            let z = C64::new(v[p], v[p + m]);
            *acc += z * op[(b, a)];
            if a == b {
                trace += z.re;
            }
        }
    }
    let violation = (trace - 1.0).abs();
    if violation.is_nan() || violation > EVOLUTION_TOL {
        return Err(Error::EvolutionDiverged {
            violation,
            what: "trace".into(),
        });
    }
    Ok(Fringe { tau, c1, c0: c0.re, c2 })
}

fn check_time_grid(taus: &[f64], allow_zero: bool) -> Result<()> {
    let mut prev = f64::NEG_INFINITY;
    for &t in taus {
        if !t.is_finite() || t < 0.0 || (!allow_zero && t == 0.0) {
            return Err(invalid(format!(
                "interrogation times must be finite and {}, got {t}",
                if allow_zero { ">= 0" } else { "> 0" }
            )));
        }
        if t <= prev {
            return Err(invalid("time grid must be strictly ascending"));
        }
        prev = t;
    }
    Ok(())
}

/// How the signal is evaluated while minimizing over detuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Evaluation {
    /// One evolution per `tau`, detuning applied as a sector phase.
    #[default]
    Fringe,
    /// A full evolution for every detuning probed.
    Direct,
}

/// Knobs for the detuning and time searches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityOptions {
    /// Coarse grid size over `omega tau in (0, pi)`.
    pub grid_points: usize,
    /// Relative tolerance of the golden-section refinement in `omega`.
    pub omega_rel_tol: f64,
    /// Finite-difference step is `fd_scale / tau`.
    pub fd_scale: f64,
    /// Relative tolerance of the refinement in `tau`.
    pub tau_rel_tol: f64,
    pub evaluation: Evaluation,
}

impl Default for SensitivityOptions {
    fn default() -> Self {
        Self {
            grid_points: 201,
            omega_rel_tol: 1e-10,
            fd_scale: 1e-5,
            tau_rel_tol: 1e-6,
            evaluation: Evaluation::Fringe,
        }
    }
}

/// Numerical side information for a [`SensitivityResult`].
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityDiagnostics {
    /// Central-difference `d<S^z>/d omega` at the optimum.
    pub derivative: f64,
    /// Exact derivative, available on the fringe path.
    pub exact_derivative: Option<f64>,
    pub fd_step: f64,
    pub grid_points: usize,
    pub grid_best_index: usize,
    pub refinement_iterations: usize,
    /// Searched detuning interval `(0, pi / tau)`.
    pub omega_interval: (f64, f64),
}

/// Optimal sensitivity at one interrogation time.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityResult {
    pub delta_omega: f64,
    pub omega_star: f64,
    pub tau: f64,
    pub omega_grid: Vec<f64>,
    pub signal_curve: Vec<f64>,
    pub variance_curve: Vec<f64>,
    /// The best grid point was at an end of the interval.
    pub boundary: bool,
    pub diagnostics: SensitivityDiagnostics,
}

/// Sensitivity at `tau` with default options.
pub fn sensitivity(couplings: &CouplingMatrices, seq: &PulseSequence, tau: f64) -> Result<SensitivityResult> {
    sensitivity_with(couplings, seq, tau, &SensitivityOptions::default())
}

pub fn sensitivity_with(
    couplings: &CouplingMatrices,
    seq: &PulseSequence,
    tau: f64,
    opts: &SensitivityOptions,
) -> Result<SensitivityResult> {
    check_time_grid(&[tau], false)?;
    check_sequence(couplings, seq)?;
    match opts.evaluation {
        Evaluation::Fringe => {
            let fringe = FringeEngine::new(couplings)?.fringe(seq, tau)?;
            sensitivity_from_fringe(&fringe, opts)
        }
        Evaluation::Direct => {
            let probe = |w: f64| {
                let s = ramsey_signal(couplings, seq, w, tau)?;
                Ok((s.signal, s.delta_sz))
            };
            minimize_over_detuning(tau, opts, probe, None)
        }
    }
}

/// Minimizes over detuning using a precomputed fringe.
pub fn sensitivity_from_fringe(fringe: &Fringe, opts: &SensitivityOptions) -> Result<SensitivityResult> {
    check_time_grid(&[fringe.tau], false)?;
    let probe = |w: f64| Ok((fringe.signal(w), fringe.delta_sz(w)?));
    minimize_over_detuning(fringe.tau, opts, probe, Some(fringe))
}

fn minimize_over_detuning(
    tau: f64,
    opts: &SensitivityOptions,
    probe: impl Fn(f64) -> Result<(f64, f64)>,
    fringe: Option<&Fringe>,
) -> Result<SensitivityResult> {
    if opts.grid_points < 3 {
        return Err(invalid("detuning grid needs at least 3 points"));
    }
    let h = opts.fd_scale / tau;
    let derivative = |w: f64| -> Result<f64> { Ok((probe(w + h)?.0 - probe(w - h)?.0) / (2.0 * h)) };
    let ratio = |w: f64| -> Result<f64> {
        let d = derivative(w)?;
        if d.abs() < FLAT_DERIVATIVE {
            return Ok(f64::INFINITY);
        }
        Ok(probe(w)?.1 / d.abs())
    };

    let p = opts.grid_points;
    let spacing = PI / ((p + 1) as f64 * tau);
    let omega_grid: Vec<f64> = (0..p).map(|i| (i + 1) as f64 * spacing).collect();
    let mut signal_curve = Vec::with_capacity(p);
    let mut variance_curve = Vec::with_capacity(p);
    let mut values = Vec::with_capacity(p);
    for &w in &omega_grid {
        let (s, v) = probe(w)?;
        signal_curve.push(s);
        variance_curve.push(v);
        values.push(ratio(w)?);
    }
    let best = argmin(&values).ok_or(Error::NoSensitivity { tau })?;

    // The minimand has period pi / tau, so the bracket may cross the ends.
    let centre = omega_grid[best];
    let tol = opts.omega_rel_tol * centre;
    let min = golden_section(&ratio, centre - spacing, centre + spacing, tol, 500)?;
    let (mut omega_star, mut delta_omega) = (min.x, min.value);
    if values[best] < delta_omega {
        omega_star = centre;
        delta_omega = values[best];
    }
    let period = PI / tau;
    omega_star = omega_star.rem_euclid(period);

    let fd = derivative(omega_star)?;
    Ok(SensitivityResult {
        delta_omega,
        omega_star,
        tau,
        omega_grid,
        signal_curve,
        variance_curve,
        boundary: best == 0 || best == p - 1,
        diagnostics: SensitivityDiagnostics {
            derivative: fd,
            exact_derivative: fringe.map(|f| f.derivative(omega_star)),
            fd_step: h,
            grid_points: p,
            grid_best_index: best,
            refinement_iterations: min.iterations,
            omega_interval: (0.0, period),
        },
    })
}

/// Sensitivity at every `tau` of an ascending grid.
pub fn sensitivity_vs_tau(
    couplings: &CouplingMatrices,
    seq: &PulseSequence,
    taus: &[f64],
) -> Result<Vec<SensitivityResult>> {
    sensitivity_vs_tau_with(couplings, seq, taus, &SensitivityOptions::default())
}

pub fn sensitivity_vs_tau_with(
    couplings: &CouplingMatrices,
    seq: &PulseSequence,
    taus: &[f64],
    opts: &SensitivityOptions,
) -> Result<Vec<SensitivityResult>> {
    if taus.is_empty() {
        return Err(invalid("time grid must be non-empty"));
    }
    check_time_grid(taus, false)?;
    match opts.evaluation {
        Evaluation::Fringe => {
            let engine = FringeEngine::new(couplings)?;
            engine.fringes(std::slice::from_ref(seq), taus)?[0]
                .iter()
                .map(|f| sensitivity_from_fringe(f, opts))
                .collect()
        }
        Evaluation::Direct => taus
            .iter()
            .map(|&t| sensitivity_with(couplings, seq, t, opts))
            .collect(),
    }
}

/// Best interrogation time for one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct TauOptimum {
    pub sequence: PulseSequence,
    /// Result at the refined optimal `tau`.
    pub best: SensitivityResult,
    /// Results on the coarse time grid.
    pub curve: Vec<SensitivityResult>,
    /// The best grid time was the first or last grid point.
    pub tau_boundary: bool,
}

/// Minimizes the sensitivity over `tau` for each sequence: coarse grid, then
/// golden-section refinement between the neighbours of the best grid point.
pub fn optimize_tau(
    couplings: &CouplingMatrices,
    seqs: &[PulseSequence],
    taus: &[f64],
    opts: &SensitivityOptions,
) -> Result<Vec<TauOptimum>> {
    check_time_grid(taus, false)?;
    let engine = FringeEngine::new(couplings)?;
    let grids = engine.fringes(seqs, taus)?;
    seqs.par_iter()
        .zip(grids.par_iter())
        .map(|(seq, fringes)| {
            let curve: Vec<SensitivityResult> = fringes
                .iter()
                .map(|f| sensitivity_from_fringe(f, opts))
                .collect::<Result<_>>()?;
            let values: Vec<f64> = curve.iter().map(|r| r.delta_omega).collect();
            let best = argmin(&values).ok_or(Error::NoSensitivity { tau: taus[0] })?;
            let lo = taus[best.saturating_sub(1)];
            let hi = taus[(best + 1).min(taus.len() - 1)];
            let mut result = curve[best].clone();
            if hi > lo {
                let eval =
                    |t: f64| -> Result<SensitivityResult> { sensitivity_from_fringe(&engine.fringe(seq, t)?, opts) };
                let min = golden_section(
                    |t| eval(t).map(|r| r.delta_omega),
                    lo,
                    hi,
                    opts.tau_rel_tol * taus[best],
                    200,
                )?;
                if min.value < result.delta_omega {
                    result = eval(min.x)?;
                }
            }
            Ok(TauOptimum {
                sequence: seq.clone(),
                best: result,
                curve,
                tau_boundary: best == 0 || best == taus.len() - 1,
            })
        })
        .collect()
}

/// Independent-atom sensitivity `e^{Gamma tau / 2} / (tau sqrt N)`.
pub fn independent_sensitivity(n: usize, gamma: f64, tau: f64) -> f64 {
    (gamma * tau / 2.0).exp() / (tau * (n as f64).sqrt())
}

/// Optimal independent-atom `(tau, delta_omega) = (2 / Gamma, Gamma e / (2 sqrt N))`.
pub fn independent_optimum(n: usize, gamma: f64) -> (f64, f64) {
    (2.0 / gamma, gamma * std::f64::consts::E / (2.0 * (n as f64).sqrt()))
}

/// Beam tilt `alpha` (from the chain axis normal) that imprints the phases of
/// index `m` on a chain of `n` emitters with spacing `spacing` (in units of
/// the wavelength): `cos(alpha) = n * spacing / m`.
pub fn tilt_angle_for_phase(n: usize, spacing: f64, m: usize) -> Result<f64> {
    check_spins(n)?;
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(invalid("spacing must be positive"));
    }
    if m == 0 || m > n / 2 {
        return Err(invalid(format!("phase index must be in 1..={}, got {m}", n / 2)));
    }
    let arg = n as f64 * spacing / m as f64;
    if arg > 1.0 {
        return Err(Error::NotRealizable(format!(
            "cos(alpha) = {arg} > 1: a single tilted beam cannot imprint index {m} on this chain"
        )));
    }
    Ok(arg.acos())
}

/// Phases `k0 j a / cos(alpha)` imprinted by a beam tilted by `alpha`, reduced
/// to `[0, 2 pi)`.
pub fn imprinted_phases(n: usize, spacing: f64, alpha: f64) -> Result<Vec<f64>> {
    check_spins(n)?;
    let c = alpha.cos();
    if c.abs() < 1e-12 {
        return Err(Error::NotRealizable("beam parallel to the chain normal plane".into()));
    }
    Ok((0..n)
        .map(|j| (2.0 * PI * j as f64 * spacing / c).rem_euclid(2.0 * PI))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::EmitterEnsemble;
    use crate::quantum::SpinOperator;

    fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn phase_index_validation() {
        assert!(PulseSequence::new(5, 2).is_ok());
        assert!(matches!(PulseSequence::new(5, 3), Err(Error::InvalidArgument(_))));
        assert!(PulseSequence::new(1, 1).is_err());
        assert!(PulseSequence::new(0, 0).is_err());
        assert!(PulseSequence::with_phases(vec![0.0, f64::NAN]).is_err());
        let s = PulseSequence::new(5, 2).unwrap();
        assert!((s.phases()[1] - 4.0 * PI / 5.0).abs() < 1e-15);
    }

    #[test]
    fn phases_sum_to_zero() {
        for n in 2..=8 {
            for m in 1..=n / 2 {
                let s = PulseSequence::new(n, m).unwrap();
                let sum: C64 = s.phases().iter().map(|&p| C64::from_polar(1.0, p)).sum();
                assert!(sum.norm() < 1e-12, "n={n} m={m}");
            }
        }
    }

    #[test]
    fn pulses_compose_to_pi_rotation() {
        for n in 1..=5 {
            let target = Rotation::uniform(Axis::Y, n, PI).unwrap().unitary();
            for m in 0..=n / 2 {
                let s = PulseSequence::new(n, m).unwrap();
                let u = s.second_pulse_unitary() * s.first_pulse_unitary();
                assert!(max_diff(&u, &target) < 1e-12);
                let fin = s.second_pulse(&s.prepared_state().unwrap()).unwrap();
                assert!((fin.mean_sz() - n as f64 / 2.0).abs() < 1e-12);
                assert!(fin.collective_variance().unwrap() < 1e-6);
            }
        }
    }

    #[test]
    fn asymmetric_first_pulse_has_no_mean_spin() {
        for n in 2..=5 {
            for m in 1..=n / 2 {
                let rho = PulseSequence::new(n, m).unwrap().prepared_state().unwrap();
                for axis in [Axis::X, Axis::Y, Axis::Z] {
                    let op = SpinOperator::collective(n, axis).unwrap();
                    assert!(rho.expectation(&op).unwrap().norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn symmetric_first_pulse_points_along_x() {
        let rho = PulseSequence::symmetric(4).unwrap().prepared_state().unwrap();
        let sx = SpinOperator::collective(4, Axis::X).unwrap();
        assert!((rho.expectation(&sx).unwrap().re - 2.0).abs() < 1e-12);
    }

    #[test]
    fn two_spin_asymmetric_state() {
        // R1 with phases {0, pi} gives (|E> - sqrt2 |A> - |G>) / 2 with
        // |A> = (|eg> - |ge>)/sqrt2: no symmetric single-excitation part.
        let rho = PulseSequence::new(2, 1).unwrap().prepared_state().unwrap();
        let m = rho.matrix();
        assert!((m[(0, 0)].re - 0.25).abs() < 1e-12);
        assert!((m[(3, 3)].re - 0.25).abs() < 1e-12);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = [ZERO, C64::new(h, 0.0), C64::new(h, 0.0), ZERO];
        let mut pop_s = ZERO;
        for a in 0..4 {
            for b in 0..4 {
                pop_s += s[a] * m[(a, b)] * s[b];
            }
        }
        assert!(pop_s.norm() < 1e-12);
    }

    #[test]
    fn zero_time_signal() {
        let c = EmitterEnsemble::chain(2, 0.3, 1.0).unwrap().couplings().unwrap();
        for m in 0..=1 {
            let s = PulseSequence::new(2, m).unwrap();
            for w in [-1.0, 0.0, 2.5] {
                let r = ramsey_signal(&c, &s, w, 0.0).unwrap();
                assert!((r.signal - 1.0).abs() < 1e-12);
                assert!(r.delta_sz < 1e-6);
            }
        }
    }

    #[test]
    fn single_atom_full_fringe() {
        let c = CouplingMatrices::independent(1, 1.0).unwrap();
        let s = PulseSequence::symmetric(1).unwrap();
        let tau = 1e-3;
        let r = ramsey_signal(&c, &s, PI / tau, tau).unwrap();
        assert!((r.signal + 0.5 * (-tau / 2.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn independent_signal_closed_form() {
        for n in 1..=3 {
            let c = CouplingMatrices::independent(n, 1.0).unwrap();
            let s = PulseSequence::symmetric(n).unwrap();
            for (w, tau) in [(0.4, 0.7), (-1.3, 2.2), (2.0, 4.0)] {
                let r = ramsey_signal(&c, &s, w, tau).unwrap();
                let x = (-tau / 2.0f64).exp() * (w * tau).cos();
                assert!((r.signal - n as f64 / 2.0 * x).abs() < 1e-10);
                let var = n as f64 / 4.0 * (1.0 - x * x);
                assert!((r.delta_sz - var.sqrt()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn fringe_matches_direct_evolution() {
        let c = EmitterEnsemble::chain(3, 0.23, 1.0).unwrap().couplings().unwrap();
        let engine = FringeEngine::new(&c).unwrap();
        for m in 0..=1 {
            let s = PulseSequence::new(3, m).unwrap();
            for tau in [0.3, 1.7] {
                let f = engine.fringe(&s, tau).unwrap();
                for w in [-0.9, 0.2, 1.4] {
                    let direct = ramsey_signal(&c, &s, w, tau).unwrap();
                    assert!((f.signal(w) - direct.signal).abs() < 1e-10);
                    assert!((f.delta_sz(w).unwrap() - direct.delta_sz).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn stepped_and_exponential_fringes_agree() {
        let c = EmitterEnsemble::square(0.25, 1.0).unwrap().couplings().unwrap();
        let seqs = [PulseSequence::symmetric(4).unwrap(), PulseSequence::new(4, 2).unwrap()];
        let taus = [0.5, 1.0, 1.5, 3.0];
        let a = FringeEngine::with_method(&c, Method::Exponential)
            .unwrap()
            .fringes(&seqs, &taus)
            .unwrap();
        let rk = Method::RungeKutta(crate::dynamics::RkTolerances::default());
        let b = FringeEngine::with_method(&c, rk)
            .unwrap()
            .fringes(&seqs, &taus)
            .unwrap();
        for (ra, rb) in a.iter().zip(&b) {
            for (fa, fb) in ra.iter().zip(rb) {
                assert!((fa.c1 - fb.c1).norm() < 1e-8);
                assert!((fa.c0 - fb.c0).abs() < 1e-8);
                assert!((fa.c2 - fb.c2).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn independent_sensitivity_matches_closed_form() {
        for n in 1..=4 {
            let c = CouplingMatrices::independent(n, 1.0).unwrap();
            let s = PulseSequence::symmetric(n).unwrap();
            let taus = [0.1, 0.9, 2.0, 5.0];
            for r in sensitivity_vs_tau(&c, &s, &taus).unwrap() {
                let expected = independent_sensitivity(n, 1.0, r.tau);
                assert!((r.delta_omega / expected - 1.0).abs() < 1e-6);
                assert!((r.omega_star * r.tau - PI / 2.0).abs() < 1e-4);
                assert!(!r.boundary);
                let exact = r.diagnostics.exact_derivative.unwrap();
                assert!((r.diagnostics.derivative / exact - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn direct_and_fringe_sensitivity_agree() {
        let c = EmitterEnsemble::chain(2, 0.3, 1.0).unwrap().couplings().unwrap();
        let direct = SensitivityOptions {
            evaluation: Evaluation::Direct,
            grid_points: 41,
            ..Default::default()
        };
        for m in 0..=1 {
            let s = PulseSequence::new(2, m).unwrap();
            let a = sensitivity(&c, &s, 1.8).unwrap();
            let b = sensitivity_with(&c, &s, 1.8, &direct).unwrap();
            assert!((a.delta_omega / b.delta_omega - 1.0).abs() < 1e-7);
        }
    }

    #[test]
    fn mirrored_sequence_has_same_sensitivity() {
        let c = EmitterEnsemble::chain(5, 0.2, 1.0).unwrap().couplings().unwrap();
        for m in 1..=2 {
            let s = PulseSequence::new(5, m).unwrap();
            let mirror = s.mirrored();
            assert_eq!(mirror.phase_index(), Some(5 - m));
            let a = sensitivity(&c, &s, 2.0).unwrap();
            let b = sensitivity(&c, &mirror, 2.0).unwrap();
            assert!((a.delta_omega - b.delta_omega).abs() < 1e-9 * a.delta_omega);
        }
    }

    #[test]
    fn dark_state_keeps_fringe() {
        let c = CouplingMatrices::dicke(2, 1.0, 0.0).unwrap();
        let s = PulseSequence::new(2, 1).unwrap();
        let f = FringeEngine::new(&c).unwrap().fringe(&s, 50.0).unwrap();
        // Half of the prepared state sits in |A>, which never decays.
        assert!((f.contrast() - 0.5).abs() < 1e-9);
        assert!(ramsey_signal(&c, &s, 0.0, 50.0).unwrap().signal.abs() > 0.4);
    }

    #[test]
    fn flat_signal_is_reported() {
        let c = CouplingMatrices::independent(1, 1.0).unwrap();
        let s = PulseSequence::symmetric(1).unwrap();
        assert!(matches!(sensitivity(&c, &s, 120.0), Err(Error::NoSensitivity { .. })));
        assert!(sensitivity(&c, &s, 0.0).is_err());
        assert!(sensitivity_vs_tau(&c, &s, &[1.0, 0.5]).is_err());
        assert!(sensitivity_vs_tau(&c, &s, &[]).is_err());
    }

    #[test]
    fn tau_optimum_for_independent_atoms() {
        let c = CouplingMatrices::independent(3, 1.0).unwrap();
        let taus: Vec<f64> = (1..=20).map(|i| 0.25 * i as f64).collect();
        let opt = optimize_tau(&c, &[PulseSequence::symmetric(3).unwrap()], &taus, &Default::default()).unwrap();
        let (t, d) = independent_optimum(3, 1.0);
        assert!((opt[0].best.tau - t).abs() < 1e-3);
        assert!((opt[0].best.delta_omega / d - 1.0).abs() < 1e-8);
        assert!(!opt[0].tau_boundary);
    }

    #[test]
    fn tilt_angles() {
        assert!(tilt_angle_for_phase(5, 0.2, 1).unwrap().abs() < 1e-7);
        assert!((tilt_angle_for_phase(5, 0.15, 1).unwrap() - 0.75f64.acos()).abs() < 1e-15);
        assert!(matches!(tilt_angle_for_phase(5, 0.3, 1), Err(Error::NotRealizable(_))));
        assert!((tilt_angle_for_phase(5, 0.3, 2).unwrap() - 0.75f64.acos()).abs() < 1e-12);
        assert!(matches!(
            tilt_angle_for_phase(5, 0.15, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn tilted_beam_imprints_indexed_phases() {
        for (n, a, m) in [(5, 0.15, 1), (5, 0.3, 2), (4, 0.1, 1)] {
            let alpha = tilt_angle_for_phase(n, a, m).unwrap();
            let imprinted = imprinted_phases(n, a, alpha).unwrap();
            let target = PulseSequence::new(n, m).unwrap();
            for (x, y) in imprinted.iter().zip(target.phases()) {
                let d = (x - y).rem_euclid(2.0 * PI);
                assert!(d.min(2.0 * PI - d) < 1e-9);
            }
        }
    }
}
