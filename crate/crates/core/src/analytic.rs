//! Closed-form two-emitter Ramsey dynamics in the collective basis
//! `|G> = |gg>`, `|S> = (|eg> + |ge>)/sqrt2`, `|A> = (|eg> - |ge>)/sqrt2`,
//! `|E> = |ee>`.
//!
//! The decay channels decouple with rates `gamma_S = Gamma + gamma` and
//! `gamma_A = Gamma - gamma`. The coherences that carry the Ramsey signal obey
//!
//! ```text
//! d/dt rho_ES = [-(2 Gamma + gamma_S)/2 - i (omega - Omega)] rho_ES
//! d/dt rho_SG = [-gamma_S/2 - i (omega + Omega)] rho_SG + gamma_S rho_ES
//! d/dt rho_EA = [-(2 Gamma + gamma_A)/2 - i (omega + Omega)] rho_EA
//! d/dt rho_AG = [-gamma_A/2 - i (omega - Omega)] rho_AG - gamma_A rho_EA
//! ```
//!
//! The feed into `rho_AG` carries a minus sign: the antisymmetric jump
//! operator maps `|E>` to `-|A>`.
//!
//! Signals here are in units of the collective spin `S^z = sum_i s_i^z / 2`,
//! the same as [`crate::ramsey`]. Expressions written with the bare sum
//! `sum_i s_i^z` are twice as large (four times for the second moment); the
//! sensitivity is the same in both.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use nalgebra::DMatrix;

use crate::ensemble::{pair_couplings, CouplingMatrices};
use crate::error::{invalid, Error, Result};
use crate::quantum::C64;
use crate::ramsey::{sensitivity_vs_tau_with, Fringe, PulseSequence, SensitivityOptions, SensitivityResult};

/// Two emitters: single-atom rate, cross decay, dipole shift and detuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoAtomParams {
    pub gamma: f64,
    pub gamma_cross: f64,
    pub omega_shift: f64,
    pub detuning: f64,
}

impl TwoAtomParams {
    pub fn new(gamma: f64, gamma_cross: f64, omega_shift: f64, detuning: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(invalid(format!("decay rate must be positive, got {gamma}")));
        }
        if !(gamma_cross.is_finite() && omega_shift.is_finite() && detuning.is_finite()) {
            return Err(invalid("two-atom parameters must be finite"));
        }
        if gamma_cross.abs() > gamma * (1.0 + 1e-12) {
            return Err(invalid(format!(
                "cross decay {gamma_cross} exceeds the single-atom rate {gamma}"
            )));
        }
        Ok(Self {
            gamma,
            gamma_cross,
            omega_shift,
            detuning,
        })
    }

    /// Pair at separation `r` (units of the wavelength) with dipoles normal
    /// to the separation.
    pub fn from_separation(r: f64, gamma: f64) -> Result<Self> {
        let (g, o) = pair_couplings(r, 0.0)?;
        Self::new(gamma, g * gamma, o * gamma, 0.0)
    }

    /// Dicke pair, `gamma = Gamma`.
    pub fn dicke(gamma: f64, omega_shift: f64) -> Result<Self> {
        Self::new(gamma, gamma, omega_shift, 0.0)
    }

    pub fn with_detuning(self, detuning: f64) -> Self {
        Self { detuning, ..self }
    }

    pub fn gamma_s(&self) -> f64 {
        self.gamma + self.gamma_cross
    }

    pub fn gamma_a(&self) -> f64 {
        self.gamma - self.gamma_cross
    }

    pub fn couplings(&self) -> Result<CouplingMatrices> {
        let g = DMatrix::from_row_slice(2, 2, &[self.gamma, self.gamma_cross, self.gamma_cross, self.gamma]);
        let o = DMatrix::from_row_slice(2, 2, &[0.0, self.omega_shift, self.omega_shift, 0.0]);
        CouplingMatrices::from_parts(g, o, self.gamma)
    }
}

/// Coefficients of the closed-form two-atom sensitivities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormCoefficients {
    pub a_s: f64,
    pub a_a: f64,
    pub b_s: f64,
    pub b_a: f64,
    pub c_s: f64,
    pub c_a: f64,
    pub alpha_plus_s: f64,
    pub alpha_minus_s: f64,
    pub alpha_plus_a: f64,
    pub alpha_minus_a: f64,
    pub big_b_s: f64,
    pub big_b_a: f64,
    pub big_a_plus_s: f64,
    pub big_a_minus_s: f64,
    pub big_a_plus_a: f64,
    pub big_a_minus_a: f64,
}

/// Evaluates the coefficient table. Both channel rates must be positive.
pub fn coefficients(p: &TwoAtomParams) -> Result<ClosedFormCoefficients> {
    let (gs, ga, g, o) = (p.gamma_s(), p.gamma_a(), p.gamma, p.omega_shift);
    if !(gs > 0.0 && ga > 0.0) {
        return Err(Error::SingularCoefficient(format!(
            "channel rates must be positive (gamma_S = {gs}, gamma_A = {ga})"
        )));
    }
    let denom = g * g + 4.0 * o * o;
    let a_s = 0.25 * (ga / gs - gs / ga);
    let alpha_plus_s = 1.0 + g * gs / denom;
    let alpha_minus_s = 1.0 - g * gs / denom;
    let alpha_plus_a = 1.0 + g * ga / denom;
    let alpha_minus_a = 1.0 - g * ga / denom;
    let big_b_s = 2.0 * o * gs / denom;
    let big_b_a = 2.0 * o * ga / denom;
    Ok(ClosedFormCoefficients {
        a_s,
        a_a: -a_s,
        b_s: (4.0 * g - gs) / (4.0 * ga),
        b_a: (4.0 * g - ga) / (4.0 * gs),
        c_s: ga / (4.0 * gs),
        c_a: gs / (4.0 * ga),
        alpha_plus_s,
        alpha_minus_s,
        alpha_plus_a,
        alpha_minus_a,
        big_b_s,
        big_b_a,
        big_a_plus_s: alpha_plus_s.hypot(big_b_s),
        big_a_minus_s: alpha_minus_s.hypot(big_b_s),
        big_a_plus_a: alpha_plus_a.hypot(big_b_a),
        big_a_minus_a: alpha_minus_a.hypot(big_b_a),
    })
}

/// Which Ramsey sequence: symmetric (`m = 0`) or asymmetric (`m = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    S,
    A,
}

impl Branch {
    pub fn phase_index(self) -> usize {
        match self {
            Branch::S => 0,
            Branch::A => 1,
        }
    }

    pub fn sequence(self) -> PulseSequence {
        PulseSequence::new(2, self.phase_index()).expect("two spins allow m <= 1")
    }
}

/// Collective-basis elements at time `tau`. `upper` is `rho_ES` (branch S)
/// or `rho_EA` (branch A); `lower` is `rho_SG` or `rho_AG`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceSolution {
    pub branch: Branch,
    pub tau: f64,
    pub upper: C64,
    pub lower: C64,
    pub eg: C64,
    pub ee: f64,
    pub ss: f64,
    pub aa: f64,
}

impl CoherenceSolution {
    /// `<S^z>` after the second pulse.
    pub fn signal(&self) -> f64 {
        match self.branch {
            Branch::S => SQRT_2 * (self.upper + self.lower).re,
            Branch::A => SQRT_2 * (self.lower - self.upper).re,
        }
    }

    /// `<(S^z)^2>` after the second pulse.
    pub fn second_moment(&self) -> f64 {
        match self.branch {
            Branch::S => 0.5 * (1.0 + self.ss - self.aa + 2.0 * self.eg.re),
            Branch::A => 0.5 * (1.0 + self.aa - self.ss - 2.0 * self.eg.re),
        }
    }
}

/// State right after the first pulse, in the collective basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialCoherences {
    pub upper: f64,
    pub lower: f64,
    pub eg: f64,
    pub ee: f64,
    pub ss: f64,
    pub aa: f64,
}

/// Branch S starts from `(|E> + sqrt2 |S> + |G>)/2`, branch A from
/// `(|E> - sqrt2 |A> - |G>)/2`.
pub fn initial_coherences(branch: Branch) -> InitialCoherences {
    let h = 0.5 * FRAC_1_SQRT_2;
    match branch {
        Branch::S => InitialCoherences {
            upper: h,
            lower: h,
            eg: 0.25,
            ee: 0.25,
            ss: 0.5,
            aa: 0.0,
        },
        Branch::A => InitialCoherences {
            upper: -h,
            lower: h,
            eg: -0.25,
            ee: 0.25,
            ss: 0.0,
            aa: 0.5,
        },
    }
}

/// `(e^z - 1) / z`, continuous through `z = 0`.
fn phi1(z: C64) -> C64 {
    if z.norm() < 1e-3 {
        C64::new(1.0, 0.0) + z * (0.5 + z * (1.0 / 6.0 + z / 24.0))
    } else {
        (z.exp() - 1.0) / z
    }
}

/// `x(t)` for `x' = lambda2 x + feed * y`, `y = y0 e^{lambda1 t}`.
fn fed(x0: C64, lambda2: C64, feed: C64, y0: C64, lambda1: C64, t: f64) -> C64 {
    let e2 = (lambda2 * t).exp();
    x0 * e2 + feed * y0 * t * e2 * phi1((lambda1 - lambda2) * t)
}

/// Rate constants of one branch: `(lambda_upper, lambda_lower, feed)`.
fn branch_rates(p: &TwoAtomParams, branch: Branch) -> (C64, C64, f64) {
    let (g, w, o) = (p.gamma, p.detuning, p.omega_shift);
    match branch {
        Branch::S => {
            let gs = p.gamma_s();
            (
                C64::new(-(2.0 * g + gs) / 2.0, -(w - o)),
                C64::new(-gs / 2.0, -(w + o)),
                gs,
            )
        }
        Branch::A => {
            let ga = p.gamma_a();
            (
                C64::new(-(2.0 * g + ga) / 2.0, -(w + o)),
                C64::new(-ga / 2.0, -(w - o)),
                -ga,
            )
        }
    }
}

/// Exact solution of the two-atom equations at time `tau`, starting from the
/// state prepared by the branch's first pulse. `gamma_A = 0` is allowed.
pub fn coherence_solutions(p: &TwoAtomParams, tau: f64, branch: Branch) -> Result<CoherenceSolution> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(invalid(format!("time must be >= 0, got {tau}")));
    }
    let init = initial_coherences(branch);
    let (l_up, l_low, feed) = branch_rates(p, branch);
    let upper0 = C64::new(init.upper, 0.0);
    let upper = upper0 * (l_up * tau).exp();
    let lower = fed(C64::new(init.lower, 0.0), l_low, C64::new(feed, 0.0), upper0, l_up, tau);
    let eg = C64::new(init.eg, 0.0) * C64::new(-p.gamma, -2.0 * p.detuning).scale(tau).exp();

    let two_g = 2.0 * p.gamma;
    let ee = init.ee * (-two_g * tau).exp();
    let population = |x0: f64, rate: f64| -> f64 {
        let r = C64::new(-rate, 0.0);
        fed(
            C64::new(x0, 0.0),
            r,
            C64::new(rate, 0.0),
            C64::new(init.ee, 0.0),
            C64::new(-two_g, 0.0),
            tau,
        )
        .re
    };
    Ok(CoherenceSolution {
        branch,
        tau,
        upper,
        lower,
        eg,
        ee,
        ss: population(init.ss, p.gamma_s()),
        aa: population(init.aa, p.gamma_a()),
    })
}

/// Detuning dependence of a branch at fixed `tau`, for the shared
/// sensitivity minimizer.
pub fn analytic_fringe(p: &TwoAtomParams, tau: f64, branch: Branch) -> Result<Fringe> {
    let at_zero = p.with_detuning(0.0);
    let sol = coherence_solutions(&at_zero, tau, branch)?;
    // Only upper/lower wind with e^{-i omega tau}; rho_EG winds twice as fast.
    let c1 = match branch {
        Branch::S => (sol.upper + sol.lower) * FRAC_1_SQRT_2,
        Branch::A => (sol.lower - sol.upper) * FRAC_1_SQRT_2,
    };
    let sign = if branch == Branch::S { 1.0 } else { -1.0 };
    let c0 = match branch {
        Branch::S => 0.5 * (1.0 + sol.ss - sol.aa),
        Branch::A => 0.5 * (1.0 + sol.aa - sol.ss),
    };
    Ok(Fringe {
        tau,
        c1,
        c0,
        c2: sol.eg * (0.5 * sign),
    })
}

/// Closed-form two-atom sensitivities:
///
/// ```text
/// [dw]_S = sqrt(2 (1 + a_S e^{-2 Gamma t} + b_S e^{-gamma_S t} - c_S e^{-gamma_A t}))
///          / (t e^{-gamma_S t / 2} (e^{-Gamma t} A_S^- + A_S^+))
/// [dw]_A = sqrt(2 (1 + a_A e^{-2 Gamma t} + b_A e^{-gamma_A t} - c_A e^{-gamma_S t}))
///          / (t e^{-gamma_A t / 2} (e^{-Gamma t} A_A^+ + A_A^-))
/// ```
///
/// The calligraphic amplitudes are taken to be the tabulated `A^+-`.
pub fn closed_form_sensitivity(p: &TwoAtomParams, tau: f64, branch: Branch) -> Result<f64> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(invalid(format!("time must be > 0, got {tau}")));
    }
    let k = coefficients(p)?;
    let (g, gs, ga) = (p.gamma, p.gamma_s(), p.gamma_a());
    let decay = |rate: f64| (-rate * tau).exp();
    let (radicand, denominator) = match branch {
        Branch::S => (
            2.0 * (1.0 + k.a_s * decay(2.0 * g) + k.b_s * decay(gs) - k.c_s * decay(ga)),
            tau * decay(gs / 2.0) * (decay(g) * k.big_a_minus_s + k.big_a_plus_s),
        ),
        Branch::A => (
            2.0 * (1.0 + k.a_a * decay(2.0 * g) + k.b_a * decay(ga) - k.c_a * decay(gs)),
            tau * decay(ga / 2.0) * (decay(g) * k.big_a_plus_a + k.big_a_minus_a),
        ),
    };
    if radicand < 0.0 {
        return Err(Error::NumericalConsistency(format!(
            "closed-form variance is negative ({radicand:.3e}) at tau = {tau}"
        )));
    }
    Ok(radicand.sqrt() / denominator)
}

/// Comparison of the closed-form sensitivity against the numerical pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationReport {
    pub branch: Branch,
    pub taus: Vec<f64>,
    pub closed_form: Vec<f64>,
    pub numeric: Vec<f64>,
    /// Least-squares constant `k` in `numeric = k * closed_form`.
    pub constant: f64,
    /// Largest `|numeric / (k * closed_form) - 1|`.
    pub max_rel_deviation: f64,
}

/// Fits one global constant between the closed form and the numerical
/// sensitivity over `taus`.
pub fn normalization_report(p: &TwoAtomParams, taus: &[f64], branch: Branch) -> Result<NormalizationReport> {
    let numeric: Vec<f64> = numeric_sensitivities(p, taus, branch)?
        .iter()
        .map(|r| r.delta_omega)
        .collect();
    let closed_form = taus
        .iter()
        .map(|&t| closed_form_sensitivity(p, t, branch))
        .collect::<Result<Vec<_>>>()?;
    // Fit on ratios so every time point weighs the same.
    let ratios: Vec<f64> = numeric.iter().zip(&closed_form).map(|(n, c)| n / c).collect();
    let constant = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let max_rel_deviation = ratios.iter().map(|r| (r / constant - 1.0).abs()).fold(0.0, f64::max);
    Ok(NormalizationReport {
        branch,
        taus: taus.to_vec(),
        closed_form,
        numeric,
        constant,
        max_rel_deviation,
    })
}

/// Numerical sensitivity of a branch over an ascending time grid.
pub fn numeric_sensitivities(p: &TwoAtomParams, taus: &[f64], branch: Branch) -> Result<Vec<SensitivityResult>> {
    sensitivity_vs_tau_with(
        &p.couplings()?,
        &branch.sequence(),
        taus,
        &SensitivityOptions::default(),
    )
}
