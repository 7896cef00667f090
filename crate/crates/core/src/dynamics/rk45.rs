//! Adaptive Dormand-Prince 5(4) integration of the master equation.

use nalgebra::DMatrix;

use super::LindbladGenerator;
use crate::error::{Error, Result};
use crate::quantum::C64;

/// Step-size control for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RkTolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for RkTolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// Fifth-order weights are the last row of A; these are the fourth-order ones.
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

pub(crate) fn integrate(
    gen: &LindbladGenerator,
    rho0: &DMatrix<C64>,
    tau: f64,
    tol: RkTolerances,
) -> Result<DMatrix<C64>> {
    let mut y = rho0.clone();
    let mut t = 0.0;
    let mut h = (tau / 100.0).min(0.05);
    let mut k: Vec<DMatrix<C64>> = Vec::with_capacity(7);
    k.push(gen.apply(&y));
    let mut steps = 0;
    while t < tau {
        if steps >= tol.max_steps {
            return Err(Error::EvolutionDiverged {
                violation: f64::INFINITY,
                what: format!("step limit reached at t = {t}"),
            });
        }
        steps += 1;
        h = h.min(tau - t);
        k.truncate(1);
        for s in 1..7 {
            let mut stage = y.clone();
            for (j, kj) in k.iter().enumerate() {
                if A[s][j] != 0.0 {
                    stage += kj * C64::new(h * A[s][j], 0.0);
                }
            }
            k.push(gen.apply(&stage));
        }
        // k[6] is evaluated at the fifth-order solution (FSAL).
        let mut y5 = y.clone();
        let mut err = DMatrix::from_element(y.nrows(), y.ncols(), C64::new(0.0, 0.0));
        for s in 0..7 {
            let b5 = if s < 6 { A[6][s] } else { 0.0 };
            if b5 != 0.0 {
                y5 += &k[s] * C64::new(h * b5, 0.0);
            }
            let e = b5 - B4[s];
            if e != 0.0 {
                err += &k[s] * C64::new(h * e, 0.0);
            }
        }
        let mut norm = 0.0;
        for (e, (a, b)) in err.iter().zip(y.iter().zip(y5.iter())) {
            let scale = tol.atol + tol.rtol * a.norm().max(b.norm());
            norm += (e.norm() / scale).powi(2);
        }
        let norm = (norm / err.len() as f64).sqrt();
        if !norm.is_finite() {
            return Err(Error::EvolutionDiverged {
                violation: f64::INFINITY,
                what: format!("non-finite error estimate at t = {t}"),
            });
        }
        if norm <= 1.0 {
            t += h;
            y = y5;
            let last = k.pop().expect("seven stages");
            k.clear();
            k.push(last);
        }
        let factor = if norm == 0.0 {
            5.0
        } else {
            (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h < 1e-14 * tau.max(1.0) {
            return Err(Error::EvolutionDiverged {
                violation: norm,
                what: format!("step size underflow at t = {t}"),
            });
        }
    }
    log::trace!("rk45: {steps} steps to tau = {tau}");
    Ok(y)
}
