//! Scalar minimization helpers.

/// Result of a bracketed one-dimensional minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a minimum of `f` on `[lo, hi]`.
///
/// Stops once the bracket is narrower than `tol`. Errors from `f` abort the
/// search.
pub fn golden_section<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    lo: f64,
    hi: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Minimum, E> {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut iterations = 0;
    while (b - a) > tol && iterations < max_iter {
        iterations += 1;
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    let (x, value) = if fc < fd { (c, fc) } else { (d, fd) };
    Ok(Minimum { x, value, iterations })
}

/// Index of the smallest finite value, if any.
pub fn argmin(values: &[f64]) -> Option<usize> {
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    #[test]
    fn finds_parabola_vertex() {
        let m = golden_section(|x| Ok::<_, Infallible>((x - 0.3).powi(2) + 2.0), -1.0, 2.0, 1e-10, 200).unwrap();
        assert!((m.x - 0.3).abs() < 1e-7);
        assert!((m.value - 2.0).abs() < 1e-15);
        assert!(m.iterations > 10);
    }

    #[test]
    fn reversed_bracket_and_errors() {
        let m = golden_section(|x| Ok::<_, Infallible>(x.cos()), 4.0, 2.0, 1e-9, 200).unwrap();
        assert!((m.x - std::f64::consts::PI).abs() < 1e-7);
        let err = golden_section(|_| Err::<f64, _>("boom"), 0.0, 1.0, 1e-3, 10);
        assert_eq!(err, Err("boom"));
    }

    #[test]
    fn argmin_skips_nan() {
        assert_eq!(argmin(&[3.0, f64::NAN, 1.0, 2.0]), Some(2));
        assert_eq!(argmin(&[f64::NAN, f64::INFINITY]), None);
        assert_eq!(argmin(&[]), None);
    }
}
