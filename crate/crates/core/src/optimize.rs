//! Golden-section minimization of a unimodal scalar function.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Minimize `f` on `[lo, hi]` until the bracket is narrower than `tol`.
/// Returns the best point evaluated.
pub fn golden_section<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<Minimum>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::param(
            "bracket",
            format!("need finite lo < hi, got [{lo}, {hi}]"),
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut evaluations = 2;
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
        evaluations += 1;
    }
    let (x, value) = if fc < fd { (c, fc) } else { (d, fd) };
    Ok(Minimum { x, value, evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_vertex() {
        let m = golden_section(|x| Ok((x - 0.3).powi(2) - 1.0), 0.0, 1.0, 1e-8).unwrap();
        assert!((m.x - 0.3).abs() < 1e-7);
        assert!((m.value + 1.0).abs() < 1e-14);
    }

    #[test]
    fn minimum_at_edge() {
        let m = golden_section(|x| Ok(x), 2.0, 3.0, 1e-6).unwrap();
        assert!(m.x - 2.0 < 1e-6);
    }

    #[test]
    fn rejects_bad_bracket_and_propagates_errors() {
        assert!(golden_section(|x| Ok(x), 1.0, 1.0, 1e-3).is_err());
        assert!(golden_section(|x| Ok(x), 0.0, 1.0, 0.0).is_err());
        let e = golden_section(|_| Err(Error::param("f", "boom")), 0.0, 1.0, 1e-3);
        assert!(e.is_err());
    }
}
