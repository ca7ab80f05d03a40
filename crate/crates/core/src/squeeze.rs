//! Number-state matrix elements `G[m, n] = <m|U_r|n>` of the single-mode
//! squeeze unitary `U_r = exp[(r/2)(a² - a†²)]` on a truncated Fock basis.
//!
//! Three routes are provided:
//!
//! * [`closed_form`]: the finite alternating series, evaluated term by term
//!   in log space with explicit signs. Exact in exact arithmetic, but the
//!   terms grow like `(n tanh r)^{2i} / (i!)²` and cancel, so in `f64` it is
//!   only usable while the largest term stays O(1).
//! * [`squeeze_matrix`]: the production route. The closed form is evaluated
//!   at `r / 2^s` (where it is well conditioned) on a padded basis and then
//!   squared `s` times, using `U_a U_b = U_{a+b}`.
//! * [`exponential_oracle`]: Taylor series of the truncated generator with
//!   scaling and squaring. Independent of the series; used to check it.
//!
//! `G[m, n] = 0` whenever `m + n` is odd. Every route keeps those zeros exact.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use nalgebra::DMatrix;
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};

/// Bogoliubov parameters of `a -> μ a + ν a†`. The phase is fixed to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezeParams {
    pub r: f64,
    pub phi: f64,
}

impl SqueezeParams {
    pub fn new(r: f64) -> Result<Self> {
        check_r(r)?;
        Ok(Self { r, phi: 0.0 })
    }

    pub fn mu(&self) -> f64 {
        self.r.cosh()
    }

    /// `sinh r` for the phase-zero transformation.
    pub fn nu(&self) -> f64 {
        self.r.sinh()
    }
}

fn check_r(r: f64) -> Result<()> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::param(
            "r",
            format!("squeeze amplitude must be finite and >= 0, got {r}"),
        ));
    }
    Ok(())
}

fn check_n_max(n_max: usize) -> Result<()> {
    if n_max < 1 {
        return Err(Error::param("n_max", "need n_max >= 1"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqueezeMethod {
    ClosedForm,
    ClosedFormSquared { halvings: u32, padded_dim: usize },
    ExponentialOracle,
}

/// Real `(n_max + 1)²` matrix of squeeze amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct SqueezeMatrix {
    g: DMatrix<f64>,
    r: f64,
    column_defects: Vec<f64>,
    method: SqueezeMethod,
    /// Largest `ln |term|` met while summing the series; cancellation costs
    /// roughly `exp(max_log_term)` ulps.
    max_log_term: f64,
}

impl SqueezeMatrix {
    fn new(g: DMatrix<f64>, r: f64, method: SqueezeMethod, max_log_term: f64) -> Self {
        let column_defects = g
            .column_iter()
            .map(|c| (1.0 - c.iter().map(|x| x * x).sum::<f64>()).abs())
            .collect();
        Self {
            g,
            r,
            column_defects,
            method,
            max_log_term,
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn n_max(&self) -> usize {
        self.g.nrows() - 1
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn method(&self) -> SqueezeMethod {
        self.method
    }

    pub fn max_log_term(&self) -> f64 {
        self.max_log_term
    }

    /// `|1 - Σ_m G[m, n]²|` per column `n`: probability lost past `n_max`.
    pub fn column_defects(&self) -> &[f64] {
        &self.column_defects
    }

    /// Largest `n` such that every column `0..=n` loses less than `budget`.
    pub fn trusted_band(&self, budget: f64) -> Option<usize> {
        let first_bad = self.column_defects.iter().position(|&d| d >= budget);
        match first_bad {
            Some(0) => None,
            Some(n) => Some(n - 1),
            None => Some(self.n_max()),
        }
    }

    /// Transition probabilities `G[m, n]²`.
    pub fn transition_probabilities(&self) -> DMatrix<f64> {
        self.g.map(|x| x * x)
    }
}

/// Signed log-space accumulator: `Σ sign_i exp(log_i)`.
struct SignedLogSum {
    terms: Vec<(f64, bool)>,
}

impl SignedLogSum {
    fn with_capacity(n: usize) -> Self {
        Self {
            terms: Vec::with_capacity(n),
        }
    }

    fn clear(&mut self) {
        self.terms.clear();
    }

    fn push(&mut self, log_abs: f64, negative: bool) {
        self.terms.push((log_abs, negative));
    }

    fn max_log(&self) -> f64 {
        self.terms.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Terms are added in push order (ascending summation index).
    fn value(&self) -> f64 {
        let max = self.max_log();
        if max == f64::NEG_INFINITY {
            return 0.0;
        }
        let s: f64 = self
            .terms
            .iter()
            .map(|&(l, neg)| {
                let x = (l - max).exp();
                if neg {
                    -x
                } else {
                    x
                }
            })
            .sum();
        s * max.exp()
    }
}

struct LogFactorials(Vec<f64>);

impl LogFactorials {
    fn new(n: usize) -> Self {
        Self((0..=n as u64).map(ln_factorial).collect())
    }

    fn get(&self, k: usize) -> f64 {
        self.0[k]
    }
}

/// `x * ln(y)` with the convention `0 * ln 0 = 0`.
fn xlny(x: f64, ln_y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * ln_y
    }
}

/// Finite-series matrix elements.
///
/// For `m, n` even
/// ```text
/// G = (-1)^{m/2} sqrt(m! n!) / sqrt(cosh r)
///     Σ_{i=0}^{min(m,n)/2} (-4)^i sinh^{(m+n)/2-2i} r (2 cosh r)^{-(m+n)/2}
///                          / [(2i)! (m/2-i)! (n/2-i)!]
/// ```
/// and for `m, n` odd
/// ```text
/// G = (-1)^{(m-1)/2} 2 sqrt(m! n!) / sqrt(cosh r)
///     Σ_{i=0}^{min(m-1,n-1)/2} (-4)^i sinh^{(m+n)/2-2i-1} r (2 cosh r)^{-(m+n)/2}
///                              / [(2i+1)! ((m-1)/2-i)! ((n-1)/2-i)!]
/// ```
pub fn closed_form(r: f64, n_max: usize) -> Result<SqueezeMatrix> {
    check_r(r)?;
    check_n_max(n_max)?;
    if r == 0.0 {
        return Ok(identity(n_max, SqueezeMethod::ClosedForm));
    }
    let (g, max_log) = closed_form_raw(r, n_max);
    Ok(SqueezeMatrix::new(g, r, SqueezeMethod::ClosedForm, max_log))
}

fn closed_form_raw(r: f64, n_max: usize) -> (DMatrix<f64>, f64) {
    let dim = n_max + 1;
    let lf = LogFactorials::new(dim);
    let ln_sinh = r.sinh().ln();
    let ln_cosh = r.cosh().ln();
    let ln_2cosh = std::f64::consts::LN_2 + ln_cosh;
    let ln4 = 4f64.ln();
    let mut g = DMatrix::zeros(dim, dim);
    let mut acc = SignedLogSum::with_capacity(dim / 2 + 1);
    let mut worst = f64::NEG_INFINITY;
    for n in 0..dim {
        for m in (n % 2..dim).step_by(2) {
            let odd = m % 2;
            let half_sum = (m + n) / 2;
            let prefactor = 0.5 * (lf.get(m) + lf.get(n)) - 0.5 * ln_cosh
                + if odd == 1 { std::f64::consts::LN_2 } else { 0.0 }
                - (half_sum as f64) * ln_2cosh;
            let (hm, hn) = ((m - odd) / 2, (n - odd) / 2);
            acc.clear();
            for i in 0..=hm.min(hn) {
                let sinh_power = (half_sum - 2 * i - odd) as f64;
                let log_term = prefactor + i as f64 * ln4 + xlny(sinh_power, ln_sinh)
                    - lf.get(2 * i + odd)
                    - lf.get(hm - i)
                    - lf.get(hn - i);
                // (-1)^{hm} (-1)^i
                acc.push(log_term, (hm + i) % 2 == 1);
            }
            worst = worst.max(acc.max_log());
            g[(m, n)] = acc.value();
        }
    }
    (g, worst)
}

/// Largest `ln |term|` of the series for the element `(n, n)`, which bounds
/// the cancellation anywhere in a `(n+1)²` block.
fn corner_max_log_term(r: f64, n: usize) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let lf = LogFactorials::new(n);
    let t = r.tanh();
    let ln_c = r.cosh().ln();
    // G[m,n] = Σ_k sqrt(m! n!)/k! (-t/2)^j (t/2)^l / (j! l!) cosh^{-(k+1/2)}
    (n % 2..=n)
        .step_by(2)
        .map(|k| {
            let j = (n - k) / 2;
            lf.get(n) - lf.get(k) - 2.0 * lf.get(j) + (2 * j) as f64 * (t / 2.0).ln() - (k as f64 + 0.5) * ln_c
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Ceiling on `max_log_term` accepted from the series before squaring.
const MAX_LOG_TERM: f64 = 3.0;
/// Padded columns `0..=n_max` must keep their norm to this accuracy for the
/// squaring to be trusted. Rounding alone costs a few 1e-13 at large sizes.
const PAD_DEFECT_TOL: f64 = 1e-11;

/// Production squeeze matrix: well-conditioned series at `r / 2^s` on a
/// padded basis, squared `s` times and cut back to `n_max`.
///
/// Columns `n <= n_max / 2` match the infinite-dimensional amplitudes.
/// Higher columns may come out slightly short where the padding clipped
/// paths; that only overstates the mass they lose.
pub fn squeeze_matrix(r: f64, n_max: usize) -> Result<SqueezeMatrix> {
    squeeze_matrix_exact_to(r, n_max, n_max / 2)
}

/// As [`squeeze_matrix`], with columns `0..=exact_to` guaranteed.
pub fn squeeze_matrix_exact_to(r: f64, n_max: usize, exact_to: usize) -> Result<SqueezeMatrix> {
    check_r(r)?;
    check_n_max(n_max)?;
    let exact_to = exact_to.min(n_max);
    if r == 0.0 {
        return Ok(identity(
            n_max,
            SqueezeMethod::ClosedFormSquared {
                halvings: 0,
                padded_dim: n_max + 1,
            },
        ));
    }
    let mut pad = (n_max / 4).max(32);
    loop {
        let padded = n_max + pad;
        let mut halvings = 0u32;
        while corner_max_log_term(r / 2f64.powi(halvings as i32), padded) > MAX_LOG_TERM {
            halvings += 1;
        }
        let (mut g, worst) = closed_form_raw(r / 2f64.powi(halvings as i32), padded);
        for _ in 0..halvings {
            g = &g * &g;
        }
        let leaked = (0..=exact_to)
            .map(|n| (1.0 - g.column(n).iter().map(|x| x * x).sum::<f64>()).abs())
            .fold(0.0, f64::max);
        if leaked <= PAD_DEFECT_TOL || pad >= 8 * exact_to.max(64) {
            if leaked > PAD_DEFECT_TOL {
                log::warn!("squeeze r = {r}: padded columns still lose {leaked:e} at pad {pad}");
            }
            let block = g.view((0, 0), (n_max + 1, n_max + 1)).into_owned();
            return Ok(SqueezeMatrix::new(
                block,
                r,
                SqueezeMethod::ClosedFormSquared {
                    halvings,
                    padded_dim: padded + 1,
                },
                worst,
            ));
        }
        pad += pad / 2;
    }
}

fn identity(n_max: usize, method: SqueezeMethod) -> SqueezeMatrix {
    SqueezeMatrix::new(DMatrix::identity(n_max + 1, n_max + 1), 0.0, method, 0.0)
}

/// `exp[(r/2)(a² - a†²)]` on the basis `0..=n_max`, by Taylor series with
/// scaling and squaring.
pub fn exponential_oracle(r: f64, n_max: usize) -> Result<SqueezeMatrix> {
    check_r(r)?;
    check_n_max(n_max)?;
    let dim = n_max + 1;
    // <n-2| a² |n> = sqrt(n(n-1)); the generator is real antisymmetric.
    let mut gen = DMatrix::<f64>::zeros(dim, dim);
    for n in 2..dim {
        let x = 0.5 * r * ((n * (n - 1)) as f64).sqrt();
        gen[(n - 2, n)] = x;
        gen[(n, n - 2)] = -x;
    }
    let norm1 = gen
        .column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0;
    while norm1 / 2f64.powi(squarings) > 0.25 {
        squarings += 1;
    }
    let scaled = gen / 2f64.powi(squarings);
    let mut result = DMatrix::<f64>::identity(dim, dim);
    let mut term = DMatrix::<f64>::identity(dim, dim);
    for k in 1..=30 {
        term = &term * &scaled / k as f64;
        result += &term;
        if term.amax() < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    Ok(SqueezeMatrix::new(result, r, SqueezeMethod::ExponentialOracle, 0.0))
}

/// Literal reading of the textbook series with `1/cosh r` in front, the sum
/// starting at `i = 1`, `2·i!` in the even denominator and
/// `(2 cosh r)^{-(m+n)/2-1}` in the odd branch. Not unitary (for instance
/// `G[0,0] = 0`); kept only to document how it differs from [`closed_form`].
pub fn literal_series(r: f64, n_max: usize) -> Result<SqueezeMatrix> {
    check_r(r)?;
    check_n_max(n_max)?;
    let dim = n_max + 1;
    let lf = LogFactorials::new(dim);
    let (s, c) = (r.sinh(), r.cosh());
    let mut g = DMatrix::zeros(dim, dim);
    for n in 0..dim {
        for m in (n % 2..dim).step_by(2) {
            let odd = m % 2;
            let (hm, hn) = ((m - odd) / 2, (n - odd) / 2);
            let half_sum = ((m + n) / 2) as i32;
            let mut sum = 0.0;
            for i in 1..=hm.min(hn) {
                let ii = i as i32;
                let numer =
                    (-4f64).powi(ii) * s.powi(half_sum - 2 * ii - odd as i32) * (2.0 * c).powi(-half_sum - odd as i32);
                let denom = if odd == 0 {
                    (2.0 * lf.get(i).exp()) * lf.get(hm - i).exp() * lf.get(hn - i).exp()
                } else {
                    (lf.get(2 * i + 1) + lf.get(hm - i) + lf.get(hn - i)).exp()
                };
                sum += numer / denom;
            }
            let sign = if hm % 2 == 0 { 1.0 } else { -1.0 };
            g[(m, n)] = sign * (0.5 * (lf.get(m) + lf.get(n))).exp() / c * sum;
        }
    }
    Ok(SqueezeMatrix::new(g, r, SqueezeMethod::ClosedForm, f64::NAN))
}

/// Concurrent cache of squeeze matrices keyed by `(r, n_max)`.
///
/// Entries are exact in columns `n <= n_max / exact_divisor`. Columns above
/// that only feed probability that is already tiny; any error there shows up
/// as lost norm, which callers bound separately.
#[derive(Debug)]
pub struct SqueezeCache {
    exact_divisor: usize,
    map: RwLock<HashMap<(u64, usize), Arc<SqueezeMatrix>>>,
}

impl Default for SqueezeCache {
    fn default() -> Self {
        Self::with_exact_divisor(8)
    }
}

impl SqueezeCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_exact_divisor(exact_divisor: usize) -> Self {
        Self {
            exact_divisor: exact_divisor.max(1),
            map: RwLock::default(),
        }
    }

    pub fn get(&self, r: f64, n_max: usize) -> Result<Arc<SqueezeMatrix>> {
        let key = (r.to_bits(), n_max);
        if let Some(hit) = self.map.read().expect("cache lock").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let fresh = Arc::new(squeeze_matrix_exact_to(r, n_max, n_max / self.exact_divisor)?);
        let mut map = self.map.write().expect("cache lock");
        Ok(Arc::clone(map.entry(key).or_insert(fresh)))
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn max_diff(a: &DMatrix<f64>, b: &DMatrix<f64>, upto: usize) -> f64 {
        let mut d = 0.0f64;
        for n in 0..=upto {
            for m in 0..=upto {
                d = d.max((a[(m, n)] - b[(m, n)]).abs());
            }
        }
        d
    }

    #[test]
    fn zero_squeeze_is_identity() {
        for g in [
            closed_form(0.0, 12).unwrap(),
            squeeze_matrix(0.0, 12).unwrap(),
            exponential_oracle(0.0, 12).unwrap(),
        ] {
            assert_eq!(g.matrix(), &DMatrix::identity(13, 13));
        }
    }

    #[test]
    fn vacuum_overlap() {
        // 1/sqrt(cosh 0.5) at 40 digits
        let expected = 0.941_710_615_831_675_7;
        assert_abs_diff_eq!(
            closed_form(0.5, 10).unwrap().matrix()[(0, 0)],
            expected,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            exponential_oracle(0.5, 200).unwrap().matrix()[(0, 0)],
            expected,
            epsilon = 1e-13
        );
        assert_abs_diff_eq!(
            squeeze_matrix(0.5, 60).unwrap().matrix()[(0, 0)],
            expected,
            epsilon = 1e-14
        );
    }

    #[test]
    fn parity_zeros_are_exact() {
        for r in [0.0, 0.02, 0.3, 1.0] {
            for g in [closed_form(r, 30).unwrap(), squeeze_matrix(r, 30).unwrap()] {
                for n in 0..=30 {
                    for m in 0..=30 {
                        if (m + n) % 2 == 1 {
                            assert_eq!(g.matrix()[(m, n)], 0.0);
                        }
                    }
                }
            }
            assert_eq!(closed_form(r, 5).unwrap().matrix()[(0, 1)], 0.0);
        }
    }

    #[test]
    fn closed_form_matches_oracle() {
        for r in [0.02, 0.2, 1.0] {
            let oracle = exponential_oracle(r, 200).unwrap();
            let closed = closed_form(r, 20).unwrap();
            assert!(max_diff(closed.matrix(), oracle.matrix(), 20) < 1e-8, "r = {r}");
        }
    }

    #[test]
    fn production_matches_oracle_at_large_index() {
        for (r, n_max) in [(0.05, 200), (0.2, 150), (0.5, 80)] {
            let oracle = exponential_oracle(r, 2 * n_max + 100).unwrap();
            let prod = squeeze_matrix(r, n_max).unwrap();
            let mut d = 0.0f64;
            for n in 0..=n_max / 2 {
                for m in 0..=n_max {
                    d = d.max((prod.matrix()[(m, n)] - oracle.matrix()[(m, n)]).abs());
                }
            }
            assert!(d < 1e-10, "r = {r}: {d:e}");
        }
    }

    #[test]
    fn truncation_defects_match_oracle() {
        let (r, n_max) = (0.5, 100);
        let prod = squeeze_matrix_exact_to(r, n_max, n_max).unwrap();
        let oracle = exponential_oracle(r, 500).unwrap();
        for n in 0..=n_max {
            let kept: f64 = (0..=n_max).map(|m| oracle.matrix()[(m, n)].powi(2)).sum();
            assert!((prod.column_defects()[n] - (1.0 - kept)).abs() < 1e-9, "column {n}");
        }
        // the loss sits in the top columns
        assert!(prod.column_defects()[..=15].iter().all(|&d| d < 1e-12));
        assert!(prod.column_defects()[n_max] > 1e-2);
    }

    #[test]
    fn unsquared_series_cancels_catastrophically() {
        let closed = closed_form(0.5, 150).unwrap();
        assert!(closed.max_log_term() > 30.0);
        let prod = squeeze_matrix(0.5, 150).unwrap();
        assert!(prod.max_log_term() <= MAX_LOG_TERM);
    }

    #[test]
    fn oracle_unitarity_converges() {
        for r in [0.2, 1.0] {
            let small = exponential_oracle(r, 100).unwrap();
            let large = exponential_oracle(r, 200).unwrap();
            assert!(small.column_defects()[..=50].iter().all(|&d| d < 1e-10));
            assert!(large.column_defects()[..=100].iter().all(|&d| d < 1e-10));
            // low corner agrees between the two truncations
            assert!(max_diff(small.matrix(), large.matrix(), 10) < 1e-12);
            assert!(max_diff(small.matrix(), large.matrix(), 20) < 1e-8);
        }
    }

    #[test]
    fn squeezes_compose_additively() {
        let (a, b) = (0.13, 0.29);
        let ga = squeeze_matrix(a, 80).unwrap();
        let gb = squeeze_matrix(b, 80).unwrap();
        let gab = squeeze_matrix(a + b, 80).unwrap();
        let product = gb.matrix() * ga.matrix();
        assert!(max_diff(&product, gab.matrix(), 40) < 1e-8);
    }

    #[test]
    fn literal_series_is_not_unitary() {
        let lit = literal_series(0.3, 20).unwrap();
        assert_eq!(lit.matrix()[(0, 0)], 0.0);
        let oracle = exponential_oracle(0.3, 200).unwrap();
        assert!(max_diff(lit.matrix(), oracle.matrix(), 20) > 0.5);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(closed_form(-0.1, 10).is_err());
        assert!(squeeze_matrix(0.1, 0).is_err());
        assert!(exponential_oracle(f64::NAN, 10).is_err());
        assert!(SqueezeParams::new(-1.0).is_err());
        let p = SqueezeParams::new(0.7).unwrap();
        assert_abs_diff_eq!(p.mu().powi(2) - p.nu().powi(2), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn trusted_band_and_cache() {
        let g = squeeze_matrix(0.3, 40).unwrap();
        let band = g.trusted_band(1e-10).unwrap();
        assert!((5..20).contains(&band), "band = {band}");
        let cache = SqueezeCache::with_exact_divisor(2);
        let a = cache.get(0.3, 40).unwrap();
        let b = cache.get(0.3, 40).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(cache.len(), 1);
        assert_eq!(a.matrix(), g.matrix());
    }
}
