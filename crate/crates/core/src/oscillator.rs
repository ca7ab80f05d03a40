//! Thermal harmonic oscillator squeezed twice, `r1` then `r2`, with energy
//! measurements before, between and after. All three spectra are the same
//! truncated ladder.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hilbert::{build_thermal_state, EnergySpectrum};
use crate::leggett_garg::ProtocolStatistics;
use crate::optimize::golden_section;
use crate::par;
use crate::protocol::{JointDistribution, JointDistribution3, WorkView};
use crate::squeeze::{SqueezeCache, SqueezeMatrix};

/// Largest Gibbs mass allowed above `n_max`.
pub const THERMAL_TAIL_BUDGET: f64 = 1e-12;
/// Largest probability allowed to leak out of the truncated basis.
pub const LEAK_BUDGET: f64 = 1e-10;
/// Truncations are rounded up to multiples of this.
const N_STEP: usize = 16;
const N_CEILING: usize = 4096;

/// Gibbs mass of the levels above `n_max`: `exp(-β (n_max + 1))`.
pub fn thermal_tail_mass(beta: f64, n_max: usize) -> f64 {
    (-beta * (n_max as f64 + 1.0)).exp()
}

/// Smallest multiple of 16 whose thermal tail is within budget.
pub fn thermal_n_max(beta: f64) -> Result<usize> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::param("beta", format!("need finite beta > 0, got {beta}")));
    }
    let n = (-THERMAL_TAIL_BUDGET.ln() / beta - 1.0).ceil().max(1.0);
    if n > N_CEILING as f64 {
        return Err(Error::param(
            "beta",
            format!("beta = {beta} needs more than {N_CEILING} levels"),
        ));
    }
    Ok(round_up(n as usize))
}

fn round_up(n: usize) -> usize {
    n.div_ceil(N_STEP).max(1) * N_STEP
}

/// Quantize `r` so sums like `0.01 + 0.03` and `0.04` share a cache entry.
fn canonical_r(r: f64) -> f64 {
    (r * 1e12).round() / 1e12
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationReport {
    pub n_max: usize,
    pub thermal_tail: f64,
    /// `|1 - Σ p[k2, k1, k0]|`.
    pub leaked_measured: f64,
    /// `|1 - Σ p[k2, k0]|` without the middle measurement.
    pub leaked_unmeasured: f64,
    pub budget: f64,
}

impl TruncationReport {
    pub fn leaked(&self) -> f64 {
        self.leaked_measured.max(self.leaked_unmeasured)
    }

    pub fn within_budget(&self) -> bool {
        self.thermal_tail < THERMAL_TAIL_BUDGET && self.leaked() <= self.budget
    }
}

#[derive(Debug, Clone)]
pub struct OscillatorRun {
    pub beta: f64,
    pub r1: f64,
    pub r2: f64,
    pub stats: ProtocolStatistics,
    pub report: TruncationReport,
}

impl OscillatorRun {
    pub fn k_en(&self, view: WorkView) -> Result<f64> {
        Ok(self.stats.entropic(view)?.full)
    }
}

fn oscillator_spectra(n_max: usize) -> Result<[EnergySpectrum; 3]> {
    let s = EnergySpectrum::oscillator(n_max, 0)?;
    Ok([s.clone(), s.clone().relabel(1), s.relabel(2)])
}

/// `p[k2, k1, k0] = G²[k2, k1](r2) G²[k1, k0](r1) ρ[k0]`, and the unmeasured
/// joint through `G(r1 + r2)`.
pub fn oscillator_three_time(beta: f64, r1: f64, r2: f64, n_max: usize) -> Result<OscillatorRun> {
    oscillator_three_time_cached(beta, r1, r2, n_max, &SqueezeCache::new())
}

pub fn oscillator_three_time_cached(
    beta: f64,
    r1: f64,
    r2: f64,
    n_max: usize,
    cache: &SqueezeCache,
) -> Result<OscillatorRun> {
    let thermal_tail = thermal_tail_mass(beta, n_max);
    if !(thermal_tail < THERMAL_TAIL_BUDGET) {
        return Err(Error::Truncation {
            beta,
            r: r1.max(r2),
            leaked: thermal_tail,
            budget: THERMAL_TAIL_BUDGET,
        });
    }
    let g1 = cache.get(canonical_r(r1), n_max)?;
    let g2 = cache.get(canonical_r(r2), n_max)?;
    let g12 = cache.get(canonical_r(r1 + r2), n_max)?;
    assemble(beta, r1, r2, &g1, &g2, &g12, thermal_tail)
}

fn assemble(
    beta: f64,
    r1: f64,
    r2: f64,
    g1: &SqueezeMatrix,
    g2: &SqueezeMatrix,
    g12: &SqueezeMatrix,
    thermal_tail: f64,
) -> Result<OscillatorRun> {
    let n_max = g1.n_max();
    let spectra = oscillator_spectra(n_max)?;
    let rho = build_thermal_state(&spectra[0], beta)?;
    let measured = JointDistribution3::from_transitions(
        rho.populations(),
        g1.transition_probabilities(),
        g2.transition_probabilities(),
        &spectra,
    )?;
    let unmeasured = JointDistribution::from_transitions(
        rho.populations(),
        &g12.transition_probabilities(),
        &spectra[0],
        &spectra[2],
    )?;
    let report = TruncationReport {
        n_max,
        thermal_tail,
        leaked_measured: (1.0 - measured.total()).abs(),
        leaked_unmeasured: (1.0 - unmeasured.total()).abs(),
        budget: LEAK_BUDGET,
    };
    if report.leaked() > report.budget {
        return Err(Error::Truncation {
            beta,
            r: r1.max(r2),
            leaked: report.leaked(),
            budget: report.budget,
        });
    }
    Ok(OscillatorRun {
        beta,
        r1,
        r2,
        stats: ProtocolStatistics::new(measured, unmeasured)?,
        report,
    })
}

/// Run at the smallest truncation (from `start`, else the thermal minimum,
/// growing by 25%) that meets both budgets.
pub fn oscillator_three_time_auto(
    beta: f64,
    r1: f64,
    r2: f64,
    start: Option<usize>,
    cache: &SqueezeCache,
) -> Result<OscillatorRun> {
    let mut n = start
        .map(round_up)
        .unwrap_or(thermal_n_max(beta)?)
        .max(thermal_n_max(beta)?);
    loop {
        match oscillator_three_time_cached(beta, r1, r2, n, cache) {
            Err(Error::Truncation { leaked, budget, .. }) => {
                let next = round_up(n + n / 4);
                if next > N_CEILING {
                    return Err(Error::Truncation {
                        beta,
                        r: r1.max(r2),
                        leaked,
                        budget,
                    });
                }
                log::debug!("beta = {beta}, r = ({r1}, {r2}): n_max {n} leaks {leaked:e}, trying {next}");
                n = next;
            }
            other => return other,
        }
    }
}

/// `K_en` on a rectangular `(r1, r2)` grid. Rows follow `r1`, columns `r2`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridTable {
    pub beta: f64,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    pub k: DMatrix<f64>,
    pub view: WorkView,
    pub n_max: usize,
    /// Largest leaked mass over all cells.
    pub max_leak: f64,
}

impl GridTable {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.k[(i, j)]
    }

    /// Points where `K = level`, interpolated linearly along every grid edge
    /// that changes sign. Edges along `r2` come first, then along `r1`.
    pub fn contour_points(&self, level: f64) -> Vec<(f64, f64)> {
        let (n1, n2) = self.k.shape();
        let mut pts = Vec::new();
        let crossing = |a: f64, b: f64| (a < level) != (b < level);
        let frac = |a: f64, b: f64| (level - a) / (b - a);
        for i in 0..n1 {
            for j in 0..n2.saturating_sub(1) {
                let (a, b) = (self.k[(i, j)], self.k[(i, j + 1)]);
                if crossing(a, b) {
                    let t = frac(a, b);
                    pts.push((self.r1[i], self.r2[j] + t * (self.r2[j + 1] - self.r2[j])));
                }
            }
        }
        for j in 0..n2 {
            for i in 0..n1.saturating_sub(1) {
                let (a, b) = (self.k[(i, j)], self.k[(i + 1, j)]);
                if crossing(a, b) {
                    let t = frac(a, b);
                    pts.push((self.r1[i] + t * (self.r1[i + 1] - self.r1[i]), self.r2[j]));
                }
            }
        }
        pts
    }

    /// `(r, K(r, r))` for every `r` present in both grids.
    pub fn diagonal(&self) -> Vec<(f64, f64)> {
        self.r1
            .iter()
            .enumerate()
            .filter_map(|(i, &r)| {
                let j = self.r2.iter().position(|&s| (s - r).abs() <= 1e-12)?;
                Some((r, self.k[(i, j)]))
            })
            .collect()
    }

    /// True when the diagonal goes negative and later comes back above zero.
    pub fn diagonal_sign_change_bracketed(&self) -> bool {
        let d = self.diagonal();
        match d.iter().position(|&(_, k)| k < 0.0) {
            Some(first_negative) => d[first_negative..].iter().any(|&(_, k)| k > 0.0),
            None => false,
        }
    }
}

fn check_grid(name: &'static str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::param(name, "grid is empty"));
    }
    if let Some(bad) = grid.iter().find(|r| !r.is_finite() || **r < 0.0) {
        return Err(Error::param(
            name,
            format!("squeeze values must be finite and >= 0, got {bad}"),
        ));
    }
    Ok(())
}

/// Grid sweep. With `n_max = None` the truncation is chosen at the corner
/// `(max r1, max r2)` and reused for every cell.
pub fn squeeze_grid_sweep(
    beta: f64,
    r1_grid: &[f64],
    r2_grid: &[f64],
    n_max: Option<usize>,
    view: WorkView,
) -> Result<GridTable> {
    check_grid("r1_grid", r1_grid)?;
    check_grid("r2_grid", r2_grid)?;
    let cache = SqueezeCache::new();
    let max = |g: &[f64]| g.iter().copied().fold(0.0, f64::max);
    let n_max = match n_max {
        Some(n) => n,
        None => {
            oscillator_three_time_auto(beta, max(r1_grid), max(r2_grid), None, &cache)?
                .report
                .n_max
        }
    };

    let mut needed: Vec<f64> = r1_grid
        .iter()
        .chain(r2_grid)
        .copied()
        .chain(r1_grid.iter().flat_map(|a| r2_grid.iter().map(move |b| a + b)))
        .map(canonical_r)
        .collect();
    needed.sort_by(f64::total_cmp);
    needed.dedup();
    let built: Vec<Arc<SqueezeMatrix>> = par::try_map(&needed, |&r| cache.get(r, n_max))?;
    log::info!("grid sweep: {} squeeze matrices at n_max = {n_max}", built.len());

    let (n1, n2) = (r1_grid.len(), r2_grid.len());
    let cells = par::map_range(n1 * n2, |idx| {
        let (i, j) = (idx / n2, idx % n2);
        let run = oscillator_three_time_cached(beta, r1_grid[i], r2_grid[j], n_max, &cache)?;
        Ok::<_, Error>((run.k_en(view)?, run.report.leaked()))
    });
    let cells: Vec<(f64, f64)> = cells.into_iter().collect::<Result<_>>()?;
    Ok(GridTable {
        beta,
        r1: r1_grid.to_vec(),
        r2: r2_grid.to_vec(),
        k: DMatrix::from_fn(n1, n2, |i, j| cells[i * n2 + j].0),
        view,
        n_max,
        max_leak: cells.iter().map(|c| c.1).fold(0.0, f64::max),
    })
}

/// How the diagonal `r1 = r2 = r` is scanned before refinement.
#[derive(Debug, Clone, PartialEq)]
pub enum RScan {
    /// `start · ratio^k` up to `cap`, stopping two steps past the running
    /// minimum once the values are rising again.
    Geometric { start: f64, ratio: f64, cap: f64 },
    /// Every point of an explicit ascending grid.
    Grid(Vec<f64>),
}

impl Default for RScan {
    fn default() -> Self {
        RScan::Geometric {
            start: 0.002,
            ratio: 1.25,
            cap: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaRow {
    pub beta: f64,
    pub min_k: f64,
    pub argmin_r: f64,
    pub n_max: usize,
    pub evaluations: usize,
    pub max_leak: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaSweep {
    pub rows: Vec<BetaRow>,
    pub view: WorkView,
}

impl BetaSweep {
    /// `|min K|` at the largest β is smaller than at the smallest β.
    pub fn depth_shrinks_with_beta(&self) -> Option<bool> {
        let lo = self.rows.iter().min_by(|a, b| a.beta.total_cmp(&b.beta))?;
        let hi = self.rows.iter().max_by(|a, b| a.beta.total_cmp(&b.beta))?;
        Some(hi.min_k.abs() < lo.min_k.abs())
    }

    /// β of the largest argmin when it lies strictly inside the β range.
    pub fn argmin_interior_maximum(&self) -> Option<f64> {
        let mut rows = self.rows.clone();
        rows.sort_by(|a, b| a.beta.total_cmp(&b.beta));
        let (i, _) = rows
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.argmin_r.total_cmp(&b.1.argmin_r))?;
        let last = rows.len() - 1;
        (i > 0 && i < last && rows[i].argmin_r > rows[0].argmin_r && rows[i].argmin_r > rows[last].argmin_r)
            .then_some(rows[i].beta)
    }
}

/// Minimum of `K_en(r, r)` over `r` for each β: a coarse scan followed by
/// golden-section refinement to `tol` in `r`.
pub fn beta_sweep_min_k(
    betas: &[f64],
    scan: &RScan,
    n_max: Option<usize>,
    view: WorkView,
    tol: f64,
) -> Result<BetaSweep> {
    if betas.is_empty() {
        return Err(Error::param("beta_grid", "grid is empty"));
    }
    match scan {
        RScan::Geometric { start, ratio, cap } => {
            if !(*start > 0.0 && *ratio > 1.0 && cap > start) {
                return Err(Error::param("scan", "need start > 0, ratio > 1, cap > start"));
            }
        }
        RScan::Grid(g) => {
            check_grid("r_grid", g)?;
            if g.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::param("r_grid", "must be strictly ascending"));
            }
        }
    }
    let rows = par::try_map(betas, |&beta| min_k_for_beta(beta, scan, n_max, view, tol))?;
    Ok(BetaSweep { rows, view })
}

fn min_k_for_beta(beta: f64, scan: &RScan, n_max: Option<usize>, view: WorkView, tol: f64) -> Result<BetaRow> {
    let cache = SqueezeCache::new();
    let mut current_n = n_max;
    let mut evaluations = 0;
    let mut max_leak = 0.0f64;
    let mut eval = |r: f64| -> Result<(f64, usize)> {
        let run = match n_max {
            Some(n) => oscillator_three_time_cached(beta, r, r, n, &cache)?,
            None => oscillator_three_time_auto(beta, r, r, current_n, &cache)?,
        };
        if n_max.is_none() {
            current_n = Some(run.report.n_max);
        }
        evaluations += 1;
        max_leak = max_leak.max(run.report.leaked());
        Ok((run.k_en(view)?, run.report.n_max))
    };

    let mut rs = Vec::new();
    let mut ks = Vec::new();
    match scan {
        RScan::Grid(g) => {
            for &r in g {
                rs.push(r);
                ks.push(eval(r)?.0);
            }
        }
        RScan::Geometric { start, ratio, cap } => {
            let mut r = *start;
            let mut best = 0;
            while r <= *cap {
                rs.push(r);
                ks.push(eval(r)?.0);
                let last = ks.len() - 1;
                if ks[last] < ks[best] {
                    best = last;
                }
                if last >= best + 2 && ks[last] > ks[last - 1] {
                    break;
                }
                r *= ratio;
            }
        }
    }
    let best = (0..ks.len())
        .min_by(|&a, &b| ks[a].total_cmp(&ks[b]))
        .expect("non-empty scan");
    let lo = if best > 0 {
        rs[best - 1]
    } else {
        match scan {
            RScan::Geometric { ratio, .. } => rs[0] / ratio,
            RScan::Grid(_) => rs[0],
        }
    };
    let hi = if best + 1 < rs.len() { rs[best + 1] } else { rs[best] };
    let (mut argmin_r, mut min_k) = (rs[best], ks[best]);
    if hi > lo && hi - lo > tol {
        let refined = golden_section(|r| Ok(eval(r)?.0), lo, hi, tol)?;
        if refined.value < min_k {
            argmin_r = refined.x;
            min_k = refined.value;
        }
    }
    // truncation used at the reported point
    let best_n = eval(argmin_r)?.1;
    Ok(BetaRow {
        beta,
        min_k,
        argmin_r,
        n_max: best_n,
        evaluations,
        max_leak,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{compose_propagators, UnitaryPropagator};
    use crate::leggett_garg::Provenance;
    use crate::protocol::{jarzynski_deviation, total_work_distribution, work_distribution};
    use crate::squeeze::squeeze_matrix;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    #[test]
    fn thermal_truncation() {
        assert_eq!(thermal_n_max(1.0).unwrap(), 32);
        let n = thermal_n_max(0.1).unwrap();
        assert_eq!(n % 16, 0);
        assert!(thermal_tail_mass(0.1, n) < THERMAL_TAIL_BUDGET);
        assert!(thermal_tail_mass(0.1, n - 16) >= THERMAL_TAIL_BUDGET);
        assert!(thermal_n_max(0.0).is_err());
    }

    #[test]
    fn no_squeezing_gives_diagonal_thermal_joint() {
        let run = oscillator_three_time(1.0, 0.0, 0.0, 40).unwrap();
        let j = run.stats.measured.marginal_10();
        let rho = build_thermal_state(&EnergySpectrum::oscillator(40, 0).unwrap(), 1.0).unwrap();
        for k0 in 0..=40 {
            for k1 in 0..=40 {
                let expected = if k0 == k1 { rho.populations()[k0] } else { 0.0 };
                assert_abs_diff_eq!(j.get(k1, k0), expected, epsilon = 1e-15);
            }
        }
        assert_abs_diff_eq!(run.k_en(WorkView::FineGrained).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn truncation_errors_name_the_point() {
        match oscillator_three_time(0.1, 0.02, 0.02, 50) {
            Err(Error::Truncation { beta, r, .. }) => {
                assert_eq!(beta, 0.1);
                assert_eq!(r, 0.02);
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
        // thermal tail is fine at n = 40, but a strong squeeze leaks
        assert!(matches!(
            oscillator_three_time(1.0, 0.8, 0.8, 40),
            Err(Error::Truncation { .. })
        ));
        let run = oscillator_three_time_auto(1.0, 0.3, 0.3, None, &SqueezeCache::new()).unwrap();
        assert!(run.report.n_max > thermal_n_max(1.0).unwrap() && run.report.within_budget());
    }

    #[test]
    fn no_middle_branch_is_the_composed_squeeze() {
        let (r1, r2, n) = (0.2, 0.35, 120);
        let complex = |g: &SqueezeMatrix| {
            UnitaryPropagator::with_tolerance(g.matrix().map(|x| Complex64::new(x, 0.0)), 1.0).unwrap()
        };
        let (g1, g2) = (squeeze_matrix(r1, n).unwrap(), squeeze_matrix(r2, n).unwrap());
        let composed = compose_propagators(&complex(&g1), &complex(&g2)).unwrap();
        let direct = squeeze_matrix(r1 + r2, n).unwrap();
        // products are exact where column k of G(r1) has nothing past n
        let band = g1.trusted_band(1e-13).unwrap();
        assert!(band >= 20, "band = {band}");
        for m in 0..=band {
            for k in 0..=band {
                assert!((composed.matrix()[(m, k)].re - direct.matrix()[(m, k)]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn total_work_obeys_jarzynski() {
        for beta in [0.5, 1.0] {
            let cache = SqueezeCache::new();
            let run = oscillator_three_time_auto(beta, 0.3, 0.3, None, &cache).unwrap();
            let wd = total_work_distribution(&run.stats.measured);
            let dev = jarzynski_deviation(&wd, beta, 0.0);
            assert!(dev < run.report.budget, "beta = {beta}: {dev:e}");
            let doubled = oscillator_three_time_cached(beta, 0.3, 0.3, 2 * run.report.n_max, &cache).unwrap();
            let dev2 = jarzynski_deviation(&total_work_distribution(&doubled.stats.measured), beta, 0.0);
            assert!(dev2 < run.report.budget);
        }
    }

    #[test]
    fn second_interval_alone_violates_jarzynski() {
        let run = oscillator_three_time_auto(1.0, 0.5, 0.5, None, &SqueezeCache::new()).unwrap();
        let w2 = work_distribution(&run.stats.measured.marginal_21(), WorkView::FineGrained);
        assert!(jarzynski_deviation(&w2, 1.0, 0.0) > 1e-3);
    }

    #[test]
    fn middle_measurement_changes_total_work() {
        let run = oscillator_three_time(1.0, 0.1, 0.1, 60).unwrap();
        let tv = run
            .stats
            .measured
            .marginal_20()
            .total_variation(&run.stats.unmeasured_20)
            .unwrap();
        assert!(tv > 1e-6, "tv = {tv:e}");
    }

    #[test]
    fn doubling_truncation_moves_k_by_less_than_1e6() {
        let cache = SqueezeCache::new();
        for (beta, r1, r2) in [(1.0, 0.3, 0.3), (0.5, 0.1, 0.4)] {
            let run = oscillator_three_time_auto(beta, r1, r2, None, &cache).unwrap();
            let n = run.report.n_max;
            let doubled = oscillator_three_time_cached(beta, r1, r2, 2 * n, &cache).unwrap();
            for view in [WorkView::FineGrained, WorkView::Grouped] {
                let d = (run.k_en(view).unwrap() - doubled.k_en(view).unwrap()).abs();
                assert!(d < 1e-6, "beta = {beta}, {view:?}: {d:e}");
            }
            let mapping = crate::leggett_garg::DichotomicMapping::ground_excited(n + 1);
            assert!(run.stats.correlators(&mapping, Provenance::NoMiddleMeasurement).is_ok());
        }
    }

    #[test]
    fn contour_interpolation() {
        let r = vec![0.0, 1.0, 2.0];
        let table = GridTable {
            beta: 1.0,
            r1: r.clone(),
            r2: r,
            k: DMatrix::from_fn(3, 3, |i, j| (i + j) as f64 - 1.5),
            view: WorkView::FineGrained,
            n_max: 1,
            max_leak: 0.0,
        };
        let pts = table.contour_points(0.0);
        // the line r1 + r2 = 1.5 crosses four edges
        assert_eq!(pts.len(), 4);
        for (a, b) in pts {
            assert_abs_diff_eq!(a + b, 1.5, epsilon = 1e-15);
        }
        assert_eq!(table.diagonal(), vec![(0.0, -1.5), (1.0, 0.5), (2.0, 2.5)]);
        assert!(table.diagonal_sign_change_bracketed());
        assert!(table.contour_points(-10.0).is_empty());
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        assert!(squeeze_grid_sweep(1.0, &[], &[0.1], Some(32), WorkView::FineGrained).is_err());
        assert!(squeeze_grid_sweep(1.0, &[-0.1], &[0.1], Some(32), WorkView::FineGrained).is_err());
        assert!(beta_sweep_min_k(&[1.0], &RScan::Grid(vec![0.2, 0.1]), None, WorkView::FineGrained, 1e-3).is_err());
    }

    #[test]
    fn small_grid_at_moderate_beta() {
        let grid = [0.0, 0.1, 0.2];
        let t = squeeze_grid_sweep(2.0, &grid, &grid, None, WorkView::FineGrained).unwrap();
        assert_abs_diff_eq!(t.get(0, 0), 0.0, epsilon = 1e-12);
        assert!(t.max_leak <= LEAK_BUDGET);
        let direct = oscillator_three_time(2.0, 0.1, 0.2, t.n_max).unwrap();
        assert_abs_diff_eq!(
            t.get(1, 2),
            direct.k_en(WorkView::FineGrained).unwrap(),
            epsilon = 1e-14
        );
    }
}
