//! Joint outcome statistics of sequential projective energy measurements and
//! the work distributions built from them.
//!
//! After each measurement the state is the measured eigenvector, so the
//! probability of an outcome path factorizes into transition probabilities
//! `|U[k_j, k_i]|²` weighted by the initial populations.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hilbert::{compose_propagators, DiagonalDensity, EnergySpectrum, UnitaryPropagator};

/// Absolute tolerance below which two work values are treated as equal.
pub const WORK_DEGENERACY_TOL: f64 = 1e-9;

/// Joint probabilities `p[k_later, k_earlier]` of two energy measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    probs: DMatrix<f64>,
    earlier: EnergySpectrum,
    later: EnergySpectrum,
}

impl JointDistribution {
    pub fn new(probs: DMatrix<f64>, earlier: EnergySpectrum, later: EnergySpectrum) -> Result<Self> {
        if probs.nrows() != later.dim() {
            return Err(Error::DimensionMismatch {
                expected: later.dim(),
                found: probs.nrows(),
            });
        }
        if probs.ncols() != earlier.dim() {
            return Err(Error::DimensionMismatch {
                expected: earlier.dim(),
                found: probs.ncols(),
            });
        }
        if let Some(i) = probs.iter().position(|p| !(*p >= 0.0)) {
            return Err(Error::NegativeProbability {
                index: i,
                value: probs[i],
            });
        }
        Ok(Self { probs, earlier, later })
    }

    /// `p[k_later, k_earlier] = T[k_later, k_earlier] p_earlier[k_earlier]`.
    pub fn from_transitions(
        populations: &[f64],
        transitions: &DMatrix<f64>,
        earlier: &EnergySpectrum,
        later: &EnergySpectrum,
    ) -> Result<Self> {
        check_dims(populations.len(), transitions, earlier, later)?;
        let probs = DMatrix::from_fn(transitions.nrows(), transitions.ncols(), |j, i| {
            transitions[(j, i)] * populations[i]
        });
        Ok(Self {
            probs,
            earlier: earlier.clone(),
            later: later.clone(),
        })
    }

    pub fn probs(&self) -> &DMatrix<f64> {
        &self.probs
    }

    pub fn get(&self, later: usize, earlier: usize) -> f64 {
        self.probs[(later, earlier)]
    }

    pub fn earlier(&self) -> &EnergySpectrum {
        &self.earlier
    }

    pub fn later(&self) -> &EnergySpectrum {
        &self.later
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Column sums: distribution of the earlier outcome.
    pub fn earlier_marginal(&self) -> Vec<f64> {
        self.probs.column_iter().map(|c| c.iter().sum()).collect()
    }

    /// Row sums: distribution of the later outcome.
    pub fn later_marginal(&self) -> Vec<f64> {
        self.probs.row_iter().map(|r| r.iter().sum()).collect()
    }

    /// Total-variation distance `½ Σ |p - q|`.
    pub fn total_variation(&self, other: &JointDistribution) -> Result<f64> {
        if self.probs.shape() != other.probs.shape() {
            return Err(Error::DimensionMismatch {
                expected: self.probs.len(),
                found: other.probs.len(),
            });
        }
        Ok(0.5
            * self
                .probs
                .iter()
                .zip(other.probs.iter())
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }
}

fn check_dims(
    n_pop: usize,
    transitions: &DMatrix<f64>,
    earlier: &EnergySpectrum,
    later: &EnergySpectrum,
) -> Result<()> {
    let pairs = [
        (n_pop, transitions.ncols()),
        (earlier.dim(), transitions.ncols()),
        (later.dim(), transitions.nrows()),
    ];
    for (expected, found) in pairs {
        if expected != found {
            return Err(Error::DimensionMismatch { expected, found });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
enum Repr3 {
    /// `p0[k0]`, `t10[k1, k0]`, `t21[k2, k1]`.
    Factorized {
        p0: Vec<f64>,
        t10: DMatrix<f64>,
        t21: DMatrix<f64>,
    },
    /// Row-major over `(k2, k1, k0)`.
    Dense { probs: Vec<f64> },
}

/// Joint probabilities `p[k2, k1, k0]` of three energy measurements.
///
/// Exact distributions are kept factorized so an oscillator with a few
/// hundred levels never materializes `d³` numbers; sampled distributions are
/// dense and carry their sample count.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution3 {
    repr: Repr3,
    spectra: [EnergySpectrum; 3],
    samples: Option<u64>,
}

impl JointDistribution3 {
    pub fn from_transitions(
        populations: &[f64],
        t10: DMatrix<f64>,
        t21: DMatrix<f64>,
        spectra: &[EnergySpectrum; 3],
    ) -> Result<Self> {
        check_dims(populations.len(), &t10, &spectra[0], &spectra[1])?;
        check_dims(t10.nrows(), &t21, &spectra[1], &spectra[2])?;
        Ok(Self {
            repr: Repr3::Factorized {
                p0: populations.to_vec(),
                t10,
                t21,
            },
            spectra: spectra.clone(),
            samples: None,
        })
    }

    /// Empirical distribution from outcome counts indexed `(k2, k1, k0)` row-major.
    pub fn from_counts(counts: &[u64], spectra: &[EnergySpectrum; 3]) -> Result<Self> {
        let (d2, d1, d0) = (spectra[2].dim(), spectra[1].dim(), spectra[0].dim());
        if counts.len() != d2 * d1 * d0 {
            return Err(Error::DimensionMismatch {
                expected: d2 * d1 * d0,
                found: counts.len(),
            });
        }
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::param("counts", "no samples"));
        }
        Ok(Self {
            repr: Repr3::Dense {
                probs: counts.iter().map(|&c| c as f64 / n as f64).collect(),
            },
            spectra: spectra.clone(),
            samples: Some(n),
        })
    }

    pub fn spectra(&self) -> &[EnergySpectrum; 3] {
        &self.spectra
    }

    /// `(d2, d1, d0)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.spectra[2].dim(), self.spectra[1].dim(), self.spectra[0].dim())
    }

    /// Number of trajectories behind an empirical distribution.
    pub fn samples(&self) -> Option<u64> {
        self.samples
    }

    pub fn get(&self, k2: usize, k1: usize, k0: usize) -> f64 {
        match &self.repr {
            Repr3::Factorized { p0, t10, t21 } => t21[(k2, k1)] * (t10[(k1, k0)] * p0[k0]),
            Repr3::Dense { probs } => {
                let (_, d1, d0) = self.dims();
                probs[(k2 * d1 + k1) * d0 + k0]
            }
        }
    }

    pub fn total(&self) -> f64 {
        match &self.repr {
            Repr3::Factorized { .. } => self.marginal_10().total(),
            Repr3::Dense { probs } => probs.iter().sum(),
        }
    }

    /// Sum over `k2`: the `(t1, t0)` two-time joint.
    pub fn marginal_10(&self) -> JointDistribution {
        let (d2, d1, d0) = self.dims();
        let probs = match &self.repr {
            // Σ_k2 t21[k2,k1] t10[k1,k0] p0[k0], summed over k2 first.
            Repr3::Factorized { p0, t10, t21 } => {
                let col: Vec<f64> = t21.column_iter().map(|c| c.iter().sum()).collect();
                DMatrix::from_fn(d1, d0, |k1, k0| col[k1] * (t10[(k1, k0)] * p0[k0]))
            }
            Repr3::Dense { .. } => DMatrix::from_fn(d1, d0, |k1, k0| (0..d2).map(|k2| self.get(k2, k1, k0)).sum()),
        };
        self.joint(probs, 0, 1)
    }

    /// Sum over `k0`: the `(t2, t1)` two-time joint of the measured protocol.
    pub fn marginal_21(&self) -> JointDistribution {
        let (d2, d1, d0) = self.dims();
        let probs = match &self.repr {
            Repr3::Factorized { t21, .. } => {
                let p1 = self.middle_marginal();
                DMatrix::from_fn(d2, d1, |k2, k1| t21[(k2, k1)] * p1[k1])
            }
            Repr3::Dense { .. } => DMatrix::from_fn(d2, d1, |k2, k1| (0..d0).map(|k0| self.get(k2, k1, k0)).sum()),
        };
        self.joint(probs, 1, 2)
    }

    /// Sum over `k1`: first and last outcome when the middle outcome is
    /// measured but discarded. This is NOT the unmeasured two-time joint.
    pub fn marginal_20(&self) -> JointDistribution {
        let (d2, d1, d0) = self.dims();
        let probs = match &self.repr {
            Repr3::Factorized { p0, t10, t21 } => {
                let mut m = t21 * t10;
                for (k0, mut col) in m.column_iter_mut().enumerate() {
                    col *= p0[k0];
                }
                m
            }
            Repr3::Dense { .. } => DMatrix::from_fn(d2, d0, |k2, k0| (0..d1).map(|k1| self.get(k2, k1, k0)).sum()),
        };
        self.joint(probs, 0, 2)
    }

    /// Distribution of the middle outcome.
    pub fn middle_marginal(&self) -> Vec<f64> {
        match &self.repr {
            Repr3::Factorized { p0, t10, .. } => t10
                .row_iter()
                .map(|row| row.iter().zip(p0).map(|(t, p)| t * p).sum())
                .collect(),
            Repr3::Dense { .. } => self.marginal_10().later_marginal(),
        }
    }

    fn joint(&self, probs: DMatrix<f64>, earlier: usize, later: usize) -> JointDistribution {
        JointDistribution {
            probs,
            earlier: self.spectra[earlier].clone(),
            later: self.spectra[later].clone(),
        }
    }

    /// Every path `(k2, k1, k0)` with its probability.
    pub fn paths(&self) -> impl Iterator<Item = ((usize, usize, usize), f64)> + '_ {
        let (d2, d1, d0) = self.dims();
        (0..d2)
            .flat_map(move |k2| (0..d1).flat_map(move |k1| (0..d0).map(move |k0| ((k2, k1, k0), self.get(k2, k1, k0)))))
    }
}

/// `p[k1, k0] = |U[k1, k0]|² p[k0]`.
pub fn two_time_joint(
    rho0: &DiagonalDensity,
    u: &UnitaryPropagator,
    earlier: &EnergySpectrum,
    later: &EnergySpectrum,
) -> Result<JointDistribution> {
    JointDistribution::from_transitions(rho0.populations(), &u.transition_probabilities(), earlier, later)
}

/// `p[k2, k1, k0] = |U21[k2, k1]|² |U10[k1, k0]|² p[k0]`.
pub fn three_time_joint(
    rho0: &DiagonalDensity,
    u10: &UnitaryPropagator,
    u21: &UnitaryPropagator,
    spectra: &[EnergySpectrum; 3],
) -> Result<JointDistribution3> {
    JointDistribution3::from_transitions(
        rho0.populations(),
        u10.transition_probabilities(),
        u21.transition_probabilities(),
        spectra,
    )
}

/// First and last outcomes with no measurement at the middle time: the state
/// evolves coherently under `U21 U10`.
pub fn two_time_joint_skipping_middle(
    rho0: &DiagonalDensity,
    u10: &UnitaryPropagator,
    u21: &UnitaryPropagator,
    spectra: &[EnergySpectrum; 3],
) -> Result<JointDistribution> {
    let u20 = compose_propagators(u10, u21)?;
    two_time_joint(rho0, &u20, &spectra[0], &spectra[2])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum WorkView {
    /// One entry per outcome pair.
    #[default]
    FineGrained,
    /// Entries with equal work merged.
    Grouped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkEntry {
    pub work: f64,
    pub prob: f64,
    /// Outcome pairs `(k_later, k_earlier)` contributing to this entry.
    pub sources: Vec<(usize, usize)>,
}

/// Discrete work values `E^j_{k_j} - E^i_{k_i}` with their probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkDistribution {
    entries: Vec<WorkEntry>,
    view: WorkView,
}

impl WorkDistribution {
    fn fine(mut entries: Vec<WorkEntry>) -> Self {
        entries.sort_by(|a, b| a.work.total_cmp(&b.work).then_with(|| a.sources.cmp(&b.sources)));
        Self {
            entries,
            view: WorkView::FineGrained,
        }
    }

    pub fn entries(&self) -> &[WorkEntry] {
        &self.entries
    }

    pub fn view(&self) -> WorkView {
        self.view
    }

    pub fn probs(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.prob).collect()
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.prob).sum()
    }

    pub fn mean(&self) -> f64 {
        self.entries.iter().map(|e| e.work * e.prob).sum()
    }

    /// Merge entries whose work values lie within `tol` of the first value of
    /// their group. Grouped entries have strictly increasing work.
    pub fn grouped(&self, tol: f64) -> WorkDistribution {
        let mut out: Vec<WorkEntry> = Vec::new();
        for e in &self.entries {
            match out.last_mut() {
                Some(last) if (e.work - last.work).abs() < tol => {
                    last.prob += e.prob;
                    last.sources.extend_from_slice(&e.sources);
                }
                _ => out.push(e.clone()),
            }
        }
        WorkDistribution {
            entries: out,
            view: WorkView::Grouped,
        }
    }

    /// Index partition of the fine-grained entries induced by grouping.
    pub fn grouping_partition(&self, tol: f64) -> Vec<Vec<usize>> {
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut anchor = f64::NAN;
        for (i, e) in self.entries.iter().enumerate() {
            if groups.is_empty() || (e.work - anchor).abs() >= tol {
                groups.push(vec![i]);
                anchor = e.work;
            } else {
                groups.last_mut().unwrap().push(i);
            }
        }
        groups
    }
}

/// Work distribution of a two-time joint, one entry per nonzero outcome pair
/// (or merged per work value).
pub fn work_distribution(joint: &JointDistribution, view: WorkView) -> WorkDistribution {
    let (e_i, e_j) = (joint.earlier.levels(), joint.later.levels());
    let mut entries = Vec::new();
    for (ki, ei) in e_i.iter().enumerate() {
        for (kj, ej) in e_j.iter().enumerate() {
            let prob = joint.probs[(kj, ki)];
            if prob > 0.0 {
                entries.push(WorkEntry {
                    work: ej - ei,
                    prob,
                    sources: vec![(kj, ki)],
                });
            }
        }
    }
    let fine = WorkDistribution::fine(entries);
    match view {
        WorkView::FineGrained => fine,
        WorkView::Grouped => fine.grouped(WORK_DEGENERACY_TOL),
    }
}

/// Total work `E²_{k2} - E⁰_{k0}` through a measured middle time; the entry for
/// `(k2, k0)` carries `Σ_{k1} p[k2, k1, k0]`.
pub fn total_work_distribution(joint3: &JointDistribution3) -> WorkDistribution {
    work_distribution(&joint3.marginal_20(), WorkView::FineGrained)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkPair {
    pub w1: f64,
    pub w2: f64,
    pub prob: f64,
    /// `(k2, k1, k0)`.
    pub path: (usize, usize, usize),
}

/// Work in the first interval and in the second, one entry per nonzero path.
pub fn work_pair_distribution(joint3: &JointDistribution3) -> Vec<WorkPair> {
    let [s0, s1, s2] = joint3.spectra();
    let (e0, e1, e2) = (s0.levels(), s1.levels(), s2.levels());
    joint3
        .paths()
        .filter(|(_, p)| *p > 0.0)
        .map(|((k2, k1, k0), prob)| WorkPair {
            w1: e1[k1] - e0[k0],
            w2: e2[k2] - e1[k1],
            prob,
            path: (k2, k1, k0),
        })
        .collect()
}

/// `|Σ p(w) e^{-βw} - e^{-βΔF}|`, accumulated in log space.
pub fn jarzynski_deviation(workdist: &WorkDistribution, beta: f64, delta_f: f64) -> f64 {
    let log_terms: Vec<f64> = workdist
        .entries()
        .iter()
        .filter(|e| e.prob > 0.0)
        .map(|e| e.prob.ln() - beta * e.work)
        .collect();
    let lhs = log_sum_exp(&log_terms);
    let rhs = -beta * delta_f;
    let hi = lhs.max(rhs);
    hi.exp() * (-(lhs - rhs).abs()).exp_m1().abs()
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
