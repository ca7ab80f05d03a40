//! Shannon, joint and conditional entropies of outcome and work statistics.
//!
//! All values are computed in nats; [`EntropyReport::in_base`] converts.

use crate::error::{Error, Result};
use crate::protocol::{JointDistribution, WorkDistribution};

/// Distributions whose sum is within this of 1 are renormalized, otherwise rejected.
pub const NORMALIZATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum LogBase {
    #[default]
    E,
    Two,
}

impl LogBase {
    /// `ln(base)`.
    pub fn ln(self) -> f64 {
        match self {
            LogBase::E => 1.0,
            LogBase::Two => std::f64::consts::LN_2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyReport {
    pub value: f64,
    pub base: LogBase,
    /// Number of strictly positive probabilities.
    pub support_size: usize,
}

impl EntropyReport {
    fn nats(value: f64, support_size: usize) -> Self {
        Self {
            value,
            base: LogBase::E,
            support_size,
        }
    }

    pub fn in_base(self, base: LogBase) -> Self {
        Self {
            value: self.value * self.base.ln() / base.ln(),
            base,
            support_size: self.support_size,
        }
    }
}

/// `-Σ p ln p` over the raw entries; zeros contribute nothing.
fn plogp_sum<'a>(probs: impl IntoIterator<Item = &'a f64>) -> (f64, usize) {
    let mut h = 0.0;
    let mut support = 0;
    for &p in probs {
        if p > 0.0 {
            h -= p * p.ln();
            support += 1;
        }
    }
    (h, support)
}

fn validate(probs: &[f64]) -> Result<f64> {
    if let Some((index, &value)) = probs.iter().enumerate().find(|(_, p)| !(**p >= 0.0)) {
        return Err(Error::NegativeProbability { index, value });
    }
    let sum: f64 = probs.iter().sum();
    let off = (sum - 1.0).abs();
    if off > NORMALIZATION_TOL {
        return Err(Error::NotNormalized {
            sum,
            tol: NORMALIZATION_TOL,
        });
    }
    if off > 1e-10 {
        log::warn!("renormalizing distribution with total {sum}");
    }
    Ok(sum)
}

/// Entropy of a probability vector, renormalized if its sum is within
/// [`NORMALIZATION_TOL`] of one.
pub fn shannon_entropy(probs: &[f64]) -> Result<EntropyReport> {
    let sum = validate(probs)?;
    let (h, support) = plogp_sum(probs);
    // H(p/s) = H(p)/s + ln s
    Ok(EntropyReport::nats(h / sum + sum.ln(), support))
}

/// `H(E^j | E^i) = -Σ p[kj, ki] ln(p[kj, ki] / p[ki])`.
pub fn conditional_entropy(joint: &JointDistribution) -> Result<EntropyReport> {
    let probs = joint.probs();
    validate(probs.as_slice())?;
    let marginal = joint.earlier_marginal();
    let mut h = 0.0;
    let mut support = 0;
    for (ki, col) in probs.column_iter().enumerate() {
        let pi = marginal[ki];
        if pi <= 0.0 {
            continue;
        }
        for &p in col.iter() {
            if p > 0.0 {
                h -= p * (p / pi).ln();
                support += 1;
            }
        }
    }
    Ok(EntropyReport::nats(h.max(0.0), support))
}

/// `H(E^j, E^i)`.
pub fn joint_entropy(joint: &JointDistribution) -> Result<EntropyReport> {
    shannon_entropy(joint.probs().as_slice())
}

/// Result of merging probabilities into groups.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupedEntropy {
    /// `H(q)` with `q_j = Σ_{i ∈ I_j} p_i`.
    pub grouped: EntropyReport,
    /// `Σ_j q_j H({p_i / q_j : i ∈ I_j})`, the entropy lost by grouping.
    pub within: f64,
}

/// Entropy of the grouped distribution together with the weighted
/// within-group entropy, so that `H(p) = H(q) + within`.
///
/// `groups` must partition the indices of `probs` that carry nonzero mass;
/// zero-probability indices may be omitted.
pub fn grouped_entropy(probs: &[f64], groups: &[Vec<usize>]) -> Result<GroupedEntropy> {
    validate(probs)?;
    let mut seen = vec![false; probs.len()];
    for g in groups {
        if g.is_empty() {
            return Err(Error::NotAPartition("empty group".into()));
        }
        for &i in g {
            if i >= probs.len() {
                return Err(Error::NotAPartition(format!("index {i} out of range")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::NotAPartition(format!("index {i} appears twice")));
            }
        }
    }
    if let Some(i) = (0..probs.len()).find(|&i| !seen[i] && probs[i] > 0.0) {
        return Err(Error::NotAPartition(format!(
            "index {i} with mass {} is not covered",
            probs[i]
        )));
    }

    let q: Vec<f64> = groups.iter().map(|g| g.iter().map(|&i| probs[i]).sum()).collect();
    let (hq, support) = plogp_sum(&q);
    let within = groups
        .iter()
        .zip(&q)
        .filter(|(_, &qj)| qj > 0.0)
        .map(|(g, &qj)| {
            let (h, _) = plogp_sum(g.iter().map(|&i| probs[i] / qj).collect::<Vec<_>>().iter());
            qj * h
        })
        .sum();
    Ok(GroupedEntropy {
        grouped: EntropyReport::nats(hq, support),
        within,
    })
}

/// Entropy of a work distribution in whatever view it was built with.
pub fn work_entropy(workdist: &WorkDistribution) -> Result<EntropyReport> {
    shannon_entropy(&workdist.probs())
}
