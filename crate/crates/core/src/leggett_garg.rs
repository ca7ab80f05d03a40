//! Dichotomic and entropic Leggett-Garg parameters for a three-time energy
//! measurement protocol. Negative values witness a failure of macrorealism.
//!
//! The `t0 -> t2` statistics (`C02` and the `w20` work entropy) always come
//! from the protocol with NO measurement at `t1`. Using the `k1`-marginal of
//! the measured protocol instead yields a classical joint distribution, for
//! which both parameters are non-negative.

use crate::entropy::{conditional_entropy, joint_entropy, shannon_entropy, work_entropy, EntropyReport};
use crate::error::{Error, Result};
use crate::protocol::{work_distribution, JointDistribution, JointDistribution3, WorkView};

/// Assignment `k -> Q(k) ∈ {-1, +1}` of measurement outcomes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DichotomicMapping {
    assignment: Vec<i8>,
}

impl DichotomicMapping {
    pub fn new(assignment: Vec<i8>) -> Result<Self> {
        if let Some(bad) = assignment.iter().find(|&&q| q != 1 && q != -1) {
            return Err(Error::param("assignment", format!("value {bad} is not ±1")));
        }
        Ok(Self { assignment })
    }

    /// `+1` on the ground level, `-1` on every excited level.
    pub fn ground_excited(dim: usize) -> Self {
        Self {
            assignment: (0..dim).map(|k| if k == 0 { 1 } else { -1 }).collect(),
        }
    }

    pub fn value(&self, k: usize) -> Result<f64> {
        self.assignment.get(k).map(|&q| q as f64).ok_or(Error::UnmappedIndex(k))
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }
}

/// `C = Σ Q(k_j) Q(k_i) p[k_j, k_i]`.
pub fn dichotomic_correlator(joint: &JointDistribution, mapping: &DichotomicMapping) -> Result<f64> {
    let p = joint.probs();
    let later: Vec<f64> = (0..p.nrows()).map(|k| mapping.value(k)).collect::<Result<_>>()?;
    let earlier: Vec<f64> = (0..p.ncols()).map(|k| mapping.value(k)).collect::<Result<_>>()?;
    let mut c = 0.0;
    for (ki, col) in p.column_iter().enumerate() {
        for (kj, &pj) in col.iter().enumerate() {
            c += later[kj] * earlier[ki] * pj;
        }
    }
    Ok(c)
}

/// Which distribution produced `C02`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Coherent evolution `t0 -> t2`, no middle measurement.
    NoMiddleMeasurement,
    /// `k1`-marginal of the measured three-time protocol.
    MiddleMarginal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatorSet {
    pub c01: f64,
    pub c12: f64,
    pub c02: f64,
    pub c02_provenance: Provenance,
}

/// `¼(1 - C01 - C12 + C02)`; negative iff `C01 + C12 - C02 <= 1` is violated.
pub fn k3_correlator(c: &CorrelatorSet) -> f64 {
    0.25 * (1.0 - c.c01 - c.c12 + c.c02)
}

/// [`k3_correlator`] after `Q1 -> -Q1`: `¼(1 + C01 + C12 + C02)`.
pub fn k3_correlator_flipped(c: &CorrelatorSet) -> f64 {
    0.25 * (1.0 + c.c01 + c.c12 + c.c02)
}

/// `¼(1 - C01 - C02 + C12)`, the index pattern that swaps the roles of `C12`
/// and `C02`. It is identically non-negative for two-level rotations and is
/// only kept to compare against [`k3_correlator`].
pub fn k3_correlator_swapped_indices(c: &CorrelatorSet) -> f64 {
    0.25 * (1.0 - c.c01 - c.c02 + c.c12)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropicK {
    /// `½(H(w21) + H(w10) - H(w20) - H(E1))`.
    pub full: f64,
    /// Same without the `H(E1)` term; harder to violate.
    pub weak: f64,
}

pub fn k3_entropic(
    h_w21: &EntropyReport,
    h_w10: &EntropyReport,
    h_w20: &EntropyReport,
    h_e1: &EntropyReport,
) -> EntropicK {
    let weak = 0.5 * (h_w21.value + h_w10.value - h_w20.value);
    EntropicK {
        full: weak - 0.5 * h_e1.value,
        weak,
    }
}

/// Default reporting tolerance for calling a parameter violated.
pub const VIOLATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LgResult {
    pub k_cor: f64,
    pub k_cor_flipped: f64,
    pub k_en: f64,
    pub k_en_grouped: f64,
}

impl LgResult {
    pub fn cor_violated(&self) -> bool {
        self.k_cor.min(self.k_cor_flipped) < -VIOLATION_TOL
    }

    pub fn en_violated(&self) -> bool {
        self.k_en < -VIOLATION_TOL
    }
}

/// Everything the parameters need: the measured three-time statistics and
/// the unmeasured `t0 -> t2` joint.
#[derive(Debug, Clone)]
pub struct ProtocolStatistics {
    pub measured: JointDistribution3,
    pub unmeasured_20: JointDistribution,
}

impl ProtocolStatistics {
    pub fn new(measured: JointDistribution3, unmeasured_20: JointDistribution) -> Result<Self> {
        let (d2, _, d0) = measured.dims();
        let shape = unmeasured_20.probs().shape();
        if shape != (d2, d0) {
            return Err(Error::DimensionMismatch {
                expected: d2 * d0,
                found: shape.0 * shape.1,
            });
        }
        Ok(Self {
            measured,
            unmeasured_20,
        })
    }

    /// Classical stand-in: the `t0 -> t2` joint is the middle-marginal itself.
    pub fn noninvasive(measured: JointDistribution3) -> Self {
        let unmeasured_20 = measured.marginal_20();
        Self {
            measured,
            unmeasured_20,
        }
    }

    pub fn correlators(&self, mapping: &DichotomicMapping, provenance: Provenance) -> Result<CorrelatorSet> {
        Ok(CorrelatorSet {
            c01: dichotomic_correlator(&self.measured.marginal_10(), mapping)?,
            c12: dichotomic_correlator(&self.measured.marginal_21(), mapping)?,
            c02: dichotomic_correlator(&self.unmeasured_20, mapping)?,
            c02_provenance: provenance,
        })
    }

    /// `K_en` with work entropies taken in the given view.
    pub fn entropic(&self, view: WorkView) -> Result<EntropicK> {
        let h_e1 = shannon_entropy(&self.measured.middle_marginal())?;
        let joints = [self.measured.marginal_21(), self.measured.marginal_10()];
        let [h21, h10, h20] = match view {
            WorkView::FineGrained => [
                joint_entropy(&joints[0])?,
                joint_entropy(&joints[1])?,
                joint_entropy(&self.unmeasured_20)?,
            ],
            WorkView::Grouped => [
                work_entropy(&work_distribution(&joints[0], view))?,
                work_entropy(&work_distribution(&joints[1], view))?,
                work_entropy(&work_distribution(&self.unmeasured_20, view))?,
            ],
        };
        Ok(k3_entropic(&h21, &h10, &h20, &h_e1))
    }

    /// `½(H(E2|E1) + H(E1|E0) - H(E2|E0))`, the conditional-entropy route to
    /// the fine-grained `K_en`.
    pub fn entropic_from_conditionals(&self) -> Result<f64> {
        let h21 = conditional_entropy(&self.measured.marginal_21())?.value;
        let h10 = conditional_entropy(&self.measured.marginal_10())?.value;
        let h20 = conditional_entropy(&self.unmeasured_20)?.value;
        Ok(0.5 * (h21 + h10 - h20))
    }

    pub fn leggett_garg(&self, mapping: &DichotomicMapping) -> Result<LgResult> {
        let c = self.correlators(mapping, Provenance::NoMiddleMeasurement)?;
        Ok(LgResult {
            k_cor: k3_correlator(&c),
            k_cor_flipped: k3_correlator_flipped(&c),
            k_en: self.entropic(WorkView::FineGrained)?.full,
            k_en_grouped: self.entropic(WorkView::Grouped)?.full,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{build_thermal_state, random_unitary, EnergySpectrum, UnitaryPropagator};
    use crate::protocol::{three_time_joint, two_time_joint, two_time_joint_skipping_middle};
    use crate::two_level::{rotation, tls_propagator, TlsAngles};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn tls3() -> [EnergySpectrum; 3] {
        [0, 1, 2].map(|t| EnergySpectrum::two_level(1.0, t).unwrap())
    }

    fn stats(beta: f64, u10: &UnitaryPropagator, u21: &UnitaryPropagator) -> ProtocolStatistics {
        let s = tls3();
        let rho = build_thermal_state(&s[0], beta).unwrap();
        ProtocolStatistics::new(
            three_time_joint(&rho, u10, u21, &s).unwrap(),
            two_time_joint_skipping_middle(&rho, u10, u21, &s).unwrap(),
        )
        .unwrap()
    }

    /// Brute force over all eight outcome paths, independent of the
    /// marginalization code.
    fn correlators_by_paths(theta: f64) -> (f64, f64, f64) {
        let (s, c) = (theta / 2.0).sin_cos();
        let t = [[c * c, s * s], [s * s, c * c]];
        let q = [1.0, -1.0];
        let p0 = [0.6, 0.4];
        let (mut c01, mut c12) = (0.0, 0.0);
        for k0 in 0..2 {
            for k1 in 0..2 {
                for k2 in 0..2 {
                    let p = t[k2][k1] * t[k1][k0] * p0[k0];
                    c01 += q[k1] * q[k0] * p;
                    c12 += q[k2] * q[k1] * p;
                }
            }
        }
        // unmeasured t0 -> t2 is a single rotation by 2θ
        let (s2, c2) = theta.sin_cos();
        let c02: f64 = p0.iter().map(|p| p * (c2 * c2 - s2 * s2)).sum();
        (c01, c12, c02)
    }

    #[test]
    fn correlator_examples() {
        let s = tls3();
        let map = DichotomicMapping::ground_excited(2);
        let rho = build_thermal_state(&s[0], 0.4).unwrap();
        let id = two_time_joint(&rho, &UnitaryPropagator::identity(2), &s[0], &s[1]).unwrap();
        assert_eq!(dichotomic_correlator(&id, &map).unwrap(), 1.0);
        for theta in [0.3, 1.0, 2.5, PI] {
            for beta in [0.1, 1.0, 10.0] {
                let rho = build_thermal_state(&s[0], beta).unwrap();
                let j = two_time_joint(&rho, &rotation(theta), &s[0], &s[1]).unwrap();
                assert_abs_diff_eq!(dichotomic_correlator(&j, &map).unwrap(), theta.cos(), epsilon = 1e-14);
            }
        }
        let short = DichotomicMapping::new(vec![1]).unwrap();
        assert_eq!(dichotomic_correlator(&id, &short), Err(Error::UnmappedIndex(1)));
        assert!(DichotomicMapping::new(vec![1, 0]).is_err());
    }

    #[test]
    fn k_cor_examples() {
        let ones = CorrelatorSet {
            c01: 1.0,
            c12: 1.0,
            c02: 1.0,
            c02_provenance: Provenance::NoMiddleMeasurement,
        };
        assert_eq!(k3_correlator(&ones), 0.0);
        assert_eq!(k3_correlator_flipped(&ones), 1.0);

        let map = DichotomicMapping::ground_excited(2);
        for (theta, k, kf) in [
            (PI / 3.0, -0.125, 0.375),
            (PI / 2.0, 0.0, 0.0),
            (2.0 * PI / 3.0, 0.375, -0.125),
            (PI, 1.0, 0.0),
        ] {
            let (c01, c12, c02) = correlators_by_paths(theta);
            let brute = CorrelatorSet {
                c01,
                c12,
                c02,
                c02_provenance: Provenance::NoMiddleMeasurement,
            };
            assert_abs_diff_eq!(k3_correlator(&brute), k, epsilon = 1e-12);
            assert_abs_diff_eq!(k3_correlator_flipped(&brute), kf, epsilon = 1e-12);

            let u = rotation(theta);
            let r = stats(1.0, &u, &u).leggett_garg(&map).unwrap();
            assert_abs_diff_eq!(r.k_cor, k, epsilon = 1e-12);
            assert_abs_diff_eq!(r.k_cor_flipped, kf, epsilon = 1e-12);
        }
    }

    #[test]
    fn swapped_index_pattern_never_goes_negative() {
        let map = DichotomicMapping::ground_excited(2);
        for i in 0..=360 {
            let u = rotation(i as f64 * PI / 180.0);
            let c = stats(1.0, &u, &u)
                .correlators(&map, Provenance::NoMiddleMeasurement)
                .unwrap();
            assert!(k3_correlator_swapped_indices(&c) >= -1e-15);
        }
    }

    #[test]
    fn entropic_adiabatic_is_zero() {
        let id = UnitaryPropagator::identity(2);
        let k = stats(1.0, &id, &id).entropic(WorkView::FineGrained).unwrap();
        assert_abs_diff_eq!(k.full, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn entropic_two_routes_agree() {
        for theta in [PI / 2.0, 0.3, 1.7] {
            let u = rotation(theta);
            let st = stats(1.0, &u, &u);
            let direct = st.entropic(WorkView::FineGrained).unwrap().full;
            let conditional = st.entropic_from_conditionals().unwrap();
            assert_abs_diff_eq!(direct, conditional, epsilon = 1e-10);
        }
    }

    #[test]
    fn entropic_weak_drops_middle_entropy() {
        let u = rotation(0.4);
        let st = stats(1.0, &u, &u);
        let k = st.entropic(WorkView::FineGrained).unwrap();
        let h1 = shannon_entropy(&st.measured.middle_marginal()).unwrap().value;
        assert_abs_diff_eq!(k.weak - k.full, 0.5 * h1, epsilon = 1e-15);
    }

    #[test]
    fn two_level_symmetries() {
        let map = DichotomicMapping::ground_excited(2);
        let eval = |theta: f64| {
            let u = rotation(theta);
            stats(0.8, &u, &u).leggett_garg(&map).unwrap()
        };
        for i in 1..40 {
            let theta = 0.077 * i as f64;
            let (a, b, c) = (eval(theta), eval(theta + PI), eval(-theta));
            assert_abs_diff_eq!(a.k_cor, c.k_cor, epsilon = 1e-12);
            assert_abs_diff_eq!(a.k_cor_flipped, c.k_cor_flipped, epsilon = 1e-12);
            assert_abs_diff_eq!(a.k_en, c.k_en, epsilon = 1e-12);
            // a half turn swaps the two dichotomic parameters
            assert_abs_diff_eq!(a.k_cor, b.k_cor_flipped, epsilon = 1e-12);
            assert_abs_diff_eq!(a.k_cor_flipped, b.k_cor, epsilon = 1e-12);
            assert_abs_diff_eq!(a.k_en, b.k_en, epsilon = 1e-12);
        }
    }

    #[test]
    fn phases_only_reach_the_unmeasured_branch() {
        let map = DichotomicMapping::ground_excited(2);
        let plain = rotation(0.9);
        let phased = tls_propagator(&TlsAngles::new(0.4, -1.3, 0.9).unwrap());
        let a = stats(1.0, &plain, &plain);
        let b = stats(1.0, &phased, &phased);
        let (ca, cb) = (
            a.correlators(&map, Provenance::NoMiddleMeasurement).unwrap(),
            b.correlators(&map, Provenance::NoMiddleMeasurement).unwrap(),
        );
        assert_abs_diff_eq!(ca.c01, cb.c01, epsilon = 1e-15);
        assert_abs_diff_eq!(ca.c12, cb.c12, epsilon = 1e-15);
        // U·U interferes, so the phases change the t0 -> t2 statistics
        assert!((ca.c02 - cb.c02).abs() > 1e-3);
    }

    fn classical_surrogate(rng: &mut ChaCha8Rng) -> (ProtocolStatistics, usize) {
        let d = rng.gen_range(2..=6);
        let t10 = random_unitary(d, rng).transition_probabilities();
        let t21 = random_unitary(d, rng).transition_probabilities();
        let mut p0: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        let s: f64 = p0.iter().sum();
        p0.iter_mut().for_each(|p| *p /= s);
        let spectra = [0, 1, 2].map(|t| EnergySpectrum::new((0..d).map(|k| k as f64).collect(), t).unwrap());
        let j3 = JointDistribution3::from_transitions(&p0, t10, t21, &spectra).unwrap();
        (ProtocolStatistics::noninvasive(j3), d)
    }

    #[test]
    fn classical_surrogate_never_violates() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let (st, d) = classical_surrogate(&mut rng);
            let assignment: Vec<i8> = (0..d).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
            let map = DichotomicMapping::new(assignment).unwrap();
            let c = st.correlators(&map, Provenance::MiddleMarginal).unwrap();
            assert!(k3_correlator(&c) >= -1e-12);
            assert!(k3_correlator_flipped(&c) >= -1e-12);
            assert!(st.entropic(WorkView::FineGrained).unwrap().full >= -1e-12);
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let u = rotation(0.5);
        let st = stats(1.0, &u, &u);
        let wrong = JointDistribution::new(
            DMatrix::from_element(3, 3, 1.0 / 9.0),
            EnergySpectrum::new(vec![0.0, 1.0, 2.0], 0).unwrap(),
            EnergySpectrum::new(vec![0.0, 1.0, 2.0], 2).unwrap(),
        )
        .unwrap();
        assert!(ProtocolStatistics::new(st.measured, wrong).is_err());
    }
}
