//! Finite-dimensional primitives: energy spectra, diagonal (thermal) states,
//! propagators between instantaneous eigenbases, and equilibrium potentials.
//!
//! Measurement projectors are never built. An outcome is an index into the
//! spectrum of the measured Hamiltonian, and every conditioned state is the
//! corresponding basis vector.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default tolerance for `max |U†U - I|`.
pub const UNITARITY_TOL: f64 = 1e-10;

/// Ordered eigenvalues of the Hamiltonian at one measurement time.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySpectrum {
    levels: Vec<f64>,
    time: usize,
}

impl EnergySpectrum {
    /// `time` labels the measurement instant (0, 1, 2, ...).
    pub fn new(levels: Vec<f64>, time: usize) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::param("levels", "a spectrum needs at least two levels"));
        }
        if let Some(bad) = levels.iter().find(|e| !e.is_finite()) {
            return Err(Error::param("levels", format!("non-finite level {bad}")));
        }
        if levels.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::param("levels", "levels must be sorted non-decreasing"));
        }
        Ok(Self { levels, time })
    }

    /// Two levels `{0, gap}`.
    pub fn two_level(gap: f64, time: usize) -> Result<Self> {
        if !(gap >= 0.0) {
            return Err(Error::param("gap", format!("gap must be non-negative, got {gap}")));
        }
        Self::new(vec![0.0, gap], time)
    }

    /// Harmonic ladder `E_n = n + 1/2` for `n = 0..=n_max` (unit quantum).
    pub fn oscillator(n_max: usize, time: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::param("n_max", "need n_max >= 1"));
        }
        Self::new((0..=n_max).map(|n| n as f64 + 0.5).collect(), time)
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn relabel(mut self, time: usize) -> Self {
        self.time = time;
        self
    }

    /// The same spectrum with every level shifted by `c`.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        Self::new(self.levels.iter().map(|e| e + c).collect(), self.time)
    }
}

/// Populations of a state diagonal in the energy basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalDensity {
    populations: Vec<f64>,
    beta: Option<f64>,
}

impl DiagonalDensity {
    /// Arbitrary populations; rejects negative entries and sums off by more
    /// than 1e-12.
    pub fn from_populations(populations: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = populations.iter().enumerate().find(|(_, p)| !(**p >= 0.0)) {
            return Err(Error::NegativeProbability { index, value });
        }
        let sum: f64 = populations.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized { sum, tol: 1e-12 });
        }
        Ok(Self {
            populations,
            beta: None,
        })
    }

    /// Maximally mixed state on `dim` levels.
    pub fn uniform(dim: usize) -> Self {
        Self {
            populations: vec![1.0 / dim as f64; dim],
            beta: None,
        }
    }

    pub fn populations(&self) -> &[f64] {
        &self.populations
    }

    pub fn dim(&self) -> usize {
        self.populations.len()
    }

    /// Inverse temperature when the state is thermal (`+inf` for the ground state).
    pub fn beta(&self) -> Option<f64> {
        self.beta
    }
}

/// Gibbs state `p_k = exp(-beta E_k) / Z`.
///
/// `beta = f64::INFINITY` gives the ground state (uniform over a degenerate
/// ground level). Exponents are shifted by `E_min`, so no finite `beta`
/// overflows.
pub fn build_thermal_state(spectrum: &EnergySpectrum, beta: f64) -> Result<DiagonalDensity> {
    let levels = spectrum.levels();
    let e_min = levels[0];
    if beta == f64::INFINITY {
        let ground = levels.iter().filter(|&&e| e == e_min).count() as f64;
        let populations = levels
            .iter()
            .map(|&e| if e == e_min { 1.0 / ground } else { 0.0 })
            .collect();
        return Ok(DiagonalDensity {
            populations,
            beta: Some(beta),
        });
    }
    check_beta(beta)?;
    let weights: Vec<f64> = levels.iter().map(|e| (-beta * (e - e_min)).exp()).collect();
    let z: f64 = weights.iter().sum();
    Ok(DiagonalDensity {
        populations: weights.into_iter().map(|w| w / z).collect(),
        beta: Some(beta),
    })
}

fn check_beta(beta: f64) -> Result<()> {
    if !beta.is_finite() || beta <= 0.0 {
        return Err(Error::param(
            "beta",
            format!("inverse temperature must be positive and finite, got {beta}"),
        ));
    }
    Ok(())
}

/// Partition function and free energy at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermodynamicPotentials {
    pub partition_function: f64,
    pub free_energy: f64,
    /// `ln Z`, kept separately since `Z` itself may overflow.
    pub log_partition_function: f64,
}

impl ThermodynamicPotentials {
    /// Works on a bare level list so a single level is admissible.
    pub fn from_levels(levels: &[f64], beta: f64) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::param("levels", "empty spectrum"));
        }
        check_beta(beta)?;
        let e_min = levels.iter().copied().fold(f64::INFINITY, f64::min);
        let shifted: f64 = levels.iter().map(|e| (-beta * (e - e_min)).exp()).sum();
        let log_z = shifted.ln() - beta * e_min;
        Ok(Self {
            partition_function: log_z.exp(),
            free_energy: -log_z / beta,
            log_partition_function: log_z,
        })
    }
}

pub fn thermodynamic_potentials(spectrum: &EnergySpectrum, beta: f64) -> Result<ThermodynamicPotentials> {
    ThermodynamicPotentials::from_levels(spectrum.levels(), beta)
}

/// Square matrix `U[k_later, k_earlier]` between two instantaneous eigenbases.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryPropagator {
    matrix: DMatrix<Complex64>,
    tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitarityReport {
    pub deviation: f64,
    pub within_tol: bool,
}

impl UnitaryPropagator {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        Self::with_tolerance(matrix, UNITARITY_TOL)
    }

    /// For truncated propagators whose defect is bounded by a looser budget.
    pub fn with_tolerance(matrix: DMatrix<Complex64>, tol: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let report = validate_unitary(&matrix, tol);
        if !report.within_tol {
            return Err(Error::NotUnitary {
                deviation: report.deviation,
                tol,
            });
        }
        Ok(Self { matrix, tol })
    }

    /// Real orthogonal matrices (e.g. squeeze matrices) lifted to complex.
    pub fn from_real(matrix: &DMatrix<f64>, tol: f64) -> Result<Self> {
        Self::with_tolerance(matrix.map(|x| Complex64::new(x, 0.0)), tol)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
            tol: UNITARITY_TOL,
        }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    /// `|U[j, i]|²`, the probability of landing in `j` from `i`.
    pub fn transition_probabilities(&self) -> DMatrix<f64> {
        self.matrix.map(|z| z.norm_sqr())
    }
}

/// `max_{mn} |(U†U - I)_{mn}|`.
pub fn validate_unitary(matrix: &DMatrix<Complex64>, tol: f64) -> UnitarityReport {
    let gram = matrix.adjoint() * matrix;
    let mut deviation = 0.0_f64;
    for n in 0..gram.ncols() {
        for m in 0..gram.nrows() {
            let target = if m == n { 1.0 } else { 0.0 };
            deviation = deviation.max((gram[(m, n)] - target).norm());
        }
    }
    UnitarityReport {
        deviation,
        within_tol: deviation <= tol,
    }
}

/// `U_{2,0} = U_{2,1} U_{1,0}`: evolution across the middle time with no
/// measurement there.
pub fn compose_propagators(u10: &UnitaryPropagator, u21: &UnitaryPropagator) -> Result<UnitaryPropagator> {
    if u10.dim() != u21.dim() {
        return Err(Error::DimensionMismatch {
            expected: u10.dim(),
            found: u21.dim(),
        });
    }
    let tol = u10.tol.max(u21.tol) * 2.0;
    UnitaryPropagator::with_tolerance(&u21.matrix * &u10.matrix, tol)
}

/// Unitary from the QR factorization of a matrix with uniform random entries.
pub fn random_unitary<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> UnitaryPropagator {
    let raw = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    UnitaryPropagator {
        matrix: raw.qr().q(),
        tol: UNITARITY_TOL,
    }
}
