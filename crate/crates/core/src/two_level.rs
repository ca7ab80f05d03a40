//! Driven two-level system: a propagator in the adiabatic basis parameterized
//! by a mixing angle and two phases, and the mixing-angle sweep of all
//! Leggett-Garg parameters.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{build_thermal_state, EnergySpectrum, UnitaryPropagator};
use crate::leggett_garg::{
    k3_correlator, k3_correlator_flipped, k3_correlator_swapped_indices, DichotomicMapping, ProtocolStatistics,
    Provenance,
};
use crate::par;
use crate::protocol::{three_time_joint, two_time_joint_skipping_middle, WorkView};

/// Mixing angle `theta` and phases `alpha`, `beta_angle` (radians).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TlsAngles {
    pub alpha: f64,
    pub beta_angle: f64,
    theta: f64,
}

impl TlsAngles {
    pub fn new(alpha: f64, beta_angle: f64, theta: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta_angle", beta_angle), ("theta", theta)] {
            if !v.is_finite() {
                return Err(Error::param(name, format!("angle must be finite, got {v}")));
            }
        }
        Ok(Self {
            alpha,
            beta_angle,
            theta: theta.rem_euclid(TAU),
        })
    }

    pub fn rotation(theta: f64) -> Result<Self> {
        Self::new(0.0, 0.0, theta)
    }

    /// Mixing angle in `[0, 2π)`.
    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// ```text
/// ⎡  e^{ i(α+β)/2} cos(θ/2)   e^{ i(α-β)/2} sin(θ/2) ⎤
/// ⎣ -e^{-i(α-β)/2} sin(θ/2)   e^{-i(α+β)/2} cos(θ/2) ⎦
/// ```
/// With `α = β = 0` this is the real rotation by `θ/2`.
pub fn tls_propagator(angles: &TlsAngles) -> UnitaryPropagator {
    let (s, c) = (angles.theta / 2.0).sin_cos();
    let sum = 0.5 * (angles.alpha + angles.beta_angle);
    let diff = 0.5 * (angles.alpha - angles.beta_angle);
    let phase = |x: f64| Complex64::from_polar(1.0, x);
    let m = DMatrix::from_row_slice(
        2,
        2,
        &[phase(sum) * c, phase(diff) * s, -phase(-diff) * s, phase(-sum) * c],
    );
    UnitaryPropagator::new(m).expect("SU(2) matrix is unitary")
}

/// Real rotation with mixing angle `theta`.
pub fn rotation(theta: f64) -> UnitaryPropagator {
    tls_propagator(&TlsAngles::rotation(theta).expect("finite angle"))
}

/// Energy levels at the three measurement times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TlsSpectra {
    /// `{0, 1}` at every time; work values are degenerate.
    #[default]
    Equal,
    /// `{0, 1}`, `{0, √2}`, `{0, √3}`; every work value distinct.
    Incommensurate,
}

impl TlsSpectra {
    pub fn build(self) -> [EnergySpectrum; 3] {
        let gaps = match self {
            TlsSpectra::Equal => [1.0, 1.0, 1.0],
            TlsSpectra::Incommensurate => [1.0, 2f64.sqrt(), 3f64.sqrt()],
        };
        [0, 1, 2].map(|t| EnergySpectrum::two_level(gaps[t], t).expect("positive gap"))
    }
}

/// `theta_count` evenly spaced angles over `[0, 2π]`, endpoints included.
pub fn theta_grid(theta_count: usize) -> Vec<f64> {
    match theta_count {
        0 => vec![],
        1 => vec![0.0],
        n => (0..n).map(|i| TAU * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Grid of 721 angles (half-degree steps).
pub fn default_theta_grid() -> Vec<f64> {
    theta_grid(721)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaRow {
    pub theta: f64,
    pub k_cor: f64,
    pub k_cor_flipped: f64,
    pub k_en_fine: f64,
    pub k_en_grouped: f64,
    pub k_en_weak: f64,
    /// `¼(1 - C01 - C02 + C12)`, for comparison only.
    pub k_cor_swapped: f64,
}

/// Statistics for equal propagators `U21 = U10` with the given angles.
pub fn tls_statistics(beta: f64, spectra: &[EnergySpectrum; 3], angles: &TlsAngles) -> Result<ProtocolStatistics> {
    let rho = build_thermal_state(&spectra[0], beta)?;
    let u = tls_propagator(angles);
    ProtocolStatistics::new(
        three_time_joint(&rho, &u, &u, spectra)?,
        two_time_joint_skipping_middle(&rho, &u, &u, spectra)?,
    )
}

pub fn tls_row(beta: f64, spectra: &[EnergySpectrum; 3], angles: &TlsAngles) -> Result<ThetaRow> {
    let st = tls_statistics(beta, spectra, angles)?;
    let mapping = DichotomicMapping::ground_excited(2);
    let c = st.correlators(&mapping, Provenance::NoMiddleMeasurement)?;
    let fine = st.entropic(WorkView::FineGrained)?;
    Ok(ThetaRow {
        theta: angles.theta,
        k_cor: k3_correlator(&c),
        k_cor_flipped: k3_correlator_flipped(&c),
        k_en_fine: fine.full,
        k_en_grouped: st.entropic(WorkView::Grouped)?.full,
        k_en_weak: fine.weak,
        k_cor_swapped: k3_correlator_swapped_indices(&c),
    })
}

/// One row per angle, in grid order. Rows are evaluated in parallel.
/// The reported `theta` is the grid value (not reduced mod 2π).
pub fn tls_theta_sweep(beta: f64, spectra: &[EnergySpectrum; 3], thetas: &[f64]) -> Result<Vec<ThetaRow>> {
    par::try_map(thetas, |&theta| {
        let mut row = tls_row(beta, spectra, &TlsAngles::rotation(theta)?)?;
        row.theta = theta;
        Ok(row)
    })
}

/// `cos θ (cos θ - 1) / 2`, the closed form of `K_cor` for `U21 = U10`.
pub fn k_cor_closed_form(theta: f64) -> f64 {
    let c = theta.cos();
    0.5 * c * (c - 1.0)
}

/// Distance from `theta` to the nearest multiple of π/2.
pub fn distance_to_quarter_turn(theta: f64) -> f64 {
    let q = PI / 2.0;
    let r = theta.rem_euclid(q);
    r.min(q - r)
}
