//! Work statistics from sequential projective energy measurements and
//! Leggett-Garg tests of their macrorealism, for a driven two-level system
//! and a twice-squeezed thermal oscillator.
//!
//! Parallel sweeps use rayon by default; build without the `parallel`
//! feature for a purely sequential library.

// Negated comparisons below are deliberate: NaN must fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod entropy;
pub mod error;
pub mod hilbert;
pub mod leggett_garg;
pub mod optimize;
pub mod oscillator;
pub mod par;
pub mod protocol;
pub mod sampling;
pub mod squeeze;
pub mod two_level;

pub use error::{Error, Result};
pub use hilbert::{build_thermal_state, DiagonalDensity, EnergySpectrum, UnitaryPropagator};
pub use leggett_garg::{DichotomicMapping, ProtocolStatistics};
pub use protocol::{JointDistribution, JointDistribution3, WorkDistribution, WorkView};

/// Library version, echoed in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
