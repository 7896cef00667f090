//! Ramsey interferometry on ensembles of dipole-coupled two-level emitters
//! with collective spontaneous emission.
//!
//! Units: rates in the single-atom decay rate `Gamma`, times in `1/Gamma`,
//! lengths in the transition wavelength. Spin `j` of `N` is the most
//! significant qubit of the product basis counted from `j = 0`, with `|e>`
//! before `|g>`; index 0 is the fully excited state.
//!
//! ```
//! use collective_ramsey::{EmitterEnsemble, PulseSequence, sensitivity};
//!
//! let couplings = EmitterEnsemble::chain(2, 0.3, 1.0)?.couplings()?;
//! let asymmetric = PulseSequence::new(2, 1)?;
//! let result = sensitivity(&couplings, &asymmetric, 3.0)?;
//! assert!(result.delta_omega > 0.0);
//! # Ok::<(), collective_ramsey::Error>(())
//! ```

pub mod analytic;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod optimize;
pub mod quantum;
pub mod ramsey;
pub mod spectral;

pub use dynamics::{build_generator, evolve, evolve_batch, evolve_with, LindbladGenerator, Method};
pub use ensemble::{pair_couplings, CouplingMatrices, EmitterEnsemble};
pub use error::{Error, Result};
pub use quantum::{apply_rotation, Axis, DensityMatrix, Rotation, SpinOperator, C64};
pub use ramsey::{
    independent_optimum, independent_sensitivity, optimize_tau, ramsey_signal, sensitivity, sensitivity_vs_tau,
    tilt_angle_for_phase, PulseSequence, SensitivityOptions, SensitivityResult,
};
pub use spectral::{decompose, population_histogram, SpectralDecomposition};
