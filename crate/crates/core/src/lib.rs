//! Spectra of sample covariance matrices whose rows are consecutive
//! segments of one linear process.
//!
//! A record `X_1, ..., X_{pn}` of `X_t = sum_j c_j Z_{t-j}` is cut into the
//! rows of a `p x n` matrix `X`. As `p, n -> inf` with `p/n -> y`, the
//! eigenvalue distribution of `p^{-1} X X^T` converges to a law determined
//! by the spectral density `f` of the process through a fixed-point equation
//! for its Stieltjes transform.
//!
//! ```
//! use linproc_core::{
//!     lsd::{EquationVariant, LsdGrid, LsdSolution, SolverConfig},
//!     process::SpectralDensity,
//! };
//!
//! let f = SpectralDensity::constant(1.0);
//! let lsd = LsdSolution::compute(&f, 1.0, EquationVariant::default(),
//!     &SolverConfig::default(), &LsdGrid::default()).unwrap();
//! assert!((lsd.cdf_at(4.0) - 1.0).abs() < 1e-3);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

/// Version of this library, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod error;
pub mod lsd;
pub mod matrix;
pub mod process;
pub mod spectra;
pub mod verify;

pub use error::{Error, Result};
pub use lsd::{
    lsd_cdf, lsd_density, mp_oracle, quadrature_integral, solve_stieltjes, support_estimate,
    EquationVariant, LsdGrid, LsdSolution, MarchenkoPastur, SolverConfig, StieltjesSolver,
};
pub use matrix::{
    build_circulant, build_omega, build_toeplitz_gamma, build_x, gram, shift_representation_check,
    simulate_x, DenseMatrix, MatrixShape,
};
pub use num_complex::Complex64;
pub use process::{
    spectral_density, CoefficientModel, InnovationDistribution, InnovationSpec, ProcessSpec,
    SpectralDensity,
};
pub use spectra::{ks_distance, symmetric_eigenvalues, wasserstein1, Cdf, EmpiricalSpectrum};
pub use verify::{
    calibrate_equation_variant, convergence_study, mix_seed, run_ensemble, simulate_ensemble, trace_moment_check,
    EnsembleConfig, EnsembleReport, StudyConfig,
};
