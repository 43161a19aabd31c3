//! Noiseless non-Markovian Bloch equations for the spin-boson model.
//!
//! The core solver ([`hierarchy`]) integrates the Bloch vector together with a
//! truncated ladder of 3x3 matrices. [`oracle`] (exact spin⊗Fock evolution) and
//! [`stochastic`] (Monte Carlo over colored noise) provide independent checks;
//! [`thermal`] routes finite-temperature baths into the hierarchy.

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correlations;
pub mod error;
pub mod hierarchy;
pub mod matrix;
pub mod oracle;
pub mod scalar;
pub mod series;
pub mod stochastic;
pub mod thermal;

pub use correlations::{
    eval_thermal_kernel, fit_exponential, hamiltonian_shift_v, thermal_occupation, ExponentialFit, FrequencyGrid,
    KernelConfig, KernelSpec, KernelType, SpectralMode, ThermalKernelSpec,
};
pub use error::{Error, Result};
pub use hierarchy::{
    hierarchy_rhs, markov_limit_reference, propagate, propagate_with, CorrectionMode, PropagateOptions, Propagation,
};
pub use oracle::{
    discretize, discretize_with, evolve_exact, evolve_exact_with, BathDiscretization, BathMode, DiscretizationScheme,
    DiscretizeOptions, OracleOptions, OracleRun, SpinState,
};
pub use scalar::Real;
pub use series::{Diagnostics, Record, TimeSeries};
pub use stochastic::{
    ensemble_mean, generate_noise, trajectory, EnsembleOptions, EnsembleSeries, Execution, NoiseGrid, NoisePath,
    Trajectory,
};
pub use thermal::{
    build_thermofield, solve_finite_t, solve_finite_t_with, thermal_kernel_from_map, FiniteTOptions, FiniteTSolution,
    ThermofieldMap, ThermofieldMode,
};

pub type ExponentialKernel = correlations::ExponentialKernel<f64>;
pub type SystemSpec = hierarchy::SystemSpec<f64>;
pub type HierarchyState = hierarchy::HierarchyState<f64>;
pub type GeneratorMatrix = matrix::GeneratorMatrix<f64>;
pub type BlochVector = matrix::BlochVector<f64>;
pub type Series = series::TimeSeries<f64>;

pub type ExponentialKernelF32 = correlations::ExponentialKernel<f32>;
pub type SystemSpecF32 = hierarchy::SystemSpec<f32>;
