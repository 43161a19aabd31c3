//! Finite-temperature baths via thermofield doubling.
//!
//! Each thermal mode `a_k = √(n̄_k+1) c_k + √n̄_k d_k†` splits into an emitting
//! `c` channel and an absorbing `d` channel of a zero-temperature bath. The
//! resulting kernel enters the hierarchy through a single-exponential fit.

use num_complex::Complex64;
use serde::Serialize;

use crate::correlations::{fit_exponential, thermal_occupation, ExponentialFit, ExponentialKernel, ThermalKernelSpec};
use crate::error::{Error, Result};
use crate::hierarchy::{propagate_with, CorrectionMode, PropagateOptions, SystemSpec};
use crate::series::TimeSeries;

/// Default largest admissible fit residual `max|fit - α_T| / α_T(0)`.
pub const DEFAULT_FIT_THRESHOLD: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermofieldMode {
    pub frequency: f64,
    pub coupling: f64,
    pub occupation: f64,
    /// `√(n̄ + 1)`.
    pub c_weight: f64,
    /// `√n̄`.
    pub d_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermofieldMap {
    pub temperature: f64,
    pub modes: Vec<ThermofieldMode>,
}

impl ThermofieldMap {
    /// Largest `|c² - d² - 1| / (1 + n̄)` over the modes; a few ulps at most.
    pub fn weight_identity_defect(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| (m.c_weight * m.c_weight - m.d_weight * m.d_weight - 1.0).abs() / (1.0 + m.occupation))
            .fold(0.0, f64::max)
    }

    /// Thermofield map on the quadrature grid of `spec`.
    pub fn from_spec(spec: &ThermalKernelSpec) -> Result<Self> {
        let modes: Vec<(f64, f64)> = spec
            .modes()?
            .iter()
            .map(|m| (m.frequency, m.weight.sqrt()))
            .collect();
        build_thermofield(&modes, spec.temperature)
    }
}

/// Bogoliubov weights for modes `(ω_k, g_k)` at temperature `T`.
pub fn build_thermofield(modes: &[(f64, f64)], temperature: f64) -> Result<ThermofieldMap> {
    let modes = modes
        .iter()
        .map(|&(frequency, coupling)| {
            if !coupling.is_finite() {
                return Err(Error::Input(format!("mode coupling must be finite, got {coupling}")));
            }
            let occupation = thermal_occupation(frequency, temperature)?;
            Ok(ThermofieldMode {
                frequency,
                coupling,
                occupation,
                c_weight: (occupation + 1.0).sqrt(),
                d_weight: occupation.sqrt(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ThermofieldMap { temperature, modes })
}

/// `α_T(τ) = Σ_k |g_k|² [(n̄_k+1) e^{-iω_k τ} + n̄_k e^{iω_k τ}]`.
pub fn thermal_kernel_from_map(map: &ThermofieldMap, lag: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for m in &map.modes {
        let g2 = m.coupling * m.coupling;
        let phase = Complex64::from_polar(1.0, -m.frequency * lag);
        acc += g2 * ((m.occupation + 1.0) * phase + m.occupation * phase.conj());
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteTOptions {
    pub fit_threshold: f64,
    /// Fit samples are taken on `[0, fit_window / γ]`.
    pub fit_window: f64,
    pub fit_samples: usize,
    pub propagate: PropagateOptions,
}

impl Default for FiniteTOptions {
    fn default() -> Self {
        Self {
            fit_threshold: DEFAULT_FIT_THRESHOLD,
            fit_window: 4.0,
            fit_samples: 41,
            propagate: PropagateOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteTSolution {
    /// Diagnostics carry `fit_residual` when a fit was made.
    pub series: TimeSeries<f64>,
    /// Kernel handed to the hierarchy.
    pub kernel: ExponentialKernel<f64>,
    pub correction: CorrectionMode,
    /// `None` at `T = 0`, where the analytic kernel is used directly.
    pub fit: Option<ExponentialFit<f64>>,
}

/// Fits `α_T` on `[0, fit_window/γ]` to a single complex exponential.
pub fn fit_thermal_kernel(spec: &ThermalKernelSpec, opts: &FiniteTOptions) -> Result<ExponentialFit<f64>> {
    if opts.fit_samples < 3 || !(opts.fit_window > 0.0) {
        return Err(Error::Config("fit needs at least 3 samples over a positive window".into()));
    }
    let map = ThermofieldMap::from_spec(spec)?;
    let span = opts.fit_window / spec.width;
    let samples: Vec<(f64, Complex64)> = (0..opts.fit_samples)
        .map(|i| {
            let tau = span * i as f64 / (opts.fit_samples - 1) as f64;
            let mut v = thermal_kernel_from_map(&map, tau);
            if i == 0 {
                v.im = 0.0;
            }
            (tau, v)
        })
        .collect();
    fit_exponential(&samples)
}

/// Finite-temperature Bloch dynamics with default options.
pub fn solve_finite_t(
    spec: &ThermalKernelSpec,
    omega: f64,
    initial: [f64; 3],
    order: usize,
    dt: f64,
    t_max: f64,
) -> Result<FiniteTSolution> {
    solve_finite_t_with(spec, omega, initial, order, dt, t_max, &FiniteTOptions::default())
}

/// Runs the hierarchy with the sigma-x-freeze correction on the fitted kernel.
///
/// `T = 0` skips the fit and uses the analytic exponential kernel.
pub fn solve_finite_t_with(
    spec: &ThermalKernelSpec,
    omega: f64,
    initial: [f64; 3],
    order: usize,
    dt: f64,
    t_max: f64,
    opts: &FiniteTOptions,
) -> Result<FiniteTSolution> {
    spec.validate()?;
    let (kernel, fit) = if spec.temperature == 0.0 {
        (spec.zero_temperature_kernel()?, None)
    } else {
        let fit = fit_thermal_kernel(spec, opts)?;
        if !(fit.residual <= opts.fit_threshold) {
            return Err(Error::ModelInadequacy {
                residual: fit.residual,
                threshold: opts.fit_threshold,
                temperature: spec.temperature,
            });
        }
        (fit.kernel, Some(fit))
    };
    let correction = if kernel.is_real() {
        CorrectionMode::None
    } else {
        CorrectionMode::SigmaXFreeze
    };
    let sys = SystemSpec::new(omega, kernel, initial, correction)?;
    let mut series = propagate_with(&sys, order, dt, t_max, &opts.propagate)?.series;
    series.diagnostics.fit_residual = fit.map(|f| f.residual);
    Ok(FiniteTSolution {
        series,
        kernel,
        correction,
        fit,
    })
}
