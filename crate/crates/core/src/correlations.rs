//! Bath correlation kernels.
//!
//! The hierarchy only understands the single-pole family
//! `α(τ) = a·exp(-(γ + iΩ)τ)` for `τ ≥ 0` (Hermitian continuation for `τ < 0`).
//! Finite-temperature kernels are evaluated by quadrature over a Lorentzian
//! spectral density and reach the hierarchy through [`fit_exponential`].

use num_complex::{Complex, Complex64};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cplx, Real};

/// `α(τ) = a·exp(-(γ + iΩ)|τ|)`, conjugated for negative lag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialKernel<T: Real> {
    /// Value at zero lag (energy²).
    pub amplitude: T,
    /// Inverse memory time γ.
    pub decay: T,
    /// Modulation frequency Ω; zero gives the real Ornstein-Uhlenbeck kernel.
    pub modulation: T,
}

impl<T: Real> ExponentialKernel<T> {
    pub fn new(amplitude: T, decay: T, modulation: T) -> Result<Self> {
        if !(amplitude.is_finite() && decay.is_finite() && modulation.is_finite()) {
            return Err(Error::Input("kernel parameters must be finite".into()));
        }
        if amplitude <= T::zero() {
            return Err(Error::Domain(format!("kernel amplitude must be > 0, got {amplitude}")));
        }
        if decay <= T::zero() {
            return Err(Error::Domain(format!("kernel decay must be > 0, got {decay}")));
        }
        Ok(Self {
            amplitude,
            decay,
            modulation,
        })
    }

    /// Ornstein-Uhlenbeck kernel `(Γγ/2)·exp(-γ|τ|)`.
    pub fn ornstein_uhlenbeck(strength: T, decay: T) -> Result<Self> {
        Self::new(strength * decay / T::lit(2.0), decay, T::zero())
    }

    /// `(Γγ/2)·exp(-(γ + iΩ)|τ|)`.
    pub fn from_strength(strength: T, decay: T, modulation: T) -> Result<Self> {
        Self::new(strength * decay / T::lit(2.0), decay, modulation)
    }

    /// Coupling strength Γ = 2a/γ.
    pub fn strength(&self) -> T {
        T::lit(2.0) * self.amplitude / self.decay
    }

    pub fn is_real(&self) -> bool {
        self.modulation == T::zero()
    }

    /// γ + iΩ, the rate entering the ladder equations.
    pub fn complex_decay(&self) -> Complex<T> {
        cplx(self.decay, self.modulation)
    }

    pub fn eval(&self, lag: T) -> Result<Complex<T>> {
        if !lag.is_finite() {
            return Err(Error::Input(format!("kernel lag must be finite, got {lag}")));
        }
        Ok(self.eval_unchecked(lag))
    }

    #[inline]
    pub fn eval_unchecked(&self, lag: T) -> Complex<T> {
        let tau = lag.abs();
        let env = self.amplitude * (-self.decay * tau).exp();
        let phase = self.modulation * tau;
        let v = cplx(env * phase.cos(), -env * phase.sin());
        if lag < T::zero() {
            v.conj()
        } else {
            v
        }
    }
}

/// Bose-Einstein occupation `1/(exp(ω/T) - 1)`; zero at `T = 0`.
pub fn thermal_occupation<T: Real>(mode_freq: T, temperature: T) -> Result<T> {
    if !(mode_freq > T::zero()) {
        return Err(Error::Domain(format!(
            "thermal occupation needs a positive mode frequency, got {mode_freq}"
        )));
    }
    if !(temperature >= T::zero()) || !temperature.is_finite() {
        return Err(Error::Domain(format!("temperature must be finite and >= 0, got {temperature}")));
    }
    if temperature == T::zero() {
        return Ok(T::zero());
    }
    Ok(T::one() / (mode_freq / temperature).exp_m1())
}

/// `v(t) = 4 ∫_0^t Im α(τ) dτ` in closed form.
pub fn hamiltonian_shift_v<T: Real>(kernel: &ExponentialKernel<T>, t: T) -> Result<T> {
    if !t.is_finite() || t < T::zero() {
        return Err(Error::Input(format!("shift time must be finite and >= 0, got {t}")));
    }
    Ok(shift_unchecked(kernel, t))
}

#[inline]
pub(crate) fn shift_unchecked<T: Real>(kernel: &ExponentialKernel<T>, t: T) -> T {
    let (a, g, w) = (kernel.amplitude, kernel.decay, kernel.modulation);
    if w == T::zero() || t == T::zero() {
        return T::zero();
    }
    let (s, c) = (w * t).sin_cos();
    let integral = (w - (-g * t).exp() * (g * s + w * c)) / (g * g + w * w);
    -T::lit(4.0) * a * integral
}

/// Result of [`fit_exponential`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit<T: Real> {
    pub kernel: ExponentialKernel<T>,
    /// `max_k |fit(τ_k) - sample_k| / a` over the supplied samples.
    pub residual: T,
}

/// Fits `a·exp(-(γ + iΩ)τ)` to kernel samples.
///
/// `a` is pinned to the zero-lag sample; `γ` and `Ω` come from a least-squares
/// line through the origin of `log|α/a|` and the unwrapped phase of `α/a`.
pub fn fit_exponential<T: Real>(samples: &[(T, Complex<T>)]) -> Result<ExponentialFit<T>> {
    if samples.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 samples, got {}", samples.len())));
    }
    let mut pts: Vec<(T, Complex<T>)> = samples.to_vec();
    if pts.iter().any(|(t, v)| !t.is_finite() || !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Fit("samples must be finite".into()));
    }
    if pts.iter().any(|(t, _)| *t < T::zero()) {
        return Err(Error::Fit("sample lags must be >= 0".into()));
    }
    pts.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite lags"));
    if pts.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::Fit("sample lags must be distinct".into()));
    }
    if pts[0].0 != T::zero() {
        return Err(Error::Fit("a sample at lag 0 is required".into()));
    }
    let s0 = pts[0].1;
    if !(s0.re > T::zero()) || s0.im.abs() > T::lit(1e-9) * s0.norm() {
        return Err(Error::Fit(format!("zero-lag sample must be real and positive, got {s0}")));
    }
    let a = s0.re;
    let tiny = a * T::lit(1e-12);

    let mut sum_tt = T::zero();
    let mut sum_tl = T::zero();
    let mut sum_tp = T::zero();
    let mut prev_phase = T::zero();
    let two_pi = T::lit(2.0) * T::PI();
    for &(tau, val) in &pts[1..] {
        let r = val / a;
        let mag = val.norm();
        if !(mag > tiny) {
            return Err(Error::Fit(format!(
                "sample at lag {tau} has |α| = {:e}, which crosses zero relative to α(0) = {a}; a log-linear fit is undefined",
                mag.to_f64_lossy()
            )));
        }
        let mut phase = r.arg();
        while phase - prev_phase > T::PI() {
            phase -= two_pi;
        }
        while phase - prev_phase < -T::PI() {
            phase += two_pi;
        }
        prev_phase = phase;
        sum_tt += tau * tau;
        sum_tl += tau * (mag / a).ln();
        sum_tp += tau * phase;
    }
    let decay = -sum_tl / sum_tt;
    let modulation = -sum_tp / sum_tt;
    if !(decay > T::zero()) {
        return Err(Error::Fit(format!("fitted decay {decay} is not positive; samples do not decay")));
    }
    let kernel = ExponentialKernel::new(a, decay, modulation)?;
    let residual = pts
        .iter()
        .map(|&(tau, v)| (kernel.eval_unchecked(tau) - v).norm() / a)
        .fold(T::zero(), T::max);
    Ok(ExponentialFit { kernel, residual })
}

/// Positive-frequency quadrature grid; nodes are geometrically spaced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyGrid {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl FrequencyGrid {
    /// 2000 nodes on `[1e-3, center + 20γ]`.
    pub fn default_for(center: f64, width: f64) -> Self {
        Self {
            min: 1e-3,
            max: center.max(0.0) + 20.0 * width,
            n: 2000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("frequency grid is empty".into()));
        }
        if self.n < 2 {
            return Err(Error::Config("frequency grid needs at least 2 nodes".into()));
        }
        if !(self.min > 0.0) || !self.min.is_finite() {
            return Err(Error::Config(format!(
                "frequency grid must start at a positive frequency, got {}",
                self.min
            )));
        }
        if !(self.max > self.min) || !self.max.is_finite() {
            return Err(Error::Config(format!(
                "frequency grid max {} must exceed min {}",
                self.max, self.min
            )));
        }
        Ok(())
    }

    /// Nodes and trapezoid weights.
    pub fn nodes(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let ratio = (self.max / self.min).ln() / (n - 1) as f64;
        let w: Vec<f64> = (0..n)
            .map(|k| {
                if k == n - 1 {
                    self.max
                } else {
                    self.min * (ratio * k as f64).exp()
                }
            })
            .collect();
        let mut q = vec![0.0; n];
        for k in 0..n - 1 {
            let h = w[k + 1] - w[k];
            q[k] += 0.5 * h;
            q[k + 1] += 0.5 * h;
        }
        (w, q)
    }

    /// Same range with `factor` times as many intervals.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            n: (self.n - 1) * factor + 1,
            ..*self
        }
    }
}

/// Discrete bath mode: angular frequency and squared coupling `|g_k|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralMode {
    pub frequency: f64,
    pub weight: f64,
}

/// Lorentzian bath at temperature `T`.
///
/// The Lorentzian `S(ω) = (Γγ²/2π) / (γ² + (ω - center)²)` is sampled on the
/// positive-frequency grid and renormalized so that the zero-temperature kernel
/// has `α(0) = Γγ/2`, the amplitude of the matching exponential kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalKernelSpec {
    pub strength: f64,
    pub width: f64,
    pub center: f64,
    pub temperature: f64,
    pub grid: FrequencyGrid,
}

impl ThermalKernelSpec {
    pub fn new(strength: f64, width: f64, center: f64, temperature: f64) -> Result<Self> {
        let spec = Self {
            strength,
            width,
            center,
            temperature,
            grid: FrequencyGrid::default_for(center, width),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_grid(mut self, grid: FrequencyGrid) -> Result<Self> {
        self.grid = grid;
        self.validate()?;
        Ok(self)
    }

    pub fn with_temperature(mut self, temperature: f64) -> Result<Self> {
        self.temperature = temperature;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.strength > 0.0 && self.strength.is_finite()) {
            return Err(Error::Domain(format!("Gamma must be > 0, got {}", self.strength)));
        }
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::Domain(format!("gamma must be > 0, got {}", self.width)));
        }
        if !self.center.is_finite() {
            return Err(Error::Input("Lorentzian center must be finite".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::Domain(format!("T must be >= 0, got {}", self.temperature)));
        }
        self.grid.validate()
    }

    /// Zero-lag value of the corresponding zero-temperature kernel.
    pub fn amplitude(&self) -> f64 {
        0.5 * self.strength * self.width
    }

    pub fn spectral_density(&self, omega: f64) -> f64 {
        let g = self.width;
        let d = omega - self.center;
        self.amplitude() / std::f64::consts::PI * g / (g * g + d * d)
    }

    /// The analytic zero-temperature exponential kernel this bath approximates.
    pub fn zero_temperature_kernel(&self) -> Result<ExponentialKernel<f64>> {
        ExponentialKernel::new(self.amplitude(), self.width, self.center)
    }

    /// Quadrature modes `(ω_k, |g_k|²)`, normalized to `Σ|g_k|² = Γγ/2`.
    pub fn modes(&self) -> Result<Vec<SpectralMode>> {
        self.grid.validate()?;
        let (w, q) = self.grid.nodes();
        let raw: Vec<f64> = w.iter().zip(&q).map(|(&om, &h)| h * self.spectral_density(om)).collect();
        let total: f64 = raw.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Config("spectral density has no weight on the grid".into()));
        }
        let norm = self.amplitude() / total;
        Ok(w
            .into_iter()
            .zip(raw)
            .map(|(frequency, r)| SpectralMode {
                frequency,
                weight: r * norm,
            })
            .collect())
    }
}

/// `α_T(τ) = Σ_k |g_k|² [(n̄_k + 1) e^{-iω_k τ} + n̄_k e^{iω_k τ}]` on the spec's grid.
pub fn eval_thermal_kernel(spec: &ThermalKernelSpec, lag: f64) -> Result<Complex64> {
    if !lag.is_finite() {
        return Err(Error::Input(format!("kernel lag must be finite, got {lag}")));
    }
    let modes = spec.modes()?;
    let mut acc = Complex64::new(0.0, 0.0);
    for m in &modes {
        let nbar = thermal_occupation(m.frequency, spec.temperature)?;
        let phase = Complex64::from_polar(1.0, -m.frequency * lag);
        acc += m.weight * ((nbar + 1.0) * phase + nbar * phase.conj());
    }
    Ok(acc)
}

/// Kernel type tag of the JSON kernel spec.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelType {
    Ou,
    ComplexExp,
    Thermal,
}

/// JSON kernel spec:
/// `{"type": "ou"|"complex-exp"|"thermal", "Gamma", "gamma", "Omega", "T", "grid": {"min","max","n"}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    #[serde(rename = "type")]
    pub kind: KernelType,
    #[serde(rename = "Gamma")]
    pub strength: f64,
    pub gamma: f64,
    #[serde(rename = "Omega", default, skip_serializing_if = "Option::is_none")]
    pub modulation: Option<f64>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<FrequencyGrid>,
}

/// A validated kernel spec.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    Exponential(ExponentialKernel<f64>),
    Thermal(ThermalKernelSpec),
}

impl KernelConfig {
    pub fn ou(strength: f64, gamma: f64) -> Self {
        Self {
            kind: KernelType::Ou,
            strength,
            gamma,
            modulation: None,
            temperature: None,
            grid: None,
        }
    }

    pub fn resolve(&self) -> Result<KernelSpec> {
        let omega = self.modulation.unwrap_or(0.0);
        match self.kind {
            KernelType::Ou | KernelType::ComplexExp => {
                if self.grid.is_some() {
                    return Err(Error::Config("\"grid\" only applies to thermal kernels".into()));
                }
                if self.temperature.is_some_and(|t| t != 0.0) {
                    return Err(Error::Config(
                        "exponential kernels are zero-temperature; use type \"thermal\" for T > 0".into(),
                    ));
                }
                if self.kind == KernelType::Ou && omega != 0.0 {
                    return Err(Error::Config("\"ou\" kernels are real; Omega must be 0".into()));
                }
                if !(self.strength > 0.0) {
                    return Err(Error::Config(format!("Gamma must be > 0, got {}", self.strength)));
                }
                if !(self.gamma > 0.0) {
                    return Err(Error::Config(format!("gamma must be > 0, got {}", self.gamma)));
                }
                Ok(KernelSpec::Exponential(
                    ExponentialKernel::from_strength(self.strength, self.gamma, omega)
                        .map_err(|e| Error::Config(e.to_string()))?,
                ))
            }
            KernelType::Thermal => {
                let t = self.temperature.unwrap_or(0.0);
                let grid = self
                    .grid
                    .unwrap_or_else(|| FrequencyGrid::default_for(omega, self.gamma));
                let spec = ThermalKernelSpec {
                    strength: self.strength,
                    width: self.gamma,
                    center: omega,
                    temperature: t,
                    grid,
                };
                spec.validate().map_err(|e| Error::Config(e.to_string()))?;
                Ok(KernelSpec::Thermal(spec))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn reference_kernel() -> ExponentialKernel<f64> {
        ExponentialKernel::ornstein_uhlenbeck(1.0, 0.2).unwrap()
    }

    #[test]
    fn eval_examples() {
        let k = reference_kernel();
        assert_eq!(k.amplitude, 0.1);
        assert_eq!(k.eval(0.0).unwrap(), Complex::new(0.1, 0.0));
        assert_relative_eq!(k.eval(5.0).unwrap().re, 0.1 * (-1.0f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(0.1 * (-1.0f64).exp(), 0.0367879, epsilon = 1e-7);

        let kc = ExponentialKernel::new(0.1, 0.2, 1.0).unwrap();
        let v = kc.eval(std::f64::consts::PI).unwrap();
        let expect = -0.1 * (-0.2 * std::f64::consts::PI).exp();
        assert_relative_eq!(v.re, expect, epsilon = 1e-15);
        assert!(v.im.abs() < 1e-16);
    }

    #[test]
    fn eval_rejects_non_finite_lag() {
        assert!(matches!(reference_kernel().eval(f64::NAN), Err(Error::Input(_))));
        assert!(matches!(reference_kernel().eval(f64::INFINITY), Err(Error::Input(_))));
    }

    #[test]
    fn kernel_validation() {
        assert!(ExponentialKernel::new(0.0, 0.2, 0.0).is_err());
        assert!(ExponentialKernel::new(0.1, -0.2, 0.0).is_err());
        assert!(ExponentialKernel::new(0.1, 0.2, f64::NAN).is_err());
    }

    #[test]
    fn occupation_examples() {
        assert_relative_eq!(thermal_occupation(2f64.ln(), 1.0).unwrap(), 1.0, epsilon = 1e-14);
        assert_eq!(thermal_occupation(1.0, 0.0).unwrap(), 0.0);
        assert_relative_eq!(
            thermal_occupation(1.0, 1.0).unwrap(),
            1.0 / (std::f64::consts::E - 1.0),
            epsilon = 1e-15
        );
        assert_relative_eq!(thermal_occupation(1.0, 1.0).unwrap(), 0.5819767, epsilon = 1e-7);
        assert!(matches!(thermal_occupation(0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(thermal_occupation(-1.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(thermal_occupation(1.0, -1.0), Err(Error::Domain(_))));
    }

    /// Adaptive Simpson quadrature, used as an oracle for closed forms.
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
        fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                    + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
            }
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
    }

    #[test]
    fn shift_examples() {
        assert_eq!(hamiltonian_shift_v(&reference_kernel(), 7.3).unwrap(), 0.0);
        let kc = ExponentialKernel::new(0.1, 0.2, 1.0).unwrap();
        assert_eq!(hamiltonian_shift_v(&kc, 0.0).unwrap(), 0.0);
        let oracle = simpson(&|s: f64| 4.0 * kc.eval_unchecked(s).im, 0.0, 2.0, 1e-13);
        assert!((hamiltonian_shift_v(&kc, 2.0).unwrap() - oracle).abs() < 1e-9);
        assert!(hamiltonian_shift_v(&kc, -1.0).is_err());
    }

    #[test]
    fn fit_recovers_real_kernel() {
        let k = reference_kernel();
        let samples: Vec<_> = (0..=10).map(|i| (i as f64, k.eval_unchecked(i as f64))).collect();
        let fit = fit_exponential(&samples).unwrap();
        assert!((fit.kernel.amplitude - 0.1).abs() < 1e-10);
        assert!((fit.kernel.decay - 0.2).abs() < 1e-10);
        assert!(fit.kernel.modulation.abs() < 1e-10);
        assert!(fit.residual < 1e-8);
    }

    #[test]
    fn fit_recovers_complex_kernel() {
        let k = ExponentialKernel::new(0.1, 0.2, 0.7).unwrap();
        let samples: Vec<_> = (0..=10).map(|i| (i as f64, k.eval_unchecked(i as f64))).collect();
        let fit = fit_exponential(&samples).unwrap();
        assert!((fit.kernel.amplitude - 0.1).abs() < 1e-8);
        assert!((fit.kernel.decay - 0.2).abs() < 1e-8);
        assert!((fit.kernel.modulation - 0.7).abs() < 1e-8);
    }

    #[test]
    fn fit_rejects_bad_input() {
        let k = reference_kernel();
        let two: Vec<_> = (0..2).map(|i| (i as f64, k.eval_unchecked(i as f64))).collect();
        assert!(matches!(fit_exponential(&two), Err(Error::Fit(_))));
        let no_zero: Vec<_> = (1..5).map(|i| (i as f64, k.eval_unchecked(i as f64))).collect();
        assert!(matches!(fit_exponential(&no_zero), Err(Error::Fit(_))));
        let crossing = vec![
            (0.0, Complex::new(1.0, 0.0)),
            (1.0, Complex::new(0.5, 0.0)),
            (2.0, Complex::new(0.0, 0.0)),
        ];
        let err = fit_exponential(&crossing).unwrap_err();
        assert!(err.to_string().contains("crosses zero"), "{err}");
    }

    #[test]
    fn thermal_zero_temperature_matches_discretized_kernel() {
        let spec = ThermalKernelSpec::new(1.0, 0.2, 1.0, 0.0).unwrap();
        let modes = spec.modes().unwrap();
        for &tau in &[0.0, 0.7, 3.0, 12.0] {
            let direct: Complex64 = modes
                .iter()
                .map(|m| m.weight * Complex64::from_polar(1.0, -m.frequency * tau))
                .sum();
            let v = eval_thermal_kernel(&spec, tau).unwrap();
            assert!((v - direct).norm() < 1e-15);
        }
    }

    #[test]
    fn thermal_zero_lag_is_real_sum() {
        let spec = ThermalKernelSpec::new(1.0, 0.2, 1.0, 0.5).unwrap();
        let v = eval_thermal_kernel(&spec, 0.0).unwrap();
        let expect: f64 = spec
            .modes()
            .unwrap()
            .iter()
            .map(|m| m.weight * (2.0 * thermal_occupation(m.frequency, 0.5).unwrap() + 1.0))
            .sum();
        assert_eq!(v.im, 0.0);
        assert!(v.re > 0.0);
        assert_relative_eq!(v.re, expect, max_relative = 1e-13);
    }

    #[test]
    fn thermal_quadrature_converged() {
        // Independent refined quadrature at ten times the grid density.
        let spec = ThermalKernelSpec::new(1.0, 0.2, 1.0, 0.5).unwrap();
        let fine = spec.with_grid(spec.grid.refined(10)).unwrap();
        let coarse = eval_thermal_kernel(&spec, 1.0).unwrap();
        let refined = eval_thermal_kernel(&fine, 1.0).unwrap();
        assert!((coarse - refined).norm() < 1e-6, "{}", (coarse - refined).norm());
    }

    #[test]
    fn thermal_continuity_to_zero_temperature() {
        let spec0 = ThermalKernelSpec::new(1.0, 0.2, 1.0, 0.0).unwrap();
        let spec_t = spec0.with_temperature(1e-6).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..=100 {
            let tau = 5.0 / 0.2 * i as f64 / 100.0;
            let d = eval_thermal_kernel(&spec_t, tau).unwrap() - eval_thermal_kernel(&spec0, tau).unwrap();
            worst = worst.max(d.norm());
        }
        assert!(worst < 1e-4);
    }

    #[test]
    fn thermal_empty_grid_is_config_error() {
        let spec = ThermalKernelSpec::new(1.0, 0.2, 1.0, 0.5).unwrap();
        let mut bad = spec;
        bad.grid.n = 0;
        assert!(matches!(eval_thermal_kernel(&bad, 1.0), Err(Error::Config(_))));
    }

    #[test]
    fn thermal_fit_regression() {
        let spec = ThermalKernelSpec::new(1.0, 0.2, 1.0, 0.1).unwrap();
        let samples: Vec<_> = (0..=40)
            .map(|i| {
                let tau = i as f64 * 0.5;
                (tau, eval_thermal_kernel(&spec, tau).unwrap())
            })
            .collect();
        let fit = fit_exponential(&samples).unwrap();
        assert!(
            (fit.residual - THERMAL_FIT_RESIDUAL_T01).abs() < 1e-9,
            "residual {:.12}",
            fit.residual
        );
    }

    // Frozen from the first verified run (Γ=1, γ=0.2, center 1, T=0.1, lags 0..20 step 0.5).
    const THERMAL_FIT_RESIDUAL_T01: f64 = 0.3864148405900172;

    #[test]
    fn kernel_json_rejects_unknown_fields() {
        let err = serde_json::from_str::<KernelConfig>(r#"{"type":"ou","Gamma":1,"gamma":0.2,"beta":3}"#);
        assert!(err.is_err());
        let ok: KernelConfig = serde_json::from_str(r#"{"type":"ou","Gamma":1,"gamma":0.2}"#).unwrap();
        assert!(matches!(ok.resolve().unwrap(), KernelSpec::Exponential(k) if k.amplitude == 0.1));
        let bad: KernelConfig = serde_json::from_str(r#"{"type":"ou","Gamma":1,"gamma":0.2,"Omega":1}"#).unwrap();
        assert!(bad.resolve().is_err());
        let th: KernelConfig = serde_json::from_str(
            r#"{"type":"thermal","Gamma":1,"gamma":0.2,"Omega":1,"T":0.5,"grid":{"min":0.01,"max":5,"n":100}}"#,
        )
        .unwrap();
        assert!(matches!(th.resolve().unwrap(), KernelSpec::Thermal(s) if s.grid.n == 100));
    }

    proptest! {
        #[test]
        fn hermitian_symmetry(a in 0.01f64..2.0, g in 0.01f64..3.0, w in -3.0f64..3.0, tau in -50.0f64..50.0) {
            let k = ExponentialKernel::new(a, g, w).unwrap();
            let d = k.eval(-tau).unwrap() - k.eval(tau).unwrap().conj();
            prop_assert!(d.norm() == 0.0);
            let z = k.eval(0.0).unwrap();
            prop_assert!(z.im == 0.0 && z.re == a);
        }

        #[test]
        fn real_kernel_is_real(a in 0.01f64..2.0, g in 0.01f64..3.0, tau in -50.0f64..50.0) {
            let k = ExponentialKernel::new(a, g, 0.0).unwrap();
            prop_assert_eq!(k.eval(tau).unwrap().im, 0.0);
        }

        #[test]
        fn fit_exact_on_family(a in 0.01f64..2.0, g in 0.05f64..1.0, w in -1.5f64..1.5) {
            let k = ExponentialKernel::new(a, g, w).unwrap();
            let samples: Vec<_> = (0..=12).map(|i| (i as f64 * 0.4, k.eval_unchecked(i as f64 * 0.4))).collect();
            let fit = fit_exponential(&samples).unwrap();
            prop_assert!(fit.residual < 1e-8);
        }

        #[test]
        fn thermal_hermitian(t in 0.0f64..1.0, tau in 0.0f64..30.0) {
            let mut spec = ThermalKernelSpec::new(1.0, 0.2, 1.0, t).unwrap();
            spec.grid.n = 200;
            let d = eval_thermal_kernel(&spec, -tau).unwrap() - eval_thermal_kernel(&spec, tau).unwrap().conj();
            prop_assert!(d.norm() < 1e-14);
        }
    }
}
