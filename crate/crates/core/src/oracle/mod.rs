//! Exact-bath reference: a finite set of bosonic modes and the full
//! spin⊗Fock Schrödinger evolution of
//!
//! ```text
//! H = (ω/2) σz + Σ_k ω_k a_k† a_k + σx Σ_k g_k (a_k + a_k†)
//! ```
//!
//! The modes are chosen so that `Σ_k g_k² e^{-iω_k τ}` reproduces the target
//! kernel on `[0, t_max]`. Useful horizons are bounded by that window and by
//! the recurrence time of the finite bath.

pub mod basis;
pub mod chebyshev;
pub mod nnls;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlations::ExponentialKernel;
use crate::error::{Error, Result};
use crate::hierarchy::step_grid;
use crate::series::{Diagnostics, Record, TimeSeries};

pub use basis::{fock_dimension, FockBasis};
pub use chebyshev::ChebyshevPropagator;

/// Largest admissible relative reconstruction error `sup|α_M - α| / a`.
pub const MAX_RECONSTRUCTION_ERROR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathMode {
    pub frequency: f64,
    pub coupling: f64,
}

/// How mode weights are chosen on the uniform frequency grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiscretizationScheme {
    /// Non-negative weights minimizing the sup-norm reconstruction error on `[0, t_max]`.
    #[default]
    Minimax,
    /// `g_k² = S(ω_k) Δω` with the Lorentzian spectral density.
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscretizeOptions {
    pub scheme: DiscretizationScheme,
    /// Total-excitation cutoff stored with the discretization.
    pub cutoff: usize,
    /// Half-width `W` of the frequency window; default `max(8γ, 4ω)`.
    pub bandwidth: Option<f64>,
    /// Spin splitting used for the default bandwidth.
    pub splitting: f64,
}

impl Default for DiscretizeOptions {
    fn default() -> Self {
        Self {
            scheme: DiscretizationScheme::Minimax,
            cutoff: 3,
            bandwidth: None,
            splitting: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BathDiscretization {
    pub modes: Vec<BathMode>,
    pub cutoff: usize,
    /// `sup_{τ ∈ [0, t_max]} |Σ g_k² e^{-iω_k τ} - α(τ)|`.
    pub reconstruction_error: f64,
    pub amplitude: f64,
    pub t_max: f64,
    pub bandwidth: f64,
}

impl BathDiscretization {
    pub fn reconstructed(&self, lag: f64) -> Complex64 {
        reconstruct(&self.modes, lag)
    }

    /// `Σ g_k²`, the reconstructed kernel at zero lag.
    pub fn total_weight(&self) -> f64 {
        self.modes.iter().map(|m| m.coupling * m.coupling).sum()
    }

    /// Modes with nonzero coupling; the others never leave the vacuum.
    pub fn active_modes(&self) -> Vec<BathMode> {
        self.modes.iter().copied().filter(|m| m.coupling != 0.0).collect()
    }

    /// Spin⊗Fock dimension `2 · C(M_active + cutoff, cutoff)`.
    pub fn hilbert_dimension(&self) -> f64 {
        2.0 * fock_dimension(self.active_modes().len(), self.cutoff)
    }

    pub fn with_cutoff(&self, cutoff: usize) -> Self {
        Self { cutoff, ..self.clone() }
    }
}

fn reconstruct(modes: &[BathMode], lag: f64) -> Complex64 {
    modes
        .iter()
        .map(|m| m.coupling * m.coupling * Complex64::from_polar(1.0, -m.frequency * lag))
        .sum()
}

fn sup_error(kernel: &ExponentialKernel<f64>, modes: &[BathMode], t_max: f64) -> f64 {
    let n = if t_max > 0.0 { 2000 } else { 0 };
    (0..=n)
        .map(|i| {
            let tau = if n == 0 { 0.0 } else { t_max * i as f64 / n as f64 };
            (reconstruct(modes, tau) - kernel.eval_unchecked(tau)).norm()
        })
        .fold(0.0, f64::max)
}

/// `M` modes with the default (minimax) scheme and cutoff 3.
pub fn discretize(kernel: &ExponentialKernel<f64>, m: usize, t_max: f64) -> Result<BathDiscretization> {
    discretize_with(kernel, m, t_max, &DiscretizeOptions::default())
}

/// Places `M` cells uniformly on `[Ω - W, Ω + W]` and assigns weights to their midpoints.
pub fn discretize_with(
    kernel: &ExponentialKernel<f64>,
    m: usize,
    t_max: f64,
    opts: &DiscretizeOptions,
) -> Result<BathDiscretization> {
    if m < 2 {
        return Err(Error::Input(format!("need at least 2 bath modes, got {m}")));
    }
    if !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(Error::Input(format!("t_max must be finite and >= 0, got {t_max}")));
    }
    let (a, g, center) = (kernel.amplitude, kernel.decay, kernel.modulation);
    let w = opts
        .bandwidth
        .unwrap_or_else(|| (8.0 * g).max(4.0 * opts.splitting.abs()));
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::Input(format!("bandwidth must be > 0, got {w}")));
    }
    let dw = 2.0 * w / m as f64;
    let offsets: Vec<f64> = (0..m).map(|k| -w + (k as f64 + 0.5) * dw).collect();

    let modes: Vec<BathMode> = match opts.scheme {
        DiscretizationScheme::Sampled => offsets
            .iter()
            .map(|&nu| {
                let s = a / std::f64::consts::PI * g / (g * g + nu * nu);
                BathMode {
                    frequency: center + nu,
                    coupling: (s * dw).sqrt(),
                }
            })
            .collect(),
        DiscretizationScheme::Minimax => {
            // Pairs at Ω ± ν contribute e^{-iΩτ} 2cos(ντ) g²; fit the envelope a e^{-γτ}.
            let mut distinct: Vec<f64> = offsets.iter().filter(|&&nu| nu >= 0.0).copied().collect();
            distinct.sort_by(|x, y| x.partial_cmp(y).expect("finite offsets"));
            let weights = minimax_weights(a, g, &distinct, t_max.max(1.0 / g));
            let mut modes = Vec::new();
            for (&nu, &x) in distinct.iter().zip(&weights) {
                if x <= 0.0 {
                    continue;
                }
                if nu == 0.0 {
                    modes.push(BathMode {
                        frequency: center,
                        coupling: x.sqrt(),
                    });
                } else {
                    for f in [center - nu, center + nu] {
                        modes.push(BathMode {
                            frequency: f,
                            coupling: x.sqrt(),
                        });
                    }
                }
            }
            modes.sort_by(|x, y| x.frequency.partial_cmp(&y.frequency).expect("finite"));
            modes
        }
    };

    let err = sup_error(kernel, &modes, t_max);
    if err > MAX_RECONSTRUCTION_ERROR * a {
        return Err(Error::Discretization {
            error: err / a,
            limit: MAX_RECONSTRUCTION_ERROR,
        });
    }
    Ok(BathDiscretization {
        modes,
        cutoff: opts.cutoff,
        reconstruction_error: err,
        amplitude: a,
        t_max,
        bandwidth: w,
    })
}

/// Non-negative weights `x` minimizing `max_τ |Σ x_k c_k(τ) - a e^{-γτ}|` with
/// `c_k = 2cos(ν_k τ)` (`1` for `ν_k = 0`), by iteratively reweighted NNLS.
fn minimax_weights(a: f64, g: f64, offsets: &[f64], horizon: f64) -> Vec<f64> {
    let points = 800;
    let taus: Vec<f64> = (0..points).map(|i| horizon * i as f64 / (points - 1) as f64).collect();
    let basis = DMatrix::from_fn(points, offsets.len(), |i, k| {
        if offsets[k] == 0.0 {
            1.0
        } else {
            2.0 * (offsets[k] * taus[i]).cos()
        }
    });
    let target = DVector::from_iterator(points, taus.iter().map(|&t| a * (-g * t).exp()));
    let mut weight = DVector::from_element(points, 1.0);
    let mut best: Option<(f64, DVector<f64>)> = None;
    for _ in 0..200 {
        let sw = weight.map(f64::sqrt);
        let mut lhs = basis.clone();
        for (i, mut row) in lhs.row_iter_mut().enumerate() {
            row *= sw[i];
        }
        let rhs = target.component_mul(&sw);
        let x = nnls::nnls(&lhs, &rhs);
        let resid = (&basis * &x - &target).abs();
        let worst = resid.max();
        if best.as_ref().map_or(true, |(b, _)| worst < *b) {
            best = Some((worst, x));
        }
        weight.component_mul_assign(&resid);
        let mean = weight.mean();
        if !(mean > 0.0) || !mean.is_finite() {
            break;
        }
        weight /= mean;
    }
    best.map(|(_, x)| x.as_slice().to_vec())
        .unwrap_or_else(|| vec![0.0; offsets.len()])
}

/// Pure spin state `up |↑⟩ + down |↓⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinState {
    pub up: Complex64,
    pub down: Complex64,
}

impl SpinState {
    pub fn up() -> Self {
        Self {
            up: Complex64::new(1.0, 0.0),
            down: Complex64::new(0.0, 0.0),
        }
    }

    pub fn plus_x() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            up: Complex64::new(s, 0.0),
            down: Complex64::new(s, 0.0),
        }
    }

    /// State with Bloch vector `r`; `|r|` must be 1.
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let len = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        if !len.is_finite() || (len - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "the exact-bath oracle needs a pure spin state (|A₀| = 1), got |A₀| = {len}"
            )));
        }
        let theta = r[2].clamp(-1.0, 1.0).acos();
        let phi = r[1].atan2(r[0]);
        Ok(Self {
            up: Complex64::new((theta / 2.0).cos(), 0.0),
            down: Complex64::from_polar((theta / 2.0).sin(), phi),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Emit one record every `stride` steps (plus the final step).
    pub stride: usize,
    /// Drop the counter-rotating terms `σ₊a†` and `σ₋a`.
    pub rotating_wave: bool,
    /// Largest admissible spin⊗Fock dimension.
    pub max_dimension: usize,
    /// Largest admissible `| ||ψ|| - 1 |`.
    pub norm_tolerance: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            stride: 1,
            rotating_wave: false,
            max_dimension: 4_000_000,
            norm_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRun {
    /// Spin expectation values; diagnostics carry norm drift, excitation
    /// variation and the discretization error.
    pub series: TimeSeries<f64>,
    pub dimension: usize,
    pub active_modes: usize,
    pub chebyshev_terms: usize,
}

/// Exact evolution with default options.
pub fn evolve_exact(
    disc: &BathDiscretization,
    omega: f64,
    psi0: SpinState,
    t_max: f64,
    dt: f64,
) -> Result<TimeSeries<f64>> {
    evolve_exact_with(disc, omega, psi0, t_max, dt, &OracleOptions::default()).map(|r| r.series)
}

/// Evolves `psi0 ⊗ |vac⟩` with a Chebyshev propagator over steps of length `≤ dt`.
pub fn evolve_exact_with(
    disc: &BathDiscretization,
    omega: f64,
    psi0: SpinState,
    t_max: f64,
    dt: f64,
    opts: &OracleOptions,
) -> Result<OracleRun> {
    if !omega.is_finite() {
        return Err(Error::Input("spin splitting must be finite".into()));
    }
    let n0 = psi0.up.norm_sqr() + psi0.down.norm_sqr();
    if (n0 - 1.0).abs() > 1e-12 {
        return Err(Error::Input(format!("initial spin state has norm² {n0}, expected 1")));
    }
    if opts.stride == 0 {
        return Err(Error::Input("output stride must be >= 1".into()));
    }
    let (steps, h) = step_grid(dt, t_max)?;
    let modes = disc.active_modes();
    let dim = 2.0 * fock_dimension(modes.len(), disc.cutoff);
    if dim > opts.max_dimension as f64 {
        return Err(Error::Config(format!(
            "Hilbert dimension {dim} ({} modes, cutoff {}) exceeds the bound {}",
            modes.len(),
            disc.cutoff,
            opts.max_dimension
        )));
    }
    let basis = FockBasis::new(modes.len(), disc.cutoff);
    let nb = basis.len();
    let energies: Vec<f64> = (0..nb)
        .map(|i| {
            basis
                .occupation(i)
                .iter()
                .zip(&modes)
                .map(|(&n, m)| n as f64 * m.frequency)
                .sum()
        })
        .collect();
    let spin_energy = [0.5 * omega, -0.5 * omega];
    let couplings: Vec<f64> = modes.iter().map(|m| m.coupling).collect();
    let rwa = opts.rotating_wave;
    // RWA keeps σ₊a (target ↑ from a higher-boson ↓) and σ₋a† (target ↓ from a lower-boson ↑).
    let use_lower = |s: usize| !rwa || s == 1;
    let use_upper = |s: usize| !rwa || s == 0;

    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in 0..2 {
        for i in 0..nb {
            let mut radius = 0.0;
            if use_lower(s) {
                radius += basis.lower(i).iter().map(|l| (couplings[l.mode as usize] * l.factor).abs()).sum::<f64>();
            }
            if use_upper(s) {
                radius += basis.upper(i).iter().map(|l| (couplings[l.mode as usize] * l.factor).abs()).sum::<f64>();
            }
            let c = energies[i] + spin_energy[s];
            lo = lo.min(c - radius);
            hi = hi.max(c + radius);
        }
    }
    let prop = ChebyshevPropagator::new(lo, hi, h);

    let apply_h = |x: &[Complex64], y: &mut [Complex64]| {
        let row = |r: usize| {
            let (s, i) = (r / nb, r % nb);
            let other = (1 - s) * nb;
            let mut acc = x[r] * (energies[i] + spin_energy[s]);
            if use_lower(s) {
                for l in basis.lower(i) {
                    acc += x[other + l.state as usize] * (couplings[l.mode as usize] * l.factor);
                }
            }
            if use_upper(s) {
                for l in basis.upper(i) {
                    acc += x[other + l.state as usize] * (couplings[l.mode as usize] * l.factor);
                }
            }
            acc
        };
        if y.len() >= 16_384 {
            y.par_iter_mut().enumerate().for_each(|(r, v)| *v = row(r));
        } else {
            for (r, v) in y.iter_mut().enumerate() {
                *v = row(r);
            }
        }
    };

    let observe = |psi: &[Complex64]| {
        let (u, d) = psi.split_at(nb);
        let mut ud = Complex64::new(0.0, 0.0);
        let (mut pu, mut pd, mut bosons) = (0.0, 0.0, 0.0);
        for i in 0..nb {
            ud += u[i].conj() * d[i];
            let (a, b) = (u[i].norm_sqr(), d[i].norm_sqr());
            pu += a;
            pd += b;
            bosons += basis.total(i) as f64 * (a + b);
        }
        let bloch = [2.0 * ud.re, 2.0 * ud.im, pu - pd];
        (bloch, (pu + pd).sqrt(), bosons + pu)
    };

    let mut psi = vec![Complex64::new(0.0, 0.0); 2 * nb];
    psi[0] = psi0.up;
    psi[nb] = psi0.down;
    let mut work = [Vec::new(), Vec::new(), Vec::new()];

    let (b0, _, exc0) = observe(&psi);
    let mut records = vec![Record {
        t: 0.0,
        bloch: b0,
        max_imag: 0.0,
    }];
    let mut drift: f64 = 0.0;
    let mut exc_var: f64 = 0.0;
    for step in 0..steps {
        prop.step(&mut psi, &mut work, apply_h);
        let t = (step + 1) as f64 * h;
        let (bloch, norm, exc) = observe(&psi);
        if !norm.is_finite() {
            return Err(Error::Blowup { t });
        }
        drift = drift.max((norm - 1.0).abs());
        exc_var = exc_var.max((exc - exc0).abs());
        if drift > opts.norm_tolerance {
            return Err(Error::Accuracy(format!(
                "state norm drifted by {drift:e} at t = {t} (tolerance {:e})",
                opts.norm_tolerance
            )));
        }
        if (step + 1) % opts.stride == 0 || step + 1 == steps {
            records.push(Record { t, bloch, max_imag: 0.0 });
        }
    }

    Ok(OracleRun {
        series: TimeSeries {
            records,
            diagnostics: Diagnostics {
                norm_drift: Some(drift),
                excitation_variation: Some(exc_var),
                discretization_error: Some(disc.reconstruction_error),
                steps: Some(steps),
                dt: Some(h),
                ..Diagnostics::default()
            },
        },
        dimension: 2 * nb,
        active_modes: modes.len(),
        chebyshev_terms: prop.terms(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{propagate_with, PropagateOptions, SystemSpec};

    fn reference_kernel() -> ExponentialKernel<f64> {
        ExponentialKernel::ornstein_uhlenbeck(1.0, 0.2).unwrap()
    }

    fn free(modes: usize) -> BathDiscretization {
        BathDiscretization {
            modes: (0..modes)
                .map(|k| BathMode {
                    frequency: 0.1 * k as f64,
                    coupling: 0.0,
                })
                .collect(),
            cutoff: 3,
            reconstruction_error: 0.0,
            amplitude: 0.0,
            t_max: 10.0,
            bandwidth: 1.0,
        }
    }

    fn small_bath() -> BathDiscretization {
        let opts = DiscretizeOptions {
            bandwidth: Some(2.0),
            ..Default::default()
        };
        discretize_with(&reference_kernel(), 24, 10.0, &opts).unwrap()
    }

    #[test]
    fn minimax_discretization_quality() {
        let d = discretize(&reference_kernel(), 64, 10.0).unwrap();
        assert!(d.reconstruction_error < 0.02 * 0.1, "{}", d.reconstruction_error);
        assert!((d.total_weight() - 0.1).abs() <= d.reconstruction_error + 1e-15);
        assert!(d.modes.len() <= 64);
        // Independent check of the reported error on a different lag grid.
        let worst = (0..=997)
            .map(|i| {
                let tau = 10.0 * i as f64 / 997.0;
                (d.reconstructed(tau) - reference_kernel().eval_unchecked(tau)).norm()
            })
            .fold(0.0, f64::max);
        assert!(worst <= d.reconstruction_error * 1.05 + 1e-12);
    }

    #[test]
    fn sampled_discretization_zero_lag_identity() {
        let opts = DiscretizeOptions {
            scheme: DiscretizationScheme::Sampled,
            ..Default::default()
        };
        let d = discretize_with(&reference_kernel(), 64, 10.0, &opts).unwrap();
        assert_eq!(d.modes.len(), 64);
        assert!((d.total_weight() - 0.1).abs() <= d.reconstruction_error + 1e-15);
    }

    #[test]
    fn complex_kernel_discretization() {
        let k = ExponentialKernel::new(0.1, 0.2, 1.0).unwrap();
        let d = discretize(&k, 64, 10.0).unwrap();
        assert!(d.reconstruction_error < 0.02 * 0.1);
    }

    #[test]
    fn too_few_modes_is_rejected() {
        let broad = ExponentialKernel::ornstein_uhlenbeck(1.0, 2.0).unwrap();
        assert!(matches!(discretize(&broad, 2, 10.0), Err(Error::Discretization { .. })));
        assert!(matches!(discretize(&broad, 1, 10.0), Err(Error::Input(_))));
    }

    #[test]
    fn decoupled_spin_is_stationary() {
        let ts = evolve_exact(&free(4), 1.0, SpinState::up(), 5.0, 0.1).unwrap();
        for r in &ts.records {
            assert!((r.bloch[2] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn decoupled_spin_precesses() {
        let ts = evolve_exact(&free(4), 1.3, SpinState::plus_x(), 5.0, 0.1).unwrap();
        for r in &ts.records {
            assert!((r.bloch[0] - (1.3 * r.t).cos()).abs() < 1e-12);
            assert!((r.bloch[1] - (1.3 * r.t).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_bound() {
        let d = discretize(&reference_kernel(), 64, 10.0).unwrap().with_cutoff(6);
        let opts = OracleOptions {
            max_dimension: 100_000,
            ..Default::default()
        };
        assert!(matches!(
            evolve_exact_with(&d, 1.0, SpinState::up(), 1.0, 0.1, &opts),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn single_mode_matches_dense_exponential() {
        // One mode, cutoff 4: compare with a dense Taylor-series propagator.
        let disc = BathDiscretization {
            modes: vec![BathMode {
                frequency: 0.7,
                coupling: 0.3,
            }],
            cutoff: 4,
            reconstruction_error: 0.0,
            amplitude: 0.09,
            t_max: 3.0,
            bandwidth: 1.0,
        };
        let ts = evolve_exact(&disc, 1.0, SpinState::up(), 3.0, 0.25).unwrap();
        // Dense H on |s, n>, index s*5 + n.
        let dim = 10;
        let mut hm = vec![vec![0.0; dim]; dim];
        for s in 0..2 {
            for n in 0..5 {
                let i = s * 5 + n;
                hm[i][i] = if s == 0 { 0.5 } else { -0.5 } + 0.7 * n as f64;
                if n < 4 {
                    let j = (1 - s) * 5 + n + 1;
                    let v = 0.3 * ((n + 1) as f64).sqrt();
                    hm[i][j] = v;
                    hm[j][i] = v;
                }
            }
        }
        let mut psi = vec![Complex64::new(0.0, 0.0); dim];
        psi[0] = Complex64::new(1.0, 0.0);
        let dt = 0.25 / 50.0;
        for (k, r) in ts.records.iter().enumerate() {
            if k > 0 {
                for _ in 0..50 {
                    let mut term = psi.clone();
                    let mut acc = psi.clone();
                    for order in 1..30 {
                        let mut next = vec![Complex64::new(0.0, 0.0); dim];
                        for i in 0..dim {
                            for j in 0..dim {
                                next[i] += term[j] * hm[i][j];
                            }
                            next[i] *= Complex64::new(0.0, -dt / order as f64);
                        }
                        term = next;
                        for i in 0..dim {
                            acc[i] += term[i];
                        }
                    }
                    psi = acc;
                }
            }
            let sz: f64 = (0..5).map(|n| psi[n].norm_sqr() - psi[5 + n].norm_sqr()).sum();
            assert!((r.bloch[2] - sz).abs() < 1e-10, "t={} {} vs {}", r.t, r.bloch[2], sz);
        }
    }

    #[test]
    fn excitation_signature() {
        let d = small_bath();
        let full = evolve_exact_with(&d, 1.0, SpinState::up(), 10.0, 0.1, &OracleOptions::default()).unwrap();
        let rwa = evolve_exact_with(
            &d,
            1.0,
            SpinState::up(),
            10.0,
            0.1,
            &OracleOptions {
                rotating_wave: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(full.series.diagnostics.excitation_variation.unwrap() > 1e-3);
        assert!(rwa.series.diagnostics.excitation_variation.unwrap() < 1e-8);
        assert!(full.series.diagnostics.norm_drift.unwrap() < 1e-6);
    }

    #[test]
    fn cutoff_convergence_is_monotone() {
        let d = small_bath();
        let run = |c| evolve_exact(&d.with_cutoff(c), 1.0, SpinState::up(), 10.0, 0.1).unwrap();
        let (s1, s2, s3, s4) = (run(1), run(2), run(3), run(4));
        let d12 = s1.sup_distance(&s2, 2, 10.0).unwrap();
        let d23 = s2.sup_distance(&s3, 2, 10.0).unwrap();
        let d34 = s3.sup_distance(&s4, 2, 10.0).unwrap();
        assert!(d12 > d23 && d23 > d34, "{d12} {d23} {d34}");
    }

    #[test]
    fn early_time_agreement_with_hierarchy() {
        let d = discretize(&reference_kernel(), 64, 10.0).unwrap();
        let oracle = evolve_exact(&d, 1.0, SpinState::up(), 3.0, 0.1).unwrap();
        let sys = SystemSpec::excited(1.0, reference_kernel()).unwrap();
        let hier = propagate_with(&sys, 40, 1e-3, 3.0, &PropagateOptions::default()).unwrap().series;
        let diff = oracle.sup_distance(&hier, 2, 3.0).unwrap();
        assert!(diff < 0.02, "{diff}");
    }
}
