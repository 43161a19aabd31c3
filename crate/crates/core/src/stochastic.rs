//! Monte Carlo over colored complex noise.
//!
//! Each trajectory integrates `dA/dt = [-iH' + L z_t + L Q_0(t)] A`, where `z_t`
//! is an analytic complex Gaussian process with `M{z_t z_s*} = α(t - s)` and
//! `M{z_t z_s} = 0`, and `Q_0(t)` comes from the noiseless hierarchy. The
//! ensemble mean reproduces the noiseless Bloch solution.

use nalgebra::{Cholesky, DMatrix};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::correlations::ExponentialKernel;
use crate::error::{Error, Result};
use crate::hierarchy::{bloch_generator, propagate_with, rk4_combine, stage_times, PropagateOptions, Q0Series, SystemSpec};
use crate::matrix::{BlochVector, GeneratorMatrix};
use crate::series::{Diagnostics, Record, TimeSeries};

/// Largest supported noise grid; the covariance factor is dense.
pub const MAX_NOISE_POINTS: usize = 10_000;

/// Diagonal jitter (relative to `α(0)`) tried when the plain factorization fails.
pub const CHOLESKY_JITTER: f64 = 1e-12;

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trajectory `index`: `splitmix64(seed + index)`.
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed.wrapping_add(index))
}

/// Uniform grid `t_i = i·dt`, `i = 0 … n-1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseGrid {
    pub dt: f64,
    pub n: usize,
}

impl NoiseGrid {
    pub fn new(dt: f64, n: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Input(format!("noise grid step must be > 0, got {dt}")));
        }
        if n < 2 {
            return Err(Error::Input("noise grid needs at least 2 points".into()));
        }
        if n > MAX_NOISE_POINTS {
            return Err(Error::Config(format!(
                "noise grid has {n} points; the dense covariance factor is limited to {MAX_NOISE_POINTS}, use a coarser noise step"
            )));
        }
        Ok(Self { dt, n })
    }

    /// Smallest grid with step `dt` reaching `t_max`.
    pub fn covering(t_max: f64, dt: f64) -> Result<Self> {
        if !(t_max >= 0.0 && t_max.is_finite()) {
            return Err(Error::Input(format!("t_max must be finite and >= 0, got {t_max}")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Input(format!("noise grid step must be > 0, got {dt}")));
        }
        let intervals = (t_max / dt - 1e-9).ceil().max(1.0);
        Self::new(dt, intervals as usize + 1)
    }

    pub fn t_end(&self) -> f64 {
        self.dt * (self.n - 1) as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        self.dt * i as f64
    }
}

/// One realization of the noise on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    pub grid: NoiseGrid,
    pub samples: Vec<Complex64>,
    pub seed: u64,
}

impl NoisePath {
    /// Identically zero path.
    pub fn zero(grid: NoiseGrid) -> Self {
        Self {
            grid,
            samples: vec![Complex64::new(0.0, 0.0); grid.n],
            seed: 0,
        }
    }

    /// Linear interpolation; clamps to the grid ends.
    #[inline]
    pub fn at(&self, t: f64) -> Complex64 {
        let x = (t / self.grid.dt).max(0.0);
        let i = x.floor() as usize;
        if i + 1 >= self.grid.n {
            return self.samples[self.grid.n - 1];
        }
        let w = x - i as f64;
        if w == 0.0 {
            return self.samples[i];
        }
        self.samples[i] * (1.0 - w) + self.samples[i + 1] * w
    }
}

/// Lower Cholesky factor of `C_ij = α(t_i - t_j)`, packed by rows.
#[derive(Debug, Clone)]
pub struct NoiseGenerator {
    grid: NoiseGrid,
    factor: Vec<Complex64>,
    /// Diagonal jitter that was needed (0 if none).
    pub jitter: f64,
}

impl NoiseGenerator {
    pub fn new(kernel: &ExponentialKernel<f64>, grid: NoiseGrid) -> Result<Self> {
        let n = grid.n;
        let cov = DMatrix::<Complex64>::from_fn(n, n, |i, j| kernel.eval_unchecked(grid.time(i) - grid.time(j)));
        let (chol, jitter) = match Cholesky::new(cov.clone()) {
            Some(c) => (c, 0.0),
            None => {
                let jitter = CHOLESKY_JITTER * kernel.amplitude;
                let mut shifted = cov;
                for i in 0..n {
                    shifted[(i, i)] += jitter;
                }
                let c = Cholesky::new(shifted).ok_or_else(|| {
                    Error::Kernel(format!(
                        "noise covariance on {n} points is not positive semidefinite even with jitter {jitter:e}"
                    ))
                })?;
                (c, jitter)
            }
        };
        let l = chol.l();
        let mut factor = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                factor.push(l[(i, j)]);
            }
        }
        Ok(Self { grid, factor, jitter })
    }

    pub fn grid(&self) -> NoiseGrid {
        self.grid
    }

    /// Factor entry `F_ij` (zero above the diagonal).
    pub fn factor_entry(&self, i: usize, j: usize) -> Complex64 {
        if j > i {
            Complex64::new(0.0, 0.0)
        } else {
            self.factor[i * (i + 1) / 2 + j]
        }
    }

    /// `z = F u` with `u` independent standard complex Gaussians drawn from `seed`.
    pub fn sample(&self, seed: u64) -> NoisePath {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        let u: Vec<Complex64> = (0..self.grid.n)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re * scale, im * scale)
            })
            .collect();
        let mut samples = Vec::with_capacity(self.grid.n);
        let mut offset = 0;
        for i in 0..self.grid.n {
            let row = &self.factor[offset..offset + i + 1];
            samples.push(row.iter().zip(&u).map(|(f, x)| f * x).sum());
            offset += i + 1;
        }
        NoisePath {
            grid: self.grid,
            samples,
            seed,
        }
    }
}

/// Factorizes the covariance and draws one path.
pub fn generate_noise(kernel: &ExponentialKernel<f64>, grid: NoiseGrid, seed: u64) -> Result<NoisePath> {
    Ok(NoiseGenerator::new(kernel, grid)?.sample(seed))
}

/// Complex Bloch vectors of one trajectory at the output times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub values: Vec<BlochVector<f64>>,
}

/// Precomputed noiseless generators `-iH'(t) + L Q_0(t)` at every RK4 stage,
/// shared by all trajectories of an ensemble.
#[derive(Debug, Clone)]
pub struct TrajectoryDriver {
    initial: BlochVector<f64>,
    dt: f64,
    t_max: f64,
    stride: usize,
    bases: Vec<[GeneratorMatrix<f64>; 4]>,
}

impl TrajectoryDriver {
    pub fn new(sys: &SystemSpec<f64>, q0: &Q0Series<f64>) -> Result<Self> {
        sys.validate()?;
        if q0.stride == 0 {
            return Err(Error::Config("Q_0 series has zero output stride".into()));
        }
        let bases = q0
            .stages
            .iter()
            .enumerate()
            .map(|(step, st)| {
                let ts = stage_times(step, q0.dt);
                std::array::from_fn(|s| bloch_generator(&sys.minus_i_hamiltonian(ts[s]), &st[s]))
            })
            .collect();
        Ok(Self {
            initial: BlochVector::from_real(sys.initial),
            dt: q0.dt,
            t_max: q0.t_max,
            stride: q0.stride,
            bases,
        })
    }

    pub fn run(&self, path: &NoisePath) -> Result<Trajectory> {
        let reach = path.grid.t_end();
        if reach < self.t_max - 1e-9 * self.t_max.max(1.0) {
            return Err(Error::Config(format!(
                "noise path ends at t = {reach} but the Q_0 series runs to {}",
                self.t_max
            )));
        }
        let h = self.dt;
        let half = h / 2.0;
        let steps = self.bases.len();
        let coupling = GeneratorMatrix::<f64>::coupling();
        let mut a = self.initial;
        let mut times = vec![0.0];
        let mut values = vec![a];
        let mut k = [BlochVector::zero(); 4];
        for (step, base) in self.bases.iter().enumerate() {
            let ts = stage_times(step, h);
            for s in 0..4 {
                let a_in = match s {
                    0 => a,
                    3 => a.axpy(h, &k[2]),
                    _ => a.axpy(half, &k[s - 1]),
                };
                let z = path.at(ts[s]);
                let g = if z == Complex64::new(0.0, 0.0) {
                    base[s]
                } else {
                    base[s] + coupling.scale(z)
                };
                k[s] = g.apply(&a_in);
            }
            a = rk4_combine(&a, h, &k);
            if !a.is_finite() {
                return Err(Error::Blowup { t: (step + 1) as f64 * h });
            }
            if (step + 1) % self.stride == 0 || step + 1 == steps {
                times.push((step + 1) as f64 * h);
                values.push(a);
            }
        }
        Ok(Trajectory { times, values })
    }
}

/// Integrates one trajectory driven by `path` with the given noiseless `Q_0(t)`.
pub fn trajectory(sys: &SystemSpec<f64>, path: &NoisePath, q0: &Q0Series<f64>) -> Result<Trajectory> {
    TrajectoryDriver::new(sys, q0)?.run(path)
}

/// How ensemble members are scheduled. Both give bit-identical statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleOptions {
    pub dt: f64,
    pub t_max: f64,
    pub stride: usize,
    /// Step of the noise grid; noise is interpolated linearly in between.
    pub noise_dt: f64,
    pub execution: Execution,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_max: 30.0,
            stride: 10,
            noise_dt: 0.05,
            execution: Execution::Parallel,
        }
    }
}

/// Pointwise ensemble statistics of the real parts, plus imaginary means.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSeries {
    pub times: Vec<f64>,
    pub mean: Vec<[f64; 3]>,
    /// Standard error of the mean; NaN for fewer than two trajectories.
    pub stderr: Vec<[f64; 3]>,
    pub imag_mean: Vec<[f64; 3]>,
    pub n_traj: usize,
    pub diagnostics: Diagnostics,
}

impl EnsembleSeries {
    /// Means as a [`TimeSeries`]; `max_imag` holds the largest imaginary mean.
    pub fn to_series(&self) -> TimeSeries<f64> {
        let records = self
            .times
            .iter()
            .zip(&self.mean)
            .zip(&self.imag_mean)
            .map(|((&t, m), im)| Record {
                t,
                bloch: *m,
                max_imag: im.iter().fold(0.0, |acc: f64, x| acc.max(x.abs())),
            })
            .collect();
        TimeSeries {
            records,
            diagnostics: self.diagnostics.clone(),
        }
    }
}

/// Running count, mean and sum of squared deviations per output point.
#[derive(Debug, Clone)]
struct Moments {
    count: f64,
    mean: Vec<[f64; 3]>,
    m2: Vec<[f64; 3]>,
    imag: Vec<[f64; 3]>,
}

impl Moments {
    fn leaf(tr: &Trajectory) -> Self {
        let mean = tr.values.iter().map(|v| v.re()).collect::<Vec<_>>();
        let imag = tr.values.iter().map(|v| [v[0].im, v[1].im, v[2].im]).collect();
        Self {
            count: 1.0,
            m2: vec![[0.0; 3]; mean.len()],
            mean,
            imag,
        }
    }

    /// Pairwise (Chan et al.) combination.
    fn merge(mut self, other: Self) -> Self {
        let n = self.count + other.count;
        let wb = other.count / n;
        let cross = self.count * other.count / n;
        for p in 0..self.mean.len() {
            for c in 0..3 {
                let delta = other.mean[p][c] - self.mean[p][c];
                self.mean[p][c] += delta * wb;
                self.m2[p][c] += other.m2[p][c] + delta * delta * cross;
                self.imag[p][c] += (other.imag[p][c] - self.imag[p][c]) * wb;
            }
        }
        self.count = n;
        self
    }
}

/// Mean and standard error over `n_traj` trajectories at hierarchy order `order`.
///
/// Trajectory `i` uses seed [`sub_seed`]`(seed, i)`; results are reduced over a
/// fixed binary tree, so serial and parallel runs agree bit for bit.
pub fn ensemble_mean(
    sys: &SystemSpec<f64>,
    n_traj: usize,
    seed: u64,
    order: usize,
    opts: &EnsembleOptions,
) -> Result<EnsembleSeries> {
    if n_traj == 0 {
        return Err(Error::Input("n_traj must be >= 1".into()));
    }
    let prop = propagate_with(
        sys,
        order,
        opts.dt,
        opts.t_max,
        &PropagateOptions {
            stride: opts.stride,
            record_q0: true,
            ..PropagateOptions::default()
        },
    )?;
    let q0 = prop.q0.expect("Q_0 series requested");
    let driver = TrajectoryDriver::new(sys, &q0)?;
    let generator = NoiseGenerator::new(&sys.kernel, NoiseGrid::covering(opts.t_max, opts.noise_dt)?)?;
    let parallel = opts.execution == Execution::Parallel;

    fn reduce(
        lo: usize,
        hi: usize,
        parallel: bool,
        run: &(dyn Fn(usize) -> Result<Moments> + Sync),
    ) -> Result<Moments> {
        if hi - lo == 1 {
            return run(lo);
        }
        let mid = lo + (hi - lo) / 2;
        let (left, right) = if parallel {
            rayon::join(|| reduce(lo, mid, parallel, run), || reduce(mid, hi, parallel, run))
        } else {
            (reduce(lo, mid, parallel, run), reduce(mid, hi, parallel, run))
        };
        Ok(left?.merge(right?))
    }

    let run = |i: usize| -> Result<Moments> {
        let path = generator.sample(sub_seed(seed, i as u64));
        Ok(Moments::leaf(&driver.run(&path)?))
    };
    let moments = reduce(0, n_traj, parallel, &run)?;

    let n = moments.count;
    let stderr = moments
        .m2
        .iter()
        .map(|m| {
            m.map(|x| {
                if n_traj < 2 {
                    f64::NAN
                } else {
                    (x / (n - 1.0) / n).sqrt()
                }
            })
        })
        .collect();
    let max_imag = moments
        .imag
        .iter()
        .flatten()
        .fold(0.0, |acc: f64, x| acc.max(x.abs()));
    Ok(EnsembleSeries {
        times: prop.series.times(),
        mean: moments.mean,
        stderr,
        imag_mean: moments.imag,
        n_traj,
        diagnostics: Diagnostics {
            max_imag: Some(max_imag),
            steps: prop.series.diagnostics.steps,
            dt: prop.series.diagnostics.dt,
            ..Diagnostics::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::CorrectionMode;

    fn reference_kernel() -> ExponentialKernel<f64> {
        ExponentialKernel::ornstein_uhlenbeck(1.0, 0.2).unwrap()
    }

    fn reference_system() -> SystemSpec<f64> {
        SystemSpec::excited(1.0, reference_kernel()).unwrap()
    }

    #[test]
    fn seed_splitting_is_documented_mix() {
        assert_eq!(sub_seed(7, 3), splitmix64(10));
        assert_ne!(sub_seed(7, 3), sub_seed(7, 4));
        // Reference value of the SplitMix64 output for state 0.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
    }

    #[test]
    fn factor_matches_autoregressive_form() {
        // For a single-pole kernel the exact Cholesky factor is
        // F_ij = ρ^{i-j} c_j with ρ = e^{-(γ+iΩ)dt}, c_0 = √a, c_j = √(a(1-|ρ|²)).
        let k = ExponentialKernel::new(0.1, 0.2, 0.7).unwrap();
        let grid = NoiseGrid::new(0.25, 40).unwrap();
        let g = NoiseGenerator::new(&k, grid).unwrap();
        assert_eq!(g.jitter, 0.0);
        let rho = (-k.complex_decay() * 0.25).exp();
        let c = |j: usize| {
            if j == 0 {
                0.1f64.sqrt()
            } else {
                (0.1 * (1.0 - rho.norm_sqr())).sqrt()
            }
        };
        for i in 0..40 {
            for j in 0..=i {
                let expect = rho.powu((i - j) as u32) * c(j);
                assert!((g.factor_entry(i, j) - expect).norm() < 1e-10, "({i},{j})");
            }
        }
    }

    #[test]
    fn noise_is_reproducible() {
        let grid = NoiseGrid::new(0.1, 50).unwrap();
        let a = generate_noise(&reference_kernel(), grid, 42).unwrap();
        let b = generate_noise(&reference_kernel(), grid, 42).unwrap();
        assert_eq!(a, b);
        let c = generate_noise(&reference_kernel(), grid, 43).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn noise_grid_limits() {
        assert!(matches!(NoiseGrid::new(0.1, MAX_NOISE_POINTS + 1), Err(Error::Config(_))));
        assert!(NoiseGrid::new(0.0, 10).is_err());
        let g = NoiseGrid::covering(30.0, 0.05).unwrap();
        assert_eq!(g.n, 601);
        assert!((g.t_end() - 30.0).abs() < 1e-12);
    }

    /// Mean and standard error of complex samples, componentwise.
    fn mean_se(xs: &[Complex64]) -> (Complex64, f64, f64) {
        let n = xs.len() as f64;
        let m: Complex64 = xs.iter().sum::<Complex64>() / n;
        let vr = xs.iter().map(|x| (x.re - m.re).powi(2)).sum::<f64>() / (n - 1.0);
        let vi = xs.iter().map(|x| (x.im - m.im).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (vr / n).sqrt(), (vi / n).sqrt())
    }

    #[test]
    fn noise_covariance_statistics() {
        for kernel in [reference_kernel(), ExponentialKernel::new(0.1, 0.2, 1.0).unwrap()] {
            let grid = NoiseGrid::new(0.5, 21).unwrap();
            let gen = NoiseGenerator::new(&kernel, grid).unwrap();
            let paths: Vec<_> = (0..10_000).map(|i| gen.sample(sub_seed(11, i))).collect();

            let z0sq: Vec<f64> = paths.iter().map(|p| p.samples[0].norm_sqr()).collect();
            let m0 = z0sq.iter().sum::<f64>() / 1e4;
            assert!((m0 - 0.1).abs() < 3.0 * 0.1 / 100.0, "mean |z0|^2 = {m0}");

            for &(i, j) in &[(0, 0), (5, 0), (10, 4), (20, 3), (12, 12)] {
                let herm: Vec<_> = paths.iter().map(|p| p.samples[i] * p.samples[j].conj()).collect();
                let (m, sr, si) = mean_se(&herm);
                let target = kernel.eval_unchecked(grid.time(i) - grid.time(j));
                assert!((m.re - target.re).abs() <= 5.0 * sr, "({i},{j}) re {m} vs {target}");
                assert!((m.im - target.im).abs() <= 5.0 * si.max(1e-300), "({i},{j}) im {m} vs {target}");

                let anal: Vec<_> = paths.iter().map(|p| p.samples[i] * p.samples[j]).collect();
                let (m, sr, si) = mean_se(&anal);
                assert!(m.re.abs() <= 5.0 * sr && m.im.abs() <= 5.0 * si, "({i},{j}) zz = {m}");
            }
        }
    }

    fn q0_for(sys: &SystemSpec<f64>, order: usize, dt: f64, t_max: f64, stride: usize) -> (TimeSeries<f64>, Q0Series<f64>) {
        let p = propagate_with(
            sys,
            order,
            dt,
            t_max,
            &PropagateOptions {
                stride,
                record_q0: true,
                ..Default::default()
            },
        )
        .unwrap();
        (p.series, p.q0.unwrap())
    }

    #[test]
    fn zero_noise_reproduces_bloch_solution_exactly() {
        for sys in [
            reference_system(),
            SystemSpec::new(
                1.0,
                ExponentialKernel::new(0.1, 0.2, 1.0).unwrap(),
                [0.6, 0.0, 0.8],
                CorrectionMode::SigmaXFreeze,
            )
            .unwrap(),
        ] {
            let (series, q0) = q0_for(&sys, 10, 0.01, 10.0, 10);
            let path = NoisePath::zero(NoiseGrid::covering(10.0, 0.05).unwrap());
            let tr = trajectory(&sys, &path, &q0).unwrap();
            assert_eq!(tr.values.len(), series.len());
            for (v, r) in tr.values.iter().zip(&series.records) {
                assert_eq!(v.re(), r.bloch);
            }
        }
    }

    #[test]
    fn closed_system_conserves_length() {
        let k = ExponentialKernel::ornstein_uhlenbeck(1e-14, 0.2).unwrap();
        let sys = SystemSpec::new(1.0, k, [0.6, 0.0, 0.8], CorrectionMode::None).unwrap();
        let (_, q0) = q0_for(&sys, 3, 0.01, 20.0, 10);
        let path = NoisePath::zero(NoiseGrid::covering(20.0, 0.05).unwrap());
        let tr = trajectory(&sys, &path, &q0).unwrap();
        for v in &tr.values {
            assert!((v.real_norm() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn short_noise_path_is_config_error() {
        let sys = reference_system();
        let (_, q0) = q0_for(&sys, 3, 0.01, 10.0, 10);
        let path = NoisePath::zero(NoiseGrid::covering(5.0, 0.05).unwrap());
        assert!(matches!(trajectory(&sys, &path, &q0), Err(Error::Config(_))));
    }

    #[test]
    fn golden_trajectory() {
        let sys = reference_system();
        let (_, q0) = q0_for(&sys, 10, 0.01, 30.0, 100);
        let path = generate_noise(&sys.kernel, NoiseGrid::covering(30.0, 0.05).unwrap(), 2024).unwrap();
        let tr = trajectory(&sys, &path, &q0).unwrap();
        let last = tr.values.last().unwrap();
        let got = [last[0].re, last[1].re, last[2].re, last[2].im];
        for (g, e) in got.iter().zip(GOLDEN_FINAL) {
            assert!((g - e).abs() < 1e-10, "{got:?}");
        }
    }

    // Frozen from the first verified run (ω = 1, Γ = 1, γ = 0.2, N = 10, dt = 0.01,
    // noise step 0.05, seed 2024): Re A_x, Re A_y, Re A_z, Im A_z at t = 30.
    const GOLDEN_FINAL: [f64; 4] = [-0.43275123744468036, 0.4720518648964385, -0.6075444071930216, -0.9098453301367302];

    #[test]
    fn single_trajectory_ensemble_is_that_trajectory() {
        let sys = reference_system();
        let opts = EnsembleOptions {
            t_max: 5.0,
            ..Default::default()
        };
        let e = ensemble_mean(&sys, 1, 9, 5, &opts).unwrap();
        let (_, q0) = q0_for(&sys, 5, 0.01, 5.0, 10);
        let path = generate_noise(&sys.kernel, NoiseGrid::covering(5.0, 0.05).unwrap(), sub_seed(9, 0)).unwrap();
        let tr = trajectory(&sys, &path, &q0).unwrap();
        for (m, v) in e.mean.iter().zip(&tr.values) {
            assert_eq!(*m, v.re());
        }
        assert!(e.stderr[1][2].is_nan());
    }

    #[test]
    fn serial_and_parallel_agree_bitwise() {
        let sys = reference_system();
        let base = EnsembleOptions {
            t_max: 5.0,
            ..Default::default()
        };
        let p = ensemble_mean(&sys, 257, 5, 5, &base).unwrap();
        let s = ensemble_mean(
            &sys,
            257,
            5,
            5,
            &EnsembleOptions {
                execution: Execution::Serial,
                ..base
            },
        )
        .unwrap();
        assert_eq!(p, s);
    }

    #[test]
    fn mean_matches_bloch_and_se_scales() {
        let sys = reference_system();
        let opts = EnsembleOptions {
            t_max: 5.0,
            ..Default::default()
        };
        let bloch = propagate_with(&sys, 10, 0.01, 5.0, &PropagateOptions { stride: 10, ..Default::default() })
            .unwrap()
            .series;
        let small = ensemble_mean(&sys, 1000, 1, 10, &opts).unwrap();
        let large = ensemble_mean(&sys, 2000, 1, 10, &opts).unwrap();
        let inside = small
            .mean
            .iter()
            .zip(&small.stderr)
            .zip(&bloch.records)
            .skip(1)
            .filter(|((m, se), r)| (m[2] - r.bloch[2]).abs() <= 3.0 * se[2])
            .count();
        assert!(inside as f64 >= 0.97 * (small.mean.len() - 1) as f64, "{inside}");

        let median = |e: &EnsembleSeries| {
            let mut v: Vec<f64> = e.stderr.iter().skip(1).map(|s| s[2]).collect();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v[v.len() / 2]
        };
        let ratio = median(&small) / median(&large);
        assert!((ratio / std::f64::consts::SQRT_2 - 1.0).abs() < 0.1, "ratio {ratio}");
    }
}
