//! Noiseless non-Markovian Bloch equation and its Q-ladder.
//!
//! The state is the Bloch vector `A` plus the ladder `Q_0 … Q_N`:
//!
//! ```text
//! dA/dt   = (-iH' + L Q_0) A
//! dQ_0/dt = -i[H', Q_0] + [L Q_0, Q_0] - g Q_0 + a L + L Q_1
//! dQ_n/dt = -i[H', Q_n] + Σ_{k=0}^{n} [L Q_k, Q_{n-k}] - (n+1) g Q_n
//!           + a [L, Q_{n-1}] + (n+1) L Q_{n+1}
//! ```
//!
//! with `g = γ + iΩ`, `Q_{N+1} = 0` and `Q_n(0) = 0`. `H' = H + V(t)` in
//! sigma-x-freeze mode and `H' = H` otherwise.

use serde::{Deserialize, Serialize};

use crate::correlations::{shift_unchecked, ExponentialKernel};
use crate::error::{Error, Result};
use crate::matrix::{BlochVector, GeneratorMatrix};
use crate::scalar::{cplx, Real};
use crate::series::{Diagnostics, Record, TimeSeries};

/// How the imaginary part of a complex kernel is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrectionMode {
    /// Real kernels only.
    #[default]
    None,
    /// Drop the memory term W (same equations as the real case).
    MarkovW,
    /// Add `V(t) = diag(0, v(t), -v(t))` to the Hamiltonian.
    SigmaXFreeze,
}

/// Spin splitting, bath kernel, initial Bloch vector and correction mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemSpec<T: Real> {
    pub omega: T,
    pub kernel: ExponentialKernel<T>,
    pub initial: [T; 3],
    pub correction: CorrectionMode,
}

impl<T: Real> SystemSpec<T> {
    pub fn new(omega: T, kernel: ExponentialKernel<T>, initial: [T; 3], correction: CorrectionMode) -> Result<Self> {
        let spec = Self {
            omega,
            kernel,
            initial,
            correction,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Excited spin `A₀ = (0, 0, 1)` with a real kernel.
    pub fn excited(omega: T, kernel: ExponentialKernel<T>) -> Result<Self> {
        let correction = if kernel.is_real() {
            CorrectionMode::None
        } else {
            CorrectionMode::SigmaXFreeze
        };
        Self::new(omega, kernel, [T::zero(), T::zero(), T::one()], correction)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.omega.is_finite() {
            return Err(Error::Input("spin splitting must be finite".into()));
        }
        let k = &self.kernel;
        ExponentialKernel::new(k.amplitude, k.decay, k.modulation)?;
        if self.initial.iter().any(|x| !x.is_finite()) {
            return Err(Error::Input("initial Bloch vector must be finite".into()));
        }
        let norm = BlochVector::from_real(self.initial).real_norm();
        if norm > T::one() + T::epsilon() * T::lit(8.0) {
            return Err(Error::Domain(format!("initial Bloch vector has length {norm} > 1")));
        }
        if self.correction == CorrectionMode::None && !k.is_real() {
            return Err(Error::Config(
                "correction mode \"none\" requires a real kernel (Omega = 0); use markov-w or sigma-x-freeze".into(),
            ));
        }
        Ok(())
    }

    /// `v(t)` entering `H'`; zero unless sigma-x-freeze is active.
    #[inline]
    pub fn shift_at(&self, t: T) -> T {
        if self.correction == CorrectionMode::SigmaXFreeze {
            shift_unchecked(&self.kernel, t)
        } else {
            T::zero()
        }
    }

    /// `-iH'` at time `t`.
    #[inline]
    pub fn minus_i_hamiltonian(&self, t: T) -> GeneratorMatrix<T> {
        let h = GeneratorMatrix::precession(self.omega) + GeneratorMatrix::shift(self.shift_at(t));
        h.scale(cplx(T::zero(), -T::one()))
    }
}

/// Bloch generator `-iH' + L Q_0`; shared with the stochastic trajectories.
#[inline]
pub fn bloch_generator<T: Real>(minus_i_h: &GeneratorMatrix<T>, q0: &GeneratorMatrix<T>) -> GeneratorMatrix<T> {
    *minus_i_h + q0.l_left()
}

/// Time, Bloch vector and the ladder `Q_0 … Q_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyState<T: Real> {
    pub t: T,
    pub a: BlochVector<T>,
    pub q: Vec<GeneratorMatrix<T>>,
}

impl<T: Real> HierarchyState<T> {
    /// `t = 0`, `A = A₀`, all `Q_n = 0`.
    pub fn initial(sys: &SystemSpec<T>, order: usize) -> Self {
        Self {
            t: T::zero(),
            a: BlochVector::from_real(sys.initial),
            q: vec![GeneratorMatrix::zero(); order + 1],
        }
    }

    pub fn order(&self) -> usize {
        self.q.len().saturating_sub(1)
    }

    /// Largest imaginary part of any entry of `A` or `Q_n`.
    pub fn max_imag(&self) -> T {
        self.q.iter().fold(self.a.max_imag(), |m, q| m.max(q.max_imag()))
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.q.iter().all(GeneratorMatrix::is_finite)
    }
}

/// Time derivative of a [`HierarchyState`].
#[derive(Debug, Clone, PartialEq)]
pub struct Derivative<T: Real> {
    pub da: BlochVector<T>,
    pub dq: Vec<GeneratorMatrix<T>>,
}

/// Default magnitude below which a ladder level is left out of the convolution sum.
pub const DEFAULT_SKIP_FLOOR: f64 = 1e-14;

/// Right-hand side of the hierarchy. Allocates; [`propagate`] uses a
/// preallocated internal version.
pub fn hierarchy_rhs<T: Real>(state: &HierarchyState<T>, sys: &SystemSpec<T>) -> Result<Derivative<T>> {
    if state.q.is_empty() {
        return Err(Error::Config("hierarchy state has no ladder levels".into()));
    }
    let n = state.q.len();
    let mut scratch = Scratch::new(n);
    let mut dq = vec![GeneratorMatrix::zero(); n];
    let da = rhs_into(sys, T::zero(), state.t, &state.a, &state.q, &mut scratch, &mut dq);
    Ok(Derivative { da, dq })
}

struct Scratch<T: Real> {
    lq: Vec<GeneratorMatrix<T>>,
    norms: Vec<T>,
    active: Vec<usize>,
}

impl<T: Real> Scratch<T> {
    fn new(n: usize) -> Self {
        Self {
            lq: vec![GeneratorMatrix::zero(); n],
            norms: vec![T::zero(); n],
            active: Vec::with_capacity(n),
        }
    }
}

fn rhs_into<T: Real>(
    sys: &SystemSpec<T>,
    floor: T,
    t: T,
    a: &BlochVector<T>,
    q: &[GeneratorMatrix<T>],
    s: &mut Scratch<T>,
    dq: &mut [GeneratorMatrix<T>],
) -> BlochVector<T> {
    let order = q.len() - 1;
    let v = sys.shift_at(t);
    let g = sys.kernel.complex_decay();
    let amp = sys.kernel.amplitude;

    let mut largest = T::zero();
    for (k, qk) in q.iter().enumerate() {
        s.lq[k] = qk.l_left();
        s.norms[k] = qk.max_abs();
        largest = largest.max(s.norms[k]);
    }
    // A pair (k, j) is kept when |Q_k| |Q_j| >= floor², which needs both
    // factors above floor² / max|Q|.
    let floor2 = floor * floor;
    let level_floor = if largest > T::zero() { floor2 / largest } else { T::zero() };
    s.active.clear();
    s.active
        .extend((0..=order).filter(|&k| s.norms[k] >= level_floor));

    for n in 0..=order {
        let qn = &q[n];
        let mut d = hamiltonian_commutator(sys.omega, v, qn);
        for &k in s.active.iter().take_while(|&&k| k <= n) {
            let j = n - k;
            if s.norms[k] * s.norms[j] < floor2 {
                continue;
            }
            add_l_product_commutator(&mut d, &s.lq[k], &q[j]);
        }
        let np1 = T::from_usize_lossy(n + 1);
        d -= qn.scale(g * np1);
        if n == 0 {
            d.axpy(amp, &GeneratorMatrix::coupling());
        } else {
            let comm = s.lq[n - 1] - q[n - 1].l_right();
            d.axpy(amp, &comm);
        }
        if n < order {
            d.axpy(np1, &s.lq[n + 1]);
        }
        dq[n] = d;
    }
    bloch_generator(&sys.minus_i_hamiltonian(t), &q[0]).apply(a)
}

/// `-i[H + diag(0, v, -v), Q]` using the sparsity of `H`.
#[inline]
fn hamiltonian_commutator<T: Real>(omega: T, v: T, q: &GeneratorMatrix<T>) -> GeneratorMatrix<T> {
    let m = &q.0;
    let iv = cplx(T::zero(), v);
    // M = -iH' = [[0, -ω, 0], [ω, -iv, 0], [0, 0, iv]]
    let mut mq = [[cplx(T::zero(), T::zero()); 3]; 3];
    let mut qm = mq;
    for l in 0..3 {
        mq[0][l] = -m[1][l] * omega;
        mq[1][l] = m[0][l] * omega - m[1][l] * iv;
        mq[2][l] = m[2][l] * iv;
    }
    for i in 0..3 {
        qm[i][0] = m[i][1] * omega;
        qm[i][1] = -m[i][0] * omega - m[i][1] * iv;
        qm[i][2] = m[i][2] * iv;
    }
    let mut out = GeneratorMatrix::zero();
    for i in 0..3 {
        for l in 0..3 {
            out.0[i][l] = mq[i][l] - qm[i][l];
        }
    }
    out
}

/// `d += P Q - Q P` for `P = L·X`, whose first row is zero.
#[inline]
fn add_l_product_commutator<T: Real>(d: &mut GeneratorMatrix<T>, p: &GeneratorMatrix<T>, q: &GeneratorMatrix<T>) {
    let (p, q) = (&p.0, &q.0);
    for l in 0..3 {
        for i in 1..3 {
            d.0[i][l] += p[i][0] * q[0][l] + p[i][1] * q[1][l] + p[i][2] * q[2][l];
        }
        for i in 0..3 {
            d.0[i][l] -= q[i][1] * p[1][l] + q[i][2] * p[2][l];
        }
    }
}

/// Output and tuning knobs for [`propagate_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagateOptions {
    /// Emit one record every `stride` steps (plus the final step).
    pub stride: usize,
    /// Levels with `max|Q_k|` below this are skipped in the convolution sum; 0 disables.
    pub skip_floor: f64,
    /// Keep the four RK4 stage values of `Q_0` for every step.
    pub record_q0: bool,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        Self {
            stride: 100,
            skip_floor: DEFAULT_SKIP_FLOOR,
            record_q0: false,
        }
    }
}

/// RK4 stage values of `Q_0` for every step of a propagation, consumed by
/// stochastic trajectories so they see the same `Q_0(t)` as the Bloch solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Q0Series<T: Real> {
    pub dt: T,
    pub t_max: T,
    pub stride: usize,
    pub stages: Vec<[GeneratorMatrix<T>; 4]>,
}

impl<T: Real> Q0Series<T> {
    pub fn steps(&self) -> usize {
        self.stages.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Propagation<T: Real> {
    pub series: TimeSeries<T>,
    pub q0: Option<Q0Series<T>>,
    pub final_state: HierarchyState<T>,
}

/// Step count and effective step for covering `[0, t_max]` with steps no longer than `dt`.
pub fn step_grid<T: Real>(dt: T, t_max: T) -> Result<(usize, T)> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::Input(format!("dt must be finite and > 0, got {dt}")));
    }
    if !(t_max >= T::zero()) || !t_max.is_finite() {
        return Err(Error::Input(format!("t_max must be finite and >= 0, got {t_max}")));
    }
    if t_max == T::zero() {
        return Ok((0, dt));
    }
    let ratio = (t_max / dt).to_f64_lossy();
    let nearest = ratio.round();
    let n = if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        ratio.ceil()
    };
    if n > 1e10 {
        return Err(Error::Input(format!("t_max/dt = {ratio:e} steps is too many")));
    }
    let n = (n as usize).max(1);
    Ok((n, t_max / T::from_usize_lossy(n)))
}

/// Stage times `t_n`, `t_n + h/2`, `t_n + h/2`, `t_n + h` of step `n`.
#[inline]
pub(crate) fn stage_times<T: Real>(n: usize, h: T) -> [T; 4] {
    let t = T::from_usize_lossy(n) * h;
    let half = t + h / T::lit(2.0);
    [t, half, half, t + h]
}

/// `A + h/6 (k1 + 2 k2 + 2 k3 + k4)`.
#[inline]
pub(crate) fn rk4_combine<T: Real>(a: &BlochVector<T>, h: T, k: &[BlochVector<T>; 4]) -> BlochVector<T> {
    let two = T::lit(2.0);
    let sum = k[0].axpy(two, &k[1]).axpy(two, &k[2]).axpy(T::one(), &k[3]);
    a.axpy(h / T::lit(6.0), &sum)
}

/// RK4 integration of the hierarchy with default options (stride 100).
pub fn propagate<T: Real>(sys: &SystemSpec<T>, order: usize, dt: T, t_max: T) -> Result<TimeSeries<T>> {
    propagate_with(sys, order, dt, t_max, &PropagateOptions::default()).map(|p| p.series)
}

/// RK4 integration of the hierarchy truncated at `Q_{order+1} = 0`.
pub fn propagate_with<T: Real>(
    sys: &SystemSpec<T>,
    order: usize,
    dt: T,
    t_max: T,
    opts: &PropagateOptions,
) -> Result<Propagation<T>> {
    sys.validate()?;
    if opts.stride == 0 {
        return Err(Error::Input("output stride must be >= 1".into()));
    }
    let (steps, h) = step_grid(dt, t_max)?;
    let floor = T::lit(opts.skip_floor.max(0.0));
    let n = order + 1;

    let mut state = HierarchyState::initial(sys, order);
    let mut scratch = Scratch::new(n);
    let mut kq: [Vec<GeneratorMatrix<T>>; 4] = std::array::from_fn(|_| vec![GeneratorMatrix::zero(); n]);
    let mut ka = [BlochVector::zero(); 4];
    let mut qs = vec![GeneratorMatrix::zero(); n];
    let mut q0_stages = Vec::with_capacity(if opts.record_q0 { steps } else { 0 });

    let mut records = Vec::with_capacity(steps / opts.stride + 2);
    let mut max_imag = state.max_imag();
    let mut max_norm = state.a.real_norm();
    records.push(Record {
        t: T::zero(),
        bloch: state.a.re(),
        max_imag,
    });

    let half = h / T::lit(2.0);
    let sixth = h / T::lit(6.0);
    let two = T::lit(2.0);
    for step in 0..steps {
        let ts = stage_times(step, h);
        let mut q0s = [GeneratorMatrix::zero(); 4];
        for stage in 0..4 {
            let (a_in, q_in): (BlochVector<T>, &[GeneratorMatrix<T>]) = if stage == 0 {
                (state.a, &state.q)
            } else {
                let c = if stage == 3 { h } else { half };
                let prev = stage - 1;
                for (dst, (q, k)) in qs.iter_mut().zip(state.q.iter().zip(&kq[prev])) {
                    *dst = *q;
                    dst.axpy(c, k);
                }
                (state.a.axpy(c, &ka[prev]), &qs)
            };
            q0s[stage] = q_in[0];
            ka[stage] = rhs_into(sys, floor, ts[stage], &a_in, q_in, &mut scratch, &mut kq[stage]);
        }
        state.a = rk4_combine(&state.a, h, &ka);
        for (i, q) in state.q.iter_mut().enumerate() {
            let mut sum = kq[0][i];
            sum.axpy(two, &kq[1][i]);
            sum.axpy(two, &kq[2][i]);
            sum += kq[3][i];
            q.axpy(sixth, &sum);
        }
        state.t = T::from_usize_lossy(step + 1) * h;
        if opts.record_q0 {
            q0_stages.push(q0s);
        }
        if !state.is_finite() {
            return Err(Error::Blowup { t: state.t.to_f64_lossy() });
        }
        let imag = state.max_imag();
        max_imag = max_imag.max(imag);
        max_norm = max_norm.max(state.a.real_norm());
        if (step + 1) % opts.stride == 0 || step + 1 == steps {
            records.push(Record {
                t: state.t,
                bloch: state.a.re(),
                max_imag: imag,
            });
        }
    }

    let diagnostics = Diagnostics {
        max_imag: Some(max_imag.to_f64_lossy()),
        max_bloch_norm: Some(max_norm.to_f64_lossy()),
        steps: Some(steps),
        dt: Some(h.to_f64_lossy()),
        ..Diagnostics::default()
    };
    Ok(Propagation {
        series: TimeSeries { records, diagnostics },
        q0: opts.record_q0.then_some(Q0Series {
            dt: h,
            t_max,
            stride: opts.stride,
            stages: q0_stages,
        }),
        final_state: state,
    })
}

/// Closed-form solution of `dA/dt = (-iH + (Γ/2) L²) A`, the `γ → ∞` limit.
pub fn markov_limit_reference<T: Real>(strength: T, omega: T, initial: [T; 3], t: T) -> Result<[T; 3]> {
    if !t.is_finite() || t < T::zero() {
        return Err(Error::Input(format!("t must be finite and >= 0, got {t}")));
    }
    if !strength.is_finite() || !omega.is_finite() || initial.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input("Markov reference parameters must be finite".into()));
    }
    let g = strength;
    let z = initial[2] * (-T::lit(2.0) * g * t).exp();
    // x-y block B = [[0, -ω], [ω, -2Γ]]: exp(Bt) = e^{-Γt} [c I + s (B + Γ I)].
    let k2 = g * g - omega * omega;
    let (c, s) = if k2 > T::zero() {
        let k = k2.sqrt();
        ((k * t).cosh(), (k * t).sinh() / k)
    } else if k2 < T::zero() {
        let k = (-k2).sqrt();
        ((k * t).cos(), (k * t).sin() / k)
    } else {
        (T::one(), t)
    };
    let env = (-g * t).exp();
    let (x0, y0) = (initial[0], initial[1]);
    // B + ΓI = [[Γ, -ω], [ω, -Γ]]
    let x = env * (c * x0 + s * (g * x0 - omega * y0));
    let y = env * (c * y0 + s * (omega * x0 - g * y0));
    Ok([x, y, z])
}
