//! Chebyshev expansion of `exp(-iHΔ)` for a real symmetric `H`.

use num_complex::Complex64;

/// `J_0(x) … J_k(x)` for `x >= 0` up to the order where the terms drop below
/// `1e-17`, by Miller's backward recurrence normalized with
/// `J_0 + 2 Σ J_{2k} = 1`.
pub fn bessel_j_series(x: f64) -> Vec<f64> {
    assert!(x >= 0.0 && x.is_finite(), "Bessel argument must be finite and >= 0");
    if x == 0.0 {
        return vec![1.0];
    }
    let start = (x.ceil() as usize + 40 + (2.0 * x.sqrt()) as usize * 4) | 1;
    let mut j = vec![0.0; start + 2];
    j[start] = 1e-30;
    for k in (1..=start).rev() {
        j[k - 1] = 2.0 * k as f64 / x * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            for v in j.iter_mut().skip(k - 1) {
                *v *= 1e-250;
            }
        }
    }
    let norm = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
    for v in j.iter_mut() {
        *v /= norm;
    }
    let mut keep = j.len();
    while keep > 1 && (keep as f64 - 1.0) > x && j[keep - 1].abs() < 1e-17 {
        keep -= 1;
    }
    j.truncate(keep.max(1));
    j
}

/// Spectral interval `[lo, hi]` of `H` and the expansion built on it.
#[derive(Debug, Clone)]
pub struct ChebyshevPropagator {
    center: f64,
    radius: f64,
    coeffs: Vec<Complex64>,
    phase: Complex64,
}

impl ChebyshevPropagator {
    pub fn new(lo: f64, hi: f64, step: f64) -> Self {
        let center = 0.5 * (hi + lo);
        // A small margin keeps rounding in the bounds from pushing eigenvalues outside [-1, 1].
        let radius = (0.5 * (hi - lo)).max(1e-12) * (1.0 + 1e-8);
        let j = bessel_j_series(radius * step);
        let minus_i = Complex64::new(0.0, -1.0);
        let coeffs = j
            .iter()
            .enumerate()
            .map(|(k, &jk)| {
                let w = if k == 0 { 1.0 } else { 2.0 };
                minus_i.powu(k as u32) * (w * jk)
            })
            .collect();
        Self {
            center,
            radius,
            coeffs,
            phase: Complex64::from_polar(1.0, -center * step),
        }
    }

    pub fn terms(&self) -> usize {
        self.coeffs.len()
    }

    /// `psi <- exp(-iHΔ) psi`, where `apply_h(x, y)` writes `y = H x`.
    pub fn step<F>(&self, psi: &mut Vec<Complex64>, work: &mut [Vec<Complex64>; 3], mut apply_h: F)
    where
        F: FnMut(&[Complex64], &mut [Complex64]),
    {
        let n = psi.len();
        let [prev, cur, next] = work;
        for w in [&mut *prev, &mut *cur, &mut *next] {
            w.resize(n, Complex64::new(0.0, 0.0));
        }
        let inv_r = 1.0 / self.radius;
        let c = self.center;
        let mut acc: Vec<Complex64> = psi.iter().map(|v| v * self.coeffs[0]).collect();
        if self.coeffs.len() > 1 {
            prev.copy_from_slice(psi);
            apply_h(prev, cur);
            for (y, x) in cur.iter_mut().zip(prev.iter()) {
                *y = (*y - x * c) * inv_r;
            }
            for (a, y) in acc.iter_mut().zip(cur.iter()) {
                *a += y * self.coeffs[1];
            }
            for coeff in &self.coeffs[2..] {
                apply_h(cur, next);
                for ((y, x), p) in next.iter_mut().zip(cur.iter()).zip(prev.iter()) {
                    *y = (*y - x * c) * (2.0 * inv_r) - p;
                }
                for (a, y) in acc.iter_mut().zip(next.iter()) {
                    *a += y * coeff;
                }
                std::mem::swap(prev, cur);
                std::mem::swap(cur, next);
            }
        }
        for (p, a) in psi.iter_mut().zip(acc) {
            *p = a * self.phase;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_reference_values() {
        let j1 = bessel_j_series(1.0);
        assert!((j1[0] - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((j1[1] - 0.440_050_585_744_933_5).abs() < 1e-14);
        let j10 = bessel_j_series(10.0);
        assert!((j10[5] - -0.234_061_528_186_793_6).abs() < 1e-13);
        assert!((j10[0] - -0.245_935_764_451_348_3).abs() < 1e-13);
        assert!(j10.len() > 20);
    }

    #[test]
    fn two_level_rotation() {
        // H = [[1, 0.5], [0.5, -1]], compared with its closed-form exponential.
        let h = [[1.0, 0.5], [0.5, -1.0]];
        let prop = ChebyshevPropagator::new(-1.5, 1.5, 0.7);
        let mut psi = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let mut work = [vec![], vec![], vec![]];
        prop.step(&mut psi, &mut work, |x, y| {
            y[0] = x[0] * h[0][0] + x[1] * h[0][1];
            y[1] = x[0] * h[1][0] + x[1] * h[1][1];
        });
        let e = (1.25f64).sqrt();
        let (c, s) = ((e * 0.7).cos(), (e * 0.7).sin() / e);
        let expect = [Complex64::new(c, -s * 1.0), Complex64::new(0.0, -s * 0.5)];
        for i in 0..2 {
            assert!((psi[i] - expect[i]).norm() < 1e-13, "{:?}", psi);
        }
    }
}
