//! 3x3 complex generators acting on the Bloch vector (<σx>, <σy>, <σz>).
//!
//! The coupling generator `L` only has the (y,z) and (z,y) entries, so products
//! with it are row/column shuffles; [`GeneratorMatrix::l_left`] and
//! [`GeneratorMatrix::l_right`] exploit that.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex;

use crate::scalar::{cplx, creal, Real};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GeneratorMatrix<T: Real>(pub [[Complex<T>; 3]; 3]);

impl<T: Real> GeneratorMatrix<T> {
    pub fn zero() -> Self {
        Self([[Complex::new(T::zero(), T::zero()); 3]; 3])
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            m.0[i][i] = creal(T::one());
        }
        m
    }

    pub fn from_real(rows: [[T; 3]; 3]) -> Self {
        let mut m = Self::zero();
        for (i, row) in rows.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                m.0[i][j] = creal(x);
            }
        }
        m
    }

    /// Spin precession generator: (x,y) = -iω, (y,x) = iω.
    pub fn precession(omega: T) -> Self {
        let mut m = Self::zero();
        m.0[0][1] = cplx(T::zero(), -omega);
        m.0[1][0] = cplx(T::zero(), omega);
        m
    }

    /// Bath coupling generator: (y,z) = -2, (z,y) = 2.
    pub fn coupling() -> Self {
        let two = T::lit(2.0);
        let mut m = Self::zero();
        m.0[1][2] = creal(-two);
        m.0[2][1] = creal(two);
        m
    }

    /// Frozen-σx shift diag(0, v, -v).
    pub fn shift(v: T) -> Self {
        let mut m = Self::zero();
        m.0[1][1] = creal(v);
        m.0[2][2] = creal(-v);
        m
    }

    /// `L · self`.
    #[inline]
    pub fn l_left(&self) -> Self {
        let two = T::lit(2.0);
        let z = Complex::new(T::zero(), T::zero());
        let r1 = self.0[1];
        let r2 = self.0[2];
        Self([
            [z; 3],
            [-r2[0] * two, -r2[1] * two, -r2[2] * two],
            [r1[0] * two, r1[1] * two, r1[2] * two],
        ])
    }

    /// `self · L`.
    #[inline]
    pub fn l_right(&self) -> Self {
        let two = T::lit(2.0);
        let z = Complex::new(T::zero(), T::zero());
        let m = &self.0;
        Self([
            [z, m[0][2] * two, -m[0][1] * two],
            [z, m[1][2] * two, -m[1][1] * two],
            [z, m[2][2] * two, -m[2][1] * two],
        ])
    }

    /// `[L, self]`.
    #[inline]
    pub fn l_commutator(&self) -> Self {
        self.l_left() - self.l_right()
    }

    #[inline]
    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    #[inline]
    pub fn scale(&self, s: Complex<T>) -> Self {
        let mut out = *self;
        for row in out.0.iter_mut() {
            for x in row.iter_mut() {
                *x *= s;
            }
        }
        out
    }

    #[inline]
    pub fn scale_real(&self, s: T) -> Self {
        let mut out = *self;
        for row in out.0.iter_mut() {
            for x in row.iter_mut() {
                *x *= s;
            }
        }
        out
    }

    /// `self += s * other`.
    #[inline]
    pub fn axpy(&mut self, s: T, other: &Self) {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] += other.0[i][j] * s;
            }
        }
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.0
            .iter()
            .flatten()
            .fold(T::zero(), |acc, z| acc.max(z.norm()))
    }

    /// Largest imaginary-part magnitude.
    pub fn max_imag(&self) -> T {
        self.0
            .iter()
            .flatten()
            .fold(T::zero(), |acc, z| acc.max(z.im.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    #[inline]
    pub fn apply(&self, v: &BlochVector<T>) -> BlochVector<T> {
        let m = &self.0;
        let a = &v.0;
        BlochVector([
            m[0][0] * a[0] + m[0][1] * a[1] + m[0][2] * a[2],
            m[1][0] * a[0] + m[1][1] * a[1] + m[1][2] * a[2],
            m[2][0] * a[0] + m[2][1] * a[1] + m[2][2] * a[2],
        ])
    }
}

impl<T: Real> Index<(usize, usize)> for GeneratorMatrix<T> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.0[i][j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for GeneratorMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.0[i][j]
    }
}

impl<T: Real> Add for GeneratorMatrix<T> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl<T: Real> AddAssign for GeneratorMatrix<T> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] = self.0[i][j] + rhs.0[i][j];
            }
        }
    }
}

impl<T: Real> Sub for GeneratorMatrix<T> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: Self) -> Self {
        self -= rhs;
        self
    }
}

impl<T: Real> SubAssign for GeneratorMatrix<T> {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] = self.0[i][j] - rhs.0[i][j];
            }
        }
    }
}

impl<T: Real> Neg for GeneratorMatrix<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale_real(-T::one())
    }
}

impl<T: Real> Mul for GeneratorMatrix<T> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let a = &self.0;
        let b = &rhs.0;
        let mut out = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
            }
        }
        out
    }
}

/// Complex Bloch vector `A = (<σx>, <σy>, <σz>)`; complex because the
/// stochastic trajectories are driven by complex noise.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlochVector<T: Real>(pub [Complex<T>; 3]);

impl<T: Real> BlochVector<T> {
    pub fn from_real(v: [T; 3]) -> Self {
        Self([creal(v[0]), creal(v[1]), creal(v[2])])
    }

    pub fn zero() -> Self {
        Self::from_real([T::zero(); 3])
    }

    pub fn re(&self) -> [T; 3] {
        [self.0[0].re, self.0[1].re, self.0[2].re]
    }

    pub fn max_imag(&self) -> T {
        self.0.iter().fold(T::zero(), |acc, z| acc.max(z.im.abs()))
    }

    /// Euclidean length of the real part.
    pub fn real_norm(&self) -> T {
        let r = self.re();
        (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    #[inline]
    pub fn axpy(&self, s: T, other: &Self) -> Self {
        Self([
            self.0[0] + other.0[0] * s,
            self.0[1] + other.0[1] * s,
            self.0[2] + other.0[2] * s,
        ])
    }
}

impl<T: Real> Index<usize> for BlochVector<T> {
    type Output = Complex<T>;
    fn index(&self, i: usize) -> &Complex<T> {
        &self.0[i]
    }
}
