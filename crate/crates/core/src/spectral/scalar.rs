use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;

/// Field of matrix entries: `f64` for real-symmetric problems, `Complex64`
/// for the Hermitian fiber problems.
pub trait Scalar:
    faer::traits::ComplexField
    + Copy
    + Debug
    + Default
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + 'static
{
    const IS_COMPLEX: bool;

    fn from_re(x: f64) -> Self;
    fn conjugate(self) -> Self;
    fn re(self) -> f64;
    fn im(self) -> f64;
    fn norm2(self) -> f64;
    fn scale_by(self, s: f64) -> Self;

    /// `e^{i phi}` for complex fields; only `phi == 0` is representable in
    /// the real field.
    fn phase(phi: f64) -> Self;

    fn modulus(self) -> f64 {
        self.norm2().sqrt()
    }
}

impl Scalar for f64 {
    const IS_COMPLEX: bool = false;

    #[inline]
    fn from_re(x: f64) -> Self {
        x
    }
    #[inline]
    fn conjugate(self) -> Self {
        self
    }
    #[inline]
    fn re(self) -> f64 {
        self
    }
    #[inline]
    fn im(self) -> f64 {
        0.0
    }
    #[inline]
    fn norm2(self) -> f64 {
        self * self
    }
    #[inline]
    fn scale_by(self, s: f64) -> Self {
        self * s
    }
    fn phase(phi: f64) -> Self {
        debug_assert!(phi == 0.0, "nonzero phase in a real assembly");
        1.0
    }
}

impl Scalar for Complex64 {
    const IS_COMPLEX: bool = true;

    #[inline]
    fn from_re(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    #[inline]
    fn conjugate(self) -> Self {
        self.conj()
    }
    #[inline]
    fn re(self) -> f64 {
        self.re
    }
    #[inline]
    fn im(self) -> f64 {
        self.im
    }
    #[inline]
    fn norm2(self) -> f64 {
        self.norm_sqr()
    }
    #[inline]
    fn scale_by(self, s: f64) -> Self {
        Complex64::new(self.re * s, self.im * s)
    }
    fn phase(phi: f64) -> Self {
        Complex64::new(phi.cos(), phi.sin())
    }
}

/// Hermitian inner product `xᴴ y`.
pub fn dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    debug_assert_eq!(x.len(), y.len());
    let mut acc = T::default();
    for (a, b) in x.iter().zip(y) {
        acc += a.conjugate() * *b;
    }
    acc
}

pub fn norm<T: Scalar>(x: &[T]) -> f64 {
    x.iter().map(|v| v.norm2()).sum::<f64>().sqrt()
}

/// `y += a x`
pub fn axpy<T: Scalar>(a: T, x: &[T], y: &mut [T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * *xi;
    }
}
