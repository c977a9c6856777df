//! Coefficient backends.
//!
//! [`Coeff`] is the scalar interface every series routine is written against.
//! Two families implement it: [`GaussRat`], the exact Gaussian rationals
//! `a + b i` with `a, b ∈ ℚ`, and `Complex<T>` for any float `T`
//! (in practice `f64`, with `f32` available for cheap evaluation).

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::{Complex, Complex64};
use num_traits::{Float, FloatConst, Num, One, Zero};

use crate::rational::Rational;

/// Scalar interface shared by the exact and floating backends.
pub trait Coeff:
    Clone
    + fmt::Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Num
    + Neg<Output = Self>
{
    /// Exact backends compare with `==` and never prune small values.
    const EXACT: bool;

    fn from_i64(n: i64) -> Self;

    fn from_ratio(numer: i64, denom: i64) -> Self;

    fn from_rational(re: &Rational, im: &Rational) -> Self;

    fn imag_unit() -> Self;

    fn to_c64(&self) -> Complex64;

    /// Conversion from a float value; exact backends recover small rationals
    /// and return `None` when none matches within a relative `1e-12`.
    fn from_c64(z: Complex64) -> Option<Self>;

    fn magnitude(&self) -> f64 {
        self.to_c64().norm()
    }

    /// Default relative threshold below which a float coefficient is dropped.
    fn default_eps() -> f64;

    /// Whether this coefficient counts as zero relative to `scale`.
    fn is_negligible(&self, scale: f64, eps: f64) -> bool {
        if Self::EXACT {
            self.is_zero()
        } else {
            self.magnitude() <= eps * scale.max(f64::MIN_POSITIVE)
        }
    }

    /// A k-th root, principal branch for floats; exact backends return
    /// `None` when the root leaves the Gaussian rationals.
    fn nth_root(&self, k: u32) -> Option<Self>;

    fn add_ref(&self, o: &Self) -> Self {
        self.clone() + o.clone()
    }
    fn sub_ref(&self, o: &Self) -> Self {
        self.clone() - o.clone()
    }
    fn mul_ref(&self, o: &Self) -> Self {
        self.clone() * o.clone()
    }
    fn div_ref(&self, o: &Self) -> Self {
        self.clone() / o.clone()
    }
    /// `self += a * b`.
    fn add_prod(&mut self, a: &Self, b: &Self) {
        let p = a.mul_ref(b);
        *self = self.add_ref(&p);
    }
    fn scale_i64(&self, n: i64) -> Self {
        self.mul_ref(&Self::from_i64(n))
    }
    fn powi(&self, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = acc.mul_ref(self);
        }
        acc
    }
}

/// Exact Gaussian rational `re + im·i`.
#[derive(Clone, PartialEq, Eq)]
pub struct GaussRat {
    pub re: Rational,
    pub im: Rational,
}

impl GaussRat {
    pub fn new(re: Rational, im: Rational) -> Self {
        GaussRat { re, im }
    }

    pub fn real(re: Rational) -> Self {
        GaussRat { re, im: Rational::zero() }
    }

    pub fn conj(&self) -> Self {
        GaussRat { re: self.re.clone(), im: -&self.im }
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    fn norm_sqr(&self) -> Rational {
        &(&self.re * &self.re) + &(&self.im * &self.im)
    }
}

impl fmt::Debug for GaussRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Prints `re`, `im*i` or `re+im*i` with rationals as `n/d`.
impl fmt::Display for GaussRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else if self.re.is_zero() {
            write!(f, "{}*i", self.im)
        } else if self.im.signum_i32() < 0 {
            write!(f, "{}-{}*i", self.re, self.im.abs())
        } else {
            write!(f, "{}+{}*i", self.re, self.im)
        }
    }
}

impl<'a> Add<&'a GaussRat> for &'a GaussRat {
    type Output = GaussRat;
    fn add(self, o: &'a GaussRat) -> GaussRat {
        GaussRat { re: &self.re + &o.re, im: &self.im + &o.im }
    }
}

impl<'a> Sub<&'a GaussRat> for &'a GaussRat {
    type Output = GaussRat;
    fn sub(self, o: &'a GaussRat) -> GaussRat {
        GaussRat { re: &self.re - &o.re, im: &self.im - &o.im }
    }
}

impl<'a> Mul<&'a GaussRat> for &'a GaussRat {
    type Output = GaussRat;
    fn mul(self, o: &'a GaussRat) -> GaussRat {
        if self.im.is_zero() && o.im.is_zero() {
            return GaussRat::real(&self.re * &o.re);
        }
        GaussRat {
            re: &(&self.re * &o.re) - &(&self.im * &o.im),
            im: &(&self.re * &o.im) + &(&self.im * &o.re),
        }
    }
}

impl<'a> Div<&'a GaussRat> for &'a GaussRat {
    type Output = GaussRat;
    fn div(self, o: &'a GaussRat) -> GaussRat {
        assert!(!o.is_zero(), "division by zero coefficient");
        if o.im.is_zero() {
            return GaussRat { re: &self.re / &o.re, im: &self.im / &o.re };
        }
        let n = o.norm_sqr();
        let num = self * &o.conj();
        GaussRat { re: &num.re / &n, im: &num.im / &n }
    }
}

macro_rules! owned_op {
    ($trait:ident, $method:ident) => {
        impl $trait for GaussRat {
            type Output = GaussRat;
            fn $method(self, o: GaussRat) -> GaussRat {
                (&self).$method(&o)
            }
        }
    };
}
owned_op!(Add, add);
owned_op!(Sub, sub);
owned_op!(Mul, mul);
owned_op!(Div, div);

impl std::ops::Rem for GaussRat {
    type Output = GaussRat;
    fn rem(self, _o: GaussRat) -> GaussRat {
        GaussRat::zero()
    }
}

impl Neg for GaussRat {
    type Output = GaussRat;
    fn neg(self) -> GaussRat {
        GaussRat { re: -&self.re, im: -&self.im }
    }
}

impl Zero for GaussRat {
    fn zero() -> Self {
        GaussRat { re: Rational::zero(), im: Rational::zero() }
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

impl One for GaussRat {
    fn one() -> Self {
        GaussRat::real(Rational::one())
    }
}

impl Num for GaussRat {
    type FromStrRadixErr = String;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, String> {
        if radix != 10 {
            return Err("only radix 10 is supported".into());
        }
        Ok(GaussRat::real(s.parse()?))
    }
}

impl Coeff for GaussRat {
    const EXACT: bool = true;

    fn from_i64(n: i64) -> Self {
        GaussRat::real(Rational::from_integer(n))
    }

    fn from_ratio(numer: i64, denom: i64) -> Self {
        GaussRat::real(Rational::new(numer, denom))
    }

    fn from_rational(re: &Rational, im: &Rational) -> Self {
        GaussRat { re: re.clone(), im: im.clone() }
    }

    fn imag_unit() -> Self {
        GaussRat { re: Rational::zero(), im: Rational::one() }
    }

    fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    fn from_c64(z: Complex64) -> Option<Self> {
        let scale = z.norm().max(1.0);
        let re = Rational::approximate(z.re, 1_000_000)?;
        let im = Rational::approximate(z.im, 1_000_000)?;
        let back = Complex64::new(re.to_f64(), im.to_f64());
        if (back - z).norm() <= 1e-12 * scale {
            Some(GaussRat { re, im })
        } else {
            None
        }
    }

    fn default_eps() -> f64 {
        0.0
    }

    fn nth_root(&self, k: u32) -> Option<Self> {
        if k == 1 || self.is_zero() {
            return Some(self.clone());
        }
        if self.im.is_zero() {
            if let Some(r) = self.re.nth_root(k) {
                return Some(GaussRat::real(r));
            }
        }
        let approx = self.to_c64().powf(1.0 / k as f64);
        let cand = GaussRat::from_c64(approx)?;
        if cand.powi(k) == *self {
            Some(cand)
        } else {
            None
        }
    }

    fn add_ref(&self, o: &Self) -> Self {
        self + o
    }
    fn sub_ref(&self, o: &Self) -> Self {
        self - o
    }
    fn mul_ref(&self, o: &Self) -> Self {
        self * o
    }
    fn div_ref(&self, o: &Self) -> Self {
        self / o
    }
    fn add_prod(&mut self, a: &Self, b: &Self) {
        let p = a * b;
        self.re = &self.re + &p.re;
        if !p.im.is_zero() {
            self.im = &self.im + &p.im;
        }
    }
}

impl<T> Coeff for Complex<T>
where
    T: Float + FloatConst + fmt::Debug + Send + Sync + 'static,
{
    const EXACT: bool = false;

    fn from_i64(n: i64) -> Self {
        Complex::new(T::from(n).unwrap(), T::zero())
    }

    fn from_ratio(numer: i64, denom: i64) -> Self {
        Complex::new(T::from(numer as f64 / denom as f64).unwrap(), T::zero())
    }

    fn from_rational(re: &Rational, im: &Rational) -> Self {
        Complex::new(T::from(re.to_f64()).unwrap(), T::from(im.to_f64()).unwrap())
    }

    fn imag_unit() -> Self {
        Complex::new(T::zero(), T::one())
    }

    fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64().unwrap(), self.im.to_f64().unwrap())
    }

    fn from_c64(z: Complex64) -> Option<Self> {
        Some(Complex::new(T::from(z.re)?, T::from(z.im)?))
    }

    fn magnitude(&self) -> f64 {
        self.norm().to_f64().unwrap()
    }

    fn default_eps() -> f64 {
        (T::epsilon().to_f64().unwrap() * 4.5e3).max(1e-12)
    }

    fn nth_root(&self, k: u32) -> Option<Self> {
        if k == 1 {
            return Some(*self);
        }
        Some(self.powf(T::one() / T::from(k).unwrap()))
    }
}

/// Exact backend alias.
pub type Exact = GaussRat;
/// Double-precision floating backend alias.
pub type Float64 = Complex64;

#[cfg(test)]
mod tests {
    use super::*;

    fn g(a: i64, b: i64, c: i64, d: i64) -> GaussRat {
        GaussRat::new(Rational::new(a, b), Rational::new(c, d))
    }

    #[test]
    fn gaussian_field_operations() {
        let z = g(1, 2, 3, 1);
        let w = g(-2, 1, 1, 3);
        assert_eq!(&(&z * &w) / &w, z);
        assert_eq!(&(&z + &w) - &w, z);
        assert_eq!(GaussRat::imag_unit().powi(2), -GaussRat::one());
    }

    #[test]
    fn exact_roots_in_gaussian_rationals() {
        let minus_one = -GaussRat::one();
        let r = minus_one.nth_root(2).unwrap();
        assert_eq!(r.powi(2), minus_one);
        assert!(GaussRat::from_i64(2).nth_root(2).is_none());
        let z = g(3, 2, -1, 1);
        assert_eq!(z.powi(3).nth_root(3).map(|r| r.powi(3)), Some(z.powi(3)));
    }

    #[test]
    fn float_backend_prunes_relative_to_scale() {
        let tiny = Complex64::new(1e-14, 0.0);
        assert!(tiny.is_negligible(1.0, Complex64::default_eps()));
        assert!(!tiny.is_negligible(1e-6, Complex64::default_eps()));
        assert!(!GaussRat::from_ratio(1, 1_000_000_000).is_negligible(1.0, 1e-3));
    }

    #[test]
    fn display_forms() {
        assert_eq!(format!("{}", g(1, 2, 0, 1)), "1/2");
        assert_eq!(format!("{}", g(0, 1, -1, 1)), "-1*i");
        assert_eq!(format!("{}", g(2, 1, -3, 4)), "2-3/4*i");
    }
}
