//! Exact rational numbers with a machine-word fast path.
//!
//! Values are stored as `Ratio<i128>` while every intermediate fits and are
//! promoted to `BigRational` on overflow. Results that fit again are demoted,
//! so equality and hashing never depend on the representation.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};

/// An exact rational number.
#[derive(Clone)]
pub enum Rational {
    Small(Ratio<i128>),
    Big(BigRational),
}

impl Rational {
    pub fn new(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Rational::Small(Ratio::new(numer as i128, denom as i128))
    }

    pub fn from_integer(n: i64) -> Self {
        Rational::Small(Ratio::from_integer(n as i128))
    }

    pub fn from_bigints(numer: BigInt, denom: BigInt) -> Self {
        Self::demote(BigRational::new(numer, denom))
    }

    fn to_big(&self) -> BigRational {
        match self {
            Rational::Small(r) => BigRational::new_raw(BigInt::from(*r.numer()), BigInt::from(*r.denom())),
            Rational::Big(b) => b.clone(),
        }
    }

    fn demote(b: BigRational) -> Self {
        match (b.numer().to_i128(), b.denom().to_i128()) {
            (Some(n), Some(d)) => Rational::Small(Ratio::new_raw(n, d)),
            _ => Rational::Big(b),
        }
    }

    pub fn numer(&self) -> BigInt {
        match self {
            Rational::Small(r) => BigInt::from(*r.numer()),
            Rational::Big(b) => b.numer().clone(),
        }
    }

    pub fn denom(&self) -> BigInt {
        match self {
            Rational::Small(r) => BigInt::from(*r.denom()),
            Rational::Big(b) => b.denom().clone(),
        }
    }

    pub fn is_integer(&self) -> bool {
        match self {
            Rational::Small(r) => r.is_integer(),
            Rational::Big(b) => b.is_integer(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Rational::Small(r) => *r.numer() as f64 / *r.denom() as f64,
            Rational::Big(b) => {
                let n = b.numer().to_f64().unwrap_or(f64::NAN);
                let d = b.denom().to_f64().unwrap_or(f64::NAN);
                if n.is_finite() && d.is_finite() {
                    n / d
                } else {
                    let shift = (b.denom().bits() as i64 - 60).max(0) as u64;
                    let n2 = (b.numer() >> shift).to_f64().unwrap_or(f64::NAN);
                    let d2 = (b.denom() >> shift).to_f64().unwrap_or(f64::NAN);
                    n2 / d2
                }
            }
        }
    }

    /// Closest rational with denominator at most `max_den` (continued fractions).
    pub fn approximate(x: f64, max_den: i64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        let (mut p0, mut q0, mut p1, mut q1) = (0i128, 1i128, 1i128, 0i128);
        let mut v = x;
        for _ in 0..64 {
            let a = v.floor();
            if a.abs() > 1e18 {
                break;
            }
            let ai = a as i128;
            let p2 = ai * p1 + p0;
            let q2 = ai * q1 + q0;
            if q2 > max_den as i128 {
                break;
            }
            p0 = p1;
            q0 = q1;
            p1 = p2;
            q1 = q2;
            let frac = v - a;
            if frac.abs() < 1e-15 {
                break;
            }
            v = 1.0 / frac;
        }
        if q1 == 0 {
            return None;
        }
        Some(Rational::Small(Ratio::new(p1, q1)))
    }

    pub fn abs(&self) -> Self {
        match self {
            Rational::Small(r) => match r.numer().checked_abs() {
                Some(n) => Rational::Small(Ratio::new_raw(n, *r.denom())),
                None => Rational::Big(self.to_big().abs()),
            },
            Rational::Big(b) => Rational::Big(b.abs()),
        }
    }

    pub fn signum_i32(&self) -> i32 {
        match self {
            Rational::Small(r) => r.numer().signum() as i32,
            Rational::Big(b) => {
                if b.is_positive() {
                    1
                } else if b.is_negative() {
                    -1
                } else {
                    0
                }
            }
        }
    }

    /// Integer power with nonnegative exponent.
    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Rational::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Exact k-th root if it exists in the rationals.
    pub fn nth_root(&self, k: u32) -> Option<Self> {
        if k == 1 {
            return Some(self.clone());
        }
        if self.is_zero() {
            return Some(Rational::zero());
        }
        let neg = self.signum_i32() < 0;
        if neg && k % 2 == 0 {
            return None;
        }
        let n = self.numer().abs();
        let d = self.denom();
        let rn = n.nth_root(k);
        let rd = d.nth_root(k);
        if num_traits::pow(rn.clone(), k as usize) != n || num_traits::pow(rd.clone(), k as usize) != d {
            return None;
        }
        let r = Rational::from_bigints(if neg { -rn } else { rn }, rd);
        Some(r)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl<'a> $trait<&'a Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                if let (Rational::Small(a), Rational::Small(b)) = (self, rhs) {
                    if let Some(r) = a.$checked(b) {
                        return Rational::Small(r);
                    }
                }
                Rational::demote(self.to_big().$method(rhs.to_big()))
            }
        }
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                (&self).$method(&rhs)
            }
        }
    };
}

binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);
binop!(Mul, mul, checked_mul);
binop!(Div, div, checked_div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        -&self
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        match self {
            Rational::Small(r) => match r.numer().checked_neg() {
                Some(n) => Rational::Small(Ratio::new_raw(n, *r.denom())),
                None => Rational::Big(-self.to_big()),
            },
            Rational::Big(b) => Rational::demote(-b.clone()),
        }
    }
}

impl Zero for Rational {
    fn zero() -> Self {
        Rational::Small(Ratio::zero())
    }
    fn is_zero(&self) -> bool {
        match self {
            Rational::Small(r) => r.is_zero(),
            Rational::Big(b) => b.is_zero(),
        }
    }
}

impl One for Rational {
    fn one() -> Self {
        Rational::Small(Ratio::one())
    }
}

impl PartialEq for Rational {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Rational::Small(a), Rational::Small(b)) => a == b,
            _ => self.to_big() == other.to_big(),
        }
    }
}

impl Eq for Rational {}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Rational::Small(a), Rational::Small(b)) => {
                match (a.numer().checked_mul(b.denom()), b.numer().checked_mul(a.denom())) {
                    (Some(x), Some(y)) => x.cmp(&y),
                    _ => self.to_big().cmp(&other.to_big()),
                }
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Prints `n` for integers and `n/d` otherwise.
impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, d) = (self.numer(), self.denom());
        if d.is_one() {
            write!(f, "{}", n)
        } else {
            write!(f, "{}/{}", n, d)
        }
    }
}

impl std::str::FromStr for Rational {
    type Err = String;
    /// Accepts `n`, `n/d` and finite decimals such as `-1.25`.
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if let Some((a, b)) = s.split_once('/') {
            let n: BigInt = a.trim().parse().map_err(|_| format!("bad numerator `{a}`"))?;
            let d: BigInt = b.trim().parse().map_err(|_| format!("bad denominator `{b}`"))?;
            if d.is_zero() {
                return Err("zero denominator".into());
            }
            return Ok(Rational::from_bigints(n, d));
        }
        if let Some((ip, fp)) = s.split_once('.') {
            let neg = ip.starts_with('-');
            let digits = format!("{}{}", ip.trim_start_matches(['-', '+']), fp);
            let n: BigInt = if digits.is_empty() {
                BigInt::zero()
            } else {
                digits.parse().map_err(|_| format!("bad decimal `{s}`"))?
            };
            let d = num_traits::pow(BigInt::from(10), fp.len());
            let n = if neg { -n } else { n };
            return Ok(Rational::from_bigints(n, d));
        }
        let n: BigInt = s.parse().map_err(|_| format!("bad integer `{s}`"))?;
        Ok(Rational::from_bigints(n, BigInt::one()))
    }
}

/// Greatest common divisor of nonnegative machine integers.
pub fn gcd_u32(a: u32, b: u32) -> u32 {
    a.gcd(&b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn promotes_on_overflow_and_demotes_back() {
        let big = Rational::from_integer(i64::MAX);
        let sq = &big * &big;
        let sq4 = &sq * &sq;
        assert!(matches!(sq4, Rational::Big(_)));
        let back = &(&sq4 / &sq) / &sq;
        assert!(matches!(back, Rational::Small(_)));
        assert_eq!(back, Rational::one());
    }

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!("3/6".parse::<Rational>().unwrap(), Rational::new(1, 2));
        assert_eq!("-1.25".parse::<Rational>().unwrap(), Rational::new(-5, 4));
        assert_eq!(format!("{}", Rational::new(-6, 4)), "-3/2");
    }

    #[test]
    fn exact_roots() {
        assert_eq!(Rational::new(8, 27).nth_root(3), Some(Rational::new(2, 3)));
        assert_eq!(Rational::new(2, 1).nth_root(2), None);
        assert_eq!(Rational::new(-8, 1).nth_root(3), Some(Rational::from_integer(-2)));
    }

    #[test]
    fn continued_fraction_recovers_simple_values() {
        assert_eq!(Rational::approximate(0.75, 1000), Some(Rational::new(3, 4)));
        assert_eq!(Rational::approximate(-1.0 / 3.0, 1000), Some(Rational::new(-1, 3)));
    }
}
