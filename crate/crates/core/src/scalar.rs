//! Scalar ground fields for the jet algebra.
//!
//! Everything downstream is generic over [`Scalar`]: `Complex64` is the
//! working field, and complex rationals back the exact mode used to settle
//! sign questions with zero tolerance. The exact mode only supports square
//! roots of perfect rational squares, which is all the flat-metric,
//! Pythagorean-covector cases ever ask for.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::AlgebraError;

/// Complex scalar field the jet algebra is built over.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// True when arithmetic is exact and checks may demand equality.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    /// The imaginary unit.
    fn i() -> Self;
    fn from_i64(v: i64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    /// Exact embedding of an `f64` (every finite float is rational).
    fn from_f64(v: f64) -> Self;
    fn from_re_im(re: f64, im: f64) -> Self;
    fn to_c64(&self) -> Complex64;

    fn is_zero(&self) -> bool;
    /// Modulus as `f64`, for tolerance checks and diagnostics.
    fn abs(&self) -> f64;
    /// Multiply by a small nonnegative integer (Leibniz weights).
    fn scale_u64(&self, w: u64) -> Self;
    /// Principal square root of a constant, used to seed jet square roots.
    ///
    /// Requires positive real part; the exact field additionally requires a
    /// perfect rational square.
    fn sqrt_const(&self) -> Result<Self, AlgebraError>;
}

impl Scalar for Complex64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn i() -> Self {
        Complex64::new(0.0, 1.0)
    }
    fn from_i64(v: i64) -> Self {
        Complex64::new(v as f64, 0.0)
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Complex64::new(num as f64 / den as f64, 0.0)
    }
    fn from_f64(v: f64) -> Self {
        Complex64::new(v, 0.0)
    }
    fn from_re_im(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }
    fn to_c64(&self) -> Complex64 {
        *self
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn abs(&self) -> f64 {
        self.norm()
    }
    fn scale_u64(&self, w: u64) -> Self {
        self * w as f64
    }
    fn sqrt_const(&self) -> Result<Self, AlgebraError> {
        if self.re <= 0.0 && self.im == 0.0 {
            return Err(AlgebraError::SqrtBranch);
        }
        Ok(self.sqrt())
    }
}

/// Complex number over arbitrary-precision rationals: the exact mode scalar.
#[derive(Clone, PartialEq, Eq)]
pub struct ExactComplex {
    pub re: BigRational,
    pub im: BigRational,
}

impl ExactComplex {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Self { re, im }
    }

    fn ratio(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
}

impl Debug for ExactComplex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} + {}i", self.re, self.im)
    }
}

impl Add for ExactComplex {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl Sub for ExactComplex {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl Mul for ExactComplex {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            &self.re * &rhs.re - &self.im * &rhs.im,
            &self.re * &rhs.im + &self.im * &rhs.re,
        )
    }
}

impl Div for ExactComplex {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let d = &rhs.re * &rhs.re + &rhs.im * &rhs.im;
        assert!(!d.is_zero(), "exact complex division by zero");
        Self::new(
            (&self.re * &rhs.re + &self.im * &rhs.im) / &d,
            (&self.im * &rhs.re - &self.re * &rhs.im) / &d,
        )
    }
}

impl Neg for ExactComplex {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.im)
    }
}

/// Square root of a nonnegative rational if it is a perfect square.
fn rational_sqrt(v: &BigRational) -> Option<BigRational> {
    if v.is_negative() {
        return None;
    }
    let num = v.numer();
    let den = v.denom();
    let sn = num.sqrt();
    let sd = den.sqrt();
    if &(&sn * &sn) == num && &(&sd * &sd) == den {
        Some(BigRational::new(sn, sd))
    } else {
        None
    }
}

impl Scalar for ExactComplex {
    const EXACT: bool = true;

    fn zero() -> Self {
        Self::new(BigRational::zero(), BigRational::zero())
    }
    fn one() -> Self {
        Self::new(BigRational::one(), BigRational::zero())
    }
    fn i() -> Self {
        Self::new(BigRational::zero(), BigRational::one())
    }
    fn from_i64(v: i64) -> Self {
        Self::new(Self::ratio(v, 1), BigRational::zero())
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Self::new(Self::ratio(num, den), BigRational::zero())
    }
    fn from_f64(v: f64) -> Self {
        let r = BigRational::from_float(v).expect("finite float");
        Self::new(r, BigRational::zero())
    }
    fn from_re_im(re: f64, im: f64) -> Self {
        Self::new(
            BigRational::from_float(re).expect("finite float"),
            BigRational::from_float(im).expect("finite float"),
        )
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    fn abs(&self) -> f64 {
        self.to_c64().norm()
    }
    fn scale_u64(&self, w: u64) -> Self {
        let w = BigRational::from_integer(BigInt::from(w));
        Self::new(&self.re * &w, &self.im * &w)
    }
    fn sqrt_const(&self) -> Result<Self, AlgebraError> {
        if !self.im.is_zero() {
            return Err(AlgebraError::NotExactlyRepresentable(
                "square root of a non-real exact constant".into(),
            ));
        }
        if !self.re.is_positive() {
            return Err(AlgebraError::SqrtBranch);
        }
        match rational_sqrt(&self.re) {
            Some(r) => Ok(Self::new(r, BigRational::zero())),
            None => Err(AlgebraError::NotExactlyRepresentable(
                "square root of a rational that is not a perfect square".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_field_ops() {
        let a = ExactComplex::from_ratio(3, 4);
        let b = ExactComplex::i();
        let p = a.clone() * b.clone();
        assert_eq!(p, ExactComplex::new(BigRational::zero(), ExactComplex::ratio(3, 4)));
        let q = p / b;
        assert_eq!(q, a);
    }

    #[test]
    fn exact_sqrt_perfect_square() {
        let v = ExactComplex::from_ratio(25, 16);
        assert_eq!(v.sqrt_const().unwrap(), ExactComplex::from_ratio(5, 4));
        assert!(ExactComplex::from_i64(2).sqrt_const().is_err());
        assert!(ExactComplex::from_i64(-4).sqrt_const().is_err());
    }

    #[test]
    fn float_sqrt_branch() {
        assert!(Complex64::new(-1.0, 0.0).sqrt_const().is_err());
        let s = Complex64::new(25.0, 0.0).sqrt_const().unwrap();
        assert_eq!(s, Complex64::new(5.0, 0.0));
    }
}
