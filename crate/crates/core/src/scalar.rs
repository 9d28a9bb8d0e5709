//! Scalar abstraction shared by the exact (rational) and floating paths.
//!
//! Every geometric routine in this crate is generic over [`Scalar`]. The
//! rational implementation is exact; the `f64` implementation decides signs
//! with the absolute tolerance [`FLOAT_EPS`], which is meaningful because
//! vectors are kept normalized by [`Scalar::normalize`].

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num::{BigInt, BigRational, Integer, One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

/// Sign tolerance for floating arithmetic.
pub const FLOAT_EPS: f64 = 1e-9;

pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// True when arithmetic is exact and signs are decided without tolerance.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    /// Exact conversion for rationals (binary expansion), identity for floats.
    fn from_f64(v: f64) -> Option<Self>;
    fn to_f64(&self) -> f64;
    /// -1, 0 or 1; floats within [`FLOAT_EPS`] of zero report 0.
    fn sign(&self) -> i8;
    fn abs(&self) -> Self;
    /// Rescales a vector by a positive factor into a canonical form:
    /// a primitive integer vector for rationals, unit max-norm for floats.
    fn normalize(v: &mut [Self]);
    fn parse_literal(s: &str) -> Option<Self>;
    fn to_literal(&self) -> String;

    fn is_zero(&self) -> bool {
        self.sign() == 0
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Zero::zero()
    }

    fn one() -> Self {
        One::one()
    }

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_f64(v: f64) -> Option<Self> {
        BigRational::from_float(v)
    }

    fn to_f64(&self) -> f64 {
        if let Some(f) = ToPrimitive::to_f64(self) {
            return f;
        }
        let n = self.numer().to_f64().unwrap_or(f64::NAN);
        let d = self.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    }

    fn sign(&self) -> i8 {
        if self.is_positive() {
            1
        } else if self.is_negative() {
            -1
        } else {
            0
        }
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn normalize(v: &mut [Self]) {
        if v.iter().all(Zero::is_zero) {
            return;
        }
        let lcm = v
            .iter()
            .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let ints: Vec<BigInt> = v
            .iter()
            .map(|x| (x * BigRational::from_integer(lcm.clone())).to_integer())
            .collect();
        let gcd = ints
            .iter()
            .filter(|x| !x.is_zero())
            .fold(BigInt::zero(), |acc, x| acc.gcd(x));
        for (slot, i) in v.iter_mut().zip(ints) {
            *slot = BigRational::from_integer(i / &gcd);
        }
    }

    fn parse_literal(s: &str) -> Option<Self> {
        parse_rational(s)
    }

    fn to_literal(&self) -> String {
        if self.is_integer() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }

    fn one() -> Self {
        1.0
    }

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_f64(v: f64) -> Option<Self> {
        v.is_finite().then_some(v)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn sign(&self) -> i8 {
        if *self > FLOAT_EPS {
            1
        } else if *self < -FLOAT_EPS {
            -1
        } else {
            0
        }
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn normalize(v: &mut [Self]) {
        let m = v.iter().fold(0.0f64, |acc, x| acc.max(f64::abs(*x)));
        if m > 0.0 {
            for x in v.iter_mut() {
                *x /= m;
                if f64::abs(*x) < 1e-15 {
                    *x = 0.0;
                }
            }
        }
    }

    fn parse_literal(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let p: f64 = p.trim().parse().ok()?;
            let q: f64 = q.trim().parse().ok()?;
            return (q != 0.0).then(|| p / q);
        }
        s.parse::<f64>().ok().filter(|v| v.is_finite())
    }

    fn to_literal(&self) -> String {
        format!("{self}")
    }
}

/// Parses `p`, `p/q`, or a finite decimal such as `-1.25e-3` exactly.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = BigRational::from_integer(all);
    if scale >= 0 {
        value *= BigRational::from_integer(num::pow(ten, scale as usize));
    } else {
        value /= BigRational::from_integer(num::pow(ten, (-scale) as usize));
    }
    Some(if negative { -value } else { value })
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(x, y)| x.clone() - y.clone()).collect()
}

pub fn add<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(x, y)| x.clone() + y.clone()).collect()
}

pub fn scale<T: Scalar>(a: &[T], c: &T) -> Vec<T> {
    a.iter().map(|x| x.clone() * c.clone()).collect()
}

pub fn neg<T: Scalar>(a: &[T]) -> Vec<T> {
    a.iter().map(|x| -x.clone()).collect()
}

pub fn is_zero_vec<T: Scalar>(a: &[T]) -> bool {
    a.iter().all(Scalar::is_zero)
}

pub fn to_f64_vec<T: Scalar>(a: &[T]) -> Vec<f64> {
    a.iter().map(Scalar::to_f64).collect()
}

pub fn normalized<T: Scalar>(a: &[T]) -> Vec<T> {
    let mut v = a.to_vec();
    T::normalize(&mut v);
    v
}

/// Equality of vectors under the scalar's sign rule.
pub fn vec_eq<T: Scalar>(a: &[T], b: &[T]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x.clone() - y.clone()).is_zero())
}

/// True when `a` and `b` are nonzero and parallel (same or opposite direction).
pub fn parallel<T: Scalar>(a: &[T], b: &[T]) -> bool {
    if is_zero_vec(a) || is_zero_vec(b) {
        return false;
    }
    let na = normalized(a);
    let nb = normalized(b);
    vec_eq(&na, &nb) || vec_eq(&na, &neg(&nb))
}

pub fn norm_f64(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot_f64(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn unit_f64<T: Scalar>(a: &[T]) -> Vec<f64> {
    let v = to_f64_vec(a);
    let n = norm_f64(&v);
    v.into_iter().map(|x| x / n).collect()
}
