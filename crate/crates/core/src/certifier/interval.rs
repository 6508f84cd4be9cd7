//! Closed intervals with exact rational endpoints.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

/// Exact rational value of a finite `f64`.
pub fn rat_from_f64(x: f64) -> Option<Rational> {
    BigRational::from_float(x)
}

pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[derive(Clone, PartialEq, Eq)]
pub struct RatInterval {
    pub lo: Rational,
    pub hi: Rational,
}

impl fmt::Debug for RatInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl fmt::Display for RatInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.6e}, {:.6e}]", to_f64(&self.lo), to_f64(&self.hi))
    }
}

impl RatInterval {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        assert!(lo <= hi, "interval endpoints out of order");
        Self { lo, hi }
    }

    pub fn point(x: Rational) -> Self {
        Self { lo: x.clone(), hi: x }
    }

    pub fn zero() -> Self {
        Self::point(Rational::zero())
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn mid(&self) -> Rational {
        (&self.lo + &self.hi) / rat_int(2)
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(&Rational::zero())
    }

    pub fn split(&self) -> (Self, Self) {
        let m = self.mid();
        (Self::new(self.lo.clone(), m.clone()), Self::new(m, self.hi.clone()))
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(&self.lo + &o.lo, &self.hi + &o.hi)
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::new(&self.lo - &o.hi, &self.hi - &o.lo)
    }

    pub fn neg(&self) -> Self {
        Self::new(-&self.hi, -&self.lo)
    }

    pub fn mul(&self, o: &Self) -> Self {
        let c = [&self.lo * &o.lo, &self.lo * &o.hi, &self.hi * &o.lo, &self.hi * &o.hi];
        let lo = c.iter().min().expect("four products").clone();
        let hi = c.iter().max().expect("four products").clone();
        Self::new(lo, hi)
    }

    pub fn scale(&self, k: &Rational) -> Self {
        if k.is_negative() {
            Self::new(&self.hi * k, &self.lo * k)
        } else {
            Self::new(&self.lo * k, &self.hi * k)
        }
    }

    pub fn recip(&self) -> Result<Self> {
        if self.contains_zero() {
            return Err(Error::Expression(format!("division by an interval containing zero: {self}")));
        }
        Ok(Self::new(self.hi.recip(), self.lo.recip()))
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        Ok(self.mul(&o.recip()?))
    }

    pub fn powi(&self, k: u32) -> Self {
        if k == 0 {
            return Self::point(Rational::one());
        }
        let a = num_traits::pow(self.lo.clone(), k as usize);
        let b = num_traits::pow(self.hi.clone(), k as usize);
        if k % 2 == 1 || !self.lo.is_negative() {
            Self::new(a.clone().min(b.clone()), a.max(b))
        } else if !self.hi.is_positive() {
            Self::new(b, a)
        } else {
            Self::new(Rational::zero(), a.max(b))
        }
    }

    pub fn abs(&self) -> Self {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            self.neg()
        } else {
            Self::new(Rational::zero(), (-&self.lo).max(self.hi.clone()))
        }
    }

    /// Outward enclosure of the square root with rational endpoints.
    pub fn sqrt(&self) -> Result<Self> {
        if self.lo.is_negative() {
            return Err(Error::Expression(format!("square root of {self}")));
        }
        Ok(Self::new(sqrt_below(&self.lo), sqrt_above(&self.hi)))
    }

    pub fn hull(&self, o: &Self) -> Self {
        Self::new(self.lo.clone().min(o.lo.clone()), self.hi.clone().max(o.hi.clone()))
    }
}

/// A rational `s` with `s >= 0` and `s^2 <= x`.
fn sqrt_below(x: &Rational) -> Rational {
    if x.is_zero() {
        return Rational::zero();
    }
    let mut s = rat_from_f64(to_f64(x).sqrt() * (1.0 - 1e-12)).unwrap_or_else(Rational::zero);
    while &(&s * &s) > x {
        s = &s / rat_int(2);
    }
    s
}

/// A rational `s` with `s^2 >= x`.
fn sqrt_above(x: &Rational) -> Rational {
    let mut s = rat_from_f64(to_f64(x).sqrt() * (1.0 + 1e-12) + 1e-300).unwrap_or_else(Rational::one);
    while &(&s * &s) < x {
        s = &s * rat_int(2) + Rational::one();
    }
    s
}
