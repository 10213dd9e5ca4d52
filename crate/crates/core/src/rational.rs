//! Exact rational helpers shared by every module.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{KakeyaError, Result};

pub type Rational = BigRational;

pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn int(p: i64) -> Rational {
    Rational::from_integer(BigInt::from(p))
}

pub fn pow3(k: u32) -> u64 {
    3u64.pow(k)
}

/// `3^{-k}` as an exact rational.
pub fn inv_pow3(k: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::from(3u64).pow(k))
}

/// Canonical "p/q" rendering (integers render as "p/1").
pub fn fmt_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || KakeyaError::Parse(format!("not a rational: {s:?}"));
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s, "1"),
    };
    let p: BigInt = p.parse().map_err(|_| bad())?;
    let q: BigInt = q.parse().map_err(|_| bad())?;
    if q.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(p, q))
}

pub fn to_f64(r: &Rational) -> f64 {
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(p), Some(q)) if p.is_finite() && q.is_finite() => p / q,
        // Huge numerators/denominators: shift both down before dividing.
        _ => {
            let bits = r.numer().bits().max(r.denom().bits());
            let shift = bits.saturating_sub(1000) as usize;
            let p = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
            let q = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
            p / q
        }
    }
}

/// A small exact fraction `num/den` with `den > 0`, used by the integer
/// sweep kernels where every abscissa has a modest denominator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Frac {
    pub num: i64,
    pub den: i64,
}

impl Frac {
    pub fn new(num: i64, den: i64) -> Frac {
        assert!(den != 0, "zero denominator");
        let (num, den) = if den < 0 { (-num, -den) } else { (num, den) };
        let g = num.gcd(&den).max(1);
        Frac {
            num: num / g,
            den: den / g,
        }
    }

    pub fn from_rational(r: &Rational) -> Option<Frac> {
        Some(Frac::new(r.numer().to_i64()?, r.denom().to_i64()?))
    }

    pub fn to_rational(self) -> Rational {
        rat(self.num, self.den)
    }

    /// Midpoint, reduced.
    pub fn mid(self, other: Frac) -> Frac {
        let num = self.num as i128 * other.den as i128 + other.num as i128 * self.den as i128;
        let den = 2 * self.den as i128 * other.den as i128;
        let g = num.gcd(&den).max(1);
        Frac {
            num: i64::try_from(num / g).expect("midpoint numerator overflow"),
            den: i64::try_from(den / g).expect("midpoint denominator overflow"),
        }
    }

    pub fn max(self, other: Frac) -> Frac {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: Frac) -> Frac {
        if self <= other {
            self
        } else {
            other
        }
    }
}

impl Ord for Frac {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as i128 * other.den as i128).cmp(&(other.num as i128 * self.den as i128))
    }
}

impl PartialOrd for Frac {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
