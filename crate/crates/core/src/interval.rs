//! Closed real intervals used as enclosures.
//!
//! Endpoints are plain `f64` computed with round-to-nearest; the enclosures
//! are exact up to a few ulps of floating point rounding.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A closed interval `[lo, hi]`. Either endpoint may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

/// Enclosure of a real quantity.
pub type Enclosure = Interval;

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(!(lo > hi), "inverted interval [{lo}, {hi}]");
        Self { lo, hi }
    }

    /// Builds the interval spanned by two values in either order.
    pub fn spanning(a: f64, b: f64) -> Self {
        if a <= b {
            Self { lo: a, hi: b }
        } else {
            Self { lo: b, hi: a }
        }
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub const UNIT: Interval = Interval { lo: 0.0, hi: 1.0 };

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        if self.lo.is_infinite() || self.hi.is_infinite() {
            if self.lo == self.hi {
                return self.lo;
            }
            return if self.lo.is_infinite() && self.hi.is_infinite() {
                0.0
            } else if self.lo.is_infinite() {
                self.hi
            } else {
                self.lo
            };
        }
        0.5 * self.lo + 0.5 * self.hi
    }

    pub fn radius(&self) -> f64 {
        0.5 * self.width()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// True when `other` lies inside `self`.
    pub fn encloses(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn widen(&self, eps: f64) -> Interval {
        Interval { lo: self.lo - eps, hi: self.hi + eps }
    }

    /// Maps the interval through a monotone function.
    pub fn map_monotone(&self, f: impl Fn(f64) -> f64) -> Interval {
        Interval::spanning(f(self.lo), f(self.hi))
    }

    pub fn exp(&self) -> Interval {
        Interval { lo: self.lo.exp(), hi: self.hi.exp() }
    }

    pub fn ln(&self) -> Interval {
        Interval { lo: self.lo.ln(), hi: self.hi.ln() }
    }

    pub fn sqrt(&self) -> Interval {
        Interval { lo: self.lo.sqrt(), hi: self.hi.sqrt() }
    }

    pub fn abs(&self) -> Interval {
        if self.lo >= 0.0 {
            *self
        } else if self.hi <= 0.0 {
            -*self
        } else {
            Interval { lo: 0.0, hi: (-self.lo).max(self.hi) }
        }
    }

    pub fn scale(&self, c: f64) -> Interval {
        Interval::spanning(self.lo * c, self.hi * c)
    }

    /// Real power with a constant exponent. Requires a nonnegative base
    /// unless the exponent is an integer.
    pub fn powf(&self, p: f64) -> Interval {
        if p == 0.0 {
            return Interval::point(1.0);
        }
        if self.lo >= 0.0 {
            return Interval::spanning(self.lo.powf(p), self.hi.powf(p));
        }
        if p.fract() == 0.0 {
            let n = p as i32;
            let a = self.lo.powi(n);
            let b = self.hi.powi(n);
            if n % 2 == 0 && self.hi >= 0.0 {
                if n > 0 {
                    return Interval { lo: 0.0, hi: a.max(b) };
                }
                return Interval { lo: a.min(b), hi: f64::INFINITY };
            }
            if n < 0 && self.hi >= 0.0 {
                return Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };
            }
            return Interval::spanning(a, b);
        }
        Interval { lo: f64::NAN, hi: f64::NAN }
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn is_nan(&self) -> bool {
        self.lo.is_nan() || self.hi.is_nan()
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval { lo: self.lo + rhs.lo, hi: self.hi + rhs.hi }
    }
}

impl Add<f64> for Interval {
    type Output = Interval;
    fn add(self, rhs: f64) -> Interval {
        Interval { lo: self.lo + rhs, hi: self.hi + rhs }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval { lo: self.lo - rhs.hi, hi: self.hi - rhs.lo }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let c = [self.lo * rhs.lo, self.lo * rhs.hi, self.hi * rhs.lo, self.hi * rhs.hi];
        let c = c.map(|v| if v.is_nan() { 0.0 } else { v });
        Interval {
            lo: c.iter().copied().fold(f64::INFINITY, f64::min),
            hi: c.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

impl Mul<f64> for Interval {
    type Output = Interval;
    fn mul(self, rhs: f64) -> Interval {
        self.scale(rhs)
    }
}

impl Div for Interval {
    type Output = Interval;
    /// Division; a divisor straddling zero yields the whole real line.
    fn div(self, rhs: Interval) -> Interval {
        if rhs.lo > 0.0 || rhs.hi < 0.0 {
            let inv = Interval::spanning(1.0 / rhs.lo, 1.0 / rhs.hi);
            self * inv
        } else {
            Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY }
        }
    }
}
