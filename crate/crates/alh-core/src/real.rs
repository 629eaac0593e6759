//! Scalar abstraction: every algorithm in this crate is generic over [`Real`].
//!
//! Two backends are provided: plain `f64` (the default everywhere) and
//! [`BigReal`], an arbitrary-precision binary float backed by `dashu-float`.
//! Window entries grow like q^{-|s|·k} near the lattice edges, so harsher
//! parameter regimes than the documented defaults (q ≥ 0.4, |s| ≤ 24) can
//! exceed double precision; the big backend exists for those.

use std::cell::Cell;
use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};

use dashu_float::round::mode::HalfEven;

/// Real scalar used by the banded-operator algebra.
///
/// Arithmetic is by value; implementations are expected to be cheap to clone.
pub trait Real:
    Clone
    + PartialOrd
    + PartialEq
    + Debug
    + Display
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn from_i64(n: i64) -> Self;
    fn to_f64(&self) -> f64;
    fn abs(&self) -> Self;
    fn sqrt(&self) -> Self;
    /// Integer power with negative exponents allowed.
    fn powi(&self, n: i64) -> Self;
    fn is_zero(&self) -> bool;
    /// False only for non-finite values of backends that have them.
    fn is_finite(&self) -> bool;

    fn recip(&self) -> Self {
        Self::one() / self.clone()
    }
}

impl Real for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn powi(&self, n: i64) -> Self {
        // f64::powi saturates the exponent at i32; fall back to powf outside.
        if let Ok(n32) = i32::try_from(n) {
            f64::powi(*self, n32)
        } else {
            f64::powf(*self, n as f64)
        }
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

type Fb = dashu_float::FBig<HalfEven, 2>;

thread_local! {
    static BIG_PRECISION_BITS: Cell<usize> = const { Cell::new(340) };
}

/// Set the working precision of [`BigReal`] in decimal digits (per thread).
pub fn set_big_precision_digits(digits: usize) {
    let bits = ((digits as f64) * std::f64::consts::LOG2_10).ceil() as usize + 8;
    BIG_PRECISION_BITS.with(|p| p.set(bits.max(64)));
}

pub fn big_precision_bits() -> usize {
    BIG_PRECISION_BITS.with(|p| p.get())
}

/// Arbitrary-precision scalar; precision is taken from the thread-local
/// setting at construction time and propagated through arithmetic by dashu.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct BigReal(Fb);

impl BigReal {
    fn lift(x: Fb) -> Self {
        BigReal(x)
    }
}

impl Debug for BigReal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BigReal({})", self.0)
    }
}

impl Display for BigReal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        Display::fmt(&self.0, f)
    }
}

impl Add for BigReal {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        BigReal(self.0 + o.0)
    }
}
impl Sub for BigReal {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        BigReal(self.0 - o.0)
    }
}
impl Mul for BigReal {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        BigReal(self.0 * o.0)
    }
}
impl Div for BigReal {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let prec = self.0.precision().max(o.0.precision()).max(big_precision_bits());
        BigReal(self.0.with_precision(prec).value() / o.0)
    }
}
impl Neg for BigReal {
    type Output = Self;
    fn neg(self) -> Self {
        BigReal(-self.0)
    }
}

impl Real for BigReal {
    fn zero() -> Self {
        BigReal(Fb::ZERO)
    }
    fn one() -> Self {
        BigReal(Fb::ONE)
    }
    fn from_f64(x: f64) -> Self {
        let v = Fb::try_from(x).expect("finite f64");
        BigReal(v.with_precision(big_precision_bits()).value())
    }
    fn from_i64(n: i64) -> Self {
        let v = Fb::from(n);
        BigReal(v.with_precision(big_precision_bits()).value())
    }
    fn to_f64(&self) -> f64 {
        self.0.to_f64().value()
    }
    fn abs(&self) -> Self {
        if self.0 < Fb::ZERO {
            BigReal(-self.0.clone())
        } else {
            self.clone()
        }
    }
    fn sqrt(&self) -> Self {
        let prec = self.0.precision().max(big_precision_bits());
        BigReal::lift(self.0.clone().with_precision(prec).value().sqrt())
    }
    fn powi(&self, n: i64) -> Self {
        if n == 0 {
            return Self::one();
        }
        let prec = self.0.precision().max(big_precision_bits());
        let base = self.0.clone().with_precision(prec).value();
        if n > 0 {
            BigReal(base.powi(n.into()))
        } else {
            BigReal(Fb::ONE.with_precision(prec).value() / base.powi((-n).into()))
        }
    }
    fn is_zero(&self) -> bool {
        self.0 == Fb::ZERO
    }
    fn is_finite(&self) -> bool {
        true
    }
}
