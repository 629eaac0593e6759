//! Small dense linear algebra on window-sized matrices.
//!
//! Everything here is deliberately bespoke: the factorization must run
//! *without pivoting* to preserve the unit-lower/upper splitting, and
//! determinants of window minors routinely leave the f64 exponent range, so
//! they are carried as (mantissa, power of two) pairs.

use crate::error::{Error, Result};
use crate::real::Real;

/// A value `mantissa · 2^exp2`, renormalized so the mantissa stays
/// representable in every backend.
#[derive(Clone, Debug)]
pub struct Scaled<R> {
    pub mantissa: R,
    pub exp2: i64,
}

impl<R: Real> Scaled<R> {
    pub fn one() -> Self {
        Scaled {
            mantissa: R::one(),
            exp2: 0,
        }
    }

    pub fn mul_assign(&mut self, factor: &R) {
        self.mantissa = self.mantissa.clone() * factor.clone();
        self.renorm();
    }

    fn renorm(&mut self) {
        const STEP: i64 = 256;
        loop {
            let a = self.mantissa.abs().to_f64();
            if a == 0.0 {
                self.exp2 = 0;
                return;
            }
            if !a.is_finite() || a > 1e60 {
                self.mantissa = self.mantissa.clone() * R::from_f64(2.0).powi(-STEP);
                self.exp2 += STEP;
            } else if a < 1e-60 {
                self.mantissa = self.mantissa.clone() * R::from_f64(2.0).powi(STEP);
                self.exp2 -= STEP;
            } else {
                return;
            }
        }
    }

    /// The plain value; may overflow the backend for extreme exponents.
    pub fn value(&self) -> R {
        self.mantissa.clone() * R::from_f64(2.0).powi(self.exp2)
    }

    /// self / other as a plain value.
    pub fn ratio_to(&self, other: &Scaled<R>) -> R {
        (self.mantissa.clone() / other.mantissa.clone())
            * R::from_f64(2.0).powi(self.exp2 - other.exp2)
    }

    pub fn log2_abs(&self) -> f64 {
        self.mantissa.abs().to_f64().log2() + self.exp2 as f64
    }
}

/// Determinant via LU with partial pivoting; `a` is consumed.
pub fn det_scaled<R: Real>(mut a: Vec<Vec<R>>) -> Scaled<R> {
    let n = a.len();
    let mut det = Scaled::one();
    let mut sign = false;
    for k in 0..n {
        let (imax, amax) = (k..n)
            .map(|i| (i, a[i][k].abs().to_f64()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if amax == 0.0 {
            return Scaled {
                mantissa: R::zero(),
                exp2: 0,
            };
        }
        if imax != k {
            a.swap(imax, k);
            sign = !sign;
        }
        let pivot = a[k][k].clone();
        det.mul_assign(&pivot);
        for i in k + 1..n {
            let m = a[i][k].clone() / pivot.clone();
            for j in k + 1..n {
                let sub = m.clone() * a[k][j].clone();
                a[i][j] = a[i][j].clone() - sub;
            }
        }
    }
    if sign {
        det.mantissa = -det.mantissa;
    }
    det
}

/// Gaussian elimination without pivoting: `a` becomes the strict-lower
/// multipliers plus the upper factor; returns the pivot sequence.
///
/// A pivot is rejected when it falls below `pivot_tol` times its row's
/// original sup-norm (the paper-side genericity conditions show up here).
pub fn lu_no_pivot<R: Real>(a: &mut [Vec<R>], row_scale: &[f64], pivot_tol: f64, site_of: impl Fn(usize) -> i64) -> Result<Vec<R>> {
    let n = a.len();
    let mut pivots = Vec::with_capacity(n);
    for k in 0..n {
        let pivot = a[k][k].clone();
        let pmag = pivot.abs().to_f64();
        if !pmag.is_finite() || pmag <= pivot_tol * row_scale[k].max(f64::MIN_POSITIVE) {
            return Err(Error::PivotFailure {
                site: site_of(k),
                magnitude: pmag,
            });
        }
        pivots.push(pivot.clone());
        for i in k + 1..n {
            if a[i][k].is_zero() {
                continue;
            }
            let m = a[i][k].clone() / pivot.clone();
            for j in k + 1..n {
                let sub = m.clone() * a[k][j].clone();
                a[i][j] = a[i][j].clone() - sub;
            }
            a[i][k] = m;
        }
    }
    Ok(pivots)
}

/// Invert a unit lower triangular matrix given as strict-lower entries in `l`
/// (as produced by [`lu_no_pivot`]): returns the dense inverse.
pub fn invert_unit_lower<R: Real>(l: &[Vec<R>]) -> Vec<Vec<R>> {
    let n = l.len();
    let mut inv = vec![vec![R::zero(); n]; n];
    for j in 0..n {
        inv[j][j] = R::one();
        for i in j + 1..n {
            let mut acc = R::zero();
            for k in j..i {
                if !inv[k][j].is_zero() {
                    acc = acc + l[i][k].clone() * inv[k][j].clone();
                }
            }
            inv[i][j] = -acc;
        }
    }
    inv
}
