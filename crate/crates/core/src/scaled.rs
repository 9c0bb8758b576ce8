//! Complex numbers carried as `mantissa * exp(log_scale)`.
//!
//! Imaging factors such as `exp(Re(lambda0 - lambda1) T)` reach exponents of
//! order 1e6 for physical parameters, far outside `f64`. Keeping the exponent
//! as a separate real lets products and sums of such factors be formed
//! exactly as in double precision, with a single fallible conversion at the
//! end.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest `ln |x|` for a finite `f64`.
const LN_MAX: f64 = 709.782712893384;

/// `mantissa * exp(log_scale)`.
///
/// Results of arithmetic are normalized so that `0.5 <= |mantissa| <= 2`
/// for nonzero values; zero is `(0, 0)`. [`ScaledComplex::from_parts`]
/// keeps a caller-chosen split verbatim, which is how a known growth exponent
/// is carried explicitly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledComplex {
    mantissa: Complex64,
    log_scale: f64,
}

impl Default for ScaledComplex {
    fn default() -> Self {
        Self::ZERO
    }
}

impl ScaledComplex {
    pub const ZERO: ScaledComplex = ScaledComplex {
        mantissa: Complex64::new(0.0, 0.0),
        log_scale: 0.0,
    };

    pub const ONE: ScaledComplex = ScaledComplex {
        mantissa: Complex64::new(1.0, 0.0),
        log_scale: 0.0,
    };

    pub fn new(value: Complex64) -> Self {
        Self::from_parts(value, 0.0).normalized()
    }

    pub fn from_real(value: f64) -> Self {
        Self::new(Complex64::new(value, 0.0))
    }

    /// Keep the split as given. Zero mantissas collapse to [`Self::ZERO`].
    pub fn from_parts(mantissa: Complex64, log_scale: f64) -> Self {
        if mantissa.re == 0.0 && mantissa.im == 0.0 {
            Self::ZERO
        } else {
            ScaledComplex {
                mantissa,
                log_scale,
            }
        }
    }

    /// `exp(z)` without overflow.
    pub fn exp(z: Complex64) -> Self {
        ScaledComplex {
            mantissa: Complex64::new(z.im.cos(), z.im.sin()),
            log_scale: z.re,
        }
    }

    /// `exp(x)` for real `x`.
    pub fn exp_real(x: f64) -> Self {
        ScaledComplex {
            mantissa: Complex64::new(1.0, 0.0),
            log_scale: x,
        }
    }

    /// `cosh(z) = (exp(z) + exp(-z)) / 2`.
    pub fn cosh(z: Complex64) -> Self {
        (Self::exp(z) + Self::exp(-z)).scale(0.5)
    }

    /// `sinh(z) = (exp(z) - exp(-z)) / 2`.
    pub fn sinh(z: Complex64) -> Self {
        (Self::exp(z) - Self::exp(-z)).scale(0.5)
    }

    pub fn mantissa(&self) -> Complex64 {
        self.mantissa
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.re == 0.0 && self.mantissa.im == 0.0
    }

    pub fn is_normalized(&self) -> bool {
        if self.is_zero() {
            return self.log_scale == 0.0;
        }
        let r = self.mantissa.norm();
        (0.5..=2.0).contains(&r)
    }

    pub fn normalized(self) -> Self {
        if self.is_zero() {
            return Self::ZERO;
        }
        let r = self.mantissa.norm();
        if (0.5..=2.0).contains(&r) {
            self
        } else {
            ScaledComplex {
                mantissa: self.mantissa / r,
                log_scale: self.log_scale + r.ln(),
            }
        }
    }

    /// `ln |value|`; `-inf` for zero.
    pub fn ln_abs(&self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.mantissa.norm().ln() + self.log_scale
        }
    }

    pub fn conj(self) -> Self {
        ScaledComplex {
            mantissa: self.mantissa.conj(),
            log_scale: self.log_scale,
        }
    }

    /// Real part, still scaled.
    pub fn re(self) -> Self {
        Self::from_parts(Complex64::new(self.mantissa.re, 0.0), self.log_scale).normalized()
    }

    /// Imaginary part as a real scaled value.
    pub fn im(self) -> Self {
        Self::from_parts(Complex64::new(self.mantissa.im, 0.0), self.log_scale).normalized()
    }

    pub fn scale(self, factor: f64) -> Self {
        Self::from_parts(self.mantissa * factor, self.log_scale).normalized()
    }

    pub fn mul_complex(self, factor: Complex64) -> Self {
        Self::from_parts(self.mantissa * factor, self.log_scale).normalized()
    }

    /// Convert to a plain complex number. Values below the subnormal range
    /// flush to zero; values above `f64::MAX` are an error.
    pub fn to_complex(&self) -> Result<Complex64> {
        if self.is_zero() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        if self.ln_abs() > LN_MAX || self.log_scale.is_nan() {
            return Err(Error::Overflow {
                log_scale: self.log_scale,
            });
        }
        // split the exponent so that exp() itself cannot overflow first
        let half = (0.5 * self.log_scale).exp();
        Ok(self.mantissa * half * half)
    }

    /// Relative distance `|a - b| / max(|a|, |b|)`, computed without leaving
    /// the scaled representation. Zero when both are zero.
    pub fn relative_distance(a: Self, b: Self) -> f64 {
        let diff = a - b;
        let denom = a.ln_abs().max(b.ln_abs());
        if denom == f64::NEG_INFINITY {
            return 0.0;
        }
        (diff.ln_abs() - denom).exp()
    }
}

impl Add for ScaledComplex {
    type Output = ScaledComplex;

    fn add(self, rhs: Self) -> Self {
        if self.is_zero() {
            return rhs.normalized();
        }
        if rhs.is_zero() {
            return self.normalized();
        }
        let s = self.log_scale.max(rhs.log_scale);
        let m = self.mantissa * (self.log_scale - s).exp() + rhs.mantissa * (rhs.log_scale - s).exp();
        ScaledComplex::from_parts(m, s).normalized()
    }
}

impl Sub for ScaledComplex {
    type Output = ScaledComplex;

    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for ScaledComplex {
    type Output = ScaledComplex;

    fn neg(self) -> Self {
        ScaledComplex {
            mantissa: -self.mantissa,
            log_scale: self.log_scale,
        }
    }
}

impl Mul for ScaledComplex {
    type Output = ScaledComplex;

    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::ZERO;
        }
        ScaledComplex::from_parts(self.mantissa * rhs.mantissa, self.log_scale + rhs.log_scale)
            .normalized()
    }
}

impl From<Complex64> for ScaledComplex {
    fn from(value: Complex64) -> Self {
        ScaledComplex::new(value)
    }
}

impl std::iter::Sum for ScaledComplex {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(ScaledComplex::ZERO, |acc, x| acc + x)
    }
}
