//! Overflow-safe complex numbers of the form `mantissa * exp(log_scale)`.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

/// A complex value stored as `mantissa * e^{log_scale}`.
///
/// Arithmetic keeps the mantissa within `[1e-150, 1e150]` in its larger
/// component and only renormalises when it leaves that band;
/// [`Scaled::normalized`] returns the form with `|mantissa| = 1`. Zero is
/// `mantissa = 0`, `log_scale = -inf`.
#[derive(Clone, Copy, PartialEq)]
pub struct Scaled {
    pub log_scale: f64,
    pub mantissa: Complex64,
}

impl fmt::Debug for Scaled {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} * e^{}", self.mantissa, self.log_scale)
    }
}

impl Default for Scaled {
    fn default() -> Self {
        Self::ZERO
    }
}

const BAND_LO: f64 = 1e-150;
const BAND_HI: f64 = 1e150;

const NAN: Scaled = Scaled {
    log_scale: f64::NAN,
    mantissa: Complex64 {
        re: f64::NAN,
        im: f64::NAN,
    },
};

impl Scaled {
    pub const ZERO: Scaled = Scaled {
        log_scale: f64::NEG_INFINITY,
        mantissa: Complex64 { re: 0.0, im: 0.0 },
    };

    pub const ONE: Scaled = Scaled {
        log_scale: 0.0,
        mantissa: Complex64 { re: 1.0, im: 0.0 },
    };

    /// `m * e^{s}`, with the mantissa brought into the working band.
    #[inline]
    pub fn new(mantissa: Complex64, log_scale: f64) -> Self {
        let a = mantissa.re.abs().max(mantissa.im.abs());
        if a == 0.0 || log_scale == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        if !(a.is_finite() && log_scale.is_finite()) {
            return NAN;
        }
        if (BAND_LO..=BAND_HI).contains(&a) {
            return Self {
                log_scale,
                mantissa,
            };
        }
        let n = mantissa.norm();
        Self {
            log_scale: log_scale + n.ln(),
            mantissa: mantissa / n,
        }
    }

    pub fn from_c(z: Complex64) -> Self {
        Self::new(z, 0.0)
    }

    pub fn from_re(x: f64) -> Self {
        Self::new(Complex64::new(x, 0.0), 0.0)
    }

    /// The same value with `|mantissa| = 1` (zero stays zero).
    pub fn normalized(self) -> Self {
        if self.is_zero() || !self.is_finite() {
            return self;
        }
        let n = self.mantissa.norm();
        Self {
            log_scale: self.log_scale + n.ln(),
            mantissa: self.mantissa / n,
        }
    }

    /// `e^z` without ever forming the possibly overflowing real exponential.
    #[inline]
    pub fn exp(z: Complex64) -> Self {
        if !z.re.is_finite() {
            if z.re == f64::NEG_INFINITY {
                return Self::ZERO;
            }
            return NAN;
        }
        let (sin, cos) = z.im.sin_cos();
        Self {
            log_scale: z.re,
            mantissa: Complex64::new(cos, sin),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.re == 0.0 && self.mantissa.im == 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.is_zero() || (self.log_scale.is_finite() && self.mantissa.re.is_finite() && self.mantissa.im.is_finite())
    }

    /// `ln |value|`, `-inf` for zero.
    pub fn ln_abs(&self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.log_scale + self.mantissa.norm().ln()
        }
    }

    pub fn arg(&self) -> f64 {
        self.mantissa.arg()
    }

    /// Convert to an ordinary complex number (may overflow to infinity or
    /// underflow to zero).
    pub fn to_c(&self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        if self.log_scale.abs() < 600.0 {
            return self.mantissa * self.log_scale.exp();
        }
        let n = self.normalized();
        n.mantissa * n.log_scale.exp()
    }

    /// `self * e^{s}` for real `s`.
    pub fn shift(self, s: f64) -> Self {
        if self.is_zero() {
            self
        } else {
            Self {
                log_scale: self.log_scale + s,
                mantissa: self.mantissa,
            }
        }
    }

    pub fn scale(self, c: Complex64) -> Self {
        self * c
    }

    pub fn conj(self) -> Self {
        Self {
            log_scale: self.log_scale,
            mantissa: self.mantissa.conj(),
        }
    }

    /// Sum of many values with a single common scale.
    pub fn sum<I: IntoIterator<Item = Scaled>>(items: I) -> Self {
        let mut m = f64::NEG_INFINITY;
        let mut acc = Complex64::new(0.0, 0.0);
        for s in items {
            if s.is_zero() {
                continue;
            }
            if s.log_scale.is_nan() {
                return NAN;
            }
            if s.log_scale > m {
                if m != f64::NEG_INFINITY {
                    acc *= (m - s.log_scale).exp();
                }
                m = s.log_scale;
                acc += s.mantissa;
            } else if s.log_scale == m {
                acc += s.mantissa;
            } else {
                acc += s.mantissa * (s.log_scale - m).exp();
            }
        }
        if m == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        Self::new(acc, m)
    }

    /// Largest `ln|term|` among the terms, used for relative residuals.
    pub fn max_ln_abs<'a, I: IntoIterator<Item = &'a Scaled>>(items: I) -> f64 {
        items
            .into_iter()
            .map(|s| s.ln_abs())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

impl From<Complex64> for Scaled {
    fn from(z: Complex64) -> Self {
        Scaled::from_c(z)
    }
}

impl Mul for Scaled {
    type Output = Scaled;
    #[inline]
    fn mul(self, rhs: Scaled) -> Scaled {
        if self.is_zero() || rhs.is_zero() {
            return Scaled::ZERO;
        }
        Scaled::new(self.mantissa * rhs.mantissa, self.log_scale + rhs.log_scale)
    }
}

impl Mul<Complex64> for Scaled {
    type Output = Scaled;
    #[inline]
    fn mul(self, rhs: Complex64) -> Scaled {
        if self.is_zero() {
            return self;
        }
        Scaled::new(self.mantissa * rhs, self.log_scale)
    }
}

impl Div for Scaled {
    type Output = Scaled;
    fn div(self, rhs: Scaled) -> Scaled {
        if self.is_zero() {
            return if rhs.is_zero() { NAN } else { Scaled::ZERO };
        }
        if rhs.is_zero() {
            return Scaled {
                log_scale: f64::INFINITY,
                mantissa: Complex64::new(f64::NAN, f64::NAN),
            };
        }
        Scaled::new(self.mantissa / rhs.mantissa, self.log_scale - rhs.log_scale)
    }
}

impl Add for Scaled {
    type Output = Scaled;
    #[inline]
    fn add(self, rhs: Scaled) -> Scaled {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (big, small) = if self.log_scale >= rhs.log_scale {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let d = small.log_scale - big.log_scale;
        let m = if d == 0.0 {
            big.mantissa + small.mantissa
        } else {
            big.mantissa + small.mantissa * d.exp()
        };
        if m.re == 0.0 && m.im == 0.0 {
            return Scaled::ZERO;
        }
        Scaled::new(m, big.log_scale)
    }
}

impl Neg for Scaled {
    type Output = Scaled;
    fn neg(self) -> Scaled {
        Scaled {
            log_scale: self.log_scale,
            mantissa: -self.mantissa,
        }
    }
}

impl Sub for Scaled {
    type Output = Scaled;
    fn sub(self, rhs: Scaled) -> Scaled {
        self + (-rhs)
    }
}
