//! Sign/log-magnitude reals and the few special functions the geometry needs.
//!
//! A [`SignedLogReal`] stores `sign * exp(logmag)`. Magnitudes like `e^{e^{20}}`
//! are ordinary values here; everything downstream is consumed through logs.

use std::cmp::Ordering;
use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::de::{self, Deserializer};
use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Opposite-sign sums whose log magnitudes differ by less than this are zero.
pub const CANCEL_TOL: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignedLogReal {
    sign: i8,
    logmag: f64,
}

pub type Slr = SignedLogReal;

impl SignedLogReal {
    pub const ZERO: Self = Self { sign: 0, logmag: f64::NEG_INFINITY };
    pub const ONE: Self = Self { sign: 1, logmag: 0.0 };

    /// Builds a value from its parts. `sign` must be -1, 0 or 1 and agree with `logmag`.
    pub fn new(sign: i8, logmag: f64) -> Result<Self> {
        match sign {
            0 if logmag == f64::NEG_INFINITY => Ok(Self::ZERO),
            1 | -1 if logmag.is_finite() => Ok(Self { sign, logmag }),
            1 | -1 if logmag == f64::NEG_INFINITY => Ok(Self::ZERO),
            _ => domain(format!("invalid signed log real ({sign}, {logmag})")),
        }
    }

    /// The positive number `exp(logmag)`.
    pub fn from_log(logmag: f64) -> Self {
        debug_assert!(!logmag.is_nan() && logmag != f64::INFINITY);
        if logmag == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            Self { sign: 1, logmag }
        }
    }

    pub fn from_f64(x: f64) -> Self {
        debug_assert!(x.is_finite());
        if x == 0.0 {
            Self::ZERO
        } else {
            Self { sign: if x > 0.0 { 1 } else { -1 }, logmag: x.abs().ln() }
        }
    }

    pub fn to_f64(self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.logmag.exp(),
        }
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    pub fn logmag(self) -> f64 {
        self.logmag
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn is_positive(self) -> bool {
        self.sign > 0
    }

    pub fn abs(self) -> Self {
        Self { sign: self.sign.abs(), logmag: self.logmag }
    }

    pub fn square(self) -> Self {
        self * self
    }

    pub fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::ONE;
        }
        if self.sign == 0 {
            return Self::ZERO;
        }
        let sign = if self.sign < 0 && n % 2 != 0 { -1 } else { 1 };
        Self { sign, logmag: self.logmag * f64::from(n) }
    }

    pub fn sqrt(self) -> Result<Self> {
        match self.sign {
            0 => Ok(Self::ZERO),
            1 => Ok(Self { sign: 1, logmag: 0.5 * self.logmag }),
            _ => domain("square root of a negative value"),
        }
    }

    pub fn recip(self) -> Result<Self> {
        Self::ONE.try_div(self)
    }

    pub fn try_div(self, rhs: Self) -> Result<Self> {
        if rhs.sign == 0 {
            return domain("division by zero");
        }
        if self.sign == 0 {
            return Ok(Self::ZERO);
        }
        Ok(Self { sign: self.sign * rhs.sign, logmag: self.logmag - rhs.logmag })
    }

    /// Natural log of a positive value.
    pub fn ln(self) -> Result<f64> {
        if self.sign > 0 {
            Ok(self.logmag)
        } else {
            domain("log of a non-positive value")
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Default for SignedLogReal {
    fn default() -> Self {
        Self::ZERO
    }
}

impl From<f64> for SignedLogReal {
    fn from(x: f64) -> Self {
        Self::from_f64(x)
    }
}

impl Add for SignedLogReal {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        if self.sign == 0 {
            return rhs;
        }
        if rhs.sign == 0 {
            return self;
        }
        let (big, small) = if self.logmag >= rhs.logmag { (self, rhs) } else { (rhs, self) };
        let d = small.logmag - big.logmag;
        if big.sign == small.sign {
            Self { sign: big.sign, logmag: big.logmag + d.exp().ln_1p() }
        } else if d > -CANCEL_TOL {
            Self::ZERO
        } else {
            Self { sign: big.sign, logmag: big.logmag + (-d.exp_m1()).ln() }
        }
    }
}

impl Neg for SignedLogReal {
    type Output = Self;

    fn neg(self) -> Self {
        Self { sign: -self.sign, logmag: self.logmag }
    }
}

impl Sub for SignedLogReal {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Mul for SignedLogReal {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        if self.sign == 0 || rhs.sign == 0 {
            return Self::ZERO;
        }
        Self { sign: self.sign * rhs.sign, logmag: self.logmag + rhs.logmag }
    }
}

impl Div for SignedLogReal {
    type Output = Self;

    /// Panics on a zero divisor; use [`SignedLogReal::try_div`] when that can happen.
    fn div(self, rhs: Self) -> Self {
        self.try_div(rhs).expect("division by zero")
    }
}

impl Eq for SignedLogReal {}

impl PartialOrd for SignedLogReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SignedLogReal {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => match self.sign {
                0 => Ordering::Equal,
                1 => self.logmag.total_cmp(&other.logmag),
                _ => other.logmag.total_cmp(&self.logmag),
            },
            ord => ord,
        }
    }
}

impl fmt::Display for SignedLogReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.sign {
            1 => '+',
            -1 => '-',
            _ => '0',
        };
        write!(f, "({s}, {})", self.logmag)
    }
}

// The logmag of zero is written as null since JSON has no infinities.
impl Serialize for SignedLogReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("SignedLogReal", 2)?;
        st.serialize_field("sign", &self.sign)?;
        let lm = if self.sign == 0 { None } else { Some(self.logmag) };
        st.serialize_field("logmag", &lm)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for SignedLogReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            sign: i8,
            logmag: Option<f64>,
        }
        let raw = Raw::deserialize(deserializer)?;
        Self::new(raw.sign, raw.logmag.unwrap_or(f64::NEG_INFINITY)).map_err(de::Error::custom)
    }
}

/// `log(2 cosh x)` where the argument is `log x`, for `x >= 0`.
pub fn log_two_cosh(logx: f64) -> f64 {
    let x = logx.exp();
    x + (-2.0 * x).exp().ln_1p()
}

/// `arccosh c` for `c >= 1`, robust when `c` is far outside double range.
pub fn arccosh_stable(c: Slr) -> Result<f64> {
    if c.sign <= 0 {
        return domain(format!("arccosh of {c}"));
    }
    let l = c.logmag;
    if l > 40.0 {
        return Ok(l + LN_2);
    }
    if l < 0.0 {
        let v = l.exp();
        if v >= 1.0 - 1e-12 {
            return Ok(0.0);
        }
        return domain(format!("arccosh of {v} < 1"));
    }
    let v = l.exp();
    // acosh(1 + t) = ln(1 + t + sqrt(t(2 + t))) keeps accuracy close to 1.
    let t = v - 1.0;
    Ok((t + (t * (2.0 + t)).sqrt()).ln_1p())
}

/// `asinh s` where the argument is `log s`, `s >= 0`.
pub fn asinh_from_log(logs: f64) -> f64 {
    if logs == f64::NEG_INFINITY {
        return 0.0;
    }
    if logs > 20.0 {
        // asinh s = ln(2s) + 1/(4 s^2) + ...
        return logs + LN_2 + 0.25 * (-2.0 * logs).exp();
    }
    logs.exp().asinh()
}

/// Complex number with signed-log parts.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct SlrComplex {
    pub re: Slr,
    pub im: Slr,
}

impl SlrComplex {
    pub const ZERO: Self = Self { re: Slr::ZERO, im: Slr::ZERO };
    pub const ONE: Self = Self { re: Slr::ONE, im: Slr::ZERO };

    pub fn new(re: Slr, im: Slr) -> Self {
        Self { re, im }
    }

    pub fn conj(self) -> Self {
        Self { re: self.re, im: -self.im }
    }

    pub fn norm_sqr(self) -> Slr {
        self.re.square() + self.im.square()
    }

    /// `log |z|`; `-inf` at zero.
    pub fn ln_abs(self) -> f64 {
        0.5 * self.norm_sqr().logmag
    }

    pub fn arg(self) -> f64 {
        let (re, im) = (self.re, self.im);
        if re.is_zero() && im.is_zero() {
            return 0.0;
        }
        // Scale both parts by the larger magnitude before atan2.
        let m = re.logmag.max(im.logmag);
        let x = f64::from(re.sign) * (re.logmag - m).exp();
        let y = f64::from(im.sign) * (im.logmag - m).exp();
        y.atan2(x)
    }

    pub fn scale(self, s: Slr) -> Self {
        Self { re: self.re * s, im: self.im * s }
    }

    pub fn try_recip(self) -> Result<Self> {
        let n = self.norm_sqr();
        if n.is_zero() {
            return domain("reciprocal of complex zero");
        }
        Ok(Self { re: self.re / n, im: -self.im / n })
    }
}

impl Add for SlrComplex {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self { re: self.re + rhs.re, im: self.im + rhs.im }
    }
}

impl Sub for SlrComplex {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self { re: self.re - rhs.re, im: self.im - rhs.im }
    }
}

impl Neg for SlrComplex {
    type Output = Self;
    fn neg(self) -> Self {
        Self { re: -self.re, im: -self.im }
    }
}

impl Mul for SlrComplex {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self {
            re: self.re * rhs.re - self.im * rhs.im,
            im: self.re * rhs.im + self.im * rhs.re,
        }
    }
}

/// A nonzero complex number as `exp(ln_abs) * exp(i arg)`, `arg` in (-pi, pi].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogPolar {
    pub ln_abs: f64,
    pub arg: f64,
}

impl LogPolar {
    pub const ONE: Self = Self { ln_abs: 0.0, arg: 0.0 };

    pub fn new(ln_abs: f64, arg: f64) -> Self {
        Self { ln_abs, arg: wrap_angle(arg) }
    }

    pub fn from_complex(z: SlrComplex) -> Self {
        Self { ln_abs: z.ln_abs(), arg: z.arg() }
    }

    pub fn mul(self, other: Self) -> Self {
        Self::new(self.ln_abs + other.ln_abs, self.arg + other.arg)
    }

    pub fn conj(self) -> Self {
        Self::new(self.ln_abs, -self.arg)
    }

    pub fn powi(self, n: i32) -> Self {
        let n = f64::from(n);
        Self::new(self.ln_abs * n, self.arg * n)
    }
}

/// Reduces an angle to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let t = a.rem_euclid(2.0 * PI);
    if t > PI {
        t - 2.0 * PI
    } else {
        t
    }
}
