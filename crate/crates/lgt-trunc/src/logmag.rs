//! Sign + log-magnitude scalars for quantities spanning many hundreds of
//! decades, far past the reach of f64.
//!
//! The natural log of the magnitude is kept as a compensated (hi, lo) pair
//! so that round-trips through log space stay accurate to ~1e-14 relative
//! even when the log itself is several hundred. Multiplication adds logs
//! exactly; addition and subtraction factor out the larger magnitude.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

// ln(2) split to double-double precision
const LN2_HI: f64 = 0.693_147_180_559_945_3;
const LN2_LO: f64 = 2.319_046_813_846_299_6e-17;

/// Error-free sum: returns (s, e) with s + e == a + b exactly.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// A real number stored as `sign * exp(ln_hi + ln_lo)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogMagnitude {
    sign: i8,
    ln_hi: f64,
    ln_lo: f64,
}

impl LogMagnitude {
    pub const ZERO: Self = LogMagnitude { sign: 0, ln_hi: f64::NEG_INFINITY, ln_lo: 0.0 };
    pub const ONE: Self = LogMagnitude { sign: 1, ln_hi: 0.0, ln_lo: 0.0 };

    pub fn from_ln(sign: i8, ln_mag: f64) -> Self {
        if sign == 0 || ln_mag == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogMagnitude { sign: sign.signum(), ln_hi: ln_mag, ln_lo: 0.0 }
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            return Self::ZERO;
        }
        let sign = if x > 0.0 { 1 } else { -1 };
        // x = m * 2^e with m in [0.5, 1): ln x = e ln2 + ln m, with e ln2
        // accumulated in double-double so nothing is lost to rounding.
        let (m, e) = frexp(x.abs());
        let ef = e as f64;
        let (hi, lo1) = two_sum(ef * LN2_HI, m.ln());
        let lo = lo1 + ef * LN2_LO;
        let (hi, lo) = two_sum(hi, lo);
        LogMagnitude { sign, ln_hi: hi, ln_lo: lo }
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// Natural log of the magnitude (`-inf` for zero).
    pub fn ln_mag(&self) -> f64 {
        self.ln_hi + self.ln_lo
    }

    pub fn log10_mag(&self) -> f64 {
        self.ln_mag() / std::f64::consts::LN_10
    }

    /// Renders to f64; underflows to 0 and overflows to +-inf.
    pub fn to_f64(&self) -> f64 {
        if self.sign == 0 {
            return 0.0;
        }
        self.sign as f64 * self.ln_hi.exp() * self.ln_lo.exp()
    }

    pub fn abs(&self) -> Self {
        LogMagnitude { sign: self.sign.abs(), ..*self }
    }

    pub fn powi(&self, n: i32) -> Self {
        if self.sign == 0 {
            return if n == 0 { Self::ONE } else { Self::ZERO };
        }
        let sign = if self.sign < 0 && n % 2 != 0 { -1 } else { 1 };
        let nf = n as f64;
        let (hi, lo) = two_sum(self.ln_hi * nf, self.ln_lo * nf);
        LogMagnitude { sign, ln_hi: hi, ln_lo: lo }
    }

    pub fn sqrt(&self) -> Self {
        assert!(self.sign >= 0, "sqrt of negative log-magnitude");
        LogMagnitude { sign: self.sign, ln_hi: self.ln_hi * 0.5, ln_lo: self.ln_lo * 0.5 }
    }

    pub fn recip(&self) -> Self {
        assert!(self.sign != 0, "reciprocal of zero");
        LogMagnitude { sign: self.sign, ln_hi: -self.ln_hi, ln_lo: -self.ln_lo }
    }

    /// `|self| >= |other|`
    pub fn mag_ge(&self, other: &Self) -> bool {
        if self.ln_hi != other.ln_hi {
            self.ln_hi >= other.ln_hi
        } else {
            self.ln_lo >= other.ln_lo
        }
    }
}

fn frexp(x: f64) -> (f64, i32) {
    debug_assert!(x > 0.0 && x.is_finite());
    let bits = x.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i32;
    if exp_bits == 0 {
        // subnormal: rescale first
        let (m, e) = frexp(x * 2f64.powi(64));
        (m, e - 64)
    } else {
        let e = exp_bits - 1022;
        let m = f64::from_bits((bits & !(0x7ffu64 << 52)) | (1022u64 << 52));
        (m, e)
    }
}

impl std::ops::Mul for LogMagnitude {
    type Output = LogMagnitude;
    fn mul(self, rhs: Self) -> Self {
        if self.sign == 0 || rhs.sign == 0 {
            return Self::ZERO;
        }
        let (hi, e) = two_sum(self.ln_hi, rhs.ln_hi);
        let lo = e + self.ln_lo + rhs.ln_lo;
        let (hi, lo) = two_sum(hi, lo);
        LogMagnitude { sign: self.sign * rhs.sign, ln_hi: hi, ln_lo: lo }
    }
}

impl std::ops::Div for LogMagnitude {
    type Output = LogMagnitude;
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl std::ops::Neg for LogMagnitude {
    type Output = LogMagnitude;
    fn neg(self) -> Self {
        LogMagnitude { sign: -self.sign, ..self }
    }
}

impl std::ops::Add for LogMagnitude {
    type Output = LogMagnitude;
    fn add(self, rhs: Self) -> Self {
        if self.sign == 0 {
            return rhs;
        }
        if rhs.sign == 0 {
            return self;
        }
        let (big, small) = if self.mag_ge(&rhs) { (self, rhs) } else { (rhs, self) };
        // r = |small| / |big| in [0, 1]; exact enough in plain f64 since the
        // log difference is O(1) whenever the sum is nontrivial.
        let dr = (small.ln_hi - big.ln_hi) + (small.ln_lo - big.ln_lo);
        let r = dr.exp();
        let delta = if self.sign == rhs.sign {
            r.ln_1p()
        } else if r == 1.0 {
            return Self::ZERO;
        } else {
            (-r).ln_1p()
        };
        let (hi, e) = two_sum(big.ln_hi, delta);
        let (hi, lo) = two_sum(hi, e + big.ln_lo);
        LogMagnitude { sign: big.sign, ln_hi: hi, ln_lo: lo }
    }
}

impl std::ops::Sub for LogMagnitude {
    type Output = LogMagnitude;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl PartialOrd for LogMagnitude {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        if self.sign != other.sign {
            return self.sign.partial_cmp(&other.sign);
        }
        if self.sign == 0 {
            return Some(std::cmp::Ordering::Equal);
        }
        let ord = if self.mag_ge(other) {
            if other.mag_ge(self) {
                std::cmp::Ordering::Equal
            } else {
                std::cmp::Ordering::Greater
            }
        } else {
            std::cmp::Ordering::Less
        };
        Some(if self.sign > 0 { ord } else { ord.reverse() })
    }
}

/// ln(n!)
pub fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// ln((2n-1)!!) computed through the gamma function; `n = 0` gives ln((-1)!!) = 0.
pub fn ln_double_factorial_odd(n: u64) -> f64 {
    // (2n-1)!! = (2n)! / (2^n n!)
    ln_gamma(2.0 * n as f64 + 1.0) - n as f64 * std::f64::consts::LN_2 - ln_gamma(n as f64 + 1.0)
}
