//! Rigorous real enclosures on a fixed binary grid.
//!
//! An [`Enclosure`] is an interval `[lo, hi] * 2^-prec` with big-integer
//! endpoints. Every operation rounds the lower endpoint down and the upper
//! endpoint up, so the true real value is always inside. Addition is exact,
//! which makes sums independent of evaluation order.
//!
//! The transcendental functions are evaluated by Taylor series with explicit
//! remainder bounds. Only what the bounds and norms need is provided: `exp`,
//! `ln` of positive rationals, `sin`/`cos` on `[0, 1.5]` and `sqrt`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Binary precision giving at least `digits` correct decimal digits, plus
/// guard bits for accumulated rounding.
pub fn bits_for_digits(digits: u32) -> u32 {
    (f64::from(digits) * std::f64::consts::LOG2_10).ceil() as u32 + 32
}

/// Default working precision: 64 decimal digits.
pub fn default_prec() -> u32 {
    bits_for_digits(64)
}

fn floor_shift(x: &BigInt, bits: u32) -> BigInt {
    // `>>` on BigInt rounds toward negative infinity.
    x >> bits as usize
}

fn ceil_shift(x: &BigInt, bits: u32) -> BigInt {
    -((-x) >> bits as usize)
}

fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    -((-a).div_floor(b))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enclosure {
    lo: BigInt,
    hi: BigInt,
    prec: u32,
}

impl Enclosure {
    pub fn zero(prec: u32) -> Self {
        Self {
            lo: BigInt::zero(),
            hi: BigInt::zero(),
            prec,
        }
    }

    pub fn from_int(n: impl Into<BigInt>, prec: u32) -> Self {
        let m: BigInt = n.into() << prec as usize;
        Self {
            lo: m.clone(),
            hi: m,
            prec,
        }
    }

    pub fn from_rational(r: &BigRational, prec: u32) -> Self {
        let scaled = r.numer() << prec as usize;
        Self {
            lo: scaled.div_floor(r.denom()),
            hi: ceil_div(&scaled, r.denom()),
            prec,
        }
    }

    /// `[-r, r]`.
    pub fn symmetric(radius: &BigRational, prec: u32) -> Self {
        let r = Self::from_rational(&radius.abs(), prec);
        Self {
            lo: -r.hi.clone(),
            hi: r.hi,
            prec,
        }
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    /// The same interval on another grid, widened outward if coarser.
    pub fn with_prec(&self, prec: u32) -> Self {
        let (lo, hi) = if prec >= self.prec {
            let up = (prec - self.prec) as usize;
            (&self.lo << up, &self.hi << up)
        } else {
            let down = self.prec - prec;
            (floor_shift(&self.lo, down), ceil_shift(&self.hi, down))
        };
        Self { lo, hi, prec }
    }

    pub fn lower(&self) -> BigRational {
        BigRational::new(self.lo.clone(), BigInt::one() << self.prec as usize)
    }

    pub fn upper(&self) -> BigRational {
        BigRational::new(self.hi.clone(), BigInt::one() << self.prec as usize)
    }

    pub fn width(&self) -> BigRational {
        self.upper() - self.lower()
    }

    pub fn midpoint(&self) -> BigRational {
        (self.lower() + self.upper()) / BigRational::from_integer(2.into())
    }

    pub fn to_f64(&self) -> f64 {
        self.midpoint().to_f64().unwrap_or(f64::NAN)
    }

    pub fn contains(&self, r: &BigRational) -> bool {
        self.lower() <= *r && *r <= self.upper()
    }

    pub fn contains_f64(&self, x: f64) -> bool {
        match BigRational::from_float(x) {
            Some(r) => self.contains(&r),
            None => false,
        }
    }

    pub fn is_positive(&self) -> bool {
        self.lo.is_positive()
    }

    pub fn hull(&self, other: &Self) -> Self {
        debug_assert_eq!(self.prec, other.prec);
        Self {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
            prec: self.prec,
        }
    }

    /// `max(x, 0)` applied to both endpoints.
    pub fn clamp_nonnegative(&self) -> Self {
        Self {
            lo: self.lo.clone().max(BigInt::zero()),
            hi: self.hi.clone().max(BigInt::zero()),
            prec: self.prec,
        }
    }

    pub fn abs(&self) -> Self {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            self.neg()
        } else {
            Self {
                lo: BigInt::zero(),
                hi: self.hi.clone().max(-self.lo.clone()),
                prec: self.prec,
            }
        }
    }

    /// The degenerate interval at the lower endpoint.
    pub fn lower_point(&self) -> Self {
        Self {
            lo: self.lo.clone(),
            hi: self.lo.clone(),
            prec: self.prec,
        }
    }

    /// The degenerate interval at the upper endpoint.
    pub fn upper_point(&self) -> Self {
        Self {
            lo: self.hi.clone(),
            hi: self.hi.clone(),
            prec: self.prec,
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            lo: -self.hi.clone(),
            hi: -self.lo.clone(),
            prec: self.prec,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.prec, other.prec);
        Self {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
            prec: self.prec,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.prec, other.prec);
        let products = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let min = products.iter().min().unwrap();
        let max = products.iter().max().unwrap();
        Self {
            lo: floor_shift(min, self.prec),
            hi: ceil_shift(max, self.prec),
            prec: self.prec,
        }
    }

    pub fn mul_rational(&self, r: &BigRational) -> Self {
        let (a, b) = (self.lo.clone() * r.numer(), self.hi.clone() * r.numer());
        let (min, max) = if a <= b { (a, b) } else { (b, a) };
        // denominators of BigRational are positive
        Self {
            lo: min.div_floor(r.denom()),
            hi: ceil_div(&max, r.denom()),
            prec: self.prec,
        }
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        debug_assert_eq!(self.prec, other.prec);
        if !other.lo.is_positive() && !other.hi.is_negative() {
            return Err(Error::Domain("division by an enclosure containing 0".into()));
        }
        let shift = |x: &BigInt| x << self.prec as usize;
        let candidates = [
            (shift(&self.lo), &other.lo),
            (shift(&self.lo), &other.hi),
            (shift(&self.hi), &other.lo),
            (shift(&self.hi), &other.hi),
        ];
        let lo = candidates
            .iter()
            .map(|(a, b)| a.div_floor(b))
            .min()
            .unwrap();
        let hi = candidates.iter().map(|(a, b)| ceil_div(a, b)).max().unwrap();
        Ok(Self {
            lo,
            hi,
            prec: self.prec,
        })
    }

    /// Integer power of a nonnegative enclosure.
    pub fn powi(&self, exp: u32) -> Self {
        debug_assert!(!self.lo.is_negative());
        let mut result = Self::from_int(1, self.prec);
        let mut base = self.clone();
        let mut e = exp;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    pub fn sqrt(&self) -> Result<Self> {
        if self.lo.is_negative() {
            return Err(Error::Domain("sqrt of a possibly negative enclosure".into()));
        }
        let p = self.prec as usize;
        let lo = (&self.lo << p).sqrt();
        let hi_sq = &self.hi << p;
        let mut hi = hi_sq.sqrt();
        if &hi * &hi < hi_sq {
            hi += 1;
        }
        Ok(Self {
            lo,
            hi,
            prec: self.prec,
        })
    }

    /// Decimal string of the lower endpoint rounded down, with `sig`
    /// significant digits.
    pub fn lower_decimal(&self, sig: u32) -> String {
        directed_decimal(&self.lower(), sig, Rounding::Down)
    }

    /// Decimal string of the upper endpoint rounded up.
    pub fn upper_decimal(&self, sig: u32) -> String {
        directed_decimal(&self.upper(), sig, Rounding::Up)
    }

    /// The midpoint rounded to `sig` significant digits.
    pub fn decimal(&self, sig: u32) -> String {
        directed_decimal(&self.midpoint(), sig, Rounding::Nearest)
    }

    /// `"<midpoint>±<radius>"`, the radius rounded up.
    pub fn plus_minus(&self, sig: u32) -> String {
        let radius = self.width() / BigRational::from_integer(2.into());
        format!(
            "{}±{}",
            directed_decimal(&self.midpoint(), sig, Rounding::Nearest),
            scientific_up(&radius)
        )
    }
}

impl fmt::Display for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lower_decimal(20), self.upper_decimal(20))
    }
}

#[derive(Clone, Copy)]
enum Rounding {
    Down,
    Up,
    Nearest,
}

fn pow10(k: u32) -> BigInt {
    num_traits::pow(BigInt::from(10), k as usize)
}

fn decimal_exponent(r: &BigRational) -> i64 {
    // floor(log10 |r|), corrected exactly after the f64 estimate
    let approx = r.abs().to_f64().unwrap_or(1.0);
    let mut e = if approx > 0.0 && approx.is_finite() {
        approx.log10().floor() as i64
    } else {
        0
    };
    let ten = BigRational::from_integer(10.into());
    let pow = |e: i64| {
        if e >= 0 {
            num_traits::pow(ten.clone(), e as usize)
        } else {
            num_traits::pow(ten.clone(), (-e) as usize).recip()
        }
    };
    let a = r.abs();
    while pow(e) > a {
        e -= 1;
    }
    while pow(e + 1) <= a {
        e += 1;
    }
    e
}

fn directed_decimal(r: &BigRational, sig: u32, mode: Rounding) -> String {
    if r.is_zero() {
        return "0".into();
    }
    let frac_digits = (i64::from(sig) - 1 - decimal_exponent(r)).max(0) as u32;
    let scaled = r * BigRational::from_integer(pow10(frac_digits));
    let n = match mode {
        Rounding::Down => scaled.floor(),
        Rounding::Up => scaled.ceil(),
        Rounding::Nearest => scaled.round(),
    }
    .to_integer();
    let negative = n.is_negative();
    let digits = n.abs().to_string();
    let body = if frac_digits == 0 {
        digits
    } else {
        let padded = format!("{digits:0>width$}", width = frac_digits as usize + 1);
        let (int, frac) = padded.split_at(padded.len() - frac_digits as usize);
        format!("{int}.{frac}")
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

/// One significant digit, rounded up, in scientific notation.
fn scientific_up(r: &BigRational) -> String {
    if r.is_zero() {
        return "0".into();
    }
    let e = decimal_exponent(r);
    let ten = BigRational::from_integer(10.into());
    let scale = if e >= 0 {
        num_traits::pow(ten, e as usize)
    } else {
        num_traits::pow(ten, (-e) as usize).recip()
    };
    let lead = (r / scale).ceil().to_integer();
    format!("{lead}e{e}")
}

/// Series run on a finer grid so that term enclosures can drop below the
/// stopping threshold `2^-(prec + 8)`.
const GUARD_BITS: u32 = 24;

/// A series term magnitude below which summation stops.
fn negligible(prec: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << (prec as usize + 8))
}

fn require_small(x: &BigRational, bound: (i64, i64), what: &str) -> Result<()> {
    let bound = BigRational::new(bound.0.into(), bound.1.into());
    if x.abs() > bound {
        return Err(Error::Domain(format!("{what} argument {x} outside |x| <= {bound}")));
    }
    Ok(())
}

/// `exp(x)` for a rational `|x| <= 1`.
pub fn exp_rational(x: &BigRational, prec: u32) -> Result<Enclosure> {
    require_small(x, (1, 1), "exp")?;
    let work = prec + GUARD_BITS;
    let xe = Enclosure::from_rational(x, work);
    let mut term = Enclosure::from_int(1, work);
    let mut sum = term.clone();
    let stop = negligible(prec);
    let mut k = 1u32;
    loop {
        term = term.mul(&xe).mul_rational(&BigRational::new(1.into(), k.into()));
        sum = sum.add(&term);
        k += 1;
        let mag = term.abs().upper();
        if mag < stop {
            // remaining terms are bounded by a geometric series of ratio <= 1/2
            let tail = mag * BigRational::from_integer(2.into());
            return Ok(sum.add(&Enclosure::symmetric(&tail, work)).with_prec(prec));
        }
    }
}

/// `exp(x)` for any rational, as `exp(x/m)^m` with `|x/m| <= 1`.
pub fn exp_rational_any(x: &BigRational, prec: u32) -> Result<Enclosure> {
    let m = x.abs().ceil().to_integer().to_u32().unwrap_or(u32::MAX).max(1);
    if m > 4096 {
        return Err(Error::Domain(format!("exp argument {x} too large")));
    }
    // the power loses about log2(m) bits per squaring step
    let work = prec + 2 * (32 - m.leading_zeros());
    let base = exp_rational(&(x / BigRational::from_integer(m.into())), work)?;
    Ok(base.powi(m).with_prec(prec))
}

/// `atanh(z) = z + z^3/3 + ...` for a rational `|z| <= 1/3`.
fn atanh_rational(z: &BigRational, prec: u32) -> Result<Enclosure> {
    require_small(z, (1, 3), "atanh")?;
    let work = prec + GUARD_BITS;
    let ze = Enclosure::from_rational(z, work);
    let z2 = Enclosure::from_rational(&(z * z), work);
    let mut power = ze.clone();
    let mut sum = ze;
    let stop = negligible(prec);
    let mut j = 1u32;
    loop {
        power = power.mul(&z2);
        let term = power.mul_rational(&BigRational::new(1.into(), (2 * j + 1).into()));
        sum = sum.add(&term);
        j += 1;
        let mag = power.abs().upper();
        if mag < stop {
            // |tail| <= |z|^{2j+1} / (1 - z^2) <= (9/8) |power|
            let tail = mag * BigRational::new(9.into(), 8.into());
            return Ok(sum.add(&Enclosure::symmetric(&tail, work)).with_prec(prec));
        }
    }
}

/// `ln 2 = 2 atanh(1/3)`, cached per precision.
pub fn ln2(prec: u32) -> Enclosure {
    static CACHE: OnceLock<Mutex<HashMap<u32, Enclosure>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(v) = cache.lock().unwrap().get(&prec) {
        return v.clone();
    }
    let third = BigRational::new(1.into(), 3.into());
    let value = atanh_rational(&third, prec)
        .expect("1/3 is in range")
        .mul_rational(&BigRational::from_integer(2.into()));
    cache.lock().unwrap().insert(prec, value.clone());
    value
}

/// `ln(r)` for a positive rational.
pub fn ln_rational(r: &BigRational, prec: u32) -> Result<Enclosure> {
    if !r.is_positive() {
        return Err(Error::Domain(format!("ln of non-positive {r}")));
    }
    if r.is_one() {
        return Ok(Enclosure::zero(prec));
    }
    // r = m 2^k with m in [2/3, 4/3]
    let mut k = r.numer().bits() as i64 - r.denom().bits() as i64;
    let two = BigRational::from_integer(2.into());
    let scale = |k: i64| {
        if k >= 0 {
            BigRational::from_integer(BigInt::one() << k as usize)
        } else {
            BigRational::new(BigInt::one(), BigInt::one() << (-k) as usize)
        }
    };
    let mut m = r / scale(k);
    let upper = BigRational::new(4.into(), 3.into());
    let lower = BigRational::new(2.into(), 3.into());
    while m > upper {
        m /= &two;
        k += 1;
    }
    while m < lower {
        m *= &two;
        k -= 1;
    }
    let one = BigRational::one();
    let z = (&m - &one) / (&m + &one);
    let series = atanh_rational(&z, prec)?.mul_rational(&two);
    Ok(series.add(&ln2(prec).mul_rational(&BigRational::from_integer(k.into()))))
}

/// `ln(n)` for a positive integer.
pub fn ln_int(n: u64, prec: u32) -> Result<Enclosure> {
    ln_rational(&BigRational::from_integer(n.into()), prec)
}

/// `(sin x, cos x)` for a rational `0 <= x <= 1.5`.
pub fn sin_cos_rational(x: &BigRational, prec: u32) -> Result<(Enclosure, Enclosure)> {
    if x.is_negative() {
        return Err(Error::Domain("sin/cos evaluated only on [0, 1.5]".into()));
    }
    require_small(x, (3, 2), "sin/cos")?;
    let work = prec + GUARD_BITS;
    let xe = Enclosure::from_rational(x, work);
    let x2 = Enclosure::from_rational(&(x * x), work);
    let stop = negligible(prec);
    // Both series alternate with decreasing terms once k >= 1 for x <= 1.5,
    // so the first omitted term bounds the remainder.
    let series = |first: Enclosure, offset: u32| -> Enclosure {
        let mut term = first.clone();
        let mut sum = first;
        let mut k = 1u32;
        loop {
            let d = (2 * k + offset - 1) * (2 * k + offset);
            term = term
                .mul(&x2)
                .mul_rational(&BigRational::new((-1).into(), d.into()));
            let mag = term.abs().upper();
            if mag < stop {
                return sum.add(&Enclosure::symmetric(&mag, work)).with_prec(prec);
            }
            sum = sum.add(&term);
            k += 1;
        }
    };
    let sin = series(xe, 1);
    let cos = series(Enclosure::from_int(1, work), 0);
    Ok((sin, cos))
}

/// `sin` and `cos` of every real in a nonnegative enclosure within
/// `[0, 1.5]`; both functions are monotone there.
pub fn sin_cos(x: &Enclosure) -> Result<(Enclosure, Enclosure)> {
    let (s_lo, c_lo) = sin_cos_rational(&x.lower(), x.prec)?;
    let (s_hi, c_hi) = sin_cos_rational(&x.upper(), x.prec)?;
    let sin = Enclosure {
        lo: s_lo.lo,
        hi: s_hi.hi,
        prec: x.prec,
    };
    let cos = Enclosure {
        lo: c_hi.lo,
        hi: c_lo.hi,
        prec: x.prec,
    };
    Ok((sin, cos))
}

/// `e^{-1/2}`.
pub fn inv_sqrt_e(prec: u32) -> Enclosure {
    exp_rational(&BigRational::new((-1).into(), 2.into()), prec).expect("in range")
}

/// `e^{1/2}`.
pub fn sqrt_e(prec: u32) -> Enclosure {
    exp_rational(&BigRational::new(1.into(), 2.into()), prec).expect("in range")
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: u32 = 256;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn assert_close(e: &Enclosure, x: f64, tol: f64) {
        assert!((e.to_f64() - x).abs() <= tol, "{e} vs {x}");
        assert!(e.width() < q(1, 1 << 40), "too wide: {e}");
    }

    #[test]
    fn rational_enclosure_contains_value() {
        let r = q(1, 3);
        let e = Enclosure::from_rational(&r, P);
        assert!(e.contains(&r));
        assert!(e.width() <= BigRational::new(1.into(), BigInt::one() << P as usize));
        let exact = Enclosure::from_rational(&q(3, 8), P);
        assert_eq!(exact.lower(), exact.upper());
    }

    #[test]
    fn arithmetic_is_outward() {
        let a = Enclosure::from_rational(&q(1, 3), P);
        let b = Enclosure::from_rational(&q(-2, 7), P);
        assert!(a.mul(&b).contains(&q(-2, 21)));
        assert!(a.div(&b).unwrap().contains(&q(-7, 6)));
        assert!(a.sub(&b).contains(&q(13, 21)));
        assert!(a.mul_rational(&q(-5, 11)).contains(&q(-5, 33)));
        let two = Enclosure::from_int(2, P).sqrt().unwrap();
        assert!(two.mul(&two).contains(&q(2, 1)));
        assert!(a.div(&Enclosure::zero(P)).is_err());
        assert!(a.powi(3).contains(&q(1, 27)));
    }

    #[test]
    fn transcendental_values() {
        assert_close(&ln2(P), std::f64::consts::LN_2, 1e-15);
        assert_close(&inv_sqrt_e(P), (-0.5f64).exp(), 1e-15);
        assert_close(&sqrt_e(P), 0.5f64.exp(), 1e-15);
        assert_close(&ln_rational(&q(10, 1), P).unwrap(), 10f64.ln(), 1e-14);
        assert_close(&ln_rational(&q(1, 1000), P).unwrap(), (0.001f64).ln(), 1e-14);
        assert_close(&ln_rational(&q(7, 5), P).unwrap(), (1.4f64).ln(), 1e-15);
        let (s, c) = sin_cos_rational(&q(1, 1), P).unwrap();
        assert_close(&s, 1f64.sin(), 1e-15);
        assert_close(&c, 1f64.cos(), 1e-15);
        let (s, c) = sin_cos_rational(&q(0, 1), P).unwrap();
        assert!(s.contains(&q(0, 1)) && c.contains(&q(1, 1)));
        assert!(ln_rational(&q(0, 1), P).is_err());
        assert!(exp_rational(&q(3, 1), P).is_err());
    }

    #[test]
    fn identities_hold_inside_enclosures() {
        // exp(1/2)^2 * exp(-1/2)^2 == 1 and sin^2 + cos^2 == 1
        let one = sqrt_e(P).mul(&inv_sqrt_e(P));
        assert!(one.contains(&q(1, 1)));
        let (s, c) = sin_cos_rational(&q(1, 2), P).unwrap();
        assert!(s.mul(&s).add(&c.mul(&c)).contains(&q(1, 1)));
        // ln(6) = ln 2 + ln 3
        let lhs = ln_int(6, P).unwrap();
        let rhs = ln_int(2, P).unwrap().add(&ln_int(3, P).unwrap());
        assert!(lhs.sub(&rhs).contains(&q(0, 1)));
    }

    #[test]
    fn decimal_rendering_is_directed() {
        let third = Enclosure::from_rational(&q(1, 3), P);
        assert_eq!(third.lower_decimal(5), "0.33333");
        assert_eq!(third.upper_decimal(5), "0.33334");
        let small = Enclosure::from_rational(&q(-5, 4096), P);
        assert_eq!(small.lower_decimal(3), "-0.00123");
        assert_eq!(small.upper_decimal(3), "-0.00122");
        assert_eq!(Enclosure::from_int(42, P).upper_decimal(6), "42.0000");
        assert!(ln2(P).plus_minus(10).starts_with("0.6931471806±"));
    }

    #[test]
    fn digits_to_bits() {
        assert!(bits_for_digits(60) >= 200);
        assert_eq!(default_prec(), bits_for_digits(64));
    }
}
