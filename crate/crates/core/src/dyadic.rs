//! Dyadic fractions, half-open dyadic intervals and rectangles, and the
//! one-dimensional Haar kernels the rest of the crate is built on.
//!
//! Intervals are half-open, `[j 2^-k, (j+1) 2^-k)`, so the children of a
//! subdivision partition their parent and the coordinate `1` lies in no
//! interval of the unit square.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Finest dyadic scale an interval may have. Interval indices are stored in
/// a `u128`, and Haar values at scale `MAX_SCALE` need one extra bit.
pub const MAX_SCALE: u32 = 126;

/// Number of fractional bits in a [`LocationCode`].
pub const CODE_BITS: u32 = MAX_SCALE + 1;

/// `floor(x * 2^CODE_BITS)` for a coordinate `x` in `[0, 1]`.
///
/// Membership of `x` in any dyadic interval of scale `<= MAX_SCALE` and the
/// half of that interval it falls into are decided exactly by the code.
pub type LocationCode = u128;

/// Exact location code of a coordinate in `[0, 1]`.
pub fn location_code(x: &BigRational) -> LocationCode {
    let scaled = (x.numer() << CODE_BITS as usize).div_floor(x.denom());
    scaled
        .to_u128()
        .expect("coordinate outside [0, 1] has no location code")
}

/// A number `numerator / 2^exponent`, kept in canonical form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicFraction {
    numerator: BigInt,
    exponent: u32,
}

impl DyadicFraction {
    pub fn new(numerator: impl Into<BigInt>, exponent: u32) -> Self {
        let mut numerator = numerator.into();
        let mut exponent = exponent;
        if numerator.is_zero() {
            return Self {
                numerator,
                exponent: 0,
            };
        }
        let twos = numerator.trailing_zeros().unwrap_or(0).min(exponent as u64) as u32;
        if twos > 0 {
            numerator >>= twos as usize;
            exponent -= twos;
        }
        Self {
            numerator,
            exponent,
        }
    }

    pub fn zero() -> Self {
        Self::new(0, 0)
    }

    pub fn one() -> Self {
        Self::new(1, 0)
    }

    /// `2^-k`.
    pub fn pow2_neg(k: u32) -> Self {
        Self::new(1, k)
    }

    pub fn numerator(&self) -> &BigInt {
        &self.numerator
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    pub fn halve(&self) -> Self {
        Self::new(self.numerator.clone(), self.exponent + 1)
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(self.numerator.clone(), BigInt::one() << self.exponent as usize)
    }

    /// Exact conversion from a rational whose denominator is a power of two.
    pub fn from_rational(r: &BigRational) -> Option<Self> {
        let d = r.denom();
        let bits = d.bits();
        if bits == 0 || *d != BigInt::one() << (bits - 1) as usize {
            return None;
        }
        Some(Self::new(r.numer().clone(), (bits - 1) as u32))
    }

    pub fn to_f64(&self) -> f64 {
        self.to_rational().to_f64().unwrap_or(f64::NAN)
    }

    fn aligned(&self, other: &Self) -> (BigInt, BigInt, u32) {
        let e = self.exponent.max(other.exponent);
        (
            &self.numerator << (e - self.exponent) as usize,
            &other.numerator << (e - other.exponent) as usize,
            e,
        )
    }
}

impl Ord for DyadicFraction {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }
}

impl PartialOrd for DyadicFraction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &DyadicFraction {
    type Output = DyadicFraction;
    fn add(self, rhs: Self) -> DyadicFraction {
        let (a, b, e) = self.aligned(rhs);
        DyadicFraction::new(a + b, e)
    }
}

impl Sub for &DyadicFraction {
    type Output = DyadicFraction;
    fn sub(self, rhs: Self) -> DyadicFraction {
        let (a, b, e) = self.aligned(rhs);
        DyadicFraction::new(a - b, e)
    }
}

impl Mul for &DyadicFraction {
    type Output = DyadicFraction;
    fn mul(self, rhs: Self) -> DyadicFraction {
        DyadicFraction::new(&self.numerator * &rhs.numerator, self.exponent + rhs.exponent)
    }
}

impl Neg for &DyadicFraction {
    type Output = DyadicFraction;
    fn neg(self) -> DyadicFraction {
        DyadicFraction::new(-&self.numerator, self.exponent)
    }
}

impl fmt::Display for DyadicFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponent == 0 {
            write!(f, "{}", self.numerator)
        } else {
            write!(f, "{}/2^{}", self.numerator, self.exponent)
        }
    }
}

/// The half-open interval `[index * 2^-scale, (index + 1) * 2^-scale)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicInterval {
    scale: u32,
    index: u128,
}

impl DyadicInterval {
    pub fn new(scale: u32, index: u128) -> Result<Self> {
        if scale > MAX_SCALE {
            return Err(Error::ResourceLimit(format!(
                "dyadic scale {scale} exceeds the supported maximum {MAX_SCALE}"
            )));
        }
        if index >> scale != 0 {
            return Err(Error::Domain(format!(
                "index {index} out of range for scale {scale}"
            )));
        }
        Ok(Self { scale, index })
    }

    /// `[0, 1)`.
    pub fn unit() -> Self {
        Self { scale: 0, index: 0 }
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn index(&self) -> u128 {
        self.index
    }

    pub fn left(&self) -> DyadicFraction {
        DyadicFraction::new(BigInt::from(self.index), self.scale)
    }

    pub fn right(&self) -> DyadicFraction {
        DyadicFraction::new(BigInt::from(self.index) + 1, self.scale)
    }

    pub fn midpoint(&self) -> DyadicFraction {
        DyadicFraction::new(BigInt::from(self.index) * 2 + 1, self.scale + 1)
    }

    pub fn length(&self) -> DyadicFraction {
        DyadicFraction::pow2_neg(self.scale)
    }

    pub fn left_half(&self) -> Result<Self> {
        Self::new(self.scale + 1, self.index << 1)
    }

    pub fn right_half(&self) -> Result<Self> {
        Self::new(self.scale + 1, (self.index << 1) | 1)
    }

    /// The `2^bits` equal children of this interval, left to right.
    pub fn subdivide(&self, bits: u32) -> Result<Vec<Self>> {
        if bits == 0 {
            return Err(Error::Precondition("subdivide needs bits >= 1".into()));
        }
        if bits > 24 {
            return Err(Error::ResourceLimit(format!(
                "subdividing into 2^{bits} children"
            )));
        }
        let scale = self.scale + bits;
        Self::new(scale, 0)?;
        let base = self.index << bits;
        Ok((0..1u128 << bits)
            .map(|k| Self {
                scale,
                index: base + k,
            })
            .collect())
    }

    /// The dyadic interval of scale `scale` containing the coordinate with
    /// the given location code, or `None` if the coordinate is 1.
    pub fn containing_code(code: LocationCode, scale: u32) -> Option<Self> {
        debug_assert!(scale <= MAX_SCALE);
        let index = code >> (CODE_BITS - scale);
        (index >> scale == 0).then_some(Self { scale, index })
    }

    pub fn contains_code(&self, code: LocationCode) -> bool {
        code >> (CODE_BITS - self.scale) == self.index
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        if x.is_negative() || *x >= BigRational::one() {
            return false;
        }
        self.contains_code(location_code(x))
    }

    pub fn contains_interval(&self, other: &Self) -> bool {
        other.scale >= self.scale && other.index >> (other.scale - self.scale) == self.index
    }

    /// Intersection of two dyadic intervals: the finer one if nested,
    /// otherwise empty.
    pub fn intersect(&self, other: &Self) -> Option<Self> {
        if self.contains_interval(other) {
            Some(*other)
        } else if other.contains_interval(self) {
            Some(*self)
        } else {
            None
        }
    }

    /// Haar value from a location code: `+1` on the left half, `-1` on the
    /// right half, `0` outside.
    pub fn haar_code(&self, code: LocationCode) -> i8 {
        if !self.contains_code(code) {
            return 0;
        }
        if (code >> (CODE_BITS - self.scale - 1)) & 1 == 0 {
            1
        } else {
            -1
        }
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.left(), self.right())
    }
}

/// `R = R_x × R_y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicRectangle {
    pub x: DyadicInterval,
    pub y: DyadicInterval,
}

impl DyadicRectangle {
    pub fn new(x: DyadicInterval, y: DyadicInterval) -> Self {
        Self { x, y }
    }

    pub fn unit() -> Self {
        Self::new(DyadicInterval::unit(), DyadicInterval::unit())
    }

    pub fn area(&self) -> DyadicFraction {
        DyadicFraction::pow2_neg(self.x.scale + self.y.scale)
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.x.contains(&p.x) && self.y.contains(&p.y)
    }

    pub fn contains_codes(&self, cx: LocationCode, cy: LocationCode) -> bool {
        self.x.contains_code(cx) && self.y.contains_code(cy)
    }

    pub fn intersect(&self, other: &Self) -> Option<Self> {
        Some(Self::new(self.x.intersect(&other.x)?, self.y.intersect(&other.y)?))
    }

    /// `h_R` at a point given by its location codes.
    pub fn haar_codes(&self, cx: LocationCode, cy: LocationCode) -> i8 {
        self.x.haar_code(cx) * self.y.haar_code(cy)
    }
}

impl fmt::Display for DyadicRectangle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} x {}", self.x, self.y)
    }
}

/// A point of the closed unit square with exact rational coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub x: BigRational,
    pub y: BigRational,
}

impl Point {
    pub fn new(x: BigRational, y: BigRational) -> Result<Self> {
        for c in [&x, &y] {
            if c.is_negative() || *c > BigRational::one() {
                return Err(Error::Domain(format!("coordinate {c} outside [0, 1]")));
            }
        }
        Ok(Self { x, y })
    }

    /// Point with dyadic coordinates `(a / 2^k, b / 2^k)`.
    pub fn dyadic(a: u64, b: u64, k: u32) -> Result<Self> {
        let d = BigInt::one() << k as usize;
        Self::new(
            BigRational::new(a.into(), d.clone()),
            BigRational::new(b.into(), d),
        )
    }

    pub fn codes(&self) -> (LocationCode, LocationCode) {
        (location_code(&self.x), location_code(&self.y))
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (
            self.x.to_f64().unwrap_or(f64::NAN),
            self.y.to_f64().unwrap_or(f64::NAN),
        )
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// `h_I(x)`: `+1` on the left half of `I`, `-1` on the right half, `0`
/// outside (including the right endpoint).
pub fn haar_value(interval: &DyadicInterval, x: &BigRational) -> i8 {
    if x.is_negative() || *x >= BigRational::one() {
        return 0;
    }
    interval.haar_code(location_code(x))
}

/// `∫_0^1 1{x >= p} h_I(x) dx` in closed form.
///
/// For `I = [a, a + h)` this is `a - p` on the left half, `p - (a + h)` on
/// the right half and zero elsewhere; it lies in `[-h/2, 0]`.
pub fn haar_point_kernel(interval: &DyadicInterval, p: &BigRational) -> BigRational {
    let a = interval.left().to_rational();
    let mid = interval.midpoint().to_rational();
    let b = interval.right().to_rational();
    if *p < a || *p >= b {
        BigRational::zero()
    } else if *p < mid {
        a - p
    } else {
        p - b
    }
}

/// `∫_0^1 x h_I(x) dx = -|I|^2 / 4`.
pub fn haar_first_moment(interval: &DyadicInterval) -> DyadicFraction {
    let len = interval.length();
    -&(&len * &len).halve().halve()
}
