//! Finite point sets: generators, transforms and an exact CSV format.
//!
//! Coordinates are exact rationals. The CSV reader accepts three literal
//! forms per coordinate: a plain decimal (`0.25`), a dyadic literal
//! (`3/2^3`) and a general fraction (`1/3`). The writer picks the dyadic
//! form for dyadic rationals, a decimal for other terminating expansions,
//! and a fraction otherwise, so `read(write(P)) == P` exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dyadic::{DyadicFraction, Point};
use crate::error::{Error, Result};

/// Largest `m` accepted by [`PointSet::van_der_corput`].
pub const MAX_VDC_LOG2: u32 = 24;

/// Denominator exponent of coordinates produced by [`PointSet::random_uniform`].
pub const RANDOM_BITS: u32 = 53;

/// An ordered multiset of points in the closed unit square.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointSet {
    pub points: Vec<Point>,
    pub label: String,
}

impl PointSet {
    pub fn new(points: Vec<Point>, label: impl Into<String>) -> Self {
        Self {
            points,
            label: label.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub(crate) fn require_nonempty(&self) -> Result<()> {
        if self.points.is_empty() {
            Err(Error::Precondition("point set is empty".into()))
        } else {
            Ok(())
        }
    }

    /// `(k / 2^m, bitreverse_m(k) / 2^m)` for `k = 0 .. 2^m`.
    pub fn van_der_corput(m: u32) -> Result<Self> {
        if m > MAX_VDC_LOG2 {
            return Err(Error::ResourceLimit(format!(
                "van der Corput set with 2^{m} points (cap is 2^{MAX_VDC_LOG2})"
            )));
        }
        let points = (0..1u64 << m)
            .map(|k| {
                let rev = if m == 0 {
                    0
                } else {
                    k.reverse_bits() >> (64 - m)
                };
                Point::dyadic(k, rev, m)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(points, format!("vdc(m={m})")))
    }

    /// `n` i.i.d. uniform points with coordinates `k / 2^53`, deterministic
    /// in `seed`.
    pub fn random_uniform(n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Precondition("random_uniform needs N >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..n)
            .map(|_| {
                let a = rng.gen::<u64>() >> (64 - RANDOM_BITS);
                let b = rng.gen::<u64>() >> (64 - RANDOM_BITS);
                Point::dyadic(a, b, RANDOM_BITS)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(points, format!("random(n={n},seed={seed})")))
    }

    /// `P ∪ {(1 - x, y)}` as a multiset.
    pub fn symmetrize(&self) -> Self {
        let one = BigRational::one();
        let mut points = self.points.clone();
        points.extend(self.points.iter().map(|p| Point {
            x: &one - &p.x,
            y: p.y.clone(),
        }));
        Self::new(points, format!("symmetrize({})", self.label))
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if points.is_empty() && line.replace(' ', "").eq_ignore_ascii_case("x,y") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 2 {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected two comma-separated coordinates, got {line:?}"),
                });
            }
            let parse = |s: &str| {
                parse_coordinate(s).map_err(|message| Error::Parse {
                    line: line_no,
                    message,
                })
            };
            let (x, y) = (parse(fields[0])?, parse(fields[1])?);
            let point = Point::new(x, y).map_err(|e| match e {
                Error::Domain(msg) => Error::Domain(format!("line {line_no}: {msg}")),
                other => other,
            })?;
            points.push(point);
        }
        Ok(Self::new(points, String::new()))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut set = Self::parse_csv(&fs::read_to_string(path)?)?;
        set.label = path.display().to_string();
        Ok(set)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{}", format_coordinate(&p.x), format_coordinate(&p.y));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Parse one coordinate literal into an exact rational.
pub fn parse_coordinate(s: &str) -> std::result::Result<BigRational, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty coordinate".into());
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num
            .trim()
            .parse()
            .map_err(|_| format!("bad numerator in {s:?}"))?;
        let den = den.trim();
        let den: BigInt = if let Some(exp) = den.strip_prefix("2^") {
            let exp: u32 = exp.parse().map_err(|_| format!("bad exponent in {s:?}"))?;
            BigInt::one() << exp as usize
        } else {
            den.parse().map_err(|_| format!("bad denominator in {s:?}"))?
        };
        if den.is_zero() {
            return Err(format!("zero denominator in {s:?}"));
        }
        return Ok(BigRational::new(num, den));
    }
    parse_decimal(s).ok_or_else(|| format!("not a number: {s:?}"))
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let (negative, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let num: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().ok()?
    };
    let den = num_traits::pow(BigInt::from(10), frac.len());
    let value = BigRational::new(num, den);
    Some(if negative { -value } else { value })
}

/// Render a rational using the shortest exact literal form.
pub fn format_coordinate(r: &BigRational) -> String {
    if r.is_integer() {
        return r.numer().to_string();
    }
    if let Some(d) = DyadicFraction::from_rational(r) {
        return format!("{}/2^{}", d.numerator(), d.exponent());
    }
    if let Some(decimal) = terminating_decimal(r) {
        return decimal;
    }
    format!("{}/{}", r.numer(), r.denom())
}

fn terminating_decimal(r: &BigRational) -> Option<String> {
    let mut den = r.denom().clone();
    let (mut twos, mut fives) = (0usize, 0usize);
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while den.is_multiple_of(&two) {
        den /= &two;
        twos += 1;
    }
    while den.is_multiple_of(&five) {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return None;
    }
    let digits = twos.max(fives);
    let scaled = r * BigRational::from_integer(num_traits::pow(BigInt::from(10), digits));
    let abs = scaled.numer().abs().to_string();
    let padded = format!("{abs:0>width$}", width = digits + 1);
    let (int, frac) = padded.split_at(padded.len() - digits);
    let sign = if scaled.is_negative() { "-" } else { "" };
    Some(format!("{sign}{int}.{frac}"))
}
