//! The Riesz-type product `G = ∏_{i=0}^n (1 + a_i f_i^0) − 1` built from
//! the level-0 Roth functions, evaluated at random points.

use num_bigint::BigInt;
use num_complex::Complex;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::HashSet;

use crate::auxiliary::n_from_pointcount;
use crate::certified;
use crate::error::{Error, Result};
use crate::pointset::PointSet;
use crate::testfn::constants::{halasz_constant, DISPLAY_DIGITS};

/// How the factor `iγ` in front of `f_i^0` is read.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaReading {
    /// The index `i` times `γ`; the `i = 0` factor is 1.
    #[default]
    IndexTimesGamma,
    /// The imaginary unit times `γ`.
    ImaginaryUnit,
}

#[derive(Clone, Debug)]
pub struct HalaszProduct {
    pub gamma: f64,
    pub n: u32,
    pub reading: GammaReading,
    scale: f64,
    /// Nonempty level-0 cells `(j_x, j_y)` per direction `i`.
    occupied: Vec<HashSet<(u64, u64)>>,
}

fn floor_scaled(r: &BigRational, bits: u32) -> u64 {
    (r.numer() << bits as usize).div_floor(r.denom()).to_u64().unwrap_or(u64::MAX)
}

impl HalaszProduct {
    pub fn new(p: &PointSet, gamma: f64, reading: GammaReading) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Precondition(format!("gamma must be positive, got {gamma}")));
        }
        if p.len() < 2 {
            return Err(Error::Domain("the product needs N >= 2 (ln N > 0)".into()));
        }
        let n = n_from_pointcount(p.len() as u64)?;
        if n > 60 {
            return Err(Error::ResourceLimit(format!("n = {n} is too large")));
        }
        let occupied = (0..=n)
            .map(|i| {
                p.points
                    .iter()
                    .map(|pt| (floor_scaled(&pt.x, i), floor_scaled(&pt.y, n - i)))
                    .collect()
            })
            .collect();
        Ok(Self {
            gamma,
            n,
            reading,
            scale: gamma / (p.len() as f64).ln().sqrt(),
            occupied,
        })
    }

    /// `f_i^0(x, y)` for `x, y` in `[0, 1)`.
    pub fn roth(&self, i: u32, x: f64, y: f64) -> i8 {
        let (bx, by) = (i, self.n - i);
        let cell = |t: f64, bits: u32| (t * (1u64 << bits) as f64).floor() as u64;
        if self.occupied[i as usize].contains(&(cell(x, bx), cell(y, by))) {
            return 0;
        }
        let half = |t: f64, bits: u32| if cell(t, bits + 1) % 2 == 0 { 1 } else { -1 };
        half(x, bx) * half(y, by)
    }

    pub fn eval(&self, x: f64, y: f64) -> Complex<f64> {
        let mut prod = Complex::new(1.0, 0.0);
        for i in 0..=self.n {
            let f = f64::from(self.roth(i, x, y));
            let a = match self.reading {
                GammaReading::IndexTimesGamma => Complex::new(f64::from(i) * self.scale, 0.0),
                GammaReading::ImaginaryUnit => Complex::new(0.0, self.scale),
            };
            prod *= Complex::new(1.0, 0.0) + a * f;
        }
        prod - 1.0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HalaszStats {
    pub gamma: f64,
    pub n: u32,
    pub reading: GammaReading,
    pub samples: u64,
    pub seed: u64,
    /// Largest `|G|` seen over the samples.
    pub sup_estimate: f64,
    pub mean_abs: f64,
    pub halasz_constant: String,
}

pub fn halasz_g_values(
    p: &PointSet,
    gamma: f64,
    reading: GammaReading,
    samples: u64,
    seed: u64,
) -> Result<HalaszStats> {
    if samples == 0 {
        return Err(Error::Precondition("at least one sample is needed".into()));
    }
    let g = HalaszProduct::new(p, gamma, reading)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sup, mut sum) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let (x, y): (f64, f64) = (rng.gen(), rng.gen());
        let v = g.eval(x, y).norm();
        sup = sup.max(v);
        sum += v;
    }
    let prec = certified::bits_for_digits(DISPLAY_DIGITS + 10);
    Ok(HalaszStats {
        gamma,
        n: g.n,
        reading,
        samples,
        seed,
        sup_estimate: sup,
        mean_abs: sum / samples as f64,
        halasz_constant: halasz_constant(prec)?.decimal(DISPLAY_DIGITS),
    })
}

/// Exact `f_i^0` at a rational point, for cross-checks.
pub fn roth_exact(p: &PointSet, i: u32, x: &BigRational, y: &BigRational) -> Result<i8> {
    let n = n_from_pointcount(p.len() as u64)?;
    let one = BigRational::from_integer(BigInt::from(1));
    if *x >= one || *y >= one {
        return Ok(0);
    }
    let (bx, by) = (i, n - i);
    let key = (floor_scaled(x, bx), floor_scaled(y, by));
    if p.points.iter().any(|pt| (floor_scaled(&pt.x, bx), floor_scaled(&pt.y, by)) == key) {
        return Ok(0);
    }
    let half = |t: &BigRational, bits: u32| if floor_scaled(t, bits + 1) % 2 == 0 { 1 } else { -1 };
    Ok(half(x, bx) * half(y, by))
}
