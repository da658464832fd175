//! Lower bound for `‖D_P‖₁` from the test function `sin(Σ f_i / √n)`.
//!
//! With `θ = 1/√n` and `±1` valued `f_0..f_n`,
//! `sin(θ Σ f_i) = Σ_{odd p} (−1)^{(p−1)/2} cos^{n+1−p}θ sin^pθ e_p(f)`.
//! The `p = 1` term pairs with `D_P` to the main term. Each product in
//! `e_p` for `p >= 3` pairs with `D_P` to at most `2^{j_1−j_p} N 2^{−n}/16`,
//! and `S_p(n)` sums those weights over all index tuples.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::auxiliary::{build_all_trees, inner_product_d_fi_interval, n_from_pointcount, MaxLevel, RationalInterval};
use crate::certified::{self, Enclosure};
use crate::error::Result;
use crate::pointset::PointSet;
use crate::report::rational_string;

/// Multiplier on each higher-order term of the error sum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorFactor {
    /// The coefficient of `e_p` in the expansion, which is 1.
    #[default]
    Exact,
    /// `p!` on the order-`p` term.
    Factorial,
}

impl ErrorFactor {
    pub fn multiplier(self, p: u32) -> BigInt {
        match self {
            ErrorFactor::Exact => BigInt::one(),
            ErrorFactor::Factorial => (1..=p).map(BigInt::from).product(),
        }
    }
}

fn binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    for j in 0..k {
        acc = acc * (n - j) / (j + 1);
    }
    acc
}

/// `S_p(n) = Σ_{g=p−1}^{n} 2^{−g} C(g−1, p−2) (n+1−g)`: the sum of
/// `2^{j_1−j_p}` over `0 <= j_1 < ... < j_p <= n`.
pub fn tuple_weight_sum(p: u32, n: u32) -> BigRational {
    assert!(p >= 2);
    let mut total = BigRational::zero();
    for g in (p - 1)..=n {
        let count = binomial(g - 1, p - 2) * BigInt::from(n + 1 - g);
        total += BigRational::new(count, BigInt::one() << g as usize);
    }
    total
}

/// `(sin θ, cos θ)` at `θ = 1/√n`.
pub fn angle(n: u32, prec: u32) -> Result<(Enclosure, Enclosure)> {
    let theta = Enclosure::from_int(1, prec).div(&Enclosure::from_int(n, prec).sqrt()?)?;
    certified::sin_cos(&theta)
}

/// `cos^n θ sin θ`, the coefficient of `Σ f_i`.
pub fn lin_coefficient(n: u32, prec: u32) -> Result<Enclosure> {
    let (s, c) = angle(n, prec)?;
    Ok(c.powi(n).mul(&s))
}

/// `Σ_{odd p=3}^{n+1} factor_p cos^{n+1−p}θ sin^pθ (N 2^{−n}/16) S_p(n)`.
pub fn error_bound(n: u32, n_points: u64, factor: ErrorFactor, prec: u32) -> Result<Enclosure> {
    let (s, c) = angle(n, prec)?;
    let scale = BigRational::new(n_points.into(), BigInt::one() << (n as usize + 4));
    let mut total = Enclosure::zero(prec);
    for p in (3..=n + 1).step_by(2) {
        let weight = tuple_weight_sum(p, n) * &scale * BigRational::from_integer(factor.multiplier(p));
        let term = c.powi(n + 1 - p).mul(&s.powi(p)).mul_rational(&weight);
        total = total.add(&term);
    }
    Ok(total)
}

#[derive(Clone, Debug)]
pub struct CertificateOptions {
    pub prec: u32,
    pub max_level: MaxLevel,
    pub error_factor: ErrorFactor,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        Self {
            prec: certified::default_prec(),
            max_level: MaxLevel::Auto,
            error_factor: ErrorFactor::Exact,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BoundCertificate {
    pub n: u32,
    pub n_points: u64,
    /// `Σ_i ∫∫ D_P f_i`; a single point when every family stabilized.
    pub main_term: RationalInterval,
    pub lin_coefficient: Enclosure,
    /// `lin_coefficient · |main_term|`, the smallest magnitude in the interval.
    pub main_bound: Enclosure,
    pub error_bound: Enclosure,
    /// `max(0, main_bound − error_bound)`.
    pub l1_lower_bound: Enclosure,
    /// `l1_lower_bound / sqrt(ln N)`, for `N >= 2`.
    pub d_n_bound: Option<Enclosure>,
    pub stabilized: bool,
    pub error_factor: ErrorFactor,
}

impl BoundCertificate {
    /// The certified bound as a rational: the lower end of the enclosure.
    pub fn certified_lower(&self) -> BigRational {
        self.l1_lower_bound.lower().max(BigRational::zero())
    }
}

fn min_magnitude(r: &RationalInterval) -> BigRational {
    if r.lo.is_positive() {
        r.lo.clone()
    } else if r.hi.is_negative() {
        -r.hi.clone()
    } else {
        BigRational::zero()
    }
}

pub fn certificate(p: &PointSet, opts: &CertificateOptions) -> Result<BoundCertificate> {
    p.require_nonempty()?;
    let n_points = p.len() as u64;
    let n = n_from_pointcount(n_points)?;
    let prec = opts.prec;
    let trees = build_all_trees(p, opts.max_level)?;
    let mut main_term = RationalInterval::exact(BigRational::zero());
    for tree in &trees {
        let v = inner_product_d_fi_interval(tree);
        main_term = RationalInterval {
            lo: &main_term.lo + v.lo,
            hi: &main_term.hi + v.hi,
        };
    }
    let stabilized = trees.iter().all(|t| t.stabilized);
    let coefficient = lin_coefficient(n, prec)?;
    let main_bound = coefficient.mul_rational(&min_magnitude(&main_term));
    let error = error_bound(n, n_points, opts.error_factor, prec)?;
    let l1_lower_bound = main_bound.sub(&error).clamp_nonnegative();
    let d_n_bound = if n_points >= 2 {
        Some(l1_lower_bound.div(&certified::ln_int(n_points, prec)?.sqrt()?)?)
    } else {
        None
    };
    Ok(BoundCertificate {
        n,
        n_points,
        main_term,
        lin_coefficient: coefficient,
        main_bound,
        error_bound: error,
        l1_lower_bound,
        d_n_bound,
        stabilized,
        error_factor: opts.error_factor,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateReport {
    pub n: u32,
    #[serde(rename = "N")]
    pub n_points: u64,
    /// Exact when stabilized, otherwise `[lo, hi]`.
    pub main_term: String,
    pub lin_coefficient: String,
    pub main_bound: String,
    pub error_bound: String,
    pub l1_lower_bound: String,
    pub d_n_bound: Option<String>,
    pub stabilized: bool,
    pub error_factor: ErrorFactor,
}

impl CertificateReport {
    /// Decimal renderings with `digits` significant digits; lower bounds are
    /// rounded down.
    pub fn new(c: &BoundCertificate, digits: u32) -> Self {
        let main_term = if c.main_term.is_exact() {
            rational_string(&c.main_term.lo)
        } else {
            format!("[{}, {}]", rational_string(&c.main_term.lo), rational_string(&c.main_term.hi))
        };
        Self {
            n: c.n,
            n_points: c.n_points,
            main_term,
            lin_coefficient: c.lin_coefficient.plus_minus(digits),
            main_bound: c.main_bound.plus_minus(digits),
            error_bound: c.error_bound.plus_minus(digits),
            l1_lower_bound: c.l1_lower_bound.lower_decimal(digits),
            d_n_bound: c.d_n_bound.as_ref().map(|d| d.lower_decimal(digits)),
            stabilized: c.stabilized,
            error_factor: c.error_factor,
        }
    }
}
