//! Exact integrals of products `∏ f_{i_t}` and `D_P ∏ f_{i_t}` over the
//! region where every factor is already fixed by levels `0..=L`.
//!
//! On the intersection `I` of one empty rectangle from each family the
//! product of Haar functions factors as `s · u(x) v(y)`, where `u` is `h` or
//! the indicator of `I_x` depending on how often the finest x-side occurs,
//! likewise for `v`, and `s` collects the constant signs of the coarser
//! factors. The D-integral against such a product has a closed form through
//! the point kernels.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::auxiliary::tree::AuxFamilyTree;
use crate::dyadic::{haar_first_moment, haar_point_kernel, DyadicInterval, DyadicRectangle, Point, CODE_BITS};
use crate::error::{Error, Result};
use crate::pointset::PointSet;
use crate::report::rational_string;

/// Default limit on enumerated intersection cells.
pub const DEFAULT_CELL_CAP: usize = 20_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Factor {
    Haar,
    Indicator,
}

fn factor_integral(f: Factor, iv: &DyadicInterval) -> BigRational {
    match f {
        Factor::Haar => BigRational::zero(),
        Factor::Indicator => iv.length().to_rational(),
    }
}

/// `∫_I 1{x >= p} u(x) dx`.
fn factor_kernel(f: Factor, iv: &DyadicInterval, p: &BigRational) -> BigRational {
    match f {
        Factor::Haar => haar_point_kernel(iv, p),
        Factor::Indicator => {
            let left = iv.left().to_rational();
            let right = iv.right().to_rational();
            if *p >= right {
                BigRational::zero()
            } else if *p <= left {
                right - left
            } else {
                right - p
            }
        }
    }
}

/// `∫_I x u(x) dx`.
fn factor_moment(f: Factor, iv: &DyadicInterval) -> BigRational {
    match f {
        Factor::Haar => haar_first_moment(iv).to_rational(),
        Factor::Indicator => {
            let left = iv.left().to_rational();
            let right = iv.right().to_rational();
            (&right * &right - &left * &left) / BigRational::from_integer(2.into())
        }
    }
}

/// Sign and factor type of `∏_t h_t` restricted to the finest interval.
fn collapse(intervals: &[DyadicInterval], finest: &DyadicInterval) -> (i8, Factor) {
    let mut sign = 1i8;
    let mut multiplicity = 0;
    let code = finest.index() << (CODE_BITS - finest.scale());
    for iv in intervals {
        if iv.scale() == finest.scale() {
            multiplicity += 1;
        } else {
            sign *= iv.haar_code(code);
        }
    }
    let f = if multiplicity % 2 == 1 { Factor::Haar } else { Factor::Indicator };
    (sign, f)
}

/// Side lengths that occur more than once among the chosen rectangles.
fn repeated_sides(rects: &[DyadicRectangle]) -> Option<String> {
    for (a, ra) in rects.iter().enumerate() {
        for rb in &rects[a + 1..] {
            if ra.x.scale() == rb.x.scale() {
                return Some(format!("x-sides of {ra} and {rb} coincide"));
            }
            if ra.y.scale() == rb.y.scale() {
                return Some(format!("y-sides of {ra} and {rb} coincide"));
            }
        }
    }
    None
}

#[derive(Clone, Debug, Default)]
struct Accumulator {
    cells: usize,
    product: BigRational,
    d_product: BigRational,
    repeated: Option<String>,
}

impl Accumulator {
    fn merge(mut self, other: Self) -> Self {
        self.cells += other.cells;
        self.product += other.product;
        self.d_product += other.d_product;
        self.repeated = self.repeated.or(other.repeated);
        self
    }
}

struct Context<'a> {
    points: &'a [Point],
    n_points: BigRational,
    trees: &'a [&'a AuxFamilyTree],
    level: u32,
    cap: usize,
}

impl Context<'_> {
    fn leaf(&self, rects: &[DyadicRectangle], cell: &DyadicRectangle, acc: &mut Accumulator) {
        acc.cells += 1;
        if acc.repeated.is_none() {
            acc.repeated = repeated_sides(rects);
        }
        let xs: Vec<DyadicInterval> = rects.iter().map(|r| r.x).collect();
        let ys: Vec<DyadicInterval> = rects.iter().map(|r| r.y).collect();
        let (sx, fx) = collapse(&xs, &cell.x);
        let (sy, fy) = collapse(&ys, &cell.y);
        let sign = BigRational::from_integer(BigInt::from(sx * sy));
        acc.product += &sign * factor_integral(fx, &cell.x) * factor_integral(fy, &cell.y);
        let counting: BigRational = self
            .points
            .iter()
            .filter(|p| {
                (fx == Factor::Indicator || cell.x.contains(&p.x))
                    && (fy == Factor::Indicator || cell.y.contains(&p.y))
            })
            .map(|p| factor_kernel(fx, &cell.x, &p.x) * factor_kernel(fy, &cell.y, &p.y))
            .sum();
        let volume = &self.n_points * factor_moment(fx, &cell.x) * factor_moment(fy, &cell.y);
        acc.d_product += sign * (counting - volume);
    }

    fn descend(
        &self,
        t: usize,
        region: &DyadicRectangle,
        chosen: &mut Vec<DyadicRectangle>,
        acc: &mut Accumulator,
    ) -> Result<()> {
        if t == self.trees.len() {
            self.leaf(chosen, region, acc);
            return Ok(());
        }
        let mut found = Vec::new();
        self.trees[t].empty_rects_meeting(region, self.level, self.cap, &mut found)?;
        for (rect, _) in found {
            let cell = region.intersect(&rect).expect("query returns meeting rectangles");
            chosen.push(rect);
            self.descend(t + 1, &cell, chosen, acc)?;
            chosen.pop();
            if acc.cells > self.cap {
                return Err(Error::ResourceLimit(format!(
                    "more than {} intersection cells",
                    self.cap
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProductCheck {
    pub indices: Vec<u32>,
    pub level: u32,
    pub cells: usize,
    /// `∫ ∏ f` over the covered region.
    pub covered_product: String,
    /// `∫ D_P ∏ f` over the covered region.
    pub covered_d_product: String,
    /// `N 2^(-n-2(n+1)L)` per family.
    pub uncovered_mass: String,
    /// `2^(i_1 - i_p) N 2^-n / 16`.
    pub lemma_bound: String,
    /// `N p` times the uncovered mass.
    pub d_error: String,
    pub part_a: bool,
    pub part_b: bool,
    pub sides_distinct: bool,
    pub witness: Option<String>,
    #[serde(skip)]
    pub covered_product_value: BigRational,
    #[serde(skip)]
    pub covered_d_product_value: BigRational,
    #[serde(skip)]
    pub lemma_bound_value: BigRational,
    #[serde(skip)]
    pub d_error_value: BigRational,
}

impl ProductCheck {
    pub fn passed(&self) -> bool {
        self.part_a && self.part_b && self.sides_distinct
    }
}

/// Checks both parts of the product lemma for the families `trees`, which
/// must have strictly increasing directions and be built to at least `level`.
pub fn product_integral_bound_check(
    p: &PointSet,
    trees: &[&AuxFamilyTree],
    level: u32,
    cap: usize,
) -> Result<ProductCheck> {
    if trees.len() < 2 {
        return Err(Error::Precondition("the product check needs at least two families".into()));
    }
    if trees.windows(2).any(|w| w[0].i >= w[1].i) {
        return Err(Error::Precondition("directions must be strictly increasing".into()));
    }
    if let Some(t) = trees.iter().find(|t| t.depth() < level) {
        return Err(Error::Precondition(format!(
            "family {} is built only to level {}, below {level}",
            t.i,
            t.depth()
        )));
    }
    let ctx = Context {
        points: &p.points,
        n_points: BigRational::from_integer(p.len().into()),
        trees,
        level,
        cap,
    };
    let mut first = Vec::new();
    trees[0].empty_rects_meeting(&DyadicRectangle::unit(), level, cap, &mut first)?;
    let acc = first
        .par_iter()
        .map(|(rect, _)| -> Result<Accumulator> {
            let mut acc = Accumulator::default();
            let mut chosen = vec![*rect];
            ctx.descend(1, rect, &mut chosen, &mut acc)?;
            Ok(acc)
        })
        .try_reduce(Accumulator::default, |a, b| Ok(a.merge(b)))?;

    let first_tree = trees[0];
    let n = first_tree.n;
    let count = trees.len() as i64;
    let mass = first_tree.uncovered_mass(level).value;
    let p_mass = BigRational::from_integer(count.into()) * &mass;
    let d_error = &ctx.n_points * &p_mass;
    let spread = trees[trees.len() - 1].i - trees[0].i;
    let lemma_bound = &ctx.n_points
        / BigRational::from_integer((BigInt::one() << (spread + n) as usize) * BigInt::from(16));
    let part_a = acc.product.abs() <= p_mass;
    let part_b = acc.d_product.abs() <= &lemma_bound + &d_error;
    let witness = if !part_a {
        Some(format!("|∫∏f| = {} exceeds {}", rational_string(&acc.product.abs()), rational_string(&p_mass)))
    } else if !part_b {
        Some(format!(
            "|∫D∏f| = {} exceeds {} + {}",
            rational_string(&acc.d_product.abs()),
            rational_string(&lemma_bound),
            rational_string(&d_error)
        ))
    } else {
        acc.repeated.clone()
    };
    Ok(ProductCheck {
        indices: trees.iter().map(|t| t.i).collect(),
        level,
        cells: acc.cells,
        covered_product: rational_string(&acc.product),
        covered_d_product: rational_string(&acc.d_product),
        uncovered_mass: rational_string(&mass),
        lemma_bound: rational_string(&lemma_bound),
        d_error: rational_string(&d_error),
        part_a,
        part_b,
        sides_distinct: acc.repeated.is_none(),
        witness,
        covered_product_value: acc.product,
        covered_d_product_value: acc.d_product,
        lemma_bound_value: lemma_bound,
        d_error_value: d_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auxiliary::tree::{build_tree, MaxLevel};
    use crate::discrepancy::eval_d;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn factor_kernels_match_midpoint_sums() {
        // The integrands are step functions with breakpoints on the grid or
        // at p, so a midpoint sum with the cell holding p split is exact.
        let iv = DyadicInterval::new(2, 1).unwrap();
        let steps = 64i64;
        for f in [Factor::Haar, Factor::Indicator] {
            for p in [q(0, 1), q(5, 16), q(3, 8), q(1, 2), q(9, 10)] {
                let value = |x: &BigRational| -> BigRational {
                    let u = match f {
                        Factor::Haar => BigRational::from_integer(crate::dyadic::haar_value(&iv, x).into()),
                        Factor::Indicator => {
                            if iv.contains(x) { BigRational::one() } else { BigRational::zero() }
                        }
                    };
                    if *x >= p { u } else { BigRational::zero() }
                };
                let h = q(1, 4 * steps);
                let mut total = BigRational::zero();
                for k in 0..steps {
                    let mid = iv.left().to_rational() + (BigRational::from_integer(k.into()) + q(1, 2)) * &h;
                    let left = iv.left().to_rational() + BigRational::from_integer(k.into()) * &h;
                    let right = &left + &h;
                    if p > left && p < right {
                        total += value(&((&p + &right) / q(2, 1))) * (&right - &p);
                    } else {
                        total += value(&mid) * &h;
                    }
                }
                assert_eq!(total, factor_kernel(f, &iv, &p), "{f:?} p={p}");
            }
        }
    }

    #[test]
    fn collapse_counts_multiplicity() {
        let coarse = DyadicInterval::new(1, 0).unwrap();
        let fine = DyadicInterval::new(3, 3).unwrap();
        // fine lies in the right half of [0,1/2)
        assert_eq!(collapse(&[coarse, fine], &fine), (-1, Factor::Haar));
        assert_eq!(collapse(&[fine, fine], &fine), (1, Factor::Indicator));
    }

    fn origin() -> PointSet {
        PointSet::parse_csv("0,0\n").unwrap()
    }

    #[test]
    fn origin_pair_at_level_two() {
        let set = origin();
        let t0 = build_tree(&set, 0, MaxLevel::Fixed(2)).unwrap();
        let t1 = build_tree(&set, 1, MaxLevel::Fixed(2)).unwrap();
        let check = product_integral_bound_check(&set, &[&t0, &t1], 2, DEFAULT_CELL_CAP).unwrap();
        assert!(check.passed(), "{check:?}");
        assert!(check.covered_product_value.abs() <= q(2, 1) * t0.uncovered_mass(2).value);
        assert!(check.cells > 0);
    }

    #[test]
    fn preconditions() {
        let set = origin();
        let t0 = build_tree(&set, 0, MaxLevel::Fixed(2)).unwrap();
        let t1 = build_tree(&set, 1, MaxLevel::Fixed(1)).unwrap();
        assert!(product_integral_bound_check(&set, &[&t0], 1, DEFAULT_CELL_CAP).is_err());
        assert!(product_integral_bound_check(&set, &[&t1, &t0], 1, DEFAULT_CELL_CAP).is_err());
        assert!(product_integral_bound_check(&set, &[&t0, &t1], 2, DEFAULT_CELL_CAP).is_err());
        assert!(matches!(
            product_integral_bound_check(&set, &[&t0, &t1], 1, 3),
            Err(Error::ResourceLimit(_))
        ));
    }

    /// Level-0 families are constant on the cells of a 2^-5 grid, and so is
    /// the counting part of `D` for a point set on the 1/4 grid, which gives
    /// an independent cell-by-cell sum.
    #[test]
    fn level_zero_pair_matches_brute_force() {
        let set = PointSet::van_der_corput(2).unwrap();
        let t1 = build_tree(&set, 1, MaxLevel::Fixed(0)).unwrap();
        let t2 = build_tree(&set, 2, MaxLevel::Fixed(0)).unwrap();
        let check = product_integral_bound_check(&set, &[&t1, &t2], 0, DEFAULT_CELL_CAP).unwrap();
        let k = 32i64;
        let mut total = BigRational::zero();
        let mut product = BigRational::zero();
        let h = q(1, k);
        for a in 0..k {
            for b in 0..k {
                let (x0, y0) = (q(a, k), q(b, k));
                let (x1, y1) = (&x0 + &h, &y0 + &h);
                let mid = ((&x0 + &x1) / q(2, 1), (&y0 + &y1) / q(2, 1));
                let f1 = t1.eval(&mid.0, &mid.1).unwrap();
                let f2 = t2.eval(&mid.0, &mid.1).unwrap();
                if f1.truncated || f2.truncated || f1.level > 0 || f2.level > 0 {
                    continue;
                }
                let s = BigRational::from_integer((f1.value * f2.value).into());
                product += &s * &h * &h;
                let c = eval_d(&set, &mid.0, &mid.1) + q(4, 1) * &mid.0 * &mid.1;
                let integral = &c * &h * &h - q(4, 1) * (&x1 * &x1 - &x0 * &x0) / q(2, 1) * (&y1 * &y1 - &y0 * &y0) / q(2, 1);
                total += s * integral;
            }
        }
        assert_eq!(check.covered_product_value, product);
        assert_eq!(check.covered_d_product_value, total);
    }
}
