//! The discrepancy function `D_P(x, y) = #(P ∩ [0,x]×[0,y]) - N x y` and its
//! norms.
//!
//! `D_P` is piecewise bilinear: on every open cell of the grid cut by the
//! point coordinates it equals `c - N x y` for an integer count `c`. The L2
//! norm is computed both from the pairwise closed form and by integrating
//! each cell exactly; the L1 norm integrates `|c - N x y|` per cell, where
//! the sign change along the hyperbola `x y = c / N` contributes a
//! logarithm, so the result is a certified enclosure rather than a rational.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::certified::{self, Enclosure};
use crate::dyadic::{haar_point_kernel, DyadicRectangle};
use crate::error::{Error, Result};
use crate::pointset::PointSet;

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

fn count_of(p: &PointSet) -> BigRational {
    BigRational::from_integer(BigInt::from(p.len()))
}

/// `D_P(x, y)` with the closed-box count.
pub fn eval_d(p: &PointSet, x: &BigRational, y: &BigRational) -> BigRational {
    let count = p.points.iter().filter(|q| q.x <= *x && q.y <= *y).count();
    rat(count as i64) - count_of(p) * x * y
}

/// `∫∫ D_P h_R` exactly.
pub fn haar_inner_product(p: &PointSet, r: &DyadicRectangle) -> BigRational {
    let counting: BigRational = p
        .points
        .iter()
        .filter(|q| r.x.contains(&q.x) && r.y.contains(&q.y))
        .map(|q| haar_point_kernel(&r.x, &q.x) * haar_point_kernel(&r.y, &q.y))
        .sum();
    let area = r.area().to_rational();
    counting - count_of(p) * &area * &area / rat(16)
}

/// The grid of cells on which `D_P` is `c - N x y`.
#[derive(Clone, Debug)]
pub struct CellDecomposition {
    pub x_cuts: Vec<BigRational>,
    pub y_cuts: Vec<BigRational>,
    /// `cell_counts[a][b]` is the count on `(x_cuts[a], x_cuts[a+1]) × (y_cuts[b], y_cuts[b+1])`.
    pub cell_counts: Vec<Vec<u64>>,
    pub n_points: u64,
}

fn sorted_cuts<'a>(coords: impl Iterator<Item = &'a BigRational>) -> Vec<BigRational> {
    let mut cuts: Vec<BigRational> = coords.cloned().collect();
    cuts.push(BigRational::zero());
    cuts.push(BigRational::one());
    cuts.sort();
    cuts.dedup();
    cuts
}

/// `counts[a][b] = #{p : rank_x(p) <= a, rank_y(p) <= b}`.
fn dominance_counts(ranks: &[(usize, usize)], nx: usize, ny: usize) -> Vec<Vec<u64>> {
    let mut grid = vec![vec![0u64; ny]; nx];
    for &(a, b) in ranks {
        grid[a][b] += 1;
    }
    for a in 0..nx {
        for b in 0..ny {
            let mut v = grid[a][b];
            if a > 0 {
                v += grid[a - 1][b];
            }
            if b > 0 {
                v += grid[a][b - 1];
            }
            if a > 0 && b > 0 {
                v -= grid[a - 1][b - 1];
            }
            grid[a][b] = v;
        }
    }
    grid
}

impl CellDecomposition {
    pub fn new(p: &PointSet) -> Self {
        let x_cuts = sorted_cuts(p.points.iter().map(|q| &q.x));
        let y_cuts = sorted_cuts(p.points.iter().map(|q| &q.y));
        let ranks: Vec<(usize, usize)> = p
            .points
            .iter()
            .map(|q| {
                (
                    x_cuts.binary_search(&q.x).unwrap(),
                    y_cuts.binary_search(&q.y).unwrap(),
                )
            })
            .collect();
        let dominance = dominance_counts(&ranks, x_cuts.len(), y_cuts.len());
        // A cell's lower-left corner is (x_cuts[a], y_cuts[b]); inside the
        // open cell the closed-box count equals the count at that corner.
        let cell_counts = (0..x_cuts.len() - 1)
            .map(|a| dominance[a][..y_cuts.len() - 1].to_vec())
            .collect();
        Self {
            x_cuts,
            y_cuts,
            cell_counts,
            n_points: p.len() as u64,
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell<'_>> + '_ {
        (0..self.x_cuts.len() - 1).flat_map(move |a| {
            (0..self.y_cuts.len() - 1).map(move |b| Cell {
                x0: &self.x_cuts[a],
                x1: &self.x_cuts[a + 1],
                y0: &self.y_cuts[b],
                y1: &self.y_cuts[b + 1],
                count: self.cell_counts[a][b],
            })
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Cell<'a> {
    pub x0: &'a BigRational,
    pub x1: &'a BigRational,
    pub y0: &'a BigRational,
    pub y1: &'a BigRational,
    pub count: u64,
}

/// `Σ_{p,q} (1 - max(p_x,q_x))(1 - max(p_y,q_y)) - (N/2) Σ_p (1 - p_x²)(1 - p_y²) + N²/9`.
pub fn l2_norm_sq(p: &PointSet) -> Result<BigRational> {
    p.require_nonempty()?;
    let one = BigRational::one();
    let n = count_of(p);
    let pairs: BigRational = p
        .points
        .par_iter()
        .map(|a| {
            p.points
                .iter()
                .map(|b| {
                    (&one - a.x.clone().max(b.x.clone())) * (&one - a.y.clone().max(b.y.clone()))
                })
                .sum::<BigRational>()
        })
        .reduce(BigRational::zero, |x, y| x + y);
    let singles: BigRational = p
        .points
        .iter()
        .map(|a| (&one - &a.x * &a.x) * (&one - &a.y * &a.y))
        .sum();
    Ok(pairs - &n * singles / rat(2) + &n * &n / rat(9))
}

/// `∫∫ D_P²` by exact integration of `(c - N x y)²` on every cell.
pub fn l2_norm_sq_cells(p: &PointSet) -> Result<BigRational> {
    p.require_nonempty()?;
    let cells = CellDecomposition::new(p);
    let n = count_of(p);
    Ok(cells
        .cells()
        .map(|cell| {
            let c = rat(cell.count as i64);
            let dx = cell.x1 - cell.x0;
            let dy = cell.y1 - cell.y0;
            let mx = (cell.x1 * cell.x1 - cell.x0 * cell.x0) / rat(2);
            let my = (cell.y1 * cell.y1 - cell.y0 * cell.y0) / rat(2);
            let sx = (cell.x1.pow(3) - cell.x0.pow(3)) / rat(3);
            let sy = (cell.y1.pow(3) - cell.y0.pow(3)) / rat(3);
            &c * &c * dx * dy - rat(2) * &c * &n * mx * my + &n * &n * sx * sy
        })
        .sum())
}

/// Exact decomposition of `∫∫_cell |c - N x y|` as `rational + weight * ln(ratio)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CellIntegral {
    pub rational: BigRational,
    pub log_term: Option<(BigRational, BigRational)>,
}

pub fn abs_cell_integral(cell: &Cell<'_>, n_points: u64) -> CellIntegral {
    let n = rat(n_points as i64);
    let c = rat(cell.count as i64);
    let (x0, x1, y0, y1) = (cell.x0, cell.x1, cell.y0, cell.y1);
    let sq = |a: &BigRational| a * a;
    if cell.count == 0 {
        let v = &n * (sq(x1) - sq(x0)) * (sq(y1) - sq(y0)) / rat(4);
        return CellIntegral {
            rational: v,
            log_term: None,
        };
    }
    let t = &c / &n;
    let dy = y1 - y0;
    let y_sq_diff = sq(y1) - sq(y0);
    let y_sq_sum = sq(y1) + sq(y0);
    // ∫_a^b [c (y1 - y0) - N x (y1² - y0²)/2] dx: column entirely below the hyperbola
    let positive = |a: &BigRational, b: &BigRational| {
        &c * &dy * (b - a) - &n * &y_sq_diff * (sq(b) - sq(a)) / rat(4)
    };
    let xa = &t / y1;
    let xb = (!y0.is_zero()).then(|| &t / y0);
    let mut rational = BigRational::zero();
    let mut log_term = None;

    let r1_hi = x1.clone().min(xa.clone());
    if *x0 < r1_hi {
        rational += positive(x0, &r1_hi);
    }
    let r2_lo = x0.clone().max(xa.clone());
    let r2_hi = match &xb {
        Some(xb) => x1.clone().min(xb.clone()),
        None => x1.clone(),
    };
    if r2_lo < r2_hi {
        rational += -&c * (y0 + y1) * (&r2_hi - &r2_lo)
            + &n * &y_sq_sum * (sq(&r2_hi) - sq(&r2_lo)) / rat(4);
        log_term = Some((&c * &c / &n, &r2_hi / &r2_lo));
    }
    if let Some(xb) = &xb {
        let r3_lo = x0.clone().max(xb.clone());
        if r3_lo < *x1 {
            rational -= positive(&r3_lo, x1);
        }
    }
    CellIntegral { rational, log_term }
}

/// A certified value of `∫∫ |D_P|`.
#[derive(Clone, Debug)]
pub struct L1Norm {
    pub value: Enclosure,
    /// Set when no cell has a sign change, in which case the norm is rational.
    pub exact: Option<BigRational>,
    pub log_terms: usize,
}

impl L1Norm {
    pub fn to_f64(&self) -> f64 {
        match &self.exact {
            Some(r) => r.to_f64().unwrap_or(f64::NAN),
            None => self.value.to_f64(),
        }
    }

    /// Half-width of the enclosure.
    pub fn error_bound(&self) -> BigRational {
        self.value.width() / rat(2)
    }
}

pub fn l1_norm_exact(p: &PointSet, prec: u32) -> Result<L1Norm> {
    p.require_nonempty()?;
    let cells = CellDecomposition::new(p);
    let ny = cells.y_cuts.len() - 1;
    let columns: Vec<(BigRational, Enclosure, usize)> = (0..cells.x_cuts.len() - 1)
        .into_par_iter()
        .map(|a| -> Result<_> {
            let mut rational = BigRational::zero();
            let mut logs = Enclosure::zero(prec);
            let mut count = 0;
            for b in 0..ny {
                let cell = Cell {
                    x0: &cells.x_cuts[a],
                    x1: &cells.x_cuts[a + 1],
                    y0: &cells.y_cuts[b],
                    y1: &cells.y_cuts[b + 1],
                    count: cells.cell_counts[a][b],
                };
                let integral = abs_cell_integral(&cell, cells.n_points);
                rational += integral.rational;
                if let Some((weight, ratio)) = integral.log_term {
                    logs = logs.add(&certified::ln_rational(&ratio, prec)?.mul_rational(&weight));
                    count += 1;
                }
            }
            Ok((rational, logs, count))
        })
        .collect::<Result<_>>()?;
    let mut rational = BigRational::zero();
    let mut logs = Enclosure::zero(prec);
    let mut log_terms = 0;
    for (r, l, c) in columns {
        rational += r;
        logs = logs.add(&l);
        log_terms += c;
    }
    let value = logs.add(&Enclosure::from_rational(&rational, prec));
    Ok(L1Norm {
        exact: (log_terms == 0).then_some(rational),
        value,
        log_terms,
    })
}

/// `sup |D_P|` over the closed square, examining both the closed-box value
/// and the limit from the lower left at every candidate corner.
pub fn linf_norm(p: &PointSet) -> Result<BigRational> {
    p.require_nonempty()?;
    let candidates = |coords: Vec<&BigRational>| {
        let mut v: Vec<BigRational> = coords.into_iter().cloned().collect();
        v.push(BigRational::one());
        v.sort();
        v.dedup();
        v
    };
    let xs = candidates(p.points.iter().map(|q| &q.x).collect());
    let ys = candidates(p.points.iter().map(|q| &q.y).collect());
    let ranks: Vec<(usize, usize)> = p
        .points
        .iter()
        .map(|q| (xs.binary_search(&q.x).unwrap(), ys.binary_search(&q.y).unwrap()))
        .collect();
    let closed = dominance_counts(&ranks, xs.len(), ys.len());
    let n = count_of(p);
    let best = (0..xs.len())
        .into_par_iter()
        .map(|a| {
            let mut best = BigRational::zero();
            for b in 0..ys.len() {
                let volume = &n * &xs[a] * &ys[b];
                let open = if a > 0 && b > 0 { closed[a - 1][b - 1] } else { 0 };
                for count in [closed[a][b], open] {
                    let d = (rat(count as i64) - &volume).abs();
                    if d > best {
                        best = d;
                    }
                }
            }
            best
        })
        .reduce(BigRational::zero, |a, b| a.max(b));
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    L1,
    /// Estimates `∫∫ D²`.
    L2Squared,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Plain Monte-Carlo estimate with its standard error, deterministic per seed.
pub fn monte_carlo_norm(p: &PointSet, kind: NormKind, samples: u64, seed: u64) -> Result<McEstimate> {
    p.require_nonempty()?;
    if samples < 1000 {
        return Err(Error::Precondition("Monte-Carlo needs at least 10^3 samples".into()));
    }
    let pts: Vec<(f64, f64)> = p.points.iter().map(|q| q.to_f64()).collect();
    let n = pts.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let x: f64 = rng.gen();
        let y: f64 = rng.gen();
        let count = pts.iter().filter(|&&(px, py)| px <= x && py <= y).count() as f64;
        let d = count - n * x * y;
        let v = match kind {
            NormKind::L1 => d.abs(),
            NormKind::L2Squared => d * d,
        };
        sum += v;
        sum_sq += v * v;
    }
    let m = samples as f64;
    let mean = sum / m;
    let var = (sum_sq / m - mean * mean).max(0.0) * m / (m - 1.0);
    Ok(McEstimate {
        estimate: mean,
        std_error: (var / m).sqrt(),
        samples,
    })
}

/// `‖D_P‖₁ / sqrt(ln N)` for this one point set, an upper bound for the
/// infimum over all `N`-point sets.
pub fn d_n(p: &PointSet, prec: u32) -> Result<Enclosure> {
    let l1 = l1_norm_exact(p, prec)?;
    d_n_from_l1(&l1.value, p.len() as u64)
}

pub fn d_n_from_l1(l1: &Enclosure, n_points: u64) -> Result<Enclosure> {
    if n_points < 2 {
        return Err(Error::Domain("d_N needs N >= 2 (ln N > 0)".into()));
    }
    let denom = certified::ln_int(n_points, l1.prec())?.sqrt()?;
    l1.div(&denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{DyadicInterval, Point};

    const P: u32 = 200;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn single(x: BigRational, y: BigRational) -> PointSet {
        PointSet::new(vec![Point::new(x, y).unwrap()], "single")
    }

    fn iv(k: u32, j: u128) -> DyadicInterval {
        DyadicInterval::new(k, j).unwrap()
    }

    #[test]
    fn eval_examples() {
        let origin = single(q(0, 1), q(0, 1));
        assert_eq!(eval_d(&origin, &q(1, 2), &q(1, 2)), q(3, 4));
        assert_eq!(eval_d(&origin, &q(0, 1), &q(0, 1)), q(1, 1));
        let vdc = PointSet::van_der_corput(2).unwrap();
        assert_eq!(eval_d(&vdc, &q(1, 2), &q(1, 2)), q(2, 1));
        assert_eq!(eval_d(&vdc, &q(0, 1), &q(0, 1)), q(1, 1));
    }

    #[test]
    fn haar_inner_product_examples() {
        let quarter = DyadicRectangle::new(iv(1, 0), iv(1, 0));
        assert_eq!(haar_inner_product(&single(q(9, 10), q(9, 10)), &quarter), q(-1, 256));
        assert_eq!(haar_inner_product(&single(q(1, 1), q(1, 1)), &quarter), q(-1, 256));
        assert_eq!(
            haar_inner_product(&single(q(0, 1), q(0, 1)), &DyadicRectangle::unit()),
            q(-1, 16)
        );
    }

    #[test]
    fn haar_inner_product_matches_monte_carlo() {
        let set = PointSet::van_der_corput(2).unwrap();
        let r = DyadicRectangle::new(iv(1, 0), iv(0, 0));
        let exact = haar_inner_product(&set, &r).to_f64().unwrap();
        let pts: Vec<(f64, f64)> = set.points.iter().map(|p| p.to_f64()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let samples = 400_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..samples {
            let (x, y): (f64, f64) = (rng.gen(), rng.gen());
            let c = pts.iter().filter(|&&(a, b)| a <= x && b <= y).count() as f64;
            let h = if x < 0.25 { 1.0 } else if x < 0.5 { -1.0 } else { 0.0 }
                * if y < 0.5 { 1.0 } else { -1.0 };
            let v = (c - 4.0 * x * y) * h;
            s += v;
            s2 += v * v;
        }
        let mean = s / samples as f64;
        let se = ((s2 / samples as f64 - mean * mean) / samples as f64).sqrt();
        assert!((mean - exact).abs() < 4.0 * se, "{mean} vs {exact} (se {se})");
    }

    #[test]
    fn l2_examples() {
        assert_eq!(l2_norm_sq(&single(q(0, 1), q(0, 1))).unwrap(), q(11, 18));
        assert_eq!(l2_norm_sq(&single(q(1, 1), q(1, 1))).unwrap(), q(1, 9));
        assert_eq!(l2_norm_sq_cells(&single(q(0, 1), q(0, 1))).unwrap(), q(11, 18));
        assert_eq!(l2_norm_sq_cells(&single(q(1, 1), q(1, 1))).unwrap(), q(1, 9));
        assert!(l2_norm_sq(&PointSet::new(vec![], "")).is_err());
    }

    #[test]
    fn l2_routes_agree() {
        for set in [
            PointSet::van_der_corput(3).unwrap(),
            PointSet::random_uniform(12, 3).unwrap(),
            PointSet::van_der_corput(2).unwrap().symmetrize(),
            PointSet::parse_csv("0.1,0.7\n1/3,1/3\n0.1,0.2\n1,0.5\n").unwrap(),
        ] {
            assert_eq!(l2_norm_sq(&set).unwrap(), l2_norm_sq_cells(&set).unwrap(), "{}", set.label);
        }
    }

    #[test]
    fn l1_examples() {
        let origin = l1_norm_exact(&single(q(0, 1), q(0, 1)), P).unwrap();
        assert_eq!(origin.exact, Some(q(3, 4)));
        let corner = l1_norm_exact(&single(q(1, 1), q(1, 1)), P).unwrap();
        assert_eq!(corner.exact, Some(q(1, 4)));
    }

    #[test]
    fn l1_with_sign_change_matches_closed_form() {
        // P = {(0,0), (1,1)}: D = 1 - 2xy off a null set.
        let set = PointSet::parse_csv("0,0\n1,1\n").unwrap();
        let l1 = l1_norm_exact(&set, P).unwrap();
        assert!(l1.exact.is_none());
        // Independent route: ∫_0^1 ∫_0^1 |1 - 2xy| dy dx. For x <= 1/2 the
        // integrand is positive: ∫ (1 - x) dx over [0, 1/2] = 3/8. For
        // x > 1/2: ∫_0^{1/(2x)} (1-2xy) dy + ∫_{1/(2x)}^1 (2xy-1) dy
        // = 1/(2x) - 1 + x, integrated over [1/2, 1] gives (1/2) ln 2 - 1/2 + 3/8.
        let expected = 0.25 + 0.5 * std::f64::consts::LN_2;
        assert!((l1.to_f64() - expected).abs() < 1e-15, "{} vs {expected}", l1.to_f64());
        assert!(l1.error_bound() < q(1, 1_000_000_000_000));
    }

    #[test]
    fn l1_matches_monte_carlo() {
        let set = PointSet::van_der_corput(2).unwrap();
        let l1 = l1_norm_exact(&set, P).unwrap();
        let mc = monte_carlo_norm(&set, NormKind::L1, 1_000_000, 1).unwrap();
        assert!((mc.estimate - l1.to_f64()).abs() <= 3.0 * mc.std_error, "{mc:?} vs {}", l1.to_f64());
    }

    #[test]
    fn l1_dominates_unit_haar_coefficient() {
        for set in [
            PointSet::van_der_corput(3).unwrap(),
            PointSet::random_uniform(9, 4).unwrap(),
        ] {
            let l1 = l1_norm_exact(&set, P).unwrap();
            let ip = haar_inner_product(&set, &DyadicRectangle::unit()).abs();
            assert!(l1.value.lower() >= ip);
        }
    }

    #[test]
    fn linf_examples() {
        assert_eq!(linf_norm(&single(q(0, 1), q(0, 1))).unwrap(), q(1, 1));
        assert_eq!(linf_norm(&single(q(1, 1), q(1, 1))).unwrap(), q(1, 1));
        let vdc = PointSet::van_der_corput(2).unwrap();
        assert!(linf_norm(&vdc).unwrap() >= q(2, 1));
    }

    #[test]
    fn linf_dominates_a_dense_sample() {
        let set = PointSet::random_uniform(10, 21).unwrap();
        let sup = linf_norm(&set).unwrap();
        for i in 0..=40 {
            for j in 0..=40 {
                assert!(eval_d(&set, &q(i, 40), &q(j, 40)).abs() <= sup);
            }
        }
    }

    #[test]
    fn monte_carlo_is_deterministic_and_unbiased() {
        let origin = single(q(0, 1), q(0, 1));
        let a = monte_carlo_norm(&origin, NormKind::L1, 1_000_000, 9).unwrap();
        assert_eq!(a, monte_carlo_norm(&origin, NormKind::L1, 1_000_000, 9).unwrap());
        assert!((a.estimate - 0.75).abs() <= 4.0 * a.std_error);
        let b = monte_carlo_norm(&origin, NormKind::L2Squared, 1_000_000, 9).unwrap();
        assert!((b.estimate - 11.0 / 18.0).abs() <= 4.0 * b.std_error);
        assert!(monte_carlo_norm(&origin, NormKind::L1, 10, 9).is_err());
    }

    #[test]
    fn d_n_contract() {
        let set = PointSet::parse_csv("0,0\n1,1\n").unwrap();
        let l1 = l1_norm_exact(&set, P).unwrap();
        let dn = d_n(&set, P).unwrap();
        let expected = l1.to_f64() / std::f64::consts::LN_2.sqrt();
        assert!((dn.to_f64() - expected).abs() < 1e-14);
        assert!(d_n(&single(q(0, 1), q(0, 1)), P).is_err());
        let vdc = d_n(&PointSet::van_der_corput(4).unwrap(), P).unwrap();
        assert!(vdc.is_positive() && vdc.to_f64().is_finite());
    }

    #[test]
    fn cell_counts_are_monotone() {
        let set = PointSet::random_uniform(15, 2).unwrap();
        let cells = CellDecomposition::new(&set);
        for a in 0..cells.cell_counts.len() {
            for b in 0..cells.cell_counts[a].len() {
                if a > 0 {
                    assert!(cells.cell_counts[a][b] >= cells.cell_counts[a - 1][b]);
                }
                if b > 0 {
                    assert!(cells.cell_counts[a][b] >= cells.cell_counts[a][b - 1]);
                }
            }
        }
        assert_eq!(*cells.cell_counts.last().unwrap().last().unwrap(), 15);
    }
}
