//! Recursive families of empty and nonempty dyadic rectangles.
//!
//! For direction `i` the level-0 grid has cells of size `2^-i × 2^(i-n)`.
//! Cells holding a point are nonempty; every nonempty cell at level `l` is
//! split into `2^(2(n+1))` children of side ratio `2^-(n+1)`, and again the
//! children holding points are nonempty. The auxiliary function `f_i` is the
//! sum of `h_R` over all empty rectangles `R` at every level.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::dyadic::{location_code, DyadicFraction, DyadicInterval, DyadicRectangle, LocationCode, CODE_BITS, MAX_SCALE};
use crate::error::{Error, Result};
use crate::pointset::PointSet;
use crate::report::rational_string;

/// Levels are never built beyond this depth.
pub const LEVEL_CAP: u32 = 64;

/// The unique `n` with `2^(n-1) < 2N <= 2^n`.
pub fn n_from_pointcount(n_points: u64) -> Result<u32> {
    if n_points == 0 {
        return Err(Error::Precondition("N must be at least 1".into()));
    }
    let two_n = 2 * u128::from(n_points);
    Ok(128 - (two_n - 1).leading_zeros())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaxLevel {
    /// Two levels past stabilization, or as deep as the scale cap allows.
    Auto,
    Fixed(u32),
}

#[derive(Clone, Debug)]
pub struct LevelRecord {
    pub level: u32,
    /// Nonempty rectangles with the indices of the points they contain.
    pub nonempty: Vec<(DyadicRectangle, Vec<usize>)>,
    pub empty_count: BigInt,
    pub rect_area: DyadicFraction,
}

/// Residual area not yet assigned to an empty rectangle after level `level`,
/// bounded by `N · 2^(-n-2(n+1)level)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UncoveredMass {
    pub level: u32,
    pub value: BigRational,
}

#[derive(Clone, Debug)]
pub struct AuxFamilyTree {
    pub i: u32,
    pub n: u32,
    pub n_points: u64,
    pub levels: Vec<LevelRecord>,
    pub stabilized: bool,
    pub l_star: Option<u32>,
    codes: Vec<Option<(LocationCode, LocationCode)>>,
    lookup: Vec<HashMap<(u128, u128), usize>>,
}

/// A rational interval `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalInterval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl RationalInterval {
    pub fn exact(v: BigRational) -> Self {
        Self { lo: v.clone(), hi: v }
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn midpoint(&self) -> BigRational {
        (&self.lo + &self.hi) / BigRational::from_integer(2.into())
    }

    pub fn radius(&self) -> BigRational {
        (&self.hi - &self.lo) / BigRational::from_integer(2.into())
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        let (a, b) = (&self.lo * k, &self.hi * k);
        if a <= b {
            Self { lo: a, hi: b }
        } else {
            Self { lo: b, hi: a }
        }
    }
}

fn pow2(k: u32) -> BigInt {
    BigInt::one() << k as usize
}

impl AuxFamilyTree {
    pub fn x_scale(&self, level: u32) -> u32 {
        self.i + (self.n + 1) * level
    }

    pub fn y_scale(&self, level: u32) -> u32 {
        self.n - self.i + (self.n + 1) * level
    }

    /// Deepest level whose rectangles are representable.
    pub fn max_representable_level(n: u32, i: u32) -> u32 {
        let coarse = i.max(n - i);
        if coarse > MAX_SCALE {
            return 0;
        }
        ((MAX_SCALE - coarse) / (n + 1)).min(LEVEL_CAP)
    }

    /// The level at which the family was cut off.
    pub fn depth(&self) -> u32 {
        self.levels.len() as u32 - 1
    }

    pub fn rect_area(&self, level: u32) -> DyadicFraction {
        DyadicFraction::pow2_neg(self.n + 2 * (self.n + 1) * level)
    }

    pub fn nonempty_count(&self, level: u32) -> usize {
        self.levels[level as usize].nonempty.len()
    }

    /// Children per nonempty rectangle.
    pub fn branching(&self) -> BigInt {
        pow2(2 * (self.n + 1))
    }

    fn cell_key(&self, level: u32, cx: LocationCode, cy: LocationCode) -> (u128, u128) {
        (
            cx >> (CODE_BITS - self.x_scale(level)),
            cy >> (CODE_BITS - self.y_scale(level)),
        )
    }

    fn rect(&self, level: u32, key: (u128, u128)) -> DyadicRectangle {
        DyadicRectangle::new(
            DyadicInterval::new(self.x_scale(level), key.0).expect("scale checked at build"),
            DyadicInterval::new(self.y_scale(level), key.1).expect("scale checked at build"),
        )
    }

    /// Whether `key` names a nonempty rectangle at `level`.
    pub fn is_nonempty(&self, level: u32, key: (u128, u128)) -> bool {
        self.lookup[level as usize].contains_key(&key)
    }

    pub fn uncovered_mass(&self, level: u32) -> UncoveredMass {
        UncoveredMass {
            level,
            value: BigRational::from_integer(self.n_points.into()) * self.rect_area(level).to_rational(),
        }
    }

    /// `Σ |R|` over the nonempty rectangles at `level`.
    pub fn nonempty_area(&self, level: u32) -> BigRational {
        BigRational::from_integer(self.nonempty_count(level).into()) * self.rect_area(level).to_rational()
    }

    /// `Σ |R|²` over the empty rectangles of levels `0..=level`.
    pub fn partial_sum_area_sq(&self, level: u32) -> BigRational {
        (0..=level.min(self.depth()))
            .map(|l| {
                let a = self.rect_area(l).to_rational();
                BigRational::from_integer(self.levels[l as usize].empty_count.clone()) * &a * &a
            })
            .sum()
    }

    /// `Σ_{l > level} r^l` with `r = 2^(-4(n+1))`, times `2^(-2n)`: the sum of
    /// squared areas of one rectangle per level beyond `level`.
    pub fn geometric_tail(&self, level: u32) -> BigRational {
        let r = BigRational::new(BigInt::one(), pow2(4 * (self.n + 1)));
        let base = BigRational::new(BigInt::one(), pow2(2 * self.n));
        base * num_traits::pow(r.clone(), level as usize + 1) / (BigRational::one() - r)
    }

    /// `Σ_{R ∈ E_i} |R|²`: exact when stabilized, otherwise an enclosure
    /// built from the counts at the deepest level.
    pub fn sum_area_sq(&self) -> RationalInterval {
        let depth = self.depth();
        let partial = self.partial_sum_area_sq(depth);
        let tail = self.geometric_tail(depth);
        let c = BigInt::from(self.nonempty_count(depth));
        let b = self.branching();
        if self.stabilized {
            let per_level = BigRational::from_integer((&b - BigInt::one()) * &c);
            return RationalInterval::exact(partial + per_level * tail);
        }
        // Beyond the cut, each level has 2^(2(n+1)) C_{l-1} - C_l empty
        // rectangles with C_depth <= C_{l-1} <= C_l <= N.
        let n = BigInt::from(self.n_points);
        let low = (&b * &c - &n).max(BigInt::zero());
        let high = &b * &n - &c;
        RationalInterval {
            lo: &partial + BigRational::from_integer(low) * &tail,
            hi: partial + BigRational::from_integer(high) * tail,
        }
    }

    /// Value of `f_i` at a point of `[0,1)²`, with a flag set when the point
    /// is still inside a nonempty rectangle at the deepest resolvable level.
    pub fn eval(&self, x: &BigRational, y: &BigRational) -> Result<FValue> {
        let in_unit = |v: &BigRational| *v >= BigRational::zero() && *v < BigRational::one();
        if !in_unit(x) || !in_unit(y) {
            return Err(Error::Domain(format!("({x}, {y}) is outside [0,1)²")));
        }
        Ok(self.eval_codes(location_code(x), location_code(y)))
    }

    pub fn eval_codes(&self, cx: LocationCode, cy: LocationCode) -> FValue {
        for level in 0..=self.depth() {
            let key = self.cell_key(level, cx, cy);
            match self.lookup[level as usize].get(&key) {
                None => {
                    return FValue {
                        value: self.rect(level, key).haar_codes(cx, cy),
                        truncated: false,
                        level,
                    }
                }
                Some(&slot) => {
                    if level == self.depth() && self.stabilized {
                        let (_, members) = &self.levels[level as usize].nonempty[slot];
                        return self.eval_beyond(cx, cy, members[0]);
                    }
                }
            }
        }
        FValue {
            value: 1,
            truncated: true,
            level: self.depth(),
        }
    }

    /// Past stabilization the only nonempty child is the one holding the
    /// cluster, so descending further needs just that point's codes.
    fn eval_beyond(&self, cx: LocationCode, cy: LocationCode, member: usize) -> FValue {
        let (px, py) = self.codes[member].expect("grouped points have codes");
        let last = Self::max_representable_level(self.n, self.i);
        for level in self.depth() + 1..=last {
            let key = self.cell_key(level, cx, cy);
            if key != self.cell_key(level, px, py) {
                return FValue {
                    value: self.rect(level, key).haar_codes(cx, cy),
                    truncated: false,
                    level,
                };
            }
        }
        FValue {
            value: 1,
            truncated: true,
            level: last,
        }
    }

    /// Empty rectangles of levels `0..=max_level` meeting `query`, with their levels.
    pub fn empty_rects_meeting(
        &self,
        query: &DyadicRectangle,
        max_level: u32,
        cap: usize,
        out: &mut Vec<(DyadicRectangle, u32)>,
    ) -> Result<()> {
        self.visit(0, &DyadicRectangle::unit(), query, max_level.min(self.depth()), cap, out)
    }

    fn visit(
        &self,
        level: u32,
        parent: &DyadicRectangle,
        query: &DyadicRectangle,
        max_level: u32,
        cap: usize,
        out: &mut Vec<(DyadicRectangle, u32)>,
    ) -> Result<()> {
        let Some(zone) = parent.intersect(query) else {
            return Ok(());
        };
        let xs = index_range(&zone.x, self.x_scale(level));
        let ys = index_range(&zone.y, self.y_scale(level));
        let cells = (xs.1 - xs.0).saturating_mul(ys.1 - ys.0);
        if out.len() as u128 + cells > cap as u128 {
            return Err(Error::ResourceLimit(format!(
                "more than {cap} intersection rectangles"
            )));
        }
        for ix in xs.0..xs.1 {
            for iy in ys.0..ys.1 {
                let key = (ix, iy);
                let rect = self.rect(level, key);
                if self.is_nonempty(level, key) {
                    if level < max_level {
                        self.visit(level + 1, &rect, query, max_level, cap, out)?;
                    }
                } else {
                    out.push((rect, level));
                }
            }
        }
        Ok(())
    }

    /// Drops the first nonempty rectangle at level 0 from the lookup so that
    /// it is treated as empty. Used to exercise the failure paths of the
    /// lemma checks.
    pub fn corrupt(&mut self) {
        if let Some((rect, _)) = self.levels[0].nonempty.first() {
            let key = (rect.x.index(), rect.y.index());
            self.lookup[0].remove(&key);
            self.levels[0].empty_count += 1;
        }
    }

    /// Nonempty rectangles of a level that the lookup no longer knows about.
    pub(crate) fn lookup_consistent(&self, level: u32) -> Option<DyadicRectangle> {
        self.levels[level as usize]
            .nonempty
            .iter()
            .map(|(r, _)| *r)
            .find(|r| !self.is_nonempty(level, (r.x.index(), r.y.index())))
    }
}

/// Half-open range of grid indices at `scale` whose cells meet `iv`.
fn index_range(iv: &DyadicInterval, scale: u32) -> (u128, u128) {
    if iv.scale() <= scale {
        let shift = scale - iv.scale();
        (iv.index() << shift, (iv.index() + 1) << shift)
    } else {
        let j = iv.index() >> (iv.scale() - scale);
        (j, j + 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FValue {
    pub value: i8,
    pub truncated: bool,
    /// Level of the empty rectangle hit, or the cut-off level when truncated.
    pub level: u32,
}

/// Builds the family for direction `i`.
pub fn build_tree(p: &PointSet, i: u32, max_level: MaxLevel) -> Result<AuxFamilyTree> {
    p.require_nonempty()?;
    let n = n_from_pointcount(p.len() as u64)?;
    if i > n {
        return Err(Error::Precondition(format!("direction {i} exceeds n = {n}")));
    }
    let representable = AuxFamilyTree::max_representable_level(n, i);
    let (limit, fixed) = match max_level {
        MaxLevel::Auto => (representable, None),
        MaxLevel::Fixed(m) => {
            if m > LEVEL_CAP {
                return Err(Error::ResourceLimit(format!("max level {m} exceeds {LEVEL_CAP}")));
            }
            (m.min(representable), Some(m))
        }
    };
    let codes: Vec<Option<(LocationCode, LocationCode)>> = p
        .points
        .iter()
        .map(|q| {
            let one = BigRational::one();
            (q.x < one && q.y < one).then(|| q.codes())
        })
        .collect();
    let mut tree = AuxFamilyTree {
        i,
        n,
        n_points: p.len() as u64,
        levels: Vec::new(),
        stabilized: false,
        l_star: None,
        codes,
        lookup: Vec::new(),
    };
    let mut groups: Vec<Vec<usize>> = vec![(0..p.len()).filter(|&k| tree.codes[k].is_some()).collect()];
    let mut previous_count = BigInt::one();
    let mut stop_at = limit;
    for level in 0..=limit {
        let mut next: BTreeMap<(u128, u128), Vec<usize>> = BTreeMap::new();
        for group in &groups {
            for &k in group {
                let (cx, cy) = tree.codes[k].unwrap();
                next.entry(tree.cell_key(level, cx, cy)).or_default().push(k);
            }
        }
        let count = BigInt::from(next.len());
        let children = if level == 0 { pow2(n) } else { tree.branching() * &previous_count };
        let mut lookup = HashMap::with_capacity(next.len());
        let mut nonempty = Vec::with_capacity(next.len());
        for (slot, (key, members)) in next.into_iter().enumerate() {
            lookup.insert(key, slot);
            nonempty.push((tree.rect(level, key), members));
        }
        tree.levels.push(LevelRecord {
            level,
            empty_count: children - &count,
            rect_area: tree.rect_area(level),
            nonempty,
        });
        tree.lookup.push(lookup);
        previous_count = count;
        if tree.l_star.is_none() && clusters_coincide(p, &tree.levels[level as usize]) {
            tree.l_star = Some(level);
            if fixed.is_none() {
                stop_at = (level + 2).min(limit);
            }
        }
        if level >= stop_at {
            break;
        }
        groups = tree.levels[level as usize].nonempty.iter().map(|(_, m)| m.clone()).collect();
    }
    tree.stabilized = tree.l_star.is_some();
    Ok(tree)
}

/// Every nonempty rectangle holds copies of a single point.
fn clusters_coincide(p: &PointSet, record: &LevelRecord) -> bool {
    record
        .nonempty
        .iter()
        .all(|(_, members)| members.iter().all(|&k| p.points[k] == p.points[members[0]]))
}

/// Families for every direction `0..=n`, built in parallel.
pub fn build_all_trees(p: &PointSet, max_level: MaxLevel) -> Result<Vec<AuxFamilyTree>> {
    let n = n_from_pointcount(p.len() as u64)?;
    (0..=n).into_par_iter().map(|i| build_tree(p, i, max_level)).collect()
}

/// `∫∫ D_P f_i = -(N/16) Σ_{R ∈ E_i} |R|²`, exact for stabilized families.
pub fn inner_product_d_fi(tree: &AuxFamilyTree) -> Result<BigRational> {
    if !tree.stabilized {
        return Err(Error::Precondition(format!(
            "family {} did not stabilize by level {}; use the interval form",
            tree.i,
            tree.depth()
        )));
    }
    Ok(inner_product_d_fi_interval(tree).lo)
}

/// Enclosure of `∫∫ D_P f_i`, a single point when the family stabilized.
pub fn inner_product_d_fi_interval(tree: &AuxFamilyTree) -> RationalInterval {
    let factor = -BigRational::new(tree.n_points.into(), 16.into());
    tree.sum_area_sq().scale(&factor)
}

/// The same quantity for the level-0 Roth function `f_i^0`.
pub fn inner_product_d_fi0(p: &PointSet, i: u32) -> Result<BigRational> {
    let tree = build_tree(p, i, MaxLevel::Fixed(0))?;
    let n = tree.n;
    let empty = BigRational::from_integer(tree.levels[0].empty_count.clone());
    Ok(-BigRational::new(tree.n_points.into(), 16.into()) * empty / BigRational::from_integer(pow2(2 * n)))
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelSummary {
    pub l: u32,
    pub nonempty: usize,
    pub empty: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct TreeSummary {
    pub i: u32,
    pub n: u32,
    pub levels: Vec<LevelSummary>,
    pub stabilized: bool,
    pub l_star: Option<u32>,
    pub sum_area_sq: String,
    pub inner_product: Option<String>,
    pub inner_product_interval: [String; 2],
    pub uncovered_mass: Option<String>,
}

impl TreeSummary {
    pub fn new(tree: &AuxFamilyTree) -> Self {
        let sums = tree.sum_area_sq();
        let inner = inner_product_d_fi_interval(tree);
        Self {
            i: tree.i,
            n: tree.n,
            levels: tree
                .levels
                .iter()
                .map(|r| LevelSummary {
                    l: r.level,
                    nonempty: r.nonempty.len(),
                    empty: r.empty_count.to_string(),
                })
                .collect(),
            stabilized: tree.stabilized,
            l_star: tree.l_star,
            sum_area_sq: if sums.is_exact() {
                rational_string(&sums.lo)
            } else {
                format!("[{}, {}]", rational_string(&sums.lo), rational_string(&sums.hi))
            },
            inner_product: inner.is_exact().then(|| rational_string(&inner.lo)),
            inner_product_interval: [rational_string(&inner.lo), rational_string(&inner.hi)],
            uncovered_mass: (!tree.stabilized)
                .then(|| rational_string(&tree.uncovered_mass(tree.depth()).value)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::Point;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn origin() -> PointSet {
        PointSet::new(vec![Point::new(q(0, 1), q(0, 1)).unwrap()], "origin")
    }

    fn iv(k: u32, j: u128) -> DyadicInterval {
        DyadicInterval::new(k, j).unwrap()
    }

    #[test]
    fn n_examples() {
        assert_eq!(n_from_pointcount(1).unwrap(), 1);
        assert_eq!(n_from_pointcount(4).unwrap(), 3);
        assert_eq!(n_from_pointcount(3).unwrap(), 3);
        assert_eq!(n_from_pointcount(5).unwrap(), 4);
        assert!(n_from_pointcount(0).is_err());
        for big in 1..2000u64 {
            let n = n_from_pointcount(big).unwrap();
            assert!((1u64 << (n - 1)) < 2 * big && 2 * big <= 1u64 << n);
        }
    }

    #[test]
    fn origin_levels() {
        let tree = build_tree(&origin(), 0, MaxLevel::Fixed(1)).unwrap();
        assert_eq!(tree.levels[0].nonempty.len(), 1);
        assert_eq!(tree.levels[0].nonempty[0].0, DyadicRectangle::new(iv(0, 0), iv(1, 0)));
        assert_eq!(tree.levels[0].empty_count, BigInt::from(1));
        assert_eq!(tree.levels[1].nonempty.len(), 1);
        assert_eq!(tree.levels[1].empty_count, BigInt::from(15));
        assert!(tree.stabilized);
        assert_eq!(tree.l_star, Some(0));
    }

    #[test]
    fn origin_inner_product_is_minus_9_over_544() {
        for i in 0..=1 {
            let tree = build_tree(&origin(), i, MaxLevel::Auto).unwrap();
            assert_eq!(tree.sum_area_sq(), RationalInterval::exact(q(9, 34)));
            assert_eq!(inner_product_d_fi(&tree).unwrap(), q(-9, 544));
        }
        assert_eq!(inner_product_d_fi0(&origin(), 0).unwrap(), q(-1, 64));
    }

    /// Direct summation over explicit levels reproduces the closed form up to
    /// exactly the predicted tail.
    #[test]
    fn deep_truncation_matches_geometric_tail() {
        for set in [origin(), PointSet::van_der_corput(2).unwrap()] {
            let n = n_from_pointcount(set.len() as u64).unwrap();
            for i in 0..=n {
                let auto = build_tree(&set, i, MaxLevel::Auto).unwrap();
                let l_star = auto.l_star.unwrap();
                let deep_level = (l_star + 10).min(AuxFamilyTree::max_representable_level(n, i));
                let deep = build_tree(&set, i, MaxLevel::Fixed(deep_level)).unwrap();
                let closed = auto.sum_area_sq().lo;
                let partial = deep.partial_sum_area_sq(deep_level);
                let c = BigInt::from(deep.nonempty_count(deep_level));
                let predicted = BigRational::from_integer((deep.branching() - 1) * c) * deep.geometric_tail(deep_level);
                assert_eq!(closed - partial, predicted);
            }
        }
    }

    #[test]
    fn eval_examples() {
        let tree = build_tree(&origin(), 0, MaxLevel::Auto).unwrap();
        let f = tree.eval(&q(3, 10), &q(8, 10)).unwrap();
        assert_eq!((f.value, f.truncated, f.level), (-1, false, 0));
        let f = tree.eval(&q(3, 10), &q(2, 10)).unwrap();
        assert_eq!((f.value, f.truncated, f.level), (-1, false, 1));
        let f = tree.eval(&q(0, 1), &q(0, 1)).unwrap();
        assert_eq!((f.value, f.truncated), (1, true));
        assert!(tree.eval(&q(1, 1), &q(0, 1)).is_err());
        // Beyond the built levels the cluster still determines the value.
        let tiny = q(1, 1 << 40);
        assert!(!tree.eval(&tiny, &tiny).unwrap().truncated);
    }

    #[test]
    fn levels_tile_their_parents() {
        let set = PointSet::random_uniform(16, 1).unwrap();
        let n = n_from_pointcount(16).unwrap();
        for i in 0..=n {
            let tree = build_tree(&set, i, MaxLevel::Auto).unwrap();
            let mut covered = BigRational::zero();
            for (l, record) in tree.levels.iter().enumerate() {
                let l = l as u32;
                assert!(record.nonempty.len() <= 16);
                assert_eq!(record.rect_area.to_rational(), tree.rect_area(l).to_rational());
                let children = if l == 0 {
                    pow2(n)
                } else {
                    tree.branching() * BigInt::from(tree.nonempty_count(l - 1))
                };
                assert_eq!(&record.empty_count + BigInt::from(record.nonempty.len()), children);
                for (rect, members) in &record.nonempty {
                    assert_eq!(rect.x.scale(), tree.x_scale(l));
                    assert_eq!(rect.y.scale(), tree.y_scale(l));
                    for &k in members {
                        assert!(rect.contains(&set.points[k]));
                    }
                    if l > 0 {
                        assert!(tree.levels[l as usize - 1]
                            .nonempty
                            .iter()
                            .any(|(parent, _)| parent.intersect(rect) == Some(*rect)));
                    }
                }
                let area = record.rect_area.to_rational();
                covered += BigRational::from_integer(record.empty_count.clone()) * &area;
                assert_eq!(&covered + tree.nonempty_area(l), BigRational::one());
            }
        }
    }

    #[test]
    fn uncovered_mass_decreases() {
        let tree = build_tree(&PointSet::van_der_corput(3).unwrap(), 2, MaxLevel::Fixed(5)).unwrap();
        for l in 1..=5 {
            assert!(tree.uncovered_mass(l).value < tree.uncovered_mass(l - 1).value);
            assert!(tree.nonempty_area(l) <= tree.uncovered_mass(l).value);
        }
    }

    #[test]
    fn empty_pairing_bound_on_corpus() {
        let sets = [
            origin(),
            PointSet::van_der_corput(2).unwrap(),
            PointSet::van_der_corput(3).unwrap(),
            PointSet::random_uniform(8, 3).unwrap(),
        ];
        for set in &sets {
            let big_n = set.len() as i64;
            for tree in build_all_trees(set, MaxLevel::Auto).unwrap() {
                let n = tree.n as u32;
                let bound = -q(((1i64 << n) - big_n) * big_n, 16 << (2 * n));
                let v = inner_product_d_fi(&tree).unwrap();
                assert!(v < BigRational::zero() && v <= bound, "{} i={}", set.label, tree.i);
            }
        }
    }

    #[test]
    fn unstabilized_family_reports_an_interval() {
        // 1/3 and 1/3 + 2^-200 never separate within the representable scales.
        let eps = BigRational::new(BigInt::one(), BigInt::one() << 200);
        let a = Point::new(q(1, 3), q(1, 3)).unwrap();
        let b = Point::new(q(1, 3) + &eps, q(1, 3)).unwrap();
        let set = PointSet::new(vec![a.clone(), b], "close");
        let tree = build_tree(&set, 0, MaxLevel::Auto).unwrap();
        assert!(!tree.stabilized);
        assert!(inner_product_d_fi(&tree).is_err());
        let interval = inner_product_d_fi_interval(&tree);
        assert!(interval.lo < interval.hi && interval.hi < BigRational::zero());
        // Merging the two points never splits the cluster, one of the
        // continuations the interval has to cover.
        let merged = PointSet::new(vec![a.clone(), a], "merged");
        let exact = inner_product_d_fi(&build_tree(&merged, 0, MaxLevel::Auto).unwrap()).unwrap();
        assert!(interval.lo <= exact && exact <= interval.hi);
        let summary = TreeSummary::new(&tree);
        assert!(summary.inner_product.is_none() && summary.uncovered_mass.is_some());
    }

    #[test]
    fn query_returns_exactly_the_empty_rectangles_met() {
        let set = PointSet::van_der_corput(2).unwrap();
        let tree = build_tree(&set, 1, MaxLevel::Fixed(1)).unwrap();
        let mut all = Vec::new();
        tree.empty_rects_meeting(&DyadicRectangle::unit(), 1, 1 << 20, &mut all).unwrap();
        let expected: BigInt = tree.levels.iter().map(|r| r.empty_count.clone()).sum();
        assert_eq!(BigInt::from(all.len()), expected);
        let area: BigRational = all.iter().map(|(r, _)| r.area().to_rational()).sum();
        assert_eq!(area + tree.nonempty_area(1), BigRational::one());
        let query = DyadicRectangle::new(iv(2, 1), iv(3, 5));
        let mut some = Vec::new();
        tree.empty_rects_meeting(&query, 1, 1 << 20, &mut some).unwrap();
        let inside: Vec<_> = all.iter().filter(|(r, _)| r.intersect(&query).is_some()).cloned().collect();
        assert_eq!(some, inside);
        assert!(tree.empty_rects_meeting(&DyadicRectangle::unit(), 1, 10, &mut Vec::new()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn eval_is_a_sign_and_matches_the_explicit_rectangle(
            seed in 0u64..1000, xs in 0u64..(1 << 20), ys in 0u64..(1 << 20)
        ) {
            let set = PointSet::random_uniform(5, seed).unwrap();
            let tree = build_tree(&set, (seed % 5) as u32, MaxLevel::Auto).unwrap();
            let (x, y) = (q(xs as i64, 1 << 20), q(ys as i64, 1 << 20));
            let f = tree.eval(&x, &y).unwrap();
            prop_assert!(f.value == 1 || f.value == -1);
            if !f.truncated && f.level <= tree.depth() {
                let mut found = Vec::new();
                let probe = DyadicRectangle::new(
                    DyadicInterval::containing_code(location_code(&x), MAX_SCALE).unwrap(),
                    DyadicInterval::containing_code(location_code(&y), MAX_SCALE).unwrap(),
                );
                tree.empty_rects_meeting(&probe, tree.depth(), 1 << 20, &mut found).unwrap();
                prop_assert_eq!(found.len(), 1);
                let (rect, level) = found[0];
                prop_assert_eq!(level, f.level);
                prop_assert!(rect.contains(&Point::new(x, y).unwrap()));
            }
        }
    }
}
