//! Mechanical checks of the structural facts about the families `E_i`, `C_i`
//! and the integrals `∫ D_P f_i`, `∫ D_P ∏ f_{i_t}`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::auxiliary::product::{product_integral_bound_check, ProductCheck, DEFAULT_CELL_CAP};
use crate::auxiliary::tree::{
    build_all_trees, build_tree, inner_product_d_fi0, inner_product_d_fi_interval, AuxFamilyTree, MaxLevel,
};
use crate::discrepancy::haar_inner_product;
use crate::dyadic::{DyadicRectangle, CODE_BITS};
use crate::error::Result;
use crate::pointset::PointSet;
use crate::report::rational_string;

#[derive(Clone, Debug)]
pub struct LemmaOptions {
    pub max_level: MaxLevel,
    /// Level for the product check; `None` picks 2 for `n <= 4` and 0 above.
    pub product_level: Option<u32>,
    /// Largest tuple size for the product check.
    pub max_tuple: usize,
    pub cell_cap: usize,
    /// Uniform queries used to check `|f_i| = 1`.
    pub samples: u64,
    pub seed: u64,
    /// Treat one nonempty rectangle as empty, to exercise failure reporting.
    pub corrupt_tree: bool,
}

impl Default for LemmaOptions {
    fn default() -> Self {
        Self {
            max_level: MaxLevel::Auto,
            product_level: None,
            max_tuple: 3,
            cell_cap: DEFAULT_CELL_CAP,
            samples: 4096,
            seed: 0,
            corrupt_tree: false,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaCheck {
    pub lemma: &'static str,
    pub subject: String,
    pub passed: bool,
    pub detail: String,
    pub witness: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaReport {
    pub n: u32,
    pub n_points: usize,
    pub product_level: u32,
    pub all_passed: bool,
    pub checks: Vec<LemmaCheck>,
    pub products: Vec<ProductCheck>,
}

fn check(lemma: &'static str, subject: String, witness: Option<String>, detail: String) -> LemmaCheck {
    LemmaCheck {
        lemma,
        passed: witness.is_none(),
        subject,
        detail,
        witness,
    }
}

/// Areas: the nonempty mass at each level is `♯C·|R|`, shrinks strictly, and
/// together with the empty rectangles so far tiles the square.
fn measure_check(tree: &AuxFamilyTree) -> LemmaCheck {
    let mut witness = None;
    let mut covered = BigRational::zero();
    for record in &tree.levels {
        let l = record.level;
        let direct: BigRational = record.nonempty.iter().map(|(r, _)| r.area().to_rational()).sum();
        let area = record.rect_area.to_rational();
        covered += BigRational::from_integer(record.empty_count.clone()) * &area;
        let mass = tree.uncovered_mass(l).value;
        if direct != tree.nonempty_area(l) || direct > mass {
            witness = Some(format!("level {l}: nonempty area {direct} vs mass bound {mass}"));
        } else if &covered + &direct != BigRational::one() {
            witness = Some(format!("level {l}: empty plus nonempty area is {}", &covered + &direct));
        } else if l > 0 && mass >= tree.uncovered_mass(l - 1).value {
            witness = Some(format!("level {l}: residual mass does not decrease"));
        }
        if witness.is_some() {
            break;
        }
    }
    let depth = tree.depth();
    check(
        "level_measure",
        format!("i={}", tree.i),
        witness,
        format!(
            "residual mass {} at level {depth}",
            rational_string(&tree.uncovered_mass(depth).value)
        ),
    )
}

/// Disjointness and nesting: every point sits in a nonempty rectangle at
/// every level, each nonempty rectangle sits in a nonempty parent, the counts
/// partition the parents' children, and `|f_i| = 1` off the residual set.
fn structure_check(p: &PointSet, tree: &AuxFamilyTree, options: &LemmaOptions) -> LemmaCheck {
    let mut witness = None;
    let one = BigRational::one();
    'levels: for record in &tree.levels {
        let l = record.level;
        if let Some(r) = tree.lookup_consistent(l) {
            witness = Some(format!("level {l}: rectangle {r} holds points but is indexed as empty"));
            break;
        }
        for (k, point) in p.points.iter().enumerate() {
            if point.x >= one || point.y >= one {
                continue;
            }
            let (cx, cy) = point.codes();
            let key = (cx >> (CODE_BITS - tree.x_scale(l)), cy >> (CODE_BITS - tree.y_scale(l)));
            if !tree.is_nonempty(l, key) {
                witness = Some(format!("level {l}: point {k} = {point} lies in an empty rectangle"));
                break 'levels;
            }
        }
        let children = if l == 0 {
            BigInt::one() << tree.n as usize
        } else {
            tree.branching() * BigInt::from(tree.nonempty_count(l - 1))
        };
        if &record.empty_count + BigInt::from(record.nonempty.len()) != children {
            witness = Some(format!("level {l}: counts do not partition {children} children"));
            break;
        }
        if l > 0 {
            let parents = &tree.levels[l as usize - 1].nonempty;
            if let Some((r, _)) = record
                .nonempty
                .iter()
                .find(|(r, _)| !parents.iter().any(|(q, _)| q.intersect(r) == Some(*r)))
            {
                witness = Some(format!("level {l}: {r} has no nonempty parent"));
                break;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed ^ u64::from(tree.i));
    let mut truncated = 0u64;
    for _ in 0..options.samples {
        let cx: u128 = rng.gen::<u128>() >> 1;
        let cy: u128 = rng.gen::<u128>() >> 1;
        let f = tree.eval_codes(cx, cy);
        if f.value.abs() != 1 && witness.is_none() {
            witness = Some(format!("f_{} = {} at codes ({cx}, {cy})", tree.i, f.value));
        }
        truncated += u64::from(f.truncated);
    }
    let mass = tree.uncovered_mass(tree.depth()).value;
    let mass_f = num_traits::ToPrimitive::to_f64(&mass).unwrap_or(1.0);
    let m = options.samples.max(1) as f64;
    let allowed = mass_f + 3.0 * (mass_f.max(1.0 / m) * (1.0 - mass_f.min(1.0)) / m).sqrt();
    let fraction = truncated as f64 / m;
    if witness.is_none() && tree.stabilized && fraction > allowed {
        witness = Some(format!("truncated fraction {fraction} exceeds {allowed}"));
    }
    check(
        "unit_modulus",
        format!("i={}", tree.i),
        witness,
        format!("{} levels, truncated fraction {fraction:.3e}", tree.levels.len()),
    )
}

/// The cited fact for point-free rectangles, the exact `∫ D f_i` against its
/// upper bound, and the level-0 value.
fn short_check(p: &PointSet, tree: &AuxFamilyTree) -> Result<LemmaCheck> {
    let big_n = BigRational::from_integer(p.len().into());
    let sixteen = BigRational::from_integer(16.into());
    // Every level-0 empty cell, and the empty children of a few nonempty
    // level-0 cells.
    let mut samples = Vec::new();
    tree.empty_rects_meeting(&DyadicRectangle::unit(), 0, 1 << 22, &mut samples)?;
    if tree.depth() >= 1 {
        for (parent, _) in tree.levels[0].nonempty.iter().take(4) {
            let mut children = Vec::new();
            tree.empty_rects_meeting(parent, 1, 1 << 22, &mut children)?;
            samples.extend(children.into_iter().filter(|(_, l)| *l == 1).take(64));
        }
    }
    let mut witness = samples.iter().find_map(|(rect, level)| {
        let area = tree.rect_area(*level).to_rational();
        let expected = -&big_n * &area * &area / &sixteen;
        let v = haar_inner_product(p, rect);
        (v != expected).then(|| {
            format!(
                "level {level}: ∫D h_R = {} on point-free {rect}, expected {}",
                rational_string(&v),
                rational_string(&expected)
            )
        })
    });
    let n = tree.n;
    let bound = -(BigRational::from_integer((BigInt::one() << n as usize) - BigInt::from(p.len())) * &big_n)
        / (&sixteen * BigRational::from_integer(BigInt::one() << (2 * n) as usize));
    let value = inner_product_d_fi_interval(tree);
    let roth = inner_product_d_fi0(p, tree.i)?;
    if witness.is_none() && value.hi > bound {
        witness = Some(format!(
            "∫D f_{} <= {} exceeds {}",
            tree.i,
            rational_string(&value.hi),
            rational_string(&bound)
        ));
    }
    if witness.is_none() && value.hi >= BigRational::zero() {
        witness = Some("∫D f_i is not negative".into());
    }
    let roth_limit = &big_n / (&sixteen * BigRational::from_integer(BigInt::one() << n as usize));
    if witness.is_none() && (roth > bound || -&roth > roth_limit) {
        witness = Some(format!("level-0 value {} out of range", rational_string(&roth)));
    }
    let shown = if value.is_exact() {
        rational_string(&value.lo)
    } else {
        format!("[{}, {}]", rational_string(&value.lo), rational_string(&value.hi))
    };
    Ok(check(
        "empty_pairing",
        format!("i={}", tree.i),
        witness,
        format!("∫D f_i = {shown} <= {}; ∫D f_i^0 = {}", rational_string(&bound), rational_string(&roth)),
    ))
}

/// Index tuples `i_1 < ... < i_p` for `2 <= p <= max_tuple`.
fn tuples(n: u32, max_tuple: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    fn extend(start: u32, n: u32, size: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if current.len() == size {
            out.push(current.clone());
            return;
        }
        for i in start..=n {
            current.push(i);
            extend(i + 1, n, size, current, out);
            current.pop();
        }
    }
    for size in 2..=max_tuple {
        extend(0, n, size, &mut Vec::new(), &mut out);
    }
    out
}

pub fn default_product_level(n: u32) -> u32 {
    if n <= 4 {
        2
    } else {
        0
    }
}

/// Runs every check for every direction, and the product check on all pairs
/// and triples.
pub fn lemma_suite(p: &PointSet, options: &LemmaOptions) -> Result<LemmaReport> {
    p.require_nonempty()?;
    let mut trees = build_all_trees(p, options.max_level)?;
    let n = trees[0].n;
    if options.corrupt_tree {
        trees[0].corrupt();
    }
    let mut checks = Vec::new();
    for tree in &trees {
        checks.push(measure_check(tree));
        checks.push(structure_check(p, tree, options));
        checks.push(short_check(p, tree)?);
    }
    let level = options.product_level.unwrap_or_else(|| default_product_level(n));
    let product_trees: Vec<AuxFamilyTree> = trees
        .iter()
        .map(|t| {
            if t.depth() >= level {
                Ok(t.clone())
            } else {
                let mut deeper = build_tree(p, t.i, MaxLevel::Fixed(level))?;
                if options.corrupt_tree && t.i == 0 {
                    deeper.corrupt();
                }
                Ok(deeper)
            }
        })
        .collect::<Result<_>>()?;
    let mut products = Vec::new();
    for tuple in tuples(n, options.max_tuple) {
        let chosen: Vec<&AuxFamilyTree> = tuple.iter().map(|&i| &product_trees[i as usize]).collect();
        let result = product_integral_bound_check(p, &chosen, level, options.cell_cap)?;
        checks.push(check(
            "product_integrals",
            format!("i={tuple:?}"),
            (!result.passed()).then(|| result.witness.clone().unwrap_or_default()),
            format!(
                "|∫D∏f| = {} vs {} + {}, {} cells",
                result.covered_d_product, result.lemma_bound, result.d_error, result.cells
            ),
        ));
        products.push(result);
    }
    Ok(LemmaReport {
        n,
        n_points: p.len(),
        product_level: level,
        all_passed: checks.iter().all(|c| c.passed),
        checks,
        products,
    })
}
