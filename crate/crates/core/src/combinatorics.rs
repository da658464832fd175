//! Odd powers of sums of ±1 variables in the elementary symmetric basis.
//!
//! With `z_0 ≡ 1` and `z_1..z_n` independent uniform signs,
//! `E (z_0 + ... + z_n)^k = A_1^n(k)`, and `A_1^n(k)` is also the coefficient
//! of `t^k/k!` in `sinh t · cosh^n t`. Under `z_i² = 1` every odd power
//! reduces to `Σ_p A_p^n(k) e_p` over odd `p`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::binomial;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::report::rational_string;

/// Largest `n` accepted by the brute-force enumerations.
pub const MAX_BRUTE_FORCE_N: u32 = 20;

fn require_odd(k: u32) -> Result<()> {
    if k % 2 == 0 {
        return Err(Error::Domain(format!("k = {k} must be odd")));
    }
    Ok(())
}

/// `2^-n Σ_j C(n,j) (1 + n - 2j)^k`.
pub fn a1(n: u32, k: u32) -> Result<BigRational> {
    require_odd(k)?;
    let mut total = BigInt::zero();
    let mut choose = BigInt::one();
    for j in 0..=n {
        let base = BigInt::from(1 + i64::from(n) - 2 * i64::from(j));
        total += &choose * num_traits::pow(base, k as usize);
        choose = choose * (n - j) / (j + 1);
    }
    Ok(BigRational::new(total, BigInt::one() << n as usize))
}

/// Average of `(1 + ε_1 + ... + ε_n)^k` over all `2^n` sign choices.
pub fn a1_bruteforce(n: u32, k: u32) -> Result<BigRational> {
    require_odd(k)?;
    if n > MAX_BRUTE_FORCE_N {
        return Err(Error::ResourceLimit(format!(
            "brute force over 2^{n} sign vectors exceeds 2^{MAX_BRUTE_FORCE_N}"
        )));
    }
    let total: BigInt = (0u64..1 << n)
        .into_par_iter()
        .map(|mask| {
            let minus = i64::from(mask.count_ones());
            let sum = 1 + i64::from(n) - 2 * minus;
            num_traits::pow(BigInt::from(sum), k as usize)
        })
        .sum();
    Ok(BigRational::new(total, BigInt::one() << n as usize))
}

/// Coefficients of `t^k/k!` up to degree `K`; even degrees vanish.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormalOddSeries {
    pub degree: u32,
    coefficients: Vec<BigInt>,
}

impl FormalOddSeries {
    pub fn coefficient(&self, k: u32) -> Option<&BigInt> {
        self.coefficients.get(k as usize)
    }

    pub fn odd_coefficients(&self) -> impl Iterator<Item = (u32, &BigInt)> {
        self.coefficients.iter().enumerate().skip(1).step_by(2).map(|(k, c)| (k as u32, c))
    }
}

/// Product of exponential generating functions: `c_k = Σ_j C(k,j) a_j b_{k-j}`.
fn egf_product(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    (0..a.len())
        .map(|k| {
            (0..=k)
                .map(|j| binomial(BigInt::from(k), BigInt::from(j)) * &a[j] * &b[k - j])
                .sum()
        })
        .collect()
}

pub const MAX_SERIES_DEGREE: u32 = 200;

/// `sinh t · cosh^n t` truncated at degree `K`.
pub fn generating_coefficients(n: u32, degree: u32) -> Result<FormalOddSeries> {
    if degree > MAX_SERIES_DEGREE {
        return Err(Error::ResourceLimit(format!("degree {degree} exceeds {MAX_SERIES_DEGREE}")));
    }
    let len = degree as usize + 1;
    let parity = |odd: bool| -> Vec<BigInt> {
        (0..len).map(|k| BigInt::from(u8::from((k % 2 == 1) == odd))).collect()
    };
    let cosh = parity(false);
    let mut product = parity(true);
    // square-and-multiply on cosh^n
    let mut power = cosh;
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            product = egf_product(&product, &power);
        }
        e >>= 1;
        if e > 0 {
            power = egf_product(&power, &power);
        }
    }
    Ok(FormalOddSeries {
        degree,
        coefficients: product,
    })
}

/// A vector of signs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignVector(Vec<i8>);

impl SignVector {
    pub fn new(entries: Vec<i8>) -> Result<Self> {
        if let Some(bad) = entries.iter().find(|&&v| v != 1 && v != -1) {
            return Err(Error::Domain(format!("sign entry {bad} is not ±1")));
        }
        Ok(Self(entries))
    }

    /// Entry 0 is `+1`; bit `j` of `mask` set means entry `j+1` is `-1`.
    pub fn with_constant_first(n: u32, mask: u64) -> Self {
        let mut v = vec![1i8];
        v.extend((0..n).map(|j| if mask >> j & 1 == 1 { -1 } else { 1 }));
        Self(v)
    }

    /// Bit `j` of `mask` set means entry `j` is `-1`.
    pub fn from_mask(len: u32, mask: u64) -> Self {
        Self((0..len).map(|j| if mask >> j & 1 == 1 { -1 } else { 1 }).collect())
    }

    pub fn entries(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> i64 {
        self.0.iter().map(|&v| i64::from(v)).sum()
    }
}

/// `e_0, e_1, ..., e_len`: the coefficients of `∏ (1 + v_i t)`.
pub fn elementary_symmetric(values: &SignVector) -> Vec<BigInt> {
    let mut e = vec![BigInt::one()];
    for &v in values.entries() {
        e.push(BigInt::zero());
        for p in (1..e.len()).rev() {
            let prev = e[p - 1].clone();
            e[p] += prev * v;
        }
    }
    e
}

/// Power sums `p_0, ..., p_len`.
fn power_sums(values: &SignVector) -> Vec<BigInt> {
    (0..=values.len())
        .map(|k| values.entries().iter().map(|&v| BigInt::from(v).pow(k as u32)).sum())
        .collect()
}

/// Newton's identity `k e_k = Σ_{i=1}^k (-1)^(i-1) e_{k-i} p_i`, and the
/// collapse of `p_k` to `p_1` or to the length for ±1 entries.
pub fn newton_check(values: &SignVector, k: usize) -> Result<bool> {
    if k == 0 || k > values.len() {
        return Err(Error::Precondition(format!("k = {k} outside 1..={}", values.len())));
    }
    let e = elementary_symmetric(values);
    let p = power_sums(values);
    let rhs: BigInt = (1..=k)
        .map(|i| {
            let term = &e[k - i] * &p[i];
            if i % 2 == 1 {
                term
            } else {
                -term
            }
        })
        .sum();
    let collapsed = if k % 2 == 1 {
        p[1].clone()
    } else {
        BigInt::from(values.len())
    };
    Ok(BigInt::from(k) * &e[k] == rhs && p[k] == collapsed)
}

/// `A_p^n(k)` for odd `p <= n+1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OddCoefficientTable {
    pub n: u32,
    pub k: u32,
    pub coefficients: BTreeMap<u32, BigRational>,
    pub all_integers: bool,
    /// Sign vectors checked by the reconstruction.
    pub verified_vectors: u64,
}

impl OddCoefficientTable {
    pub fn get(&self, p: u32) -> BigRational {
        self.coefficients.get(&p).cloned().unwrap_or_else(BigRational::zero)
    }

    /// `Σ_p A_p e_p(z)`.
    pub fn reconstruct(&self, z: &SignVector) -> BigRational {
        let e = elementary_symmetric(z);
        self.coefficients
            .iter()
            .map(|(&p, a)| a * BigRational::from_integer(e[p as usize].clone()))
            .sum()
    }
}

impl Serialize for OddCoefficientTable {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        struct Coefficients<'a>(&'a BTreeMap<u32, BigRational>);
        impl Serialize for Coefficients<'_> {
            fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
                let mut map = serializer.serialize_map(Some(self.0.len()))?;
                for (p, a) in self.0 {
                    let shown = if a.is_integer() {
                        a.to_integer().to_string()
                    } else {
                        rational_string(a)
                    };
                    map.serialize_entry(&p.to_string(), &shown)?;
                }
                map.end()
            }
        }
        let mut map = serializer.serialize_map(Some(5))?;
        map.serialize_entry("n", &self.n)?;
        map.serialize_entry("k", &self.k)?;
        map.serialize_entry("A", &Coefficients(&self.coefficients))?;
        map.serialize_entry("all_integers", &self.all_integers)?;
        map.serialize_entry("verified_vectors", &self.verified_vectors)?;
        map.end()
    }
}

pub const MAX_TABLE_N: u32 = 12;
pub const MAX_TABLE_K: u32 = 11;

/// Solves `(Σ z_i)^k = Σ_p A_p e_p(z)` over `n+1` signs exactly, then checks
/// the identity at every sign vector.
pub fn full_table(n: u32, k: u32) -> Result<OddCoefficientTable> {
    require_odd(k)?;
    if n > MAX_TABLE_N || k > MAX_TABLE_K {
        return Err(Error::ResourceLimit(format!(
            "full table limited to n <= {MAX_TABLE_N}, k <= {MAX_TABLE_K}"
        )));
    }
    let len = n + 1;
    let odd_p: Vec<u32> = (1..=len).step_by(2).collect();
    // Both sides depend only on the number m of negative entries.
    let rows: Vec<(Vec<BigRational>, BigRational)> = (0..=len)
        .map(|m| {
            let z = SignVector::from_mask(len, (1u64 << m) - 1);
            let e = elementary_symmetric(&z);
            let lhs = num_traits::pow(BigInt::from(z.sum()), k as usize);
            (
                odd_p.iter().map(|&p| BigRational::from_integer(e[p as usize].clone())).collect(),
                BigRational::from_integer(lhs),
            )
        })
        .collect();
    let solution = solve_exact(rows, odd_p.len())?;
    let coefficients: BTreeMap<u32, BigRational> = odd_p.iter().copied().zip(solution).collect();
    let all_integers = coefficients.values().all(|a| a.is_integer());
    let mut table = OddCoefficientTable {
        n,
        k,
        coefficients,
        all_integers,
        verified_vectors: 0,
    };
    let count = 1u64 << len;
    let failures = (0..count)
        .into_par_iter()
        .filter(|&mask| {
            let z = SignVector::from_mask(len, mask);
            let lhs = BigRational::from_integer(num_traits::pow(BigInt::from(z.sum()), k as usize));
            table.reconstruct(&z) != lhs
        })
        .count();
    if failures > 0 {
        return Err(Error::Internal(format!(
            "reconstruction failed at {failures} of {count} sign vectors"
        )));
    }
    table.verified_vectors = count;
    Ok(table)
}

/// Gaussian elimination on an overdetermined but consistent system; errors
/// when the columns are dependent or a leftover row is violated.
fn solve_exact(mut rows: Vec<(Vec<BigRational>, BigRational)>, unknowns: usize) -> Result<Vec<BigRational>> {
    let mut pivot_row = 0;
    for col in 0..unknowns {
        let Some(found) = (pivot_row..rows.len()).find(|&r| !rows[r].0[col].is_zero()) else {
            return Err(Error::Internal(format!("singular system at column {col}")));
        };
        rows.swap(pivot_row, found);
        let (pivot, pivot_rhs) = rows[pivot_row].clone();
        for r in 0..rows.len() {
            if r == pivot_row || rows[r].0[col].is_zero() {
                continue;
            }
            let factor = &rows[r].0[col] / &pivot[col];
            for c in 0..unknowns {
                let delta = &factor * &pivot[c];
                rows[r].0[c] -= delta;
            }
            rows[r].1 -= &factor * &pivot_rhs;
        }
        pivot_row += 1;
    }
    if rows[unknowns..].iter().any(|(_, rhs)| !rhs.is_zero()) {
        return Err(Error::Internal("inconsistent system".into()));
    }
    Ok((0..unknowns).map(|c| &rows[c].1 / &rows[c].0[c]).collect())
}

/// Rows for the CLI: `(n, k, a1)` with the brute-force and series routes.
#[derive(Clone, Debug, Serialize)]
pub struct A1Row {
    pub n: u32,
    pub k: u32,
    pub a1: String,
    pub bruteforce: Option<String>,
    pub series: String,
    pub agree: bool,
}

pub fn a1_row(n: u32, k: u32) -> Result<A1Row> {
    let closed = a1(n, k)?;
    let brute = if n <= MAX_BRUTE_FORCE_N { Some(a1_bruteforce(n, k)?) } else { None };
    let series = generating_coefficients(n, k)?;
    let series_value = BigRational::from_integer(series.coefficient(k).cloned().unwrap_or_default());
    let show = |r: &BigRational| {
        if r.is_integer() {
            r.to_integer().to_string()
        } else {
            rational_string(r)
        }
    };
    Ok(A1Row {
        n,
        k,
        agree: series_value == closed && brute.as_ref().is_none_or(|b| *b == closed),
        a1: show(&closed),
        bruteforce: brute.as_ref().map(show),
        series: show(&series_value),
    })
}

/// `A_1^n(k) / n^{k/2}` as a float, for series evaluations.
pub fn a1_scaled_f64(n: u32, k: u32) -> Result<f64> {
    let a = a1(n, k)?;
    let v = a.to_f64().unwrap_or(f64::INFINITY);
    Ok(v / f64::from(n).powf(f64::from(k) / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn int(v: i64) -> BigRational {
        BigRational::from_integer(v.into())
    }

    #[test]
    fn a1_examples() {
        assert_eq!(a1(1, 3).unwrap(), int(4));
        assert_eq!(a1(2, 3).unwrap(), int(7));
        for n in 0..30 {
            assert_eq!(a1(n, 1).unwrap(), int(1));
        }
        assert!(matches!(a1(2, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn bruteforce_examples() {
        assert_eq!(a1_bruteforce(1, 3).unwrap(), int(4));
        assert_eq!(a1_bruteforce(2, 3).unwrap(), int(7));
        for k in [1, 3, 5, 41] {
            assert_eq!(a1_bruteforce(0, k).unwrap(), int(1));
        }
        assert!(matches!(a1_bruteforce(21, 3), Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn series_examples() {
        assert_eq!(generating_coefficients(1, 3).unwrap().coefficient(3), Some(&BigInt::from(4)));
        assert_eq!(generating_coefficients(2, 3).unwrap().coefficient(3), Some(&BigInt::from(7)));
        let s = generating_coefficients(5, 41).unwrap();
        assert_eq!(s.coefficient(1), Some(&BigInt::one()));
        for k in (0..=41).step_by(2) {
            assert!(s.coefficient(k).unwrap().is_zero());
        }
        assert!(generating_coefficients(1, 201).is_err());
    }

    #[test]
    fn three_routes_agree_beyond_the_acceptance_range() {
        for n in [13, 17, 20] {
            for k in [3, 7, 13] {
                let row = a1_row(n, k).unwrap();
                assert!(row.agree, "{row:?}");
            }
        }
        let s = generating_coefficients(12, 41).unwrap();
        for (k, c) in s.odd_coefficients() {
            assert_eq!(a1(12, k).unwrap(), BigRational::from_integer(c.clone()));
        }
    }

    #[test]
    fn elementary_examples() {
        let plus = SignVector::new(vec![1, 1, 1]).unwrap();
        assert_eq!(elementary_symmetric(&plus), vec![1, 3, 3, 1].into_iter().map(BigInt::from).collect::<Vec<_>>());
        let mixed = SignVector::new(vec![1, -1]).unwrap();
        assert_eq!(elementary_symmetric(&mixed)[1..], [BigInt::zero(), BigInt::from(-1)]);
        assert!(SignVector::new(vec![1, 0]).is_err());
    }

    #[test]
    fn newton_examples() {
        assert!(newton_check(&SignVector::new(vec![1, 1, 1]).unwrap(), 2).unwrap());
        assert!(newton_check(&SignVector::new(vec![1, -1]).unwrap(), 2).unwrap());
        assert!(newton_check(&SignVector::new(vec![1, -1]).unwrap(), 3).is_err());
        assert!(newton_check(&SignVector::new(vec![1, -1]).unwrap(), 0).is_err());
    }

    #[test]
    fn table_examples() {
        let t = full_table(1, 3).unwrap();
        assert_eq!(t.coefficients.len(), 1);
        assert_eq!(t.get(1), int(4));
        assert_eq!(t.verified_vectors, 4);
        for mask in 0..4 {
            let z = SignVector::from_mask(2, mask);
            let e = elementary_symmetric(&z);
            assert_eq!(BigInt::from(z.sum()).pow(3), BigInt::from(4) * &e[1]);
        }
        let t = full_table(2, 1).unwrap();
        assert_eq!((t.get(1), t.get(3)), (int(1), int(0)));
        let t = full_table(2, 3).unwrap();
        assert_eq!(t.verified_vectors, 8);
        assert!(t.all_integers);
        let json = serde_json::to_value(full_table(3, 3).unwrap()).unwrap();
        assert_eq!(json["A"]["1"], "10");
        assert_eq!(json["A"]["3"], "6");
    }

    #[test]
    fn table_first_coefficient_is_a1() {
        // The expectation kills every e_p with p >= 3 when z_0 = 1 is fixed
        // and z_1..z_n are independent signs, leaving A_1 e_1 -> A_1.
        for n in 1..=8 {
            for k in (1..=9).step_by(2) {
                assert_eq!(full_table(n, k).unwrap().get(1), a1(n, k).unwrap());
            }
        }
    }

    proptest! {
        #[test]
        fn newton_holds_for_random_signs(len in 1u32..=16, mask in any::<u64>()) {
            let v = SignVector::from_mask(len, mask);
            for k in 1..=len as usize {
                prop_assert!(newton_check(&v, k).unwrap());
            }
        }

        #[test]
        fn last_elementary_is_the_product(len in 1u32..=16, mask in any::<u64>()) {
            let v = SignVector::from_mask(len, mask);
            let e = elementary_symmetric(&v);
            let product: i64 = v.entries().iter().map(|&x| i64::from(x)).product();
            prop_assert_eq!(&e[len as usize], &BigInt::from(product));
        }
    }
}
