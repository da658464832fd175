//! Finite sums `T(x) = Σ c_j e^{-i ω_j x}` and the linear-part functional.
//!
//! Composing `T` with `(f_0 + ... + f_n)/√n` for ±1 valued `f_i` and keeping
//! only the multiple of `Σ f_i` gives, per atom,
//! `−i sin(ω/√n) cos^n(ω/√n)`; `√n` times that tends to `−i ω e^{−ω²/2}`.

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::certified::{self, Enclosure};
use crate::combinatorics::a1;
use crate::error::{Error, Result};
use crate::report::rational_string;

pub type ExactComplex = Complex<BigRational>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub c: ExactComplex,
    pub omega: BigRational,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct FourierAtomFunction {
    pub atoms: Vec<Atom>,
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn complex_f64(c: &ExactComplex) -> Complex<f64> {
    Complex::new(to_f64(&c.re), to_f64(&c.im))
}

/// `(−i)^k`.
fn minus_i_pow(k: u32) -> Complex<f64> {
    match k % 4 {
        0 => Complex::new(1.0, 0.0),
        1 => Complex::new(0.0, -1.0),
        2 => Complex::new(-1.0, 0.0),
        _ => Complex::new(0.0, 1.0),
    }
}

/// Whether the frequencies can be linearly independent over the integers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Independence {
    /// At most one frequency, nonzero.
    Trivial,
    /// Two rational frequencies always have a rational ratio, and zero is
    /// dependent on its own.
    Dependent,
}

#[derive(Clone, Debug, Serialize)]
pub struct SupNorm {
    /// `Σ |c_j|`, an upper bound for `sup |T|`.
    pub value: f64,
    /// Set when every `|c_j|` is rational.
    pub exact: Option<String>,
    pub independence: Independence,
    /// Equality with `sup |T|` is claimed only for independent frequencies.
    pub equality_claimed: bool,
}

/// A rational square root, when there is one.
fn rational_sqrt(r: &BigRational) -> Option<BigRational> {
    if r.is_negative() {
        return None;
    }
    let root = |n: &BigInt| {
        let s = n.sqrt();
        (&s * &s == *n).then_some(s)
    };
    Some(BigRational::new(root(r.numer())?, root(r.denom())?))
}

impl FourierAtomFunction {
    pub fn new(atoms: Vec<Atom>) -> Self {
        Self { atoms }
    }

    /// `sin x = (i/2) e^{−ix} − (i/2) e^{ix}`.
    pub fn sin() -> Self {
        let half = rat(1, 2);
        Self::new(vec![
            Atom {
                c: Complex::new(BigRational::zero(), half.clone()),
                omega: BigRational::one(),
            },
            Atom {
                c: Complex::new(BigRational::zero(), -half),
                omega: -BigRational::one(),
            },
        ])
    }

    pub fn single(c: ExactComplex, omega: BigRational) -> Self {
        Self::new(vec![Atom { c, omega }])
    }

    pub fn scaled(&self, k: &BigRational) -> Self {
        Self::new(
            self.atoms
                .iter()
                .map(|a| Atom {
                    c: Complex::new(&a.c.re * k, &a.c.im * k),
                    omega: a.omega.clone(),
                })
                .collect(),
        )
    }

    pub fn plus(&self, other: &Self) -> Self {
        Self::new(self.atoms.iter().chain(&other.atoms).cloned().collect())
    }

    /// Atoms with equal frequencies merged and zero coefficients dropped.
    pub fn normalized(&self) -> Self {
        let mut merged: Vec<Atom> = Vec::new();
        for a in &self.atoms {
            match merged.iter_mut().find(|m| m.omega == a.omega) {
                Some(m) => m.c = &m.c + &a.c,
                None => merged.push(a.clone()),
            }
        }
        merged.retain(|a| !a.c.is_zero());
        merged.sort_by(|a, b| a.omega.cmp(&b.omega));
        Self::new(merged)
    }

    pub fn eval(&self, x: f64) -> Complex<f64> {
        self.atoms
            .iter()
            .map(|a| complex_f64(&a.c) * Complex::new(0.0, -to_f64(&a.omega) * x).exp())
            .sum()
    }

    /// `T(−x) = −T(x)` exactly: `c(−ω) = −c(ω)` after merging.
    pub fn is_odd(&self) -> bool {
        let t = self.normalized();
        t.atoms.iter().all(|a| {
            let partner = t.atoms.iter().find(|b| b.omega == -&a.omega);
            match partner {
                Some(b) => b.c == -a.c.clone(),
                None => false,
            }
        })
    }

    /// Largest `|T(x) + T(−x)|` over the sample points.
    pub fn oddness_defect(&self, xs: &[f64]) -> f64 {
        xs.iter()
            .map(|&x| (self.eval(x) + self.eval(-x)).norm())
            .fold(0.0, f64::max)
    }

    /// `T^{(k)}(0) = Σ c (−iω)^k`.
    pub fn derivative_at_zero(&self, k: u32) -> Complex<f64> {
        self.atoms
            .iter()
            .map(|a| complex_f64(&a.c) * minus_i_pow(k) * to_f64(&a.omega).powi(k as i32))
            .sum()
    }

    pub fn sup_norm_via_coefficients(&self) -> SupNorm {
        let t = self.normalized();
        let moduli: Vec<Option<BigRational>> = t
            .atoms
            .iter()
            .map(|a| rational_sqrt(&(&a.c.re * &a.c.re + &a.c.im * &a.c.im)))
            .collect();
        let value = t.atoms.iter().map(|a| complex_f64(&a.c).norm()).sum();
        let exact = moduli
            .iter()
            .cloned()
            .collect::<Option<Vec<_>>>()
            .map(|v| rational_string(&v.into_iter().sum()));
        let independence = if t.atoms.len() <= 1 && t.atoms.iter().all(|a| !a.omega.is_zero()) {
            Independence::Trivial
        } else {
            Independence::Dependent
        };
        SupNorm {
            value,
            exact,
            independence,
            equality_claimed: independence == Independence::Trivial,
        }
    }

    /// Odd function with `pairs` atom pairs `(c, ω), (−c, −ω)`, rational
    /// coefficients with numerators and denominators up to 16 and nonzero
    /// frequencies `k/64` with `|k/64| <= max_omega`.
    pub fn random_odd(pairs: usize, max_omega: u32, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let limit = i64::from(max_omega) * 64;
        let mut atoms = Vec::new();
        for _ in 0..pairs {
            let part = |rng: &mut ChaCha8Rng| rat(rng.gen_range(-16..=16), rng.gen_range(1..=16));
            let c = Complex::new(part(&mut rng), part(&mut rng));
            let mut k = 0;
            while k == 0 {
                k = rng.gen_range(-limit..=limit);
            }
            let omega = rat(k, 64);
            atoms.push(Atom {
                c: -c.clone(),
                omega: -&omega,
            });
            atoms.push(Atom { c, omega });
        }
        Self::new(atoms)
    }

    /// Random atoms with `Σ |c_j| = 1` exactly: rational weights times units
    /// from `{±1, ±i}`.
    pub fn random_unit_mass(atoms: usize, max_omega: u32, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights: Vec<i64> = (0..atoms).map(|_| rng.gen_range(1..=20)).collect();
        let total: i64 = weights.iter().sum();
        let limit = i64::from(max_omega) * 64;
        Self::new(
            weights
                .iter()
                .map(|&w| {
                    let m = rat(w, total);
                    let c = match rng.gen_range(0..4) {
                        0 => Complex::new(m, BigRational::zero()),
                        1 => Complex::new(-m, BigRational::zero()),
                        2 => Complex::new(BigRational::zero(), m),
                        _ => Complex::new(BigRational::zero(), -m),
                    };
                    Atom {
                        c,
                        omega: rat(rng.gen_range(-limit..=limit), 64),
                    }
                })
                .collect(),
        )
    }
}

/// `Σ_j c_j · (−i) sin(ω_j/√n) cos^n(ω_j/√n)`.
pub fn lin_n(t: &FourierAtomFunction, n: u32) -> Result<Complex<f64>> {
    if n == 0 {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    let root = f64::from(n).sqrt();
    Ok(t.atoms
        .iter()
        .map(|a| {
            let arg = to_f64(&a.omega) / root;
            let per_atom = Complex::new(0.0, -arg.sin() * arg.cos().powi(n as i32));
            complex_f64(&a.c) * per_atom
        })
        .sum())
}

pub const MAX_SERIES_ORDER: u32 = 41;

/// `Σ_{odd k <= K} T^{(k)}(0) A_1^n(k) / (k! n^{k/2})`.
pub fn lin_series_crosscheck(t: &FourierAtomFunction, n: u32, order: u32) -> Result<Complex<f64>> {
    if order % 2 == 0 || order > MAX_SERIES_ORDER {
        return Err(Error::Precondition(format!(
            "series order {order} must be odd and at most {MAX_SERIES_ORDER}"
        )));
    }
    if n == 0 {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    let mut factorial = 1.0f64;
    let mut total = Complex::new(0.0, 0.0);
    for k in 1..=order {
        factorial *= f64::from(k);
        if k % 2 == 0 {
            continue;
        }
        let scale = to_f64(&a1(n, k)?) / factorial / f64::from(n).powf(f64::from(k) / 2.0);
        total += t.derivative_at_zero(k) * scale;
    }
    Ok(total)
}

/// Complex number with certified real and imaginary parts.
#[derive(Clone, Debug)]
pub struct ComplexEnclosure {
    pub re: Enclosure,
    pub im: Enclosure,
}

impl ComplexEnclosure {
    pub fn to_f64(&self) -> Complex<f64> {
        Complex::new(self.re.to_f64(), self.im.to_f64())
    }

    /// Both parts of the two enclosures overlap.
    pub fn overlaps(&self, other: &Self) -> bool {
        let meets = |a: &Enclosure, b: &Enclosure| a.lower() <= b.upper() && b.lower() <= a.upper();
        meets(&self.re, &other.re) && meets(&self.im, &other.im)
    }
}

/// `−i Σ_j ω_j e^{−ω_j²/2} c_j`, the limit of `√n · lin_n`.
pub fn lin_limit(t: &FourierAtomFunction, prec: u32) -> Result<ComplexEnclosure> {
    let mut re = Enclosure::zero(prec);
    let mut im = Enclosure::zero(prec);
    for a in &t.atoms {
        let g = certified::exp_rational_any(&(-(&a.omega * &a.omega) / rat(2, 1)), prec)?;
        let weight = g.mul_rational(&a.omega);
        // −i (x + iy) = y − ix
        re = re.add(&weight.mul_rational(&a.c.im));
        im = im.sub(&weight.mul_rational(&a.c.re));
    }
    Ok(ComplexEnclosure { re, im })
}
