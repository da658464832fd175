use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

use l1disc::certified::Enclosure;
use l1disc::combinatorics::a1;
use l1disc::discrepancy::{haar_inner_product, l1_norm_exact, l2_norm_sq, l2_norm_sq_cells};
use l1disc::testfn::fourier::ComplexEnclosure;
use l1disc::testfn::{certificate, lin_limit, lin_n, lin_series_crosscheck, CertificateOptions, FourierAtomFunction};
use l1disc::{DyadicInterval, DyadicRectangle, PointSet};

const P: u32 = 160;

fn point_set() -> impl Strategy<Value = PointSet> {
    (1usize..=12, any::<u64>()).prop_map(|(n, seed)| PointSet::random_uniform(n, seed).unwrap())
}

fn rectangle() -> impl Strategy<Value = DyadicRectangle> {
    (0u32..6, 0u32..6, any::<u64>(), any::<u64>()).prop_map(|(kx, ky, a, b)| {
        let x = DyadicInterval::new(kx, u128::from(a % (1 << kx))).unwrap();
        let y = DyadicInterval::new(ky, u128::from(b % (1 << ky))).unwrap();
        DyadicRectangle::new(x, y)
    })
}

fn small_rational() -> impl Strategy<Value = BigRational> {
    (-50i64..=50, 1i64..=50).prop_map(|(p, q)| BigRational::new(p.into(), q.into()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn empty_rectangle_inner_product(p in point_set(), r in rectangle()) {
        prop_assume!(p.points.iter().all(|q| !r.contains(q)));
        let area = r.area().to_rational();
        let expected = -BigRational::from_integer(BigInt::from(p.len())) * &area * &area / BigRational::from_integer(16.into());
        prop_assert_eq!(haar_inner_product(&p, &r), expected);
    }

    #[test]
    fn warnock_matches_cells(p in point_set()) {
        prop_assert_eq!(l2_norm_sq(&p).unwrap(), l2_norm_sq_cells(&p).unwrap());
    }

    #[test]
    fn l1_dominates_unit_haar_pairing(p in point_set()) {
        let pairing = haar_inner_product(&p, &DyadicRectangle::unit()).abs();
        let l1 = l1_norm_exact(&p, P).unwrap();
        prop_assert!(l1.value.upper() >= pairing);
    }

    #[test]
    fn van_der_corput_coordinates_are_distinct(m in 0u32..=10) {
        let p = PointSet::van_der_corput(m).unwrap();
        let mut xs: Vec<_> = p.points.iter().map(|q| q.x.clone()).collect();
        let mut ys: Vec<_> = p.points.iter().map(|q| q.y.clone()).collect();
        xs.sort();
        xs.dedup();
        ys.sort();
        ys.dedup();
        prop_assert_eq!(xs.len(), 1 << m);
        prop_assert_eq!(ys.len(), 1 << m);
    }

    #[test]
    fn a1_is_a_positive_integer(n in 0u32..=12, half in 0u32..=5) {
        let v = a1(n, 2 * half + 1).unwrap();
        prop_assert!(v.is_integer() && v.is_positive());
    }

    #[test]
    fn lin_limit_is_linear(s1 in any::<u64>(), s2 in any::<u64>(), a in small_rational(), b in small_rational()) {
        let t1 = FourierAtomFunction::random_odd(3, 3, s1);
        let t2 = FourierAtomFunction::random_odd(3, 3, s2);
        let combined = lin_limit(&t1.scaled(&a).plus(&t2.scaled(&b)), P).unwrap();
        let (l1, l2) = (lin_limit(&t1, P).unwrap(), lin_limit(&t2, P).unwrap());
        let mix = |x: &Enclosure, y: &Enclosure| x.mul_rational(&a).add(&y.mul_rational(&b));
        let separate = ComplexEnclosure { re: mix(&l1.re, &l2.re), im: mix(&l1.im, &l2.im) };
        prop_assert!(combined.overlaps(&separate));
        let tiny = BigRational::new(BigInt::one(), BigInt::one() << 120);
        prop_assert!(combined.re.width() < tiny && separate.re.width() < tiny);
    }

    #[test]
    fn unit_mass_functions_are_dominated(seed in any::<u64>(), atoms in 1usize..=6) {
        let t = FourierAtomFunction::random_unit_mass(atoms, 3, seed);
        let l = lin_limit(&t, P).unwrap().to_f64();
        prop_assert!(l.norm() <= (-0.5f64).exp() + 1e-12);
    }

    #[test]
    fn scaled_lin_of_sin_is_within_one_over_n(n in 100u32..=20_000) {
        let v = lin_n(&FourierAtomFunction::sin(), n).unwrap().re * f64::from(n).sqrt();
        prop_assert!((v - (-0.5f64).exp()).abs() <= 1.0 / f64::from(n));
    }

    #[test]
    fn two_routes_agree_for_sin(n in 1u32..=64) {
        let sin = FourierAtomFunction::sin();
        let gap = (lin_n(&sin, n).unwrap() - lin_series_crosscheck(&sin, n, 41).unwrap()).norm();
        prop_assert!(gap <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn certificate_is_sound(n in 1usize..=16, seed in any::<u64>()) {
        let p = PointSet::random_uniform(n, seed).unwrap();
        let c = certificate(&p, &CertificateOptions { prec: P, ..Default::default() }).unwrap();
        let l1 = l1_norm_exact(&p, P).unwrap();
        prop_assert!(c.l1_lower_bound.upper() <= l1.value.lower());
        prop_assert!(c.certified_lower() >= BigRational::zero());
    }
}
