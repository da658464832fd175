//! String forms shared by the JSON reports.

use num_rational::BigRational;

/// `"p/q"`, also for integers.
pub fn rational_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses the `"p/q"` form back.
pub fn parse_rational_string(s: &str) -> Option<BigRational> {
    let (p, q) = s.split_once('/')?;
    let q: num_bigint::BigInt = q.parse().ok()?;
    if q == 0.into() {
        return None;
    }
    Some(BigRational::new(p.parse().ok()?, q))
}
