//! The numerical constants of the asymptotic bounds, evaluated with
//! certified enclosures.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::Serialize;

use crate::certified::{self, Enclosure};
use crate::error::{Error, Result};
use crate::report::rational_string;

pub const DISPLAY_DIGITS: u32 = 10;

#[derive(Clone, Debug, Serialize)]
pub struct ConstantEntry {
    pub name: &'static str,
    pub expression: &'static str,
    /// Ten significant digits.
    pub value: String,
    pub lower: String,
    pub upper: String,
    /// The rounded value quoted alongside the bound, when there is one.
    pub quoted: Option<&'static str>,
    /// Whether the enclosure rounds to `quoted` at its number of decimals.
    pub matches_quoted: Option<bool>,
    /// Quoted from elsewhere and not recomputed here.
    pub external: bool,
    #[serde(skip)]
    pub enclosure: Option<Enclosure>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstantsTable {
    pub entries: Vec<ConstantEntry>,
    /// `(1/64) / (3/256)`.
    pub ratio_limsup_liminf: String,
    pub all_match: bool,
}

impl ConstantsTable {
    pub fn get(&self, name: &str) -> Option<&ConstantEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

/// Whether every point of `e` rounds to the decimal literal `quoted`.
pub fn rounds_to(e: &Enclosure, quoted: &str) -> bool {
    let decimals = quoted.split_once('.').map_or(0, |(_, f)| f.len());
    let Ok(digits) = quoted.replace('.', "").parse::<BigInt>() else {
        return false;
    };
    let unit = BigInt::from(10).pow(decimals as u32);
    let q = BigRational::new(digits, unit.clone());
    let half_unit = BigRational::new(BigInt::one(), BigInt::from(2) * unit);
    (e.lower() - &q).abs() <= half_unit && (e.upper() - &q).abs() <= half_unit
}

/// `sqrt(e ln 2)`.
pub fn sqrt_e_ln2(prec: u32) -> Result<Enclosure> {
    let e = certified::exp_rational(&BigRational::one(), prec)?;
    e.mul(&certified::ln2(prec)).sqrt()
}

fn over(num: (i64, i64), denom: &Enclosure) -> Result<Enclosure> {
    let prec = denom.prec();
    Enclosure::from_rational(&BigRational::new(num.0.into(), num.1.into()), prec).div(denom)
}

/// `3 / (256 sqrt(e ln 2))`.
pub fn liminf_constant(prec: u32) -> Result<Enclosure> {
    over((3, 256), &sqrt_e_ln2(prec)?)
}

/// `1 / (64 sqrt(e ln 2))`.
pub fn limsup_constant(prec: u32) -> Result<Enclosure> {
    over((1, 64), &sqrt_e_ln2(prec)?)
}

/// `1 / (1152 (sqrt(e) + 1) sqrt(ln 2))`.
pub fn halasz_constant(prec: u32) -> Result<Enclosure> {
    let one = Enclosure::from_int(1, prec);
    let denom = certified::sqrt_e(prec)
        .add(&one)
        .mul(&certified::ln2(prec).sqrt()?)
        .mul_rational(&BigRational::from_integer(1152.into()));
    one.div(&denom)
}

fn entry(
    name: &'static str,
    expression: &'static str,
    value: Enclosure,
    quoted: Option<&'static str>,
) -> ConstantEntry {
    ConstantEntry {
        name,
        expression,
        value: value.decimal(DISPLAY_DIGITS),
        lower: value.lower_decimal(DISPLAY_DIGITS + 2),
        upper: value.upper_decimal(DISPLAY_DIGITS + 2),
        quoted,
        matches_quoted: quoted.map(|q| rounds_to(&value, q)),
        external: false,
        enclosure: Some(value),
    }
}

fn external(name: &'static str, expression: &'static str, value: &'static str) -> ConstantEntry {
    ConstantEntry {
        name,
        expression,
        value: value.into(),
        lower: value.into(),
        upper: value.into(),
        quoted: Some(value),
        matches_quoted: None,
        external: true,
        enclosure: None,
    }
}

pub fn constants_table(prec: u32) -> Result<ConstantsTable> {
    let entries = vec![
        entry("liminf", "3/(256*sqrt(e*ln 2))", liminf_constant(prec)?, Some("0.00854")),
        entry("limsup", "1/(64*sqrt(e*ln 2))", limsup_constant(prec)?, Some("0.01138")),
        entry("halasz", "1/(1152*(sqrt(e)+1)*sqrt(ln 2))", halasz_constant(prec)?, Some("0.00039")),
        entry("inv_sqrt_e", "exp(-1/2)", certified::inv_sqrt_e(prec), Some("0.6065307")),
        external("l2_lower", "L2 lower-bound constant, quoted", "0.17905"),
        external("l2_upper", "L2 upper-bound constant, quoted", "0.17601"),
    ];
    let ratio = BigRational::new(1.into(), 64.into()) / BigRational::new(3.into(), 256.into());
    let all_match = entries.iter().all(|e| e.matches_quoted != Some(false));
    Ok(ConstantsTable {
        entries,
        ratio_limsup_liminf: rational_string(&ratio),
        all_match,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticRow {
    pub n: u32,
    pub value: String,
    /// Value minus the previous row's value.
    pub difference: Option<String>,
    pub gap_to_limit: String,
    #[serde(skip)]
    pub enclosure: Enclosure,
}

#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticTable {
    pub limit: String,
    pub rows: Vec<AsymptoticRow>,
    #[serde(skip)]
    pub limit_enclosure: Enclosure,
}

/// `sqrt(n) / (64 sqrt(e) sqrt(ln 2^{n-1}))` for `n` in the range, which
/// tends to `1/(64 sqrt(e ln 2))`.
pub fn asymptotic_dn_table(from: u32, to: u32, prec: u32) -> Result<AsymptoticTable> {
    if from < 2 || to > 64 || from > to {
        return Err(Error::Precondition(format!("range {from}..={to} must lie within 2..=64")));
    }
    let limit = limsup_constant(prec)?;
    let sqrt_e = certified::sqrt_e(prec);
    let ln2 = certified::ln2(prec);
    let mut rows: Vec<AsymptoticRow> = Vec::new();
    for n in from..=to {
        let numer = Enclosure::from_int(n, prec).sqrt()?;
        let log = ln2.mul_rational(&BigRational::from_integer((n - 1).into()));
        let denom = sqrt_e.mul(&log.sqrt()?).mul_rational(&BigRational::from_integer(64.into()));
        let value = numer.div(&denom)?;
        let difference = rows
            .last()
            .map(|prev| value.sub(&prev.enclosure).decimal(DISPLAY_DIGITS));
        rows.push(AsymptoticRow {
            n,
            value: value.decimal(DISPLAY_DIGITS),
            difference,
            gap_to_limit: value.sub(&limit).decimal(DISPLAY_DIGITS),
            enclosure: value,
        });
    }
    Ok(AsymptoticTable {
        limit: limit.decimal(DISPLAY_DIGITS),
        rows,
        limit_enclosure: limit,
    })
}
