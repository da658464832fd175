//! Extremes of `g(ω) = ω e^{−ω²/2}`, the limit weight of a single atom.

use serde::Serialize;

use crate::error::{Error, Result};

pub fn limit_weight(omega: f64) -> f64 {
    omega * (-omega * omega / 2.0).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Goal {
    Maximize,
    Minimize,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExtremalOptions {
    pub lo: f64,
    pub hi: f64,
    pub tolerance: f64,
    pub goal: Goal,
    pub grid: usize,
}

impl Default for ExtremalOptions {
    fn default() -> Self {
        Self {
            lo: 0.0,
            hi: 10.0,
            tolerance: 1e-9,
            goal: Goal::Maximize,
            grid: 1000,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExtremalPoint {
    pub omega: f64,
    pub value: f64,
    pub iterations: u32,
}

/// Grid scan to bracket the extremum, golden-section refinement inside the
/// bracket, then a comparison against both endpoints.
pub fn extremal_search(opts: &ExtremalOptions) -> Result<ExtremalPoint> {
    let ExtremalOptions {
        lo,
        hi,
        tolerance,
        goal,
        grid,
    } = *opts;
    if !(lo.is_finite() && hi.is_finite() && lo < hi && lo >= -10.0 && hi <= 10.0) {
        return Err(Error::Precondition(format!("domain [{lo}, {hi}] must lie within [-10, 10]")));
    }
    if !(tolerance >= 1e-12) {
        return Err(Error::Precondition(format!("tolerance {tolerance} below 1e-12")));
    }
    if grid < 2 {
        return Err(Error::Precondition("grid needs at least 2 intervals".into()));
    }
    let sign = match goal {
        Goal::Maximize => 1.0,
        Goal::Minimize => -1.0,
    };
    let f = |w: f64| sign * limit_weight(w);
    let step = (hi - lo) / grid as f64;
    let node = |k: usize| if k == grid { hi } else { lo + step * k as f64 };
    let best = (0..=grid)
        .max_by(|&a, &b| f(node(a)).total_cmp(&f(node(b))))
        .expect("grid is nonempty");
    let (mut a, mut b) = (node(best.saturating_sub(1)), node((best + 1).min(grid)));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut iterations = 0;
    while b - a > tolerance {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
        iterations += 1;
    }
    let mid = (a + b) / 2.0;
    let omega = [lo, mid, hi]
        .into_iter()
        .max_by(|&x, &y| f(x).total_cmp(&f(y)))
        .expect("three candidates");
    Ok(ExtremalPoint {
        omega,
        value: limit_weight(omega),
        iterations,
    })
}
