//! Exact and certified computations around the L1 norm of the
//! two-dimensional discrepancy function, built on dyadic Haar analysis.

pub mod auxiliary;
pub mod certified;
pub mod combinatorics;
pub mod discrepancy;
pub mod dyadic;
pub mod error;
pub mod pointset;
pub mod report;
pub mod testfn;

pub use certified::Enclosure;
pub use dyadic::{DyadicFraction, DyadicInterval, DyadicRectangle, Point};
pub use error::{Error, Result};
pub use pointset::PointSet;
