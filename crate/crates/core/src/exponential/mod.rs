//! Compactly supported sections of the algebroid and their exponentials.

pub mod linalg;
mod section;

pub use section::{gauge_generators, CompactSection, GaugeFactors, SectionSpec};

use crate::groupoid::{BisectionWord, Family, Generator};

/// `exp(tX)` as a one-letter word.
pub fn exp_bisection(family: Family, section: CompactSection, t: f64) -> BisectionWord {
    BisectionWord::single(family, Generator::exp(section, t))
}
