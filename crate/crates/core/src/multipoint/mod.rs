//! Bisections through several prescribed arrows.
//!
//! The base pairs must be concordant (distinct sources, distinct targets).
//! Loops among them are broken through auxiliary points, the remaining
//! independent pairs are ordered so that no source is an earlier target,
//! and one separated bisection per pair is multiplied in that order.

mod combinatorics;
mod construction;

pub use combinatorics::{
    concordance_violation, find_chains, is_concordant, is_independent, is_well_ordered, well_order, BasePair,
};
pub use construction::{
    bisection_through_points, separated_bisection, ChainCorrection, MultipointConstruction, MultipointOptions,
    StageRecord,
};
