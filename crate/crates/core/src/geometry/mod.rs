//! Flat-manifold primitives: bump functions, curves, tube vector fields,
//! fixed-step flows and obstacle-avoiding path planning.

pub mod bump;
pub mod curve;
pub mod field;
pub mod flow;
pub mod manifold;
pub mod planner;
pub mod point;
pub mod region;

pub use bump::{bump_scalar, BumpScalar};
pub use curve::{reach_check, split_injective, Curve, ReachViolation};
pub use field::{tube_field, BumpField, CompactVectorField, FieldKind, TubeField};
pub use flow::flow;
pub use manifold::Manifold;
pub use planner::plan_path;
pub use point::Point;
pub use region::Region;
