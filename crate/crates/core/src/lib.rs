//! Constructive global bisections of concrete Lie groupoids.
//!
//! A bisection is built as a finite word of exponentials of compactly
//! supported algebroid sections. Three groupoid families are supported:
//!
//! - the pair groupoid `M × M` over a flat box or torus (bisections are
//!   diffeomorphisms of `M`),
//! - the frame groupoid of the trivial bundle `M × R^k` (bisections are
//!   bundle automorphisms),
//! - the action groupoid of a torus acting on itself by translation
//!   (bisections are invertible torus-valued functions).
//!
//! The crate provides flows of compactly supported vector fields
//! ([`geometry`]), the element algebra and word calculus ([`groupoid`]),
//! per-family sections and their exponentials ([`exponential`]),
//! constructors through one prescribed element ([`single_point`]) and through
//! several ([`multipoint`]), and the JSON scene/result formats used by the
//! `bisect` command-line tool ([`scene`]).

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exponential;
pub mod geometry;
pub mod groupoid;
pub mod multipoint;
pub mod scene;
pub mod single_point;

pub use error::{Error, Result};
pub use geometry::{Manifold, Point, Region};
pub use groupoid::{BisectionWord, Family, Fiber, Groupoid, GroupoidElement};

/// Tolerance for deciding that two user-supplied points coincide.
pub const EPS_MATCH: f64 = 1e-9;

/// Default fixed RK4 step for time-1 flows.
pub const DEFAULT_STEP: f64 = 1e-3;
