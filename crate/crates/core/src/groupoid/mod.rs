//! Element algebra of the three groupoid families and the calculus of
//! bisection words.
//!
//! Frame matrices compose as `B·A` for "first `(x, y, A)`, then
//! `(y, z, B)`", and every generator of a word left-multiplies the fiber
//! map accumulated so far.

mod element;
mod verify;
mod word;

pub use element::{Family, Fiber, Groupoid, GroupoidElement};
pub use verify::VerificationReport;
pub use word::{BisectionWord, Generator, GeneratorRecord, GeneratorSpec, WordFile, WordMetadata};
