use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Manifold, Point};
use crate::{Error, Result};

/// An open subset of the base manifold.
///
/// `clearance(p)` is a lower bound on the distance from `p` to the complement
/// (zero outside); for the canonical constructors it is exact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Region {
    /// The whole manifold (the open interior, for a box manifold).
    Full,
    Ball { center: Point, radius: f64 },
    /// Open axis-aligned box.
    Box { lower: Point, upper: Point },
    /// The manifold minus finitely many points.
    Complement { points: Vec<Point> },
    Intersection { regions: Vec<Region> },
}

impl Region {
    pub fn ball(center: Point, radius: f64) -> Self {
        Region::Ball { center, radius }
    }

    pub fn validate(&self, manifold: &Manifold) -> Result<()> {
        match self {
            Region::Full => Ok(()),
            Region::Ball { center, radius } => {
                manifold.check_dim(center)?;
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::Parameter(format!("ball radius must be > 0, got {radius}")));
                }
                Ok(())
            }
            Region::Box { lower, upper } => {
                manifold.check_dim(lower)?;
                manifold.check_dim(upper)?;
                if lower.iter().zip(upper.iter()).any(|(l, u)| !(l < u)) {
                    return Err(Error::Parameter("region box is empty".into()));
                }
                Ok(())
            }
            Region::Complement { points } => points.iter().try_for_each(|p| manifold.check_dim(p)),
            Region::Intersection { regions } => {
                regions.iter().try_for_each(|r| r.validate(manifold))
            }
        }
    }

    pub fn clearance(&self, manifold: &Manifold, p: &Point) -> f64 {
        let inner = match self {
            Region::Full => f64::INFINITY,
            Region::Ball { center, radius } => radius - manifold.distance(center, p),
            Region::Box { lower, upper } => p
                .iter()
                .zip(lower.iter().zip(upper.iter()))
                .map(|(c, (l, u))| (c - l).min(u - c))
                .fold(f64::INFINITY, f64::min),
            Region::Complement { points } => points
                .iter()
                .map(|q| manifold.distance(p, q))
                .fold(f64::INFINITY, f64::min),
            Region::Intersection { regions } => regions
                .iter()
                .map(|r| r.clearance(manifold, p))
                .fold(f64::INFINITY, f64::min),
        };
        let outer = if manifold.contains(p) {
            manifold.boundary_clearance(p)
        } else {
            0.0
        };
        inner.min(outer).max(0.0)
    }

    pub fn contains(&self, manifold: &Manifold, p: &Point) -> bool {
        self.clearance(manifold, p) > 0.0
    }

    /// Coordinate bounding box in canonical coordinates.
    pub fn bbox(&self, manifold: &Manifold) -> (Point, Point) {
        let (mlo, mhi) = manifold.bbox();
        match self {
            Region::Ball { center, radius } if !manifold.is_torus() => {
                let lo = center.iter().zip(mlo.iter()).map(|(c, m)| (c - radius).max(*m));
                let hi = center.iter().zip(mhi.iter()).map(|(c, m)| (c + radius).min(*m));
                (lo.collect(), hi.collect())
            }
            Region::Box { lower, upper } if !manifold.is_torus() => (
                lower.iter().zip(mlo.iter()).map(|(a, b)| a.max(*b)).collect(),
                upper.iter().zip(mhi.iter()).map(|(a, b)| a.min(*b)).collect(),
            ),
            Region::Intersection { regions } if !manifold.is_torus() => {
                regions.iter().fold((mlo, mhi), |(lo, hi), r| {
                    let (rlo, rhi) = r.bbox(manifold);
                    (
                        lo.iter().zip(rlo.iter()).map(|(a, b)| a.max(*b)).collect(),
                        hi.iter().zip(rhi.iter()).map(|(a, b)| a.min(*b)).collect(),
                    )
                })
            }
            _ => (mlo, mhi),
        }
    }

    /// Uniform interior sample by rejection from the bounding box.
    /// Ball regions on the torus are sampled around their centre.
    pub fn sample<R: Rng + ?Sized>(&self, manifold: &Manifold, rng: &mut R) -> Result<Point> {
        for _ in 0..100_000 {
            let p = match self {
                Region::Ball { center, radius } if manifold.is_torus() => {
                    let offset: Point = center
                        .iter()
                        .map(|_| radius * (2.0 * rng.gen::<f64>() - 1.0))
                        .collect();
                    manifold.wrap(&(center + &offset))
                }
                _ => {
                    let (lo, hi) = self.bbox(manifold);
                    lo.iter()
                        .zip(hi.iter())
                        .map(|(l, h)| l + (h - l) * rng.gen::<f64>())
                        .collect()
                }
            };
            if self.contains(manifold, &p) {
                return Ok(p);
            }
        }
        Err(Error::Sampling("region rejection sampler exhausted".into()))
    }
}
