use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Point;
use crate::{Error, Result};

/// A flat base manifold: an axis-aligned box in `R^d` or the torus
/// `R^d / (P_1 Z × ... × P_d Z)`.
///
/// Torus points are stored with canonical coordinates in `[0, P_i)`; every
/// distance and displacement uses the minimal-image representative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Manifold {
    Box { bounds: Vec<[f64; 2]> },
    Torus { periods: Vec<f64> },
}

impl Manifold {
    pub fn unit_box(dim: usize, lower: f64, upper: f64) -> Self {
        Manifold::Box {
            bounds: vec![[lower, upper]; dim],
        }
    }

    pub fn torus(periods: &[f64]) -> Self {
        Manifold::Torus {
            periods: periods.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Manifold::Box { bounds } => {
                if bounds.is_empty() {
                    return Err(Error::Parameter("box manifold needs dim >= 1".into()));
                }
                for (i, [lo, hi]) in bounds.iter().enumerate() {
                    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                        return Err(Error::Parameter(format!(
                            "box bound {i} is empty: [{lo}, {hi}]"
                        )));
                    }
                }
            }
            Manifold::Torus { periods } => {
                if periods.is_empty() {
                    return Err(Error::Parameter("torus needs dim >= 1".into()));
                }
                if let Some(p) = periods.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
                    return Err(Error::Parameter(format!("torus period must be > 0, got {p}")));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Manifold::Box { bounds } => bounds.len(),
            Manifold::Torus { periods } => periods.len(),
        }
    }

    pub fn is_torus(&self) -> bool {
        matches!(self, Manifold::Torus { .. })
    }

    pub fn periods(&self) -> Option<&[f64]> {
        match self {
            Manifold::Torus { periods } => Some(periods),
            Manifold::Box { .. } => None,
        }
    }

    pub fn check_dim(&self, p: &Point) -> Result<()> {
        if p.dim() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: p.dim(),
            });
        }
        Ok(())
    }

    /// Displacement `b - a`; minimal image on the torus.
    pub fn displacement(&self, a: &Point, b: &Point) -> Point {
        match self {
            Manifold::Box { .. } => b - a,
            Manifold::Torus { periods } => a
                .iter()
                .zip(b.iter())
                .zip(periods)
                .map(|((x, y), p)| minimal_image(y - x, *p))
                .collect(),
        }
    }

    /// Minimal-image reduction of a vector (identity on the box).
    pub fn reduce(&self, v: &Point) -> Point {
        match self {
            Manifold::Box { .. } => v.clone(),
            Manifold::Torus { periods } => v
                .iter()
                .zip(periods)
                .map(|(c, p)| minimal_image(*c, *p))
                .collect(),
        }
    }

    pub fn distance(&self, a: &Point, b: &Point) -> f64 {
        match self {
            Manifold::Box { .. } => a
                .iter()
                .zip(b.iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Manifold::Torus { periods } => a
                .iter()
                .zip(b.iter())
                .zip(periods)
                .map(|((x, y), p)| {
                    let d = minimal_image(y - x, *p);
                    d * d
                })
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Canonical representative: torus coordinates reduced into `[0, P)`.
    /// Canonical points are returned bitwise unchanged.
    pub fn wrap(&self, p: &Point) -> Point {
        match self {
            Manifold::Box { .. } => p.clone(),
            Manifold::Torus { periods } => p
                .iter()
                .zip(periods)
                .map(|(c, per)| wrap_coord(*c, *per))
                .collect(),
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        if p.dim() != self.dim() || !p.is_finite() {
            return false;
        }
        match self {
            Manifold::Box { bounds } => p
                .iter()
                .zip(bounds)
                .all(|(c, [lo, hi])| *lo <= *c && *c <= *hi),
            Manifold::Torus { .. } => true,
        }
    }

    /// Distance to the manifold boundary: exact for the box interior,
    /// infinite on the torus, zero outside.
    pub fn boundary_clearance(&self, p: &Point) -> f64 {
        match self {
            Manifold::Box { bounds } => p
                .iter()
                .zip(bounds)
                .map(|(c, [lo, hi])| (c - lo).min(hi - c))
                .fold(f64::INFINITY, f64::min)
                .max(0.0),
            Manifold::Torus { .. } => f64::INFINITY,
        }
    }

    /// Coordinate bounding box of the canonical domain.
    pub fn bbox(&self) -> (Point, Point) {
        match self {
            Manifold::Box { bounds } => (
                bounds.iter().map(|b| b[0]).collect(),
                bounds.iter().map(|b| b[1]).collect(),
            ),
            Manifold::Torus { periods } => (Point::zeros(periods.len()), Point::new(periods)),
        }
    }

    /// Uniform sample of the canonical domain.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let (lo, hi) = self.bbox();
        lo.iter()
            .zip(hi.iter())
            .map(|(l, h)| l + (h - l) * rng.gen::<f64>())
            .collect()
    }

    /// Smallest period, or the smallest box side.
    pub fn min_extent(&self) -> f64 {
        match self {
            Manifold::Box { bounds } => bounds
                .iter()
                .map(|[lo, hi]| hi - lo)
                .fold(f64::INFINITY, f64::min),
            Manifold::Torus { periods } => periods.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }
}

pub(crate) fn minimal_image(d: f64, period: f64) -> f64 {
    d - period * (d / period).round()
}

fn wrap_coord(c: f64, period: f64) -> f64 {
    if (0.0..period).contains(&c) {
        // normalizes -0.0
        return c + 0.0;
    }
    let r = c - period * (c / period).floor();
    if r >= period || r < 0.0 {
        0.0
    } else {
        r
    }
}
