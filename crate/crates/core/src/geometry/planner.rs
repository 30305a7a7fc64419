//! Obstacle-avoiding curves between two base points.
//!
//! The planner starts from the straight segment (minimal image on the
//! torus) and pushes it sideways around every avoided point that comes
//! closer than `delta`, using raised-cosine lateral detours that bring
//! the curve to distance `2·delta` from the obstacle. The result is a
//! natural-spline [`Curve`] in unwrapped coordinates.

use super::{Curve, Manifold, Point, Region};
use crate::{Error, Result};

const RETRY_BUDGET: usize = 64;
const DETOUR_HALF_WIDTH: f64 = 4.0;

#[derive(Clone, Debug)]
struct Detour {
    center: f64,
    width: f64,
    offset: Point,
}

fn detour_profile(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * u).cos())
    }
}

struct Planner<'a> {
    manifold: &'a Manifold,
    start: Point,
    chord: Point,
    avoid: &'a [Point],
    region: &'a Region,
    delta: f64,
    margin: f64,
    detours: Vec<Detour>,
}

struct Violation {
    s: f64,
    obstacle: Option<usize>,
    gap: f64,
}

impl Planner<'_> {
    fn at(&self, s: f64) -> Point {
        let mut p = self.start.axpy(s, &self.chord);
        for d in &self.detours {
            let w = detour_profile((s - d.center) / d.width);
            if w != 0.0 {
                p = p.axpy(w, &d.offset);
            }
        }
        p
    }

    /// Worst violation over a set of samples: obstacles closer than
    /// `clearance`, or region clearance below the margin.
    fn worst(&self, samples: &[(f64, Point)], clearance: f64) -> Option<Violation> {
        let mut worst: Option<Violation> = None;
        for (s, p) in samples {
            let wrapped = self.manifold.wrap(p);
            let c = self.region.clearance(self.manifold, &wrapped);
            if c < self.margin {
                let gap = c - self.margin;
                if worst.as_ref().is_none_or(|w| gap < w.gap) {
                    worst = Some(Violation { s: *s, obstacle: None, gap });
                }
            }
            for (k, q) in self.avoid.iter().enumerate() {
                let d = self.manifold.distance(&wrapped, q);
                if d < clearance {
                    let gap = d - clearance;
                    if worst.as_ref().is_none_or(|w| gap < w.gap) {
                        worst = Some(Violation {
                            s: *s,
                            obstacle: Some(k),
                            gap,
                        });
                    }
                }
            }
        }
        worst
    }

    fn detour_around(&self, s: f64, k: usize) -> Detour {
        let p = self.at(s);
        let q = &self.avoid[k];
        let away = self.manifold.displacement(q, &self.manifold.wrap(&p));
        let dist = away.norm();
        let len = self.chord.norm();
        let dir = if dist > 1e-9 * len.max(1.0) {
            &away * (1.0 / dist)
        } else {
            perpendicular(&self.chord)
        };
        // An obstacle almost on the curve may be passed on either side;
        // take the side with more room from the other obstacles.
        let mut offset = &dir * (2.0 * self.delta - dist);
        if dist < self.delta {
            let other = &dir * -(2.0 * self.delta + dist);
            if self.room(&p.axpy(1.0, &other), k) > self.room(&p.axpy(1.0, &offset), k) {
                offset = other;
            }
        }
        let width = (DETOUR_HALF_WIDTH * self.delta / len)
            .min(0.999 * s)
            .min(0.999 * (1.0 - s));
        Detour {
            center: s,
            width,
            offset,
        }
    }

    /// Distance from `p` to the nearest obstacle other than `skip`, or to
    /// the region boundary.
    fn room(&self, p: &Point, skip: usize) -> f64 {
        let wrapped = self.manifold.wrap(p);
        let mut r = self.region.clearance(self.manifold, &wrapped);
        for (k, q) in self.avoid.iter().enumerate() {
            if k != skip {
                r = r.min(self.manifold.distance(&wrapped, q));
            }
        }
        r
    }
}

/// Unit vector orthogonal to `v` (requires `dim >= 2`).
fn perpendicular(v: &Point) -> Point {
    let axis = (0..v.dim())
        .min_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()))
        .unwrap_or(0);
    let mut e = Point::zeros(v.dim());
    e[axis] = 1.0;
    let vv = v.norm_squared();
    let proj = if vv > 0.0 { e.dot(v) / vv } else { 0.0 };
    let w = e.axpy(-proj, v);
    let n = w.norm();
    &w * (1.0 / n)
}

/// Injective curve from `x` to `y` inside `region`, at distance at least
/// `delta` from every point of `avoid`.
///
/// The curve also keeps a region clearance of at least
/// `min(delta, clearance(x), clearance(y)) / 2`.
pub fn plan_path(
    manifold: &Manifold,
    x: &Point,
    y: &Point,
    avoid: &[Point],
    delta: f64,
    region: &Region,
) -> Result<Curve> {
    manifold.check_dim(x)?;
    manifold.check_dim(y)?;
    if !avoid.is_empty() && manifold.dim() < 2 {
        return Err(Error::DimensionTooLow);
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::Parameter(format!("clearance delta must be > 0, got {delta}")));
    }
    let (cx, cy) = (region.clearance(manifold, x), region.clearance(manifold, y));
    if cx <= 0.0 || cy <= 0.0 {
        return Err(Error::Parameter("path endpoints must lie inside the region".into()));
    }
    for q in avoid {
        manifold.check_dim(q)?;
        if manifold.distance(q, x) < delta || manifold.distance(q, y) < delta {
            return Err(Error::Parameter(format!(
                "avoided point {:?} is within delta = {delta} of an endpoint",
                q.as_slice()
            )));
        }
    }
    let chord = manifold.displacement(x, y);
    let len = chord.norm();
    if !(len > 0.0) {
        return Err(Error::Parameter("path endpoints coincide".into()));
    }
    let mut planner = Planner {
        manifold,
        start: x.clone(),
        chord,
        avoid,
        region,
        delta,
        margin: 0.5 * delta.min(cx).min(cy),
        detours: Vec::new(),
    };

    let knot_count = ((4.0 * len / delta.min(len)).ceil() as usize).clamp(16, 2000);
    let probe_count = 4 * knot_count;
    let mut flipped = false;
    for _ in 0..RETRY_BUDGET {
        let probes: Vec<(f64, Point)> = (0..=probe_count)
            .map(|i| {
                let s = i as f64 / probe_count as f64;
                (s, planner.at(s))
            })
            .collect();
        match planner.worst(&probes, 1.25 * delta) {
            None => {
                let mut knots: Vec<Point> = (0..=knot_count)
                    .map(|i| planner.at(i as f64 / knot_count as f64))
                    .collect();
                knots[0] = x.clone();
                *knots.last_mut().unwrap() = if manifold.is_torus() {
                    x + &planner.chord
                } else {
                    y.clone()
                };
                let curve = Curve::from_points(knots)?;
                let (s, pts) = curve.dense(2 * probe_count);
                let check: Vec<(f64, Point)> = s.into_iter().zip(pts).collect();
                match planner.worst(&check, delta) {
                    None => return Ok(curve),
                    Some(v) => match v.obstacle {
                        Some(k) => {
                            let d = planner.detour_around(v.s, k);
                            planner.detours.push(d);
                        }
                        None => break,
                    },
                }
            }
            Some(v) => match v.obstacle {
                Some(k) => {
                    let d = planner.detour_around(v.s, k);
                    planner.detours.push(d);
                    flipped = false;
                }
                None => {
                    // Region violated: the last detour went the wrong way.
                    if flipped || planner.detours.is_empty() {
                        break;
                    }
                    let last = planner.detours.last_mut().unwrap();
                    last.offset = -&last.offset;
                    flipped = true;
                }
            },
        }
    }
    Err(Error::NoPath(format!(
        "no admissible curve from {:?} to {:?} within {RETRY_BUDGET} attempts",
        x.as_slice(),
        y.as_slice()
    )))
}
