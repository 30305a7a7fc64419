//! Compactly supported vector fields on the flat base.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bump::{check_radii, radial_profile};
use super::curve::{reach_check, Curve, Polyline, ReachViolation};
use super::{Manifold, Point};
use crate::{Error, Result};

/// Plateau fraction of the tube radius on which the tube field equals the
/// curve velocity transported along normals.
pub const TUBE_PLATEAU: f64 = 0.5;

const CHUNK: usize = 16;

#[derive(Clone, Debug)]
struct Chunk {
    first: usize,
    last: usize,
    center: Point,
    radius: f64,
}

/// Velocity field of a curve extended to its `rho`-tube:
/// `X(p) = χ(dist(p, c)) · c'(s_near(p))`, zero outside the open tube.
#[derive(Clone, Debug)]
pub struct TubeField {
    curve: Curve,
    rho: f64,
    poly: Vec<Point>,
    poly_s: Vec<f64>,
    chunks: Vec<Chunk>,
    slack: f64,
}

impl TubeField {
    pub fn new(curve: Curve, rho: f64, manifold: &Manifold) -> Result<Self> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::Parameter(format!("tube radius must be > 0, got {rho}")));
        }
        manifold.check_dim(&curve.start())?;
        if let Some(periods) = manifold.periods() {
            let min_p = periods.iter().copied().fold(f64::INFINITY, f64::min);
            if 2.0 * rho >= 0.5 * min_p {
                return Err(Error::TubeRadiusTooLarge(format!(
                    "rho = {rho} is not small against the torus period {min_p}"
                )));
            }
        }
        match reach_check(&curve, manifold, rho) {
            Ok(()) => {}
            Err(ReachViolation::SelfIntersection { s0, s1 }) => {
                return Err(Error::CurveNotInjective(format!(
                    "curve meets itself near s = {s0:.6} and s = {s1:.6}"
                )))
            }
            Err(ReachViolation::TooClose { s0, s1, gap }) => {
                return Err(Error::TubeRadiusTooLarge(format!(
                    "points at s = {s0:.6} and s = {s1:.6} are {gap:.3e} apart, need {:.3e}",
                    2.0 * rho
                )))
            }
            Err(ReachViolation::Curvature { s, curvature }) => {
                return Err(Error::TubeRadiusTooLarge(format!(
                    "curvature {curvature:.3e} at s = {s:.6} too high for rho = {rho}"
                )))
            }
        }
        let poly = Polyline::of(&curve, curve.default_resolution(rho));
        let slack = poly
            .pts
            .windows(2)
            .zip(poly.s.windows(2))
            .map(|(p, s)| {
                let mid = curve.point(0.5 * (s[0] + s[1]));
                let chord = &(&p[0] + &p[1]) * 0.5;
                (&mid - &chord).norm()
            })
            .fold(0.0, f64::max);
        let nseg = poly.segments();
        let chunks = (0..nseg)
            .step_by(CHUNK)
            .map(|first| {
                let last = (first + CHUNK).min(nseg);
                let center = poly.pts[(first + last) / 2].clone();
                let radius = poly.pts[first..=last]
                    .iter()
                    .map(|p| (p - &center).norm())
                    .fold(0.0, f64::max);
                Chunk {
                    first,
                    last,
                    center,
                    radius,
                }
            })
            .collect();
        Ok(TubeField {
            curve,
            rho,
            poly: poly.pts,
            poly_s: poly.s,
            chunks,
            slack: 2.0 * slack + 1e-12,
        })
    }

    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Nearest curve parameter, distance and the local representative of
    /// `p`, if `p` is within `rho` of the curve.
    fn nearest(&self, manifold: &Manifold, p: &Point) -> Option<(f64, f64, Point)> {
        let cutoff = self.rho + self.slack;
        let mut best = (f64::INFINITY, 0usize, 0.0, 0usize);
        for (ci, chunk) in self.chunks.iter().enumerate() {
            let dc = manifold.distance(&chunk.center, p);
            if dc - chunk.radius >= cutoff.min(best.0) {
                continue;
            }
            let p_loc = &chunk.center + &manifold.reduce(&(p - &chunk.center));
            for i in chunk.first..chunk.last {
                let a = &self.poly[i];
                let d = &self.poly[i + 1] - a;
                let len2 = d.norm_squared();
                let u = if len2 > 0.0 {
                    ((&p_loc - a).dot(&d) / len2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let dist = (&a.axpy(u, &d) - &p_loc).norm();
                if dist < best.0 {
                    best = (dist, i, u, ci);
                }
            }
        }
        if best.0 >= cutoff {
            return None;
        }
        let (_, i, u, ci) = best;
        let anchor = &self.chunks[ci].center;
        let (s, d, p_loc) = self.curve.refine_nearest(
            manifold,
            p,
            (self.poly_s[i], self.poly_s[i + 1]),
            u,
            anchor,
        );
        Some((s, d, p_loc))
    }

    pub fn distance_to_curve(&self, manifold: &Manifold, p: &Point) -> f64 {
        self.nearest(manifold, p).map_or(f64::INFINITY, |(_, d, _)| d)
    }

    pub fn in_support(&self, manifold: &Manifold, p: &Point) -> bool {
        self.nearest(manifold, p).is_some_and(|(_, d, _)| d < self.rho)
    }

    pub fn evaluate(&self, manifold: &Manifold, p: &Point) -> Option<Point> {
        let (s, d, _) = self.nearest(manifold, p)?;
        if d >= self.rho {
            return None;
        }
        let chi = radial_profile(d, TUBE_PLATEAU * self.rho, self.rho);
        Some(&self.curve.velocity(s) * chi)
    }

    /// Support bounding box in unwrapped coordinates.
    pub fn support_bbox(&self) -> (Point, Point) {
        let dim = self.curve.dim();
        let mut lo = Point::new(&vec![f64::INFINITY; dim]);
        let mut hi = Point::new(&vec![f64::NEG_INFINITY; dim]);
        for p in &self.poly {
            for k in 0..dim {
                lo[k] = lo[k].min(p[k] - self.rho);
                hi[k] = hi[k].max(p[k] + self.rho);
            }
        }
        (lo, hi)
    }
}

/// Constant vector `v` cut off by a radial bump: `X(p) = χ(|p - c|) · v`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpField {
    pub center: Point,
    pub r_in: f64,
    pub r_out: f64,
    pub vector: Point,
}

impl BumpField {
    pub fn new(center: Point, r_in: f64, r_out: f64, vector: Point) -> Result<Self> {
        check_radii(r_in, r_out)?;
        if center.dim() != vector.dim() {
            return Err(Error::Dimension {
                expected: center.dim(),
                got: vector.dim(),
            });
        }
        Ok(BumpField {
            center,
            r_in,
            r_out,
            vector,
        })
    }

    pub fn in_support(&self, manifold: &Manifold, p: &Point) -> bool {
        manifold.distance(&self.center, p) < self.r_out
    }

    pub fn evaluate(&self, manifold: &Manifold, p: &Point) -> Option<Point> {
        let r = manifold.distance(&self.center, p);
        if r >= self.r_out {
            return None;
        }
        Some(&self.vector * radial_profile(r, self.r_in, self.r_out))
    }
}

#[derive(Clone, Debug)]
pub enum FieldKind {
    Tube(TubeField),
    Bump(BumpField),
}

/// A vector field on the base with explicitly bounded support.
///
/// `evaluate` returns the exact zero vector whenever `in_support` is false.
#[derive(Clone, Debug)]
pub struct CompactVectorField {
    kind: FieldKind,
    lipschitz: f64,
}

impl CompactVectorField {
    pub fn tube(curve: Curve, rho: f64, manifold: &Manifold) -> Result<Self> {
        Ok(Self::with_kind(FieldKind::Tube(TubeField::new(curve, rho, manifold)?), manifold))
    }

    pub fn bump(field: BumpField, manifold: &Manifold) -> Self {
        Self::with_kind(FieldKind::Bump(field), manifold)
    }

    fn with_kind(kind: FieldKind, manifold: &Manifold) -> Self {
        let mut f = CompactVectorField { kind, lipschitz: 0.0 };
        f.lipschitz = f.estimate_lipschitz(manifold, 256);
        f
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    /// Lipschitz constant estimated from sampled nearby pairs in the support.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn in_support(&self, manifold: &Manifold, p: &Point) -> bool {
        match &self.kind {
            FieldKind::Tube(t) => t.in_support(manifold, p),
            FieldKind::Bump(b) => b.in_support(manifold, p),
        }
    }

    /// Field value, `None` when `p` lies outside the support.
    pub fn value(&self, manifold: &Manifold, p: &Point) -> Option<Point> {
        match &self.kind {
            FieldKind::Tube(t) => t.evaluate(manifold, p),
            FieldKind::Bump(b) => b.evaluate(manifold, p),
        }
    }

    pub fn evaluate(&self, manifold: &Manifold, p: &Point) -> Point {
        self.value(manifold, p).unwrap_or_else(|| Point::zeros(p.dim()))
    }

    /// Support bounding box, in unwrapped coordinates.
    pub fn support_bbox(&self) -> (Point, Point) {
        match &self.kind {
            FieldKind::Tube(t) => t.support_bbox(),
            FieldKind::Bump(b) => (
                b.center.iter().map(|c| c - b.r_out).collect(),
                b.center.iter().map(|c| c + b.r_out).collect(),
            ),
        }
    }

    /// Uniform sample from the support bounding box (may fall outside the support).
    pub fn sample_near_support<R: Rng + ?Sized>(&self, manifold: &Manifold, rng: &mut R) -> Point {
        let (lo, hi) = self.support_bbox();
        let p: Point = lo
            .iter()
            .zip(hi.iter())
            .map(|(l, h)| l + (h - l) * rng.gen::<f64>())
            .collect();
        manifold.wrap(&p)
    }

    fn estimate_lipschitz(&self, manifold: &Manifold, n: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let (lo, hi) = self.support_bbox();
        let scale = lo
            .iter()
            .zip(hi.iter())
            .map(|(l, h)| h - l)
            .fold(f64::INFINITY, f64::min)
            * 1e-3;
        let mut best: f64 = 0.0;
        for _ in 0..n {
            let p = self.sample_near_support(manifold, &mut rng);
            if !self.in_support(manifold, &p) {
                continue;
            }
            let dir: Point = (0..p.dim()).map(|_| rng.gen::<f64>() - 0.5).collect();
            let step = &dir * (scale / dir.norm().max(1e-300));
            let q = manifold.wrap(&(&p + &step));
            let dv = &self.evaluate(manifold, &q) - &self.evaluate(manifold, &p);
            best = best.max(dv.norm() / step.norm());
        }
        best
    }
}

/// Tube field of an injective curve: equals the curve velocity on the
/// curve, decays to zero within radius `rho`.
pub fn tube_field(curve: Curve, rho: f64, manifold: &Manifold) -> Result<CompactVectorField> {
    CompactVectorField::tube(curve, rho, manifold)
}
