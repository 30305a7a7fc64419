//! Piecewise-cubic curves and their polyline approximations.
//!
//! A [`Curve`] is a natural cubic spline through ordered knots, parametrized
//! by normalized chord length, and restricted to a parameter window. Arcs
//! produced by [`split_injective`] share the parent's spline and differ only
//! in their window, so their concatenation reproduces the parent exactly.
//!
//! Coordinates are unwrapped: on a torus the knots live in the universal
//! cover and distance queries reduce differences to the minimal image.

use serde::{Deserialize, Serialize};

use super::{Manifold, Point};
use crate::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
struct CurveRepr {
    knots: Vec<Point>,
    params: Vec<f64>,
    window: [f64; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "CurveRepr", into = "CurveRepr")]
pub struct Curve {
    knots: Vec<Point>,
    params: Vec<f64>,
    window: [f64; 2],
    second: Vec<Point>,
}

impl PartialEq for Curve {
    fn eq(&self, other: &Self) -> bool {
        self.knots == other.knots && self.params == other.params && self.window == other.window
    }
}

impl TryFrom<CurveRepr> for Curve {
    type Error = Error;
    fn try_from(r: CurveRepr) -> Result<Self> {
        Curve::with_params(r.knots, r.params)?.window(r.window[0], r.window[1])
    }
}

impl From<Curve> for CurveRepr {
    fn from(c: Curve) -> Self {
        CurveRepr {
            knots: c.knots,
            params: c.params,
            window: c.window,
        }
    }
}

impl Curve {
    /// Spline through `knots`, parametrized by normalized cumulative chord length.
    pub fn from_points(knots: Vec<Point>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::Parameter("a curve needs at least two knots".into()));
        }
        let mut cum = Vec::with_capacity(knots.len());
        cum.push(0.0);
        for w in knots.windows(2) {
            let d = (&w[1] - &w[0]).norm();
            cum.push(cum.last().unwrap() + d);
        }
        let total = *cum.last().unwrap();
        if !(total > 0.0) {
            return Err(Error::Parameter("curve has zero length".into()));
        }
        let n = cum.len();
        let mut params: Vec<f64> = cum.iter().map(|c| c / total).collect();
        params[n - 1] = 1.0;
        Curve::with_params(knots, params)
    }

    pub fn with_params(knots: Vec<Point>, params: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != params.len() {
            return Err(Error::Parameter(
                "curve needs >= 2 knots and one parameter per knot".into(),
            ));
        }
        let dim = knots[0].dim();
        if knots.iter().any(|k| k.dim() != dim || !k.is_finite()) {
            return Err(Error::Parameter("curve knots must be finite and of equal dimension".into()));
        }
        if params[0] != 0.0 || *params.last().unwrap() != 1.0 {
            return Err(Error::Parameter("curve parameters must run from 0 to 1".into()));
        }
        if params.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Parameter(
                "curve parameters must be strictly increasing (repeated knot?)".into(),
            ));
        }
        let second = natural_second_derivatives(&knots, &params);
        Ok(Curve {
            knots,
            params,
            window: [0.0, 1.0],
            second,
        })
    }

    /// Restriction to the global parameter window `[a, b]`, reparametrized to `[0, 1]`.
    pub fn window(mut self, a: f64, b: f64) -> Result<Self> {
        if !(0.0 <= a && a < b && b <= 1.0) {
            return Err(Error::Parameter(format!("invalid curve window [{a}, {b}]")));
        }
        self.window = [a, b];
        Ok(self)
    }

    /// Sub-arc between local parameters `s0 < s1`.
    pub fn sub(&self, s0: f64, s1: f64) -> Result<Curve> {
        let a = self.global(s0);
        let b = if s1 >= 1.0 { self.window[1] } else { self.global(s1) };
        self.clone().window(a, b)
    }

    pub fn dim(&self) -> usize {
        self.knots[0].dim()
    }

    pub fn knots(&self) -> &[Point] {
        &self.knots
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn window_bounds(&self) -> [f64; 2] {
        self.window
    }

    fn global(&self, s: f64) -> f64 {
        self.window[0] + s * (self.window[1] - self.window[0])
    }

    fn scale(&self) -> f64 {
        self.window[1] - self.window[0]
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.params.len();
        let i = self.params.partition_point(|&p| p <= t);
        i.clamp(1, n - 1) - 1
    }

    fn spline_point(&self, t: f64) -> Point {
        let n = self.params.len();
        if t <= 0.0 {
            return self.knots[0].clone();
        }
        if t >= 1.0 {
            return self.knots[n - 1].clone();
        }
        let i = self.segment(t);
        let (t0, t1) = (self.params[i], self.params[i + 1]);
        let h = t1 - t0;
        let a = (t1 - t) / h;
        let b = (t - t0) / h;
        let ca = (a * a * a - a) * h * h / 6.0;
        let cb = (b * b * b - b) * h * h / 6.0;
        (0..self.dim())
            .map(|k| {
                a * self.knots[i][k]
                    + b * self.knots[i + 1][k]
                    + ca * self.second[i][k]
                    + cb * self.second[i + 1][k]
            })
            .collect()
    }

    fn spline_velocity(&self, t: f64) -> Point {
        let t = t.clamp(0.0, 1.0);
        let i = self.segment(t);
        let (t0, t1) = (self.params[i], self.params[i + 1]);
        let h = t1 - t0;
        let a = (t1 - t) / h;
        let b = (t - t0) / h;
        (0..self.dim())
            .map(|k| {
                (self.knots[i + 1][k] - self.knots[i][k]) / h
                    - (3.0 * a * a - 1.0) / 6.0 * h * self.second[i][k]
                    + (3.0 * b * b - 1.0) / 6.0 * h * self.second[i + 1][k]
            })
            .collect()
    }

    fn spline_acceleration(&self, t: f64) -> Point {
        let t = t.clamp(0.0, 1.0);
        let i = self.segment(t);
        let (t0, t1) = (self.params[i], self.params[i + 1]);
        let h = t1 - t0;
        let a = (t1 - t) / h;
        let b = (t - t0) / h;
        (0..self.dim())
            .map(|k| a * self.second[i][k] + b * self.second[i + 1][k])
            .collect()
    }

    /// `c(s)` for local parameter `s ∈ [0, 1]`; the window endpoints are
    /// reproduced exactly.
    pub fn point(&self, s: f64) -> Point {
        if s >= 1.0 {
            return self.spline_point(self.window[1]);
        }
        self.spline_point(self.global(s.max(0.0)))
    }

    pub fn start(&self) -> Point {
        self.point(0.0)
    }

    pub fn end(&self) -> Point {
        self.point(1.0)
    }

    /// `c'(s)` with respect to the local parameter.
    pub fn velocity(&self, s: f64) -> Point {
        &self.spline_velocity(self.global(s.clamp(0.0, 1.0))) * self.scale()
    }

    pub fn acceleration(&self, s: f64) -> Point {
        let k = self.scale();
        &self.spline_acceleration(self.global(s.clamp(0.0, 1.0))) * (k * k)
    }

    /// Curvature `|c' ∧ c''| / |c'|^3`.
    pub fn curvature(&self, s: f64) -> f64 {
        let v = self.velocity(s);
        let a = self.acceleration(s);
        let vv = v.norm_squared();
        let wedge = (vv * a.norm_squared() - v.dot(&a).powi(2)).max(0.0).sqrt();
        wedge / vv.powf(1.5)
    }

    /// Arc length by 5-point Gauss-Legendre quadrature on each knot interval.
    pub fn length(&self) -> f64 {
        self.length_between(0.0, 1.0)
    }

    fn length_between(&self, s0: f64, s1: f64) -> f64 {
        const NODES: [f64; 5] = [
            -0.906_179_845_938_664,
            -0.538_469_310_105_683,
            0.0,
            0.538_469_310_105_683,
            0.906_179_845_938_664,
        ];
        const WEIGHTS: [f64; 5] = [
            0.236_926_885_056_189,
            0.478_628_670_499_366,
            0.568_888_888_888_889,
            0.478_628_670_499_366,
            0.236_926_885_056_189,
        ];
        let (g0, g1) = (self.global(s0), self.global(s1));
        let mut breaks = vec![g0];
        breaks.extend(self.params.iter().copied().filter(|&p| p > g0 && p < g1));
        breaks.push(g1);
        let mut total = 0.0;
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (x, wt) in NODES.iter().zip(WEIGHTS.iter()) {
                total += wt * half * self.spline_velocity(mid + half * x).norm();
            }
        }
        total
    }

    /// Resample `n >= 2` knots at equal arc length and rebuild the spline.
    pub fn reparametrize_arc_length(&self, n: usize) -> Result<Curve> {
        if n < 2 {
            return Err(Error::Parameter("need at least two samples".into()));
        }
        let fine = 64 * self.knots.len().max(n);
        let mut cum = vec![0.0];
        for i in 0..fine {
            let s0 = i as f64 / fine as f64;
            let s1 = (i + 1) as f64 / fine as f64;
            cum.push(cum.last().unwrap() + self.length_between(s0, s1));
        }
        let total = *cum.last().unwrap();
        let mut knots = Vec::with_capacity(n);
        for k in 0..n {
            if k == 0 {
                knots.push(self.start());
                continue;
            }
            if k == n - 1 {
                knots.push(self.end());
                continue;
            }
            let target = total * k as f64 / (n - 1) as f64;
            let j = cum.partition_point(|&c| c < target).clamp(1, fine);
            let (s0, s1) = ((j - 1) as f64 / fine as f64, j as f64 / fine as f64);
            // Newton on the local arc-length function inside the bracket.
            let mut s = s0 + (s1 - s0) * (target - cum[j - 1]) / (cum[j] - cum[j - 1]);
            for _ in 0..4 {
                let err = cum[j - 1] + self.length_between(s0, s) - target;
                let speed = self.velocity(s).norm();
                s = (s - err / speed).clamp(s0, s1);
            }
            knots.push(self.point(s));
        }
        Curve::from_points(knots)
    }

    /// `n + 1` equally spaced local parameters and their points.
    pub fn dense(&self, n: usize) -> (Vec<f64>, Vec<Point>) {
        let s: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let pts = s.iter().map(|&si| self.point(si)).collect();
        (s, pts)
    }

    /// Dense resolution used for distance queries on this curve.
    pub fn default_resolution(&self, rho: f64) -> usize {
        let knot_intervals = self.params.partition_point(|&p| p < self.window[1])
            - self.params.partition_point(|&p| p <= self.window[0])
            + 1;
        let by_knots = 6 * knot_intervals;
        let by_radius = if rho > 0.0 {
            (4.0 * self.length() / rho).ceil() as usize
        } else {
            0
        };
        by_knots.max(by_radius).clamp(64, 20_000)
    }

    /// Closest point on the polyline through `pts` to `p`, followed by
    /// Newton refinement on the spline. Returns `(s, distance, p_local)`
    /// where `p_local` is the representative of `p` nearest to the curve.
    pub(crate) fn refine_nearest(
        &self,
        manifold: &Manifold,
        p: &Point,
        seg_s: (f64, f64),
        seg_u: f64,
        anchor: &Point,
    ) -> (f64, f64, Point) {
        let p_local = anchor + &manifold.reduce(&(p - anchor));
        let (lo, hi) = (
            (seg_s.0 - (seg_s.1 - seg_s.0)).max(0.0),
            (seg_s.1 + (seg_s.1 - seg_s.0)).min(1.0),
        );
        let mut s = seg_s.0 + seg_u * (seg_s.1 - seg_s.0);
        for _ in 0..12 {
            let c = self.point(s);
            let v = self.velocity(s);
            let a = self.acceleration(s);
            let r = &c - &p_local;
            let g = r.dot(&v);
            let dg = v.norm_squared() + r.dot(&a);
            if !(dg > 0.0) {
                break;
            }
            let next = (s - g / dg).clamp(lo, hi);
            let done = (next - s).abs() <= 1e-15;
            s = next;
            if done {
                break;
            }
        }
        let d = (&self.point(s) - &p_local).norm();
        (s, d, p_local)
    }
}

fn natural_second_derivatives(knots: &[Point], params: &[f64]) -> Vec<Point> {
    let n = knots.len();
    let dim = knots[0].dim();
    let mut m = vec![Point::zeros(dim); n];
    if n < 3 {
        return m;
    }
    // Thomas algorithm on the interior unknowns M_1..M_{n-2}.
    let h: Vec<f64> = params.windows(2).map(|w| w[1] - w[0]).collect();
    let inner = n - 2;
    let mut diag = vec![0.0; inner];
    let mut upper = vec![0.0; inner];
    let mut rhs = vec![Point::zeros(dim); inner];
    for j in 0..inner {
        let i = j + 1;
        diag[j] = 2.0 * (h[i - 1] + h[i]);
        upper[j] = h[i];
        rhs[j] = (0..dim)
            .map(|k| {
                6.0 * ((knots[i + 1][k] - knots[i][k]) / h[i]
                    - (knots[i][k] - knots[i - 1][k]) / h[i - 1])
            })
            .collect();
    }
    for j in 1..inner {
        let lower = h[j];
        let w = lower / diag[j - 1];
        diag[j] -= w * upper[j - 1];
        let prev = rhs[j - 1].clone();
        rhs[j] -= &(&prev * w);
    }
    let mut sol = vec![Point::zeros(dim); inner];
    sol[inner - 1] = &rhs[inner - 1] * (1.0 / diag[inner - 1]);
    for j in (0..inner - 1).rev() {
        let next = sol[j + 1].clone();
        sol[j] = &(&rhs[j] - &(&next * upper[j])) * (1.0 / diag[j]);
    }
    m[1..=inner].clone_from_slice(&sol[..inner]);
    m
}

/// Minimum distance between segments `[a0, a1]` and `[b0, b1]` in `R^d`.
pub(crate) fn segment_distance(a0: &Point, a1: &Point, b0: &Point, b1: &Point) -> f64 {
    let d1 = a1 - a0;
    let d2 = b1 - b0;
    let r = a0 - b0;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);
    let (s, t);
    if a <= f64::EPSILON && e <= f64::EPSILON {
        return r.norm();
    }
    if a <= f64::EPSILON {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= f64::EPSILON {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 0.0 {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    let pa = a0.axpy(s, &d1);
    let pb = b0.axpy(t, &d2);
    (&pa - &pb).norm()
}

/// Polyline approximation with per-vertex arc length, used for reach and
/// self-intersection checks.
pub(crate) struct Polyline {
    pub s: Vec<f64>,
    pub pts: Vec<Point>,
    pub arc: Vec<f64>,
}

impl Polyline {
    pub fn of(curve: &Curve, n: usize) -> Self {
        let (s, pts) = curve.dense(n);
        let mut arc = Vec::with_capacity(pts.len());
        arc.push(0.0);
        for w in pts.windows(2) {
            arc.push(arc.last().unwrap() + (&w[1] - &w[0]).norm());
        }
        Polyline { s, pts, arc }
    }

    pub fn segments(&self) -> usize {
        self.pts.len() - 1
    }

    /// Distance between segments `i` and `j`, with `j` taken in the minimal
    /// image relative to segment `i`.
    pub fn segment_gap(&self, manifold: &Manifold, i: usize, j: usize) -> f64 {
        let (a0, a1) = (&self.pts[i], &self.pts[i + 1]);
        let shift = manifold.reduce(&(&self.pts[j] - a0));
        let b0 = a0 + &shift;
        let b1 = &b0 + &(&self.pts[j + 1] - &self.pts[j]);
        segment_distance(a0, a1, &b0, &b1)
    }

    /// Arc-length separation between the closest ends of segments `i < j`.
    pub fn separation(&self, i: usize, j: usize) -> f64 {
        self.arc[j] - self.arc[i + 1]
    }
}

/// Why a curve fails the tube check at radius `rho`.
#[derive(Clone, Debug, PartialEq)]
pub enum ReachViolation {
    SelfIntersection { s0: f64, s1: f64 },
    TooClose { s0: f64, s1: f64, gap: f64 },
    Curvature { s: f64, curvature: f64 },
}

/// Fraction of the inverse curvature allowed for the tube radius.
pub(crate) const CURVATURE_MARGIN: f64 = 0.5;

fn far_apart(sep: f64, rho: f64) -> bool {
    sep > std::f64::consts::PI * rho
}

/// Reach/injectivity check: segments more than `π·rho` apart along the
/// curve must be at least `2·rho` apart in space, segments that far apart
/// must not touch, and `curvature · rho <= 1/2` everywhere.
pub fn reach_check(curve: &Curve, manifold: &Manifold, rho: f64) -> std::result::Result<(), ReachViolation> {
    let poly = Polyline::of(curve, curve.default_resolution(rho));
    let touch = 1e-9 * poly.arc.last().copied().unwrap_or(1.0).max(1.0);
    let nseg = poly.segments();
    let mut worst: Option<ReachViolation> = None;
    for j in 0..nseg {
        for i in 0..j {
            if !far_apart(poly.separation(i, j), rho) {
                break;
            }
            let gap = poly.segment_gap(manifold, i, j);
            if gap <= touch {
                return Err(ReachViolation::SelfIntersection {
                    s0: poly.s[i],
                    s1: poly.s[j],
                });
            }
            if gap < 2.0 * rho && worst.is_none() {
                worst = Some(ReachViolation::TooClose {
                    s0: poly.s[i],
                    s1: poly.s[j],
                    gap,
                });
            }
        }
    }
    if let Some(v) = worst {
        return Err(v);
    }
    for &s in &poly.s {
        let k = curve.curvature(s);
        if k * rho > CURVATURE_MARGIN {
            return Err(ReachViolation::Curvature { s, curvature: k });
        }
    }
    Ok(())
}

/// Split a curve into consecutive arcs that each pass the separation part
/// of [`reach_check`] at radius `eps`.
///
/// Arcs are windows of the same spline, so their concatenation reproduces
/// the input. The curvature condition cannot be repaired by splitting and
/// is left to the tube constructor.
pub fn split_injective(curve: &Curve, manifold: &Manifold, eps: f64) -> Result<Vec<Curve>> {
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("split radius must be > 0, got {eps}")));
    }
    let poly = Polyline::of(curve, curve.default_resolution(eps));
    let nseg = poly.segments();
    let mut cuts = vec![0usize];
    let mut start = 0usize;
    for j in 0..nseg {
        let mut ok = true;
        for i in (start..j).rev() {
            if !far_apart(poly.separation(i, j), eps) {
                continue;
            }
            if poly.segment_gap(manifold, i, j) < 2.0 * eps {
                ok = false;
                break;
            }
        }
        if !ok {
            cuts.push(j);
            start = j;
        }
    }
    cuts.push(nseg);
    if cuts.len() == 2 {
        return Ok(vec![curve.clone()]);
    }
    cuts.windows(2)
        .map(|w| {
            let s0 = poly.s[w[0]];
            let s1 = poly.s[w[1]];
            curve.sub(s0, s1)
        })
        .collect()
}
