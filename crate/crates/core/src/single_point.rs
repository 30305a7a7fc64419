//! Bisections through one prescribed arrow, equal to the identity outside a
//! prescribed open set.
//!
//! The base curve from `α(g)` to `β(g)` is split into injective arcs and
//! each arc contributes one tube exponential. In the frame family the fiber
//! is then corrected at `β(g)` by gauge exponentials and, for
//! orientation-reversing maps, a global reflection.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::exponential::{gauge_generators, linalg, CompactSection};
use crate::geometry::{plan_path, split_injective, BumpField, CompactVectorField, Curve, Manifold, Point, Region};
use crate::groupoid::{BisectionWord, Family, Generator, Groupoid, GroupoidElement};
use crate::{Error, Result, EPS_MATCH};

/// Number of times the tube radius may be halved before giving up.
pub const MAX_RHO_HALVINGS: usize = 6;

pub const DEFAULT_TUBE_RHO: f64 = 0.3;
pub const DEFAULT_GAUGE_R: f64 = 0.3;
pub const DEFAULT_TOL_BASE: f64 = 1e-6;
pub const DEFAULT_TOL_FIBER: f64 = 1e-8;

/// Everything needed to build a bisection through one arrow.
#[derive(Clone, Debug)]
pub struct ConstructionRequest {
    pub g: GroupoidElement,
    pub region: Region,
    /// Base curve from `α(g)` to `β(g)`; planned when absent.
    pub hint_curve: Option<Curve>,
    /// Points that must be fixed exactly.
    pub avoid: Vec<Point>,
    /// Clearance kept by the planned curve from `avoid`; see [`default_delta`].
    pub delta: Option<f64>,
    pub tube_rho: f64,
    pub gauge_r: f64,
    /// Use rotation generators only (fiber maps stay orthogonal).
    pub orthogonal_only: bool,
    pub tol_base: f64,
    pub tol_fiber: f64,
}

impl ConstructionRequest {
    pub fn new(g: GroupoidElement, region: Region) -> Self {
        ConstructionRequest {
            g,
            region,
            hint_curve: None,
            avoid: Vec::new(),
            delta: None,
            tube_rho: DEFAULT_TUBE_RHO,
            gauge_r: DEFAULT_GAUGE_R,
            orthogonal_only: false,
            tol_base: DEFAULT_TOL_BASE,
            tol_fiber: DEFAULT_TOL_FIBER,
        }
    }

    pub fn avoiding(mut self, avoid: Vec<Point>) -> Self {
        self.avoid = avoid;
        self
    }
}

/// Result of a single-point construction.
#[derive(Clone, Debug)]
pub struct Construction {
    pub word: BisectionWord,
    /// Injective arcs of the base curve (one tube generator each).
    pub arcs: usize,
    /// Tube radius actually used, after any halving.
    pub rho: Option<f64>,
    pub residual: Residual,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub base: f64,
    pub fiber: f64,
}

impl Residual {
    pub fn within(&self, tol_base: f64, tol_fiber: f64) -> bool {
        self.base <= tol_base && self.fiber <= tol_fiber
    }

    pub fn max(self, other: Residual) -> Residual {
        Residual {
            base: self.base.max(other.base),
            fiber: self.fiber.max(other.fiber),
        }
    }
}

/// Half the smallest pairwise distance among `x`, `y` and the avoided
/// points, capped by the region clearance at `x` and `y`.
pub fn default_delta(manifold: &Manifold, region: &Region, x: &Point, y: &Point, avoid: &[Point]) -> f64 {
    let mut pts = vec![x, y];
    pts.extend(avoid);
    let mut min = f64::INFINITY;
    for i in 0..pts.len() {
        for j in 0..i {
            let d = manifold.distance(pts[i], pts[j]);
            if d > EPS_MATCH {
                min = min.min(d);
            }
        }
    }
    (0.5 * min)
        .min(region.clearance(manifold, x))
        .min(region.clearance(manifold, y))
}

/// Residual of `s(α(g))` against `g`.
pub fn residual_at(groupoid: &Groupoid, word: &BisectionWord, g: &GroupoidElement) -> Result<Residual> {
    let e = groupoid.eval(word, &g.source)?;
    let (base, fiber) = groupoid.residual(&e, g);
    Ok(Residual { base, fiber })
}

/// Smallest region clearance and smallest distance to `avoid` along the curve.
fn curve_clearances(manifold: &Manifold, curve: &Curve, region: &Region, avoid: &[Point]) -> (f64, f64) {
    let n = curve.default_resolution(curve.length() / 256.0).max(512);
    let (_, pts) = curve.dense(n);
    let mut c_region = f64::INFINITY;
    let mut c_avoid = f64::INFINITY;
    for p in &pts {
        let w = manifold.wrap(p);
        c_region = c_region.min(region.clearance(manifold, &w));
        for q in avoid {
            c_avoid = c_avoid.min(manifold.distance(&w, q));
        }
    }
    (c_region, c_avoid)
}

/// Tube sections along `curve`, halving the radius on reach failures.
fn tube_sections(manifold: &Manifold, curve: &Curve, rho0: f64) -> Result<(Vec<CompactSection>, f64)> {
    let mut rho = rho0;
    let mut last = None;
    for _ in 0..=MAX_RHO_HALVINGS {
        let attempt = split_injective(curve, manifold, rho).and_then(|arcs| {
            arcs.into_iter()
                .map(|a| CompactSection::tube(a, rho, manifold))
                .collect::<Result<Vec<_>>>()
        });
        match attempt {
            Ok(sections) => return Ok((sections, rho)),
            Err(e @ (Error::TubeRadiusTooLarge(_) | Error::CurveNotInjective(_))) => {
                last = Some(e);
                rho *= 0.5;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// A finitely generated bisection `s` with `s(α(g)) = g`, equal to the
/// identity outside `req.region` and fixing every point of `req.avoid`.
pub fn bisection_through(groupoid: &Groupoid, req: &ConstructionRequest) -> Result<Construction> {
    let m = &groupoid.manifold;
    let g = &req.g;
    groupoid.check(g)?;
    req.region.validate(m)?;
    let (x, y) = (g.alpha(), g.beta());
    for (name, p) in [("source", x), ("target", y)] {
        if !req.region.contains(m, p) {
            return Err(Error::Parameter(format!(
                "{name} {:?} is not inside the region",
                p.as_slice()
            )));
        }
    }
    for q in &req.avoid {
        m.check_dim(q)?;
        if m.distance(q, x) <= EPS_MATCH || m.distance(q, y) <= EPS_MATCH {
            return Err(Error::Parameter(format!(
                "avoided point {:?} coincides with an endpoint",
                q.as_slice()
            )));
        }
    }
    if !(req.tube_rho > 0.0 && req.gauge_r > 0.0) {
        return Err(Error::Parameter("tube_rho and gauge_r must be > 0".into()));
    }

    let mut word = BisectionWord::identity(groupoid.family);
    let mut arcs = 0;
    let mut rho_used = None;

    if m.distance(x, y) > EPS_MATCH {
        let curve = match &req.hint_curve {
            Some(c) => {
                let gap = m.distance(&m.wrap(&c.start()), x).max(m.distance(&m.wrap(&c.end()), y));
                if gap > EPS_MATCH {
                    return Err(Error::Parameter(format!(
                        "hint curve endpoints are {gap:e} away from the arrow"
                    )));
                }
                c.clone()
            }
            None => {
                let delta = req
                    .delta
                    .unwrap_or_else(|| default_delta(m, &req.region, x, y, &req.avoid));
                plan_path(m, x, y, &req.avoid, delta, &req.region)?
            }
        };
        let (c_region, c_avoid) = curve_clearances(m, &curve, &req.region, &req.avoid);
        let rho = req.tube_rho.min(0.9 * c_region).min(0.5 * c_avoid);
        if !(rho > 0.0) {
            return Err(Error::Parameter("the base curve leaves the region".into()));
        }
        let (sections, rho) = tube_sections(m, &curve, rho)?;
        arcs = sections.len();
        rho_used = Some(rho);
        for s in sections {
            word.push(Generator::exp(s, 1.0));
        }
    }

    if let Some(a) = g.matrix() {
        let transported = groupoid.eval(&word, x)?;
        let a_t = transported.matrix().expect("frame evaluation");
        let a_res = a * linalg::inverse(a_t)?;
        if !a_res.is_identity(0.0) {
            let r = fit_gauge_radius(m, &req.region, y, &req.avoid, req.gauge_r)?;
            let factors = gauge_generators(&a_res, y, r, req.orthogonal_only, m)?;
            for s in factors.sections {
                word.push(Generator::exp(s, 1.0));
            }
            if let Some(d) = factors.global {
                word.push(Generator::Global { map: d, sign: 1 });
            }
        }
    }

    let residual = residual_at(groupoid, &word, g)?;
    check_residual(residual, req.tol_base, req.tol_fiber)?;
    Ok(Construction {
        word,
        arcs,
        rho: rho_used,
        residual,
    })
}

fn check_residual(r: Residual, tol_base: f64, tol_fiber: f64) -> Result<()> {
    if r.base > tol_base {
        return Err(Error::Residual {
            residual: r.base,
            tolerance: tol_base,
        });
    }
    if r.fiber > tol_fiber {
        return Err(Error::Residual {
            residual: r.fiber,
            tolerance: tol_fiber,
        });
    }
    Ok(())
}

/// Gauge radius at `y`: the requested one, shrunk to stay inside the region
/// and away from the avoided points.
fn fit_gauge_radius(manifold: &Manifold, region: &Region, y: &Point, avoid: &[Point], r: f64) -> Result<f64> {
    let mut fit = r.min(0.9 * region.clearance(manifold, y));
    for q in avoid {
        fit = fit.min(0.5 * manifold.distance(q, y));
    }
    if let Some(p) = manifold.periods() {
        fit = fit.min(0.45 * p.iter().copied().fold(f64::INFINITY, f64::min));
    }
    if !(fit > 0.0) {
        return Err(Error::GaugeBall(format!(
            "no positive radius fits around {:?}",
            y.as_slice()
        )));
    }
    Ok(fit)
}

/// Diffeomorphism `Φ` with `Φ(x) = y` and `Φ = id` outside `region`, as a
/// pair-family word.
pub fn homogeneity_diffeo(manifold: &Manifold, x: &Point, y: &Point, region: &Region) -> Result<BisectionWord> {
    let gp = Groupoid::pair(manifold.clone())?;
    let req = ConstructionRequest::new(GroupoidElement::pair(x.clone(), y.clone()), region.clone());
    Ok(bisection_through(&gp, &req)?.word)
}

/// Compactly supported fields whose time-1 flows, applied in order, carry
/// `x` to `y` inside `region`.
pub fn moving_flows(manifold: &Manifold, x: &Point, y: &Point, region: &Region) -> Result<Vec<CompactVectorField>> {
    let word = homogeneity_diffeo(manifold, x, y, region)?;
    Ok(word
        .generators()
        .iter()
        .filter_map(|g| g.section().and_then(|s| s.base_field()).cloned())
        .collect())
}

/// Frame-family word whose value at `x` is `(x, y, phi)`. With
/// `orthogonal_only`, `phi` must be orthogonal and every fiber map of the
/// word stays orthogonal.
pub fn bundle_automorphism_through(
    groupoid: &Groupoid,
    phi: &DMatrix<f64>,
    x: &Point,
    y: &Point,
    orthogonal_only: bool,
) -> Result<BisectionWord> {
    if groupoid.family != Family::Frame {
        return Err(Error::FamilyMismatch("bundle automorphisms need the frame family".into()));
    }
    let g = GroupoidElement::frame(x.clone(), y.clone(), phi.clone());
    let mut req = ConstructionRequest::new(g, Region::Full);
    req.orthogonal_only = orthogonal_only;
    Ok(bisection_through(groupoid, &req)?.word)
}

/// Action-family word `s` with `s(x) = g`, built from translation bumps.
///
/// `g` is split into equal steps of length at most `g_max`. Step `k` is the
/// constant field `g/n` cut off by a bump centred at `x + k·g/n`; its
/// plateau contains the whole step, so the point over `x` is translated
/// exactly, and the bump gradient keeps `|∇X| < 1`.
pub fn invertible_function_through(groupoid: &Groupoid, x: &Point, g: &Point) -> Result<BisectionWord> {
    if groupoid.family != Family::Action {
        return Err(Error::FamilyMismatch("invertible functions need the action family".into()));
    }
    let m = &groupoid.manifold;
    m.check_dim(x)?;
    m.check_dim(g)?;
    let (r_in, r_out, g_max) = action_bump_radii(m);
    let len = g.norm();
    let mut word = BisectionWord::identity(Family::Action);
    if len == 0.0 {
        return Ok(word);
    }
    let n = (len / g_max).ceil().max(1.0) as usize;
    let step = g * (1.0 / n as f64);
    let mut center = x.clone();
    for _ in 0..n {
        let field = BumpField::new(m.wrap(&center), r_in, r_out, step.clone())?;
        word.push(Generator::exp(CompactSection::action_bump(field, m)?, 1.0));
        center = &center + &step;
    }
    Ok(word)
}

/// `(r_in, r_out, g_max)` for translation bumps on a torus.
pub fn action_bump_radii(manifold: &Manifold) -> (f64, f64, f64) {
    let p = manifold.min_extent();
    let r_out = 0.45 * p;
    let r_in = r_out / 3.0;
    let slope_cap = 0.9 * (r_out - r_in) / crate::geometry::bump::SMOOTH_STEP_MAX_SLOPE;
    (r_in, r_out, r_in.min(slope_cap))
}
