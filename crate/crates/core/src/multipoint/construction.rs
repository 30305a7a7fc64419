use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::combinatorics::{concordance_violation, find_chains, well_order, BasePair};
use crate::geometry::{Manifold, Point, Region};
use crate::exponential::linalg;
use crate::groupoid::{BisectionWord, Family, Fiber, Generator, Groupoid, GroupoidElement};
use crate::single_point::{bisection_through, residual_at, ConstructionRequest, Residual};
use crate::single_point::{DEFAULT_GAUGE_R, DEFAULT_TOL_BASE, DEFAULT_TOL_FIBER, DEFAULT_TUBE_RHO};
use crate::{Error, Result, EPS_MATCH};

const Y0_BATCH: usize = 32;
const Y0_MAX_DRAWS: usize = 1000;

/// Knobs shared by every stage of a multipoint construction.
#[derive(Clone, Debug)]
pub struct MultipointOptions {
    pub region: Region,
    pub tube_rho: f64,
    pub gauge_r: f64,
    /// Minimum spacing between distinct named points and clearance used
    /// for path planning; derived from the points when absent.
    pub delta: Option<f64>,
    pub seed: u64,
    pub tol_base: f64,
    pub tol_fiber: f64,
    pub orthogonal_only: bool,
}

impl Default for MultipointOptions {
    fn default() -> Self {
        MultipointOptions {
            region: Region::Full,
            tube_rho: DEFAULT_TUBE_RHO,
            gauge_r: DEFAULT_GAUGE_R,
            delta: None,
            seed: 0,
            tol_base: DEFAULT_TOL_BASE,
            tol_fiber: DEFAULT_TOL_FIBER,
            orthogonal_only: false,
        }
    }
}

/// One telescoping stage: the separated bisection through `ḡ_k`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageRecord {
    /// Original index of the element handled at this stage.
    pub element: usize,
    pub generators: usize,
    /// Worst residual of `w_k = s_1 ⋯ s_k` at the already routed points.
    pub routed_residual: Residual,
    /// `w_k` is the unit, bitwise, at every point still to be routed.
    pub fixes_pending: bool,
}

/// How one chain was broken: the arrow `g_r` was replaced by
/// `g_r · h₀⁻¹`, ending at the auxiliary point `y₀`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainCorrection {
    pub chain: Vec<usize>,
    pub broken_at: usize,
    pub y0: Point,
    pub generators: usize,
}

#[derive(Clone, Debug)]
pub struct MultipointConstruction {
    pub word: BisectionWord,
    /// Chains of the input, as original indices.
    pub chains: Vec<Vec<usize>>,
    /// Original indices in the order their stages were built.
    pub ordering: Vec<usize>,
    /// Residual of `s(x_i)` against `g_i`, per original index.
    pub residuals: Vec<Residual>,
    pub stages: Vec<StageRecord>,
    pub corrections: Vec<ChainCorrection>,
}

impl MultipointConstruction {
    pub fn max_residual(&self) -> Residual {
        self.residuals.iter().fold(Residual::default(), |a, r| a.max(*r))
    }
}

fn base_pairs(elements: &[GroupoidElement]) -> Vec<BasePair> {
    elements
        .iter()
        .enumerate()
        .map(|(i, e)| BasePair::new(i, e.source.clone(), e.target.clone()))
        .collect()
}

/// Bisection through `g` that fixes every point of `fixed` exactly.
pub fn separated_bisection(
    groupoid: &Groupoid,
    g: &GroupoidElement,
    fixed: &[Point],
    opts: &MultipointOptions,
) -> Result<BisectionWord> {
    let m = &groupoid.manifold;
    for q in fixed {
        if m.distance(q, &g.source) <= EPS_MATCH || m.distance(q, &g.target) <= EPS_MATCH {
            return Err(Error::Parameter(format!(
                "fixed point {:?} coincides with an endpoint of the arrow",
                q.as_slice()
            )));
        }
    }
    if !fixed.is_empty() && m.dim() < 2 && m.distance(&g.source, &g.target) > EPS_MATCH {
        return Err(Error::DimensionTooLow);
    }
    let mut req = ConstructionRequest::new(g.clone(), opts.region.clone()).avoiding(fixed.to_vec());
    req.delta = opts.delta;
    req.tube_rho = opts.tube_rho;
    req.gauge_r = opts.gauge_r;
    req.tol_base = opts.tol_base;
    req.tol_fiber = opts.tol_fiber;
    req.orthogonal_only = opts.orthogonal_only;
    Ok(bisection_through(groupoid, &req)?.word)
}

/// Reject distinct named points that are closer than the working spacing.
fn check_spacing(m: &Manifold, named: &[&Point], spacing: f64) -> Result<()> {
    for j in 0..named.len() {
        for i in 0..j {
            let d = m.distance(named[i], named[j]);
            if d > EPS_MATCH && d < spacing {
                return Err(Error::DegenerateSpacing(format!(
                    "points {:?} and {:?} are {d:e} apart, closer than {spacing:e} but not equal",
                    named[i].as_slice(),
                    named[j].as_slice()
                )));
            }
        }
    }
    Ok(())
}

fn min_separation(m: &Manifold, named: &[&Point]) -> f64 {
    let mut min = f64::INFINITY;
    for j in 0..named.len() {
        for i in 0..j {
            let d = m.distance(named[i], named[j]);
            if d > EPS_MATCH {
                min = min.min(d);
            }
        }
    }
    min
}

/// Auxiliary point far from every named point: seeded batches, keeping the
/// best candidate by clearance, until one clears `margin`.
fn choose_y0(m: &Manifold, region: &Region, named: &[&Point], margin: f64, rng: &mut ChaCha8Rng) -> Result<Point> {
    let score = |p: &Point| {
        named
            .iter()
            .map(|q| m.distance(p, q))
            .fold(region.clearance(m, p), f64::min)
    };
    let mut best: Option<(f64, Point)> = None;
    let mut draws = 0;
    while draws < Y0_MAX_DRAWS {
        for _ in 0..Y0_BATCH.min(Y0_MAX_DRAWS - draws) {
            draws += 1;
            let p = region.sample(m, rng)?;
            let s = score(&p);
            if best.as_ref().is_none_or(|(b, _)| s > *b) {
                best = Some((s, p));
            }
        }
        if let Some((s, p)) = &best {
            if *s >= margin {
                return Ok(p.clone());
            }
        }
    }
    Err(Error::Sampling(format!(
        "no auxiliary point with clearance {margin:e} in {Y0_MAX_DRAWS} draws"
    )))
}

/// Arrow `h₀` from `y0` to `y`: identity fiber map, or the minimal translation.
fn connecting_arrow(groupoid: &Groupoid, y0: &Point, y: &Point) -> GroupoidElement {
    match groupoid.family {
        Family::Pair => GroupoidElement::pair(y0.clone(), y.clone()),
        Family::Frame => GroupoidElement::frame(
            y0.clone(),
            y.clone(),
            nalgebra::DMatrix::identity(groupoid.rank(), groupoid.rank()),
        ),
        Family::Action => GroupoidElement {
            source: y0.clone(),
            target: y.clone(),
            fiber: Fiber::Shift(groupoid.manifold.displacement(y0, y)),
        },
    }
}

/// A finitely generated bisection `s` with `s(x_i) = g_i` for every
/// prescribed arrow, where `x_i = α(g_i)`.
///
/// Chains are broken first, one per round: the chain with the smallest
/// index is cut at its largest index `r` by routing `g_r` to an auxiliary
/// point `y₀` and recording a correction through `h₀: y₀ → β(g_r)`. The
/// remaining independent arrows are well-ordered and each gets a bisection
/// fixing the targets routed before it and the sources still pending. The
/// result is the product of the stages followed by the corrections, last
/// chain first. In the frame family, when every fiber map reverses
/// orientation, the stages route `D·A_i` and one global reflection `D` is
/// appended.
pub fn bisection_through_points(
    groupoid: &Groupoid,
    elements: &[GroupoidElement],
    opts: &MultipointOptions,
) -> Result<MultipointConstruction> {
    let m = &groupoid.manifold;
    if elements.is_empty() {
        return Err(Error::Parameter("at least one element is required".into()));
    }
    for e in elements {
        groupoid.check(e)?;
    }
    let original = base_pairs(elements);
    if let Some(err) = concordance_violation(m, &original) {
        return Err(err);
    }
    if elements.len() > 1 && m.dim() < 2 {
        return Err(Error::DimensionTooLow);
    }
    let mut current: Vec<GroupoidElement> = elements.to_vec();
    let mut reflection = None;
    if groupoid.family == Family::Frame {
        let negative: Vec<bool> = elements
            .iter()
            .map(|e| e.matrix().expect("frame element").determinant() < 0.0)
            .collect();
        if negative.iter().any(|&s| s != negative[0]) {
            return Err(Error::Orientation(
                "fiber maps with both determinant signs cannot lie on one bisection of the \
                 trivial bundle over a connected base"
                    .into(),
            ));
        }
        if negative[0] {
            // route D·A_i through the stages and apply D once at the end
            let d = linalg::reflection(groupoid.rank());
            for e in current.iter_mut() {
                if let Fiber::Map(a) = &mut e.fiber {
                    *a = &d * &*a;
                }
            }
            reflection = Some(d);
        }
    }

    let named: Vec<&Point> = elements.iter().flat_map(|e| [&e.source, &e.target]).collect();
    let spacing = opts.delta.unwrap_or(DEFAULT_TOL_BASE);
    check_spacing(m, &named, spacing)?;
    let margin = opts.delta.unwrap_or_else(|| 0.5 * min_separation(m, &named));

    let chains = find_chains(m, &original);
    let mut corrections = Vec::new();
    let mut correction_words = Vec::new();
    let mut aux: Vec<Point> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut pending = chains.clone();
    while let Some(chain) = pending.first().cloned() {
        let r = *chain.iter().max().expect("chains are non-empty");
        let mut avoid: Vec<&Point> = named.clone();
        avoid.extend(aux.iter());
        let y0 = choose_y0(m, &opts.region, &avoid, margin, &mut rng)?;
        let h0 = connecting_arrow(groupoid, &y0, &current[r].target);
        let g0 = groupoid.compose(&current[r], &groupoid.invert(&h0)?)?;
        let fixed: Vec<Point> = current
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != r)
            .map(|(_, e)| e.target.clone())
            .collect();
        let w = separated_bisection(groupoid, &h0, &fixed, opts)?;
        corrections.push(ChainCorrection {
            chain: chain.clone(),
            broken_at: r,
            y0: y0.clone(),
            generators: w.len(),
        });
        correction_words.push(w);
        current[r] = g0;
        aux.push(y0);

        let pairs = base_pairs(&current);
        if let Some(err) = concordance_violation(m, &pairs) {
            return Err(err);
        }
        let next = find_chains(m, &pairs);
        if next.len() >= pending.len() {
            return Err(Error::NotIndependent("chain breaking did not reduce the chain count".into()));
        }
        pending = next;
    }

    let pairs = base_pairs(&current);
    let ordering = well_order(m, &pairs)?;
    let mut word = BisectionWord::identity(groupoid.family);
    let mut stages = Vec::with_capacity(ordering.len());
    for (k, &idx) in ordering.iter().enumerate() {
        let mut fixed: Vec<Point> = ordering[..k].iter().map(|&j| current[j].target.clone()).collect();
        fixed.extend(ordering[k + 1..].iter().map(|&l| current[l].source.clone()));
        let s = separated_bisection(groupoid, &current[idx], &fixed, opts)?;
        let generators = s.len();
        word = word.concat(&s)?;

        let mut routed = Residual::default();
        for &j in &ordering[..=k] {
            routed = routed.max(residual_at(groupoid, &word, &current[j])?);
        }
        let mut fixes_pending = true;
        for &l in &ordering[k + 1..] {
            let x = &current[l].source;
            if groupoid.eval(&word, x)? != groupoid.unit(x) {
                fixes_pending = false;
            }
        }
        stages.push(StageRecord {
            element: idx,
            generators,
            routed_residual: routed,
            fixes_pending,
        });
    }
    for w in correction_words.iter().rev() {
        word = word.concat(w)?;
    }
    if let Some(d) = reflection {
        word.push(Generator::Global { map: d, sign: 1 });
    }

    let mut residuals = Vec::with_capacity(elements.len());
    for g in elements {
        residuals.push(residual_at(groupoid, &word, g)?);
    }
    let out = MultipointConstruction {
        word,
        chains,
        ordering,
        residuals,
        stages,
        corrections,
    };
    let worst = out.max_residual();
    if worst.base > opts.tol_base {
        return Err(Error::Residual {
            residual: worst.base,
            tolerance: opts.tol_base,
        });
    }
    if worst.fiber > opts.tol_fiber {
        return Err(Error::Residual {
            residual: worst.fiber,
            tolerance: opts.tol_fiber,
        });
    }
    Ok(out)
}
