use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::exponential::linalg;
use crate::geometry::{Manifold, Point};
use crate::{Error, Result, EPS_MATCH};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// `M × M`.
    Pair,
    /// Invertible linear maps between fibers of `M × R^k`.
    Frame,
    /// The torus acting on itself by translation.
    Action,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Pair => "pair",
            Family::Frame => "frame",
            Family::Action => "action",
        })
    }
}

/// Family-specific part of an element beyond its source and target.
#[derive(Clone, Debug, PartialEq)]
pub enum Fiber {
    None,
    /// Linear map `E_x → E_y`.
    Map(DMatrix<f64>),
    /// Torus element `g` with `y = x + g`. Kept unreduced: it is the
    /// displacement in the universal cover.
    Shift(Point),
}

/// An arrow `x → y` of one of the three families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ElementRepr", into = "ElementRepr")]
pub struct GroupoidElement {
    pub source: Point,
    pub target: Point,
    pub fiber: Fiber,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ElementRepr {
    x: Point,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y: Option<Point>,
    #[serde(default, rename = "A", skip_serializing_if = "Option::is_none")]
    a: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    g: Option<Point>,
}

impl TryFrom<ElementRepr> for GroupoidElement {
    type Error = String;

    fn try_from(r: ElementRepr) -> std::result::Result<Self, String> {
        match (r.y, r.a, r.g) {
            (Some(y), None, None) => Ok(GroupoidElement::pair(r.x, y)),
            (Some(y), Some(a), None) => {
                let a = linalg::from_rows(&a).map_err(|e| e.to_string())?;
                Ok(GroupoidElement::frame(r.x, y, a))
            }
            (y, None, Some(g)) => {
                let target = y.unwrap_or_else(|| &r.x + &g);
                Ok(GroupoidElement {
                    source: r.x,
                    target,
                    fiber: Fiber::Shift(g),
                })
            }
            _ => Err("element needs {x, y}, {x, y, A} or {x, g}".into()),
        }
    }
}

impl From<GroupoidElement> for ElementRepr {
    fn from(e: GroupoidElement) -> Self {
        match e.fiber {
            Fiber::None => ElementRepr {
                x: e.source,
                y: Some(e.target),
                a: None,
                g: None,
            },
            Fiber::Map(a) => ElementRepr {
                x: e.source,
                y: Some(e.target),
                a: Some(linalg::rows(&a)),
                g: None,
            },
            Fiber::Shift(g) => ElementRepr {
                x: e.source,
                y: Some(e.target),
                a: None,
                g: Some(g),
            },
        }
    }
}

impl GroupoidElement {
    pub fn pair(x: Point, y: Point) -> Self {
        GroupoidElement {
            source: x,
            target: y,
            fiber: Fiber::None,
        }
    }

    pub fn frame(x: Point, y: Point, a: DMatrix<f64>) -> Self {
        GroupoidElement {
            source: x,
            target: y,
            fiber: Fiber::Map(a),
        }
    }

    /// Action element `(x, g)`; the target `x + g` is wrapped onto the torus.
    pub fn action(manifold: &Manifold, x: Point, g: Point) -> Self {
        let target = manifold.wrap(&(&x + &g));
        GroupoidElement {
            source: x,
            target,
            fiber: Fiber::Shift(g),
        }
    }

    pub fn family(&self) -> Family {
        match self.fiber {
            Fiber::None => Family::Pair,
            Fiber::Map(_) => Family::Frame,
            Fiber::Shift(_) => Family::Action,
        }
    }

    pub fn alpha(&self) -> &Point {
        &self.source
    }

    pub fn beta(&self) -> &Point {
        &self.target
    }

    pub fn matrix(&self) -> Option<&DMatrix<f64>> {
        match &self.fiber {
            Fiber::Map(a) => Some(a),
            _ => None,
        }
    }

    pub fn shift(&self) -> Option<&Point> {
        match &self.fiber {
            Fiber::Shift(g) => Some(g),
            _ => None,
        }
    }
}

/// One of the three concrete Lie groupoids over a flat base.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Groupoid {
    pub family: Family,
    pub manifold: Manifold,
    /// Rank `k` of the trivial bundle (frame family only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber_rank: Option<usize>,
    /// Fixed RK4 step used for every flow.
    pub step: f64,
}

impl Groupoid {
    pub fn new(family: Family, manifold: Manifold, fiber_rank: Option<usize>) -> Result<Self> {
        manifold.validate()?;
        match family {
            Family::Frame => match fiber_rank {
                Some(k) if k >= 1 => {}
                _ => return Err(Error::Parameter("frame family needs fiber_rank >= 1".into())),
            },
            Family::Action if !manifold.is_torus() => {
                return Err(Error::Parameter("action family needs a torus base".into()))
            }
            _ => {}
        }
        Ok(Groupoid {
            family,
            manifold,
            fiber_rank: if family == Family::Frame { fiber_rank } else { None },
            step: crate::DEFAULT_STEP,
        })
    }

    pub fn pair(manifold: Manifold) -> Result<Self> {
        Self::new(Family::Pair, manifold, None)
    }

    pub fn frame(manifold: Manifold, k: usize) -> Result<Self> {
        Self::new(Family::Frame, manifold, Some(k))
    }

    pub fn action(manifold: Manifold) -> Result<Self> {
        Self::new(Family::Action, manifold, None)
    }

    pub fn with_step(mut self, step: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::Parameter(format!("step must be > 0, got {step}")));
        }
        self.step = step;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.manifold.dim()
    }

    pub fn rank(&self) -> usize {
        self.fiber_rank.unwrap_or(0)
    }

    /// Validate an element: family, dimensions, fiber shape, and for the
    /// action family consistency of `y` with `x + g`.
    pub fn check(&self, e: &GroupoidElement) -> Result<()> {
        if e.family() != self.family {
            return Err(Error::FamilyMismatch(format!(
                "{} element in a {} groupoid",
                e.family(),
                self.family
            )));
        }
        self.manifold.check_dim(&e.source)?;
        self.manifold.check_dim(&e.target)?;
        for p in [&e.source, &e.target] {
            if !self.manifold.contains(p) {
                return Err(Error::Parameter(format!(
                    "point {:?} is not on the manifold",
                    p.as_slice()
                )));
            }
        }
        match &e.fiber {
            Fiber::None => {}
            Fiber::Map(a) => {
                let k = self.rank();
                if a.nrows() != k || a.ncols() != k {
                    return Err(Error::Dimension {
                        expected: k,
                        got: a.nrows(),
                    });
                }
                linalg::check_conditioning(a)?;
            }
            Fiber::Shift(g) => {
                self.manifold.check_dim(g)?;
                let gap = self.manifold.distance(&(&e.source + g), &e.target);
                if gap > EPS_MATCH {
                    return Err(Error::Parameter(format!(
                        "action element target is {gap:e} away from x + g"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn unit(&self, x: &Point) -> GroupoidElement {
        let fiber = match self.family {
            Family::Pair => Fiber::None,
            Family::Frame => Fiber::Map(DMatrix::identity(self.rank(), self.rank())),
            Family::Action => Fiber::Shift(Point::zeros(x.dim())),
        };
        GroupoidElement {
            source: x.clone(),
            target: x.clone(),
            fiber,
        }
    }

    /// `gh`: first `g`, then `h`. Frame maps compose as `B·A`.
    pub fn compose(&self, g: &GroupoidElement, h: &GroupoidElement) -> Result<GroupoidElement> {
        if g.family() != h.family() || g.family() != self.family {
            return Err(Error::FamilyMismatch(format!(
                "cannot compose {} with {} in a {} groupoid",
                g.family(),
                h.family(),
                self.family
            )));
        }
        let distance = self.manifold.distance(&g.target, &h.source);
        if distance > EPS_MATCH {
            return Err(Error::NotComposable { distance });
        }
        let fiber = match (&g.fiber, &h.fiber) {
            (Fiber::None, Fiber::None) => Fiber::None,
            (Fiber::Map(a), Fiber::Map(b)) => Fiber::Map(b * a),
            (Fiber::Shift(a), Fiber::Shift(b)) => Fiber::Shift(a + b),
            _ => unreachable!("families checked above"),
        };
        Ok(GroupoidElement {
            source: g.source.clone(),
            target: h.target.clone(),
            fiber,
        })
    }

    pub fn invert(&self, g: &GroupoidElement) -> Result<GroupoidElement> {
        let fiber = match &g.fiber {
            Fiber::None => Fiber::None,
            Fiber::Map(a) => {
                if a.is_identity(0.0) {
                    Fiber::Map(a.clone())
                } else {
                    Fiber::Map(linalg::inverse(a)?)
                }
            }
            Fiber::Shift(s) => Fiber::Shift(-s),
        };
        Ok(GroupoidElement {
            source: g.target.clone(),
            target: g.source.clone(),
            fiber,
        })
    }

    /// Residuals between two elements: `(base, fiber)` where base is the
    /// larger of the source and target distances and fiber is the Frobenius
    /// norm of the matrix difference, or the torus distance of the group parts.
    pub fn residual(&self, a: &GroupoidElement, b: &GroupoidElement) -> (f64, f64) {
        let m = &self.manifold;
        let base = m.distance(&a.source, &b.source).max(m.distance(&a.target, &b.target));
        let fiber = match (&a.fiber, &b.fiber) {
            (Fiber::Map(p), Fiber::Map(q)) if p.shape() == q.shape() => (p - q).norm(),
            (Fiber::Shift(p), Fiber::Shift(q)) => m.distance(&m.wrap(p), &m.wrap(q)),
            (Fiber::None, Fiber::None) => 0.0,
            _ => f64::INFINITY,
        };
        (base, fiber)
    }

    pub fn is_unit(&self, e: &GroupoidElement) -> bool {
        self.residual(e, &self.unit(&e.source)) == (0.0, 0.0)
    }
}
