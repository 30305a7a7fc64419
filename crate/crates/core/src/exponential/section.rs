use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::linalg;
use crate::geometry::bump::radial_profile;
use crate::geometry::{BumpField, BumpScalar, CompactVectorField, Curve, Manifold, Point};
use crate::{Error, Result};

/// Construction parameters of a section; this is what gets serialized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "parameters", rename_all = "kebab-case")]
pub enum SectionSpec {
    /// Tube field of an injective curve. Base motion only; in the frame
    /// family the fiber is transported trivially.
    Tube { curve: Curve, rho: f64 },
    /// Constant translation cut off by a radial bump.
    ActionBump(BumpField),
    /// Isotropy section `χ(p) · S` with `S ∈ gl(k)` and no base motion.
    Gauge {
        center: Point,
        r_in: f64,
        r_out: f64,
        generator: Vec<Vec<f64>>,
    },
}

#[derive(Clone, Debug)]
struct GaugePart {
    bump: BumpScalar,
    generator: DMatrix<f64>,
}

/// A compactly supported algebroid section.
///
/// The base part is the anchor `ρ(X)`, a vector field on `M`. For the
/// action family the Lie-algebra part coincides with the base part, since
/// the torus acts on itself by translation. Both parts vanish exactly
/// outside [`CompactSection::in_support`].
#[derive(Clone, Debug)]
pub struct CompactSection {
    spec: SectionSpec,
    base: Option<CompactVectorField>,
    gauge: Option<GaugePart>,
}

impl PartialEq for CompactSection {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl CompactSection {
    pub fn from_spec(spec: SectionSpec, manifold: &Manifold) -> Result<Self> {
        let (base, gauge) = match &spec {
            SectionSpec::Tube { curve, rho } => (
                Some(CompactVectorField::tube(curve.clone(), *rho, manifold)?),
                None,
            ),
            SectionSpec::ActionBump(b) => {
                manifold.check_dim(&b.center)?;
                let b = BumpField::new(b.center.clone(), b.r_in, b.r_out, b.vector.clone())?;
                (Some(CompactVectorField::bump(b, manifold)), None)
            }
            SectionSpec::Gauge {
                center,
                r_in,
                r_out,
                generator,
            } => {
                manifold.check_dim(center)?;
                let bump = BumpScalar::new(center.clone(), *r_in, *r_out)?;
                let generator = linalg::from_rows(generator)?;
                if !generator.iter().all(|v| v.is_finite()) {
                    return Err(Error::Parameter("gauge generator must be finite".into()));
                }
                (None, Some(GaugePart { bump, generator }))
            }
        };
        Ok(CompactSection { spec, base, gauge })
    }

    pub fn tube(curve: Curve, rho: f64, manifold: &Manifold) -> Result<Self> {
        Self::from_spec(SectionSpec::Tube { curve, rho }, manifold)
    }

    pub fn action_bump(field: BumpField, manifold: &Manifold) -> Result<Self> {
        Self::from_spec(SectionSpec::ActionBump(field), manifold)
    }

    pub fn gauge(
        center: Point,
        r_in: f64,
        r_out: f64,
        generator: &DMatrix<f64>,
        manifold: &Manifold,
    ) -> Result<Self> {
        Self::from_spec(
            SectionSpec::Gauge {
                center,
                r_in,
                r_out,
                generator: linalg::rows(generator),
            },
            manifold,
        )
    }

    pub fn spec(&self) -> &SectionSpec {
        &self.spec
    }

    /// Anchor of the section; `None` for isotropy sections.
    pub fn base_field(&self) -> Option<&CompactVectorField> {
        self.base.as_ref()
    }

    pub fn is_isotropic(&self) -> bool {
        self.base.is_none()
    }

    /// Fiber rank of the gauge part, if any.
    pub fn fiber_rank(&self) -> Option<usize> {
        self.gauge.as_ref().map(|g| g.generator.nrows())
    }

    pub fn in_support(&self, manifold: &Manifold, p: &Point) -> bool {
        match (&self.base, &self.gauge) {
            (Some(b), _) => b.in_support(manifold, p),
            (None, Some(g)) => g.bump.in_support(manifold, p),
            (None, None) => false,
        }
    }

    /// `Λ(p) ∈ gl(k)`; `None` outside the support or without a gauge part.
    pub fn fiber_value(&self, manifold: &Manifold, p: &Point) -> Option<DMatrix<f64>> {
        let g = self.gauge.as_ref()?;
        let r = manifold.distance(&g.bump.center, p);
        if r >= g.bump.r_out {
            return None;
        }
        Some(&g.generator * radial_profile(r, g.bump.r_in, g.bump.r_out))
    }

    /// Support bounding box in unwrapped coordinates.
    pub fn support_bbox(&self) -> (Point, Point) {
        match (&self.base, &self.gauge) {
            (Some(b), _) => b.support_bbox(),
            (None, Some(g)) => (
                g.bump.center.iter().map(|c| c - g.bump.r_out).collect(),
                g.bump.center.iter().map(|c| c + g.bump.r_out).collect(),
            ),
            (None, None) => unreachable!("sections always carry a base or a gauge part"),
        }
    }

    /// Distance from `p` to the support, as a lower bound: exact for bumps,
    /// `dist(p, curve) - rho` for tubes.
    pub fn support_distance(&self, manifold: &Manifold, p: &Point) -> f64 {
        match &self.spec {
            SectionSpec::Tube { rho, .. } => match self.base.as_ref().map(|b| b.kind()) {
                Some(crate::geometry::FieldKind::Tube(t)) => t.distance_to_curve(manifold, p) - rho,
                _ => unreachable!(),
            },
            SectionSpec::ActionBump(b) => manifold.distance(&b.center, p) - b.r_out,
            SectionSpec::Gauge { center, r_out, .. } => manifold.distance(center, p) - r_out,
        }
    }
}

/// Factorization of a fiber map into gauge exponentials and a constant
/// orientation factor.
#[derive(Clone, Debug)]
pub struct GaugeFactors {
    /// Isotropy sections in application order: stretch first, then rotation.
    pub sections: Vec<CompactSection>,
    /// `diag(-1, 1, ..., 1)` when `det A < 0`; applied last, globally.
    pub global: Option<DMatrix<f64>>,
}

/// Isotropy sections at `y` whose time-1 exponentials, followed by the
/// optional global reflection, reproduce `A` on the fiber over `y`.
///
/// `A = D · R · P` with `R = exp(S₁)` the orthogonal polar factor and
/// `P = exp(S₂)` the symmetric one. Each `Sᵢ` is cut off by a bump equal to
/// one on the ball of radius `r/2` around `y` and zero beyond `r`, so the
/// fiber over every point farther than `r` from `y` is untouched. Factors
/// whose logarithm vanishes are dropped.
pub fn gauge_generators(
    a: &DMatrix<f64>,
    y: &Point,
    r: f64,
    orthogonal_only: bool,
    manifold: &Manifold,
) -> Result<GaugeFactors> {
    let k = a.nrows();
    if k == 0 || a.ncols() != k {
        return Err(Error::Parameter("fiber map must be square and non-empty".into()));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Parameter(format!("gauge radius must be > 0, got {r}")));
    }
    linalg::check_conditioning(a)?;
    if orthogonal_only && !linalg::is_orthogonal(a, 1e-10 * k as f64) {
        return Err(Error::Parameter("orthogonal variant needs an orthogonal fiber map".into()));
    }
    let det = a.determinant();
    let (global, a_plus) = if det < 0.0 {
        let d = linalg::reflection(k);
        let rest = &d * a;
        (Some(d), rest)
    } else {
        (None, a.clone())
    };

    let (rot, stretch) = if orthogonal_only {
        (a_plus, DMatrix::identity(k, k))
    } else {
        linalg::polar(&a_plus)
    };
    let mut logs = Vec::new();
    if !orthogonal_only {
        logs.push(linalg::log_spd(&stretch)?);
    }
    logs.push(linalg::log_rotation(&rot)?);

    let mut sections = Vec::new();
    for s in logs {
        if s.iter().all(|v| *v == 0.0) || s.norm() <= 1e-15 {
            continue;
        }
        sections.push(CompactSection::gauge(y.clone(), 0.5 * r, r, &s, manifold)?);
    }
    Ok(GaugeFactors { sections, global })
}
