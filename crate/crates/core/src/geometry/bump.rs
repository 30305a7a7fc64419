use serde::{Deserialize, Serialize};

use super::{Manifold, Point};
use crate::{Error, Result};

/// Largest slope of [`smooth_step`] on `[0, 1]`, attained at `u = 1/2`.
pub const SMOOTH_STEP_MAX_SLOPE: f64 = 2.0;

fn mollifier_tail(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

/// C^∞ monotone transition from 1 (`u <= 0`) to 0 (`u >= 1`), built from the
/// `exp(-1/s)` mollifier tail: `f(1-u) / (f(1-u) + f(u))`.
pub fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        return 1.0;
    }
    if u >= 1.0 {
        return 0.0;
    }
    let a = mollifier_tail(1.0 - u);
    let b = mollifier_tail(u);
    a / (a + b)
}

/// Derivative of [`smooth_step`] with respect to `u`.
pub fn smooth_step_derivative(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        return 0.0;
    }
    let (s, t) = (1.0 - u, u);
    let a = mollifier_tail(s);
    let b = mollifier_tail(t);
    let da = -a / (s * s);
    let db = b / (t * t);
    (da * (a + b) - a * (da + db)) / ((a + b) * (a + b))
}

/// Radial cutoff `χ`: identically 1 on the closed ball of radius `r_in`,
/// identically 0 outside the open ball of radius `r_out`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpScalar {
    pub center: Point,
    pub r_in: f64,
    pub r_out: f64,
}

impl BumpScalar {
    pub fn new(center: Point, r_in: f64, r_out: f64) -> Result<Self> {
        check_radii(r_in, r_out)?;
        Ok(BumpScalar { center, r_in, r_out })
    }

    pub fn value(&self, manifold: &Manifold, x: &Point) -> f64 {
        radial_profile(manifold.distance(&self.center, x), self.r_in, self.r_out)
    }

    /// Open support ball membership; the value is exactly zero outside.
    pub fn in_support(&self, manifold: &Manifold, x: &Point) -> bool {
        manifold.distance(&self.center, x) < self.r_out
    }

    /// Sup norm of the radial derivative.
    pub fn max_slope(&self) -> f64 {
        SMOOTH_STEP_MAX_SLOPE / (self.r_out - self.r_in)
    }
}

pub(crate) fn check_radii(r_in: f64, r_out: f64) -> Result<()> {
    if !(r_in.is_finite() && r_out.is_finite() && 0.0 < r_in && r_in < r_out) {
        return Err(Error::Parameter(format!(
            "bump radii must satisfy 0 < r_in < r_out, got r_in = {r_in}, r_out = {r_out}"
        )));
    }
    Ok(())
}

/// `χ(r)` for a radial distance `r`.
pub fn radial_profile(r: f64, r_in: f64, r_out: f64) -> f64 {
    if r <= r_in {
        1.0
    } else if r >= r_out {
        0.0
    } else {
        smooth_step((r - r_in) / (r_out - r_in))
    }
}

/// Smooth cutoff centred at `center`.
pub fn bump_scalar(center: Point, r_in: f64, r_out: f64) -> Result<BumpScalar> {
    BumpScalar::new(center, r_in, r_out)
}
