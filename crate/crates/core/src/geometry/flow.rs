//! Fixed-step classical Runge-Kutta integration.

use super::{CompactVectorField, Manifold, Point};
use crate::{Error, Result};

/// Step schedule for integrating over time `t` with nominal step `h`:
/// uniform steps of size `t / n` when `|t| / h` is (numerically) an integer,
/// otherwise full steps followed by one shortened step.
pub fn schedule(t: f64, h: f64) -> Result<Vec<f64>> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Parameter(format!("step must be > 0, got {h}")));
    }
    if !t.is_finite() {
        return Err(Error::Parameter(format!("time must be finite, got {t}")));
    }
    if t == 0.0 {
        return Ok(Vec::new());
    }
    let ratio = t.abs() / h;
    let n = ratio.round();
    if n >= 1.0 && (ratio - n).abs() <= 1e-9 * ratio {
        return Ok(vec![t / n; n as usize]);
    }
    let full = ratio.floor() as usize;
    let mut steps = vec![h.copysign(t); full];
    let rest = t - h.copysign(t) * full as f64;
    if rest != 0.0 {
        steps.push(rest);
    }
    Ok(steps)
}

/// One classical RK4 step of `y' = f(y)` on a flat state vector.
pub fn rk4_step<F>(y: &mut [f64], dt: f64, f: &F, scratch: &mut Rk4Scratch)
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = y.len();
    scratch.resize(n);
    let Rk4Scratch { k1, k2, k3, k4, tmp } = scratch;
    f(y, k1);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * dt * k1[i];
    }
    f(tmp, k2);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * dt * k2[i];
    }
    f(tmp, k3);
    for i in 0..n {
        tmp[i] = y[i] + dt * k3[i];
    }
    f(tmp, k4);
    for i in 0..n {
        y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

#[derive(Default)]
pub struct Rk4Scratch {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Scratch {
    fn resize(&mut self, n: usize) {
        for v in [&mut self.k1, &mut self.k2, &mut self.k3, &mut self.k4, &mut self.tmp] {
            v.resize(n, 0.0);
        }
    }
}

/// Integrate `y' = f(y)` over time `t` with fixed step `h`.
pub fn integrate<F>(y: &mut [f64], t: f64, h: f64, f: F) -> Result<()>
where
    F: Fn(&[f64], &mut [f64]),
{
    let mut scratch = Rk4Scratch::default();
    for dt in schedule(t, h)? {
        rk4_step(y, dt, &f, &mut scratch);
    }
    Ok(())
}

/// Time-`t` flow of a compactly supported field in unwrapped coordinates.
/// Returns `None` (no motion) when `x` starts outside the support.
pub fn flow_unwrapped(
    manifold: &Manifold,
    field: &CompactVectorField,
    t: f64,
    x: &Point,
    h: f64,
) -> Result<Option<Point>> {
    let steps = schedule(t, h)?;
    if steps.is_empty() || !field.in_support(manifold, x) {
        return Ok(None);
    }
    let mut y = x.clone();
    let mut scratch = Rk4Scratch::default();
    let f = |s: &[f64], out: &mut [f64]| {
        let v = field.evaluate(manifold, &Point::new(s));
        out.copy_from_slice(v.as_slice());
    };
    for dt in steps {
        rk4_step(y.as_mut_slice(), dt, &f, &mut scratch);
    }
    Ok(Some(y))
}

/// Time-`t` flow of `field` from `x`: RK4 with fixed step `h`, last step
/// shortened. Points outside the support are returned unchanged.
pub fn flow(manifold: &Manifold, field: &CompactVectorField, t: f64, x: &Point, h: f64) -> Result<Point> {
    manifold.check_dim(x)?;
    Ok(match flow_unwrapped(manifold, field, t, x, h)? {
        Some(y) => manifold.wrap(&y),
        None => x.clone(),
    })
}
