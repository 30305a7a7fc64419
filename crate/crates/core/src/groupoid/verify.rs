use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BisectionWord, Groupoid};
use crate::geometry::{Point, Region};
use crate::{Result, EPS_MATCH};

/// Sampling evidence that a word is a bisection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// Largest `d(α(s(x)), x)`; zero by construction.
    pub max_source_error: f64,
    /// Largest deviation of `s(x) · s⁻¹(β(s(x)))` from the unit over `x`,
    /// base and fiber parts combined.
    pub max_roundtrip_error: f64,
    /// Smallest finite-difference Jacobian determinant of `β ∘ s`.
    pub min_target_jacobian_det: f64,
    pub samples_used: usize,
    /// Every sampled point outside the region is mapped to its unit bitwise.
    pub identity_outside_region: bool,
    /// No two sampled images coincide unless their sources do.
    pub injective_ok: bool,
}

impl VerificationReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_source_error == 0.0
            && self.max_roundtrip_error <= tol
            && self.min_target_jacobian_det > 0.0
            && self.identity_outside_region
            && self.injective_ok
    }
}

const FD_STEP: f64 = 1e-5;

impl Groupoid {
    /// Finite-difference Jacobian of the target map at `x`.
    pub fn target_jacobian(&self, word: &BisectionWord, x: &Point) -> Result<DMatrix<f64>> {
        let d = self.dim();
        let mut jac = DMatrix::zeros(d, d);
        for j in 0..d {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += FD_STEP;
            xm[j] -= FD_STEP;
            let (xp, xm) = (self.manifold.wrap(&xp), self.manifold.wrap(&xm));
            let yp = self.eval_target(word, &xp)?;
            let ym = self.eval_target(word, &xm)?;
            let diff = self.manifold.displacement(&ym, &yp);
            for i in 0..d {
                jac[(i, j)] = diff[i] / (2.0 * FD_STEP);
            }
        }
        Ok(jac)
    }

    /// Sample `n_samples` points of `region` and as many outside it, and
    /// collect the checks of [`VerificationReport`].
    ///
    /// Outside samples are drawn from the whole manifold and from the
    /// support boxes of the generators, so that a generator leaking out of
    /// the region is actually probed.
    pub fn verify(
        &self,
        word: &BisectionWord,
        region: &Region,
        n_samples: usize,
        seed: u64,
    ) -> Result<VerificationReport> {
        let n = n_samples.max(1);
        let m = &self.manifold;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inverse = word.inverse();

        let mut inside = Vec::with_capacity(n);
        for _ in 0..n {
            inside.push(region.sample(m, &mut rng)?);
        }

        let mut report = VerificationReport {
            max_source_error: 0.0,
            max_roundtrip_error: 0.0,
            min_target_jacobian_det: f64::INFINITY,
            samples_used: 0,
            identity_outside_region: true,
            injective_ok: true,
        };
        let mut images = Vec::with_capacity(n);
        for x in &inside {
            let e = self.eval(word, x)?;
            report.max_source_error = report.max_source_error.max(m.distance(&e.source, x));
            let back = self.eval(&inverse, &e.target)?;
            let round = self.compose(&e, &back)?;
            let (base, fiber) = self.residual(&round, &self.unit(x));
            report.max_roundtrip_error = report.max_roundtrip_error.max(base).max(fiber);
            let det = self.target_jacobian(word, x)?.determinant();
            report.min_target_jacobian_det = report.min_target_jacobian_det.min(det);
            images.push(e.target);
            report.samples_used += 1;
        }
        for i in 0..inside.len() {
            for j in 0..i {
                if m.distance(&images[i], &images[j]) <= EPS_MATCH
                    && m.distance(&inside[i], &inside[j]) > EPS_MATCH
                {
                    report.injective_ok = false;
                }
            }
        }

        let mut outside = Vec::new();
        let mut draws = 0;
        while outside.len() < n && draws < 50 * n {
            draws += 1;
            let p = m.sample(&mut rng);
            if !region.contains(m, &p) {
                outside.push(p);
            }
        }
        for g in word.generators() {
            if let Some(section) = g.section() {
                let (lo, hi) = section.support_bbox();
                for _ in 0..n.div_ceil(word.len().max(1)) {
                    let p: Point = lo
                        .iter()
                        .zip(hi.iter())
                        .map(|(l, h)| l + (h - l) * rand::Rng::gen::<f64>(&mut rng))
                        .collect();
                    let p = m.wrap(&p);
                    if m.contains(&p) && !region.contains(m, &p) {
                        outside.push(p);
                    }
                }
            }
        }
        for p in &outside {
            let e = self.eval(word, p)?;
            if e != self.unit(p) || !e.target.bitwise_eq(p) {
                report.identity_outside_region = false;
            }
            report.samples_used += 1;
        }
        if inside.is_empty() {
            report.min_target_jacobian_det = 1.0;
        }
        Ok(report)
    }
}
