//! JSON scene files, construction results and deformation grids.
//!
//! A scene names a groupoid, the arrows a bisection must pass through, the
//! open region it may move, and construction options:
//!
//! ```json
//! {
//!   "manifold": {"kind": "box", "bounds": [[0, 4], [0, 4]]},
//!   "family": "pair",
//!   "elements": [{"x": [1, 1], "y": [3, 2]}],
//!   "region": {"kind": "ball", "center": [2, 2], "radius": 1.9},
//!   "options": {"tube_rho": 0.3, "seed": 7}
//! }
//! ```
//!
//! Frame elements carry `"A"` (row-major rows) and need `"fiber_rank"`;
//! action elements are `{"x": [...], "g": [...]}` on a torus.

use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::groupoid::{Family, Fiber, Groupoid, GroupoidElement, VerificationReport, WordFile};
use crate::multipoint::{bisection_through_points, ChainCorrection, MultipointOptions, StageRecord};
use crate::single_point::{
    residual_at, Residual, DEFAULT_GAUGE_R, DEFAULT_TOL_BASE, DEFAULT_TOL_FIBER, DEFAULT_TUBE_RHO,
};
use crate::{BisectionWord, Error, Manifold, Point, Region, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub manifold: Manifold,
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber_rank: Option<usize>,
    pub elements: Vec<GroupoidElement>,
    #[serde(default = "full_region")]
    pub region: Region,
    #[serde(default)]
    pub options: SceneOptions,
}

fn full_region() -> Region {
    Region::Full
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneOptions {
    pub tube_rho: f64,
    pub gauge_r: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub step: f64,
    pub tol_base: f64,
    pub tol_fiber: f64,
    pub seed: u64,
    /// Verification samples inside the region (and as many outside).
    pub samples: usize,
    pub orthogonal_only: bool,
}

impl Default for SceneOptions {
    fn default() -> Self {
        SceneOptions {
            tube_rho: DEFAULT_TUBE_RHO,
            gauge_r: DEFAULT_GAUGE_R,
            delta: None,
            step: crate::DEFAULT_STEP,
            tol_base: DEFAULT_TOL_BASE,
            tol_fiber: DEFAULT_TOL_FIBER,
            seed: 0,
            samples: 200,
            orthogonal_only: false,
        }
    }
}

impl SceneFile {
    /// Parse and validate; errors carry the line and column of the problem.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut scene: SceneFile = serde_json::from_str(text).map_err(|e| {
            Error::Scene(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        scene.normalize()?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Action targets onto the canonical torus domain.
    fn normalize(&mut self) -> Result<()> {
        if self.family == Family::Action {
            for e in &mut self.elements {
                if let Fiber::Shift(_) = e.fiber {
                    e.target = self.manifold.wrap(&e.target);
                }
            }
        }
        Ok(())
    }

    pub fn groupoid(&self) -> Result<Groupoid> {
        Groupoid::new(self.family, self.manifold.clone(), self.fiber_rank)?.with_step(self.options.step)
    }

    pub fn validate(&self) -> Result<()> {
        let gp = self.groupoid().map_err(|e| Error::Scene(e.to_string()))?;
        self.region
            .validate(&self.manifold)
            .map_err(|e| Error::Scene(format!("region: {e}")))?;
        if self.elements.is_empty() {
            return Err(Error::Scene("elements: at least one element is required".into()));
        }
        for (i, e) in self.elements.iter().enumerate() {
            gp.check(e).map_err(|err| Error::Scene(format!("elements[{i}]: {err}")))?;
        }
        let o = &self.options;
        for (name, v) in [
            ("tube_rho", o.tube_rho),
            ("gauge_r", o.gauge_r),
            ("step", o.step),
            ("tol_base", o.tol_base),
            ("tol_fiber", o.tol_fiber),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Scene(format!("options.{name} must be > 0, got {v}")));
            }
        }
        if let Some(d) = o.delta {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::Scene(format!("options.delta must be > 0, got {d}")));
            }
        }
        Ok(())
    }

    pub fn multipoint_options(&self) -> MultipointOptions {
        let o = &self.options;
        MultipointOptions {
            region: self.region.clone(),
            tube_rho: o.tube_rho,
            gauge_r: o.gauge_r,
            delta: o.delta,
            seed: o.seed,
            tol_base: o.tol_base,
            tol_fiber: o.tol_fiber,
            orthogonal_only: o.orthogonal_only,
        }
    }

    /// Residual of `s(x_i)` against every prescribed arrow.
    pub fn residuals(&self, groupoid: &Groupoid, word: &BisectionWord) -> Result<Vec<Residual>> {
        self.elements.iter().map(|g| residual_at(groupoid, word, g)).collect()
    }

    pub fn residuals_within(&self, residuals: &[Residual]) -> bool {
        residuals
            .iter()
            .all(|r| r.within(self.options.tol_base, self.options.tol_fiber))
    }
}

/// Everything written by a construction run. Contains no timestamps, so
/// equal scenes give byte-identical files.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstructResult {
    pub word: WordFile,
    pub report: VerificationReport,
    pub chains: Vec<Vec<usize>>,
    pub ordering: Vec<usize>,
    pub residuals: Vec<Residual>,
    pub stages: Vec<StageRecord>,
    pub corrections: Vec<ChainCorrection>,
    pub passed: bool,
}

/// Build the bisection of a scene and verify it.
pub fn construct(scene: &SceneFile) -> Result<ConstructResult> {
    let gp = scene.groupoid()?;
    let out = bisection_through_points(&gp, &scene.elements, &scene.multipoint_options())?;
    let report = gp.verify(&out.word, &scene.region, scene.options.samples, scene.options.seed)?;
    let passed = scene.residuals_within(&out.residuals) && report.passes(scene.options.tol_base);
    Ok(ConstructResult {
        word: WordFile::new(&gp, &out.word),
        report,
        chains: out.chains,
        ordering: out.ordering,
        residuals: out.residuals,
        stages: out.stages,
        corrections: out.corrections,
        passed,
    })
}

/// Result of re-verifying a stored word against a scene.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyResult {
    pub report: VerificationReport,
    pub residuals: Vec<Residual>,
    pub residuals_ok: bool,
    pub passed: bool,
}

pub fn verify(scene: &SceneFile, word: &WordFile, samples: usize, seed: u64) -> Result<VerifyResult> {
    let (gp, w) = word.load()?;
    if gp.family != scene.family || gp.manifold != scene.manifold {
        return Err(Error::Scene("word and scene describe different groupoids".into()));
    }
    let report = gp.verify(&w, &scene.region, samples, seed)?;
    let residuals = scene.residuals(&gp, &w)?;
    let residuals_ok = scene.residuals_within(&residuals);
    Ok(VerifyResult {
        passed: residuals_ok && report.passes(scene.options.tol_base),
        report,
        residuals,
        residuals_ok,
    })
}

/// Read a word from either a word file or a construction result.
pub fn read_word(text: &str) -> Result<WordFile> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let word = match value.get("word") {
        Some(w) => w.clone(),
        None => value,
    };
    Ok(serde_json::from_value(word)?)
}

/// One lattice point and its image under the target map.
#[derive(Clone, Debug, PartialEq)]
pub struct GridRow {
    pub x: Point,
    pub y: Point,
    /// Fiber map entries row by row (frame) or the group element (action).
    pub extra: Vec<f64>,
}

/// Lattice with `resolution` points per axis, lexicographic with the first
/// axis varying slowest. Box lattices include both bounds; torus lattices
/// use `P·i/R`.
pub fn lattice(manifold: &Manifold, resolution: usize) -> Vec<Point> {
    let (lo, hi) = manifold.bbox();
    let d = manifold.dim();
    let r = resolution.max(1);
    let coord = |axis: usize, i: usize| -> f64 {
        let (l, h) = (lo[axis], hi[axis]);
        if manifold.is_torus() {
            l + (h - l) * i as f64 / r as f64
        } else if r == 1 {
            0.5 * (l + h)
        } else if i == r - 1 {
            h
        } else {
            l + (h - l) * i as f64 / (r - 1) as f64
        }
    };
    let total = r.pow(d as u32);
    (0..total)
        .map(|mut n| {
            let mut idx = vec![0; d];
            for axis in (0..d).rev() {
                idx[axis] = n % r;
                n /= r;
            }
            (0..d).map(|axis| coord(axis, idx[axis])).collect()
        })
        .collect()
}

pub fn grid(groupoid: &Groupoid, word: &BisectionWord, resolution: usize) -> Result<Vec<GridRow>> {
    lattice(&groupoid.manifold, resolution)
        .into_iter()
        .map(|x| {
            let e = groupoid.eval(word, &x)?;
            let extra = match &e.fiber {
                Fiber::None => Vec::new(),
                Fiber::Map(a) => {
                    let k = a.nrows();
                    (0..k).flat_map(|i| (0..k).map(move |j| (i, j))).map(|(i, j)| a[(i, j)]).collect()
                }
                Fiber::Shift(g) => g.as_slice().to_vec(),
            };
            Ok(GridRow { x, y: e.target, extra })
        })
        .collect()
}

/// CSV header for [`grid`] rows.
pub fn grid_header(groupoid: &Groupoid) -> Vec<String> {
    let d = groupoid.dim();
    let mut cols: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    cols.extend((1..=d).map(|i| format!("y{i}")));
    match groupoid.family {
        Family::Pair => {}
        Family::Frame => {
            let k = groupoid.rank();
            for i in 1..=k {
                for j in 1..=k {
                    cols.push(format!("A{i}{j}"));
                }
            }
        }
        Family::Action => cols.extend((1..=d).map(|i| format!("g{i}"))),
    }
    cols
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::Parameter(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_order_and_bounds() {
        let m = Manifold::unit_box(2, 0.0, 4.0);
        let l = lattice(&m, 3);
        assert_eq!(l.len(), 9);
        assert_eq!(l[0], Point::new(&[0.0, 0.0]));
        assert_eq!(l[1], Point::new(&[0.0, 2.0]));
        assert_eq!(l[8], Point::new(&[4.0, 4.0]));
        let t = lattice(&Manifold::torus(&[1.0, 2.0]), 4);
        assert_eq!(t[5], Point::new(&[0.25, 0.5]));
    }

    #[test]
    fn scene_errors_point_at_the_line() {
        let text = "{\n  \"manifold\": {\"kind\": \"box\", \"bounds\": [[0, 4], [0, 4]]},\n  \"family\": \"pear\",\n  \"elements\": []\n}";
        let err = SceneFile::from_json(text).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn scene_defaults_and_validation() {
        let text = r#"{"manifold": {"kind": "box", "bounds": [[0, 4], [0, 4]]},
                       "family": "pair",
                       "elements": [{"x": [1, 1], "y": [3, 2]}]}"#;
        let s = SceneFile::from_json(text).unwrap();
        assert_eq!(s.region, Region::Full);
        assert_eq!(s.options, SceneOptions::default());
        let bad = text.replace("[3, 2]", "[5, 2]");
        assert!(matches!(SceneFile::from_json(&bad), Err(Error::Scene(_))));
        let frame = r#"{"manifold": {"kind": "box", "bounds": [[0, 4], [0, 4]]},
                        "family": "frame", "fiber_rank": 2,
                        "elements": [{"x": [1, 1], "y": [3, 2], "A": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]}]}"#;
        assert!(matches!(SceneFile::from_json(frame), Err(Error::Scene(_))));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = std::env::temp_dir().join(format!("bisect-atomic-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("out.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(&dir).unwrap().count(), 1);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
