use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Family, Fiber, Groupoid, GroupoidElement};
use crate::exponential::{linalg, CompactSection, SectionSpec};
use crate::geometry::flow::flow_unwrapped;
use crate::geometry::{BumpField, Curve, Manifold, Point};
use crate::{Error, Result};

/// One letter of a bisection word.
#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug, PartialEq)]
pub enum Generator {
    /// `exp(sign · time · X)`.
    Exp {
        section: CompactSection,
        time: f64,
        sign: i8,
    },
    /// A fiber map applied uniformly over the whole base (frame family).
    /// Used only for the orientation-reversing factor, which no compactly
    /// supported exponential can produce.
    Global { map: DMatrix<f64>, sign: i8 },
}

impl Generator {
    pub fn exp(section: CompactSection, time: f64) -> Self {
        Generator::Exp {
            section,
            time,
            sign: 1,
        }
    }

    pub fn sign(&self) -> i8 {
        match self {
            Generator::Exp { sign, .. } | Generator::Global { sign, .. } => *sign,
        }
    }

    pub fn flipped(&self) -> Self {
        let mut g = self.clone();
        match &mut g {
            Generator::Exp { sign, .. } | Generator::Global { sign, .. } => *sign = -*sign,
        }
        g
    }

    pub fn section(&self) -> Option<&CompactSection> {
        match self {
            Generator::Exp { section, .. } => Some(section),
            Generator::Global { .. } => None,
        }
    }

    pub fn is_global(&self) -> bool {
        matches!(self, Generator::Global { .. })
    }

    /// True when the generator provably leaves everything over `p` alone.
    pub fn fixes(&self, manifold: &Manifold, p: &Point) -> bool {
        match self {
            Generator::Exp { section, time, .. } => *time == 0.0 || !section.in_support(manifold, p),
            Generator::Global { map, .. } => map.is_identity(0.0),
        }
    }
}

/// A finite product `exp(t₁X₁) ⋯ exp(t_kX_k)`, evaluated left to right.
#[derive(Clone, Debug, PartialEq)]
pub struct BisectionWord {
    family: Family,
    generators: Vec<Generator>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordMetadata {
    pub length: usize,
    pub exponentials: usize,
    pub tube_generators: usize,
    pub gauge_generators: usize,
    pub bump_generators: usize,
    /// Number of globally constant fiber factors (not exponentials).
    pub global_factors: usize,
}

impl BisectionWord {
    pub fn identity(family: Family) -> Self {
        BisectionWord {
            family,
            generators: Vec::new(),
        }
    }

    pub fn from_generators(family: Family, generators: Vec<Generator>) -> Self {
        BisectionWord { family, generators }
    }

    pub fn single(family: Family, generator: Generator) -> Self {
        Self::from_generators(family, vec![generator])
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn push(&mut self, g: Generator) {
        self.generators.push(g);
    }

    /// `sw`: the word `s` followed by `w`.
    pub fn concat(&self, w: &BisectionWord) -> Result<BisectionWord> {
        if self.family != w.family {
            return Err(Error::FamilyMismatch(format!(
                "cannot multiply a {} word by a {} word",
                self.family, w.family
            )));
        }
        let mut generators = self.generators.clone();
        generators.extend(w.generators.iter().cloned());
        Ok(BisectionWord {
            family: self.family,
            generators,
        })
    }

    /// Formal inverse: reversed letters with flipped signs.
    pub fn inverse(&self) -> BisectionWord {
        BisectionWord {
            family: self.family,
            generators: self.generators.iter().rev().map(Generator::flipped).collect(),
        }
    }

    /// True when every generator leaves `p` alone, so evaluation there is
    /// the unit bitwise.
    pub fn fixes(&self, manifold: &Manifold, p: &Point) -> bool {
        self.generators.iter().all(|g| g.fixes(manifold, p))
    }

    pub fn has_global_factor(&self) -> bool {
        self.generators.iter().any(Generator::is_global)
    }

    pub fn metadata(&self) -> WordMetadata {
        let mut m = WordMetadata {
            length: self.len(),
            exponentials: 0,
            tube_generators: 0,
            gauge_generators: 0,
            bump_generators: 0,
            global_factors: 0,
        };
        for g in &self.generators {
            match g.section().map(CompactSection::spec) {
                Some(SectionSpec::Tube { .. }) => m.tube_generators += 1,
                Some(SectionSpec::Gauge { .. }) => m.gauge_generators += 1,
                Some(SectionSpec::ActionBump(_)) => m.bump_generators += 1,
                None => m.global_factors += 1,
            }
        }
        m.exponentials = m.length - m.global_factors;
        m
    }
}

struct EvalState {
    /// Target in unwrapped coordinates.
    y: Point,
    a: Option<DMatrix<f64>>,
}

impl Groupoid {
    fn check_word(&self, word: &BisectionWord) -> Result<()> {
        if word.family != self.family {
            return Err(Error::FamilyMismatch(format!(
                "{} word evaluated in a {} groupoid",
                word.family, self.family
            )));
        }
        Ok(())
    }

    fn apply(&self, g: &Generator, st: &mut EvalState) -> Result<()> {
        match g {
            Generator::Exp {
                section,
                time,
                sign,
            } => {
                let t = time * f64::from(*sign);
                if let Some(field) = section.base_field() {
                    // tube and bump sections transport the fiber trivially
                    if let Some(y) = flow_unwrapped(&self.manifold, field, t, &st.y, self.step)? {
                        st.y = y;
                    }
                } else if let Some(a) = st.a.as_mut() {
                    // isotropy: the base point is fixed, so A' = Λ(y)A has
                    // the closed-form solution exp(tΛ(y))A
                    if let Some(l) = section.fiber_value(&self.manifold, &st.y) {
                        *a = linalg::expm(&(l * t)) * &*a;
                    }
                }
            }
            Generator::Global { map, sign } => {
                if let Some(a) = st.a.as_mut() {
                    *a = if *sign >= 0 {
                        map * &*a
                    } else {
                        linalg::inverse(map)? * &*a
                    };
                }
            }
        }
        Ok(())
    }

    /// `s(x)`: the arrow obtained by applying the generators of `s` in order,
    /// starting from the unit over `x`. The source is `x` itself.
    pub fn eval(&self, word: &BisectionWord, x: &Point) -> Result<GroupoidElement> {
        self.check_word(word)?;
        self.manifold.check_dim(x)?;
        let mut st = EvalState {
            y: x.clone(),
            a: match self.family {
                Family::Frame => Some(DMatrix::identity(self.rank(), self.rank())),
                _ => None,
            },
        };
        for g in &word.generators {
            self.apply(g, &mut st)?;
        }
        let fiber = match self.family {
            Family::Pair => Fiber::None,
            Family::Frame => Fiber::Map(st.a.take().expect("frame state")),
            Family::Action => Fiber::Shift(&st.y - x),
        };
        Ok(GroupoidElement {
            source: x.clone(),
            target: self.manifold.wrap(&st.y),
            fiber,
        })
    }

    /// `β(s(x))` without tracking the fiber.
    pub fn eval_target(&self, word: &BisectionWord, x: &Point) -> Result<Point> {
        self.check_word(word)?;
        self.manifold.check_dim(x)?;
        let mut st = EvalState { y: x.clone(), a: None };
        for g in &word.generators {
            if g.section().is_some_and(|s| s.base_field().is_some()) {
                self.apply(g, &mut st)?;
            }
        }
        Ok(self.manifold.wrap(&st.y))
    }

    /// Single-generator word `exp(tX)`.
    pub fn exp_word(&self, section: CompactSection, t: f64) -> BisectionWord {
        BisectionWord::single(self.family, Generator::exp(section, t))
    }
}

/// Serialized form of a generator: `{type, parameters, t, sign}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratorRecord {
    #[serde(flatten)]
    pub spec: GeneratorSpec,
    pub t: f64,
    pub sign: i8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "parameters", rename_all = "kebab-case")]
pub enum GeneratorSpec {
    Tube {
        curve: Curve,
        rho: f64,
    },
    ActionBump(BumpField),
    Gauge {
        center: Point,
        r_in: f64,
        r_out: f64,
        generator: Vec<Vec<f64>>,
    },
    Constant {
        map: Vec<Vec<f64>>,
    },
}

impl From<SectionSpec> for GeneratorSpec {
    fn from(s: SectionSpec) -> Self {
        match s {
            SectionSpec::Tube { curve, rho } => GeneratorSpec::Tube { curve, rho },
            SectionSpec::ActionBump(b) => GeneratorSpec::ActionBump(b),
            SectionSpec::Gauge {
                center,
                r_in,
                r_out,
                generator,
            } => GeneratorSpec::Gauge {
                center,
                r_in,
                r_out,
                generator,
            },
        }
    }
}

/// Self-describing word file: the groupoid it lives in plus its letters.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WordFile {
    pub family: Family,
    pub manifold: Manifold,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber_rank: Option<usize>,
    pub step: f64,
    pub generators: Vec<GeneratorRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<WordMetadata>,
}

impl WordFile {
    pub fn new(groupoid: &Groupoid, word: &BisectionWord) -> Self {
        let generators = word
            .generators
            .iter()
            .map(|g| match g {
                Generator::Exp {
                    section,
                    time,
                    sign,
                } => GeneratorRecord {
                    spec: section.spec().clone().into(),
                    t: *time,
                    sign: *sign,
                },
                Generator::Global { map, sign } => GeneratorRecord {
                    spec: GeneratorSpec::Constant {
                        map: linalg::rows(map),
                    },
                    t: 1.0,
                    sign: *sign,
                },
            })
            .collect();
        WordFile {
            family: groupoid.family,
            manifold: groupoid.manifold.clone(),
            fiber_rank: groupoid.fiber_rank,
            step: groupoid.step,
            generators,
            metadata: Some(word.metadata()),
        }
    }

    /// Rebuild the groupoid and the word, re-running every section check.
    pub fn load(&self) -> Result<(Groupoid, BisectionWord)> {
        let groupoid =
            Groupoid::new(self.family, self.manifold.clone(), self.fiber_rank)?.with_step(self.step)?;
        let mut generators = Vec::with_capacity(self.generators.len());
        for (i, rec) in self.generators.iter().enumerate() {
            if rec.sign != 1 && rec.sign != -1 {
                return Err(Error::Parameter(format!(
                    "generator {i}: sign must be +1 or -1, got {}",
                    rec.sign
                )));
            }
            if !rec.t.is_finite() {
                return Err(Error::Parameter(format!("generator {i}: time must be finite")));
            }
            let section_spec = match rec.spec.clone() {
                GeneratorSpec::Constant { map } => {
                    if groupoid.family != Family::Frame {
                        return Err(Error::Parameter(format!(
                            "generator {i}: constant fiber maps need the frame family"
                        )));
                    }
                    let map = linalg::from_rows(&map)?;
                    if map.nrows() != groupoid.rank() {
                        return Err(Error::Dimension {
                            expected: groupoid.rank(),
                            got: map.nrows(),
                        });
                    }
                    linalg::check_conditioning(&map)?;
                    generators.push(Generator::Global { map, sign: rec.sign });
                    continue;
                }
                GeneratorSpec::Tube { curve, rho } => SectionSpec::Tube { curve, rho },
                GeneratorSpec::ActionBump(b) => SectionSpec::ActionBump(b),
                GeneratorSpec::Gauge {
                    center,
                    r_in,
                    r_out,
                    generator,
                } => {
                    if groupoid.family != Family::Frame || generator.len() != groupoid.rank() {
                        return Err(Error::Parameter(format!(
                            "generator {i}: gauge sections need the frame family of matching rank"
                        )));
                    }
                    SectionSpec::Gauge {
                        center,
                        r_in,
                        r_out,
                        generator,
                    }
                }
            };
            let section = CompactSection::from_spec(section_spec, &groupoid.manifold)
                .map_err(|e| Error::Parameter(format!("generator {i}: {e}")))?;
            generators.push(Generator::Exp {
                section,
                time: rec.t,
                sign: rec.sign,
            });
        }
        Ok((groupoid, BisectionWord::from_generators(self.family, generators)))
    }
}
