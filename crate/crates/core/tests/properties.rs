use std::collections::HashSet;

use bisect_core::exponential::{gauge_generators, linalg, CompactSection};
use bisect_core::geometry::flow::flow;
use bisect_core::geometry::{BumpField, CompactVectorField};
use bisect_core::groupoid::{Generator, WordFile};
use bisect_core::multipoint::{find_chains, is_concordant, is_independent, is_well_ordered, well_order, BasePair};
use bisect_core::{BisectionWord, Family, Groupoid, GroupoidElement, Manifold, Point, Region};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-3;

fn pt2(r: std::ops::Range<f64>) -> impl Strategy<Value = Point> {
    (r.clone(), r).prop_map(|(a, b)| Point::new(&[a, b]))
}

fn manifold(torus: bool) -> Manifold {
    if torus {
        Manifold::torus(&[4.0, 4.0])
    } else {
        Manifold::unit_box(2, 0.0, 4.0)
    }
}

/// Bump field and a base point near it.
fn bump_case() -> impl Strategy<Value = (bool, BumpField, Point)> {
    (any::<bool>(), pt2(1.3..2.7), 0.4f64..1.2, 0.2f64..0.6, pt2(-1.0..1.0), pt2(-1.0..1.0)).prop_map(
        |(torus, c, r_out, frac, v, off)| {
            let x = Point::new(&[c[0] + off[0] * r_out, c[1] + off[1] * r_out]);
            (torus, BumpField::new(c, frac * r_out, r_out, v).unwrap(), x)
        },
    )
}

fn matrix3() -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(-2.0f64..2.0, 9).prop_map(|v| DMatrix::from_row_slice(3, 3, &v))
}

fn well_conditioned3() -> impl Strategy<Value = DMatrix<f64>> {
    matrix3().prop_filter("cond < 100", |a| linalg::condition_number(a) < 100.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn flow_group_law_and_inverse((torus, b, x) in bump_case(), s in 0.05f64..0.6, t in 0.05f64..0.6) {
        let m = manifold(torus);
        let f = CompactVectorField::bump(b, &m);
        let x = m.wrap(&x);
        let direct = flow(&m, &f, s + t, &x, H).unwrap();
        let steps = flow(&m, &f, t, &flow(&m, &f, s, &x, H).unwrap(), H).unwrap();
        prop_assert!(m.distance(&direct, &steps) <= 1e-6);
        let back = flow(&m, &f, -t, &flow(&m, &f, t, &x, H).unwrap(), H).unwrap();
        prop_assert!(m.distance(&back, &x) <= 1e-6);
    }

    #[test]
    fn support_exactness((torus, b, _) in bump_case(), q in pt2(0.0..4.0), t in -1.0f64..1.0) {
        let m = manifold(torus);
        let f = CompactVectorField::bump(b, &m);
        prop_assume!(!f.in_support(&m, &q));
        prop_assert!(f.evaluate(&m, &q).as_slice().iter().all(|v| v.to_bits() == 0));
        prop_assert!(flow(&m, &f, t, &q, H).unwrap().bitwise_eq(&q));
    }

    #[test]
    fn region_clearance_implies_membership(c in pt2(0.5..3.5), r in 0.1f64..2.0, q in pt2(0.0..4.0), seed in any::<u64>()) {
        let m = manifold(false);
        let region = Region::ball(c, r);
        if region.clearance(&m, &q) > 0.0 {
            prop_assert!(region.contains(&m, &q));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if let Ok(s) = region.sample(&m, &mut rng) {
            prop_assert!(region.contains(&m, &s));
        }
    }

    #[test]
    fn torus_metric_axioms(a in pt2(0.0..4.0), b in pt2(0.0..4.0), c in pt2(0.0..4.0)) {
        let m = manifold(true);
        prop_assert_eq!(m.distance(&a, &b), m.distance(&b, &a));
        prop_assert!(m.distance(&a, &c) <= m.distance(&a, &b) + m.distance(&b, &c) + 1e-12);
    }

    #[test]
    fn frame_groupoid_axioms(
        x in pt2(0.0..4.0), y in pt2(0.0..4.0), z in pt2(0.0..4.0), w in pt2(0.0..4.0),
        a in well_conditioned3(), b in well_conditioned3(), c in well_conditioned3(),
    ) {
        let gp = Groupoid::frame(manifold(false), 3).unwrap();
        let g = GroupoidElement::frame(x.clone(), y.clone(), a.clone());
        let h = GroupoidElement::frame(y.clone(), z.clone(), b.clone());
        let k = GroupoidElement::frame(z.clone(), w.clone(), c);
        let left = gp.compose(&gp.compose(&g, &h).unwrap(), &k).unwrap();
        let right = gp.compose(&g, &gp.compose(&h, &k).unwrap()).unwrap();
        let (eb, ef) = gp.residual(&left, &right);
        prop_assert!(eb <= 1e-9 && ef <= 1e-9 * (1.0 + left.matrix().unwrap().norm()));
        prop_assert_eq!(gp.compose(&gp.unit(&x), &g).unwrap(), g.clone());
        prop_assert_eq!(gp.compose(&g, &gp.unit(&y)).unwrap(), g.clone());
        let gi = gp.invert(&g).unwrap();
        let (eb, ef) = gp.residual(&gp.compose(&g, &gi).unwrap(), &gp.unit(&x));
        prop_assert!(eb == 0.0 && ef <= 1e-9);
        let (eb, ef) = gp.residual(&gp.compose(&gi, &g).unwrap(), &gp.unit(&y));
        prop_assert!(eb == 0.0 && ef <= 1e-9);
        // g then h acts on a vector as B(A v)
        let composed = gp.compose(&g, &h).unwrap();
        for i in 0..3 {
            let e = DMatrix::from_fn(3, 1, |r, _| if r == i { 1.0 } else { 0.0 });
            let direct = &b * (&a * &e);
            prop_assert!((composed.matrix().unwrap() * &e - direct).norm() <= 1e-12 * (1.0 + a.norm() * b.norm()));
        }
    }

    #[test]
    fn action_groupoid_axioms(x in pt2(0.0..4.0), g1 in pt2(-3.0..3.0), g2 in pt2(-3.0..3.0), g3 in pt2(-3.0..3.0)) {
        let m = manifold(true);
        let gp = Groupoid::action(m.clone()).unwrap();
        let g = GroupoidElement::action(&m, x.clone(), g1);
        let h = GroupoidElement::action(&m, g.target.clone(), g2);
        let k = GroupoidElement::action(&m, h.target.clone(), g3);
        let left = gp.compose(&gp.compose(&g, &h).unwrap(), &k).unwrap();
        let right = gp.compose(&g, &gp.compose(&h, &k).unwrap()).unwrap();
        let (eb, ef) = gp.residual(&left, &right);
        prop_assert!(eb <= 1e-9 && ef <= 1e-9);
        let back = gp.compose(&g, &gp.invert(&g).unwrap()).unwrap();
        let (eb, ef) = gp.residual(&back, &gp.unit(&x));
        prop_assert!(eb <= 1e-9 && ef <= 1e-9);
    }

    #[test]
    fn words_are_alpha_exact_and_local(
        c1 in pt2(1.0..3.0), c2 in pt2(1.0..3.0), s1 in matrix3(), s2 in matrix3(),
        q in pt2(0.0..4.0), t in -1.0f64..1.0,
    ) {
        let m = manifold(false);
        let gp = Groupoid::frame(m.clone(), 3).unwrap();
        let curve = bisect_core::geometry::Curve::from_points(vec![c1.clone(), &c1 + &Point::new(&[0.5, 0.2])]).unwrap();
        let tube = CompactSection::tube(curve, 0.2, &m).unwrap();
        let gauge = CompactSection::gauge(c2.clone(), 0.2, 0.5, &(&s1 * 0.3), &m).unwrap();
        let gauge2 = CompactSection::gauge(c1, 0.1, 0.4, &(&s2 * 0.3), &m).unwrap();
        let w = BisectionWord::from_generators(
            Family::Frame,
            vec![Generator::exp(tube, t), Generator::exp(gauge, 1.0), Generator::exp(gauge2, -t).flipped()],
        );
        let e = gp.eval(&w, &q).unwrap();
        prop_assert!(e.source.bitwise_eq(&q));
        if w.fixes(&m, &q) {
            prop_assert!(gp.is_unit(&e) && e.target.bitwise_eq(&q));
        }
        // formal inverse undoes the word
        let back = gp.eval(&w.inverse(), &e.target).unwrap();
        let (eb, ef) = gp.residual(&gp.compose(&e, &back).unwrap_or_else(|_| gp.unit(&q)), &gp.unit(&q));
        prop_assert!(eb <= 1e-6 && ef <= 1e-6);
        // replayable file form is bit exact
        let text = serde_json::to_string(&WordFile::new(&gp, &w)).unwrap();
        let (_, again) = serde_json::from_str::<WordFile>(&text).unwrap().load().unwrap();
        prop_assert_eq!(gp.eval(&again, &q).unwrap(), e);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gauge_round_trip(a in well_conditioned3(), y in pt2(1.0..3.0), r in 0.2f64..0.8) {
        let m = manifold(false);
        let gp = Groupoid::frame(m.clone(), 3).unwrap();
        let f = gauge_generators(&a, &y, r, false, &m).unwrap();
        prop_assert!(f.sections.len() <= 2);
        prop_assert_eq!(f.global.is_some(), a.determinant() < 0.0);
        let mut w = BisectionWord::identity(Family::Frame);
        for s in f.sections {
            w.push(Generator::exp(s, 1.0));
        }
        if let Some(d) = f.global {
            w.push(Generator::Global { map: d, sign: 1 });
        }
        let e = gp.eval(&w, &y).unwrap();
        prop_assert!((e.matrix().unwrap() - &a).norm() <= 1e-8);
        prop_assert!(e.target.bitwise_eq(&y));
    }
}

// ---------------------------------------------------------------- combinatorics

fn ground(i: usize) -> Point {
    Point::new(&[(i % 4) as f64, (i / 4) as f64])
}

fn pairs_of(ix: &[(usize, usize)]) -> Vec<BasePair> {
    ix.iter().enumerate().map(|(k, &(a, b))| BasePair::new(k, ground(a), ground(b))).collect()
}

/// Concordant instances without self-loops: distinct sources, distinct
/// targets, drawn from a 12-point ground set.
fn concordant_instance() -> impl Strategy<Value = Vec<(usize, usize)>> {
    (1usize..=6, Just(()))
        .prop_flat_map(|(n, _)| {
            (
                Just(n),
                Just((0..12).collect::<Vec<usize>>()).prop_shuffle(),
                Just((0..12).collect::<Vec<usize>>()).prop_shuffle(),
            )
        })
        .prop_map(|(n, s, t)| s.into_iter().zip(t).take(n).filter(|(a, b)| a != b).collect::<Vec<_>>())
        .prop_filter("non-empty", |v: &Vec<(usize, usize)>| !v.is_empty())
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Indices lying on a cycle of length at least two, by following the
/// matching from every start.
fn cycle_members(ix: &[(usize, usize)]) -> HashSet<usize> {
    let next = |i: usize| (0..ix.len()).find(|&j| j != i && ix[i].1 == ix[j].0);
    let mut on = HashSet::new();
    for start in 0..ix.len() {
        let mut cur = next(start);
        for _ in 0..ix.len() {
            match cur {
                Some(c) if c == start => {
                    on.insert(start);
                    break;
                }
                Some(c) => cur = next(c),
                None => break,
            }
        }
    }
    on
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn chains_cover_exactly_the_cycles(ix in concordant_instance()) {
        let m = Manifold::unit_box(2, -1.0, 5.0);
        let pairs = pairs_of(&ix);
        prop_assert!(is_concordant(&m, &pairs));
        let chains = find_chains(&m, &pairs);
        let flat: Vec<usize> = chains.iter().flatten().copied().collect();
        let uniq: HashSet<usize> = flat.iter().copied().collect();
        prop_assert_eq!(flat.len(), uniq.len());
        prop_assert_eq!(uniq, cycle_members(&ix));
        for c in &chains {
            prop_assert!(c.len() >= 2);
            prop_assert_eq!(c[0], *c.iter().min().unwrap());
            for k in 0..c.len() {
                prop_assert_eq!(ix[c[k]].1, ix[c[(k + 1) % c.len()]].0);
            }
        }
    }

    #[test]
    fn well_ordering_exists_iff_independent(ix in concordant_instance()) {
        let m = Manifold::unit_box(2, -1.0, 5.0);
        let pairs = pairs_of(&ix);
        let exists = permutations(ix.len())
            .iter()
            .any(|p| (0..p.len()).all(|k| (0..k).all(|l| ix[p[k]].0 != ix[p[l]].1)));
        let indep = is_independent(&m, &pairs);
        prop_assert_eq!(exists, indep);
        match well_order(&m, &pairs) {
            Ok(order) => {
                prop_assert!(indep);
                prop_assert!(is_well_ordered(&m, &pairs, &order));
                let mut sorted = order.clone();
                sorted.sort();
                prop_assert_eq!(sorted, (0..ix.len()).collect::<Vec<_>>());
            }
            Err(_) => prop_assert!(!indep),
        }
    }
}
