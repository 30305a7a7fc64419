use bisect_core::exponential::CompactSection;
use bisect_core::geometry::Curve;
use bisect_core::groupoid::{Generator, WordFile};
use bisect_core::{BisectionWord, Family, Groupoid, GroupoidElement, Manifold, Point, Region};
use nalgebra::DMatrix;

fn p(x: f64, y: f64) -> Point {
    Point::new(&[x, y])
}

fn tube_word(gp: &Groupoid, from: Point, to: Point, rho: f64) -> BisectionWord {
    let c = Curve::from_points(vec![from, to]).unwrap();
    gp.exp_word(CompactSection::tube(c, rho, &gp.manifold).unwrap(), 1.0)
}

#[test]
fn element_examples() {
    let gp = Groupoid::frame(Manifold::unit_box(2, 0.0, 4.0), 2).unwrap();
    let g = GroupoidElement::frame(p(1.0, 1.0), p(2.0, 2.0), DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]));
    let gi = gp.invert(&g).unwrap();
    assert_eq!(gi.source, p(2.0, 2.0));
    assert_eq!(gi.target, p(1.0, 1.0));
    assert_eq!(gi.matrix().unwrap(), &DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 1.0]));
    let u = gp.unit(&p(3.0, 0.5));
    assert_eq!(gp.invert(&u).unwrap(), u);
    assert_eq!(gp.compose(&g, &gp.unit(&g.target)).unwrap(), g);
}

#[test]
fn word_evaluation_examples() {
    let gp = Groupoid::pair(Manifold::unit_box(2, -3.0, 3.0)).unwrap();
    let empty = BisectionWord::identity(Family::Pair);
    assert!(gp.is_unit(&gp.eval(&empty, &p(0.3, -1.0)).unwrap()));
    assert!(empty.inverse().is_empty());

    let w = tube_word(&gp, p(-1.0, 0.0), p(1.0, 0.0), 0.3);
    assert!(gp.manifold.distance(&gp.eval_target(&w, &p(-1.0, 0.0)).unwrap(), &p(1.0, 0.0)) < 1e-6);
    assert!(gp.eval_target(&w, &p(0.0, 2.0)).unwrap().bitwise_eq(&p(0.0, 2.0)));
    assert_eq!(w.concat(&empty).unwrap(), w);
    assert_eq!(w.inverse().generators()[0].sign(), -1);

    let u = tube_word(&gp, p(0.0, -2.0), p(0.0, -1.0), 0.2);
    let left = w.concat(&u).unwrap().concat(&w).unwrap();
    let right = w.concat(&u.concat(&w).unwrap()).unwrap();
    assert_eq!(left, right);

    // s s⁻¹ on a 10 × 10 grid
    let both = w.concat(&w.inverse()).unwrap();
    for i in 0..10 {
        for j in 0..10 {
            let q = p(-2.7 + 0.6 * i as f64, -2.7 + 0.6 * j as f64);
            assert!(gp.manifold.distance(&gp.eval_target(&both, &q).unwrap(), &q) <= 1e-6);
        }
    }
}

#[test]
fn verification_examples() {
    let gp = Groupoid::pair(Manifold::unit_box(2, -3.0, 3.0)).unwrap();
    let empty = BisectionWord::identity(Family::Pair);
    let r = gp.verify(&empty, &Region::Full, 50, 1).unwrap();
    assert_eq!(r.max_roundtrip_error, 0.0);
    assert!((r.min_target_jacobian_det - 1.0).abs() < 1e-9);
    assert!(r.identity_outside_region);

    let w = tube_word(&gp, p(-1.0, 0.0), p(1.0, 0.0), 0.3);
    let r = gp.verify(&w, &Region::ball(p(0.0, 0.0), 2.0), 200, 2).unwrap();
    assert!(r.max_roundtrip_error <= 1e-6 && r.passes(1e-6), "{r:?}");
    let tight = gp.verify(&w, &Region::ball(p(0.0, 0.0), 0.5), 200, 2).unwrap();
    assert!(!tight.identity_outside_region);
}

#[test]
fn constant_generator_round_trips_through_the_file_format() {
    let gp = Groupoid::frame(Manifold::unit_box(2, 0.0, 4.0), 2).unwrap();
    let d = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
    let w = BisectionWord::single(Family::Frame, Generator::Global { map: d.clone(), sign: 1 });
    let text = serde_json::to_string(&WordFile::new(&gp, &w)).unwrap();
    assert!(text.contains("\"constant\""));
    let (gp2, w2) = serde_json::from_str::<WordFile>(&text).unwrap().load().unwrap();
    assert_eq!(w2, w);
    let e = gp2.eval(&w2, &p(1.0, 3.0)).unwrap();
    assert_eq!(e.matrix().unwrap(), &d);
}
