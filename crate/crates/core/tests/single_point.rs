use std::f64::consts::FRAC_PI_2;

use bisect_core::exponential::linalg;
use bisect_core::single_point::{
    bisection_through, bundle_automorphism_through, homogeneity_diffeo, invertible_function_through,
    moving_flows, ConstructionRequest,
};
use bisect_core::{Groupoid, GroupoidElement, Manifold, Point, Region};
use nalgebra::DMatrix;

fn p(x: f64, y: f64) -> Point {
    Point::new(&[x, y])
}

fn plane() -> Manifold {
    Manifold::unit_box(2, -5.0, 5.0)
}

/// Lattice points of the square `[-5, 5]²` with spacing 0.25.
fn lattice() -> impl Iterator<Item = Point> {
    (0..=40).flat_map(|i| (0..=40).map(move |j| p(-5.0 + 0.25 * i as f64, -5.0 + 0.25 * j as f64)))
}

#[test]
fn pair_family_moves_inside_the_ball_only() {
    let gp = Groupoid::pair(plane()).unwrap();
    let region = Region::ball(p(0.0, 0.0), 3.0);
    let g = GroupoidElement::pair(p(0.0, 0.0), p(1.0, 0.0));
    let out = bisection_through(&gp, &ConstructionRequest::new(g.clone(), region)).unwrap();
    let e = gp.eval(&out.word, &g.source).unwrap();
    assert!(gp.manifold.distance(&e.target, &g.target) < 1e-6);
    for q in lattice().filter(|q| q.norm() >= 3.0) {
        let e = gp.eval(&out.word, &q).unwrap();
        assert!(e.target.bitwise_eq(&q) && gp.is_unit(&e));
    }
    assert!(out.word.metadata().length <= out.arcs + 3);
}

#[test]
fn quarter_turn_over_a_fixed_point_is_pure_gauge() {
    let gp = Groupoid::frame(plane(), 2).unwrap();
    let x = p(0.5, -0.5);
    let a = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
    let out = bisection_through(
        &gp,
        &ConstructionRequest::new(GroupoidElement::frame(x.clone(), x.clone(), a.clone()), Region::ball(x.clone(), 0.4)),
    )
    .unwrap();
    assert!(out.word.generators().iter().all(|g| g.section().is_some_and(|s| s.is_isotropic())));
    let e = gp.eval(&out.word, &x).unwrap();
    assert!((e.matrix().unwrap() - &a).norm() < 1e-8);
    assert!(gp.manifold.distance(&e.target, &x) < 1e-6);
    let rotation = nalgebra::Rotation2::new(FRAC_PI_2);
    assert!((e.matrix().unwrap() - DMatrix::from_row_slice(2, 2, rotation.matrix().as_slice()).transpose()).norm() < 1e-8);
}

#[test]
fn homogeneity_examples() {
    let m = plane();
    let ball = Region::ball(p(0.0, 0.0), 2.0);
    assert!(homogeneity_diffeo(&m, &p(0.3, 0.3), &p(0.3, 0.3), &ball).unwrap().is_empty());
    assert!(moving_flows(&m, &p(0.3, 0.3), &p(0.3, 0.3), &ball).unwrap().is_empty());

    let w = homogeneity_diffeo(&m, &p(0.0, 0.0), &p(0.0, 1.0), &ball).unwrap();
    let gp = Groupoid::pair(m.clone()).unwrap();
    assert!(m.distance(&gp.eval_target(&w, &p(0.0, 0.0)).unwrap(), &p(0.0, 1.0)) < 1e-6);
    for q in lattice().filter(|q| q.norm() >= 2.0) {
        assert!(gp.eval_target(&w, &q).unwrap().bitwise_eq(&q));
    }
    let fields = moving_flows(&m, &p(0.0, 0.0), &p(0.0, 1.0), &ball).unwrap();
    assert_eq!(fields.len(), 1);

    let torus = Manifold::torus(&[1.0, 1.0]);
    let w = homogeneity_diffeo(&torus, &p(0.1, 0.1), &p(0.9, 0.9), &Region::Full).unwrap();
    let gp = Groupoid::pair(torus.clone()).unwrap();
    assert!(torus.distance(&gp.eval_target(&w, &p(0.1, 0.1)).unwrap(), &p(0.9, 0.9)) < 1e-6);
    // the minimal image path crosses the seam, so the midpoint of the
    // straight segment inside the square stays put
    assert!(gp.eval_target(&w, &p(0.5, 0.5)).unwrap().bitwise_eq(&p(0.5, 0.5)));
}

#[test]
fn bundle_automorphism_examples() {
    let gp = Groupoid::frame(plane(), 2).unwrap();
    let id = DMatrix::identity(2, 2);
    let x = p(-1.0, 0.5);
    assert!(bundle_automorphism_through(&gp, &id, &x, &x, false).unwrap().is_empty());

    let y = p(1.0, 1.5);
    let w = bundle_automorphism_through(&gp, &id, &x, &y, false).unwrap();
    let e = gp.eval(&w, &x).unwrap();
    assert!(gp.manifold.distance(&e.target, &y) < 1e-6);
    assert!((e.matrix().unwrap() - &id).norm() < 1e-8);

    let d = linalg::reflection(2);
    let w = bundle_automorphism_through(&gp, &d, &x, &x, false).unwrap();
    assert_eq!(w.len(), 1);
    assert!(w.has_global_factor());
}

#[test]
fn invertible_function_examples() {
    let m = Manifold::torus(&[1.0, 1.0]);
    let gp = Groupoid::action(m).unwrap();
    let x = p(0.5, 0.5);
    assert!(invertible_function_through(&gp, &x, &p(0.0, 0.0)).unwrap().is_empty());
    for (g, min_len) in [(p(0.3, 0.0), 1), (p(0.5, 0.0), 2)] {
        let w = invertible_function_through(&gp, &x, &g).unwrap();
        assert!(w.len() >= min_len);
        let e = gp.eval(&w, &x).unwrap();
        assert!((e.shift().unwrap() - &g).norm() < 1e-6);
        for i in 0..10 {
            for j in 0..10 {
                let q = p((i as f64 + 0.5) / 10.0, (j as f64 + 0.5) / 10.0);
                assert!(gp.target_jacobian(&w, &q).unwrap().determinant() > 0.0);
            }
        }
    }
}

#[test]
fn avoided_points_are_fixed_bitwise() {
    let gp = Groupoid::frame(plane(), 2).unwrap();
    let a = DMatrix::from_row_slice(2, 2, &[1.5, 0.2, -0.3, 0.8]);
    let g = GroupoidElement::frame(p(-2.0, 0.0), p(2.0, 0.0), a);
    let avoid = vec![p(0.0, 0.0), p(1.0, 0.1), p(2.0, 0.8)];
    let out = bisection_through(&gp, &ConstructionRequest::new(g, Region::Full).avoiding(avoid.clone())).unwrap();
    assert!(out.residual.base < 1e-6 && out.residual.fiber < 1e-8);
    for q in &avoid {
        let e = gp.eval(&out.word, q).unwrap();
        assert!(e.target.bitwise_eq(q) && gp.is_unit(&e));
    }
}
