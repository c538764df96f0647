mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use semiconv::geometry::{classify_body, linear_image, recession_cone, Classification, ConvexBody, LinearMap};
use semiconv::{Eta, Norm};

fn half_strip() -> ConvexBody {
    ConvexBody::hrep(2, vec![vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]], vec![-1.0, 1.0, 1.0]).unwrap()
}

#[test]
fn recession_cone_agrees_with_ray_oracle_on_random_polyhedra() {
    for (k, (g, x0)) in common::random_polyhedra(11, 30).iter().enumerate() {
        assert_eq!(common::recession_disagreements(g, x0, 500, k as u64), 0, "polyhedron {k}");
    }
}

#[test]
fn recession_cone_agrees_with_ray_oracle_on_other_bodies() {
    let bodies = vec![
        (ConvexBody::Strip, vec![0.0, 0.5]),
        (ConvexBody::wedge(Eta::sqrt()).unwrap(), vec![2.0, 0.0]),
        (ConvexBody::ball(vec![1.0, 1.0, 1.0], 2.0, Norm::L1).unwrap(), vec![1.0, 1.0, 1.0]),
        (ConvexBody::whole_space(3).unwrap(), vec![0.0, 0.0, 0.0]),
        (
            ConvexBody::product(vec![half_strip(), ConvexBody::open_box(&[0.0], &[1.0]).unwrap()]).unwrap(),
            vec![2.0, 0.0, 0.5],
        ),
        (
            ConvexBody::affine(half_strip(), DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]), vec![3.0, -1.0]).unwrap(),
            vec![5.0, -1.0],
        ),
    ];
    for (k, (g, x0)) in bodies.iter().enumerate() {
        assert!(g.contains(x0), "body {k}");
        assert_eq!(common::recession_disagreements(g, x0, 400, k as u64), 0, "body {k}");
    }
}

#[test]
fn classification_examples() {
    assert_eq!(classify_body(&ConvexBody::open_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap()).unwrap(), Classification::Bounded);
    let quadrant = ConvexBody::hrep(2, vec![vec![-1.0, 0.0], vec![0.0, -1.0]], vec![0.0, 0.0]).unwrap();
    assert!(matches!(classify_body(&quadrant).unwrap(), Classification::ConeContaining { .. }));
    assert_eq!(classify_body(&half_strip()).unwrap(), Classification::DegenerateUnbounded { rec_dim: 1 });
    assert_eq!(classify_body(&ConvexBody::Strip).unwrap(), Classification::DegenerateUnbounded { rec_dim: 1 });
}

#[test]
fn cone_containing_certificate_holds() {
    let g = ConvexBody::hrep(2, vec![vec![-1.0, 0.3], vec![0.2, -1.0]], vec![1.0, 2.0]).unwrap();
    let Classification::ConeContaining { a, v, r } = classify_body(&g).unwrap() else { panic!() };
    let rec = recession_cone(&g).unwrap();
    for k in 0..16 {
        let th = k as f64 * std::f64::consts::PI / 8.0;
        let y = [v[0] + 0.99 * r * th.cos(), v[1] + 0.99 * r * th.sin()];
        assert!(rec.contains(&y));
        assert!(g.contains(&[a[0] + 100.0 * y[0], a[1] + 100.0 * y[1]]));
    }
}

#[test]
fn projection_of_half_strip_times_interval() {
    let g = ConvexBody::product(vec![half_strip(), ConvexBody::open_box(&[0.0], &[1.0]).unwrap()]).unwrap();
    let h = linear_image(&g, &LinearMap::coordinates(3, &[0, 1]).unwrap()).unwrap();
    for (p, inside) in [([2.0, 0.0], true), ([50.0, 0.9], true), ([0.5, 0.0], false), ([2.0, 1.5], false)] {
        assert_eq!(h.contains(&p), inside, "{p:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn recession_dimension_is_affine_invariant(
        m in prop::array::uniform4(-2.0f64..2.0),
        s in prop::array::uniform2(-5.0f64..5.0),
    ) {
        let mat = DMatrix::from_row_slice(2, 2, &m);
        prop_assume!(mat.determinant().abs() > 0.2);
        for g in [half_strip(), ConvexBody::hrep(2, vec![vec![-1.0, 0.0], vec![0.0, -1.0]], vec![0.0, 0.0]).unwrap()] {
            let moved = ConvexBody::affine(g.clone(), mat.clone(), s.to_vec()).unwrap();
            prop_assert_eq!(recession_cone(&moved).unwrap().dimension(), recession_cone(&g).unwrap().dimension());
            prop_assert_eq!(
                std::mem::discriminant(&classify_body(&moved).unwrap()),
                std::mem::discriminant(&classify_body(&g).unwrap())
            );
        }
    }
}
