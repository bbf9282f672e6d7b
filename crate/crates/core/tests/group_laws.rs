use cryamabe_core::heisenberg::{dilate, group_product, kelvin, koranyi_norm, HeisenbergPoint};
use proptest::prelude::*;

fn arb_point(n: usize) -> impl Strategy<Value = HeisenbergPoint> {
    (
        prop::collection::vec(-3.0..3.0f64, n),
        prop::collection::vec(-3.0..3.0f64, n),
        -5.0..5.0f64,
    )
        .prop_map(|(x, y, t)| HeisenbergPoint { x, y, t })
}

fn close(a: &HeisenbergPoint, b: &HeisenbergPoint, tol: f64) -> bool {
    let (ca, cb) = (a.coords(), b.coords());
    let scale = ca.iter().chain(&cb).fold(1.0f64, |m, v| m.max(v.abs()));
    ca.iter().zip(&cb).all(|(x, y)| (x - y).abs() <= tol * scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn product_is_associative(p in arb_point(2), q in arb_point(2), r in arb_point(2)) {
        let left = group_product(&group_product(&p, &q).unwrap(), &r).unwrap();
        let right = group_product(&p, &group_product(&q, &r).unwrap()).unwrap();
        prop_assert!(close(&left, &right, 1e-12));
    }

    #[test]
    fn inverse_gives_origin(p in arb_point(3)) {
        let e = group_product(&p, &p.inverse()).unwrap();
        prop_assert!(close(&e, &HeisenbergPoint::origin(3), 1e-12));
        let e = group_product(&p.inverse(), &p).unwrap();
        prop_assert!(close(&e, &HeisenbergPoint::origin(3), 1e-12));
    }

    #[test]
    fn norm_is_homogeneous(p in arb_point(2), lambda in 0.01..100.0f64) {
        let a = koranyi_norm(&dilate(lambda, &p).unwrap());
        let b = lambda * koranyi_norm(&p);
        prop_assert!((a - b).abs() <= 1e-12 * b);
    }

    #[test]
    fn kelvin_inverts_the_norm(p in arb_point(2)) {
        let rho = koranyi_norm(&p);
        prop_assume!(rho > 1e-3);
        let k = kelvin(&p).unwrap();
        prop_assert!((koranyi_norm(&k) * rho - 1.0).abs() < 1e-12);
    }

    #[test]
    fn norm_is_symmetric(p in arb_point(1)) {
        prop_assert!((koranyi_norm(&p.inverse()) - koranyi_norm(&p)).abs() <= 1e-15 * koranyi_norm(&p).max(1.0));
    }
}

#[test]
fn unit_sphere_is_kelvin_invariant() {
    for k in 0..50 {
        let a = 0.1 * k as f64;
        let p = HeisenbergPoint::new(vec![a.cos() * a.cos().abs().sqrt()], vec![0.0], a.sin()).unwrap();
        let p = dilate(1.0 / koranyi_norm(&p), &p).unwrap();
        let q = kelvin(&p).unwrap();
        assert!((koranyi_norm(&q) - 1.0).abs() < 1e-14);
        assert!((q.t + p.t).abs() < 1e-14);
    }
}
