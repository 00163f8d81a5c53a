mod common;

use common::{naive_blade_product, naive_product, rel};
use proptest::prelude::*;
use slice_grav::clifford::{blade_sign, versor_inverse, versor_norm, Multivector};

fn mv(dim: usize) -> impl Strategy<Value = Multivector> {
    prop::collection::vec(-1.0f64..1.0, 1 << dim).prop_map(move |c| Multivector::from_coeffs(dim, c).unwrap())
}

fn mv_pair() -> impl Strategy<Value = (Multivector, Multivector)> {
    (1usize..=5).prop_flat_map(|d| (mv(d), mv(d)))
}

fn mv_triple() -> impl Strategy<Value = (Multivector, Multivector, Multivector)> {
    (1usize..=5).prop_flat_map(|d| (mv(d), mv(d), mv(d)))
}

fn vector(dim: usize) -> impl Strategy<Value = Multivector> {
    prop::collection::vec(-1.0f64..1.0, dim)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-2)
        .prop_map(move |v| Multivector::from_vector(dim, &v))
}

#[test]
fn blade_sign_matches_shuffle_oracle() {
    for a in 0..256 {
        for b in 0..256 {
            let (s, m) = naive_blade_product(a, b);
            assert_eq!(m, a ^ b);
            assert_eq!(blade_sign(a, b), s, "e_{a:b} e_{b:b}");
        }
    }
}

#[test]
fn generators_anticommute_exhaustively() {
    for dim in 1..=8 {
        for i in 0..dim {
            for j in 0..dim {
                let (ei, ej) = (Multivector::generator(dim, i), Multivector::generator(dim, j));
                let anti = &(&ei * &ej) + &(&ej * &ei);
                let want = Multivector::scalar(dim, if i == j { -2.0 } else { 0.0 });
                assert_eq!(anti, want, "dim {dim}, e{i} e{j}");
            }
        }
    }
}

proptest! {
    #[test]
    fn product_matches_naive_oracle((a, b) in mv_pair()) {
        prop_assert!(rel(&(&a * &b), &naive_product(&a, &b)) < 1e-13);
    }

    #[test]
    fn product_is_associative((a, b, c) in mv_triple()) {
        prop_assert!(rel(&(&(&a * &b) * &c), &(&a * &(&b * &c))) < 1e-12);
    }

    #[test]
    fn involution_laws((a, b) in mv_pair()) {
        let ab = &a * &b;
        prop_assert!(rel(&ab.reverse(), &(&b.reverse() * &a.reverse())) < 1e-12);
        prop_assert!(rel(&ab.conjugate(), &(&b.conjugate() * &a.conjugate())) < 1e-12);
        prop_assert!(rel(&ab.grade_involution(), &(&a.grade_involution() * &b.grade_involution())) < 1e-12);
        prop_assert_eq!(a.reverse().reverse(), a.clone());
        prop_assert_eq!(a.conjugate().conjugate(), a.clone());
        prop_assert_eq!(a.reverse().grade_involution(), a.conjugate());
    }

    #[test]
    fn grades_decompose(a in (1usize..=6).prop_flat_map(mv)) {
        let mut sum = Multivector::zero(a.dim());
        for k in 0..=a.dim() {
            sum += &a.grade_project(k).unwrap();
        }
        prop_assert_eq!(sum, a);
    }

    #[test]
    fn vector_squares_to_minus_norm(v in (1usize..=6).prop_flat_map(vector)) {
        let n2 = v.vector_coords().iter().map(|x| x * x).sum::<f64>();
        prop_assert!(rel(&(&v * &v), &Multivector::scalar(v.dim(), -n2)) < 1e-14);
    }

    #[test]
    fn versor_inverse_and_norm((u, v, w) in (2usize..=5).prop_flat_map(|d| (vector(d), vector(d), vector(d)))) {
        let x = &(&u * &v) * &w;
        let inv = versor_inverse(&x).unwrap();
        prop_assert!(rel(&(&x * &inv), &Multivector::one(x.dim())) < 1e-12);
        prop_assert!(rel(&(&inv * &x), &Multivector::one(x.dim())) < 1e-12);
        let n = |m: &Multivector| m.vector_coords().iter().map(|c| c * c).sum::<f64>().sqrt();
        let want = n(&u) * n(&v) * n(&w);
        prop_assert!((versor_norm(&x).unwrap() - want).abs() < 1e-12 * want);
    }
}
