mod common;

use num_complex::Complex64;
use proptest::prelude::*;

use realign_moments::matcore::{dagger, hermitian_eigenvalues, singular_values, trace_norm, CMatrix};

fn matrix(max: usize) -> impl Strategy<Value = CMatrix> {
    (1..=max, 1..=max).prop_flat_map(|(r, c)| {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), r * c).prop_map(move |xs| {
            let data = xs.into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
            CMatrix::from_vec(r, c, data).unwrap()
        })
    })
}

fn hermitian(max: usize) -> impl Strategy<Value = CMatrix> {
    (1..=max)
        .prop_flat_map(|n| prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |xs| (n, xs)))
        .prop_map(|(n, xs)| {
            let data = xs.into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
            let g = CMatrix::from_vec(n, n, data).unwrap();
            g.add(&g.dagger()).unwrap().scale(0.5)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dagger_is_involution(a in matrix(8)) {
        prop_assert_eq!(dagger(&dagger(&a)), a);
    }

    #[test]
    fn singular_values_invariant_under_dagger(a in matrix(10)) {
        let s = singular_values(&a).unwrap();
        let t = singular_values(&dagger(&a)).unwrap();
        prop_assert_eq!(s.values().len(), a.rows().min(a.cols()));
        for (x, y) in s.values().iter().zip(t.values()) {
            prop_assert!((x - y).abs() < 1e-10);
        }
        prop_assert!(s.values().windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(s.values().iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn singular_values_preserve_frobenius(a in matrix(16)) {
        let s = singular_values(&a).unwrap();
        let sum: f64 = s.values().iter().map(|x| x * x).sum();
        let fro = a.frobenius_norm_sqr();
        prop_assert!((sum - fro).abs() <= 1e-10 * fro.max(1e-300));
    }

    #[test]
    fn eigenvalues_match_trace_and_frobenius(h in hermitian(12)) {
        let ev = hermitian_eigenvalues(&h).unwrap();
        let sum: f64 = ev.values().iter().sum();
        let sq: f64 = ev.values().iter().map(|x| x * x).sum();
        let scale = h.frobenius_norm_sqr().sqrt() + 1.0;
        prop_assert!((sum - h.trace().re).abs() < 1e-10 * scale);
        prop_assert!((sq - h.frobenius_norm_sqr()).abs() < 1e-10 * scale * scale);
        prop_assert!(ev.values().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn eigenvalues_of_hermitian_square_are_singular_values(h in hermitian(10)) {
        // |λ| of a Hermitian matrix are its singular values: two routines, one answer.
        let mut abs: Vec<f64> = hermitian_eigenvalues(&h).unwrap().values().iter().map(|x| x.abs()).collect();
        abs.sort_by(|a, b| b.total_cmp(a));
        let s = singular_values(&h).unwrap();
        for (x, y) in abs.iter().zip(s.values()) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn real_diagonal_eigenvalues_are_exact(diag in prop::collection::vec(-10.0f64..10.0, 1..12)) {
        let ev = hermitian_eigenvalues(&CMatrix::from_real_diag(&diag)).unwrap();
        let mut sorted = diag.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        prop_assert_eq!(ev.values(), &sorted[..]);
    }

    #[test]
    fn trace_norm_dominates_trace(h in hermitian(10)) {
        prop_assert!(trace_norm(&h).unwrap() + 1e-12 >= h.trace().norm());
    }
}

#[test]
fn kron_dimensions_and_entries() {
    use realign_moments::matcore::kron;
    let a = CMatrix::from_real_rows(&[vec![1.0, 2.0, 3.0]]).unwrap();
    let b = CMatrix::from_real_rows(&[vec![1.0], vec![-1.0]]).unwrap();
    let k = kron(&a, &b).unwrap();
    assert_eq!((k.rows(), k.cols()), (2, 3));
    assert_eq!(k[(1, 2)], common::c(-3.0));
}
