//! Eigenvalues and matrix algebra against nalgebra and exact identities.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use qsynapse_core::{commutator, hermitian_eigenvalues, mat_mul, ComplexMat4};

fn matrix() -> impl Strategy<Value = ComplexMat4> {
    prop::array::uniform32(-2.0..2.0f64).prop_map(|v| {
        let mut m = ComplexMat4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m[(i, j)] = C64::new(v[4 * i + j], v[16 + 4 * i + j]);
            }
        }
        m
    })
}

fn hermitian() -> impl Strategy<Value = ComplexMat4> {
    matrix().prop_map(|a| (a + a.adjoint()).scale_real(0.5))
}

/// Eigenvalues of `H = A + iB` from the real symmetric embedding
/// `[[A, -B], [B, A]]`, whose spectrum is that of `H` with each value doubled.
fn oracle_eigenvalues(h: &ComplexMat4) -> [f64; 4] {
    let big = DMatrix::from_fn(8, 8, |i, j| {
        let z = h[(i % 4, j % 4)];
        match (i < 4, j < 4) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let mut ev: Vec<f64> = big.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    [ev[0], ev[2], ev[4], ev[6]]
}

fn sorted(mut ev: [f64; 4]) -> [f64; 4] {
    ev.sort_by(f64::total_cmp);
    ev
}

proptest! {
    #[test]
    fn eigenvalues_match_nalgebra(h in hermitian()) {
        let got = sorted(hermitian_eigenvalues(&h).unwrap());
        let want = oracle_eigenvalues(&h);
        for k in 0..4 {
            prop_assert!((got[k] - want[k]).abs() < 1e-10, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn eigenvalue_sums(h in hermitian()) {
        let ev = hermitian_eigenvalues(&h).unwrap();
        prop_assert!((ev.iter().sum::<f64>() - h.trace().re).abs() < 1e-10);
        let sq: f64 = ev.iter().map(|x| x * x).sum();
        prop_assert!((sq - h.frobenius_norm().powi(2)).abs() < 1e-9);
    }

    #[test]
    fn multiplication_is_associative(a in matrix(), b in matrix(), c in matrix()) {
        let left = mat_mul(&mat_mul(&a, &b), &c);
        let right = mat_mul(&a, &mat_mul(&b, &c));
        prop_assert!(left.max_abs_diff(&right) < 1e-12);
    }

    #[test]
    fn commutator_is_antisymmetric(a in matrix(), b in matrix()) {
        prop_assert!(commutator(&a, &b).max_abs_diff(&-commutator(&b, &a)) == 0.0);
        prop_assert!(commutator(&a, &a).frobenius_norm() < 1e-12);
    }

    #[test]
    fn commutator_of_hermitians_is_antihermitian(a in hermitian(), b in hermitian()) {
        let c = commutator(&a, &b);
        prop_assert!(c.max_abs_diff(&-c.adjoint()) < 1e-12);
    }
}

#[test]
fn degenerate_spectrum() {
    let mut h = ComplexMat4::identity().scale_real(0.25);
    h[(1, 2)] = C64::new(0.0, 1e-14);
    h[(2, 1)] = C64::new(0.0, -1e-14);
    for x in hermitian_eigenvalues(&h).unwrap() {
        assert!((x - 0.25).abs() < 1e-13);
    }
}

#[test]
fn diagonal_is_exact() {
    let d = [-3.5, 0.0, 1e-9, 7.25];
    assert_eq!(sorted(hermitian_eigenvalues(&ComplexMat4::from_diag_real(d)).unwrap()), d);
}
