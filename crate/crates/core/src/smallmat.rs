//! Dense 4×4 complex matrices.
//!
//! Everything in the two-qubit model lives in a four-dimensional Hilbert
//! space, so a fixed-size array beats a general matrix library both in speed
//! and in how little can go wrong. The only non-trivial routine here is the
//! Hermitian eigenvalue solver used for the negativity.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Hermiticity tolerance accepted by [`hermitian_eigenvalues`].
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Off-diagonal Frobenius norm at which the Jacobi sweeps stop.
pub const JACOBI_TOL: f64 = 1e-12;

const MAX_SWEEPS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexMat4(pub [[C64; 4]; 4]);

impl Default for ComplexMat4 {
    fn default() -> Self {
        Self::zeros()
    }
}

impl ComplexMat4 {
    pub const fn zeros() -> Self {
        Self([[C64::new(0.0, 0.0); 4]; 4])
    }

    pub fn identity() -> Self {
        Self::from_diag_real([1.0; 4])
    }

    pub fn from_diag_real(d: [f64; 4]) -> Self {
        let mut m = Self::zeros();
        for (i, &x) in d.iter().enumerate() {
            m.0[i][i] = C64::new(x, 0.0);
        }
        m
    }

    /// Matrix with a single unit entry at `(row, col)`.
    pub fn unit(row: usize, col: usize) -> Self {
        let mut m = Self::zeros();
        m.0[row][col] = C64::new(1.0, 0.0);
        m
    }

    /// Outer product `|a⟩⟨b|`.
    pub fn outer(a: &[C64; 4], b: &[C64; 4]) -> Self {
        Self(std::array::from_fn(|i| std::array::from_fn(|j| a[i] * b[j].conj())))
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = self.0[j][i].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = self.0[j][i];
            }
        }
        m
    }

    pub fn trace(&self) -> C64 {
        (0..4).map(|i| self.0[i][i]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|z| *z *= s);
        m
    }

    pub fn scale_real(&self, s: f64) -> Self {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|z| *z *= s);
        m
    }

    /// Largest entry of `|m - m†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..4 {
            for j in i..4 {
                worst = worst.max((self.0[i][j] - self.0[j][i].conj()).norm());
            }
        }
        worst
    }

    /// `(m + m†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let mut m = *self;
        for i in 0..4 {
            m.0[i][i] = C64::new(self.0[i][i].re, 0.0);
            for j in (i + 1)..4 {
                let z = (self.0[i][j] + self.0[j][i].conj()) * 0.5;
                m.0[i][j] = z;
                m.0[j][i] = z.conj();
            }
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0.iter().flatten().zip(other.0.iter().flatten()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Index<(usize, usize)> for ComplexMat4 {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMat4 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.0[i][j]
    }
}

impl Add for ComplexMat4 {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl AddAssign for ComplexMat4 {
    fn add_assign(&mut self, rhs: Self) {
        for (a, b) in self.0.iter_mut().flatten().zip(rhs.0.iter().flatten()) {
            *a += b;
        }
    }
}

impl Sub for ComplexMat4 {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for (a, b) in self.0.iter_mut().flatten().zip(rhs.0.iter().flatten()) {
            *a -= b;
        }
        self
    }
}

impl Neg for ComplexMat4 {
    type Output = Self;
    fn neg(mut self) -> Self {
        self.0.iter_mut().flatten().for_each(|z| *z = -*z);
        self
    }
}

impl Mul for ComplexMat4 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        mat_mul(&self, &rhs)
    }
}

pub fn mat_mul(a: &ComplexMat4, b: &ComplexMat4) -> ComplexMat4 {
    let mut c = ComplexMat4::zeros();
    for i in 0..4 {
        for k in 0..4 {
            let aik = a.0[i][k];
            for j in 0..4 {
                c.0[i][j] += aik * b.0[k][j];
            }
        }
    }
    c
}

/// `[a, b] = ab - ba`.
pub fn commutator(a: &ComplexMat4, b: &ComplexMat4) -> ComplexMat4 {
    mat_mul(a, b) - mat_mul(b, a)
}

/// Eigenvalues of a Hermitian matrix in ascending order, by cyclic Jacobi
/// rotations.
///
/// Each rotation first strips the phase of the pivot `m[p][q]` with a
/// diagonal unitary, then applies the classic real Jacobi rotation that
/// annihilates it. Sweeps stop once the off-diagonal Frobenius norm drops
/// below [`JACOBI_TOL`] (relative to the matrix norm for large inputs).
pub fn hermitian_eigenvalues(m: &ComplexMat4) -> Result<[f64; 4]> {
    if !m.is_finite() {
        return Err(Error::NotHermitian(f64::NAN));
    }
    let defect = m.hermiticity_defect();
    if !(defect <= HERMITIAN_TOL) {
        return Err(Error::NotHermitian(defect));
    }
    let mut a = m.hermitian_part();
    let tol = JACOBI_TOL * a.frobenius_norm().max(1.0);

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) < tol {
            break;
        }
        for p in 0..3 {
            for q in (p + 1)..4 {
                rotate(&mut a, p, q);
            }
        }
    }

    let mut ev = [a.0[0][0].re, a.0[1][1].re, a.0[2][2].re, a.0[3][3].re];
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

fn off_diagonal_norm(a: &ComplexMat4) -> f64 {
    let mut s = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                s += a.0[i][j].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Replace `a` by `J† a J` where `J` zeroes the `(p, q)` pair.
fn rotate(a: &mut ComplexMat4, p: usize, q: usize) {
    let apq = a.0[p][q];
    let g = apq.norm();
    if g == 0.0 {
        return;
    }
    let phase = apq / g;
    let theta = (a.0[q][q].re - a.0[p][p].re) / (2.0 * g);
    let t = if theta == 0.0 { 1.0 } else { theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt()) };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // J = Φ·P with Φ = diag(.., 1 @p, e^{-iφ} @q, ..) and P the real rotation.
    let cphase = phase.conj();
    let jpp = C64::new(c, 0.0);
    let jpq = C64::new(s, 0.0);
    let jqp = cphase * (-s);
    let jqq = cphase * c;

    // a ← a J (columns p, q)
    for i in 0..4 {
        let aip = a.0[i][p];
        let aiq = a.0[i][q];
        a.0[i][p] = aip * jpp + aiq * jqp;
        a.0[i][q] = aip * jpq + aiq * jqq;
    }
    // a ← J† a (rows p, q)
    for j in 0..4 {
        let apj = a.0[p][j];
        let aqj = a.0[q][j];
        a.0[p][j] = jpp.conj() * apj + jqp.conj() * aqj;
        a.0[q][j] = jpq.conj() * apj + jqq.conj() * aqj;
    }
    a.0[p][q] = C64::new(0.0, 0.0);
    a.0[q][p] = C64::new(0.0, 0.0);
    a.0[p][p].im = 0.0;
    a.0[q][q].im = 0.0;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raise_1_lower_2() -> ComplexMat4 {
        // σ₁⁺σ₂⁻ = |10⟩⟨01|
        ComplexMat4::unit(2, 1)
    }

    fn lower_1_raise_2() -> ComplexMat4 {
        ComplexMat4::unit(1, 2)
    }

    #[test]
    fn identity_and_zero_products() {
        let i = ComplexMat4::identity();
        assert_eq!(mat_mul(&i, &i), i);
        let a = ComplexMat4::unit(0, 3).scale(C64::new(0.3, -2.0)) + ComplexMat4::identity();
        assert_eq!(mat_mul(&a, &ComplexMat4::zeros()), ComplexMat4::zeros());
    }

    #[test]
    fn hopping_product_is_projector_onto_10() {
        let p = mat_mul(&raise_1_lower_2(), &lower_1_raise_2());
        assert_eq!(p, ComplexMat4::unit(2, 2));
    }

    #[test]
    fn commutator_examples() {
        let a = ComplexMat4::unit(1, 3).scale(C64::new(0.5, 0.25)) + ComplexMat4::unit(2, 0);
        assert_eq!(commutator(&ComplexMat4::identity(), &a), ComplexMat4::zeros());
        assert_eq!(commutator(&a, &a), ComplexMat4::zeros());

        let z1 = ComplexMat4::from_diag_real([-1.0, -1.0, 1.0, 1.0]);
        let x = raise_1_lower_2() + lower_1_raise_2();
        let expect = (raise_1_lower_2() - lower_1_raise_2()).scale_real(2.0);
        assert_eq!(commutator(&z1, &x), expect);
    }

    #[test]
    fn diagonal_and_mixed_eigenvalues() {
        let ev = hermitian_eigenvalues(&ComplexMat4::from_diag_real([3.0, 1.0, 4.0, 2.0])).unwrap();
        assert_eq!(ev, [1.0, 2.0, 3.0, 4.0]);
        let ev = hermitian_eigenvalues(&ComplexMat4::identity().scale_real(0.25)).unwrap();
        assert_eq!(ev, [0.25; 4]);
    }

    #[test]
    fn complex_two_by_two_block() {
        // [[1, i],[−i, 1]] has eigenvalues 0 and 2.
        let mut m = ComplexMat4::zeros();
        m[(1, 1)] = C64::new(1.0, 0.0);
        m[(2, 2)] = C64::new(1.0, 0.0);
        m[(1, 2)] = C64::new(0.0, 1.0);
        m[(2, 1)] = C64::new(0.0, -1.0);
        let ev = hermitian_eigenvalues(&m).unwrap();
        for (got, want) in ev.iter().zip([0.0, 0.0, 0.0, 2.0]) {
            assert!((got - want).abs() < 1e-14, "{ev:?}");
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMat4::unit(0, 1);
        assert!(matches!(hermitian_eigenvalues(&m), Err(Error::NotHermitian(_))));
        let mut nan = ComplexMat4::identity();
        nan[(0, 0)] = C64::new(f64::NAN, 0.0);
        assert!(hermitian_eigenvalues(&nan).is_err());
    }
}
