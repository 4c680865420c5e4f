//! Density matrices of the qubit pair.
//!
//! Basis ordering is `|b₁b₂⟩ ↦ 2·b₁ + b₂`, i.e. `|00⟩, |01⟩, |10⟩, |11⟩` with
//! the first digit labelling qubit 1. Bit 1 is the excited state `|e⟩`, with
//! `σᶻ|e⟩ = +|e⟩` and `σ⁺ = |e⟩⟨g|`, so `σ⁺σ⁻` projects on the excited level.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::smallmat::{hermitian_eigenvalues, ComplexMat4};

pub const HERMITIAN_TOL: f64 = 1e-9;
pub const TRACE_TOL: f64 = 1e-9;
pub const PSD_TOL: f64 = 1e-8;
/// Outcome probabilities at or below this are treated as impossible.
pub const ZERO_PROBABILITY: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Qubit {
    One,
    Two,
}

/// Computational basis label `|b₁b₂⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BasisLabel {
    pub q1: bool,
    pub q2: bool,
}

impl BasisLabel {
    pub const GG: Self = Self::new(false, false);
    pub const GE: Self = Self::new(false, true);
    pub const EG: Self = Self::new(true, false);
    pub const EE: Self = Self::new(true, true);

    pub const fn new(q1: bool, q2: bool) -> Self {
        Self { q1, q2 }
    }

    pub fn index(self) -> usize {
        2 * self.q1 as usize + self.q2 as usize
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.q1 as u8, self.q2 as u8)
    }
}

impl FromStr for BasisLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bit = |c: u8| match c {
            b'0' => Ok(false),
            b'1' => Ok(true),
            _ => Err(()),
        };
        match s.trim().as_bytes() {
            [a, b] => match (bit(*a), bit(*b)) {
                (Ok(q1), Ok(q2)) => Ok(Self::new(q1, q2)),
                _ => Err(Error::InvalidParameter(format!("basis label `{s}` is not one of 00|01|10|11"))),
            },
            _ => Err(Error::InvalidParameter(format!("basis label `{s}` is not one of 00|01|10|11"))),
        }
    }
}

/// Result of a projective measurement of qubit 1 in the `{|0⟩, |1⟩}` basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Ground = 0,
    Excited = 1,
}

impl Outcome {
    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Outcome::Ground),
            1 => Some(Outcome::Excited),
            _ => None,
        }
    }
}

/// A 4×4 Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix(ComplexMat4);

impl DensityMatrix {
    /// Validates all density-matrix invariants.
    pub fn new(mat: ComplexMat4) -> Result<Self> {
        let rho = Self(mat);
        rho.check()?;
        Ok(rho)
    }

    /// Wraps a matrix without validation; the caller owns the invariants.
    pub fn new_unchecked(mat: ComplexMat4) -> Self {
        Self(mat)
    }

    pub fn basis_state(label: BasisLabel) -> Self {
        let i = label.index();
        Self(ComplexMat4::unit(i, i))
    }

    /// Pure state `|ψ⟩⟨ψ|` from (not necessarily normalized) amplitudes.
    pub fn pure(amplitudes: [C64; 4]) -> Result<Self> {
        let norm2: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if !(norm2 > 0.0 && norm2.is_finite()) {
            return Err(Error::InvalidParameter("state vector has zero norm".into()));
        }
        let s = norm2.sqrt().recip();
        let psi = amplitudes.map(|z| z * s);
        Ok(Self(ComplexMat4::outer(&psi, &psi)))
    }

    /// `(|01⟩ + |10⟩)/√2`.
    pub fn bell_single_excitation() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let z = C64::new(0.0, 0.0);
        Self::pure([z, C64::new(h, 0.0), C64::new(h, 0.0), z]).expect("non-zero")
    }

    pub fn maximally_mixed() -> Self {
        Self(ComplexMat4::identity().scale_real(0.25))
    }

    /// Convex combination `w·a + (1-w)·b`.
    pub fn mix(a: &Self, b: &Self, w: f64) -> Self {
        Self(a.0.scale_real(w) + b.0.scale_real(1.0 - w))
    }

    pub fn matrix(&self) -> &ComplexMat4 {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMat4 {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn check(&self) -> Result<()> {
        if !self.0.is_finite() {
            return Err(Error::InvalidParameter("density matrix has non-finite entries".into()));
        }
        let herm = self.0.hermiticity_defect();
        if herm >= HERMITIAN_TOL {
            return Err(Error::InvalidParameter(format!("density matrix not Hermitian ({herm:e})")));
        }
        let tr = self.0.trace();
        if (tr.re - 1.0).abs() >= TRACE_TOL || tr.im.abs() >= TRACE_TOL {
            return Err(Error::InvalidParameter(format!("density matrix trace is {tr}")));
        }
        let ev = hermitian_eigenvalues(&self.0.hermitian_part())?;
        if ev[0] <= -PSD_TOL {
            return Err(Error::InvalidParameter(format!("density matrix has negative eigenvalue {:e}", ev[0])));
        }
        Ok(())
    }

    /// `⟨σᵢ⁺σᵢ⁻⟩`, clamped to `[0, 1]`.
    pub fn population(&self, qubit: Qubit) -> f64 {
        population_raw(&self.0, qubit).clamp(0.0, 1.0)
    }

    /// `tr ρ²`.
    pub fn purity(&self) -> f64 {
        // tr(ρρ) = Σ_ij ρ_ij ρ_ji = Σ_ij |ρ_ij|² for Hermitian ρ
        self.0 .0.iter().flatten().map(|z| z.norm_sqr()).sum()
    }

    /// Transpose over qubit-1 indices: `⟨b₁b₂|ρ^{T₁}|b₁'b₂'⟩ = ⟨b₁'b₂|ρ|b₁b₂'⟩`.
    pub fn partial_transpose_q1(&self) -> ComplexMat4 {
        let mut out = ComplexMat4::zeros();
        for i in 0..4 {
            let (b1, b2) = (i >> 1, i & 1);
            for j in 0..4 {
                let (c1, c2) = (j >> 1, j & 1);
                out.0[i][j] = self.0 .0[(c1 << 1) | b2][(b1 << 1) | c2];
            }
        }
        out
    }

    /// Sum of the magnitudes of the negative eigenvalues of `ρ^{T₁}`.
    pub fn negativity(&self) -> f64 {
        let pt = self.partial_transpose_q1();
        // Hermitian whenever ρ is; unchecked states that drifted use the
        // Hermitian part, and non-finite ones give NaN.
        match hermitian_eigenvalues(&pt).or_else(|_| hermitian_eigenvalues(&pt.hermitian_part())) {
            Ok(ev) => ev.iter().filter(|&&x| x < 0.0).fold(0.0, |acc, x| acc - x),
            Err(_) => f64::NAN,
        }
    }

    /// Projective measurement of qubit 1. Returns the normalized post-state and
    /// the probability of `outcome`.
    pub fn collapse_q1(&self, outcome: Outcome) -> Result<(Self, f64)> {
        let keep = |i: usize| (i >> 1) == outcome as usize;
        let p: f64 = (0..4).filter(|&i| keep(i)).map(|i| self.0 .0[i][i].re).sum();
        if p <= ZERO_PROBABILITY {
            return Err(Error::ZeroProbabilityOutcome { outcome: outcome.as_u8(), probability: p });
        }
        let mut out = ComplexMat4::zeros();
        for i in (0..4).filter(|&i| keep(i)) {
            for j in (0..4).filter(|&j| keep(j)) {
                out.0[i][j] = self.0 .0[i][j] / p;
            }
        }
        Ok((Self(out), p))
    }
}

/// Unclamped `⟨σᵢ⁺σᵢ⁻⟩` straight from the diagonal.
#[inline]
pub(crate) fn population_raw(m: &ComplexMat4, qubit: Qubit) -> f64 {
    match qubit {
        Qubit::One => m.0[2][2].re + m.0[3][3].re,
        Qubit::Two => m.0[1][1].re + m.0[3][3].re,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn basis_states_are_diagonal_projectors() {
        assert_eq!(DensityMatrix::basis_state(BasisLabel::GG).matrix(), &ComplexMat4::from_diag_real([1., 0., 0., 0.]));
        assert_eq!(DensityMatrix::basis_state(BasisLabel::GE).matrix(), &ComplexMat4::from_diag_real([0., 1., 0., 0.]));
        assert_eq!(DensityMatrix::basis_state(BasisLabel::EG).matrix(), &ComplexMat4::from_diag_real([0., 0., 1., 0.]));
        assert_eq!("10".parse::<BasisLabel>().unwrap(), BasisLabel::EG);
        assert!("2".parse::<BasisLabel>().is_err());
        assert!("012".parse::<BasisLabel>().is_err());
    }

    #[test]
    fn populations() {
        let eg = DensityMatrix::basis_state(BasisLabel::EG);
        assert_eq!(eg.population(Qubit::One), 1.0);
        assert_eq!(eg.population(Qubit::Two), 0.0);
        let bell = DensityMatrix::bell_single_excitation();
        assert!(close(bell.population(Qubit::One), 0.5, 1e-15));
        assert!(close(bell.population(Qubit::Two), 0.5, 1e-15));
    }

    #[test]
    fn purity_examples() {
        assert_eq!(DensityMatrix::basis_state(BasisLabel::GE).purity(), 1.0);
        assert_eq!(DensityMatrix::maximally_mixed().purity(), 0.25);
        let mix = DensityMatrix::mix(
            &DensityMatrix::basis_state(BasisLabel::GE),
            &DensityMatrix::basis_state(BasisLabel::EG),
            0.5,
        );
        assert_eq!(mix.purity(), 0.5);
    }

    #[test]
    fn partial_transpose_leaves_diagonal_and_products() {
        let d = DensityMatrix::new(ComplexMat4::from_diag_real([0.1, 0.2, 0.3, 0.4])).unwrap();
        assert_eq!(&d.partial_transpose_q1(), d.matrix());

        // |1⟩⟨1| ⊗ ρ₂ with a complex coherence on qubit 2
        let mut m = ComplexMat4::zeros();
        m[(2, 2)] = C64::new(0.6, 0.0);
        m[(3, 3)] = C64::new(0.4, 0.0);
        m[(2, 3)] = C64::new(0.1, 0.2);
        m[(3, 2)] = C64::new(0.1, -0.2);
        let rho = DensityMatrix::new(m).unwrap();
        assert_eq!(&rho.partial_transpose_q1(), rho.matrix());
    }

    #[test]
    fn negativity_examples() {
        assert_eq!(DensityMatrix::basis_state(BasisLabel::GE).negativity(), 0.0);
        let bell = DensityMatrix::bell_single_excitation();
        assert!(close(bell.negativity(), 0.5, 1e-12));
        let ev = hermitian_eigenvalues(&bell.partial_transpose_q1()).unwrap();
        for (g, w) in ev.iter().zip([-0.5, 0.5, 0.5, 0.5]) {
            assert!(close(*g, w, 1e-12), "{ev:?}");
        }
        assert_eq!(DensityMatrix::maximally_mixed().negativity(), 0.0);
    }

    #[test]
    fn collapse_examples() {
        let eg = DensityMatrix::basis_state(BasisLabel::EG);
        let (post, p) = eg.collapse_q1(Outcome::Excited).unwrap();
        assert_eq!(p, 1.0);
        assert_eq!(post, eg);

        let ge = DensityMatrix::basis_state(BasisLabel::GE);
        assert!(matches!(ge.collapse_q1(Outcome::Excited), Err(Error::ZeroProbabilityOutcome { outcome: 1, .. })));

        let bell = DensityMatrix::bell_single_excitation();
        let (post, p) = bell.collapse_q1(Outcome::Excited).unwrap();
        assert!(close(p, 0.5, 1e-15));
        assert!(post.matrix().max_abs_diff(eg.matrix()) < 1e-15);
        post.check().unwrap();
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        assert!(DensityMatrix::new(ComplexMat4::from_diag_real([0.5, 0.5, 0.5, 0.0])).is_err());
        assert!(DensityMatrix::new(ComplexMat4::from_diag_real([1.5, -0.5, 0.0, 0.0])).is_err());
        assert!(DensityMatrix::new(ComplexMat4::unit(0, 1) + ComplexMat4::unit(0, 0)).is_err());
    }
}
