//! Fixed-size complex linear algebra: Pauli and Dirac matrices in the
//! standard representation, two-component spinors and the small helpers the
//! rest of the crate needs.
//!
//! Norms are Frobenius for matrices and Euclidean for spinors throughout.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Complex = Complex64;

/// The imaginary unit.
pub const I: Complex = Complex::new(0.0, 1.0);

const ZERO: Complex = Complex::new(0.0, 0.0);
const ONE: Complex = Complex::new(1.0, 0.0);

/// Absolute guard added to the null-space threshold so that the zero matrix
/// is treated as annihilating every vector.
pub const NULLSPACE_FLOOR: f64 = 1e-300;

/// Upper or lower half of a bispinor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinorPair {
    pub c1: Complex,
    pub c2: Complex,
}

impl SpinorPair {
    pub const fn new(c1: Complex, c2: Complex) -> Self {
        Self { c1, c2 }
    }

    /// Rejects NaN or infinite components.
    pub fn try_new(c1: Complex, c2: Complex) -> Result<Self> {
        if [c1.re, c1.im, c2.re, c2.im].iter().all(|x| x.is_finite()) {
            Ok(Self { c1, c2 })
        } else {
            Err(Error::Config(format!(
                "spinor components must be finite, got ({c1}, {c2})"
            )))
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c1.norm_sqr() + self.c2.norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.c1.norm().hypot(self.c2.norm())
    }

    pub fn scale(self, s: Complex) -> Self {
        Self::new(self.c1 * s, self.c2 * s)
    }

    pub fn to_array(self) -> [Complex; 2] {
        [self.c1, self.c2]
    }

    /// Largest componentwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.c1 - other.c1).norm().max((self.c2 - other.c2).norm())
    }
}

impl From<[Complex; 2]> for SpinorPair {
    fn from(a: [Complex; 2]) -> Self {
        Self::new(a[0], a[1])
    }
}

impl Add for SpinorPair {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.c1 + rhs.c1, self.c2 + rhs.c2)
    }
}

impl Sub for SpinorPair {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.c1 - rhs.c1, self.c2 - rhs.c2)
    }
}

/// Square complex matrix stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix<const N: usize>(pub [[Complex; N]; N]);

pub type Matrix2C = Matrix<2>;
pub type Matrix4C = Matrix<4>;

impl<const N: usize> Matrix<N> {
    pub fn zeros() -> Self {
        Self([[ZERO; N]; N])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.0[i][i] = ONE;
        }
        m
    }

    pub fn from_rows(rows: [[Complex; N]; N]) -> Self {
        Self(rows)
    }

    pub fn scale(&self, s: Complex) -> Self {
        let mut out = *self;
        out.0.iter_mut().flatten().for_each(|z| *z *= s);
        out
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                out.0[i][j] = self.0[j][i].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex {
        (0..N).map(|i| self.0[i][i]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest entrywise modulus; used for entrywise identity checks.
    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, x: &[Complex; N]) -> [Complex; N] {
        let mut y = [ZERO; N];
        for (yi, row) in y.iter_mut().zip(&self.0) {
            *yi = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        y
    }
}

impl Matrix2C {
    pub fn apply_pair(&self, w: &SpinorPair) -> SpinorPair {
        self.apply(&w.to_array()).into()
    }

    pub fn determinant(&self) -> Complex {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }
}

impl Matrix4C {
    /// Assembles `[[a, b], [c, d]]` from 2×2 blocks.
    pub fn from_blocks(a: &Matrix2C, b: &Matrix2C, c: &Matrix2C, d: &Matrix2C) -> Self {
        let mut m = Self::zeros();
        for i in 0..2 {
            for j in 0..2 {
                m.0[i][j] = a.0[i][j];
                m.0[i][j + 2] = b.0[i][j];
                m.0[i + 2][j] = c.0[i][j];
                m.0[i + 2][j + 2] = d.0[i][j];
            }
        }
        m
    }

    /// Block `(row, col)` with `row, col ∈ {0, 1}`.
    pub fn block(&self, row: usize, col: usize) -> Matrix2C {
        let mut b = Matrix2C::zeros();
        for i in 0..2 {
            for j in 0..2 {
                b.0[i][j] = self.0[2 * row + i][2 * col + j];
            }
        }
        b
    }
}

impl<const N: usize> Index<(usize, usize)> for Matrix<N> {
    type Output = Complex;
    fn index(&self, (i, j): (usize, usize)) -> &Complex {
        &self.0[i][j]
    }
}

impl<const N: usize> IndexMut<(usize, usize)> for Matrix<N> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex {
        &mut self.0[i][j]
    }
}

impl<const N: usize> Mul for Matrix<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                out.0[i][j] = (0..N).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        out
    }
}

impl<const N: usize> Add for Matrix<N> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut out = self;
        for (a, b) in out.0.iter_mut().flatten().zip(rhs.0.iter().flatten()) {
            *a += b;
        }
        out
    }
}

impl<const N: usize> Sub for Matrix<N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<const N: usize> Neg for Matrix<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-ONE)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
}

/// Space-time index of a Dirac matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaIndex {
    T,
    X,
    Y,
    Z,
}

impl GammaIndex {
    pub const ALL: [GammaIndex; 4] = [GammaIndex::T, GammaIndex::X, GammaIndex::Y, GammaIndex::Z];

    /// Diagonal of the (+,−,−,−) metric.
    pub fn metric(self) -> f64 {
        match self {
            GammaIndex::T => 1.0,
            _ => -1.0,
        }
    }
}

impl From<Axis> for GammaIndex {
    fn from(a: Axis) -> Self {
        match a {
            Axis::X => GammaIndex::X,
            Axis::Y => GammaIndex::Y,
            Axis::Z => GammaIndex::Z,
        }
    }
}

pub fn pauli(axis: Axis) -> Matrix2C {
    let c = |re: f64, im: f64| Complex::new(re, im);
    match axis {
        Axis::X => Matrix2C::from_rows([[ZERO, ONE], [ONE, ZERO]]),
        Axis::Y => Matrix2C::from_rows([[ZERO, c(0.0, -1.0)], [I, ZERO]]),
        Axis::Z => Matrix2C::from_rows([[ONE, ZERO], [ZERO, c(-1.0, 0.0)]]),
    }
}

/// Dirac matrices in the standard representation: `γ⁰ = diag(I, −I)`,
/// `γᵏ = [[0, σₖ], [−σₖ, 0]]`.
pub fn gamma(index: GammaIndex) -> Matrix4C {
    let zero = Matrix2C::zeros();
    let id = Matrix2C::identity();
    let spatial = |axis| {
        let s = pauli(axis);
        Matrix4C::from_blocks(&zero, &s, &(-s), &zero)
    };
    match index {
        GammaIndex::T => Matrix4C::from_blocks(&id, &zero, &zero, &(-id)),
        GammaIndex::X => spatial(Axis::X),
        GammaIndex::Y => spatial(Axis::Y),
        GammaIndex::Z => spatial(Axis::Z),
    }
}

/// `true` iff `‖m·w‖ ≤ tol·(‖m‖·‖w‖ + NULLSPACE_FLOOR)`.
pub fn nullspace_test(m: &Matrix2C, w: &SpinorPair, tol: f64) -> bool {
    let image = m.apply_pair(w).norm();
    image <= tol * (m.frobenius_norm() * w.norm() + NULLSPACE_FLOOR)
}

/// Euclidean norm of a four-component amplitude.
pub fn norm4(x: &[Complex; 4]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn sigma_z_as_printed() {
        let z = pauli(Axis::Z);
        assert_eq!(
            z,
            Matrix2C::from_rows([[c(1., 0.), c(0., 0.)], [c(0., 0.), c(-1., 0.)]])
        );
    }

    #[test]
    fn pauli_is_hermitian_traceless_det_minus_one() {
        for a in Axis::ALL {
            let s = pauli(a);
            assert_eq!(s.adjoint(), s);
            assert_eq!(s.trace(), ZERO);
            assert_eq!(s.determinant(), c(-1.0, 0.0));
        }
    }

    #[test]
    fn pauli_products() {
        // Entry-by-entry oracle for σx·σy written out by hand.
        let x = pauli(Axis::X);
        let y = pauli(Axis::Y);
        let by_hand = Matrix2C::from_rows([
            [
                x[(0, 0)] * y[(0, 0)] + x[(0, 1)] * y[(1, 0)],
                x[(0, 0)] * y[(0, 1)] + x[(0, 1)] * y[(1, 1)],
            ],
            [
                x[(1, 0)] * y[(0, 0)] + x[(1, 1)] * y[(1, 0)],
                x[(1, 0)] * y[(0, 1)] + x[(1, 1)] * y[(1, 1)],
            ],
        ]);
        assert_eq!(x * y, by_hand);
        assert_eq!(by_hand, pauli(Axis::Z).scale(I));
        assert_eq!(x * x, Matrix2C::identity());
    }

    #[test]
    fn gamma_z_upper_right_block_is_sigma_z() {
        assert_eq!(gamma(GammaIndex::Z).block(0, 1), pauli(Axis::Z));
        assert_eq!(gamma(GammaIndex::Z).block(1, 0), -pauli(Axis::Z));
    }

    #[test]
    fn gamma0_squares_to_identity() {
        let g0 = gamma(GammaIndex::T);
        assert_eq!(g0 * g0, Matrix4C::identity());
    }

    #[test]
    fn gamma_x_anticommutes_with_gamma0() {
        let g0 = gamma(GammaIndex::T);
        let gx = gamma(GammaIndex::X);
        assert_eq!(gx * g0 + g0 * gx, Matrix4C::zeros());
    }

    #[test]
    fn nullspace_examples() {
        let w = SpinorPair::new(ONE, ZERO);
        assert!(nullspace_test(&Matrix2C::zeros(), &w, 1e-12));
        assert!(!nullspace_test(&Matrix2C::identity(), &w, 1e-12));

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let m = Matrix2C::from_rows([[ONE, c(0., -1.)], [I, ONE]]);
        let w = SpinorPair::new(c(s, 0.), c(0., -s));
        assert!(nullspace_test(&m, &w, 1e-14));
    }

    #[test]
    fn try_new_rejects_non_finite() {
        assert!(SpinorPair::try_new(c(f64::NAN, 0.), ONE).is_err());
        assert!(SpinorPair::try_new(ONE, c(0., f64::INFINITY)).is_err());
        assert!(SpinorPair::try_new(ONE, I).is_ok());
    }

    #[test]
    fn blocks_round_trip() {
        let g = gamma(GammaIndex::Y);
        let rebuilt = Matrix4C::from_blocks(
            &g.block(0, 0),
            &g.block(0, 1),
            &g.block(1, 0),
            &g.block(1, 1),
        );
        assert_eq!(rebuilt, g);
    }
}
