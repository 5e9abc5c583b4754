// SPDX-License-Identifier: Apache-2.0
//! Four-generator Lie algebra and its 2×2 representation.
//!
//! Basis: `K1 ↦ diag(1,0)`, `K2 ↦ diag(0,1)`, `K3 ↦ σ1/2`, `K4 ↦ σ2/2`.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

pub type Matrix2 = nalgebra::Matrix2<Complex64>;

/// Default bound on imaginary coefficients for the Hermitian classification.
pub const DEFAULT_HERMITIAN_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// `c1 K1 + c2 K2 + c3 K3 + c4 K4` with complex coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct AlgebraElement {
    pub coeffs: [Complex64; 4],
}

impl AlgebraElement {
    pub const fn new(c1: Complex64, c2: Complex64, c3: Complex64, c4: Complex64) -> Self {
        Self { coeffs: [c1, c2, c3, c4] }
    }

    pub fn from_real(c: [f64; 4]) -> Self {
        Self { coeffs: c.map(|v| Complex64::new(v, 0.0)) }
    }

    pub const fn zero() -> Self {
        Self { coeffs: [ZERO; 4] }
    }

    /// The generator `K_{index+1}`.
    pub fn basis(index: usize) -> Self {
        let mut c = [ZERO; 4];
        c[index] = ONE;
        Self { coeffs: c }
    }

    pub fn re(&self) -> [f64; 4] {
        self.coeffs.map(|c| c.re)
    }

    pub fn im(&self) -> [f64; 4] {
        self.coeffs.map(|c| c.im)
    }

    pub fn max_imag(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.im.abs()))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_imag() < tol
    }

    /// Euclidean norm of the coefficient 4-vector.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { coeffs: self.coeffs.map(|c| c * s) }
    }

    pub fn to_matrix(&self) -> Matrix2 {
        to_matrix(self)
    }
}

impl Add for AlgebraElement {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut c = self.coeffs;
        for (a, b) in c.iter_mut().zip(rhs.coeffs) {
            *a += b;
        }
        Self { coeffs: c }
    }
}

impl Sub for AlgebraElement {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for AlgebraElement {
    type Output = Self;
    fn neg(self) -> Self {
        Self { coeffs: self.coeffs.map(|c| -c) }
    }
}

impl Mul<f64> for AlgebraElement {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Self { coeffs: self.coeffs.map(|c| c * rhs) }
    }
}

impl Mul<Complex64> for AlgebraElement {
    type Output = Self;
    fn mul(self, rhs: Complex64) -> Self {
        self.scale(rhs)
    }
}

/// `[K_i, K_j]` expanded in the basis.
const fn bracket(i: usize, j: usize) -> [Complex64; 4] {
    const P: Complex64 = Complex64::new(0.0, 1.0);
    const M: Complex64 = Complex64::new(0.0, -1.0);
    const H: Complex64 = Complex64::new(0.0, 0.5);
    const MH: Complex64 = Complex64::new(0.0, -0.5);
    match (i, j) {
        (0, 2) => [ZERO, ZERO, ZERO, P],
        (2, 0) => [ZERO, ZERO, ZERO, M],
        (0, 3) => [ZERO, ZERO, M, ZERO],
        (3, 0) => [ZERO, ZERO, P, ZERO],
        (1, 2) => [ZERO, ZERO, ZERO, M],
        (2, 1) => [ZERO, ZERO, ZERO, P],
        (1, 3) => [ZERO, ZERO, P, ZERO],
        (3, 1) => [ZERO, ZERO, M, ZERO],
        (2, 3) => [H, MH, ZERO, ZERO],
        (3, 2) => [MH, H, ZERO, ZERO],
        _ => [ZERO; 4],
    }
}

/// `[A, B]` via the structure constants.
pub fn commutator(a: &AlgebraElement, b: &AlgebraElement) -> AlgebraElement {
    let mut out = [ZERO; 4];
    for i in 0..4 {
        for j in 0..4 {
            let w = a.coeffs[i] * b.coeffs[j];
            if w == ZERO {
                continue;
            }
            for (o, s) in out.iter_mut().zip(bracket(i, j)) {
                *o += w * s;
            }
        }
    }
    AlgebraElement { coeffs: out }
}

pub fn to_matrix(a: &AlgebraElement) -> Matrix2 {
    let [c1, c2, c3, c4] = a.coeffs;
    Matrix2::new(c1, (c3 - I * c4) * 0.5, (c3 + I * c4) * 0.5, c2)
}

pub fn from_matrix(m: &Matrix2) -> AlgebraElement {
    let (m12, m21) = (m[(0, 1)], m[(1, 0)]);
    AlgebraElement::new(m[(0, 0)], m[(1, 1)], m12 + m21, I * (m12 - m21))
}

/// Eigenvalues of a 2×2 complex matrix from trace and determinant.
pub fn eigenvalues2(m: &Matrix2) -> [Complex64; 2] {
    let half_tr = (m[(0, 0)] + m[(1, 1)]) * 0.5;
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = (half_tr * half_tr - det).sqrt();
    [half_tr - disc, half_tr + disc]
}

/// Group parameters of `η = e^{γ1 K1} e^{γ2 K2} e^{γ3 K3} e^{γ4 K4}`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct DysonParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub gamma4: f64,
}

impl DysonParams {
    pub fn new(gamma1: f64, gamma2: f64, gamma3: f64, gamma4: f64) -> Self {
        Self { gamma1, gamma2, gamma3, gamma4 }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.gamma1, self.gamma2, self.gamma3, self.gamma4]
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|g| g.is_finite())
    }

    /// The four factor matrices in product order.
    fn factors(&self, sign: f64) -> [Matrix2; 4] {
        let g = self.as_array().map(|v| v * sign);
        [factor_exp(0, g[0]), factor_exp(1, g[1]), factor_exp(2, g[2]), factor_exp(3, g[3])]
    }

    /// `η` in the 2×2 representation.
    pub fn matrix(&self) -> Matrix2 {
        let [f1, f2, f3, f4] = self.factors(1.0);
        f1 * f2 * f3 * f4
    }

    /// `η⁻¹`, assembled from inverted factors in reverse order.
    pub fn inverse_matrix(&self) -> Matrix2 {
        let [f1, f2, f3, f4] = self.factors(-1.0);
        f4 * f3 * f2 * f1
    }
}

/// Closed-form `exp(γ K_{index+1})` in the 2×2 representation.
pub fn factor_exp(index: usize, gamma: f64) -> Matrix2 {
    let c = Complex64::new((gamma * 0.5).cosh(), 0.0);
    let s = (gamma * 0.5).sinh();
    match index {
        0 => Matrix2::new(Complex64::new(gamma.exp(), 0.0), ZERO, ZERO, ONE),
        1 => Matrix2::new(ONE, ZERO, ZERO, Complex64::new(gamma.exp(), 0.0)),
        2 => Matrix2::new(c, Complex64::new(s, 0.0), Complex64::new(s, 0.0), c),
        3 => Matrix2::new(c, Complex64::new(0.0, -s), Complex64::new(0.0, s), c),
        _ => panic!("generator index {index} out of range"),
    }
}

/// `η A η⁻¹`.
pub fn conjugate(params: &DysonParams, a: &AlgebraElement) -> AlgebraElement {
    from_matrix(&(params.matrix() * to_matrix(a) * params.inverse_matrix()))
}

/// `η⁻¹ A η`.
pub fn conjugate_inverse(params: &DysonParams, a: &AlgebraElement) -> AlgebraElement {
    from_matrix(&(params.inverse_matrix() * to_matrix(a) * params.matrix()))
}

/// `i η̇ η⁻¹` from the product rule over the ordered factors.
pub fn time_term(params: &DysonParams, rates: &[f64; 4]) -> AlgebraElement {
    let [f1, f2, f3, _] = params.factors(1.0);
    let [g1, g2, g3, _] = params.factors(-1.0);
    let k3 = to_matrix(&AlgebraElement::basis(2));
    let k4 = to_matrix(&AlgebraElement::basis(3));
    let lead = f1 * f2;
    let lead_inv = g2 * g1;
    let ad3 = lead * k3 * lead_inv;
    let ad4 = lead * f3 * k4 * g3 * lead_inv;
    let m = (to_matrix(&AlgebraElement::basis(0)) * Complex64::new(rates[0], 0.0)
        + to_matrix(&AlgebraElement::basis(1)) * Complex64::new(rates[1], 0.0)
        + ad3 * Complex64::new(rates[2], 0.0)
        + ad4 * Complex64::new(rates[3], 0.0))
        * I;
    from_matrix(&m)
}
