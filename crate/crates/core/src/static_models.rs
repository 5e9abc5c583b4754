// SPDX-License-Identifier: Apache-2.0
//! Time-independent coupled oscillators: decoupling, exceptional points,
//! spectra and the broken-regime eigenfunctions.

use num_complex::Complex64;

use crate::algebra::AlgebraElement;
use crate::error::{Error, Result};
use crate::modes::hermite;

/// Largest quantum number accepted by [`static_eigenstate`].
pub const MAX_STATIC_DEGREE: usize = 20;

/// Oscillator pair with an imaginary spatial coupling `iκxy`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XYModel {
    pub m: f64,
    pub omega_x: f64,
    pub omega_y: f64,
    pub kappa: f64,
}

impl XYModel {
    /// Coupling strength at which the decoupling degenerates.
    pub fn exceptional_bound(&self) -> f64 {
        0.5 * self.m * (self.omega_y * self.omega_y - self.omega_x * self.omega_x).abs()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XYDecoupling {
    pub theta: f64,
    pub omega_x: f64,
    pub omega_y: f64,
}

pub fn decouple_xy(model: &XYModel) -> Result<XYDecoupling> {
    let XYModel { m, omega_x, omega_y, kappa } = *model;
    if !(m > 0.0 && omega_x > 0.0 && omega_y > 0.0 && kappa.is_finite()) {
        return Err(Error::constraint("XY model needs m > 0, Ω_x > 0, Ω_y > 0 and finite κ"));
    }
    if kappa == 0.0 {
        return Ok(XYDecoupling { theta: 0.0, omega_x, omega_y });
    }
    let bound = model.exceptional_bound();
    if kappa.abs() >= bound {
        return Err(Error::ExceptionalPoint { kappa: kappa.abs(), bound });
    }
    let (ox2, oy2) = (omega_x * omega_x, omega_y * omega_y);
    let theta = 0.5 * (2.0 * kappa / (m * (oy2 - ox2))).atanh();
    let (ch2, sh2, c2) = (theta.cosh().powi(2), theta.sinh().powi(2), (2.0 * theta).cosh());
    Ok(XYDecoupling {
        theta,
        omega_x: ((ox2 * ch2 + oy2 * sh2) / c2).sqrt(),
        omega_y: ((ox2 * sh2 + oy2 * ch2) / c2).sqrt(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Level {
    pub n: usize,
    pub m: usize,
    pub energy: f64,
}

/// `(n+½)ω_x + (m+½)ω_y` for `n ≤ n_max`, `m ≤ m_max`, sorted by energy.
pub fn spectrum_xy(omega_x: f64, omega_y: f64, n_max: usize, m_max: usize) -> Result<Vec<Level>> {
    if !(omega_x > 0.0 && omega_y > 0.0) {
        return Err(Error::constraint("frequencies must be positive"));
    }
    let mut levels: Vec<Level> = (0..=n_max)
        .flat_map(|n| (0..=m_max).map(move |m| (n, m)))
        .map(|(n, m)| Level { n, m, energy: (n as f64 + 0.5) * omega_x + (m as f64 + 0.5) * omega_y })
        .collect();
    levels.sort_by(|a, b| a.energy.total_cmp(&b.energy).then((a.n, a.m).cmp(&(b.n, b.m))));
    Ok(levels)
}

/// `aK1 + bK2 + iλK3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KModel {
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
}

impl KModel {
    pub fn hamiltonian(&self) -> AlgebraElement {
        AlgebraElement::new(
            Complex64::new(self.a, 0.0),
            Complex64::new(self.b, 0.0),
            Complex64::new(0.0, self.lambda),
            Complex64::new(0.0, 0.0),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KDecoupling {
    /// `h_K = e^{θK4} H_K e^{−θK4}`.
    Unbroken {
        theta: f64,
        hamiltonian: AlgebraElement,
    },
    Broken,
}

pub fn decouple_k(model: &KModel) -> KDecoupling {
    let KModel { a, b, lambda } = *model;
    let gap = a - b;
    if lambda.abs() >= gap.abs() {
        return KDecoupling::Broken;
    }
    let theta = (lambda / (b - a)).atanh();
    let split = 0.5 * gap.signum() * (gap * gap - lambda * lambda).sqrt();
    let mean = 0.5 * (a + b);
    KDecoupling::Unbroken { theta, hamiltonian: AlgebraElement::from_real([mean + split, mean - split, 0.0, 0.0]) }
}

/// `a(1+n+m) + i(λ/2)(n−m)`.
pub fn broken_spectrum(a: f64, lambda: f64, n: usize, m: usize) -> Complex64 {
    Complex64::new(a * (1 + n + m) as f64, 0.5 * lambda * (n as f64 - m as f64))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Polynomial part of `φ_{n,m}`: the two Hermite sums and the normalization, without the Gaussian.
pub(crate) fn static_polynomial(n: usize, m: usize, x: f64, y: f64) -> Result<f64> {
    let cap = n.max(m);
    if cap > MAX_STATIC_DEGREE {
        return Err(Error::UnsupportedDegree { degree: cap, max: MAX_STATIC_DEGREE });
    }
    let mut first = 0.0;
    for k in 0..=n {
        first += binomial(n, k) * hermite(k, x)? * hermite(n - k, y)?;
    }
    let mut second = 0.0;
    for l in 0..=m {
        let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
        second += sign * binomial(m, l) * hermite(l, y)? * hermite(m - l, x)?;
    }
    let fact = |k: usize| (1..=k).fold(1.0, |acc, j| acc * j as f64);
    let norm = 2f64.powi((n + m) as i32) * (fact(n) * fact(m) * std::f64::consts::PI).sqrt();
    Ok(first * second / norm)
}

/// Broken-regime eigenfunction `φ_{n,m}(x, y)` of `H_K(b = a)`.
pub fn static_eigenstate(n: usize, m: usize, x: f64, y: f64) -> Result<f64> {
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::constraint("coordinates must be finite"));
    }
    Ok((-0.5 * (x * x + y * y)).exp() * static_polynomial(n, m, x, y)?)
}

/// Tensor Gauss–Hermite Gram matrix of `φ_{n,m}` for `n, m ≤ max_index`,
/// indexed by `n (max_index+1) + m`.
pub fn static_gram_matrix(max_index: usize) -> Result<Vec<Vec<f64>>> {
    use gauss_quad::GaussHermite;
    use std::num::NonZeroUsize;
    let nodes = 2 * max_index + 8;
    let rule = GaussHermite::new(NonZeroUsize::new(nodes).expect("nonzero"));
    let pairs: Vec<(f64, f64)> = rule.iter().map(|(x, w)| (*x, *w)).collect();
    let count = (max_index + 1) * (max_index + 1);
    let mut table = vec![vec![0.0; count]; pairs.len() * pairs.len()];
    for (i, (x, _)) in pairs.iter().enumerate() {
        for (j, (y, _)) in pairs.iter().enumerate() {
            for s in 0..count {
                table[i * pairs.len() + j][s] = static_polynomial(s / (max_index + 1), s % (max_index + 1), *x, *y)?;
            }
        }
    }
    let mut gram = vec![vec![0.0; count]; count];
    for (i, (_, wx)) in pairs.iter().enumerate() {
        for (j, (_, wy)) in pairs.iter().enumerate() {
            let row = &table[i * pairs.len() + j];
            let w = wx * wy;
            for s in 0..count {
                for r in 0..count {
                    gram[s][r] += w * row[s] * row[r];
                }
            }
        }
    }
    Ok(gram)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{conjugate, eigenvalues2, DysonParams};
    use crate::numerics;
    use proptest::prelude::*;

    #[test]
    fn xy_special_cases() {
        let free = XYModel { m: 1.0, omega_x: 1.0, omega_y: 2.0, kappa: 0.0 };
        assert_eq!(decouple_xy(&free).unwrap(), XYDecoupling { theta: 0.0, omega_x: 1.0, omega_y: 2.0 });
        let edge = XYModel { m: 1.0, omega_x: 1.0, omega_y: 3f64.sqrt(), kappa: 1.0 };
        assert!(matches!(decouple_xy(&edge), Err(Error::ExceptionalPoint { .. })));
        let exact = XYModel { kappa: edge.exceptional_bound(), ..edge };
        assert!(matches!(decouple_xy(&exact), Err(Error::ExceptionalPoint { .. })));
        let equal = XYModel { m: 1.0, omega_x: 1.0, omega_y: 1.0, kappa: 0.1 };
        assert!(decouple_xy(&equal).is_err());
    }

    #[test]
    fn spectrum_values() {
        assert_eq!(spectrum_xy(1.0, 1.0, 0, 0).unwrap()[0].energy, 1.0);
        let s = spectrum_xy(1.0, 2.0, 3, 3).unwrap();
        let e10 = s.iter().find(|l| l.n == 1 && l.m == 0).unwrap().energy;
        assert_eq!(e10, 2.5);
        assert!(s.windows(2).all(|w| w[0].energy <= w[1].energy));
    }

    #[test]
    fn k_decoupling() {
        match decouple_k(&KModel { a: 1.3, b: 0.4, lambda: 0.0 }) {
            KDecoupling::Unbroken { theta, hamiltonian } => {
                assert_eq!(theta, 0.0);
                assert!((hamiltonian - AlgebraElement::from_real([1.3, 0.4, 0.0, 0.0])).norm() < 1e-15);
            }
            KDecoupling::Broken => panic!("unexpected broken regime"),
        }
        assert_eq!(decouple_k(&KModel { a: 1.0, b: 1.0, lambda: 0.2 }), KDecoupling::Broken);
        let model = KModel { a: 1.0, b: 3.0, lambda: 1.0 };
        let KDecoupling::Unbroken { theta, hamiltonian } = decouple_k(&model) else { panic!() };
        let split = 0.5 * (hamiltonian.coeffs[0].re - hamiltonian.coeffs[1].re);
        assert!((split.abs() - 3f64.sqrt() / 2.0).abs() < 1e-15);
        let mapped = conjugate(&DysonParams::new(0.0, 0.0, 0.0, theta), &model.hamiltonian());
        assert!((mapped - hamiltonian).norm() < 1e-12);
    }

    #[test]
    fn broken_spectrum_values() {
        assert_eq!(broken_spectrum(1.0, 0.3, 0, 0), Complex64::new(1.0, 0.0));
        assert_eq!(broken_spectrum(1.0, 0.4, 1, 0), Complex64::new(2.0, 0.2));
        for (n, m) in [(3, 1), (0, 5), (2, 2)] {
            assert_eq!(broken_spectrum(0.7, 0.9, n, m), broken_spectrum(0.7, 0.9, m, n).conj());
        }
    }

    /// Rotated-coordinate form of the eigenfunctions, used as an oracle.
    fn rotated(n: usize, m: usize, x: f64, y: f64) -> f64 {
        let (xi, zeta) = ((x + y) / 2f64.sqrt(), (x - y) / 2f64.sqrt());
        let fact = |k: usize| (1..=k).fold(1.0, |acc, j| acc * j as f64);
        let norm = (2f64.powi((n + m) as i32) * fact(n) * fact(m) * std::f64::consts::PI).sqrt();
        (-0.5 * (x * x + y * y)).exp() * hermite(n, xi).unwrap() * hermite(m, zeta).unwrap() / norm
    }

    #[test]
    fn eigenstate_forms() {
        let g = static_eigenstate(0, 0, 0.3, -0.7).unwrap();
        assert!((g - (-(0.09 + 0.49) / 2.0f64).exp() / std::f64::consts::PI.sqrt()).abs() < 1e-15);
        for (n, m) in [(1, 0), (2, 3), (4, 4), (6, 1)] {
            for &(x, y) in &[(0.2, 0.5), (-1.1, 0.7), (1.9, -1.3)] {
                let v = static_eigenstate(n, m, x, y).unwrap();
                assert!((v - rotated(n, m, x, y)).abs() < 1e-13, "({n},{m})");
            }
        }
        assert!(matches!(static_eigenstate(21, 0, 0.0, 0.0), Err(Error::UnsupportedDegree { .. })));
    }

    #[test]
    fn orthonormal_under_quadrature() {
        let gram = static_gram_matrix(4).unwrap();
        for (i, row) in gram.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((v - target).abs() < 1e-10, "({i},{j}) = {v}");
            }
        }
    }

    #[test]
    fn pt_reflection_swaps_labels() {
        for (n, m) in [(1, 0), (2, 2), (3, 1)] {
            for &(x, y) in &[(0.3, 0.4), (-0.8, 1.2), (1.5, -0.2)] {
                let reflected = static_eigenstate(n, m, x, -y).unwrap();
                assert!((reflected - static_eigenstate(m, n, x, y).unwrap()).abs() < 1e-13);
                let sign = if (n + m) % 2 == 0 { 1.0 } else { -1.0 };
                let other = static_eigenstate(n, m, -x, y).unwrap();
                assert!((other - sign * static_eigenstate(m, n, x, y).unwrap()).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn hamiltonian_eigenvalue_by_differences() {
        // H_K = a(K1+K2) + iλK3 applied to φ_{1,0} with second-order stencils in x and y.
        let (a, lambda, h) = (1.0, 0.4, 1e-3);
        let phi = |x: f64, y: f64| static_eigenstate(1, 0, x, y).unwrap();
        let dom = (-10.0, 10.0);
        for &(x, y) in &[(0.4, 0.9), (-0.6, 0.3)] {
            let f = phi(x, y);
            let dxx = numerics::second_derivative(|s| Ok(phi(s, y)), x, h, dom).unwrap();
            let dyy = numerics::second_derivative(|s| Ok(phi(x, s)), y, h, dom).unwrap();
            let dxy = (phi(x + h, y + h) - phi(x + h, y - h) - phi(x - h, y + h) + phi(x - h, y - h)) / (4.0 * h * h);
            let k12 = 0.5 * (-dxx - dyy + (x * x + y * y) * f);
            let k3 = 0.5 * (x * y * f - dxy);
            let applied = Complex64::new(a * k12, lambda * k3);
            assert!((applied / f - broken_spectrum(a, lambda, 1, 0)).norm() < 1e-5);
        }
    }

    proptest! {
        #[test]
        fn xy_matches_potential_matrix(m in 0.5..2.0f64, ox in 0.3..2.0f64, oy in 0.3..2.0f64, frac in -0.99..0.99f64) {
            let model = XYModel { m, omega_x: ox, omega_y: oy, kappa: 0.0 };
            prop_assume!(model.exceptional_bound() > 1e-3);
            let model = XYModel { kappa: frac * model.exceptional_bound(), ..model };
            let d = decouple_xy(&model).unwrap();
            let pot = crate::algebra::Matrix2::new(
                Complex64::new(m * ox * ox, 0.0), Complex64::new(0.0, model.kappa),
                Complex64::new(0.0, model.kappa), Complex64::new(m * oy * oy, 0.0));
            let mut ev: Vec<f64> = eigenvalues2(&pot).iter().map(|z| z.re).collect();
            ev.sort_by(f64::total_cmp);
            let mut got = [m * d.omega_x * d.omega_x, m * d.omega_y * d.omega_y];
            got.sort_by(f64::total_cmp);
            prop_assert!((ev[0] - got[0]).abs() < 1e-10 && (ev[1] - got[1]).abs() < 1e-10);
            prop_assert!((d.omega_x.powi(2) + d.omega_y.powi(2) - ox * ox - oy * oy).abs() < 1e-12);
        }
    }
}
