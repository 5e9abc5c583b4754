// SPDX-License-Identifier: Apache-2.0
//! Lewis–Riesenfeld invariants `I_H = Σ αᵢKᵢ` and `I_h = Σ βᵢKᵢ` in closed form.

use num_complex::Complex64;

use crate::algebra::{commutator, conjugate, AlgebraElement, DysonParams};
use crate::dyson::EPConstants;
use crate::error::{Error, Result};
use crate::numerics;
use crate::profiles::TimeProfile;

/// Relative tolerance used when checking the matching constraints.
const MATCH_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Branch {
    #[default]
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// Integration constants `c1..c4` (complex) and `c5..c8` (real).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvariantCoeffs {
    c: [Complex64; 4],
    real: [f64; 4],
}

impl InvariantCoeffs {
    /// Validates the matching constraints eagerly.
    pub fn new(c: [Complex64; 4], real: [f64; 4]) -> Result<Self> {
        if c.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) || real.iter().any(|v| !v.is_finite()) {
            return Err(Error::constraint("invariant constants must be finite"));
        }
        let scale = 1.0 + c.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if c[0].im.abs() > MATCH_TOL * scale {
            return Err(Error::constraint(format!("Im c1 = 0 required (got {})", c[0].im)));
        }
        let mixed = 4.0 * c[2].re * c[2].im + c[1].re * c[1].im;
        if mixed.abs() > MATCH_TOL * scale * scale {
            return Err(Error::constraint(format!("4 Re c3 Im c3 + Re c2 Im c2 = 0 required (got {mixed})")));
        }
        if 2.0 * c[2].re.abs() <= c[1].im.abs() {
            return Err(Error::constraint(format!(
                "2|Re c3| > |Im c2| required (got {} vs {})",
                2.0 * c[2].re.abs(),
                c[1].im.abs()
            )));
        }
        if c[3].im.abs() > MATCH_TOL * scale {
            return Err(Error::constraint(format!("Im c4 = 0 required (got {})", c[3].im)));
        }
        Ok(Self { c, real })
    }

    /// Constants consistent with the closed-form Dyson map of `(q2, q3)`, with
    /// `c5..c8` fixed by the evolution route on the given branch.
    pub fn from_ep(ep: &EPConstants, c1: f64, c2_re: f64, c3_re: f64, branch: Branch) -> Result<Self> {
        if c3_re <= 0.0 {
            return Err(Error::constraint(format!("Re c3 > 0 required (got {c3_re})")));
        }
        let c2_im = -2.0 * ep.q3 * c3_re;
        let c3_im = -c2_re * c2_im / (4.0 * c3_re);
        let r = (4.0 * c3_re * c3_re - c2_im * c2_im).sqrt();
        let s = branch.sign();
        Self::new(
            [
                Complex64::new(c1, 0.0),
                Complex64::new(c2_re, c2_im),
                Complex64::new(c3_re, c3_im),
                Complex64::new(ep.q2, 0.0),
            ],
            [0.5 * c1 + 0.5 * s * r, 0.5 * c1 - 0.5 * s * r, s * c2_re * r / (2.0 * c3_re), 0.0],
        )
    }

    pub fn complex(&self) -> [Complex64; 4] {
        self.c
    }

    pub fn real(&self) -> [f64; 4] {
        self.real
    }

    /// `(q2, q3)` of the Dyson map encoded by these constants.
    pub fn ep_constants(&self) -> Result<EPConstants> {
        if self.c[2].re <= 0.0 {
            return Err(Error::constraint("Re c3 > 0 required for a Dyson map"));
        }
        EPConstants::new(self.c[3].re, -self.c[1].im / (2.0 * self.c[2].re))
    }

    fn radical(&self) -> f64 {
        (4.0 * self.c[2].re.powi(2) - self.c[1].im.powi(2)).sqrt()
    }
}

/// `α(t)` of the non-Hermitian invariant.
pub fn alpha_coeffs(c: &InvariantCoeffs, lambda: &TimeProfile, t: f64) -> Result<[Complex64; 4]> {
    let u = c.c[3] - lambda.cumulative(t)?;
    let a1 = c.c[0] * 0.5 + c.c[2] * u.cosh();
    Ok([a1, c.c[0] - a1, c.c[1], Complex64::new(0.0, 2.0) * c.c[2] * u.sinh()])
}

pub fn invariant_element(alpha: &[Complex64; 4]) -> AlgebraElement {
    AlgebraElement { coeffs: *alpha }
}

/// `β(t)` of the Hermitian invariant from the matching conditions.
pub fn beta_from_match(c: &InvariantCoeffs, lambda: &TimeProfile, t: f64, branch: Branch) -> Result<[f64; 4]> {
    let u = c.c[3].re - lambda.cumulative(t)?;
    let (c1, c2r, c2i, c3r) = (c.c[0].re, c.c[1].re, c.c[1].im, c.c[2].re);
    let r = c.radical();
    let sech = 1.0 / u.cosh();
    let inner = (4.0 * c3r * c3r - c2i * c2i * sech * sech).sqrt();
    let s = branch.sign();
    Ok([
        0.5 * c1 + 0.5 * s * r,
        0.5 * c1 - 0.5 * s * r,
        s * c2r * r * r / (2.0 * c3r * inner),
        s * c2r * c2i / (2.0 * c3r) * (r / inner) * u.tanh(),
    ])
}

/// `β(t)` from the evolution equations given `∫(b1 − b2)`.
pub fn beta_from_evolution(real: &[f64; 4], b_diff_integral: f64) -> [f64; 4] {
    let [c5, c6, c7, c8] = *real;
    let phase = c8 - b_diff_integral;
    [c5, c6, c7 * phase.cos(), -c7 * phase.sin()]
}

/// Closed-form antiderivative of `b1 − b2`; vanishes where `Λ = Re c4`.
pub fn b_diff_integral(c: &InvariantCoeffs, lambda: &TimeProfile, t: f64) -> Result<f64> {
    let u = c.c[3].re - lambda.cumulative(t)?;
    Ok((c.c[1].im / c.radical() * u.tanh()).atan())
}

/// `(γ3, γ4)` recovered from the non-Hermitian invariant.
pub fn gamma_from_alpha(alpha: &[Complex64; 4]) -> Result<(f64, f64)> {
    let gap = alpha[0].re - alpha[1].re;
    let a3 = alpha[2].im;
    let a4 = alpha[3].im;
    let d = gap * gap - a3 * a3;
    if d <= 0.0 {
        return Err(Error::constraint("(Re α1 − Re α2)² > (Im α3)² violated"));
    }
    if a4.abs() >= d.sqrt() {
        return Err(Error::constraint("|Im α4| < √((Re α1 − Re α2)² − (Im α3)²) violated"));
    }
    if gap == 0.0 {
        return Err(Error::constraint("Re α2 ≠ Re α1 violated"));
    }
    Ok(((a4 / d.sqrt()).atanh(), (a3 / -gap).atanh()))
}

/// Residuals of `Im α1 + Im α2 = 0` and `Re α3 Im α3 + Re α4 Im α4 = 2 Im α1 (Re α2 − Re α1)`.
pub fn additional_constraints(alpha: &[Complex64; 4]) -> (f64, f64) {
    let first = alpha[0].im + alpha[1].im;
    let second =
        alpha[2].re * alpha[2].im + alpha[3].re * alpha[3].im - 2.0 * alpha[0].im * (alpha[1].re - alpha[0].re);
    (first.abs(), second.abs())
}

/// Coefficient norm of `∂ₜI − i[I, H]`, with the derivative by fourth-order differences.
pub fn conservation_residual(
    invariant: impl Fn(f64) -> Result<AlgebraElement>,
    hamiltonian: impl Fn(f64) -> Result<AlgebraElement>,
    t: f64,
    domain: (f64, f64),
) -> Result<f64> {
    let d = numerics::derivative(&invariant, t, 1e-3, domain)?;
    let flow = commutator(&invariant(t)?, &hamiltonian(t)?) * Complex64::new(0.0, 1.0);
    Ok((d - flow).norm())
}

/// Coefficient norm of `η I_H η⁻¹ − I_h`.
pub fn similarity_residual(alpha: &[Complex64; 4], beta: &[f64; 4], params: &DysonParams) -> f64 {
    (conjugate(params, &invariant_element(alpha)) - AlgebraElement::from_real(*beta)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyson::{gamma_closed_form, hermitian_counterpart, non_hermitian_hamiltonian};
    use proptest::prelude::*;

    fn lam() -> TimeProfile {
        TimeProfile::sinusoid(0.5, 0.3, 1.0, 0.0, 10.0).unwrap()
    }

    fn amp() -> TimeProfile {
        TimeProfile::sinusoid(1.0, 0.2, 2.0, 0.0, 10.0).unwrap()
    }

    fn coeffs(branch: Branch) -> InvariantCoeffs {
        InvariantCoeffs::from_ep(&EPConstants::new(1.0, 0.4).unwrap(), 1.0, 1.0, 1.0, branch).unwrap()
    }

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constructor_rejects_violations() {
        let ok = [cx(1.0, 0.0), cx(1.0, 0.4), cx(1.0, -0.1), cx(0.5, 0.0)];
        assert!(InvariantCoeffs::new(ok, [0.0; 4]).is_ok());
        let mut bad = ok;
        bad[0].im = 0.1;
        assert!(InvariantCoeffs::new(bad, [0.0; 4]).is_err());
        let mut bad = ok;
        bad[2].im = 0.3;
        assert!(InvariantCoeffs::new(bad, [0.0; 4]).is_err());
        let bound = [cx(1.0, 0.0), cx(0.0, 2.0), cx(1.0, 0.0), cx(0.5, 0.0)];
        assert!(InvariantCoeffs::new(bound, [0.0; 4]).is_err());
    }

    #[test]
    fn alpha_special_cases() {
        let c = InvariantCoeffs::new([cx(2.0, 0.0), cx(1.0, 0.0), cx(0.0, 0.0), cx(0.3, 0.0)], [0.0; 4]).unwrap_err();
        assert!(matches!(c, Error::ConstraintViolation(_)));
        let c = InvariantCoeffs::new([cx(2.0, 0.0), cx(1.0, 0.0), cx(0.7, 0.0), cx(0.0, 0.0)], [0.0; 4]).unwrap();
        let a = alpha_coeffs(&c, &lam(), 0.0).unwrap();
        assert_eq!(a[0], cx(1.0 + 0.7, 0.0));
        assert_eq!(a[3], cx(0.0, 0.0));
    }

    #[test]
    fn alpha_satisfies_flow_equations() {
        let c = coeffs(Branch::Plus);
        let dom = lam().domain();
        for &t in &[0.0, 1.7, 5.5, 10.0] {
            let a = alpha_coeffs(&c, &lam(), t).unwrap();
            let l = lam().evaluate(t).unwrap();
            let i = cx(0.0, 1.0);
            let expect = [i * l * a[3] * 0.5, -i * l * a[3] * 0.5, cx(0.0, 0.0), i * l * (a[1] - a[0])];
            for k in 0..4 {
                let d = numerics::derivative(|s| Ok(alpha_coeffs(&c, &lam(), s)?[k]), t, 1e-3, dom).unwrap();
                assert!((d - expect[k]).norm() < 1e-7, "k = {k}, t = {t}");
            }
            assert!((a[0] + a[1] - c.complex()[0]).norm() < 1e-13);
            let (r1, r2) = additional_constraints(&a);
            assert!(r1 < 1e-13 && r2 < 1e-11, "{r1} {r2}");
        }
    }

    #[test]
    fn beta_special_cases() {
        let c = InvariantCoeffs::new([cx(1.0, 0.0), cx(0.8, 0.0), cx(1.0, 0.0), cx(0.5, 0.0)], [0.0; 4]).unwrap();
        for &t in &[0.0, 3.0, 8.0] {
            let b = beta_from_match(&c, &lam(), t, Branch::Plus).unwrap();
            assert_eq!(b[3], 0.0);
            assert!((b[2] - 0.8).abs() < 1e-15);
            assert_eq!(b_diff_integral(&c, &lam(), t).unwrap(), 0.0);
        }
        assert_eq!(beta_from_evolution(&[1.0, 2.0, 0.0, 0.3], 1.1)[2..], [0.0, -0.0]);
        assert_eq!(beta_from_evolution(&[1.0, 2.0, 0.7, 0.3], 0.3), [1.0, 2.0, 0.7, -0.0]);
    }

    #[test]
    fn beta_routes_agree() {
        for branch in [Branch::Plus, Branch::Minus] {
            let c = coeffs(branch);
            for k in 0..=40 {
                let t = 0.25 * k as f64;
                let m = beta_from_match(&c, &lam(), t, branch).unwrap();
                let e = beta_from_evolution(&c.real(), b_diff_integral(&c, &lam(), t).unwrap());
                for j in 0..4 {
                    assert!((m[j] - e[j]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn beta_evolution_equations() {
        let c = coeffs(Branch::Plus);
        let dom = lam().domain();
        let beta = |s: f64| Ok(beta_from_evolution(&c.real(), b_diff_integral(&c, &lam(), s)?));
        let ep = c.ep_constants().unwrap();
        for &t in &[0.3, 4.0, 9.9] {
            let (g3, g4) = gamma_closed_form(&lam(), &ep, t).unwrap();
            let h = hermitian_counterpart(amp().evaluate(t).unwrap(), lam().evaluate(t).unwrap(), g3, g4);
            let diff = h.coeffs[0].re - h.coeffs[1].re;
            let b = beta(t).unwrap();
            let d3 = numerics::derivative(|s| Ok(beta(s)?[2]), t, 1e-3, dom).unwrap();
            let d4 = numerics::derivative(|s| Ok(beta(s)?[3]), t, 1e-3, dom).unwrap();
            assert!((d3 + b[3] * diff).abs() < 1e-7);
            assert!((d4 - b[2] * diff).abs() < 1e-7);
        }
    }

    #[test]
    fn b_integral_matches_quadrature() {
        let c = coeffs(Branch::Plus);
        let ep = c.ep_constants().unwrap();
        let rule = numerics::CompositeRule::default();
        let split = |s: f64| {
            let (g3, g4) = gamma_closed_form(&lam(), &ep, s).unwrap();
            let h = hermitian_counterpart(1.0, lam().evaluate(s).unwrap(), g3, g4);
            h.coeffs[0].re - h.coeffs[1].re
        };
        let f0 = b_diff_integral(&c, &lam(), 0.0).unwrap();
        for &t in &[1.0, 5.0, 10.0] {
            let q = rule.integrate(split, 0.0, t, 40, 0.0);
            assert!((b_diff_integral(&c, &lam(), t).unwrap() - f0 - q).abs() < 1e-8);
        }
    }

    #[test]
    fn gamma_from_alpha_matches_closed_form() {
        let c = coeffs(Branch::Plus);
        let ep = c.ep_constants().unwrap();
        assert!((ep.q3 - 0.4).abs() < 1e-15 && ep.q2 == 1.0);
        for k in 0..=20 {
            let t = 0.5 * k as f64;
            let (g3, g4) = gamma_from_alpha(&alpha_coeffs(&c, &lam(), t).unwrap()).unwrap();
            let (e3, e4) = gamma_closed_form(&lam(), &ep, t).unwrap();
            assert!((g3 - e3).abs() < 1e-10 && (g4 - e4).abs() < 1e-10, "t = {t}");
        }
        let trivial = [cx(2.0, 0.0), cx(1.0, 0.0), cx(0.5, 0.0), cx(0.3, 0.0)];
        assert_eq!(gamma_from_alpha(&trivial).unwrap(), (0.0, -0.0));
        let edge = [cx(2.0, 0.0), cx(1.0, 0.0), cx(0.0, 1.0), cx(0.0, 0.0)];
        assert!(gamma_from_alpha(&edge).is_err());
        let wide = [cx(2.0, 0.0), cx(1.0, 0.0), cx(0.0, 0.5), cx(0.0, 0.9)];
        assert!(gamma_from_alpha(&wide).is_err());
    }

    #[test]
    fn conservation_and_controls() {
        let c = coeffs(Branch::Plus);
        let ep = c.ep_constants().unwrap();
        let dom = lam().domain();
        let big_h = |s: f64| Ok(non_hermitian_hamiltonian(amp().evaluate(s)?, lam().evaluate(s)?));
        let small_h = |s: f64| {
            let (g3, g4) = gamma_closed_form(&lam(), &ep, s)?;
            Ok(hermitian_counterpart(amp().evaluate(s)?, lam().evaluate(s)?, g3, g4))
        };
        let big_i = |s: f64| Ok(invariant_element(&alpha_coeffs(&c, &lam(), s)?));
        let small_i = |s: f64| Ok(AlgebraElement::from_real(beta_from_match(&c, &lam(), s, Branch::Plus)?));
        let perturbed = |s: f64| {
            let mut a = alpha_coeffs(&c, &lam(), s)?;
            // A constant shift along K3 commutes with H, so the perturbation must vary in time.
            a[2] += cx(0.05 * s.sin(), 0.0);
            Ok(invariant_element(&a))
        };
        let mut control: f64 = 0.0;
        for k in 0..=20 {
            let t = 0.5 * k as f64;
            assert!(conservation_residual(big_i, big_h, t, dom).unwrap() < 1e-7);
            assert!(conservation_residual(small_i, small_h, t, dom).unwrap() < 1e-7);
            control = control.max(conservation_residual(perturbed, big_h, t, dom).unwrap());
        }
        assert!(control > 1e-3);
        let k12 = |_s: f64| Ok(AlgebraElement::from_real([1.0, 1.0, 0.0, 0.0]));
        assert!(conservation_residual(k12, big_h, 2.0, dom).unwrap() < 1e-14);
    }

    #[test]
    fn similarity_pipeline() {
        let ep = EPConstants::new(1.0, 0.4).unwrap();
        let plus = coeffs(Branch::Plus);
        for k in 0..=20 {
            let t = 0.5 * k as f64;
            let (g3, g4) = gamma_closed_form(&lam(), &ep, t).unwrap();
            let p = DysonParams::new(0.0, 0.0, g3, g4);
            let a = alpha_coeffs(&plus, &lam(), t).unwrap();
            let good = beta_from_match(&plus, &lam(), t, Branch::Plus).unwrap();
            let bad = beta_from_match(&plus, &lam(), t, Branch::Minus).unwrap();
            assert!(similarity_residual(&a, &good, &p) < 1e-9, "t = {t}");
            assert!(similarity_residual(&a, &bad, &p) > 1e-3);
            assert!(conjugate(&p, &invariant_element(&a)).max_imag() < 1e-12);
        }
        let a = [cx(1.0, 0.0), cx(2.0, 0.0), cx(0.5, 0.0), cx(-1.0, 0.0)];
        let b = [1.0, 2.0, 0.5, 0.0];
        assert!((similarity_residual(&a, &b, &DysonParams::default()) - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn random_draws_conserve(q2 in -1.5..1.5f64, q3 in -0.9..0.9f64, c1 in -2.0..2.0f64,
                                 c2 in -2.0..2.0f64, c3 in 0.2..2.0f64, amp_l in -0.4..0.4f64, t in 0.0..10.0f64) {
            let l = TimeProfile::sinusoid(0.5, amp_l, 1.3, 0.2, 10.0).unwrap();
            let a = TimeProfile::sinusoid(1.0, 0.3, 0.7, 0.0, 10.0).unwrap();
            let ep = EPConstants::new(q2, q3).unwrap();
            let c = InvariantCoeffs::from_ep(&ep, c1, c2, c3, Branch::Plus).unwrap();
            let big_h = |s: f64| Ok(non_hermitian_hamiltonian(a.evaluate(s)?, l.evaluate(s)?));
            let big_i = |s: f64| Ok(invariant_element(&alpha_coeffs(&c, &l, s)?));
            let scale = 1.0 + big_i(t).unwrap().norm();
            prop_assert!(conservation_residual(big_i, big_h, t, l.domain()).unwrap() < 1e-7 * scale);
            let small_h = |s: f64| {
                let (g3, g4) = gamma_closed_form(&l, &ep, s)?;
                Ok(hermitian_counterpart(a.evaluate(s)?, l.evaluate(s)?, g3, g4))
            };
            let small_i = |s: f64| Ok(AlgebraElement::from_real(beta_from_match(&c, &l, s, Branch::Plus)?));
            prop_assert!(conservation_residual(small_i, small_h, t, l.domain()).unwrap() < 1e-7 * scale);
            let (g3, g4) = gamma_closed_form(&l, &ep, t).unwrap();
            let beta = beta_from_match(&c, &l, t, Branch::Plus).unwrap();
            let alpha = alpha_coeffs(&c, &l, t).unwrap();
            prop_assert!(similarity_residual(&alpha, &beta, &DysonParams::new(0.0, 0.0, g3, g4)) < 1e-9 * scale);
        }
    }
}
