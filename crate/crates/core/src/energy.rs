// SPDX-License-Identifier: Apache-2.0
//! Decoupled driver coefficients `f±(t)` and the instantaneous energies.

use num_complex::Complex64;

use crate::algebra::DysonParams;
use crate::dyson::{gamma_closed_form, gamma_closed_form_rate, EPConstants};
use crate::error::{Error, Result};
use crate::modes::{product_modes, Channel, Driver, ModeSnapshot};
use crate::numerics::CompositeRule;
use crate::profiles::TimeProfile;

/// Full time-dependent problem specification.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub a: TimeProfile,
    pub lambda: TimeProfile,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub kappa_plus: f64,
    pub kappa_minus: f64,
    pub n: usize,
    pub m: usize,
    ep: EPConstants,
}

impl Scenario {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: TimeProfile,
        lambda: TimeProfile,
        q1: f64,
        q2: f64,
        q3: f64,
        kappa_plus: f64,
        kappa_minus: f64,
        n: usize,
        m: usize,
    ) -> Result<Self> {
        let ep = EPConstants::new(q2, q3)?;
        if a.domain() != lambda.domain() {
            return Err(Error::constraint("profiles a and λ must share a domain"));
        }
        if ![q1, kappa_plus, kappa_minus].iter().all(|v| v.is_finite()) {
            return Err(Error::constraint("scenario constants must be finite"));
        }
        Ok(Self { a, lambda, q1, q2, q3, kappa_plus, kappa_minus, n, m, ep })
    }

    /// `a = 1 + 0.2 sin 2t`, `λ = 0.5 + 0.3 sin t`, `q2 = 1`, `q3 = 0.4`, `κ̃± = 0.5`, `(n, m) = (1, 0)`.
    pub fn reference(t_max: f64) -> Result<Self> {
        Self::new(
            TimeProfile::sinusoid(1.0, 0.2, 2.0, 0.0, t_max)?,
            TimeProfile::sinusoid(0.5, 0.3, 1.0, 0.0, t_max)?,
            0.0,
            1.0,
            0.4,
            0.5,
            0.5,
            1,
            0,
        )
    }

    pub fn ep_constants(&self) -> EPConstants {
        self.ep
    }

    pub fn domain(&self) -> (f64, f64) {
        self.a.domain()
    }

    /// Closed-form Dyson parameters `(q1, q1, γ3, γ4)`.
    pub fn dyson_params(&self, t: f64) -> Result<DysonParams> {
        let (g3, g4) = gamma_closed_form(&self.lambda, &self.ep, t)?;
        Ok(DysonParams::new(self.q1, self.q1, g3, g4))
    }

    pub fn dyson_rates(&self, t: f64) -> Result<[f64; 4]> {
        let (r3, r4) = gamma_closed_form_rate(&self.lambda, &self.ep, t)?;
        Ok([0.0, 0.0, r3, r4])
    }

    fn phase(&self, t: f64) -> Result<f64> {
        Ok(self.q2 - self.lambda.cumulative(t)?)
    }

    /// `(f₊ − f₋)/2`.
    fn half_split(&self, t: f64) -> Result<f64> {
        let u = self.phase(t)?;
        let s = 1.0 / u.cosh().powi(2);
        let c = 0.5 * self.q3 * (1.0 - self.q3 * self.q3).sqrt();
        Ok(c * self.lambda.evaluate(t)? * s / (1.0 - self.q3 * self.q3 * s))
    }

    fn half_split_rate(&self, t: f64) -> Result<f64> {
        let u = self.phase(t)?;
        let s = 1.0 / u.cosh().powi(2);
        let d = 1.0 - self.q3 * self.q3 * s;
        let c = 0.5 * self.q3 * (1.0 - self.q3 * self.q3).sqrt();
        let (l, ld) = (self.lambda.evaluate(t)?, self.lambda.derivative(t)?);
        Ok(c * (ld * s / d + 2.0 * l * l * u.tanh() * s / (d * d)))
    }

    /// `½∫₀ᵗ (f₊ − f₋)`.
    fn half_split_integral(&self, t: f64) -> Result<f64> {
        let k = self.ep.kappa;
        Ok(0.5 * ((k * self.q2.tanh()).atan() - (k * self.phase(t)?.tanh()).atan()))
    }
}

/// `f± = a ± q3√(1−q3²)λ/(1 + cosh(2q2 − 2Λ) − 2q3²)`.
pub fn f_pm(s: &Scenario, t: f64) -> Result<(f64, f64)> {
    let a = s.a.evaluate(t)?;
    let g = s.half_split(t)?;
    Ok((a + g, a - g))
}

/// `f₊` or `f₋` as a mode driver with exact running integral.
#[derive(Clone, Copy, Debug)]
pub struct CoupledDriver<'a> {
    scenario: &'a Scenario,
    sign: f64,
}

impl<'a> CoupledDriver<'a> {
    pub fn new(scenario: &'a Scenario, channel: Channel) -> Self {
        let sign = match channel {
            Channel::Plus => 1.0,
            Channel::Minus => -1.0,
        };
        Self { scenario, sign }
    }
}

impl Driver for CoupledDriver<'_> {
    fn value(&self, t: f64) -> Result<f64> {
        Ok(self.scenario.a.evaluate(t)? + self.sign * self.scenario.half_split(t)?)
    }
    fn integral(&self, t: f64) -> Result<f64> {
        Ok(self.scenario.a.cumulative(t)? + self.sign * self.scenario.half_split_integral(t)?)
    }
    fn rate(&self, t: f64) -> Result<f64> {
        Ok(self.scenario.a.derivative(t)? + self.sign * self.scenario.half_split_rate(t)?)
    }
    fn domain(&self) -> (f64, f64) {
        self.scenario.domain()
    }
}

/// `E = f₊(n+½)√(1+κ̃₊²) + f₋(m+½)√(1+κ̃₋²)`.
pub fn energy_expectation(s: &Scenario, t: f64) -> Result<f64> {
    let (fp, fm) = f_pm(s, t)?;
    Ok(fp * (s.n as f64 + 0.5) * (1.0 + s.kappa_plus.powi(2)).sqrt()
        + fm * (s.m as f64 + 0.5) * (1.0 + s.kappa_minus.powi(2)).sqrt())
}

/// Tensor-product quadrature results for the product state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneQuadrature {
    pub norm: Complex64,
    pub energy: Complex64,
}

/// `⟨Ψ|Ψ⟩` and `⟨Ψ|h|Ψ⟩` by two-dimensional Gauss–Legendre quadrature on
/// `[−L, L]²`, `L = 8 max ϰ`, doubled until the energy changes by less than `1e-10`.
pub fn energy_expectation_quadrature(s: &Scenario, t: f64) -> Result<PlaneQuadrature> {
    let (plus, minus) = product_modes(s.n, s.m, s)?;
    let (sx, sy) = (ModeSnapshot::at(&plus, t)?, ModeSnapshot::at(&minus, t)?);
    let (fp, fm) = f_pm(s, t)?;
    let rule = CompositeRule::new(20);
    let panel = 0.5 * sx.scale.min(sy.scale);
    let run = |half: f64| {
        let panels = ((2.0 * half / panel).ceil() as usize).max(1);
        let (nodes, weights) = rule.nodes_on(-half, half, panels);
        let line = |snap: &ModeSnapshot| -> Vec<(Complex64, Complex64)> {
            nodes
                .iter()
                .map(|&x| {
                    let v = snap.evaluate(x);
                    (v.psi, (v.psi * (x * x) - v.dxx) * 0.5)
                })
                .collect()
        };
        let (lx, ly) = (line(&sx), line(&sy));
        let (mut norm, mut energy) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for (i, (px, kx)) in lx.iter().enumerate() {
            let mut row_norm = Complex64::new(0.0, 0.0);
            let mut row_energy = Complex64::new(0.0, 0.0);
            for (j, (py, ky)) in ly.iter().enumerate() {
                let psi = px * py;
                let h_psi = kx * py * fp + px * ky * fm;
                row_norm += psi.conj() * psi * weights[j];
                row_energy += psi.conj() * h_psi * weights[j];
            }
            norm += row_norm * weights[i];
            energy += row_energy * weights[i];
        }
        PlaneQuadrature { norm, energy }
    };
    let mut half = 8.0 * sx.scale.max(sy.scale);
    let mut value = run(half);
    for _ in 0..4 {
        half *= 2.0;
        let next = run(half);
        let change = (next.energy - value.energy).norm();
        value = next;
        if change < 1e-10 {
            break;
        }
    }
    Ok(value)
}
