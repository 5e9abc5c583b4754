// SPDX-License-Identifier: Apache-2.0
//! Dyson-map parameters for `H = a(K1+K2) + iλK3`: direct integration of the
//! Hermiticity constraints, closed forms, and the assembled Hermitian side.

use num_complex::Complex64;
use ode_solvers::continuous_output_model::ContinuousOutputModel;
use ode_solvers::dop_shared::IntegrationError;
use ode_solvers::{Dopri5, System, Vector2};

use crate::algebra::{conjugate, time_term, AlgebraElement, DysonParams};
use crate::error::{Error, Result};
use crate::numerics;
use crate::profiles::{TimeGrid, TimeProfile};

/// Threshold below which `|λ|` counts as a singular point for `λ̇/λ`.
pub const LAMBDA_EPS: f64 = 1e-8;

/// Integration constants of the closed-form solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EPConstants {
    pub q2: f64,
    pub q3: f64,
    /// `q3 / √(1 − q3²)`, the conserved value of `sinh γ4 cosh γ3`.
    pub kappa: f64,
}

impl EPConstants {
    pub fn new(q2: f64, q3: f64) -> Result<Self> {
        if !q2.is_finite() || !q3.is_finite() || q3.abs() >= 1.0 {
            return Err(Error::constraint(format!("|q3| < 1 required (got q3 = {q3})")));
        }
        Ok(Self { q2, q3, kappa: q3 / (1.0 - q3 * q3).sqrt() })
    }

    /// Constants reproducing `(γ3, γ4)` at `t = 0`.
    pub fn fit_initial(gamma3: f64, gamma4: f64) -> Result<Self> {
        let kappa = gamma4.sinh() * gamma3.cosh();
        let q3 = kappa / (1.0 + kappa * kappa).sqrt();
        let q2 = (gamma3.sinh() * (1.0 - q3 * q3).sqrt()).asinh();
        Self::new(q2, q3)
    }

    fn width(&self) -> f64 {
        (1.0 - self.q3 * self.q3).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GammaMethod {
    Ode,
    ClosedForm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GammaTrajectory {
    pub times: Vec<f64>,
    pub gamma3: Vec<f64>,
    pub gamma4: Vec<f64>,
    pub method: GammaMethod,
}

impl GammaTrajectory {
    /// `sinh γ4 cosh γ3` along the trajectory.
    pub fn conserved(&self) -> Vec<f64> {
        self.gamma3.iter().zip(&self.gamma4).map(|(g3, g4)| g4.sinh() * g3.cosh()).collect()
    }

    pub fn conservation_drift(&self) -> f64 {
        let c = self.conserved();
        c.iter().fold(0.0, |m, v| m.max((v - c[0]).abs()))
    }

    pub fn max_abs_diff(&self, other: &GammaTrajectory) -> f64 {
        let d3 = self.gamma3.iter().zip(&other.gamma3).map(|(a, b)| (a - b).abs());
        let d4 = self.gamma4.iter().zip(&other.gamma4).map(|(a, b)| (a - b).abs());
        d3.chain(d4).fold(0.0, f64::max)
    }
}

/// Integrator tolerances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeTolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for OdeTolerance {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-12 }
    }
}

struct Constraints<'a> {
    lambda: &'a TimeProfile,
}

impl System<f64, Vector2<f64>> for Constraints<'_> {
    fn system(&self, t: f64, y: &Vector2<f64>, dy: &mut Vector2<f64>) {
        let l = self.lambda.value_unchecked(t);
        dy[0] = -l * y[1].cosh();
        dy[1] = l * y[0].tanh() * y[1].sinh();
    }
}

/// Integrates `γ̇3 = −λ cosh γ4`, `γ̇4 = λ tanh γ3 sinh γ4` from `grid.t_start`.
pub fn solve_gamma_ode(
    lambda: &TimeProfile,
    gamma3_0: f64,
    gamma4_0: f64,
    grid: &TimeGrid,
    tol: OdeTolerance,
) -> Result<GammaTrajectory> {
    if !gamma3_0.is_finite() || !gamma4_0.is_finite() {
        return Err(Error::constraint("initial γ values must be finite"));
    }
    lambda.check(grid.t_start)?;
    lambda.check(grid.t_end)?;
    let times = grid.times();
    let y0 = Vector2::new(gamma3_0, gamma4_0);
    let span = grid.t_end - grid.t_start;
    let mut solver = Dopri5::new(Constraints { lambda }, grid.t_start, grid.t_end, span, y0, tol.rtol, tol.atol);
    let mut dense = ContinuousOutputModel::default();
    solver.integrate_with_continuous_output_model(&mut dense).map_err(|e| match e {
        IntegrationError::StepSizeUnderflow { x } => Error::Integration { t: x, reason: "step size underflow".into() },
        IntegrationError::MaxNumStepReached { x, n_step } => {
            Error::Integration { t: x, reason: format!("maximum step count {n_step} reached") }
        }
        IntegrationError::StiffnessDetected { x } => Error::Integration { t: x, reason: "stiffness detected".into() },
    })?;
    let mut gamma3 = Vec::with_capacity(times.len());
    let mut gamma4 = Vec::with_capacity(times.len());
    for &t in &times {
        let y = if t == grid.t_start {
            y0
        } else {
            dense.evaluate(t).ok_or_else(|| Error::Integration { t, reason: "no dense output".into() })?
        };
        gamma3.push(y[0]);
        gamma4.push(y[1]);
    }
    Ok(GammaTrajectory { times, gamma3, gamma4, method: GammaMethod::Ode })
}

/// `(γ3, γ4)` from the closed form with `u = q2 − Λ(t)`.
pub fn gamma_closed_form(lambda: &TimeProfile, c: &EPConstants, t: f64) -> Result<(f64, f64)> {
    let u = c.q2 - lambda.cumulative(t)?;
    Ok(gamma_at_phase(c, u))
}

pub(crate) fn gamma_at_phase(c: &EPConstants, u: f64) -> (f64, f64) {
    let g3 = (u.sinh() / c.width()).asinh();
    let g4 = (c.kappa / g3.cosh()).asinh();
    (g3, g4)
}

/// Analytic `(γ̇3, γ̇4)` along the closed form.
pub fn gamma_closed_form_rate(lambda: &TimeProfile, c: &EPConstants, t: f64) -> Result<(f64, f64)> {
    let l = lambda.evaluate(t)?;
    let u = c.q2 - lambda.cumulative(t)?;
    let sech = 1.0 / u.cosh();
    let denom = 1.0 - c.q3 * c.q3 * sech * sech;
    Ok((-l / denom.sqrt(), l * c.q3 * u.tanh() * sech / denom))
}

/// The `tanh γ3 = tanh u / √(1 − q3² sech² u)` form of `γ3`.
pub fn gamma3_tanh_form(c: &EPConstants, u: f64) -> f64 {
    let sech = 1.0 / u.cosh();
    (u.tanh() / (1.0 - c.q3 * c.q3 * sech * sech).sqrt()).atanh()
}

/// The inverse-cotangent form `γ4 = arccoth(cosh u / q3)`; needs `|q3| > 1e-3`.
pub fn gamma4_coth_form(c: &EPConstants, u: f64) -> Result<f64> {
    if c.q3.abs() <= 1e-3 {
        return Err(Error::constraint("inverse-cotangent form needs |q3| > 1e-3"));
    }
    Ok((c.q3 / u.cosh()).atanh())
}

pub fn closed_form_trajectory(lambda: &TimeProfile, c: &EPConstants, grid: &TimeGrid) -> Result<GammaTrajectory> {
    let times = grid.times();
    let (mut gamma3, mut gamma4) = (Vec::new(), Vec::new());
    for &t in &times {
        let (g3, g4) = gamma_closed_form(lambda, c, t)?;
        gamma3.push(g3);
        gamma4.push(g4);
    }
    Ok(GammaTrajectory { times, gamma3, gamma4, method: GammaMethod::ClosedForm })
}

/// `χ = cosh γ3 = √((cosh² u − q3²)/(1 − q3²))`.
pub fn chi_closed_form(lambda: &TimeProfile, c: &EPConstants, t: f64) -> Result<f64> {
    let u = c.q2 - lambda.cumulative(t)?;
    Ok(u.sinh().hypot(c.width()) / c.width())
}

/// `(χ, χ̇, χ̈)` of the closed form, differentiated analytically.
pub fn chi_closed_form_derivatives(lambda: &TimeProfile, c: &EPConstants, t: f64) -> Result<(f64, f64, f64)> {
    let (l, ld) = (lambda.evaluate(t)?, lambda.derivative(t)?);
    let u = c.q2 - lambda.cumulative(t)?;
    let w2 = 1.0 - c.q3 * c.q3;
    let x = (1.0 + u.sinh().powi(2) / w2).sqrt();
    let s = (2.0 * u).sinh() / (2.0 * w2);
    let xd = -l * s / x;
    let xdd = -ld * s / x + l * l * (2.0 * u).cosh() / (w2 * x) - l * l * s * s / x.powi(3);
    Ok((x, xd, xdd))
}

/// `|χ̈ − (λ̇/λ)χ̇ − λ²χ − κ²λ²/χ³|` from given derivatives of `χ`.
pub fn ep_dissipative_residual_from(
    (x, xd, xdd): (f64, f64, f64),
    lambda: &TimeProfile,
    kappa: f64,
    t: f64,
) -> Result<f64> {
    let l = lambda.evaluate(t)?;
    if l.abs() <= LAMBDA_EPS {
        return Err(Error::SingularPoint { t, what: "lambda", value: l.abs(), threshold: LAMBDA_EPS });
    }
    if x <= 0.0 {
        return Err(Error::constraint(format!("χ must be positive (χ({t}) = {x})")));
    }
    let ld = lambda.derivative(t)?;
    Ok((xdd - ld / l * xd - l * l * x - kappa * kappa * l * l / x.powi(3)).abs())
}

/// Same residual with fourth-order differences for `χ`.
pub fn ep_dissipative_residual(
    chi: impl Fn(f64) -> Result<f64>,
    lambda: &TimeProfile,
    kappa: f64,
    t: f64,
) -> Result<f64> {
    let l = lambda.evaluate(t)?;
    if l.abs() <= LAMBDA_EPS {
        return Err(Error::SingularPoint { t, what: "lambda", value: l.abs(), threshold: LAMBDA_EPS });
    }
    let h = 2e-3;
    let dom = lambda.domain();
    let x = chi(t)?;
    let d1 = numerics::derivative(&chi, t, h, dom)?;
    let d2 = numerics::second_derivative(&chi, t, h, dom)?;
    ep_dissipative_residual_from((x, d1, d2), lambda, kappa, t)
}

pub fn non_hermitian_hamiltonian(a: f64, lambda: f64) -> AlgebraElement {
    AlgebraElement::new(
        Complex64::new(a, 0.0),
        Complex64::new(a, 0.0),
        Complex64::new(0.0, lambda),
        Complex64::new(0.0, 0.0),
    )
}

/// `h = a(K1+K2) + (λ/2)(sinh γ4 / cosh γ3)(K1−K2)`.
pub fn hermitian_counterpart(a: f64, lambda: f64, gamma3: f64, gamma4: f64) -> AlgebraElement {
    let split = 0.5 * lambda * gamma4.sinh() / gamma3.cosh();
    AlgebraElement::from_real([a + split, a - split, 0.0, 0.0])
}

/// `H̃ = η⁻¹ h η`.
pub fn energy_operator(a: f64, lambda: f64, gamma3: f64, gamma4: f64) -> AlgebraElement {
    let split = 0.25 * lambda * (2.0 * gamma4).sinh();
    let s4 = gamma4.sinh();
    AlgebraElement::new(
        Complex64::new(a + split, 0.0),
        Complex64::new(a - split, 0.0),
        Complex64::new(0.0, -lambda * s4 * s4),
        Complex64::new(0.0, lambda * s4 * gamma3.tanh()),
    )
}

/// Coefficient norm of `ηHη⁻¹ + iη̇η⁻¹ − h` at `t`.
pub fn dyson_residual(
    a: &TimeProfile,
    lambda: &TimeProfile,
    params: &DysonParams,
    rates: &[f64; 4],
    t: f64,
) -> Result<f64> {
    let (av, lv) = (a.evaluate(t)?, lambda.evaluate(t)?);
    let lhs = conjugate(params, &non_hermitian_hamiltonian(av, lv)) + time_term(params, rates);
    Ok((lhs - hermitian_counterpart(av, lv, params.gamma3, params.gamma4)).norm())
}
