// SPDX-License-Identifier: Apache-2.0
//! Exact single-mode solutions of `i∂ₜψ = a(t)K1ψ` built from the
//! Ermakov–Pinney scale function `ϰ(t)`, and their products.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::energy::{CoupledDriver, Scenario};
use crate::error::{Error, Result};
use crate::numerics::{self, CompositeRule};
use crate::profiles::TimeProfile;

/// Largest Hermite degree supported.
pub const MAX_HERMITE_DEGREE: usize = 60;

/// Below this `|a(t)|` the mode width term `ϰ̇/(aϰ)` is treated as singular.
pub const DRIVER_EPS: f64 = 1e-8;

/// A real coefficient function with its running integral and derivative.
pub trait Driver {
    fn value(&self, t: f64) -> Result<f64>;
    /// `∫₀ᵗ`.
    fn integral(&self, t: f64) -> Result<f64>;
    fn rate(&self, t: f64) -> Result<f64>;
    fn domain(&self) -> (f64, f64);
}

impl Driver for TimeProfile {
    fn value(&self, t: f64) -> Result<f64> {
        self.evaluate(t)
    }
    fn integral(&self, t: f64) -> Result<f64> {
        self.cumulative(t)
    }
    fn rate(&self, t: f64) -> Result<f64> {
        self.derivative(t)
    }
    fn domain(&self) -> (f64, f64) {
        TimeProfile::domain(self)
    }
}

impl<D: Driver + ?Sized> Driver for &D {
    fn value(&self, t: f64) -> Result<f64> {
        (**self).value(t)
    }
    fn integral(&self, t: f64) -> Result<f64> {
        (**self).integral(t)
    }
    fn rate(&self, t: f64) -> Result<f64> {
        (**self).rate(t)
    }
    fn domain(&self) -> (f64, f64) {
        (**self).domain()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Channel {
    #[default]
    Plus,
    Minus,
}

#[derive(Clone, Debug)]
pub struct ModeSpec<D> {
    pub n: usize,
    pub driver: D,
    pub kappa_tilde: f64,
    pub channel: Channel,
}

impl<D: Driver> ModeSpec<D> {
    pub fn new(n: usize, driver: D, kappa_tilde: f64) -> Result<Self> {
        if n > MAX_HERMITE_DEGREE {
            return Err(Error::UnsupportedDegree { degree: n, max: MAX_HERMITE_DEGREE });
        }
        if !kappa_tilde.is_finite() {
            return Err(Error::constraint("Ermakov constant must be finite"));
        }
        Ok(Self { n, driver, kappa_tilde, channel: Channel::Plus })
    }

    pub fn with_channel(mut self, channel: Channel) -> Self {
        self.channel = channel;
        self
    }
}

/// Physicist's Hermite polynomial `H_n(x)`.
pub fn hermite(n: usize, x: f64) -> Result<f64> {
    if n > MAX_HERMITE_DEGREE {
        return Err(Error::UnsupportedDegree { degree: n, max: MAX_HERMITE_DEGREE });
    }
    let (mut prev, mut cur) = (1.0, 2.0 * x);
    if n == 0 {
        return Ok(prev);
    }
    for k in 1..n {
        let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `H_k(x)/√(2ᵏ k! √π)` for `k = 0..=n`, by the normalized recurrence.
fn normalized_hermite(n: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(PI.powf(-0.25));
    if n >= 1 {
        out.push(2f64.sqrt() * x * out[0]);
    }
    for k in 1..n {
        let kf = k as f64;
        out.push((2.0 / (kf + 1.0)).sqrt() * x * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1]);
    }
    out
}

fn stiffness(kappa_tilde: f64) -> f64 {
    (1.0 + kappa_tilde * kappa_tilde).sqrt()
}

/// `ϰ = √(κ̃ cos 2A + √(1+κ̃²))`, `A = ∫₀ᵗ a`.
pub fn ep_classical(kappa_tilde: f64, driver: &impl Driver, t: f64) -> Result<f64> {
    let big_a = driver.integral(t)?;
    Ok((kappa_tilde * (2.0 * big_a).cos() + stiffness(kappa_tilde)).sqrt())
}

/// Analytic `ϰ̇`.
pub fn ep_classical_rate(kappa_tilde: f64, driver: &impl Driver, t: f64) -> Result<f64> {
    let big_a = driver.integral(t)?;
    let k = (kappa_tilde * (2.0 * big_a).cos() + stiffness(kappa_tilde)).sqrt();
    Ok(-kappa_tilde * driver.value(t)? * (2.0 * big_a).sin() / k)
}

/// `|ϰ̈ − (ȧ/a)ϰ̇ + a²ϰ − a²/ϰ³|` with fourth-order differences of `ϰ`.
pub fn ep_classical_residual(scale: impl Fn(f64) -> Result<f64>, driver: &impl Driver, t: f64) -> Result<f64> {
    let a = driver.value(t)?;
    if a.abs() <= DRIVER_EPS {
        return Err(Error::SingularPoint { t, what: "a", value: a.abs(), threshold: DRIVER_EPS });
    }
    let h = 2e-3;
    let k = scale(t)?;
    let d1 = numerics::derivative(&scale, t, h, driver.domain())?;
    let d2 = numerics::second_derivative(&scale, t, h, driver.domain())?;
    let ad = driver.rate(t)?;
    Ok((d2 - ad / a * d1 + a * a * k - a * a / k.powi(3)).abs())
}

/// `[a²(1+ϰ⁴) + ϰ²ϰ̇²]/(a²ϰ²)`, equal to `2√(1+κ̃²)` on the closed form.
pub fn ermakov_quantity(a: f64, scale: f64, scale_rate: f64) -> f64 {
    (a * a * (1.0 + scale.powi(4)) + scale * scale * scale_rate * scale_rate) / (a * a * scale * scale)
}

/// `∫₀ᵗ a/ϰ² ds` as a function of `A = ∫₀ᵗ a`, unwrapped across branches of `tan`.
fn phase_integral(kappa_tilde: f64, big_a: f64) -> f64 {
    let s = stiffness(kappa_tilde);
    let ratio = ((s - kappa_tilde) / (s + kappa_tilde)).sqrt();
    let k = ((big_a + 0.5 * PI) / PI).floor();
    let reduced = big_a - k * PI;
    (ratio * reduced.tan()).atan() + k * PI
}

/// `α_n = −(n+½)∫₀ᵗ a/ϰ² ds`.
pub fn mode_phase<D: Driver>(spec: &ModeSpec<D>, t: f64) -> Result<f64> {
    Ok(-(spec.n as f64 + 0.5) * phase_integral(spec.kappa_tilde, spec.driver.integral(t)?))
}

/// Mode value and its first two spatial derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeValue {
    pub psi: Complex64,
    pub dx: Complex64,
    pub dxx: Complex64,
}

/// Time-frozen data of a normalized mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeSnapshot {
    pub n: usize,
    /// `ϰ(t)`.
    pub scale: f64,
    /// `e^{iα}/√ϰ`.
    pub prefactor: Complex64,
    /// Gaussian exponent coefficient: `ψ ∝ exp(width x²/2)`.
    pub width: Complex64,
}

impl ModeSnapshot {
    pub fn at<D: Driver>(spec: &ModeSpec<D>, t: f64) -> Result<Self> {
        let a = spec.driver.value(t)?;
        if a.abs() <= DRIVER_EPS {
            return Err(Error::SingularPoint { t, what: "a", value: a.abs(), threshold: DRIVER_EPS });
        }
        let scale = ep_classical(spec.kappa_tilde, &spec.driver, t)?;
        let rate = ep_classical_rate(spec.kappa_tilde, &spec.driver, t)?;
        let alpha = mode_phase(spec, t)?;
        Ok(Self {
            n: spec.n,
            scale,
            prefactor: Complex64::from_polar(1.0 / scale.sqrt(), alpha),
            width: Complex64::new(-1.0 / (scale * scale), rate / (a * scale)),
        })
    }

    pub fn value(&self, x: f64) -> Complex64 {
        let xi = x / self.scale;
        let h = normalized_hermite(self.n, xi);
        self.prefactor * (self.width * (0.5 * x * x)).exp() * h[self.n]
    }

    pub fn evaluate(&self, x: f64) -> ModeValue {
        let n = self.n;
        let xi = x / self.scale;
        let h = normalized_hermite(n, xi);
        let p0 = h[n];
        let p1 = if n >= 1 { (2.0 * n as f64).sqrt() * h[n - 1] / self.scale } else { 0.0 };
        let p2 = if n >= 2 {
            (4.0 * n as f64 * (n as f64 - 1.0)).sqrt() * h[n - 2] / (self.scale * self.scale)
        } else {
            0.0
        };
        let c = self.width;
        let g = self.prefactor * (c * (0.5 * x * x)).exp();
        ModeValue {
            psi: g * p0,
            dx: g * (c * x * p0 + p1),
            dxx: g * ((c * c * x * x + c) * p0 + c * (2.0 * x) * p1 + p2),
        }
    }
}

pub fn pedrosa_mode<D: Driver>(spec: &ModeSpec<D>, x: f64, t: f64) -> Result<Complex64> {
    Ok(ModeSnapshot::at(spec, t)?.value(x))
}

/// `(n+½)√(1+κ̃²)`.
pub fn k1_expectation<D>(spec: &ModeSpec<D>) -> f64 {
    (spec.n as f64 + 0.5) * stiffness(spec.kappa_tilde)
}

/// `∫ f` over the line for integrands decaying like the modes, on `[−L, L]`
/// with `L = 8 max ϰ` doubled until the change drops below `1e-10`.
pub fn integrate_line(f: impl Fn(f64) -> Complex64, max_scale: f64) -> Complex64 {
    let rule = CompositeRule::new(20);
    let panel = 0.5 * max_scale;
    let run = |half: f64| {
        let panels = ((2.0 * half / panel).ceil() as usize).max(1);
        rule.integrate(&f, -half, half, panels, Complex64::new(0.0, 0.0))
    };
    let mut half = 8.0 * max_scale;
    let mut value = run(half);
    for _ in 0..6 {
        half *= 2.0;
        let next = run(half);
        let change = (next - value).norm();
        value = next;
        if change < 1e-10 {
            break;
        }
    }
    value
}

/// `⟨φ_a|φ_b⟩` by line quadrature.
pub fn overlap(a: &ModeSnapshot, b: &ModeSnapshot) -> Complex64 {
    integrate_line(|x| a.value(x).conj() * b.value(x), a.scale.max(b.scale))
}

/// `⟨φ|K1|φ⟩` by line quadrature with the analytic second derivative.
pub fn k1_expectation_quadrature<D: Driver>(spec: &ModeSpec<D>, t: f64) -> Result<Complex64> {
    let snap = ModeSnapshot::at(spec, t)?;
    Ok(integrate_line(
        |x| {
            let v = snap.evaluate(x);
            v.psi.conj() * (v.psi * (x * x) - v.dxx) * 0.5
        },
        snap.scale,
    ))
}

/// `Ψ(x, y, t) = φ_n⁺(x, t) φ_m⁻(y, t)` with drivers `f±`.
pub fn product_state(n: usize, m: usize, scenario: &Scenario, x: f64, y: f64, t: f64) -> Result<Complex64> {
    let (plus, minus) = product_modes(n, m, scenario)?;
    Ok(pedrosa_mode(&plus, x, t)? * pedrosa_mode(&minus, y, t)?)
}

/// The two mode specifications making up a product state.
pub fn product_modes(
    n: usize,
    m: usize,
    scenario: &Scenario,
) -> Result<(ModeSpec<CoupledDriver<'_>>, ModeSpec<CoupledDriver<'_>>)> {
    let plus = ModeSpec::new(n, CoupledDriver::new(scenario, Channel::Plus), scenario.kappa_plus)?;
    let minus = ModeSpec::new(m, CoupledDriver::new(scenario, Channel::Minus), scenario.kappa_minus)?
        .with_channel(Channel::Minus);
    Ok((plus, minus))
}

/// Relative residual `‖i∂ₜψ − a K1 ψ‖/‖ψ‖` on a uniform grid of spacing `dx`
/// with second-order stencils in space and time.
pub fn mode_tdse_residual<D: Driver>(spec: &ModeSpec<D>, t: f64, dx: f64, dt: f64) -> Result<f64> {
    let now = ModeSnapshot::at(spec, t)?;
    let before = ModeSnapshot::at(spec, t - dt)?;
    let after = ModeSnapshot::at(spec, t + dt)?;
    let a = spec.driver.value(t)?;
    let half = 10.0 * now.scale.max(before.scale).max(after.scale) + 2.0 * dx;
    let count = (2.0 * half / dx).round() as usize;
    let xs: Vec<f64> = (0..=count).map(|j| -half + j as f64 * dx).collect();
    let psi: Vec<Complex64> = xs.iter().map(|&x| now.value(x)).collect();
    let (mut num, mut den) = (0.0, 0.0);
    for j in 1..count {
        let x = xs[j];
        let lap = (psi[j + 1] - psi[j] * 2.0 + psi[j - 1]) / (dx * dx);
        let dpsi = (after.value(x) - before.value(x)) / (2.0 * dt);
        let r = Complex64::new(0.0, 1.0) * dpsi - (psi[j] * (x * x) - lap) * (0.5 * a);
        num += r.norm_sqr();
        den += psi[j].norm_sqr();
    }
    Ok((num / den).sqrt())
}

/// Two-dimensional analogue for the product state and `h = f₊K1 + f₋K2`.
pub fn product_tdse_residual(n: usize, m: usize, scenario: &Scenario, t: f64, dx: f64, dt: f64) -> Result<f64> {
    let (plus, minus) = product_modes(n, m, scenario)?;
    let (fp, fm) = crate::energy::f_pm(scenario, t)?;
    let snaps = |s: f64| -> Result<(ModeSnapshot, ModeSnapshot)> {
        Ok((ModeSnapshot::at(&plus, s)?, ModeSnapshot::at(&minus, s)?))
    };
    let (now, before, after) = (snaps(t)?, snaps(t - dt)?, snaps(t + dt)?);
    let widest = [now.0.scale, now.1.scale, before.0.scale, before.1.scale, after.0.scale, after.1.scale]
        .into_iter()
        .fold(0.0, f64::max);
    let half = 10.0 * widest + 2.0 * dx;
    let count = (2.0 * half / dx).round() as usize;
    let xs: Vec<f64> = (0..=count).map(|j| -half + j as f64 * dx).collect();
    let line = |snap: &ModeSnapshot| -> Vec<Complex64> { xs.iter().map(|&x| snap.value(x)).collect() };
    let (ux, uy) = (line(&now.0), line(&now.1));
    let (bx, by) = (line(&before.0), line(&before.1));
    let (ax, ay) = (line(&after.0), line(&after.1));
    let (mut num, mut den) = (0.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    for j in 1..count {
        let x = xs[j];
        let lap_x = (ux[j + 1] - ux[j] * 2.0 + ux[j - 1]) / (dx * dx);
        for k in 1..count {
            let y = xs[k];
            let lap_y = (uy[k + 1] - uy[k] * 2.0 + uy[k - 1]) / (dx * dx);
            let psi = ux[j] * uy[k];
            let dpsi = (ax[j] * ay[k] - bx[j] * by[k]) / (2.0 * dt);
            let k1 = (psi * (x * x) - lap_x * uy[k]) * 0.5;
            let k2 = (psi * (y * y) - ux[j] * lap_y) * 0.5;
            let r = i * dpsi - k1 * fp - k2 * fm;
            num += r.norm_sqr();
            den += psi.norm_sqr();
        }
    }
    Ok((num / den).sqrt())
}
