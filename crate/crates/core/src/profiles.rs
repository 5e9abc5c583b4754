// SPDX-License-Identifier: Apache-2.0
//! Real scalar coefficient functions of time with exact running integrals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed at the domain edges to absorb grid rounding.
const EDGE_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileKind {
    Constant {
        value: f64,
    },
    /// `Σ coeffs[k] t^k`.
    Polynomial {
        coeffs: Vec<f64>,
    },
    /// `offset + amp sin(omega t + phase)`.
    Sinusoid {
        offset: f64,
        amp: f64,
        omega: f64,
        phase: f64,
    },
    /// `offset + amp e^{rate t}`.
    Exponential {
        offset: f64,
        amp: f64,
        rate: f64,
    },
    /// Natural cubic spline through `(times, values)`.
    Tabulated {
        times: Vec<f64>,
        values: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq)]
struct Spline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the nodes.
    m: Vec<f64>,
    /// Integral from the first node up to each node.
    prefix: Vec<f64>,
}

impl Spline {
    fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::InvalidProfile(
                "tabulated profile needs at least two nodes and matching lengths".into(),
            ));
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidProfile("tabulated data must be finite".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidProfile("tabulated times must be strictly increasing".into()));
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm for the natural-spline tridiagonal system.
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            let mut upper = vec![0.0; k];
            for i in 0..k {
                let h0 = x[i + 1] - x[i];
                let h1 = x[i + 2] - x[i + 1];
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0);
            }
            for i in 1..k {
                let lower = x[i + 1] - x[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
            }
        }
        let mut s = Spline { x: x.to_vec(), y: y.to_vec(), m, prefix: vec![0.0; n] };
        for i in 1..n {
            s.prefix[i] = s.prefix[i - 1] + s.segment_integral(i - 1, x[i] - x[i - 1]);
        }
        Ok(s)
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        }
    }

    fn eval(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let b = (t - self.x[i]) / h;
        let a = 1.0 - b;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    fn deriv(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let b = (t - self.x[i]) / h;
        let a = 1.0 - b;
        (self.y[i + 1] - self.y[i]) / h - (3.0 * a * a - 1.0) * h * self.m[i] / 6.0
            + (3.0 * b * b - 1.0) * h * self.m[i + 1] / 6.0
    }

    /// `∫_{x_i}^{x_i + s}` of segment `i`.
    fn segment_integral(&self, i: usize, s: f64) -> f64 {
        let h = self.x[i + 1] - self.x[i];
        let b = s / h;
        let a = 1.0 - b;
        let int_a = s - s * s / (2.0 * h);
        let int_b = s * s / (2.0 * h);
        let int_a3_a = h / 4.0 * (1.0 - a.powi(4)) - int_a;
        let int_b3_b = h / 4.0 * b.powi(4) - int_b;
        self.y[i] * int_a + self.y[i + 1] * int_b + (self.m[i] * int_a3_a + self.m[i + 1] * int_b3_b) * h * h / 6.0
    }

    /// Integral from the first node to `t`.
    fn integral(&self, t: f64) -> f64 {
        let i = self.segment(t);
        self.prefix[i] + self.segment_integral(i, t - self.x[i])
    }
}

/// Uniform sampling grid `t_start, …, t_end` with `samples` points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub samples: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, samples: usize) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite() && t_end > t_start) {
            return Err(Error::constraint(format!("time grid needs t_end > t_start (got {t_start}, {t_end})")));
        }
        if samples < 2 {
            return Err(Error::constraint(format!("time grid needs samples >= 2 (got {samples})")));
        }
        Ok(Self { t_start, t_end, samples })
    }

    pub fn times(&self) -> Vec<f64> {
        let step = (self.t_end - self.t_start) / (self.samples - 1) as f64;
        (0..self.samples)
            .map(|i| if i + 1 == self.samples { self.t_end } else { self.t_start + step * i as f64 })
            .collect()
    }
}

/// A profile on `[0, t_max]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeProfile {
    kind: ProfileKind,
    t_max: f64,
    spline: Option<Spline>,
}

impl TimeProfile {
    pub fn new(kind: ProfileKind, t_max: f64) -> Result<Self> {
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::InvalidProfile(format!("domain end {t_max} must be positive")));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        let spline = match &kind {
            ProfileKind::Constant { value } if !value.is_finite() => {
                return Err(Error::InvalidProfile("constant must be finite".into()))
            }
            ProfileKind::Polynomial { coeffs } if !finite(coeffs) || coeffs.is_empty() => {
                return Err(Error::InvalidProfile("polynomial needs finite coefficients".into()))
            }
            ProfileKind::Sinusoid { offset, amp, omega, phase } if !finite(&[*offset, *amp, *omega, *phase]) => {
                return Err(Error::InvalidProfile("sinusoid parameters must be finite".into()))
            }
            ProfileKind::Exponential { offset, amp, rate } if !finite(&[*offset, *amp, *rate]) => {
                return Err(Error::InvalidProfile("exponential parameters must be finite".into()))
            }
            ProfileKind::Tabulated { times, values } => {
                let s = Spline::new(times, values)?;
                if s.x[0] > EDGE_SLACK || s.x[s.x.len() - 1] < t_max - EDGE_SLACK {
                    return Err(Error::InvalidProfile(format!("tabulated nodes must cover [0, {t_max}]")));
                }
                Some(s)
            }
            _ => None,
        };
        Ok(Self { kind, t_max, spline })
    }

    pub fn constant(value: f64, t_max: f64) -> Result<Self> {
        Self::new(ProfileKind::Constant { value }, t_max)
    }

    pub fn sinusoid(offset: f64, amp: f64, omega: f64, phase: f64, t_max: f64) -> Result<Self> {
        Self::new(ProfileKind::Sinusoid { offset, amp, omega, phase }, t_max)
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    pub fn domain(&self) -> (f64, f64) {
        (0.0, self.t_max)
    }

    pub fn check(&self, t: f64) -> Result<()> {
        if t.is_finite() && t >= -EDGE_SLACK && t <= self.t_max + EDGE_SLACK {
            Ok(())
        } else {
            Err(Error::Domain { t, start: 0.0, end: self.t_max })
        }
    }

    pub fn evaluate(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(self.value_unchecked(t))
    }

    pub fn derivative(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(self.derivative_unchecked(t))
    }

    /// `∫₀ᵗ p(s) ds`.
    pub fn cumulative(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(self.cumulative_unchecked(t))
    }

    pub fn cumulative_between(&self, t1: f64, t2: f64) -> Result<f64> {
        Ok(self.cumulative(t2)? - self.cumulative(t1)?)
    }

    /// Natural extension outside the domain; used by integrator stages.
    pub(crate) fn value_unchecked(&self, t: f64) -> f64 {
        match &self.kind {
            ProfileKind::Constant { value } => *value,
            ProfileKind::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c),
            ProfileKind::Sinusoid { offset, amp, omega, phase } => offset + amp * (omega * t + phase).sin(),
            ProfileKind::Exponential { offset, amp, rate } => offset + amp * (rate * t).exp(),
            ProfileKind::Tabulated { .. } => self.spline.as_ref().expect("spline built").eval(t),
        }
    }

    pub(crate) fn derivative_unchecked(&self, t: f64) -> f64 {
        match &self.kind {
            ProfileKind::Constant { .. } => 0.0,
            ProfileKind::Polynomial { coeffs } => {
                coeffs.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, c)| acc * t + k as f64 * c)
            }
            ProfileKind::Sinusoid { amp, omega, phase, .. } => amp * omega * (omega * t + phase).cos(),
            ProfileKind::Exponential { amp, rate, .. } => amp * rate * (rate * t).exp(),
            ProfileKind::Tabulated { .. } => self.spline.as_ref().expect("spline built").deriv(t),
        }
    }

    pub(crate) fn cumulative_unchecked(&self, t: f64) -> f64 {
        match &self.kind {
            ProfileKind::Constant { value } => value * t,
            ProfileKind::Polynomial { coeffs } => {
                t * coeffs.iter().enumerate().rev().fold(0.0, |acc, (k, c)| acc * t + c / (k as f64 + 1.0))
            }
            ProfileKind::Sinusoid { offset, amp, omega, phase } => {
                if *omega == 0.0 {
                    (offset + amp * phase.sin()) * t
                } else {
                    // cos(φ) − cos(ωt+φ) = 2 sin(ωt/2 + φ) sin(ωt/2), free of cancellation at small t.
                    let half = 0.5 * omega * t;
                    offset * t + amp / omega * 2.0 * (half + phase).sin() * half.sin()
                }
            }
            ProfileKind::Exponential { offset, amp, rate } => {
                if *rate == 0.0 {
                    (offset + amp) * t
                } else {
                    offset * t + amp * (rate * t).exp_m1() / rate
                }
            }
            ProfileKind::Tabulated { .. } => {
                let s = self.spline.as_ref().expect("spline built");
                s.integral(t) - s.integral(0.0)
            }
        }
    }
}
