// SPDX-License-Identifier: Apache-2.0
//! Fourth-order finite differences and composite Gauss–Legendre quadrature.

use std::num::NonZeroUsize;
use std::ops::{Add, Mul, Sub};

use gauss_quad::GaussLegendre;

use crate::error::Result;

/// Values that finite differences and quadrature can combine.
pub trait Linear: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}
impl<T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>> Linear for T {}

/// Stencil placement relative to the domain `[lo, hi]`.
enum Placement {
    Central,
    Forward,
    Backward,
}

fn placement(t: f64, h: f64, lo: f64, hi: f64, reach: f64) -> Placement {
    if t - reach * h >= lo && t + reach * h <= hi {
        Placement::Central
    } else if t - reach * h < lo {
        Placement::Forward
    } else {
        Placement::Backward
    }
}

fn combine<V: Linear>(samples: &[V], weights: &[f64]) -> V {
    let mut acc = samples[0] * weights[0];
    for (s, w) in samples.iter().zip(weights).skip(1) {
        acc = acc + *s * *w;
    }
    acc
}

/// First derivative, O(h⁴), switching to one-sided stencils near the edges.
pub fn derivative<V: Linear>(f: impl Fn(f64) -> Result<V>, t: f64, h: f64, (lo, hi): (f64, f64)) -> Result<V> {
    match placement(t, h, lo, hi, 2.0) {
        Placement::Central => {
            let s = [f(t - 2.0 * h)?, f(t - h)?, f(t + h)?, f(t + 2.0 * h)?];
            Ok(combine(&s, &[1.0, -8.0, 8.0, -1.0]) * (1.0 / (12.0 * h)))
        }
        side => {
            let dir = if matches!(side, Placement::Forward) { 1.0 } else { -1.0 };
            let s: Vec<V> = (0..5).map(|k| f(t + dir * k as f64 * h)).collect::<Result<_>>()?;
            Ok(combine(&s, &[-25.0, 48.0, -36.0, 16.0, -3.0]) * (dir / (12.0 * h)))
        }
    }
}

/// Second derivative, O(h⁴), one-sided near the edges.
pub fn second_derivative<V: Linear>(f: impl Fn(f64) -> Result<V>, t: f64, h: f64, (lo, hi): (f64, f64)) -> Result<V> {
    match placement(t, h, lo, hi, 2.0) {
        Placement::Central => {
            let s = [f(t - 2.0 * h)?, f(t - h)?, f(t)?, f(t + h)?, f(t + 2.0 * h)?];
            Ok(combine(&s, &[-1.0, 16.0, -30.0, 16.0, -1.0]) * (1.0 / (12.0 * h * h)))
        }
        side => {
            let dir = if matches!(side, Placement::Forward) { 1.0 } else { -1.0 };
            let s: Vec<V> = (0..6).map(|k| f(t + dir * k as f64 * h)).collect::<Result<_>>()?;
            Ok(combine(&s, &[45.0, -154.0, 214.0, -156.0, 61.0, -10.0]) * (1.0 / (12.0 * h * h)))
        }
    }
}

/// Fixed-order Gauss–Legendre rule applied on equal panels.
#[derive(Clone, Debug)]
pub struct CompositeRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl CompositeRule {
    pub fn new(order: usize) -> Self {
        let n = NonZeroUsize::new(order.max(2)).expect("nonzero order");
        let gl = GaussLegendre::new(n);
        let (nodes, weights) = gl.into_iter().unzip();
        Self { nodes, weights }
    }

    /// `∫_a^b f` with `panels` equal panels; `zero` seeds the accumulator.
    pub fn integrate<V: Linear>(&self, f: impl Fn(f64) -> V, a: f64, b: f64, panels: usize, zero: V) -> V {
        let width = (b - a) / panels as f64;
        let half = 0.5 * width;
        let mut acc = zero;
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * width;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                acc = acc + f(mid + half * x) * (w * half);
            }
        }
        acc
    }
}

impl CompositeRule {
    /// Nodes and weights of the composite rule on `[a, b]`.
    pub fn nodes_on(&self, a: f64, b: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
        let width = (b - a) / panels as f64;
        let half = 0.5 * width;
        let mut nodes = Vec::with_capacity(panels * self.nodes.len());
        let mut weights = Vec::with_capacity(panels * self.nodes.len());
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * width;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                nodes.push(mid + half * x);
                weights.push(w * half);
            }
        }
        (nodes, weights)
    }
}

impl Default for CompositeRule {
    fn default() -> Self {
        Self::new(20)
    }
}
