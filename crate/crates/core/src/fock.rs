// SPDX-License-Identifier: Apache-2.0
//! Truncated two-mode Fock-space realization of the algebra:
//! `K1 = a†a + ½`, `K2 = b†b + ½`, `K3 = (a†b + ab†)/2`, `K4 = (a†b − ab†)/(2i)`.
//!
//! Every generator conserves `n_a + n_b`, so operators are stored as
//! `(k+1)×(k+1)` blocks for `k = 0..=N`. Basis order inside block `k` is
//! `j = n_b = 0..=k`. The Dyson map on block `k` has condition number up to
//! `e^{k(|γ3|+|γ4|)}`, so conjugations run in double-double arithmetic.

use nalgebra::{DMatrix, DVector};
use num_complex::{Complex, Complex64};
use num_traits::{One, Zero};
use twofloat::TwoFloat;

use crate::algebra::{AlgebraElement, DysonParams};
use crate::dyson::{energy_operator, non_hermitian_hamiltonian};
use crate::energy::{f_pm, Scenario};
use crate::error::{Error, Result};

pub const MIN_CUTOFF: usize = 2;
pub const MAX_CUTOFF: usize = 60;
pub const DEFAULT_BUFFER: usize = 2;

/// Largest `k(|γ3| + |γ4|)` accepted in a block. Products with `η(t)⁻¹` carry
/// an absolute error near `1e-32 · e^{budget}`, which the time stencil divides
/// by `12h`; at 48 that stays near `1e-8`.
pub const PRECISION_LOG_BUDGET: f64 = 48.0;

/// Step of the fourth-order stencils for `η̇` and `ρ̇`.
const TIME_STEP: f64 = 1e-3;

type Dd = TwoFloat;
type Cdd = Complex<TwoFloat>;

fn dd(x: f64) -> Dd {
    TwoFloat::from(x)
}

fn cdd(z: Complex64) -> Cdd {
    Complex::new(dd(z.re), dd(z.im))
}

fn to_f64(z: &Cdd) -> Complex64 {
    Complex64::new(z.re.hi() + z.re.lo(), z.im.hi() + z.im.lo())
}

/// Cutoff `N` (states with `n_a + n_b ≤ N`) and the number of top blocks
/// excluded from assertions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FockSpace {
    pub cutoff: usize,
    pub buffer: usize,
}

impl FockSpace {
    pub fn new(cutoff: usize, buffer: usize) -> Result<Self> {
        if !(MIN_CUTOFF..=MAX_CUTOFF).contains(&cutoff) {
            return Err(Error::CutoffOutOfRange { cutoff, min: MIN_CUTOFF, max: MAX_CUTOFF });
        }
        if buffer > cutoff {
            return Err(Error::constraint(format!("buffer {buffer} exceeds cutoff {cutoff}")));
        }
        Ok(Self { cutoff, buffer })
    }

    pub fn dim(&self) -> usize {
        (self.cutoff + 1) * (self.cutoff + 2) / 2
    }

    /// Position of `|n_a, n_b⟩` in the full basis.
    pub fn index(&self, na: usize, nb: usize) -> usize {
        let k = na + nb;
        k * (k + 1) / 2 + nb
    }

    pub fn block_offset(&self, k: usize) -> usize {
        k * (k + 1) / 2
    }

    /// Blocks `0..=N − buffer`.
    pub fn safe_blocks(&self) -> std::ops::RangeInclusive<usize> {
        0..=self.cutoff - self.buffer
    }
}

/// Block-diagonal operator on the truncated space.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    pub space: FockSpace,
    pub blocks: Vec<DMatrix<Complex64>>,
}

impl FockOperator {
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.space.dim(), self.space.dim());
        for (k, b) in self.blocks.iter().enumerate() {
            let o = self.space.block_offset(k);
            m.view_mut((o, o), (k + 1, k + 1)).copy_from(b);
        }
        m
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.blocks.iter().all(|b| (b - b.adjoint()).camax() <= tol)
    }

    pub fn commutator(&self, other: &FockOperator) -> FockOperator {
        self.zip(other, |a, b| a * b - b * a)
    }

    pub fn sub(&self, other: &FockOperator) -> FockOperator {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: Complex64) -> FockOperator {
        FockOperator { space: self.space, blocks: self.blocks.iter().map(|b| b * s).collect() }
    }

    /// Largest entry magnitude over the listed blocks.
    pub fn max_abs(&self, blocks: impl IntoIterator<Item = usize>) -> f64 {
        blocks.into_iter().map(|k| self.blocks[k].camax()).fold(0.0, f64::max)
    }

    fn zip(
        &self,
        other: &FockOperator,
        f: impl Fn(&DMatrix<Complex64>, &DMatrix<Complex64>) -> DMatrix<Complex64>,
    ) -> FockOperator {
        FockOperator {
            space: self.space,
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect(),
        }
    }
}

/// `√((k − j + 1) j)`, the hopping amplitude between `n_b = j − 1` and `n_b = j`.
fn hop(k: usize, j: usize) -> f64 {
    (((k - j + 1) * j) as f64).sqrt()
}

fn generator_block(index: usize, k: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(k + 1, k + 1);
    for j in 0..=k {
        match index {
            0 => m[(j, j)] = Complex64::new((k - j) as f64 + 0.5, 0.0),
            1 => m[(j, j)] = Complex64::new(j as f64 + 0.5, 0.0),
            _ => {}
        }
        if j >= 1 && index >= 2 {
            let v = 0.5 * hop(k, j);
            let (up, down) = if index == 2 {
                (Complex64::new(v, 0.0), Complex64::new(v, 0.0))
            } else {
                (Complex64::new(0.0, -v), Complex64::new(0.0, v))
            };
            m[(j - 1, j)] = up;
            m[(j, j - 1)] = down;
        }
    }
    m
}

pub fn build_generators(cutoff: usize) -> Result<[FockOperator; 4]> {
    let space = FockSpace::new(cutoff, DEFAULT_BUFFER.min(cutoff))?;
    Ok([0, 1, 2, 3].map(|i| FockOperator { space, blocks: (0..=cutoff).map(|k| generator_block(i, k)).collect() }))
}

/// `Σ cᵢ Kᵢ` on the given space.
pub fn fock_element(space: &FockSpace, a: &AlgebraElement) -> FockOperator {
    FockOperator { space: *space, blocks: (0..=space.cutoff).map(|k| element_block(a, k)).collect() }
}

fn element_block(a: &AlgebraElement, k: usize) -> DMatrix<Complex64> {
    (0..4).fold(DMatrix::zeros(k + 1, k + 1), |acc, i| acc + generator_block(i, k) * a.coeffs[i])
}

fn element_block_dd(a: &AlgebraElement, k: usize) -> DMatrix<Cdd> {
    let c = a.coeffs.map(cdd);
    let half = dd(0.5);
    let mut m = DMatrix::from_element(k + 1, k + 1, Cdd::zero());
    for j in 0..=k {
        let na = dd((k - j) as f64) + half;
        let nb = dd(j as f64) + half;
        m[(j, j)] = c[0] * Complex::new(na, Dd::zero()) + c[1] * Complex::new(nb, Dd::zero());
        if j >= 1 {
            let v = dd(((k - j + 1) * j) as f64).sqrt() * half;
            let re = Complex::new(v, Dd::zero());
            let im = Complex::new(Dd::zero(), v);
            m[(j - 1, j)] = c[2] * re - c[3] * im;
            m[(j, j - 1)] = c[2] * re + c[3] * im;
        }
    }
    m
}

/// Largest entry of `[A, B] − C` over all blocks, evaluated in double-double and rounded once.
pub fn closure_defect(space: &FockSpace, a: &AlgebraElement, b: &AlgebraElement, c: &AlgebraElement) -> f64 {
    (0..=space.cutoff)
        .map(|k| {
            let (x, y) = (element_block_dd(a, k), element_block_dd(b, k));
            let d = &x * &y - &y * &x - element_block_dd(c, k);
            round_block(&d).camax()
        })
        .fold(0.0, f64::max)
}

/// `exp(γ K3)` on block `k` in double-double: Taylor series with scaling and squaring.
fn exp_k3_block(k: usize, gamma: f64) -> DMatrix<Dd> {
    let n = k + 1;
    let mut x = DMatrix::from_element(n, n, Dd::zero());
    let g = dd(gamma);
    let half = dd(0.5);
    for j in 1..=k {
        let v = g * dd(((k - j + 1) * j) as f64).sqrt() * half;
        x[(j - 1, j)] = v;
        x[(j, j - 1)] = v;
    }
    let norm: f64 = (0..n).map(|i| (0..n).map(|j| x[(i, j)].hi().abs()).sum::<f64>()).fold(0.0, f64::max);
    let squarings = if norm > 0.25 { (norm / 0.25).log2().ceil() as u32 } else { 0 };
    let scale = dd(0.5f64.powi(squarings as i32));
    let y = x.map(|v| v * scale);
    let id = DMatrix::from_fn(n, n, |i, j| if i == j { Dd::one() } else { Dd::zero() });
    let mut e = id.clone();
    for m in (1..=24).rev() {
        let inv = dd(m as f64).recip();
        e = &id + (&y * &e).map(|v| v * inv);
    }
    for _ in 0..squarings {
        e = &e * &e;
    }
    e
}

/// `η` and `η⁻¹` on block `k`.
struct BlockMap {
    eta: DMatrix<Cdd>,
    eta_inv: DMatrix<Cdd>,
}

/// Phase `i^{j}` relating `K4 = U K3 U†` with `U = diag(i^{j})`.
fn quarter_phase(j: usize) -> Cdd {
    match j % 4 {
        0 => Complex::new(Dd::one(), Dd::zero()),
        1 => Complex::new(Dd::zero(), Dd::one()),
        2 => Complex::new(-Dd::one(), Dd::zero()),
        _ => Complex::new(Dd::zero(), -Dd::one()),
    }
}

fn complexify(m: &DMatrix<Dd>) -> DMatrix<Cdd> {
    m.map(|v| Complex::new(v, Dd::zero()))
}

/// `exp(γ K4) = U exp(γ K3) U†`.
fn rotate_to_k4(m: &DMatrix<Dd>) -> DMatrix<Cdd> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        quarter_phase(i) * quarter_phase(j).conj() * Complex::new(m[(i, j)], Dd::zero())
    })
}

/// `exp(−γ K3) = S exp(γ K3) S` with `S = diag((−1)^j)`.
fn flip(m: &DMatrix<Dd>) -> DMatrix<Dd> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| if (i + j) % 2 == 0 { m[(i, j)] } else { -m[(i, j)] })
}

fn block_map(p: &DysonParams, k: usize, with_inverse: bool) -> BlockMap {
    let e3 = exp_k3_block(k, p.gamma3);
    let e4 = exp_k3_block(k, p.gamma4);
    let diag: Vec<Dd> =
        (0..=k).map(|j| dd((p.gamma1 * ((k - j) as f64 + 0.5) + p.gamma2 * (j as f64 + 0.5)).exp())).collect();
    let mut eta = complexify(&e3) * rotate_to_k4(&e4);
    for (i, d) in diag.iter().enumerate() {
        eta.row_mut(i).iter_mut().for_each(|v| *v *= Complex::new(*d, Dd::zero()));
    }
    let eta_inv = if with_inverse {
        let mut inv = rotate_to_k4(&flip(&e4)) * complexify(&flip(&e3));
        for (j, d) in diag.iter().enumerate() {
            let r = Complex::new(d.recip(), Dd::zero());
            inv.column_mut(j).iter_mut().for_each(|v| *v *= r);
        }
        inv
    } else {
        DMatrix::zeros(0, 0)
    };
    BlockMap { eta, eta_inv }
}

fn round_block(m: &DMatrix<Cdd>) -> DMatrix<Complex64> {
    m.map(|z| to_f64(&z))
}

fn adjoint_dd(m: &DMatrix<Cdd>) -> DMatrix<Cdd> {
    DMatrix::from_fn(m.ncols(), m.nrows(), |i, j| m[(j, i)].conj())
}

fn scale_dd(m: &DMatrix<Cdd>, s: f64) -> DMatrix<Cdd> {
    let s = Complex::new(dd(s), Dd::zero());
    m.map(|v| v * s)
}

/// `η = e^{γ1K1}e^{γ2K2}e^{γ3K3}e^{γ4K4}` rounded to double precision.
pub fn build_eta(params: &DysonParams, space: &FockSpace) -> FockOperator {
    FockOperator {
        space: *space,
        blocks: (0..=space.cutoff).map(|k| round_block(&block_map(params, k, false).eta)).collect(),
    }
}

pub fn build_eta_inverse(params: &DysonParams, space: &FockSpace) -> FockOperator {
    FockOperator {
        space: *space,
        blocks: (0..=space.cutoff).map(|k| round_block(&block_map(params, k, true).eta_inv)).collect(),
    }
}

/// `η A η⁻¹` evaluated in double-double and rounded.
pub fn conjugate_operator(params: &DysonParams, a: &AlgebraElement, space: &FockSpace) -> FockOperator {
    FockOperator {
        space: *space,
        blocks: (0..=space.cutoff)
            .map(|k| {
                let m = block_map(params, k, true);
                round_block(&(&m.eta * element_block_dd(a, k) * &m.eta_inv))
            })
            .collect(),
    }
}

fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

fn log_condition(p: &DysonParams, k: usize) -> f64 {
    k as f64 * (p.gamma3.abs() + p.gamma4.abs())
}

fn precision_safe(params: &[DysonParams], k: usize) -> bool {
    params.iter().all(|p| log_condition(p, k) <= PRECISION_LOG_BUDGET)
}

/// Largest safe block within the precision budget for every listed parameter set.
pub fn precision_top_block(params: &[DysonParams], space: &FockSpace) -> usize {
    space.safe_blocks().take_while(|&k| precision_safe(params, k)).last().unwrap_or(0)
}

/// Per-block outcome of an operator check.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockReport {
    /// Largest spectral-norm residual over the checked blocks.
    pub residual: f64,
    pub per_block: Vec<(usize, f64)>,
    /// Safe blocks left out because `k(|γ3|+|γ4|)` exceeds [`PRECISION_LOG_BUDGET`].
    pub skipped: Vec<usize>,
}

impl BlockReport {
    fn from_blocks(per_block: Vec<(usize, f64)>, skipped: Vec<usize>) -> Self {
        let residual = per_block.iter().map(|(_, r)| *r).fold(0.0, f64::max);
        Self { residual, per_block, skipped }
    }
}

const CENTRAL: [(f64, f64); 4] = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];
const FORWARD: [(f64, f64); 5] = [(0.0, -25.0), (1.0, 48.0), (2.0, -36.0), (3.0, 16.0), (4.0, -3.0)];

/// Fourth-order first-derivative weights (shift in steps, weight), one-sided
/// near the domain edges. Divide by `12h`.
fn stencil(t: f64, (lo, hi): (f64, f64)) -> Vec<(f64, f64)> {
    if t - 2.0 * TIME_STEP < lo {
        FORWARD.to_vec()
    } else if t + 2.0 * TIME_STEP > hi {
        FORWARD.iter().map(|(s, w)| (-s, -w)).collect()
    } else {
        CENTRAL.to_vec()
    }
}

/// Shared pieces of the Dyson and metric checks at time `t` on block `k`:
/// `A = ηHη⁻¹` and the similarity-frame products `M_s = η(t + s h) η(t)⁻¹`.
struct FrameData {
    conjugated: DMatrix<Cdd>,
    shifted: Vec<(f64, DMatrix<Cdd>)>,
}

fn frame_data(
    scenario: &Scenario,
    t: f64,
    k: usize,
    shifted_params: &[(f64, DysonParams)],
    now: &DysonParams,
) -> Result<FrameData> {
    let h_nh = non_hermitian_hamiltonian(scenario.a.evaluate(t)?, scenario.lambda.evaluate(t)?);
    let base = block_map(now, k, true);
    let conjugated = &base.eta * element_block_dd(&h_nh, k) * &base.eta_inv;
    let shifted = shifted_params.iter().map(|(w, p)| (*w, block_map(p, k, false).eta * &base.eta_inv)).collect();
    Ok(FrameData { conjugated, shifted })
}

fn stencil_params(
    scenario: &Scenario,
    params: &dyn Fn(f64) -> Result<DysonParams>,
    t: f64,
) -> Result<(DysonParams, Vec<(f64, DysonParams)>, f64)> {
    let now = params(t)?;
    let shifted = stencil(t, scenario.domain())
        .iter()
        .map(|(s, w)| Ok((*w, params(t + s * TIME_STEP)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok((now, shifted, 1.0 / (12.0 * TIME_STEP)))
}

/// Spectral-norm residual of `ηHη⁻¹ + iη̇η⁻¹ − h` on the safe blocks, with
/// `η̇η⁻¹` from a fourth-order stencil over `η(t + s h)η(t)⁻¹`.
pub fn verify_dyson(
    scenario: &Scenario,
    params: &dyn Fn(f64) -> Result<DysonParams>,
    space: &FockSpace,
    t: f64,
) -> Result<BlockReport> {
    let (now, shifted, inv_h) = stencil_params(scenario, params, t)?;
    let (fp, fm) = f_pm(scenario, t)?;
    let h = AlgebraElement::from_real([fp, fm, 0.0, 0.0]);
    let all: Vec<DysonParams> = std::iter::once(now).chain(shifted.iter().map(|(_, p)| *p)).collect();
    let (mut per_block, mut skipped) = (Vec::new(), Vec::new());
    for k in space.safe_blocks() {
        if !precision_safe(&all, k) {
            skipped.push(k);
            continue;
        }
        let data = frame_data(scenario, t, k, &shifted, &now)?;
        let mut rate = DMatrix::from_element(k + 1, k + 1, Cdd::zero());
        for (w, m) in &data.shifted {
            rate += scale_dd(m, *w * inv_h);
        }
        let i = Complex::new(Dd::zero(), Dd::one());
        let residual = data.conjugated + rate.map(|v| v * i) - element_block_dd(&h, k);
        per_block.push((k, spectral_norm(&round_block(&residual))));
    }
    Ok(BlockReport::from_blocks(per_block, skipped))
}

/// Spectral norm of `η^{−†}(H†ρ − ρH − iρ̇)η⁻¹` on the safe blocks, `ρ = η†η`.
/// In this frame `H†ρ − ρH` becomes `A† − A` with `A = ηHη⁻¹`, and the
/// stencil for `ρ̇` becomes one over `M_s†M_s` with `M_s = η(t + s h)η(t)⁻¹`.
pub fn verify_quasi_hermiticity(
    scenario: &Scenario,
    params: &dyn Fn(f64) -> Result<DysonParams>,
    space: &FockSpace,
    t: f64,
) -> Result<BlockReport> {
    let (now, shifted, inv_h) = stencil_params(scenario, params, t)?;
    let all: Vec<DysonParams> = std::iter::once(now).chain(shifted.iter().map(|(_, p)| *p)).collect();
    let (mut per_block, mut skipped) = (Vec::new(), Vec::new());
    for k in space.safe_blocks() {
        if !precision_safe(&all, k) {
            skipped.push(k);
            continue;
        }
        let data = frame_data(scenario, t, k, &shifted, &now)?;
        let mut metric_rate = DMatrix::from_element(k + 1, k + 1, Cdd::zero());
        for (w, m) in &data.shifted {
            metric_rate += scale_dd(&(adjoint_dd(m) * m), *w * inv_h);
        }
        let i = Complex::new(Dd::zero(), Dd::one());
        let a = &data.conjugated;
        let residual = adjoint_dd(a) - a - metric_rate.map(|v| v * i);
        per_block.push((k, spectral_norm(&round_block(&residual))));
    }
    Ok(BlockReport::from_blocks(per_block, skipped))
}

/// Smallest eigenvalue of `ρ = η†η` per safe block, as `1/‖η⁻¹‖₂²`.
pub fn metric_min_eigenvalues(params: &DysonParams, space: &FockSpace) -> Vec<(usize, f64)> {
    space
        .safe_blocks()
        .map(|k| {
            let inv = round_block(&block_map(params, k, true).eta_inv);
            (k, spectral_norm(&inv).powi(-2))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockSpectrum {
    pub k: usize,
    pub eigenvalues: Vec<Complex64>,
}

/// QR sweeps stall on some spectra symmetric about the diagonal; retry with a
/// complex shift that breaks the symmetry and undo it afterwards.
const SCHUR_SHIFTS: [Complex64; 4] = [
    Complex64::new(0.0, 0.0),
    Complex64::new(0.137, 0.071),
    Complex64::new(-0.291, 0.183),
    Complex64::new(0.613, -0.427),
];

fn sorted_eigenvalues(m: DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let ev = SCHUR_SHIFTS
        .iter()
        .find_map(|&s| {
            let shift = s * scale;
            let shifted = &m + DMatrix::from_diagonal_element(n, n, shift);
            shifted.try_schur(f64::EPSILON, 2000).and_then(|d| d.eigenvalues()).map(|e| e.map(|z| z - shift))
        })
        .ok_or_else(|| Error::constraint("Schur iteration did not converge"))?;
    let mut v: Vec<Complex64> = ev.iter().copied().collect();
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(v)
}

/// Eigenvalues of `a(K1 + K2) + iλK3` on every safe block.
pub fn broken_spectrum_numeric(a: f64, lambda: f64, space: &FockSpace) -> Result<Vec<BlockSpectrum>> {
    let h = non_hermitian_hamiltonian(a, lambda);
    space
        .safe_blocks()
        .map(|k| Ok(BlockSpectrum { k, eigenvalues: sorted_eigenvalues(element_block(&h, k))? }))
        .collect()
}

/// Eigenvalue tracking of the invariant over time.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenFlow {
    pub max_drift: f64,
    pub per_block: Vec<(usize, f64)>,
    pub skipped: Vec<usize>,
}

/// Eigenvalues of `I(t)` per safe block at each time, computed on the
/// similarity-equivalent `η I η⁻¹` for conditioning; reports the largest
/// departure from the first time.
pub fn invariant_eigen_flow(
    invariant: &dyn Fn(f64) -> Result<AlgebraElement>,
    params: &dyn Fn(f64) -> Result<DysonParams>,
    space: &FockSpace,
    times: &[f64],
) -> Result<EigenFlow> {
    let ps: Vec<DysonParams> = times.iter().map(|&t| params(t)).collect::<Result<_>>()?;
    let invs: Vec<AlgebraElement> = times.iter().map(|&t| invariant(t)).collect::<Result<_>>()?;
    let (mut per_block, mut skipped) = (Vec::new(), Vec::new());
    for k in space.safe_blocks() {
        if !precision_safe(&ps, k) {
            skipped.push(k);
            continue;
        }
        let mut reference: Option<Vec<Complex64>> = None;
        let mut drift: f64 = 0.0;
        for (p, inv) in ps.iter().zip(&invs) {
            let m = block_map(p, k, true);
            let ev = sorted_eigenvalues(round_block(&(&m.eta * element_block_dd(inv, k) * &m.eta_inv)))?;
            match &reference {
                None => reference = Some(ev),
                Some(r) => {
                    for (a, b) in r.iter().zip(&ev) {
                        drift = drift.max((a - b).norm());
                    }
                }
            }
        }
        per_block.push((k, drift));
    }
    let max_drift = per_block.iter().map(|(_, d)| *d).fold(0.0, f64::max);
    Ok(EigenFlow { max_drift, per_block, skipped })
}

/// A state held in double-double precision, block by block.
#[derive(Clone, Debug, PartialEq)]
pub struct PreciseState {
    pub space: FockSpace,
    blocks: Vec<DVector<Cdd>>,
}

impl PreciseState {
    pub fn to_f64(&self) -> DVector<Complex64> {
        let mut v = DVector::zeros(self.space.dim());
        for (k, b) in self.blocks.iter().enumerate() {
            let o = self.space.block_offset(k);
            for (j, z) in b.iter().enumerate() {
                v[o + j] = to_f64(z);
            }
        }
        v
    }

    fn occupied(&self) -> impl Iterator<Item = (usize, &DVector<Cdd>)> {
        self.blocks.iter().enumerate().filter(|(_, b)| b.iter().any(|z| !z.is_zero()))
    }

    /// `⟨ψ|ρ|ψ⟩ = ‖ηψ‖²`.
    pub fn metric_norm(&self, params: &DysonParams) -> f64 {
        let mut acc = Dd::zero();
        for (k, b) in self.occupied() {
            let mapped = block_map(params, k, false).eta * b;
            acc = mapped.iter().fold(acc, |s, z| s + z.re * z.re + z.im * z.im);
        }
        acc.hi() + acc.lo()
    }

    /// `⟨ψ|ρ O|ψ⟩ = (ηψ)†(ηOψ)`.
    pub fn metric_expectation(&self, params: &DysonParams, op: &AlgebraElement) -> Complex64 {
        let mut acc = Cdd::zero();
        for (k, b) in self.occupied() {
            let eta = block_map(params, k, false).eta;
            let left = &eta * b;
            let right = &eta * (element_block_dd(op, k) * b);
            for (l, r) in left.iter().zip(right.iter()) {
                acc += l.conj() * r;
            }
        }
        to_f64(&acc)
    }
}

/// `ψ_H = η⁻¹ψ_h`; `ψ_h` must vanish outside the safe blocks and outside the
/// blocks within the precision budget.
pub fn map_state(params: &DysonParams, psi_h: &DVector<Complex64>, space: &FockSpace) -> Result<PreciseState> {
    if psi_h.len() != space.dim() {
        return Err(Error::constraint(format!("state length {} differs from dimension {}", psi_h.len(), space.dim())));
    }
    let safe_top = space.cutoff - space.buffer;
    let mut blocks = Vec::with_capacity(space.cutoff + 1);
    for k in 0..=space.cutoff {
        let o = space.block_offset(k);
        let seg = DVector::from_fn(k + 1, |j, _| cdd(psi_h[o + j]));
        let occupied = psi_h.rows(o, k + 1).iter().any(|z| *z != Complex64::new(0.0, 0.0));
        if occupied && k > safe_top {
            return Err(Error::Truncation { block: k });
        }
        if occupied && !precision_safe(std::slice::from_ref(params), k) {
            let log_condition = log_condition(params, k);
            return Err(Error::PrecisionBudget { block: k, log_condition, budget: PRECISION_LOG_BUDGET });
        }
        if !occupied {
            blocks.push(seg);
        } else {
            blocks.push(block_map(params, k, true).eta_inv * seg);
        }
    }
    Ok(PreciseState { space: *space, blocks })
}

/// `⟨ψ|A|ψ⟩` in double precision.
pub fn expectation(space: &FockSpace, a: &AlgebraElement, psi: &DVector<Complex64>) -> Complex64 {
    let op = fock_element(space, a);
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, b) in op.blocks.iter().enumerate() {
        let seg = psi.rows(space.block_offset(k), k + 1);
        acc += (seg.adjoint() * b * seg)[(0, 0)];
    }
    acc
}

/// `|⟨ψ_h|h|ψ_h⟩ − ⟨ψ_H|ρH̃|ψ_H⟩|` for the scenario at `t`.
pub fn frame_equivalence(scenario: &Scenario, space: &FockSpace, psi_h: &DVector<Complex64>, t: f64) -> Result<f64> {
    let p = scenario.dyson_params(t)?;
    let (fp, fm) = f_pm(scenario, t)?;
    let h = AlgebraElement::from_real([fp, fm, 0.0, 0.0]);
    let lhs = expectation(space, &h, psi_h);
    let tilde = energy_operator(scenario.a.evaluate(t)?, scenario.lambda.evaluate(t)?, p.gamma3, p.gamma4);
    let rhs = map_state(&p, psi_h, space)?.metric_expectation(&p, &tilde);
    Ok((lhs - rhs).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{commutator, conjugate};
    use crate::invariants::{alpha_coeffs, invariant_element, Branch, InvariantCoeffs};
    use crate::profiles::TimeProfile;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn k(i: usize) -> AlgebraElement {
        AlgebraElement::basis(i)
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cutoff_bounds() {
        assert!(matches!(build_generators(1), Err(Error::CutoffOutOfRange { .. })));
        assert!(matches!(build_generators(61), Err(Error::CutoffOutOfRange { .. })));
        assert!(FockSpace::new(4, 5).is_err());
    }

    #[test]
    fn number_operator_diagonal() {
        let g = build_generators(2).unwrap();
        let dense = g[0].to_dense();
        let sp = g[0].space;
        assert_eq!(dense[(sp.index(0, 0), sp.index(0, 0))], c(0.5, 0.0));
        assert_eq!(dense[(sp.index(1, 0), sp.index(1, 0))], c(1.5, 0.0));
        assert_eq!(dense[(sp.index(0, 1), sp.index(0, 1))], c(0.5, 0.0));
    }

    /// Ladder operators written out in the full product basis, independent of the block code.
    fn ladder_oracle(cutoff: usize) -> [DMatrix<Complex64>; 4] {
        let sp = FockSpace::new(cutoff, 0).unwrap();
        let n = sp.dim();
        let (mut a, mut b) = (DMatrix::<Complex64>::zeros(n, n), DMatrix::<Complex64>::zeros(n, n));
        for na in 0..=cutoff {
            for nb in 0..=cutoff - na {
                if na >= 1 {
                    a[(sp.index(na - 1, nb), sp.index(na, nb))] = c((na as f64).sqrt(), 0.0);
                }
                if nb >= 1 {
                    b[(sp.index(na, nb - 1), sp.index(na, nb))] = c((nb as f64).sqrt(), 0.0);
                }
            }
        }
        let id = DMatrix::<Complex64>::identity(n, n) * c(0.5, 0.0);
        let (ad, bd) = (a.adjoint(), b.adjoint());
        // a†b and ab† stay inside fixed total number, so truncation does not clip them.
        let hop_ab = &ad * &b;
        let hop_ba = &a * &bd;
        let k1 = &ad * &a + &id;
        let k2 = &bd * &b + &id;
        let k3 = (&hop_ab + &hop_ba) * c(0.5, 0.0);
        let k4 = (&hop_ab - &hop_ba) * c(0.0, -0.5);
        [k1, k2, k3, k4]
    }

    #[test]
    fn blocks_match_ladder_construction() {
        let g = build_generators(6).unwrap();
        let oracle = ladder_oracle(6);
        for i in 0..4 {
            let d = g[i].to_dense();
            let diff = &d - &oracle[i];
            // The oracle's a†b rows on the top block are clipped by b† on n_b = N rows; compare below it.
            let cut = FockSpace::new(6, 0).unwrap().block_offset(6);
            assert!(diff.view((0, 0), (cut, cut)).camax() < 1e-15, "K{}", i + 1);
            assert!(g[i].is_hermitian(0.0));
        }
    }

    #[test]
    fn commutator_table_on_blocks() {
        let g = build_generators(8).unwrap();
        let sp = g[0].space;
        for i in 0..4 {
            for j in 0..4 {
                let lhs = g[i].commutator(&g[j]);
                let rhs = fock_element(&sp, &commutator(&k(i), &k(j)));
                assert!(lhs.sub(&rhs).max_abs(0..=8) < 1e-14, "[K{}, K{}]", i + 1, j + 1);
            }
        }
    }

    #[test]
    fn operators_preserve_total_number() {
        let g = build_generators(5).unwrap();
        let sp = g[0].space;
        let number = DMatrix::from_fn(sp.dim(), sp.dim(), |r, col| {
            if r == col {
                let kk = (0..=5).rfind(|&kk| sp.block_offset(kk) <= r).unwrap();
                c(kk as f64, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let p = DysonParams::new(0.1, 0.1, 0.8, -0.4);
        let eta = build_eta(&p, &sp).to_dense();
        for m in g.iter().map(|o| o.to_dense()).chain(std::iter::once(eta)) {
            assert!((&m * &number - &number * &m).camax() < 1e-12);
        }
    }

    #[test]
    fn exp_direction_and_signs() {
        for kk in [1, 3, 6] {
            let k3 = generator_block(2, kk);
            let k4 = generator_block(3, kk);
            let u =
                DMatrix::from_fn(kk + 1, kk + 1, |i, j| if i == j { to_f64(&quarter_phase(i)) } else { c(0.0, 0.0) });
            assert!((&u * &k3 * u.adjoint() - &k4).camax() < 1e-15);
            let e = round_block(&complexify(&exp_k3_block(kk, 0.9)));
            let mut series = DMatrix::<Complex64>::identity(kk + 1, kk + 1);
            let mut term = series.clone();
            for n in 1..60 {
                term = &term * &k3 * c(0.9 / n as f64, 0.0);
                series += &term;
            }
            assert!((&e - &series).camax() < 1e-13 * series.camax());
            let inv = round_block(&complexify(&flip(&exp_k3_block(kk, 0.9))));
            assert!((&e * &inv - DMatrix::identity(kk + 1, kk + 1)).camax() < 1e-13);
        }
    }

    #[test]
    fn eta_identity_and_inverse() {
        let sp = FockSpace::new(6, 2).unwrap();
        let id = build_eta(&DysonParams::default(), &sp);
        for (kk, b) in id.blocks.iter().enumerate() {
            assert!((b - DMatrix::identity(kk + 1, kk + 1)).camax() < 1e-15);
        }
        let p = DysonParams::new(0.3, -0.2, 1.1, 0.6);
        let (e, ei) = (build_eta(&p, &sp), build_eta_inverse(&p, &sp));
        for kk in 0..=6 {
            let prod = &e.blocks[kk] * &ei.blocks[kk];
            assert!((prod - DMatrix::identity(kk + 1, kk + 1)).camax() < 1e-10);
        }
    }

    #[test]
    fn cross_representation_conjugation() {
        let sp = FockSpace::new(8, 2).unwrap();
        let p = DysonParams::new(0.2, 0.2, 1.4, -0.7);
        for a in [k(0), k(2), AlgebraElement::new(c(1.0, 0.2), c(-0.3, 0.0), c(0.5, -0.1), c(0.0, 0.8))] {
            let via_algebra = fock_element(&sp, &conjugate(&p, &a));
            let via_matrix = conjugate_operator(&p, &a, &sp);
            assert!(via_algebra.sub(&via_matrix).max_abs(sp.safe_blocks()) < 1e-10);
        }
    }

    #[test]
    fn metric_positive_with_dense_eigensolver() {
        let sp = FockSpace::new(6, 2).unwrap();
        let p = DysonParams::new(0.0, 0.0, 0.0, 0.9);
        let eta = build_eta(&p, &sp);
        let mins = metric_min_eigenvalues(&p, &sp);
        for (kk, b) in eta.blocks.iter().enumerate().take(5) {
            let rho = b.adjoint() * b;
            assert!((&rho - rho.adjoint()).camax() < 1e-13);
            let ev = rho.symmetric_eigenvalues();
            assert!(ev.min() > 0.0);
            assert!((ev.min() - mins[kk].1).abs() < 1e-10);
            if kk >= 1 {
                assert!((rho - DMatrix::identity(kk + 1, kk + 1)).camax() > 1e-3);
            }
        }
    }

    fn reference() -> Scenario {
        Scenario::reference(10.0).unwrap()
    }

    #[test]
    fn dyson_check_passes_and_controls_fail() {
        let s = reference();
        let sp = FockSpace::new(12, 2).unwrap();
        let params = |t: f64| s.dyson_params(t);
        for &t in &[0.0, 0.5, 5.0, 9.9, 10.0] {
            let r = verify_dyson(&s, &params, &sp, t).unwrap();
            assert!(r.skipped.is_empty());
            assert!(r.residual < 1e-6, "t = {t}: {}", r.residual);
        }
        let flipped = |t: f64| {
            let p = s.dyson_params(t)?;
            Ok(DysonParams { gamma4: -p.gamma4, ..p })
        };
        assert!(verify_dyson(&s, &flipped, &sp, 5.0).unwrap().residual > 1e-2);
        let zero = Scenario::new(s.a.clone(), TimeProfile::constant(0.0, 10.0).unwrap(), 0.0, 1.0, 0.4, 0.5, 0.5, 0, 0)
            .unwrap();
        let still = |t: f64| zero.dyson_params(t);
        assert!(verify_dyson(&zero, &still, &sp, 3.0).unwrap().residual < 1e-9);
    }

    #[test]
    fn quasi_hermiticity() {
        let s = reference();
        let sp = FockSpace::new(12, 2).unwrap();
        let params = |t: f64| s.dyson_params(t);
        for &t in &[0.0, 5.0, 10.0] {
            assert!(verify_quasi_hermiticity(&s, &params, &sp, t).unwrap().residual < 1e-6);
        }
        let identity = |_t: f64| Ok(DysonParams::default());
        let r = verify_quasi_hermiticity(&s, &identity, &sp, 2.0).unwrap().residual;
        let expected = 2.0 * s.lambda.evaluate(2.0).unwrap().abs() * 0.5 * (sp.cutoff - sp.buffer) as f64;
        assert!((r - expected).abs() < 1e-9, "{r} vs {expected}");
    }

    #[test]
    fn broken_spectrum_blocks() {
        let sp = FockSpace::new(12, 2).unwrap();
        let free = broken_spectrum_numeric(1.3, 0.0, &sp).unwrap();
        for b in &free {
            assert!(b.eigenvalues.iter().all(|z| (z - c(1.3 * (1 + b.k) as f64, 0.0)).norm() < 1e-12));
        }
        let blocks = broken_spectrum_numeric(1.0, 0.4, &sp).unwrap();
        let one = &blocks[1].eigenvalues;
        assert!((one[0] - c(2.0, -0.2)).norm() < 1e-12 && (one[1] - c(2.0, 0.2)).norm() < 1e-12);
    }

    #[test]
    fn invariant_flow_and_controls() {
        let s = reference();
        let sp = FockSpace::new(12, 2).unwrap();
        let coeffs = InvariantCoeffs::from_ep(&s.ep_constants(), 1.0, 1.0, 1.0, Branch::Plus).unwrap();
        let inv = |t: f64| Ok(invariant_element(&alpha_coeffs(&coeffs, &s.lambda, t)?));
        let params = |t: f64| s.dyson_params(t);
        let times: Vec<f64> = (0..10).map(|i| 0.1 + i as f64).collect();
        let flow = invariant_eigen_flow(&inv, &params, &sp, &times).unwrap();
        assert!(flow.max_drift < 1e-8, "{}", flow.max_drift);
        let bumped = |t: f64| {
            let mut a = alpha_coeffs(&coeffs, &s.lambda, t)?;
            if t > 5.0 {
                a[2] += c(0.1, 0.0);
            }
            Ok(invariant_element(&a))
        };
        assert!(invariant_eigen_flow(&bumped, &params, &sp, &times).unwrap().max_drift > 1e-3);
        let zero = TimeProfile::constant(0.0, 10.0).unwrap();
        let still = |t: f64| Ok(invariant_element(&alpha_coeffs(&coeffs, &zero, t)?));
        let fixed = |_t: f64| Ok(DysonParams::new(0.0, 0.0, 0.4, 0.2));
        assert_eq!(invariant_eigen_flow(&still, &fixed, &sp, &times).unwrap().max_drift, 0.0);
    }

    fn random_safe_state(sp: &FockSpace, rng: &mut ChaCha8Rng) -> DVector<Complex64> {
        let top = sp.block_offset(sp.cutoff - sp.buffer + 1);
        let mut v = DVector::from_fn(sp.dim(), |i, _| {
            if i < top {
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            } else {
                c(0.0, 0.0)
            }
        });
        let n = v.norm();
        v /= c(n, 0.0);
        v
    }

    #[test]
    fn state_mapping() {
        let s = reference();
        let sp = FockSpace::new(12, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = random_safe_state(&sp, &mut rng);
        let same = map_state(&DysonParams::default(), &psi, &sp).unwrap().to_f64();
        assert!((same - &psi).camax() < 1e-15);
        for &t in &[1.0, 6.0, 9.9] {
            let p = s.dyson_params(t).unwrap();
            let mapped = map_state(&p, &psi, &sp).unwrap();
            assert!((mapped.metric_norm(&p) - 1.0).abs() < 1e-10);
            assert!(frame_equivalence(&s, &sp, &psi, t).unwrap() < 1e-8);
        }
        let mut leaky = psi.clone();
        leaky[sp.dim() - 1] = c(0.1, 0.0);
        assert!(matches!(map_state(&DysonParams::default(), &leaky, &sp), Err(Error::Truncation { .. })));
        let steep = DysonParams::new(0.0, 0.0, 4.0, 2.0);
        assert_eq!(precision_top_block(&[steep], &sp), 8);
        assert!(matches!(map_state(&steep, &psi, &sp), Err(Error::PrecisionBudget { block: 9, .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn metric_positive_on_safe_blocks(g in prop::array::uniform4(-1.5..1.5f64)) {
            let sp = FockSpace::new(8, 2).unwrap();
            let p = DysonParams::new(g[0], g[1], g[2], g[3]);
            for (_, v) in metric_min_eigenvalues(&p, &sp) {
                prop_assert!(v > 0.0);
            }
        }

        #[test]
        fn conjugation_agrees_across_representations(
            g in prop::array::uniform2(-1.5..1.5f64),
            re in prop::array::uniform4(-1.0..1.0f64),
            im in prop::array::uniform4(-1.0..1.0f64),
        ) {
            let sp = FockSpace::new(8, 2).unwrap();
            let p = DysonParams::new(0.3, -0.2, g[0], g[1]);
            let a = AlgebraElement::new(c(re[0], im[0]), c(re[1], im[1]), c(re[2], im[2]), c(re[3], im[3]));
            let diff = fock_element(&sp, &conjugate(&p, &a)).sub(&conjugate_operator(&p, &a, &sp));
            prop_assert!(diff.max_abs(sp.safe_blocks()) < 1e-10);
        }
    }
}
