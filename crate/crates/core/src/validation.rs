// SPDX-License-Identifier: Apache-2.0
//! The property suite behind `validate` and the acceptance target.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{commutator, conjugate, eigenvalues2, to_matrix, AlgebraElement, Matrix2};
use crate::dyson::{
    chi_closed_form, closed_form_trajectory, dyson_residual, ep_dissipative_residual, hermitian_counterpart,
    non_hermitian_hamiltonian, solve_gamma_ode, OdeTolerance,
};
use crate::energy::{energy_expectation, energy_expectation_quadrature, Scenario};
use crate::error::{Error, Result};
use crate::fock::{
    broken_spectrum_numeric, closure_defect, frame_equivalence, invariant_eigen_flow, metric_min_eigenvalues,
    precision_top_block, verify_dyson, verify_quasi_hermiticity, FockSpace,
};
use crate::invariants::{
    alpha_coeffs, b_diff_integral, beta_from_evolution, beta_from_match, conservation_residual, invariant_element,
    similarity_residual, Branch, InvariantCoeffs,
};
use crate::modes::{k1_expectation, k1_expectation_quadrature, mode_tdse_residual, product_tdse_residual, ModeSpec};
use crate::profiles::TimeGrid;
use crate::static_models::{broken_spectrum, decouple_xy, static_gram_matrix, XYModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteProfile {
    Fast,
    Slow,
}

impl SuiteProfile {
    pub fn cutoff(self) -> usize {
        match self {
            SuiteProfile::Fast => 12,
            SuiteProfile::Slow => 24,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub algebra: f64,
    pub dyson_algebraic: f64,
    pub dyson_fock: f64,
    pub route_agreement: f64,
    pub ermakov: f64,
    pub ermakov_control: f64,
    pub conservation: f64,
    pub eigen_drift: f64,
    pub similarity: f64,
    pub reality: f64,
    pub spectrum: f64,
    pub gram: f64,
    pub k1: f64,
    pub tdse: f64,
    pub tdse_ratio_min: f64,
    pub tdse_ratio_max: f64,
    pub energy_imag: f64,
    pub energy_match: f64,
    pub frame: f64,
    pub quasi_hermiticity: f64,
    pub exceptional_oracle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            algebra: 1e-14,
            dyson_algebraic: 1e-8,
            dyson_fock: 1e-6,
            route_agreement: 1e-6,
            ermakov: 1e-7,
            ermakov_control: 1e-4,
            conservation: 1e-7,
            eigen_drift: 1e-8,
            similarity: 1e-9,
            reality: 1e-12,
            spectrum: 1e-10,
            gram: 1e-8,
            k1: 1e-7,
            tdse: 1e-3,
            tdse_ratio_min: 3.0,
            tdse_ratio_max: 5.0,
            energy_imag: 1e-10,
            energy_match: 1e-5,
            frame: 1e-8,
            quasi_hermiticity: 1e-6,
            exceptional_oracle: 1e-12,
        }
    }
}

/// Invariant constants left free by the exceptional-point identification.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvariantChoice {
    pub c1: f64,
    pub c2_re: f64,
    pub c3_re: f64,
}

impl Default for InvariantChoice {
    fn default() -> Self {
        Self { c1: 1.0, c2_re: 1.0, c3_re: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub scenario: Scenario,
    pub grid: TimeGrid,
    pub space: FockSpace,
    pub invariant: InvariantChoice,
    pub tolerances: Tolerances,
    pub seed: u64,
}

impl Settings {
    /// Reference scenario on `[0, 10]` with 200 samples.
    pub fn reference(profile: SuiteProfile) -> Result<Self> {
        Ok(Self {
            scenario: Scenario::reference(10.0)?,
            grid: TimeGrid::new(0.0, 10.0, 200)?,
            space: FockSpace::new(profile.cutoff(), 2)?,
            invariant: InvariantChoice::default(),
            tolerances: Tolerances::default(),
            seed: 20_240_601,
        })
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    fn times(&self) -> Vec<f64> {
        self.grid.times()
    }

    /// `count` evenly spaced grid samples.
    fn subsample(&self, count: usize) -> Vec<f64> {
        let times = self.times();
        let step = (times.len() - 1) as f64 / (count.max(2) - 1) as f64;
        (0..count).map(|i| times[(i as f64 * step).round() as usize]).collect()
    }

    fn random_times(&self, stream: u64, count: usize) -> Vec<f64> {
        let mut rng = self.rng(stream);
        (0..count).map(|_| rng.gen_range(self.grid.t_start..=self.grid.t_end)).collect()
    }

    fn invariant_coeffs(&self, branch: Branch) -> Result<InvariantCoeffs> {
        let InvariantChoice { c1, c2_re, c3_re } = self.invariant;
        InvariantCoeffs::from_ep(&self.scenario.ep_constants(), c1, c2_re, c3_re, branch)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Bound {
    Below {
        limit: f64,
    },
    Above {
        limit: f64,
    },
    Between {
        low: f64,
        high: f64,
    },
    /// `measured` is 1 when the expected condition holds, 0 otherwise.
    Holds,
}

impl Bound {
    fn accepts(&self, v: f64) -> bool {
        match *self {
            Bound::Below { limit } => v < limit,
            Bound::Above { limit } => v > limit,
            Bound::Between { low, high } => (low..=high).contains(&v),
            Bound::Holds => v == 1.0,
        }
    }
}

impl std::fmt::Display for Bound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Bound::Below { limit } => write!(f, "< {limit:.1e}"),
            Bound::Above { limit } => write!(f, "> {limit:.1e}"),
            Bound::Between { low, high } => write!(f, "in [{low}, {high}]"),
            Bound::Holds => write!(f, "holds"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub label: String,
    pub measured: f64,
    pub bound: Bound,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    fn new(label: impl Into<String>, measured: f64, bound: Bound) -> Self {
        Self { label: label.into(), measured, passed: bound.accepts(measured), bound, note: None }
    }

    fn below(label: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self::new(label, measured, Bound::Below { limit })
    }

    fn above(label: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self::new(label, measured, Bound::Above { limit })
    }

    fn holds(label: impl Into<String>, ok: bool) -> Self {
        Self::new(label, if ok { 1.0 } else { 0.0 }, Bound::Holds)
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    fn failed(label: &str, err: &Error) -> Self {
        Self {
            label: label.into(),
            measured: f64::NAN,
            bound: Bound::Holds,
            passed: false,
            note: Some(err.to_string()),
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mark = if self.passed { "ok" } else { "FAIL" };
        match self.bound {
            Bound::Holds => write!(f, "{mark} {}", self.label)?,
            _ => write!(f, "{mark} {} = {:.3e} ({})", self.label, self.measured, self.bound)?,
        }
        if let Some(n) = &self.note {
            write!(f, " [{n}]")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub title: &'static str,
    pub checks: Vec<Check>,
}

impl CriterionReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    /// One line: status, id, title and the measured values.
    pub fn summary(&self) -> String {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let details: Vec<String> = self.checks.iter().map(|c| c.to_string()).collect();
        format!("{status} {:>2} {}: {}", self.id, self.title, details.join("; "))
    }
}

pub const CRITERIA: [(u8, &str); 13] = [
    (1, "algebra closure"),
    (2, "Dyson relation"),
    (3, "route equivalence"),
    (4, "dissipative Ermakov-Pinney"),
    (5, "invariant conservation"),
    (6, "pseudo-Hermiticity of invariants"),
    (7, "broken spectrum"),
    (8, "static eigenstates"),
    (9, "K1 expectation constancy"),
    (10, "TDSE residual"),
    (11, "reality of energy"),
    (12, "metric positivity"),
    (13, "exceptional point"),
];

pub fn run_criterion(id: u8, s: &Settings) -> Option<CriterionReport> {
    let (_, title) = *CRITERIA.iter().find(|(i, _)| *i == id)?;
    let outcome = match id {
        1 => algebra_closure(s),
        2 => dyson_relation(s),
        3 => route_equivalence(s),
        4 => ermakov_pinney(s),
        5 => invariant_conservation(s),
        6 => invariant_similarity(s),
        7 => broken_spectrum_check(s),
        8 => static_eigenstates(s),
        9 => k1_constancy(s),
        10 => tdse(s),
        11 => energy_reality(s),
        12 => metric_positivity(s),
        13 => exceptional_point(s),
        _ => unreachable!(),
    };
    let checks = outcome.unwrap_or_else(|e| vec![Check::failed("evaluation", &e)]);
    Some(CriterionReport { id, title, checks })
}

pub fn run_all(s: &Settings) -> Vec<CriterionReport> {
    CRITERIA.iter().filter_map(|(id, _)| run_criterion(*id, s)).collect()
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, v| if v.is_nan() || v > m { v } else { m })
}

fn try_max(values: impl IntoIterator<Item = Result<f64>>) -> Result<f64> {
    let mut m: f64 = 0.0;
    for v in values {
        let v = v?;
        if v.is_nan() || v > m {
            m = v;
        }
    }
    Ok(m)
}

fn matrix_max(m: &Matrix2) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn algebra_closure(s: &Settings) -> Result<Vec<Check>> {
    let tol = s.tolerances.algebra;
    let basis: Vec<AlgebraElement> = (0..4).map(AlgebraElement::basis).collect();
    let mut two = 0.0f64;
    let mut fock = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            let (a, b) = (to_matrix(&basis[i]), to_matrix(&basis[j]));
            let expected = commutator(&basis[i], &basis[j]);
            two = two.max(matrix_max(&(a * b - b * a - to_matrix(&expected))));
            fock = max_of([fock, closure_defect(&s.space, &basis[i], &basis[j], &expected)]);
        }
    }
    Ok(vec![
        Check::below("2x2 commutator error", two, tol),
        Check::below(format!("Fock N={} commutator error (double-double)", s.space.cutoff), fock, tol),
    ])
}

fn dyson_relation(s: &Settings) -> Result<Vec<Check>> {
    let sc = &s.scenario;
    let times = s.times();
    let algebraic = try_max(
        times.iter().map(|&t| dyson_residual(&sc.a, &sc.lambda, &sc.dyson_params(t)?, &sc.dyson_rates(t)?, t)),
    )?;
    let params = |t: f64| sc.dyson_params(t);
    let mut fock = 0.0f64;
    let mut skipped = 0usize;
    for &t in &times {
        let r = verify_dyson(sc, &params, &s.space, t)?;
        fock = max_of([fock, r.residual]);
        skipped += r.skipped.len();
    }
    let mut fock_check = Check::below(
        format!("Fock N={} residual over {} times", s.space.cutoff, times.len()),
        fock,
        s.tolerances.dyson_fock,
    );
    if skipped > 0 {
        fock_check = fock_check.with_note(format!("{skipped} block evaluations beyond the precision budget"));
    }
    Ok(vec![
        Check::below(format!("2x2 residual over {} times", times.len()), algebraic, s.tolerances.dyson_algebraic),
        fock_check,
    ])
}

fn route_equivalence(s: &Settings) -> Result<Vec<Check>> {
    let sc = &s.scenario;
    let closed = closed_form_trajectory(&sc.lambda, &sc.ep_constants(), &s.grid)?;
    let ode = solve_gamma_ode(&sc.lambda, closed.gamma3[0], closed.gamma4[0], &s.grid, OdeTolerance::default())?;
    Ok(vec![Check::below("max |ODE − closed form|", ode.max_abs_diff(&closed), s.tolerances.route_agreement)])
}

fn ermakov_pinney(s: &Settings) -> Result<Vec<Check>> {
    let sc = &s.scenario;
    let ep = sc.ep_constants();
    let l = &sc.lambda;
    let chi = |t: f64| chi_closed_form(l, &ep, t);
    let perturbed = |t: f64| Ok(chi_closed_form(l, &ep, t)? * (1.0 + 0.01 * t.sin()));
    let (mut nominal, mut control, mut used) = (0.0f64, 0.0f64, 0usize);
    for t in s.times() {
        if l.evaluate(t)?.abs() <= crate::dyson::LAMBDA_EPS {
            continue;
        }
        used += 1;
        nominal = max_of([nominal, ep_dissipative_residual(chi, l, ep.kappa, t)?]);
        control = max_of([control, ep_dissipative_residual(perturbed, l, ep.kappa, t)?]);
    }
    Ok(vec![
        Check::below(format!("residual over {used} checkpoints"), nominal, s.tolerances.ermakov),
        Check::above("perturbed-χ residual", control, s.tolerances.ermakov_control),
    ])
}

fn invariant_conservation(s: &Settings) -> Result<Vec<Check>> {
    let sc = &s.scenario;
    let c = s.invariant_coeffs(Branch::Plus)?;
    let dom = sc.domain();
    let big_h = |t: f64| Ok(non_hermitian_hamiltonian(sc.a.evaluate(t)?, sc.lambda.evaluate(t)?));
    let small_h = |t: f64| {
        let p = sc.dyson_params(t)?;
        Ok(hermitian_counterpart(sc.a.evaluate(t)?, sc.lambda.evaluate(t)?, p.gamma3, p.gamma4))
    };
    let big_i = |t: f64| Ok(invariant_element(&alpha_coeffs(&c, &sc.lambda, t)?));
    let small_i = |t: f64| Ok(AlgebraElement::from_real(beta_from_match(&c, &sc.lambda, t, Branch::Plus)?));
    let times = s.times();
    let r_big = try_max(times.iter().map(|&t| conservation_residual(big_i, big_h, t, dom)))?;
    let r_small = try_max(times.iter().map(|&t| conservation_residual(small_i, small_h, t, dom)))?;
    let params = |t: f64| sc.dyson_params(t);
    let flow_times = s.subsample(10);
    let flow = invariant_eigen_flow(&big_i, &params, &s.space, &flow_times)?;
    let mut drift = Check::below(
        format!("Fock eigenvalue drift of I_H over {} times", flow_times.len()),
        flow.max_drift,
        s.tolerances.eigen_drift,
    );
    if !flow.skipped.is_empty() {
        drift = drift.with_note(format!("blocks {:?} beyond the precision budget", flow.skipped));
    }
    Ok(vec![
        Check::below("∂t I_H − i[I_H, H]", r_big, s.tolerances.conservation),
        Check::below("∂t I_h − i[I_h, h]", r_small, s.tolerances.conservation),
        drift,
    ])
}

fn invariant_similarity(s: &Settings) -> Result<Vec<Check>> {
    let sc = &s.scenario;
    let c = s.invariant_coeffs(Branch::Plus)?;
    let (mut matched, mut evolved, mut imag) = (0.0f64, 0.0f64, 0.0f64);
    for t in s.times() {
        let alpha = alpha_coeffs(&c, &sc.lambda, t)?;
        let p = sc.dyson_params(t)?;
        matched =
            max_of([matched, similarity_residual(&alpha, &beta_from_match(&c, &sc.lambda, t, Branch::Plus)?, &p)]);
        let beta = beta_from_evolution(&c.real(), b_diff_integral(&c, &sc.lambda, t)?);
        evolved = max_of([evolved, similarity_residual(&alpha, &beta, &p)]);
        imag = max_of([imag, conjugate(&p, &invariant_element(&alpha)).max_imag()]);
    }
    Ok(vec![
        Check::below("‖ηI_Hη⁻¹ − I_h‖ (matched β)", matched, s.tolerances.similarity),
        Check::below("‖ηI_Hη⁻¹ − I_h‖ (evolved β)", evolved, s.tolerances.similarity),
        Check::below("max |Im| of I_h coefficients", imag, s.tolerances.reality),
    ])
}

fn broken_spectrum_check(s: &Settings) -> Result<Vec<Check>> {
    let (a, lambda) = (1.0, 0.4);
    let tol = s.tolerances.spectrum;
    let blocks = broken_spectrum_numeric(a, lambda, &s.space)?;
    let (mut err, mut closure, mut top) = (0.0f64, 0.0f64, 0usize);
    for b in blocks.iter().filter(|b| b.k <= 10) {
        top = top.max(b.k);
        // Within a block every level shares the real part a(1 + k), so ordering by Im pairs them up.
        let mut expected: Vec<Complex64> = (0..=b.k).map(|n| broken_spectrum(a, lambda, n, b.k - n)).collect();
        let mut got = b.eigenvalues.clone();
        got.sort_by(|x, y| x.im.total_cmp(&y.im));
        expected.sort_by(|x, y| x.im.total_cmp(&y.im));
        for (g, e) in got.iter().zip(&expected) {
            err = err.max((g - e).norm());
        }
        for z in &got {
            let nearest = got.iter().map(|w| (w - z.conj()).norm()).fold(f64::INFINITY, f64::min);
            closure = closure.max(nearest);
        }
    }
    Ok(vec![
        Check::below(format!("max eigenvalue error, n+m ≤ {top}"), err, tol),
        Check::below("conjugation closure gap", closure, tol),
    ])
}

fn static_eigenstates(s: &Settings) -> Result<Vec<Check>> {
    let gram = static_gram_matrix(4)?;
    let dev = max_of(
        gram.iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, v)| (v - if i == j { 1.0 } else { 0.0 }).abs())),
    );
    Ok(vec![Check::below("max |Gram − I|, indices ≤ 4", dev, s.tolerances.gram)])
}

fn k1_constancy(s: &Settings) -> Result<Vec<Check>> {
    let times = s.random_times(9, 10);
    let mut dev = 0.0f64;
    for n in 0..=3 {
        for kappa in [0.0, 0.5, 2.0] {
            let spec = ModeSpec::new(n, &s.scenario.a, kappa)?;
            let expected = k1_expectation(&spec);
            for &t in &times {
                dev = max_of([dev, (k1_expectation_quadrature(&spec, t)? - expected).norm()]);
            }
        }
    }
    Ok(vec![Check::below("max |⟨K1⟩ − (n+½)√(1+κ̃²)|", dev, s.tolerances.k1)])
}

/// Tolerance checks use ground states over seeded times; the halving-order
/// check also covers n ≤ 2, whose second-order truncation error grows with n.
fn tdse(s: &Settings) -> Result<Vec<Check>> {
    let (dx, dt) = (0.05, 1e-3);
    let sc = &s.scenario;
    let times = s.random_times(10, 10);
    let ground = ModeSpec::new(0, &sc.a, sc.kappa_plus)?;
    let single = try_max(times.iter().map(|&t| mode_tdse_residual(&ground, t, dx, dt)))?;
    let product = try_max(times.iter().map(|&t| product_tdse_residual(0, 0, sc, t, dx, dt)))?;
    let mut ratios = vec![];
    for n in 0..=2 {
        let spec = ModeSpec::new(n, &sc.a, sc.kappa_plus)?;
        for &t in &times[..3] {
            ratios.push(mode_tdse_residual(&spec, t, dx, dt)? / mode_tdse_residual(&spec, t, 0.5 * dx, dt)?);
        }
    }
    let t = times[0];
    ratios.push(product_tdse_residual(0, 0, sc, t, dx, dt)? / product_tdse_residual(0, 0, sc, t, 0.5 * dx, dt)?);
    let band = Bound::Between { low: s.tolerances.tdse_ratio_min, high: s.tolerances.tdse_ratio_max };
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = max_of(ratios.iter().copied());
    Ok(vec![
        Check::below(format!("ground mode residual over {} times", times.len()), single, s.tolerances.tdse),
        Check::below("ground product residual", product, s.tolerances.tdse),
        Check::new("smallest halving ratio", lo, band),
        Check::new("largest halving ratio", hi, band),
    ])
}

/// Normalized random state on blocks `0..=top_block`.
fn random_state(space: &FockSpace, top_block: usize, rng: &mut ChaCha8Rng) -> DVector<Complex64> {
    let top = space.block_offset(top_block + 1);
    let mut v = DVector::from_fn(space.dim(), |i, _| {
        if i < top {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let n = v.norm();
    v.unscale_mut(n);
    v
}

fn energy_reality(s: &Settings) -> Result<Vec<Check>> {
    let sc = &s.scenario;
    let times = s.subsample(5);
    let (mut imag, mut diff) = (0.0f64, 0.0f64);
    for &t in &times {
        let q = energy_expectation_quadrature(sc, t)?;
        imag = max_of([imag, q.energy.im.abs()]);
        diff = max_of([diff, (q.energy.re - energy_expectation(sc, t)?).abs()]);
    }
    let params: Vec<_> = times.iter().map(|&t| sc.dyson_params(t)).collect::<Result<_>>()?;
    let top = precision_top_block(&params, &s.space);
    let mut rng = s.rng(11);
    let psi = random_state(&s.space, top, &mut rng);
    let frame = try_max(times.iter().map(|&t| frame_equivalence(sc, &s.space, &psi, t)))?;
    let mut frame_check = Check::below("Fock frame equivalence", frame, s.tolerances.frame);
    if top < s.space.cutoff - s.space.buffer {
        frame_check = frame_check.with_note(format!("state on blocks 0..={top} within the precision budget"));
    }
    Ok(vec![
        Check::below("quadrature |Im E|", imag, s.tolerances.energy_imag),
        Check::below("|quadrature − closed form|", diff, s.tolerances.energy_match),
        frame_check,
    ])
}

fn metric_positivity(s: &Settings) -> Result<Vec<Check>> {
    let sc = &s.scenario;
    let mut smallest = f64::INFINITY;
    for t in s.times() {
        for (_, v) in metric_min_eigenvalues(&sc.dyson_params(t)?, &s.space) {
            smallest = smallest.min(v);
        }
    }
    let params = |t: f64| sc.dyson_params(t);
    let mut skipped = 0usize;
    let mut quasi = 0.0f64;
    for t in s.subsample(20) {
        let r = verify_quasi_hermiticity(sc, &params, &s.space, t)?;
        quasi = max_of([quasi, r.residual]);
        skipped += r.skipped.len();
    }
    let mut quasi_check = Check::below("‖H†ρ − ρH − iρ̇‖ in the η frame", quasi, s.tolerances.quasi_hermiticity);
    if skipped > 0 {
        quasi_check = quasi_check.with_note(format!("{skipped} block evaluations beyond the precision budget"));
    }
    Ok(vec![Check::above("min eigenvalue of η†η over safe blocks", smallest, 0.0), quasi_check])
}

fn exceptional_point(s: &Settings) -> Result<Vec<Check>> {
    let models = [
        XYModel { m: 1.0, omega_x: 1.0, omega_y: 2.0, kappa: 0.0 },
        XYModel { m: 2.0, omega_x: 1.5, omega_y: 0.5, kappa: 0.0 },
    ];
    let mut at_bound = true;
    let mut oracle = 0.0f64;
    let mut real_inside = true;
    for base in models {
        let bound = base.exceptional_bound();
        for kappa in [bound, -bound] {
            at_bound &= matches!(decouple_xy(&XYModel { kappa, ..base }), Err(Error::ExceptionalPoint { .. }));
        }
        for frac in [-0.95, -0.5, 0.1, 0.5, 0.9, 0.999] {
            let model = XYModel { kappa: frac * bound, ..base };
            let d = decouple_xy(&model)?;
            real_inside &= d.omega_x.is_finite() && d.omega_y.is_finite() && d.omega_x > 0.0 && d.omega_y > 0.0;
            let pot = Matrix2::new(
                Complex64::new(model.m * model.omega_x.powi(2), 0.0),
                Complex64::new(0.0, model.kappa),
                Complex64::new(0.0, model.kappa),
                Complex64::new(model.m * model.omega_y.powi(2), 0.0),
            );
            let ev = eigenvalues2(&pot);
            let mut expected: Vec<f64> = ev.iter().map(|z| z.re).collect();
            expected.sort_by(f64::total_cmp);
            let mut got = [model.m * d.omega_x.powi(2), model.m * d.omega_y.powi(2)];
            got.sort_by(f64::total_cmp);
            oracle = max_of(
                ev.iter()
                    .map(|z| z.im.abs())
                    .chain(got.iter().zip(&expected).map(|(g, e)| (g - e).abs()))
                    .chain([oracle]),
            );
        }
    }
    Ok(vec![
        Check::holds("decoupling rejects |κ| = m|Ω_y² − Ω_x²|/2", at_bound),
        Check::holds("real positive frequencies inside the bound", real_inside),
        Check::below("max |mω² − oracle eigenvalue|", oracle, s.tolerances.exceptional_oracle),
    ])
}
