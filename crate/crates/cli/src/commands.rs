// SPDX-License-Identifier: Apache-2.0
use std::fs;
use std::path::Path;

use brokenpt::dyson::dyson_residual;
use brokenpt::energy::{energy_expectation, f_pm};
use brokenpt::fock::{metric_min_eigenvalues, verify_dyson, verify_quasi_hermiticity};
use brokenpt::invariants::beta_from_match;
use brokenpt::modes::{product_modes, ModeSnapshot};
use brokenpt::static_models::{broken_spectrum, decouple_xy, spectrum_xy};
use brokenpt::validation::run_all;
use brokenpt::{Branch, Error, InvariantCoeffs};
use serde_json::json;

use crate::config::Run;

pub enum Failure {
    Numerical(Error),
    Io(String),
    Validation(Vec<u8>),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Numerical(_) => 3,
            Failure::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Numerical(e) => write!(f, "numerical failure: {e}"),
            Failure::Io(e) => write!(f, "output failure: {e}"),
            Failure::Validation(ids) => write!(f, "failed criteria: {ids:?}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Numerical(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

/// 17 significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

struct Table {
    writer: csv::Writer<fs::File>,
}

impl Table {
    fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self, Failure> {
        fs::create_dir_all(dir)?;
        let mut writer = csv::Writer::from_path(dir.join(name))?;
        writer.write_record(header)?;
        Ok(Self { writer })
    }

    fn row(&mut self, fields: impl IntoIterator<Item = String>) -> Result<(), Failure> {
        self.writer.write_record(fields.into_iter().collect::<Vec<_>>())?;
        Ok(())
    }

    fn finish(mut self) -> Result<(), Failure> {
        self.writer.flush()?;
        Ok(())
    }
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Result<(), Failure> {
    fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
    fs::write(dir.join(name), text + "\n")?;
    Ok(())
}

fn invariant(run: &Run) -> Result<InvariantCoeffs, Failure> {
    let c = run.config.invariant;
    Ok(InvariantCoeffs::from_ep(&run.settings.scenario.ep_constants(), c.c1, c.c2_re, c.c3_re, Branch::Plus)?)
}

pub fn evolve(run: &Run, out: &Path) -> Result<(), Failure> {
    let sc = &run.settings.scenario;
    let coeffs = invariant(run)?;
    let mut table = Table::create(
        out,
        "evolve.csv",
        &["t", "gamma3", "gamma4", "beta1", "beta2", "beta3", "beta4", "f_plus", "f_minus", "energy", "dyson_residual"],
    )?;
    for t in run.settings.grid.times() {
        let p = sc.dyson_params(t)?;
        let beta = beta_from_match(&coeffs, &sc.lambda, t, Branch::Plus)?;
        let (fp, fm) = f_pm(sc, t)?;
        let residual = dyson_residual(&sc.a, &sc.lambda, &p, &sc.dyson_rates(t)?, t)?;
        let mut row = vec![num(t), num(p.gamma3), num(p.gamma4)];
        row.extend(beta.iter().map(|&b| num(b)));
        row.extend([num(fp), num(fm), num(energy_expectation(sc, t)?), num(residual)]);
        table.row(row)?;
    }
    table.finish()
}

pub fn spectrum(run: &Run, out: &Path) -> Result<(), Failure> {
    let st = run.config.static_models;
    let model = st.xy.model();
    let bound = model.exceptional_bound();
    let report = match decouple_xy(&model) {
        Ok(d) => {
            let mut table = Table::create(out, "spectrum_xy.csv", &["n", "m", "energy"])?;
            for l in spectrum_xy(d.omega_x, d.omega_y, st.levels, st.levels)? {
                table.row([l.n.to_string(), l.m.to_string(), num(l.energy)])?;
            }
            table.finish()?;
            json!({
                "kappa": model.kappa, "bound": bound, "regime": "decoupled",
                "theta": d.theta, "omega_x": d.omega_x, "omega_y": d.omega_y,
            })
        }
        Err(e @ Error::ExceptionalPoint { .. }) => {
            json!({ "kappa": model.kappa, "bound": bound, "regime": "exceptional", "message": e.to_string() })
        }
        Err(e) => return Err(e.into()),
    };
    write_json(out, "exceptional_point.json", &report)?;
    let mut table = Table::create(out, "broken_spectrum.csv", &["n", "m", "re", "im"])?;
    for n in 0..=st.levels {
        for m in 0..=st.levels {
            let e = broken_spectrum(st.k.a, st.k.lambda, n, m);
            table.row([n.to_string(), m.to_string(), num(e.re), num(e.im)])?;
        }
    }
    table.finish()
}

pub fn modes(run: &Run, out: &Path) -> Result<(), Failure> {
    let sc = &run.settings.scenario;
    let mc = &run.config.modes;
    let (plus, minus) = product_modes(sc.n, sc.m, sc)?;
    let mut table = Table::create(out, "modes.csv", &["t", "x", "channel", "n", "re", "im"])?;
    let step = (mc.x_max - mc.x_min) / (mc.points - 1) as f64;
    for &t in &mc.times {
        for (label, spec) in [("plus", &plus), ("minus", &minus)] {
            let snap = ModeSnapshot::at(spec, t)?;
            for j in 0..mc.points {
                let x = mc.x_min + j as f64 * step;
                let v = snap.value(x);
                table.row([num(t), num(x), label.to_string(), spec.n.to_string(), num(v.re), num(v.im)])?;
            }
        }
    }
    table.finish()
}

pub fn oracle(run: &Run, out: &Path) -> Result<(), Failure> {
    let s = &run.settings;
    let sc = &s.scenario;
    let params = |t: f64| sc.dyson_params(t);
    let mut table = Table::create(
        out,
        "oracle.csv",
        &[
            "t",
            "dyson_residual",
            "quasi_hermiticity_residual",
            "metric_min_eigenvalue",
            "checked_blocks",
            "skipped_blocks",
        ],
    )?;
    for t in s.grid.times() {
        let dyson = verify_dyson(sc, &params, &s.space, t)?;
        let quasi = verify_quasi_hermiticity(sc, &params, &s.space, t)?;
        let min_ev = metric_min_eigenvalues(&sc.dyson_params(t)?, &s.space)
            .into_iter()
            .map(|(_, v)| v)
            .fold(f64::INFINITY, f64::min);
        table.row([
            num(t),
            num(dyson.residual),
            num(quasi.residual),
            num(min_ev),
            dyson.per_block.len().to_string(),
            dyson.skipped.len().to_string(),
        ])?;
    }
    table.finish()
}

pub fn validate(run: &Run, out: &Path) -> Result<(), Failure> {
    let reports = run_all(&run.settings);
    for r in &reports {
        println!("{}", r.summary());
    }
    let failed_ids: Vec<u8> = reports.iter().filter(|r| !r.passed()).map(|r| r.id).collect();
    let failed = failed_ids.len();
    let summary = json!({
        "cutoff": run.settings.space.cutoff,
        "buffer": run.settings.space.buffer,
        "passed": reports.len() - failed,
        "failed": failed,
        "criteria": reports.iter().map(|r| json!({
            "id": r.id, "title": r.title, "passed": r.passed(), "checks": r.checks,
        })).collect::<Vec<_>>(),
    });
    write_json(out, "validation.json", &summary)?;
    println!("validate: {} of {} criteria passed", reports.len() - failed, reports.len());
    if failed > 0 {
        return Err(Failure::Validation(failed_ids));
    }
    Ok(())
}
