use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nugget_gp::likelihood::{beta_hat, find_modes, fit_from_profile};
use nugget_gp::linalg::condition_number;
use nugget_gp::simulation::{run_table1, AmplitudeConvention, TABLE1_NUGGETS, TABLE1_TAUS};
use nugget_gp::{
    fit_mle, scan_profile, Dataset, Emulator, Family, FitOptions, FitResult, KernelSpec, LikelihoodProfile, Model,
};
use serde_json::json;

use crate::io::{emit_csv, emit_json, num, read_dataset, CliError, CliResult, RunManifest, Table};
use crate::{DataArgs, GridArgs, KernelArgs};

type Params = BTreeMap<String, String>;

fn load(data: &DataArgs, params: &mut Params) -> CliResult<Dataset> {
    match (&data.input, data.model) {
        (Some(path), _) => {
            params.insert("input".into(), path.display().to_string());
            read_dataset(path)
        }
        (None, Some(model)) => {
            params.insert("model".into(), model.name().into());
            params.insert("n".into(), data.n.to_string());
            Ok(model.dataset(data.n)?)
        }
        (None, None) => Err(CliError::Input("give an input CSV or --model".into())),
    }
}

fn kernel_params(kernel: &KernelArgs, params: &mut Params) {
    params.insert("family".into(), kernel.family.name().into());
    params.insert("nu".into(), num(kernel.nu));
}

fn options(grid: &GridArgs, params: &mut Params) -> FitOptions {
    params.insert("psi_min".into(), num(grid.psi_min));
    params.insert("psi_max".into(), num(grid.psi_max));
    params.insert("grid".into(), grid.grid.to_string());
    FitOptions { psi_min: grid.psi_min, psi_max: grid.psi_max, grid_size: grid.grid, ..FitOptions::default() }
}

fn fit_json(fit: &FitResult) -> serde_json::Value {
    let mut v = serde_json::to_value(fit).expect("fit result serializes");
    v["sigma_hat"] = json!(fit.sigma_hat());
    v
}

pub fn fit(data: &DataArgs, kernel: &KernelArgs, grid: &GridArgs, out: Option<&Path>) -> CliResult<()> {
    let mut params = Params::new();
    let d = load(data, &mut params)?;
    kernel_params(kernel, &mut params);
    let opts = options(grid, &mut params);
    let fit = fit_mle(&d, kernel.family, kernel.nu, &opts)?;
    let mut v = fit_json(&fit);
    v["manifest"] = serde_json::to_value(RunManifest::new("fit", params, None)).expect("manifest serializes");
    emit_json(&v, out)
}

fn profile_table(p: &LikelihoodProfile) -> Table {
    let mut t = Table::new(&["psi", "L", "flag"]);
    for i in 0..p.len() {
        t.push(vec![num(p.grid[i]), num(p.values[i]), p.flags[i].as_str().into()]);
    }
    t
}

pub fn profile(data: &DataArgs, kernel: &KernelArgs, grid: &GridArgs, out: Option<&Path>) -> CliResult<()> {
    let mut params = Params::new();
    let d = load(data, &mut params)?;
    kernel_params(kernel, &mut params);
    options(grid, &mut params);
    let p = scan_profile(&d, kernel.family, kernel.nu, grid.psi_min, grid.psi_max, grid.grid)?;
    emit_csv(&profile_table(&p), &RunManifest::new("profile", params, None), out)
}

pub fn predict(
    data: &DataArgs,
    kernel: &KernelArgs,
    grid: &GridArgs,
    psi: &str,
    query: &[f64],
    out: Option<&Path>,
) -> CliResult<()> {
    let mut params = Params::new();
    let d = load(data, &mut params)?;
    kernel_params(kernel, &mut params);
    if let Some(bad) = query.iter().find(|q| !q.is_finite()) {
        return Err(CliError::Input(format!("query point {bad} is not finite")));
    }
    let emulator = if psi == "auto" {
        let opts = options(grid, &mut params);
        params.insert("psi".into(), "auto".into());
        let fit = fit_mle(&d, kernel.family, kernel.nu, &opts)?;
        params.insert("psi_hat".into(), num(fit.psi_hat));
        Emulator::from_fit(d, &fit)?
    } else {
        let psi: f64 =
            psi.parse().map_err(|_| CliError::Input(format!("--psi must be a number or `auto`, got `{psi}`")))?;
        params.insert("psi".into(), num(psi));
        let k = KernelSpec::new(kernel.family, psi, kernel.nu)?;
        let beta = beta_hat(&d, &k)?;
        Emulator::new(d, k, beta)?
    };
    params.insert("beta".into(), num(emulator.beta()));
    params.insert("query".into(), query.iter().map(|&q| num(q)).collect::<Vec<_>>().join(";"));
    let mut t = Table::new(&["x", "m_nu", "m_interp"]);
    for &x in query {
        t.push(vec![num(x), num(emulator.predict_metamodel(x)), num(emulator.predict_interpolating(x))]);
    }
    emit_csv(&t, &RunManifest::new("predict", params, None), out)
}

pub fn condition(data: &DataArgs, kernel: &KernelArgs, psi: f64, out: Option<&Path>) -> CliResult<()> {
    let mut params = Params::new();
    let d = load(data, &mut params)?;
    kernel_params(kernel, &mut params);
    params.insert("psi".into(), num(psi));
    let k = KernelSpec::new(kernel.family, psi, kernel.nu)?;
    let c = condition_number(&k.corr_matrix(d.points())?);
    let mut v = serde_json::to_value(c).expect("condition serializes");
    v["manifest"] = serde_json::to_value(RunManifest::new("condition", params, None)).expect("manifest serializes");
    emit_json(&v, out)
}

fn column(tau: f64, nu: f64) -> String {
    format!("tau_{tau}_nu_{nu}")
}

pub fn table1(replicates: usize, seed: u64, convention: AmplitudeConvention, out: Option<&Path>) -> CliResult<()> {
    if replicates == 0 {
        return Err(CliError::Input("--replicates must be at least 1".into()));
    }
    let s = run_table1(replicates, seed, convention)?;
    let mut header = vec!["row".to_string()];
    let mut cells = Vec::new();
    for tau in TABLE1_TAUS {
        for nu in TABLE1_NUGGETS {
            header.push(column(tau, nu));
            cells.push(s.cell(tau, nu).expect("every cell is run"));
        }
    }
    let mut t = Table { header, rows: Vec::new() };
    let mut row = |name: &str, f: &dyn Fn(&nugget_gp::simulation::CellSummary) -> String| {
        let mut r = vec![name.to_string()];
        r.extend(cells.iter().map(|c| f(c)));
        t.rows.push(r);
    };
    row("beta_hat_mean", &|c| num(c.beta_hat.mean));
    row("beta_hat_sd", &|c| num(c.beta_hat.sd));
    row("sigma_hat_mean", &|c| num(c.sigma_hat.mean));
    row("sigma_hat_sd", &|c| num(c.sigma_hat.sd));
    row("psi_hat_mean", &|c| num(c.psi_hat.mean));
    row("psi_hat_sd", &|c| num(c.psi_hat.sd));
    row("included", &|c| c.included.to_string());
    row("excluded_unbounded", &|c| c.excluded.unbounded.to_string());
    row("excluded_degenerate", &|c| c.excluded.degenerate.to_string());
    row("excluded_infeasible", &|c| c.excluded.infeasible.to_string());

    let mut params = Params::new();
    params.insert("replicates".into(), replicates.to_string());
    params.insert("amplitude_convention".into(), convention.as_str().into());
    emit_csv(&t, &RunManifest::new("table1", params, Some(seed)), out)
}

// ---- figures ----

struct FigureWriter {
    dir: PathBuf,
    manifest: RunManifest,
}

impl FigureWriter {
    fn write(&self, name: &str, table: &Table) -> CliResult<()> {
        fs::write(self.dir.join(name), table.to_csv()?)?;
        Ok(())
    }
}

fn psi_hat_row(label: Vec<String>, n: usize, fit: &FitResult) -> Vec<String> {
    let mut r = label;
    r.extend([
        n.to_string(),
        num(fit.psi_hat),
        fit.status.as_str().into(),
        num(fit.cond_at_psi_hat.value),
        fit.cond_at_psi_hat.beyond_double_precision.to_string(),
    ]);
    r
}

const PSI_HAT_COLUMNS: [&str; 5] = ["n", "psi_hat", "status", "condition_number", "beyond_double_precision"];

fn with_columns(lead: &[&'static str]) -> Vec<&'static str> {
    lead.iter().copied().chain(PSI_HAT_COLUMNS).collect()
}

fn profiles_for(
    d_for: impl Fn(usize) -> CliResult<Dataset>,
    ns: &[usize],
    family: Family,
    nu: f64,
    grid: &GridArgs,
) -> CliResult<Table> {
    let mut t = Table::new(&["n", "psi", "L", "flag"]);
    for &n in ns {
        let p = scan_profile(&d_for(n)?, family, nu, grid.psi_min, grid.psi_max, grid.grid)?;
        for i in 0..p.len() {
            t.push(vec![n.to_string(), num(p.grid[i]), num(p.values[i]), p.flags[i].as_str().into()]);
        }
    }
    Ok(t)
}

const FIGURE_NS: std::ops::RangeInclusive<usize> = 6..=20;
const PROFILE_NS: [usize; 3] = [7, 14, 20];

pub fn figure(id: u32, grid: &GridArgs, out: Option<PathBuf>) -> CliResult<()> {
    if !(1..=4).contains(&id) {
        return Err(CliError::Input(format!("unknown figure {id}; expected 1, 2, 3 or 4")));
    }
    let mut params = Params::new();
    params.insert("id".into(), id.to_string());
    let opts = options(grid, &mut params);
    let dir = out.unwrap_or_else(|| PathBuf::from(format!("figure{id}")));
    fs::create_dir_all(&dir)?;
    let w = FigureWriter { dir, manifest: RunManifest::new("figure", params, None) };
    let sin = |n: usize| -> CliResult<Dataset> { Ok(Model::Sin.dataset(n)?) };

    match id {
        1 => {
            let mut t = Table::new(&with_columns(&["model"]));
            for model in [Model::Linear, Model::Sin] {
                for n in FIGURE_NS {
                    let fit = fit_mle(&model.dataset(n)?, Family::Exponential, 0.0, &opts)?;
                    t.push(psi_hat_row(vec![model.name().into()], n, &fit));
                }
            }
            w.write("psi_hat.csv", &t)?;
        }
        2 => {
            let mut t = Table::new(&PSI_HAT_COLUMNS);
            for n in FIGURE_NS {
                t.push(psi_hat_row(Vec::new(), n, &fit_mle(&sin(n)?, Family::Gaussian, 0.0, &opts)?));
            }
            w.write("psi_hat.csv", &t)?;
            w.write("profiles.csv", &profiles_for(sin, &PROFILE_NS, Family::Gaussian, 0.0, grid)?)?;
        }
        3 => {
            let mut t = Table::new(&with_columns(&["nu"]));
            for nu in [0.02, 0.05] {
                for n in FIGURE_NS {
                    t.push(psi_hat_row(vec![num(nu)], n, &fit_mle(&sin(n)?, Family::Gaussian, nu, &opts)?));
                }
            }
            w.write("psi_hat.csv", &t)?;
            w.write("profiles.csv", &profiles_for(sin, &PROFILE_NS, Family::Gaussian, 0.02, grid)?)?;
        }
        _ => {
            let d = sin(7)?;
            let mut profiles = Table::new(&["nu", "psi", "L", "flag"]);
            let mut modes = Table::new(&["nu", "mode", "psi", "L", "status"]);
            for nu in [0.0, 0.01, 0.001, 0.0001] {
                let p = scan_profile(&d, Family::Gaussian, nu, grid.psi_min, grid.psi_max, grid.grid)?;
                for i in 0..p.len() {
                    profiles.push(vec![num(nu), num(p.grid[i]), num(p.values[i]), p.flags[i].as_str().into()]);
                }
                let status = fit_from_profile(&d, &p, &opts)?.status;
                for (k, m) in find_modes(&d, &p).iter().enumerate() {
                    modes.push(vec![num(nu), (k + 1).to_string(), num(m.psi), num(m.loglik), status.as_str().into()]);
                }
            }
            w.write("profiles.csv", &profiles)?;
            w.write("modes.csv", &modes)?;
        }
    }
    fs::write(w.dir.join("manifest.json"), w.manifest.to_json())?;
    Ok(())
}
