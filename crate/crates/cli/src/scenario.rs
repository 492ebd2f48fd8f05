//! Turns a [`RunConfig`] into a table of observables.

use lossyjc::model::{observables, Atom, DressedIndex, COL_N_PHOTON, COL_P_0G, COL_P_G, COL_TRACE};
use lossyjc::offresonant::{evolve_offres, DEFAULT_K_MAX};
use lossyjc::oracle::{build_microscopic, build_phenomenological, integrate, DenseState, IntegrateOptions};
use lossyjc::{resonant, ModelParams, Observables, SectorState};
use rayon::prelude::*;

use crate::config::{Init, Method, RunConfig, Scenario};
use crate::error::CliError;
use crate::output::Table;

const OBSERVABLES: [&str; 4] = [COL_P_G, COL_N_PHOTON, COL_P_0G, COL_TRACE];

pub fn run(config: &RunConfig) -> Result<Table, CliError> {
    let table = match config.scenario {
        Scenario::Compare => run_compare(config)?,
        _ => run_observables(config)?,
    };
    check_rows(&table)?;
    Ok(table)
}

/// The initial state as a sector state, or `None` for coherent runs,
/// which the analytic side builds in closed form.
fn initial_sector(config: &RunConfig, params: &ModelParams) -> Option<SectorState> {
    let cutoff = Some(config.cutoff);
    match (config.scenario, config.init) {
        (Scenario::Coherent, _) => None,
        (Scenario::Fock, _) => Some(SectorState::bare(params, Atom::Ground, config.n.expect("validated"), cutoff)),
        (_, Some(Init::G1)) => Some(SectorState::bare(params, Atom::Ground, 1, cutoff)),
        (_, Some(Init::E0)) => Some(SectorState::bare(params, Atom::Excited, 0, cutoff)),
        (_, Some(Init::Minus)) => Some(SectorState::pure(config.cutoff, DressedIndex::Minus(1))),
        (_, Some(Init::Plus)) | (_, None) => Some(SectorState::pure(config.cutoff, DressedIndex::Plus(1))),
    }
}

/// The initial state as a dense matrix for the integrators. Only built when
/// an integrator runs, since its size grows with the square of the cutoff.
fn initial_dense(config: &RunConfig) -> DenseState {
    let cutoff = Some(config.cutoff);
    match (config.scenario, config.init) {
        (Scenario::Coherent, _) => DenseState::coherent(config.alpha.expect("validated"), config.cutoff),
        (Scenario::Fock, _) => DenseState::bare_fock(Atom::Ground, config.n.expect("validated"), cutoff),
        (_, Some(Init::G1)) => DenseState::bare_fock(Atom::Ground, 1, cutoff),
        (_, Some(Init::E0)) => DenseState::bare_fock(Atom::Excited, 0, cutoff),
        (_, Some(Init::Minus)) => {
            DenseState::from_sector_state(&SectorState::pure(config.cutoff, DressedIndex::Minus(1)))
        }
        (_, Some(Init::Plus)) | (_, None) => {
            DenseState::from_sector_state(&SectorState::pure(config.cutoff, DressedIndex::Plus(1)))
        }
    }
}

fn analytic_state(
    config: &RunConfig,
    initial: Option<&SectorState>,
    t: f64,
    params: &ModelParams,
) -> Result<SectorState, lossyjc::Error> {
    if config.scenario == Scenario::Coherent {
        let alpha = config.alpha.expect("validated");
        return resonant::coherent_solution_with_cutoff(alpha, t, params, config.cutoff);
    }
    let st = initial.expect("non-coherent runs have a sector state");
    if params.is_resonant() {
        resonant::evolve(st, t, params)
    } else {
        evolve_offres(st, t, params, DEFAULT_K_MAX)
    }
}

fn analytic_series(
    config: &RunConfig,
    initial: Option<&SectorState>,
    grid: &[f64],
    params: &ModelParams,
) -> Result<Vec<Observables>, CliError> {
    grid.par_iter()
        .map(|&t| Ok(observables(params, &analytic_state(config, initial, t, params)?)))
        .collect()
}

fn oracle_series(initial: &DenseState, grid: &[f64], params: &ModelParams) -> Result<Vec<Observables>, CliError> {
    let l = build_microscopic(params, initial.cutoff())?;
    let run = integrate(&l, initial, grid, IntegrateOptions::default())?;
    let col = |name| run.series.column(name).expect("standard column");
    let (pg, np, p0, tr) = (col(COL_P_G), col(COL_N_PHOTON), col(COL_P_0G), col(COL_TRACE));
    Ok((0..grid.len())
        .map(|i| Observables { p_g: pg[i], n_photon: np[i], p_0g: p0[i], trace: tr[i] })
        .collect())
}

fn split(obs: &[Observables]) -> [Vec<f64>; 4] {
    [
        obs.iter().map(|o| o.p_g).collect(),
        obs.iter().map(|o| o.n_photon).collect(),
        obs.iter().map(|o| o.p_0g).collect(),
        obs.iter().map(|o| o.trace).collect(),
    ]
}

fn run_observables(config: &RunConfig) -> Result<Table, CliError> {
    let params = config.params();
    let grid = config.grid();
    let initial = initial_sector(config, &params);
    let mut table = Table::new();
    table.push_column("lambda_t", grid.clone());
    match config.method {
        Method::Analytic => {
            for (name, col) in OBSERVABLES.iter().zip(split(&analytic_series(config, initial.as_ref(), &grid, &params)?)) {
                table.push_column(*name, col);
            }
        }
        Method::Oracle => {
            for (name, col) in OBSERVABLES.iter().zip(split(&oracle_series(&initial_dense(config), &grid, &params)?)) {
                table.push_column(*name, col);
            }
        }
        Method::Both => {
            let a = split(&analytic_series(config, initial.as_ref(), &grid, &params)?);
            let o = split(&oracle_series(&initial_dense(config), &grid, &params)?);
            let mut diff: f64 = 0.0;
            for (x, y) in a.iter().zip(&o) {
                for (u, v) in x.iter().zip(y) {
                    diff = diff.max((u - v).abs());
                }
            }
            for (name, col) in OBSERVABLES.iter().zip(a) {
                table.push_column(*name, col);
            }
            for (name, col) in OBSERVABLES.iter().zip(o) {
                table.push_column(format!("{name}_oracle"), col);
            }
            table.summary.push(("max_abs_diff".into(), diff));
        }
    }
    Ok(table)
}

fn run_compare(config: &RunConfig) -> Result<Table, CliError> {
    let params = config.params();
    let grid = config.grid();
    let initial = initial_sector(config, &params);
    let ms: Vec<f64> = match config.method {
        Method::Oracle => oracle_series(&initial_dense(config), &grid, &params)?,
        _ => analytic_series(config, initial.as_ref(), &grid, &params)?,
    }
    .iter()
    .map(|o| o.p_0g)
    .collect();

    let l = build_phenomenological(&params, config.cutoff)?;
    let run = integrate(&l, &initial_dense(config), &grid, IntegrateOptions::default())?;
    let ph = run.series.column(COL_P_0G).expect("standard column").to_vec();
    let diff: Vec<f64> = ms.iter().zip(&ph).map(|(a, b)| a - b).collect();
    let sup = diff.iter().fold(0.0f64, |m, d| m.max(d.abs()));

    let mut table = Table::new();
    table.push_column("lambda_t", grid);
    table.push_column("P0g_ms", ms);
    table.push_column("P0g_ph", ph);
    table.push_column("diff", diff);
    table.summary.push(("sup_norm_diff".into(), sup));
    Ok(table)
}

/// Rejects output rows with `P_g` outside `[0, 1]` or a drifting trace.
fn check_rows(table: &Table) -> Result<(), CliError> {
    for (name, col) in &table.columns {
        if let Some(i) = col.iter().position(|x| !x.is_finite()) {
            return Err(CliError::Check(format!("{name} is not finite at row {i}")));
        }
        if name.starts_with(COL_P_G) {
            if let Some(i) = col.iter().position(|&p| !(-1e-9..=1.0 + 1e-9).contains(&p)) {
                return Err(CliError::Check(format!("{name} = {} at row {i} is outside [0, 1]", col[i])));
            }
        }
        if name.starts_with(COL_TRACE) {
            if let Some(i) = col.iter().position(|&tr| (tr - 1.0).abs() >= 1e-8) {
                return Err(CliError::Check(format!("{name} = {} at row {i} drifted from 1", col[i])));
            }
        }
    }
    Ok(())
}
