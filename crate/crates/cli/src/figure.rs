//! Preset runs that regenerate the data behind each figure.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{Format, Init, Method, RunConfig, Scenario};
use crate::error::CliError;
use crate::{output, scenario};

fn base(scenario: Scenario, format: Format) -> RunConfig {
    RunConfig {
        scenario,
        n: None,
        alpha: None,
        init: None,
        gamma: 0.2,
        delta: 0.0,
        tmax: 20.0,
        steps: 2001,
        method: Method::Analytic,
        cutoff: 0,
        format,
        note: None,
    }
}

/// Named runs for one figure. The photon-number panels reuse the
/// `n_photon` column of the population panels.
pub fn presets(id: u8, format: Format) -> Vec<(String, RunConfig)> {
    let fock = |n, delta| RunConfig { n: Some(n), delta, ..base(Scenario::Fock, format) };
    let compare = |init, delta| RunConfig { init: Some(init), delta, ..base(Scenario::Compare, format) };
    match id {
        1 => vec![
            ("fig1a".into(), fock(1, 0.0)),
            ("fig1b".into(), fock(3, 0.0)),
            ("fig1c".into(), fock(5, 0.0)),
        ],
        2 => [("fig2a", 1e-4), ("fig2b", 1e-3), ("fig2c", 1e-2)]
            .into_iter()
            .map(|(name, gamma)| {
                let c = RunConfig {
                    alpha: Some(5.0),
                    gamma,
                    tmax: 2000.0,
                    steps: 20001,
                    ..base(Scenario::Coherent, format)
                };
                (name.to_string(), c)
            })
            .collect(),
        3 => vec![
            ("fig3a".into(), compare(Init::G1, 0.1)),
            ("fig3b".into(), compare(Init::G1, 1.0)),
            ("fig3c".into(), compare(Init::E0, 0.1)),
            ("fig3d".into(), compare(Init::E0, 1.0)),
        ],
        4 => vec![
            ("fig4a".into(), fock(3, 0.1)),
            ("fig4b".into(), fock(3, 1.0)),
            ("fig4c".into(), fock(3, 5.0)),
        ],
        5 => {
            let mut v = Vec::new();
            for delta in [1.0, 3.0, 5.0] {
                for (tag, gamma) in [("2e-3", 2e-3), ("1e-2", 1e-2)] {
                    let c = RunConfig {
                        alpha: Some(3.0),
                        delta,
                        gamma,
                        tmax: 100.0,
                        method: Method::Oracle,
                        ..base(Scenario::Coherent, format)
                    };
                    v.push((format!("fig5_delta{delta}_gamma{tag}"), c));
                }
            }
            v
        }
        _ => Vec::new(),
    }
}

/// Runs every preset of figure `id` in parallel and writes one file each.
pub fn generate(id: u8, dir: &Path, format: Format) -> Result<Vec<PathBuf>, CliError> {
    let runs = presets(id, format);
    if runs.is_empty() {
        return Err(CliError::Config(format!("no figure with id {id}")));
    }
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.display().to_string(), source })?;
    runs.into_par_iter()
        .map(|(name, config)| {
            let config = config.resolve(None)?;
            let table = scenario::run(&config)?;
            let path = dir.join(format!("{name}.{}", format.extension()));
            output::write_atomic(&path, &output::render(&config, &table))?;
            Ok(path)
        })
        .collect()
}
