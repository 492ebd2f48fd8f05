use std::fmt;

use lossyjc::model::coherent_cutoff;
use lossyjc::offresonant::DEFAULT_K_MAX;
use lossyjc::resonant::MAX_COHERENT_ALPHA;
use lossyjc::ModelParams;
use serde::Serialize;

use crate::error::CliError;

/// Integrator runs store a dense `(2N+1)²` matrix; beyond this the memory
/// and step count stop being reasonable for a desk run.
pub const MAX_DENSE_CUTOFF: u32 = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Analytic,
    Oracle,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Initial states for the single-excitation and compare scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    /// |g,1>
    G1,
    /// |e,0>
    E0,
    /// |E_{1+}>
    Plus,
    /// |E_{1-}>
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Fock,
    Coherent,
    SingleExcitation,
    Compare,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Scenario::Fock => "fock",
            Scenario::Coherent => "coherent",
            Scenario::SingleExcitation => "single-excitation",
            Scenario::Compare => "compare",
        };
        f.write_str(s)
    }
}

/// One fully resolved run. Rates are in units of λ and times are `λt`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub scenario: Scenario,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<Init>,
    pub gamma: f64,
    pub delta: f64,
    pub tmax: f64,
    pub steps: usize,
    /// Method actually used (may differ from the request, see `note`).
    pub method: Method,
    pub cutoff: u32,
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl RunConfig {
    pub fn params(&self) -> ModelParams {
        ModelParams::scaled(self.delta, self.gamma).expect("validated")
    }

    pub fn grid(&self) -> Vec<f64> {
        lossyjc::model::linear_grid(self.tmax, self.steps)
    }

    /// Checks the numeric fields and fills in the scenario-dependent
    /// cutoff and method.
    pub fn resolve(mut self, cutoff: Option<u32>) -> Result<Self, CliError> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(CliError::Config(format!("--gamma must be > 0, got {}", self.gamma)));
        }
        if !self.delta.is_finite() {
            return Err(CliError::Config(format!("--delta must be finite, got {}", self.delta)));
        }
        if !(self.tmax.is_finite() && self.tmax > 0.0) {
            return Err(CliError::Config(format!("--tmax must be > 0, got {}", self.tmax)));
        }
        if self.steps < 2 {
            return Err(CliError::Config(format!("--steps must be >= 2, got {}", self.steps)));
        }
        let detuned = self.delta != 0.0;
        let needed = match self.scenario {
            Scenario::Fock => {
                let n = self.n.unwrap_or(0);
                if n == 0 {
                    return Err(CliError::Config("--n must be >= 1".into()));
                }
                if detuned && n > DEFAULT_K_MAX && self.method != Method::Oracle {
                    return Err(CliError::Config(format!(
                        "--n {n} exceeds the path-sum limit {DEFAULT_K_MAX} at finite detuning; \
                         use --method oracle"
                    )));
                }
                n
            }
            Scenario::Coherent => {
                let alpha = self.alpha.unwrap_or(-1.0);
                if !(alpha >= 0.0 && alpha.is_finite()) {
                    return Err(CliError::Config(format!("--alpha must be >= 0, got {alpha}")));
                }
                if alpha > MAX_COHERENT_ALPHA {
                    return Err(CliError::Config(format!(
                        "--alpha {alpha} exceeds the supported maximum {MAX_COHERENT_ALPHA}"
                    )));
                }
                if detuned && self.method != Method::Oracle {
                    self.method = Method::Oracle;
                    self.note = Some(
                        "coherent states at finite detuning always use the oracle integrator".into(),
                    );
                }
                coherent_cutoff(alpha)
            }
            Scenario::SingleExcitation => 1,
            Scenario::Compare => {
                if self.method == Method::Both {
                    return Err(CliError::Config(
                        "compare takes --method analytic or oracle for the microscopic side".into(),
                    ));
                }
                1
            }
        };
        self.cutoff = match cutoff {
            Some(c) if c < needed => {
                return Err(CliError::Config(format!(
                    "--cutoff {c} is below the initial excitation {needed}"
                )))
            }
            Some(c) => c,
            None => needed.max(1),
        };
        let dense = self.method != Method::Analytic || self.scenario == Scenario::Compare;
        if dense && self.cutoff > MAX_DENSE_CUTOFF {
            return Err(CliError::Config(format!(
                "cutoff {} is above {MAX_DENSE_CUTOFF}, the largest the dense integrators accept",
                self.cutoff
            )));
        }
        Ok(self)
    }
}
