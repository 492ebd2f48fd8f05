//! Jaynes-Cummings eigensystem and dressed-basis bookkeeping.
//!
//! Dense matrices over the truncated space use the ordering
//! `Ground, Minus(1), Plus(1), Minus(2), Plus(2), ...`, so a cutoff of `N`
//! excitations gives dimension `2N + 1` and every excitation block is
//! contiguous.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants of the lossy JC model, all in the same energy units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    lambda: f64,
    delta: f64,
    gamma: f64,
}

impl ModelParams {
    /// `lambda` must be positive, `gamma` non-negative. `gamma = 0` is the
    /// lossless limit.
    pub fn new(lambda: f64, delta: f64, gamma: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParams(format!("lambda must be positive, got {lambda}")));
        }
        if !delta.is_finite() {
            return Err(Error::InvalidParams(format!("delta must be finite, got {delta}")));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidParams(format!("gamma must be >= 0, got {gamma}")));
        }
        Ok(Self { lambda, delta, gamma })
    }

    /// Parameters in units of `lambda` (so `lambda = 1` and time is `λt`).
    pub fn scaled(delta: f64, gamma: f64) -> Result<Self> {
        Self::new(1.0, delta, gamma)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(self.lambda, delta, self.gamma)
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.lambda, self.delta, gamma)
    }

    pub fn is_resonant(&self) -> bool {
        self.delta == 0.0
    }
}

/// Label of an energy eigenstate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DressedIndex {
    Ground,
    Plus(u32),
    Minus(u32),
}

impl DressedIndex {
    pub fn excitation(self) -> u32 {
        match self {
            DressedIndex::Ground => 0,
            DressedIndex::Plus(n) | DressedIndex::Minus(n) => n,
        }
    }

    /// Position in the dense basis ordering.
    pub fn index(self) -> usize {
        match self {
            DressedIndex::Ground => 0,
            DressedIndex::Minus(n) => 2 * n as usize - 1,
            DressedIndex::Plus(n) => 2 * n as usize,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            DressedIndex::Ground
        } else if i % 2 == 1 {
            DressedIndex::Minus(i.div_ceil(2) as u32)
        } else {
            DressedIndex::Plus((i / 2) as u32)
        }
    }

    /// `+1` on the Plus branch, `-1` on the Minus branch, `0` on Ground.
    pub fn branch_sign(self) -> i8 {
        match self {
            DressedIndex::Ground => 0,
            DressedIndex::Plus(_) => 1,
            DressedIndex::Minus(_) => -1,
        }
    }

    /// The two states of excitation `n - 1` (or Ground) reachable by `a`.
    pub fn lowered(self) -> Vec<DressedIndex> {
        match self.excitation() {
            0 => Vec::new(),
            1 => vec![DressedIndex::Ground],
            n => vec![DressedIndex::Plus(n - 1), DressedIndex::Minus(n - 1)],
        }
    }

    pub fn all(cutoff: u32) -> impl Iterator<Item = DressedIndex> {
        (0..basis_dim(cutoff)).map(DressedIndex::from_index)
    }

    fn validate(self) -> Result<Self> {
        match self {
            DressedIndex::Plus(0) | DressedIndex::Minus(0) => Err(Error::IndexPair(format!(
                "{self} has zero excitation; only Ground does"
            ))),
            _ => Ok(self),
        }
    }
}

impl fmt::Display for DressedIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DressedIndex::Ground => write!(f, "E0"),
            DressedIndex::Plus(n) => write!(f, "E{n}+"),
            DressedIndex::Minus(n) => write!(f, "E{n}-"),
        }
    }
}

pub fn basis_dim(cutoff: u32) -> usize {
    2 * cutoff as usize + 1
}

/// `ε_n = sqrt(Δ² + nλ²)`.
pub fn epsilon(params: &ModelParams, n: u32) -> f64 {
    debug_assert!(n >= 1);
    params.delta.hypot(params.lambda * f64::from(n).sqrt())
}

/// `(cos θ_n, sin θ_n)` of the dressed-state rotation.
///
/// `|E_{n+}> = cos θ |g,n> + sin θ |e,n-1>`,
/// `|E_{n-}> = sin θ |g,n> - cos θ |e,n-1>`.
pub fn mixing(params: &ModelParams, n: u32) -> (f64, f64) {
    let eps = epsilon(params, n);
    let d = params.delta;
    let nl2 = f64::from(n) * params.lambda * params.lambda;
    // Write the small one of ε ± Δ as nλ²/(ε ∓ Δ) to avoid cancellation.
    let (cos2, sin2) = if d >= 0.0 {
        ((eps + d) / (2.0 * eps), nl2 / (2.0 * eps * (eps + d)))
    } else {
        (nl2 / (2.0 * eps * (eps - d)), (eps - d) / (2.0 * eps))
    };
    (cos2.sqrt(), sin2.sqrt())
}

/// Eigenvalue of `C = H_JC - ωN` on a dressed state.
pub fn c_eigenvalue(params: &ModelParams, s: DressedIndex) -> f64 {
    match s {
        DressedIndex::Ground => params.delta,
        DressedIndex::Plus(n) => epsilon(params, n),
        DressedIndex::Minus(n) => -epsilon(params, n),
    }
}

/// `<to| a |from>` in the dressed basis.
pub fn a_matrix_element(params: &ModelParams, from: DressedIndex, to: DressedIndex) -> Result<f64> {
    let from = from.validate()?;
    let to = to.validate()?;
    if from.excitation() != to.excitation() + 1 {
        return Err(Error::IndexPair(format!(
            "a lowers excitation by one; got {from} -> {to}"
        )));
    }
    let n = from.excitation();
    let (cn, sn) = mixing(params, n);
    let sqrt_n = f64::from(n).sqrt();
    let sqrt_nm1 = f64::from(n - 1).sqrt();
    if n == 1 {
        return Ok(match from {
            DressedIndex::Plus(_) => cn,
            _ => sn,
        });
    }
    let (cm, sm) = mixing(params, n - 1);
    Ok(match (from, to) {
        (DressedIndex::Plus(_), DressedIndex::Plus(_)) => cm * cn * sqrt_n + sm * sn * sqrt_nm1,
        (DressedIndex::Plus(_), DressedIndex::Minus(_)) => sm * cn * sqrt_n - cm * sn * sqrt_nm1,
        (DressedIndex::Minus(_), DressedIndex::Plus(_)) => cm * sn * sqrt_n - sm * cn * sqrt_nm1,
        (DressedIndex::Minus(_), DressedIndex::Minus(_)) => sm * sn * sqrt_n + cm * cn * sqrt_nm1,
        _ => unreachable!("excitation check above"),
    })
}

/// `|<to|a|from>|²`, the jump weight used by the dissipators.
pub fn jump_weight(params: &ModelParams, from: DressedIndex, to: DressedIndex) -> f64 {
    a_matrix_element(params, from, to).map_or(0.0, |x| x * x)
}

/// Eigenvalue of `Ã = Σ± P± a†a P± = N - 1/2 + Δ/(2C)`.
pub fn atilde_eigenvalue(params: &ModelParams, s: DressedIndex) -> f64 {
    match s {
        DressedIndex::Ground => 0.0,
        DressedIndex::Plus(n) => f64::from(n) - 0.5 + params.delta / (2.0 * epsilon(params, n)),
        DressedIndex::Minus(n) => f64::from(n) - 0.5 - params.delta / (2.0 * epsilon(params, n)),
    }
}

/// Smallest cutoff keeping the Poisson tail of `|α|²` below ~1e-12.
pub fn coherent_cutoff(alpha: f64) -> u32 {
    (alpha * alpha + 8.0 * alpha + 10.0).ceil() as u32
}

/// Atomic label of a bare product state `|g,k>` / `|e,k>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Atom {
    Ground,
    Excited,
}

/// Density matrix split into dressed populations and same-excitation
/// coherences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorState {
    cutoff: u32,
    diag: Vec<f64>,
    /// `<E_{n+}|ρ|E_{n-}>` at position `n - 1`; the transposed entry is the
    /// conjugate.
    offdiag_same_n: Vec<Complex64>,
    /// Coherences between different excitation numbers, keyed by ordered
    /// pair. Only the oracle side fills this in.
    offdiag_other: Option<BTreeMap<(DressedIndex, DressedIndex), Complex64>>,
}

impl SectorState {
    pub fn zeros(cutoff: u32) -> Self {
        Self {
            cutoff,
            diag: vec![0.0; basis_dim(cutoff)],
            offdiag_same_n: vec![Complex64::new(0.0, 0.0); cutoff as usize],
            offdiag_other: None,
        }
    }

    /// Pure `|E_s><E_s|`.
    pub fn pure(cutoff: u32, s: DressedIndex) -> Self {
        let mut st = Self::zeros(cutoff);
        st.diag[s.index()] = 1.0;
        st
    }

    pub fn ground(cutoff: u32) -> Self {
        Self::pure(cutoff, DressedIndex::Ground)
    }

    /// The bare product state `|atom, photons><atom, photons|`, with
    /// cutoff set to its excitation number unless a larger one is given.
    pub fn bare(params: &ModelParams, atom: Atom, photons: u32, cutoff: Option<u32>) -> Self {
        let n = match atom {
            Atom::Ground => photons,
            Atom::Excited => photons + 1,
        };
        let mut st = Self::zeros(cutoff.unwrap_or(n).max(n));
        if n == 0 {
            st.diag[0] = 1.0;
            return st;
        }
        let (c, s) = mixing(params, n);
        let (p_plus, p_minus, coh) = match atom {
            // |g,n> = c|E+> + s|E->
            Atom::Ground => (c * c, s * s, c * s),
            // |e,n-1> = s|E+> - c|E->
            Atom::Excited => (s * s, c * c, -c * s),
        };
        st.diag[DressedIndex::Plus(n).index()] = p_plus;
        st.diag[DressedIndex::Minus(n).index()] = p_minus;
        st.offdiag_same_n[n as usize - 1] = Complex64::new(coh, 0.0);
        st
    }

    pub fn from_parts(
        cutoff: u32,
        diag: Vec<f64>,
        offdiag_same_n: Vec<Complex64>,
        offdiag_other: Option<BTreeMap<(DressedIndex, DressedIndex), Complex64>>,
    ) -> Result<Self> {
        if diag.len() != basis_dim(cutoff) || offdiag_same_n.len() != cutoff as usize {
            return Err(Error::InvalidState(format!(
                "component lengths ({}, {}) do not match cutoff {cutoff}",
                diag.len(),
                offdiag_same_n.len()
            )));
        }
        Ok(Self { cutoff, diag, offdiag_same_n, offdiag_other })
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn diag_mut(&mut self) -> &mut [f64] {
        &mut self.diag
    }

    pub fn population(&self, s: DressedIndex) -> f64 {
        self.diag.get(s.index()).copied().unwrap_or(0.0)
    }

    pub fn set_population(&mut self, s: DressedIndex, p: f64) {
        self.diag[s.index()] = p;
    }

    /// Coherence `<E_{n+}|ρ|E_{n-}>`.
    pub fn coherence(&self, n: u32) -> Complex64 {
        self.offdiag_same_n[n as usize - 1]
    }

    pub fn coherences(&self) -> &[Complex64] {
        &self.offdiag_same_n
    }

    pub fn coherences_mut(&mut self) -> &mut [Complex64] {
        &mut self.offdiag_same_n
    }

    pub fn other_coherences(&self) -> Option<&BTreeMap<(DressedIndex, DressedIndex), Complex64>> {
        self.offdiag_other.as_ref()
    }

    /// Highest excitation carrying any weight.
    pub fn max_excitation(&self) -> u32 {
        (1..=self.cutoff)
            .rev()
            .find(|&n| {
                self.population(DressedIndex::Plus(n)) != 0.0
                    || self.population(DressedIndex::Minus(n)) != 0.0
                    || self.coherence(n) != Complex64::new(0.0, 0.0)
            })
            .unwrap_or(0)
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().sum()
    }

    /// Checks populations are non-negative and sum to one.
    pub fn validate(&self) -> Result<()> {
        if let Some((i, p)) = self.diag.iter().enumerate().find(|(_, &p)| p < -1e-10) {
            return Err(Error::InvalidState(format!(
                "negative population {p} on {}",
                DressedIndex::from_index(i)
            )));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        Ok(())
    }
}

/// Observables extracted from a sector state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub p_g: f64,
    pub p_0g: f64,
    pub n_photon: f64,
    pub trace: f64,
}

/// `P_g = Σ_k <g,k|ρ|g,k>`, `P_0g = <E_0|ρ|E_0>`, the mean photon number
/// and the trace. Coherences between different excitation numbers never
/// contribute.
pub fn observables(params: &ModelParams, state: &SectorState) -> Observables {
    let p_0g = state.population(DressedIndex::Ground);
    let mut p_g = p_0g;
    let mut n_photon = 0.0;
    for n in 1..=state.cutoff {
        let (c, s) = mixing(params, n);
        let pp = state.population(DressedIndex::Plus(n));
        let pm = state.population(DressedIndex::Minus(n));
        let cross = 2.0 * c * s * state.coherence(n).re;
        let g_n = c * c * pp + s * s * pm + cross;
        let e_nm1 = s * s * pp + c * c * pm - cross;
        p_g += g_n;
        n_photon += f64::from(n) * g_n + f64::from(n - 1) * e_nm1;
    }
    Observables { p_g, p_0g, n_photon, trace: state.trace() }
}

pub const COL_P_G: &str = "P_g";
pub const COL_N_PHOTON: &str = "n_photon";
pub const COL_P_0G: &str = "P_0g";
pub const COL_TRACE: &str = "trace";

/// Observables sampled on a grid of dimensionless times `λt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl TimeSeries {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        Self {
            times: Vec::new(),
            columns: names.into_iter().map(|n| (n.into(), Vec::new())).collect(),
        }
    }

    /// Series with the standard `P_g, n_photon, P_0g, trace` columns.
    pub fn observables() -> Self {
        Self::new([COL_P_G, COL_N_PHOTON, COL_P_0G, COL_TRACE])
    }

    pub fn push_row(&mut self, time: f64, values: &[f64]) {
        assert_eq!(values.len(), self.columns.len(), "row width mismatch");
        self.times.push(time);
        for ((_, col), &v) in self.columns.iter_mut().zip(values) {
            col.push(v);
        }
    }

    pub fn push_observables(&mut self, time: f64, obs: &Observables) {
        self.push_row(time, &[obs.p_g, obs.n_photon, obs.p_0g, obs.trace]);
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.as_slice())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidState("times are not strictly increasing".into()));
        }
        if let Some((name, _)) = self.columns.iter().find(|(_, c)| c.len() != self.times.len()) {
            return Err(Error::InvalidState(format!("column {name} has the wrong length")));
        }
        Ok(())
    }
}

/// `steps` evenly spaced points on `[0, tmax]`.
pub fn linear_grid(tmax: f64, steps: usize) -> Vec<f64> {
    assert!(steps >= 2, "a grid needs at least two points");
    (0..steps)
        .map(|i| tmax * (i as f64 / (steps - 1) as f64))
        .collect()
}
