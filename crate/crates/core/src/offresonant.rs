//! Evolution at finite detuning.
//!
//! The H_JC-diagonal sector obeys the rate equation
//! `ṗ = -γ Ã p + γ (Q₁ + Q₂) p`, where `Q_i` moves population down one
//! excitation from the Plus (`i = 1`) or Minus (`i = 2`) branch. In the
//! interaction picture the Dyson series terminates after as many jumps as
//! the initial state has excitations, and every path
//! `s₀ → s₁ → … → s_k` contributes
//!
//! ```text
//! Π_j |<s_j|a|s_{j-1}>|² · I_k(γt; κ₁, …, κ_k),   κ_j = Ã(s_{j-1}) - Ã(s_j)
//! ```
//!
//! to `e^{γÃt} ρ(t)` on `s_k`. Written out, `κ_j` is `κ₁(C)` or `κ₂(C)`
//! for a Plus or Minus source, with `C` the eigenvalue of the target.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{
    atilde_eigenvalue, basis_dim, c_eigenvalue, epsilon, jump_weight, DressedIndex, ModelParams,
    SectorState,
};
use crate::oracle::{Basis, DenseState};
use crate::specfun::ln_factorial;

/// Default cap on the number of jumps the path sum will enumerate.
pub const DEFAULT_K_MAX: u32 = 12;

/// Below this `|a₁|τ` the recurrence's division by `a₁` is avoided.
const DEGENERATE_RATE: f64 = 1e-6;

/// Which branch a jump leaves from: `One` for Plus states, `Two` for
/// Minus states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    One,
    Two,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::One => 1.0,
            Branch::Two => -1.0,
        }
    }

    /// Branch of a source state; `None` for Ground, which never jumps.
    pub fn of(s: DressedIndex) -> Option<Branch> {
        match s {
            DressedIndex::Ground => None,
            DressedIndex::Plus(_) => Some(Branch::One),
            DressedIndex::Minus(_) => Some(Branch::Two),
        }
    }
}

/// Sequence of jump branches `(i₁, …, i_k)` along a path.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct BranchPath(pub Vec<Branch>);

impl BranchPath {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn signs(&self) -> Vec<f64> {
        self.0.iter().map(|b| b.sign()).collect()
    }

    /// The source states `s₀, …, s_{k-1}` for a path starting at
    /// excitation `n0`.
    pub fn sources(&self, n0: u32) -> Vec<DressedIndex> {
        self.0
            .iter()
            .zip(0..)
            .map(|(b, j)| match b {
                Branch::One => DressedIndex::Plus(n0 - j),
                Branch::Two => DressedIndex::Minus(n0 - j),
            })
            .collect()
    }
}

/// Rate arguments `(a₁, …, a_k)` of a nested integral, `a₁` belonging to
/// the earliest jump.
pub type RateList = [f64];

/// `κ₁(C) = 1 - (Δ/2)(1/C - 1/sqrt(C²+λ²))`,
/// `κ₂(C) = 1 - (Δ/2)(1/C + 1/sqrt(C²+λ²))`.
pub fn kappa(branch: Branch, c: f64, params: &ModelParams) -> Result<f64> {
    if c == 0.0 {
        return Err(Error::Singular("kappa needs a nonzero C eigenvalue".into()));
    }
    let d = params.delta();
    let root = c.hypot(params.lambda());
    Ok(1.0 - 0.5 * d * (1.0 / c - branch.sign() / root))
}

/// `κ` for the jump `from → to`.
fn step_rate(params: &ModelParams, from: DressedIndex, to: DressedIndex) -> Result<f64> {
    let branch = Branch::of(from).ok_or_else(|| Error::IndexPair("Ground does not jump".into()))?;
    kappa(branch, c_eigenvalue(params, to), params)
}

fn check_len(pops: &[f64]) -> Result<u32> {
    if pops.is_empty() || pops.len().is_multiple_of(2) {
        return Err(Error::InvalidState(format!(
            "population vector length {} is not 2N+1",
            pops.len()
        )));
    }
    Ok((pops.len() / 2) as u32)
}

/// `Q_i` on a dressed population vector.
pub fn q_apply(branch: Branch, params: &ModelParams, pops: &[f64]) -> Result<Vec<f64>> {
    let cutoff = check_len(pops)?;
    let mut out = vec![0.0; pops.len()];
    for n in 1..=cutoff {
        let from = match branch {
            Branch::One => DressedIndex::Plus(n),
            Branch::Two => DressedIndex::Minus(n),
        };
        let p = pops[from.index()];
        if p == 0.0 {
            continue;
        }
        for to in from.lowered() {
            out[to.index()] += jump_weight(params, from, to) * p;
        }
    }
    Ok(out)
}

/// `I_k(τ; a₁, …, a_k) = ∫₀^τ dt_k ⋯ ∫₀^{t₂} dt₁ exp(-Σ a_j t_j)`.
///
/// Uses `I_k = [I_{k-1}(a₂, a₃, …) - I_{k-1}(a₁+a₂, a₃, …)] / a₁`. Every
/// list the recursion visits is a run sum `a_i + … + a_j` followed by the
/// suffix `a_{j+1}, …`, so a `k × k` table covers all of them. Nearly
/// vanishing leading rates switch to [`integral_in_exact`].
pub fn integral_in(tau: f64, rates: &RateList) -> f64 {
    let k = rates.len();
    if k == 0 {
        return 1.0;
    }
    if tau == 0.0 {
        return 0.0;
    }
    // memo[i][j]: list (a_i + … + a_j, a_{j+1}, …, a_{k-1}), 0-based.
    let mut memo = vec![vec![f64::NAN; k]; k];
    for j in (0..k).rev() {
        for i in (0..=j).rev() {
            let head: f64 = rates[i..=j].iter().sum();
            memo[i][j] = if j == k - 1 {
                integral_one(tau, head)
            } else if head.abs() * tau < DEGENERATE_RATE {
                let mut list = vec![head];
                list.extend_from_slice(&rates[j + 1..]);
                integral_in_exact(tau, &list)
            } else {
                (memo[j + 1][j + 1] - memo[i][j + 1]) / head
            };
        }
    }
    memo[0][0]
}

/// `I₁(τ; a) = (1 - e^{-aτ})/a`, `τ` at `a = 0`.
fn integral_one(tau: f64, a: f64) -> f64 {
    if a == 0.0 {
        tau
    } else {
        -(-a * tau).exp_m1() / a
    }
}

/// `I_k` as the corner entry of `exp(τM)`, `M` upper bidiagonal with unit
/// superdiagonal and diagonal `(-B₁, …, -B_k, 0)`, `B_i = a_i + … + a_k`.
///
/// `M` has nonnegative off-diagonal entries, so scaling and squaring never
/// subtracts large terms. Slower than [`integral_in`] but free of
/// divisions by rates.
pub fn integral_in_exact(tau: f64, rates: &RateList) -> f64 {
    let k = rates.len();
    if k == 0 {
        return 1.0;
    }
    let dim = k + 1;
    let mut diag = vec![0.0; dim];
    let mut acc = 0.0;
    for i in (0..k).rev() {
        acc += rates[i];
        diag[i] = -acc * tau;
    }
    let norm = diag.iter().map(|x| x.abs()).fold(0.0, f64::max) + tau;
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scale = 0.5f64.powi(squarings as i32);

    // Taylor series of exp(X), X = τM·scale, upper triangular.
    let idx = |i: usize, j: usize| i * dim + j;
    let mut x = vec![0.0; dim * dim];
    for i in 0..dim {
        x[idx(i, i)] = diag[i] * scale;
        if i + 1 < dim {
            x[idx(i, i + 1)] = tau * scale;
        }
    }
    let matmul = |a: &[f64], b: &[f64]| {
        let mut c = vec![0.0; dim * dim];
        for i in 0..dim {
            for l in i..dim {
                let ail = a[idx(i, l)];
                if ail == 0.0 {
                    continue;
                }
                for j in l..dim {
                    c[idx(i, j)] += ail * b[idx(l, j)];
                }
            }
        }
        c
    };
    let mut e = vec![0.0; dim * dim];
    let mut term = vec![0.0; dim * dim];
    for i in 0..dim {
        e[idx(i, i)] = 1.0;
        term[idx(i, i)] = 1.0;
    }
    for p in 1..60u32 {
        term = matmul(&term, &x);
        let inv = 1.0 / f64::from(p);
        let mut biggest: f64 = 0.0;
        for (ei, ti) in e.iter_mut().zip(term.iter_mut()) {
            *ti *= inv;
            *ei += *ti;
            biggest = biggest.max(ti.abs());
        }
        if biggest < 1e-18 && p as usize > dim {
            break;
        }
    }
    for _ in 0..squarings {
        e = matmul(&e, &e);
    }
    e[idx(0, k)]
}

fn require_offresonant(params: &ModelParams) -> Result<()> {
    if params.is_resonant() {
        Err(Error::InvalidParams(
            "the path sum needs delta != 0; use the resonant solution at delta = 0".into(),
        ))
    } else {
        Ok(())
    }
}

fn require_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("time must be finite and >= 0, got {t}")))
    }
}

/// Evolves dressed populations to time `t` by summing over jump paths.
///
/// Rejects states with weight above excitation `k_max`.
pub fn evolve_diag_offres(
    pops: &[f64],
    t: f64,
    params: &ModelParams,
    k_max: u32,
) -> Result<Vec<f64>> {
    require_offresonant(params)?;
    require_time(t)?;
    let cutoff = check_len(pops)?;
    let top = (1..=cutoff)
        .rev()
        .find(|&n| {
            pops[DressedIndex::Plus(n).index()] != 0.0 || pops[DressedIndex::Minus(n).index()] != 0.0
        })
        .unwrap_or(0);
    if top > k_max {
        return Err(Error::ExcitationLimit { excitation: top as usize, limit: k_max as usize });
    }

    let tau = params.gamma() * t;
    let mut tilde = vec![0.0; pops.len()];
    let mut walker = PathWalker {
        params,
        tau,
        rates: Vec::with_capacity(top as usize),
        out: &mut tilde,
    };
    for (i, &p) in pops.iter().enumerate() {
        if p != 0.0 {
            walker.walk(DressedIndex::from_index(i), p)?;
        }
    }
    Ok(tilde
        .iter()
        .enumerate()
        .map(|(i, &x)| x * (-tau * atilde_eigenvalue(params, DressedIndex::from_index(i))).exp())
        .collect())
}

/// Depth-first enumeration of the jump paths out of one initial state.
struct PathWalker<'a> {
    params: &'a ModelParams,
    tau: f64,
    rates: Vec<f64>,
    out: &'a mut [f64],
}

impl PathWalker<'_> {
    fn walk(&mut self, s: DressedIndex, weight: f64) -> Result<()> {
        self.out[s.index()] += weight * integral_in(self.tau, &self.rates);
        for to in s.lowered() {
            let w = jump_weight(self.params, s, to);
            if w == 0.0 {
                continue;
            }
            self.rates.push(step_rate(self.params, s, to)?);
            self.walk(to, weight * w)?;
            self.rates.pop();
        }
        Ok(())
    }
}

/// Evolves the same-excitation coherences `<E_{n+}|ρ|E_{n-}>`:
/// `e^{-γ(n-1/2)t} e^{-2iε_n t}`.
pub fn evolve_offdiag_offres(c0: &[Complex64], t: f64, params: &ModelParams) -> Result<Vec<Complex64>> {
    require_time(t)?;
    Ok(c0
        .iter()
        .zip(1u32..)
        .map(|(&c, n)| {
            let damp = (-params.gamma() * (f64::from(n) - 0.5) * t).exp();
            c * Complex64::from_polar(damp, -2.0 * epsilon(params, n) * t)
        })
        .collect())
}

/// Evolves a sector state at finite detuning (coherences between different
/// excitation numbers are dropped).
pub fn evolve_offres(
    state: &SectorState,
    t: f64,
    params: &ModelParams,
    k_max: u32,
) -> Result<SectorState> {
    let diag = evolve_diag_offres(state.diag(), t, params, k_max)?;
    let coh = evolve_offdiag_offres(state.coherences(), t, params)?;
    SectorState::from_parts(state.cutoff(), diag, coh, None)
}

/// Photon number a dressed state tends to as `|Δ| → ∞`, and whether it
/// sits on the `|g,·>` ladder.
fn large_delta_label(delta: f64, s: DressedIndex) -> (u32, bool) {
    match (s, delta > 0.0) {
        (DressedIndex::Ground, _) => (0, true),
        (DressedIndex::Plus(n), true) | (DressedIndex::Minus(n), false) => (n, true),
        (DressedIndex::Plus(n), false) | (DressedIndex::Minus(n), true) => (n - 1, false),
    }
}

/// The dressed state with `photons` photons on the given ladder.
fn large_delta_state(delta: f64, photons: u32, ground_ladder: bool) -> DressedIndex {
    match (ground_ladder, delta > 0.0) {
        (true, _) if photons == 0 => DressedIndex::Ground,
        (true, true) | (false, false) => DressedIndex::Plus(photons + u32::from(!ground_ladder)),
        (true, false) | (false, true) => DressedIndex::Minus(photons + u32::from(!ground_ladder)),
    }
}

/// Closed-form `|Δ| → ∞` limit. Populations follow pure photon loss along
/// their ladder (binomial thinning with survival `e^{-γt}`); coherences
/// rotate with the exact dressed energies and decay at
/// `γ(n_x + n_y)/2` without feeding anything.
pub fn evolve_largedelta(rho0: &DenseState, t: f64, params: &ModelParams) -> Result<DenseState> {
    require_offresonant(params)?;
    require_time(t)?;
    let delta = params.delta();
    let dressed = rho0.to_dressed(params);
    let d = basis_dim(dressed.cutoff());
    let states: Vec<DressedIndex> = (0..d).map(DressedIndex::from_index).collect();
    let labels: Vec<(u32, bool)> = states.iter().map(|&s| large_delta_label(delta, s)).collect();
    let energy: Vec<f64> = states.iter().map(|&s| c_eigenvalue(params, s)).collect();
    let gt = params.gamma() * t;

    let src = dressed.matrix();
    let mut rho = src.clone();
    for x in 0..d {
        for y in 0..d {
            if x == y {
                continue;
            }
            let damp = (-0.5 * gt * f64::from(labels[x].0 + labels[y].0)).exp();
            rho[(x, y)] = src[(x, y)] * Complex64::from_polar(damp, -(energy[x] - energy[y]) * t);
        }
        rho[(x, x)] = Complex64::new(0.0, 0.0);
    }
    for (x, &(m, ladder)) in labels.iter().enumerate() {
        let p = src[(x, x)].re;
        if p == 0.0 {
            continue;
        }
        for j in 0..=m {
            let to = large_delta_state(delta, j, ladder).index();
            rho[(to, to)] += binomial_survival(m, j, gt) * p;
        }
    }
    DenseState::new(Basis::Dressed, dressed.cutoff(), rho)
}

/// `C(m,j) q^j (1-q)^{m-j}` with `q = e^{-γt}`.
fn binomial_survival(m: u32, j: u32, gt: f64) -> f64 {
    if gt == 0.0 {
        return if j == m { 1.0 } else { 0.0 };
    }
    let ln_q = -gt;
    let ln_lost = (-(-gt).exp_m1()).ln();
    let ln_c = ln_factorial(m) - ln_factorial(j) - ln_factorial(m - j);
    (ln_c + f64::from(j) * ln_q + f64::from(m - j) * ln_lost).exp()
}
