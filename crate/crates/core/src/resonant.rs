//! Exact evolution at zero detuning.
//!
//! The diagonal sector is handled in the basis `Π_0 = |E_0><E_0|`,
//! `Π_{n±} = |E_{n+}><E_{n+}| ± |E_{n-}><E_{n-}|`, on which the jump
//! superoperator `K₂[ρ] = P^diag[a ρ a†]` acts as a simple ladder:
//!
//! ```text
//! K₂ Π_{n+} = (n - 1/2) Π_{n-1,+}      (n >= 2)
//! K₂ Π_{n-} = sqrt(n(n-1)) Π_{n-1,-}   (n >= 2)
//! K₂ Π_{1+} = Π_0,   K₂ Π_{1-} = K₂ Π_0 = 0
//! ```
//!
//! and the evolved state is `e^{-γAt} [1 + Σ_n c_n(t) K₂^{n+1}] ρ(0)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{self, coherent_cutoff, DressedIndex, ModelParams, SectorState};
use crate::specfun::{
    incomplete_beta_split, ln_factorial, ln_odd_double_factorial, ln_pochhammer, hyp2f1_terminating,
};

/// Largest coherent amplitude accepted by [`coherent_solution`].
pub const MAX_COHERENT_ALPHA: f64 = 12.0;

/// Diagonal-sector vector in the `Π` basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PiBasisVector {
    pub ground: f64,
    /// Coefficient of `Π_{n+}` at position `n - 1`.
    pub plus: Vec<f64>,
    /// Coefficient of `Π_{n-}` at position `n - 1`.
    pub minus: Vec<f64>,
}

impl PiBasisVector {
    pub fn zeros(cutoff: u32) -> Self {
        Self {
            ground: 0.0,
            plus: vec![0.0; cutoff as usize],
            minus: vec![0.0; cutoff as usize],
        }
    }

    pub fn cutoff(&self) -> u32 {
        self.plus.len() as u32
    }

    /// Unit vector on `Π_{n+}` (`n = 0` gives `Π_0`).
    pub fn unit_plus(cutoff: u32, n: u32) -> Self {
        let mut v = Self::zeros(cutoff);
        if n == 0 {
            v.ground = 1.0;
        } else {
            v.plus[n as usize - 1] = 1.0;
        }
        v
    }

    pub fn unit_minus(cutoff: u32, n: u32) -> Self {
        let mut v = Self::zeros(cutoff);
        v.minus[n as usize - 1] = 1.0;
        v
    }

    pub fn plus_at(&self, n: u32) -> f64 {
        self.plus[n as usize - 1]
    }

    pub fn minus_at(&self, n: u32) -> f64 {
        self.minus[n as usize - 1]
    }

    /// Reads the populations of a sector state.
    pub fn from_populations(state: &SectorState) -> Self {
        let cutoff = state.cutoff();
        let mut v = Self::zeros(cutoff);
        v.ground = state.population(DressedIndex::Ground);
        for n in 1..=cutoff {
            let pp = state.population(DressedIndex::Plus(n));
            let pm = state.population(DressedIndex::Minus(n));
            v.plus[n as usize - 1] = 0.5 * (pp + pm);
            v.minus[n as usize - 1] = 0.5 * (pp - pm);
        }
        v
    }

    /// Population of every dressed state, in dense basis order.
    pub fn populations(&self) -> Vec<f64> {
        let mut out = vec![0.0; model::basis_dim(self.cutoff())];
        out[0] = self.ground;
        for (i, (&p, &m)) in self.plus.iter().zip(&self.minus).enumerate() {
            let n = i as u32 + 1;
            out[DressedIndex::Plus(n).index()] = p + m;
            out[DressedIndex::Minus(n).index()] = p - m;
        }
        out
    }

    /// `Tr ρ = c_0 + 2 Σ c_{n+}` (the `Π_{n-}` are traceless).
    pub fn trace(&self) -> f64 {
        self.ground + 2.0 * self.plus.iter().sum::<f64>()
    }
}

/// One application of the `K₂` ladder.
pub fn k2_apply(v: &PiBasisVector) -> PiBasisVector {
    let mut out = PiBasisVector::zeros(v.cutoff());
    if let Some(&p1) = v.plus.first() {
        out.ground = p1;
    }
    for n in 2..=v.cutoff() {
        let nf = f64::from(n);
        out.plus[n as usize - 2] = (nf - 0.5) * v.plus_at(n);
        out.minus[n as usize - 2] = (nf * (nf - 1.0)).sqrt() * v.minus_at(n);
    }
    out
}

/// `ln` of the coefficient in `K₂^l Π_{n+} = coef · Π_{n-l,+}` (or `Π_0`
/// when `l = n`). `None` when `l > n`.
pub fn ln_k2_plus_coefficient(n: u32, l: u32) -> Option<f64> {
    match l.cmp(&n) {
        std::cmp::Ordering::Less => Some(ln_pochhammer(f64::from(n - l) + 0.5, l)),
        // (3/2)_{n-1}: the last step K₂ Π_{1+} = Π_0 carries weight 1.
        std::cmp::Ordering::Equal => Some(ln_pochhammer(1.5, n - 1)),
        std::cmp::Ordering::Greater => None,
    }
}

/// `ln` of the coefficient in `K₂^l Π_{n-} = coef · Π_{n-l,-}`. `None`
/// once the chain has died at `Π_{1-}`.
pub fn ln_k2_minus_coefficient(n: u32, l: u32) -> Option<f64> {
    if l >= n {
        return None;
    }
    let j = n - l;
    Some(0.5 * (ln_factorial(n) + ln_factorial(n - 1) - ln_factorial(j) - ln_factorial(j - 1)))
}

/// `K₂^l v` from the closed-form ladder coefficients.
pub fn k2_power(v: &PiBasisVector, l: u32) -> PiBasisVector {
    if l == 0 {
        return v.clone();
    }
    let mut out = PiBasisVector::zeros(v.cutoff());
    for n in 1..=v.cutoff() {
        let cp = v.plus_at(n);
        if cp != 0.0 {
            if let Some(lc) = ln_k2_plus_coefficient(n, l) {
                let target = if l == n { &mut out.ground } else { &mut out.plus[(n - l) as usize - 1] };
                *target += cp * lc.exp();
            }
        }
        let cm = v.minus_at(n);
        if cm != 0.0 {
            if let Some(lc) = ln_k2_minus_coefficient(n, l) {
                out.minus[(n - l) as usize - 1] += cm * lc.exp();
            }
        }
    }
    out
}

/// `1 - e^{-γt}`, the natural argument of the resonant closed forms.
fn decay_fraction(gamma_t: f64) -> f64 {
    -(-gamma_t).exp_m1()
}

/// `B(n, 1/2; 1 - e^{-γt})`.
fn beta_of_decay(n: f64, gamma_t: f64) -> f64 {
    incomplete_beta_split(n, 0.5, decay_fraction(gamma_t), (-gamma_t).exp())
        .expect("decay fraction lies in [0, 1]")
}

/// The series coefficient `c_n(t)` with `P_0 → 1` on the `Π_0` component
/// and `P_0 → 0` elsewhere.
///
/// Evaluated through the substitution `x = 1 - e^{-γt'}`, which turns the
/// defining integral into `x^{n+1}/(n+1)!` off the ground and
/// `B(n+1, 1/2; x)/n!` on it. Both forms are free of the cancellation the
/// alternating binomial sum suffers at large `n`.
pub fn c_coeff(n: u32, gamma_t: f64, on_ground: bool) -> f64 {
    debug_assert!(gamma_t >= 0.0);
    ln_c_coeff(n, gamma_t, on_ground).map_or(0.0, f64::exp)
}

fn ln_c_coeff(n: u32, gamma_t: f64, on_ground: bool) -> Option<f64> {
    let x = decay_fraction(gamma_t);
    if x <= 0.0 {
        return None;
    }
    if on_ground {
        let b = beta_of_decay(f64::from(n) + 1.0, gamma_t);
        (b > 0.0).then(|| b.ln() - ln_factorial(n))
    } else {
        Some(f64::from(n + 1) * x.ln() - ln_factorial(n + 1))
    }
}

fn require_resonant(params: &ModelParams) -> Result<()> {
    if params.is_resonant() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!(
            "resonant solution requires delta = 0, got {}",
            params.delta()
        )))
    }
}

/// Evolves the diagonal sector to time `t`.
pub fn evolve_diag(v0: &PiBasisVector, t: f64, params: &ModelParams) -> Result<PiBasisVector> {
    require_resonant(params)?;
    if t < 0.0 {
        return Err(Error::Domain(format!("time must be >= 0, got {t}")));
    }
    let gamma_t = params.gamma() * t;
    let cutoff = v0.cutoff();
    let mut out = v0.clone();

    // Σ_l c_{l-1} K₂^l v0, combined in log-space so the huge ladder
    // coefficients never meet the tiny series coefficients unscaled.
    for l in 1..=cutoff {
        let (Some(ln_off), ln_on) =
            (ln_c_coeff(l - 1, gamma_t, false), ln_c_coeff(l - 1, gamma_t, true))
        else {
            break;
        };
        for n in l..=cutoff {
            let cp = v0.plus_at(n);
            if cp != 0.0 {
                let lk = ln_k2_plus_coefficient(n, l).expect("l <= n");
                if l == n {
                    if let Some(ln_on) = ln_on {
                        out.ground += cp * (lk + ln_on).exp();
                    }
                } else {
                    out.plus[(n - l) as usize - 1] += cp * (lk + ln_off).exp();
                }
            }
            let cm = v0.minus_at(n);
            if cm != 0.0 {
                if let Some(lk) = ln_k2_minus_coefficient(n, l) {
                    out.minus[(n - l) as usize - 1] += cm * (lk + ln_off).exp();
                }
            }
        }
    }

    // e^{-γAt}: A = n - 1/2 on both branches, 0 on the ground state.
    for n in 1..=cutoff {
        let damp = (-gamma_t * (f64::from(n) - 0.5)).exp();
        out.plus[n as usize - 1] *= damp;
        out.minus[n as usize - 1] *= damp;
    }
    Ok(out)
}

/// Evolves the same-excitation coherences `<E_{n+}|ρ|E_{n-}>`.
pub fn evolve_offdiag(c0: &[Complex64], t: f64, params: &ModelParams) -> Result<Vec<Complex64>> {
    require_resonant(params)?;
    Ok(c0
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let n = (i + 1) as f64;
            let damp = (-params.gamma() * (n - 0.5) * t).exp();
            let phase = -2.0 * n.sqrt() * params.lambda() * t;
            c * Complex64::from_polar(damp, phase)
        })
        .collect())
}

/// Evolves a full sector state (coherences between different excitation
/// numbers are dropped).
pub fn evolve(state: &SectorState, t: f64, params: &ModelParams) -> Result<SectorState> {
    let diag = evolve_diag(&PiBasisVector::from_populations(state), t, params)?;
    let coh = evolve_offdiag(state.coherences(), t, params)?;
    SectorState::from_parts(state.cutoff(), diag.populations(), coh, None)
}

fn require_time(t: f64) -> Result<()> {
    if t >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("time must be >= 0, got {t}")))
    }
}

/// `ln [(2n-1)!! / ((n-1)! 2^n)]`, the prefactor that makes
/// `B(n,1/2;1)·prefactor = 1`.
fn ln_ground_prefactor(n: u32) -> f64 {
    ln_odd_double_factorial(n) - ln_factorial(n - 1) - f64::from(n) * std::f64::consts::LN_2
}

fn rabi_term(n: u32, t: f64, params: &ModelParams) -> f64 {
    let nf = f64::from(n);
    0.5 * (-params.gamma() * (nf - 0.5) * t).exp() * (2.0 * nf.sqrt() * params.lambda() * t).cos()
}

/// `P_g(t)` for the initial state `|g,n><g,n|`.
pub fn fock_pg(n: u32, t: f64, params: &ModelParams) -> Result<f64> {
    require_resonant(params)?;
    require_time(t)?;
    if n == 0 {
        return Ok(1.0);
    }
    let b = beta_of_decay(f64::from(n), params.gamma() * t);
    let ground = 0.5 * ln_ground_prefactor(n).exp() * b;
    Ok(0.5 + ground + rabi_term(n, t, params))
}

/// Population of `|E_0>` (that is `|g,0>`) for the initial state `|g,n><g,n|`.
pub fn fock_p0g(n: u32, t: f64, params: &ModelParams) -> Result<f64> {
    require_resonant(params)?;
    require_time(t)?;
    if n == 0 {
        return Ok(1.0);
    }
    Ok(ln_ground_prefactor(n).exp() * beta_of_decay(f64::from(n), params.gamma() * t))
}

/// Mean photon number for the initial state `|g,n><g,n|`.
///
/// The hypergeometric argument `-1/(e^{γt}-1)` diverges as `γt → 0`; there
/// the same terminating sum is evaluated with `x^{n-1}` distributed over
/// its terms, which reduces to `n - 1/2` at `γt = 0`.
pub fn fock_nphoton(n: u32, t: f64, params: &ModelParams) -> Result<f64> {
    require_resonant(params)?;
    require_time(t)?;
    if n == 0 {
        return Ok(0.0);
    }
    let gamma_t = params.gamma() * t;
    let x = decay_fraction(gamma_t);
    let m = n - 1;
    let ln_pref = ln_ground_prefactor(n) - 0.5 * gamma_t;
    let diag = if x > 0.0 && f64::from(m) * -x.ln() < 300.0 {
        let z = -1.0 / gamma_t.exp_m1();
        (ln_pref + f64::from(m) * x.ln()).exp() * hyp2f1_terminating(1.0, m, 0.5, z)?
    } else {
        // Σ_k (1)_k (-m)_k / ((1/2)_k k!) · x^{m-k} (-e^{-γt})^k
        let decay = (-gamma_t).exp();
        let mut sum = crate::specfun::CompensatedSum::new();
        let mut coef = 1.0;
        for k in 0..=m {
            if k > 0 {
                let kf = f64::from(k - 1);
                coef *= (1.0 + kf) * (kf - f64::from(m)) / ((0.5 + kf) * (kf + 1.0));
            }
            let xk = if m - k == 0 { 1.0 } else { x.powi((m - k) as i32) };
            sum.add(coef * xk * (-decay).powi(k as i32));
        }
        ln_pref.exp() * sum.value()
    };
    Ok(diag + rabi_term(n, t, params))
}

/// Poisson weights `e^{-α²} α^{2k} / k!` for `k = 0..=cutoff`.
pub fn poisson_weights(alpha: f64, cutoff: u32) -> Vec<f64> {
    let a2 = alpha * alpha;
    (0..=cutoff)
        .map(|k| {
            if k == 0 {
                (-a2).exp()
            } else if alpha == 0.0 {
                0.0
            } else {
                (-a2 + f64::from(k) * a2.ln() - ln_factorial(k)).exp()
            }
        })
        .collect()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("alpha must be a non-negative real, got {alpha}")));
    }
    if alpha > MAX_COHERENT_ALPHA {
        return Err(Error::CutoffOverflow { alpha, max: MAX_COHERENT_ALPHA });
    }
    Ok(())
}

/// State at time `t` for the initial `|g,α><g,α|` with real `α`, using the
/// default cutoff from [`coherent_cutoff`].
///
/// The diagonal sector is the Poisson mixture of Fock-state solutions (the
/// master equation is linear); coherences between different excitation
/// numbers are omitted.
pub fn coherent_solution(alpha: f64, t: f64, params: &ModelParams) -> Result<SectorState> {
    check_alpha(alpha)?;
    coherent_solution_with_cutoff(alpha, t, params, coherent_cutoff(alpha))
}

pub fn coherent_solution_with_cutoff(
    alpha: f64,
    t: f64,
    params: &ModelParams,
    cutoff: u32,
) -> Result<SectorState> {
    check_alpha(alpha)?;
    require_resonant(params)?;
    require_time(t)?;
    let w = poisson_weights(alpha, cutoff);
    let mut v0 = PiBasisVector::zeros(cutoff);
    v0.ground = w[0];
    let mut coh = vec![Complex64::new(0.0, 0.0); cutoff as usize];
    for k in 1..=cutoff {
        v0.plus[k as usize - 1] = 0.5 * w[k as usize];
        coh[k as usize - 1] = Complex64::new(0.5 * w[k as usize], 0.0);
    }
    let diag = evolve_diag(&v0, t, params)?;
    let coh = evolve_offdiag(&coh, t, params)?;
    SectorState::from_parts(cutoff, diag.populations(), coh, None)
}

/// The `₁F₁` closed form of the `Π_{k+}` coefficient of the evolved
/// coherent state (untruncated in the photon number).
pub fn coherent_plus_coefficient(alpha: f64, k: u32, t: f64, params: &ModelParams) -> Result<f64> {
    require_resonant(params)?;
    let gamma_t = params.gamma() * t;
    let a2 = alpha * alpha;
    let w = poisson_weights(alpha, k)[k as usize];
    let f = crate::specfun::hyp1f1(f64::from(k) + 0.5, f64::from(k) + 1.0, a2 * decay_fraction(gamma_t))?;
    Ok(0.5 * (-(f64::from(k) - 0.5) * gamma_t).exp() * w * f)
}
