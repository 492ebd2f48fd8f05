//! Brute-force master-equation integrators used as ground truth.
//!
//! Two generators are available. The microscopic one is the secular
//! dissipator assembled entry by entry in the dressed basis; the
//! phenomenological one is the textbook photon-loss Lindblad equation in
//! the bare basis. Both act on the row-major vectorization of a truncated
//! density matrix (`vec(ρ)[i·d + j] = ρ_ij`) and are integrated with
//! fixed-step RK4.
//!
//! The bare basis uses the same slots as the dressed one:
//! `0 = |g,0>`, `2n - 1 = |e,n-1>`, `2n = |g,n>`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{
    atilde_eigenvalue, basis_dim, c_eigenvalue, epsilon, jump_weight, mixing, observables, Atom,
    DressedIndex, ModelParams, Observables, SectorState, TimeSeries,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Which basis the matrix entries of a [`DenseState`] refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Dressed,
    Bare,
}

/// Full truncated density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    basis: Basis,
    cutoff: u32,
    rho: DMatrix<Complex64>,
}

impl DenseState {
    pub fn new(basis: Basis, cutoff: u32, rho: DMatrix<Complex64>) -> Result<Self> {
        let d = basis_dim(cutoff);
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::InvalidState(format!(
                "matrix is {}x{}, cutoff {cutoff} needs {d}x{d}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        Ok(Self { basis, cutoff, rho })
    }

    /// `|atom, photons><atom, photons|` in the bare basis.
    pub fn bare_fock(atom: Atom, photons: u32, cutoff: Option<u32>) -> Self {
        let (n, slot) = match atom {
            Atom::Ground => (photons, 2 * photons as usize),
            Atom::Excited => (photons + 1, 2 * photons as usize + 1),
        };
        let cutoff = cutoff.unwrap_or(n).max(n);
        let d = basis_dim(cutoff);
        let mut rho = DMatrix::zeros(d, d);
        rho[(slot, slot)] = Complex64::new(1.0, 0.0);
        Self { basis: Basis::Bare, cutoff, rho }
    }

    /// `|g,α><g,α|` for real `α`, truncated at `cutoff` photons and
    /// renormalized.
    pub fn coherent(alpha: f64, cutoff: u32) -> Self {
        let d = basis_dim(cutoff);
        let mut amp = vec![0.0; d];
        let mut a = 1.0;
        for k in 0..=cutoff {
            if k > 0 {
                a *= alpha / f64::from(k).sqrt();
            }
            amp[2 * k as usize] = a;
        }
        let norm: f64 = amp.iter().map(|x| x * x).sum();
        let rho = DMatrix::from_fn(d, d, |i, j| Complex64::new(amp[i] * amp[j] / norm, 0.0));
        Self { basis: Basis::Bare, cutoff, rho }
    }

    pub fn from_sector_state(state: &SectorState) -> Self {
        let cutoff = state.cutoff();
        let d = basis_dim(cutoff);
        let mut rho = DMatrix::zeros(d, d);
        for (i, &p) in state.diag().iter().enumerate() {
            rho[(i, i)] = Complex64::new(p, 0.0);
        }
        for n in 1..=cutoff {
            let c = state.coherence(n);
            let (p, m) = (DressedIndex::Plus(n).index(), DressedIndex::Minus(n).index());
            rho[(p, m)] = c;
            rho[(m, p)] = c.conj();
        }
        if let Some(other) = state.other_coherences() {
            for (&(x, y), &c) in other {
                rho[(x.index(), y.index())] = c;
                rho[(y.index(), x.index())] = c.conj();
            }
        }
        Self { basis: Basis::Dressed, cutoff, rho }
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn trace(&self) -> f64 {
        self.rho.diagonal().iter().map(|z| z.re).sum()
    }

    /// Largest `|ρ_ij - conj(ρ_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.rho.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.rho[(i, j)] - self.rho[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.rho + self.rho.adjoint()) * Complex64::new(0.5, 0.0);
        herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// The same state in the requested basis.
    pub fn in_basis(&self, basis: Basis, params: &ModelParams) -> Self {
        if basis == self.basis {
            return self.clone();
        }
        // The bare/dressed change of basis is a real symmetric involution
        // made of 2x2 blocks, so both directions are the same conjugation.
        let mut rho = self.rho.clone();
        for n in 1..=self.cutoff {
            let (c, s) = mixing(params, n);
            let (m, p) = (2 * n as usize - 1, 2 * n as usize);
            for j in 0..rho.ncols() {
                let (xm, xp) = (rho[(m, j)], rho[(p, j)]);
                rho[(m, j)] = xm * (-c) + xp * s;
                rho[(p, j)] = xm * s + xp * c;
            }
            for i in 0..rho.nrows() {
                let (xm, xp) = (rho[(i, m)], rho[(i, p)]);
                rho[(i, m)] = xm * (-c) + xp * s;
                rho[(i, p)] = xm * s + xp * c;
            }
        }
        Self { basis, cutoff: self.cutoff, rho }
    }

    pub fn to_dressed(&self, params: &ModelParams) -> Self {
        self.in_basis(Basis::Dressed, params)
    }

    pub fn to_bare(&self, params: &ModelParams) -> Self {
        self.in_basis(Basis::Bare, params)
    }

    /// Splits the dressed-basis matrix into populations, same-excitation
    /// coherences and the remaining upper-triangle coherences.
    pub fn to_sector_state(&self, params: &ModelParams) -> SectorState {
        let dressed = self.to_dressed(params);
        let rho = &dressed.rho;
        let d = rho.nrows();
        let diag = (0..d).map(|i| rho[(i, i)].re).collect();
        let coh = (1..=self.cutoff)
            .map(|n| rho[(DressedIndex::Plus(n).index(), DressedIndex::Minus(n).index())])
            .collect();
        let mut other = BTreeMap::new();
        for i in 0..d {
            for j in i + 1..d {
                let (x, y) = (DressedIndex::from_index(i), DressedIndex::from_index(j));
                if x.excitation() != y.excitation() && rho[(i, j)] != ZERO {
                    other.insert((x, y), rho[(i, j)]);
                }
            }
        }
        SectorState::from_parts(self.cutoff, diag, coh, Some(other))
            .expect("lengths follow from the cutoff")
    }

    pub fn observables(&self, params: &ModelParams) -> Observables {
        let dressed = self.to_dressed(params);
        let rho = &dressed.rho;
        let diag = (0..rho.nrows()).map(|i| rho[(i, i)].re).collect();
        let coh = (1..=self.cutoff)
            .map(|n| rho[(DressedIndex::Plus(n).index(), DressedIndex::Minus(n).index())])
            .collect();
        let st = SectorState::from_parts(self.cutoff, diag, coh, None)
            .expect("lengths follow from the cutoff");
        observables(params, &st)
    }

    fn to_vec(&self) -> Vec<Complex64> {
        let d = self.rho.nrows();
        let mut v = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                v.push(self.rho[(i, j)]);
            }
        }
        v
    }

    fn from_vec(basis: Basis, cutoff: u32, v: &[Complex64]) -> Self {
        let d = basis_dim(cutoff);
        Self { basis, cutoff, rho: DMatrix::from_row_slice(d, d, v) }
    }
}

/// Which master equation a [`Liouvillian`] represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    Microscopic,
    Phenomenological,
}

/// Sparse (CSR) generator acting on `vec(ρ)`.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    generator: Generator,
    params: ModelParams,
    cutoff: u32,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
    /// Upper bound on `|Im λ| + |Re λ|` over the spectrum, for step control.
    rate_bound: f64,
}

impl Liouvillian {
    pub fn generator(&self) -> Generator {
        self.generator
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn basis(&self) -> Basis {
        match self.generator {
            Generator::Microscopic => Basis::Dressed,
            Generator::Phenomenological => Basis::Bare,
        }
    }

    pub fn dim(&self) -> usize {
        basis_dim(self.cutoff)
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *o = acc;
        }
    }

    /// Largest step the integrator will take.
    pub fn max_step(&self) -> f64 {
        let p = &self.params;
        let scale = p.lambda().max(p.delta().abs()).max(p.gamma());
        let mut h = (0.01 / scale).min(0.02 / self.rate_bound);
        if p.gamma() > 0.0 {
            h = h.min(0.1 / p.gamma());
        }
        h
    }

    /// Largest `|tr L[E_ij]|` over the matrix units `E_ij`.
    pub fn trace_defect(&self) -> f64 {
        let d = self.dim();
        let mut col_sums = vec![ZERO; d * d];
        for i in 0..d {
            let r = i * d + i;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                col_sums[self.cols[k]] += self.vals[k];
            }
        }
        col_sums.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn from_rows(
        generator: Generator,
        params: &ModelParams,
        cutoff: u32,
        rows: impl Iterator<Item = Vec<(usize, Complex64)>>,
    ) -> Self {
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *vals.last_mut().expect("previous entry") += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        let n = f64::from(cutoff);
        let rate_bound = 2.0 * epsilon(params, cutoff.max(1)) + params.gamma() * n.max(1.0);
        Self { generator, params: *params, cutoff, row_ptr, cols, vals, rate_bound }
    }
}

/// Secular dissipator in the dressed basis: populations follow the rate
/// equation `ṗ_s = -γÃ_s p_s + γ Σ_f |<s|a|f>|² p_f`; every coherence
/// `ρ_xy` rotates at `E_x - E_y` (eigenvalues of `C`) and decays at
/// `γ(Ã_x + Ã_y)/2`.
pub fn build_microscopic(params: &ModelParams, cutoff: u32) -> Result<Liouvillian> {
    require_cutoff(cutoff)?;
    let d = basis_dim(cutoff);
    let g = params.gamma();
    let states: Vec<DressedIndex> = DressedIndex::all(cutoff).collect();
    let energy: Vec<f64> = states.iter().map(|&s| c_eigenvalue(params, s)).collect();
    let atilde: Vec<f64> = states.iter().map(|&s| atilde_eigenvalue(params, s)).collect();
    let rows = (0..d * d).map(|r| {
        let (x, y) = (r / d, r % d);
        let mut row = vec![(
            r,
            Complex64::new(-0.5 * g * (atilde[x] + atilde[y]), -(energy[x] - energy[y])),
        )];
        if x == y {
            let n = states[x].excitation() + 1;
            if n <= cutoff {
                for from in [DressedIndex::Plus(n), DressedIndex::Minus(n)] {
                    let w = jump_weight(params, from, states[x]);
                    let f = from.index();
                    row.push((f * d + f, Complex64::new(g * w, 0.0)));
                }
            }
        }
        row
    });
    Ok(Liouvillian::from_rows(Generator::Microscopic, params, cutoff, rows))
}

/// `-i[H, ρ] + γ(aρa† - {a†a, ρ}/2)` in the bare basis, with `H` the JC
/// Hamiltonian minus the conserved `ωN`.
pub fn build_phenomenological(params: &ModelParams, cutoff: u32) -> Result<Liouvillian> {
    require_cutoff(cutoff)?;
    let d = basis_dim(cutoff);
    let g = params.gamma();

    // Sparse rows of H (real symmetric).
    let mut h: Vec<Vec<(usize, f64)>> = vec![Vec::new(); d];
    h[0].push((0, params.delta()));
    for n in 1..=cutoff {
        let (e, gs) = (2 * n as usize - 1, 2 * n as usize);
        let coupling = params.lambda() * f64::from(n).sqrt();
        h[gs].push((gs, params.delta()));
        h[e].push((e, -params.delta()));
        h[gs].push((e, coupling));
        h[e].push((gs, coupling));
    }
    let photons: Vec<f64> = (0..d).map(bare_photons).map(f64::from).collect();
    // a† raises every slot by two: (slot, <i|a|slot>).
    let raised: Vec<Option<(usize, f64)>> = (0..d)
        .map(|i| (i + 2 < d).then(|| (i + 2, f64::from(bare_photons(i + 2)).sqrt())))
        .collect();

    let rows = (0..d * d).map(|r| {
        let (i, j) = (r / d, r % d);
        let mut row = Vec::with_capacity(8);
        for &(k, hik) in &h[i] {
            row.push((k * d + j, Complex64::new(0.0, -hik)));
        }
        for &(k, hkj) in &h[j] {
            row.push((i * d + k, Complex64::new(0.0, hkj)));
        }
        row.push((r, Complex64::new(-0.5 * g * (photons[i] + photons[j]), 0.0)));
        if let (Some((k, aik)), Some((l, ajl))) = (raised[i], raised[j]) {
            row.push((k * d + l, Complex64::new(g * aik * ajl, 0.0)));
        }
        row
    });
    Ok(Liouvillian::from_rows(Generator::Phenomenological, params, cutoff, rows))
}

/// Photon number of a bare slot (`|g,n>` sits at `2n`, `|e,n>` at `2n+1`).
fn bare_photons(slot: usize) -> u32 {
    (slot / 2) as u32
}

fn require_cutoff(cutoff: u32) -> Result<()> {
    if cutoff == 0 {
        Err(Error::Domain("cutoff must be at least 1".into()))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    /// Override of [`Liouvillian::max_step`].
    pub max_step: Option<f64>,
    /// Subdivide grid intervals longer than the step bound; when false such
    /// grids are rejected.
    pub substep: bool,
    /// Compute the minimum eigenvalue at every grid point.
    pub eigen_checks: bool,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self { max_step: None, substep: true, eigen_checks: false }
    }
}

/// Worst values of the state checks seen along a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub max_trace_drift: f64,
    pub max_hermiticity_error: f64,
    pub min_eigenvalue: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Integration {
    pub series: TimeSeries,
    pub final_state: DenseState,
    pub diagnostics: Diagnostics,
}

/// Integrates `rho0` over the physical times `times` (increasing, starting
/// at 0). The series records `λt` and the standard observables.
pub fn integrate(
    l: &Liouvillian,
    rho0: &DenseState,
    times: &[f64],
    opts: IntegrateOptions,
) -> Result<Integration> {
    if rho0.cutoff() != l.cutoff() {
        return Err(Error::InvalidState(format!(
            "state cutoff {} differs from generator cutoff {}",
            rho0.cutoff(),
            l.cutoff()
        )));
    }
    if times.first() != Some(&0.0) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("time grid must start at 0 and increase".into()));
    }
    let params = *l.params();
    let basis = l.basis();
    let h_max = opts.max_step.unwrap_or_else(|| l.max_step());
    let trace0 = rho0.trace();

    let mut x = rho0.in_basis(basis, &params).to_vec();
    let mut rk = Rk4::new(x.len());
    let mut series = TimeSeries::observables();
    let mut diag = Diagnostics {
        max_trace_drift: 0.0,
        max_hermiticity_error: 0.0,
        min_eigenvalue: opts.eigen_checks.then_some(f64::INFINITY),
    };
    let mut record = |t: f64, x: &[Complex64], diag: &mut Diagnostics| {
        let st = DenseState::from_vec(basis, l.cutoff(), x);
        let obs = st.observables(&params);
        diag.max_trace_drift = diag.max_trace_drift.max((obs.trace - trace0).abs());
        diag.max_hermiticity_error = diag.max_hermiticity_error.max(st.hermiticity_error());
        if let Some(m) = diag.min_eigenvalue.as_mut() {
            *m = m.min(st.min_eigenvalue());
        }
        series.push_observables(t * params.lambda(), &obs);
    };

    record(0.0, &x, &mut diag);
    for w in times.windows(2) {
        let span = w[1] - w[0];
        let steps = (span / h_max).ceil().max(1.0);
        if steps > 1.0 && !opts.substep {
            return Err(Error::StepSize { spacing: span, max_step: h_max });
        }
        let h = span / steps;
        for _ in 0..steps as usize {
            rk.step(l, &mut x, h);
        }
        record(w[1], &x, &mut diag);
    }
    Ok(Integration {
        series,
        final_state: DenseState::from_vec(basis, l.cutoff(), &x),
        diagnostics: diag,
    })
}

struct Rk4 {
    k: [Vec<Complex64>; 4],
    tmp: Vec<Complex64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        Self { k: std::array::from_fn(|_| vec![ZERO; n]), tmp: vec![ZERO; n] }
    }

    fn step(&mut self, l: &Liouvillian, x: &mut [Complex64], h: f64) {
        let [k1, k2, k3, k4] = &mut self.k;
        l.apply(x, k1);
        for ((t, &xi), &ki) in self.tmp.iter_mut().zip(x.iter()).zip(k1.iter()) {
            *t = xi + ki * (0.5 * h);
        }
        l.apply(&self.tmp, k2);
        for ((t, &xi), &ki) in self.tmp.iter_mut().zip(x.iter()).zip(k2.iter()) {
            *t = xi + ki * (0.5 * h);
        }
        l.apply(&self.tmp, k3);
        for ((t, &xi), &ki) in self.tmp.iter_mut().zip(x.iter()).zip(k3.iter()) {
            *t = xi + ki * h;
        }
        l.apply(&self.tmp, k4);
        for i in 0..x.len() {
            x[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::linear_grid;
    use crate::resonant;
    use proptest::prelude::*;

    fn p(delta: f64, gamma: f64) -> ModelParams {
        ModelParams::scaled(delta, gamma).unwrap()
    }

    fn random_state(raw: &[f64], cutoff: u32) -> DenseState {
        // A = X + iY with X, Y from raw; ρ = A A† / tr.
        let d = basis_dim(cutoff);
        let a = DMatrix::from_fn(d, d, |i, j| {
            Complex64::new(raw[(i * d + j) % raw.len()] - 0.5, raw[(j * d + i + 7) % raw.len()] - 0.5)
        });
        let rho = &a * a.adjoint();
        let tr = rho.trace();
        DenseState::new(Basis::Bare, cutoff, rho / tr).unwrap()
    }

    #[test]
    fn basis_change_is_an_involution() {
        let params = p(0.7, 0.1);
        let st = DenseState::coherent(1.3, 6);
        let back = st.to_dressed(&params).to_bare(&params);
        assert!((&back.rho - &st.rho).norm() < 1e-14);
    }

    #[test]
    fn bare_ground_fock_rotates_onto_mixing_weights() {
        let params = p(3.0 / 4.0, 0.1);
        let st = DenseState::bare_fock(Atom::Ground, 1, None).to_sector_state(&params);
        let (c, s) = mixing(&params, 1);
        assert!((st.population(DressedIndex::Plus(1)) - c * c).abs() < 1e-15);
        assert!((st.population(DressedIndex::Minus(1)) - s * s).abs() < 1e-15);
        let want = SectorState::bare(&params, Atom::Ground, 1, None);
        assert!((st.coherence(1) - want.coherence(1)).norm() < 1e-15);
    }

    #[test]
    fn phenomenological_hamiltonian_has_dressed_spectrum() {
        // With γ = 0 the dressed populations of any state are conserved.
        let params = p(0.4, 0.0);
        let l = build_phenomenological(&params, 3).unwrap();
        let rho0 = DenseState::bare_fock(Atom::Excited, 2, None);
        let run = integrate(&l, &rho0, &[0.0, 2.5], IntegrateOptions::default()).unwrap();
        let a = rho0.to_sector_state(&params);
        let b = run.final_state.to_sector_state(&params);
        for (x, y) in a.diag().iter().zip(b.diag()) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn generators_annihilate_trace() {
        for &(delta, gamma) in &[(0.0, 0.2), (1.0, 0.3), (-2.5, 1.0)] {
            let params = p(delta, gamma);
            assert!(build_microscopic(&params, 5).unwrap().trace_defect() < 1e-12);
            assert!(build_phenomenological(&params, 5).unwrap().trace_defect() < 1e-12);
        }
    }

    #[test]
    fn vacuum_is_stationary() {
        let params = p(1.0, 0.2);
        let l = build_phenomenological(&params, 2).unwrap();
        let rho0 = DenseState::bare_fock(Atom::Ground, 0, Some(2));
        let run = integrate(&l, &rho0, &linear_grid(5.0, 6), IntegrateOptions::default()).unwrap();
        assert!((&run.final_state.rho - &rho0.rho).norm() < 1e-15);

        let l = build_microscopic(&params, 2).unwrap();
        let rho0 = DenseState::from_sector_state(&SectorState::ground(2));
        let mut out = vec![ZERO; l.dim() * l.dim()];
        l.apply(&rho0.to_vec(), &mut out);
        assert!(out.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn plus_one_decays_at_half_gamma_on_resonance() {
        let params = p(0.0, 0.3);
        let l = build_microscopic(&params, 1).unwrap();
        let rho0 = DenseState::from_sector_state(&SectorState::pure(1, DressedIndex::Plus(1)));
        let mut out = vec![ZERO; 9];
        l.apply(&rho0.to_vec(), &mut out);
        let i = DressedIndex::Plus(1).index();
        assert!((out[i * 3 + i].re + 0.15).abs() < 1e-15);
    }

    #[test]
    fn decoupled_mode_loses_photons_one_by_one() {
        // λ → 0 is not allowed, so take |Δ| huge: the |g,k> ladder then
        // decouples and the populations follow the pure-decay binomial.
        let params = ModelParams::new(1e-9, 1.0, 0.5).unwrap();
        let l = build_phenomenological(&params, 3).unwrap();
        let rho0 = DenseState::bare_fock(Atom::Ground, 3, None);
        let t = 1.7;
        let run = integrate(&l, &rho0, &[0.0, t], IntegrateOptions::default()).unwrap();
        let q = (-0.5 * t).exp();
        for k in 0..=3u32 {
            let binom = [1.0, 3.0, 3.0, 1.0][k as usize];
            let want = binom * q.powi(k as i32) * (1.0 - q).powi(3 - k as i32);
            let got = run.final_state.rho[(2 * k as usize, 2 * k as usize)].re;
            assert!((got - want).abs() < 1e-9, "k={k}: {got} vs {want}");
        }
    }

    #[test]
    fn microscopic_matches_resonant_fock_closed_forms() {
        for n in 1..=3u32 {
            let params = p(0.0, 0.2);
            let l = build_microscopic(&params, n).unwrap();
            let rho0 = DenseState::bare_fock(Atom::Ground, n, None);
            let grid = linear_grid(10.0, 51);
            let run = integrate(&l, &rho0, &grid, IntegrateOptions::default()).unwrap();
            let pg = run.series.column(crate::model::COL_P_G).unwrap();
            let np = run.series.column(crate::model::COL_N_PHOTON).unwrap();
            for (k, &t) in grid.iter().enumerate() {
                assert!((pg[k] - resonant::fock_pg(n, t, &params).unwrap()).abs() < 1e-6);
                assert!((np[k] - resonant::fock_nphoton(n, t, &params).unwrap()).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn excited_vacuum_decays_slower_than_one_photon_off_resonance() {
        let params = p(1.0, 0.2);
        let l = build_microscopic(&params, 1).unwrap();
        let opts = IntegrateOptions::default();
        let p0g = |atom, photons| {
            let run = integrate(&l, &DenseState::bare_fock(atom, photons, Some(1)), &[0.0, 5.0], opts)
                .unwrap();
            run.series.column(crate::model::COL_P_0G).unwrap()[1]
        };
        assert!(p0g(Atom::Excited, 0) < p0g(Atom::Ground, 1));
    }

    #[test]
    fn coarse_grid_without_substeps_is_rejected() {
        let params = p(0.0, 0.2);
        let l = build_microscopic(&params, 1).unwrap();
        let rho0 = DenseState::bare_fock(Atom::Ground, 1, None);
        let opts = IntegrateOptions { substep: false, ..Default::default() };
        assert!(matches!(
            integrate(&l, &rho0, &[0.0, 1.0], opts),
            Err(Error::StepSize { .. })
        ));
    }

    #[test]
    fn rk4_is_fourth_order() {
        let params = p(0.5, 0.3);
        let l = build_phenomenological(&params, 2).unwrap();
        let rho0 = DenseState::bare_fock(Atom::Ground, 2, None);
        let run_with = |h: f64| {
            let opts = IntegrateOptions { max_step: Some(h), ..Default::default() };
            integrate(&l, &rho0, &[0.0, 2.0], opts).unwrap().final_state.rho
        };
        let reference = run_with(1e-3);
        let e1 = (run_with(0.2) - &reference).norm();
        let e2 = (run_with(0.1) - &reference).norm();
        let ratio = e1 / e2;
        assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn phenomenological_keeps_states_physical(
            raw in proptest::collection::vec(0.0f64..1.0, 40),
            delta in -2.0f64..2.0,
            gamma in 0.05f64..1.0,
        ) {
            let params = p(delta, gamma);
            let l = build_phenomenological(&params, 2).unwrap();
            let rho0 = random_state(&raw, 2);
            let opts = IntegrateOptions { eigen_checks: true, ..Default::default() };
            let run = integrate(&l, &rho0, &linear_grid(6.0, 13), opts).unwrap();
            prop_assert!(run.diagnostics.max_trace_drift < 1e-8);
            prop_assert!(run.diagnostics.max_hermiticity_error < 1e-12);
            prop_assert!(run.diagnostics.min_eigenvalue.unwrap() > -1e-7);
        }

        #[test]
        fn microscopic_keeps_states_physical(
            raw in proptest::collection::vec(0.0f64..1.0, 40),
            delta in -2.0f64..2.0,
            gamma in 0.05f64..1.0,
        ) {
            let params = p(delta, gamma);
            let l = build_microscopic(&params, 2).unwrap();
            let rho0 = random_state(&raw, 2);
            let opts = IntegrateOptions { eigen_checks: true, ..Default::default() };
            let run = integrate(&l, &rho0, &linear_grid(6.0, 13), opts).unwrap();
            prop_assert!(run.diagnostics.max_trace_drift < 1e-8);
            prop_assert!(run.diagnostics.max_hermiticity_error < 1e-12);
            prop_assert!(run.diagnostics.min_eigenvalue.unwrap() > -1e-7);
        }
    }
}
