//! Acceptance checks. Each test prints one `PASS`/`FAIL` line and then
//! asserts on the same condition.

use std::time::Instant;

use lossyjc::model::{
    coherent_cutoff, epsilon, linear_grid, observables, Atom, DressedIndex, COL_P_0G, COL_P_G,
};
use lossyjc::offresonant::{evolve_diag_offres, evolve_offres, integral_in, DEFAULT_K_MAX};
use lossyjc::oracle::{
    build_microscopic, build_phenomenological, integrate, DenseState, IntegrateOptions, Liouvillian,
};
use lossyjc::resonant::{self, PiBasisVector};
use lossyjc::{ModelParams, SectorState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: &str, pass: bool, detail: String) {
    println!("{} criterion {id}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id}: {detail}");
}

fn scaled(delta: f64, gamma: f64) -> ModelParams {
    ModelParams::scaled(delta, gamma).unwrap()
}

#[test]
fn criterion_1_resonant_oracle_equivalence() {
    let start = Instant::now();
    let params = scaled(0.0, 0.2);
    let grid = linear_grid(20.0, 2000);
    let mut worst: f64 = 0.0;
    for n in [1u32, 3, 5] {
        let l = build_microscopic(&params, n).unwrap();
        let run = integrate(&l, &DenseState::bare_fock(Atom::Ground, n, None), &grid, IntegrateOptions::default())
            .unwrap();
        let pg = run.series.column(COL_P_G).unwrap();
        for (k, &t) in grid.iter().enumerate() {
            worst = worst.max((resonant::fock_pg(n, t, &params).unwrap() - pg[k]).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        "1",
        worst < 1e-6 && secs < 30.0,
        format!("max |P_g analytic - oracle| = {worst:.3e} (< 1e-6), runtime {secs:.2} s (< 30 s)"),
    );
}

#[test]
fn criterion_2_exact_limits() {
    let params = scaled(0.0, 0.2);
    let mut at_zero: f64 = 0.0;
    let mut at_end: f64 = 0.0;
    for n in 1..=10u32 {
        at_zero = at_zero.max((resonant::fock_pg(n, 0.0, &params).unwrap() - 1.0).abs());
        at_end = at_end.max((resonant::fock_pg(n, 200.0, &params).unwrap() - 1.0).abs());
    }
    report(
        "2",
        at_zero < 1e-12 && at_end < 1e-3,
        format!("max |P_g(0) - 1| = {at_zero:.3e}, max |P_g(λt=200) - 1| = {at_end:.3e} (< 1e-3), n = 1..10"),
    );
}

#[test]
fn criterion_3_pure_rabi_reduction() {
    let params = scaled(0.0, 0.0);
    let grid = linear_grid(20.0, 2000);
    let mut worst: f64 = 0.0;
    for n in 1..=10u32 {
        let w = 2.0 * f64::from(n).sqrt();
        for &t in &grid {
            let want = 0.5 + 0.5 * (w * t).cos();
            worst = worst.max((resonant::fock_pg(n, t, &params).unwrap() - want).abs());
        }
    }
    report("3", worst < 1e-12, format!("max |P_g - (1 + cos 2√n λt)/2| = {worst:.3e} (< 1e-12)"));
}

#[test]
fn criterion_4_single_excitation_closed_forms() {
    let grid = linear_grid(20.0, 201);
    let mut path_err: f64 = 0.0;
    let mut oracle_err: f64 = 0.0;
    for delta in [0.1, 1.0, 5.0] {
        let params = scaled(delta, 0.2);
        let e1 = epsilon(&params, 1);
        let l = build_microscopic(&params, 1).unwrap();
        for (s, rate) in [
            (DressedIndex::Plus(1), 0.5 + delta / (2.0 * e1)),
            (DressedIndex::Minus(1), 0.5 - delta / (2.0 * e1)),
        ] {
            let st = SectorState::pure(1, s);
            let run = integrate(&l, &DenseState::from_sector_state(&st), &grid, IntegrateOptions::default())
                .unwrap();
            let p0g = run.series.column(COL_P_0G).unwrap();
            for (k, &t) in grid.iter().enumerate() {
                let stay = (-0.2 * rate * t).exp();
                let out = evolve_diag_offres(st.diag(), t, &params, DEFAULT_K_MAX).unwrap();
                path_err = path_err
                    .max((out[s.index()] - stay).abs())
                    .max((out[0] - (1.0 - stay)).abs());
                oracle_err = oracle_err.max((p0g[k] - (1.0 - stay)).abs());
            }
        }
    }
    report(
        "4",
        path_err <= 1e-15 && oracle_err < 1e-6,
        format!("path sum max error {path_err:.3e} (<= 1e-15), microscopic oracle max error {oracle_err:.3e} (< 1e-6)"),
    );
}

/// Gauss-Legendre nodes and weights on [-1, 1].
fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    (1..=m)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (m as f64 + 0.5)).cos();
            loop {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=m {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    let w = 2.0 / ((1.0 - x * x) * dp * dp);
                    return (x, w);
                }
            }
        })
        .collect()
}

/// `F_j(u) = ∫₀^u e^{-a_j s} F_{j-1}(s) ds`, `F₀ = 1`, by nested
/// Gauss-Legendre quadrature.
fn nested_quadrature(rule: &[(f64, f64)], u: f64, rates: &[f64]) -> f64 {
    match rates.split_last() {
        None => 1.0,
        Some((&a, rest)) => rule
            .iter()
            .map(|&(x, w)| {
                let s = 0.5 * u * (x + 1.0);
                0.5 * u * w * (-a * s).exp() * nested_quadrature(rule, s, rest)
            })
            .sum(),
    }
}

#[test]
fn criterion_5_nested_integrals() {
    let rule = gauss_legendre(24);
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    let mut worst: f64 = 0.0;
    let mut degenerate = 0;
    for case in 0..100 {
        let k = rng.random_range(1..=4usize);
        let mut rates: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..3.0)).collect();
        match case % 4 {
            1 => rates[0] = 0.0,
            2 if k > 1 => rates[1] = rates[0],
            3 => rates.iter_mut().for_each(|r| *r = 0.0),
            _ => {}
        }
        if rates.contains(&0.0) || rates.windows(2).any(|w| w[0] == w[1]) {
            degenerate += 1;
        }
        let tau = rng.random_range(0.05..5.0);
        let want = nested_quadrature(&rule, tau, &rates);
        worst = worst.max((integral_in(tau, &rates) - want).abs());
    }
    report(
        "5",
        worst < 1e-8,
        format!("max |I_k recurrence - nested quadrature| = {worst:.3e} (< 1e-8) over 100 lists, {degenerate} degenerate"),
    );
}

fn sup_p0g_gap(init: Atom, photons: u32, delta: f64) -> f64 {
    let params = scaled(delta, 0.2);
    let grid = linear_grid(20.0, 401);
    let l = build_phenomenological(&params, 1).unwrap();
    let run = integrate(&l, &DenseState::bare_fock(init, photons, None), &grid, IntegrateOptions::default())
        .unwrap();
    let ph = run.series.column(COL_P_0G).unwrap();
    let st0 = SectorState::bare(&params, init, photons, None);
    grid.iter()
        .zip(ph)
        .map(|(&t, &p)| {
            let ms = evolve_offres(&st0, t, &params, DEFAULT_K_MAX).unwrap();
            (ms.population(DressedIndex::Ground) - p).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn criterion_6a_phenomenological_convergence() {
    let near = sup_p0g_gap(Atom::Ground, 1, 0.1);
    let far = sup_p0g_gap(Atom::Ground, 1, 1.0);
    report(
        "6a",
        far < near,
        format!("|g,1>: sup|P0g_ms - P0g_ph| = {far:.4e} at Δ=λ vs {near:.4e} at Δ=0.1λ (must shrink)"),
    );
}

#[test]
fn criterion_6b_excited_vacuum_slow_decay() {
    let t = 20.0;
    let detuned = scaled(1.0, 0.2);
    let st = SectorState::bare(&detuned, Atom::Excited, 0, None);
    let ms = evolve_offres(&st, t, &detuned, DEFAULT_K_MAX).unwrap().population(DressedIndex::Ground);
    let res = scaled(0.0, 0.2);
    let st = SectorState::bare(&res, Atom::Excited, 0, None);
    let at_zero = resonant::evolve(&st, t, &res).unwrap().population(DressedIndex::Ground);
    let ratio = at_zero / ms;
    report(
        "6b",
        ratio > 2.0,
        format!("|e,0>: P0g(λt=20) = {ms:.4} at Δ=λ vs {at_zero:.4} at Δ=0, ratio {ratio:.3} (must exceed 2)"),
    );
}

/// `(max |P_g - 1/2|` on the collapse plateau, `max |P_g - 1/2|` around the
/// first revival`)` for `α = 3`.
fn collapse_revival(times: &[f64], pg: &[f64]) -> (f64, f64) {
    let window = |lo: f64, hi: f64| {
        times
            .iter()
            .zip(pg)
            .filter(|(&t, _)| (lo..=hi).contains(&t))
            .map(|(_, &p)| (p - 0.5).abs())
            .fold(0.0, f64::max)
    };
    (window(4.0, 8.0), window(14.0, 24.0))
}

#[test]
fn criterion_7_collapse_and_revival() {
    let start = Instant::now();
    let alpha = 3.0;
    let grid = linear_grid(25.0, 1001);
    let analytic = |gamma: f64| {
        let params = scaled(0.0, gamma);
        let pg: Vec<f64> = grid
            .iter()
            .map(|&t| observables(&params, &resonant::coherent_solution(alpha, t, &params).unwrap()).p_g)
            .collect();
        pg
    };
    let slow = analytic(1e-4);
    let fast = analytic(1e-2);

    let params = scaled(0.0, 1e-4);
    let cutoff = coherent_cutoff(alpha);
    let l = build_microscopic(&params, cutoff).unwrap();
    let run = integrate(&l, &DenseState::coherent(alpha, cutoff), &grid, IntegrateOptions::default()).unwrap();
    let oracle = run.series.column(COL_P_G).unwrap();
    let gap = slow.iter().zip(oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let (plateau, revival) = collapse_revival(&grid, &slow);
    let (oracle_plateau, oracle_revival) = collapse_revival(&grid, oracle);
    let (_, damped) = collapse_revival(&grid, &fast);
    let secs = start.elapsed().as_secs_f64();
    let pass = plateau < 0.05
        && revival > 0.15
        && oracle_plateau < 0.05
        && oracle_revival > 0.15
        && damped <= 0.5 * revival
        && secs < 120.0;
    report(
        "7",
        pass,
        format!(
            "plateau |P_g-1/2| <= {plateau:.4} (oracle {oracle_plateau:.4}, < 0.05), revival {revival:.4} \
             (oracle {oracle_revival:.4}, > 0.15), γ=1e-2 revival {damped:.4} (<= half), \
             analytic-oracle gap {gap:.2e}, runtime {secs:.1} s"
        ),
    );
}

#[test]
fn criterion_8_property_suite() {
    let opts = IntegrateOptions { eigen_checks: true, ..Default::default() };
    let grid = linear_grid(10.0, 41);
    let mut drift: f64 = 0.0;
    let mut herm: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    let mut runs = 0;
    for delta in [0.0, 1.0, -2.0] {
        let params = scaled(delta, 0.2);
        let mut initial = vec![
            DenseState::bare_fock(Atom::Ground, 1, Some(3)),
            DenseState::bare_fock(Atom::Ground, 3, None),
            DenseState::bare_fock(Atom::Excited, 0, Some(3)),
        ];
        initial.push(DenseState::coherent(1.5, coherent_cutoff(1.5)));
        for rho0 in &initial {
            let gens: [Liouvillian; 2] = [
                build_microscopic(&params, rho0.cutoff()).unwrap(),
                build_phenomenological(&params, rho0.cutoff()).unwrap(),
            ];
            for l in &gens {
                let d = integrate(l, rho0, &grid, opts).unwrap().diagnostics;
                drift = drift.max(d.max_trace_drift);
                herm = herm.max(d.max_hermiticity_error);
                min_eig = min_eig.min(d.min_eigenvalue.unwrap());
                runs += 1;
            }
        }
    }

    // RK4 order: halving the step on a reference problem.
    let params = scaled(0.5, 0.3);
    let l = build_phenomenological(&params, 2).unwrap();
    let rho0 = DenseState::bare_fock(Atom::Ground, 2, None);
    let final_with = |h: f64| {
        let o = IntegrateOptions { max_step: Some(h), ..Default::default() };
        integrate(&l, &rho0, &[0.0, 2.0], o).unwrap().final_state.matrix().clone()
    };
    let reference = final_with(1e-3);
    let ratio = (final_with(0.2) - &reference).norm() / (final_with(0.1) - &reference).norm();

    report(
        "8",
        drift < 1e-8 && herm < 1e-12 && min_eig > -1e-7 && (12.0..20.0).contains(&ratio),
        format!(
            "{runs} runs: trace drift {drift:.2e} (< 1e-8), hermiticity {herm:.2e} (< 1e-12), \
             min eigenvalue {min_eig:.2e} (> -1e-7); RK4 error ratio {ratio:.2} (~16)"
        ),
    );
}

#[test]
fn criterion_9_delta_continuity() {
    let near = scaled(1e-6, 0.2);
    let exact = scaled(0.0, 0.2);
    let mut worst: f64 = 0.0;
    for n in 1..=8u32 {
        for atom in [Atom::Ground, Atom::Excited] {
            let st = SectorState::bare(&exact, atom, n, None);
            for t in linear_grid(20.0, 41) {
                let a = evolve_diag_offres(st.diag(), t, &near, DEFAULT_K_MAX).unwrap();
                let b = resonant::evolve_diag(&PiBasisVector::from_populations(&st), t, &exact)
                    .unwrap()
                    .populations();
                for (x, y) in a.iter().zip(&b) {
                    worst = worst.max((x - y).abs());
                }
            }
        }
    }
    report("9", worst < 1e-5, format!("max population gap at Δ=1e-6λ vs Δ=0: {worst:.3e} (< 1e-5)"));
}
