//! Acceptance criteria. Each test prints one `criterion NN: PASS|FAIL` line.
//!
//! The heavy tests share a lock so that only one large field set is alive
//! at a time.

mod common;

use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use quantum_bgk::config::load_config;
use quantum_bgk::equilibrium::{self, classify, ParameterBounds};
use quantum_bgk::fixed_point::{
    contraction_estimate, initial_iterate, lambda_check, random_member, transverse_response, InitialGuess,
};
use quantum_bgk::grid::{transverse_momentum, weighted_distance};
use quantum_bgk::theorem::{self, boundary_constants, grid_constants};
use quantum_bgk::transport::{apply_solution_operator, apply_solution_operator_with, kernel_integral};
use quantum_bgk::{
    picard_solve, stats, BoundaryData, DistributionField, EquilibriumParams, GridSpec, MomentTriple, PhaseGrid,
    QuadratureSpec, Regime, SolverConfig, Statistics,
};

use common::{boson_series, boson_threshold_series, heavy_lock, polylog, radial_oracle, zeta};

const STATS: [Statistics; 2] = [Statistics::Boson, Statistics::Fermion];

/// Prints the summary line, then fails the test if any check failed.
fn verdict(id: u32, name: &str, start: Instant, limit: Duration, failures: &[String], detail: &str) {
    let elapsed = start.elapsed();
    let mut failures = failures.to_vec();
    if elapsed > limit {
        failures.push(format!("runtime {:.2?} exceeds {:.0?}", elapsed, limit));
    }
    let status = if failures.is_empty() { "PASS" } else { "FAIL" };
    // Written to the raw handle so the line shows up without --nocapture.
    let mut out = std::io::stderr().lock();
    let _ = writeln!(out, "criterion {id:02}: {status} {name} ({elapsed:.2?}) {detail}");
    for f in &failures {
        let _ = writeln!(out, "    {f}");
    }
    assert!(failures.is_empty(), "criterion {id} failed: {failures:?}");
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn q() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn config(name: &str) -> SolverConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name);
    load_config(&path).unwrap()
}

fn example() -> BoundaryData {
    BoundaryData::slab_example(1.0, 1.0, 10.0, 11.0).unwrap()
}

#[test]
fn criterion_01_slab_example_constants() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let tc = boundary_constants(&example(), 100.0, Statistics::Boson).unwrap();
    let a_u_err = rel(tc.a_u, 8.0 * PI);
    if !(a_u_err <= 1e-8) {
        failures.push(format!("a_u = {} differs from 8π by {a_u_err:e}", tc.a_u));
    }
    let k_bound = PI * PI * (-16.0 * PI / 1000.0).exp() * 441.0;
    if !(tc.k >= k_bound) {
        failures.push(format!("k = {} below {k_bound}", tc.k));
    }
    let beta0 = stats::threshold(Statistics::Boson, &q()).unwrap();
    if !(tc.ratio < beta0) {
        failures.push(format!("ratio {} not below beta_B(0) = {beta0}", tc.ratio));
    }
    let detail = format!(
        "a_u={:.12} k={:.6} (bound {k_bound:.6}) ratio={:.6} < {beta0:.6}",
        tc.a_u, tc.k, tc.ratio
    );
    verdict(
        1,
        "slab example constants",
        start,
        Duration::from_secs(1),
        &failures,
        &detail,
    );
}

#[test]
fn criterion_02_radial_integrals_match_oracles() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for stat in STATS {
        for j in 0..20 {
            let c = match stat {
                Statistics::Boson => 5.0 * (j as f64 / 19.0).powi(2),
                Statistics::Fermion => -8.0 + 14.0 * j as f64 / 19.0,
            };
            let n = stats::mass_integral(c, stat, &q()).unwrap();
            let e = stats::energy_integral(c, stat, &q()).unwrap();
            let mut oracles = vec![("simpson", radial_oracle(c, stat, 2), radial_oracle(c, stat, 4))];
            if stat == Statistics::Boson {
                let (sn, se) = boson_series(c);
                oracles.push(("series", sn, se));
            } else if c > 0.5 {
                // Fermi integrals as alternating polylog series.
                let z = (-c).exp();
                let p = PI.powf(1.5);
                let alt = |s: f64| polylog(s, z) - 2.0 * polylog(s, z * z) / 2f64.powf(s);
                oracles.push(("series", p * alt(1.5), 1.5 * p * alt(2.5)));
            }
            for (name, on, oe) in oracles {
                let err = rel(n, on).max(rel(e, oe));
                worst = worst.max(err);
                if !(err <= 1e-9) {
                    failures.push(format!("{stat} c={c}: {name} oracle relative error {err:e}"));
                }
            }
        }
    }
    let beta0 = stats::threshold(Statistics::Boson, &q()).unwrap();
    let series = boson_threshold_series();
    let beta_err = rel(beta0, series);
    if !(beta_err <= 1e-8) {
        failures.push(format!("beta_B(0) = {beta0} vs series {series}: {beta_err:e}"));
    }
    let detail = format!(
        "worst integral error {worst:.2e}, beta_B(0) error {beta_err:.2e} (zeta(3/2)={:.12})",
        zeta(1.5)
    );
    verdict(
        2,
        "radial integrals vs oracles",
        start,
        Duration::from_secs(5),
        &failures,
        &detail,
    );
}

#[test]
fn criterion_03_beta_inverse_round_trips() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for stat in STATS {
        let top = stats::threshold(stat, &q()).unwrap();
        for _ in 0..100 {
            // Targets spread over several decades below the threshold.
            let y = top * 10f64.powf(-rng.gen_range(0.0..4.0));
            if stat == Statistics::Fermion && y >= top {
                continue;
            }
            match stats::beta_inverse(y, stat, &q()) {
                Ok(c) => {
                    let back = stats::beta(c, stat, &q()).unwrap();
                    let err = rel(back, y);
                    worst = worst.max(err);
                    if !(err <= 1e-8) || c < stat.threshold_point() {
                        failures.push(format!("{stat} y={y}: c={c} gives beta {back} ({err:e})"));
                    }
                }
                Err(e) => failures.push(format!("{stat} y={y} rejected: {e}")),
            }
        }
        for bad in [0.0, -1.0, top * 1.001, 10.0 * top, f64::NAN, f64::INFINITY] {
            if stats::beta_inverse(bad, stat, &q()).is_ok() {
                failures.push(format!("{stat} accepted out-of-range target {bad}"));
            }
        }
    }
    if stats::beta_inverse(
        stats::threshold(Statistics::Fermion, &q()).unwrap(),
        Statistics::Fermion,
        &q(),
    )
    .is_ok()
    {
        failures.push("fermion threshold accepted at the open endpoint".into());
    }
    let detail = format!("worst round-trip error {worst:.2e}");
    verdict(
        3,
        "monotone inversion",
        start,
        Duration::from_secs(5),
        &failures,
        &detail,
    );
}

#[test]
fn criterion_04_equilibrium_moment_round_trip() {
    let _lock = heavy_lock();
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_params: f64 = 0.0;
    for stat in STATS {
        for _ in 0..100 {
            let a = 10f64.powf(rng.gen_range(-1.5..1.0));
            let c = match stat {
                Statistics::Boson => 10f64.powf(rng.gen_range(-2.0..0.8)),
                Statistics::Fermion => rng.gen_range(-1.09..6.0),
            };
            let drift = [
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            ];
            let params = EquilibriumParams::regular(stat, a, c, drift).unwrap();
            let m = equilibrium::analytic_moments(&params, &q()).unwrap();
            match equilibrium::solve_parameters(&m, stat, &q()) {
                Ok(back) => {
                    let scale = 1.0 + drift.iter().map(|u| u.abs()).fold(0.0, f64::max);
                    let err = [
                        rel(back.a, a),
                        (back.c - c).abs() / c.abs().max(1.0),
                        (0..3)
                            .map(|i| (back.drift[i] - drift[i]).abs() / scale)
                            .fold(0.0, f64::max),
                    ]
                    .into_iter()
                    .fold(0.0, f64::max);
                    worst_params = worst_params.max(err);
                    if !(err <= 1e-7) {
                        failures.push(format!("{stat} a={a} c={c} u={drift:?}: recovered {back:?} ({err:e})"));
                    }
                }
                Err(e) => failures.push(format!("{stat} a={a} c={c}: {e}")),
            }
        }
    }

    // Gridded moments on the default grid, in the parameter range it resolves.
    let grid = PhaseGrid::build(GridSpec {
        nx: 1,
        ..GridSpec::default()
    })
    .unwrap();
    let mut worst_grid: f64 = 0.0;
    for stat in STATS {
        for _ in 0..20 {
            let a = rng.gen_range(0.5..2.0);
            let c = match stat {
                Statistics::Boson => rng.gen_range(0.2..3.0),
                Statistics::Fermion => rng.gen_range(-1.0..3.0),
            };
            let drift = [
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
            ];
            let params = EquilibriumParams::regular(stat, a, c, drift).unwrap();
            let exact = equilibrium::analytic_moments(&params, &q()).unwrap();
            let values = grid.sample(|p| equilibrium::evaluate(&params, p).unwrap());
            let m = grid.slice_moments(&values);
            let err = [
                rel(m.mass, exact.mass),
                rel(m.energy, exact.energy),
                (0..3)
                    .map(|i| (m.momentum[i] - exact.momentum[i]).abs() / exact.mass)
                    .fold(0.0, f64::max),
            ]
            .into_iter()
            .fold(0.0, f64::max);
            worst_grid = worst_grid.max(err);
            if !(err <= 1e-6) {
                failures.push(format!("{stat} a={a} c={c}: gridded moments off by {err:e}"));
            }
        }
    }
    let detail = format!("parameter round trip {worst_params:.2e}, gridded moments {worst_grid:.2e}");
    verdict(
        4,
        "equilibrium moment round trip",
        start,
        Duration::from_secs(30),
        &failures,
        &detail,
    );
}

#[test]
fn criterion_05_global_equilibrium_is_fixed() {
    let _lock = heavy_lock();
    let start = Instant::now();
    let mut failures = Vec::new();
    let grid = PhaseGrid::build(GridSpec::default()).unwrap();
    let mut worst: f64 = 0.0;
    for stat in STATS {
        let params = EquilibriumParams::regular(stat, 1.0, 1.0, [0.0; 3]).unwrap();
        let traces = Arc::new(BoundaryData::equilibrium_traces(&params, grid.clone()).unwrap());
        let f = DistributionField::from_fn(grid.clone(), |_, p| equilibrium::evaluate(&params, p).unwrap())
            .with_boundary(traces, stat);
        for tau in [1.0, 1e2, 1e4] {
            let phi = apply_solution_operator(&f, tau).unwrap();
            let d = weighted_distance(&phi, &f).unwrap();
            worst = worst.max(d);
            if !(d <= 1e-6) {
                failures.push(format!("{stat} tau={tau}: d = {d:e}"));
            }
        }
    }
    let detail = format!("worst d(Φf, f) = {worst:.2e}");
    verdict(
        5,
        "exact fixed point",
        start,
        Duration::from_secs(60),
        &failures,
        &detail,
    );
}

#[test]
fn criterion_06_example_solves_end_to_end() {
    let _lock = heavy_lock();
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut details = Vec::new();
    for name in ["slab_boson.toml", "slab_fermion.toml"] {
        let cfg = config(name);
        let stat = cfg.statistics;
        let grid = cfg.build_grid().unwrap();
        let boundary = cfg.build_boundary(&grid).unwrap();
        let exact = boundary_constants(&boundary, cfg.tau, stat).unwrap();
        if !exact.admissible() {
            failures.push(format!("{stat}: admissibility fails, ratio {}", exact.ratio));
        }
        let opts = cfg.solver_options();
        let sol = picard_solve(boundary.clone(), grid.clone(), cfg.tau, stat, &opts).unwrap();
        let r = &sol.report;
        if !r.converged || !r.lambda_violations.is_empty() {
            failures.push(format!(
                "{stat}: converged={} violations={:?}",
                r.converged, r.lambda_violations
            ));
        }
        for rec in &r.records {
            let m = rec.margins;
            if m.nonnegative < 0.0 || m.mass < 0.0 || m.energy < 0.0 || m.gram < 0.0 {
                failures.push(format!("{stat}: iterate {} leaves Λ: {m:?}", rec.iteration));
            }
        }

        // Geometric history: successive ratios bounded by the contraction
        // estimate plus a small allowance.
        let est = contraction_estimate(
            boundary.clone(),
            grid.clone(),
            cfg.tau,
            stat,
            &cfg.probe_options(),
            &opts.quadrature,
        )
        .unwrap();
        let h = &r.distance_history;
        let ratios: Vec<f64> = h.windows(2).map(|w| w[1] / w[0]).collect();
        for (n, ratio) in ratios.iter().enumerate().skip(1) {
            if !(*ratio <= est.estimate + 0.05) {
                failures.push(format!(
                    "{stat}: step {} ratio {ratio:.4} above estimate {:.4}",
                    n + 2,
                    est.estimate
                ));
            }
        }

        // Bounds against the exact constants and the regime at every node.
        for row in &r.profiles {
            let m = MomentTriple::new(row.mass, row.momentum, row.energy).unwrap();
            let ok = m.mass >= exact.a_l
                && m.mass <= exact.a_u
                && m.energy >= exact.c_l
                && m.energy <= exact.c_u
                && m.gram() >= exact.k;
            if !ok {
                failures.push(format!("{stat}: bounds fail at x={}: {m:?}", row.x));
            }
            if classify(&m, stat, &q()).unwrap() != Regime::Regular {
                failures.push(format!("{stat}: x={} is not regular", row.x));
            }
        }

        let residual = apply_solution_operator_with(&sol.field, cfg.tau, &opts.quadrature)
            .unwrap()
            .field;
        let d = weighted_distance(&residual, &sol.field).unwrap();
        if !(d <= 2.0 * opts.tolerance) {
            failures.push(format!("{stat}: residual d(Φf*, f*) = {d:e}"));
        }
        let min_gram = r
            .profiles
            .iter()
            .map(|p| p.energy * p.mass - p.momentum.iter().map(|v| v * v).sum::<f64>());
        details.push(format!(
            "{stat}: {} iterations, ratios {:?}, estimate {:.4}, residual {d:.1e}, min EN-|P|² {:.1} >= k {:.1}",
            r.iterations,
            ratios.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>(),
            est.estimate,
            min_gram.fold(f64::INFINITY, f64::min),
            exact.k
        ));
    }
    verdict(
        6,
        "example end to end",
        start,
        Duration::from_secs(300),
        &failures,
        &details.join("; "),
    );
}

#[test]
fn criterion_07_contraction_scaling() {
    let _lock = heavy_lock();
    let start = Instant::now();
    let mut failures = Vec::new();
    let cfg = config("slab_boson.toml");
    let stat = cfg.statistics;
    let grid = cfg.build_grid().unwrap();
    let boundary = cfg.build_boundary(&grid).unwrap();
    let taus = [1e2, 1e3, 1e4];
    let scale = |tau: f64| tau / (tau.ln() + 1.0);

    let mut estimates = Vec::new();
    for tau in taus {
        let est = contraction_estimate(boundary.clone(), grid.clone(), tau, stat, &cfg.probe_options(), &q()).unwrap();
        estimates.push(est.estimate);
    }
    if !estimates.windows(2).all(|w| w[1] < w[0]) {
        failures.push(format!("estimates not strictly decreasing: {estimates:?}"));
    }
    let scaled: Vec<f64> = estimates.iter().zip(taus).map(|(e, t)| e * scale(t)).collect();
    let spread = scaled.iter().copied().fold(0.0, f64::max) / scaled.iter().copied().fold(f64::INFINITY, f64::min);
    if !(spread < 3.0) {
        failures.push(format!("scaled contraction spread {spread:.3}: {scaled:?}"));
    }

    // The discrete kernel integral on a p1 grid that resolves p1 ~ a_l x / τ.
    let tc = boundary_constants(&boundary, taus[0], stat).unwrap();
    let bounds = ParameterBounds::from_moment_bounds(tc.a_l, tc.a_u, tc.c_u, tc.k, stat, &q()).unwrap();
    let decay = 0.5 * bounds.a_lower;
    let fine = PhaseGrid::build(GridSpec::dyadic(64, 32.0, 24, 8, &[1.0], 2)).unwrap();
    let kernel: Vec<f64> = taus.iter().map(|&t| kernel_integral(&fine, tc.a_l, decay, t)).collect();
    let kernel_scaled: Vec<f64> = kernel.iter().zip(taus).map(|(k, t)| k * scale(t)).collect();
    // Single constant: geometric mean of the scaled values.
    let fitted = (kernel_scaled.iter().map(|v| v.ln()).sum::<f64>() / 3.0).exp();
    let kernel_spread =
        kernel_scaled.iter().copied().fold(0.0, f64::max) / kernel_scaled.iter().copied().fold(f64::INFINITY, f64::min);
    if !kernel.windows(2).all(|w| w[1] < w[0]) || !(kernel_spread < 3.0) {
        failures.push(format!("kernel integral {kernel:?} scaled {kernel_scaled:?}"));
    }
    let detail = format!(
        "estimates {estimates:.4?}, scaled {scaled:.3?} (spread {spread:.2}); kernel scaled {kernel_scaled:.4?} \
         fitted constant {fitted:.4} (spread {kernel_spread:.2})"
    );
    verdict(
        7,
        "contraction scaling",
        start,
        Duration::from_secs(600),
        &failures,
        &detail,
    );
}

#[test]
fn criterion_08_transverse_momentum_decay() {
    let _lock = heavy_lock();
    let start = Instant::now();
    let mut failures = Vec::new();
    let cfg = config("slab_boson.toml");
    let stat = cfg.statistics;
    let grid = cfg.build_grid().unwrap();
    let boundary = cfg.build_boundary(&grid).unwrap();
    let mut response = Vec::new();
    let mut converged = Vec::new();
    for tau in [1e2, 1e4] {
        response.push(transverse_response(boundary.clone(), grid.clone(), tau, stat, cfg.seed, &q()).unwrap());
        let sol = picard_solve(boundary.clone(), grid.clone(), tau, stat, &cfg.solver_options()).unwrap();
        if !sol.report.converged {
            failures.push(format!("tau={tau}: solve did not converge"));
        }
        converged.push(transverse_momentum(&sol.field));
    }
    let drop = response[0] / response[1];
    if !(drop >= 5.0) {
        failures.push(format!("transverse response drops by {drop:.2} only: {response:?}"));
    }
    let detail = format!(
        "response {:.4e} -> {:.4e} (factor {drop:.1}); converged solution {:.1e} -> {:.1e}",
        response[0], response[1], converged[0], converged[1]
    );
    verdict(
        8,
        "transverse momentum decay",
        start,
        Duration::from_secs(600),
        &failures,
        &detail,
    );
}

fn small_slab_grid() -> Arc<PhaseGrid> {
    let spec = GridSpec::dyadic(16, 16.0, 6, 4, &[0.125, 0.25, 0.5, 1.0], 4).with_p1_breakpoints(&[10.0, 11.0]);
    PhaseGrid::build(spec).unwrap()
}

#[test]
fn criterion_09_lambda_is_convex() {
    let _lock = heavy_lock();
    let start = Instant::now();
    let mut failures = Vec::new();
    let grid = small_slab_grid();
    let boundary = Arc::new(example());
    let tau = 100.0;
    let stat = Statistics::Boson;
    let tc = grid_constants(&boundary, &grid, tau, stat).unwrap();
    let anchor = initial_iterate(boundary, grid.clone(), tau, stat, &tc, InitialGuess::Attenuated).unwrap();
    let phi = apply_solution_operator(&anchor, tau).unwrap();
    let mut pool = vec![anchor.clone(), phi.clone()];
    let mut seed = 0;
    while pool.len() < 12 && seed < 100 {
        let base = if seed % 2 == 0 { &anchor } else { &phi };
        if let Some(f) = random_member(base, &tc, seed) {
            pool.push(f);
        }
        seed += 1;
    }
    for (i, f) in pool.iter().enumerate() {
        if !lambda_check(f, &tc).passed() {
            failures.push(format!("pool member {i} is outside Λ"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_gram = f64::INFINITY;
    let mut checked = 0;
    for _ in 0..50 {
        let i = rng.gen_range(0..pool.len());
        let j = (i + rng.gen_range(1..pool.len())) % pool.len();
        for theta in [0.25, 0.5, 0.75] {
            let h = pool[i].convex_combination(&pool[j], theta).unwrap();
            let report = lambda_check(&h, &tc);
            worst_gram = worst_gram.min(report.worst.gram);
            checked += 1;
            if !report.passed() {
                failures.push(format!("pair ({i}, {j}) theta={theta}: {:?}", report.violations));
            }
        }
    }
    let detail = format!(
        "{} pool members, {checked} combinations, worst gram margin {worst_gram:.3}",
        pool.len()
    );
    verdict(9, "convexity of Λ", start, Duration::from_secs(60), &failures, &detail);
}

/// A random moment triple inside the bounds of `tc`, with momentum along `p₁`.
fn random_moments(rng: &mut ChaCha8Rng, tc: &theorem::TheoremConstants) -> MomentTriple {
    let n = rng.gen_range(tc.a_l * 1.05..tc.a_u * 0.95);
    let e = rng.gen_range(tc.c_l * 1.05..tc.c_u * 0.95);
    // Keeps E N - |P|² above 1.1 k.
    let p1 = rng.gen_range(-1.0..1.0) * (e * n - 1.1 * tc.k).max(0.0).sqrt();
    MomentTriple::new(n, [p1, 0.0, 0.0], e).unwrap()
}

#[test]
fn criterion_10_equilibrium_continuity() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let stat = Statistics::Boson;
    let tc = boundary_constants(&example(), 100.0, stat).unwrap();
    let bounds = ParameterBounds::from_moment_bounds(tc.a_l, tc.a_u, tc.c_u, tc.k, stat, &q()).unwrap();
    let weight = 0.5 * bounds.a_lower;
    // K depends on (p₁, |p⊥|) when the drift is along p₁; the sample extends
    // past where the weighted difference has decayed.
    let reach = (40.0 / (bounds.a_lower - weight)).sqrt();
    let step = reach / 200.0;
    let samples: Vec<(f64, f64)> = (-200..=200)
        .flat_map(|i| (0..=200).map(move |j| (i as f64 * step, j as f64 * step)))
        .collect();
    let nodes = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(10);

    let sup_weighted = |fa: &[EquilibriumParams], fb: &[EquilibriumParams]| -> f64 {
        let mut best: f64 = 0.0;
        for (pa, pb) in fa.iter().zip(fb) {
            for &(p1, pt) in &samples {
                let p = [p1, pt, 0.0];
                let diff = equilibrium::evaluate(pa, &p).unwrap() - equilibrium::evaluate(pb, &p).unwrap();
                best = best.max(diff.abs() * (weight * (p1 * p1 + pt * pt)).exp());
            }
        }
        best
    };
    let moment_distance = |a: &[MomentTriple], b: &[MomentTriple]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| {
                (x.mass - y.mass).abs()
                    + (0..3)
                        .map(|i| (x.momentum[i] - y.momentum[i]).powi(2))
                        .sum::<f64>()
                        .sqrt()
                    + (x.energy - y.energy).abs()
            })
            .fold(0.0, f64::max)
    };
    let params_of = |ms: &[MomentTriple]| -> Vec<EquilibriumParams> {
        ms.iter()
            .map(|m| equilibrium::solve_parameters(m, stat, &q()).unwrap())
            .collect()
    };

    let mut worst_change: f64 = 1.0;
    let mut lipschitz: f64 = 0.0;
    for pair in 0..50 {
        let base: Vec<MomentTriple> = (0..nodes).map(|_| random_moments(&mut rng, &tc)).collect();
        let direction: Vec<[f64; 3]> = (0..nodes)
            .map(|_| {
                [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ]
            })
            .collect();
        let shifted = |delta: f64| -> Vec<MomentTriple> {
            base.iter()
                .zip(&direction)
                .map(|(m, v)| {
                    MomentTriple::new(
                        m.mass * (1.0 + delta * v[0]),
                        [m.momentum[0] + delta * m.mass * v[1], 0.0, 0.0],
                        m.energy * (1.0 + delta * v[2]),
                    )
                    .unwrap()
                })
                .collect()
        };
        let kf = params_of(&base);
        let mut ratios = Vec::new();
        for delta in [1e-3, 5e-4] {
            let g = shifted(delta);
            for m in &g {
                if classify(m, stat, &q()).unwrap() != Regime::Regular {
                    failures.push(format!("pair {pair}: perturbed moments left the regular regime"));
                }
            }
            ratios.push(sup_weighted(&kf, &params_of(&g)) / moment_distance(&base, &g));
        }
        let change = ratios[0].max(ratios[1]) / ratios[0].min(ratios[1]);
        worst_change = worst_change.max(change);
        lipschitz = lipschitz.max(ratios[0]);
        if !(change <= 2.0) || !ratios.iter().all(|r| r.is_finite() && *r > 0.0) {
            failures.push(format!("pair {pair}: ratios {ratios:?}"));
        }
    }
    let detail = format!(
        "C = {weight:.3e}, largest Lipschitz ratio {lipschitz:.3e}, worst change under halving {worst_change:.4}"
    );
    verdict(
        10,
        "equilibrium continuity",
        start,
        Duration::from_secs(60),
        &failures,
        &detail,
    );
}
