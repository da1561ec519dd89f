//! Picard iteration `f ← Φ(f)` on the solution set `Λ`, membership checks
//! for `Λ`, and the empirical contraction factor of `Φ`.

use log::{debug, info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::boundary::BoundaryData;
use crate::equilibrium::{self, Vec3};
use crate::error::{validation, Error, Result};
use crate::grid::{transverse_momentum, weighted_distance, DistributionField, PhaseGrid};
use crate::stats::{self, QuadratureSpec, Statistics};
use crate::theorem::{self, TheoremConstants};
use crate::transport::{self, apply_solution_operator_with};

/// Relative slack allowed on the bounds of `Λ` for quadrature roundoff.
pub const LAMBDA_SLACK: f64 = 1e-10;

/// Margins of one slab node; all are `>= 0` for a member of `Λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceMargins {
    pub x: f64,
    pub min_value: f64,
    pub mass_lower: f64,
    pub mass_upper: f64,
    pub energy_lower: f64,
    pub energy_upper: f64,
    /// `E N - |P|² - k`.
    pub gram: f64,
}

/// Worst margin of each condition over the slab.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionMargins {
    pub nonnegative: f64,
    pub mass: f64,
    pub energy: f64,
    pub gram: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaReport {
    pub per_x: Vec<SliceMargins>,
    pub worst: ConditionMargins,
    /// `(x-index, p-index)` of the smallest value.
    pub min_location: (usize, usize),
    /// Names of the failed conditions, with location.
    pub violations: Vec<String>,
}

impl LambdaReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks nonnegativity, the mass and energy bounds, and the lower bound
/// on `E N - |P|²` at every slab node.
pub fn lambda_check(f: &DistributionField, tc: &TheoremConstants) -> LambdaReport {
    let (min_value, min_ix, min_ip) = f.min_value();
    let mut per_x = Vec::with_capacity(f.grid.x_count());
    for (ix, m) in f.raw_moments().iter().enumerate() {
        let slice = f.slice(ix);
        per_x.push(SliceMargins {
            x: f.grid.x[ix],
            min_value: slice.iter().copied().fold(f64::INFINITY, f64::min),
            mass_lower: m.mass - tc.a_l,
            mass_upper: tc.a_u - m.mass,
            energy_lower: m.energy - tc.c_l,
            energy_upper: tc.c_u - m.energy,
            gram: m.gram() - tc.k,
        });
    }
    let min_of = |g: fn(&SliceMargins) -> f64| per_x.iter().map(g).fold(f64::INFINITY, f64::min);
    let worst = ConditionMargins {
        nonnegative: min_value,
        mass: min_of(|s| s.mass_lower.min(s.mass_upper)),
        energy: min_of(|s| s.energy_lower.min(s.energy_upper)),
        gram: min_of(|s| s.gram),
    };

    let mut violations = Vec::new();
    if min_value < 0.0 {
        violations.push(format!("(A) value {min_value:e} at x-index {min_ix}, p-index {min_ip}"));
    }
    let checks: [(&str, f64, fn(&SliceMargins) -> f64); 5] = [
        ("(B) mass lower", tc.a_l, |s| s.mass_lower),
        ("(B) mass upper", tc.a_u, |s| s.mass_upper),
        ("(B) energy lower", tc.c_l, |s| s.energy_lower),
        ("(B) energy upper", tc.c_u, |s| s.energy_upper),
        ("(C) gram", tc.k, |s| s.gram),
    ];
    for (name, scale, margin) in checks {
        let slack = -LAMBDA_SLACK * scale.abs();
        if let Some((ix, s)) = per_x.iter().enumerate().find(|(_, s)| !(margin(s) >= slack)) {
            violations.push(format!("{name} margin {:e} at x-index {ix}", margin(s)));
        }
    }
    LambdaReport {
        per_x,
        worst,
        min_location: (min_ix, min_ip),
        violations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaPolicy {
    /// Stop at the first iterate outside `Λ`.
    #[default]
    Abort,
    /// Log and keep iterating.
    Warn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialGuess {
    /// Inflow data attenuated along characteristics with the density `a_u`.
    #[default]
    Attenuated,
    /// Inflow data copied unattenuated to every slab node.
    Boundary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub tolerance: f64,
    pub max_iters: usize,
    pub lambda_policy: LambdaPolicy,
    pub initial_guess: InitialGuess,
    pub quadrature: QuadratureSpec,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iters: 200,
            lambda_policy: LambdaPolicy::Abort,
            initial_guess: InitialGuess::Attenuated,
            quadrature: QuadratureSpec::default(),
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || !self.tolerance.is_finite() {
            return Err(validation("tolerance", "must be a positive finite number"));
        }
        if self.max_iters == 0 {
            return Err(validation("max_iters", "must be positive"));
        }
        self.quadrature.validate()
    }
}

/// Moments and equilibrium parameters at one slab node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub x: f64,
    pub mass: f64,
    pub momentum: Vec3,
    pub energy: f64,
    /// `NaN` when the node does not admit a regular equilibrium.
    pub a: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub distance: f64,
    pub margins: ConditionMargins,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub converged: bool,
    pub iterations: usize,
    pub final_distance: f64,
    pub distance_history: Vec<f64>,
    pub lambda_violations: Vec<(usize, String)>,
    pub profiles: Vec<ProfileRow>,
    pub records: Vec<IterationRecord>,
    /// Margins of the initial iterate.
    pub initial_margins: ConditionMargins,
}

impl SolutionReport {
    /// Turns a failed run into the matching error.
    pub fn ensure_converged(&self) -> Result<()> {
        if let Some((iterate, condition)) = self.lambda_violations.first() {
            return Err(Error::LambdaViolation {
                iterate: *iterate,
                condition: condition.clone(),
            });
        }
        if !self.converged {
            return Err(Error::NotConverged {
                iterations: self.iterations,
                distance: self.final_distance,
            });
        }
        Ok(())
    }
}

/// The final iterate together with its report.
#[derive(Debug, Clone)]
pub struct Solution {
    pub report: SolutionReport,
    pub field: DistributionField,
    /// Constants integrated on the solver grid, used for the `Λ` checks.
    pub constants: TheoremConstants,
}

/// Starting iterate selected by `guess`.
pub fn initial_iterate(
    boundary: Arc<BoundaryData>,
    grid: Arc<PhaseGrid>,
    tau: f64,
    stat: Statistics,
    tc: &TheoremConstants,
    guess: InitialGuess,
) -> Result<DistributionField> {
    match guess {
        InitialGuess::Attenuated => transport::attenuated_boundary(boundary, grid, stat, tc.a_u, tau, false),
        InitialGuess::Boundary => transport::extended_boundary(boundary, grid, stat),
    }
}

/// Iterates `f_{n+1} = Φ(f_n)` until `d(f_{n+1}, f_n) <= tolerance`.
///
/// Non-convergence and `Λ` violations are recorded in the report rather
/// than returned as errors (see [`SolutionReport::ensure_converged`]);
/// failures inside `Φ`, such as a non-regular equilibrium, are errors.
pub fn picard_solve(
    boundary: Arc<BoundaryData>,
    grid: Arc<PhaseGrid>,
    tau: f64,
    stat: Statistics,
    opts: &SolverOptions,
) -> Result<Solution> {
    opts.validate()?;
    let tc = theorem::grid_constants(&boundary, &grid, tau, stat)?;
    let mut f = initial_iterate(boundary, grid.clone(), tau, stat, &tc, opts.initial_guess)?;

    let initial = lambda_check(&f, &tc);
    let mut violations: Vec<(usize, String)> = initial.violations.iter().map(|v| (0, v.clone())).collect();
    let mut records = Vec::new();
    let mut converged = false;
    let abort = |v: &[(usize, String)]| opts.lambda_policy == LambdaPolicy::Abort && !v.is_empty();

    if !abort(&violations) {
        for iteration in 1..=opts.max_iters {
            let next = apply_solution_operator_with(&f, tau, &opts.quadrature)?.field;
            let distance = weighted_distance(&next, &f)?;
            let check = lambda_check(&next, &tc);
            debug!("iteration {iteration}: distance {distance:e}");
            records.push(IterationRecord {
                iteration,
                distance,
                margins: check.worst,
            });
            for v in &check.violations {
                warn!("iterate {iteration} outside the solution set: {v}");
                violations.push((iteration, v.clone()));
            }
            f = next;
            if !distance.is_finite() {
                break;
            }
            if distance <= opts.tolerance {
                converged = true;
                break;
            }
            if abort(&violations) {
                break;
            }
        }
    }

    let final_distance = records.last().map_or(f64::INFINITY, |r| r.distance);
    let converged = converged && violations.is_empty();
    info!(
        "picard: {} after {} iterations, distance {final_distance:e}",
        if converged { "converged" } else { "stopped" },
        records.len()
    );
    let report = SolutionReport {
        converged,
        iterations: records.len(),
        final_distance,
        distance_history: records.iter().map(|r| r.distance).collect(),
        lambda_violations: violations,
        profiles: profiles(&f, stat, &opts.quadrature)?,
        records,
        initial_margins: initial.worst,
    };
    Ok(Solution {
        report,
        field: f,
        constants: tc,
    })
}

/// Moments and equilibrium parameters at every slab node of `f`.
pub fn profiles(f: &DistributionField, stat: Statistics, q: &QuadratureSpec) -> Result<Vec<ProfileRow>> {
    let threshold = stats::threshold(stat, q)?;
    Ok(f.raw_moments()
        .iter()
        .zip(&f.grid.x)
        .map(|(m, &x)| {
            let (a, c) = match equilibrium::solve_parameters_with_threshold(m, stat, q, threshold) {
                Ok(p) => (p.a, p.c),
                Err(_) => (f64::NAN, f64::NAN),
            };
            ProfileRow {
                x,
                mass: m.mass,
                momentum: m.momentum,
                energy: m.energy,
                a,
                c,
            }
        })
        .collect())
}

/// Settings for the probe fields of [`contraction_estimate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeOptions {
    pub count: usize,
    pub seed: u64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self { count: 6, seed: 42 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionEstimate {
    pub estimate: f64,
    /// `d(Φf, Φg) / d(f, g)` for each counted pair.
    pub ratios: Vec<f64>,
    /// Pairs at distance zero.
    pub skipped: usize,
    /// Probes that could not be placed inside `Λ`.
    pub unplaced: usize,
}

/// A nonnegative Gaussian bump in momentum, modulated in `x`, normalised to
/// unit mass on the grid.
struct Bump {
    center: Vec3,
    width: f64,
    phase: f64,
    wavenumber: f64,
}

impl Bump {
    fn random(rng: &mut ChaCha8Rng, p_extent: f64, transverse: bool) -> Self {
        let mut center = [0.0; 3];
        for c in center.iter_mut() {
            *c = rng.gen_range(-0.5..0.5) * p_extent;
        }
        if transverse {
            center[1] = center[1].abs().max(0.25 * p_extent);
            center[2] = center[2].abs().max(0.25 * p_extent);
        }
        Self {
            center,
            width: rng.gen_range(0.5..1.5),
            phase: rng.gen_range(0.0..2.0 * PI),
            wavenumber: rng.gen_range(1..4) as f64,
        }
    }

    fn profile(&self, x: f64) -> f64 {
        1.0 + 0.5 * (2.0 * PI * self.wavenumber * x + self.phase).sin()
    }

    fn momentum(&self, grid: &PhaseGrid) -> (Vec<f64>, f64, f64) {
        let s2 = 2.0 * self.width * self.width;
        let g = grid.sample(|p| {
            let d = [p[0] - self.center[0], p[1] - self.center[1], p[2] - self.center[2]];
            (-(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / s2).exp()
        });
        let m = grid.slice_moments(&g);
        (g, m.mass, m.energy)
    }
}

/// `base + amplitude·bump`, with the amplitude chosen to use a fraction of
/// the headroom left below `a_u` and `c_u`, halved until the result lies
/// in `Λ`.
fn perturbed(base: &DistributionField, bump: &Bump, fraction: f64, tc: &TheoremConstants) -> Option<DistributionField> {
    let grid = &base.grid;
    let (g, mass, energy) = bump.momentum(grid);
    if !(mass > 0.0) {
        return None;
    }
    let moments = base.raw_moments();
    let n_max = moments.iter().map(|m| m.mass).fold(0.0, f64::max);
    let e_max = moments.iter().map(|m| m.energy).fold(0.0, f64::max);
    // The x-profile is at most 1.5.
    let headroom = ((tc.a_u - n_max) / mass).min((tc.c_u - e_max) / energy) / 1.5;
    if !(headroom > 0.0) {
        return None;
    }
    let mut amplitude = fraction * headroom;
    let np = grid.p_count();
    for _ in 0..8 {
        let mut probe = base.clone();
        for (ix, &x) in grid.x.iter().enumerate() {
            let scale = amplitude * bump.profile(x);
            for (v, b) in probe.values[ix * np..(ix + 1) * np].iter_mut().zip(&g) {
                *v += scale * b;
            }
        }
        if lambda_check(&probe, tc).passed() {
            return Some(probe);
        }
        amplitude *= 0.5;
    }
    None
}

/// Largest observed `d(Φf, Φg)/d(f, g)` over probe pairs in `Λ`.
///
/// Every probe is paired with the anchor `f₀` (the attenuated inflow data).
/// Probes are `Φ(f₀)`, random nonnegative bumps added to `f₀`, and bumps
/// added to convex combinations of `f₀` and `Φ(f₀)`. Pairs at distance
/// zero are skipped.
pub fn contraction_estimate(
    boundary: Arc<BoundaryData>,
    grid: Arc<PhaseGrid>,
    tau: f64,
    stat: Statistics,
    probes: &ProbeOptions,
    q: &QuadratureSpec,
) -> Result<ContractionEstimate> {
    if probes.count == 0 {
        return Err(validation("probe_count", "must be positive"));
    }
    let tc = theorem::grid_constants(&boundary, &grid, tau, stat)?;
    let anchor = initial_iterate(boundary, grid.clone(), tau, stat, &tc, InitialGuess::Attenuated)?;
    let phi_anchor = apply_solution_operator_with(&anchor, tau, q)?.field;
    let mut rng = ChaCha8Rng::seed_from_u64(probes.seed);
    let p_extent = grid.spec.p_max.min(8.0);

    let mut ratios = Vec::new();
    let mut skipped = 0;
    let mut unplaced = 0;
    let mut pair = |probe: &DistributionField, phi_probe: &DistributionField| -> Result<()> {
        let d = weighted_distance(probe, &anchor)?;
        if d == 0.0 {
            skipped += 1;
            return Ok(());
        }
        ratios.push(weighted_distance(phi_probe, &phi_anchor)? / d);
        Ok(())
    };

    let phi2 = apply_solution_operator_with(&phi_anchor, tau, q)?.field;
    pair(&phi_anchor, &phi2)?;
    drop(phi2);
    pair(&anchor, &phi_anchor)?;

    for j in 1..probes.count {
        let bump = Bump::random(&mut rng, p_extent, j % 2 == 0);
        let fraction = rng.gen_range(0.1..0.5);
        let base = if j % 3 == 2 {
            anchor.convex_combination(&phi_anchor, rng.gen_range(0.25..0.75))?
        } else {
            anchor.clone()
        };
        let Some(probe) = perturbed(&base, &bump, fraction, &tc) else {
            debug!("probe {j} could not be placed inside the solution set");
            unplaced += 1;
            continue;
        };
        drop(base);
        let phi_probe = apply_solution_operator_with(&probe, tau, q)?.field;
        pair(&probe, &phi_probe)?;
    }

    let estimate = ratios.iter().copied().fold(0.0, f64::max);
    Ok(ContractionEstimate {
        estimate,
        ratios,
        skipped,
        unplaced,
    })
}

/// `base` plus a seeded random nonnegative bump scaled to stay inside `Λ`;
/// `None` when no such bump fits.
pub fn random_member(base: &DistributionField, tc: &TheoremConstants, seed: u64) -> Option<DistributionField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bump = Bump::random(&mut rng, base.grid.spec.p_max.min(8.0), seed % 2 == 1);
    let fraction = rng.gen_range(0.1..0.9);
    perturbed(base, &bump, fraction, tc)
}

/// A member of `Λ` carrying transverse momentum: `f₀` plus a bump centred
/// at positive `p₂, p₃`.
pub fn transverse_probe(
    boundary: Arc<BoundaryData>,
    grid: Arc<PhaseGrid>,
    tau: f64,
    stat: Statistics,
    seed: u64,
) -> Result<DistributionField> {
    let tc = theorem::grid_constants(&boundary, &grid, tau, stat)?;
    let anchor = initial_iterate(boundary, grid.clone(), tau, stat, &tc, InitialGuess::Attenuated)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bump = Bump::random(&mut rng, grid.spec.p_max.min(8.0), true);
    perturbed(&anchor, &bump, 0.5, &tc)
        .ok_or_else(|| Error::Invariant("no transverse probe fits inside the solution set".into()))
}

/// `sup_x (|P₂| + |P₃|)` of `Φ(transverse_probe)`: the transverse momentum
/// that one application of `Φ` lets through from a drifting member of `Λ`.
pub fn transverse_response(
    boundary: Arc<BoundaryData>,
    grid: Arc<PhaseGrid>,
    tau: f64,
    stat: Statistics,
    seed: u64,
    q: &QuadratureSpec,
) -> Result<f64> {
    let probe = transverse_probe(boundary, grid, tau, stat, seed)?;
    let phi = apply_solution_operator_with(&probe, tau, q)?.field;
    Ok(transverse_momentum(&phi))
}
