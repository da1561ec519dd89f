//! Boundary-data constants, the hypotheses of the existence theorem, and the
//! closed-form slab example.
//!
//! Every constant is a momentum integral of `f_LR` against a weight that
//! depends on `p₁` and `|p|²` only, so the data is first reduced to the
//! transverse profiles `h₀(p₁) = ∫ f dp₂dp₃` and `h₂(p₁) = ∫ f (p₂²+p₃²) dp₂dp₃`
//! on a set of `p₁` nodes. The closed-form example gets exact profiles on a
//! Gauss–Legendre rule over its support; gridded data is reduced on its grid.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::boundary::BoundaryData;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, PhaseGrid};
use crate::quadrature::{Panel, Rule};
use crate::stats::{self, QuadratureSpec, Statistics};

/// Absolute tolerance on the transverse momentum flux of the inflow data.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Ratio of consecutive innermost dyadic shell contributions to a `1/|p₁|`
/// integral above which it is treated as logarithmically divergent.
const DIVERGENCE_SHELL_RATIO: f64 = 0.9;

/// Constants derived from the inflow data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremConstants {
    pub a_u: f64,
    pub a_l: f64,
    pub a_s: f64,
    pub c_u: f64,
    pub c_l: f64,
    pub c_s: f64,
    pub k: f64,
    /// `beta_B(0)` or `beta_F(-ln 3)`.
    pub threshold: f64,
    /// `a_u^{8/5} / k^{3/5}`; infinite when `k = 0`.
    pub ratio: f64,
}

impl TheoremConstants {
    /// Checks the ordering `a_l <= a_u`, `c_l <= c_u` and positivity of `k`.
    pub fn check_invariants(&self) -> Result<()> {
        if !(self.a_l <= self.a_u && self.c_l <= self.c_u) {
            return Err(Error::Invariant(format!(
                "attenuated constants exceed their bounds: a_l={} a_u={} c_l={} c_u={}",
                self.a_l, self.a_u, self.c_l, self.c_u
            )));
        }
        if !(self.k > 0.0) {
            return Err(Error::Invariant(
                "k vanishes: one of the inflow half-fluxes is zero".into(),
            ));
        }
        Ok(())
    }

    /// The admissibility condition `ratio < threshold`.
    pub fn admissible(&self) -> bool {
        self.ratio < self.threshold
    }
}

/// Transverse profiles of `f_LR` on a `p₁` quadrature.
struct Profiles {
    p1: Vec<f64>,
    w1: Vec<f64>,
    h0: Vec<f64>,
    h2: Vec<f64>,
}

impl Profiles {
    fn slab(c_left: f64, c_right: f64, r1: f64, r2: f64) -> Self {
        // ∫ e^{-(p₂²+p₃²)/2} = 2π and ∫ (p₂²+p₃²) e^{-(p₂²+p₃²)/2} = 4π.
        let rule = slab_rule(r1, r2);
        let mut out = Profiles {
            p1: Vec::new(),
            w1: Vec::new(),
            h0: Vec::new(),
            h2: Vec::new(),
        };
        for (sign, c) in [(-1.0, c_right), (1.0, c_left)] {
            for (&p, &w) in rule.nodes.iter().zip(&rule.weights) {
                out.p1.push(sign * p);
                out.w1.push(w);
                out.h0.push(2.0 * PI * c);
                out.h2.push(4.0 * PI * c);
            }
        }
        out
    }

    fn gridded(grid: &PhaseGrid, values: &[f64]) -> Self {
        let n23 = grid.transverse_count();
        let n3 = grid.p3.len();
        let mut h0 = Vec::with_capacity(grid.p1.len());
        let mut h2 = Vec::with_capacity(grid.p1.len());
        for i1 in 0..grid.p1.len() {
            let row = &values[i1 * n23..(i1 + 1) * n23];
            let (mut s0, mut s2) = (0.0, 0.0);
            for (i2, (&p2, &w2)) in grid.p2.nodes.iter().zip(&grid.p2.weights).enumerate() {
                for (i3, (&p3, &w3)) in grid.p3.nodes.iter().zip(&grid.p3.weights).enumerate() {
                    let wf = w2 * w3 * row[i2 * n3 + i3];
                    s0 += wf;
                    s2 += wf * (p2 * p2 + p3 * p3);
                }
            }
            h0.push(s0);
            h2.push(s2);
        }
        Profiles {
            p1: grid.p1.nodes.clone(),
            w1: grid.p1.weights.clone(),
            h0,
            h2,
        }
    }

    fn constants(&self, tau: f64, threshold: f64) -> TheoremConstants {
        let n = self.p1.len();
        let energy = |i: usize| self.p1[i] * self.p1[i] * self.h0[i] + self.h2[i];
        let mut a_u = 0.0;
        let mut c_u = 0.0;
        let mut a_s = 0.0;
        let mut c_s = 0.0;
        for i in 0..n {
            a_u += 2.0 * self.w1[i] * self.h0[i];
            c_u += 2.0 * self.w1[i] * energy(i);
            a_s += self.w1[i] * self.h0[i] / self.p1[i].abs();
            c_s += self.w1[i] * energy(i) / self.p1[i].abs();
        }
        let (mut a_l, mut c_l, mut flux_l, mut flux_r) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            let p = self.p1[i];
            let att = self.w1[i] * (-a_u / (tau * p.abs())).exp();
            a_l += att * self.h0[i];
            c_l += att * energy(i);
            if p > 0.0 {
                flux_l += att * self.h0[i] * p;
            } else {
                flux_r += att * self.h0[i] * -p;
            }
        }
        let k = flux_l * flux_r;
        let ratio = if k > 0.0 {
            a_u.powf(1.6) / k.powf(0.6)
        } else {
            f64::INFINITY
        };
        TheoremConstants {
            a_u,
            a_l,
            a_s,
            c_u,
            c_l,
            c_s,
            k,
            threshold,
            ratio,
        }
    }
}

fn slab_rule(r1: f64, r2: f64) -> Rule {
    Rule::uniform_panels(r1, r2, 8, 16)
}

fn validate_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(crate::error::validation("tau", "must be a positive finite number"));
    }
    Ok(())
}

/// The seven boundary constants and the admissibility ratio.
///
/// Closed-form data is integrated on its exact support; gridded data on its
/// own grid, where a divergent `1/|p₁|` integral is reported as
/// [`Error::Divergence`].
pub fn boundary_constants(boundary: &BoundaryData, tau: f64, stat: Statistics) -> Result<TheoremConstants> {
    validate_tau(tau)?;
    let threshold = stats::threshold(stat, &QuadratureSpec::default())?;
    match boundary {
        BoundaryData::SlabExample {
            c_left,
            c_right,
            r1,
            r2,
        } => Ok(Profiles::slab(*c_left, *c_right, *r1, *r2).constants(tau, threshold)),
        BoundaryData::Gridded { grid, values } => {
            let profiles = Profiles::gridded(grid, values);
            detect_divergence(grid, &profiles)?;
            Ok(profiles.constants(tau, threshold))
        }
    }
}

/// Constants of `boundary` sampled on `grid` and integrated with the grid's
/// own quadrature, so that they are consistent with moments of gridded
/// fields. The `1/|p₁|` integrals are plain grid sums here; use
/// [`boundary_constants`] to test them for divergence.
pub fn grid_constants(
    boundary: &BoundaryData,
    grid: &PhaseGrid,
    tau: f64,
    stat: Statistics,
) -> Result<TheoremConstants> {
    validate_tau(tau)?;
    let threshold = stats::threshold(stat, &QuadratureSpec::default())?;
    let values = boundary.sample_on(grid)?;
    Ok(Profiles::gridded(grid, &values).constants(tau, threshold))
}

/// Compares the two innermost dyadic shells of `∫ h₀/|p₁|`: for integrable
/// data their contributions shrink geometrically, for data with
/// `h₀(0) != 0` they are equal (each shell adds `h₀(0)·ln 2`).
fn detect_divergence(grid: &PhaseGrid, profiles: &Profiles) -> Result<()> {
    let mut panels: Vec<Panel> = grid.spec.p1_panels.clone();
    panels.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    if panels.len() < 2 {
        return Ok(());
    }
    let shell = |panel: &Panel| -> f64 {
        (0..profiles.p1.len())
            .filter(|&i| {
                let p = profiles.p1[i].abs();
                p > panel.lo && p < panel.hi
            })
            .map(|i| profiles.w1[i] * profiles.h0[i].abs() / profiles.p1[i].abs())
            .sum()
    };
    let inner = shell(&panels[0]);
    let next = shell(&panels[1]);
    let total: f64 = (0..profiles.p1.len())
        .map(|i| profiles.w1[i] * profiles.h0[i].abs() / profiles.p1[i].abs())
        .sum();
    if inner > 1e-12 * total && inner >= DIVERGENCE_SHELL_RATIO * next {
        return Err(Error::Divergence(format!(
            "the 1/|p1|-weighted boundary integral does not settle near p1 = 0 \
             (innermost shell {inner:e}, next {next:e})"
        )));
    }
    Ok(())
}

/// Exact `1/|p₁|`-weighted integrals `(a_s, c_s)` of the slab example.
pub fn slab_singular_integrals(c_left: f64, c_right: f64, r1: f64, r2: f64) -> (f64, f64) {
    let c = c_left + c_right;
    let log = (r2 / r1).ln();
    (2.0 * PI * c * log, c * (PI * (r2 * r2 - r1 * r1) + 4.0 * PI * log))
}

/// The slab example's inflow data.
pub fn slab_example_boundary(c_left: f64, c_right: f64, r1: f64, r2: f64) -> Result<BoundaryData> {
    BoundaryData::slab_example(c_left, c_right, r1, r2)
}

/// Upper bound on the admissibility ratio of the slab example, from the
/// lower bound `π² C_L C_R e^{-8π(C_L+C_R)(r₂-r₁)/(τr₁)} (r₂²-r₁²)²` on `k`.
pub fn slab_ratio_bound(c_left: f64, c_right: f64, r1: f64, r2: f64, tau: f64) -> f64 {
    let c = c_left + c_right;
    4f64.powf(1.6)
        * PI.powf(0.4)
        * (c.powf(1.6) / (c_left * c_right).powf(0.6))
        * ((r2 - r1).powf(0.4) / (r2 + r1).powf(1.2))
        * (24.0 * PI * c * (r2 - r1) / (5.0 * tau * r1)).exp()
}

/// The lower bound on `k` for the slab example.
pub fn slab_k_lower_bound(c_left: f64, c_right: f64, r1: f64, r2: f64, tau: f64) -> f64 {
    let c = c_left + c_right;
    PI * PI * c_left * c_right * (-8.0 * PI * c * (r2 - r1) / (tau * r1)).exp() * (r2 * r2 - r1 * r1).powi(2)
}

/// Outcome of one hypothesis check. `margin >= 0` exactly when it passes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub name: String,
    pub passed: bool,
    pub margin: f64,
    pub detail: String,
}

impl AssumptionCheck {
    fn new(name: &str, margin: f64, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed: margin >= 0.0,
            margin,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
    pub constants: Option<TheoremConstants>,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&AssumptionCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Checks nonnegativity, integrability, vanishing transverse flux and the
/// admissibility condition for `boundary`.
pub fn check_main_assumptions(boundary: &BoundaryData, tau: f64, stat: Statistics) -> AssumptionReport {
    let mut checks = Vec::with_capacity(4);

    let (min_value, transverse_flux) = match boundary {
        BoundaryData::SlabExample { .. } => {
            let probe = slab_probe_grid(boundary);
            match probe.and_then(|g| boundary.sample_on(&g).map(|v| (g, v))) {
                Ok((grid, values)) => scan(&grid, &values),
                Err(_) => (f64::NAN, f64::NAN),
            }
        }
        BoundaryData::Gridded { grid, values } => scan(grid, values),
    };
    checks.push(AssumptionCheck::new(
        "nonnegative",
        if min_value.is_nan() { -1.0 } else { min_value },
        format!("minimum boundary value {min_value:e}"),
    ));

    let constants = boundary_constants(boundary, tau, stat);
    let integrable = match &constants {
        Ok(tc) => {
            let values = [tc.a_u, tc.a_s, tc.c_u, tc.c_s, tc.a_l, tc.c_l];
            if values.iter().all(|v| v.is_finite()) {
                AssumptionCheck::new("integrable", 0.0, "all six integrals finite".into())
            } else {
                AssumptionCheck::new("integrable", -1.0, "a boundary integral is not finite".into())
            }
        }
        Err(e) => AssumptionCheck::new("integrable", -1.0, e.to_string()),
    };
    checks.push(integrable);

    checks.push(AssumptionCheck::new(
        "transverse_flux",
        if transverse_flux.is_nan() {
            -1.0
        } else {
            SYMMETRY_TOLERANCE - transverse_flux
        },
        format!("max |∫ f p_i dp2 dp3| over sampled p1 = {transverse_flux:e}"),
    ));

    let constants = constants.ok();
    let admissibility = match &constants {
        Some(tc) => AssumptionCheck::new(
            "admissibility",
            if tc.admissible() {
                tc.threshold - tc.ratio
            } else {
                -(tc.ratio - tc.threshold).max(f64::EPSILON)
            },
            format!("ratio {} against threshold {}", tc.ratio, tc.threshold),
        ),
        None => AssumptionCheck::new("admissibility", -1.0, "constants unavailable".into()),
    };
    checks.push(admissibility);

    AssumptionReport { checks, constants }
}

/// A momentum grid resolving the slab example's support, used to sample it
/// for the pointwise checks.
fn slab_probe_grid(boundary: &BoundaryData) -> Result<std::sync::Arc<PhaseGrid>> {
    let support = boundary.p1_support_max().unwrap_or(8.0);
    let p_max = support.max(8.0) * 1.25;
    let spec =
        GridSpec::dyadic(1, p_max, 4, 8, &[0.125, 0.25, 0.5, 1.0], 8).with_p1_breakpoints(&boundary.p1_breakpoints());
    PhaseGrid::build(spec)
}

/// Minimum value and the largest transverse flux `|∫ f p_i dp₂dp₃|` over
/// the `p₁` nodes.
fn scan(grid: &PhaseGrid, values: &[f64]) -> (f64, f64) {
    let min_value = values.iter().copied().fold(f64::INFINITY, f64::min);
    let n23 = grid.transverse_count();
    let n3 = grid.p3.len();
    let mut worst: f64 = 0.0;
    for i1 in 0..grid.p1.len() {
        let row = &values[i1 * n23..(i1 + 1) * n23];
        let (mut f2, mut f3) = (0.0, 0.0);
        for (i2, (&p2, &w2)) in grid.p2.nodes.iter().zip(&grid.p2.weights).enumerate() {
            for (i3, (&p3, &w3)) in grid.p3.nodes.iter().zip(&grid.p3.weights).enumerate() {
                let wf = w2 * w3 * row[i2 * n3 + i3];
                f2 += wf * p2;
                f3 += wf * p3;
            }
        }
        worst = worst.max(f2.abs()).max(f3.abs());
    }
    (min_value, worst)
}
