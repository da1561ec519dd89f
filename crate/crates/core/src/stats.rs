//! Bose–Einstein and Fermi–Dirac momentum integrals, the moment ratio
//! `beta`, and its inverse on the domains where `beta` is strictly
//! decreasing.
//!
//! All three-dimensional integrals are spherically symmetric and are reduced
//! to radial integrals `4π ∫₀^R r^k / (e^{r²+c} ± 1) dr`, evaluated with
//! composite Gauss–Legendre panels.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::{Panel, Rule};

/// Quantum statistics of the particles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Boson,
    Fermion,
}

impl Statistics {
    /// `-1` for bosons, `+1` for fermions: the sign in `1 / (e^t ± 1)`.
    pub fn sign(self) -> f64 {
        match self {
            Statistics::Boson => -1.0,
            Statistics::Fermion => 1.0,
        }
    }

    /// Left end of the domain on which `beta` is inverted.
    ///
    /// Closed at `0` for bosons, open at `-ln 3` for fermions; the returned
    /// fermion endpoint is nudged inside the open interval.
    pub fn inverse_domain_start(self) -> f64 {
        match self {
            Statistics::Boson => 0.0,
            Statistics::Fermion => -(3f64.ln()) + FERMION_ENDPOINT_OFFSET,
        }
    }

    /// Point at which the admissibility threshold `beta(c)` is evaluated.
    pub fn threshold_point(self) -> f64 {
        match self {
            Statistics::Boson => 0.0,
            Statistics::Fermion => -(3f64.ln()),
        }
    }

    /// Occupation number `1 / (e^t ± 1)`, written to avoid overflow.
    #[inline]
    pub fn occupation(self, t: f64) -> f64 {
        match self {
            Statistics::Boson => 1.0 / t.exp_m1(),
            Statistics::Fermion => {
                if t > 0.0 {
                    let e = (-t).exp();
                    e / (1.0 + e)
                } else {
                    1.0 / (t.exp() + 1.0)
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Statistics::Boson => "boson",
            Statistics::Fermion => "fermion",
        }
    }
}

impl std::fmt::Display for Statistics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

const FERMION_ENDPOINT_OFFSET: f64 = 1e-12;

/// Discretisation controls for the radial integrals and the inversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub radial_panel_count: usize,
    pub panel_order: usize,
    /// Upper limit `R` of the radial integral.
    pub radial_cutoff: f64,
    /// Term budget for series cross-checks of the radial integrals.
    pub series_terms: usize,
    /// Relative residual `|beta(c) - y| / y` at which inversion stops.
    pub inverse_tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            radial_panel_count: 24,
            panel_order: 16,
            radial_cutoff: 12.0,
            series_terms: 20_000,
            inverse_tolerance: 1e-14,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.radial_panel_count == 0 {
            return Err(crate::error::validation("radial_panel_count", "must be positive"));
        }
        if self.panel_order == 0 {
            return Err(crate::error::validation("panel_order", "must be positive"));
        }
        if !(self.radial_cutoff > 0.0 && self.radial_cutoff.is_finite()) {
            return Err(crate::error::validation(
                "radial_cutoff",
                "must be a positive finite number",
            ));
        }
        if !(self.inverse_tolerance > 0.0) {
            return Err(crate::error::validation("inverse_tolerance", "must be positive"));
        }
        Ok(())
    }

    fn refined(&self) -> Self {
        Self {
            radial_panel_count: 2 * self.radial_panel_count,
            ..*self
        }
    }
}

/// The pair of radial integrals sharing one occupation evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialMoments {
    /// `∫ dp / (e^{|p|²+c} ± 1)`
    pub mass: f64,
    /// `∫ |p|² dp / (e^{|p|²+c} ± 1)`
    pub energy: f64,
}

impl RadialMoments {
    pub fn beta(&self) -> f64 {
        self.mass / self.energy.powf(0.6)
    }
}

fn check_domain(c: f64, stat: Statistics) -> Result<()> {
    if !c.is_finite() {
        return Err(Error::Domain(format!("c = {c} is not finite")));
    }
    if stat == Statistics::Boson && c < 0.0 {
        return Err(Error::Domain(format!("boson integrals need c >= 0, got c = {c}")));
    }
    Ok(())
}

/// Uniform panels on `[0, cutoff]`, narrowed for degenerate fermions. For
/// bosons with small `c` the integrand has poles at `r = ±i√c`, so the first
/// panel is split geometrically down to that scale.
fn radial_rule(c: f64, stat: Statistics, cutoff: f64, q: &QuadratureSpec) -> Rule {
    let n = q.radial_panel_count;
    let h = cutoff / n as f64;
    let levels = if stat == Statistics::Boson && c > 0.0 && c.sqrt() < h {
        ((h / c.sqrt()).log2().ceil() as usize + 2).min(60)
    } else {
        0
    };
    if levels == 0 {
        // The Fermi edge at r = √(-c) has poles at distance ~π/(2√(-c)).
        let per_panel = if stat == Statistics::Fermion && c < -4.0 {
            (0.5 * (-c).sqrt()).ceil() as usize
        } else {
            1
        };
        return Rule::uniform_panels(0.0, cutoff, n * per_panel, q.panel_order);
    }
    let mut panels = vec![Panel::new(0.0, h * 0.5f64.powi(levels as i32), q.panel_order)];
    for j in (0..levels).rev() {
        let hi = h * 0.5f64.powi(j as i32);
        panels.push(Panel::new(0.5 * hi, hi, q.panel_order));
    }
    for i in 1..n {
        panels.push(Panel::new(i as f64 * h, (i + 1) as f64 * h, q.panel_order));
    }
    Rule::composite(&panels)
}

/// Radial moments without the refinement check; used on the hot path of the
/// inversion, where the rule has already been validated.
pub(crate) fn radial_moments_unchecked(c: f64, stat: Statistics, q: &QuadratureSpec) -> RadialMoments {
    // For degenerate fermions the Fermi edge sits at r ~ sqrt(-c); extend the
    // cutoff so the tail beyond it is still e^{-R²}.
    let cutoff = match stat {
        Statistics::Fermion if c < 0.0 => (q.radial_cutoff.powi(2) - c).sqrt(),
        _ => q.radial_cutoff,
    };
    let rule = radial_rule(c, stat, cutoff, q);
    let mut mass = 0.0;
    let mut energy = 0.0;
    for (&r, &w) in rule.nodes.iter().zip(&rule.weights) {
        let r2 = r * r;
        let occ = stat.occupation(r2 + c);
        mass += w * r2 * occ;
        energy += w * r2 * r2 * occ;
    }
    RadialMoments {
        mass: 4.0 * PI * mass,
        energy: 4.0 * PI * energy,
    }
}

/// Both radial integrals, verified against a rule with twice as many panels.
pub fn radial_moments(c: f64, stat: Statistics, q: &QuadratureSpec) -> Result<RadialMoments> {
    check_domain(c, stat)?;
    q.validate()?;
    let coarse = radial_moments_unchecked(c, stat, q);
    let fine = radial_moments_unchecked(c, stat, &q.refined());
    for (name, a, b) in [("mass", coarse.mass, fine.mass), ("energy", coarse.energy, fine.energy)] {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::NonConvergence(format!("{name} integral at c = {c} is {a}")));
        }
        let rel = ((a - b) / b).abs();
        if rel > 1e-12 {
            return Err(Error::NonConvergence(format!(
                "{name} integral at c = {c}: panel doubling changed the value by {rel:e}"
            )));
        }
    }
    Ok(fine)
}

/// `∫_{ℝ³} dp / (e^{|p|²+c} ± 1)`.
pub fn mass_integral(c: f64, stat: Statistics, q: &QuadratureSpec) -> Result<f64> {
    radial_moments(c, stat, q).map(|m| m.mass)
}

/// `∫_{ℝ³} |p|² dp / (e^{|p|²+c} ± 1)`.
pub fn energy_integral(c: f64, stat: Statistics, q: &QuadratureSpec) -> Result<f64> {
    radial_moments(c, stat, q).map(|m| m.energy)
}

/// `beta(c) = mass_integral(c) / energy_integral(c)^{3/5}`.
pub fn beta(c: f64, stat: Statistics, q: &QuadratureSpec) -> Result<f64> {
    radial_moments(c, stat, q).map(|m| m.beta())
}

/// Admissibility threshold: `beta_B(0)` for bosons, `beta_F(-ln 3)` for fermions.
pub fn threshold(stat: Statistics, q: &QuadratureSpec) -> Result<f64> {
    beta(stat.threshold_point(), stat, q)
}

/// Unique `c` in the monotone domain with `beta(c) = y`.
///
/// The boson endpoint is closed, so `y = beta_B(0)` maps to `c = 0`; the
/// fermion endpoint is open and `y >= beta_F(-ln 3)` is rejected.
pub fn beta_inverse(y: f64, stat: Statistics, q: &QuadratureSpec) -> Result<f64> {
    q.validate()?;
    let top = threshold(stat, q)?;
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::Range {
            value: y,
            threshold: top,
        });
    }
    match stat {
        Statistics::Boson => {
            if y > top * (1.0 + 4.0 * f64::EPSILON) {
                return Err(Error::Range {
                    value: y,
                    threshold: top,
                });
            }
            if y >= top {
                return Ok(0.0);
            }
        }
        Statistics::Fermion => {
            if y >= top {
                return Err(Error::Range {
                    value: y,
                    threshold: top,
                });
            }
        }
    }
    invert_decreasing(y, stat, q, top)
}

/// Illinois-modified regula falsi on `ln beta(c) - ln y`, with bisection
/// steps whenever the secant stalls. `ln beta` is close to linear in `c`
/// away from the quantum endpoint, so few iterations are needed.
fn invert_decreasing(y: f64, stat: Statistics, q: &QuadratureSpec, top: f64) -> Result<f64> {
    let target = y.ln();
    let g = |c: f64| radial_moments_unchecked(c, stat, q).beta().ln() - target;

    let mut lo = stat.inverse_domain_start();
    let mut g_lo = match stat {
        Statistics::Boson => top.ln() - target,
        Statistics::Fermion => g(lo),
    };
    if g_lo <= 0.0 {
        // Only reachable for fermion targets within roundoff of the threshold.
        return Ok(lo);
    }

    // Geometric bracket expansion.
    let mut step = 1.0;
    let mut hi = lo + step;
    let mut g_hi = g(hi);
    while g_hi > 0.0 {
        lo = hi;
        g_lo = g_hi;
        step *= 2.0;
        hi = lo + step;
        if hi > 700.0 {
            return Err(Error::Range {
                value: y,
                threshold: top,
            });
        }
        g_hi = g(hi);
    }

    let tol = q.inverse_tolerance;
    let mut side = 0i8;
    let mut c = 0.5 * (lo + hi);
    for iter in 0..300 {
        let secant = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
        c = if iter % 6 == 5 || !(secant > lo && secant < hi) {
            0.5 * (lo + hi)
        } else {
            secant
        };
        let gc = g(c);
        // |ln β - ln y| ≈ relative residual.
        if gc.abs() <= tol || (hi - lo) <= 4.0 * f64::EPSILON * c.abs().max(1.0) {
            return Ok(c);
        }
        if gc > 0.0 {
            lo = c;
            g_lo = gc;
            if side == 1 {
                g_hi *= 0.5;
            }
            side = 1;
        } else {
            hi = c;
            g_hi = gc;
            if side == -1 {
                g_lo *= 0.5;
            }
            side = -1;
        }
    }
    Ok(c)
}
