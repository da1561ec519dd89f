//! Reference values computed independently of the library's quadrature.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::{Mutex, MutexGuard};

use quantum_bgk::Statistics;

/// Serialises the memory-heavy tests.
pub fn heavy_lock() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

/// `ζ(s)` for `s > 1`: direct sum to `N` plus the Euler–Maclaurin tail.
pub fn zeta(s: f64) -> f64 {
    let n = 1000.0f64;
    let head: f64 = (1..1000).map(|k| (k as f64).powf(-s)).sum();
    head + n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s) + s * n.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * n.powf(-s - 3.0) / 720.0
}

/// `Li_s(z) = Σ zⁿ/nⁿ` for `0 < z < 1`.
pub fn polylog(s: f64, z: f64) -> f64 {
    assert!(z > 0.0 && z < 1.0);
    let mut total = 0.0;
    let mut zn = 1.0;
    for n in 1..200_000 {
        zn *= z;
        let term = zn / (n as f64).powf(s);
        total += term;
        if term < 1e-20 * total {
            break;
        }
    }
    total
}

/// Boson integrals `(π^{3/2} Li_{3/2}(e^{-c}), (3/2) π^{3/2} Li_{5/2}(e^{-c}))`.
pub fn boson_series(c: f64) -> (f64, f64) {
    let p = PI.powf(1.5);
    if c == 0.0 {
        (p * zeta(1.5), 1.5 * p * zeta(2.5))
    } else {
        let z = (-c).exp();
        (p * polylog(1.5, z), 1.5 * p * polylog(2.5, z))
    }
}

fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `4π ∫₀^∞ r^k / (e^{r²+c} ± 1) dr` by adaptive Simpson on `[0, R]`, with `R`
/// chosen so that the neglected tail is below `1e-20` relative.
pub fn radial_oracle(c: f64, stat: Statistics, k: i32) -> f64 {
    let occ = |t: f64| match stat {
        Statistics::Boson => 1.0 / t.exp_m1(),
        Statistics::Fermion => 1.0 / (t.exp() + 1.0),
    };
    let f = move |r: f64| {
        if r == 0.0 {
            // r^k/(e^{r²+c} - 1) -> 1 for k = 2, c = 0; otherwise zero.
            return if k == 2 && c == 0.0 && stat == Statistics::Boson {
                1.0
            } else {
                0.0
            };
        }
        r.powi(k) * occ(r * r + c)
    };
    let r_max = (60.0 + c.max(-60.0).abs()).sqrt().max(8.0);
    // Integrate in pieces so the tolerance can be relative.
    let breaks = [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, r_max];
    let rough: f64 = breaks.windows(2).map(|w| adaptive_simpson(&f, w[0], w[1], 1e-6)).sum();
    let tol = 1e-15 * rough.abs();
    4.0 * PI
        * breaks
            .windows(2)
            .map(|w| adaptive_simpson(&f, w[0], w[1], tol / 8.0))
            .sum::<f64>()
}

/// `π^{3/2} ζ(3/2) / ((3/2) π^{3/2} ζ(5/2))^{3/5}`.
pub fn boson_threshold_series() -> f64 {
    let p = PI.powf(1.5);
    p * zeta(1.5) / (1.5 * p * zeta(2.5)).powf(0.6)
}
