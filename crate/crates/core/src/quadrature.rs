//! Gauss–Legendre rules and composite panel quadrature on the real line.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// sorted by increasing node.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre order must be positive");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let pn = if n == 0 { 1.0 } else { p1 };
    let pm = if n == 0 { 0.0 } else { p0 };
    let d = n as f64 * (x * pn - pm) / (x * x - 1.0);
    (pn, d)
}

/// A closed interval carrying a Gauss–Legendre rule of the given order.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Panel {
    pub lo: f64,
    pub hi: f64,
    pub order: usize,
}

impl Panel {
    pub fn new(lo: f64, hi: f64, order: usize) -> Self {
        Self { lo, hi, order }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// A one-dimensional quadrature rule stored as parallel node/weight arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Concatenates the Gauss–Legendre rules of every panel.
    pub fn composite(panels: &[Panel]) -> Self {
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for panel in panels {
            let (x, w) = gauss_legendre(panel.order);
            let half = 0.5 * panel.width();
            let mid = 0.5 * (panel.lo + panel.hi);
            nodes.extend(x.iter().map(|t| mid + half * t));
            weights.extend(w.iter().map(|w| half * w));
        }
        Self { nodes, weights }
    }

    /// Equal-width panels covering `[lo, hi]`.
    pub fn uniform_panels(lo: f64, hi: f64, count: usize, order: usize) -> Self {
        let h = (hi - lo) / count as f64;
        let panels: Vec<Panel> = (0..count)
            .map(|i| Panel::new(lo + i as f64 * h, lo + (i + 1) as f64 * h, order))
            .collect();
        Self::composite(&panels)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}
