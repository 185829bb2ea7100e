//! Composite Simpson quadrature with a doubling convergence check.

use crate::error::{Error, Result};

/// Default node count on a unit-length interval.
pub const DEFAULT_NODES: usize = 1025;
/// Default absolute tolerance of the doubling check.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
const MAX_NODES: usize = (1 << 22) + 1;

/// Composite Simpson rule.
///
/// `nodes` is the number of nodes per panel set and must be odd and at
/// least 3. [`Quadrature::integrate`] compares the rule against the same
/// rule on twice as many panels and keeps doubling until the two agree to
/// within `tolerance`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    nodes: usize,
    tolerance: f64,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            nodes: DEFAULT_NODES,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

impl Quadrature {
    pub fn new(nodes: usize, tolerance: f64) -> Result<Self> {
        if nodes < 3 || nodes % 2 == 0 {
            return Err(Error::Argument(format!(
                "Simpson node count must be odd and >= 3, got {nodes}"
            )));
        }
        if !(tolerance > 0.0 && tolerance.is_finite()) {
            return Err(Error::Argument(format!(
                "quadrature tolerance must be positive, got {tolerance}"
            )));
        }
        Ok(Self { nodes, tolerance })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Same tolerance, at least `nodes` nodes (rounded up to `2^k + 1`).
    pub fn with_min_nodes(&self, nodes: usize) -> Self {
        let mut n = self.nodes;
        while n < nodes && n < MAX_NODES {
            n = 2 * n - 1;
        }
        Self { nodes: n, ..*self }
    }

    /// Plain composite Simpson sum with `self.nodes` nodes, no checks.
    pub fn simpson<F: Fn(f64) -> f64>(&self, g: F, a: f64, b: f64) -> f64 {
        simpson_fixed(&g, a, b, self.nodes)
    }

    /// Integrate `g` over `[a, b]` with the doubling check.
    pub fn integrate<F: Fn(f64) -> f64>(&self, g: F, a: f64, b: f64) -> Result<f64> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Argument(format!(
                "integration bounds must satisfy a < b, got [{a}, {b}]"
            )));
        }
        let mut nodes = self.nodes;
        let mut coarse = simpson_fixed(&g, a, b, nodes);
        if !coarse.is_finite() {
            return Err(Error::Numeric(format!(
                "integrand is not finite on [{a}, {b}]"
            )));
        }
        loop {
            let fine_nodes = 2 * nodes - 1;
            let fine = simpson_fixed(&g, a, b, fine_nodes);
            if !fine.is_finite() {
                return Err(Error::Numeric(format!(
                    "integrand is not finite on [{a}, {b}]"
                )));
            }
            let diff = (fine - coarse).abs();
            if diff <= self.tolerance {
                return Ok(fine);
            }
            if fine_nodes >= MAX_NODES {
                return Err(Error::Numeric(format!(
                    "Simpson rule did not converge on [{a}, {b}]: last change {diff:.3e} \
                     at {fine_nodes} nodes exceeds tolerance {:.1e}",
                    self.tolerance
                )));
            }
            nodes = fine_nodes;
            coarse = fine;
        }
    }

    /// Integrate piece by piece between the sorted `breaks` that fall
    /// inside `(a, b)`. Used for integrands with kinks (piecewise-linear
    /// biasing tables).
    pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
        &self,
        g: F,
        a: f64,
        b: f64,
        breaks: &[f64],
    ) -> Result<f64> {
        let mut edges = vec![a];
        edges.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
        edges.push(b);
        edges.sort_by(|x, y| x.total_cmp(y));
        edges.dedup();
        let mut total = 0.0;
        for pair in edges.windows(2) {
            total += self.integrate(&g, pair[0], pair[1])?;
        }
        Ok(total)
    }
}

fn simpson_fixed<F: Fn(f64) -> f64>(g: &F, a: f64, b: f64, nodes: usize) -> f64 {
    let panels = nodes - 1;
    let h = (b - a) / panels as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..panels {
        let x = a + h * i as f64;
        if i % 2 == 1 {
            odd += g(x);
        } else {
            even += g(x);
        }
    }
    h / 3.0 * (g(a) + g(b) + 4.0 * odd + 2.0 * even)
}

/// Simpson nodes and weights on `[a, b]`, for integrands evaluated once
/// and reused (ISE on a fixed grid).
#[derive(Debug, Clone)]
pub struct SimpsonGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SimpsonGrid {
    pub fn new(a: f64, b: f64, nodes: usize) -> Result<Self> {
        Quadrature::new(nodes, DEFAULT_TOLERANCE)?;
        let panels = nodes - 1;
        let h = (b - a) / panels as f64;
        let xs = (0..nodes)
            .map(|i| if i == panels { b } else { a + h * i as f64 })
            .collect();
        let weights = (0..nodes)
            .map(|i| {
                let c = if i == 0 || i == panels {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                c * h / 3.0
            })
            .collect();
        Ok(Self { nodes: xs, weights })
    }

    pub fn sum(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}
