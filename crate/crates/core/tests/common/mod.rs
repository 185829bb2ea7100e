//! Oracles written without the library's quadrature, basis or density code.
#![allow(dead_code)]

pub const ORACLE_NODES: usize = 100_001;

/// Composite trapezoid rule with `nodes` equispaced points.
pub fn trapezoid<F: Fn(f64) -> f64>(g: F, a: f64, b: f64, nodes: usize) -> f64 {
    let h = (b - a) / (nodes - 1) as f64;
    let mut s = 0.5 * (g(a) + g(b));
    for i in 1..nodes - 1 {
        s += g(a + i as f64 * h);
    }
    s * h
}

/// Gaussian shape truncated to [0, 1], normalized by the trapezoid rule.
pub struct TruncGauss {
    mean: f64,
    sd: f64,
    z: f64,
}

impl TruncGauss {
    pub fn new(mean: f64, sd: f64) -> Self {
        let shape = |x: f64| (-(x - mean).powi(2) / (2.0 * sd * sd)).exp();
        let z = trapezoid(shape, 0.0, 1.0, ORACLE_NODES);
        Self { mean, sd, z }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        (-(x - self.mean).powi(2) / (2.0 * self.sd * self.sd)).exp() / self.z
    }
}

pub fn normal() -> TruncGauss {
    TruncGauss::new(0.5, 0.15)
}

pub fn monotone() -> TruncGauss {
    TruncGauss::new(2.0, 0.8)
}

/// `mu * int f/w / int f` on [0, 1] by the trapezoid rule.
pub fn rcdb_oracle<F: Fn(f64) -> f64, W: Fn(f64) -> f64>(f: F, w: W) -> f64 {
    let mu = trapezoid(|x| f(x) * w(x), 0.0, 1.0, ORACLE_NODES);
    let inv = trapezoid(|x| f(x) / w(x), 0.0, 1.0, ORACLE_NODES);
    let mass = trapezoid(&f, 0.0, 1.0, ORACLE_NODES);
    mu * inv / mass
}

/// `int_0^1 f(x) sqrt(2) cos(pi j x) dx` by the trapezoid rule.
pub fn cosine_coefficient<F: Fn(f64) -> f64>(f: F, j: usize) -> f64 {
    if j == 0 {
        return trapezoid(f, 0.0, 1.0, ORACLE_NODES);
    }
    let c = std::f64::consts::PI * j as f64;
    trapezoid(|x| f(x) * 2f64.sqrt() * (c * x).cos(), 0.0, 1.0, ORACLE_NODES)
}

/// Tabulated CDF of the density proportional to `h` on [0, 1].
pub struct CdfTable {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl CdfTable {
    pub fn new<H: Fn(f64) -> f64>(h: H) -> Self {
        let n = ORACLE_NODES;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let mut cdf = vec![0.0; n];
        for i in 1..n {
            cdf[i] = cdf[i - 1] + 0.5 * (h(xs[i - 1]) + h(xs[i])) * (xs[i] - xs[i - 1]);
        }
        let total = cdf[n - 1];
        cdf.iter_mut().for_each(|c| *c /= total);
        Self { xs, cdf }
    }

    pub fn at(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let pos = x * (self.xs.len() - 1) as f64;
        let i = pos.floor() as usize;
        let t = pos - i as f64;
        self.cdf[i] * (1.0 - t) + self.cdf[i + 1] * t
    }

    pub fn mean(&self) -> f64 {
        // E Y = int_0^1 (1 - F)
        trapezoid(|x| 1.0 - self.at(x), 0.0, 1.0, ORACLE_NODES)
    }
}

/// One-sample Kolmogorov-Smirnov distance.
pub fn ks_distance<C: Fn(f64) -> f64>(values: &[f64], cdf: C) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at the 0.1% level.
pub fn ks_critical_001(n: usize) -> f64 {
    1.9495 / (n as f64).sqrt()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn sd(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}
