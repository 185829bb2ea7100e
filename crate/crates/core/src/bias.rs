//! Biasing functions `w`, strictly positive and bounded on an interval.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Grid size used to validate positivity and compute `(c1, c2)`.
pub const VALIDATION_NODES: usize = 4097;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BiasKind {
    Constant,
    Linear,
    PiecewiseLinearTable,
    Function,
}

type BiasFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Form {
    Constant(f64),
    Linear { a: f64, b: f64 },
    Table { ys: Vec<f64>, ws: Vec<f64>, source: String },
    Function { f: BiasFn, scale: f64, label: String },
}

/// A biasing function together with the interval on which it was
/// validated and its bounds `0 < c1 <= w <= c2` there.
#[derive(Clone)]
pub struct BiasSpec {
    form: Form,
    interval: (f64, f64),
    bounds: (f64, f64),
}

impl fmt::Debug for BiasSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BiasSpec")
            .field("spec", &self.to_string())
            .field("interval", &self.interval)
            .field("bounds", &self.bounds)
            .finish()
    }
}

impl fmt::Display for BiasSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.form {
            Form::Constant(c) => write!(f, "const:{c}"),
            Form::Linear { a, b } => write!(f, "linear:{a},{b}"),
            Form::Table { source, .. } => write!(f, "table:{source}"),
            Form::Function { label, scale, .. } => {
                if *scale == 1.0 {
                    write!(f, "fn:{label}")
                } else {
                    write!(f, "fn:{scale}*{label}")
                }
            }
        }
    }
}

impl Serialize for BiasSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl BiasSpec {
    pub fn constant(c: f64) -> Result<Self> {
        Self::validated(Form::Constant(c), (0.0, 1.0))
    }

    /// `w(y) = a + b y`.
    pub fn linear(a: f64, b: f64) -> Result<Self> {
        Self::validated(Form::Linear { a, b }, (0.0, 1.0))
    }

    /// Piecewise-linear interpolation of `(ys, ws)`; `ys` strictly
    /// increasing. The validated interval is `[ys[0], ys[last]]`.
    pub fn table(ys: Vec<f64>, ws: Vec<f64>) -> Result<Self> {
        Self::table_with_source(ys, ws, "inline".into())
    }

    fn table_with_source(ys: Vec<f64>, ws: Vec<f64>, source: String) -> Result<Self> {
        if ys.len() != ws.len() {
            return Err(Error::Validation("bias table columns differ in length".into()));
        }
        if ys.len() < 2 {
            return Err(Error::Validation("bias table needs at least two rows".into()));
        }
        if ys.iter().chain(&ws).any(|v| !v.is_finite()) {
            return Err(Error::Validation("bias table contains non-finite values".into()));
        }
        if let Some(pair) = ys.windows(2).find(|p| p[1] <= p[0]) {
            return Err(Error::Validation(format!(
                "bias table y column must be strictly increasing (y = {} then {})",
                pair[0], pair[1]
            )));
        }
        let interval = (ys[0], ys[ys.len() - 1]);
        Self::validated(Form::Table { ys, ws, source }, interval)
    }

    /// Load a two-column `(y, w)` CSV. A non-numeric first row is treated
    /// as a header.
    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut ys = Vec::new();
        let mut ws = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            if record.len() != 2 {
                return Err(Error::Validation(format!(
                    "bias table row {} has {} columns, expected 2",
                    i + 1,
                    record.len()
                )));
            }
            let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
            match parsed {
                (Ok(y), Ok(w)) => {
                    ys.push(y);
                    ws.push(w);
                }
                _ if i == 0 => continue,
                _ => {
                    return Err(Error::Validation(format!(
                        "bias table row {} is not numeric",
                        i + 1
                    )))
                }
            }
        }
        Self::table_with_source(ys, ws, path.display().to_string())
    }

    /// An arbitrary positive function, validated on `[0, 1]`.
    pub fn from_fn<F>(label: impl Into<String>, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::validated(
            Form::Function {
                f: Arc::new(f),
                scale: 1.0,
                label: label.into(),
            },
            (0.0, 1.0),
        )
    }

    /// Revalidate the same function on a different interval.
    pub fn on_interval(&self, lo: f64, hi: f64) -> Result<Self> {
        if let Form::Table { ys, .. } = &self.form {
            if lo < ys[0] || hi > ys[ys.len() - 1] {
                return Err(Error::Config(format!(
                    "bias table covers [{}, {}], cannot extend to [{lo}, {hi}]",
                    ys[0],
                    ys[ys.len() - 1]
                )));
            }
        }
        Self::validated(self.form.clone(), (lo, hi))
    }

    /// `c * w`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Argument(format!("bias scale must be positive, got {c}")));
        }
        let form = match &self.form {
            Form::Constant(v) => Form::Constant(c * v),
            Form::Linear { a, b } => Form::Linear { a: c * a, b: c * b },
            Form::Table { ys, ws, source } => Form::Table {
                ys: ys.clone(),
                ws: ws.iter().map(|w| c * w).collect(),
                source: format!("{c}*{source}"),
            },
            Form::Function { f, scale, label } => Form::Function {
                f: f.clone(),
                scale: c * scale,
                label: label.clone(),
            },
        };
        Self::validated(form, self.interval)
    }

    fn validated(form: Form, interval: (f64, f64)) -> Result<Self> {
        let (lo, hi) = interval;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Argument(format!("invalid bias interval [{lo}, {hi}]")));
        }
        let mut spec = Self {
            form,
            interval,
            bounds: (f64::NAN, f64::NAN),
        };
        let mut c1 = f64::INFINITY;
        let mut c2 = 0.0f64;
        let mut points: Vec<f64> = (0..VALIDATION_NODES)
            .map(|i| lo + (hi - lo) * i as f64 / (VALIDATION_NODES - 1) as f64)
            .collect();
        points.extend(spec.breakpoints());
        for y in points {
            let w = spec.w(y);
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Validation(format!(
                    "biasing function {spec} is not positive at y = {y} (w = {w})"
                )));
            }
            c1 = c1.min(w);
            c2 = c2.max(w);
        }
        spec.bounds = (c1, c2);
        Ok(spec)
    }

    pub fn kind(&self) -> BiasKind {
        match self.form {
            Form::Constant(_) => BiasKind::Constant,
            Form::Linear { .. } => BiasKind::Linear,
            Form::Table { .. } => BiasKind::PiecewiseLinearTable,
            Form::Function { .. } => BiasKind::Function,
        }
    }

    /// Numeric parameters: `[c]`, `[a, b]`, or the table as `y0, w0, y1, w1, ...`.
    pub fn params(&self) -> Vec<f64> {
        match &self.form {
            Form::Constant(c) => vec![*c],
            Form::Linear { a, b } => vec![*a, *b],
            Form::Table { ys, ws, .. } => ys.iter().zip(ws).flat_map(|(y, w)| [*y, *w]).collect(),
            Form::Function { scale, .. } => vec![*scale],
        }
    }

    /// `(c1, c2)` on the validated interval.
    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    /// Whether the validated interval contains `[lo, hi]`.
    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        self.interval.0 <= lo && hi <= self.interval.1
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.form, Form::Constant(_))
    }

    /// Kinks of `w` (table nodes).
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.form {
            Form::Table { ys, .. } => ys.clone(),
            _ => Vec::new(),
        }
    }

    /// Evaluate `w(y)`. Tables extend flat beyond their end rows.
    pub fn w(&self, y: f64) -> f64 {
        match &self.form {
            Form::Constant(c) => *c,
            Form::Linear { a, b } => a + b * y,
            Form::Table { ys, ws, .. } => interpolate(ys, ws, y),
            Form::Function { f, scale, .. } => scale * f(y),
        }
    }

    /// Grid supremum of `w` over `[lo, hi]` (plus breakpoints).
    pub fn grid_sup(&self, lo: f64, hi: f64, nodes: usize) -> f64 {
        let nodes = nodes.max(2);
        let grid = (0..nodes).map(|i| lo + (hi - lo) * i as f64 / (nodes - 1) as f64);
        let kinks = self.breakpoints().into_iter().filter(|y| *y >= lo && *y <= hi);
        grid.chain(kinks).map(|y| self.w(y)).fold(0.0, f64::max)
    }
}

fn interpolate(ys: &[f64], ws: &[f64], y: f64) -> f64 {
    let last = ys.len() - 1;
    if y <= ys[0] {
        return ws[0];
    }
    if y >= ys[last] {
        return ws[last];
    }
    let i = ys.partition_point(|v| *v <= y) - 1;
    let t = (y - ys[i]) / (ys[i + 1] - ys[i]);
    ws[i] + t * (ws[i + 1] - ws[i])
}
