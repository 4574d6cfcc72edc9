//! Time series, moving-average filtering, comparison metrics and CSV export.

use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};

/// Where a series came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Provenance {
    Analytic,
    Numeric,
    Filtered,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Analytic => "analytic",
            Provenance::Numeric => "numeric",
            Provenance::Filtered => "filtered",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A real observable sampled on a strictly ascending time grid.
/// Points where the observable is undefined hold `NaN`.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableSeries {
    t: Vec<f64>,
    y: Vec<f64>,
    label: String,
    provenance: Provenance,
}

impl ObservableSeries {
    pub fn new(t: Vec<f64>, y: Vec<f64>, label: impl Into<String>, provenance: Provenance) -> Result<Self> {
        if t.len() != y.len() {
            return Err(Error::Argument(format!("series has {} times but {} values", t.len(), y.len())));
        }
        if t.is_empty() {
            return Err(Error::Argument("series is empty".into()));
        }
        if let Some(w) = t.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::Argument(format!("series times not strictly ascending at {} -> {}", w[0], w[1])));
        }
        let label = label.into();
        if label.contains([',', '\n', '\r']) {
            return Err(Error::Argument(format!("label {label:?} contains a CSV delimiter")));
        }
        Ok(ObservableSeries { t, y, label, provenance })
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Linear interpolation; `None` outside `[t₀, t_N]`.
    pub fn interpolate(&self, x: f64) -> Option<f64> {
        let (t0, tn) = (self.t[0], *self.t.last().unwrap());
        if !(x >= t0 && x <= tn) {
            return None;
        }
        let j = self.t.partition_point(|&s| s <= x);
        if j == self.t.len() {
            return Some(*self.y.last().unwrap());
        }
        let (ta, tb) = (self.t[j - 1], self.t[j]);
        let (ya, yb) = (self.y[j - 1], self.y[j]);
        Some(ya + (yb - ya) * (x - ta) / (tb - ta))
    }

    /// Values restricted to `t_lo ≤ t ≤ t_hi`.
    pub fn window(&self, t_lo: f64, t_hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.t.iter().copied().zip(self.y.iter().copied()).filter(move |(t, _)| *t >= t_lo && *t <= t_hi)
    }

    fn median_spacing(&self) -> f64 {
        let mut d: Vec<f64> = self.t.windows(2).map(|w| w[1] - w[0]).collect();
        if d.is_empty() {
            return 0.0;
        }
        d.sort_by(|a, b| a.total_cmp(b));
        d[d.len() / 2]
    }

    /// Integral of the piecewise-linear interpolant from `t₀` to `x`.
    fn primitive(&self, prefix: &[f64], x: f64) -> f64 {
        let j = self.t.partition_point(|&s| s <= x).clamp(1, self.t.len()) - 1;
        let y_x = self.interpolate(x).unwrap_or(self.y[j]);
        prefix[j] + 0.5 * (x - self.t[j]) * (self.y[j] + y_x)
    }
}

/// Centered moving average of the piecewise-linear interpolant.
///
/// Each output is the mean over `[t − h, t + h]` with
/// `h = min(window/2, t − t₀, t_N − t)`, so the window shrinks symmetrically
/// near the ends and the end points themselves are left unchanged.
pub fn filter_fast(series: &ObservableSeries, window: f64) -> Result<ObservableSeries> {
    if let Some(i) = series.y.iter().position(|y| !y.is_finite()) {
        return Err(Error::Undefined(format!("{} is not finite at t = {:e}", series.label, series.t[i])));
    }
    let spacing = series.median_spacing();
    if !(window.is_finite() && window > 0.0) || window < 2.0 * spacing {
        return Err(Error::Argument(format!(
            "filter window {window:e} s must be at least twice the median sample spacing {spacing:e} s"
        )));
    }
    let mut prefix = vec![0.0; series.len()];
    for i in 1..series.len() {
        prefix[i] = prefix[i - 1] + 0.5 * (series.t[i] - series.t[i - 1]) * (series.y[i] + series.y[i - 1]);
    }
    let (t0, tn) = (series.t[0], *series.t.last().unwrap());
    let y = series
        .t
        .iter()
        .zip(&series.y)
        .map(|(&t, &y)| {
            let h = (0.5 * window).min(t - t0).min(tn - t);
            if h <= 0.0 {
                y
            } else {
                (series.primitive(&prefix, t + h) - series.primitive(&prefix, t - h)) / (2.0 * h)
            }
        })
        .collect();
    Ok(ObservableSeries { t: series.t.clone(), y, label: series.label.clone(), provenance: Provenance::Filtered })
}

/// Agreement metrics between two series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Comparison {
    pub rmse: f64,
    pub max_abs: f64,
    /// `‖a − b‖ / ((‖a‖ + ‖b‖)/2)`, symmetric in its arguments.
    pub relative_l2: f64,
    pub n_points: usize,
}

/// Compares two series on the union of their sample times inside the common
/// time range, interpolating each linearly. Times where either value is not
/// finite are skipped.
pub fn compare(a: &ObservableSeries, b: &ObservableSeries) -> Result<Comparison> {
    let lo = a.t[0].max(b.t[0]);
    let hi = a.t.last().unwrap().min(*b.t.last().unwrap());
    if lo > hi {
        return Err(Error::Argument(format!(
            "series {:?} and {:?} have disjoint time ranges",
            a.label, b.label
        )));
    }
    let mut grid: Vec<f64> = a.window(lo, hi).chain(b.window(lo, hi)).map(|(t, _)| t).collect();
    grid.sort_by(|x, y| x.total_cmp(y));
    grid.dedup();

    let (mut sum_d, mut sum_a, mut sum_b, mut max_abs) = (0.0, 0.0, 0.0, 0.0f64);
    let mut n = 0;
    for &t in &grid {
        let (ya, yb) = (a.interpolate(t).unwrap(), b.interpolate(t).unwrap());
        if !(ya.is_finite() && yb.is_finite()) {
            continue;
        }
        n += 1;
        let d = ya - yb;
        sum_d += d * d;
        sum_a += ya * ya;
        sum_b += yb * yb;
        max_abs = max_abs.max(d.abs());
    }
    if n == 0 {
        return Err(Error::Undefined(format!("{:?} and {:?} share no finite points", a.label, b.label)));
    }
    let scale = 0.5 * (sum_a.sqrt() + sum_b.sqrt());
    let relative_l2 = if sum_d == 0.0 { 0.0 } else { sum_d.sqrt() / scale };
    Ok(Comparison { rmse: (sum_d / n as f64).sqrt(), max_abs, relative_l2, n_points: n })
}

/// Writes one series as CSV with header `t,<label>,provenance`.
pub fn write_series_csv<W: Write>(mut w: W, series: &ObservableSeries) -> Result<()> {
    writeln!(w, "t,{},provenance", series.label)?;
    for (t, y) in series.t.iter().zip(&series.y) {
        writeln!(w, "{t:.16e},{y:.16e},{}", series.provenance)?;
    }
    Ok(())
}

/// Writes several series sharing one time grid as a single wide table with
/// columns `t,<label>[<provenance>],…`.
pub fn write_wide_csv<W: Write>(mut w: W, series: &[ObservableSeries]) -> Result<()> {
    let Some(first) = series.first() else {
        return Err(Error::Argument("no series to write".into()));
    };
    if let Some(s) = series.iter().find(|s| s.t != first.t) {
        return Err(Error::Argument(format!("series {:?} is on a different time grid", s.label)));
    }
    write!(w, "t")?;
    for s in series {
        write!(w, ",{}[{}]", s.label, s.provenance)?;
    }
    writeln!(w)?;
    for (i, t) in first.t.iter().enumerate() {
        write!(w, "{t:.16e}")?;
        for s in series {
            write!(w, ",{:.16e}", s.y[i])?;
        }
        writeln!(w)?;
    }
    Ok(())
}
