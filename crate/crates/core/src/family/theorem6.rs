//! Families with prescribed orbit growth, built from a growth function `f`.
//!
//! A piecewise-quadratic, convex, C¹ majorant `F > f` is assembled on unit
//! intervals, `x ↦ xF(x)` is inverted to get `g`, and the sequences are
//! `a1 = g(k)`, `a2 = g(k+½)`, `r = g′(k+1)/(k g(k))`, `R = g′(k+1)/k`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{assumption_violation, SequenceFamily, SequenceValues, Source};
use crate::error::{domain, Error, Result};
use crate::numerics::Slr;

/// Monotone tabulation of a positive function, linearly interpolated and clamped at the ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthTable {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl GrowthTable {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.is_empty() || xs.len() != ys.len() {
            return domain("growth table needs matching non-empty columns");
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return domain("growth table abscissae must be strictly increasing");
        }
        if ys.windows(2).any(|w| w[1] < w[0]) {
            return domain("growth function must be non-decreasing");
        }
        if ys.iter().any(|y| !(*y > 0.0) || !y.is_finite()) {
            return domain("growth function must be positive and finite");
        }
        Ok(Self { xs, ys })
    }

    /// Samples `f` at `x = 0, step, 2 step, ...` up to `x_max`.
    pub fn from_fn(f: impl Fn(f64) -> f64, x_max: f64, step: f64) -> Result<Self> {
        let n = (x_max / step).ceil() as usize;
        let xs: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
        let ys = xs.iter().map(|&x| f(x)).collect();
        Self::new(xs, ys)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let j = self.xs.partition_point(|&t| t <= x);
        let (x0, x1) = (self.xs[j - 1], self.xs[j]);
        let (y0, y1) = (self.ys[j - 1], self.ys[j]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }
}

/// Piecewise quadratic `a + b t + q t²`, `t = x − n`, on `[n, n+1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Majorant {
    pieces: Vec<[f64; 3]>,
}

impl Majorant {
    /// Builds pieces until `x F(x)` at the right end exceeds `y_target`.
    pub fn build(f: &GrowthTable, y_target: f64) -> Result<Self> {
        // The first value is shifted up by one so that F(0) > f(0) even when f is flat.
        let mut pieces = Vec::new();
        let (mut a, mut b) = (f.eval(1.0) + 1.0, 1.0);
        let mut n = 0usize;
        loop {
            let target = f.eval(n as f64 + 2.0) + n as f64;
            let q = (target - a - b).max(0.0);
            pieces.push([a, b, q]);
            let end_val = a + b + q;
            let end_slope = b + 2.0 * q;
            n += 1;
            if !end_val.is_finite() || !end_slope.is_finite() {
                return Err(Error::Internal("majorant overflowed".into()));
            }
            if n as f64 * end_val > y_target {
                break;
            }
            if n > 10_000_000 {
                return Err(Error::Internal("majorant does not reach the target".into()));
            }
            a = end_val;
            b = end_slope;
        }
        Ok(Self { pieces })
    }

    pub fn x_max(&self) -> f64 {
        self.pieces.len() as f64
    }

    fn piece(&self, x: f64) -> (usize, f64) {
        let n = (x.max(0.0).floor() as usize).min(self.pieces.len() - 1);
        (n, x - n as f64)
    }

    pub fn value(&self, x: f64) -> f64 {
        let (n, t) = self.piece(x);
        let [a, b, q] = self.pieces[n];
        a + b * t + q * t * t
    }

    pub fn slope(&self, x: f64) -> f64 {
        let (n, t) = self.piece(x);
        let [_, b, q] = self.pieces[n];
        b + 2.0 * q * t
    }

    /// `g(y)`: the solution of `x F(x) = y` by bisection.
    pub fn invert(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return domain(format!("cannot invert at {y}"));
        }
        let hi_end = self.x_max();
        if hi_end * self.value(hi_end) < y {
            return Err(Error::Internal(format!("inversion of {y} not bracketed")));
        }
        let (mut lo, mut hi) = (0.0f64, hi_end);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * self.value(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `g′(y) = 1 / (F(x) + x F′(x))` at `x = g(y)`.
    pub fn inverse_slope(&self, y: f64) -> Result<f64> {
        let x = self.invert(y)?;
        Ok(1.0 / (self.value(x) + x * self.slope(x)))
    }
}

/// Tabulates the four sequences for `k = 1 ..= k_max + 1` from the growth function `f`.
///
/// `ν` defaults to the smallest index from which the ping-pong assumptions hold up to `k_max`.
pub fn build_theorem6_family(f: &GrowthTable, k_max: u64) -> Result<SequenceFamily> {
    if k_max < 2 {
        return domain("k_max must be at least 2");
    }
    let top = k_max + 1;
    let maj = Majorant::build(f, top as f64 + 2.0)?;
    let mut rows = Vec::with_capacity(top as usize);
    for k in 1..=top {
        let kf = k as f64;
        let g = maj.invert(kf)?;
        let g_half = maj.invert(kf + 0.5)?;
        let dg = maj.inverse_slope(kf + 1.0)?;
        rows.push(SequenceValues {
            a1: Slr::from_f64(g),
            a2: Slr::from_f64(g_half),
            r: Slr::from_f64(dg / (kf * g)),
            big_r: Slr::from_f64(dg / kf),
        });
    }
    let mut nu = 1;
    for k in (1..k_max).rev() {
        let i = (k - 1) as usize;
        if assumption_violation(&rows[i], &rows[i + 1]).is_some() {
            nu = k + 1;
            break;
        }
    }
    Ok(SequenceFamily {
        name: "theorem6".to_string(),
        nu,
        k_min: 1,
        source: Source::Table { start: 1, rows: Arc::new(rows) },
        majorant: Some(Arc::new(maj)),
    })
}
