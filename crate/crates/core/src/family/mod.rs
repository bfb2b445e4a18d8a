//! Sequence families `(a1, a2, r, R)`, their generators `α_k, β_k`, and assumption checks.

pub(crate) mod io;
pub mod theorem6;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::hyperbolic::Mobius;
use crate::numerics::Slr;

pub use io::{load_family, read_tabulation, write_tabulation, FamilyFile};
pub use theorem6::{build_theorem6_family, GrowthTable, Majorant};

/// The four sequence values at one index.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceValues {
    pub a1: Slr,
    pub a2: Slr,
    pub r: Slr,
    #[serde(rename = "R")]
    pub big_r: Slr,
}

impl SequenceValues {
    /// `log(R/r)`, the per-letter gain of the norm gap.
    pub fn log_ratio(&self) -> f64 {
        self.big_r.logmag() - self.r.logmag()
    }

    pub fn to_f64(&self) -> [f64; 4] {
        [self.a1.to_f64(), self.a2.to_f64(), self.r.to_f64(), self.big_r.to_f64()]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    DoubleExp,
    GueritaudKassel,
    LogSlow,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::DoubleExp, Preset::GueritaudKassel, Preset::LogSlow];

    pub fn name(self) -> &'static str {
        match self {
            Preset::DoubleExp => "double_exp",
            Preset::GueritaudKassel => "gueritaud_kassel",
            Preset::LogSlow => "log_slow",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| Error::Domain(format!("unknown preset '{name}'")))
    }

    pub fn k_min(self) -> u64 {
        match self {
            Preset::DoubleExp => 1,
            Preset::GueritaudKassel | Preset::LogSlow => 2,
        }
    }

    /// Frozen defaults from calibration runs; see `calibrate_nu`.
    pub fn default_nu(self) -> u64 {
        match self {
            Preset::DoubleExp => 3,
            Preset::GueritaudKassel => 10,
            Preset::LogSlow => 10,
        }
    }

    pub fn values(self, k: u64) -> SequenceValues {
        let kf = k as f64;
        match self {
            Preset::DoubleExp => SequenceValues {
                a1: Slr::from_log(kf.exp()),
                a2: Slr::from_log((kf + 0.5).exp()),
                r: Slr::ONE,
                big_r: Slr::from_log(kf),
            },
            Preset::GueritaudKassel => SequenceValues {
                a1: Slr::from_f64(kf * kf),
                a2: Slr::from_f64(kf * kf + kf),
                r: Slr::ONE,
                big_r: Slr::from_f64(kf.ln()),
            },
            Preset::LogSlow => {
                let lk = kf.ln();
                SequenceValues {
                    a1: Slr::from_f64(lk),
                    a2: Slr::from_f64((kf + 0.5).ln()),
                    r: Slr::from_log(-2.0 * lk - lk.ln()),
                    big_r: Slr::from_log(-2.0 * lk),
                }
            }
        }
    }

    fn values_f64(self, k: u64) -> Option<[f64; 4]> {
        let kf = k as f64;
        match self {
            Preset::DoubleExp => {
                if kf + 0.5 > 6.5 {
                    return None;
                }
                Some([kf.exp().exp(), (kf + 0.5).exp().exp(), 1.0, kf.exp()])
            }
            Preset::GueritaudKassel => Some([kf * kf, kf * kf + kf, 1.0, kf.ln()]),
            Preset::LogSlow => {
                let lk = kf.ln();
                let inv2 = 1.0 / (kf * kf);
                Some([lk, (kf + 0.5).ln(), inv2 / lk, inv2])
            }
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub type SequenceFn = dyn Fn(u64) -> SequenceValues + Send + Sync;

#[derive(Clone)]
pub enum Source {
    Preset(Preset),
    /// Rows for consecutive indices starting at `start`.
    Table { start: u64, rows: Arc<Vec<SequenceValues>> },
    Custom(Arc<SequenceFn>),
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Preset(p) => write!(f, "Preset({p})"),
            Source::Table { start, rows } => write!(f, "Table(start={start}, rows={})", rows.len()),
            Source::Custom(_) => f.write_str("Custom"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SequenceFamily {
    pub name: String,
    pub nu: u64,
    pub k_min: u64,
    pub source: Source,
    /// The convex majorant `F` when the family came from the growth-function builder.
    pub majorant: Option<Arc<Majorant>>,
}

impl SequenceFamily {
    pub fn preset(p: Preset) -> Self {
        Self { name: p.name().to_string(), nu: p.default_nu(), k_min: p.k_min(), source: Source::Preset(p), majorant: None }
    }

    pub fn from_table(name: impl Into<String>, start: u64, rows: Vec<SequenceValues>, nu: u64) -> Result<Self> {
        for (i, v) in rows.iter().enumerate() {
            if !v.r.is_positive() || !v.big_r.is_positive() {
                return domain(format!("radii must be positive at k = {}", start + i as u64));
            }
        }
        Ok(Self { name: name.into(), nu: nu.max(start), k_min: start, source: Source::Table { start, rows: Arc::new(rows) }, majorant: None })
    }

    pub fn from_fn(name: impl Into<String>, k_min: u64, nu: u64, f: Arc<SequenceFn>) -> Self {
        Self { name: name.into(), nu: nu.max(k_min), k_min, source: Source::Custom(f), majorant: None }
    }

    pub fn with_nu(mut self, nu: u64) -> Self {
        self.nu = nu;
        self
    }

    pub fn preset_kind(&self) -> Option<Preset> {
        match self.source {
            Source::Preset(p) => Some(p),
            _ => None,
        }
    }

    /// Largest index with values, if the family is finite.
    pub fn max_index(&self) -> Option<u64> {
        match &self.source {
            Source::Table { start, rows } => Some(start + rows.len() as u64 - 1),
            _ => None,
        }
    }

    pub fn values(&self, k: u64) -> Result<SequenceValues> {
        if k < self.k_min {
            return domain(format!("index {k} below domain start {}", self.k_min));
        }
        match &self.source {
            Source::Preset(p) => Ok(p.values(k)),
            Source::Table { start, rows } => rows
                .get((k - start) as usize)
                .copied()
                .ok_or_else(|| Error::Domain(format!("index {k} beyond tabulated range"))),
            Source::Custom(f) => Ok(f(k)),
        }
    }

    /// Plain-double values `[a1, a2, r, R]` when all four fit in double range.
    pub fn values_f64(&self, k: u64) -> Option<[f64; 4]> {
        match &self.source {
            Source::Preset(p) if k >= self.k_min => p.values_f64(k),
            _ => {
                let v = self.values(k).ok()?;
                let ok = [v.a1, v.a2, v.r, v.big_r].iter().all(|x| x.is_zero() || x.logmag().abs() < 700.0);
                ok.then(|| v.to_f64())
            }
        }
    }

    pub fn values_range(&self, lo: u64, hi: u64) -> Result<Vec<SequenceValues>> {
        (lo..=hi).map(|k| self.values(k)).collect()
    }
}

/// `τ(x1, x2, u) = (1/u)((x2, −(x1 x2 + u²)), (1, −x1))`.
pub fn tau(x1: Slr, x2: Slr, u: Slr) -> Result<Mobius> {
    if !u.is_positive() {
        return domain(format!("tau radius {u} must be positive"));
    }
    let b = -(x1 * x2 + u.square()) / u;
    Mobius::new(x2 / u, b, u.recip()?, -x1 / u)
}

pub fn generators(fam: &SequenceFamily, k: u64) -> Result<(Mobius, Mobius)> {
    let v = fam.values(k)?;
    Ok((tau(v.a1, v.a2, v.r)?, tau(v.a1, v.a2, v.big_r)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub family: String,
    pub checked_range: [u64; 2],
    pub assumption1_ok: bool,
    pub first_violation: Option<u64>,
    pub violated_inequality: Option<String>,
    /// Empirical sup of `R(k) / |a_i(k) − a_j(l)|`.
    pub eta_estimate: Slr,
    pub ratio_trend: Vec<(u64, f64)>,
    pub nonsharpness_trend: Vec<(u64, f64)>,
}

/// First failing inequality of the ping-pong assumptions at index `k`, given the values at `k` and `k+1`.
pub(crate) fn assumption_violation(v: &SequenceValues, next: &SequenceValues) -> Option<&'static str> {
    if !(v.r < v.big_r) {
        return Some("r(k) < R(k)");
    }
    if !(v.a1 + v.big_r < v.a2 - v.big_r) {
        return Some("a1(k) + R(k) < a2(k) - R(k)");
    }
    if !(v.a2 + v.big_r < next.a1 - next.big_r) {
        return Some("a2(k) + R(k) < a1(k+1) - R(k+1)");
    }
    None
}

pub fn check_assumptions(fam: &SequenceFamily, k_max: u64) -> Result<AssumptionReport> {
    let nu = fam.nu;
    if k_max < nu {
        return domain(format!("K = {k_max} is below nu = {nu}"));
    }
    let vals = fam.values_range(nu, k_max + 1)?;
    let mut first_violation = None;
    let mut violated = None;
    let mut ratio_trend = Vec::with_capacity(vals.len() - 1);
    let mut nonsharpness_trend = Vec::with_capacity(vals.len() - 1);
    for (i, w) in vals.windows(2).enumerate() {
        let k = nu + i as u64;
        if first_violation.is_none() {
            if let Some(which) = assumption_violation(&w[0], &w[1]) {
                first_violation = Some(k);
                violated = Some(which.to_string());
            }
        }
        let v = &w[0];
        ratio_trend.push((k, (v.r.logmag() - v.big_r.logmag()).exp()));
        let denom = (v.a1 * v.a2 / v.r).logmag();
        nonsharpness_trend.push((k, v.log_ratio() / denom));
    }
    let eta = eta_estimate(&vals[..vals.len() - 1]);
    Ok(AssumptionReport {
        family: fam.name.clone(),
        checked_range: [nu, k_max],
        assumption1_ok: first_violation.is_none(),
        first_violation,
        violated_inequality: violated,
        eta_estimate: eta,
        ratio_trend,
        nonsharpness_trend,
    })
}

/// Max over pairs of `R(k)/|a_i(k) − a_j(l)|`; the nearest centre in sorted order dominates.
fn eta_estimate(vals: &[SequenceValues]) -> Slr {
    let mut pts: Vec<(Slr, Slr)> = Vec::with_capacity(2 * vals.len());
    for v in vals {
        pts.push((v.a1, v.big_r));
        pts.push((v.a2, v.big_r));
    }
    pts.sort_by(|x, y| x.0.cmp(&y.0));
    let mut eta = Slr::ZERO;
    for i in 0..pts.len() {
        let mut nearest: Option<Slr> = None;
        if i > 0 {
            nearest = Some(pts[i].0 - pts[i - 1].0);
        }
        if i + 1 < pts.len() {
            let d = pts[i + 1].0 - pts[i].0;
            nearest = Some(nearest.map_or(d, |n| n.min(d)));
        }
        if let Some(d) = nearest {
            if d.is_zero() {
                return Slr::from_log(f64::MAX);
            }
            eta = eta.max(pts[i].1 / d);
        }
    }
    eta
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOutcome {
    pub target_eps: f64,
    /// Smallest `ν` meeting the target, if any.
    pub nu: Option<u64>,
    pub best_nu: u64,
    pub best_eps: f64,
    pub sweep: Vec<(u64, f64)>,
}

/// Width and depth of the box used to measure `ε̂` at each candidate `ν`.
pub const CALIBRATION_WIDTH: u64 = 6;
pub const CALIBRATION_DEPTH: usize = 3;

/// Sweeps `ν` upward from `fam.nu` and stops at the first one whose measured `ε̂` meets `target_eps`.
pub fn calibrate_nu(fam: &SequenceFamily, target_eps: f64, k_max: u64) -> Result<CalibrationOutcome> {
    if !(target_eps > 0.0) {
        return domain("target epsilon must be positive");
    }
    let mut out = CalibrationOutcome { target_eps, nu: None, best_nu: fam.nu, best_eps: f64::INFINITY, sweep: Vec::new() };
    let top = match fam.max_index() {
        Some(m) => k_max.min(m.saturating_sub(1)),
        None => k_max,
    };
    for nu in fam.nu..=top {
        let hi = (nu + CALIBRATION_WIDTH).min(top);
        let cand = fam.clone().with_nu(nu);
        let rep = check_assumptions(&cand, hi)?;
        if !rep.assumption1_ok {
            continue;
        }
        let eps = crate::words::estimate_epsilon(&cand, nu, hi, CALIBRATION_DEPTH)?;
        out.sweep.push((nu, eps));
        if eps < out.best_eps {
            out.best_eps = eps;
            out.best_nu = nu;
        }
        if eps <= target_eps {
            out.nu = Some(nu);
            break;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_examples() {
        let t = tau(Slr::ZERO, Slr::ZERO, Slr::ONE).unwrap();
        assert_eq!(t.to_f64(), [0.0, -1.0, 1.0, 0.0]);
        assert!(tau(Slr::ONE, Slr::ONE, Slr::ZERO).is_err());
        assert!(tau(Slr::ONE, Slr::ONE, Slr::from_f64(-1.0)).is_err());
        let (e5, e55) = (5f64.exp(), 5.5f64.exp());
        let t = tau(Slr::from_log(e5), Slr::from_log(e55), Slr::ONE).unwrap();
        assert!((t.b.logmag() - (e5 + e55)).abs() < 1e-9);
        assert_eq!(t.b.sign(), -1);
    }

    #[test]
    fn preset_values() {
        let v = Preset::DoubleExp.values(3);
        assert!((v.a1.logmag() - 3f64.exp()).abs() < 1e-14);
        let v = Preset::GueritaudKassel.values(4);
        assert!((v.a1.to_f64() - 16.0).abs() < 1e-13);
        assert!((v.a2.to_f64() - 20.0).abs() < 1e-13);
        assert_eq!(v.r, Slr::ONE);
        assert!((v.big_r.to_f64() - 4f64.ln()).abs() < 1e-15);
        let v = Preset::LogSlow.values(10);
        assert!((v.log_ratio() - 10f64.ln().ln()).abs() < 1e-14);
        assert_eq!(Preset::from_name("log_slow").unwrap(), Preset::LogSlow);
        assert!(Preset::from_name("nope").is_err());
    }

    #[test]
    fn preset_double_path_agrees() {
        for p in Preset::ALL {
            let fam = SequenceFamily::preset(p);
            for k in [2u64, 3, 5, 6, 40, 1000] {
                if let Some(f) = fam.values_f64(k) {
                    let v = fam.values(k).unwrap().to_f64();
                    for i in 0..4 {
                        assert!((f[i] - v[i]).abs() <= 1e-12 * v[i].abs(), "{p} k={k} i={i}");
                    }
                }
            }
        }
    }

    #[test]
    fn generators_example() {
        let fam = SequenceFamily::preset(Preset::GueritaudKassel);
        let (a, b) = generators(&fam, 10).unwrap();
        let ta = tau(100.0.into(), 110.0.into(), Slr::ONE).unwrap();
        let tb = tau(100.0.into(), 110.0.into(), 10f64.ln().into()).unwrap();
        for (x, y) in a.to_f64().iter().zip(ta.to_f64()) {
            assert!((x - y).abs() < 1e-10 * y.abs().max(1.0));
        }
        for (x, y) in b.to_f64().iter().zip(tb.to_f64()) {
            assert!((x - y).abs() < 1e-10 * y.abs().max(1.0));
        }
        assert!(generators(&fam, 1).is_err());
    }

    #[test]
    fn presets_pass_assumptions() {
        for p in Preset::ALL {
            let fam = SequenceFamily::preset(p).with_nu(10);
            let rep = check_assumptions(&fam, 200).unwrap();
            assert!(rep.assumption1_ok, "{p}: {:?}", rep.violated_inequality);
            assert_eq!(rep.ratio_trend.len(), 191);
        }
    }

    #[test]
    fn violation_reported_at_nu() {
        let f = Arc::new(|k: u64| {
            let kf = k as f64;
            SequenceValues { a1: (10.0 * kf).into(), a2: (10.0 * kf + 5.0).into(), r: 0.2.into(), big_r: 0.1.into() }
        });
        let fam = SequenceFamily::from_fn("bad", 1, 4, f);
        let rep = check_assumptions(&fam, 20).unwrap();
        assert!(!rep.assumption1_ok);
        assert_eq!(rep.first_violation, Some(4));
        assert_eq!(rep.violated_inequality.as_deref(), Some("r(k) < R(k)"));
    }

    #[test]
    fn double_exp_eta_bound() {
        let fam = SequenceFamily::preset(Preset::DoubleExp).with_nu(10);
        let rep = check_assumptions(&fam, 100).unwrap();
        let bound = Slr::from_log(10.0) / (Slr::from_log(10.5f64.exp()) - Slr::from_log(10f64.exp()));
        assert!(rep.eta_estimate.logmag() <= bound.logmag() + 1e-9);
        assert!(rep.eta_estimate.logmag() < -30000.0);
    }

    #[test]
    fn eta_non_increasing_in_nu() {
        let fam = SequenceFamily::preset(Preset::GueritaudKassel);
        let mut last = f64::INFINITY;
        for nu in [10, 20, 40, 80] {
            let eta = check_assumptions(&fam.clone().with_nu(nu), 120).unwrap().eta_estimate.to_f64();
            assert!(eta <= last);
            last = eta;
        }
    }
}
