//! Orbit counting in pseudo-balls, certified truncation, Dirichlet checks, witnesses and sharpness.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::family::{check_assumptions, generators, SequenceFamily};
use crate::hyperbolic::{ball_volume, point_norm, pseudo_norm, HPoint, Mobius};
use crate::numerics::Slr;
use crate::words::{estimate_epsilon, walk_box, OrbitState, Word, WordBox};

/// How `γ` acts on base points in every count.
pub const CONVENTION: &str = "gamma.x = j(w) x rho(w)^-1";

/// Cap on `K − ν` for automatically derived limits.
pub const AUTO_WIDTH_CAP: u64 = 40;
/// Cap on word length for automatically derived limits.
pub const AUTO_LEN_CAP: usize = 6;
/// Cap on the number of words in an automatically derived box.
pub const AUTO_WORDS_CAP: u128 = 3_000_000;
const EPS_ITERATIONS: usize = 8;
const SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoBallQuery {
    pub x: Mobius,
    #[serde(rename = "R")]
    pub radius: f64,
}

impl PseudoBallQuery {
    pub fn new(x: Mobius, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return domain(format!("radius {radius} must be finite and non-negative"));
        }
        Ok(Self { x, radius })
    }

    pub fn at_identity(radius: f64) -> Result<Self> {
        Self::new(Mobius::identity(), radius)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CountLimits {
    Auto,
    Box { k_max: u64, max_len: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifiedLimits {
    pub k_max: u64,
    pub max_len: usize,
    pub certified: bool,
    /// Empirical `ε̂` and the box it was measured on.
    pub epsilon_hat: f64,
    pub epsilon_box: WordBox,
    /// `min log(R(k)/r(k))` over the index window.
    pub lambda_min: f64,
    pub x_norm: f64,
}

/// `log(R(k)/r(k))` for `k ∈ [ν, ν + cap + 64]` with suffix minima, so that `tail_min[i] = min_{j ≥ i} L`.
struct RatioWindow {
    nu: u64,
    tail_min: Vec<f64>,
}

impl RatioWindow {
    fn new(fam: &SequenceFamily, nu: u64) -> Result<Self> {
        let mut hi = nu + AUTO_WIDTH_CAP + 64;
        if let Some(m) = fam.max_index() {
            hi = hi.min(m);
        }
        let mut l: Vec<f64> = (nu..=hi).map(|k| fam.values(k).map(|v| v.log_ratio())).collect::<Result<_>>()?;
        for i in (0..l.len().saturating_sub(1)).rev() {
            l[i] = l[i].min(l[i + 1]);
        }
        Ok(Self { nu, tail_min: l })
    }

    fn min_from(&self, k: u64) -> Option<f64> {
        self.tail_min.get((k - self.nu) as usize).copied()
    }
}

/// Smallest `(K, M)` outside of which every word has `predicted_gap − (m+8)ε̂ − ‖x‖ > R`.
pub fn certified_limits(fam: &SequenceFamily, nu: u64, q: &PseudoBallQuery) -> Result<CertifiedLimits> {
    let x_norm = pseudo_norm(&q.x);
    let window = RatioWindow::new(fam, nu)?;
    let lambda_min = window.min_from(nu).ok_or_else(|| Error::Domain("empty index window".into()))?;
    let mut eps = 0.0;
    let mut eps_box = WordBox::new(nu, nu, 0);
    let k_cap = nu + AUTO_WIDTH_CAP;
    let mut out = CertifiedLimits { k_max: k_cap, max_len: AUTO_LEN_CAP, certified: false, epsilon_hat: eps, epsilon_box: eps_box, lambda_min, x_norm };
    for _ in 0..EPS_ITERATIONS {
        let slope = 2.0 * lambda_min - eps;
        if !(slope > 0.0) {
            return Ok(fallback(out));
        }
        // (M+1)(2λ − ε) > R + 8ε + ‖x‖
        let m_exact = ((q.radius + 8.0 * eps + x_norm) / slope).floor();
        let m = if m_exact > AUTO_LEN_CAP as f64 { AUTO_LEN_CAP } else { m_exact as usize };
        out.max_len = m;
        let need = q.radius + 9.0 * eps + x_norm;
        let mut k = Some(nu);
        if m > 0 {
            let mut j = nu;
            k = loop {
                match window.min_from(j + 1) {
                    Some(l) if 2.0 * l > need => break Some(j),
                    Some(_) if j < k_cap => j += 1,
                    _ => break None,
                }
            };
        }
        out.k_max = k.unwrap_or(k_cap);
        if m_exact > AUTO_LEN_CAP as f64 || k.is_none() {
            return Ok(fallback(out));
        }
        let want = WordBox::new(nu, out.k_max, m);
        if m == 0 || (eps_box.max_len > 0 && eps_box.contains(&want)) {
            out.certified = true;
            return Ok(out);
        }
        // measure one index and one letter past the box so the first uncovered shell is sampled
        let grown = WordBox::new(nu, (out.k_max + 1).max(eps_box.k_max), (m + 1).max(eps_box.max_len));
        if grown.word_count() > AUTO_WORDS_CAP {
            return Ok(fallback(out));
        }
        eps = estimate_epsilon(fam, nu, grown.k_max, grown.max_len)?;
        eps_box = grown;
        out.epsilon_hat = eps;
        out.epsilon_box = eps_box;
    }
    Ok(fallback(out))
}

/// Uncertified limits shrunk to at most [`AUTO_WORDS_CAP`] words, trimming indices first.
fn fallback(mut out: CertifiedLimits) -> CertifiedLimits {
    out.certified = false;
    let nu = out.epsilon_box.nu;
    while WordBox::new(nu, out.k_max, out.max_len).word_count() > AUTO_WORDS_CAP {
        if out.k_max > nu + 3 {
            out.k_max -= 1;
        } else if out.max_len > 1 {
            out.max_len -= 1;
        } else {
            break;
        }
    }
    out
}

/// Radius below which every orbit point `γx` of the group comes from a word of the box,
/// under `residual ≤ (m + 8)ε`. Infinite for a box without generators.
pub fn covered_radius(fam: &SequenceFamily, bx: &WordBox, eps: f64, x_norm: f64) -> Result<f64> {
    if bx.generators() == 0 || bx.max_len == 0 {
        return Ok(f64::INFINITY);
    }
    let window = RatioWindow::new(fam, bx.nu)?;
    let lambda = window.min_from(bx.nu).unwrap_or(0.0);
    if !(2.0 * lambda >= eps) || lambda <= 0.0 {
        return Ok(0.0);
    }
    let by_len = (bx.max_len as f64 + 1.0) * (2.0 * lambda - eps) - 8.0 * eps - x_norm;
    let by_index = match window.min_from(bx.k_max + 1) {
        Some(l) => 2.0 * l - 9.0 * eps - x_norm,
        None => 0.0,
    };
    Ok(by_len.min(by_index).max(0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub word: Word,
    pub norm: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub k_used: u64,
    pub m_used: usize,
    pub certified: bool,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub value: f64,
    pub satisfied: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub family: String,
    pub nu: u64,
    pub query: PseudoBallQuery,
    pub count: u64,
    pub witnesses: Vec<Witness>,
    pub truncation: Truncation,
    pub pruned: u64,
    pub pruning_enabled: bool,
    pub words_visited: u64,
    /// Empirical `ε̂`; not the sequence of the existence statement.
    pub epsilon_hat: f64,
    pub epsilon_box: WordBox,
    pub bound_checks: BTreeMap<String, BoundCheck>,
    pub convention: String,
}

#[derive(Default)]
struct CountAcc {
    witnesses: Vec<Witness>,
    pruned: u64,
    visited: u64,
}

/// `N_Γ(x, R)` over a truncation box, optionally pruning subtrees that provably overshoot.
pub fn count_orbit(fam: &SequenceFamily, nu: u64, q: &PseudoBallQuery, limits: CountLimits, prune: bool) -> Result<CountReport> {
    let (bx, certified, mut eps, mut eps_box) = match limits {
        CountLimits::Auto => {
            let c = certified_limits(fam, nu, q)?;
            (WordBox::new(nu, c.k_max, c.max_len), c.certified, c.epsilon_hat, c.epsilon_box)
        }
        CountLimits::Box { k_max, max_len } => (WordBox::new(nu, k_max, max_len), false, f64::NAN, WordBox::new(nu, nu, 0)),
    };
    if bx.max_len > 0 {
        let rep = check_assumptions(&fam.clone().with_nu(nu), bx.k_max)?;
        if !rep.assumption1_ok {
            return Err(Error::Assumption(format!(
                "{} fails at k = {}",
                rep.violated_inequality.unwrap_or_default(),
                rep.first_violation.unwrap_or(nu)
            )));
        }
    }
    let x_norm = pseudo_norm(&q.x);
    let lambda_min = if bx.generators() > 0 {
        (nu..=bx.k_max).map(|k| fam.values(k).map(|v| v.log_ratio())).collect::<Result<Vec<_>>>()?.into_iter().fold(f64::INFINITY, f64::min)
    } else {
        f64::INFINITY
    };
    let mut pruning = prune && bx.max_len > 1 && lambda_min > 0.0;
    if pruning && !eps_box.contains(&bx) {
        eps = estimate_epsilon(fam, nu, bx.k_max, bx.max_len)?;
        eps_box = bx;
    }
    if pruning && !(2.0 * lambda_min >= eps) {
        pruning = false;
    }
    if eps.is_nan() {
        eps = estimate_epsilon(fam, nu, bx.k_max, bx.max_len)?;
        eps_box = bx;
    }
    let radius = q.radius;
    let x = q.x;
    let parts: Vec<CountAcc> = walk_box(fam, &bx, &OrbitState::identity(), |w, st, acc: &mut CountAcc| {
        acc.visited += 1;
        let norm = st.orbit_norm(&x)?;
        if norm <= radius {
            acc.witnesses.push(Witness { word: Word::from_letters(w.to_vec())?, norm, gap: st.predicted_gap() });
        }
        if pruning && w.len() < bx.max_len {
            let lower = st.predicted_gap() - (w.len() as f64 + 8.0) * eps - x_norm;
            if lower > radius + SLACK {
                acc.pruned += 1;
                return Ok(false);
            }
        }
        Ok(true)
    })?;
    let mut witnesses = Vec::new();
    if x_norm <= radius {
        witnesses.push(Witness { word: Word::identity(), norm: x_norm, gap: 0.0 });
    }
    let (mut pruned, mut visited) = (0, 1);
    for p in parts {
        witnesses.extend(p.witnesses);
        pruned += p.pruned;
        visited += p.visited;
    }
    witnesses.sort_by(|a, b| a.word.cmp(&b.word));
    let count = witnesses.len() as u64;
    let mut bound_checks = BTreeMap::new();
    let thm = (2.0 * radius + 16.0).exp2();
    bound_checks.insert("thm_2^{2R+16}".to_string(), BoundCheck { value: thm, satisfied: (count as f64) <= thm });
    let note = if certified { "certified" } else { "lower bound only" };
    Ok(CountReport {
        family: fam.name.clone(),
        nu,
        query: *q,
        count,
        witnesses,
        truncation: Truncation { k_used: bx.k_max, m_used: bx.max_len, certified, note: note.to_string() },
        pruned,
        pruning_enabled: pruning,
        words_visited: visited,
        epsilon_hat: eps,
        epsilon_box: eps_box,
        bound_checks,
        convention: CONVENTION.to_string(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessScan {
    pub family: String,
    pub nu: u64,
    #[serde(rename = "R")]
    pub radius: f64,
    /// Number of `k ≥ ν` with `‖(α_k⁻¹, β_k⁻¹)E‖ ≤ R`.
    pub count: u64,
    pub last_witness: Option<u64>,
    pub scanned_to: u64,
    /// The scan hit the end of a tabulated family or the index cap.
    pub truncated: bool,
    /// Closed-form lower bound for the family type, when one is known.
    pub lower_bound: Option<f64>,
    pub ball_volume: f64,
    pub ratio_to_volume: f64,
}

/// Consecutive exceedances required before the scan stops.
pub const SCAN_MARGIN: u64 = 16;
const SCAN_CAP: u64 = 1 << 40;

/// `‖(α_k⁻¹, β_k⁻¹)E‖` via `α_k⁻¹β_k·i = (1 − s) a1 + s i`, `s = (r/R)²`.
pub fn single_witness_norm(fam: &SequenceFamily, k: u64) -> Result<f64> {
    let v = fam.values(k)?;
    let s = (v.r / v.big_r).square();
    let re = v.a1 * (Slr::ONE - s);
    Ok(point_norm(&HPoint::new(re, s)?))
}

pub fn lower_bound_witness_count(fam: &SequenceFamily, nu: u64, radius: f64) -> Result<WitnessScan> {
    if !(radius >= 1.0) {
        return domain("witness scan needs R >= 1");
    }
    let cosh_r = radius.cosh();
    let end = fam.max_index().unwrap_or(u64::MAX).min(nu.saturating_add(SCAN_CAP));
    let mut count = 0u64;
    let mut last = None;
    let mut misses = 0u64;
    
    let mut k = nu;
    let mut truncated = false;
    loop {
        if k > end {
            truncated = true;
            k = end;
            break;
        }
        let inside = match fam.values_f64(k) {
            Some([a1, _, r, big_r]) => {
                let s = (r / big_r) * (r / big_r);
                let u = (1.0 - s) * a1;
                // cosh d = (u² + s² + 1)/(2s)
                u * u + s * s + 1.0 <= 2.0 * s * cosh_r
            }
            None => single_witness_norm(fam, k)? <= radius,
        };
        if inside {
            count += 1;
            last = Some(k);
            misses = 0;
        } else {
            misses += 1;
            if misses >= SCAN_MARGIN {
                break;
            }
        }
        k += 1;
    }
    let y = ((radius - 1.0) / 4.0).exp();
    let lower_bound = if let Some(maj) = &fam.majorant {
        (y <= maj.x_max()).then(|| y * maj.value(y) - nu as f64)
    } else if fam.preset_kind() == Some(crate::family::Preset::LogSlow) {
        Some(y.exp() - nu as f64)
    } else {
        None
    };
    let vol = ball_volume(radius)?;
    Ok(WitnessScan {
        family: fam.name.clone(),
        nu,
        radius,
        count,
        last_witness: last,
        scanned_to: k,
        truncated,
        lower_bound,
        ball_volume: vol,
        ratio_to_volume: count as f64 / vol,
    })
}

/// Number of tuples of positive integers with sum at most `R`, by visiting every tuple.
pub fn tuple_count_bruteforce(r: u32) -> Result<u64> {
    if !(1..=24).contains(&r) {
        return domain(format!("R = {r} outside 1..=24"));
    }
    fn extend(remaining: u32) -> u64 {
        let mut n = 0;
        for k in 1..=remaining {
            n += 1 + extend(remaining - k);
        }
        n
    }
    Ok(extend(r))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletOutcome {
    pub in_domain: bool,
    pub violation: Option<Witness>,
    pub x_norm: f64,
    pub words_checked: u64,
    pub k_used: u64,
    pub m_used: usize,
    pub certified: bool,
}

#[derive(Default)]
struct DirichletAcc {
    first: Option<Witness>,
    checked: u64,
}

/// Is `x` in the Dirichlet domain, i.e. `‖γx‖ ≥ ‖x‖` for every enumerated `γ`?
pub fn dirichlet_check(fam: &SequenceFamily, nu: u64, x: &Mobius, limits: CountLimits) -> Result<DirichletOutcome> {
    let x_norm = pseudo_norm(x);
    let (bx, certified) = match limits {
        CountLimits::Auto => {
            let c = certified_limits(fam, nu, &PseudoBallQuery::new(*x, 2.0 * x_norm)?)?;
            (WordBox::new(nu, c.k_max, c.max_len), c.certified)
        }
        CountLimits::Box { k_max, max_len } => (WordBox::new(nu, k_max, max_len), false),
    };
    let x = *x;
    let parts: Vec<DirichletAcc> = walk_box(fam, &bx, &OrbitState::identity(), |w, st, acc: &mut DirichletAcc| {
        acc.checked += 1;
        let norm = st.orbit_norm(&x)?;
        if norm < x_norm - SLACK {
            let word = Word::from_letters(w.to_vec())?;
            if acc.first.as_ref().map_or(true, |f| word < f.word) {
                acc.first = Some(Witness { word, norm, gap: st.predicted_gap() });
            }
        }
        Ok(true)
    })?;
    let mut violation: Option<Witness> = None;
    let mut checked = 1;
    for p in parts {
        checked += p.checked;
        if let Some(f) = p.first {
            if violation.as_ref().map_or(true, |v| f.word < v.word) {
                violation = Some(f);
            }
        }
    }
    Ok(DirichletOutcome {
        in_domain: violation.is_none(),
        violation,
        x_norm,
        words_checked: checked,
        k_used: bx.k_max,
        m_used: bx.max_len,
        certified,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpnessRecord {
    pub word: Word,
    pub x_norm: f64,
    pub y_norm: f64,
    pub r_polar: f64,
    pub theta: f64,
    pub ratio: f64,
}

impl SharpnessRecord {
    pub fn new(word: Word, x: f64, y: f64) -> Self {
        let r = x.hypot(y);
        let ratio = if r > 0.0 { (x - y).abs() / r } else { 0.0 };
        let theta = if r > 0.0 { y.atan2(x).clamp(0.0, std::f64::consts::FRAC_PI_2) } else { 0.0 };
        Self { word, x_norm: x, y_norm: y, r_polar: r, theta, ratio }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpnessVerdict {
    pub first_ratio: f64,
    pub last_ratio: f64,
    /// Fraction of consecutive single-generator steps where the ratio decreased.
    pub decreasing_fraction: f64,
    pub monotone_decreasing: bool,
    /// Ratio at the last index is below half the ratio at `ν`.
    pub halved: bool,
    pub c_max: f64,
    /// Largest `c` compatible with `|x − y| ≥ √2 c r − C_max` on every record.
    pub c_sup: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpnessScan {
    pub family: String,
    pub nu: u64,
    pub k_max: u64,
    pub records: Vec<SharpnessRecord>,
    pub verdict: SharpnessVerdict,
}

pub const DEFAULT_C_MAX: f64 = 10.0;
/// Longer words are sampled from the first few generators only.
const SAMPLE_WIDTH: u64 = 3;

pub fn sharpness_scan(fam: &SequenceFamily, nu: u64, k_max: u64, max_len: usize) -> Result<SharpnessScan> {
    sharpness_scan_with(fam, nu, k_max, max_len, DEFAULT_C_MAX)
}

pub fn sharpness_scan_with(fam: &SequenceFamily, nu: u64, k_max: u64, max_len: usize, c_max: f64) -> Result<SharpnessScan> {
    if k_max < nu {
        return domain("sharpness scan needs K >= nu");
    }
    let mut records = Vec::new();
    for k in nu..=k_max {
        let (a, b) = generators(fam, k)?;
        let w = Word::from_letters(vec![crate::words::Letter::plus(k)])?;
        records.push(SharpnessRecord::new(w, pseudo_norm(&a), pseudo_norm(&b)));
    }
    let singles = records.len();
    if max_len >= 2 {
        let bx = WordBox::new(nu, k_max.min(nu + SAMPLE_WIDTH), max_len);
        let parts: Vec<Vec<SharpnessRecord>> = walk_box(fam, &bx, &OrbitState::identity(), |w, st, acc: &mut Vec<SharpnessRecord>| {
            if w.len() >= 2 {
                acc.push(SharpnessRecord::new(Word::from_letters(w.to_vec())?, st.norm_j(), st.norm_rho()));
            }
            Ok(true)
        })?;
        let mut longer: Vec<SharpnessRecord> = parts.into_iter().flatten().collect();
        longer.sort_by(|a, b| a.word.cmp(&b.word));
        records.extend(longer);
    }
    let ratios: Vec<f64> = records[..singles].iter().map(|r| r.ratio).collect();
    let steps = ratios.len().saturating_sub(1);
    let down = ratios.windows(2).filter(|w| w[1] < w[0]).count();
    let first_ratio = ratios[0];
    let last_ratio = *ratios.last().expect("at least one index");
    let c_sup = records
        .iter()
        .filter(|r| r.r_polar > 0.0)
        .map(|r| ((r.x_norm - r.y_norm).abs() + c_max) / (std::f64::consts::SQRT_2 * r.r_polar))
        .fold(f64::INFINITY, f64::min);
    let verdict = SharpnessVerdict {
        first_ratio,
        last_ratio,
        decreasing_fraction: if steps == 0 { 0.0 } else { down as f64 / steps as f64 },
        monotone_decreasing: steps > 0 && down == steps,
        halved: last_ratio < 0.5 * first_ratio,
        c_max,
        c_sup,
    };
    Ok(SharpnessScan { family: fam.name.clone(), nu, k_max, records, verdict })
}

/// Number of words in the box with `|‖j(w)‖ − ‖ρ(w)‖| < R`, for each length bound `1..=max_len`.
pub fn properness_profile(fam: &SequenceFamily, nu: u64, k_max: u64, radius: f64, max_len: usize) -> Result<Vec<(usize, u64)>> {
    let bx = WordBox::new(nu, k_max, max_len);
    let parts: Vec<Vec<u64>> = walk_box(fam, &bx, &OrbitState::identity(), |w, st, acc: &mut Vec<u64>| {
        if acc.is_empty() {
            acc.resize(max_len + 1, 0);
        }
        if (st.norm_j() - st.norm_rho()).abs() < radius {
            acc[w.len()] += 1;
        }
        Ok(true)
    })?;
    let mut by_len = vec![0u64; max_len + 1];
    by_len[0] = 1;
    for p in parts {
        for (i, c) in p.into_iter().enumerate() {
            by_len[i] += c;
        }
    }
    let mut out = Vec::with_capacity(max_len);
    let mut acc = by_len[0];
    for (m, c) in by_len.iter().enumerate().skip(1) {
        acc += c;
        out.push((m, acc));
    }
    Ok(out)
}
