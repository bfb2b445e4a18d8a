//! Reduced words in the generators `γ_k^{±1}`, their images under `j` and `ρ`, and the norm gap.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::family::{generators, SequenceFamily, SequenceValues};
use crate::hyperbolic::{compose_chain, pseudo_norm, AnchoredPoint, HPoint, Mobius};
use crate::numerics::{LogPolar, Slr, SlrComplex};

/// `γ_k^{sign}` with `sign = ±1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Letter {
    pub index: u64,
    pub sign: i8,
}

impl Letter {
    pub fn new(index: u64, sign: i8) -> Result<Self> {
        if sign != 1 && sign != -1 {
            return domain(format!("letter sign must be +1 or -1, got {sign}"));
        }
        Ok(Self { index, sign })
    }

    pub fn plus(index: u64) -> Self {
        Self { index, sign: 1 }
    }

    pub fn minus(index: u64) -> Self {
        Self { index, sign: -1 }
    }

    pub fn inverse(self) -> Self {
        Self { index: self.index, sign: -self.sign }
    }

    // +1 sorts before -1
    fn key(self) -> (u64, bool) {
        (self.index, self.sign < 0)
    }
}

impl Ord for Letter {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for Letter {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", self.index, if self.sign > 0 { '+' } else { '-' })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn from_letters(letters: Vec<Letter>) -> Result<Self> {
        if letters.windows(2).any(|w| w[1] == w[0].inverse()) {
            return domain("word is not reduced");
        }
        Ok(Self { letters })
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Self { letters: self.letters.iter().rev().map(|l| l.inverse()).collect() }
    }

    pub fn multiply(&self, letter: Letter) -> Self {
        let mut letters = self.letters.clone();
        if letters.last() == Some(&letter.inverse()) {
            letters.pop();
        } else {
            letters.push(letter);
        }
        Self { letters }
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.letters.cmp(&other.letters))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("e");
        }
        for (i, l) in self.letters.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "e" || s.is_empty() {
            return Ok(Self::identity());
        }
        let mut letters = Vec::new();
        for part in s.split('.') {
            let (k, sign) = part.split_once('^').ok_or_else(|| Error::Parse(format!("bad letter '{part}'")))?;
            let index = k.parse().map_err(|_| Error::Parse(format!("bad index in '{part}'")))?;
            let sign = match sign {
                "+" | "1" | "+1" => 1,
                "-" | "-1" => -1,
                _ => return Err(Error::Parse(format!("bad sign in '{part}'"))),
            };
            letters.push(Letter { index, sign });
        }
        Self::from_letters(letters)
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn word_multiply(w: &Word, letter: Letter) -> Word {
    w.multiply(letter)
}

/// `(j(w), ρ(w))` as matrix products in word order.
pub fn evaluate(w: &Word, fam: &SequenceFamily) -> Result<(Mobius, Mobius)> {
    let mut js = Vec::with_capacity(w.len());
    let mut rs = Vec::with_capacity(w.len());
    for l in w.letters() {
        let (a, b) = generators(fam, l.index)?;
        if l.sign > 0 {
            js.push(a);
            rs.push(b);
        } else {
            js.push(a.inverse());
            rs.push(b.inverse());
        }
    }
    Ok((compose_chain(&js), compose_chain(&rs)))
}

/// Reduced words over `[ν, K]` of length at most `M`, in length-then-lexicographic order.
#[derive(Clone, Debug)]
pub struct WordEnumerator {
    nu: u64,
    letters: usize,
    max_len: usize,
    ids: Vec<usize>,
    started: bool,
    done: bool,
}

pub fn enumerate_words(nu: u64, k_max: u64, max_len: usize) -> WordEnumerator {
    let letters = if k_max >= nu { 2 * (k_max - nu + 1) as usize } else { 0 };
    WordEnumerator { nu, letters, max_len, ids: Vec::new(), started: false, done: false }
}

/// Number of reduced words of length at most `M` in `g` generators.
pub fn word_count(generators: u64, max_len: usize) -> u128 {
    let n = 2 * generators as u128;
    if n == 0 {
        return 1;
    }
    let mut total = 1u128;
    let mut sphere = n;
    for _ in 0..max_len {
        total += sphere;
        sphere *= n - 1;
    }
    total
}

impl WordEnumerator {
    fn letter(&self, id: usize) -> Letter {
        Letter { index: self.nu + (id / 2) as u64, sign: if id % 2 == 0 { 1 } else { -1 } }
    }

    fn smallest_after(&self, prev: Option<usize>, from: usize) -> Option<usize> {
        let mut id = from;
        if prev == Some(id ^ 1) {
            id += 1;
        }
        (id < self.letters).then_some(id)
    }

    fn fill_from(&mut self, pos: usize) -> bool {
        for p in pos..self.ids.len() {
            let prev = p.checked_sub(1).map(|q| self.ids[q]);
            match self.smallest_after(prev, 0) {
                Some(id) => self.ids[p] = id,
                None => return false,
            }
        }
        true
    }

    fn advance(&mut self) -> bool {
        let mut pos = self.ids.len();
        while pos > 0 {
            pos -= 1;
            let prev = pos.checked_sub(1).map(|q| self.ids[q]);
            if let Some(id) = self.smallest_after(prev, self.ids[pos] + 1) {
                self.ids[pos] = id;
                if self.fill_from(pos + 1) {
                    return true;
                }
            }
        }
        let len = self.ids.len() + 1;
        if len > self.max_len || self.letters == 0 {
            return false;
        }
        self.ids = vec![0; len];
        self.fill_from(0)
    }
}

impl Iterator for WordEnumerator {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(Word::identity());
        }
        if !self.advance() {
            self.done = true;
            return None;
        }
        Some(Word { letters: self.ids.iter().map(|&id| self.letter(id)).collect() })
    }
}

/// Cached orbit data of a word `w` along the enumeration tree.
///
/// Holds `z1 = j(w)⁻¹ T1 · i` and `z2 = ρ(w)⁻¹ T2 · i` as anchored points,
/// their lifts `λ` (so that `G (i, 1) = λ (G·i, 1)`), and the predicted gap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitState {
    j: AnchoredPoint,
    j_lift: LogPolar,
    rho: AnchoredPoint,
    rho_lift: LogPolar,
    gap: f64,
    len: usize,
}

impl OrbitState {
    pub fn identity() -> Self {
        Self { j: AnchoredPoint::i(), j_lift: LogPolar::ONE, rho: AnchoredPoint::i(), rho_lift: LogPolar::ONE, gap: 0.0, len: 0 }
    }

    /// Start from translates `(T1, T2)` instead of the identity.
    pub fn translated(t1: &Mobius, t2: &Mobius) -> Result<Self> {
        let (j, q1) = AnchoredPoint::i().apply(t1)?;
        let (rho, q2) = AnchoredPoint::i().apply(t2)?;
        Ok(Self { j, j_lift: LogPolar::from_complex(q1), rho, rho_lift: LogPolar::from_complex(q2), gap: 0.0, len: 0 })
    }

    /// State of `w · letter`, given the sequence values at the letter's index.
    pub fn push(&self, letter: Letter, v: &SequenceValues) -> Result<Self> {
        let (j, j_fac) = step(&self.j, letter.sign, v, v.r)?;
        let (rho, rho_fac) = step(&self.rho, letter.sign, v, v.big_r)?;
        Ok(Self {
            j,
            j_lift: self.j_lift.mul(j_fac),
            rho,
            rho_lift: self.rho_lift.mul(rho_fac),
            gap: self.gap + 2.0 * v.log_ratio(),
            len: self.len + 1,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn j_point(&self) -> &AnchoredPoint {
        &self.j
    }

    pub fn rho_point(&self) -> &AnchoredPoint {
        &self.rho
    }

    /// `‖j(w)‖`; meaningful for untranslated states.
    pub fn norm_j(&self) -> f64 {
        self.j.norm()
    }

    pub fn norm_rho(&self) -> f64 {
        self.rho.norm()
    }

    /// `2 Σ log(R(k_i)/r(k_i))`.
    pub fn predicted_gap(&self) -> f64 {
        self.gap
    }

    pub fn gap_residual(&self) -> f64 {
        (self.norm_j() - self.norm_rho() - self.gap).abs()
    }

    /// `‖j(w) x ρ(w)⁻¹‖ = d(x·z2, z1)` for untranslated states.
    pub fn orbit_norm(&self, x: &Mobius) -> Result<f64> {
        if *x == Mobius::identity() {
            return Ok(self.rho.distance(&self.j));
        }
        let (xz, _) = self.rho.apply(x)?;
        Ok(xz.distance(&self.j))
    }

    /// `x1 + i x2` of `Y = G1⁻¹ x G2`, as `(i/2) λ1 conj(λ2 q) (conj(x z2) − z1)` with `q = x21 z2 + x22`.
    pub fn ads_phase(&self, x: &Mobius) -> Result<LogPolar> {
        let (xz, q) = self.rho.apply(x)?;
        let z1 = &self.j;
        let diff = SlrComplex::new((xz.anchor() - z1.anchor()) + (xz.offset().re - z1.offset().re), -(xz.im() + z1.im()));
        if diff.re.is_zero() && diff.im.is_zero() {
            return Err(Error::Pole("orbit point at the pole".into()));
        }
        let half_i = LogPolar::new(-std::f64::consts::LN_2, std::f64::consts::FRAC_PI_2);
        let lam2q = self.rho_lift.mul(LogPolar::from_complex(q));
        Ok(half_i.mul(self.j_lift).mul(lam2q.conj()).mul(LogPolar::from_complex(diff)))
    }
}

/// Applies `α^{-s}` (radius `u`) outermost; returns the new point and the factor `cz + d`.
fn step(z: &AnchoredPoint, sign: i8, v: &SequenceValues, u: Slr) -> Result<(AnchoredPoint, LogPolar)> {
    if sign < 0 {
        // α z = a2 − u²/(z − a1), factor (z − a1)/u
        let (w, delta) = z.invert(v.a1, v.a2, u)?;
        let f = LogPolar::from_complex(delta);
        Ok((w, LogPolar::new(f.ln_abs - u.logmag(), f.arg)))
    } else {
        // α⁻¹ z = a1 − u²/(z − a2), factor −(z − a2)/u
        let (w, delta) = z.invert(v.a2, v.a1, u)?;
        let f = LogPolar::from_complex(-delta);
        Ok((w, LogPolar::new(f.ln_abs - u.logmag(), f.arg)))
    }
}

/// Orbit state of a whole word, computed letter by letter.
pub fn orbit_state(w: &Word, fam: &SequenceFamily) -> Result<OrbitState> {
    let mut st = OrbitState::identity();
    for &l in w.letters() {
        st = st.push(l, &fam.values(l.index)?)?;
    }
    Ok(st)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiskSide {
    A1,
    A2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PingPongRecord {
    pub word: Word,
    pub predicted_index: u64,
    pub predicted_side: DiskSide,
    pub actual_j: HPoint,
    pub actual_rho: HPoint,
    pub contained_j: bool,
    pub contained_rho: bool,
    /// `d(j(w)·i, i)`.
    pub freeness_distance: f64,
}

impl PingPongRecord {
    pub fn contained(&self) -> bool {
        self.contained_j && self.contained_rho
    }
}

const DISK_SLACK: f64 = 1e-9;

fn inside(z: &AnchoredPoint, center: Slr, radius: Slr) -> bool {
    z.displacement(center).ln_abs() < radius.logmag() + DISK_SLACK.ln_1p()
}

/// Locates `j(w)·i` and `ρ(w)·i` and checks they sit in the disk predicted by the first letter.
pub fn pingpong_locate(w: &Word, fam: &SequenceFamily) -> Result<PingPongRecord> {
    let first = *w.letters().first().ok_or_else(|| Error::Domain("ping-pong needs a non-identity word".into()))?;
    // The state of w⁻¹ holds j(w)·i.
    let st = orbit_state(&w.inverse(), fam)?;
    pingpong_from_state(w.clone(), first, &st, &fam.values(first.index)?)
}

fn pingpong_from_state(word: Word, first: Letter, st: &OrbitState, v: &SequenceValues) -> Result<PingPongRecord> {
    let (side, center) = if first.sign > 0 { (DiskSide::A2, v.a2) } else { (DiskSide::A1, v.a1) };
    Ok(PingPongRecord {
        word,
        predicted_index: first.index,
        predicted_side: side,
        actual_j: st.j.to_hpoint(),
        actual_rho: st.rho.to_hpoint(),
        contained_j: inside(&st.j, center, v.r),
        contained_rho: inside(&st.rho, center, v.big_r),
        freeness_distance: st.norm_j(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub word: Word,
    pub norm_j: f64,
    pub norm_rho: f64,
    pub predicted_gap: f64,
    pub residual: f64,
}

/// Norms of `j(w)` and `ρ(w)` from their matrices, against `2 Σ log(R/r)`.
pub fn gap_record(w: &Word, fam: &SequenceFamily) -> Result<GapRecord> {
    if w.is_identity() {
        return domain("gap record needs a non-identity word");
    }
    let (j, rho) = evaluate(w, fam)?;
    let mut gap = 0.0;
    for l in w.letters() {
        gap += 2.0 * fam.values(l.index)?.log_ratio();
    }
    let norm_j = pseudo_norm(&j);
    let norm_rho = pseudo_norm(&rho);
    Ok(GapRecord { word: w.clone(), norm_j, norm_rho, predicted_gap: gap, residual: (norm_j - norm_rho - gap).abs() })
}

/// Enumeration box: indices in `[nu, k_max]`, lengths up to `max_len`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordBox {
    pub nu: u64,
    pub k_max: u64,
    pub max_len: usize,
}

impl WordBox {
    pub fn new(nu: u64, k_max: u64, max_len: usize) -> Self {
        Self { nu, k_max, max_len }
    }

    pub fn generators(&self) -> u64 {
        if self.k_max >= self.nu {
            self.k_max - self.nu + 1
        } else {
            0
        }
    }

    pub fn word_count(&self) -> u128 {
        word_count(self.generators(), self.max_len)
    }

    pub fn contains(&self, other: &WordBox) -> bool {
        other.generators() == 0 || other.max_len == 0 || (self.nu <= other.nu && other.k_max <= self.k_max && other.max_len <= self.max_len)
    }
}

pub(crate) struct LetterTable {
    letters: Vec<Letter>,
    values: Vec<SequenceValues>,
}

impl LetterTable {
    pub(crate) fn new(fam: &SequenceFamily, bx: &WordBox) -> Result<Self> {
        let mut letters = Vec::new();
        let mut values = Vec::new();
        if bx.generators() > 0 {
            for k in bx.nu..=bx.k_max {
                let v = fam.values(k)?;
                letters.push(Letter::plus(k));
                letters.push(Letter::minus(k));
                values.push(v);
                values.push(v);
            }
        }
        Ok(Self { letters, values })
    }
}

/// Depth-first walk over the non-identity words of a box, one worker per first letter.
///
/// `visit` sees each word with its cached state and returns whether to descend.
/// Accumulators come back in the canonical order of first letters.
pub(crate) fn walk_box<A, V>(fam: &SequenceFamily, bx: &WordBox, root: &OrbitState, visit: V) -> Result<Vec<A>>
where
    A: Default + Send,
    V: Fn(&[Letter], &OrbitState, &mut A) -> Result<bool> + Sync,
{
    if bx.max_len == 0 || bx.generators() == 0 {
        return Ok(Vec::new());
    }
    let table = LetterTable::new(fam, bx)?;
    (0..table.letters.len())
        .into_par_iter()
        .map(|id| {
            let mut acc = A::default();
            let mut prefix = Vec::with_capacity(bx.max_len);
            descend(&table, bx.max_len, id, root, &mut prefix, &visit, &mut acc)?;
            Ok(acc)
        })
        .collect()
}

fn descend<A, V>(
    table: &LetterTable,
    max_len: usize,
    id: usize,
    parent: &OrbitState,
    prefix: &mut Vec<Letter>,
    visit: &V,
    acc: &mut A,
) -> Result<()>
where
    V: Fn(&[Letter], &OrbitState, &mut A) -> Result<bool>,
{
    let st = parent.push(table.letters[id], &table.values[id])?;
    prefix.push(table.letters[id]);
    let go_on = visit(prefix, &st, acc)?;
    if go_on && prefix.len() < max_len {
        for child in 0..table.letters.len() {
            if child != (id ^ 1) {
                descend(table, max_len, child, &st, prefix, visit, acc)?;
            }
        }
    }
    prefix.pop();
    Ok(())
}

/// Empirical `ε̂`: max over non-identity words of the box of `residual/(m + 8)`.
pub fn estimate_epsilon(fam: &SequenceFamily, nu: u64, k_max: u64, max_len: usize) -> Result<f64> {
    let bx = WordBox::new(nu, k_max, max_len);
    let parts: Vec<MaxAcc> = walk_box(fam, &bx, &OrbitState::identity(), |w, st, acc: &mut MaxAcc| {
        let e = st.gap_residual() / (w.len() as f64 + 8.0);
        if e > acc.0 {
            acc.0 = e;
        }
        Ok(true)
    })?;
    Ok(parts.into_iter().fold(0.0, |m, a| m.max(a.0)))
}

#[derive(Default)]
struct MaxAcc(f64);

/// Ping-pong records for every non-identity word of the box.
pub fn pingpong_scan(fam: &SequenceFamily, bx: &WordBox) -> Result<PingPongSummary> {
    // The state of w holds j(w)⁻¹·i = j(w⁻¹)·i, the ping-pong point of w⁻¹.
    let parts: Vec<PingPongSummary> = walk_box(fam, bx, &OrbitState::identity(), |w, st, acc: &mut PingPongSummary| {
        let last = *w.last().expect("non-empty");
        let first_of_inverse = last.inverse();
        let rec = pingpong_from_state(Word::identity(), first_of_inverse, st, &fam.values(last.index)?)?;
        acc.words += 1;
        if rec.contained() {
            acc.contained += 1;
        } else if acc.first_failure.is_none() {
            let word = Word { letters: w.to_vec() }.inverse();
            acc.first_failure = Some(word);
        }
        acc.min_freeness_distance = acc.min_freeness_distance.min(rec.freeness_distance);
        Ok(true)
    })?;
    let mut out = PingPongSummary::default();
    for p in parts {
        out.words += p.words;
        out.contained += p.contained;
        out.min_freeness_distance = out.min_freeness_distance.min(p.min_freeness_distance);
        if out.first_failure.is_none() {
            out.first_failure = p.first_failure;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PingPongSummary {
    pub words: u64,
    pub contained: u64,
    pub first_failure: Option<Word>,
    pub min_freeness_distance: f64,
}

impl Default for PingPongSummary {
    fn default() -> Self {
        Self { words: 0, contained: 0, first_failure: None, min_freeness_distance: f64::INFINITY }
    }
}
