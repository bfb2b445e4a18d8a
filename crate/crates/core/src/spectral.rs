//! The eigenfunctions `ψ_m(x) = (x1 + i x2)^{−m}`, their Poincaré series over the group,
//! tail bounds, non-vanishing and a finite-difference check of the eigenvalue `m(m−2)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::family::SequenceFamily;
use crate::hyperbolic::{ads_coords, coords_to_mobius, pseudo_norm, AdSCoords, Mobius};
use crate::numerics::{LogPolar, Slr, SlrComplex};
use crate::orbit::{count_orbit, covered_radius, CountLimits, PseudoBallQuery};
use crate::words::{estimate_epsilon, walk_box, OrbitState, WordBox};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenFunctionSpec {
    pub m: u32,
    pub eigenvalue: f64,
    /// `(g1, g2)` for the translate `ℓ_g^* ψ_m = ψ_m(g⁻¹ ·)`.
    pub translate: (Mobius, Mobius),
}

impl EigenFunctionSpec {
    pub fn new(m: u32) -> Result<Self> {
        if m < 2 {
            return domain(format!("m = {m} must be at least 2"));
        }
        let mf = m as f64;
        Ok(Self { m, eigenvalue: mf * (mf - 2.0), translate: (Mobius::identity(), Mobius::identity()) })
    }

    pub fn with_translate(mut self, g1: Mobius, g2: Mobius) -> Self {
        self.translate = (g1, g2);
        self
    }

    fn is_untranslated(&self) -> bool {
        self.translate.0 == Mobius::identity() && self.translate.1 == Mobius::identity()
    }

    /// `ψ_m` at a phase `x1 + i x2` given in polar form.
    fn from_phase(&self, a: LogPolar) -> LogPolar {
        a.powi(-(self.m as i32))
    }
}

/// `(x1 + i x2)^{−m}` on the principal branch, composed with the translate.
pub fn psi(spec: &EigenFunctionSpec, x: &AdSCoords) -> Result<Complex64> {
    let y = if spec.is_untranslated() {
        *x
    } else {
        let (g1, g2) = &spec.translate;
        ads_coords(&g1.inverse().compose(&coords_to_mobius(x)?).compose(g2))?
    };
    psi_raw(spec.m, &y)
}

fn psi_raw(m: u32, x: &AdSCoords) -> Result<Complex64> {
    let z = Complex64::new(x.x1, x.x2);
    if z.norm_sqr() == 0.0 {
        return Err(Error::Pole("x1 = x2 = 0".into()));
    }
    let m = m as f64;
    Ok(Complex64::from_polar((-m * z.norm().ln()).exp(), -m * z.arg()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub a: f64,
    #[serde(rename = "A")]
    pub big_a: f64,
    /// Least-squares slope of `ln N` on the upper half of the samples.
    pub slope: f64,
}

pub const FIT_GRID: [f64; 5] = [0.5, 1.0, 1.5, 2.0, 2.5];

/// Exponential majorant `N(n) ≤ A e^{an}` of orbit counts sampled at radii `n`.
///
/// `a` is the least grid value not below the measured growth rate; `A` is then the least
/// constant that majorizes every sample.
pub fn fit_growth(samples: &[(f64, u64)]) -> Result<GrowthFit> {
    if samples.is_empty() || samples.iter().any(|s| s.1 == 0) {
        return domain("growth fit needs positive counts");
    }
    let upper = &samples[samples.len() / 2..];
    let slope = if upper.len() < 2 {
        0.0
    } else {
        let n = upper.len() as f64;
        let mx = upper.iter().map(|s| s.0).sum::<f64>() / n;
        let my = upper.iter().map(|s| (s.1 as f64).ln()).sum::<f64>() / n;
        let sxy: f64 = upper.iter().map(|s| (s.0 - mx) * ((s.1 as f64).ln() - my)).sum();
        let sxx: f64 = upper.iter().map(|s| (s.0 - mx).powi(2)).sum();
        if sxx > 0.0 { sxy / sxx } else { 0.0 }
    };
    let a = FIT_GRID.iter().copied().find(|&a| a >= slope - 1e-12).ok_or_else(|| {
        Error::Domain(format!("orbit growth rate {slope:.3} exceeds the fit grid"))
    })?;
    let big_a = samples.iter().map(|&(n, c)| c as f64 * (-a * n).exp()).fold(0.0, f64::max);
    Ok(GrowthFit { a, big_a, slope })
}

const TAIL_REL: f64 = 1e-18;
const TAIL_MAX_TERMS: u64 = 10_000_000;

/// `Σ_{n ≥ n0} A e^{a c n} cosh(c(n−1)/2)^{−m}` plus a geometric remainder bound.
pub fn tail_bound_op(m: f64, a: f64, big_a: f64, n0: u64, c_g: f64) -> Result<f64> {
    tail_bound_shifted(m, a, big_a, n0, c_g, 0.0)
}

/// Same sum with `cosh(max(0, c(n−1) − shift)/2)`, for translated eigenfunctions.
fn tail_bound_shifted(m: f64, a: f64, big_a: f64, n0: u64, c_g: f64, shift: f64) -> Result<f64> {
    if !(c_g > 0.0) || !(a >= 0.0) || !(big_a >= 0.0) || n0 < 1 {
        return domain("tail bound needs c > 0, a >= 0, A >= 0, n0 >= 1");
    }
    if !(m > 2.0 * a) {
        return domain(format!("series diverges: m = {m} <= 2a = {}", 2.0 * a));
    }
    if big_a == 0.0 {
        return Ok(0.0);
    }
    let ln_a = big_a.ln();
    let y = |n: u64| ((c_g * (n as f64 - 1.0) - shift).max(0.0)) / 2.0;
    let ln_term = |n: u64| ln_a + a * c_g * n as f64 - m * ln_cosh(y(n));
    let mut sum = Slr::ZERO;
    let mut n = n0;
    loop {
        let t = ln_term(n);
        sum = sum + Slr::from_log(t);
        n += 1;
        let next = ln_term(n);
        if next < sum.logmag() + TAIL_REL.ln() {
            // ratio bound from n on: e^{ac} (cosh y/cosh(y + c/2))^m, decreasing in y
            let yn = y(n);
            let ln_rho = a * c_g + m * (ln_cosh(yn) - ln_cosh(yn + c_g / 2.0));
            if ln_rho < 0.0 {
                let rem = next - (-ln_rho.exp()).ln_1p();
                return Ok((sum + Slr::from_log(rem)).to_f64());
            }
        }
        if n - n0 > TAIL_MAX_TERMS {
            return Err(Error::Internal("tail sum did not settle".into()));
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    pub m: u32,
    pub eigenvalue: f64,
    pub spec: EigenFunctionSpec,
    pub base: Mobius,
    pub depth: WordBox,
    pub partial_sum: [f64; 2],
    pub tail_bound: f64,
    pub nonvanishing: bool,
    pub term_count: u64,
    pub fitted_a: Option<f64>,
    #[serde(rename = "fitted_A")]
    pub fitted_big_a: Option<f64>,
    pub fit_samples: Vec<(f64, u64)>,
    pub covered_radius: f64,
    pub epsilon_hat: f64,
    /// Sum of the terms with orbit norm 0 and of all the others.
    pub zero_norm_part: [f64; 2],
    pub rest: [f64; 2],
    pub zero_norm_terms: u64,
    /// `ln |Σ terms of length ℓ|` and `ln Σ |terms of length ℓ|`, `ℓ = 1..=M`.
    pub shell_increments_ln: Vec<f64>,
    pub shell_moduli_ln: Vec<f64>,
    /// Max over terms of `|ln|ψ| + m ln cosh(‖·‖/2)|`.
    pub modulus_residual: f64,
}

pub const FIT_RADIUS: u32 = 10;
const ZERO_NORM: f64 = 1e-9;

struct Term {
    len: usize,
    value: LogPolar,
    norm: f64,
}

#[derive(Default)]
struct TermAcc(Vec<Term>);

fn to_slr(t: LogPolar) -> SlrComplex {
    let part = |f: f64| if f == 0.0 { Slr::ZERO } else { Slr::from_f64(f) * Slr::from_log(t.ln_abs) };
    SlrComplex::new(part(t.arg.cos()), part(t.arg.sin()))
}

fn to_pair(z: SlrComplex) -> [f64; 2] {
    [z.re.to_f64(), z.im.to_f64()]
}

fn ln_cosh(y: f64) -> f64 {
    let y = y.abs();
    y + (-2.0 * y).exp().ln_1p() - std::f64::consts::LN_2
}

fn ln_cosh_half(norm: f64) -> f64 {
    ln_cosh(norm / 2.0)
}

/// Partial sum of `Σ_γ ψ_m(g⁻¹γ⁻¹ x)` over the words of `depth`, with a tail bound.
pub fn poincare_partial_sum(fam: &SequenceFamily, nu: u64, spec: &EigenFunctionSpec, x: &Mobius, depth: WordBox) -> Result<SeriesReport> {
    if depth.nu != nu {
        return domain("depth box must start at nu");
    }
    let (g1, g2) = spec.translate;
    let root = OrbitState::translated(&g1, &g2)?;
    let xx = *x;
    let parts: Vec<TermAcc> = walk_box(fam, &depth, &root, |w, st, acc: &mut TermAcc| {
        let phase = st.ads_phase(&xx)?;
        acc.0.push(Term { len: w.len(), value: spec.from_phase(phase), norm: st.orbit_norm(&xx)? });
        Ok(true)
    })?;
    let mut terms: Vec<Term> = Vec::new();
    terms.push(Term { len: 0, value: spec.from_phase(root.ads_phase(x)?), norm: root.orbit_norm(x)? });
    terms.extend(parts.into_iter().flat_map(|p| p.0));

    let m = spec.m as f64;
    let mut modulus_residual = 0.0f64;
    let mut zero_part = SlrComplex::ZERO;
    let mut zero_terms = 0;
    let mut shells: Vec<Vec<&Term>> = (0..=depth.max_len).map(|_| Vec::new()).collect();
    for t in &terms {
        modulus_residual = modulus_residual.max((t.value.ln_abs + m * ln_cosh_half(t.norm)).abs());
        if t.norm <= ZERO_NORM {
            zero_part = zero_part + to_slr(t.value);
            zero_terms += 1;
        } else {
            shells[t.len].push(t);
        }
    }
    let mut rest = SlrComplex::ZERO;
    let mut shell_increments_ln = Vec::new();
    let mut shell_moduli_ln = Vec::new();
    for (len, shell) in shells.iter_mut().enumerate() {
        // descending modulus; the sort is stable so ties keep the canonical order
        shell.sort_by(|a, b| b.value.ln_abs.total_cmp(&a.value.ln_abs));
        let mut inc = SlrComplex::ZERO;
        let mut moduli = Slr::ZERO;
        for t in shell.iter() {
            inc = inc + to_slr(t.value);
            moduli = moduli + Slr::from_log(t.value.ln_abs);
        }
        rest = rest + inc;
        if len > 0 {
            shell_increments_ln.push(inc.ln_abs());
            shell_moduli_ln.push(moduli.logmag());
        }
    }
    let total = zero_part + rest;

    let trivial = depth.generators() == 0;
    let (tail_bound, fit, samples, covered, eps) = if trivial {
        (0.0, None, Vec::new(), f64::INFINITY, 0.0)
    } else {
        let x_norm = pseudo_norm(x);
        let eps = estimate_epsilon(fam, nu, depth.k_max, depth.max_len)?;
        let covered = covered_radius(fam, &depth, eps, x_norm)?;
        let q = PseudoBallQuery::new(*x, FIT_RADIUS as f64)?;
        let counts = count_orbit(fam, nu, &q, CountLimits::Auto, true)?;
        let samples: Vec<(f64, u64)> = (1..=FIT_RADIUS)
            .map(|n| (n as f64, counts.witnesses.iter().filter(|w| w.norm <= n as f64).count() as u64))
            .collect();
        let fit = fit_growth(&samples)?;
        let shift = pseudo_norm(&g1) + pseudo_norm(&g2);
        let n0 = if covered.is_finite() { ((covered.floor() as u64) + 1).max(2) } else { u64::MAX };
        let tail = if n0 == u64::MAX { 0.0 } else { tail_bound_shifted(m, fit.a, fit.big_a, n0, 1.0, shift)? };
        (tail, Some(fit), samples, covered, eps)
    };
    let modulus = total.ln_abs().exp();
    Ok(SeriesReport {
        m: spec.m,
        eigenvalue: spec.eigenvalue,
        spec: *spec,
        base: *x,
        depth,
        partial_sum: to_pair(total),
        tail_bound,
        nonvanishing: modulus - tail_bound > 0.0,
        term_count: terms.len() as u64,
        fitted_a: fit.map(|f| f.a),
        fitted_big_a: fit.map(|f| f.big_a),
        fit_samples: samples,
        covered_radius: covered,
        epsilon_hat: eps,
        zero_norm_part: to_pair(zero_part),
        rest: to_pair(rest),
        zero_norm_terms: zero_terms,
        shell_increments_ln,
        shell_moduli_ln,
        modulus_residual,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonvanishingOutcome {
    pub passes: bool,
    /// Only the identity word has orbit norm 0.
    pub identity_only: bool,
    pub identity_part: f64,
    pub rest_modulus: f64,
    pub tail_bound: f64,
    pub margin: f64,
    pub report: SeriesReport,
}

/// `|identity part| − |rest| − tail > 0` for the series at `x = E`, `m` even.
pub fn nonvanishing_check(fam: &SequenceFamily, nu: u64, spec: &EigenFunctionSpec, depth: WordBox) -> Result<NonvanishingOutcome> {
    if spec.m % 2 != 0 {
        return domain(format!("non-vanishing needs even m, got {}", spec.m));
    }
    let report = poincare_partial_sum(fam, nu, spec, &Mobius::identity(), depth)?;
    let modulus = |p: [f64; 2]| p[0].hypot(p[1]);
    let identity_part = modulus(report.zero_norm_part);
    let rest_modulus = modulus(report.rest);
    let margin = identity_part - rest_modulus - report.tail_bound;
    Ok(NonvanishingOutcome {
        passes: margin > 0.0,
        identity_only: report.zero_norm_terms == 1,
        identity_part,
        rest_modulus,
        tail_bound: report.tail_bound,
        margin,
        report,
    })
}

/// Which coordinate of `{x1, x2}` the chart solves for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chart {
    SolveX1,
    SolveX2,
}

impl Chart {
    fn preferred(p: &AdSCoords) -> Self {
        if p.x1.abs() >= p.x2.abs() { Chart::SolveX1 } else { Chart::SolveX2 }
    }

    fn other(self) -> Self {
        match self {
            Chart::SolveX1 => Chart::SolveX2,
            Chart::SolveX2 => Chart::SolveX1,
        }
    }

    fn coords(self, p: &AdSCoords) -> ([f64; 3], f64) {
        match self {
            Chart::SolveX1 => ([p.x2, p.x3, p.x4], p.x1.signum()),
            Chart::SolveX2 => ([p.x1, p.x3, p.x4], p.x2.signum()),
        }
    }

    /// Embedding and its Jacobian rows `∂X/∂u_i`.
    fn embed(self, u: [f64; 3], sign: f64) -> Result<(AdSCoords, [[f64; 4]; 3])> {
        let rad = 1.0 + u[1] * u[1] + u[2] * u[2] - u[0] * u[0];
        if !(rad > 0.0) {
            return Err(Error::Chart("chart leaves the quadric".into()));
        }
        let xs = sign * rad.sqrt();
        let (solved, other) = match self {
            Chart::SolveX1 => (0, 1),
            Chart::SolveX2 => (1, 0),
        };
        let mut x = [0.0; 4];
        x[solved] = xs;
        x[other] = u[0];
        x[2] = u[1];
        x[3] = u[2];
        let mut jac = [[0.0; 4]; 3];
        jac[0][other] = 1.0;
        jac[0][solved] = -u[0] / xs;
        jac[1][2] = 1.0;
        jac[1][solved] = u[1] / xs;
        jac[2][3] = 1.0;
        jac[2][solved] = u[2] / xs;
        Ok((AdSCoords::from_array(x), jac))
    }
}

/// Ambient form of `−det`.
const Q: [f64; 4] = [-1.0, -1.0, 1.0, 1.0];

fn inverse3(g: &[[f64; 3]; 3]) -> Option<([[f64; 3]; 3], f64)> {
    let det = g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1]) - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
        + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
    if !det.is_finite() || det.abs() < 1e-10 {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (i1, i2) = ((j + 1) % 3, (j + 2) % 3);
            let (j1, j2) = ((i + 1) % 3, (i + 2) % 3);
            inv[i][j] = (g[i1][j1] * g[i2][j2] - g[i1][j2] * g[i2][j1]) / det;
        }
    }
    Some((inv, det))
}

fn metric(chart: Chart, u: [f64; 3], sign: f64) -> Result<([[f64; 3]; 3], f64)> {
    let (_, jac) = chart.embed(u, sign)?;
    let mut g = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            g[i][j] = (0..4).map(|a| Q[a] * jac[i][a] * jac[j][a]).sum();
        }
    }
    let (inv, det) = inverse3(&g).ok_or_else(|| Error::Chart("degenerate chart metric".into()))?;
    Ok((inv, det.abs().sqrt()))
}

fn lb_in_chart<F: Fn(&AdSCoords) -> f64>(f: &F, chart: Chart, p: &AdSCoords, h: f64) -> Result<f64> {
    let (u, sign) = chart.coords(p);
    let fu = |v: [f64; 3]| -> Result<f64> { Ok(f(&chart.embed(v, sign)?.0)) };
    let shift = |v: [f64; 3], i: usize, t: f64| {
        let mut w = v;
        w[i] += t;
        w
    };
    // flux F_i = √|g| g^{ij} ∂_j f at v, derivatives on half steps
    let flux = |v: [f64; 3], i: usize| -> Result<f64> {
        let (ginv, sq) = metric(chart, v, sign)?;
        let mut s = 0.0;
        for j in 0..3 {
            let d = (fu(shift(v, j, h / 2.0))? - fu(shift(v, j, -h / 2.0))?) / h;
            s += ginv[i][j] * d;
        }
        Ok(sq * s)
    };
    let (_, sq0) = metric(chart, u, sign)?;
    let mut div = 0.0;
    for i in 0..3 {
        div += (flux(shift(u, i, h / 2.0), i)? - flux(shift(u, i, -h / 2.0), i)?) / h;
    }
    Ok(div / sq0)
}

/// `□f = |g|^{−1/2} ∂_i(|g|^{1/2} g^{ij} ∂_j f)` by central differences in a local chart.
pub fn laplace_beltrami_fd<F: Fn(&AdSCoords) -> f64>(f: F, p: &AdSCoords, h: f64) -> Result<f64> {
    if !(1e-4..=1e-2).contains(&h) {
        return domain(format!("step {h} outside [1e-4, 1e-2]"));
    }
    if p.x1 * p.x1 + p.x2 * p.x2 <= 1e-6 {
        return domain("point too close to x1 = x2 = 0");
    }
    let chart = Chart::preferred(p);
    match lb_in_chart(&f, chart, p, h) {
        Err(Error::Chart(_)) => lb_in_chart(&f, chart.other(), p, h),
        r => r,
    }
}

/// Componentwise [`laplace_beltrami_fd`] of a complex field.
pub fn laplace_beltrami_fd_complex<F: Fn(&AdSCoords) -> Complex64>(f: F, p: &AdSCoords, h: f64) -> Result<Complex64> {
    let re = laplace_beltrami_fd(|x| f(x).re, p, h)?;
    let im = laplace_beltrami_fd(|x| f(x).im, p, h)?;
    Ok(Complex64::new(re, im))
}

/// `|□ψ_m − m(m−2)ψ_m| / |ψ_m|` at `p`.
pub fn eigen_residual(spec: &EigenFunctionSpec, p: &AdSCoords, h: f64) -> Result<f64> {
    let lap = laplace_beltrami_fd_complex(|x| psi(spec, x).unwrap_or(Complex64::new(f64::NAN, f64::NAN)), p, h)?;
    let v = psi(spec, p)?;
    let r = (lap - v * spec.eigenvalue).norm() / v.norm();
    if r.is_nan() {
        return Err(Error::Pole("field undefined near the point".into()));
    }
    Ok(r)
}
