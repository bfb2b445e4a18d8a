//! Upper half-plane, Möbius maps over signed-log entries, and the pseudo-norm on AdS³.

use std::f64::consts::{LN_2, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numerics::{arccosh_stable, asinh_from_log, Slr, SlrComplex};

const DET_TOL: f64 = 1e-9;
/// Longest product chain before the determinant is checked and renormalized.
pub const RENORM_CHAIN: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HPoint {
    re: Slr,
    im: Slr,
}

impl HPoint {
    pub fn new(re: Slr, im: Slr) -> Result<Self> {
        if !im.is_positive() {
            return domain(format!("imaginary part {im} is not positive"));
        }
        Ok(Self { re, im })
    }

    pub fn from_f64(re: f64, im: f64) -> Result<Self> {
        Self::new(Slr::from_f64(re), Slr::from_f64(im))
    }

    pub fn i() -> Self {
        Self { re: Slr::ZERO, im: Slr::ONE }
    }

    pub fn re(&self) -> Slr {
        self.re
    }

    pub fn im(&self) -> Slr {
        self.im
    }

    pub fn as_complex(&self) -> SlrComplex {
        SlrComplex::new(self.re, self.im)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mobius {
    pub a: Slr,
    pub b: Slr,
    pub c: Slr,
    pub d: Slr,
}

impl Mobius {
    pub fn new(a: Slr, b: Slr, c: Slr, d: Slr) -> Result<Self> {
        let g = Self { a, b, c, d };
        if !g.det_ok() {
            return domain(format!("determinant {} is not 1", g.det()));
        }
        Ok(g)
    }

    pub fn from_f64(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        Self::new(a.into(), b.into(), c.into(), d.into())
    }

    /// No determinant check; for entries that are unimodular by construction.
    pub(crate) fn from_entries(a: Slr, b: Slr, c: Slr, d: Slr) -> Self {
        Self { a, b, c, d }
    }

    pub fn identity() -> Self {
        Self { a: Slr::ONE, b: Slr::ZERO, c: Slr::ZERO, d: Slr::ONE }
    }

    pub fn diag(t: f64) -> Self {
        Self { a: Slr::from_log(t / 2.0), b: Slr::ZERO, c: Slr::ZERO, d: Slr::from_log(-t / 2.0) }
    }

    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { a: c.into(), b: (-s).into(), c: s.into(), d: c.into() }
    }

    pub fn entries(&self) -> [Slr; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn det(&self) -> Slr {
        self.a * self.d - self.b * self.c
    }

    pub fn det_ok(&self) -> bool {
        let ad = self.a * self.d;
        let bc = self.b * self.c;
        let err = (ad - bc - Slr::ONE).abs();
        let scale = ad.abs().max(bc.abs()).max(Slr::ONE);
        err <= scale * Slr::from_f64(DET_TOL)
    }

    /// Adjugate; equals the inverse under unit determinant.
    pub fn inverse(&self) -> Self {
        Self { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn compose(&self, h: &Self) -> Self {
        Self {
            a: self.a * h.a + self.b * h.c,
            b: self.a * h.b + self.b * h.d,
            c: self.c * h.a + self.d * h.c,
            d: self.c * h.b + self.d * h.d,
        }
    }

    /// Rescales by `1/sqrt(det)` when the determinant is numerically resolvable.
    pub fn renormalized(&self) -> Self {
        let ad = self.a * self.d;
        let bc = self.b * self.c;
        if ad.abs().max(bc.abs()).logmag() > 20.0 {
            return *self;
        }
        let det = ad - bc;
        if !det.is_positive() {
            return *self;
        }
        let s = Slr::from_log(-0.5 * det.logmag());
        Self { a: self.a * s, b: self.b * s, c: self.c * s, d: self.d * s }
    }

    pub fn apply(&self, z: &HPoint) -> Result<HPoint> {
        let q_re = self.c * z.re + self.d;
        let q_im = self.c * z.im;
        let q2 = q_re.square() + q_im.square();
        if q2.is_zero() {
            return Err(Error::Internal("cz + d vanished".into()));
        }
        let p_re = self.a * z.re + self.b;
        let num = p_re * q_re + self.a * self.c * z.im.square();
        Ok(HPoint { re: num / q2, im: z.im / q2 })
    }

    pub fn to_f64(&self) -> [f64; 4] {
        [self.a.to_f64(), self.b.to_f64(), self.c.to_f64(), self.d.to_f64()]
    }

    /// Random element `k(t1) diag(e^{t/2}, e^{-t/2}) k(t2)` with `t` uniform in `[0, max_norm]`.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, max_norm: f64) -> Self {
        let t = rng.gen_range(0.0..=max_norm);
        let k1 = Self::rotation(rng.gen_range(0.0..2.0 * PI));
        let k2 = Self::rotation(rng.gen_range(0.0..2.0 * PI));
        k1.compose(&Self::diag(t)).compose(&k2)
    }
}

pub fn mobius_compose(g: &Mobius, h: &Mobius) -> Mobius {
    g.compose(h)
}

pub fn mobius_apply(g: &Mobius, z: &HPoint) -> Result<HPoint> {
    g.apply(z)
}

/// Product of a sequence of matrices, renormalizing every [`RENORM_CHAIN`] factors.
pub fn compose_chain<'a>(factors: impl IntoIterator<Item = &'a Mobius>) -> Mobius {
    let mut acc = Mobius::identity();
    for (n, g) in factors.into_iter().enumerate() {
        acc = acc.compose(g);
        if (n + 1) % RENORM_CHAIN == 0 {
            acc = acc.renormalized();
        }
    }
    acc
}

/// `‖g‖` from `2 cosh ‖g‖ = a² + b² + c² + d²`.
pub fn pseudo_norm(g: &Mobius) -> f64 {
    let tr = g.a.square() + g.b.square() + g.c.square() + g.d.square();
    arccosh_stable(tr * Slr::from_f64(0.5)).unwrap_or(0.0)
}

/// Hyperbolic distance between two points, `2 asinh(|z - w| / (2 sqrt(Im z Im w)))`.
pub fn distance(z: &HPoint, w: &HPoint) -> f64 {
    let delta = SlrComplex::new(z.re - w.re, z.im - w.im);
    distance_from_delta(delta, z.im, w.im)
}

pub(crate) fn distance_from_delta(delta: SlrComplex, y1: Slr, y2: Slr) -> f64 {
    if delta.re.is_zero() && delta.im.is_zero() {
        return 0.0;
    }
    let logs = delta.ln_abs() - LN_2 - 0.5 * (y1.logmag() + y2.logmag());
    2.0 * asinh_from_log(logs)
}

pub fn point_norm(z: &HPoint) -> f64 {
    distance(z, &HPoint::i())
}

/// `pseudo_norm(g1 · x · g2⁻¹)`.
pub fn ads_orbit_norm(g1: &Mobius, g2: &Mobius, x: &Mobius) -> f64 {
    pseudo_norm(&g1.compose(x).compose(&g2.inverse()))
}

/// Volume of the pseudo-ball of radius `r`, `π²(cosh r − 1)`.
pub fn ball_volume(r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return domain(format!("negative radius {r}"));
    }
    let h = r / 2.0;
    // cosh r - 1 = 2 sinh²(r/2)
    Ok(PI * PI * 2.0 * h.sinh().powi(2))
}

/// Point of AdS³ in the coordinates `((x1+x4, x2+x3), (−x2+x3, x1−x4))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdSCoords {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub x4: f64,
}

impl AdSCoords {
    pub const IDENTITY: Self = Self { x1: 1.0, x2: 0.0, x3: 0.0, x4: 0.0 };

    pub fn new(x1: f64, x2: f64, x3: f64, x4: f64) -> Self {
        Self { x1, x2, x3, x4 }
    }

    /// `x1² + x2² − x3² − x4²`, which is the determinant of the matrix.
    pub fn quadric(&self) -> f64 {
        self.x1 * self.x1 + self.x2 * self.x2 - self.x3 * self.x3 - self.x4 * self.x4
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.x1, self.x2, self.x3, self.x4]
    }

    pub fn from_array(x: [f64; 4]) -> Self {
        Self { x1: x[0], x2: x[1], x3: x[2], x4: x[3] }
    }

    /// Random quadric point with free coordinates `x3, x4` and polar angle uniform.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, spread: f64) -> Self {
        let x3 = rng.gen_range(-spread..=spread);
        let x4 = rng.gen_range(-spread..=spread);
        let rho = (1.0 + x3 * x3 + x4 * x4).sqrt();
        let phi = rng.gen_range(-PI..PI);
        Self { x1: rho * phi.cos(), x2: rho * phi.sin(), x3, x4 }
    }
}

pub fn ads_coords(g: &Mobius) -> Result<AdSCoords> {
    for e in g.entries() {
        if e.logmag() > 700.0 {
            return Err(Error::UnsupportedRange(format!("entry {e} exceeds double range")));
        }
    }
    let [a, b, c, d] = g.to_f64();
    Ok(AdSCoords { x1: 0.5 * (a + d), x2: 0.5 * (b - c), x3: 0.5 * (b + c), x4: 0.5 * (a - d) })
}

pub fn coords_to_mobius(x: &AdSCoords) -> Result<Mobius> {
    let scale = x.as_array().iter().map(|v| v * v).sum::<f64>().max(1.0);
    if (x.quadric() - 1.0).abs() > 1e-10 * scale {
        return domain(format!("point {x:?} is off the quadric"));
    }
    Ok(Mobius::from_entries(
        (x.x1 + x.x4).into(),
        (x.x2 + x.x3).into(),
        (x.x3 - x.x2).into(),
        (x.x1 - x.x4).into(),
    ))
}

/// A point `anchor + offset` of H² whose anchor is an exact real value.
///
/// Orbit points of the ping-pong generators sit inside tiny disks around huge
/// centers. Keeping the center separate from the small displacement makes
/// differences of nearby points exact.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnchoredPoint {
    anchor: Slr,
    off_re: Slr,
    off_im: Slr,
}

impl AnchoredPoint {
    pub fn i() -> Self {
        Self { anchor: Slr::ZERO, off_re: Slr::ZERO, off_im: Slr::ONE }
    }

    pub fn from_hpoint(z: &HPoint) -> Self {
        Self { anchor: Slr::ZERO, off_re: z.re, off_im: z.im }
    }

    pub fn to_hpoint(&self) -> HPoint {
        HPoint { re: self.anchor + self.off_re, im: self.off_im }
    }

    pub fn anchor(&self) -> Slr {
        self.anchor
    }

    pub fn offset(&self) -> SlrComplex {
        SlrComplex::new(self.off_re, self.off_im)
    }

    pub fn im(&self) -> Slr {
        self.off_im
    }

    /// `self − center` as a complex number.
    pub fn displacement(&self, center: Slr) -> SlrComplex {
        SlrComplex::new((self.anchor - center) + self.off_re, self.off_im)
    }

    /// The map `z ↦ center_out − radius² / (z − center_in)`; also returns `z − center_in`.
    pub fn invert(&self, center_in: Slr, center_out: Slr, radius: Slr) -> Result<(Self, SlrComplex)> {
        let delta = self.displacement(center_in);
        let n = delta.norm_sqr();
        if n.is_zero() {
            return Err(Error::Internal("inversion through the point itself".into()));
        }
        let u2 = radius.square();
        let off_re = -(u2 * delta.re) / n;
        let off_im = (u2 * delta.im) / n;
        Ok((Self { anchor: center_out, off_re, off_im }, delta))
    }

    /// Image under `g`, together with the factor `cz + d`.
    pub fn apply(&self, g: &Mobius) -> Result<(Self, SlrComplex)> {
        let z = self.offset();
        if g.c.is_zero() {
            let s = g.a / g.d;
            let anchor = (g.a * self.anchor + g.b) / g.d;
            let q = SlrComplex::new(g.d, Slr::ZERO);
            return Ok((Self { anchor, off_re: z.re * s, off_im: z.im * s }, q));
        }
        let q = SlrComplex::new(g.c * self.anchor + g.d + g.c * z.re, g.c * z.im);
        let n = q.norm_sqr();
        if n.is_zero() {
            return Err(Error::Internal("cz + d vanished".into()));
        }
        // g z = a/c − 1/(c (cz + d))
        let cn = g.c * n;
        let off_re = -q.re / cn;
        let off_im = q.im / cn;
        Ok((Self { anchor: g.a / g.c, off_re, off_im }, q))
    }

    /// `self − other`.
    pub fn difference(&self, other: &Self) -> SlrComplex {
        SlrComplex::new((self.anchor - other.anchor) + (self.off_re - other.off_re), self.off_im - other.off_im)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        distance_from_delta(self.difference(other), self.off_im, other.off_im)
    }

    pub fn norm(&self) -> f64 {
        self.distance(&Self::i())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn compose_examples() {
        let g = Mobius::from_f64(2.0, 3.0, 1.0, 2.0).unwrap();
        assert_eq!(g.compose(&Mobius::identity()), g);
        let t = Mobius::from_f64(0.0, -1.0, 1.0, 0.0).unwrap();
        let tt = t.compose(&t);
        assert_eq!(tt.to_f64(), [-1.0, 0.0, 0.0, -1.0]);
    }

    #[test]
    fn compose_matches_doubles() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let g = Mobius::sample(&mut rng, 4.0);
            let h = Mobius::sample(&mut rng, 4.0);
            let [a, b, c, d] = g.to_f64();
            let [e, f, gg, hh] = h.to_f64();
            let want = [a * e + b * gg, a * f + b * hh, c * e + d * gg, c * f + d * hh];
            let got = g.compose(&h).to_f64();
            let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for k in 0..4 {
                assert!((got[k] - want[k]).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn apply_examples() {
        let z = HPoint::from_f64(0.3, 2.0).unwrap();
        let w = Mobius::identity().apply(&z).unwrap();
        assert!(close(w.re().to_f64(), 0.3, 1e-15) && close(w.im().to_f64(), 2.0, 1e-15));
        let t = Mobius::from_f64(0.0, -1.0, 1.0, 0.0).unwrap();
        let w = t.apply(&HPoint::from_f64(0.0, 2.0).unwrap()).unwrap();
        assert!(w.re().to_f64().abs() < 1e-15);
        assert!(close(w.im().to_f64(), 0.5, 1e-15));
    }

    #[test]
    fn norm_examples() {
        assert_eq!(pseudo_norm(&Mobius::identity()), 0.0);
        for &t in &[10.0, 100.0, 1e6] {
            assert!((pseudo_norm(&Mobius::diag(t)) - t).abs() <= 1e-9);
        }
        assert_eq!(point_norm(&HPoint::i()), 0.0);
        let d = point_norm(&HPoint::from_f64(0.0, 2.0).unwrap());
        assert!((d - LN_2).abs() < 1e-15);
        let e = 20f64.exp();
        let g = Mobius::from_entries(Slr::from_log(e), Slr::from_log(e - 3.0), Slr::from_log(-e), Slr::ZERO);
        let n = pseudo_norm(&g);
        assert!(n.is_finite());
        assert!((n - (2.0 * e)).abs() < 1.0);
    }

    #[test]
    fn point_norm_agrees_with_pseudo_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..2000 {
            let g = Mobius::sample(&mut rng, 12.0);
            let z = g.apply(&HPoint::i()).unwrap();
            assert!((point_norm(&z) - pseudo_norm(&g)).abs() < 1e-9);
            assert!((pseudo_norm(&g) - pseudo_norm(&g.inverse())).abs() < 1e-9);
        }
    }

    #[test]
    fn orbit_norm_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Mobius::sample(&mut rng, 3.0);
        let e = Mobius::identity();
        assert!((ads_orbit_norm(&e, &e, &x) - pseudo_norm(&x)).abs() < 1e-12);
        let g = Mobius::sample(&mut rng, 5.0);
        assert!(ads_orbit_norm(&g, &g, &e) < 1e-6);
    }

    #[test]
    fn ball_volume_examples() {
        assert_eq!(ball_volume(0.0).unwrap(), 0.0);
        let v = ball_volume(1.0).unwrap();
        assert!((v - PI * PI * (1f64.cosh() - 1.0)).abs() < 1e-13);
        assert!(ball_volume(-1.0).is_err());
        assert!(ball_volume(2.0).unwrap() > v);
    }

    #[test]
    fn coords_examples() {
        let e = ads_coords(&Mobius::identity()).unwrap();
        assert_eq!(e, AdSCoords::IDENTITY);
        let t = Mobius::from_f64(0.0, -1.0, 1.0, 0.0).unwrap();
        assert_eq!(ads_coords(&t).unwrap(), AdSCoords::new(0.0, -1.0, 0.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let x = AdSCoords::sample(&mut rng, 3.0);
            let back = ads_coords(&coords_to_mobius(&x).unwrap()).unwrap();
            for (p, q) in x.as_array().iter().zip(back.as_array()) {
                assert!((p - q).abs() < 1e-12 * (1.0 + p.abs()));
            }
        }
        let huge = Mobius::from_entries(Slr::from_log(800.0), Slr::ZERO, Slr::ZERO, Slr::from_log(-800.0));
        assert!(matches!(ads_coords(&huge), Err(Error::UnsupportedRange(_))));
    }

    #[test]
    fn cosh_norm_from_coords() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let g = Mobius::sample(&mut rng, 6.0);
            let x = ads_coords(&g).unwrap();
            let lhs = 2.0 * (x.x1 * x.x1 + x.x2 * x.x2) - 1.0;
            assert!(close(lhs, pseudo_norm(&g).cosh(), 1e-9));
        }
    }

    #[test]
    fn anchored_apply_matches_plain_apply() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..500 {
            let g = Mobius::sample(&mut rng, 5.0);
            let h = Mobius::sample(&mut rng, 5.0);
            let z = h.apply(&HPoint::i()).unwrap();
            let plain = g.apply(&z).unwrap();
            let (anch, _) = AnchoredPoint::from_hpoint(&z).apply(&g).unwrap();
            assert!(distance(&plain, &anch.to_hpoint()) < 1e-9);
        }
        let shift = Mobius::from_f64(1.0, 2.5, 0.0, 1.0).unwrap();
        let (p, q) = AnchoredPoint::i().apply(&shift).unwrap();
        assert_eq!(q.re, Slr::ONE);
        assert!(close(p.anchor().to_f64(), 2.5, 1e-15));
        assert_eq!(p.offset(), AnchoredPoint::i().offset());
    }

    #[test]
    fn inversion_maps_circles() {
        // z ↦ x2 − u²/(z − x1) sends x1 + iu to x2 + iu.
        let (x1, x2, u) = (Slr::from_f64(3.0), Slr::from_f64(7.0), Slr::from_f64(0.5));
        let z = AnchoredPoint { anchor: x1, off_re: Slr::ZERO, off_im: u };
        let (w, delta) = z.invert(x1, x2, u).unwrap();
        assert_eq!(delta, SlrComplex::new(Slr::ZERO, u));
        assert_eq!(w.anchor(), x2);
        assert!(close(w.im().to_f64(), 0.5, 1e-15));
        assert!(w.offset().re.to_f64().abs() < 1e-15);
    }

    #[test]
    fn renormalization_only_when_resolvable() {
        let g = Mobius::from_entries(2.0.into(), 0.0.into(), 0.0.into(), 0.5000001.into());
        let n = g.renormalized();
        assert!((n.det().to_f64() - 1.0).abs() < 1e-14);
        let big = Mobius::from_entries(Slr::from_log(15.0), Slr::from_log(30.0), Slr::from_log(-30.0), Slr::from_log(15.0));
        assert_eq!(big.renormalized(), big);
    }
}
