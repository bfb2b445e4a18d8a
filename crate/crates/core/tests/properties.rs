use adsgamma::family::{check_assumptions, generators, Preset, SequenceFamily};
use adsgamma::hyperbolic::{ads_coords, ads_orbit_norm, coords_to_mobius, distance, pseudo_norm, HPoint, Mobius};
use adsgamma::numerics::Slr;
use adsgamma::orbit::{count_orbit, CountLimits, PseudoBallQuery};
use adsgamma::spectral::{psi, tail_bound_op, EigenFunctionSpec};
use adsgamma::words::{enumerate_words, evaluate, orbit_state, word_count, Letter, Word};
use proptest::prelude::*;

fn mobius() -> impl Strategy<Value = Mobius> {
    (-6.0f64..6.0, 0.0f64..std::f64::consts::TAU, 0.0f64..std::f64::consts::TAU).prop_map(|(t, s, th)| {
        Mobius::rotation(th).compose(&Mobius::diag(t)).compose(&Mobius::rotation(s))
    })
}

fn hpoint() -> impl Strategy<Value = HPoint> {
    (-50.0f64..50.0, -6.0f64..6.0).prop_map(|(x, ly)| HPoint::from_f64(x, ly.exp()).unwrap())
}

fn word(nu: u64, width: u64, max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec((0..=width, any::<bool>()), 0..=max_len).prop_map(move |raw| {
        let mut letters: Vec<Letter> = Vec::new();
        for (k, plus) in raw {
            let l = if plus { Letter::plus(nu + k) } else { Letter::minus(nu + k) };
            if letters.last().is_some_and(|p| *p == l.inverse()) {
                letters.pop();
            } else {
                letters.push(l);
            }
        }
        Word::from_letters(letters).unwrap()
    })
}

fn same_element(g: &Mobius, h: &Mobius) -> bool {
    let scale = g.entries().into_iter().fold(Slr::ZERO, |m, v| m.max(v.abs()));
    [1i8, -1].into_iter().any(|s| {
        g.entries().into_iter().zip(h.entries()).all(|(p, q)| {
            let q = if s < 0 { -q } else { q };
            (p - q).abs().logmag() <= scale.logmag() + (1e-9f64).ln()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn slr_arithmetic_tracks_f64(a in -1e6f64..1e6, b in -1e6f64..1e6) {
        let (x, y) = (Slr::from_f64(a), Slr::from_f64(b));
        prop_assert!(((x * y).to_f64() - a * b).abs() <= 1e-12 * (a * b).abs().max(1e-300));
        let s = (x + y).to_f64();
        prop_assert!((s - (a + b)).abs() <= 1e-12 * (a.abs() + b.abs()) + 1e-300);
        prop_assert_eq!(x.cmp(&y), a.partial_cmp(&b).unwrap());
        if b != 0.0 {
            prop_assert!(((x / y).to_f64() - a / b).abs() <= 1e-12 * (a / b).abs());
        }
    }

    #[test]
    fn slr_json_round_trip(a in -1e300f64..1e300) {
        let x = Slr::from_f64(a);
        let back: Slr = serde_json::from_str(&serde_json::to_string(&x).unwrap()).unwrap();
        prop_assert_eq!(back, x);
    }

    #[test]
    fn distance_is_a_metric(z in hpoint(), w in hpoint(), u in hpoint()) {
        let (a, b, c) = (distance(&z, &w), distance(&w, &u), distance(&z, &u));
        prop_assert!(a >= 0.0);
        prop_assert!((a - distance(&w, &z)).abs() <= 1e-9 * a.max(1.0));
        prop_assert!(c <= a + b + 1e-9 * (a + b).max(1.0));
        prop_assert!(distance(&z, &z) < 1e-7);
    }

    #[test]
    fn mobius_is_an_isometry(g in mobius(), z in hpoint(), w in hpoint()) {
        let d0 = distance(&z, &w);
        let d1 = distance(&g.apply(&z).unwrap(), &g.apply(&w).unwrap());
        prop_assert!((d0 - d1).abs() <= 1e-7 * d0.max(1.0));
    }

    #[test]
    fn compose_matches_apply(g in mobius(), h in mobius(), z in hpoint()) {
        let a = g.compose(&h).apply(&z).unwrap();
        let b = g.apply(&h.apply(&z).unwrap()).unwrap();
        prop_assert!(distance(&a, &b) < 1e-6);
    }

    #[test]
    fn pseudo_norm_symmetries(g in mobius(), t1 in 0.0f64..6.3, t2 in 0.0f64..6.3) {
        let n = pseudo_norm(&g);
        prop_assert!((pseudo_norm(&g.inverse()) - n).abs() <= 1e-9 * n.max(1.0));
        let k = Mobius::rotation(t1).compose(&g).compose(&Mobius::rotation(t2));
        prop_assert!((pseudo_norm(&k) - n).abs() <= 1e-7 * n.max(1.0));
    }

    #[test]
    fn coords_round_trip(g in mobius()) {
        let x = ads_coords(&g).unwrap();
        prop_assert!((x.quadric() - 1.0).abs() <= 1e-9 * x.as_array().iter().map(|v| v * v).sum::<f64>());
        let back = coords_to_mobius(&x).unwrap();
        let scale = g.to_f64().iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (p, q) in back.to_f64().iter().zip(g.to_f64()) {
            prop_assert!((p - q).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn reverse_triangle(g1 in mobius(), g2 in mobius(), x in mobius()) {
        let lhs = ads_orbit_norm(&g1, &g2, &x);
        let rhs = (pseudo_norm(&g1) - pseudo_norm(&g2)).abs() - pseudo_norm(&x);
        prop_assert!(lhs >= rhs - 1e-9);
    }

    #[test]
    fn modulus_law_with_translate(g1 in mobius(), g2 in mobius(), x in mobius(), m in 2u32..9) {
        let spec = EigenFunctionSpec::new(m).unwrap().with_translate(g1, g2);
        let v = psi(&spec, &ads_coords(&x).unwrap()).unwrap();
        let y = g1.inverse().compose(&x).compose(&g2);
        let want = (pseudo_norm(&y) / 2.0).cosh().powi(-(m as i32));
        prop_assert!((v.norm() - want).abs() <= 1e-8 * want);
    }

    #[test]
    fn word_text_round_trip(w in word(5, 6, 8)) {
        let back: Word = w.to_string().parse().unwrap();
        prop_assert_eq!(&back, &w);
        prop_assert_eq!(w.inverse().inverse(), w.clone());
        prop_assert_eq!(w.inverse().len(), w.len());
    }

    #[test]
    fn inverse_word_inverts_the_pair(w in word(10, 3, 3)) {
        // matrix products of these generators cancel catastrophically; compare entries instead
        let fam = SequenceFamily::preset(Preset::GueritaudKassel);
        let (j, rho) = evaluate(&w, &fam).unwrap();
        let (ji, rhoi) = evaluate(&w.inverse(), &fam).unwrap();
        prop_assert!(same_element(&ji, &j.inverse()));
        prop_assert!(same_element(&rhoi, &rho.inverse()));
    }

    #[test]
    fn state_norms_match_matrices(w in word(10, 4, 3)) {
        let fam = SequenceFamily::preset(Preset::GueritaudKassel);
        let st = orbit_state(&w, &fam).unwrap();
        let (j, rho) = evaluate(&w, &fam).unwrap();
        prop_assert!((st.norm_j() - pseudo_norm(&j)).abs() <= 1e-7 * st.norm_j().max(1.0));
        prop_assert!((st.norm_rho() - pseudo_norm(&rho)).abs() <= 1e-7 * st.norm_rho().max(1.0));
    }

    #[test]
    fn tail_bound_monotone_in_start(m in 6.0f64..40.0, a in 0.5f64..2.5, n0 in 2u64..10) {
        prop_assume!(m > 2.0 * a + 0.5);
        let b0 = tail_bound_op(m, a, 1.0, n0, 1.0).unwrap();
        let b1 = tail_bound_op(m, a, 1.0, n0 + 1, 1.0).unwrap();
        prop_assert!(b1 <= b0 && b1 >= 0.0);
    }
}

#[test]
fn enumeration_matches_word_count() {
    for (g, m) in [(1u64, 5usize), (3, 3), (5, 2)] {
        let n = enumerate_words(4, 4 + g - 1, m).count() as u128;
        assert_eq!(n, word_count(g, m));
    }
}

#[test]
fn counts_are_monotone_in_radius() {
    let fam = SequenceFamily::preset(Preset::GueritaudKassel);
    let lim = CountLimits::Box { k_max: 14, max_len: 3 };
    let mut last = 0;
    for r in [5.0, 10.0, 15.0, 20.0, 25.0, 30.0] {
        let c = count_orbit(&fam, 10, &PseudoBallQuery::at_identity(r).unwrap(), lim, true).unwrap().count;
        assert!(c >= last);
        last = c;
    }
    assert!(last > 1);
}

#[test]
fn presets_satisfy_assumptions() {
    for p in Preset::ALL {
        let fam = SequenceFamily::preset(p);
        let top = if p == Preset::DoubleExp { 12 } else { 400 };
        let rep = check_assumptions(&fam, top).unwrap();
        assert!(rep.assumption1_ok, "{p}");
        let (a, b) = generators(&fam, fam.nu).unwrap();
        assert!(pseudo_norm(&a) > pseudo_norm(&b));
    }
}
