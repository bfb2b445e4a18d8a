//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use adsgamma::family::{generators, Preset, SequenceFamily};
use adsgamma::hyperbolic::{ads_orbit_norm, coords_to_mobius, point_norm, pseudo_norm, AdSCoords, AnchoredPoint, HPoint, Mobius};
use adsgamma::numerics::Slr;
use adsgamma::orbit::{
    certified_limits, count_orbit, dirichlet_check, lower_bound_witness_count, sharpness_scan, tuple_count_bruteforce,
    CountLimits, PseudoBallQuery,
};
use adsgamma::spectral::{eigen_residual, nonvanishing_check, psi, EigenFunctionSpec};
use adsgamma::words::{enumerate_words, estimate_epsilon, orbit_state, pingpong_scan, WordBox};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Frozen `ε̂` for gueritaud_kassel over `(ν, ν+20, 3)`.
const GK_EPS: [(u64, f64); 3] = [(50, 1.0566e-3), (100, 3.7058e-4), (200, 1.2362e-4)];

type Outcome = Result<String, String>;

fn check(cond: bool, ok: impl Into<String>, bad: impl Into<String>) -> Outcome {
    if cond { Ok(ok.into()) } else { Err(bad.into()) }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_norm = 0.0f64;
    for _ in 0..10_000 {
        let g = Mobius::sample(&mut rng, 12.0);
        let a = point_norm(&g.apply(&HPoint::i()).map_err(|e| e.to_string())?);
        let b = pseudo_norm(&g);
        worst_norm = worst_norm.max((a - b).abs() / b.max(1.0));
    }
    let mut worst_mod = 0.0f64;
    for m in [2u32, 3, 4, 8] {
        let spec = EigenFunctionSpec::new(m).map_err(|e| e.to_string())?;
        for _ in 0..10_000 {
            let x = AdSCoords::sample(&mut rng, 3.0);
            let n = pseudo_norm(&coords_to_mobius(&x).map_err(|e| e.to_string())?);
            let want = (n / 2.0).cosh().powi(-(m as i32));
            let got = psi(&spec, &x).map_err(|e| e.to_string())?.norm();
            worst_mod = worst_mod.max(rel(got, want));
        }
    }
    let mut worst_pt = 0.0f64;
    for p in Preset::ALL {
        let fam = SequenceFamily::preset(p);
        let top = if p == Preset::DoubleExp { 8 } else { 2000 };
        for k in fam.k_min..=top {
            let v = fam.values(k).map_err(|e| e.to_string())?;
            // β_k i, then α_k⁻¹
            let (b, _) = AnchoredPoint::i().invert(v.a1, v.a2, v.big_r).map_err(|e| e.to_string())?;
            let (z, _) = b.invert(v.a2, v.a1, v.r).map_err(|e| e.to_string())?;
            let z = z.to_hpoint();
            let s = (v.r / v.big_r).square();
            let want_re = (v.big_r.square() - v.r.square()) / v.big_r.square() * v.a1;
            worst_pt = worst_pt.max(rel_slr(z.re(), want_re)).max(rel_slr(z.im(), s));
        }
    }
    let detail = format!("norm {worst_norm:.1e}, modulus {worst_mod:.1e}, orbit point {worst_pt:.1e}");
    check(worst_norm <= 1e-9 && worst_mod <= 1e-9 && worst_pt <= 1e-9, detail.clone(), detail)
}

fn rel_slr(a: Slr, b: Slr) -> f64 {
    if a.sign() != b.sign() {
        return f64::INFINITY;
    }
    (a.logmag() - b.logmag()).exp_m1().abs()
}

fn criterion_2() -> Outcome {
    for r in 1..=16u32 {
        let n = tuple_count_bruteforce(r).map_err(|e| e.to_string())?;
        if n != (1u64 << r) - 1 {
            return Err(format!("R = {r}: {n}"));
        }
    }
    Ok("2^R - 1 for R = 1..16".into())
}

fn dirichlet_points(fam: &SequenceFamily, nu: u64, n: usize, seed: u64) -> Result<Vec<Mobius>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::new();
    let mut tries = 0;
    while pts.len() < n {
        tries += 1;
        if tries > 50 * n {
            return Err("could not sample Dirichlet points".into());
        }
        let x = Mobius::sample(&mut rng, 1.0);
        let d = dirichlet_check(fam, nu, &x, CountLimits::Auto).map_err(|e| e.to_string())?;
        if d.in_domain && d.certified {
            pts.push(x);
        }
    }
    Ok(pts)
}

fn criterion_3() -> Outcome {
    let fam = SequenceFamily::preset(Preset::DoubleExp);
    let nu = fam.nu;
    let mut bases = vec![Mobius::identity()];
    bases.extend(dirichlet_points(&fam, nu, 10, 3)?);
    let mut max_count = 0;
    for r in [4.0, 6.0, 8.0, 10.0, 12.0] {
        for x in &bases {
            let rep = count_orbit(&fam, nu, &PseudoBallQuery::new(*x, r).unwrap(), CountLimits::Auto, true).map_err(|e| e.to_string())?;
            if !rep.truncation.certified {
                return Err(format!("R = {r}: truncation not certified"));
            }
            if (rep.count as f64) > (2.0 * r + 16.0).exp2() {
                return Err(format!("R = {r}: count {} above bound", rep.count));
            }
            max_count = max_count.max(rep.count);
        }
    }
    Ok(format!("nu = {nu}, 11 base points, max count {max_count}"))
}

fn criterion_4() -> Outcome {
    let fam = SequenceFamily::preset(Preset::LogSlow);
    let mut ratios = Vec::new();
    let mut lines = Vec::new();
    for r in [6.0, 8.0, 10.0, 12.0] {
        let s = lower_bound_witness_count(&fam, fam.nu, r).map_err(|e| e.to_string())?;
        let lb = s.lower_bound.expect("log_slow has a closed-form bound");
        if (s.count as f64) < lb {
            return Err(format!("R = {r}: {} < {lb:.1}", s.count));
        }
        ratios.push(s.ratio_to_volume);
        lines.push(format!("R={r}: {}", s.count));
    }
    let increasing = ratios.windows(2).all(|w| w[1] > w[0]);
    let detail = format!("{}; ratios {:?}", lines.join(", "), ratios.iter().map(|r| format!("{r:.3e}")).collect::<Vec<_>>());
    check(increasing, detail.clone(), format!("ratio not increasing: {detail}"))
}

fn criterion_5() -> Outcome {
    let fam = SequenceFamily::preset(Preset::GueritaudKassel);
    let mut eps = Vec::new();
    for (nu, frozen) in GK_EPS {
        let e = estimate_epsilon(&fam, nu, nu + 20, 3).map_err(|e| e.to_string())?;
        if rel(e, frozen) > 0.10 {
            return Err(format!("nu = {nu}: {e:.4e} vs frozen {frozen:.4e}"));
        }
        for w in enumerate_words(nu, nu + 20, 3).filter(|w| !w.is_identity()) {
            let st = orbit_state(&w, &fam).map_err(|e| e.to_string())?;
            if st.gap_residual() > (w.len() as f64 + 8.0) * e * (1.0 + 1e-12) {
                return Err(format!("{w}: residual above (m+8) eps"));
            }
        }
        eps.push(e);
    }
    let decreasing = eps.windows(2).all(|w| w[1] < w[0]);
    let detail = format!("eps {:?}", eps.iter().map(|e| format!("{e:.4e}")).collect::<Vec<_>>());
    check(decreasing, detail.clone(), format!("not decreasing: {detail}"))
}

fn criterion_6() -> Outcome {
    let mut parts = Vec::new();
    for p in Preset::ALL {
        let fam = SequenceFamily::preset(p);
        let s = pingpong_scan(&fam, &WordBox::new(fam.nu, fam.nu + 10, 4)).map_err(|e| e.to_string())?;
        if s.contained != s.words {
            return Err(format!("{p}: {}/{} contained, first failure {:?}", s.contained, s.words, s.first_failure));
        }
        if !(s.min_freeness_distance > 1e-6) {
            return Err(format!("{p}: freeness distance {}", s.min_freeness_distance));
        }
        parts.push(format!("{p} {} words, min distance {:.3}", s.words, s.min_freeness_distance));
    }
    Ok(parts.join("; "))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let bases: Vec<Mobius> = (0..20).map(|_| Mobius::sample(&mut rng, 1.0)).collect();
    let (mut runs, mut with_pruning) = (0u64, 0u64);
    for p in Preset::ALL {
        let fam = SequenceFamily::preset(p);
        let nu = fam.nu;
        let (a, _) = generators(&fam, nu).map_err(|e| e.to_string())?;
        let n1 = pseudo_norm(&a);
        let radii = [3.0, 0.6 * n1, 1.3 * n1];
        for width in 0..=6u64 {
            for max_len in 1..=3usize {
                let lim = CountLimits::Box { k_max: nu + width, max_len };
                for x in &bases {
                    for &r in &radii {
                        let q = PseudoBallQuery::new(*x, r).unwrap();
                        let pruned = count_orbit(&fam, nu, &q, lim, true).map_err(|e| e.to_string())?;
                        let full = count_orbit(&fam, nu, &q, lim, false).map_err(|e| e.to_string())?;
                        runs += 1;
                        if pruned.pruned > 0 {
                            with_pruning += 1;
                        }
                        if pruned.count != full.count || pruned.witnesses != full.witnesses {
                            return Err(format!("{p} box ({width}, {max_len}) R = {r}: {} vs {}", pruned.count, full.count));
                        }
                    }
                }
            }
        }
    }
    Ok(format!("{runs} box/point/radius runs equal, {with_pruning} actually pruned"))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let slack = 1e-9;
    let mut worst = f64::INFINITY;
    for _ in 0..10_000 {
        let g1 = Mobius::sample(&mut rng, 8.0);
        let g2 = Mobius::sample(&mut rng, 8.0);
        let x = Mobius::sample(&mut rng, 4.0);
        let lhs = ads_orbit_norm(&g1, &g2, &x);
        let rhs = (pseudo_norm(&g1) - pseudo_norm(&g2)).abs() - pseudo_norm(&x);
        worst = worst.min(lhs - rhs);
    }
    if worst < -slack {
        return Err(format!("reverse triangle violated by {:.2e}", -worst));
    }
    let mut checked = 0u64;
    for p in Preset::ALL {
        let fam = SequenceFamily::preset(p);
        let nu = fam.nu;
        let mut bases = vec![Mobius::identity()];
        bases.extend(dirichlet_points(&fam, nu, 4, 80 + nu)?);
        let words: Vec<_> = enumerate_words(nu, nu + 4, 3).filter(|w| !w.is_identity()).collect();
        for x in &bases {
            let xn = pseudo_norm(x);
            for w in &words {
                let st = orbit_state(w, &fam).map_err(|e| e.to_string())?;
                let n = st.orbit_norm(x).map_err(|e| e.to_string())?;
                let diff = (st.norm_j() - st.norm_rho()).abs();
                if n < diff - xn - slack {
                    return Err(format!("{p} {w}: reverse triangle {n} < {diff} - {xn}"));
                }
                if n < 0.5 * diff - slack {
                    return Err(format!("{p} {w}: half gap {n} < {diff}/2"));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("10^4 random triples (min margin {worst:.3}), {checked} word/base pairs"))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let points: Vec<AdSCoords> = (0..20).map(|_| AdSCoords::sample(&mut rng, 0.3)).collect();
    let mut worst = 0.0f64;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for m in [3u32, 4] {
        let spec = EigenFunctionSpec::new(m).unwrap();
        for p in &points {
            let r1 = eigen_residual(&spec, p, 1e-3).map_err(|e| e.to_string())?;
            let r2 = eigen_residual(&spec, p, 5e-4).map_err(|e| e.to_string())?;
            worst = worst.max(r1);
            lo = lo.min(r1 / r2);
            hi = hi.max(r1 / r2);
        }
    }
    let detail = format!("max relative residual {worst:.2e}, h-halving ratio in [{lo:.2}, {hi:.2}]");
    check(worst <= 1e-3 && lo >= 3.0 && hi <= 5.0, detail.clone(), detail)
}

fn criterion_10() -> Outcome {
    let fam = SequenceFamily::preset(Preset::DoubleExp);
    let nu = fam.nu;
    let c = certified_limits(&fam, nu, &PseudoBallQuery::at_identity(20.0).unwrap()).map_err(|e| e.to_string())?;
    if !c.certified {
        return Err("limits at R = 20 not certified".into());
    }
    let depth = WordBox::new(nu, c.k_max, c.max_len);
    let mut worst_margin = f64::INFINITY;
    for m in (32..=48).step_by(2) {
        let spec = EigenFunctionSpec::new(m).unwrap();
        let nv = nonvanishing_check(&fam, nu, &spec, depth).map_err(|e| e.to_string())?;
        let ps = nv.report.partial_sum;
        let modulus = ps[0].hypot(ps[1]);
        let off = (ps[0] - 1.0).hypot(ps[1]);
        if !(nv.passes && modulus - nv.tail_bound > 0.0 && off < 0.5 && nv.identity_only) {
            return Err(format!("m = {m}: |S| = {modulus}, tail {}, |S - 1| = {off}", nv.tail_bound));
        }
        worst_margin = worst_margin.min(nv.margin);
    }
    Ok(format!("depth (K = {}, M = {}), m = 32..48 even, min margin {worst_margin:.6}", c.k_max, c.max_len))
}

fn criterion_11() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for p in [Preset::DoubleExp, Preset::LogSlow] {
        let fam = SequenceFamily::preset(p);
        let nu = fam.nu;
        let s = sharpness_scan(&fam, nu, 4 * nu, 1).map_err(|e| e.to_string())?;
        let (first, last) = (s.verdict.first_ratio, s.verdict.last_ratio);
        ok &= last < 0.5 * first;
        parts.push(format!("{p}: ratio {first:.4e} at k = {nu}, {last:.4e} at k = {}", 4 * nu));
    }
    let detail = parts.join("; ");
    check(ok, detail.clone(), detail)
}

fn run_cli(args: &[&str], threads: usize, out: &PathBuf) -> Result<Vec<u8>, String> {
    let bin = env!("CARGO_BIN_EXE_adsgamma");
    let status = Command::new(bin)
        .args(args)
        .arg("--threads")
        .arg(threads.to_string())
        .arg("--out")
        .arg(out)
        .status()
        .map_err(|e| e.to_string())?;
    if !matches!(status.code(), Some(0) | Some(2)) {
        return Err(format!("{args:?} exited with {status}"));
    }
    std::fs::read(out).map_err(|e| e.to_string())
}

fn criterion_12() -> Outcome {
    let dir = std::env::temp_dir().join(format!("adsgamma-accept-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let commands: [&[&str]; 8] = [
        &["--family", "gueritaud_kassel", "check"],
        &["--family", "double_exp", "count", "--radius", "10", "--random-points", "3"],
        &["--family", "log_slow", "witnesses", "--radius", "9"],
        &["--family", "log_slow", "sharpness", "--max-len", "2"],
        &["--family", "double_exp", "spectral", "--m", "32"],
        &["tuples", "12"],
        &["--family", "gueritaud_kassel", "gap", "--k-max", "16", "--max-len", "3"],
        &["--family", "log_slow", "calibrate", "--target-eps", "0.01"],
    ];
    for (i, args) in commands.iter().enumerate() {
        let mut outs = Vec::new();
        for threads in [1, 8, 1, 8] {
            outs.push(run_cli(args, threads, &dir.join(format!("out{i}-{}.txt", outs.len())))?);
        }
        if outs.iter().any(|o| *o != outs[0]) {
            return Err(format!("{args:?} output differs across runs"));
        }
        if outs[0].is_empty() {
            return Err(format!("{args:?} wrote nothing"));
        }
    }
    std::fs::remove_dir_all(&dir).map_err(|e| e.to_string())?;
    Ok("8 commands x (1, 8, 1, 8 threads) byte-identical".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("identity suite", criterion_1),
        ("tuple count", criterion_2),
        ("upper bound 2^{2R+16}", criterion_3),
        ("witness lower bound", criterion_4),
        ("gap estimate", criterion_5),
        ("ping-pong containment", criterion_6),
        ("pruning soundness", criterion_7),
        ("reverse-triangle and half-gap", criterion_8),
        ("finite-difference eigenvalue", criterion_9),
        ("non-vanishing", criterion_10),
        ("sharpness decay", criterion_11),
        ("determinism", criterion_12),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let res = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let dt: Duration = t.elapsed();
        match res {
            Ok(d) => println!("[PASS] {:>2} {name}: {d} ({:.1}s)", i + 1, dt.as_secs_f64()),
            Err(d) => {
                failed += 1;
                println!("[FAIL] {:>2} {name}: {d} ({:.1}s)", i + 1, dt.as_secs_f64());
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
