//! Acceptance suite. Each test prints one `PASS`/`FAIL` line with the measured
//! quantity against its pinned tolerance, then asserts.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use renewlab::conv_engine::fft::{direct_conv, fft_conv};
use renewlab::conv_engine::{
    basic_bound_fit, renewal_mass, srt_curve, RenewalMethod, SrtOptions, Window,
};
use renewlab::dist_factory::{
    build_baseline, build_counter_renewal, build_two_sided_counter, LatticeDist, Sided, TailMeta, ZetaFn,
};
use renewlab::functionals::{
    an_profile, default_delta_grid, dyadic_grid, suff_check, tilde_i1_forms, tilde_i1_plus, AnOptions, Functional,
    SuffMode, TildeForm, Verdict,
};
use renewlab::lld_mc::{lld_bound_ratio, stable_sample, LldMethod, LldOptions};
use renewlab::rv_kernel::{kappa_alpha, TailModel};
use renewlab::stats::mean_stderr;

fn verdict_line(id: u32, what: &str, ok: bool, detail: String, started: Instant) -> bool {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("{tag} [{id:>2}] {what}: {detail} ({:.1} s)", started.elapsed().as_secs_f64());
    ok
}

fn positive_baseline(alpha: f64, x_max: i64) -> LatticeDist {
    build_baseline(&TailModel::pure_power(alpha).unwrap(), Sided::Positive, x_max).unwrap()
}

fn renewal_c(alpha: f64) -> f64 {
    (std::f64::consts::PI * alpha).sin() / std::f64::consts::PI
}

#[test]
fn c01_kappa_table() {
    let t = Instant::now();
    let alphas = [0.6, 0.45, 0.4, 1.0 / 3.0, 0.3, 0.25, 0.21];
    let want = [0u32, 1, 1, 2, 2, 3, 3];
    let got: Vec<u32> = alphas.iter().map(|&a| kappa_alpha(a).unwrap()).collect();
    let ok = got == want && t.elapsed().as_secs_f64() < 1.0;
    assert!(verdict_line(1, "kappa_alpha table", ok, format!("got {got:?}, want {want:?}"), t));
}

#[test]
fn c02_srt_positive_alpha_07() {
    let t = Instant::now();
    let d = positive_baseline(0.7, 1 << 21);
    let xs = dyadic_grid(4, 20);
    let r = srt_curve(&d, &xs, renewal_c(0.7), SrtOptions::default()).unwrap();
    let ratios: Vec<f64> = r.iter().map(|s| s.ratio).collect();
    let last = *ratios.last().unwrap();
    let tail = &ratios[ratios.len() - 4..];
    let closer = tail.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs());
    let ok = (0.9..=1.1).contains(&last) && closer && t.elapsed().as_secs() < 120;
    let detail = format!("ratio(2^20) = {last:.5} in [0.9, 1.1], last four {tail:.5?} approach 1: {closer}");
    assert!(verdict_line(2, "SRT ratio, baseline alpha = 0.7", ok, detail, t));
}

#[test]
fn c03_srt_under_d97_alpha_03() {
    let t = Instant::now();
    let d = positive_baseline(0.3, 1 << 21);
    let s = suff_check(&d, SuffMode::D97).unwrap();
    let r = srt_curve(&d, &[1 << 20], renewal_c(0.3), SrtOptions::default()).unwrap();
    let ratio = r[0].ratio;
    let ok = s.pass && s.sup.is_finite() && (0.85..=1.15).contains(&ratio) && t.elapsed().as_secs() < 120;
    let detail = format!(
        "D97 pass = {} (sup {:.4}, growth {:.3}); ratio(2^20) = {ratio:.5} in [0.85, 1.15]",
        s.pass, s.sup, s.growth
    );
    assert!(verdict_line(3, "SRT under D97, baseline alpha = 0.3", ok, detail, t));
}

#[test]
fn c04_counter_renewal_signature() {
    let t = Instant::now();
    let model = TailModel::pure_power(0.25).unwrap();
    let d = build_counter_renewal(&model, ZetaFn::Log, 1 << 22).unwrap();
    let deltas = default_delta_grid();
    let xs = dyadic_grid(6, 22);
    let i1 = an_profile(&d, Functional::I1Plus, &deltas, &xs, AnOptions::default()).unwrap();
    let tt = an_profile(&d, Functional::T { ell: 0 }, &deltas, &xs, AnOptions::default()).unwrap();
    let di = deltas.iter().position(|&v| (v - 0.1).abs() < 1e-12).unwrap();
    let row = &i1.values[di];
    let last5 = &row[row.len() - 5..];
    let increasing = last5.windows(2).all(|w| w[1] > w[0]);
    let ok = i1.verdict == Verdict::LooksNotAn
        && increasing
        && tt.verdict == i1.verdict
        && t.elapsed().as_secs() < 300;
    let detail = format!(
        "I1+ {} (R(0.1, .) last five {last5:.4?} increasing: {increasing}); T0 {}",
        i1.verdict, tt.verdict
    );
    assert!(verdict_line(4, "counter_renewal alpha = 0.25 signature", ok, detail, t));
}

#[test]
fn c05_two_sided_counter() {
    let t = Instant::now();
    let d = build_two_sided_counter(0.3, 1 << 21).unwrap();
    let deltas = default_delta_grid();
    let xs = dyadic_grid(6, 20);
    let opts = AnOptions { seed: 20, ..AnOptions::default() };
    let tilde = an_profile(&d, Functional::TildeI1, &deltas, &xs, opts).unwrap();
    let i2 = an_profile(&d, Functional::Ik { k: 2, eta: 0.5 }, &deltas, &xs, opts).unwrap();
    let ok = tilde.verdict == Verdict::LooksAn && i2.verdict == Verdict::LooksNotAn && t.elapsed().as_secs() < 600;
    let detail = format!(
        "~I1 {} (scores {:.3e} .. {:.3e}); I2(eta=0.5) {} (scores {:.3e} .. {:.3e})",
        tilde.verdict,
        tilde.an_score[0],
        tilde.an_score.last().unwrap(),
        i2.verdict,
        i2.an_score[0],
        i2.an_score.last().unwrap()
    );
    assert!(verdict_line(5, "two_sided_counter alpha = 0.3", ok, detail, t));
}

#[test]
fn c06_lld_bound() {
    let t = Instant::now();
    let d = positive_baseline(0.5, 1 << 19);
    let xs = dyadic_grid(14, 18);
    let n_top = d.model().a(0.2 * (1u64 << 18) as f64).floor() as usize;
    let ns: Vec<usize> = (1..=n_top).collect();
    let opts = LldOptions { n_cap_delta: Some(0.2), method: LldMethod::Exact };
    let r = lld_bound_ratio(&d, 0.4, Window::new(0, 0), &ns, &xs, opts).unwrap();
    let sups: Vec<f64> = r.sup_by_x.iter().map(|p| p.1).collect();
    let worst = sups.windows(2).map(|w| (w[1] / w[0]).max(w[0] / w[1])).fold(1.0, f64::max);
    let ok = r.exponent == 3.0 && sups.iter().all(|s| *s > 0.0) && worst <= 2.0 && t.elapsed().as_secs() < 300;
    let detail = format!("exponent {}, sup by x {sups:.4?}, largest change x{worst:.3} <= 2", r.exponent);
    assert!(verdict_line(6, "LLD ratio, baseline alpha = 0.5, gamma = 0.4", ok, detail, t));
}

/// `f(x) ~ U_x x^(-1 - alpha)` on `[1, X]` with uniform weights, normalized.
fn random_heavy_law(rng: &mut ChaCha8Rng, x_max: usize) -> LatticeDist {
    let alpha = rng.gen_range(0.2..0.9);
    let mut m: Vec<f64> = (1..=x_max).map(|x| rng.gen_range(0.5..1.5) * (x as f64).powf(-1.0 - alpha)).collect();
    let s: f64 = m.iter().sum();
    m.iter_mut().for_each(|v| *v /= s);
    let tail = TailMeta::new(TailModel::pure_power(alpha).unwrap(), 1.0, 0.0);
    LatticeDist::from_masses(1.0, 1, m, tail).unwrap()
}

#[test]
fn c07_engine_oracles() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut renewal_diff: f64 = 0.0;
    for _ in 0..3 {
        let d = random_heavy_law(&mut rng, 4096);
        let a = renewal_mass(&d, 4096, RenewalMethod::Newton).unwrap();
        let b = renewal_mass(&d, 4096, RenewalMethod::Direct).unwrap();
        renewal_diff = a.u.iter().zip(&b.u).map(|(p, q)| (p - q).abs()).fold(renewal_diff, f64::max);
    }
    let p: Vec<f64> = (0..64).map(|_| rng.gen()).collect();
    let q: Vec<f64> = (0..64).map(|_| rng.gen()).collect();
    let fft_diff = fft_conv(&p, &q).iter().zip(direct_conv(&p, &q)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let ok = renewal_diff <= 1e-10 && fft_diff <= 1e-12 && t.elapsed().as_secs() < 30;
    let detail = format!("newton vs direct {renewal_diff:.2e} <= 1e-10; fft vs direct {fft_diff:.2e} <= 1e-12");
    assert!(verdict_line(7, "renewal and convolution oracles", ok, detail, t));
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

#[test]
fn c08_fubini_identities() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let model = TailModel::pure_power(0.4).unwrap();
    let positive = [
        positive_baseline(0.4, 1 << 14),
        build_counter_renewal(&TailModel::pure_power(0.25).unwrap(), ZetaFn::Log, 1 << 14).unwrap(),
    ];
    let two_sided = [
        build_baseline(&model, Sided::TwoSided { p: 0.6, q: 0.4 }, 1 << 14).unwrap(),
        build_two_sided_counter(0.3, 1 << 14).unwrap(),
    ];
    let (mut worst_plus, mut worst_two): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let delta = rng.gen_range(0.01..0.5);
        let x = rng.gen_range(64..1i64 << 13);
        for d in &positive {
            let a = tilde_i1_plus(d, delta, x, TildeForm::Density);
            let b = tilde_i1_plus(d, delta, x, TildeForm::Fubini);
            worst_plus = worst_plus.max(rel(a, b));
        }
        for d in &two_sided {
            let (a, b) = tilde_i1_forms(d, delta, x);
            worst_two = worst_two.max(rel(a, b));
        }
    }
    let ok = worst_plus <= 1e-12 && worst_two <= 1e-12 && t.elapsed().as_secs() < 30;
    let detail = format!("~I1+ forms {worst_plus:.2e}, ~I1 forms {worst_two:.2e}, both <= 1e-12");
    assert!(verdict_line(8, "Fubini identities on 20 cells x 2 laws", ok, detail, t));
}

#[test]
fn c09_stable_constant() {
    let t = Instant::now();
    let alpha = 0.5;
    let ys = stable_sample(alpha, 1.0, 1_000_000, 9).unwrap();
    let vals: Vec<f64> = ys.iter().map(|&y| alpha * y.powf(-alpha)).collect();
    let (mean, se) = mean_stderr(&vals);
    let target = renewal_c(alpha);
    let z = (mean - target).abs() / se;
    let ok = z <= 3.0 && t.elapsed().as_secs() < 60;
    let detail = format!("alpha E[Y^-alpha] = {mean:.5} +- {se:.1e}, target {target:.5}, |z| = {z:.2} <= 3");
    assert!(verdict_line(9, "stable renewal constant, alpha = 0.5", ok, detail, t));
}

#[test]
fn c10_basic_bound_fit() {
    let t = Instant::now();
    let d = positive_baseline(0.5, 1 << 16);
    let fit = |n_max: usize, z_max: i64| {
        let ns: Vec<usize> = (1..=n_max).collect();
        let zs: Vec<i64> = (1..=z_max).collect();
        basic_bound_fit(&d, &ns, &zs).unwrap()
    };
    let a = fit(256, 1 << 14);
    let b = fit(512, 1 << 15);
    let change = (b.big_c / a.big_c).max(a.big_c / b.big_c);
    let ok = change <= 2.0 && a.max_violation == 0.0 && b.max_violation == 0.0 && t.elapsed().as_secs() < 120;
    let detail = format!(
        "C = {:.4} -> {:.4} (x{change:.3} <= 2), c = {:.4}, max_violation {} / {}",
        a.big_c, b.big_c, a.c, a.max_violation, b.max_violation
    );
    assert!(verdict_line(10, "basic bound fit, baseline alpha = 0.5", ok, detail, t));
}
