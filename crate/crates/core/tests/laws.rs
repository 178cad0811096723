//! Tail behaviour of the constructed laws on large windows.

use renewlab::dist_factory::{
    build_baseline, build_counter_renewal, build_spiky, build_two_sided_counter, dyadic_spikes, tail_check, Sided,
    ZetaFn,
};
use renewlab::functionals::{suff_check, SuffMode};
use renewlab::rv_kernel::TailModel;

fn pp(alpha: f64) -> TailModel {
    TailModel::pure_power(alpha).unwrap()
}

#[test]
fn baseline_half_tail_at_one_hundred_thousand() {
    let d = build_baseline(&pp(0.5), Sided::Positive, 1_000_000).unwrap();
    let v = d.tail_right(100_000) * pp(0.5).a(100_000.0);
    assert!((0.95..=1.05).contains(&v), "{v}");
    assert!((1..1000).all(|x| d.tail_right(x + 1) <= d.tail_right(x)));
    let t = tail_check(&d, 0.05);
    assert!(t.pass, "max_dev {}", t.max_dev);
}

#[test]
fn two_sided_counter_tails_settle_slowly() {
    let d = build_two_sided_counter(0.3, 1 << 20).unwrap();
    let t = tail_check(&d, 0.1);
    let k = t.p_hat.len();
    // The right tail is inside the band; the left tail carries the F3 excess, which
    // decays like 1 / log k and is still above 20% at 2^20.
    assert!(t.p_hat[k - 4..].iter().all(|p| (p - 1.0).abs() <= 0.1), "{:?}", t.p_hat);
    let q = &t.q_hat[k - 4..];
    assert!(q.iter().all(|v| *v > 1.0) && q.windows(2).all(|w| w[1] < w[0]), "{q:?}");
}

#[test]
fn spiky_band_depends_on_spike_decay() {
    let m = pp(0.5);
    let fast = dyadic_spikes(60, |n| 1.0 / n as f64);
    let d = build_spiky(&m, &fast.0, &fast.1, 1 << 20).unwrap();
    let t = tail_check(&d, 0.3);
    assert!(t.x.iter().zip(&t.p_hat).filter(|(x, _)| **x >= (1 << 20) / 10).all(|(_, p)| (0.8..=1.3).contains(p)));
    // With eps = 1 / log(1 + n) the retained spikes hold order-one tail mass at 2^20.
    let slow = dyadic_spikes(60, |n| 1.0 / (1.0 + n as f64).ln());
    let d = build_spiky(&m, &slow.0, &slow.1, 1 << 20).unwrap();
    assert!(!tail_check(&d, 0.3).pass);
}

#[test]
fn d97_separates_baseline_from_counterexample() {
    let base = build_baseline(&pp(0.3), Sided::Positive, 1 << 20).unwrap();
    let s = suff_check(&base, SuffMode::D97).unwrap();
    assert!(s.pass && s.sup.is_finite());
    let counter = build_counter_renewal(&pp(0.25), ZetaFn::Log, 1 << 20).unwrap();
    let s = suff_check(&counter, SuffMode::D97).unwrap();
    assert!(!s.pass);
    let tail = &s.bin_sup[s.bin_sup.len() - 6..];
    assert!(tail.windows(2).all(|w| w[1] >= w[0]), "{tail:?}");
}
