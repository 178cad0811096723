//! One-sided functionals of renewal laws: `I1+` and its integrated variant.

use serde::{Deserialize, Serialize};

use crate::dist_factory::LatticeDist;
use crate::rv_kernel::RatePrimitive;

/// Largest lattice `|y|` with `|y| h <= delta x h`.
#[inline]
pub(crate) fn reach(delta: f64, x: i64) -> i64 {
    let r = delta * x as f64;
    if r < 0.0 {
        0
    } else {
        r.floor() as i64
    }
}

/// `sum_{z = 1}^{D} F({x - z}) b_2(z)` with `D = floor(delta x)`, summed in increasing `z`.
pub fn i1_plus(dist: &LatticeDist, delta: f64, x: i64) -> f64 {
    let model = dist.model();
    let h = dist.h();
    (1..=reach(delta, x)).map(|z| dist.mass_at(x - z) * model.b(2, z as f64 * h)).sum()
}

/// `I1+(delta; x)` for every `delta` at once from a single prefix pass.
pub fn i1_plus_deltas(dist: &LatticeDist, deltas: &[f64], x: i64) -> Vec<f64> {
    let model = dist.model();
    let h = dist.h();
    let d_max = deltas.iter().map(|&d| reach(d, x)).max().unwrap_or(0);
    let mut prefix = Vec::with_capacity(d_max as usize + 1);
    let mut acc = 0.0;
    prefix.push(0.0);
    for z in 1..=d_max {
        acc += dist.mass_at(x - z) * model.b(2, z as f64 * h);
        prefix.push(acc);
    }
    deltas.iter().map(|&d| prefix[reach(d, x) as usize]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TildeForm {
    /// `int_1^{delta x} F((x - z, x]) b_2(z) / z dz`, integrating per lattice step.
    Density,
    /// `sum_k F({x - k}) int_{max(1, k)}^{delta x} b_2(z) / z dz` after exchanging the order.
    Fubini,
}

/// `~I1+(delta; x)` in either form; the forms agree up to rounding.
pub fn tilde_i1_plus(dist: &LatticeDist, delta: f64, x: i64, form: TildeForm) -> f64 {
    let top = delta * x as f64 * dist.h();
    if top < 1.0 {
        return 0.0;
    }
    let phi = RatePrimitive::new(dist.model(), 2, top);
    tilde_i1_plus_with(dist, &phi, delta, x, form)
}

pub(crate) fn tilde_i1_plus_with(
    dist: &LatticeDist,
    phi: &RatePrimitive,
    delta: f64,
    x: i64,
    form: TildeForm,
) -> f64 {
    let h = dist.h();
    let top = delta * x as f64 * h;
    if top < 1.0 {
        return 0.0;
    }
    let d = reach(delta, x);
    match form {
        TildeForm::Density => {
            // On z in (m, m + 1] the step mass F((x - z, x]) equals sum_{k <= m} F({x - k}).
            let mut cum = 0.0;
            let mut total = 0.0;
            for m in 0..=d {
                cum += dist.mass_at(x - m);
                let lo = (m as f64 * h).max(1.0);
                let hi = ((m + 1) as f64 * h).min(top);
                if hi > lo {
                    total += cum * (phi.phi(hi) - phi.phi(lo));
                }
            }
            total
        }
        TildeForm::Fubini => {
            let phi_top = phi.phi(top);
            (0..=d)
                .map(|k| {
                    let lo = (k as f64 * h).max(1.0);
                    if lo >= top {
                        0.0
                    } else {
                        dist.mass_at(x - k) * (phi_top - phi.phi(lo))
                    }
                })
                .sum()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist_factory::{build_baseline, build_counter_renewal, Sided, TailMeta, ZetaFn};
    use crate::rv_kernel::TailModel;

    fn model() -> TailModel {
        TailModel::pure_power(0.3).unwrap()
    }

    #[test]
    fn empty_range_is_zero() {
        let d = build_baseline(&model(), Sided::Positive, 1 << 12).unwrap();
        assert_eq!(i1_plus(&d, 0.001, 500), 0.0);
        assert_eq!(tilde_i1_plus(&d, 0.001, 500, TildeForm::Density), 0.0);
    }

    #[test]
    fn single_atom() {
        let m = model();
        // Atom at 90 = x - z0 with x = 100, z0 = 10.
        let mut masses = vec![0.0; 101];
        masses[1] = 0.6;
        masses[90] = 0.4;
        let d = LatticeDist::from_masses(1.0, 0, masses, TailMeta::new(m.clone(), 1.0, 0.0)).unwrap();
        let v = i1_plus(&d, 0.2, 100);
        assert!((v - 0.4 * m.b(2, 10.0)).abs() < 1e-15);
    }

    #[test]
    fn forms_agree() {
        let d = build_counter_renewal(&TailModel::pure_power(0.25).unwrap(), ZetaFn::Log, 1 << 14).unwrap();
        for (delta, x) in [(0.1, 4096), (0.4, 16000), (0.05, 1 << 14), (0.3, 777)] {
            let a = tilde_i1_plus(&d, delta, x, TildeForm::Density);
            let b = tilde_i1_plus(&d, delta, x, TildeForm::Fubini);
            assert!((a - b).abs() <= 1e-12 * a.abs(), "{a} vs {b}");
        }
    }

    #[test]
    fn deltas_in_one_pass() {
        let d = build_baseline(&model(), Sided::Positive, 1 << 12).unwrap();
        let ds = [0.4, 0.2, 0.1];
        let batch = i1_plus_deltas(&d, &ds, 3000);
        for (v, &dl) in batch.iter().zip(&ds) {
            assert_eq!(*v, i1_plus(&d, dl, 3000));
        }
    }
}
