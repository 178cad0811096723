//! Ratio diagnostics between plain and tilde functionals.
//!
//! The comparison constants are not explicit, so these are reported as
//! curves with their extremes and never asserted.

use serde::{Deserialize, Serialize};

use super::chain::{i1_parts, tilde_i1_forms_with, LevelChain, Terminal};
use super::plus::reach;
use crate::dist_factory::LatticeDist;
use crate::error::{Error, Result};
use crate::rv_kernel::RatePrimitive;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixReport {
    pub delta: f64,
    pub eta: f64,
    pub x_grid: Vec<i64>,
    /// `I_1(delta/2; x) / ~I_1(delta; x)`.
    pub half_over_tilde: Vec<f64>,
    /// `~I_1(delta; x) / I_1(delta; x)`.
    pub tilde_over_plain: Vec<f64>,
    /// `max(I_1, I_2)(delta; x) / ~I_2(delta, eta; x)`.
    pub chain_over_tilde: Vec<f64>,
    /// `~I_2 / I_2`; its minimum is the measured `kappa`.
    pub tilde2_over_plain2: Vec<f64>,
    pub kappa: f64,
    /// Set when some ratio has a zero denominator under a positive numerator.
    pub unbounded: bool,
}

/// `a / b` with `0 / 0 = 0`.
fn ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a / b
    }
}

pub fn appendix_diag(dist: &LatticeDist, delta: f64, eta: f64, xs: &[i64]) -> Result<AppendixReport> {
    if xs.is_empty() || xs.iter().any(|&x| x < 1) {
        return Err(Error::Domain("x grid must be nonempty and positive".into()));
    }
    if !(delta > 0.0 && delta <= 1.0 && eta > 0.0 && eta < 1.0) {
        return Err(Error::Domain("need delta in (0, 1] and eta in (0, 1)".into()));
    }
    let x_hi = *xs.iter().max().unwrap();
    let y_max = reach(delta, x_hi);
    let plain2 = LevelChain::build(dist, 2, eta, Terminal::Plain, y_max)?;
    let tilde2 = LevelChain::build(dist, 2, eta, Terminal::Tilde, y_max)?;
    let phi = RatePrimitive::new(dist.model(), 2, delta * x_hi as f64 * dist.h() + 1.0);
    let mut rep = AppendixReport {
        delta,
        eta,
        x_grid: xs.to_vec(),
        half_over_tilde: Vec::new(),
        tilde_over_plain: Vec::new(),
        chain_over_tilde: Vec::new(),
        tilde2_over_plain2: Vec::new(),
        kappa: f64::INFINITY,
        unbounded: false,
    };
    for &x in xs {
        let i1 = i1_parts(dist, delta, x).total();
        let i1_half = i1_parts(dist, delta / 2.0, x).total();
        let t1 = tilde_i1_forms_with(dist, &phi, delta, x).0;
        let i2 = plain2.outer(dist, delta, x);
        let t2 = tilde2.outer(dist, delta, x);
        let cells = [ratio(i1_half, t1), ratio(t1, i1), ratio(i1.max(i2), t2), ratio(t2, i2)];
        rep.unbounded |= cells[..3].iter().any(|v| v.is_infinite());
        rep.half_over_tilde.push(cells[0]);
        rep.tilde_over_plain.push(cells[1]);
        rep.chain_over_tilde.push(cells[2]);
        rep.tilde2_over_plain2.push(cells[3]);
        if i2 > 0.0 {
            rep.kappa = rep.kappa.min(cells[3]);
        }
    }
    Ok(rep)
}

impl AppendixReport {
    pub fn max_of(curve: &[f64]) -> f64 {
        curve.iter().copied().fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist_factory::{build_baseline, Sided};
    use crate::rv_kernel::TailModel;

    #[test]
    fn ratios_are_finite_on_baseline() {
        let d = build_baseline(&TailModel::pure_power(0.3).unwrap(), Sided::TwoSided { p: 0.5, q: 0.5 }, 1 << 12)
            .unwrap();
        let r = appendix_diag(&d, 0.4, 0.5, &[256, 512, 1024, 2048, 4096]).unwrap();
        assert!(!r.unbounded);
        assert!(r.half_over_tilde.iter().all(|v| v.is_finite()));
        assert!(r.kappa > 0.0 && r.kappa.is_finite());
    }
}
