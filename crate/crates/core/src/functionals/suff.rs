//! Checkers for sufficient conditions of the strong renewal theorem.
//!
//! Each statistic is a function of `x`; its suprema over dyadic bins
//! `[2^j, 2^(j+1))` expose growth. A check passes when the top bin stays
//! within `SUFF_BAND` of the middle bin.

use serde::{Deserialize, Serialize};

use crate::dist_factory::LatticeDist;
use crate::error::{Error, Result};

/// Allowed growth of the top-bin supremum over the middle-bin supremum.
pub const SUFF_BAND: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SuffMode {
    /// `F({x}) x A(x)`.
    D97,
    /// `sup_{1 <= y <= x/2} F((x - y, x]) A(x) (x / y)^gamma`.
    Suff0 { gamma: f64 },
    /// `sup_{1 <= s <= x} (A(s) / sqrt s) / (A(x) / sqrt x)`; needs `alpha = 1/2`.
    CondHalf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuffReport {
    pub mode: SuffMode,
    /// Lower edge of each dyadic bin.
    pub bin_lo: Vec<i64>,
    /// Supremum of the statistic over each bin.
    pub bin_sup: Vec<f64>,
    pub sup: f64,
    /// `bin_sup[last] / bin_sup[middle]`.
    pub growth: f64,
    pub pass: bool,
}

/// Runs the check on `x in [1, x_top]`, with `x_top` the law's window edge.
pub fn suff_check(dist: &LatticeDist, mode: SuffMode) -> Result<SuffReport> {
    let model = dist.model();
    let h = dist.h();
    let x_top = dist.x_max();
    if x_top < 8 {
        return Err(Error::Domain("window too short for a binned check".into()));
    }
    let stat: Box<dyn Fn(i64) -> f64 + '_> = match mode {
        SuffMode::D97 | SuffMode::Suff0 { .. } if !dist.is_positive() => {
            return Err(Error::Domain("this check needs a law on the positive lattice".into()));
        }
        SuffMode::D97 => Box::new(move |x| dist.mass_at(x) * x as f64 * h * model.a(x as f64 * h)),
        SuffMode::Suff0 { gamma } => {
            if !(gamma > 0.0) {
                return Err(Error::Domain(format!("gamma = {gamma} must be positive")));
            }
            let ys = y_grid(x_top / 2);
            Box::new(move |x| {
                let ax = model.a(x as f64 * h);
                ys.iter()
                    .take_while(|&&y| 2 * y <= x)
                    .map(|&y| dist.window_mass(x - y + 1, x) * ax * (x as f64 / y as f64).powf(gamma))
                    .fold(0.0, f64::max)
            })
        }
        SuffMode::CondHalf => {
            if (model.alpha() - 0.5).abs() > 1e-12 {
                return Err(Error::Domain("cond_half needs alpha = 1/2".into()));
            }
            // Running supremum of A(s)/sqrt(s) over s in [1, x].
            let g = |s: f64| model.a(s) / s.sqrt();
            let run: Vec<f64> = (1..=x_top)
                .scan(0.0f64, |m, s| {
                    *m = m.max(g(s as f64 * h));
                    Some(*m)
                })
                .collect();
            Box::new(move |x| run[(x - 1) as usize] / g(x as f64 * h))
        }
    };
    let mut bin_lo = Vec::new();
    let mut bin_sup = Vec::new();
    let mut lo = 1i64;
    while lo <= x_top {
        let hi = (2 * lo - 1).min(x_top);
        bin_lo.push(lo);
        bin_sup.push((lo..=hi).map(&stat).fold(0.0, f64::max));
        lo *= 2;
    }
    let sup = bin_sup.iter().copied().fold(0.0, f64::max);
    let last = *bin_sup.last().unwrap();
    let mid = bin_sup[bin_sup.len() / 2];
    let growth = if mid > 0.0 { last / mid } else if last > 0.0 { f64::INFINITY } else { 1.0 };
    Ok(SuffReport { mode, bin_lo, bin_sup, sup, growth, pass: sup.is_finite() && growth <= SUFF_BAND })
}

/// `1..=16` followed by a geometric grid of ratio `1.25` up to `y_max`.
fn y_grid(y_max: i64) -> Vec<i64> {
    let mut ys: Vec<i64> = (1..=16.min(y_max)).collect();
    let mut y = 16.0f64;
    loop {
        y *= 1.25;
        let yi = y.round() as i64;
        if yi > y_max {
            break;
        }
        ys.push(yi);
    }
    ys
}
