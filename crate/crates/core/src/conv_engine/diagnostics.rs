use serde::{Deserialize, Serialize};

use super::mass::Window;
use super::renewal::{renewal_mass, RenewalMethod};
use super::walk::Marginals;
use crate::dist_factory::LatticeDist;
use crate::error::{Error, Result};
use crate::quad;
use crate::rv_kernel::TailModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrtOptions {
    /// Target for the truncation estimate relative to the smallest computed `U`.
    pub tolerance: f64,
    /// Minimum and maximum number of marginals summed for two-sided walks.
    pub n_min: usize,
    pub n_cap: usize,
}

impl Default for SrtOptions {
    fn default() -> Self {
        Self { tolerance: 1e-3, n_min: 16, n_cap: 4096 }
    }
}

/// `U((x - h, x]) x / (h C A(x))` with the error estimate used to compute it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrtRatio {
    pub x: i64,
    pub u: f64,
    pub ratio: f64,
    /// Renewal residual (one-sided) or tail-of-series plus leakage bound (two-sided).
    pub trunc_err: f64,
    /// Set when `trunc_err > 0.1 u`.
    pub flagged: bool,
    /// Number of marginals summed (two-sided only).
    pub n_used: Option<usize>,
    /// Measured `sup_n a_n sup_z P(S_n = z)` (two-sided only).
    pub sup_constant: Option<f64>,
}

pub fn srt_ratio(dist: &LatticeDist, x: i64, c: f64, opts: SrtOptions) -> Result<SrtRatio> {
    Ok(srt_curve(dist, &[x], c, opts)?.remove(0))
}

/// SRT ratios at several points from a single renewal computation.
pub fn srt_curve(dist: &LatticeDist, xs: &[i64], c: f64, opts: SrtOptions) -> Result<Vec<SrtRatio>> {
    if xs.is_empty() || xs.iter().any(|&x| x < 1) {
        return Err(Error::Domain("srt ratios need points x >= 1".into()));
    }
    if !(c > 0.0) {
        return Err(Error::Domain(format!("renewal constant must be positive, got {c}")));
    }
    let model = dist.model();
    let h = dist.h();
    let norm = |x: i64, u: f64| u * x as f64 / (c * model.a(x as f64 * h));
    let x_hi = *xs.iter().max().unwrap();
    if dist.is_positive() && dist.mass_at(0) == 0.0 {
        let table = renewal_mass(dist, x_hi as usize, RenewalMethod::Newton)?;
        return Ok(xs
            .iter()
            .map(|&x| {
                let u = table.get(x);
                let err = table.residual;
                SrtRatio {
                    x,
                    u,
                    ratio: norm(x, u),
                    trunc_err: err,
                    flagged: err > 0.1 * u,
                    n_used: None,
                    sup_constant: None,
                }
            })
            .collect());
    }

    let m = dist.x_min().abs().max(dist.x_max());
    let window = Window::new(-2 * m, (2 * m).max(x_hi));
    let mut walk = Marginals::for_dist(dist, window);
    let mut u: Vec<f64> = xs.iter().map(|&x| if x == 0 { 1.0 } else { 0.0 }).collect();
    let mut c2: f64 = 0.0;
    let mut n = 0;
    let mut tail = f64::INFINITY;
    let mut leak = 0.0;
    while n < opts.n_cap {
        let p = walk.advance()?;
        n += 1;
        for (ui, &x) in u.iter_mut().zip(xs) {
            *ui += p.get(x);
        }
        c2 = c2.max(model.a_inv(n as f64) * p.sup());
        leak = p.leakage();
        if n >= opts.n_min {
            tail = c2 * inv_norming_tail(model, n);
            let floor = u.iter().copied().fold(f64::INFINITY, f64::min);
            if tail <= opts.tolerance * floor {
                break;
            }
        }
    }
    Ok(xs
        .iter()
        .zip(&u)
        .map(|(&x, &ux)| {
            let err = tail + leak;
            SrtRatio {
                x,
                u: ux,
                ratio: norm(x, ux),
                trunc_err: err,
                flagged: err > 0.1 * ux,
                n_used: Some(n),
                sup_constant: Some(c2),
            }
        })
        .collect())
}

/// Terms of `sum_{k > n} 1 / a_k` summed explicitly before the integral takes over.
const EXPLICIT_TERMS: usize = 1000;

/// `sum_{k > n} 1 / a_k`: explicit terms, then `int_{m + 1/2}^inf dt / A^{-1}(t)`.
pub(crate) fn inv_norming_tail(model: &TailModel, n: usize) -> f64 {
    let m = n + EXPLICIT_TERMS;
    let head: f64 = (n + 1..=m).map(|k| 1.0 / model.a_inv(k as f64)).sum();
    head + inv_norming_integral(model, m)
}

fn inv_norming_integral(model: &TailModel, n: usize) -> f64 {
    let t0 = n as f64 + 0.5;
    if model.is_pure_power() && t0 >= 1.0 {
        let e = 1.0 / model.alpha();
        return t0.powf(1.0 - e) / (e - 1.0);
    }
    // In `u = ln t` the integrand decays like `exp(-(1/alpha - 1) u)`; stop once the
    // remainder is below `e^-40` of the head, or before `t` overflows.
    let u0 = t0.ln();
    let u1 = (u0 + 40.0 / (1.0 / model.alpha() - 1.0)).min(700.0);
    let g = |u: f64| {
        let t = u.exp();
        t / model.a_inv(t)
    };
    quad::adaptive_simpson(&g, u0, u1, 1e-10)
}

/// Fit of `P(S_n = z) <= (C / a_n) exp(-c n / A(z))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasicBoundFit {
    /// `c = inf_z A(z) F(z, inf) / 2` over window points with a positive tail.
    pub c: f64,
    /// Smallest `C` valid on the grid.
    pub big_c: f64,
    /// Grid cell attaining `C`.
    pub argmax: (usize, i64),
    /// `max(0, max_cell P a_n exp(c n / A(z)) - C)`; zero by construction.
    pub max_violation: f64,
}

pub fn basic_bound_fit(dist: &LatticeDist, n_grid: &[usize], z_grid: &[i64]) -> Result<BasicBoundFit> {
    if !dist.is_positive() {
        return Err(Error::Domain("the exponential bound is fitted for renewal processes only".into()));
    }
    if n_grid.is_empty() || z_grid.is_empty() {
        return Err(Error::Domain("empty grid".into()));
    }
    let model = dist.model();
    // Points beyond the support carry no tail and are skipped.
    let c = 0.5
        * (0..=dist.x_max())
            .map(|z| model.a(z as f64) * dist.tail_right(z))
            .filter(|v| *v > 0.0)
            .fold(f64::INFINITY, f64::min);
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Numerical(format!("tail constant c = {c} is not positive")));
    }
    let n_max = *n_grid.iter().max().unwrap();
    let z_max = *z_grid.iter().max().unwrap();
    let mut walk = Marginals::for_dist(dist, Window::new(0, z_max));
    let mut big_c: f64 = 0.0;
    let mut argmax = (0, 0);
    let mut vals = Vec::new();
    for n in 1..=n_max {
        let p = walk.advance()?;
        if !n_grid.contains(&n) {
            continue;
        }
        let an = model.a_inv(n as f64);
        for &z in z_grid {
            let pz = p.get(z);
            if pz == 0.0 {
                continue;
            }
            let v = pz * an * (c * n as f64 / model.a(z as f64)).exp();
            vals.push(v);
            if v > big_c {
                big_c = v;
                argmax = (n, z);
            }
        }
    }
    let max_violation = vals.iter().map(|v| v - big_c).fold(0.0, f64::max);
    Ok(BasicBoundFit { c, big_c, argmax, max_violation })
}

/// `a_n sup_z P(S_n = z)` for `n = 1..=n_max` on `window`.
pub fn local_sup_constant(dist: &LatticeDist, n_max: usize, window: Window) -> Result<Vec<f64>> {
    let model = dist.model();
    let mut walk = Marginals::for_dist(dist, window);
    (1..=n_max)
        .map(|n| Ok(model.a_inv(n as f64) * walk.advance()?.sup()))
        .collect()
}
