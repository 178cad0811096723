use serde::{Deserialize, Serialize};

use super::fft::linear_conv;
use crate::dist_factory::LatticeDist;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenewalMethod {
    /// Power-series inverse of `1 - f` by Newton doubling.
    Newton,
    /// The recursion `u(x) = sum_{1 <= y <= x} f(y) u(x - y)`.
    Direct,
}

/// Renewal mass `u(x) = sum_n P(S_n = x)` on `[0, X]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewalTable {
    pub h: f64,
    pub u: Vec<f64>,
    /// `max |u - (delta_0 + f * u)|` over the window.
    pub residual: f64,
    pub method: RenewalMethod,
    /// Magnitude of negative values clipped from the solution.
    pub clipped: f64,
}

impl RenewalTable {
    pub fn get(&self, x: i64) -> f64 {
        if x < 0 {
            0.0
        } else {
            self.u.get(x as usize).copied().unwrap_or(f64::NAN)
        }
    }
}

/// Solves `u = delta_0 + f * u` on `[0, x_max]` for a law on the positive lattice.
pub fn renewal_mass(dist: &LatticeDist, x_max: usize, method: RenewalMethod) -> Result<RenewalTable> {
    if dist.mass_at(0) != 0.0 {
        return Err(Error::Domain("renewal mass needs f(0) = 0".into()));
    }
    if !dist.is_positive() {
        return Err(Error::Domain(
            "renewal mass needs a law on the positive lattice; use the marginal sums for two-sided walks".into(),
        ));
    }
    let len = x_max + 1;
    let f: Vec<f64> = (0..len as i64).map(|x| dist.mass_at(x)).collect();
    let mut u = match method {
        RenewalMethod::Newton => newton_inverse(&f, len),
        RenewalMethod::Direct => direct_recursion(&f, len),
    };
    let mut clipped = 0.0;
    for v in u.iter_mut() {
        if *v < 0.0 {
            clipped -= *v;
            *v = 0.0;
        }
    }
    let fu = linear_conv(&f, &u);
    let residual = (0..len)
        .map(|x| {
            let rhs = if x == 0 { 1.0 } else { 0.0 } + fu[x];
            (u[x] - rhs).abs()
        })
        .fold(0.0, f64::max);
    Ok(RenewalTable { h: dist.h(), u, residual, method, clipped })
}

fn direct_recursion(f: &[f64], len: usize) -> Vec<f64> {
    let mut u = vec![0.0; len];
    u[0] = 1.0;
    for x in 1..len {
        let mut s = 0.0;
        for y in 1..=x {
            s += f[y] * u[x - y];
        }
        u[x] = s;
    }
    u
}

/// Power series of `1 / (1 - f)` to `len` terms.
///
/// With `g` correct to `m` terms, `r = 1 - (1 - f) g` vanishes below `m` and
/// `g + g r` is correct to `2m` terms; only the upper half of `r` is formed.
fn newton_inverse(f: &[f64], len: usize) -> Vec<f64> {
    let mut g = vec![1.0];
    let mut m = 1;
    while m < len {
        let m2 = (2 * m).min(len);
        let mut a = vec![0.0; m2];
        a[0] = 1.0;
        for i in 1..m2 {
            a[i] = -f.get(i).copied().unwrap_or(0.0);
        }
        let prod = linear_conv(&a, &g);
        let r: Vec<f64> = (m..m2).map(|i| -prod[i]).collect();
        let corr = linear_conv(&g[..m2 - m], &r);
        g.extend_from_slice(&corr[..m2 - m]);
        m = m2;
    }
    g
}
