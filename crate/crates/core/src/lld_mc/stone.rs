//! Local limit diagnostic: `a_n P(S_n = x)` against `h phi(x h / a_n)`.

use serde::{Deserialize, Serialize};

use super::stable::one_sided_density;
use crate::conv_engine::{Marginals, Window};
use crate::dist_factory::LatticeDist;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoneCell {
    pub n: usize,
    pub x: i64,
    pub u: f64,
    /// `a_n P(S_n = x)`.
    pub scaled_mass: f64,
    /// `h phi(x h / a_n)`.
    pub density: f64,
    /// Set when the density could not be evaluated or `x` lies beyond the law's window;
    /// excluded from the maxima.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoneReport {
    pub n_grid: Vec<usize>,
    pub u_grid: Vec<f64>,
    /// Empty for two-sided laws.
    pub cells: Vec<StoneCell>,
    /// `max_u |a_n P(S_n = x) - h phi(u)|` per `n`; empty for two-sided laws.
    pub max_dev_by_n: Vec<f64>,
    /// `a_n sup_z P(S_n = z)` per `n`.
    pub sup_constant_by_n: Vec<f64>,
}

pub fn stone_llt_diag(dist: &LatticeDist, n_grid: &[usize], u_grid: &[f64]) -> Result<StoneReport> {
    if n_grid.is_empty() || u_grid.is_empty() || n_grid.contains(&0) {
        return Err(Error::Domain("grids must be nonempty with n >= 1".into()));
    }
    if u_grid.iter().any(|&u| !(u > 0.0 && u.is_finite())) {
        return Err(Error::Domain("x / a_n grid must be positive".into()));
    }
    let model = dist.model();
    let meta = dist.tail_meta();
    let h = dist.h();
    let alpha = model.alpha();
    let mut ns = n_grid.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let n_max = *ns.last().unwrap();
    let u_max = u_grid.iter().copied().fold(0.0, f64::max);
    let one_sided = dist.is_positive();
    let window = if one_sided {
        Window::new(0, (u_max * model.a_inv(n_max as f64) / h).ceil() as i64 + 1)
    } else {
        let m = dist.x_min().abs().max(dist.x_max());
        Window::new(-2 * m, 2 * m)
    };
    let mut walk = Marginals::for_dist(dist, window);
    let mut cells = Vec::new();
    let mut max_dev_by_n = Vec::new();
    let mut sup_constant_by_n = Vec::new();
    for &n in &ns {
        while walk.n() < n {
            walk.advance()?;
        }
        let p = walk.current();
        let a_n = model.a_inv(n as f64);
        sup_constant_by_n.push(a_n * p.sup());
        if !one_sided {
            continue;
        }
        let mut dev: f64 = 0.0;
        for &u in u_grid {
            let x = (u * a_n / h).round() as i64;
            let scaled_mass = a_n * p.get(x);
            let density = h * one_sided_density(alpha, meta.p, x as f64 * h / a_n);
            let flagged = !density.is_finite() || x > dist.x_max();
            if !flagged {
                dev = dev.max((scaled_mass - density).abs());
            }
            cells.push(StoneCell { n, x, u, scaled_mass, density, flagged });
        }
        max_dev_by_n.push(dev);
    }
    Ok(StoneReport { n_grid: ns, u_grid: u_grid.to_vec(), cells, max_dev_by_n, sup_constant_by_n })
}
