//! Local large-deviation ratios with and without a cap on the largest step.

use rand::distributions::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::WeightedAliasIndex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conv_engine::{Marginals, MassVector, Window};
use crate::dist_factory::LatticeDist;
use crate::error::{Error, Result};

/// Smallest `k` with `gamma >= 1/k`, so `gamma in [1/k, 1/(k-1))` maps to `k`.
pub fn lld_exponent(gamma: f64) -> Result<u32> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Domain(format!("gamma = {gamma} must be positive")));
    }
    let k = (1.0 / gamma - 1e-12).ceil().max(1.0);
    Ok(k as u32)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LldMethod {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LldOptions {
    /// Keep only cells with `n <= A(c x)` when set.
    pub n_cap_delta: Option<f64>,
    pub method: LldMethod,
}

impl Default for LldOptions {
    fn default() -> Self {
        Self { n_cap_delta: None, method: LldMethod::Exact }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LldCell {
    pub n: usize,
    pub x: i64,
    pub prob: f64,
    pub ratio: f64,
    /// Binomial standard error of `ratio` for sampled cells.
    pub std_error: Option<f64>,
    /// Sampled cell with no hits: the ratio is inconclusive.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LldReport {
    /// `None` for the unconstrained ratio.
    pub gamma: Option<f64>,
    /// Power of `A(x) / n` in the normalization.
    pub exponent: f64,
    /// Lattice offsets of `J` relative to `x`, inclusive.
    pub j: Window,
    pub cells: Vec<LldCell>,
    /// Sup over unflagged cells.
    pub sup: f64,
    /// Sup per `x` in grid order.
    pub sup_by_x: Vec<(i64, f64)>,
    /// Largest mass lost outside the computation window.
    pub leakage: f64,
}

/// `P(S_n in x + J, M_n <= floor(gamma x)) a_n (A(x) / n)^k` with `k = lld_exponent(gamma)`.
pub fn lld_bound_ratio(
    dist: &LatticeDist,
    gamma: f64,
    j: Window,
    n_grid: &[usize],
    x_grid: &[i64],
    opts: LldOptions,
) -> Result<LldReport> {
    let k = lld_exponent(gamma)?;
    local_ratio(dist, Some(gamma), k as f64, j, n_grid, x_grid, opts)
}

/// `P(S_n in x + J) a_n A(x) / n`.
pub fn unconstrained_ratio(dist: &LatticeDist, j: Window, n_grid: &[usize], x_grid: &[i64]) -> Result<LldReport> {
    local_ratio(dist, None, 1.0, j, n_grid, x_grid, LldOptions::default())
}

fn validate(n_grid: &[usize], x_grid: &[i64]) -> Result<()> {
    if n_grid.is_empty() || x_grid.is_empty() {
        return Err(Error::Domain("grids must be nonempty".into()));
    }
    if n_grid.contains(&0) || x_grid.iter().any(|&x| x < 1) {
        return Err(Error::Domain("grids need n >= 1 and x >= 1".into()));
    }
    Ok(())
}

/// Step counts in `n_grid` allowed at `x`, ascending.
fn steps_at(dist: &LatticeDist, n_grid: &[usize], x: i64, cap: Option<f64>) -> Vec<usize> {
    let top = cap.map(|c| dist.model().a(c * x as f64 * dist.h()).floor() as usize);
    let mut ns: Vec<usize> = n_grid.iter().copied().filter(|&n| top.map_or(true, |t| n <= t)).collect();
    ns.sort_unstable();
    ns.dedup();
    ns
}

fn marginal_window(dist: &LatticeDist, hi: i64) -> Window {
    if dist.is_positive() {
        Window::new(0, hi)
    } else {
        let m = dist.x_min().abs().max(dist.x_max());
        Window::new(-2 * m, (2 * m).max(hi))
    }
}

#[allow(clippy::too_many_arguments)]
fn local_ratio(
    dist: &LatticeDist,
    gamma: Option<f64>,
    exponent: f64,
    j: Window,
    n_grid: &[usize],
    x_grid: &[i64],
    opts: LldOptions,
) -> Result<LldReport> {
    validate(n_grid, x_grid)?;
    let model = dist.model();
    let h = dist.h();
    let norm = |n: usize, x: i64| model.a_inv(n as f64) * (model.a(x as f64 * h) / n as f64).powf(exponent);
    let per_x: Vec<(Vec<LldCell>, f64)> = x_grid
        .par_iter()
        .enumerate()
        .map(|(xi, &x)| {
            let cap = gamma.map(|g| (g * x as f64).floor() as i64);
            let ns = steps_at(dist, n_grid, x, opts.n_cap_delta);
            match opts.method {
                LldMethod::Exact => {
                    let kernel = match cap {
                        Some(m) => MassVector::from_dist_capped(dist, m),
                        None => MassVector::from_dist(dist),
                    };
                    let mut walk = Marginals::new(kernel, marginal_window(dist, x + j.hi));
                    let mut cells = Vec::with_capacity(ns.len());
                    let mut leak: f64 = 0.0;
                    for &n in &ns {
                        while walk.n() < n {
                            walk.advance()?;
                        }
                        let p = walk.current();
                        leak = leak.max(p.leakage());
                        let prob: f64 = (x + j.lo..=x + j.hi).map(|z| p.get(z)).sum();
                        cells.push(LldCell { n, x, prob, ratio: prob * norm(n, x), std_error: None, flagged: false });
                    }
                    Ok((cells, leak))
                }
                LldMethod::MonteCarlo { samples, seed } => {
                    let sampler = WalkSampler::new(dist)?;
                    let cells = ns
                        .iter()
                        .enumerate()
                        .map(|(ni, &n)| {
                            let stream = ((xi as u64) << 32) | ni as u64;
                            let hits = sampler.count_hits(n, x, j, cap, samples, seed, stream);
                            let ph = hits as f64 / samples as f64;
                            let se = (ph * (1.0 - ph) / samples as f64).sqrt();
                            LldCell {
                                n,
                                x,
                                prob: ph,
                                ratio: ph * norm(n, x),
                                std_error: Some(se * norm(n, x)),
                                flagged: hits == 0,
                            }
                        })
                        .collect();
                    Ok((cells, 0.0))
                }
            }
        })
        .collect::<Result<_>>()?;
    let mut cells = Vec::new();
    let mut sup_by_x = Vec::new();
    let mut leakage: f64 = 0.0;
    for ((c, leak), &x) in per_x.into_iter().zip(x_grid) {
        let s = c.iter().filter(|c| !c.flagged).map(|c| c.ratio).fold(0.0, f64::max);
        sup_by_x.push((x, s));
        leakage = leakage.max(leak);
        cells.extend(c);
    }
    let sup = sup_by_x.iter().map(|v| v.1).fold(0.0, f64::max);
    Ok(LldReport { gamma, exponent, j, cells, sup, sup_by_x, leakage })
}

/// Walk simulation by alias sampling; the far atoms act as absorbing misses.
struct WalkSampler<'a> {
    dist: &'a LatticeDist,
    alias: WeightedAliasIndex<f64>,
}

impl<'a> WalkSampler<'a> {
    fn new(dist: &'a LatticeDist) -> Result<Self> {
        let mut w = dist.masses().to_vec();
        w.push(dist.trunc_left());
        w.push(dist.trunc_right());
        let alias = WeightedAliasIndex::new(w).map_err(|e| Error::Numerical(format!("alias table: {e}")))?;
        Ok(Self { dist, alias })
    }

    #[allow(clippy::too_many_arguments)]
    fn count_hits(&self, n: usize, x: i64, j: Window, cap: Option<i64>, samples: usize, seed: u64, stream: u64) -> u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let len = self.dist.masses().len();
        let cap = cap.unwrap_or(i64::MAX);
        let mut hits = 0;
        'walk: for _ in 0..samples {
            let mut s = 0i64;
            for _ in 0..n {
                let i = self.alias.sample(&mut rng);
                if i >= len {
                    continue 'walk;
                }
                let step = self.dist.x_min() + i as i64;
                if step > cap {
                    continue 'walk;
                }
                s += step;
            }
            if s >= x + j.lo && s <= x + j.hi {
                hits += 1;
            }
        }
        hits
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FukNagaevCell {
    pub n: usize,
    pub x: i64,
    /// `P(S_n >= x, M_n <= floor(gamma x))`.
    pub prob: f64,
    /// `prob / (n / A(x))^(1/gamma)`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FukNagaevReport {
    pub gamma: f64,
    pub cells: Vec<FukNagaevCell>,
    pub sup: f64,
    pub sup_by_x: Vec<(i64, f64)>,
}

/// Capped tail probabilities for renewal processes, as
/// `P(M_n <= m) - P(S_n < x, M_n <= m)` from the capped marginal on `[0, x)`.
pub fn fuk_nagaev_tail(dist: &LatticeDist, gamma: f64, x_grid: &[i64], n_grid: &[usize]) -> Result<FukNagaevReport> {
    validate(n_grid, x_grid)?;
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("gamma = {gamma} must be positive")));
    }
    if !dist.is_positive() {
        return Err(Error::Domain("capped tails are computed for renewal processes only".into()));
    }
    let model = dist.model();
    let h = dist.h();
    let mut ns = n_grid.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let per_x: Vec<Vec<FukNagaevCell>> = x_grid
        .par_iter()
        .map(|&x| {
            let m = (gamma * x as f64).floor() as i64;
            let f_cap = dist.window_mass(dist.x_min(), m);
            let mut walk = Marginals::new(MassVector::from_dist_capped(dist, m), Window::new(0, x - 1));
            let mut out = Vec::with_capacity(ns.len());
            for &n in &ns {
                while walk.n() < n {
                    walk.advance()?;
                }
                let below: f64 = walk.current().total();
                let prob = (f_cap.powi(n as i32) - below).max(0.0);
                let scale = (n as f64 / model.a(x as f64 * h)).powf(1.0 / gamma);
                out.push(FukNagaevCell { n, x, prob, ratio: prob / scale });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let sup_by_x: Vec<(i64, f64)> =
        per_x.iter().zip(x_grid).map(|(c, &x)| (x, c.iter().map(|c| c.ratio).fold(0.0, f64::max))).collect();
    let sup = sup_by_x.iter().map(|v| v.1).fold(0.0, f64::max);
    Ok(FukNagaevReport { gamma, cells: per_x.concat(), sup, sup_by_x })
}
