//! Chain functionals over `k` large jumps, `I_k` and `~I_k`.
//!
//! For `k >= 2` the inner sums do not depend on `x` or `delta`, so they are
//! folded into level functions evaluated once on `|y| <= Y`:
//!
//! ```text
//! G_k(y) = b_{k+1}(y)
//! G_j(y) = sum_{|t| <= eta |y|} F({t - y}) G_{j+1}(t)        (j < k)
//! I_k(delta, eta; x) = sum_{|y| <= delta x} F({x + y}) G_1(y)
//! ```
//!
//! For `~I_k` the terminal pair weight `b~_{k+1}(y_{k-1}, y_k)` splits as
//! `Phi(|y_{k-1}|) - Phi(|y_k|)`, giving `G_{k-1}` from two correlations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::plus::reach;
use crate::conv_engine::fft::linear_conv;
use crate::dist_factory::LatticeDist;
use crate::error::{Error, Result};
use crate::rv_kernel::RatePrimitive;

/// Deepest chain evaluated exactly.
pub const EXACT_MAX_K: u32 = 4;
/// Level-function nodes `(level, y)` beyond which exact evaluation hands over to Monte Carlo.
pub const NODE_LIMIT: u64 = 100_000_000;
/// Samples per independent RNG stream.
const MC_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ChainMode {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub k: u32,
    pub eta: f64,
    pub delta: f64,
    pub mode: ChainMode,
}

impl ChainSpec {
    pub fn exact(k: u32, eta: f64, delta: f64) -> Self {
        Self { k, eta, delta, mode: ChainMode::Exact }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Domain("chain depth k must be positive".into()));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::Domain(format!("eta = {} must lie in (0, 1)", self.eta)));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::Domain(format!("delta = {} must lie in (0, 1]", self.delta)));
        }
        if matches!(self.mode, ChainMode::Exact) && self.k > EXACT_MAX_K {
            return Err(Error::Unsupported(format!(
                "exact chains support k <= {EXACT_MAX_K}, got k = {}",
                self.k
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    /// `b_{k+1}(y_k)`.
    Plain,
    /// `b~_2(delta x, y_1)` for `k = 1`, `b~_{k+1}(y_{k-1}, y_k)` otherwise.
    Tilde,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMethod {
    Exact,
    MonteCarlo,
}

/// What an evaluation touched: the `|y|` range per level and the work done.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainAudit {
    pub level_ranges: Vec<i64>,
    pub nodes: u64,
    pub direct_terms: u64,
    pub fft_blocks: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainValue {
    pub value: f64,
    pub std_error: Option<f64>,
    pub method: EvalMethod,
    /// Set when Monte Carlo found no admissible first step.
    pub no_first_step: bool,
    pub audit: ChainAudit,
}

/// `I_k(delta, eta; x)` (`I_1(delta; x)` when `k = 1`).
pub fn i_chain(dist: &LatticeDist, spec: ChainSpec, x: i64) -> Result<ChainValue> {
    chain(dist, spec, x, Terminal::Plain)
}

/// `~I_k(delta, eta; x)` (`~I_1(delta; x)` when `k = 1`).
pub fn tilde_i_chain(dist: &LatticeDist, spec: ChainSpec, x: i64) -> Result<ChainValue> {
    chain(dist, spec, x, Terminal::Tilde)
}

/// `~I_1*(delta; x)`: `~I_1` of the reflected law.
pub fn tilde_i1_star(dist: &LatticeDist, delta: f64, x: i64) -> Result<f64> {
    Ok(tilde_i_chain(&dist.reflect(), ChainSpec::exact(1, 0.5, delta), x)?.value)
}

fn chain(dist: &LatticeDist, spec: ChainSpec, x: i64, terminal: Terminal) -> Result<ChainValue> {
    spec.validate()?;
    if x < 1 {
        return Err(Error::Domain("chain functionals need x >= 1".into()));
    }
    match spec.mode {
        ChainMode::MonteCarlo { samples, seed } => monte_carlo(dist, spec, x, terminal, samples, seed),
        ChainMode::Exact => {
            let d = reach(spec.delta, x);
            if spec.k == 1 {
                let value = match terminal {
                    Terminal::Plain => i1_parts(dist, spec.delta, x).total(),
                    Terminal::Tilde => tilde_i1_forms(dist, spec.delta, x).0,
                };
                let audit = ChainAudit {
                    level_ranges: vec![d],
                    nodes: 2 * d as u64 + 1,
                    ..Default::default()
                };
                return Ok(ChainValue { value, std_error: None, method: EvalMethod::Exact, no_first_step: false, audit });
            }
            if LevelChain::node_count(spec.k, spec.eta, d) > NODE_LIMIT {
                let samples = 200_000;
                return monte_carlo(dist, spec, x, terminal, samples, x as u64);
            }
            let lc = LevelChain::build(dist, spec.k, spec.eta, terminal, d)?;
            Ok(ChainValue {
                value: lc.outer(dist, spec.delta, x),
                std_error: None,
                method: EvalMethod::Exact,
                no_first_step: false,
                audit: lc.audit.clone(),
            })
        }
    }
}

/// `I_1(delta; x)` split by the sign of `y`; each part is summed in increasing `|y|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct I1Parts {
    /// `sum_{y = -1}^{-D} F({x + y}) b_2(y)`; equals `I1+(delta; x)` term by term.
    pub negative: f64,
    pub zero: f64,
    pub positive: f64,
}

impl I1Parts {
    pub fn total(&self) -> f64 {
        self.negative + self.zero + self.positive
    }
}

pub fn i1_parts(dist: &LatticeDist, delta: f64, x: i64) -> I1Parts {
    let model = dist.model();
    let h = dist.h();
    let d = reach(delta, x);
    let negative = (1..=d).map(|z| dist.mass_at(x - z) * model.b(2, z as f64 * h)).sum();
    let positive = (1..=d).map(|y| dist.mass_at(x + y) * model.b(2, y as f64 * h)).sum();
    I1Parts { negative, zero: dist.mass_at(x) * model.b(2, 0.0), positive }
}

/// `~I_1(delta; x)` as `(direct form, integrated-window form)`.
///
/// The direct form sums `F({x + y}) b~_2(delta x, y)`; the window form integrates
/// `F((x - t, x + t]) b_2(t) / (t v 1)` over `t in [0, delta x]` step by step.
pub fn tilde_i1_forms(dist: &LatticeDist, delta: f64, x: i64) -> (f64, f64) {
    let h = dist.h();
    let top = delta * x as f64 * h;
    let phi = RatePrimitive::new(dist.model(), 2, top);
    tilde_i1_forms_with(dist, &phi, delta, x)
}

pub(crate) fn tilde_i1_forms_with(dist: &LatticeDist, phi: &RatePrimitive, delta: f64, x: i64) -> (f64, f64) {
    let h = dist.h();
    let top = delta * x as f64 * h;
    let d = reach(delta, x);
    let phi_top = phi.phi(top);
    let mut direct = dist.mass_at(x) * phi_top;
    for y in 1..=d {
        let w = phi_top - phi.phi(y as f64 * h);
        direct += (dist.mass_at(x - y) + dist.mass_at(x + y)) * w;
    }
    // On t in (m, m + 1] the window (x - t, x + t] holds x + y for -m <= y <= m.
    let mut window = 0.0;
    let mut total = 0.0;
    for m in 0..=d {
        window += if m == 0 { dist.mass_at(x) } else { dist.mass_at(x - m) + dist.mass_at(x + m) };
        let lo = m as f64 * h;
        let hi = ((m + 1) as f64 * h).min(top);
        if hi > lo {
            total += window * (phi.phi(hi) - phi.phi(lo));
        }
    }
    (direct, total)
}

/// Level function `G_1` on `[-Y, Y]`, reusable for every `(delta, x)` with `delta x <= Y`.
#[derive(Debug, Clone)]
pub struct LevelChain {
    pub k: u32,
    pub eta: f64,
    pub terminal: Terminal,
    y_max: i64,
    g1: Vec<f64>,
    pub audit: ChainAudit,
}

#[inline]
fn inner_reach(eta: f64, y: i64) -> i64 {
    (eta * y.unsigned_abs() as f64).floor() as i64
}

impl LevelChain {
    /// Level sizes `Y_1 = Y`, `Y_j = floor(eta Y_{j-1})`, and their node total.
    pub fn node_count(k: u32, eta: f64, y_max: i64) -> u64 {
        Self::ranges(k, eta, y_max).iter().map(|&y| 2 * y as u64 + 1).sum()
    }

    fn ranges(k: u32, eta: f64, y_max: i64) -> Vec<i64> {
        let mut r = vec![y_max];
        for _ in 1..k {
            let last = *r.last().unwrap();
            r.push(inner_reach(eta, last));
        }
        r
    }

    pub fn build(dist: &LatticeDist, k: u32, eta: f64, terminal: Terminal, y_max: i64) -> Result<Self> {
        if k < 2 && terminal == Terminal::Tilde {
            return Err(Error::Unsupported("~I_1 depends on delta x; use tilde_i1_forms".into()));
        }
        let model = dist.model();
        let h = dist.h();
        let ranges = Self::ranges(k, eta, y_max);
        let mut audit = ChainAudit { level_ranges: ranges.clone(), ..Default::default() };
        audit.nodes = ranges.iter().map(|&y| 2 * y as u64 + 1).sum();
        let level = |y_lim: i64, f: &dyn Fn(i64) -> f64| -> Vec<f64> { (-y_lim..=y_lim).map(f).collect() };

        let mut g: Vec<f64>;
        let mut start = k as usize - 1;
        match terminal {
            Terminal::Plain => {
                let yk = ranges[k as usize - 1];
                g = level(yk, &|t| model.b(k + 1, t as f64 * h));
            }
            Terminal::Tilde => {
                let yk = ranges[k as usize - 1];
                let ykm = ranges[k as usize - 2];
                let phi = RatePrimitive::new(model, k + 1, ykm as f64 * h + 1.0);
                let ones = level(yk, &|_| 1.0);
                let phis = level(yk, &|t| phi.phi(t.unsigned_abs() as f64 * h));
                let w1 = windowed_corr(dist, &ones, yk, eta, ykm, &mut audit);
                let w2 = windowed_corr(dist, &phis, yk, eta, ykm, &mut audit);
                g = (-ykm..=ykm)
                    .zip(w1.iter().zip(&w2))
                    .map(|(y, (a, b))| (phi.phi(y.unsigned_abs() as f64 * h) * a - b).max(0.0))
                    .collect();
                start -= 1;
            }
        }
        // g currently holds G_{start + 1} (1-based level) on [-ranges[start], ranges[start]].
        while start > 0 {
            let t_max = ranges[start];
            let y_lim = ranges[start - 1];
            g = windowed_corr(dist, &g, t_max, eta, y_lim, &mut audit);
            start -= 1;
        }
        Ok(Self { k, eta, terminal, y_max, g1: g, audit })
    }

    pub fn y_max(&self) -> i64 {
        self.y_max
    }

    /// `G_1(y)` for `|y| <= Y`.
    pub fn g1(&self, y: i64) -> f64 {
        self.g1[(y + self.y_max) as usize]
    }

    /// `sum_{|y| <= delta x} F({x + y}) G_1(y)`.
    pub fn outer(&self, dist: &LatticeDist, delta: f64, x: i64) -> f64 {
        let d = reach(delta, x).min(self.y_max);
        let mut acc = dist.mass_at(x) * self.g1(0);
        for y in 1..=d {
            acc += dist.mass_at(x - y) * self.g1(-y) + dist.mass_at(x + y) * self.g1(y);
        }
        acc
    }
}

/// Direct work (terms) below which the windowed correlation is summed directly.
const DIRECT_BUDGET: u64 = 200_000_000;

/// `out(y) = sum_{|t| <= floor(eta |y|)} F({t - y}) g(t)` for `|y| <= y_max`,
/// with `g` given on `[-t_max, t_max]`.
pub(crate) fn windowed_corr(
    dist: &LatticeDist,
    g: &[f64],
    t_max: i64,
    eta: f64,
    y_max: i64,
    audit: &mut ChainAudit,
) -> Vec<f64> {
    debug_assert_eq!(g.len() as i64, 2 * t_max + 1);
    debug_assert!(inner_reach(eta, y_max) <= t_max);
    let work: u64 = (-y_max..=y_max).map(|y| 2 * inner_reach(eta, y) as u64 + 1).sum();
    if work <= DIRECT_BUDGET {
        audit.direct_terms += work;
        (-y_max..=y_max).map(|y| direct_cell(dist, g, t_max, y, -inner_reach(eta, y), inner_reach(eta, y))).collect()
    } else {
        blocked_corr(dist, g, t_max, eta, y_max, audit)
    }
}

/// `sum_{t in [t_lo, t_hi]} F({t - y}) g(t)`, pruned to the support of `F`.
#[inline]
fn direct_cell(dist: &LatticeDist, g: &[f64], t_max: i64, y: i64, t_lo: i64, t_hi: i64) -> f64 {
    let lo = t_lo.max(y + dist.x_min());
    let hi = t_hi.min(y + dist.x_max());
    if hi < lo {
        return 0.0;
    }
    let f = &dist.masses()[(lo - y - dist.x_min()) as usize..=(hi - y - dist.x_min()) as usize];
    let gs = &g[(lo + t_max) as usize..=(hi + t_max) as usize];
    f.iter().zip(gs).map(|(a, b)| a * b).sum()
}

/// Blocks of `y` with a common inner window `|t| <= m0` handled by one FFT
/// correlation; the remaining `m0 < |t| <= floor(eta |y|)` terms are summed directly.
fn blocked_corr(
    dist: &LatticeDist,
    g: &[f64],
    t_max: i64,
    eta: f64,
    y_max: i64,
    audit: &mut ChainAudit,
) -> Vec<f64> {
    let block = ((eta * y_max as f64).sqrt() * 24.0).clamp(1024.0, 16384.0) as i64;
    let mut out = vec![0.0; (2 * y_max + 1) as usize];
    let mut y0 = 0i64;
    while y0 <= y_max {
        let y1 = (y0 + block - 1).min(y_max);
        let m0 = inner_reach(eta, y0);
        fill_block(dist, g, t_max, eta, m0, y0, y1, &mut out, y_max, audit);
        let neg_hi = if y0 == 0 { -1 } else { -y0 };
        fill_block(dist, g, t_max, eta, m0, -y1, neg_hi, &mut out, y_max, audit);
        y0 = y1 + 1;
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn fill_block(
    dist: &LatticeDist,
    g: &[f64],
    t_max: i64,
    eta: f64,
    m0: i64,
    ya: i64,
    yb: i64,
    out: &mut [f64],
    y_max: i64,
    audit: &mut ChainAudit,
) {
    if yb < ya {
        return;
    }
    // a[i] = g(-m0 + i); c[j] = F(j + s_min) with s_min = -m0 - yb; out(yb - q) = (rev(a) * c)[2 m0 + q].
    let a: Vec<f64> = g[(t_max - m0) as usize..=(t_max + m0) as usize].iter().rev().copied().collect();
    let s_min = -m0 - yb;
    let c: Vec<f64> = (0..=(2 * m0 + yb - ya)).map(|j| dist.mass_at(j + s_min)).collect();
    let corr = linear_conv(&a, &c);
    audit.fft_blocks += 1;
    for y in ya..=yb {
        let q = (yb - y) as usize;
        let mut v = corr[2 * m0 as usize + q];
        let m = inner_reach(eta, y);
        if m > m0 {
            v += direct_cell(dist, g, t_max, y, m0 + 1, m);
            v += direct_cell(dist, g, t_max, y, -m, -m0 - 1);
            audit.direct_terms += 2 * (m - m0) as u64;
        }
        out[(y + y_max) as usize] = v.max(0.0);
    }
}

/// Window mass and a draw from `F` restricted to `[lo, hi]`.
fn draw(dist: &LatticeDist, lo: i64, hi: i64, u: f64) -> (f64, i64) {
    let mass = dist.window_mass(lo, hi);
    if mass <= 0.0 {
        return (0.0, lo);
    }
    let target = dist.cum_below(lo) + u * mass;
    (mass, dist.locate(target).clamp(lo, hi))
}

/// Sequential sampling of the chain from the windowed kernels; each sample
/// carries the product of window masses, which makes the mean unbiased.
fn monte_carlo(
    dist: &LatticeDist,
    spec: ChainSpec,
    x: i64,
    terminal: Terminal,
    samples: usize,
    seed: u64,
) -> Result<ChainValue> {
    if samples < 2 {
        return Err(Error::Domain("Monte Carlo needs at least two samples".into()));
    }
    let model = dist.model();
    let h = dist.h();
    let k = spec.k;
    let d = reach(spec.delta, x);
    let m1 = dist.window_mass(x - d, x + d);
    let audit = ChainAudit { level_ranges: vec![d], ..Default::default() };
    if m1 == 0.0 {
        return Ok(ChainValue {
            value: 0.0,
            std_error: Some(0.0),
            method: EvalMethod::MonteCarlo,
            no_first_step: true,
            audit,
        });
    }
    let top = spec.delta * x as f64 * h;
    let phi = match terminal {
        Terminal::Tilde => Some(RatePrimitive::new(model, k + 1, top.max(1.0) + 1.0)),
        Terminal::Plain => None,
    };
    let one = |rng: &mut ChaCha8Rng| -> f64 {
        let (_, s) = draw(dist, x - d, x + d, rng.gen());
        let mut weight = m1;
        let mut prev_prev = 0i64;
        let mut prev = s - x;
        for _ in 2..=k {
            let m = inner_reach(spec.eta, prev);
            let (mj, step) = draw(dist, -m - prev, m - prev, rng.gen());
            if mj == 0.0 {
                return 0.0;
            }
            weight *= mj;
            prev_prev = prev;
            prev += step;
        }
        let term = match (&phi, k) {
            (None, _) => model.b(k + 1, prev as f64 * h),
            (Some(p), 1) => p.phi(top) - p.phi(prev.unsigned_abs() as f64 * h),
            (Some(p), _) => {
                p.phi(prev_prev.unsigned_abs() as f64 * h) - p.phi(prev.unsigned_abs() as f64 * h)
            }
        };
        weight * term
    };
    let chunks = samples.div_ceil(MC_CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut s = 0.0;
            let mut s2 = 0.0;
            for _ in 0..len {
                let v = one(&mut rng);
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = samples as f64;
    let mean = s / n;
    let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(ChainValue {
        value: mean,
        std_error: Some((var / n).sqrt()),
        method: EvalMethod::MonteCarlo,
        no_first_step: false,
        audit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist_factory::{build_baseline, build_two_sided_counter, Sided, TailMeta};
    use crate::functionals::plus::i1_plus;
    use crate::rv_kernel::TailModel;

    fn toy() -> LatticeDist {
        // Three atoms.
        let m = TailModel::pure_power(0.3).unwrap();
        let mut masses = vec![0.0; 21];
        masses[10 - 7] = 0.2; // -7
        masses[10 + 3] = 0.5; // 3
        masses[10 + 10] = 0.3; // 10
        LatticeDist::from_masses(1.0, -10, masses, TailMeta::new(m, 1.0, 1.0)).unwrap()
    }

    /// Full enumeration over all chains.
    fn brute(dist: &LatticeDist, k: u32, eta: f64, delta: f64, x: i64, tilde: bool) -> f64 {
        let model = dist.model();
        let d = reach(delta, x);
        let phi = RatePrimitive::new(model, k + 1, 1000.0);
        let support: Vec<(i64, f64)> = dist.support().collect();
        fn rec(
            support: &[(i64, f64)],
            path: &mut Vec<i64>,
            k: u32,
            eta: f64,
            w: f64,
            leaf: &dyn Fn(&[i64]) -> f64,
        ) -> f64 {
            if path.len() == k as usize {
                return w * leaf(path);
            }
            let prev = *path.last().unwrap();
            let mut acc = 0.0;
            for &(s, m) in support {
                let y = prev + s;
                if (y.abs() as f64) <= eta * prev.abs() as f64 {
                    path.push(y);
                    acc += rec(support, path, k, eta, w * m, leaf);
                    path.pop();
                }
            }
            acc
        }
        let leaf = |p: &[i64]| {
            let n = p.len();
            if tilde {
                let a = p[n - 2].unsigned_abs() as f64;
                let b = p[n - 1].unsigned_abs() as f64;
                if b > a {
                    0.0
                } else {
                    phi.phi(a) - phi.phi(b)
                }
            } else {
                model.b(k + 1, p[n - 1] as f64)
            }
        };
        let mut acc = 0.0;
        for y1 in -d..=d {
            let m = dist.mass_at(x + y1);
            if m > 0.0 {
                acc += rec(&support, &mut vec![y1], k, eta, m, &leaf);
            }
        }
        acc
    }

    #[test]
    fn k1_single_atom() {
        let d = toy();
        let m = d.model().clone();
        // x = 13: atom 10 = x - 3 (y = -3), atom 3 = x - 10 (y = -10).
        let v = i_chain(&d, ChainSpec::exact(1, 0.5, 0.5), 13).unwrap().value;
        assert!((v - 0.3 * m.b(2, 3.0)).abs() < 1e-15);
    }

    #[test]
    fn k2_k3_match_enumeration() {
        let d = toy();
        for &(k, eta, delta, x) in &[(2, 0.5, 1.0, 12), (2, 0.9, 1.0, 20), (3, 0.95, 1.0, 15), (2, 0.7, 0.6, 17)] {
            for tilde in [false, true] {
                let spec = ChainSpec::exact(k, eta, delta);
                let v = if tilde { tilde_i_chain(&d, spec, x) } else { i_chain(&d, spec, x) }.unwrap().value;
                let b = brute(&d, k, eta, delta, x, tilde);
                assert!((v - b).abs() <= 1e-13 * b.abs().max(1e-300), "k={k} tilde={tilde}: {v} vs {b}");
            }
        }
    }

    #[test]
    fn blocked_matches_direct_correlation() {
        let d = build_baseline(&TailModel::pure_power(0.3).unwrap(), Sided::TwoSided { p: 0.5, q: 0.5 }, 1 << 14)
            .unwrap();
        let t_max = 6000;
        let g: Vec<f64> = (-t_max..=t_max).map(|t: i64| 1.0 / (1.0 + (t as f64).abs()).sqrt()).collect();
        let mut audit = ChainAudit::default();
        let fast = blocked_corr(&d, &g, t_max, 0.5, 12000, &mut audit);
        assert!(audit.fft_blocks > 0);
        for y in (-12000i64..=12000).step_by(37) {
            let m = inner_reach(0.5, y);
            let slow = direct_cell(&d, &g, t_max, y, -m, m);
            let got = fast[(y + 12000) as usize];
            assert!((got - slow).abs() <= 1e-12 * slow.max(1e-20), "y={y}: {got} vs {slow}");
        }
    }

    #[test]
    fn k1_negative_part_is_i1_plus() {
        let d = build_baseline(&TailModel::pure_power(0.3).unwrap(), Sided::Positive, 1 << 14).unwrap();
        for (delta, x) in [(0.1, 5000), (0.4, 12000), (0.25, 999)] {
            assert_eq!(i1_parts(&d, delta, x).negative, i1_plus(&d, delta, x));
        }
    }

    #[test]
    fn tilde_forms_agree() {
        let d = build_two_sided_counter(0.3, 1 << 14).unwrap();
        for (delta, x) in [(0.1, 4000), (0.4, 10000), (0.05, 16000)] {
            let (a, b) = tilde_i1_forms(&d, delta, x);
            assert!((a - b).abs() <= 1e-12 * a, "{a} vs {b}");
        }
    }

    #[test]
    fn tilde_k1_vanishes_outside_range() {
        let d = toy();
        // x = 20: the only atoms within |y| <= 2 of x are none, so everything is outside.
        let v = tilde_i_chain(&d, ChainSpec::exact(1, 0.5, 0.1), 20).unwrap().value;
        assert_eq!(v, 0.0);
    }

    #[test]
    fn monte_carlo_within_four_sigma() {
        let d = build_baseline(&TailModel::pure_power(0.3).unwrap(), Sided::TwoSided { p: 0.5, q: 0.5 }, 1 << 10)
            .unwrap();
        for (k, tilde) in [(1, false), (2, false), (2, true), (3, false)] {
            let spec = ChainSpec::exact(k, 0.5, 0.4);
            let exact = if tilde { tilde_i_chain(&d, spec, 600) } else { i_chain(&d, spec, 600) }.unwrap().value;
            let mc_spec = ChainSpec { mode: ChainMode::MonteCarlo { samples: 200_000, seed: 5 }, ..spec };
            let mc = if tilde { tilde_i_chain(&d, mc_spec, 600) } else { i_chain(&d, mc_spec, 600) }.unwrap();
            let se = mc.std_error.unwrap();
            assert!((mc.value - exact).abs() <= 4.0 * se, "k={k}: {} vs {exact} (se {se})", mc.value);
        }
    }

    #[test]
    fn monte_carlo_is_reproducible_and_flags_empty_start() {
        let d = toy();
        let spec = ChainSpec { mode: ChainMode::MonteCarlo { samples: 10_000, seed: 9 }, ..ChainSpec::exact(2, 0.9, 1.0) };
        let a = i_chain(&d, spec, 20).unwrap();
        let b = i_chain(&d, spec, 20).unwrap();
        assert_eq!(a, b);
        let far = ChainSpec { delta: 0.01, ..spec };
        let e = i_chain(&d, far, 1000).unwrap();
        assert!(e.no_first_step && e.value == 0.0);
    }

    #[test]
    fn exact_rejects_deep_chains() {
        let d = toy();
        assert!(matches!(i_chain(&d, ChainSpec::exact(5, 0.5, 0.5), 10), Err(Error::Unsupported(_))));
    }
}
