//! Asymptotic-negligibility profiles `R(delta, x) = J(delta; x) / b_1(x)`.
//!
//! A finite grid cannot decide a double limit; the verdict is a heuristic
//! read of the trend and is labelled as such in every export.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chain::{i1_parts, tilde_i1_forms_with, ChainMode, ChainSpec, LevelChain, Terminal, NODE_LIMIT};
use super::plus::{i1_plus_deltas, reach, tilde_i1_plus_with, TildeForm};
use crate::conv_engine::t_table;
use crate::dist_factory::LatticeDist;
use crate::error::{Error, Result};
use crate::rv_kernel::RatePrimitive;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "name")]
pub enum Functional {
    I1Plus,
    TildeI1Plus,
    I1,
    TildeI1,
    TildeI1Star,
    Ik { k: u32, eta: f64 },
    TildeIk { k: u32, eta: f64 },
    /// `T_l(delta; x)`, the partial renewal sum over `n <= A(delta x)` weighted by `n^l`.
    T { ell: u32 },
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Functional::I1Plus => write!(f, "I1+"),
            Functional::TildeI1Plus => write!(f, "~I1+"),
            Functional::I1 => write!(f, "I1"),
            Functional::TildeI1 => write!(f, "~I1"),
            Functional::TildeI1Star => write!(f, "~I1*"),
            Functional::Ik { k, eta } => write!(f, "I{k}(eta={eta})"),
            Functional::TildeIk { k, eta } => write!(f, "~I{k}(eta={eta})"),
            Functional::T { ell } => write!(f, "T{ell}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    LooksAn,
    LooksNotAn,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::LooksAn => "looks_an",
            Verdict::LooksNotAn => "looks_not_an",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnOptions {
    /// `an_score(delta_min)` must be below this.
    pub threshold: f64,
    /// `an_score(delta_min) / an_score(delta_max)` must be below this.
    pub drop: f64,
    /// Number of trailing `x` points that must strictly increase for `looks_not_an`.
    pub trend_points: usize,
    /// Chain evaluation mode for `k >= 2`; exact falls back to Monte Carlo beyond the node limit.
    pub chain_mode: ChainMode,
    /// Seed for the Monte Carlo fallback of exact mode.
    pub seed: u64,
}

impl Default for AnOptions {
    fn default() -> Self {
        Self { threshold: 1.0, drop: 0.1, trend_points: 4, chain_mode: ChainMode::Exact, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnProfile {
    pub functional: Functional,
    /// Decreasing.
    pub delta_grid: Vec<f64>,
    /// Increasing.
    pub x_grid: Vec<i64>,
    /// `values[d][i] = R(delta_d, x_i)`.
    pub values: Vec<Vec<f64>>,
    /// Standard errors of `values` when any cell was sampled.
    pub std_errors: Option<Vec<Vec<f64>>>,
    /// Max of `R(delta, .)` over the last quarter of `x_grid`.
    pub an_score: Vec<f64>,
    pub verdict: Verdict,
}

/// `0.4 * 2^-j` for `j = 0..=8`.
pub fn default_delta_grid() -> Vec<f64> {
    (0..=8).map(|j| 0.4 * 0.5f64.powi(j)).collect()
}

/// `2^lo, 2^(lo+1), ..., 2^hi`.
pub fn dyadic_grid(lo: u32, hi: u32) -> Vec<i64> {
    (lo..=hi).map(|e| 1i64 << e).collect()
}

pub fn an_profile(
    dist: &LatticeDist,
    functional: Functional,
    deltas: &[f64],
    xs: &[i64],
    opts: AnOptions,
) -> Result<AnProfile> {
    if deltas.is_empty() || xs.is_empty() {
        return Err(Error::Domain("profile grids must be nonempty".into()));
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) || deltas.iter().any(|&d| !(d > 0.0 && d <= 1.0)) {
        return Err(Error::Domain("delta grid must be strictly decreasing in (0, 1]".into()));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) || xs[0] < 1 {
        return Err(Error::Domain("x grid must be strictly increasing and positive".into()));
    }
    if matches!(functional, Functional::I1Plus | Functional::TildeI1Plus) && !dist.is_positive() {
        return Err(Error::Domain(format!("{functional} needs a law on the positive lattice")));
    }
    let (raw, se) = raw_values(dist, functional, deltas, xs, opts)?;
    let model = dist.model();
    let h = dist.h();
    let norm: Vec<f64> = xs.iter().map(|&x| model.b(1, x as f64 * h)).collect();
    let values: Vec<Vec<f64>> =
        raw.iter().map(|row| row.iter().zip(&norm).map(|(v, b)| v / b).collect()).collect();
    let std_errors =
        se.map(|rows| rows.iter().map(|row| row.iter().zip(&norm).map(|(v, b)| v / b).collect()).collect());
    let an_score = an_scores(&values);
    let verdict = verdict(&values, &an_score, opts);
    Ok(AnProfile {
        functional,
        delta_grid: deltas.to_vec(),
        x_grid: xs.to_vec(),
        values,
        std_errors,
        an_score,
        verdict,
    })
}

type Matrix = Vec<Vec<f64>>;

/// Samples per cell when exact chains exceed the node limit.
const FALLBACK_SAMPLES: usize = 200_000;

fn raw_values(
    dist: &LatticeDist,
    functional: Functional,
    deltas: &[f64],
    xs: &[i64],
    opts: AnOptions,
) -> Result<(Matrix, Option<Matrix>)> {
    let h = dist.h();
    let top = deltas[0] * *xs.last().unwrap() as f64 * h;
    let by_x = |f: &(dyn Fn(f64, i64) -> f64 + Sync)| -> Matrix {
        let cols: Vec<Vec<f64>> = xs.par_iter().map(|&x| deltas.iter().map(|&d| f(d, x)).collect()).collect();
        transpose(&cols, deltas.len())
    };
    let values = match functional {
        Functional::I1Plus => {
            let cols: Vec<Vec<f64>> = xs.par_iter().map(|&x| i1_plus_deltas(dist, deltas, x)).collect();
            transpose(&cols, deltas.len())
        }
        Functional::TildeI1Plus => {
            let phi = RatePrimitive::new(dist.model(), 2, top + 1.0);
            by_x(&|d, x| tilde_i1_plus_with(dist, &phi, d, x, TildeForm::Density))
        }
        Functional::I1 => by_x(&|d, x| i1_parts(dist, d, x).total()),
        Functional::TildeI1 => {
            let phi = RatePrimitive::new(dist.model(), 2, top + 1.0);
            by_x(&|d, x| tilde_i1_forms_with(dist, &phi, d, x).0)
        }
        Functional::TildeI1Star => {
            let refl = dist.reflect();
            let phi = RatePrimitive::new(dist.model(), 2, top + 1.0);
            by_x(&|d, x| tilde_i1_forms_with(&refl, &phi, d, x).0)
        }
        Functional::T { ell } => t_table(dist, &[ell], deltas, xs)?.values.remove(0),
        Functional::Ik { k, eta } | Functional::TildeIk { k, eta } => {
            let terminal = if matches!(functional, Functional::Ik { .. }) { Terminal::Plain } else { Terminal::Tilde };
            if k == 1 {
                let f = if terminal == Terminal::Plain { Functional::I1 } else { Functional::TildeI1 };
                return raw_values(dist, f, deltas, xs, opts);
            }
            let y_max = reach(deltas[0], *xs.last().unwrap());
            let exact = matches!(opts.chain_mode, ChainMode::Exact)
                && k <= super::chain::EXACT_MAX_K
                && LevelChain::node_count(k, eta, y_max) <= NODE_LIMIT;
            if exact {
                let lc = LevelChain::build(dist, k, eta, terminal, y_max)?;
                by_x(&|d, x| lc.outer(dist, d, x))
            } else {
                return sampled(dist, k, eta, terminal, deltas, xs, opts);
            }
        }
    };
    Ok((values, None))
}

/// Per-cell Monte Carlo with a stream keyed by the cell index.
fn sampled(
    dist: &LatticeDist,
    k: u32,
    eta: f64,
    terminal: Terminal,
    deltas: &[f64],
    xs: &[i64],
    opts: AnOptions,
) -> Result<(Matrix, Option<Matrix>)> {
    let (samples, seed) = match opts.chain_mode {
        ChainMode::MonteCarlo { samples, seed } => (samples, seed),
        ChainMode::Exact => (FALLBACK_SAMPLES, opts.seed),
    };
    let cells: Vec<(usize, usize)> = (0..deltas.len()).flat_map(|d| (0..xs.len()).map(move |i| (d, i))).collect();
    let out: Vec<(f64, f64)> = cells
        .par_iter()
        .enumerate()
        .map(|(c, &(d, i))| {
            let spec = ChainSpec {
                k,
                eta,
                delta: deltas[d],
                mode: ChainMode::MonteCarlo { samples, seed: seed.wrapping_add((c as u64) << 32) },
            };
            let v = match terminal {
                Terminal::Plain => super::chain::i_chain(dist, spec, xs[i]),
                Terminal::Tilde => super::chain::tilde_i_chain(dist, spec, xs[i]),
            }?;
            Ok((v.value, v.std_error.unwrap_or(0.0)))
        })
        .collect::<Result<_>>()?;
    let nx = xs.len();
    let values = (0..deltas.len()).map(|d| (0..nx).map(|i| out[d * nx + i].0).collect()).collect();
    let errs = (0..deltas.len()).map(|d| (0..nx).map(|i| out[d * nx + i].1).collect()).collect();
    Ok((values, Some(errs)))
}

fn transpose(cols: &[Vec<f64>], rows: usize) -> Matrix {
    (0..rows).map(|d| cols.iter().map(|c| c[d]).collect()).collect()
}

fn an_scores(values: &Matrix) -> Vec<f64> {
    values
        .iter()
        .map(|row| {
            let q = row.len().div_ceil(4);
            row[row.len() - q..].iter().copied().fold(0.0, f64::max)
        })
        .collect()
}

fn verdict(values: &Matrix, score: &[f64], opts: AnOptions) -> Verdict {
    let s_max = score[0];
    let s_min = *score.last().unwrap();
    let monotone = score.windows(2).all(|w| w[1] <= w[0]);
    if monotone && s_min < opts.drop * s_max && s_min < opts.threshold {
        return Verdict::LooksAn;
    }
    let row = values.last().unwrap();
    let t = opts.trend_points.max(2);
    if row.len() >= t && row[row.len() - t..].windows(2).all(|w| w[1] > w[0]) {
        return Verdict::LooksNotAn;
    }
    Verdict::Inconclusive
}

impl AnProfile {
    /// Long-format CSV with columns `delta,x,r` (and `std_error` when sampled).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        if self.std_errors.is_some() {
            wr.write_record(["delta", "x", "r", "std_error"])?;
        } else {
            wr.write_record(["delta", "x", "r"])?;
        }
        for (d, &delta) in self.delta_grid.iter().enumerate() {
            for (i, &x) in self.x_grid.iter().enumerate() {
                let mut rec = vec![format!("{delta:e}"), x.to_string(), format!("{:e}", self.values[d][i])];
                if let Some(se) = &self.std_errors {
                    rec.push(format!("{:e}", se[d][i]));
                }
                wr.write_record(&rec)?;
            }
        }
        wr.flush()?;
        Ok(())
    }

    /// Plain-text summary of scores and the verdict.
    pub fn verdict_block(&self) -> String {
        let mut s = format!("functional = {}\nverdict = {} (finite-grid heuristic)\n", self.functional, self.verdict);
        for (d, sc) in self.delta_grid.iter().zip(&self.an_score) {
            s.push_str(&format!("an_score[delta={d:e}] = {sc:e}\n"));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_rule() {
        let o = AnOptions::default();
        let an = vec![vec![2.0, 2.0, 2.0, 2.0], vec![0.1, 0.1, 0.1, 0.1]];
        assert_eq!(verdict(&an, &an_scores(&an), o), Verdict::LooksAn);
        let up = vec![vec![1.0, 2.0, 3.0, 4.0], vec![0.5, 0.6, 0.7, 0.8]];
        assert_eq!(verdict(&up, &an_scores(&up), o), Verdict::LooksNotAn);
        let flat = vec![vec![1.0, 1.0, 1.0, 1.0], vec![0.5, 0.5, 0.5, 0.5]];
        assert_eq!(verdict(&flat, &an_scores(&flat), o), Verdict::Inconclusive);
    }

    #[test]
    fn top_quartile_score() {
        let v = vec![vec![9.0, 1.0, 2.0, 3.0, 0.5]];
        assert_eq!(an_scores(&v), vec![3.0]);
    }

    #[test]
    fn grids() {
        let d = default_delta_grid();
        assert_eq!(d.len(), 9);
        assert_eq!(d[0], 0.4);
        assert_eq!(dyadic_grid(3, 5), vec![8, 16, 32]);
    }
}
