//! Strictly stable laws with `P(Y > y) ~ p y^-alpha`, `P(Y < -y) ~ q y^-alpha`, `p + q = 1`.
//!
//! These are the limits of `S_n / a_n` for steps with tails `p / A(x)` and
//! `q / A(x)`. The one-sided law (`rho = 1`) has Laplace transform
//! `exp(-Gamma(1 - alpha) lambda^alpha)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma, ln_gamma};

use crate::conv_engine::{walk_marginal, Window};
use crate::dist_factory::LatticeDist;
use crate::error::{Error, Result};
use crate::quad;

/// Samples per independent RNG stream.
const CHUNK: usize = 1 << 16;

/// Skewness `beta` of the law with positivity parameter `rho`.
pub fn skewness(alpha: f64, rho: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("stable index must lie in (0, 1), got {alpha}")));
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::Domain(format!("positivity parameter must lie in [0, 1], got {rho}")));
    }
    let t = (PI * alpha / 2.0).tan();
    Ok(((PI * alpha * (rho - 0.5)).tan() / t).clamp(-1.0, 1.0))
}

/// Positivity parameter of the limit for tail weights `p` and `q`.
pub fn positivity(alpha: f64, p: f64, q: f64) -> f64 {
    let beta = (p - q) / (p + q);
    0.5 + (beta * (PI * alpha / 2.0).tan()).atan() / (PI * alpha)
}

/// `(1 - alpha) / (Gamma(2 - alpha) cos(pi alpha / 2))`: tail constant of the unit-scale law.
fn tail_constant(alpha: f64) -> f64 {
    (1.0 - alpha) / (gamma(2.0 - alpha) * (PI * alpha / 2.0).cos())
}

/// I.i.d. draws by the Chambers-Mallows-Stuck transformation.
pub fn stable_sample(alpha: f64, rho: f64, count: usize, seed: u64) -> Result<Vec<f64>> {
    let beta = skewness(alpha, rho)?;
    let t = (PI * alpha / 2.0).tan();
    let b = (beta * t).atan() / alpha;
    let s = (1.0 + beta * beta * t * t).powf(1.0 / (2.0 * alpha));
    let sigma = (1.0 / tail_constant(alpha)).powf(1.0 / alpha);
    let uni = Uniform::new(-PI / 2.0, PI / 2.0);
    let chunks = count.div_ceil(CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(count - c * CHUNK);
            (0..len)
                .map(|_| {
                    let v: f64 = rng.sample(uni);
                    let w: f64 = rng.sample(Exp1);
                    let x = s * (alpha * (v + b)).sin() / v.cos().powf(1.0 / alpha)
                        * ((v - alpha * (v + b)).cos() / w).powf((1.0 - alpha) / alpha);
                    sigma * x
                })
                .collect()
        })
        .collect();
    Ok(parts.concat())
}

/// One-sided law at `alpha = 1/2`: `P(Y <= y) = erfc(sqrt(pi) / (2 sqrt y))`.
pub fn half_stable_cdf(y: f64) -> f64 {
    if y <= 0.0 {
        0.0
    } else {
        erfc(PI.sqrt() / (2.0 * y.sqrt()))
    }
}

/// One-sided density at `alpha = 1/2`: `y^{-3/2} exp(-pi / (4y)) / 2`.
pub fn half_stable_density(y: f64) -> f64 {
    if y <= 0.0 {
        0.0
    } else {
        0.5 * y.powf(-1.5) * (-PI / (4.0 * y)).exp()
    }
}

/// Largest term over the sum magnitude tolerated before the series is abandoned.
const SERIES_CANCEL: f64 = 1e4;

/// Density of the law with Laplace transform `exp(-lambda^alpha)` by its
/// convergent series in `z^-alpha`; `None` where cancellation would spoil it.
pub fn unit_density_series(alpha: f64, z: f64) -> Option<f64> {
    if z <= 0.0 {
        return Some(0.0);
    }
    let lz = z.ln();
    let mut sum = 0.0;
    let mut big: f64 = 0.0;
    for k in 1..=600u32 {
        let kf = k as f64;
        let mag = (ln_gamma(kf * alpha + 1.0) - ln_gamma(kf + 1.0) - (kf * alpha + 1.0) * lz).exp();
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let term = sign * mag * (PI * kf * alpha).sin();
        sum += term;
        big = big.max(mag);
        if k > 4 && mag <= 1e-17 * sum.abs() {
            return (big <= SERIES_CANCEL * sum.abs()).then_some(sum / PI);
        }
        if !mag.is_finite() {
            return None;
        }
    }
    None
}

/// Same density by the Zolotarev integral over `(0, pi)`.
pub fn unit_density_integral(alpha: f64, z: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    let e = 1.0 / (1.0 - alpha);
    let c = z.powf(-alpha * e);
    let kernel = |u: f64| {
        let k = ((alpha * u).sin() / u.sin()).powf(e) * ((1.0 - alpha) * u).sin() / (alpha * u).sin();
        let arg = c * k;
        if arg > 745.0 || !k.is_finite() {
            0.0
        } else {
            k * (-arg).exp()
        }
    };
    let eps = 1e-12;
    let integral = quad::adaptive_simpson(&kernel, eps, PI - eps, 1e-12);
    alpha * e * z.powf(-e) * integral / PI
}

/// Density of the one-sided law with `P(Y > y) ~ p y^-alpha`.
pub fn one_sided_density(alpha: f64, p: f64, y: f64) -> f64 {
    let s = (p * gamma(1.0 - alpha)).powf(1.0 / alpha);
    let z = y / s;
    unit_density_series(alpha, z).unwrap_or_else(|| unit_density_integral(alpha, z)) / s
}

/// Empirical scale check: median of the exact `S_n / a_n` against the median of the sampled limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleCalibration {
    pub n: usize,
    pub a_n: f64,
    pub rho: f64,
    pub walk_median: f64,
    pub stable_median: f64,
    /// `walk_median / stable_median`; near 1 when `a_n` matches the limit's scale.
    pub factor: f64,
}

pub fn calibrate_scale(dist: &LatticeDist, n: usize, samples: usize, seed: u64) -> Result<ScaleCalibration> {
    let meta = dist.tail_meta();
    let model = dist.model();
    let alpha = model.alpha();
    let a_n = model.a_inv(n as f64);
    let reach = (64.0 * a_n / dist.h()).ceil() as i64;
    let lo = if dist.is_positive() { 0 } else { -reach };
    let p = walk_marginal(dist, n, None, Some(Window::new(lo, reach)))?;
    let mut acc = dist.trunc_left();
    let mut walk_median = f64::NAN;
    for (i, v) in p.values().iter().enumerate() {
        acc += v;
        if acc >= 0.5 {
            walk_median = (p.offset() + i as i64) as f64 * dist.h() / a_n;
            break;
        }
    }
    let rho = positivity(alpha, meta.p, meta.q);
    let mut ys = stable_sample(alpha, rho, samples, seed)?;
    ys.sort_by(|a, b| a.total_cmp(b));
    let stable_median = ys[ys.len() / 2] * (meta.p + meta.q).powf(1.0 / alpha);
    Ok(ScaleCalibration { n, a_n, rho, walk_median, stable_median, factor: walk_median / stable_median })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_distance, mean_stderr};

    #[test]
    fn series_matches_closed_form_at_half() {
        let s = PI; // (Gamma(1/2))^2
        for i in 0..=195 {
            let y = 0.5 + 0.1 * i as f64;
            let f = unit_density_series(0.5, y / s).expect("series") / s;
            let g = half_stable_density(y);
            assert!((f / g - 1.0).abs() <= 1e-8, "y={y}: {f} vs {g}");
        }
    }

    #[test]
    fn integral_matches_closed_form_at_half() {
        for &y in &[0.05, 0.1, 0.3, 1.0, 3.0, 10.0] {
            let f = unit_density_integral(0.5, y / PI) / PI;
            let g = half_stable_density(y);
            assert!((f / g - 1.0).abs() <= 1e-8, "y={y}: {f} vs {g}");
        }
    }

    #[test]
    fn switched_density_integrates_to_one() {
        // In `v = ln y`; the mass beyond `e^40` is about `e^-12`.
        let f = |v: f64| {
            let y = v.exp();
            one_sided_density(0.3, 1.0, y) * y
        };
        let total: f64 = (0..100).map(|i| quad::gauss_legendre(f, -10.0 + 0.5 * i as f64, -9.5 + 0.5 * i as f64)).sum();
        assert!((total - 1.0).abs() < 1e-3, "{total}");
    }

    #[test]
    fn half_stable_samples_match_cdf() {
        let ys = stable_sample(0.5, 1.0, 100_000, 1).unwrap();
        assert!(ks_distance(&ys, half_stable_cdf) <= 0.01);
    }

    #[test]
    fn positivity_is_respected() {
        let n = 100_000;
        for (alpha, rho) in [(0.6, 0.7), (0.3, 0.2), (0.5, 1.0)] {
            let ys = stable_sample(alpha, rho, n, 3).unwrap();
            let pos = ys.iter().filter(|&&y| y > 0.0).count() as f64 / n as f64;
            let se = (rho * (1.0 - rho) / n as f64).sqrt().max(1.0 / n as f64);
            assert!((pos - rho).abs() <= 3.0 * se, "alpha={alpha}: {pos} vs {rho}");
        }
    }

    #[test]
    fn renewal_constant_by_sampling() {
        let ys = stable_sample(0.3, 1.0, 200_000, 7).unwrap();
        let vals: Vec<f64> = ys.iter().map(|y| 0.3 * y.powf(-0.3)).collect();
        let (m, se) = mean_stderr(&vals);
        let target = (0.3 * PI).sin() / PI;
        assert!((m - target).abs() <= 3.0 * se, "{m} vs {target} (se {se})");
    }

    #[test]
    fn inadmissible_parameters() {
        assert!(stable_sample(1.2, 0.5, 10, 0).is_err());
        assert!(stable_sample(0.5, 1.5, 10, 0).is_err());
    }

    #[test]
    fn reproducible() {
        assert_eq!(stable_sample(0.4, 0.6, 1000, 9).unwrap(), stable_sample(0.4, 0.6, 1000, 9).unwrap());
    }
}
