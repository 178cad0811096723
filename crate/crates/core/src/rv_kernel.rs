//! Regular-variation toolkit.
//!
//! The tail scale `A` is regularly varying with index `alpha`, normalised so
//! that `A(0) = 1/2` and `A(1) = 1`. On `[0, 1]` it is the straight line
//! between those anchors; above 1 it is `x^alpha` times a slowly varying
//! factor chosen from a small family. Everything else in the crate (norming
//! sequence `a_n`, rates `b_k`, integrated rates `b~_k`) is derived from it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

/// Slowly varying correction `L(x) = A(x) / x^alpha` on `[1, inf)`.
#[derive(Debug, Clone, PartialEq)]
pub enum SlowVariation {
    /// `A(x) = x^alpha`.
    Constant,
    /// `A(x) = x^alpha * (ln(e + x) / ln(e + 1))^beta`.
    LogPower { beta: f64 },
    /// Knots `(x_i, A(x_i))` starting at `(1, 1)`, interpolated linearly in
    /// log-log coordinates and continued with slope `alpha` past the last knot.
    Tabulated { knots: Vec<(f64, f64)> },
}

/// Regularly varying tail scale `A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TailModelSpec", into = "TailModelSpec")]
pub struct TailModel {
    alpha: f64,
    slow: SlowVariation,
}

/// Structured-text form of a [`TailModel`]: `{alpha, family, beta?, table?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailModelSpec {
    pub alpha: f64,
    pub family: FamilyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Constant,
    LogPower,
    Tabulated,
}

impl TryFrom<TailModelSpec> for TailModel {
    type Error = Error;

    fn try_from(raw: TailModelSpec) -> Result<Self> {
        let slow = match raw.family {
            FamilyKind::Constant => {
                if raw.beta.is_some() || raw.table.is_some() {
                    return Err(Error::Config("constant family takes no beta/table".into()));
                }
                SlowVariation::Constant
            }
            FamilyKind::LogPower => {
                if raw.table.is_some() {
                    return Err(Error::Config("log_power family takes no table".into()));
                }
                let beta = raw
                    .beta
                    .ok_or_else(|| Error::Config("log_power family requires beta".into()))?;
                SlowVariation::LogPower { beta }
            }
            FamilyKind::Tabulated => {
                if raw.beta.is_some() {
                    return Err(Error::Config("tabulated family takes no beta".into()));
                }
                let table = raw
                    .table
                    .ok_or_else(|| Error::Config("tabulated family requires table".into()))?;
                SlowVariation::Tabulated {
                    knots: table.into_iter().map(|[x, a]| (x, a)).collect(),
                }
            }
        };
        TailModel::new(raw.alpha, slow)
    }
}

impl From<TailModel> for TailModelSpec {
    fn from(m: TailModel) -> Self {
        match m.slow {
            SlowVariation::Constant => TailModelSpec {
                alpha: m.alpha,
                family: FamilyKind::Constant,
                beta: None,
                table: None,
            },
            SlowVariation::LogPower { beta } => TailModelSpec {
                alpha: m.alpha,
                family: FamilyKind::LogPower,
                beta: Some(beta),
                table: None,
            },
            SlowVariation::Tabulated { knots } => TailModelSpec {
                alpha: m.alpha,
                family: FamilyKind::Tabulated,
                beta: None,
                table: Some(knots.into_iter().map(|(x, a)| [x, a]).collect()),
            },
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    let ok = alpha.is_finite() && alpha > 0.0 && alpha < 2.0 && alpha != 1.0;
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha = {alpha} must lie in (0,1) or (1,2)")))
    }
}

impl TailModel {
    pub fn new(alpha: f64, slow: SlowVariation) -> Result<Self> {
        check_alpha(alpha)?;
        match &slow {
            SlowVariation::Constant => {}
            SlowVariation::LogPower { beta } => {
                // x^alpha (ln(e+x))^beta is increasing on [1, inf) whenever beta >= -alpha.
                if !beta.is_finite() || *beta < -alpha {
                    return Err(Error::Domain(format!(
                        "log-power exponent beta = {beta} must be >= -alpha"
                    )));
                }
            }
            SlowVariation::Tabulated { knots } => {
                if knots.len() < 2 || knots[0] != (1.0, 1.0) {
                    return Err(Error::Domain(
                        "tabulated A needs at least two knots starting at (1, 1)".into(),
                    ));
                }
                if knots.windows(2).any(|w| !(w[1].0 > w[0].0 && w[1].1 > w[0].1)) {
                    return Err(Error::Domain(
                        "tabulated knots must be strictly increasing in x and A".into(),
                    ));
                }
            }
        }
        Ok(Self { alpha, slow })
    }

    /// `A(x) = x^alpha`.
    pub fn pure_power(alpha: f64) -> Result<Self> {
        Self::new(alpha, SlowVariation::Constant)
    }

    pub fn log_power(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(alpha, SlowVariation::LogPower { beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn slow_variation(&self) -> &SlowVariation {
        &self.slow
    }

    pub fn is_pure_power(&self) -> bool {
        matches!(self.slow, SlowVariation::Constant)
    }

    /// `A(x)` for `x >= 0`, without the domain check.
    #[inline]
    pub fn a(&self, x: f64) -> f64 {
        if x <= 1.0 {
            return 0.5 + 0.5 * x.max(0.0);
        }
        match &self.slow {
            SlowVariation::Constant => x.powf(self.alpha),
            SlowVariation::LogPower { beta } => {
                let e = std::f64::consts::E;
                x.powf(self.alpha) * ((e + x).ln() / (e + 1.0).ln()).powf(*beta)
            }
            SlowVariation::Tabulated { knots } => {
                let lx = x.ln();
                let last = knots[knots.len() - 1];
                if x >= last.0 {
                    return last.1 * (x / last.0).powf(self.alpha);
                }
                let i = knots.partition_point(|k| k.0 <= x);
                let (x0, a0) = knots[i - 1];
                let (x1, a1) = knots[i];
                let t = (lx - x0.ln()) / (x1.ln() - x0.ln());
                (a0.ln() + t * (a1.ln() - a0.ln())).exp()
            }
        }
    }

    /// `A^{-1}(u)` for `u >= 1/2`, without the domain check.
    pub fn a_inv(&self, u: f64) -> f64 {
        if u <= 1.0 {
            return (2.0 * u - 1.0).max(0.0);
        }
        if let SlowVariation::Constant = self.slow {
            return u.powf(1.0 / self.alpha);
        }
        // Bisection on ln x; A is strictly increasing and continuous.
        let mut lo = 0.0f64;
        let mut hi = u.powf(1.0 / self.alpha).ln().max(1.0);
        while self.a(hi.exp()) < u {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if self.a(mid.exp()) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (xl, xh) = (lo.exp(), hi.exp());
        if (self.a(xl) - u).abs() <= (self.a(xh) - u).abs() {
            xl
        } else {
            xh
        }
    }

    /// Rate `b_k(x) = A(|x|)^k / (|x| v 1)`.
    #[inline]
    pub fn b(&self, k: u32, x: f64) -> f64 {
        let ax = x.abs();
        self.a(ax).powi(k as i32) / ax.max(1.0)
    }
}

/// `A(x)`; errors on negative `x`.
pub fn eval_a(model: &TailModel, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("A is defined on [0, inf), got x = {x}")));
    }
    Ok(model.a(x))
}

/// Norming value `a_u = A^{-1}(u)`; errors when `u < 1/2`.
pub fn inverse_a(model: &TailModel, u: f64) -> Result<f64> {
    if !(u >= 0.5) {
        return Err(Error::Domain(format!("A^-1 is defined on [1/2, inf), got u = {u}")));
    }
    Ok(model.a_inv(u))
}

pub fn rate_b(model: &TailModel, k: u32, x: f64) -> f64 {
    model.b(k, x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BtildeMethod {
    Integral,
    Sum,
}

/// Integrated rate `b~_k(z, x) = int_{|x|}^{|z|} b_k(t) / (t v 1) dt` (zero when `|x| > |z|`),
/// or its discrete comparison form `sum_{A(|x|) <= n <= A(|z|)} n^{k-1} / a_n`.
pub fn rate_btilde(model: &TailModel, k: u32, z: f64, x: f64, method: BtildeMethod) -> f64 {
    let (lo, hi) = (x.abs(), z.abs());
    if lo >= hi {
        return 0.0;
    }
    match method {
        BtildeMethod::Integral => btilde_integral(model, k, lo, hi),
        BtildeMethod::Sum => {
            let n_lo = model.a(lo).ceil().max(1.0) as u64;
            let n_hi = model.a(hi).floor() as u64;
            (n_lo..=n_hi)
                .map(|n| (n as f64).powi(k as i32 - 1) / model.a_inv(n as f64))
                .sum()
        }
    }
}

/// `int_0^s A(t)^k dt` for `s in [0, 1]` (the linear piece of `A`).
fn unit_piece(k: u32, s: f64) -> f64 {
    let p = (k + 1) as f64;
    2.0 / p * ((0.5 + 0.5 * s).powf(p) - 0.5f64.powf(p))
}

/// `int_lo^hi t^(e-1) dt` evaluated without cancellation near `e = 0`.
fn power_integral(e: f64, lo: f64, hi: f64) -> f64 {
    let r = (hi / lo).ln();
    if e.abs() < 1e-14 {
        return r;
    }
    lo.powf(e) * (e * r).exp_m1() / e
}

fn btilde_integral(model: &TailModel, k: u32, lo: f64, hi: f64) -> f64 {
    let mut acc = 0.0;
    if lo < 1.0 {
        acc += unit_piece(k, hi.min(1.0)) - unit_piece(k, lo);
    }
    let (l1, h1) = (lo.max(1.0), hi);
    if h1 > l1 {
        if model.is_pure_power() {
            acc += power_integral(k as f64 * model.alpha - 1.0, l1, h1);
        } else {
            // t = e^u turns b_k(t)/t dt into A(e^u)^k e^-u du.
            let g = |u: f64| {
                let t = u.exp();
                model.a(t).powi(k as i32) / t
            };
            acc += quad::adaptive_simpson(&g, l1.ln(), h1.ln(), 1e-12);
        }
    }
    acc
}

/// Antiderivative `Phi_k(s) = int_0^s b_k(t) / (t v 1) dt`, tabulated on the
/// integer lattice so that `b~_k(z, x) = Phi_k(|z|) - Phi_k(|x|)` telescopes.
#[derive(Debug, Clone)]
pub struct RatePrimitive {
    model: TailModel,
    k: u32,
    table: Vec<f64>,
}

impl RatePrimitive {
    /// Builds the table on `[0, s_max]`. Pure powers use the closed form and
    /// need no table.
    pub fn new(model: &TailModel, k: u32, s_max: f64) -> Self {
        let mut table = Vec::new();
        if !model.is_pure_power() {
            let n = s_max.max(1.0).ceil() as usize + 1;
            table.reserve(n + 1);
            table.push(0.0);
            table.push(unit_piece(k, 1.0));
            for j in 1..n {
                let (a, b) = (j as f64, (j + 1) as f64);
                let piece = quad::gauss_legendre(|t| model.a(t).powi(k as i32) / (t * t), a, b);
                let last = *table.last().unwrap();
                table.push(last + piece);
            }
        }
        Self { model: model.clone(), k, table }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// `Phi_k(s)` for `s >= 0`.
    pub fn phi(&self, s: f64) -> f64 {
        let s = s.abs();
        if s <= 1.0 {
            return unit_piece(self.k, s);
        }
        if self.model.is_pure_power() {
            return unit_piece(self.k, 1.0)
                + power_integral(self.k as f64 * self.model.alpha - 1.0, 1.0, s);
        }
        let j = s.floor() as usize;
        let base = match self.table.get(j) {
            Some(v) => *v,
            None => {
                // Beyond the table: integrate the remainder directly.
                let top = self.table.len() - 1;
                return self.table[top] + btilde_integral(&self.model, self.k, top as f64, s);
            }
        };
        let frac = s - j as f64;
        if frac == 0.0 {
            base
        } else {
            let m = &self.model;
            let k = self.k as i32;
            base + quad::gauss_legendre(|t| m.a(t).powi(k) / (t * t), j as f64, s)
        }
    }

    /// `b~_k(z, x)` through the tabulated antiderivative.
    pub fn btilde(&self, z: f64, x: f64) -> f64 {
        let (lo, hi) = (x.abs(), z.abs());
        if lo >= hi {
            0.0
        } else {
            self.phi(hi) - self.phi(lo)
        }
    }
}

/// `kappa_alpha = floor(1/alpha) - 1` for `alpha in (0, 1)`.
///
/// Reciprocals within 1e-12 (relative) of an integer snap to it, so the
/// band endpoints `alpha = 1/m` land on `m - 1`.
pub fn kappa_alpha(alpha: f64) -> Result<u32> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("kappa_alpha needs alpha in (0,1), got {alpha}")));
    }
    let r = 1.0 / alpha;
    let n = r.round();
    let fl = if (r - n).abs() <= 1e-12 * r { n } else { r.floor() };
    Ok(fl as u32 - 1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SrtConstantMode {
    OneSidedClosedForm,
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrtConstant {
    pub value: f64,
    pub std_error: Option<f64>,
}

/// Renewal constant `C(alpha, rho) = alpha E[Y^-alpha 1{Y > 0}]`.
pub fn srt_constant(alpha: f64, rho: f64, mode: SrtConstantMode) -> Result<SrtConstant> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("renewal constant needs alpha in (0,1), got {alpha}")));
    }
    match mode {
        SrtConstantMode::OneSidedClosedForm => {
            if rho != 1.0 {
                return Err(Error::Unsupported(format!(
                    "closed form only for rho = 1, got rho = {rho}"
                )));
            }
            Ok(SrtConstant {
                value: (std::f64::consts::PI * alpha).sin() / std::f64::consts::PI,
                std_error: None,
            })
        }
        SrtConstantMode::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return Err(Error::Domain("need at least two samples".into()));
            }
            let ys = crate::lld_mc::stable_sample(alpha, rho, samples, seed)?;
            let vals: Vec<f64> = ys
                .iter()
                .map(|&y| if y > 0.0 { alpha * y.powf(-alpha) } else { 0.0 })
                .collect();
            let (mean, se) = crate::stats::mean_stderr(&vals);
            Ok(SrtConstant { value: mean, std_error: Some(se) })
        }
    }
}

/// Ratio `int_0^T b_k / (T b_k(T) / (k alpha))`, which tends to 1 by Karamata's theorem
/// (the integrand is regularly varying with index `k alpha - 1 > -1`).
pub fn karamata_ratio(model: &TailModel, k: u32, t: f64) -> f64 {
    // int_0^T b_k(s) ds = int_0^1 A^k + int_1^T A(s)^k / s ds.
    let unit = unit_piece(k, 1.0);
    let tail = if model.is_pure_power() {
        power_integral(k as f64 * model.alpha, 1.0, t)
    } else {
        let g = |u: f64| model.a(u.exp()).powi(k as i32);
        quad::adaptive_simpson(&g, 0.0, t.ln(), 1e-12)
    };
    let zeta = k as f64 * model.alpha - 1.0;
    (unit + tail) / (t * model.b(k, t) / (zeta + 1.0))
}

/// Smallest `K` with `rho^(alpha+eps)/K <= A(rho s)/A(s) <= K rho^(alpha-eps)` on the grid.
pub fn potter_constant(model: &TailModel, eps: f64, rhos: &[f64], s_grid: &[f64]) -> f64 {
    let al = model.alpha;
    let mut k: f64 = 1.0;
    for &rho in rhos {
        for &s in s_grid {
            if rho * s < 1.0 {
                continue;
            }
            let r = model.a(rho * s) / model.a(s);
            k = k.max(r / rho.powf(al - eps)).max(rho.powf(al + eps) / r);
        }
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn eval_a_anchor_values() {
        let m = TailModel::pure_power(0.5).unwrap();
        assert_eq!(eval_a(&m, 1.0).unwrap(), 1.0);
        assert_relative_eq!(eval_a(&m, 16.0).unwrap(), 4.0, max_relative = 1e-15);
        for model in [m, TailModel::log_power(0.3, 1.0).unwrap()] {
            assert_eq!(eval_a(&model, 0.0).unwrap(), 0.5);
            assert_eq!(eval_a(&model, 1.0).unwrap(), 1.0);
        }
        assert!(matches!(eval_a(&TailModel::pure_power(0.5).unwrap(), -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn inverse_examples() {
        let m = TailModel::pure_power(0.5).unwrap();
        assert_relative_eq!(inverse_a(&m, 4.0).unwrap(), 16.0, max_relative = 1e-14);
        assert_eq!(inverse_a(&m, 1.0).unwrap(), 1.0);
        let lm = TailModel::log_power(0.3, 1.0).unwrap();
        assert_eq!(inverse_a(&lm, 1.0).unwrap(), 1.0);
        let x = inverse_a(&lm, 100.0).unwrap();
        assert!((lm.a(x) - 100.0).abs() <= 1e-8);
        assert!(inverse_a(&m, 0.49).is_err());
    }

    #[test]
    fn rate_b_examples() {
        let m = TailModel::pure_power(0.5).unwrap();
        assert_relative_eq!(rate_b(&m, 2, 100.0), 1.0, max_relative = 1e-14);
        assert_eq!(rate_b(&m, 3, 0.0), 0.125);
        assert_eq!(rate_b(&TailModel::log_power(0.4, 0.5).unwrap(), 3, 0.0), 0.125);
        assert_relative_eq!(rate_b(&m, 1, 1e6), 1e-3, max_relative = 1e-12);
    }

    #[test]
    fn btilde_examples() {
        let m = TailModel::pure_power(0.5).unwrap();
        for method in [BtildeMethod::Integral, BtildeMethod::Sum] {
            assert_eq!(rate_btilde(&m, 2, 5.0, 10.0, method), 0.0);
        }
        for x0 in [1.0, 3.5, 1e4] {
            let v = rate_btilde(&m, 2, std::f64::consts::E * x0, x0, BtildeMethod::Integral);
            assert_relative_eq!(v, 1.0, max_relative = 1e-13);
        }
        let (z, x) = (2f64.powi(16), 2f64.powi(8));
        let s = rate_btilde(&m, 2, z, x, BtildeMethod::Sum);
        let i = rate_btilde(&m, 2, z, x, BtildeMethod::Integral);
        let ratio = s / i;
        assert!((0.2..=5.0).contains(&ratio), "sum/integral = {ratio}");
    }

    #[test]
    fn btilde_quadrature_matches_closed_form_on_log_family_limit() {
        // beta = 0 reduces log-power to the pure power: quadrature vs closed form.
        let lp = TailModel::log_power(0.3, 0.0).unwrap();
        let pp = TailModel::pure_power(0.3).unwrap();
        for (z, x) in [(10.0, 0.2), (1e5, 3.0), (7.5, 0.0)] {
            let a = rate_btilde(&lp, 3, z, x, BtildeMethod::Integral);
            let b = rate_btilde(&pp, 3, z, x, BtildeMethod::Integral);
            assert_relative_eq!(a, b, max_relative = 1e-10);
        }
    }

    #[test]
    fn primitive_agrees_with_direct_integral() {
        for model in [TailModel::pure_power(0.3).unwrap(), TailModel::log_power(0.3, 1.0).unwrap()] {
            let p = RatePrimitive::new(&model, 2, 5000.0);
            for (z, x) in [(4000.0, 17.0), (123.4, 0.3), (2.0, 1.0), (4999.5, 0.0), (9000.0, 10.0)] {
                let direct = rate_btilde(&model, 2, z, x, BtildeMethod::Integral);
                assert_relative_eq!(p.btilde(z, x), direct, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn kappa_table() {
        assert_eq!(kappa_alpha(0.6).unwrap(), 0);
        assert_eq!(kappa_alpha(0.4).unwrap(), 1);
        assert_eq!(kappa_alpha(0.3).unwrap(), 2);
        for m in 2..=6u32 {
            assert_eq!(kappa_alpha(1.0 / m as f64).unwrap(), m - 1);
        }
        assert!(kappa_alpha(1.2).is_err());
    }

    #[test]
    fn srt_constant_closed_form() {
        let c = srt_constant(0.5, 1.0, SrtConstantMode::OneSidedClosedForm).unwrap();
        assert_relative_eq!(c.value, 1.0 / std::f64::consts::PI, max_relative = 1e-15);
        assert!((c.value - 0.3183099).abs() < 1e-7);
        let small = srt_constant(1e-3, 1.0, SrtConstantMode::OneSidedClosedForm).unwrap();
        assert!((small.value / 1e-3 - 1.0).abs() < 0.01);
        assert!(matches!(
            srt_constant(0.5, 0.7, SrtConstantMode::OneSidedClosedForm),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn karamata_and_potter_checks() {
        for alpha in [0.25, 0.5, 0.7] {
            let m = TailModel::pure_power(alpha).unwrap();
            let r = karamata_ratio(&m, 1, 2f64.powi(20));
            assert!((r - 1.0).abs() < 0.05, "alpha={alpha}: {r}");
        }
        let s_grid: Vec<f64> = (0..=30).map(|j| 2f64.powi(j)).collect();
        for m in [
            TailModel::pure_power(0.3).unwrap(),
            TailModel::log_power(0.3, 1.0).unwrap(),
            TailModel::log_power(0.6, -0.5).unwrap(),
        ] {
            let k = potter_constant(&m, 0.05, &[0.5, 0.25, 0.125], &s_grid);
            assert!(k <= 10.0, "{m:?}: K = {k}");
        }
    }

    #[test]
    fn tail_model_config_round_trip_and_rejects_unknown_keys() {
        let m = TailModel::log_power(0.3, 1.0).unwrap();
        let text = toml::to_string(&m).unwrap();
        let back: TailModel = toml::from_str(&text).unwrap();
        assert_eq!(m, back);
        let bad = "alpha = 0.3\nfamily = \"constant\"\ngamma = 2.0\n";
        assert!(toml::from_str::<TailModel>(bad).is_err());
        let tab = "alpha = 0.5\nfamily = \"tabulated\"\ntable = [[1.0, 1.0], [100.0, 12.0]]\n";
        let t: TailModel = toml::from_str(tab).unwrap();
        assert_relative_eq!(t.a(100.0), 12.0, max_relative = 1e-12);
        assert_relative_eq!(t.a(400.0), 24.0, max_relative = 1e-12);
    }

    #[test]
    fn slowly_varying_ratio_on_dyadic_grid() {
        let m = TailModel::log_power(0.4, 1.0).unwrap();
        let x = 2f64.powi(40);
        for lambda in [2.0, 4.0] {
            let r = m.a(lambda * x) / m.a(x);
            assert!((r / lambda.powf(0.4) - 1.0).abs() < 0.05);
        }
    }

    proptest! {
        #[test]
        fn a_strictly_increasing(alpha in 0.05f64..0.95, beta in -0.04f64..2.0, x in 0.0f64..1e8) {
            let m = TailModel::log_power(alpha, beta).unwrap();
            let y = x * 1.001 + 1e-3;
            prop_assert!(m.a(y) > m.a(x));
        }

        #[test]
        fn inverse_round_trip(alpha in 0.05f64..0.95, beta in 0.0f64..2.0, lu in -0.69f64..25.0) {
            let u = lu.exp();
            for m in [TailModel::pure_power(alpha).unwrap(), TailModel::log_power(alpha, beta).unwrap()] {
                let x = m.a_inv(u);
                prop_assert!((m.a(x) - u).abs() / u <= 1e-10);
            }
        }
    }
}
