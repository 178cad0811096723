//! Run configuration: one TOML file with a section per module. Unknown keys are errors.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::conv_engine::RenewalMethod;
use crate::dist_factory::{
    build_baseline, build_counter_renewal, build_spiky, build_two_sided_counter, dyadic_spikes, LatticeDist, Sided,
    ZetaFn,
};
use crate::error::{Error, Result};
use crate::functionals::{default_delta_grid, ChainMode, Functional};
use crate::lld_mc::LldMethod;
use crate::rv_kernel::{TailModel, TailModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    RenewalScan,
    SrtRatio,
    AnScan,
    LldScan,
    CounterexampleDemo,
    AppendixDiag,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::RenewalScan => "renewal_scan",
            Scenario::SrtRatio => "srt_ratio",
            Scenario::AnScan => "an_scan",
            Scenario::LldScan => "lld_scan",
            Scenario::CounterexampleDemo => "counterexample_demo",
            Scenario::AppendixDiag => "appendix_diag",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

/// Points given either explicitly or as dyadic exponents `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<i64>),
    Dyadic { dyadic: [u32; 2] },
}

impl Grid {
    pub fn points(&self) -> Vec<i64> {
        match self {
            Grid::List(v) => v.clone(),
            Grid::Dyadic { dyadic: [lo, hi] } => (*lo..=*hi).map(|e| 1i64 << e).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub scenario: Scenario,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    /// Write SVG plots next to the CSVs.
    #[serde(default = "yes")]
    pub plots: bool,
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builder {
    Baseline,
    Spiky,
    CounterRenewal,
    TwoSidedCounter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpikeEps {
    /// `1 / log(1 + n)`.
    InvLog,
    /// `1 / n`.
    Inv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistSection {
    pub builder: Builder,
    pub x_max: i64,
    /// Baseline only; absent means positive support.
    pub p: Option<f64>,
    pub q: Option<f64>,
    /// Counter renewal only.
    #[serde(default = "default_zeta")]
    pub zeta: ZetaFn,
    /// Spiky only.
    #[serde(default = "default_eps")]
    pub eps: SpikeEps,
    /// Tail band for the construction self-check.
    #[serde(default = "default_band")]
    pub tail_band: f64,
}

fn default_zeta() -> ZetaFn {
    ZetaFn::Log
}
fn default_eps() -> SpikeEps {
    SpikeEps::InvLog
}
fn default_band() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvSection {
    pub renewal_method: RenewalMethod,
    /// Relative truncation target for two-sided renewal sums.
    pub tolerance: f64,
    /// Largest admissible renewal residual before the run reports a violation.
    pub residual_max: f64,
    pub x_grid: Option<Grid>,
    pub n_cap: usize,
    /// Stable samples for the renewal constant of two-sided laws.
    pub mc_samples: usize,
}

impl Default for ConvSection {
    fn default() -> Self {
        Self {
            renewal_method: RenewalMethod::Newton,
            tolerance: 1e-3,
            residual_max: 1e-8,
            x_grid: None,
            n_cap: 4096,
            mc_samples: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FunctionalsSection {
    pub functionals: Vec<Functional>,
    pub deltas: Vec<f64>,
    pub x_grid: Option<Grid>,
    pub eta: f64,
    /// Appendix diagnostic `delta`.
    pub delta: f64,
    pub chain_mode: ChainMode,
}

impl Default for FunctionalsSection {
    fn default() -> Self {
        Self {
            functionals: vec![Functional::I1Plus, Functional::T { ell: 0 }],
            deltas: default_delta_grid(),
            x_grid: None,
            eta: 0.5,
            delta: 0.4,
            chain_mode: ChainMode::Exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LldSection {
    pub gamma: f64,
    /// Inclusive lattice offsets of `J` relative to `x`.
    pub j: [i64; 2],
    pub n_grid: Vec<usize>,
    pub x_grid: Option<Grid>,
    pub n_cap_delta: Option<f64>,
    pub method: LldMethod,
}

impl Default for LldSection {
    fn default() -> Self {
        Self {
            gamma: 0.4,
            j: [0, 0],
            n_grid: (1..=64).collect(),
            x_grid: None,
            n_cap_delta: Some(0.2),
            method: LldMethod::Exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub rv_kernel: TailModelSpec,
    pub dist_factory: DistSection,
    #[serde(default)]
    pub conv_engine: ConvSection,
    #[serde(default)]
    pub functionals: FunctionalsSection,
    #[serde(default)]
    pub lld_mc: LldSection,
}

impl RunConfig {
    /// Parses and validates.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg = Self::parse(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses without cross-field validation, for callers that apply overrides first.
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn model(&self) -> Result<TailModel> {
        TailModel::try_from(self.rv_kernel.clone()).map_err(|e| Error::Config(e.to_string()))
    }

    /// Whether the scenario can reach a sampling path.
    pub fn uses_sampling(&self) -> bool {
        let two_sided = self.dist_factory.builder == Builder::TwoSidedCounter
            || (self.dist_factory.builder == Builder::Baseline && self.dist_factory.p.is_some());
        match self.run.scenario {
            Scenario::SrtRatio => two_sided,
            Scenario::LldScan => matches!(self.lld_mc.method, LldMethod::MonteCarlo { .. }),
            Scenario::AnScan | Scenario::CounterexampleDemo => {
                matches!(self.functionals.chain_mode, ChainMode::MonteCarlo { .. })
                    || self.functionals.functionals.iter().any(|f| matches!(f, Functional::Ik { .. } | Functional::TildeIk { .. }))
            }
            Scenario::RenewalScan | Scenario::AppendixDiag => false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model()?;
        let d = &self.dist_factory;
        if d.x_max < 16 {
            return Err(Error::Config(format!("dist_factory.x_max = {} is too small", d.x_max)));
        }
        if d.p.is_some() != d.q.is_some() {
            return Err(Error::Config("dist_factory.p and dist_factory.q go together".into()));
        }
        if d.p.is_some() && d.builder != Builder::Baseline {
            return Err(Error::Config("tail weights p, q apply to the baseline builder only".into()));
        }
        let f = &self.functionals;
        if f.functionals.is_empty() || f.deltas.is_empty() {
            return Err(Error::Config("functionals and deltas must be nonempty".into()));
        }
        let l = &self.lld_mc;
        if l.n_grid.is_empty() || l.j[0] > l.j[1] {
            return Err(Error::Config("lld_mc.n_grid must be nonempty and j ordered".into()));
        }
        for g in [&self.conv_engine.x_grid, &f.x_grid, &l.x_grid].into_iter().flatten() {
            if g.points().is_empty() {
                return Err(Error::Config("grids must be nonempty".into()));
            }
        }
        if self.run.seed.is_none() && self.uses_sampling() {
            return Err(Error::Config(format!("scenario {} can sample; run.seed is required", self.run.scenario.name())));
        }
        Ok(())
    }

    pub fn build_dist(&self) -> Result<LatticeDist> {
        let model = self.model()?;
        let d = &self.dist_factory;
        match d.builder {
            Builder::Baseline => {
                let sided = match (d.p, d.q) {
                    (Some(p), Some(q)) => Sided::TwoSided { p, q },
                    _ => Sided::Positive,
                };
                build_baseline(&model, sided, d.x_max)
            }
            Builder::Spiky => {
                let n_max = (d.x_max as f64).log2().floor() as u32;
                let (xs, eps) = match d.eps {
                    SpikeEps::InvLog => dyadic_spikes(n_max, |n| 1.0 / (1.0 + n as f64).ln()),
                    SpikeEps::Inv => dyadic_spikes(n_max, |n| 1.0 / n as f64),
                };
                build_spiky(&model, &xs, &eps, d.x_max)
            }
            Builder::CounterRenewal => build_counter_renewal(&model, d.zeta, d.x_max),
            Builder::TwoSidedCounter => build_two_sided_counter(model.alpha(), d.x_max),
        }
    }

    /// Dyadic points from `2^4` to the largest power of two in the window.
    pub fn default_x_grid(&self) -> Vec<i64> {
        let top = (self.dist_factory.x_max as f64).log2().floor() as u32;
        (4..=top).map(|e| 1i64 << e).collect()
    }
}
