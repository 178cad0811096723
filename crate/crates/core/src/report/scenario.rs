//! Scenario runner: builds the law, runs one scan and writes tables, plots and a manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::config::{Format, RunConfig, Scenario};
use super::export::{export, ReportDoc, Table};
use super::plot::{svg_lines, Series};
use crate::conv_engine::{renewal_mass, srt_curve, SrtOptions, Window};
use crate::dist_factory::{tail_check, LatticeDist};
use crate::error::{Error, Result};
use crate::functionals::{an_profile, appendix_diag, AnOptions, AnProfile, Functional};
use crate::lld_mc::{
    fuk_nagaev_tail, lld_bound_ratio, positivity, unconstrained_ratio, LldOptions, LldReport,
};
use crate::rv_kernel::{kappa_alpha, srt_constant, SrtConstantMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "violations")]
pub enum RunStatus {
    Ok,
    InvariantViolation(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpRecord {
    pub op: String,
    pub millis: u128,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub doc: ReportDoc,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    /// `0` on success, `2` on a hard invariant violation.
    pub fn exit_code(&self) -> i32 {
        match self.status {
            RunStatus::Ok => 0,
            RunStatus::InvariantViolation(_) => 2,
        }
    }
}

/// Operation log and violation list shared by the scenario steps.
struct Ledger {
    ops: Vec<OpRecord>,
    violations: Vec<String>,
    notes: BTreeMap<String, String>,
}

impl Ledger {
    fn time<T>(&mut self, op: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let v = f()?;
        self.ops.push(OpRecord { op: op.into(), millis: t.elapsed().as_millis() });
        Ok(v)
    }

    fn note(&mut self, key: impl Into<String>, value: impl ToString) {
        self.notes.insert(key.into(), value.to_string());
    }

    fn require(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.violations.push(what.into());
        }
    }
}

/// Runs the configured scenario and writes its artifacts under `out`.
pub fn run_scenario(cfg: &RunConfig, out: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut led = Ledger { ops: Vec::new(), violations: Vec::new(), notes: BTreeMap::new() };
    let dist = led.time("dist_factory::build", || cfg.build_dist())?;
    let mut tables = vec![tail_table(&dist, cfg.dist_factory.tail_band, &mut led)?];
    let mut plots: Vec<(String, String)> = Vec::new();
    match cfg.run.scenario {
        Scenario::RenewalScan => renewal_scan(cfg, &dist, &mut led, &mut tables, &mut plots)?,
        Scenario::SrtRatio => srt_scan(cfg, &dist, &mut led, &mut tables, &mut plots)?,
        Scenario::AnScan => {
            let fs = cfg.functionals.functionals.clone();
            an_scan(cfg, &dist, &fs, &mut led, &mut tables, &mut plots)?;
        }
        Scenario::CounterexampleDemo => {
            let fs = if dist.is_positive() {
                vec![Functional::I1Plus, Functional::T { ell: 0 }]
            } else {
                let k = kappa_alpha(dist.model().alpha())?.max(2);
                vec![Functional::TildeI1, Functional::Ik { k, eta: cfg.functionals.eta }]
            };
            let profiles = an_scan(cfg, &dist, &fs, &mut led, &mut tables, &mut plots)?;
            led.note("paired_verdicts_match", profiles[0].verdict == profiles[1].verdict);
        }
        Scenario::LldScan => lld_scan(cfg, &dist, &mut led, &mut tables, &mut plots)?,
        Scenario::AppendixDiag => appendix_scan(cfg, &dist, &mut led, &mut tables)?,
    }
    let doc = ReportDoc {
        kind: cfg.run.scenario.name().into(),
        provenance: dist.header_json(),
        tables,
        notes: led.notes.clone(),
    };
    let mut files = Vec::new();
    for &f in &cfg.run.formats {
        files.extend(export(&doc, f, out)?);
    }
    if cfg.run.plots {
        for (name, svg) in plots {
            let p = out.join(format!("{name}.svg"));
            // Plotting is best effort and never fails the run.
            if fs::write(&p, svg).is_ok() {
                files.push(p);
            }
        }
    }
    let status = if led.violations.is_empty() {
        RunStatus::Ok
    } else {
        RunStatus::InvariantViolation(led.violations.clone())
    };
    let manifest = serde_json::json!({
        "scenario": cfg.run.scenario.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "created_unix": SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        "inputs": cfg,
        "constants": dist.constants(),
        "operations": led.ops,
        "notes": led.notes,
        "result": status,
        "files": files.iter().map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned())).collect::<Vec<_>>(),
    });
    let mpath = out.join("manifest.json");
    fs::write(&mpath, serde_json::to_vec_pretty(&manifest)?)?;
    files.push(mpath);
    Ok(RunOutcome { status, doc, files })
}

/// Builds the law and writes it in binary and CSV form with its header and tail check.
pub fn dist_build(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let dist = cfg.build_dist()?;
    fs::create_dir_all(out)?;
    let bin = out.join("dist.bin");
    dist.save(&bin)?;
    let csv = out.join("dist.csv");
    dist.write_csv(fs::File::create(&csv)?)?;
    let header = out.join("dist_header.json");
    fs::write(&header, serde_json::to_vec_pretty(&dist.header_json())?)?;
    let mut led = Ledger { ops: Vec::new(), violations: Vec::new(), notes: BTreeMap::new() };
    let t = tail_table(&dist, cfg.dist_factory.tail_band, &mut led)?;
    let tc = out.join("tail_check.csv");
    t.write_csv(fs::File::create(&tc)?)?;
    Ok(vec![bin, csv, header, tc])
}

fn tail_table(dist: &LatticeDist, band: f64, led: &mut Ledger) -> Result<Table> {
    let tc = led.time("dist_factory::tail_check", || Ok(tail_check(dist, band)))?;
    let mut t = Table::new("tail_check", "tail_check")?;
    for i in 0..tc.x.len() {
        t.push(vec![tc.x[i] as f64, tc.p_hat[i], tc.q_hat[i]]);
    }
    led.note("tail_check_pass", tc.pass);
    led.note("tail_check_max_dev", tc.max_dev);
    Ok(t)
}

fn renewal_scan(
    cfg: &RunConfig,
    dist: &LatticeDist,
    led: &mut Ledger,
    tables: &mut Vec<Table>,
    plots: &mut Vec<(String, String)>,
) -> Result<()> {
    let x_top = dist.x_max().max(1) as usize;
    let method = cfg.conv_engine.renewal_method;
    let r = led.time("conv_engine::renewal_mass", || renewal_mass(dist, x_top, method))?;
    let mut t = Table::new("renewal", "renewal")?;
    let dense = x_top.min(4096);
    let mut xs: Vec<usize> = (0..=dense).collect();
    let mut e = 13;
    while (1usize << e) <= x_top {
        xs.push(1 << e);
        e += 1;
    }
    for &x in &xs {
        t.push(vec![x as f64, r.u[x]]);
    }
    led.note("renewal_residual", r.residual);
    led.note("renewal_clipped", r.clipped);
    led.require(r.residual <= cfg.conv_engine.residual_max, format!("renewal residual {:e} exceeds bound", r.residual));
    let pts = xs.iter().filter(|&&x| x > 0).map(|&x| (x as f64, r.u[x])).collect();
    if let Some(svg) = svg_lines("renewal mass u(x)", &[Series { label: "u".into(), points: pts }], true, true) {
        plots.push(("renewal".into(), svg));
    }
    tables.push(t);
    Ok(())
}

fn srt_scan(
    cfg: &RunConfig,
    dist: &LatticeDist,
    led: &mut Ledger,
    tables: &mut Vec<Table>,
    plots: &mut Vec<(String, String)>,
) -> Result<()> {
    let model = dist.model();
    let alpha = model.alpha();
    let meta = dist.tail_meta();
    let c = if dist.is_positive() {
        srt_constant(alpha, 1.0, SrtConstantMode::OneSidedClosedForm)?
    } else {
        let seed = cfg.run.seed.ok_or_else(|| Error::Config("run.seed is required".into()))?;
        let rho = positivity(alpha, meta.p, meta.q);
        let mode = SrtConstantMode::MonteCarlo { samples: cfg.conv_engine.mc_samples, seed };
        let mut c = led.time("rv_kernel::srt_constant", || srt_constant(alpha, rho, mode))?;
        // The limit with tail weights (p, q) is (p + q)^(1/alpha) times the standardized one.
        c.value /= meta.p + meta.q;
        c.std_error = c.std_error.map(|s| s / (meta.p + meta.q));
        c
    };
    led.note("srt_constant", c.value);
    let xs = match &cfg.conv_engine.x_grid {
        Some(g) => g.points(),
        None => {
            let mut g = cfg.default_x_grid();
            g.pop();
            g
        }
    };
    let opts = SrtOptions { tolerance: cfg.conv_engine.tolerance, n_cap: cfg.conv_engine.n_cap, ..Default::default() };
    let curve = led.time("conv_engine::srt_curve", || srt_curve(dist, &xs, c.value, opts))?;
    let mut t = Table::new("srt_ratio", "srt_ratio")?;
    for r in &curve {
        t.push(vec![r.x as f64, r.u, r.ratio, r.trunc_err, if r.flagged { 1.0 } else { 0.0 }]);
        led.require(r.ratio.is_finite() && r.ratio >= 0.0, format!("srt ratio at x = {} is not a finite nonnegative number", r.x));
    }
    if let Some(last) = curve.last() {
        led.note("final_ratio", last.ratio);
    }
    let pts = curve.iter().map(|r| (r.x as f64, r.ratio)).collect();
    if let Some(svg) = svg_lines("SRT ratio", &[Series { label: "ratio".into(), points: pts }], true, false) {
        plots.push(("srt_ratio".into(), svg));
    }
    tables.push(t);
    Ok(())
}

fn slug(f: &Functional) -> String {
    match f {
        Functional::I1Plus => "i1_plus".into(),
        Functional::TildeI1Plus => "tilde_i1_plus".into(),
        Functional::I1 => "i1".into(),
        Functional::TildeI1 => "tilde_i1".into(),
        Functional::TildeI1Star => "tilde_i1_star".into(),
        Functional::Ik { k, eta } => format!("i{k}_eta{eta}"),
        Functional::TildeIk { k, eta } => format!("tilde_i{k}_eta{eta}"),
        Functional::T { ell } => format!("t{ell}"),
    }
}

fn an_scan(
    cfg: &RunConfig,
    dist: &LatticeDist,
    functionals: &[Functional],
    led: &mut Ledger,
    tables: &mut Vec<Table>,
    plots: &mut Vec<(String, String)>,
) -> Result<Vec<AnProfile>> {
    let fc = &cfg.functionals;
    let xs = fc.x_grid.as_ref().map(|g| g.points()).unwrap_or_else(|| cfg.default_x_grid());
    let mut out = Vec::new();
    let mut series = Vec::new();
    let opts = AnOptions { chain_mode: fc.chain_mode, seed: cfg.run.seed.unwrap_or(0), ..Default::default() };
    for f in functionals {
        let p = led.time(&format!("functionals::an_profile[{f}]"), || an_profile(dist, *f, &fc.deltas, &xs, opts))?;
        let name = slug(f);
        let mut t = Table::new(format!("an_profile_{name}"), "an_profile")?;
        for (d, &delta) in p.delta_grid.iter().enumerate() {
            for (i, &x) in p.x_grid.iter().enumerate() {
                let se = p.std_errors.as_ref().map_or(f64::NAN, |s| s[d][i]);
                let v = p.values[d][i];
                led.require(v.is_finite() && v >= 0.0, format!("{f}: R({delta}, {x}) = {v} is not finite and nonnegative"));
                t.push(vec![delta, x as f64, v, se]);
            }
        }
        let mut s = Table::new(format!("an_score_{name}"), "an_score")?;
        for (d, sc) in p.delta_grid.iter().zip(&p.an_score) {
            s.push(vec![*d, *sc]);
        }
        led.note(format!("verdict_{name}"), p.verdict);
        tables.push(t);
        tables.push(s);
        let last = p.values.len() - 1;
        series.push(Series {
            label: format!("{f} delta={:.3}", p.delta_grid[last]),
            points: p.x_grid.iter().zip(&p.values[last]).map(|(&x, &v)| (x as f64, v)).collect(),
        });
        out.push(p);
    }
    if let Some(svg) = svg_lines("R(delta_min, x)", &series, true, true) {
        plots.push(("an_profile".into(), svg));
    }
    Ok(out)
}

fn lld_table(name: &str, r: &LldReport) -> Result<Table> {
    let mut t = Table::new(name, "lld")?;
    for c in &r.cells {
        t.push(vec![
            c.n as f64,
            c.x as f64,
            c.prob,
            c.ratio,
            c.std_error.unwrap_or(f64::NAN),
            if c.flagged { 1.0 } else { 0.0 },
        ]);
    }
    Ok(t)
}

fn lld_scan(
    cfg: &RunConfig,
    dist: &LatticeDist,
    led: &mut Ledger,
    tables: &mut Vec<Table>,
    plots: &mut Vec<(String, String)>,
) -> Result<()> {
    let l = &cfg.lld_mc;
    let xs = l.x_grid.as_ref().map(|g| g.points()).unwrap_or_else(|| cfg.default_x_grid());
    let j = Window::new(l.j[0], l.j[1]);
    let opts = LldOptions { n_cap_delta: l.n_cap_delta, method: l.method };
    let r = led.time("lld_mc::lld_bound_ratio", || lld_bound_ratio(dist, l.gamma, j, &l.n_grid, &xs, opts))?;
    let u = led.time("lld_mc::unconstrained_ratio", || unconstrained_ratio(dist, j, &l.n_grid, &xs))?;
    for rep in [&r, &u] {
        for c in &rep.cells {
            led.require(c.ratio.is_finite() && c.ratio >= 0.0, format!("lld ratio at n = {}, x = {} is invalid", c.n, c.x));
        }
    }
    led.note("lld_exponent", r.exponent);
    led.note("lld_sup", r.sup);
    led.note("unconstrained_sup", u.sup);
    tables.push(lld_table("lld", &r)?);
    tables.push(lld_table("lld_unconstrained", &u)?);
    let mut series = vec![
        Series { label: "capped sup".into(), points: r.sup_by_x.iter().map(|&(x, s)| (x as f64, s)).collect() },
        Series { label: "unconstrained sup".into(), points: u.sup_by_x.iter().map(|&(x, s)| (x as f64, s)).collect() },
    ];
    if dist.is_positive() {
        let f = led.time("lld_mc::fuk_nagaev_tail", || fuk_nagaev_tail(dist, l.gamma, &xs, &l.n_grid))?;
        let mut t = Table::new("fuk_nagaev", "fuk_nagaev")?;
        for c in &f.cells {
            t.push(vec![c.n as f64, c.x as f64, c.prob, c.ratio]);
        }
        led.note("fuk_nagaev_sup", f.sup);
        series.push(Series { label: "capped tail sup".into(), points: f.sup_by_x.iter().map(|&(x, s)| (x as f64, s)).collect() });
        tables.push(t);
    }
    if let Some(svg) = svg_lines("sup of normalized ratios", &series, true, true) {
        plots.push(("lld".into(), svg));
    }
    Ok(())
}

fn appendix_scan(cfg: &RunConfig, dist: &LatticeDist, led: &mut Ledger, tables: &mut Vec<Table>) -> Result<()> {
    let fc = &cfg.functionals;
    let xs = fc.x_grid.as_ref().map(|g| g.points()).unwrap_or_else(|| cfg.default_x_grid());
    let r = led.time("functionals::appendix_diag", || appendix_diag(dist, fc.delta, fc.eta, &xs))?;
    let mut t = Table::new("appendix", "appendix")?;
    for (i, &x) in r.x_grid.iter().enumerate() {
        t.push(vec![x as f64, r.half_over_tilde[i], r.tilde_over_plain[i], r.chain_over_tilde[i], r.tilde2_over_plain2[i]]);
    }
    led.note("kappa", r.kappa);
    led.note("max_tilde_over_plain", r.tilde_over_plain.iter().copied().fold(0.0, f64::max));
    led.require(!r.unbounded, "a ratio has a zero denominator under a positive numerator");
    tables.push(t);
    Ok(())
}

/// Re-exports a JSON report in another format.
pub fn reexport(input: &Path, format: Format, out: &Path) -> Result<Vec<PathBuf>> {
    let doc = ReportDoc::read_json(input)?;
    export(&doc, format, out)
}
