//! Lattice step distributions: regularly varying baselines, spiky laws with
//! large atoms, and the renewal and two-sided counterexample constructions.
//!
//! Every law lives on `hZ` with positions stored in lattice units. Mass that
//! falls beyond the window is kept out of band as a far atom on each side
//! (`trunc_left`, `trunc_right`) so that the total is exactly one while all
//! window computations ignore it.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::rv_kernel::TailModel;

/// Tail parameters: `F(x, inf) ~ p / A(x)` and `F(-inf, -x) ~ q / A(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailMeta {
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
    pub model: TailModel,
}

impl TailMeta {
    pub fn new(model: TailModel, p: f64, q: f64) -> Self {
        Self { alpha: model.alpha(), p, q, model }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    BaselinePos,
    BaselineTwoSided,
    Spiky,
    CounterRenewal,
    TwoSidedCounter,
    Custom,
}

/// Which summand of a mixture a recorded block belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    /// Atoms of the spiky component.
    Spike,
    /// `(x_n - z_n, x_n]` of the renewal counterexample.
    Interval,
    /// `E_{n,k}` of the two-sided counterexample.
    Enk,
    /// `G_k` of the two-sided counterexample (before reflection).
    Gk,
}

/// One constant-density block (or atom) of a construction, with its mass
/// inside the mixture's summand, before the mixture weight is applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub component: Component,
    pub n: u32,
    pub k: u32,
    /// Real endpoints of the interval as defined by the construction.
    pub lo: f64,
    pub hi: f64,
    /// First lattice point and number of lattice points carrying the mass.
    pub first: i64,
    pub count: u64,
    pub mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Sided {
    Positive,
    TwoSided { p: f64, q: f64 },
}

/// Slowly growing function used by the renewal counterexample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ZetaFn {
    Log,
    LogLog,
    Power { exponent: f64 },
}

impl ZetaFn {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            ZetaFn::Log => x.max(1.0).ln(),
            ZetaFn::LogLog => x.max(std::f64::consts::E).ln().ln(),
            ZetaFn::Power { exponent } => x.max(0.0).powf(exponent),
        }
    }
}

/// An exact lattice step law on `h * [x_min, x_min + len)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeDist {
    h: f64,
    x_min: i64,
    masses: Vec<f64>,
    trunc_left: f64,
    trunc_right: f64,
    tail: TailMeta,
    provenance: Provenance,
    constants: BTreeMap<String, f64>,
    blocks: Vec<Block>,
    /// `tail_sum[i] = sum_{j >= i} masses[j]`, accumulated from the right.
    tail_sum: Vec<f64>,
    /// `head_sum[i] = sum_{j < i} masses[j]`, accumulated from the left.
    head_sum: Vec<f64>,
}

fn partial_sums(masses: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut tail = vec![0.0; masses.len() + 1];
    for i in (0..masses.len()).rev() {
        tail[i] = tail[i + 1] + masses[i];
    }
    let mut head = vec![0.0; masses.len() + 1];
    for i in 0..masses.len() {
        head[i + 1] = head[i] + masses[i];
    }
    (tail, head)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    h: f64,
    x_min: i64,
    x_max: i64,
    trunc_left: f64,
    trunc_right: f64,
    tail: TailMeta,
    provenance: Provenance,
    constants: BTreeMap<String, f64>,
    blocks: Vec<Block>,
}

const MAGIC: &[u8; 8] = b"RNWLDST1";

impl LatticeDist {
    /// Wraps explicit masses; validates nonnegativity, total mass and span.
    pub fn from_masses(h: f64, x_min: i64, masses: Vec<f64>, tail: TailMeta) -> Result<Self> {
        Self::assemble(h, x_min, masses, 0.0, 0.0, tail, Provenance::Custom, BTreeMap::new(), vec![])
    }

    /// Law of a single lattice atom at `x` (in lattice units), with `h = 1`.
    pub fn point_mass(x: i64, tail: TailMeta) -> Result<Self> {
        Self::from_masses(1.0, x, vec![1.0], tail)
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        h: f64,
        x_min: i64,
        masses: Vec<f64>,
        trunc_left: f64,
        trunc_right: f64,
        tail: TailMeta,
        provenance: Provenance,
        constants: BTreeMap<String, f64>,
        blocks: Vec<Block>,
    ) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain(format!("span h = {h} must be positive")));
        }
        if let Some(bad) = masses.iter().find(|m| !(**m >= 0.0 && m.is_finite())) {
            return Err(Error::Invariant(format!("mass {bad} is not a nonnegative number")));
        }
        if trunc_left < 0.0 || trunc_right < 0.0 {
            return Err(Error::Invariant("negative truncation mass".into()));
        }
        let (tail_sum, head_sum) = partial_sums(&masses);
        let total = tail_sum[0] + trunc_left + trunc_right;
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Invariant(format!("total mass {total} differs from 1")));
        }
        let d = Self {
            h,
            x_min,
            masses,
            trunc_left,
            trunc_right,
            tail,
            provenance,
            constants,
            blocks,
            tail_sum,
            head_sum,
        };
        let g = d.support_gcd();
        if g != 1 && !(g == 0 && d.masses.len() == 1) {
            return Err(Error::Invariant(format!("support has gcd {g}; span is not h")));
        }
        Ok(d)
    }

    /// gcd of the support positions (in lattice units).
    pub fn support_gcd(&self) -> u64 {
        fn gcd(a: u64, b: u64) -> u64 {
            if b == 0 {
                a
            } else {
                gcd(b, a % b)
            }
        }
        let mut pos = self.support().map(|(x, _)| x.unsigned_abs());
        let first = pos.next().unwrap_or(0);
        // A single atom at x != 0 has gcd |x|; treat it as a degenerate unit-span law.
        let g = pos.fold(first, gcd);
        if self.support().count() == 1 && g != 0 {
            1
        } else {
            g
        }
    }

    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn x_min(&self) -> i64 {
        self.x_min
    }
    pub fn x_max(&self) -> i64 {
        self.x_min + self.masses.len() as i64 - 1
    }
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }
    pub fn trunc_left(&self) -> f64 {
        self.trunc_left
    }
    pub fn trunc_right(&self) -> f64 {
        self.trunc_right
    }
    pub fn tail_meta(&self) -> &TailMeta {
        &self.tail
    }
    pub fn model(&self) -> &TailModel {
        &self.tail.model
    }
    pub fn provenance(&self) -> Provenance {
        self.provenance
    }
    pub fn constants(&self) -> &BTreeMap<String, f64> {
        &self.constants
    }
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// True when every window mass sits on positive lattice points.
    pub fn is_positive(&self) -> bool {
        self.trunc_left == 0.0 && self.support().all(|(x, _)| x > 0)
    }

    /// `F({x})` for a lattice point `x`.
    #[inline]
    pub fn mass_at(&self, x: i64) -> f64 {
        let i = x - self.x_min;
        if i < 0 || i as usize >= self.masses.len() {
            0.0
        } else {
            self.masses[i as usize]
        }
    }

    /// `F((x, inf))` including the far right atom.
    pub fn tail_right(&self, x: i64) -> f64 {
        let i = (x + 1 - self.x_min).clamp(0, self.masses.len() as i64) as usize;
        self.tail_sum[i] + self.trunc_right
    }

    /// `F((-inf, -x))` including the far left atom.
    pub fn tail_left(&self, x: i64) -> f64 {
        let i = (-x - self.x_min).clamp(0, self.masses.len() as i64) as usize;
        self.head_sum[i] + self.trunc_left
    }

    /// `F([x_min, x))` over the window masses.
    pub(crate) fn cum_below(&self, x: i64) -> f64 {
        let i = (x - self.x_min).clamp(0, self.masses.len() as i64) as usize;
        self.head_sum[i]
    }

    /// Window mass `F([lo, hi])`.
    pub fn window_mass(&self, lo: i64, hi: i64) -> f64 {
        if hi < lo {
            0.0
        } else {
            (self.cum_below(hi + 1) - self.cum_below(lo)).max(0.0)
        }
    }

    /// Smallest lattice point `x` with `F([x_min, x]) > u`, clamped to the window.
    pub(crate) fn locate(&self, u: f64) -> i64 {
        let i = self.head_sum[1..].partition_point(|v| *v <= u);
        self.x_min + i.min(self.masses.len() - 1) as i64
    }

    /// Nonzero window masses as `(position, mass)`.
    pub fn support(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.masses
            .iter()
            .enumerate()
            .filter(|(_, m)| **m > 0.0)
            .map(move |(i, m)| (self.x_min + i as i64, *m))
    }

    /// Law of `-X`.
    pub fn reflect(&self) -> LatticeDist {
        let mut masses = self.masses.clone();
        masses.reverse();
        let tail = TailMeta { p: self.tail.q, q: self.tail.p, ..self.tail.clone() };
        let (tail_sum, head_sum) = partial_sums(&masses);
        LatticeDist {
            h: self.h,
            x_min: -self.x_max(),
            masses,
            trunc_left: self.trunc_right,
            trunc_right: self.trunc_left,
            tail,
            provenance: self.provenance,
            constants: self.constants.clone(),
            blocks: self.blocks.clone(),
            tail_sum,
            head_sum,
        }
    }

    /// Writes the columnar binary form: magic, JSON header, then the
    /// lattice offsets (i64) and masses (f64) of the nonzero points.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let header = serde_json::to_vec(&self.header())?;
        w.write_all(MAGIC)?;
        w.write_u64::<LittleEndian>(header.len() as u64)?;
        w.write_all(&header)?;
        let support: Vec<(i64, f64)> = self.support().collect();
        w.write_u64::<LittleEndian>(support.len() as u64)?;
        for (x, _) in &support {
            w.write_i64::<LittleEndian>(*x)?;
        }
        for (_, m) in &support {
            w.write_f64::<LittleEndian>(*m)?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Serialization("not a lattice distribution file".into()));
        }
        let hlen = r.read_u64::<LittleEndian>()? as usize;
        let mut hbuf = vec![0u8; hlen];
        r.read_exact(&mut hbuf)?;
        let header: Header = serde_json::from_slice(&hbuf)?;
        let n = r.read_u64::<LittleEndian>()? as usize;
        let mut xs = Vec::with_capacity(n);
        for _ in 0..n {
            xs.push(r.read_i64::<LittleEndian>()?);
        }
        let len = (header.x_max - header.x_min + 1).max(0) as usize;
        let mut masses = vec![0.0; len];
        for x in xs {
            let m = r.read_f64::<LittleEndian>()?;
            let i = x - header.x_min;
            if i < 0 || i as usize >= len {
                return Err(Error::Serialization(format!("offset {x} outside window")));
            }
            masses[i as usize] = m;
        }
        Self::assemble(
            header.h,
            header.x_min,
            masses,
            header.trunc_left,
            header.trunc_right,
            header.tail,
            header.provenance,
            header.constants,
            header.blocks,
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_binary(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_binary(std::io::BufReader::new(f))
    }

    /// CSV with columns `offset,mass` for the nonzero window points.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["offset", "mass"])?;
        for (x, m) in self.support() {
            wr.write_record([x.to_string(), format!("{m:e}")])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Header metadata as JSON (span, window, tail, provenance, constants).
    pub fn header_json(&self) -> serde_json::Value {
        serde_json::to_value(self.header()).unwrap_or(serde_json::Value::Null)
    }

    fn header(&self) -> Header {
        Header {
            h: self.h,
            x_min: self.x_min,
            x_max: self.x_max(),
            trunc_left: self.trunc_left,
            trunc_right: self.trunc_right,
            tail: self.tail.clone(),
            provenance: self.provenance,
            constants: self.constants.clone(),
            blocks: self.blocks.clone(),
        }
    }
}

/// `int_from^inf scale * alpha / (t A(t)) dt`, the continuous proxy for the
/// lattice sum `sum_{n > from - 1/2} scale * alpha / (n A(n))`.
fn tail_integral(model: &TailModel, scale: f64, from: f64) -> f64 {
    let alpha = model.alpha();
    if model.is_pure_power() && from >= 1.0 {
        return scale * from.powf(-alpha);
    }
    // u = ln t; then s in [0,1) maps u = u0 + s / (1 - s).
    let u0 = from.ln();
    let g = |s: f64| {
        let u = u0 + s / (1.0 - s);
        alpha / model.a(u.exp()) / ((1.0 - s) * (1.0 - s))
    };
    scale * quad::adaptive_simpson(&g, 0.0, 1.0 - 1e-12, 1e-12)
}

/// Mass layout for one side of a baseline law: `scale * alpha / (n A(n))`
/// for `n0 < n <= n_max` and the remainder integral beyond `n_max`.
struct SideMasses {
    n0: i64,
    masses: Vec<f64>,
    beyond: f64,
}

fn side_masses(model: &TailModel, scale: f64, n0: i64, n_max: i64) -> SideMasses {
    let alpha = model.alpha();
    let masses: Vec<f64> = ((n0 + 1)..=n_max)
        .map(|n| {
            let n = n as f64;
            scale * alpha / (n * model.a(n))
        })
        .collect();
    let beyond = tail_integral(model, scale, n_max as f64 + 0.5);
    SideMasses { n0, masses, beyond }
}

impl SideMasses {
    fn total(&self) -> f64 {
        self.masses.iter().sum::<f64>() + self.beyond
    }
}

/// Smallest `n0` whose remainder `budget - sides_total(n0)` is positive.
fn choose_n0<F: Fn(i64) -> f64>(budget: f64, total: F, n_max: i64) -> Result<(i64, f64)> {
    let mut n0 = 1i64;
    loop {
        if n0 >= n_max / 2 {
            return Err(Error::Construction(format!(
                "tail mass exceeds {budget} for every n0 below half the window"
            )));
        }
        // Estimate through the integral first to skip hopeless n0 cheaply.
        let t = total(n0);
        if t < budget {
            return Ok((n0, t));
        }
        n0 = (n0 as f64 * 1.25).ceil() as i64;
    }
}

/// Regularly varying one-sided law with `F(x, inf) ~ scale / A(x)` on
/// `[0, x_max]`, as `(masses, trunc_right, n0, c1)`.
fn positive_part(model: &TailModel, scale: f64, x_max: i64) -> Result<(Vec<f64>, f64, i64, f64)> {
    let est = |n0: i64| tail_integral(model, scale, n0 as f64 + 0.5);
    let (n0_est, _) = choose_n0(1.0, est, x_max)?;
    // Back off to the smallest admissible n0 with the exact lattice sums.
    let mut n0 = n0_est;
    let mut side = side_masses(model, scale, n0, x_max);
    while n0 > 1 {
        let cand = side_masses(model, scale, n0 - 1, x_max);
        if cand.total() < 1.0 {
            side = cand;
            n0 -= 1;
        } else {
            break;
        }
    }
    while side.total() >= 1.0 {
        n0 += 1;
        if n0 >= x_max / 2 {
            return Err(Error::Construction("normalization unreachable".into()));
        }
        side = side_masses(model, scale, n0, x_max);
    }
    let c1 = side.total();
    let mut masses = vec![0.0; x_max as usize + 1];
    masses[side.n0 as usize] = 1.0 - c1;
    masses[(side.n0 + 1) as usize..].copy_from_slice(&side.masses);
    Ok((masses, side.beyond, n0, c1))
}

/// Baseline law with `F(x, inf) ~ p / A(x)` (and `F(-inf, -x) ~ q / A(x)` when two-sided).
///
/// Positive case: `F({n}) = alpha / (n A(n))` for `n > n0` with the remainder on
/// `n0`. Two-sided case: weights `p`, `q` on the two sides and the remainder at 0.
pub fn build_baseline(model: &TailModel, sided: Sided, x_max: i64) -> Result<LatticeDist> {
    let alpha = model.alpha();
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("baseline needs alpha in (0,1), got {alpha}")));
    }
    check_window(model, x_max)?;
    let mut constants = BTreeMap::new();
    match sided {
        Sided::Positive => {
            let (masses, trunc, n0, c1) = positive_part(model, 1.0, x_max)?;
            constants.insert("n0".into(), n0 as f64);
            constants.insert("c1".into(), c1);
            constants.insert("c".into(), 1.0);
            LatticeDist::assemble(
                1.0,
                0,
                masses,
                0.0,
                trunc,
                TailMeta::new(model.clone(), 1.0, 0.0),
                Provenance::BaselinePos,
                constants,
                vec![],
            )
        }
        Sided::TwoSided { p, q } => {
            let (masses, tl, tr, n0, c1) = two_sided_part(model, p, q, x_max)?;
            constants.insert("n0".into(), n0 as f64);
            constants.insert("c1".into(), c1);
            constants.insert("p".into(), p);
            constants.insert("q".into(), q);
            LatticeDist::assemble(
                1.0,
                -x_max,
                masses,
                tl,
                tr,
                TailMeta::new(model.clone(), p, q),
                Provenance::BaselineTwoSided,
                constants,
                vec![],
            )
        }
    }
}

/// Window must hold the target tail down to 1e-6 of its scale at the edge.
fn check_window(model: &TailModel, x_max: i64) -> Result<()> {
    if x_max < 16 {
        return Err(Error::Domain(format!("window x_max = {x_max} is too small")));
    }
    if 1.0 / model.a(x_max as f64) > 0.5 {
        return Err(Error::Domain("window does not reach the tail regime".into()));
    }
    Ok(())
}

/// Two-sided baseline on `[-x_max, x_max]`: `(masses, trunc_left, trunc_right, n0, c1)`.
fn two_sided_part(
    model: &TailModel,
    p: f64,
    q: f64,
    x_max: i64,
) -> Result<(Vec<f64>, f64, f64, i64, f64)> {
    if !(p >= 0.0 && q >= 0.0 && p + q > 0.0) {
        return Err(Error::Domain(format!("tail weights p = {p}, q = {q} are invalid")));
    }
    let est = |n0: i64| {
        let t = n0 as f64 + 0.5;
        tail_integral(model, p, t) + tail_integral(model, q, t)
    };
    let (mut n0, _) = choose_n0(1.0, est, x_max)?;
    let build = |n0: i64| (side_masses(model, p, n0, x_max), side_masses(model, q, n0, x_max));
    let (mut right, mut left) = build(n0);
    while n0 > 1 {
        let (r, l) = build(n0 - 1);
        if r.total() + l.total() < 1.0 {
            right = r;
            left = l;
            n0 -= 1;
        } else {
            break;
        }
    }
    while right.total() + left.total() >= 1.0 {
        n0 += 1;
        if n0 >= x_max / 2 {
            return Err(Error::Construction("normalization unreachable".into()));
        }
        let (r, l) = build(n0);
        right = r;
        left = l;
    }
    let c1 = right.total() + left.total();
    let len = 2 * x_max as usize + 1;
    let zero = x_max as usize;
    let mut masses = vec![0.0; len];
    masses[zero] = 1.0 - c1;
    for (j, m) in right.masses.iter().enumerate() {
        masses[zero + n0 as usize + 1 + j] = *m;
    }
    for (j, m) in left.masses.iter().enumerate() {
        masses[zero - n0 as usize - 1 - j] = *m;
    }
    Ok((masses, left.beyond, right.beyond, n0, c1))
}

/// Accumulates component masses on a window, sending anything outside to the far atoms.
struct Canvas {
    x_min: i64,
    masses: Vec<f64>,
    left: f64,
    right: f64,
}

impl Canvas {
    fn new(x_min: i64, x_max: i64) -> Self {
        Self { x_min, masses: vec![0.0; (x_max - x_min + 1) as usize], left: 0.0, right: 0.0 }
    }

    fn add_point(&mut self, x: i64, m: f64) {
        let i = x - self.x_min;
        if i < 0 {
            self.left += m;
        } else if i as usize >= self.masses.len() {
            self.right += m;
        } else {
            self.masses[i as usize] += m;
        }
    }

    /// Spreads `m` evenly over `count` consecutive points starting at `first`.
    fn add_block(&mut self, first: i64, count: u64, m: f64) {
        let each = m / count as f64;
        for j in 0..count as i64 {
            self.add_point(first + j, each);
        }
    }

    fn scaled_add(&mut self, other_x_min: i64, other: &[f64], w: f64) {
        for (j, m) in other.iter().enumerate() {
            if *m != 0.0 {
                self.add_point(other_x_min + j as i64, w * m);
            }
        }
    }
}

/// Spiky law `F = (F1 + F2) / 2` with `F1` a baseline of tail `2 / A` and `F2`
/// atoms `c2 * eps_n / A(x_n)` on a subsequence along which `eps_n / A(x_n)`
/// at least halves. Guarantees `F({x_n}) >= eps_n / A(x_n)` on that subsequence.
pub fn build_spiky(
    model: &TailModel,
    x_seq: &[f64],
    eps_seq: &[f64],
    x_max: i64,
) -> Result<LatticeDist> {
    if x_seq.len() != eps_seq.len() {
        return Err(Error::Domain("x_seq and eps_seq differ in length".into()));
    }
    if x_seq.windows(2).any(|w| w[1] <= w[0]) || eps_seq.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Domain("x_seq must increase and eps_seq be positive".into()));
    }
    check_window(model, x_max)?;
    let weight = |i: usize| eps_seq[i] / model.a(x_seq[i]);
    // Greedy subsequence with geometric decay of the weights.
    let mut chosen: Vec<usize> = Vec::new();
    for i in 0..x_seq.len() {
        if x_seq[i] < 1.0 {
            continue;
        }
        match chosen.last() {
            None => chosen.push(i),
            Some(&j) if weight(i) <= 0.5 * weight(j) && x_seq[i].round() > x_seq[j].round() => {
                chosen.push(i)
            }
            _ => {}
        }
    }
    // Drop leading points until the remaining weights sum to at most 1/2.
    let total: f64 = chosen.iter().map(|&i| weight(i)).sum();
    let mut acc = total;
    let mut k0 = 0;
    while k0 < chosen.len() && acc > 0.5 {
        acc -= weight(chosen[k0]);
        k0 += 1;
    }
    let chosen = &chosen[k0..];
    let inside = chosen.iter().filter(|&&i| x_seq[i].round() as i64 <= x_max).count();
    if inside < 3 {
        return Err(Error::Construction(format!(
            "only {inside} admissible spike points inside the window"
        )));
    }
    let c2 = 1.0 / chosen.iter().map(|&i| weight(i)).sum::<f64>();

    let (f1, f1_trunc, n0, c1) = positive_part(model, 2.0, x_max)?;
    let mut canvas = Canvas::new(0, x_max);
    canvas.scaled_add(0, &f1, 0.5);
    canvas.right += 0.5 * f1_trunc;
    let mut blocks = Vec::new();
    for (k, &i) in chosen.iter().enumerate() {
        let x = x_seq[i].round() as i64;
        let m = c2 * weight(i);
        canvas.add_point(x, 0.5 * m);
        blocks.push(Block {
            component: Component::Spike,
            n: i as u32,
            k: (k0 + k) as u32,
            lo: x as f64,
            hi: x as f64,
            first: x,
            count: 1,
            mass: m,
        });
    }
    let mut constants = BTreeMap::new();
    constants.insert("n0".into(), n0 as f64);
    constants.insert("c1".into(), c1);
    constants.insert("c2".into(), c2);
    constants.insert("k0".into(), k0 as f64);
    LatticeDist::assemble(
        1.0,
        0,
        canvas.masses,
        0.0,
        canvas.right,
        TailMeta::new(model.clone(), 1.0, 0.0),
        Provenance::Spiky,
        constants,
        blocks,
    )
}

/// Dyadic spike sequence `x_n = 2^n` for `n = 1..=n_max` with the given `eps` rule.
pub fn dyadic_spikes(n_max: u32, eps: impl Fn(u32) -> f64) -> (Vec<f64>, Vec<f64>) {
    (1..=n_max).map(|n| (2f64.powi(n as i32), eps(n))).unzip()
}

/// Largest dyadic exponent included in normalization sums.
const N_SUM: u32 = 1000;

/// Renewal counterexample `F = (F1 + F2) / 2`: `F1` a baseline of tail `2 / A`,
/// `F2` of constant lattice density `c zeta(x_{n-1}) / (x_n A(x_n))` on
/// `(x_n - z_n, x_n]` with `x_n = 2^n` and `z_n = x_n / (2 zeta(x_{n-1})^(1 + theta))`.
///
/// `zeta` is replaced by `min(zeta, ln x)`. Each block's mass is carried by
/// `ceil(z_n)` lattice points so that block masses are exact.
pub fn build_counter_renewal(model: &TailModel, zeta: ZetaFn, x_max: i64) -> Result<LatticeDist> {
    let alpha = model.alpha();
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::Domain(format!("renewal counterexample needs alpha < 1/2, got {alpha}")));
    }
    check_window(model, x_max)?;
    let theta = 1f64.min((1.0 - 2.0 * alpha) / (8.0 * alpha));
    let eps = (1.0 - 2.0 * alpha) / 8.0;
    let zc = |x: f64| zeta.eval(x).min(x.max(1.0).ln());
    let xn = |n: u32| 2f64.powi(n as i32);
    let zn = |n: u32| 0.5 * xn(n) / zc(xn(n - 1)).powf(1.0 + theta);
    let a_ratio = 2f64.powf(alpha / 2.0);
    let admissible = |n: u32| {
        zc(xn(n - 1)) >= 1.0
            && zn(n) >= 1.0
            && (n..N_SUM).all(|m| model.a(xn(m + 1)) >= a_ratio * model.a(xn(m)))
    };
    let n0 = (2..N_SUM)
        .find(|&n| admissible(n) && (n..n + 64).all(|m| zc(xn(m)) >= zc(xn(m - 1))))
        .ok_or_else(|| Error::Construction("no admissible starting block".into()))?;
    // Unnormalized block masses: zeta(x_{n-1}) z_n / (x_n A(x_n)).
    let raw = |n: u32| zc(xn(n - 1)) * zn(n) / (xn(n) * model.a(xn(n)));
    let total: f64 = (n0..N_SUM).map(raw).sum();
    let c = 1.0 / total;
    let inside = (n0..N_SUM).filter(|&n| xn(n) <= x_max as f64).count();
    if inside < 5 {
        return Err(Error::Construction(format!(
            "window holds {inside} dyadic blocks, need at least 5"
        )));
    }

    let (f1, f1_trunc, f1_n0, c1) = positive_part(model, 2.0, x_max)?;
    let mut canvas = Canvas::new(0, x_max);
    canvas.scaled_add(0, &f1, 0.5);
    canvas.right += 0.5 * f1_trunc;
    let mut blocks = Vec::new();
    for n in n0..N_SUM {
        let x = xn(n);
        let z = zn(n);
        let mass = c * raw(n);
        if x > x_max as f64 {
            canvas.right += 0.5 * mass;
            continue;
        }
        let count = z.ceil() as u64;
        let first = x as i64 - count as i64 + 1;
        canvas.add_block(first, count, 0.5 * mass);
        blocks.push(Block {
            component: Component::Interval,
            n,
            k: 0,
            lo: x - z,
            hi: x,
            first,
            count,
            mass,
        });
    }
    let mut constants = BTreeMap::new();
    constants.insert("c".into(), c);
    constants.insert("theta".into(), theta);
    constants.insert("eps".into(), eps);
    constants.insert("n0".into(), n0 as f64);
    constants.insert("f1_n0".into(), f1_n0 as f64);
    constants.insert("c1".into(), c1);
    LatticeDist::assemble(
        1.0,
        0,
        canvas.masses,
        0.0,
        canvas.right,
        TailMeta::new(model.clone(), 1.0, 0.0),
        Provenance::CounterRenewal,
        constants,
        blocks,
    )
}

/// `l(n) = ln(1 + n)`.
fn ell(n: u32) -> f64 {
    (1.0 + n as f64).ln()
}

/// Two-sided counterexample `F = (F1 + F2 + F3*) / 3` with `A(x) = x^alpha`.
///
/// `F1` is a two-sided baseline with tail weights 3 and 3. `F2` has constant
/// density `c / (l(n) 2^{n(1-alpha)} 2^{2 alpha k})` on
/// `E_{n,k} = [2^n + 2^k, 2^n + 2^k + 2^k / (2 k^p))`. `F3` has constant density
/// `c' k^p / (l(k) 2^{k(1+alpha)})` on `G_k = [2^k, 2^k + 2^k / k^p)` and is reflected.
pub fn build_two_sided_counter(alpha: f64, x_max: i64) -> Result<LatticeDist> {
    if !(alpha > 0.0 && alpha < 1.0 / 3.0) {
        return Err(Error::Domain(format!("two-sided counterexample needs alpha < 1/3, got {alpha}")));
    }
    let model = TailModel::pure_power(alpha)?;
    check_window(&model, x_max)?;
    let p = 0.5 * (1.0 + 1.0 / (3.0 * alpha));
    let pow2 = |e: f64| e.exp2();

    // ln of F2(E_{n,k}) / c.
    let ln_enk = |n: u32, k: u32| {
        -ell(n).ln() - n as f64 * (1.0 - alpha) * 2f64.ln() + k as f64 * (1.0 - 2.0 * alpha) * 2f64.ln()
            - (2.0 * (k as f64).powf(p)).ln()
    };
    let f2_total: f64 = (2..N_SUM).map(|n| (1..n).map(|k| ln_enk(n, k).exp()).sum::<f64>()).sum();
    let c = 1.0 / f2_total;
    let f3_total: f64 = (2..N_SUM).map(|k| pow2(-(k as f64) * alpha) / ell(k)).sum();
    let c3 = 1.0 / f3_total;

    let (f1, f1_left, f1_right, n0, c1) = two_sided_part(&model, 3.0, 3.0, x_max)?;
    let mut canvas = Canvas::new(-x_max, x_max);
    canvas.scaled_add(-x_max, &f1, 1.0 / 3.0);
    canvas.left += f1_left / 3.0;
    canvas.right += f1_right / 3.0;
    let mut blocks = Vec::new();
    for n in 2..N_SUM {
        let base = pow2(n as f64);
        if base > x_max as f64 {
            let rest: f64 = (n..N_SUM).map(|m| (1..m).map(|k| ln_enk(m, k).exp()).sum::<f64>()).sum();
            canvas.right += c * rest / 3.0;
            break;
        }
        for k in 1..n {
            let start = base + pow2(k as f64);
            let width = pow2(k as f64) / (2.0 * (k as f64).powf(p));
            let count = width.ceil() as u64;
            let mass = c * ln_enk(n, k).exp();
            canvas.add_block(start as i64, count, mass / 3.0);
            blocks.push(Block {
                component: Component::Enk,
                n,
                k,
                lo: start,
                hi: start + width,
                first: start as i64,
                count,
                mass,
            });
        }
    }
    for k in 2..N_SUM {
        let start = pow2(k as f64);
        let mass = c3 * pow2(-(k as f64) * alpha) / ell(k);
        if start > x_max as f64 {
            canvas.left += mass / 3.0;
            continue;
        }
        let width = start / (k as f64).powf(p);
        let count = width.ceil() as u64;
        // Reflection of [2^k, 2^k + count - 1].
        let first = -(start as i64) - count as i64 + 1;
        canvas.add_block(first, count, mass / 3.0);
        blocks.push(Block {
            component: Component::Gk,
            n: 0,
            k,
            lo: start,
            hi: start + width,
            first: start as i64,
            count,
            mass,
        });
    }
    let mut constants = BTreeMap::new();
    constants.insert("c".into(), c);
    constants.insert("c_prime".into(), c3);
    constants.insert("p".into(), p);
    constants.insert("n0".into(), n0 as f64);
    constants.insert("c1".into(), c1);
    LatticeDist::assemble(
        1.0,
        -x_max,
        canvas.masses,
        canvas.left,
        canvas.right,
        TailMeta::new(model, 1.0, 1.0),
        Provenance::TwoSidedCounter,
        constants,
        blocks,
    )
}

/// Tail diagnostic on a dyadic grid: `p_hat(x) = F(x, inf) A(x)`, `q_hat(x) = F(-inf, -x) A(x)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailCheck {
    pub x: Vec<i64>,
    pub p_hat: Vec<f64>,
    pub q_hat: Vec<f64>,
    /// Largest deviation from `(p, q)` over the top decade, relative when the target is nonzero.
    pub max_dev: f64,
    pub pass: bool,
}

/// Passes when both normalized tails sit within `band` of `(p, q)` on the top decade of the window.
pub fn tail_check(dist: &LatticeDist, band: f64) -> TailCheck {
    let model = dist.model();
    let top = dist.x_max().max(-dist.x_min()).max(1);
    let mut x = Vec::new();
    let mut j = 1i64;
    while j <= top {
        x.push(j);
        j *= 2;
    }
    let p_hat: Vec<f64> = x.iter().map(|&v| dist.tail_right(v) * model.a(v as f64)).collect();
    let q_hat: Vec<f64> = x.iter().map(|&v| dist.tail_left(v) * model.a(v as f64)).collect();
    let (p, q) = (dist.tail_meta().p, dist.tail_meta().q);
    let dev = |v: f64, t: f64| if t > 0.0 { (v / t - 1.0).abs() } else { v.abs() };
    let floor = top as f64 / 10.0;
    let mut max_dev: f64 = 0.0;
    let mut any = false;
    for i in 0..x.len() {
        if (x[i] as f64) < floor {
            continue;
        }
        any = true;
        max_dev = max_dev.max(dev(p_hat[i], p)).max(dev(q_hat[i], q));
    }
    let degenerate = p == 0.0 && q == 0.0;
    TailCheck { x, p_hat, q_hat, max_dev, pass: any && !degenerate && max_dev <= band }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pp(alpha: f64) -> TailModel {
        TailModel::pure_power(alpha).unwrap()
    }

    fn total(d: &LatticeDist) -> f64 {
        d.masses().iter().sum::<f64>() + d.trunc_left() + d.trunc_right()
    }

    #[test]
    fn baseline_positive_mass_and_tail() {
        let d = build_baseline(&pp(0.5), Sided::Positive, 1_000_000).unwrap();
        assert!((total(&d) - 1.0).abs() <= 1e-12);
        let v = d.tail_right(100_000) * d.model().a(1e5);
        assert!((0.95..=1.05).contains(&v), "{v}");
        let mut prev = f64::INFINITY;
        for x in (0..1_000_000).step_by(997) {
            let t = d.tail_right(x);
            assert!(t <= prev);
            prev = t;
        }
        assert_eq!(d.support_gcd(), 1);
        assert!(d.is_positive());
    }

    #[test]
    fn baseline_two_sided_tails() {
        let d = build_baseline(&pp(0.4), Sided::TwoSided { p: 0.7, q: 0.3 }, 1 << 16).unwrap();
        assert!((total(&d) - 1.0).abs() <= 1e-12);
        let r = tail_check(&d, 0.05);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn baseline_log_family() {
        let m = TailModel::log_power(0.3, 1.0).unwrap();
        let d = build_baseline(&m, Sided::Positive, 1 << 18).unwrap();
        // The Karamata limit is approached at rate 1 / log x for a log factor.
        let r = tail_check(&d, 0.05);
        let top = &r.p_hat[8..];
        assert!(top.windows(2).all(|w| w[1] > w[0] && w[1] < 1.0), "{r:?}");
        assert!(*top.last().unwrap() > 0.8);
    }

    #[test]
    fn point_mass_fails_tail_check() {
        let d = LatticeDist::point_mass(1, TailMeta::new(pp(0.5), 1.0, 0.0)).unwrap();
        assert!(!tail_check(&d, 0.5).pass);
    }

    #[test]
    fn span_check_rejects_even_support() {
        let meta = TailMeta::new(pp(0.5), 1.0, 0.0);
        assert!(LatticeDist::from_masses(1.0, 0, vec![0.0, 0.0, 0.5, 0.0, 0.5], meta.clone()).is_err());
        assert!(LatticeDist::from_masses(1.0, 0, vec![0.0, 0.5, 0.5], meta).is_ok());
    }

    #[test]
    fn spiky_atoms_and_mass() {
        let m = pp(0.5);
        let (xs, eps) = dyadic_spikes(60, |n| 1.0 / (1.0 + n as f64).ln());
        let d = build_spiky(&m, &xs, &eps, 1 << 20).unwrap();
        assert!((total(&d) - 1.0).abs() <= 1e-12);
        for b in d.blocks() {
            if b.first <= d.x_max() {
                let need = eps[b.n as usize] / m.a(b.first as f64);
                assert!(d.mass_at(b.first) >= need, "spike at {}", b.first);
            }
        }
    }

    #[test]
    fn spiky_tail_band_with_fast_decay() {
        let m = pp(0.5);
        let (xs, eps) = dyadic_spikes(60, |n| 1.0 / n as f64);
        let d = build_spiky(&m, &xs, &eps, 1 << 20).unwrap();
        let r = tail_check(&d, 0.3);
        for (x, p) in r.x.iter().zip(&r.p_hat) {
            if *x as f64 >= (1 << 20) as f64 / 10.0 {
                assert!((0.8..=1.3).contains(p), "x={x}: {p}");
            }
        }
    }

    #[test]
    fn counter_renewal_blocks() {
        let m = pp(0.25);
        let d = build_counter_renewal(&m, ZetaFn::Log, 1 << 20).unwrap();
        assert!((total(&d) - 1.0).abs() <= 1e-12);
        let c = d.constants()["c"];
        let theta = d.constants()["theta"];
        let blocks = d.blocks();
        assert!(blocks.len() >= 5);
        for b in blocks {
            let x = b.hi;
            let zeta = (x / 2.0).ln();
            let z = x - b.lo;
            assert!((z - 0.5 * x / zeta.powf(1.0 + theta)).abs() <= 1e-9 * x);
            let expect = c * zeta * z / (x * m.a(x));
            assert!((b.mass - expect).abs() <= 1e-12 * expect);
            assert!(z <= x / 2.0);
            // Lattice mass on the block equals half the block mass.
            let on_lattice: f64 = (b.first..b.first + b.count as i64).map(|y| d.mass_at(y)).sum();
            assert!(on_lattice >= 0.5 * b.mass * (1.0 - 1e-12));
        }
        for w in blocks.windows(2) {
            assert!(w[1].mass <= 2f64.powf(-0.125) * w[0].mass);
            assert!(w[1].lo >= w[0].hi);
        }
    }

    #[test]
    fn counter_renewal_local_bound() {
        let m = pp(0.25);
        let d = build_counter_renewal(&m, ZetaFn::Log, 1 << 18).unwrap();
        let mut k: f64 = 0.0;
        for x in 16..=d.x_max() {
            let xf = x as f64;
            let bound = xf.ln() / (xf * m.a(xf));
            k = k.max(d.mass_at(x) / bound);
        }
        assert!(k.is_finite() && k < 50.0, "K = {k}");
    }

    #[test]
    fn two_sided_counter_blocks() {
        let alpha = 0.3;
        let d = build_two_sided_counter(alpha, 1 << 18).unwrap();
        assert!((total(&d) - 1.0).abs() <= 1e-12);
        let c = d.constants()["c"];
        let c3 = d.constants()["c_prime"];
        let p = d.constants()["p"];
        assert!(p > 1.0 && p < 1.0 / (3.0 * alpha));
        let mut last_hi = 0.0;
        for b in d.blocks().iter().filter(|b| b.component == Component::Enk) {
            let (n, k) = (b.n as f64, b.k as f64);
            let expect = c / ((1.0 + n).ln() * 2f64.powf(n * (1.0 - alpha)))
                * 2f64.powf(k * (1.0 - 2.0 * alpha))
                / (2.0 * k.powf(p));
            assert!((b.mass - expect).abs() <= 1e-12 * expect);
            assert!(b.lo >= 2f64.powf(n) && b.hi <= 2f64.powf(n + 1.0));
            assert!(b.lo >= last_hi);
            last_hi = b.hi;
        }
        for b in d.blocks().iter().filter(|b| b.component == Component::Gk) {
            let k = b.k as f64;
            let expect = c3 / ((1.0 + k).ln() * 2f64.powf(k * alpha));
            assert!((b.mass - expect).abs() <= 1e-12 * expect);
            assert!(b.hi <= 2f64.powf(k + 1.0));
        }
        assert!(build_two_sided_counter(0.34, 1 << 18).is_err());
    }

    #[test]
    fn binary_and_csv_round_trip() {
        let d = build_counter_renewal(&pp(0.25), ZetaFn::Log, 1 << 12).unwrap();
        let mut buf = Vec::new();
        d.write_binary(&mut buf).unwrap();
        let back = LatticeDist::read_binary(&buf[..]).unwrap();
        assert_eq!(d, back);
        let mut csv = Vec::new();
        d.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), d.support().count() + 1);
    }

    #[test]
    fn reflection_swaps_tails() {
        let d = build_baseline(&pp(0.4), Sided::TwoSided { p: 0.8, q: 0.2 }, 1 << 12).unwrap();
        let r = d.reflect();
        for x in [1, 10, 100, 1000] {
            assert!((d.tail_right(x) - r.tail_left(x)).abs() < 1e-15);
            assert_eq!(d.mass_at(x), r.mass_at(-x));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn builders_are_deterministic_and_normalized(alpha in 0.2f64..0.8, lx in 12u32..16) {
            let m = pp(alpha);
            let a = build_baseline(&m, Sided::Positive, 1 << lx).unwrap();
            let b = build_baseline(&m, Sided::Positive, 1 << lx).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!((total(&a) - 1.0).abs() <= 1e-12);
            prop_assert!(a.masses().iter().all(|v| *v >= 0.0));
        }
    }
}
