use super::fft::CachedKernel;
use super::mass::{MassVector, Window, CLIP_ABORT};
use super::{clip, convolve, reach};
use crate::dist_factory::LatticeDist;
use crate::error::{Error, Result};

/// Default window for `n`-step marginals: `[n x_min, n x_max]` clipped to
/// twice the law's own reach. Beyond the law's window the marginals miss the
/// far atoms anyway.
pub fn default_window(dist: &LatticeDist, n: usize) -> Window {
    let m = dist.x_min().abs().max(dist.x_max().abs());
    let n = n as i64;
    Window::new((n * dist.x_min()).max(-2 * m), (n * dist.x_max()).min(2 * m))
}

/// `P(S_n = .)`, or `P(S_n = ., M_n <= m)` when `constraint_max = Some(m)`.
pub fn walk_marginal(
    dist: &LatticeDist,
    n: usize,
    constraint_max: Option<i64>,
    window: Option<Window>,
) -> Result<MassVector> {
    if n == 0 {
        return Err(Error::Domain("walk_marginal needs n >= 1".into()));
    }
    let kernel = match constraint_max {
        Some(m) => MassVector::from_dist_capped(dist, m),
        None => MassVector::from_dist(dist),
    };
    let w = window.unwrap_or_else(|| default_window(dist, n));
    PowerCache::new(kernel, w).power(n)
}

/// Convolution powers of a kernel by binary powering, with cached `p^{*2^j}`.
#[derive(Debug, Clone)]
pub struct PowerCache {
    window: Window,
    squares: Vec<MassVector>,
}

impl PowerCache {
    pub fn new(kernel: MassVector, window: Window) -> Self {
        Self { window, squares: vec![kernel] }
    }

    pub fn power(&mut self, n: usize) -> Result<MassVector> {
        if n == 0 {
            return Err(Error::Domain("power needs n >= 1".into()));
        }
        let bits = usize::BITS - n.leading_zeros();
        while self.squares.len() < bits as usize {
            let last = self.squares.last().unwrap();
            let next = convolve(last, last, Some(self.window))?;
            self.squares.push(next);
        }
        let mut acc: Option<MassVector> = None;
        for j in 0..bits as usize {
            if n >> j & 1 == 1 {
                acc = Some(match acc {
                    None => {
                        let mut s = self.squares[j].clone();
                        s.restrict(self.window);
                        s
                    }
                    Some(a) => convolve(&a, &self.squares[j], Some(self.window))?,
                });
            }
        }
        Ok(acc.unwrap())
    }
}

/// Sequential marginals `p_{n+1} = p_n * f` on a fixed window with the
/// kernel spectrum cached across steps.
pub struct Marginals {
    h: f64,
    window: Window,
    k_offset: i64,
    k_last: i64,
    k_mass: f64,
    k_leak: f64,
    kernel: CachedKernel,
    current: MassVector,
    n: usize,
}

impl Marginals {
    pub fn new(kernel: MassVector, window: Window) -> Self {
        let mut k = kernel;
        // Only kernel points that can reach the window from inside it matter.
        k.restrict(Window::new(window.lo - window.hi, window.hi - window.lo));
        let mut current = k.clone();
        current.restrict(window);
        let (h, off, values, leak, _) = k.into_parts();
        let k_last = off + values.len() as i64 - 1;
        let k_mass = values.iter().sum();
        Self {
            h,
            window,
            k_offset: off,
            k_last,
            k_mass,
            k_leak: leak,
            kernel: CachedKernel::new(values),
            current,
            n: 0,
        }
    }

    pub fn for_dist(dist: &LatticeDist, window: Window) -> Self {
        Self::new(MassVector::from_dist(dist), window)
    }

    /// Number of steps of the marginal returned by the last `advance`.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn current(&self) -> &MassVector {
        &self.current
    }

    /// Advances to the next marginal and returns it.
    pub fn advance(&mut self) -> Result<&MassVector> {
        if self.n == 0 {
            self.n = 1;
            return Ok(&self.current);
        }
        let p = &self.current;
        let mp = p.total();
        let mut leak = p.leakage() * (self.k_mass + self.k_leak) + mp * self.k_leak;
        let (a, b) = reach(p, self.k_offset, self.k_last, self.window);
        let pv = &p.values()[a..b];
        let mp_in: f64 = pv.iter().sum();
        leak += (mp - mp_in) * self.k_mass;
        let off = p.offset() + a as i64 + self.k_offset;
        let mut raw = if pv.is_empty() || self.kernel.values().is_empty() {
            Vec::new()
        } else {
            self.kernel.conv(pv)
        };
        let clipped = clip(&mut raw);
        if clipped > CLIP_ABORT {
            return Err(Error::Numerical(format!("clipped negative mass {clipped:e} exceeds ledger bound")));
        }
        let mut next = MassVector::with_ledger(self.h, off, raw, leak, p.clipped() + clipped);
        next.restrict(self.window);
        self.current = next;
        self.n += 1;
        Ok(&self.current)
    }
}

/// `N(delta, x) = floor(A(delta x))`, the number of steps in `T_l(delta; x)`.
fn steps(dist: &LatticeDist, delta: f64, x: i64) -> usize {
    let v = dist.model().a(delta * x as f64 * dist.h());
    if v < 1.0 {
        0
    } else {
        v.floor() as usize
    }
}

/// `T_l(delta; x) = sum_{1 <= n <= A(delta x)} n^l P(S_n in x + I)` with `I = (-h, 0]`.
pub fn partial_sum_t(dist: &LatticeDist, ell: u32, delta: f64, x: i64) -> Result<f64> {
    let t = t_table(dist, &[ell], &[delta], &[x])?;
    Ok(t.values[0][0][0])
}

/// `T_l(delta; x)` over a grid, sharing one pass of sequential marginals.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TTable {
    pub ells: Vec<u32>,
    pub deltas: Vec<f64>,
    pub xs: Vec<i64>,
    /// `values[l][d][x]`.
    pub values: Vec<Vec<Vec<f64>>>,
    pub n_max: usize,
    /// Leakage of the last marginal computed.
    pub leakage: f64,
}

pub fn t_table(dist: &LatticeDist, ells: &[u32], deltas: &[f64], xs: &[i64]) -> Result<TTable> {
    let nd = deltas.len();
    let nx = xs.len();
    let mut values = vec![vec![vec![0.0; nx]; nd]; ells.len()];
    let counts: Vec<Vec<usize>> =
        deltas.iter().map(|&d| xs.iter().map(|&x| steps(dist, d, x)).collect()).collect();
    let n_max = counts.iter().flatten().copied().max().unwrap_or(0);
    let mut leakage = 0.0;
    if n_max > 0 {
        let x_hi = *xs.iter().max().unwrap();
        let x_lo = *xs.iter().min().unwrap();
        let window = if dist.is_positive() {
            Window::new(0, x_hi)
        } else {
            let m = dist.x_min().abs().max(dist.x_max());
            Window::new((-2 * m).min(x_lo), (2 * m).max(x_hi))
        };
        let mut walk = Marginals::for_dist(dist, window);
        for n in 1..=n_max {
            let p = walk.advance()?;
            leakage = p.leakage();
            for (d, row) in counts.iter().enumerate() {
                for (i, &cnt) in row.iter().enumerate() {
                    if n <= cnt {
                        let v = p.get(xs[i]);
                        for (l, &ell) in ells.iter().enumerate() {
                            values[l][d][i] += (n as f64).powi(ell as i32) * v;
                        }
                    }
                }
            }
        }
    }
    Ok(TTable {
        ells: ells.to_vec(),
        deltas: deltas.to_vec(),
        xs: xs.to_vec(),
        values,
        n_max,
        leakage,
    })
}
