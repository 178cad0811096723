use serde::{Deserialize, Serialize};

use crate::dist_factory::LatticeDist;
use crate::error::{Error, Result};

/// Inclusive lattice window `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub lo: i64,
    pub hi: i64,
}

impl Window {
    pub fn new(lo: i64, hi: i64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, x: i64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Clipped negative mass per step beyond which a computation aborts.
pub const CLIP_ABORT: f64 = 1e-6;

/// Nonnegative masses on `offset, offset + 1, ...` (lattice units) with the
/// mass lost to window truncation and the magnitude of clipped FFT negatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassVector {
    h: f64,
    offset: i64,
    values: Vec<f64>,
    leakage: f64,
    clipped: f64,
}

impl MassVector {
    pub fn new(h: f64, offset: i64, values: Vec<f64>) -> Self {
        let mut v = Self { h, offset, values, leakage: 0.0, clipped: 0.0 };
        v.trim();
        v
    }

    pub(crate) fn with_ledger(h: f64, offset: i64, values: Vec<f64>, leakage: f64, clipped: f64) -> Self {
        let mut v = Self { h, offset, values, leakage, clipped };
        v.trim();
        v
    }

    /// Unit atom at `x`.
    pub fn delta(h: f64, x: i64) -> Self {
        Self::new(h, x, vec![1.0])
    }

    /// Window masses of a law, with its far atoms booked as leakage.
    pub fn from_dist(dist: &LatticeDist) -> Self {
        let v = dist.masses().to_vec();
        Self::with_ledger(dist.h(), dist.x_min(), v, dist.trunc_left() + dist.trunc_right(), 0.0)
    }

    /// Sub-probability `F restricted to (-inf, m]`, not renormalized.
    pub fn from_dist_capped(dist: &LatticeDist, m: i64) -> Self {
        let keep = (m - dist.x_min() + 1).clamp(0, dist.masses().len() as i64) as usize;
        let v = dist.masses()[..keep].to_vec();
        Self::with_ledger(dist.h(), dist.x_min(), v, dist.trunc_left(), 0.0)
    }

    /// Drops exact leading and trailing zeros.
    fn trim(&mut self) {
        let first = self.values.iter().position(|v| *v != 0.0);
        match first {
            None => {
                self.values.clear();
            }
            Some(f) => {
                let last = self.values.iter().rposition(|v| *v != 0.0).unwrap();
                if f > 0 || last + 1 < self.values.len() {
                    self.values.truncate(last + 1);
                    self.values.drain(..f);
                    self.offset += f as i64;
                }
            }
        }
    }

    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn offset(&self) -> i64 {
        self.offset
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn leakage(&self) -> f64 {
        self.leakage
    }
    pub fn clipped(&self) -> f64 {
        self.clipped
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Last lattice point carried (meaningless when empty).
    pub fn last(&self) -> i64 {
        self.offset + self.values.len() as i64 - 1
    }

    /// Mass in the window.
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    #[inline]
    pub fn get(&self, x: i64) -> f64 {
        let i = x - self.offset;
        if i < 0 || i as usize >= self.values.len() {
            0.0
        } else {
            self.values[i as usize]
        }
    }

    /// `sum_{y >= x}` of the window masses.
    pub fn tail_from(&self, x: i64) -> f64 {
        let i = (x - self.offset).clamp(0, self.values.len() as i64) as usize;
        self.values[i..].iter().sum()
    }

    /// Largest window mass.
    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Restricts to `w`, booking the removed mass as leakage.
    pub fn restrict(&mut self, w: Window) {
        if self.values.is_empty() {
            return;
        }
        let lo = (w.lo - self.offset).clamp(0, self.values.len() as i64) as usize;
        let hi = (w.hi - self.offset + 1).clamp(0, self.values.len() as i64) as usize;
        if hi <= lo {
            self.leakage += self.total();
            self.values.clear();
            return;
        }
        let removed: f64 = self.values[..lo].iter().chain(&self.values[hi..]).sum();
        self.leakage += removed;
        self.values.truncate(hi);
        self.values.drain(..lo);
        self.offset += lo as i64;
        self.trim();
    }

    pub(crate) fn check_span(&self, other: &MassVector) -> Result<()> {
        if (self.h - other.h).abs() > 1e-12 * self.h.max(other.h) {
            Err(Error::SpanMismatch(self.h, other.h))
        } else {
            Ok(())
        }
    }

    pub(crate) fn into_parts(self) -> (f64, i64, Vec<f64>, f64, f64) {
        (self.h, self.offset, self.values, self.leakage, self.clipped)
    }
}
