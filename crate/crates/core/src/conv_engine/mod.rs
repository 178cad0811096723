//! Exact lattice convolution: walk marginals, constrained marginals, the
//! renewal mass by power-series inversion, the sums `T_l(delta; x)`, and the
//! strong-renewal ratio diagnostics.

mod diagnostics;
pub mod fft;
mod mass;
mod renewal;
mod walk;

pub use diagnostics::{
    basic_bound_fit, local_sup_constant, srt_curve, srt_ratio, BasicBoundFit, SrtOptions, SrtRatio,
};
pub use mass::{MassVector, Window, CLIP_ABORT};
pub use renewal::{renewal_mass, RenewalMethod, RenewalTable};
pub use walk::{
    default_window, partial_sum_t, t_table, walk_marginal, Marginals, PowerCache, TTable,
};

use crate::error::{Error, Result};

/// Index range `[a, b)` of `p` whose points can land in `w` after adding a
/// shift in `[s_lo, s_hi]`.
fn reach(p: &MassVector, s_lo: i64, s_hi: i64, w: Window) -> (usize, usize) {
    let len = p.values().len() as i64;
    let a = (w.lo - s_hi - p.offset()).clamp(0, len);
    let b = (w.hi - s_lo - p.offset() + 1).clamp(a, len);
    (a as usize, b as usize)
}

/// Clips negatives in place, returning their total magnitude.
fn clip(values: &mut [f64]) -> f64 {
    let mut c = 0.0;
    for v in values.iter_mut() {
        if *v < 0.0 {
            c -= *v;
            *v = 0.0;
        }
    }
    c
}

/// `p * q` restricted to `window` (unrestricted when `None`), with leakage
/// `L_p (M_q + L_q) + M_p L_q + (mass of p * q outside the window)`.
pub fn convolve(p: &MassVector, q: &MassVector, window: Option<Window>) -> Result<MassVector> {
    p.check_span(q)?;
    let h = p.h();
    let (mp, mq) = (p.total(), q.total());
    let mut leak = p.leakage() * (mq + q.leakage()) + mp * q.leakage();
    let clipped_in = p.clipped() + q.clipped();
    if p.is_empty() || q.is_empty() {
        return Ok(MassVector::with_ledger(h, 0, vec![], leak, clipped_in));
    }
    let w = window.unwrap_or(Window::new(i64::MIN / 4, i64::MAX / 4));
    let (pa, pb) = reach(p, q.offset(), q.last(), w);
    let pv = &p.values()[pa..pb];
    let mp_in: f64 = pv.iter().sum();
    leak += (mp - mp_in) * mq;
    if pv.is_empty() {
        return Ok(MassVector::with_ledger(h, 0, vec![], leak, clipped_in));
    }
    let p_off = p.offset() + pa as i64;
    let p_last = p_off + pv.len() as i64 - 1;
    let (qa, qb) = reach(q, p_off, p_last, w);
    let qv = &q.values()[qa..qb];
    let mq_in: f64 = qv.iter().sum();
    leak += mp_in * (mq - mq_in);
    let q_off = q.offset() + qa as i64;

    let mut raw = fft::linear_conv(pv, qv);
    let clipped = clip(&mut raw);
    if clipped > CLIP_ABORT {
        return Err(Error::Numerical(format!("clipped negative mass {clipped:e} exceeds ledger bound")));
    }
    let mut out = MassVector::with_ledger(h, p_off + q_off, raw, leak, clipped_in + clipped);
    out.restrict(w);
    Ok(out)
}
