//! Linear convolution of real sequences: direct below a crossover, real FFT above.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use realfft::num_complex::Complex;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

/// Direct summation is used when the shorter input has at most this many
/// points or the product of lengths stays below [`DIRECT_WORK`].
pub const DIRECT_MIN_LEN: usize = 48;
pub const DIRECT_WORK: usize = 1 << 16;

thread_local! {
    static PLANNER: RefCell<RealFftPlanner<f64>> = RefCell::new(RealFftPlanner::new());
}

fn plans(n: usize) -> (Arc<dyn RealToComplex<f64>>, Arc<dyn ComplexToReal<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    })
}

/// Smallest length of the form `2^k` or `3 * 2^k` that is at least `n`.
pub fn fft_len(n: usize) -> usize {
    let p2 = n.next_power_of_two();
    let p3 = 3 * (n.div_ceil(3)).next_power_of_two();
    p2.min(p3).max(2)
}

pub fn direct_conv(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (o, &y) in out[i..].iter_mut().zip(b) {
            *o += x * y;
        }
    }
    out
}

/// Spectrum of a real sequence zero-padded to `n`.
pub fn spectrum(a: &[f64], n: usize) -> Vec<Complex<f64>> {
    let (fwd, _) = plans(n);
    let mut buf = vec![0.0; n];
    buf[..a.len()].copy_from_slice(a);
    let mut out = fwd.make_output_vec();
    fwd.process(&mut buf, &mut out).expect("forward FFT lengths match");
    out
}

/// Inverse of a pointwise product of spectra, scaled, first `len` entries.
fn inverse(mut freq: Vec<Complex<f64>>, n: usize, len: usize) -> Vec<f64> {
    let (_, inv) = plans(n);
    freq[0].im = 0.0;
    if n % 2 == 0 {
        let last = freq.len() - 1;
        freq[last].im = 0.0;
    }
    let mut out = inv.make_output_vec();
    inv.process(&mut freq, &mut out).expect("inverse FFT lengths match");
    let scale = 1.0 / n as f64;
    out.truncate(len);
    out.iter_mut().for_each(|v| *v *= scale);
    out
}

pub fn fft_conv(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let len = a.len() + b.len() - 1;
    let n = fft_len(len);
    let mut sa = spectrum(a, n);
    let sb = spectrum(b, n);
    sa.iter_mut().zip(&sb).for_each(|(x, y)| *x *= y);
    inverse(sa, n, len)
}

/// `a * b` by the cheaper of the two paths.
pub fn linear_conv(a: &[f64], b: &[f64]) -> Vec<f64> {
    let short = a.len().min(b.len());
    if short <= DIRECT_MIN_LEN || a.len().saturating_mul(b.len()) <= DIRECT_WORK {
        direct_conv(a, b)
    } else {
        fft_conv(a, b)
    }
}

/// A fixed kernel whose spectrum is cached per transform length, for
/// repeated convolutions `p -> p * kernel`.
#[derive(Debug, Default)]
pub struct CachedKernel {
    values: Vec<f64>,
    spectra: HashMap<usize, Vec<Complex<f64>>>,
}

impl CachedKernel {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values, spectra: HashMap::new() }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn conv(&mut self, a: &[f64]) -> Vec<f64> {
        let b = &self.values;
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let short = a.len().min(b.len());
        if short <= DIRECT_MIN_LEN || a.len().saturating_mul(b.len()) <= DIRECT_WORK {
            return direct_conv(a, b);
        }
        let len = a.len() + b.len() - 1;
        let n = fft_len(len);
        let sb = self.spectra.entry(n).or_insert_with(|| spectrum(b, n));
        let mut sa = spectrum(a, n);
        sa.iter_mut().zip(sb.iter()).for_each(|(x, y)| *x *= y);
        inverse(sa, n, len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn fft_matches_direct_on_random_64() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let a: Vec<f64> = (0..64).map(|_| rng.gen::<f64>()).collect();
            let b: Vec<f64> = (0..64).map(|_| rng.gen::<f64>()).collect();
            let sa: f64 = a.iter().sum();
            let sb: f64 = b.iter().sum();
            let a: Vec<f64> = a.iter().map(|v| v / sa).collect();
            let b: Vec<f64> = b.iter().map(|v| v / sb).collect();
            let d = direct_conv(&a, &b);
            let f = fft_conv(&a, &b);
            let diff = d.iter().zip(&f).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(diff <= 1e-12, "{diff}");
        }
    }

    #[test]
    fn fft_lengths() {
        assert_eq!(fft_len(5), 6);
        assert_eq!(fft_len(7), 8);
        assert_eq!(fft_len(1000), 1024);
        assert_eq!(fft_len(1025), 1536);
    }

    #[test]
    fn cached_kernel_reuses_spectrum() {
        let mut k = CachedKernel::new((0..200).map(|i| 1.0 / (1.0 + i as f64)).collect());
        let a: Vec<f64> = (0..300).map(|i| (i as f64).sin().abs()).collect();
        let once = k.conv(&a);
        let twice = k.conv(&a);
        assert_eq!(once, twice);
        let d = direct_conv(&a, k.values());
        let diff = d.iter().zip(&once).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }
}
