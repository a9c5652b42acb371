//! Square 2D complex FFTs built from row transforms and blocked transposes.
//!
//! Forward transforms leave the spectrum transposed: index `a·N + b` holds
//! wavenumber `(kx, ky) = (a, b)` in FFT ordering. Inverse transforms expect
//! that layout and return to row-major physical layout, so a forward/inverse
//! pair costs two transposes rather than four.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub type C64 = Complex64;

pub struct Fft2d {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2d {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2d").field("n", &self.n).finish()
    }
}

impl Fft2d {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    fn scratch(&self) -> Vec<C64> {
        let len = self
            .fwd
            .get_inplace_scratch_len()
            .max(self.inv.get_inplace_scratch_len());
        vec![C64::new(0.0, 0.0); len]
    }

    /// Forward transform of a row-major array whose rows `>= live_rows` are
    /// zero (those row transforms are skipped).
    pub fn forward_partial(&self, data: &mut [C64], live_rows: usize) {
        let n = self.n;
        assert_eq!(data.len(), n * n);
        let mut scratch = self.scratch();
        self.fwd.process_with_scratch(&mut data[..live_rows * n], &mut scratch);
        transpose(data, n);
        self.fwd.process_with_scratch(data, &mut scratch);
    }

    pub fn forward(&self, data: &mut [C64]) {
        self.forward_partial(data, self.n);
    }

    /// Normalised inverse transform from the transposed spectral layout;
    /// only physical rows `< keep_rows` are made valid.
    pub fn inverse_partial(&self, data: &mut [C64], keep_rows: usize) {
        let n = self.n;
        assert_eq!(data.len(), n * n);
        let mut scratch = self.scratch();
        self.inv.process_with_scratch(data, &mut scratch);
        transpose(data, n);
        self.inv
            .process_with_scratch(&mut data[..keep_rows * n], &mut scratch);
        let s = 1.0 / (n * n) as f64;
        data[..keep_rows * n].iter_mut().for_each(|v| *v *= s);
    }

    pub fn inverse(&self, data: &mut [C64]) {
        self.inverse_partial(data, self.n);
    }
}

/// In-place transpose of a square row-major array.
pub fn transpose(a: &mut [C64], n: usize) {
    const B: usize = 32;
    for bi in (0..n).step_by(B) {
        for bj in (bi..n).step_by(B) {
            for i in bi..(bi + B).min(n) {
                let j0 = if bi == bj { i + 1 } else { bj };
                for j in j0..(bj + B).min(n) {
                    a.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

/// Signed FFT wavenumber index for position `k` in a length-`n` transform.
#[inline]
pub fn signed_index(k: usize, n: usize) -> isize {
    if k < n / 2 {
        k as isize
    } else {
        k as isize - n as isize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transpose_roundtrip() {
        let n = 70;
        let orig: Vec<C64> = (0..n * n).map(|k| C64::new(k as f64, -(k as f64))).collect();
        let mut a = orig.clone();
        transpose(&mut a, n);
        assert_eq!(a[3 * n + 5], orig[5 * n + 3]);
        transpose(&mut a, n);
        assert_eq!(a, orig);
    }

    #[test]
    fn forward_matches_direct_dft() {
        let n = 8;
        let data: Vec<C64> = (0..n * n)
            .map(|k| C64::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos()))
            .collect();
        let mut a = data.clone();
        Fft2d::new(n).forward(&mut a);
        for kx in 0..n {
            for ky in 0..n {
                let mut s = C64::new(0.0, 0.0);
                for j in 0..n {
                    for i in 0..n {
                        let ph = -2.0 * std::f64::consts::PI * ((kx * i + ky * j) as f64) / n as f64;
                        s += data[j * n + i] * C64::from_polar(1.0, ph);
                    }
                }
                assert!((a[kx * n + ky] - s).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn partial_roundtrip() {
        let n = 16;
        let mut a = vec![C64::new(0.0, 0.0); n * n];
        for j in 0..n / 2 {
            for i in 0..n {
                a[j * n + i] = C64::new((i * 3 + j) as f64, 0.5);
            }
        }
        let orig = a.clone();
        let f = Fft2d::new(n);
        f.forward_partial(&mut a, n / 2);
        f.inverse_partial(&mut a, n / 2);
        for k in 0..n * n / 2 {
            assert!((a[k] - orig[k]).norm() < 1e-12);
        }
    }
}

/// Zero-padded real-to-complex transforms for Hockney convolutions.
///
/// A real `n × n` block is embedded in a `(2n)²` zero array. The forward
/// transform packs pairs of real rows into one complex row and, by Hermitian
/// symmetry, only transforms the columns `kx ≤ n`; the inverse only
/// produces the `n × n` block a convolution needs. Transposes are folded
/// into scattered writes between the two passes.
pub struct PaddedFft {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: std::sync::Mutex<PaddedScratch>,
}

#[derive(Default)]
struct PaddedScratch {
    fft: Vec<C64>,
    full: Vec<C64>,
    block: Vec<C64>,
}

impl std::fmt::Debug for PaddedFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PaddedFft").field("n", &self.n).finish()
    }
}

impl PaddedFft {
    /// Plans for physical size `n` (transform length `2n`).
    pub fn new(n: usize) -> Self {
        assert!(n % 2 == 0);
        let mut planner = FftPlanner::new();
        Self {
            n,
            fwd: planner.plan_fft_forward(2 * n),
            inv: planner.plan_fft_inverse(2 * n),
            scratch: std::sync::Mutex::new(PaddedScratch::default()),
        }
    }

    fn scratch_len(&self) -> usize {
        self.fwd
            .get_inplace_scratch_len()
            .max(self.inv.get_inplace_scratch_len())
    }

    /// Half spectrum `X(kx, ky)` for `kx = 0..=n`, stored `[kx·2n + ky]`.
    pub fn forward_half(&self, f: &[f64]) -> Vec<C64> {
        let n = self.n;
        let big = 2 * n;
        assert_eq!(f.len(), n * n);
        let half = n + 1;
        let mut out = vec![C64::new(0.0, 0.0); half * big];
        let mut scratch = vec![C64::new(0.0, 0.0); self.scratch_len()];
        let mut row = vec![C64::new(0.0, 0.0); big];
        for j in (0..n).step_by(2) {
            row[..n]
                .iter_mut()
                .zip(&f[j * n..(j + 1) * n])
                .zip(&f[(j + 1) * n..(j + 2) * n])
                .for_each(|((z, a), b)| *z = C64::new(*a, *b));
            row[n..].iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            self.fwd.process_with_scratch(&mut row, &mut scratch);
            for kx in 0..half {
                let zk = row[kx];
                let zm = row[(big - kx) % big].conj();
                out[kx * big + j] = (zk + zm) * 0.5;
                out[kx * big + j + 1] = (zk - zm) * C64::new(0.0, -0.5);
            }
        }
        self.fwd.process_with_scratch(&mut out, &mut scratch);
        out
    }

    /// `(X·K)^∨` restricted to the physical `n × n` block, row-major, where
    /// `K` is a full spectrum in the `[kx·2n + ky]` layout.
    pub fn convolve_half(&self, half: &[C64], kernel: &[C64]) -> Vec<C64> {
        let n = self.n;
        let big = 2 * n;
        let mut guard = self.scratch.lock().unwrap_or_else(|e| e.into_inner());
        let s = &mut *guard;
        s.fft.resize(self.scratch_len(), C64::new(0.0, 0.0));
        s.full.resize(big * big, C64::new(0.0, 0.0));
        s.block.resize(n * big, C64::new(0.0, 0.0));

        for kx in 0..big {
            let dst = &mut s.full[kx * big..(kx + 1) * big];
            let kr = &kernel[kx * big..(kx + 1) * big];
            if kx <= n {
                let src = &half[kx * big..(kx + 1) * big];
                for ((d, a), k) in dst.iter_mut().zip(src).zip(kr) {
                    *d = a * k;
                }
            } else {
                let src = &half[(big - kx) * big..(big - kx + 1) * big];
                dst[0] = src[0].conj() * kr[0];
                for ky in 1..big {
                    dst[ky] = src[big - ky].conj() * kr[ky];
                }
            }
        }
        // inverse along ky, keep j < n, scatter into [j][kx]
        for kx in 0..big {
            let r = &mut s.full[kx * big..(kx + 1) * big];
            self.inv.process_with_scratch(r, &mut s.fft);
            for (j, v) in r[..n].iter().enumerate() {
                s.block[j * big + kx] = *v;
            }
        }
        self.inv.process_with_scratch(&mut s.block, &mut s.fft);
        let norm = 1.0 / (big * big) as f64;
        let mut out = Vec::with_capacity(n * n);
        for j in 0..n {
            out.extend(s.block[j * big..j * big + n].iter().map(|v| v * norm));
        }
        out
    }
}
