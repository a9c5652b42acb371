//! Pseudo-spectral derivatives on the periodic `n × n` grid.

use std::f64::consts::PI;

use crate::fft::{signed_index, Fft2d, C64};
use crate::grid::Grid2D;

/// FFT plan plus wavenumber tables for one grid.
#[derive(Debug)]
pub struct Spectral {
    n: usize,
    fft: Fft2d,
    /// First-derivative wavenumbers with the Nyquist entry zeroed.
    k1: Vec<f64>,
    /// `|ξ|²` in the transposed spectral layout.
    k2: Vec<f64>,
}

impl Spectral {
    pub fn new(grid: &Grid2D) -> Self {
        let n = grid.n();
        let dk = 2.0 * PI / (2.0 * grid.half_width());
        let k: Vec<f64> = (0..n).map(|a| dk * signed_index(a, n) as f64).collect();
        let mut k1 = k.clone();
        k1[n / 2] = 0.0;
        let mut k2 = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                k2[a * n + b] = k[a] * k[a] + k[b] * k[b];
            }
        }
        Self {
            n,
            fft: Fft2d::new(n),
            k1,
            k2,
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// `|ξ|²` per spectral index.
    #[inline]
    pub fn k2(&self) -> &[f64] {
        &self.k2
    }

    pub fn forward_real(&self, f: &[f64]) -> Vec<C64> {
        let mut buf: Vec<C64> = f.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.fft.forward(&mut buf);
        buf
    }

    /// Inverse transform keeping the real part.
    pub fn inverse_real(&self, spec: &[C64]) -> Vec<f64> {
        let mut buf = spec.to_vec();
        self.fft.inverse(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Spectral gradient `(∂ₓf, ∂ᵧf)`, one forward and one inverse FFT.
    pub fn gradient(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let mut s = self.forward_real(f);
        // (i kx + i·i ky) f̂ packs ∂ₓf + i∂ᵧf
        for a in 0..n {
            for b in 0..n {
                let v = s[a * n + b];
                s[a * n + b] = C64::new(-self.k1[b], self.k1[a]) * v;
            }
        }
        self.fft.inverse(&mut s);
        s.into_iter().map(|c| (c.re, c.im)).unzip()
    }

    /// Spectrum of `∂ₓfx + ∂ᵧfy`; both components go through one complex FFT.
    pub fn divergence_hat(&self, fx: &[f64], fy: &[f64]) -> Vec<C64> {
        let n = self.n;
        let mut z: Vec<C64> = fx.iter().zip(fy).map(|(&a, &b)| C64::new(a, b)).collect();
        self.fft.forward(&mut z);
        let mut out = vec![C64::new(0.0, 0.0); n * n];
        for a in 0..n {
            let am = (n - a) % n;
            for b in 0..n {
                let bm = (n - b) % n;
                let zk = z[a * n + b];
                let zm = z[am * n + bm].conj();
                let fxh = (zk + zm) * 0.5;
                let fyh = (zk - zm) * C64::new(0.0, -0.5);
                out[a * n + b] = C64::new(0.0, 1.0) * (fxh * self.k1[a] + fyh * self.k1[b]);
            }
        }
        out
    }

    pub fn fft(&self) -> &Fft2d {
        &self.fft
    }
}
