//! Polynomial interpolation on uniform node sets.

use crate::field::Field2D;

/// Lagrange basis weights for nodes `0, 1, .., w.len()-1` evaluated at `t`.
fn lagrange_weights(t: f64, w: &mut [f64]) {
    let p = w.len();
    for (k, wk) in w.iter_mut().enumerate() {
        let mut v = 1.0;
        for m in 0..p {
            if m != k {
                v *= (t - m as f64) / (k as f64 - m as f64);
            }
        }
        *wk = v;
    }
}

/// First stencil index and local coordinate for a `p`-point stencil around
/// fractional index `s` on `0..n`.
fn stencil(s: f64, p: usize, n: usize) -> (usize, f64) {
    let lo = (s.floor() as isize) - (p as isize / 2 - 1);
    let lo = lo.clamp(0, (n - p) as isize) as usize;
    (lo, s - lo as f64)
}

/// Tensor-product Lagrange interpolation of a grid field at `(x, y)`, with
/// a `p`-point stencil per axis (`p` even, `p ≤ n`).
///
/// Points outside `[-L, L]²` return 0: fields are densities in free space
/// that have decayed before the box edge.
pub fn lagrange_2d(f: &Field2D, x: f64, y: f64, p: usize) -> f64 {
    let g = f.grid();
    let l = g.half_width();
    if x.abs() > l || y.abs() > l {
        return 0.0;
    }
    let n = g.n();
    let h = g.spacing();
    let (sx, sy) = ((x + l) / h - 0.5, (y + l) / h - 0.5);
    let (ix, tx) = stencil(sx, p, n);
    let (iy, ty) = stencil(sy, p, n);
    let mut wx = [0.0; 16];
    let mut wy = [0.0; 16];
    lagrange_weights(tx, &mut wx[..p]);
    lagrange_weights(ty, &mut wy[..p]);
    let v = f.values();
    let mut acc = 0.0;
    for (b, wyb) in wy[..p].iter().enumerate() {
        let row = &v[(iy + b) * n + ix..(iy + b) * n + ix + p];
        let r: f64 = row.iter().zip(&wx[..p]).map(|(a, w)| a * w).sum();
        acc += wyb * r;
    }
    acc
}

/// Four-point Lagrange interpolation on uniform radial nodes
/// `r_i = (i + offset)Δ`, `i = 0..n`, continued across the origin with the
/// given parity (`+1` even, `-1` odd) so that no one-sided stencil is needed
/// near `r = 0`. For `offset = 1` the origin is not a node; the mirrored
/// stencil simply skips it.
pub(crate) fn radial_cubic(values: &[f64], spacing: f64, offset: f64, parity: f64, r: f64) -> f64 {
    let n = values.len() as isize;
    let vertex = offset == 1.0;
    debug_assert!(vertex || offset == 0.5);
    // stencil positions are (k + offset)Δ for consecutive integers k
    let s = r / spacing - offset;
    let lo = (s.floor() as isize - 1).min(n - 4);
    let mut ks = [lo, lo + 1, lo + 2, lo + 3];
    if vertex {
        // k = -1 is r = 0: shift everything at or below it down by one
        if let Some(z) = ks.iter().position(|&k| k == -1) {
            for k in ks[..=z].iter_mut() {
                *k -= 1;
            }
        }
    }
    let mut pos = [0.0; 4];
    let mut val = [0.0; 4];
    for (j, &k) in ks.iter().enumerate() {
        pos[j] = (k as f64 + offset) * spacing;
        val[j] = if k >= 0 {
            values[k as usize]
        } else {
            // (k + offset)Δ mirrors to (-k - 2·offset + offset)Δ
            let m = (-k as f64 - 2.0 * offset).round() as usize;
            parity * values[m]
        };
    }
    let mut acc = 0.0;
    for j in 0..4 {
        let mut w = 1.0;
        for m in 0..4 {
            if m != j {
                w *= (r - pos[m]) / (pos[j] - pos[m]);
            }
        }
        acc += w * val[j];
    }
    acc
}
