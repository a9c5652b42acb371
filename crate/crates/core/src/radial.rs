//! Radially symmetric functions on uniform node sets in `r`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::Field2D;
use crate::grid::Grid2D;
use crate::interp::{lagrange_2d, radial_cubic};

// Euler-Maclaurin corrections at r = 0 for an odd integrand F = 2πrφ, with
// F'(0), F'''(0), F⁽⁵⁾(0) taken from the odd quintic through the first three
// nodes; the origin end is then eighth order.
const VERTEX_ORIGIN: [f64; 3] = [7843.0 / 60480.0, -211.0 / 7560.0, 191.0 / 60480.0];
const CELL_ORIGIN: [f64; 3] = [-26279.0 / 241920.0, 4691.0 / 483840.0, -367.0 / 483840.0];

/// Where nodes sit relative to the cells `[(i−1)Δ, iΔ]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadialLayout {
    /// `r_i = iΔ`, `i = 1..=N`; `r_max` is the last node.
    Vertex,
    /// `r_i = (i − ½)Δ`, `i = 1..=N`; `r_max = NΔ` is the outer face.
    Cell,
}

/// Radial nodes with weights for `∫₀^∞ φ(r) 2πr dr`.
///
/// Vertex grids are trapezoidal with a fourth-order Gregory correction at
/// `r_max`; cell grids are midpoint rules whose outer end is uncorrected.
/// Both get high-order corrections at the origin, where `2πrφ` has a
/// nonzero slope. The plain finite-volume cell areas are in
/// [`RadialGrid::volumes`].
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    layout: RadialLayout,
    spacing: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl RadialGrid {
    pub const DEFAULT_NODES: usize = 2048;

    pub fn default_r_max(mass: f64) -> f64 {
        8.0 + 2.0 * mass.max(0.0).sqrt()
    }

    /// The default profile grid: 2048 vertex nodes on `(0, 8 + 2√M]`.
    pub fn for_mass(mass: f64) -> Self {
        Self::vertex(Self::DEFAULT_NODES, Self::default_r_max(mass)).expect("valid default grid")
    }

    pub fn vertex(n: usize, r_max: f64) -> Result<Self> {
        Self::check(n, r_max)?;
        let d = r_max / n as f64;
        let nodes: Vec<f64> = (1..=n).map(|i| i as f64 * d).collect();
        let mut c = vec![1.0; n];
        for (ci, b) in c.iter_mut().zip(VERTEX_ORIGIN) {
            *ci += b;
        }
        c[n - 3] *= 23.0 / 24.0;
        c[n - 2] *= 7.0 / 6.0;
        c[n - 1] = 3.0 / 8.0;
        let weights = nodes
            .iter()
            .zip(&c)
            .map(|(r, c)| 2.0 * PI * r * d * c)
            .collect();
        Ok(Self {
            layout: RadialLayout::Vertex,
            spacing: d,
            nodes,
            weights,
        })
    }

    pub fn cell(n: usize, r_max: f64) -> Result<Self> {
        Self::check(n, r_max)?;
        let d = r_max / n as f64;
        let nodes: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) * d).collect();
        let mut weights: Vec<f64> = nodes.iter().map(|r| 2.0 * PI * r * d).collect();
        for (w, b) in weights.iter_mut().zip(CELL_ORIGIN) {
            *w *= 1.0 + b;
        }
        Ok(Self {
            layout: RadialLayout::Cell,
            spacing: d,
            nodes,
            weights,
        })
    }

    fn check(n: usize, r_max: f64) -> Result<()> {
        if n < 8 {
            return Err(Error::InvalidGrid(format!("radial grid needs >= 8 nodes, got {n}")));
        }
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::InvalidGrid(format!("r_max must be positive, got {r_max}")));
        }
        Ok(())
    }

    #[inline]
    pub fn layout(&self) -> RadialLayout {
        self.layout
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    #[inline]
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Outer edge of the grid.
    pub fn r_max(&self) -> f64 {
        self.spacing * self.len() as f64
    }

    /// Node index offset: `r_i = (i + offset)Δ` for 0-based `i`.
    pub(crate) fn offset(&self) -> f64 {
        match self.layout {
            RadialLayout::Vertex => 1.0,
            RadialLayout::Cell => 0.5,
        }
    }

    /// Finite-volume annulus areas `π(r_{i+½}² − r_{i−½}²) = 2πr_iΔ` of a
    /// cell grid (for vertex grids, the plain trapezoid areas).
    pub fn volumes(&self) -> Vec<f64> {
        self.nodes.iter().map(|r| 2.0 * PI * r * self.spacing).collect()
    }

    /// `Σ w_i φ_i`.
    pub fn integrate(&self, phi: &[f64]) -> f64 {
        self.weights.iter().zip(phi).map(|(w, p)| w * p).sum()
    }

    /// Cumulative integrals `∫₀^{r_i} F(s) ds` of an integrand `F` sampled at
    /// the nodes and odd about `r = 0` (e.g. `F = 2πsφ` for smooth `φ`),
    /// fourth order.
    pub fn cumulative_odd(&self, f: &[f64]) -> Vec<f64> {
        let n = self.len();
        assert_eq!(f.len(), n);
        let d = self.spacing;
        let mut out = Vec::with_capacity(n);
        // first segment from the origin
        let first = match self.layout {
            RadialLayout::Vertex => d / 24.0 * (14.0 * f[0] - f[1]),
            RadialLayout::Cell => d / 192.0 * (51.0 * f[0] - f[1]),
        };
        out.push(first);
        let get = |i: isize| -> f64 {
            if i >= 0 {
                f[i as usize]
            } else {
                // the node just below the first one is its mirror image
                match self.layout {
                    RadialLayout::Vertex => 0.0,
                    RadialLayout::Cell => -f[0],
                }
            }
        };
        let mut acc = first;
        for i in 0..n - 1 {
            let seg = if i + 2 < n {
                let ii = i as isize;
                d / 24.0 * (-get(ii - 1) + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2])
            } else {
                d / 24.0 * (f[i - 2] - 5.0 * f[i - 1] + 19.0 * f[i] + 9.0 * f[i + 1])
            };
            acc += seg;
            out.push(acc);
        }
        out
    }
}

/// Samples of a radial function on a [`RadialGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    rgrid: RadialGrid,
    values: Vec<f64>,
}

impl RadialField {
    pub fn new(rgrid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != rgrid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} radial samples, got {}",
                rgrid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("radial samples"));
        }
        Ok(Self { rgrid, values })
    }

    pub fn from_fn(rgrid: &RadialGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = rgrid.nodes().iter().map(|&r| f(r)).collect();
        Self {
            rgrid: rgrid.clone(),
            values,
        }
    }

    #[inline]
    pub fn rgrid(&self) -> &RadialGrid {
        &self.rgrid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `∫ φ 2πr dr`.
    pub fn integrate(&self) -> f64 {
        self.rgrid.integrate(&self.values)
    }

    /// `∫ φ r^k 2πr dr`.
    pub fn moment(&self, k: f64) -> f64 {
        self.rgrid
            .weights()
            .iter()
            .zip(self.rgrid.nodes())
            .zip(&self.values)
            .map(|((w, r), v)| w * v * r.powf(k))
            .sum()
    }

    /// Enclosed mass `m(r_i) = ∫₀^{r_i} φ 2πs ds` at every node.
    pub fn cumulative_mass(&self) -> Vec<f64> {
        let f: Vec<f64> = self
            .rgrid
            .nodes()
            .iter()
            .zip(&self.values)
            .map(|(r, v)| 2.0 * PI * r * v)
            .collect();
        self.rgrid.cumulative_odd(&f)
    }

    /// Extrapolated value at `r = 0` of an even function: exact node value
    /// matching for `a + br² + cr⁴` through the first three nodes.
    pub fn origin_value(&self) -> f64 {
        let v = &self.values;
        match self.rgrid.layout() {
            RadialLayout::Vertex => 1.5 * v[0] - 0.6 * v[1] + 0.1 * v[2],
            // nodes at Δ/2, 3Δ/2, 5Δ/2
            RadialLayout::Cell => (150.0 * v[0] - 25.0 * v[1] + 3.0 * v[2]) / 128.0,
        }
    }

    /// Cubic interpolation at `r`, continued across the origin with `parity`
    /// (`1.0` for even functions such as densities, `-1.0` for odd ones).
    pub fn interpolate(&self, r: f64, parity: f64) -> Result<f64> {
        let r = r.abs();
        let r_max = self.rgrid.nodes()[self.rgrid.len() - 1];
        if r > r_max * (1.0 + 1e-12) {
            return Err(Error::Extrapolation { r, r_max });
        }
        Ok(radial_cubic(
            &self.values,
            self.rgrid.spacing(),
            self.rgrid.offset(),
            parity,
            r,
        ))
    }

    /// Fourth-order derivative at the nodes, with the function continued
    /// across `r = 0` by `parity`.
    pub fn derivative(&self, parity: f64) -> Vec<f64> {
        let origin = if parity > 0.0 { self.origin_value() } else { 0.0 };
        self.derivative_with_origin(parity, origin)
    }

    /// As [`RadialField::derivative`], with a known value at `r = 0` (only
    /// read on vertex grids).
    pub fn derivative_with_origin(&self, parity: f64, origin: f64) -> Vec<f64> {
        let v = &self.values;
        let n = v.len();
        let d = self.rgrid.spacing();
        let vertex = self.rgrid.layout() == RadialLayout::Vertex;
        let get = |i: isize| -> f64 {
            if i >= 0 {
                v[i as usize]
            } else if vertex {
                match i {
                    -1 => origin,
                    _ => parity * v[(-i - 2) as usize],
                }
            } else {
                parity * v[(-i - 1) as usize]
            }
        };
        (0..n)
            .map(|i| {
                if i + 2 < n {
                    let ii = i as isize;
                    (get(ii - 2) - 8.0 * get(ii - 1) + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * d)
                } else if i + 2 == n {
                    (3.0 * v[i + 1] + 10.0 * v[i] - 18.0 * v[i - 1] + 6.0 * v[i - 2] - v[i - 3])
                        / (12.0 * d)
                } else {
                    (25.0 * v[i] - 48.0 * v[i - 1] + 36.0 * v[i - 2] - 16.0 * v[i - 3]
                        + 3.0 * v[i - 4])
                        / (12.0 * d)
                }
            })
            .collect()
    }
}

/// Samples a radial function on the 2D grid by cubic interpolation in `r`.
pub fn radial_to_2d(g: &RadialField, grid: Grid2D) -> Result<Field2D> {
    let r_max = g.rgrid().nodes()[g.rgrid().len() - 1];
    if grid.max_radius() > r_max {
        return Err(Error::Extrapolation {
            r: grid.max_radius(),
            r_max,
        });
    }
    let mut values = Vec::with_capacity(grid.len());
    for (x, y) in grid.points() {
        values.push(g.interpolate((x * x + y * y).sqrt(), 1.0)?);
    }
    Field2D::from_values(grid, values).map(|f| f.with_label("radial"))
}

/// Angular average of a 2D field at each node of `rgrid`, using eighth-order
/// tensor interpolation along circles.
pub fn radial_project(f: &Field2D, rgrid: &RadialGrid) -> Result<RadialField> {
    let g = f.grid();
    let reach = g.half_width() - 4.0 * g.spacing();
    let r_max = rgrid.nodes()[rgrid.len() - 1];
    if r_max > reach {
        return Err(Error::Extrapolation { r: r_max, r_max: reach });
    }
    let h = g.spacing();
    let values = rgrid
        .nodes()
        .iter()
        .map(|&r| {
            let m = 16 + 4 * (PI * r / h).ceil() as usize;
            let dt = 2.0 * PI / m as f64;
            let s: f64 = (0..m)
                .map(|k| {
                    let (sn, cs) = (k as f64 * dt).sin_cos();
                    lagrange_2d(f, r * cs, r * sn, 8)
                })
                .sum();
            s / m as f64
        })
        .collect();
    RadialField::new(rgrid.clone(), values)
}
