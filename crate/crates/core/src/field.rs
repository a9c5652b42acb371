use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::Grid2D;

/// Scalar samples at the cell centres of a [`Grid2D`], row-major.
#[derive(Clone, PartialEq)]
pub struct Field2D {
    grid: Grid2D,
    values: Vec<f64>,
    pub label: String,
}

// summary only: a full dump would be n² numbers inside every error message
impl std::fmt::Debug for Field2D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Field2D")
            .field("grid", &self.grid)
            .field("label", &self.label)
            .field("mass", &self.integrate())
            .field("linf", &self.linf_norm())
            .finish()
    }
}

impl Field2D {
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
            label: String::new(),
        }
    }

    pub fn from_values(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field samples"));
        }
        Ok(Self {
            grid,
            values,
            label: String::new(),
        })
    }

    /// Samples `f(x, y)` at every cell centre.
    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = grid.points().map(|(x, y)| f(x, y)).collect();
        Self {
            grid,
            values,
            label: String::new(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    #[inline]
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn ensure_same_grid(&self, other: &Field2D) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Midpoint quadrature `h² Σ f`.
    pub fn integrate(&self) -> f64 {
        self.grid.cell_area() * self.values.iter().sum::<f64>()
    }

    /// `h² Σ f |x|^k`.
    pub fn moment(&self, k: f64) -> f64 {
        if k == 0.0 {
            return self.integrate();
        }
        let s: f64 = self
            .grid
            .points()
            .zip(&self.values)
            .map(|((x, y), v)| v * (x * x + y * y).powf(0.5 * k))
            .sum();
        self.grid.cell_area() * s
    }

    /// `(∫ f x, ∫ f y)`.
    pub fn first_moments(&self) -> [f64; 2] {
        let (mut sx, mut sy) = (0.0, 0.0);
        for ((x, y), v) in self.grid.points().zip(&self.values) {
            sx += v * x;
            sy += v * y;
        }
        let a = self.grid.cell_area();
        [a * sx, a * sy]
    }

    /// Weighted norm `‖f ⟨x⟩^k‖_p` with `⟨x⟩ = (1 + |x|²)^{1/2}`.
    pub fn lp_norm(&self, p: f64, k: f64) -> f64 {
        assert!(p >= 1.0, "lp_norm needs p >= 1, got {p}");
        let s: f64 = if k == 0.0 {
            self.values.iter().map(|v| v.abs().powf(p)).sum()
        } else {
            self.grid
                .points()
                .zip(&self.values)
                .map(|((x, y), v)| (v.abs() * (1.0 + x * x + y * y).powf(0.5 * k)).powf(p))
                .sum()
        };
        (self.grid.cell_area() * s).powf(1.0 / p)
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn scale(&mut self, c: f64) {
        self.values.iter_mut().for_each(|v| *v *= c);
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.scale(c);
        out
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: f64, other: &Field2D) -> Result<Self> {
        self.ensure_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + c * b)
            .collect();
        Ok(Self {
            grid: self.grid,
            values,
            label: self.label.clone(),
        })
    }

    /// `‖self − other‖_p` (unweighted when `k = 0`).
    pub fn distance(&self, other: &Field2D, p: f64, k: f64) -> Result<f64> {
        Ok(self.axpy(-1.0, other)?.lp_norm(p, k))
    }
}

/// Mass-`M` isotropic Gaussian of width `σ` centred at `center`.
///
/// The centre must sit at least `6σ` inside every edge so the truncated tail
/// stays below the conservation tolerances.
pub fn gaussian_datum(grid: Grid2D, mass: f64, sigma: f64, center: [f64; 2]) -> Result<Field2D> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::InvalidArgument(format!("mass must be positive, got {mass}")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    let l = grid.half_width();
    let margin = 6.0 * sigma;
    for (axis, c) in ["x", "y"].iter().zip(center) {
        if c - margin < -l || c + margin > l {
            return Err(Error::Margin(format!(
                "centre {axis} = {c} with 6σ = {margin} leaves [-{l}, {l}]"
            )));
        }
    }
    let norm = mass / (2.0 * PI * sigma * sigma);
    let inv = 1.0 / (2.0 * sigma * sigma);
    let [cx, cy] = center;
    Ok(Field2D::from_fn(grid, |x, y| {
        let d2 = (x - cx).powi(2) + (y - cy).powi(2);
        norm * (-d2 * inv).exp()
    })
    .with_label(format!("gaussian M={mass} sigma={sigma} center=({cx},{cy})")))
}
