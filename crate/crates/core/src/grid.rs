use crate::error::{Error, Result};

/// Uniform square grid of `n × n` cells covering `[-L, L]²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    n: usize,
    half_width: f64,
    h: f64,
}

pub fn make_grid(n: usize, half_width: f64) -> Result<Grid2D> {
    Grid2D::new(n, half_width)
}

impl Grid2D {
    pub const MIN_CELLS: usize = 16;

    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < Self::MIN_CELLS || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n = {n} must be a power of two >= {}",
                Self::MIN_CELLS
            )));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive and finite, got {half_width}"
            )));
        }
        Ok(Self {
            n,
            half_width,
            h: 2.0 * half_width / n as f64,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Area of one cell, `h²`.
    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Centre coordinate of cell index `i` along either axis.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.h
    }

    /// Cell-centre coordinates along one axis.
    pub fn axis(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }

    /// Row-major flat index; `i` runs along x, `j` along y.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    /// Iterator over `(x, y)` of all cell centres in storage order.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.n).flat_map(move |j| {
            let y = self.coord(j);
            (0..self.n).map(move |i| (self.coord(i), y))
        })
    }

    /// Largest distance from the origin to a cell centre.
    pub fn max_radius(&self) -> f64 {
        let c = self.coord(self.n - 1);
        (2.0 * c * c).sqrt()
    }
}
