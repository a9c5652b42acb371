//! The operator obtained by linearizing the rescaled equation at `G_M`,
//!
//! ```text
//!   Λh = ∇·(∇h + xh + (∇κ∗G)h + (∇κ∗h)G) = ∇·(G ∇q),   q = h/G + κ∗h,
//! ```
//!
//! restricted to one angular mode `h = h_m(r) cos mθ`.
//!
//! Discretization: conservative finite volumes on a cell-centred radial grid,
//! with face coefficients `r G` taken as geometric means of the neighbouring
//! cells and zero flux through the origin and outer faces. A fixed `m = 0`
//! thereby annihilates `∂G/∂M` exactly and conserves mass. The nonlocal part
//! uses the angular decomposition of `log|x − y|`:
//!
//! ```text
//!   (κ∗h)_m(r) = −(1/2m) ∫₀^∞ (r_< / r_>)^m h_m(s) s ds,   m ≥ 1,
//! ```
//!
//! and the radial log potential for `m = 0`. Matrices are stored in the
//! basis `v = h √(w/G)`, where `w` are the cell areas; there the local
//! part is symmetric and the Euclidean norm is the `L²(G^{−1/2})` norm.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::field::Field2D;
use crate::grid::Grid2D;
use crate::potential::radial_log_potential;
use crate::profile::ProfileResult;
use crate::radial::{radial_to_2d, RadialField, RadialGrid, RadialLayout};

/// A profile is accepted for linearization when its fixed-point residual
/// is below this.
pub const PROFILE_TOL: f64 = 1e-8;

/// Eigenvalues with `|Im λ|` up to this are reported as real.
pub const REALITY_TOL: f64 = 1e-6;

/// Leading-eigenpair residual target.
pub const RESIDUAL_TOL: f64 = 1e-6;

/// The default linearization grid: 600 cells on `(0, 12]`.
pub fn default_linearization_grid() -> RadialGrid {
    RadialGrid::cell(600, 12.0).expect("valid grid")
}

/// `(κ∗h)_m` at the nodes for `h = h_m(r) cos mθ`.
pub fn mode_potential(rg: &RadialGrid, h: &[f64], m: usize) -> Vec<f64> {
    assert_eq!(h.len(), rg.len());
    if m == 0 {
        let f = RadialField::new(rg.clone(), h.to_vec()).expect("finite samples");
        return radial_log_potential(&f).into_values();
    }
    let r = rg.nodes();
    let mi = m as i32;
    let inner: Vec<f64> = r.iter().zip(h).map(|(s, v)| s.powi(mi + 1) * v).collect();
    let outer: Vec<f64> = r.iter().zip(h).map(|(s, v)| s.powi(1 - mi) * v).collect();
    let ci = rg.cumulative_odd(&inner);
    let co = rg.cumulative_odd(&outer);
    let total = co[co.len() - 1];
    let c = -0.5 / m as f64;
    r.iter()
        .zip(ci.iter().zip(&co))
        .map(|(ri, (a, b))| c * (a / ri.powi(mi) + ri.powi(mi) * (total - b)))
        .collect()
}

/// Dense matrix of [`mode_potential`] (column `j` is the image of `e_j`).
pub fn mode_kernel_matrix(rg: &RadialGrid, m: usize) -> DMatrix<f64> {
    let n = rg.len();
    let mut k = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = mode_potential(rg, &e, m);
        k.set_column(j, &DVector::from_vec(col));
        e[j] = 0.0;
    }
    k
}

/// `Λ` restricted to one angular mode, around one profile.
#[derive(Debug, Clone)]
pub struct LinearizedOperator {
    mode: usize,
    mass: f64,
    g: RadialField,
    u: RadialField,
    /// Face coefficients `r_{i+½} √(G_i G_{i+1}) / (r_i Δ²)`, zero at the ends.
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Diagonal of the local operator on `q`, including `−m²G/r²`.
    diag: Vec<f64>,
    scale: Vec<f64>,
    matrix: DMatrix<f64>,
}

impl LinearizedOperator {
    pub fn mode(&self) -> usize {
        self.mode
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn profile(&self) -> &RadialField {
        &self.g
    }

    /// `U = −κ∗G`.
    pub fn potential(&self) -> &RadialField {
        &self.u
    }

    pub fn rgrid(&self) -> &RadialGrid {
        self.g.rgrid()
    }

    /// The operator in the weighted basis `v = Sh`, `S = diag(√(w/G))`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// The basis change `S`.
    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    /// `‖h‖ = (Σ w h² / G)^{1/2}`.
    pub fn weighted_norm(&self, h: &[f64]) -> f64 {
        h.iter()
            .zip(&self.scale)
            .map(|(v, s)| (v * s).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// `⟨a, b⟩ = Σ w a b / G`.
    pub fn weighted_dot(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.scale)
            .map(|((x, y), s)| x * y * s * s)
            .sum()
    }

    /// `Λh` in plain coordinates, matrix-free.
    pub fn apply(&self, h: &[f64]) -> Vec<f64> {
        let rg = self.g.rgrid();
        let k = mode_potential(rg, h, self.mode);
        let q: Vec<f64> = h
            .iter()
            .zip(self.g.values())
            .zip(&k)
            .map(|((hi, gi), ki)| hi / gi + ki)
            .collect();
        self.apply_local(&q)
    }

    fn apply_local(&self, q: &[f64]) -> Vec<f64> {
        let n = q.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * q[i];
                if i > 0 {
                    v += self.lower[i] * q[i - 1];
                }
                if i + 1 < n {
                    v += self.upper[i] * q[i + 1];
                }
                v
            })
            .collect()
    }

    /// `‖Λh − λh‖ / ‖h‖` in the weighted norm.
    pub fn relative_residual(&self, h: &[f64], lambda: f64) -> f64 {
        let lh = self.apply(h);
        let r: Vec<f64> = lh.iter().zip(h).map(|(a, b)| a - lambda * b).collect();
        self.weighted_norm(&r) / self.weighted_norm(h)
    }
}

/// Assembles mode `m` of `Λ` around a converged profile on a cell grid.
pub fn assemble_linearized(profile: &ProfileResult, m: usize) -> Result<LinearizedOperator> {
    let rg = profile.rgrid();
    if rg.layout() != RadialLayout::Cell {
        return Err(Error::InvalidArgument(
            "the linearized operator is discretized on cell-centred radial grids".into(),
        ));
    }
    if !(profile.residual_l1 <= PROFILE_TOL) {
        return Err(Error::InvalidArgument(format!(
            "profile not converged: residual {:e} > {PROFILE_TOL:e}",
            profile.residual_l1
        )));
    }
    let g = profile.g.values();
    if g.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidArgument(
            "profile underflows on the grid; reduce r_max".into(),
        ));
    }
    let n = rg.len();
    let d = rg.spacing();
    let r = rg.nodes();
    // Face coefficients a_{i+½} = r_{i+½} √(G_i G_{i+1}); a_{½} = a_{N+½} = 0.
    let face: Vec<f64> = (0..n - 1)
        .map(|i| (i + 1) as f64 * d * (g[i] * g[i + 1]).sqrt())
        .collect();
    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let m2 = (m * m) as f64;
    for i in 0..n {
        let c = 1.0 / (r[i] * d * d);
        if i > 0 {
            lower[i] = c * face[i - 1];
        }
        if i + 1 < n {
            upper[i] = c * face[i];
        }
        diag[i] = -(lower[i] + upper[i]) - m2 * g[i] / (r[i] * r[i]);
    }
    let scale: Vec<f64> = rg.volumes().iter().zip(g).map(|(w, gi)| (w / gi).sqrt()).collect();

    // Q = diag(1/G) + K in the basis h = diag(1/S) v, then A = L Q.
    let mut q = mode_kernel_matrix(rg, m);
    for j in 0..n {
        let sj = 1.0 / scale[j];
        for i in 0..n {
            q[(i, j)] *= sj;
        }
        q[(j, j)] += sj / g[j];
    }
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut row = q.row(i) * diag[i];
        if i > 0 {
            row += q.row(i - 1) * lower[i];
        }
        if i + 1 < n {
            row += q.row(i + 1) * upper[i];
        }
        a.set_row(i, &(row * scale[i]));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("linearized operator"));
    }
    Ok(LinearizedOperator {
        mode: m,
        mass: profile.mass,
        g: profile.g.clone(),
        u: profile.u.clone(),
        lower,
        upper,
        diag,
        scale,
        matrix: a,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub imag: f64,
    /// Unit weighted norm, sign fixed by a positive weighted sum; `None` for
    /// eigenvalues flagged complex.
    pub vector: Option<RadialField>,
    /// `‖Λv − λv‖/‖v‖`; NaN without a vector.
    pub residual: f64,
}

impl EigenPair {
    pub fn is_real(&self) -> bool {
        self.imag.abs() <= REALITY_TOL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub mode: usize,
    pub mass: f64,
    /// The requested rightmost pairs, by real part descending.
    pub pairs: Vec<EigenPair>,
    /// The whole discrete spectrum, by real part descending.
    pub spectrum: Vec<Complex<f64>>,
}

impl SpectrumResult {
    pub fn values(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.value).collect()
    }

    pub fn all_real(&self) -> bool {
        self.pairs.iter().all(EigenPair::is_real)
    }

    pub fn max_residual(&self) -> f64 {
        self.pairs.iter().map(|p| p.residual).fold(0.0, f64::max)
    }
}

/// The `count` rightmost eigenpairs by a dense Schur decomposition,
/// eigenvectors by shifted inverse iteration.
pub fn eigen_spectrum(op: &LinearizedOperator, count: usize) -> Result<SpectrumResult> {
    let a = op.matrix();
    let n = a.nrows();
    let schur = nalgebra::linalg::Schur::try_new(a.clone(), 1e-14, 100 * n)
        .ok_or_else(|| Error::Eigen("Schur iteration did not converge".into()))?;
    let mut spectrum: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
    if spectrum.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Eigen("non-finite eigenvalue".into()));
    }
    spectrum.sort_by(|x, y| y.re.total_cmp(&x.re));
    let mut pairs = Vec::with_capacity(count.min(n));
    let mut k = 0;
    while pairs.len() < count.min(n) && k < n {
        let z = spectrum[k];
        k += 1;
        if z.im.abs() > REALITY_TOL {
            pairs.push(EigenPair {
                value: z.re,
                imag: z.im,
                vector: None,
                residual: f64::NAN,
            });
            // skip the conjugate
            if k < n && (spectrum[k] - z.conj()).norm() <= 1e-8 * (1.0 + z.norm()) {
                k += 1;
            }
            continue;
        }
        let (v, residual) = inverse_iteration(a, z.re)?;
        let mut h: Vec<f64> = v.iter().zip(op.scale()).map(|(x, s)| x / s).collect();
        let sign: f64 = v.iter().zip(op.scale()).map(|(x, s)| x * s).sum::<f64>();
        let sign = if sign < 0.0 { -1.0 } else if sign > 0.0 { 1.0 } else { first_sign(&h) };
        h.iter_mut().for_each(|x| *x *= sign);
        pairs.push(EigenPair {
            value: z.re,
            imag: z.im,
            vector: Some(RadialField::new(op.rgrid().clone(), h)?),
            residual,
        });
    }
    Ok(SpectrumResult {
        mode: op.mode(),
        mass: op.mass(),
        pairs,
        spectrum,
    })
}

fn first_sign(h: &[f64]) -> f64 {
    let big = h.iter().copied().fold(0.0_f64, |a, b| if b.abs() > a.abs() { b } else { a });
    if big < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Unit eigenvector of `a` for the real eigenvalue `lambda`; returns it with
/// its relative residual.
fn inverse_iteration(a: &DMatrix<f64>, lambda: f64) -> Result<(DVector<f64>, f64)> {
    let n = a.nrows();
    let shift = lambda + 1e-10 * (1.0 + lambda.abs());
    let mut m = a.clone();
    for i in 0..n {
        m[(i, i)] -= shift;
    }
    let lu = m.lu();
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.5 * ((i as f64) * 0.7).sin());
    v /= v.norm();
    let mut residual = f64::INFINITY;
    for _ in 0..8 {
        let mut w = lu
            .solve(&v)
            .ok_or_else(|| Error::Eigen("singular shifted matrix".into()))?;
        let nw = w.norm();
        if !(nw.is_finite() && nw > 0.0) {
            return Err(Error::Eigen("inverse iteration broke down".into()));
        }
        w /= nw;
        v = w;
        residual = (a * &v - &v * lambda).norm();
        if residual <= 1e-3 * RESIDUAL_TOL {
            break;
        }
    }
    Ok((v, residual))
}

/// The null vector of the mode-0 operator, normalized to unit mass: the
/// discrete `h₀,₀ = ∂G/∂M`. Solves `h/G + κ∗h = 1`.
pub fn null_mode(profile: &ProfileResult) -> Result<RadialField> {
    let rg = profile.rgrid();
    let g = profile.g.values();
    let n = rg.len();
    // h = G y:  (I + K diag(G)) y = 1
    let mut a = mode_kernel_matrix(rg, 0);
    for j in 0..n {
        for i in 0..n {
            a[(i, j)] *= g[j];
        }
        a[(j, j)] += 1.0;
    }
    let y = a
        .lu()
        .solve(&DVector::from_element(n, 1.0))
        .ok_or_else(|| Error::Eigen("singular null-mode system".into()))?;
    let h: Vec<f64> = y.iter().zip(g).map(|(y, g)| y * g).collect();
    let mass = rg.integrate(&h);
    if !(mass.abs() > 0.0) {
        return Err(Error::Eigen("null mode has zero mass".into()));
    }
    RadialField::new(rg.clone(), h.into_iter().map(|v| v / mass).collect())
}

/// Projections onto `vect(h₀,₀)` and `vect(∂₁G, ∂₂G)` on a 2D grid.
///
/// `Π₀h = M(h) h₀,₀` and `Π₁h = Σ cᵢ ∂ᵢG` with `cᵢ` matching the first
/// moments of `h`. Both are built from discrete quadratures on the grid, so
/// they are projections to rounding error.
#[derive(Debug, Clone)]
pub struct Projector {
    h00: RadialField,
    h00_2d: Field2D,
    dg: RadialField,
    h1: [Field2D; 2],
    /// `b[i][j] = ∫ ∂ᵢG xⱼ`.
    b: [[f64; 2]; 2],
}

impl Projector {
    pub fn new(profile: &ProfileResult, grid: Grid2D) -> Result<Self> {
        let h00 = null_mode(profile)?;
        let mut h00_2d = radial_to_2d(&h00, grid)?;
        let m = h00_2d.integrate();
        h00_2d.scale(1.0 / m);
        let rg = profile.rgrid();
        let dg = RadialField::new(rg.clone(), profile.g.derivative(1.0))?;
        // G'(r)/r is even and smooth.
        let over_r = RadialField::new(
            rg.clone(),
            dg.values().iter().zip(rg.nodes()).map(|(d, r)| d / r).collect(),
        )?;
        let base = radial_to_2d(&over_r, grid)?;
        let mut hx = base.clone();
        let mut hy = base;
        let points: Vec<(f64, f64)> = grid.points().collect();
        for (k, (x, y)) in points.into_iter().enumerate() {
            hx.values_mut()[k] *= x;
            hy.values_mut()[k] *= y;
        }
        let mx = hx.first_moments();
        let my = hy.first_moments();
        Ok(Self {
            h00,
            h00_2d,
            dg,
            h1: [hx, hy],
            b: [mx, my],
        })
    }

    /// The discrete `h₀,₀` (unit mass).
    pub fn h00(&self) -> &RadialField {
        &self.h00
    }

    /// `G'`, the radial part of `∂ᵢG = G'(r) xᵢ/r`.
    pub fn profile_derivative(&self) -> &RadialField {
        &self.dg
    }

    /// `∂₁G` (`i = 0`) or `∂₂G` (`i = 1`) on the grid.
    pub fn h1(&self, i: usize) -> &Field2D {
        &self.h1[i]
    }

    pub fn grid(&self) -> &Grid2D {
        self.h00_2d.grid()
    }

    /// `Π₀h`.
    pub fn pi0(&self, h: &Field2D) -> Result<Field2D> {
        h.ensure_same_grid(&self.h00_2d)?;
        Ok(self.h00_2d.scaled(h.integrate()))
    }

    /// The coefficients `(c₁, c₂)` of `Π₁h`.
    pub fn pi1_coefficients(&self, h: &Field2D) -> Result<[f64; 2]> {
        h.ensure_same_grid(&self.h00_2d)?;
        let [m1, m2] = h.first_moments();
        // Σᵢ cᵢ b[i][j] = m_j
        let b = &self.b;
        let det = b[0][0] * b[1][1] - b[1][0] * b[0][1];
        Ok([
            (m1 * b[1][1] - m2 * b[1][0]) / det,
            (m2 * b[0][0] - m1 * b[0][1]) / det,
        ])
    }

    /// `Π₁h`.
    pub fn pi1(&self, h: &Field2D) -> Result<Field2D> {
        let [c1, c2] = self.pi1_coefficients(h)?;
        self.h1[0].scaled(c1).axpy(c2, &self.h1[1])
    }

    /// `h − Π₀h − Π₁h`.
    pub fn complement(&self, h: &Field2D) -> Result<Field2D> {
        h.axpy(-1.0, &self.pi0(h)?)?.axpy(-1.0, &self.pi1(h)?)
    }

    /// `Π₀` of a radial function: `M(h) h₀,₀`.
    pub fn pi0_radial(&self, h: &RadialField) -> Result<RadialField> {
        if h.rgrid() != self.h00.rgrid() {
            return Err(Error::GridMismatch);
        }
        let m = h.integrate();
        RadialField::new(
            h.rgrid().clone(),
            self.h00.values().iter().map(|v| m * v).collect(),
        )
    }

    /// `Π₁` of a mode-1 function `h₁(r) cos θ`, returned as its radial part
    /// `c G'`.
    pub fn pi1_mode1(&self, h1: &RadialField) -> Result<RadialField> {
        if h1.rgrid() != self.dg.rgrid() {
            return Err(Error::GridMismatch);
        }
        let c = h1.moment(1.0) / self.dg.moment(1.0);
        RadialField::new(
            h1.rgrid().clone(),
            self.dg.values().iter().map(|v| c * v).collect(),
        )
    }
}

/// The eigenvalues `−(m + 2j)` of the Ornstein-Uhlenbeck (`M = 0`) mode-`m`
/// operator.
pub fn ou_eigenvalues(m: usize, count: usize) -> Vec<f64> {
    (0..count).map(|j| -((m + 2 * j) as f64)).collect()
}

/// Cosine `⟨a, b⟩/(‖a‖‖b‖)` in the weighted inner product of `op`.
pub fn weighted_cosine(op: &LinearizedOperator, a: &[f64], b: &[f64]) -> f64 {
    op.weighted_dot(a, b) / (op.weighted_norm(a) * op.weighted_norm(b))
}
