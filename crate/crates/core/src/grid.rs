//! Structured rectangular grid with node-centered fields and the discrete
//! calculus (gradient, divergence, curl, trapezoid quadrature) every other
//! module builds on.
//!
//! Derivatives are second-order centered stencils in the interior and
//! second-order one-sided stencils on the boundary rows, so fields that live
//! on the boundary (tangential test fields in particular) lose no accuracy
//! there. All operators are exact on affine fields.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid bounds must be ordered: got x [{0}, {1}], y [{2}, {3}]")]
    BadBounds(f64, f64, f64, f64),
    #[error("need at least 8 cells per axis, got nx={0}, ny={1}")]
    TooCoarse(usize, usize),
    #[error("value count {got} does not match grid with {want} nodes")]
    CountMismatch { got: usize, want: usize },
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
    #[error("fields live on different grids")]
    GridMismatch,
}

/// Axis-aligned rectangle `[x_min, x_max] x [y_min, y_max]` with `nx` by `ny`
/// cells. Nodes sit at cell corners, `(nx+1)*(ny+1)` of them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    pub fn new(
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        nx: usize,
        ny: usize,
    ) -> Result<Self, GridError> {
        if !(x_min < x_max && y_min < y_max)
            || !x_min.is_finite()
            || !x_max.is_finite()
            || !y_min.is_finite()
            || !y_max.is_finite()
        {
            return Err(GridError::BadBounds(x_min, x_max, y_min, y_max));
        }
        if nx < 8 || ny < 8 {
            return Err(GridError::TooCoarse(nx, ny));
        }
        Ok(Grid {
            x_min,
            x_max,
            y_min,
            y_max,
            nx,
            ny,
        })
    }

    /// The square `(-l, l)^2` with `n` cells per side.
    pub fn square(l: f64, n: usize) -> Self {
        Grid::new(-l, l, -l, l, n, n).expect("square grid parameters")
    }

    pub fn hx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        (self.y_max - self.y_min) / self.ny as f64
    }

    /// Node count along x.
    pub fn npx(&self) -> usize {
        self.nx + 1
    }

    /// Node count along y.
    pub fn npy(&self) -> usize {
        self.ny + 1
    }

    pub fn num_nodes(&self) -> usize {
        self.npx() * self.npy()
    }

    /// Flat index of node `(ix, iy)`. Row-major with x running fastest.
    #[inline]
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        iy * self.npx() + ix
    }

    #[inline]
    pub fn x(&self, ix: usize) -> f64 {
        self.x_min + ix as f64 * self.hx()
    }

    #[inline]
    pub fn y(&self, iy: usize) -> f64 {
        self.y_min + iy as f64 * self.hy()
    }

    pub fn node_xy(&self, k: usize) -> (f64, f64) {
        let ix = k % self.npx();
        let iy = k / self.npx();
        (self.x(ix), self.y(iy))
    }

    #[inline]
    pub fn is_boundary(&self, ix: usize, iy: usize) -> bool {
        ix == 0 || iy == 0 || ix == self.nx || iy == self.ny
    }

    /// True when the node is at least `margin` cells away from every side.
    #[inline]
    pub fn in_interior(&self, ix: usize, iy: usize, margin: usize) -> bool {
        ix >= margin && iy >= margin && ix + margin <= self.nx && iy + margin <= self.ny
    }

    /// Trapezoid weight of node `(ix, iy)`, including the `hx*hy` cell area.
    #[inline]
    pub fn quad_weight(&self, ix: usize, iy: usize) -> f64 {
        let wx = if ix == 0 || ix == self.nx { 0.5 } else { 1.0 };
        let wy = if iy == 0 || iy == self.ny { 0.5 } else { 1.0 };
        wx * wy * self.hx() * self.hy()
    }
}

/// Real values at grid nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        ScalarField {
            grid,
            values: vec![0.0; grid.num_nodes()],
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        ScalarField {
            grid,
            values: vec![c; grid.num_nodes()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.num_nodes());
        for iy in 0..grid.npy() {
            let y = grid.y(iy);
            for ix in 0..grid.npx() {
                values.push(f(grid.x(ix), y));
            }
        }
        ScalarField { grid, values }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.num_nodes() {
            return Err(GridError::CountMismatch {
                got: values.len(),
                want: grid.num_nodes(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(k));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.grid.idx(ix, iy)]
    }

    #[inline]
    pub fn set(&mut self, ix: usize, iy: usize, v: f64) {
        let k = self.grid.idx(ix, iy);
        self.values[k] = v;
    }

    /// Composite trapezoid rule over the rectangle. Exact for bilinear
    /// integrands. Errors on non-finite values.
    pub fn integrate(&self) -> Result<f64, GridError> {
        if let Some(k) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(k));
        }
        let g = &self.grid;
        let mut total = 0.0;
        // Separable weights: accumulate rows, halving the first and last.
        for iy in 0..g.npy() {
            let row = &self.values[iy * g.npx()..(iy + 1) * g.npx()];
            let mut s = 0.5 * (row[0] + row[g.nx]);
            for v in &row[1..g.nx] {
                s += v;
            }
            let wy = if iy == 0 || iy == g.ny { 0.5 } else { 1.0 };
            total += wy * s;
        }
        Ok(total * g.hx() * g.hy())
    }

    /// d/dx with centered interior stencil and one-sided boundary rows.
    pub fn dx(&self) -> ScalarField {
        let g = &self.grid;
        let (npx, npy, nx) = (g.npx(), g.npy(), g.nx);
        let c = 1.0 / (2.0 * g.hx());
        let mut out = vec![0.0; self.values.len()];
        for iy in 0..npy {
            let row = &self.values[iy * npx..(iy + 1) * npx];
            let orow = &mut out[iy * npx..(iy + 1) * npx];
            orow[0] = (-3.0 * row[0] + 4.0 * row[1] - row[2]) * c;
            for ix in 1..nx {
                orow[ix] = (row[ix + 1] - row[ix - 1]) * c;
            }
            orow[nx] = (3.0 * row[nx] - 4.0 * row[nx - 1] + row[nx - 2]) * c;
        }
        ScalarField {
            grid: self.grid,
            values: out,
        }
    }

    /// d/dy, same stencils as `dx`.
    pub fn dy(&self) -> ScalarField {
        let g = &self.grid;
        let (npx, ny) = (g.npx(), g.ny);
        let c = 1.0 / (2.0 * g.hy());
        let mut out = vec![0.0; self.values.len()];
        for ix in 0..npx {
            out[ix] = (-3.0 * self.values[ix] + 4.0 * self.values[npx + ix]
                - self.values[2 * npx + ix])
                * c;
            let top = ny * npx + ix;
            out[top] = (3.0 * self.values[top]
                - 4.0 * self.values[top - npx]
                + self.values[top - 2 * npx])
                * c;
        }
        for iy in 1..ny {
            for ix in 0..npx {
                let k = iy * npx + ix;
                out[k] = (self.values[k + npx] - self.values[k - npx]) * c;
            }
        }
        ScalarField {
            grid: self.grid,
            values: out,
        }
    }

    pub fn grad(&self) -> VectorField {
        VectorField {
            x: self.dx(),
            y: self.dy(),
        }
    }

    /// Rotated gradient (-df/dy, df/dx).
    pub fn perp_grad(&self) -> VectorField {
        let mut mdy = self.dy();
        for v in mdy.values_mut() {
            *v = -*v;
        }
        VectorField {
            x: mdy,
            y: self.dx(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// In-place `self += c * other`. Panics on grid mismatch.
    pub fn axpy(&mut self, c: f64, other: &ScalarField) {
        assert_eq!(self.grid, other.grid, "axpy needs matching grids");
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }
}

/// Two real component arrays on a shared grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub x: ScalarField,
    pub y: ScalarField,
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        VectorField {
            x: ScalarField::zeros(grid),
            y: ScalarField::zeros(grid),
        }
    }

    pub fn from_fns(
        grid: Grid,
        fx: impl Fn(f64, f64) -> f64,
        fy: impl Fn(f64, f64) -> f64,
    ) -> Self {
        VectorField {
            x: ScalarField::from_fn(grid, fx),
            y: ScalarField::from_fn(grid, fy),
        }
    }

    pub fn new(x: ScalarField, y: ScalarField) -> Result<Self, GridError> {
        if x.grid() != y.grid() {
            return Err(GridError::GridMismatch);
        }
        Ok(VectorField { x, y })
    }

    pub fn grid(&self) -> Grid {
        self.x.grid()
    }

    /// dv2/dx - dv1/dy.
    pub fn curl(&self) -> ScalarField {
        let mut out = self.y.dx();
        out.axpy(-1.0, &self.x.dy());
        out
    }

    pub fn div(&self) -> ScalarField {
        let mut out = self.x.dx();
        out.axpy(1.0, &self.y.dy());
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.x.max_abs().max(self.y.max_abs())
    }
}
