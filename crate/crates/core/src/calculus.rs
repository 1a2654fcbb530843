//! Derivatives in the physical frame and grid quadrature.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField2};
use crate::grid::Grid2D;
use crate::stencil::DiffOps;

pub fn deriv_x(f: &ScalarField) -> Result<ScalarField> {
    let v = DiffOps::new(f.grid()).dx(f.values(), f.t_jump())?;
    ScalarField::new(*f.grid(), v)
}

pub fn deriv_z(f: &ScalarField) -> Result<ScalarField> {
    let v = DiffOps::new(f.grid()).dz(f.values(), f.t_jump())?;
    ScalarField::new(*f.grid(), v)
}

pub fn deriv_xx(f: &ScalarField) -> Result<ScalarField> {
    let v = DiffOps::new(f.grid()).dxx(f.values(), f.t_jump())?;
    ScalarField::new(*f.grid(), v)
}

/// Derivative along the frame normal `ν`.
pub fn deriv_s(f: &ScalarField) -> Result<ScalarField> {
    let v = DiffOps::new(f.grid()).ds(f.values())?;
    ScalarField::new(*f.grid(), v)
}

/// Derivative along the frame tangent `τ`.
pub fn deriv_t(f: &ScalarField) -> Result<ScalarField> {
    let v = DiffOps::new(f.grid()).dt(f.values(), f.t_jump())?;
    ScalarField::new(*f.grid(), v)
}

/// `(∂x u, ∂z u)`.
pub fn gradient(u: &ScalarField) -> Result<VectorField2> {
    let ops = DiffOps::new(u.grid());
    VectorField2::new(*u.grid(), ops.dx(u.values(), u.t_jump())?, ops.dz(u.values(), u.t_jump())?)
}

/// Quadrature weights along `s` and `t`: trapezoid on open axes, rectangle
/// (equal weights) on the periodic one.
pub fn axis_weights(grid: &Grid2D) -> (Vec<f64>, Vec<f64>) {
    let trap = |n: usize, h: f64| {
        let mut w = vec![h; n];
        w[0] = 0.5 * h;
        w[n - 1] = 0.5 * h;
        w
    };
    let ws = trap(grid.n_s, grid.h_s);
    let wt = if grid.periodic_t { vec![grid.h_t; grid.n_t] } else { trap(grid.n_t, grid.h_t) };
    (ws, wt)
}

/// Full tensor-product weight per node, row-major.
pub fn node_weights(grid: &Grid2D) -> Vec<f64> {
    let (ws, wt) = axis_weights(grid);
    ws.iter().flat_map(|a| wt.iter().map(move |b| a * b)).collect()
}

/// Pairwise (tree) summation; the association order depends only on the length.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if v.len() <= LEAF {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Integral of `density(i, j)` with the grid quadrature. Rows are reduced in
/// parallel, each sequentially, and the row totals are combined pairwise, so
/// the result is independent of the thread count.
pub fn integrate_by<F>(grid: &Grid2D, density: F) -> f64
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    let (ws, wt) = axis_weights(grid);
    let rows: Vec<f64> = (0..grid.n_s)
        .into_par_iter()
        .with_min_len(8)
        .map(|i| {
            let mut acc = 0.0;
            for (j, w) in wt.iter().enumerate() {
                acc += w * density(i, j);
            }
            ws[i] * acc
        })
        .collect();
    pairwise_sum(&rows)
}

pub fn integrate(f: &ScalarField) -> f64 {
    let n_t = f.grid().n_t;
    let v = f.values();
    integrate_by(f.grid(), |i, j| v[i * n_t + j])
}

/// Integral restricted to nodes whose frame coordinates `(s, t)` satisfy `keep`.
pub fn integrate_where(f: &ScalarField, keep: impl Fn(f64, f64) -> bool + Sync) -> f64 {
    let g = *f.grid();
    let v = f.values();
    integrate_by(&g, |i, j| if keep(g.s(i), g.t(j)) { v[i * g.n_t + j] } else { 0.0 })
}

pub(crate) fn check_same_grid(a: &Grid2D, b: &Grid2D) -> Result<()> {
    if a.matches(b) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}
