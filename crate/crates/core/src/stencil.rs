//! Sparse one-dimensional difference matrices and their tensor-product
//! action on row-major grid data.
//!
//! Every 2D operator used by the energy is a sum of Kronecker products of
//! a 1D operator along `s` with a 1D operator along `t`, so exact adjoints
//! come for free by transposing the 1D factors.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid2D;

/// Rows below this many values are processed without rayon.
const PAR_MIN_ROWS: usize = 8;

/// CSR matrix acting along one axis.
///
/// `jump_coef[r]` is the coefficient of the per-period increment picked up
/// by row `r` when its stencil wraps around a periodic axis.
#[derive(Debug, Clone)]
pub struct AxisOp {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    jump_coef: Vec<f64>,
}

impl AxisOp {
    fn from_rows(n: usize, rows: Vec<Vec<(isize, f64)>>, periodic: bool) -> Self {
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut jump_coef = vec![0.0; n];
        for (r, row) in rows.into_iter().enumerate() {
            for (k, c) in row {
                let (col, wrap) = if periodic {
                    let wrap = k.div_euclid(n as isize);
                    (k.rem_euclid(n as isize) as usize, wrap)
                } else {
                    (k as usize, 0)
                };
                cols.push(col);
                vals.push(c);
                jump_coef[r] += c * wrap as f64;
            }
            row_ptr.push(cols.len());
        }
        AxisOp { n, row_ptr, cols, vals, jump_coef }
    }

    /// Central first difference; one-sided second-order at open ends.
    pub fn first(n: usize, h: f64, periodic: bool) -> Result<Self> {
        if n < 3 {
            return Err(Error::GridTooCoarse { axis: "first derivative", n, min: 3 });
        }
        let c = 0.5 / h;
        let rows = (0..n as isize)
            .map(|i| {
                if periodic || (i > 0 && i < n as isize - 1) {
                    vec![(i - 1, -c), (i + 1, c)]
                } else if i == 0 {
                    vec![(0, -3.0 * c), (1, 4.0 * c), (2, -c)]
                } else {
                    vec![(i - 2, c), (i - 1, -4.0 * c), (i, 3.0 * c)]
                }
            })
            .collect();
        Ok(Self::from_rows(n, rows, periodic))
    }

    /// Three-point second difference; one-sided four-point at open ends
    /// (falls back to the three-point stencil when only three samples exist).
    pub fn second(n: usize, h: f64, periodic: bool) -> Result<Self> {
        if n < 3 {
            return Err(Error::GridTooCoarse { axis: "second derivative", n, min: 3 });
        }
        let c = 1.0 / (h * h);
        let last = n as isize - 1;
        let rows = (0..n as isize)
            .map(|i| {
                if periodic || (i > 0 && i < last) {
                    vec![(i - 1, c), (i, -2.0 * c), (i + 1, c)]
                } else if n == 3 {
                    vec![(0, c), (1, -2.0 * c), (2, c)]
                } else if i == 0 {
                    vec![(0, 2.0 * c), (1, -5.0 * c), (2, 4.0 * c), (3, -c)]
                } else {
                    vec![(i - 3, -c), (i - 2, 4.0 * c), (i - 1, -5.0 * c), (i, 2.0 * c)]
                }
            })
            .collect();
        Ok(Self::from_rows(n, rows, periodic))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Nonzeros of row `r` as `(column, value)`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn transpose(&self) -> AxisOp {
        let mut rows: Vec<Vec<(isize, f64)>> = vec![Vec::new(); self.n];
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                rows[c].push((r as isize, v));
            }
        }
        for row in &mut rows {
            row.sort_by_key(|e| e.0);
        }
        Self::from_rows(self.n, rows, false)
    }

    /// `out[i, :] += scale * Σ_k A[i,k] f[k, :]` (acting along the slow axis).
    pub fn apply_slow_add(&self, f: &[f64], n_fast: usize, scale: f64, out: &mut [f64]) {
        debug_assert_eq!(f.len(), self.n * n_fast);
        out.par_chunks_mut(n_fast).with_min_len(PAR_MIN_ROWS).enumerate().for_each(|(i, orow)| {
            for (k, a) in self.row(i) {
                let a = scale * a;
                let frow = &f[k * n_fast..(k + 1) * n_fast];
                for (o, &v) in orow.iter_mut().zip(frow) {
                    *o += a * v;
                }
            }
        });
    }

    /// `out[i, j] += scale * (Σ_k A[j,k] f[i,k] + jump_coef[j] * jump)` (fast axis).
    pub fn apply_fast_add(&self, f: &[f64], n_slow: usize, jump: f64, scale: f64, out: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(f.len(), n_slow * n);
        out.par_chunks_mut(n).with_min_len(PAR_MIN_ROWS).zip(f.par_chunks(n)).for_each(|(orow, frow)| {
            for (j, o) in orow.iter_mut().enumerate() {
                let mut acc = self.jump_coef[j] * jump;
                for (k, a) in self.row(j) {
                    acc += a * frow[k];
                }
                *o += scale * acc;
            }
        });
    }
}

/// Physical-frame derivative operators on one grid, with their adjoints.
///
/// `∂x = ν₁∂s + τ₁∂t`, `∂z = ν₂∂s + τ₂∂t`,
/// `∂x² = ν₁²∂ss + 2ν₁τ₁∂s∂t + τ₁²∂tt`.
#[derive(Debug, Clone)]
pub struct DiffOps {
    grid: Grid2D,
    s1: Option<(AxisOp, AxisOp)>,
    s2: Option<(AxisOp, AxisOp)>,
    t1: Option<(AxisOp, AxisOp)>,
    t2: Option<(AxisOp, AxisOp)>,
}

fn with_transpose(op: Result<AxisOp>) -> Option<(AxisOp, AxisOp)> {
    op.ok().map(|a| {
        let t = a.transpose();
        (a, t)
    })
}

impl DiffOps {
    pub fn new(grid: &Grid2D) -> Self {
        DiffOps {
            grid: *grid,
            s1: with_transpose(AxisOp::first(grid.n_s, grid.h_s, false)),
            s2: with_transpose(AxisOp::second(grid.n_s, grid.h_s, false)),
            t1: with_transpose(AxisOp::first(grid.n_t, grid.h_t, grid.periodic_t)),
            t2: with_transpose(AxisOp::second(grid.n_t, grid.h_t, grid.periodic_t)),
        }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    fn need<'a>(&self, op: &'a Option<(AxisOp, AxisOp)>, axis: &'static str, n: usize) -> Result<&'a (AxisOp, AxisOp)> {
        op.as_ref().ok_or(Error::GridTooCoarse { axis, n, min: 3 })
    }

    fn s_op(&self, order: u8) -> Result<&(AxisOp, AxisOp)> {
        let op = if order == 1 { &self.s1 } else { &self.s2 };
        self.need(op, "s", self.grid.n_s)
    }

    fn t_op(&self, order: u8) -> Result<&(AxisOp, AxisOp)> {
        let op = if order == 1 { &self.t1 } else { &self.t2 };
        self.need(op, "t", self.grid.n_t)
    }

    /// `c_s ∂s + c_t ∂t` applied to `f` (with per-period jump `jump`).
    fn first_combo(&self, f: &[f64], jump: f64, c_s: f64, c_t: f64) -> Result<Vec<f64>> {
        let g = &self.grid;
        let mut out = vec![0.0; g.len()];
        if c_s != 0.0 {
            self.s_op(1)?.0.apply_slow_add(f, g.n_t, c_s, &mut out);
        }
        if c_t != 0.0 {
            self.t_op(1)?.0.apply_fast_add(f, g.n_s, jump, c_t, &mut out);
        }
        Ok(out)
    }

    fn first_combo_adjoint(&self, v: &[f64], c_s: f64, c_t: f64) -> Result<Vec<f64>> {
        let g = &self.grid;
        let mut out = vec![0.0; g.len()];
        if c_s != 0.0 {
            self.s_op(1)?.1.apply_slow_add(v, g.n_t, c_s, &mut out);
        }
        if c_t != 0.0 {
            self.t_op(1)?.1.apply_fast_add(v, g.n_s, 0.0, c_t, &mut out);
        }
        Ok(out)
    }

    pub fn dx(&self, f: &[f64], jump: f64) -> Result<Vec<f64>> {
        let fr = self.grid.frame;
        self.first_combo(f, jump, fr.nu[0], fr.tau[0])
    }

    pub fn dz(&self, f: &[f64], jump: f64) -> Result<Vec<f64>> {
        let fr = self.grid.frame;
        self.first_combo(f, jump, fr.nu[1], fr.tau[1])
    }

    pub fn ds(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.first_combo(f, 0.0, 1.0, 0.0)
    }

    pub fn dt(&self, f: &[f64], jump: f64) -> Result<Vec<f64>> {
        self.first_combo(f, jump, 0.0, 1.0)
    }

    pub fn dxx(&self, f: &[f64], jump: f64) -> Result<Vec<f64>> {
        let g = &self.grid;
        let [n1, _] = g.frame.nu;
        let [t1, _] = g.frame.tau;
        let mut out = vec![0.0; g.len()];
        if n1 != 0.0 {
            self.s_op(2)?.0.apply_slow_add(f, g.n_t, n1 * n1, &mut out);
        }
        if t1 != 0.0 {
            self.t_op(2)?.0.apply_fast_add(f, g.n_s, jump, t1 * t1, &mut out);
        }
        if n1 != 0.0 && t1 != 0.0 {
            let mut ft = vec![0.0; g.len()];
            self.t_op(1)?.0.apply_fast_add(f, g.n_s, jump, 1.0, &mut ft);
            self.s_op(1)?.0.apply_slow_add(&ft, g.n_t, 2.0 * n1 * t1, &mut out);
        }
        Ok(out)
    }

    pub fn dx_adjoint(&self, v: &[f64]) -> Result<Vec<f64>> {
        let fr = self.grid.frame;
        self.first_combo_adjoint(v, fr.nu[0], fr.tau[0])
    }

    pub fn dz_adjoint(&self, v: &[f64]) -> Result<Vec<f64>> {
        let fr = self.grid.frame;
        self.first_combo_adjoint(v, fr.nu[1], fr.tau[1])
    }

    pub fn dxx_adjoint(&self, v: &[f64]) -> Result<Vec<f64>> {
        let g = &self.grid;
        let [n1, _] = g.frame.nu;
        let [t1, _] = g.frame.tau;
        let mut out = vec![0.0; g.len()];
        if n1 != 0.0 {
            self.s_op(2)?.1.apply_slow_add(v, g.n_t, n1 * n1, &mut out);
        }
        if t1 != 0.0 {
            self.t_op(2)?.1.apply_fast_add(v, g.n_s, 0.0, t1 * t1, &mut out);
        }
        if n1 != 0.0 && t1 != 0.0 {
            let mut vs = vec![0.0; g.len()];
            self.s_op(1)?.1.apply_slow_add(v, g.n_t, 1.0, &mut vs);
            self.t_op(1)?.1.apply_fast_add(&vs, g.n_s, 0.0, 2.0 * n1 * t1, &mut out);
        }
        Ok(out)
    }

    /// Raw 1D operators `(∂s, ∂ss, ∂t, ∂tt)` for assembling preconditioners.
    pub fn axis_ops(&self) -> Result<[&AxisOp; 4]> {
        Ok([&self.s_op(1)?.0, &self.s_op(2)?.0, &self.t_op(1)?.0, &self.t_op(2)?.0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(op: &AxisOp) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; op.len()]; op.len()];
        for r in 0..op.len() {
            for (c, v) in op.row(r) {
                m[r][c] += v;
            }
        }
        m
    }

    #[test]
    fn transpose_is_exact() {
        for periodic in [false, true] {
            let a = AxisOp::second(7, 0.3, periodic).unwrap();
            let (da, dt) = (dense(&a), dense(&a.transpose()));
            for r in 0..7 {
                for c in 0..7 {
                    assert_eq!(da[r][c], dt[c][r]);
                }
            }
        }
    }

    #[test]
    fn one_dimensional_stencils_are_exact_on_quadratics() {
        let n = 6;
        let h = 0.25;
        let f: Vec<f64> = (0..n).map(|i| {
            let x = i as f64 * h;
            1.0 - 2.0 * x + 3.0 * x * x
        }).collect();
        let mut d1 = vec![0.0; n];
        AxisOp::first(n, h, false).unwrap().apply_fast_add(&f, 1, 0.0, 1.0, &mut d1);
        let mut d2 = vec![0.0; n];
        AxisOp::second(n, h, false).unwrap().apply_fast_add(&f, 1, 0.0, 1.0, &mut d2);
        for i in 0..n {
            let x = i as f64 * h;
            assert!((d1[i] - (-2.0 + 6.0 * x)).abs() < 1e-12);
            assert!((d2[i] - 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_jump_makes_linear_data_exact() {
        // f_j = 0.7 * j h on a periodic axis of period n h, jump 0.7 n h
        let n = 5;
        let h = 0.2;
        let f: Vec<f64> = (0..n).map(|j| 0.7 * j as f64 * h).collect();
        let mut d1 = vec![0.0; n];
        AxisOp::first(n, h, true).unwrap().apply_fast_add(&f, 1, 0.7 * n as f64 * h, 1.0, &mut d1);
        for v in d1 {
            assert!((v - 0.7).abs() < 1e-14);
        }
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(AxisOp::first(2, 0.1, false), Err(Error::GridTooCoarse { .. })));
    }
}
