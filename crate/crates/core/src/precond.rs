//! Preconditioner for the cell problem: a frozen quadratic model of the
//! energy, block-diagonalised by an FFT along the periodic `t` axis and
//! factored mode by mode as a banded Hermitian matrix in `s`.
//!
//! Per mode `k` the model is
//! `h_t [ε DxxᴴWDxx + (α/ε) DxᴴWDx + (1/ε) DzᴴWDz + (β/ε) W]` with `∂t`
//! replaced by its symbol; the face-offset unknown only couples to `k = 0`
//! and is eliminated by a Schur complement.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::calculus::axis_weights;
use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::stencil::AxisOp;

/// Lower band of a Hermitian positive definite matrix, `L Lᴴ` after `factor`.
struct BandChol {
    n: usize,
    bw: usize,
    /// `l[i * (bw + 1) + d]` holds entry `(i, i − d)`.
    l: Vec<C64>,
}

impl BandChol {
    fn factor(n: usize, bw: usize, entry: impl Fn(usize, usize) -> C64) -> Result<Self> {
        let w = bw + 1;
        let mut l = vec![C64::new(0.0, 0.0); n * w];
        for i in 0..n {
            for j in i.saturating_sub(bw)..=i {
                let mut sum = entry(i, j);
                for k in i.saturating_sub(bw).max(j.saturating_sub(bw))..j {
                    sum -= l[i * w + (i - k)] * l[j * w + (j - k)].conj();
                }
                if i == j {
                    if !(sum.re > 0.0) {
                        return Err(Error::InvalidArgument("preconditioner is not positive definite".into()));
                    }
                    l[i * w] = C64::new(sum.re.sqrt(), 0.0);
                } else {
                    l[i * w + (i - j)] = sum / l[j * w];
                }
            }
        }
        Ok(BandChol { n, bw, l })
    }

    fn solve(&self, b: &mut [C64]) {
        let w = self.bw + 1;
        for i in 0..self.n {
            let mut s = b[i];
            for k in i.saturating_sub(self.bw)..i {
                s -= self.l[i * w + (i - k)] * b[k];
            }
            b[i] = s / self.l[i * w];
        }
        for i in (0..self.n).rev() {
            let mut s = b[i];
            for k in i + 1..(i + w).min(self.n) {
                s -= self.l[k * w + (k - i)].conj() * b[k];
            }
            b[i] = s / self.l[i * w];
        }
    }
}

/// `Mqᵀ W Mr` for `M ∈ {S2, S1, I}`, stored densely within a band.
struct GramBands {
    bw: usize,
    /// `[q][r][i * (2bw+1) + (i' − i + bw)]`
    g: Vec<Vec<Vec<f64>>>,
}

impl GramBands {
    fn new(s1: &AxisOp, s2: &AxisOp, ws: &[f64]) -> Self {
        let n = ws.len();
        let ident: Vec<Vec<(usize, f64)>> = (0..n).map(|r| vec![(r, 1.0)]).collect();
        let rows = |op: &AxisOp| -> Vec<Vec<(usize, f64)>> { (0..n).map(|r| op.row(r).collect()).collect() };
        let mats = [rows(s2), rows(s1), ident];
        let bw = mats
            .iter()
            .flat_map(|m| m.iter().map(|row| row.iter().map(|e| e.0).max().unwrap() - row.iter().map(|e| e.0).min().unwrap()))
            .max()
            .unwrap();
        let width = 2 * bw + 1;
        let mut g = vec![vec![vec![0.0; n * width]; 3]; 3];
        for (q, mq) in mats.iter().enumerate() {
            for (r, mr) in mats.iter().enumerate() {
                let gq = &mut g[q][r];
                for row in 0..n {
                    for &(i, a) in &mq[row] {
                        for &(i2, b) in &mr[row] {
                            gq[i * width + (i2 + bw - i)] += a * ws[row] * b;
                        }
                    }
                }
            }
        }
        GramBands { bw, g }
    }

    #[inline]
    fn get(&self, q: usize, r: usize, i: usize, i2: usize) -> f64 {
        if i.abs_diff(i2) > self.bw {
            return 0.0;
        }
        self.g[q][r][i * (2 * self.bw + 1) + (i2 + self.bw - i)]
    }
}

pub(crate) struct CellPreconditioner {
    n_t: usize,
    n_free: usize,
    modes: Vec<BandChol>,
    /// coupling of the face offset to the free rows in the mean mode
    coupling: Vec<f64>,
    a0_inv_coupling: Vec<f64>,
    schur: f64,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl CellPreconditioner {
    /// Free rows are `first..first + n_free`; the rows after them move with
    /// the face offset.
    pub(crate) fn new(grid: &Grid2D, s1: &AxisOp, s2: &AxisOp, eps: f64, alpha: f64, beta: f64, first: usize) -> Result<Self> {
        let (n_s, n_t) = (grid.n_s, grid.n_t);
        let n_free = n_s - 2 * first;
        let (ws, _) = axis_weights(grid);
        let gram = GramBands::new(s1, s2, &ws);
        let [n1, n2] = grid.frame.nu;
        let [t1, t2] = grid.frame.tau;
        let ht = grid.h_t;

        // coefficients of (S2, S1, I) in Dxx, Dx, Dz for a t-symbol pair
        let model = |lam1: C64, lam2: f64| -> [[C64; 3]; 3] {
            let z = C64::new(0.0, 0.0);
            let r = |v: f64| C64::new(v, 0.0);
            [
                [r(n1 * n1), lam1 * (2.0 * n1 * t1), r(t1 * t1 * lam2)],
                [z, r(n1), lam1 * t1],
                [z, r(n2), lam1 * t2],
            ]
        };
        let scales = [eps, alpha / eps, 1.0 / eps];
        let gram = &gram;
        let entry_for = move |lam1: C64, lam2: f64| {
            let coefs = model(lam1, lam2);
            move |i: usize, i2: usize| -> C64 {
                let mut acc = C64::new(0.0, 0.0);
                for (d, sc) in coefs.iter().zip(scales) {
                    for q in 0..3 {
                        for r in 0..3 {
                            let c = d[q].conj() * d[r];
                            if c != C64::new(0.0, 0.0) {
                                acc += c * (sc * gram.get(q, r, i, i2));
                            }
                        }
                    }
                }
                acc += beta / eps * gram.get(2, 2, i, i2);
                acc * ht
            }
        };

        let modes = (0..n_t)
            .into_par_iter()
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / n_t as f64;
                let lam1 = C64::new(0.0, th.sin() / ht);
                let lam2 = (2.0 * th.cos() - 2.0) / (ht * ht);
                let e = entry_for(lam1, lam2);
                BandChol::factor(n_free, gram.bw, |i, j| e(i + first, j + first))
            })
            .collect::<Result<Vec<_>>>()?;

        let a0 = entry_for(C64::new(0.0, 0.0), 0.0);
        let plus = n_s - first..n_s;
        let coupling: Vec<f64> = (0..n_free).map(|i| plus.clone().map(|p| a0(i + first, p).re).sum()).collect();
        let c: f64 = plus.clone().flat_map(|p| plus.clone().map(move |q| (p, q))).map(|(p, q)| a0(p, q).re).sum();
        let mut tmp: Vec<C64> = coupling.iter().map(|&v| C64::new(v, 0.0)).collect();
        modes[0].solve(&mut tmp);
        let a0_inv_coupling: Vec<f64> = tmp.iter().map(|z| z.re).collect();
        let schur = c - coupling.iter().zip(&a0_inv_coupling).map(|(a, b)| a * b).sum::<f64>();
        if !(schur > 0.0) {
            return Err(Error::InvalidArgument("face-offset Schur complement is not positive".into()));
        }

        let mut planner = FftPlanner::new();
        Ok(CellPreconditioner {
            n_t,
            n_free,
            modes,
            coupling,
            a0_inv_coupling,
            schur,
            fft: planner.plan_fft_forward(n_t),
            ifft: planner.plan_fft_inverse(n_t),
        })
    }

    /// Applies the inverse model to a gradient laid out as free rows
    /// (row-major, `n_t` per row) followed by the face-offset component.
    pub(crate) fn apply(&self, g: &[f64]) -> Vec<f64> {
        let (nf, nt) = (self.n_free, self.n_t);
        debug_assert_eq!(g.len(), nf * nt + 1);
        let mut spec: Vec<C64> = g[..nf * nt].iter().map(|&v| C64::new(v, 0.0)).collect();
        spec.par_chunks_mut(nt).for_each(|row| self.fft.process(row));

        let mut cols: Vec<Vec<C64>> = (0..nt)
            .into_par_iter()
            .map(|k| {
                let mut col: Vec<C64> = (0..nf).map(|i| spec[i * nt + k]).collect();
                if k != 0 {
                    self.modes[k].solve(&mut col);
                }
                col
            })
            .collect();

        // mean mode with the face offset: [A0 b; bᵀ c][Ū; D] = [R̂₀; r_δ], D = n_t δ
        let r0 = std::mem::take(&mut cols[0]);
        let mut a0_inv_r: Vec<C64> = r0.clone();
        self.modes[0].solve(&mut a0_inv_r);
        let r_delta = g[nf * nt];
        let bt_a0_inv_r: f64 = self.coupling.iter().zip(&a0_inv_r).map(|(b, z)| b * z.re).sum();
        let d = (r_delta - bt_a0_inv_r) / self.schur;
        cols[0] = a0_inv_r.iter().zip(&self.a0_inv_coupling).map(|(z, w)| C64::new(z.re - w * d, 0.0)).collect();

        spec.par_chunks_mut(nt).enumerate().for_each(|(i, row)| {
            for (k, v) in row.iter_mut().enumerate() {
                *v = cols[k][i];
            }
            self.ifft.process(row);
        });
        let scale = 1.0 / nt as f64;
        let mut out: Vec<f64> = spec.iter().map(|z| z.re * scale).collect();
        out.push(d / nt as f64);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_cholesky_solves() {
        // tridiagonal Hermitian test matrix
        let n = 7;
        let entry = |i: usize, j: usize| -> C64 {
            if i == j {
                C64::new(4.0, 0.0)
            } else if i == j + 1 {
                C64::new(1.0, 0.5)
            } else if j == i + 1 {
                C64::new(1.0, -0.5)
            } else {
                C64::new(0.0, 0.0)
            }
        };
        let ch = BandChol::factor(n, 1, |i, j| entry(i, j)).unwrap();
        let x: Vec<C64> = (0..n).map(|i| C64::new(i as f64, 1.0 - i as f64)).collect();
        let mut b: Vec<C64> = (0..n).map(|i| (0..n).map(|j| entry(i, j) * x[j]).sum()).collect();
        ch.solve(&mut b);
        for (a, e) in b.iter().zip(&x) {
            assert!((a - e).norm() < 1e-13);
        }
    }
}
