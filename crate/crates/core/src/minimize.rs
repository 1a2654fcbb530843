//! Discrete minimisation of `E_ε` over the cell class: gradient traces `m±`
//! on the `ν`-faces, periodic gradient along `τ`.
//!
//! Unknowns are the interior rows of `u` plus one scalar, the offset of the
//! `+` face potential. Two rows on each face are pinned to the affine
//! potentials `m⁻·x` and `m⁺·x + δ`; the `−` face also fixes the additive
//! constant. The optimiser is L-BFGS with Armijo backtracking whose initial
//! inverse Hessian is the FFT/banded model in `precond`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{axis_weights, check_same_grid, integrate_by, pairwise_sum};
use crate::energy::{check_eps, check_finite, energy_eps, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::Grid2D;
use crate::jump::JumpSpec;
use crate::precond::CellPreconditioner;
use crate::profile::build_ansatz;
use crate::stencil::DiffOps;

/// Rows pinned on each face.
pub const PINNED_ROWS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Initializer {
    Ansatz,
    Linear,
    /// Linear interpolation plus seeded uniform noise of the given amplitude.
    Random { seed: u64, amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    pub max_iterations: usize,
    /// Bound on the weighted gradient norm (an `L²` norm of `δE/δu`).
    pub gradient_tolerance: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo_c1: f64,
    pub backtrack_factor: f64,
    pub max_backtracks: usize,
    pub memory: usize,
    pub precondition: bool,
    /// Finite-difference gradient check every this many iterations.
    pub fd_check_every: Option<usize>,
    /// Stop after this many consecutive steps that neither lower the energy by
    /// more than 1e-15 (relative) nor shrink the gradient.
    pub stall_iterations: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            max_iterations: 2000,
            gradient_tolerance: 1e-5,
            armijo_c1: 1e-4,
            backtrack_factor: 0.5,
            max_backtracks: 60,
            memory: 10,
            precondition: true,
            fd_check_every: None,
            stall_iterations: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellProblem {
    pub jump: JumpSpec,
    pub eps: f64,
    pub grid: Grid2D,
    pub settings: OptimizerSettings,
    pub init: Initializer,
}

/// Minimum samples across the unit cell so that `h_s ≤ ε/8`.
pub fn resolved_samples(eps: f64) -> usize {
    (8.0 / eps).ceil() as usize + 1
}

impl CellProblem {
    pub fn new(jump: JumpSpec, eps: f64, n_s: usize, n_t: usize, init: Initializer) -> Result<Self> {
        check_eps(eps)?;
        let grid = Grid2D::cell(jump.nu, n_s, n_t)?;
        let cp = CellProblem { jump, eps, grid, settings: OptimizerSettings::default(), init };
        cp.validate()?;
        Ok(cp)
    }

    pub fn with_settings(mut self, settings: OptimizerSettings) -> Self {
        self.settings = settings;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_eps(self.eps)?;
        let g = &self.grid;
        let nu = g.frame.nu;
        if (nu[0] - self.jump.nu[0]).abs() > 1e-12 || (nu[1] - self.jump.nu[1]).abs() > 1e-12 {
            return Err(Error::FrameMismatch);
        }
        if !g.periodic_t {
            return Err(Error::InvalidGrid("cell grid must be periodic in t".into()));
        }
        if (g.s_length() - 1.0).abs() > 1e-12 || (g.t_length() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidGrid("cell grid must have unit side".into()));
        }
        if g.n_s < 2 * PINNED_ROWS + 4 {
            return Err(Error::GridTooCoarse { axis: "s", n: g.n_s, min: 2 * PINNED_ROWS + 4 });
        }
        if g.n_t < 3 {
            return Err(Error::GridTooCoarse { axis: "t", n: g.n_t, min: 3 });
        }
        let s = &self.settings;
        if s.max_iterations == 0 || !(s.gradient_tolerance >= 0.0) {
            return Err(Error::InvalidArgument("optimizer needs max_iterations > 0 and a tolerance >= 0".into()));
        }
        if !(s.armijo_c1 > 0.0 && s.armijo_c1 < 1.0) || !(s.backtrack_factor > 0.0 && s.backtrack_factor < 1.0) {
            return Err(Error::InvalidArgument("line-search parameters must lie in (0, 1)".into()));
        }
        if let Initializer::Random { amplitude, .. } = self.init {
            if !(amplitude >= 0.0 && amplitude.is_finite()) {
                return Err(Error::InvalidArgument(format!("noise amplitude must be >= 0, got {amplitude}")));
            }
        }
        Ok(())
    }
}

/// Discretised energy on a cell, in terms of the reduced unknowns.
pub(crate) struct CellModel {
    grid: Grid2D,
    ops: DiffOps,
    eps: f64,
    t_jump: f64,
    minus_rows: Vec<f64>,
    plus_rows: Vec<f64>,
    n_free: usize,
    inv_w: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let parts: Vec<f64> =
        a.par_chunks(4096).zip(b.par_chunks(4096)).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum()).collect();
    pairwise_sum(&parts)
}

impl CellModel {
    pub(crate) fn new(cp: &CellProblem) -> Result<Self> {
        cp.validate()?;
        let g = cp.grid;
        let affine = |m: [f64; 2], rows: std::ops::Range<usize>| -> Vec<f64> {
            rows.flat_map(|i| (0..g.n_t).map(move |j| (i, j)))
                .map(|(i, j)| {
                    let [x, z] = g.point(i, j);
                    m[0] * x + m[1] * z
                })
                .collect()
        };
        let mm = cp.jump.m_minus();
        let tau = g.frame.tau;
        let (ws, wt) = axis_weights(&g);
        let n_free = g.n_s - 2 * PINNED_ROWS;
        let inv_w = (PINNED_ROWS..g.n_s - PINNED_ROWS)
            .flat_map(|i| wt.iter().map(|w| 1.0 / (ws[i] * w)).collect::<Vec<_>>())
            .collect();
        Ok(CellModel {
            grid: g,
            ops: DiffOps::new(&g),
            eps: cp.eps,
            t_jump: (mm[0] * tau[0] + mm[1] * tau[1]) * g.t_length(),
            minus_rows: affine(mm, 0..PINNED_ROWS),
            plus_rows: affine(cp.jump.m_plus(), g.n_s - PINNED_ROWS..g.n_s),
            n_free,
            inv_w,
        })
    }

    fn n_vars(&self) -> usize {
        self.n_free * self.grid.n_t + 1
    }

    fn free_span(&self) -> std::ops::Range<usize> {
        let nt = self.grid.n_t;
        PINNED_ROWS * nt..(PINNED_ROWS + self.n_free) * nt
    }

    pub(crate) fn expand(&self, x: &[f64]) -> Vec<f64> {
        let delta = x[x.len() - 1];
        let mut u = Vec::with_capacity(self.grid.len());
        u.extend_from_slice(&self.minus_rows);
        u.extend_from_slice(&x[..x.len() - 1]);
        u.extend(self.plus_rows.iter().map(|v| v + delta));
        u
    }

    /// Reduced unknowns from a full field, rejecting inconsistent face rows.
    pub(crate) fn restrict(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.grid.len() {
            return Err(Error::ShapeMismatch { expected: self.grid.len(), actual: u.len() });
        }
        let tail = &u[u.len() - self.plus_rows.len()..];
        let offsets: Vec<f64> = tail.iter().zip(&self.plus_rows).map(|(a, b)| a - b).collect();
        let delta = pairwise_sum(&offsets) / offsets.len() as f64;
        let scale = 1f64.max(self.minus_rows.iter().chain(&self.plus_rows).fold(0.0, |m, v| m.max(v.abs())));
        let dev_minus = u[..self.minus_rows.len()].iter().zip(&self.minus_rows).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let dev_plus = offsets.iter().map(|o| (o - delta).abs()).fold(0.0, f64::max);
        let dev = dev_minus.max(dev_plus);
        if dev > 1e-10 * scale {
            return Err(Error::BoundaryViolation(dev));
        }
        let mut x = u[self.free_span()].to_vec();
        x.push(delta);
        Ok(x)
    }

    /// Energy and (optionally) its gradient with respect to every node value.
    pub(crate) fn energy_full(&self, u: &[f64], want_grad: bool) -> (f64, Option<Vec<f64>>) {
        let g = &self.grid;
        let eps = self.eps;
        let ux = self.ops.dx(u, self.t_jump).expect("validated grid");
        let uz = self.ops.dz(u, self.t_jump).expect("validated grid");
        let uxx = self.ops.dxx(u, self.t_jump).expect("validated grid");
        let nt = g.n_t;
        let c: Vec<f64> = ux.par_iter().zip(&uz).map(|(a, b)| b - 0.5 * a * a).collect();
        let e = integrate_by(g, |i, j| {
            let k = i * nt + j;
            0.5 * (c[k] * c[k] / eps + eps * uxx[k] * uxx[k])
        });
        if !want_grad {
            return (e, None);
        }
        let (ws, wt) = axis_weights(g);
        let n = g.len();
        let mut vz = vec![0.0; n];
        let mut vx = vec![0.0; n];
        let mut vxx = vec![0.0; n];
        vz.par_chunks_mut(nt)
            .zip(vx.par_chunks_mut(nt))
            .zip(vxx.par_chunks_mut(nt))
            .enumerate()
            .for_each(|(i, ((rz, rx), rxx))| {
                for j in 0..nt {
                    let k = i * nt + j;
                    let w = ws[i] * wt[j];
                    let a = w * c[k] / eps;
                    rz[j] = a;
                    rx[j] = -a * ux[k];
                    rxx[j] = w * eps * uxx[k];
                }
            });
        let mut grad = self.ops.dz_adjoint(&vz).expect("validated grid");
        let gx = self.ops.dx_adjoint(&vx).expect("validated grid");
        let gxx = self.ops.dxx_adjoint(&vxx).expect("validated grid");
        grad.par_iter_mut().zip(&gx).zip(&gxx).for_each(|((a, b), c)| *a += b + c);
        (e, Some(grad))
    }

    pub(crate) fn reduce(&self, full: &[f64]) -> Vec<f64> {
        let mut r = full[self.free_span()].to_vec();
        let tail = &full[full.len() - self.plus_rows.len()..];
        r.push(pairwise_sum(tail));
        r
    }

    /// `E(x + t·d) − E(x)` from the increments of `C` and `u_xx`, so it stays
    /// accurate after the energy itself has converged to round-off.
    pub(crate) fn energy_change(&self, x: &[f64], d: &[f64], t: f64) -> f64 {
        let g = &self.grid;
        let eps = self.eps;
        let u = self.expand(x);
        let n = d.len() - 1;
        let mut du = vec![0.0; g.len()];
        du[self.free_span()].iter_mut().zip(&d[..n]).for_each(|(a, b)| *a = t * b);
        let plus = g.len() - self.plus_rows.len();
        du[plus..].iter_mut().for_each(|a| *a = t * d[n]);
        let ux = self.ops.dx(&u, self.t_jump).expect("validated grid");
        let uz = self.ops.dz(&u, self.t_jump).expect("validated grid");
        let uxx = self.ops.dxx(&u, self.t_jump).expect("validated grid");
        let dx = self.ops.dx(&du, 0.0).expect("validated grid");
        let dz = self.ops.dz(&du, 0.0).expect("validated grid");
        let dxx = self.ops.dxx(&du, 0.0).expect("validated grid");
        let nt = g.n_t;
        integrate_by(g, |i, j| {
            let k = i * nt + j;
            let c = uz[k] - 0.5 * ux[k] * ux[k];
            let dc = dz[k] - dx[k] * (ux[k] + 0.5 * dx[k]);
            0.5 * (dc * (2.0 * c + dc) / eps + eps * dxx[k] * (2.0 * uxx[k] + dxx[k]))
        })
    }

    pub(crate) fn energy(&self, x: &[f64]) -> f64 {
        self.energy_full(&self.expand(x), false).0
    }

    pub(crate) fn energy_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let (e, g) = self.energy_full(&self.expand(x), true);
        (e, self.reduce(&g.expect("gradient requested")))
    }

    /// `L²` norm of the variational derivative plus the face-offset component.
    pub(crate) fn grad_norm(&self, g: &[f64]) -> f64 {
        let n = g.len() - 1;
        let parts: Vec<f64> = g[..n].iter().zip(&self.inv_w).map(|(v, iw)| v * v * iw).collect();
        (pairwise_sum(&parts) + g[n] * g[n]).sqrt()
    }

    fn field(&self, x: &[f64]) -> Result<ScalarField> {
        ScalarField::with_jump(self.grid, self.expand(x), self.t_jump)
    }
}

/// Gradient of the discrete energy on a cell.
#[derive(Debug, Clone)]
pub struct CellGradient {
    pub energy: f64,
    /// `∂E_h/∂u_ij` on free rows, zero on pinned rows.
    pub field: ScalarField,
    /// Derivative with respect to the `+` face offset.
    pub face_offset: f64,
}

pub fn discrete_energy_gradient(u: &ScalarField, eps: f64, cp: &CellProblem) -> Result<CellGradient> {
    let mut cp = cp.clone();
    cp.eps = eps;
    check_finite(u)?;
    check_same_grid(u.grid(), &cp.grid)?;
    let model = CellModel::new(&cp)?;
    let x = model.restrict(u.values())?;
    let (e, full) = model.energy_full(&model.expand(&x), true);
    let full = full.expect("gradient requested");
    let face_offset = model.reduce(&full)[x.len() - 1];
    let span = model.free_span();
    let values = full.iter().enumerate().map(|(k, &v)| if span.contains(&k) { v } else { 0.0 }).collect();
    Ok(CellGradient { energy: e, field: ScalarField::new(cp.grid, values)?, face_offset })
}

/// Energy of a cell field via the minimiser's own discretisation.
pub fn cell_energy(u: &ScalarField, cp: &CellProblem) -> Result<f64> {
    let model = CellModel::new(cp)?;
    let x = model.restrict(u.values())?;
    Ok(model.energy(&x))
}

fn initial_guess(cp: &CellProblem, model: &CellModel) -> Result<Vec<f64>> {
    let g = &cp.grid;
    match cp.init {
        Initializer::Ansatz => {
            let a = build_ansatz(&cp.jump, cp.eps, g)?;
            let mut x = a.u.values()[model.free_span()].to_vec();
            x.push(a.face_offset);
            Ok(x)
        }
        Initializer::Linear | Initializer::Random { .. } => {
            let (mm, mp) = (cp.jump.m_minus(), cp.jump.m_plus());
            let mut x = Vec::with_capacity(model.n_vars());
            for i in PINNED_ROWS..g.n_s - PINNED_ROWS {
                let lam = g.s(i) + 0.5;
                for j in 0..g.n_t {
                    let [px, pz] = g.point(i, j);
                    let um = mm[0] * px + mm[1] * pz;
                    let up = mp[0] * px + mp[1] * pz;
                    x.push((1.0 - lam) * um + lam * up);
                }
            }
            if let Initializer::Random { seed, amplitude } = cp.init {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for v in x.iter_mut() {
                    *v += amplitude * rng.random_range(-1.0..1.0);
                }
            }
            x.push(0.0);
            Ok(x)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimizeResult {
    #[serde(skip_serializing)]
    pub u_star: ScalarField,
    pub breakdown: EnergyBreakdown,
    pub iterations: usize,
    pub final_gradient_norm: f64,
    pub converged: bool,
    pub face_offset: f64,
    pub initial_energy: f64,
    /// Energy after each accepted step, starting with the initial value.
    pub history: Vec<f64>,
    pub stop_reason: String,
    /// Worst relative error seen by the periodic finite-difference checks.
    pub fd_check_max_error: Option<f64>,
    /// Measured round-off level of the gradient norm at the initial state; the
    /// effective tolerance is the larger of this and the requested one.
    pub gradient_floor: f64,
}

/// Relative error of the central difference quotient along a unit random
/// direction. Directional derivatives smaller than the quotient's round-off
/// resolution are measured against that resolution instead.
pub(crate) fn fd_check(model: &CellModel, x: &[f64], grad: &[f64], rng: &mut ChaCha8Rng, h: f64) -> f64 {
    let mut d: Vec<f64> = (0..x.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = dot(&d, &d).sqrt();
    d.iter_mut().for_each(|v| *v /= norm);
    let shifted = |sign: f64| -> Vec<f64> { x.iter().zip(&d).map(|(a, b)| a + sign * h * b).collect() };
    let (ep, em) = (model.energy(&shifted(1.0)), model.energy(&shifted(-1.0)));
    let fd = (ep - em) / (2.0 * h);
    let an = dot(grad, &d);
    // the energy is a sum of many terms, so allow ~100 ulps of noise in each evaluation
    let resolution = 1e8 * f64::EPSILON * ep.abs().max(em.abs()) / h;
    (fd - an).abs() / an.abs().max(resolution).max(f64::MIN_POSITIVE)
}

/// Discrete energy of the problem's initializer, with face rows on the pinned data.
pub fn initial_energy(cp: &CellProblem) -> Result<f64> {
    let model = CellModel::new(cp)?;
    Ok(model.energy(&initial_guess(cp, &model)?))
}

/// Gradient change caused by one-ulp random perturbations of the state: the
/// level below which the computed gradient is round-off, not signal.
pub(crate) fn gradient_noise(model: &CellModel, x: &[f64], g: &[f64]) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0e11);
    let xp: Vec<f64> = x.iter().map(|v| v + v.abs().max(f64::MIN_POSITIVE) * f64::EPSILON * rng.random_range(-1.0..1.0)).collect();
    let (_, gp) = model.energy_grad(&xp);
    let d: Vec<f64> = gp.iter().zip(g).map(|(a, b)| a - b).collect();
    model.grad_norm(&d)
}

pub fn minimize_energy(cp: &CellProblem) -> Result<MinimizeResult> {
    let model = CellModel::new(cp)?;
    let s = &cp.settings;
    let pre = if s.precondition {
        let [s1, s2, _, _] = model.ops.axis_ops()?;
        let alpha = cp.jump.a_minus().powi(2).max(cp.jump.a_plus().powi(2)).max(0.25);
        Some(CellPreconditioner::new(&cp.grid, s1, s2, cp.eps, alpha, 1.0, PINNED_ROWS)?)
    } else {
        None
    };
    let precond = |g: &[f64]| -> Vec<f64> {
        match &pre {
            Some(p) => p.apply(g),
            None => g.to_vec(),
        }
    };

    let mut x = initial_guess(cp, &model)?;
    let (mut e, mut g) = model.energy_grad(&x);
    if !e.is_finite() {
        return Err(Error::NonFinite(0));
    }
    let initial_energy = e;
    let mut history = vec![e];
    let mut mem_s: Vec<Vec<f64>> = Vec::new();
    let mut mem_y: Vec<Vec<f64>> = Vec::new();
    let mut mem_rho: Vec<f64> = Vec::new();
    let mut fd_rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut fd_worst: Option<f64> = None;
    let mut stalled = 0;
    let mut gnorm = model.grad_norm(&g);
    // below this the gradient is round-off, so no tolerance can ask for less
    let gradient_floor = gradient_noise(&model, &x, &g);
    let tol = s.gradient_tolerance.max(gradient_floor);
    let mut iterations = 0;
    let mut stop_reason = String::from("max_iterations");

    while iterations < s.max_iterations {
        if gnorm <= tol {
            stop_reason = "gradient_tolerance".into();
            break;
        }
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = vec![0.0; mem_s.len()];
        for k in (0..mem_s.len()).rev() {
            alphas[k] = mem_rho[k] * dot(&mem_s[k], &q);
            q.iter_mut().zip(&mem_y[k]).for_each(|(a, b)| *a -= alphas[k] * b);
        }
        let mut r = precond(&q);
        if let (Some(sl), Some(yl)) = (mem_s.last(), mem_y.last()) {
            if pre.is_none() {
                let gamma = dot(sl, yl) / dot(yl, yl);
                r.iter_mut().for_each(|v| *v *= gamma);
            }
        }
        for k in 0..mem_s.len() {
            let beta = mem_rho[k] * dot(&mem_y[k], &r);
            r.iter_mut().zip(&mem_s[k]).for_each(|(a, b)| *a += (alphas[k] - beta) * b);
        }
        let mut dir: Vec<f64> = r.into_iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            mem_s.clear();
            mem_y.clear();
            mem_rho.clear();
            dir = precond(&g).into_iter().map(|v| -v).collect();
            slope = dot(&g, &dir);
            if !(slope < 0.0) {
                dir = g.iter().map(|v| -v).collect();
                slope = dot(&g, &dir);
            }
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=s.max_backtracks {
            let change = model.energy_change(&x, &dir, step);
            if change.is_finite() && change <= s.armijo_c1 * step * slope {
                let xn: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + step * b).collect();
                accepted = Some((xn, e + change));
                break;
            }
            step *= s.backtrack_factor;
        }
        let Some((xn, en)) = accepted else {
            if mem_s.is_empty() {
                stop_reason = "line_search_failed".into();
                break;
            }
            // drop curvature memory and retry from the model direction
            mem_s.clear();
            mem_y.clear();
            mem_rho.clear();
            continue;
        };
        let (_, gn) = model.energy_grad(&xn);
        iterations += 1;
        assert!(en <= e, "accepted step increased the energy");
        let gn_norm = model.grad_norm(&gn);

        let sv: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&sv, &yv);
        if sy > 1e-300 {
            if mem_s.len() == s.memory.max(1) {
                mem_s.remove(0);
                mem_y.remove(0);
                mem_rho.remove(0);
            }
            mem_s.push(sv);
            mem_y.push(yv);
            mem_rho.push(1.0 / sy);
        }
        if (e - en) <= 1e-15 * e.abs() && gn_norm >= gnorm {
            stalled += 1;
        } else {
            stalled = 0;
        }
        x = xn;
        e = en;
        g = gn;
        gnorm = gn_norm;
        history.push(e);

        if let Some(every) = s.fd_check_every {
            if every > 0 && iterations % every == 0 {
                let err = fd_check(&model, &x, &g, &mut fd_rng, 1e-5);
                fd_worst = Some(fd_worst.map_or(err, |w: f64| w.max(err)));
            }
        }
        if stalled >= s.stall_iterations {
            stop_reason = "stalled".into();
            break;
        }
    }
    if gnorm <= tol {
        stop_reason = "gradient_tolerance".into();
    }

    let u = model.field(&x)?;
    let breakdown = energy_eps(&u, cp.eps)?;
    Ok(MinimizeResult {
        u_star: u,
        breakdown,
        iterations,
        final_gradient_norm: gnorm,
        converged: gnorm <= tol,
        face_offset: x[x.len() - 1],
        initial_energy,
        history,
        stop_reason,
        fd_check_max_error: fd_worst,
        gradient_floor,
    })
}

#[derive(Serialize)]
struct ResultManifest<'a> {
    problem: &'a CellProblem,
    result: &'a MinimizeResult,
    snapshot: String,
}

impl MinimizeResult {
    /// Writes `<stem>.field` (snapshot of `u*`) and `<stem>.json`; returns both paths.
    pub fn save(&self, cp: &CellProblem, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let field_path = dir.join(format!("{stem}.field"));
        let mut f = fs::File::create(&field_path)?;
        self.u_star.write_snapshot(&mut f)?;
        f.flush()?;
        let json_path = dir.join(format!("{stem}.json"));
        let manifest = ResultManifest { problem: cp, result: self, snapshot: format!("{stem}.field") };
        fs::write(&json_path, serde_json::to_string_pretty(&manifest)?)?;
        Ok((field_path, json_path))
    }
}
