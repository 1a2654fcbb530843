//! The 1D transition layer: well potential, profile ODE, the interpolated
//! ansatz on the cell and its energy.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::diagnostics::rate_fit;
use crate::energy::check_eps;
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField2};
use crate::grid::Grid2D;
use crate::jump::{jump_cost, JumpSpec};
use crate::quadrature::GaussLegendre;

/// Where the ansatz switches from the profile to linear interpolation.
pub const DEFAULT_THRESHOLD: f64 = 0.25;
pub const DEFAULT_STEP: f64 = 1e-3;
const GL_POINTS: usize = 8;

/// `W(g) = |g p₂ + m₂⁻ − (g p₁ + m₁⁻)²/2| / (p₁n₁)`, evaluated literally.
pub fn well_potential(g: f64, j: &JumpSpec) -> f64 {
    let [m1, m2] = j.m_minus();
    let [p1, p2] = j.p;
    let x = g * p1 + m1;
    (g * p2 + m2 - 0.5 * x * x).abs() / (p1 * j.n[0])
}

/// `W` in its factored form `(|p|/2)·|g(1−g)|`, given `g` and `1 − g` separately.
#[inline]
fn w_factored(rate: f64, g: f64, gc: f64) -> f64 {
    rate * (g * gc).abs()
}

/// Fitted tail `c₁ e^{−c₂|t|}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub c1: f64,
    pub c2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Profile1D {
    pub t_grid: Vec<f64>,
    pub g: Vec<f64>,
    /// `1 − g`, carried separately so the `t > 0` tail keeps full precision.
    pub g_complement: Vec<f64>,
    pub jump: JumpSpec,
    pub ode_step: f64,
    pub horizon: f64,
    /// Fit of `1 − g` on `t > 0`.
    pub tail: TailFit,
    /// Fit of `g` on `t < 0`.
    pub tail_minus: TailFit,
}

fn rk4(y: f64, dt: f64, f: impl Fn(f64) -> f64) -> f64 {
    let k1 = f(y);
    let k2 = f(y + 0.5 * dt * k1);
    let k3 = f(y + 0.5 * dt * k2);
    let k4 = f(y + dt * k3);
    y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

const EXCURSION_TOL: f64 = 1e-9;

/// Integrates `g' = W(g)`, `g(0) = 1/2` on `[−T, T]` with classical RK4.
pub fn solve_profile(j: &JumpSpec, horizon: f64, step: f64) -> Result<Profile1D> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
    }
    let n = (horizon / step).ceil() as usize;
    if n > 50_000_000 {
        return Err(Error::InvalidArgument(format!("{n} steps per side is too many")));
    }
    let dt = horizon / n as f64;
    let rate = 0.5 * j.p_norm();
    let mut g = vec![0.0; 2 * n + 1];
    let mut gc = vec![0.0; 2 * n + 1];
    g[n] = 0.5;
    gc[n] = 0.5;

    let check = |y: f64, i: usize| -> Result<()> {
        let excursion = if y.is_nan() { f64::INFINITY } else { (-y).max(y - 1.0) };
        if excursion > EXCURSION_TOL {
            Err(Error::StepTooLarge { step: dt, t: -horizon + i as f64 * dt, excursion })
        } else {
            Ok(())
        }
    };
    // backward: g itself is small
    let mut y = 0.5;
    for i in (0..n).rev() {
        y = rk4(y, -dt, |v| w_factored(rate, v, 1.0 - v));
        check(y, i)?;
        g[i] = y;
        gc[i] = 1.0 - y;
    }
    // forward: track h = 1 − g, h' = −W
    let mut h = 0.5;
    for i in n + 1..=2 * n {
        h = rk4(h, dt, |v| -w_factored(rate, 1.0 - v, v));
        check(h, i)?;
        gc[i] = h;
        g[i] = 1.0 - h;
    }
    let t_grid: Vec<f64> = (0..=2 * n).map(|i| (i as f64 - n as f64) * dt).collect();
    let tail = fit_tail(&t_grid[n..], &gc[n..], horizon)?;
    let rev_t: Vec<f64> = t_grid[..=n].iter().rev().map(|t| -t).collect();
    let rev_g: Vec<f64> = g[..=n].iter().rev().copied().collect();
    let tail_minus = fit_tail(&rev_t, &rev_g, horizon)?;
    Ok(Profile1D { t_grid, g, g_complement: gc, jump: *j, ode_step: dt, horizon, tail, tail_minus })
}

const UNDERFLOW_FLOOR: f64 = 1e-280;

/// Log-linear fit of a decaying tail sampled at increasing `t ≥ 0`.
fn fit_tail(t: &[f64], y: &[f64], horizon: f64) -> Result<TailFit> {
    let usable = |lo: f64, hi: f64| -> (Vec<f64>, Vec<f64>) {
        t.iter()
            .zip(y)
            .filter(|&(&tt, &yy)| tt >= lo && tt <= hi && yy > UNDERFLOW_FLOOR)
            .map(|(&tt, &yy)| (tt, yy.ln()))
            .unzip()
    };
    let (mut xs, mut ys) = usable(0.5 * horizon, 0.9 * horizon);
    if xs.len() < 3 {
        let last = t.iter().zip(y).filter(|&(_, &yy)| yy > UNDERFLOW_FLOOR).map(|(&tt, _)| tt).fold(0.0, f64::max);
        (xs, ys) = usable(0.5 * last, 0.9 * last);
    }
    let fit = rate_fit(&xs, &ys)?;
    Ok(TailFit { c1: fit.intercept.exp(), c2: -fit.slope })
}

fn hermite(y0: f64, y1: f64, d0: f64, d1: f64, dt: f64, u: f64) -> f64 {
    let u2 = u * u;
    let u3 = u2 * u;
    (2.0 * u3 - 3.0 * u2 + 1.0) * y0 + (u3 - 2.0 * u2 + u) * dt * d0 + (-2.0 * u3 + 3.0 * u2) * y1 + (u3 - u2) * dt * d1
}

impl Profile1D {
    fn rate(&self) -> f64 {
        0.5 * self.jump.p_norm()
    }

    fn mid(&self) -> usize {
        (self.t_grid.len() - 1) / 2
    }

    /// `(g(t), 1 − g(t))`. Cubic Hermite between samples; beyond the horizon
    /// the logistic flow of the factored well is continued from the endpoint.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let k = self.rate();
        let n = self.mid();
        let last = self.t_grid.len() - 1;
        if t <= -self.horizon {
            let g0 = self.g[0];
            let e = (k * (t + self.horizon)).exp();
            let g = g0 * e / (1.0 - g0 + g0 * e);
            return (g, 1.0 - g);
        }
        if t >= self.horizon {
            let h0 = self.g_complement[last];
            let e = (-k * (t - self.horizon)).exp();
            let h = h0 * e / (1.0 - h0 + h0 * e);
            return (1.0 - h, h);
        }
        let x = (t + self.horizon) / self.ode_step;
        let nearest = x.round();
        if (x - nearest).abs() < 1e-9 {
            let i = (nearest as usize).min(last);
            return (self.g[i], self.g_complement[i]);
        }
        let i = (x.floor() as usize).min(last - 1);
        let u = x - i as f64;
        let dt = self.ode_step;
        let w0 = w_factored(k, self.g[i], self.g_complement[i]);
        let w1 = w_factored(k, self.g[i + 1], self.g_complement[i + 1]);
        if i < n {
            let g = hermite(self.g[i], self.g[i + 1], w0, w1, dt, u);
            (g, 1.0 - g)
        } else {
            let h = hermite(self.g_complement[i], self.g_complement[i + 1], -w0, -w1, dt, u);
            (1.0 - h, h)
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.eval(t).0
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,g,W")?;
        let k = self.rate();
        for ((t, g), gc) in self.t_grid.iter().zip(&self.g).zip(&self.g_complement) {
            writeln!(out, "{t},{g},{}", w_factored(k, *g, *gc))?;
        }
        Ok(())
    }

    pub fn sidecar(&self) -> ProfileSidecar {
        ProfileSidecar {
            jump: self.jump,
            ode_step: self.ode_step,
            horizon: self.horizon,
            samples: self.t_grid.len(),
            tail: self.tail,
            tail_minus: self.tail_minus,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileSidecar {
    pub jump: JumpSpec,
    pub ode_step: f64,
    pub horizon: f64,
    pub samples: usize,
    pub tail: TailFit,
    pub tail_minus: TailFit,
}

#[derive(Debug, Clone, Copy)]
pub struct AnsatzOptions {
    /// `|s|` beyond which the profile is replaced by linear interpolation.
    pub threshold: f64,
    pub ode_step: f64,
}

impl Default for AnsatzOptions {
    fn default() -> Self {
        AnsatzOptions { threshold: DEFAULT_THRESHOLD, ode_step: DEFAULT_STEP }
    }
}

impl AnsatzOptions {
    fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 0.5) {
            return Err(Error::InvalidArgument(format!("threshold must lie in (0, 1/2), got {}", self.threshold)));
        }
        Ok(())
    }
}

/// Profile long enough to cover the core band `|s| ≤ θ` at this ε.
fn profile_for(j: &JumpSpec, eps: f64, opts: &AnsatzOptions) -> Result<Profile1D> {
    solve_profile(j, (opts.threshold / eps).max(10.0), opts.ode_step)
}

/// Chord coordinate `G(s)` of the ansatz, returned as `(G, 1 − G)`.
fn chord(profile: &Profile1D, eps: f64, theta: f64, s: f64) -> (f64, f64) {
    if s <= -0.5 {
        return (0.0, 1.0);
    }
    if s >= 0.5 {
        return (1.0, 0.0);
    }
    if s.abs() <= theta {
        return profile.eval(s / eps);
    }
    let w = (s.abs() - theta) / (0.5 - theta);
    if s < 0.0 {
        let (gm, _) = profile.eval(-theta / eps);
        let g = gm * (1.0 - w);
        (g, 1.0 - g)
    } else {
        let (_, hp) = profile.eval(theta / eps);
        let h = hp * (1.0 - w);
        (1.0 - h, h)
    }
}

#[derive(Debug, Clone)]
pub struct Ansatz {
    pub u: ScalarField,
    pub gradient: VectorField2,
    /// `u − m⁺·x` on the `+` face.
    pub face_offset: f64,
}

pub fn build_ansatz(j: &JumpSpec, eps: f64, grid: &Grid2D) -> Result<Ansatz> {
    build_ansatz_with(j, eps, grid, &AnsatzOptions::default())
}

/// The interpolated 1D competitor sampled on a `ν`-aligned grid.
///
/// `u = s (m⁻·ν) + t (m⁻·τ) + κ Γ(s)` with `κ = p·ν` and
/// `Γ(s) = ∫_{−1/2}^{s} G`, so `∇u = m⁻ + G p` exactly.
pub fn build_ansatz_with(j: &JumpSpec, eps: f64, grid: &Grid2D, opts: &AnsatzOptions) -> Result<Ansatz> {
    check_eps(eps)?;
    opts.validate()?;
    let nu = grid.frame.nu;
    if (nu[0] - j.nu[0]).abs() > 1e-12 || (nu[1] - j.nu[1]).abs() > 1e-12 {
        return Err(Error::FrameMismatch);
    }
    let profile = profile_for(j, eps, opts)?;
    let theta = opts.threshold;
    let chord_at = |s: f64| chord(&profile, eps, theta, s);

    let tau = grid.frame.tau;
    let mm = j.m_minus();
    let kappa = j.p[0] * nu[0] + j.p[1] * nu[1];
    let a_nu = mm[0] * nu[0] + mm[1] * nu[1];
    let a_tau = mm[0] * tau[0] + mm[1] * tau[1];

    // Γ at each s node by piecewise Gauss-Legendre, split at the branch kinks.
    let gl = GaussLegendre::new(GL_POINTS);
    let kinks = [-0.5, -theta, theta, 0.5];
    let integral = |a: f64, b: f64| -> f64 {
        let mut cuts = vec![a];
        cuts.extend(kinks.iter().copied().filter(|&k| k > a && k < b));
        cuts.push(b);
        cuts.windows(2).map(|w| gl.integrate(w[0], w[1], |s| chord_at(s).0)).sum()
    };
    let ss: Vec<f64> = (0..grid.n_s).map(|i| grid.s(i)).collect();
    let mut gamma = vec![0.0; grid.n_s];
    let start = ss[0].min(-0.5);
    let mut acc = integral(start, ss[0]) - integral(start, -0.5);
    gamma[0] = acc;
    for i in 1..grid.n_s {
        acc += integral(ss[i - 1], ss[i]);
        gamma[i] = acc;
    }
    let face_offset = kappa * (integral(-0.5, 0.5) - 0.5);

    let mut u = Vec::with_capacity(grid.len());
    let mut c1 = Vec::with_capacity(grid.len());
    let mut c2 = Vec::with_capacity(grid.len());
    for i in 0..grid.n_s {
        let (g, _) = chord_at(ss[i]);
        let m = [mm[0] + g * j.p[0], mm[1] + g * j.p[1]];
        for jj in 0..grid.n_t {
            let t = grid.t(jj);
            u.push(ss[i] * a_nu + t * a_tau + kappa * gamma[i]);
            c1.push(m[0]);
            c2.push(m[1]);
        }
    }
    // exact boundary traces
    if (grid.s(0) + 0.5).abs() <= 1e-12 {
        fill_row(&mut c1, &mut c2, grid, 0, mm);
    }
    if (grid.s(grid.n_s - 1) - 0.5).abs() <= 1e-12 {
        fill_row(&mut c1, &mut c2, grid, grid.n_s - 1, j.m_plus());
    }
    let t_jump = a_tau * grid.t_length();
    Ok(Ansatz {
        u: ScalarField::with_jump(*grid, u, t_jump)?,
        gradient: VectorField2::new(*grid, c1, c2)?,
        face_offset,
    })
}

fn fill_row(c1: &mut [f64], c2: &mut [f64], grid: &Grid2D, i: usize, m: [f64; 2]) {
    for jj in 0..grid.n_t {
        c1[grid.idx(i, jj)] = m[0];
        c2[grid.idx(i, jj)] = m[1];
    }
}

/// Energy of the 1D competitor on the unit cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneDEnergy {
    pub epsilon: f64,
    /// Direct quadrature of the energy density over `|s| ≤ 1/2`.
    pub total: f64,
    pub compression: f64,
    pub bending: f64,
    /// Quadrature of the BPS square over the core band (zero for the exact profile).
    pub core_square: f64,
    pub cost: f64,
    /// `total − cost`, assembled from strictly positive pieces: the outer
    /// branches plus core square minus the tail deficit of the core integral.
    pub excess: f64,
    pub quad_points: usize,
}

/// Minimum number of Gauss points in the core band: panels no wider than ε.
pub fn min_quad_points(eps: f64, threshold: f64) -> usize {
    GL_POINTS * ((2.0 * threshold / eps).ceil() as usize).max(1)
}

pub fn oned_energy(j: &JumpSpec, eps: f64, quad_points: usize) -> Result<OneDEnergy> {
    oned_energy_with(j, eps, quad_points, &AnsatzOptions::default())
}

pub fn oned_energy_with(j: &JumpSpec, eps: f64, quad_points: usize, opts: &AnsatzOptions) -> Result<OneDEnergy> {
    check_eps(eps)?;
    opts.validate()?;
    let theta = opts.threshold;
    let need = min_quad_points(eps, theta);
    if quad_points < need {
        return Err(Error::QuadratureTooCoarse { got: quad_points, need });
    }
    let profile = profile_for(j, eps, opts)?;
    let cost = jump_cost(j)?.cost;
    let [p1, _] = j.p;
    let half_p1sq = 0.5 * p1 * p1;
    // |ν₁p₁| = p₁²/|p|
    let nu_p1 = p1 * p1 / j.p_norm();
    let rate = 0.5 * j.p_norm();

    let gl = GaussLegendre::new(GL_POINTS);
    let panels = quad_points.div_ceil(GL_POINTS);

    // core: C = (p₁²/2) g(1−g), ε|∂x²u| = |ν₁p₁| W(g)
    let (mut core_c, mut core_b, mut core_sq) = (0.0, 0.0, 0.0);
    let width = 2.0 * theta / panels as f64;
    for k in 0..panels {
        let a = -theta + k as f64 * width;
        for (s, w) in gl.mapped(a, a + width) {
            let (g, gc) = profile.eval(s / eps);
            let c = half_p1sq * g * gc;
            let eb = nu_p1 * w_factored(rate, g, gc);
            core_c += w * 0.5 * c * c / eps;
            core_b += w * 0.5 * eb * eb / eps;
            core_sq += w * 0.5 * (c - eb) * (c - eb) / eps;
        }
    }

    // outer branches, with r = remaining chord fraction at |s| = θ
    let outer = |r: f64| -> (f64, f64) {
        let len = 0.5 - theta;
        let comp = gl.integrate(0.0, 1.0, |w| {
            let h = r * (1.0 - w);
            let c = half_p1sq * h * (1.0 - h);
            0.5 * c * c / eps
        }) * len;
        let slope = nu_p1 * r / len;
        (comp, 0.5 * eps * slope * slope * len)
    };
    let (gm, _) = profile.eval(-theta / eps);
    let (_, hp) = profile.eval(theta / eps);
    let (cm, bm) = outer(gm);
    let (cp, bp) = outer(hp);

    // ∫₀^r Q(g) dg with Q = (p₁²/2) g(1−g)
    let deficit = |r: f64| nu_p1 * half_p1sq * r * r * (0.5 - r / 3.0);
    let excess = cm + bm + cp + bp + core_sq - deficit(gm) - deficit(hp);

    let compression = core_c + cm + cp;
    let bending = core_b + bm + bp;
    Ok(OneDEnergy {
        epsilon: eps,
        total: compression + bending,
        compression,
        bending,
        core_square: core_sq,
        cost,
        excess,
        quad_points: panels * GL_POINTS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logistic(k: f64, t: f64) -> f64 {
        1.0 / (1.0 + (-k * t).exp())
    }

    #[test]
    fn well_values() {
        let j = JumpSpec::new(-1.0, 1.0).unwrap();
        assert!((well_potential(0.5, &j) - 0.25).abs() < 1e-15);
        assert_eq!(well_potential(0.0, &j), 0.0);
        assert!(well_potential(1.0, &j).abs() < 1e-15);
        let j = JumpSpec::new(0.0, 2.0).unwrap();
        assert!((well_potential(0.5, &j) - 2f64.sqrt() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn logistic_oracles() {
        for (am, ap, k) in [(-1.0, 1.0, 1.0), (0.0, 2.0, 2f64.sqrt())] {
            let j = JumpSpec::new(am, ap).unwrap();
            let p = solve_profile(&j, 10.0, 1e-3).unwrap();
            assert_eq!(p.value(0.0), 0.5);
            let err = p.t_grid.iter().zip(&p.g).map(|(&t, &g)| (g - logistic(k, t)).abs()).fold(0.0, f64::max);
            assert!(err < 1e-8, "{err}");
            assert!((p.tail.c2 / k - 1.0).abs() < 0.1);
            assert!((p.tail_minus.c2 / k - 1.0).abs() < 0.1);
            assert!(p.g.windows(2).all(|w| w[0] <= w[1]));
            assert!(p.g.iter().all(|&g| g > 0.0 && g < 1.0));
        }
    }

    #[test]
    fn interpolation_between_samples() {
        let j = JumpSpec::new(-1.0, 1.0).unwrap();
        let p = solve_profile(&j, 10.0, 1e-2).unwrap();
        for t in [-12.3, -3.14159, 0.0012, 2.71828, 11.5] {
            let (g, h) = p.eval(t);
            assert!((g - logistic(1.0, t)).abs() < 1e-9, "{t}");
            assert!((h / logistic(1.0, -t) - 1.0).abs() < 1e-7, "{t}");
        }
    }

    #[test]
    fn step_too_large() {
        let j = JumpSpec::new(-3.0, 3.0).unwrap();
        assert!(matches!(solve_profile(&j, 10.0, 2.0), Err(Error::StepTooLarge { .. })));
        assert!(solve_profile(&j, 0.0, 1e-3).is_err());
    }

    #[test]
    fn ansatz_branches() {
        let j = JumpSpec::new(-1.0, 1.0).unwrap();
        let grid = Grid2D::cell(j.nu, 41, 8).unwrap();
        let a = build_ansatz(&j, 0.05, &grid).unwrap();
        assert_eq!(a.gradient.at(0, 3), j.m_minus());
        assert_eq!(a.gradient.at(40, 3), j.m_plus());
        let mid = a.gradient.at(20, 3);
        assert!((mid[0] - 0.0).abs() < 1e-15 && (mid[1] - 0.5).abs() < 1e-15);
        // faces sit on the affine potentials
        for jj in 0..8 {
            let [x, z] = grid.point(0, jj);
            assert!((a.u.get(0, jj) - (-x + 0.5 * z)).abs() < 1e-14);
            let [x, z] = grid.point(40, jj);
            assert!((a.u.get(40, jj) - (x + 0.5 * z + a.face_offset)).abs() < 1e-14);
        }
    }

    #[test]
    fn frame_mismatch() {
        let j = JumpSpec::new(0.0, 2.0).unwrap();
        let grid = Grid2D::cell([1.0, 0.0], 9, 8).unwrap();
        assert!(matches!(build_ansatz(&j, 0.1, &grid), Err(Error::FrameMismatch)));
    }

    #[test]
    fn oned_energy_near_cost() {
        let j = JumpSpec::new(-1.0, 1.0).unwrap();
        let e = oned_energy(&j, 0.05, 256).unwrap();
        assert!((e.total - 2.0 / 3.0).abs() < 1e-2);
        assert!(e.excess > 0.0);
        assert!((e.total - e.cost - e.excess).abs() < 1e-10, "{e:?}");
        assert!(matches!(oned_energy(&j, 0.01, 16), Err(Error::QuadratureTooCoarse { .. })));
    }

    #[test]
    fn excess_matches_asymptotics() {
        // two tails of the logistic: q²(1/(3ε) + 16ε − 4), q = e^{−1/(4ε)}
        let j = JumpSpec::new(-1.0, 1.0).unwrap();
        for eps in [0.05, 0.025, 0.0125] {
            let e = oned_energy(&j, eps, min_quad_points(eps, 0.25)).unwrap();
            let q = (-0.25 / eps).exp();
            let approx = q * q * (1.0 / (3.0 * eps) + 16.0 * eps - 4.0);
            assert!((e.excess / approx - 1.0).abs() < 0.05, "{eps}: {} vs {approx}", e.excess);
        }
    }
}
