//! Compression defect, entropy production, rotated fields, norms, fits and
//! ε-sweep reports.

use std::io::Write;

use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::calculus::{axis_weights, integrate, integrate_by, pairwise_sum};
use crate::energy::{check_eps, check_finite, energy_densities, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField2};
use crate::grid::Grid2D;
use crate::jump::{jump_cost, JumpSpec};
use crate::profile::{build_ansatz, min_quad_points, oned_energy, DEFAULT_THRESHOLD};
use crate::stencil::DiffOps;

/// Rows skipped at each open edge when reporting interior residuals.
pub const INTERIOR_MARGIN: usize = 2;

fn strain(u: &ScalarField) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    check_finite(u)?;
    let ops = DiffOps::new(u.grid());
    let ux = ops.dx(u.values(), u.t_jump())?;
    let uz = ops.dz(u.values(), u.t_jump())?;
    let c = ux.iter().zip(&uz).map(|(a, b)| b - 0.5 * a * a).collect();
    Ok((ux, uz, c))
}

/// `‖∂z u − ½(∂x u)²‖_{L²}`.
pub fn compression_defect(u: &ScalarField) -> Result<f64> {
    let (_, _, c) = strain(u)?;
    let nt = u.grid().n_t;
    Ok(integrate_by(u.grid(), |i, j| c[i * nt + j] * c[i * nt + j]).sqrt())
}

/// Both sides of `‖C‖² ≤ 2ε E_ε`, integrated node by node with the same
/// weights so the inequality survives rounding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefectCheck {
    pub defect_sq: f64,
    pub two_eps_energy: f64,
    pub holds: bool,
}

pub fn defect_check(u: &ScalarField, eps: f64) -> Result<DefectCheck> {
    check_eps(eps)?;
    let (_, _, c) = strain(u)?;
    let b = DiffOps::new(u.grid()).dxx(u.values(), u.t_jump())?;
    let nt = u.grid().n_t;
    let e2 = eps * eps;
    let defect_sq = integrate_by(u.grid(), |i, j| c[i * nt + j] * c[i * nt + j]);
    let two_eps_energy = integrate_by(u.grid(), |i, j| {
        let k = i * nt + j;
        c[k] * c[k] + e2 * b[k] * b[k]
    });
    Ok(DefectCheck { defect_sq, two_eps_energy, holds: defect_sq <= two_eps_energy })
}

/// Entropy production `∂z f(v) + ∂x F(v)` for `v = ∂x u`, `f = −v²/2`, `F = v³/3`.
#[derive(Debug, Clone)]
pub struct EntropyProduction {
    pub field: ScalarField,
    /// L¹ mass of `field`.
    pub mass: f64,
    /// Interior max of `∂z v + ∂x f(v) − ∂x(∂z u − ½(∂x u)²)`.
    pub rewrite_residual: f64,
    /// Interior max of `field − (I₁ + I₂)`, with `I₁ = −∂x(vC)`, `I₂ = C ∂x v`.
    pub i12_residual: f64,
}

pub fn entropy_production(u: &ScalarField) -> Result<EntropyProduction> {
    let (v, _, c) = strain(u)?;
    let grid = *u.grid();
    let ops = DiffOps::new(&grid);
    let f: Vec<f64> = v.iter().map(|x| -0.5 * x * x).collect();
    let big_f: Vec<f64> = v.iter().map(|x| x * x * x / 3.0).collect();

    let mut prod = ops.dz(&f, 0.0)?;
    for (p, q) in prod.iter_mut().zip(ops.dx(&big_f, 0.0)?) {
        *p += q;
    }

    let dzv = ops.dz(&v, 0.0)?;
    let dxf = ops.dx(&f, 0.0)?;
    let dxc = ops.dx(&c, 0.0)?;
    let rewrite: Vec<f64> = (0..grid.len()).map(|k| dzv[k] + dxf[k] - dxc[k]).collect();

    let vc: Vec<f64> = v.iter().zip(&c).map(|(a, b)| a * b).collect();
    let dxvc = ops.dx(&vc, 0.0)?;
    let dxv = ops.dx(&v, 0.0)?;
    let i12: Vec<f64> = (0..grid.len()).map(|k| prod[k] - (-dxvc[k] + c[k] * dxv[k])).collect();

    let field = ScalarField::new(grid, prod)?;
    let mass = integrate(&field.map(f64::abs));
    Ok(EntropyProduction {
        field,
        mass,
        rewrite_residual: ScalarField::new(grid, rewrite)?.max_abs_interior(INTERIOR_MARGIN),
        i12_residual: ScalarField::new(grid, i12)?.max_abs_interior(INTERIOR_MARGIN),
    })
}

/// Smallest `r` such that the band `|s| ≤ r` carries `fraction` of `∫|f|`.
pub fn concentration_radius(f: &ScalarField, fraction: f64) -> Result<f64> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!("fraction must lie in (0, 1], got {fraction}")));
    }
    let g = *f.grid();
    let (ws, wt) = axis_weights(&g);
    let rows: Vec<f64> = (0..g.n_s)
        .map(|i| ws[i] * f.row(i).iter().zip(&wt).map(|(v, w)| v.abs() * w).sum::<f64>())
        .collect();
    let total = pairwise_sum(&rows);
    if total == 0.0 {
        return Ok(0.0);
    }
    let mut order: Vec<usize> = (0..g.n_s).collect();
    order.sort_by(|&a, &b| g.s(a).abs().total_cmp(&g.s(b).abs()).then(a.cmp(&b)));
    let mut acc = 0.0;
    for i in order {
        acc += rows[i];
        if acc >= fraction * total {
            return Ok(g.s(i).abs());
        }
    }
    Ok(0.5 * g.s_length())
}

/// `m = (∂x u, −∂z u)`, divergence-free when `u` is a potential.
pub fn rotated_field(u: &ScalarField) -> Result<VectorField2> {
    let ops = DiffOps::new(u.grid());
    let m1 = ops.dx(u.values(), u.t_jump())?;
    let m2: Vec<f64> = ops.dz(u.values(), u.t_jump())?.into_iter().map(|v| -v).collect();
    VectorField2::new(*u.grid(), m1, m2)
}

/// Interior max of the discrete `∂z m₁ + ∂x m₂`.
pub fn div_check(m: &VectorField2) -> Result<f64> {
    let ops = DiffOps::new(m.grid());
    let mut d = ops.dz(m.first(), 0.0)?;
    for (a, b) in d.iter_mut().zip(ops.dx(m.second(), 0.0)?) {
        *a += b;
    }
    Ok(ScalarField::new(*m.grid(), d)?.max_abs_interior(INTERIOR_MARGIN))
}

/// Quadrature `Lᵖ` norm; `p = ∞` gives the max norm.
pub fn lp_norm(f: &ScalarField, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidArgument(format!("Lp norm needs p >= 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(f.max_abs());
    }
    let scale = f.max_abs();
    if scale == 0.0 {
        return Ok(0.0);
    }
    // normalise first so large p cannot overflow
    Ok(scale * integrate(&f.map(|v| (v.abs() / scale).powf(p))).powf(1.0 / p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub correlation: f64,
}

/// Least-squares line `y ≈ slope·x + intercept` with Pearson correlation.
pub fn rate_fit(xs: &[f64], ys: &[f64]) -> Result<RateFit> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument(format!("series lengths differ: {} vs {}", xs.len(), ys.len())));
    }
    if xs.len() < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 points, got {}", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("series contain non-finite values".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let correlation = if syy == 0.0 { 0.0 } else { sxy / (sxx * syy).sqrt() };
    Ok(RateFit { slope, intercept: my - slope * mx, correlation })
}

/// Spectrally weighted `H⁻¹` norm treating the sample box as a torus.
/// Indicative only: on an open axis the periodic extension is artificial.
pub fn hminus1_indicative(f: &ScalarField) -> f64 {
    let g = f.grid();
    let (ns, nt) = (g.n_s, g.n_t);
    let (ls, lt) = (ns as f64 * g.h_s, nt as f64 * g.h_t);
    let mut planner = FftPlanner::<f64>::new();
    let fft_t = planner.plan_fft_forward(nt);
    let fft_s = planner.plan_fft_forward(ns);
    let mut data: Vec<Complex<f64>> = f.values().iter().map(|&v| Complex::new(v, 0.0)).collect();
    data.par_chunks_mut(nt).for_each(|row| fft_t.process(row));
    let mut cols: Vec<Vec<Complex<f64>>> = (0..nt).map(|j| (0..ns).map(|i| data[i * nt + j]).collect()).collect();
    cols.par_iter_mut().for_each(|c| fft_s.process(c));
    let freq = |k: usize, n: usize, l: f64| {
        let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        2.0 * std::f64::consts::PI * kk / l
    };
    let norm = (ns * nt) as f64;
    let terms: Vec<f64> = cols
        .iter()
        .enumerate()
        .flat_map(|(j, c)| {
            c.iter().enumerate().map(move |(i, z)| {
                let w = 1.0 + freq(i, ns, ls).powi(2) + freq(j, nt, lt).powi(2);
                z.norm_sqr() / w
            })
        })
        .collect();
    (pairwise_sum(&terms) * ls * lt / (norm * norm)).sqrt()
}

/// One ε of an ansatz sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub eps: f64,
    pub n_s: usize,
    pub breakdown: EnergyBreakdown,
    pub compression_defect: f64,
    /// `(p, ‖∂x u‖_{Lᵖ})`
    pub lp_norms: Vec<(f64, f64)>,
    pub production_mass: f64,
    pub concentration_radius: f64,
    /// Continuum cell energy of the 1D competitor minus the jump cost.
    pub oned_excess: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequenceReport {
    pub jump: JumpSpec,
    pub cost: f64,
    pub records: Vec<SequenceRecord>,
    /// `log(oned_excess)` against `1/ε`.
    pub excess_rate: Option<RateFit>,
    /// `log(compression_defect)` against `log ε`.
    pub defect_rate: Option<RateFit>,
}

#[derive(Debug, Clone)]
pub struct SweepSettings {
    /// Samples per ε across the cell (`h_s ≤ ε/layers`).
    pub layers: f64,
    pub n_t: usize,
    pub p_list: Vec<f64>,
    pub concentration: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings { layers: 8.0, n_t: 16, p_list: vec![2.0, 6.0, 8.0, f64::INFINITY], concentration: 0.95 }
    }
}

/// Samples along `s` needed for `h_s ≤ ε/layers` on the unit cell.
pub fn cell_samples(eps: f64, layers: f64) -> usize {
    (layers / eps).ceil() as usize + 1
}

fn sweep_one(j: &JumpSpec, eps: f64, settings: &SweepSettings) -> Result<SequenceRecord> {
    let grid = Grid2D::cell(j.nu, cell_samples(eps, settings.layers), settings.n_t)?;
    let ansatz = build_ansatz(j, eps, &grid)?;
    let u = &ansatz.u;
    let dens = energy_densities(u, eps)?;
    let breakdown = dens.breakdown();
    let ux = ScalarField::new(grid, DiffOps::new(&grid).dx(u.values(), u.t_jump())?)?;
    let lp_norms = settings.p_list.iter().map(|&p| Ok((p, lp_norm(&ux, p)?))).collect::<Result<Vec<_>>>()?;
    let prod = entropy_production(u)?;
    let oned = oned_energy(j, eps, min_quad_points(eps, DEFAULT_THRESHOLD))?;
    Ok(SequenceRecord {
        eps,
        n_s: grid.n_s,
        breakdown,
        compression_defect: compression_defect(u)?,
        lp_norms,
        production_mass: prod.mass,
        concentration_radius: concentration_radius(&prod.field, settings.concentration)?,
        oned_excess: oned.excess,
    })
}

/// Measures the 1D ansatz along a sequence of ε (run concurrently).
pub fn ansatz_sweep(j: &JumpSpec, eps_list: &[f64], settings: &SweepSettings) -> Result<SequenceReport> {
    for &e in eps_list {
        check_eps(e)?;
    }
    let mut eps: Vec<f64> = eps_list.to_vec();
    eps.sort_by(|a, b| b.total_cmp(a));
    eps.dedup();
    let records = eps.par_iter().map(|&e| sweep_one(j, e, settings)).collect::<Result<Vec<_>>>()?;

    let fit = |pts: Vec<(f64, f64)>| -> Option<RateFit> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().filter(|p| p.1.is_finite()).unzip();
        rate_fit(&xs, &ys).ok()
    };
    let excess_rate = fit(records.iter().filter(|r| r.oned_excess > 0.0).map(|r| (1.0 / r.eps, r.oned_excess.ln())).collect());
    let defect_rate =
        fit(records.iter().filter(|r| r.compression_defect > 0.0).map(|r| (r.eps.ln(), r.compression_defect.ln())).collect());
    Ok(SequenceReport { jump: *j, cost: jump_cost(j)?.cost, records, excess_rate, defect_rate })
}

fn p_label(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{p}")
    }
}

impl SequenceReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut head = String::from("eps,n_s,total,compression,bending,bps_square,bps_flux,residual,compression_defect");
        if let Some(r) = self.records.first() {
            for (p, _) in &r.lp_norms {
                head.push_str(&format!(",lp_{}", p_label(*p)));
            }
        }
        head.push_str(",production_mass,concentration_radius,oned_excess");
        writeln!(out, "{head}")?;
        for r in &self.records {
            let b = &r.breakdown;
            let mut line = format!(
                "{},{},{},{},{},{},{},{},{}",
                r.eps, r.n_s, b.total, b.compression, b.bending, b.bps_square, b.bps_flux, b.residual, r.compression_defect
            );
            for (_, v) in &r.lp_norms {
                line.push_str(&format!(",{v}"));
            }
            line.push_str(&format!(",{},{},{}", r.production_mass, r.concentration_radius, r.oned_excess));
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// Summary without per-record detail.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "a_minus": self.jump.a_minus(),
            "a_plus": self.jump.a_plus(),
            "cost": self.cost,
            "eps": self.records.iter().map(|r| r.eps).collect::<Vec<_>>(),
            "excess_rate": self.excess_rate,
            "defect_rate": self.defect_rate,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn well_state_diagnostics() {
        let grid = Grid2D::unit_square(21, 21).unwrap();
        let u = ScalarField::from_fn(grid, |x, z| 0.7 * x + 0.245 * z).unwrap();
        assert!(compression_defect(&u).unwrap() < 1e-14);
        let prod = entropy_production(&u).unwrap();
        assert!(prod.mass < 1e-13 && prod.rewrite_residual < 1e-13);
    }

    #[test]
    fn defect_inequality_is_exact() {
        let grid = Grid2D::unit_square(11, 11).unwrap();
        let u = ScalarField::from_fn(grid, |_, z| z).unwrap();
        let d = defect_check(&u, 0.1).unwrap();
        assert!(d.holds);
        assert_eq!(d.defect_sq, d.two_eps_energy);
    }

    #[test]
    fn xz_is_exactly_divergence_free() {
        let grid = Grid2D::unit_square(9, 13).unwrap();
        let u = ScalarField::from_fn(grid, |x, z| x * z).unwrap();
        let m = rotated_field(&u).unwrap();
        assert!(div_check(&m).unwrap() < 1e-14);
        assert!((m.at(3, 4)[0] - grid.point(3, 4)[1]).abs() < 1e-15);
    }

    #[test]
    fn norms() {
        let grid = Grid2D::unit_square(9, 9).unwrap();
        let two = ScalarField::from_fn(grid, |_, _| 2.0).unwrap();
        assert!((lp_norm(&two, 6.0).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(lp_norm(&two, f64::INFINITY).unwrap(), 2.0);
        assert!(lp_norm(&two, 0.5).is_err());
    }

    #[test]
    fn fits() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [1.0, -1.0, -3.0, -5.0];
        let f = rate_fit(&xs, &ys).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-15 && (f.intercept - 3.0).abs() < 1e-15);
        assert!((f.correlation + 1.0).abs() < 1e-15);
        assert!(rate_fit(&xs[..2], &ys[..2]).is_err());
        assert!(rate_fit(&xs, &ys[..3]).is_err());
    }

    #[test]
    fn hminus1_of_single_mode() {
        // sin(2πt) on a unit torus: ‖·‖² = (1/2)/(1 + 4π²)
        let grid = Grid2D::new(16, 32, 1.0 / 16.0, 1.0 / 32.0, crate::grid::Frame::axis_aligned(), true).unwrap();
        let f = ScalarField::from_fn(grid, |_, z| (2.0 * std::f64::consts::PI * z).sin()).unwrap();
        let want = (0.5 / (1.0 + 4.0 * std::f64::consts::PI.powi(2))).sqrt();
        assert!((hminus1_indicative(&f) - want).abs() < 1e-12);
    }

    #[test]
    fn sweep_records_sorted() {
        let j = JumpSpec::new(-1.0, 1.0).unwrap();
        let settings = SweepSettings { n_t: 4, ..Default::default() };
        let rep = ansatz_sweep(&j, &[0.1, 0.2, 0.15], &settings).unwrap();
        let eps: Vec<f64> = rep.records.iter().map(|r| r.eps).collect();
        assert_eq!(eps, [0.2, 0.15, 0.1]);
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
    }
}
