//! The property battery: every invariant of the toolkit as a named, self-contained check.
//!
//! Checks are grouped into suites so a caller can run a cheap subset (`formulas`)
//! or everything. Each check builds its own inputs from fixed seeds and reports a
//! verdict plus a one-line measurement.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::calculus::{deriv_x, deriv_xx, deriv_z, integrate, integrate_where};
use crate::diagnostics::{
    ansatz_sweep, compression_defect, concentration_radius, defect_check, div_check, entropy_production, lp_norm,
    rate_fit, rotated_field, SweepSettings,
};
use crate::energy::{div_sigma, energy_densities, energy_eps, sigma_point};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{Frame, Grid2D};
use crate::hopf_cole::{bps_residual, hopf_cole_field, log_phi_unit_layer, HeatData};
use crate::jump::{jump_cost, jump_cost_between, jump_condition_holds, limit_energy, DefectPath, JumpSpec, SegmentStates};
use crate::minimize::{minimize_energy, CellModel, CellProblem, Initializer};
use crate::profile::{build_ansatz, min_quad_points, oned_energy, solve_profile, well_potential};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Core,
    Energy,
    Formulas,
    Profile,
    Minimize,
    Diagnostics,
}

impl Suite {
    pub const ALL: [Suite; 6] =
        [Suite::Core, Suite::Energy, Suite::Formulas, Suite::Profile, Suite::Minimize, Suite::Diagnostics];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Core => "core",
            Suite::Energy => "energy",
            Suite::Formulas => "formulas",
            Suite::Profile => "profile",
            Suite::Minimize => "minimize",
            Suite::Diagnostics => "diagnostics",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite '{s}'")))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub suite: Suite,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Verdict = Result<(bool, String)>;
type CheckFn = fn() -> Verdict;

fn checks(suite: Suite) -> &'static [(&'static str, CheckFn)] {
    match suite {
        Suite::Core => &[
            ("stencil_exactness", stencil_exactness),
            ("derivative_order", derivative_order),
            ("integrate_examples", integrate_examples),
            ("integrate_linear_monotone", integrate_linear_monotone),
        ],
        Suite::Energy => &[
            ("energy_examples", energy_examples),
            ("decomposition_residual_order", decomposition_residual_order),
            ("lower_bound", lower_bound),
            ("young_slack", young_slack),
            ("sigma_on_parabola", sigma_on_parabola),
            ("div_sigma_examples", div_sigma_examples),
        ],
        Suite::Formulas => &[
            ("dual_formula_agreement", dual_formula_agreement),
            ("jump_cost_examples", jump_cost_examples),
            ("swap_symmetry", swap_symmetry),
            ("cubic_small_jump", cubic_small_jump),
            ("sigma_flux_consistency", sigma_flux_consistency),
            ("jump_condition", jump_condition),
            ("limit_energy_examples", limit_energy_examples),
        ],
        Suite::Profile => &[
            ("well_identity", well_identity),
            ("logistic_oracle", logistic_oracle),
            ("profile_monotone_bounded", profile_monotone_bounded),
            ("tail_rate", tail_rate),
            ("equipartition_order", equipartition_order),
            ("oned_excess_rate", oned_excess_rate),
            ("ansatz_branches_and_curl", ansatz_branches_and_curl),
            ("hopf_cole", hopf_cole),
        ],
        Suite::Minimize => &[
            ("gradient_zero_on_well", gradient_zero_on_well),
            ("gradient_fd", gradient_fd),
            ("descent_and_sandwich", descent_and_sandwich),
            ("bps_square_decreasing", bps_square_decreasing),
        ],
        Suite::Diagnostics => &[
            ("defect_inequality", defect_inequality),
            ("rewrite_order", rewrite_order),
            ("rotated_divergence", rotated_divergence),
            ("lp_norms", lp_norms),
            ("production_concentration", production_concentration),
        ],
    }
}

pub fn check_names(suite: Suite) -> Vec<&'static str> {
    checks(suite).iter().map(|(n, _)| *n).collect()
}

/// Runs every check of `suite`, in declaration order.
pub fn run_suite(suite: Suite) -> Vec<CheckOutcome> {
    checks(suite)
        .iter()
        .map(|(name, f)| {
            let (passed, detail) = match f() {
                Ok(v) => v,
                Err(e) => (false, format!("error: {e}")),
            };
            CheckOutcome { suite, name, passed, detail }
        })
        .collect()
}

pub fn run_all() -> Vec<CheckOutcome> {
    Suite::ALL.into_iter().flat_map(run_suite).collect()
}

// ---------------------------------------------------------------- helpers

fn orders(errs: &[f64]) -> Vec<f64> {
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn all_in(xs: &[f64], lo: f64, hi: f64) -> bool {
    xs.iter().all(|x| (lo..=hi).contains(x))
}

fn fmt_list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn well_field(grid: Grid2D, a: f64) -> Result<ScalarField> {
    ScalarField::from_fn(grid, |x, z| a * x + 0.5 * a * a * z)
}

/// Smooth, non-polynomial test field on the unit square.
fn trig_field(grid: Grid2D) -> Result<ScalarField> {
    ScalarField::from_fn(grid, |x, z| {
        0.3 * (2.0 * PI * x).sin() * (2.0 * PI * z).cos() + 0.2 * (2.0 * PI * (x + 2.0 * z) + 0.4).sin() + 0.1 * (PI * x).cos()
    })
}

fn interior_error(f: &ScalarField, exact: impl Fn(f64, f64) -> f64, margin: usize) -> f64 {
    let g = *f.grid();
    let mut worst = 0.0_f64;
    for i in margin..g.n_s - margin {
        for j in 0..g.n_t {
            if !g.periodic_t && (j < margin || j >= g.n_t - margin) {
                continue;
            }
            let [x, z] = g.point(i, j);
            worst = worst.max((f.get(i, j) - exact(x, z)).abs());
        }
    }
    worst
}

/// Max over the fixed physical box `|x|, |z| <= r`.
fn boxed_max(f: &ScalarField, r: f64) -> f64 {
    let g = *f.grid();
    let mut worst = 0.0_f64;
    for i in 0..g.n_s {
        for j in 0..g.n_t {
            let [x, z] = g.point(i, j);
            if x.abs() <= r && z.abs() <= r {
                worst = worst.max(f.get(i, j).abs());
            }
        }
    }
    worst
}

fn unit_jump() -> JumpSpec {
    JumpSpec::new(-1.0, 1.0).expect("valid jump")
}

fn random_pairs(seed: u64, n: usize) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let am: f64 = rng.random_range(-3.0..=3.0);
        let ap: f64 = rng.random_range(-3.0..=3.0);
        if (ap - am).abs() >= 1e-6 {
            out.push((am, ap));
        }
    }
    out
}

// ---------------------------------------------------------------- core

fn stencil_exactness() -> Verdict {
    let mut worst = 0.0_f64;
    for frame in [Frame::axis_aligned(), Frame::from_normal([0.6, 0.8])?] {
        let grid = Grid2D::new(17, 13, 1.0 / 16.0, 1.0 / 12.0, frame, false)?;
        let c = ScalarField::from_fn(grid, |_, _| 3.25)?;
        worst = worst.max(deriv_x(&c)?.max_abs()).max(deriv_z(&c)?.max_abs());
        let affine = ScalarField::from_fn(grid, |x, z| 0.4 - 1.3 * x + 2.1 * z)?;
        worst = worst.max(deriv_xx(&affine)?.max_abs());
        let w = well_field(grid, 0.7)?;
        worst = worst.max(deriv_x(&w)?.map(|v| v - 0.7).max_abs());
        worst = worst.max(deriv_z(&w)?.map(|v| v - 0.245).max_abs());
        let q = ScalarField::from_fn(grid, |x, _| 0.5 * x * x)?;
        worst = worst.max(deriv_xx(&q)?.map(|v| v - 1.0).max_abs_interior(1));
    }
    Ok((worst < 1e-11, format!("max stencil defect {worst:.2e}")))
}

fn derivative_order() -> Verdict {
    let f = |x: f64, z: f64| (2.0 * PI * x).sin() * (2.0 * PI * z).sin();
    let fx = |x: f64, z: f64| 2.0 * PI * (2.0 * PI * x).cos() * (2.0 * PI * z).sin();
    let fz = |x: f64, z: f64| 2.0 * PI * (2.0 * PI * x).sin() * (2.0 * PI * z).cos();
    let fxx = |x: f64, z: f64| -4.0 * PI * PI * f(x, z);
    let (mut ex, mut ez, mut exx) = (Vec::new(), Vec::new(), Vec::new());
    for m in [32usize, 64, 128] {
        let h = 1.0 / m as f64;
        let grid = Grid2D::new(m + 1, m, h, h, Frame::axis_aligned(), true)?;
        let u = ScalarField::from_fn(grid, f)?;
        ex.push(interior_error(&deriv_x(&u)?, fx, 1));
        ez.push(interior_error(&deriv_z(&u)?, fz, 1));
        exx.push(interior_error(&deriv_xx(&u)?, fxx, 1));
    }
    let all: Vec<f64> = [orders(&ex), orders(&ez), orders(&exx)].concat();
    Ok((all_in(&all, 1.9, 2.1), format!("observed orders {all:.3?}")))
}

fn integrate_examples() -> Verdict {
    let sq = Grid2D::unit_square(33, 33)?;
    let one = integrate(&ScalarField::from_fn(sq, |_, _| 1.0)?);
    let odd = integrate(&ScalarField::from_fn(sq, |x, _| x)?);
    let per = Grid2D::new(33, 32, 1.0 / 32.0, 1.0 / 32.0, Frame::axis_aligned(), true)?;
    let sin2 = integrate(&ScalarField::from_fn(per, |_, z| (2.0 * PI * z).sin().powi(2))?);
    let pass = (one - 1.0).abs() < 1e-14 && odd.abs() < 1e-14 && (sin2 - 0.5).abs() < 1e-12;
    Ok((pass, format!("∫1 = {one}, ∫x = {odd:.1e}, ∫sin²(2πt) = {sin2}")))
}

fn integrate_linear_monotone() -> Verdict {
    let grid = Grid2D::cell([0.6, 0.8], 41, 24)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut pass = true;
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let f: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let d: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(0.0..1.0)).collect();
        let (a, b): (f64, f64) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let ff = ScalarField::new(grid, f.clone())?;
        let gg = ScalarField::new(grid, f.iter().zip(&d).map(|(x, y)| x + y).collect())?;
        let comb = ff.zip_map(&gg, |x, y| a * x + b * y)?;
        let lhs = integrate(&comb);
        let rhs = a * integrate(&ff) + b * integrate(&gg);
        worst = worst.max((lhs - rhs).abs());
        pass &= integrate(&ff) <= integrate(&gg);
    }
    pass &= worst < 1e-12;
    Ok((pass, format!("max linearity defect {worst:.2e}; monotone on 50 ordered pairs: {pass}")))
}

// ---------------------------------------------------------------- energy

fn energy_examples() -> Verdict {
    let sq = Grid2D::unit_square(33, 33)?;
    let w = energy_eps(&well_field(sq, 0.7)?, 0.3)?;
    let z = energy_eps(&ScalarField::from_fn(sq, |_, z| z)?, 0.1)?;
    let j = unit_jump();
    let eps = 0.02;
    let cell = Grid2D::cell(j.nu, (8.0 / eps) as usize + 1, 4)?;
    let ans = energy_eps(&build_ansatz(&j, eps, &cell)?.u, eps)?;
    let pass = w.total <= 1e-20
        && w.compression <= 1e-20
        && w.bending <= 1e-20
        && (z.compression - 5.0).abs() < 1e-12
        && z.bending < 1e-20
        && (ans.total - 2.0 / 3.0).abs() < 1e-3;
    Ok((
        pass,
        format!("well {:.1e}; u = z gives {}; ansatz at ε = 0.02 gives {:.6}", w.total, z.total, ans.total),
    ))
}

fn decomposition_residual_order() -> Verdict {
    let mut res = Vec::new();
    let mut split = 0.0_f64;
    for m in [64usize, 128, 256] {
        let b = energy_eps(&trig_field(Grid2D::unit_square(m + 1, m + 1)?)?, 0.2)?;
        split = split.max((b.total - (b.compression + b.bending)).abs() / b.total);
        res.push(b.residual.abs());
    }
    let o = orders(&res);
    Ok((
        split <= 1e-12 && all_in(&o, 1.8, 2.2),
        format!("split defect {split:.1e}; residuals {}, orders {o:.3?}", fmt_list(&res)),
    ))
}

fn lower_bound() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sq = Grid2D::unit_square(49, 49)?;
    let mut pass = true;
    let mut margin = f64::INFINITY;
    for _ in 0..20 {
        let c: [f64; 6] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let u = ScalarField::from_fn(sq, |x, z| {
            c[0] * x + c[1] * z + c[2] * (3.0 * x + c[3]).sin() * (2.0 * z).cos() + c[4] * x * x * z + c[5] * (x - z).powi(3)
        })?;
        let eps = rng.random_range(0.05..0.5);
        let b = energy_eps(&u, eps)?;
        let slack = b.total - b.bps_flux + b.residual.abs();
        margin = margin.min(slack);
        pass &= slack >= 0.0;
    }
    Ok((pass, format!("min of E − flux + |residual| over 20 fields: {margin:.3e}")))
}

fn young_slack() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let grid = Grid2D::cell([0.8, -0.6], 49, 24)?;
    let mut worst = f64::INFINITY;
    for _ in 0..20 {
        let c: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let u = ScalarField::from_fn(grid, |x, z| c[0] * x * x + c[1] * (4.0 * x + z).sin() + c[2] * x * z + c[3] * z)?;
        let eps = rng.random_range(0.05..0.5);
        let d = energy_densities(&u, eps)?;
        let prod = integrate(&d.product).abs();
        let b = d.breakdown();
        worst = worst.min(b.compression + b.bending - prod);
    }
    Ok((worst >= -1e-12, format!("min slack {worst:.3e}")))
}

fn sigma_on_parabola() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let a: f64 = rng.random_range(-5.0..5.0);
        let s = sigma_point([a, 0.5 * a * a]);
        worst = worst.max((s[0] - a.powi(3) / 3.0).abs() / (1.0 + a.abs().powi(3)));
        worst = worst.max((s[1] + 0.5 * a * a).abs());
    }
    let ex = sigma_point([1.0, 0.5]);
    let pass = worst < 1e-14 && (ex[0] - 1.0 / 3.0).abs() < 1e-15 && ex[1] == -0.5;
    Ok((pass, format!("max deviation from (a³/3, −a²/2): {worst:.2e}")))
}

fn div_sigma_examples() -> Verdict {
    let sq = Grid2D::unit_square(33, 33)?;
    let well = div_sigma(&well_field(sq, 0.7)?)?;
    let wmax = well.divergence.max_abs_interior(1).max(well.product.max_abs_interior(1));
    let mut errs = Vec::new();
    for m in [32usize, 64, 128] {
        let g = Grid2D::unit_square(m + 1, m + 1)?;
        let d = div_sigma(&ScalarField::from_fn(g, |x, _| 0.5 * x * x)?)?;
        let prod = interior_error(&d.product, |x, _| -0.5 * x * x, 2);
        if prod > 1e-12 {
            return Ok((false, format!("product form off by {prod:.2e}")));
        }
        errs.push(boxed_max(&d.divergence.zip_map(&d.product, |a, b| a - b)?, 0.375));
    }
    let o = orders(&errs);
    let pass = wmax <= 1e-14 && all_in(&o, 1.8, 2.2);
    Ok((pass, format!("well {wmax:.1e}; x²/2 divergence errors {}, orders {o:.3?}", fmt_list(&errs))))
}

// ---------------------------------------------------------------- formulas

fn dual_formula_agreement() -> Verdict {
    let worst = random_pairs(20240601, 10_000)
        .par_iter()
        .map(|&(am, ap)| {
            let c = jump_cost_between(am, ap)?;
            Ok((c.first_form.abs() - c.second_form).abs() / c.second_form)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok((worst <= 1e-12, format!("max relative disagreement {worst:.2e} over 10⁴ pairs")))
}

fn jump_cost_examples() -> Verdict {
    let a = jump_cost_between(-1.0, 1.0)?;
    let b = jump_cost_between(0.0, 2.0)?;
    let d = jump_cost_between(0.7, 0.7)?;
    let pass = (a.cost - 2.0 / 3.0).abs() < 1e-15
        && (b.cost - 8.0 / (12.0 * 2f64.sqrt())).abs() < 1e-15
        && d.cost == 0.0
        && d.degenerate;
    Ok((pass, format!("±1: {}, (0,2): {}, degenerate: {} ({})", a.cost, b.cost, d.cost, d.degenerate)))
}

fn swap_symmetry() -> Verdict {
    let mut worst = 0.0_f64;
    for (am, ap) in random_pairs(5, 2000) {
        let x = jump_cost_between(am, ap)?.cost;
        let y = jump_cost_between(ap, am)?.cost;
        worst = worst.max((x - y).abs() / x);
    }
    Ok((worst <= 1e-12, format!("max relative asymmetry {worst:.2e}")))
}

fn cubic_small_jump() -> Verdict {
    // centred jumps: cost/Δ³ is exactly the limit, so only round-off may show
    let mut centred = 0.0_f64;
    // one-sided jumps approach the same limit at first order in δ
    let mut one_sided = Vec::new();
    for a0 in [-2.0_f64, -0.5, 0.0, 0.3, 1.7] {
        let limit = 1.0 / (12.0 * (1.0 + a0 * a0).sqrt());
        for k in 1..=6 {
            let d = 10f64.powi(-k);
            let (am, ap) = (a0 - d, a0 + d);
            let ratio = jump_cost_between(am, ap)?.cost / (ap - am).powi(3);
            centred = centred.max((ratio - limit).abs() / limit);
        }
        let errs: Vec<f64> = (1..=4)
            .map(|k| {
                let d = 10f64.powi(-k);
                let c = jump_cost_between(a0, a0 + d)?.cost / ((a0 + d) - a0).powi(3);
                Ok((c - limit).abs() / limit / d)
            })
            .collect::<Result<_>>()?;
        one_sided.push(errs.iter().cloned().fold(0.0, f64::max));
    }
    let bounded = one_sided.iter().all(|&c| c < 1.0);
    Ok((
        centred < 1e-12 && bounded,
        format!("centred ratio error {centred:.2e}; one-sided error / δ at most {:.3}", one_sided.iter().cloned().fold(0.0, f64::max)),
    ))
}

fn sigma_flux_consistency() -> Verdict {
    let mut worst = 0.0_f64;
    for (am, ap) in random_pairs(17, 2000) {
        let j = JumpSpec::new(am, ap)?;
        let (sp, sm) = (sigma_point(j.m_plus()), sigma_point(j.m_minus()));
        let flux = ((sp[0] - sm[0]) * j.nu[0] + (sp[1] - sm[1]) * j.nu[1]).abs();
        let c = jump_cost(&j)?.cost;
        // the direct flux cancels O(1) values of Σ, so compare on that scale
        let scale = 1.0 + sp.iter().chain(&sm).fold(0.0_f64, |a, b| a.max(b.abs()));
        worst = worst.max((flux - c).abs() / scale).max((j.entropy_flux() - c).abs() / scale);
    }
    Ok((worst <= 1e-12, format!("max gap to the Σ flux, relative to |Σ|: {worst:.2e}")))
}

fn jump_condition() -> Verdict {
    let mut pass = true;
    for (am, ap) in random_pairs(19, 500) {
        pass &= crate::jump::check_jump_condition(&JumpSpec::new(am, ap)?);
    }
    let j = unit_jump();
    let same = jump_condition_holds([0.7, 0.245], [0.7, 0.245], [0.0, 1.0]);
    let bad = jump_condition_holds(j.m_minus(), j.m_plus(), [0.0, 1.0]);
    Ok((pass && same && !bad, format!("500 random specs admissible: {pass}; ν ⟂ p rejected: {}", !bad)))
}

fn limit_energy_examples() -> Verdict {
    let pm = SegmentStates { a_minus: -1.0, a_plus: 1.0 };
    let one = limit_energy(&DefectPath::new(vec![[0.0, -0.5], [0.0, 0.5]], vec![pm])?)?;
    let empty = limit_energy(&DefectPath::new(vec![], vec![])?)?;
    let two = DefectPath::new(vec![[0.0, -0.5], [0.0, 0.0], [0.0, 0.5]], vec![pm, pm])?.limit_energy()?;
    let skew = DefectPath::new(vec![[0.0, 0.0], [1.0, 1.0]], vec![pm]).is_err();
    let pass = (one - 2.0 / 3.0).abs() < 1e-15 && empty == 0.0 && (two - 2.0 / 3.0).abs() < 1e-15 && skew;
    Ok((pass, format!("unit segment {one}, empty {empty}, split {two}, misaligned rejected {skew}")))
}

// ---------------------------------------------------------------- profile

fn well_identity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut worst = 0.0_f64;
    for (am, ap) in random_pairs(29, 1000) {
        let j = JumpSpec::new(am, ap)?;
        for _ in 0..5 {
            let g: f64 = rng.random_range(-0.5..1.5);
            let exact = 0.5 * j.p_norm() * (g * (1.0 - g)).abs();
            worst = worst.max((well_potential(g, &j) - exact).abs() / (1.0 + exact));
        }
        worst = worst.max(well_potential(0.0, &j).abs()).max(well_potential(1.0, &j).abs());
    }
    let w = well_potential(0.5, &JumpSpec::new(0.0, 2.0)?);
    let pass = worst <= 1e-12 && (w - 2f64.sqrt() / 4.0).abs() < 1e-15;
    Ok((pass, format!("max deviation from |p|g(1−g)/2: {worst:.2e}")))
}

fn logistic_oracle() -> Verdict {
    let mut worst = 0.0_f64;
    for (am, ap, rate) in [(-1.0, 1.0, 1.0), (0.0, 2.0, 2f64.sqrt())] {
        let p = solve_profile(&JumpSpec::new(am, ap)?, 10.0, 1e-3)?;
        for (&t, &g) in p.t_grid.iter().zip(&p.g) {
            worst = worst.max((g - 1.0 / (1.0 + (-rate * t).exp())).abs());
        }
    }
    Ok((worst < 1e-8, format!("max error against the logistic {worst:.2e}")))
}

fn profile_monotone_bounded() -> Verdict {
    let mut pass = true;
    for (am, ap) in random_pairs(31, 20) {
        let j = JumpSpec::new(am, ap)?;
        let p = solve_profile(&j, 12.0 / j.p_norm().min(6.0), 1e-3)?;
        pass &= p.g.windows(2).all(|w| w[1] >= w[0]);
        pass &= p.g.iter().zip(&p.g_complement).all(|(&g, &h)| g > 0.0 && h > 0.0 && g <= 1.0);
        pass &= p.value(0.0) == 0.5;
    }
    Ok((pass, format!("20 random specs nondecreasing, strictly inside (0, 1), g(0) = 1/2: {pass}")))
}

fn tail_rate() -> Verdict {
    let mut worst = 0.0_f64;
    let mut pass = true;
    for (am, ap) in random_pairs(37, 20) {
        let j = JumpSpec::new(am, ap)?;
        let rate = 0.5 * j.p_norm();
        // the fit window [T/2, 0.9T] must sit in the exponential tail
        let horizon = (30.0 / rate).max(10.0);
        let p = solve_profile(&j, horizon, horizon / 2e4)?;
        for fit in [p.tail, p.tail_minus] {
            pass &= fit.c1 > 0.0 && fit.c2 > 0.0;
            worst = worst.max((fit.c2 - rate).abs() / rate);
        }
    }
    Ok((pass && worst <= 0.1, format!("max relative gap of the fitted decay rate to |p|/2: {worst:.2e}")))
}

fn equipartition_order() -> Verdict {
    let j = JumpSpec::new(0.0, 2.0)?;
    let eps = 0.05;
    let mut errs = Vec::new();
    for layers in [8.0, 16.0, 32.0] {
        let grid = Grid2D::cell(j.nu, (layers / eps) as usize + 1, 4)?;
        let d = energy_densities(&build_ansatz(&j, eps, &grid)?.u, eps)?;
        let diff = d.compression.zip_map(&d.bending, |a, b| a - b)?;
        let mut worst = 0.0_f64;
        for i in 0..grid.n_s {
            if grid.s(i).abs() <= 0.2 {
                worst = worst.max(diff.get(i, 0).abs());
            }
        }
        errs.push(worst);
    }
    let o = orders(&errs);
    Ok((all_in(&o, 1.8, 2.2), format!("core density gaps {}, orders {o:.3?}", fmt_list(&errs))))
}

fn oned_excess_rate() -> Verdict {
    let mut pass = true;
    let mut notes = Vec::new();
    for (am, ap) in [(-1.0, 1.0), (0.0, 2.0), (-0.4, 1.1)] {
        let j = JumpSpec::new(am, ap)?;
        let cost = jump_cost(&j)?.cost;
        let eps = [0.1, 0.05, 0.025];
        let mut ex = Vec::new();
        for &e in &eps {
            let r = oned_energy(&j, e, min_quad_points(e, 0.25))?;
            pass &= r.total >= cost;
            ex.push(r.excess);
        }
        pass &= ex.iter().all(|&x| x > 0.0) && ex.windows(2).all(|w| w[1] < w[0]);
        let xs: Vec<f64> = eps.iter().map(|e| 1.0 / e).collect();
        let ys: Vec<f64> = ex.iter().map(|x| x.ln()).collect();
        let fit = rate_fit(&xs, &ys)?;
        pass &= fit.slope < 0.0;
        notes.push(format!("({am},{ap}): c₂ = {:.3}", -fit.slope));
    }
    let r = oned_energy(&unit_jump(), 0.05, min_quad_points(0.05, 0.25))?;
    pass &= (r.total - 2.0 / 3.0).abs() < 1e-2;
    Ok((pass, notes.join("; ")))
}

fn ansatz_branches_and_curl() -> Verdict {
    let mut pass = true;
    let mut curl = 0.0_f64;
    for (am, ap, eps) in [(-1.0, 1.0, 0.02), (0.0, 2.0, 0.05), (1.5, -0.5, 0.05)] {
        let j = JumpSpec::new(am, ap)?;
        let grid = Grid2D::cell(j.nu, (8.0 / eps) as usize + 1, 8)?;
        let a = build_ansatz(&j, eps, &grid)?;
        let (m1, m2) = a.gradient.components();
        let (mm, mp) = (j.m_minus(), j.m_plus());
        let last = grid.n_s - 1;
        let mid = (grid.n_s - 1) / 2;
        for jj in 0..grid.n_t {
            pass &= a.gradient.at(0, jj) == mm && a.gradient.at(last, jj) == mp;
            let c = a.gradient.at(mid, jj);
            pass &= (c[0] - 0.5 * (mm[0] + mp[0])).abs() < 1e-14 && (c[1] - 0.5 * (mm[1] + mp[1])).abs() < 1e-14;
        }
        let r = deriv_z(&m1)?.zip_map(&deriv_x(&m2)?, |a, b| a - b)?;
        curl = curl.max(r.max_abs_interior(1));
    }
    Ok((pass && curl <= 1e-12, format!("face and midpoint values exact: {pass}; max interior curl {curl:.2e}")))
}

fn hopf_cole() -> Verdict {
    let eps = 0.1;
    let grid = Grid2D::unit_square(65, 65)?;
    let one = hopf_cole_field(&HeatData::from_log_fn(&grid, |_, _| 0.0), eps, &grid)?;
    let k = 1.3;
    let affine = hopf_cole_field(&HeatData::from_log_fn(&grid, |x, z| k * x + eps * k * k * z), eps, &grid)?;
    let exact = ScalarField::from_fn(grid, |x, z| 2.0 * eps * (k * x + eps * k * k * z))?;
    let aff_err = affine.zip_map(&exact, |a, b| a - b)?.max_abs();
    let aff_res = bps_residual(&affine, eps)?.max_abs_interior(1);

    // Richardson-extrapolate out the O(h²) error at fixed layers per ε
    let energy = |e: f64, layers: f64| -> Result<f64> {
        let m = (layers / e) as usize;
        let g = Grid2D::unit_square(m + 1, m + 1)?;
        let u = hopf_cole_field(&HeatData::from_log_fn(&g, log_phi_unit_layer(e)), e, &g)?;
        Ok(energy_eps(&u, e)?.total)
    };
    let mut gaps = Vec::new();
    for e in [0.2, 0.1, 0.05] {
        let (coarse, fine) = (energy(e, 16.0)?, energy(e, 32.0)?);
        gaps.push(((4.0 * fine - coarse) / 3.0 - 2.0 / 3.0).abs());
    }
    let pass = one.max_abs() <= 1e-15 && aff_err < 1e-5 && aff_res < 1e-5 && gaps.windows(2).all(|w| w[1] < w[0]) && gaps[2] < 1e-4;
    Ok((
        pass,
        format!("φ ≡ 1 → {:.0e}; affine error {aff_err:.1e}, residual {aff_res:.1e}; |E − 2/3| {}", one.max_abs(), fmt_list(&gaps)),
    ))
}

// ---------------------------------------------------------------- minimize

fn gradient_zero_on_well() -> Verdict {
    // a single parabola state is not an admissible jump, so evaluate the full
    // discrete energy without the face constraint; the well must share the
    // model's τ-increment, which for the ±1 jump is that of m⁺
    let a = 1.0;
    let cp = CellProblem::new(unit_jump(), 0.1, 33, 12, Initializer::Linear)?;
    let model = CellModel::new(&cp)?;
    let u = ScalarField::from_fn(cp.grid, |x, z| a * x + 0.5 * a * a * z)?;
    let (e, g) = model.energy_full(u.values(), true);
    let worst = g.map_or(f64::INFINITY, |g| g.iter().fold(0.0, |m, v| m.max(v.abs())));
    Ok((e <= 1e-24 && worst <= 1e-12, format!("energy {e:.1e}, max gradient entry {worst:.2e}")))
}

fn gradient_fd() -> Verdict {
    let j = JumpSpec::new(0.0, 2.0)?;
    let cp = CellProblem::new(j, 0.1, 41, 16, Initializer::Random { seed: 3, amplitude: 0.05 })?;
    let mut settings = cp.settings.clone();
    settings.max_iterations = 30;
    settings.fd_check_every = Some(10);
    let r = minimize_energy(&cp.clone().with_settings(settings))?;
    let err = r.fd_check_max_error.unwrap_or(f64::INFINITY);
    Ok((err < 1e-6, format!("max relative FD error over checked iterates {err:.2e}")))
}

fn descent_and_sandwich() -> Verdict {
    let mut pass = true;
    let mut notes = Vec::new();
    for (am, ap, init) in [
        (-1.0, 1.0, Initializer::Ansatz),
        (-1.0, 1.0, Initializer::Linear),
        (0.0, 2.0, Initializer::Random { seed: 9, amplitude: 0.02 }),
    ] {
        let j = JumpSpec::new(am, ap)?;
        let eps = 0.1;
        let cp = CellProblem::new(j, eps, 161, 16, init)?;
        let r = minimize_energy(&cp)?;
        let cost = jump_cost(&j)?.cost;
        let r1d = oned_energy(&j, eps, 4096)?.total;
        pass &= r.history.windows(2).all(|w| w[1] <= w[0]);
        pass &= r.breakdown.total <= r.initial_energy;
        pass &= !r.converged || r.final_gradient_norm <= cp.settings.gradient_tolerance.max(r.gradient_floor);
        pass &= r.breakdown.total >= cost * 0.98;
        if init == Initializer::Ansatz {
            pass &= r.breakdown.total <= r1d + 1e-12;
        }
        notes.push(format!("({am},{ap}) {:?}: {:.6} in {} its", init, r.breakdown.total, r.iterations));
    }
    Ok((pass, notes.join("; ")))
}

fn bps_square_decreasing() -> Verdict {
    let j = unit_jump();
    let eps = [0.2, 0.1, 0.05];
    let vals = eps
        .par_iter()
        .map(|&e| {
            let cp = CellProblem::new(j, e, (8.0 / e) as usize + 1, 8, Initializer::Ansatz)?;
            Ok(minimize_energy(&cp)?.breakdown.bps_square)
        })
        .collect::<Result<Vec<f64>>>()?;
    let pass = vals.windows(2).all(|w| w[1] < w[0]);
    Ok((pass, format!("bps_square at ε = {eps:?}: {}", fmt_list(&vals))))
}

// ---------------------------------------------------------------- diagnostics

fn defect_inequality() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut pass = true;
    let mut n = 0;
    for (am, ap) in random_pairs(43, 10) {
        let j = JumpSpec::new(am, ap)?;
        let eps = rng.random_range(0.03..0.2);
        let grid = Grid2D::cell(j.nu, (8.0 / eps) as usize + 1, 4)?;
        let u = build_ansatz(&j, eps, &grid)?.u;
        let d = defect_check(&u, eps)?;
        let direct = compression_defect(&u)?;
        pass &= d.holds && (direct * direct - d.defect_sq).abs() <= 1e-12 * d.defect_sq.max(1e-300);
        n += 1;
    }
    let sq = Grid2D::unit_square(33, 33)?;
    for _ in 0..10 {
        let v: Vec<f64> = (0..sq.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        pass &= defect_check(&ScalarField::new(sq, v)?, rng.random_range(0.01..1.0))?.holds;
        n += 1;
    }
    let well = compression_defect(&well_field(sq, 0.7)?)?;
    pass &= well < 1e-14;
    Ok((pass, format!("inequality held on {n} fields; well defect {well:.1e}")))
}

fn rewrite_order() -> Verdict {
    let (mut rw, mut i12) = (Vec::new(), Vec::new());
    for m in [32usize, 64, 128] {
        let p = entropy_production(&trig_field(Grid2D::unit_square(m + 1, m + 1)?)?)?;
        rw.push(p.rewrite_residual);
        i12.push(p.i12_residual);
    }
    let o = orders(&i12);
    let pass = rw.iter().all(|&r| r < 1e-9) && all_in(&o, 1.8, 2.2);
    Ok((pass, format!("rewrite residuals {}; product-rule residual orders {o:.3?}", fmt_list(&rw))))
}

fn rotated_divergence() -> Verdict {
    let sq = Grid2D::unit_square(33, 33)?;
    let xz = div_check(&rotated_field(&ScalarField::from_fn(sq, |x, z| x * z)?)?)?;
    let smooth = div_check(&rotated_field(&trig_field(Grid2D::unit_square(65, 65)?)?)?)?;
    let j = unit_jump();
    let eps = 0.05;
    let grid = Grid2D::cell(j.nu, (8.0 / eps) as usize + 1, 8)?;
    let ans = div_check(&rotated_field(&build_ansatz(&j, eps, &grid)?.u)?)?;
    Ok((xz < 1e-14 && smooth < 1e-10 && ans <= 1e-10, format!("x·z {xz:.1e}; trig {smooth:.1e}; ansatz {ans:.1e}")))
}

fn lp_norms() -> Verdict {
    let sq = Grid2D::unit_square(33, 33)?;
    let two = lp_norm(&ScalarField::from_fn(sq, |_, _| 2.0)?, 6.0)?;
    let j = unit_jump();
    let eps = 0.05;
    let grid = Grid2D::cell(j.nu, (8.0 / eps) as usize + 1, 8)?;
    let ux = deriv_x(&build_ansatz(&j, eps, &grid)?.u)?;
    let mut worst = 0.0_f64;
    for p in [1.0, 2.0, 6.0, 8.0, f64::INFINITY] {
        worst = worst.max(lp_norm(&ux, p)?);
    }
    let rejects = lp_norm(&ux, 0.5).is_err();
    let pass = (two - 2.0).abs() < 1e-12 && worst <= 1.0 + grid.h_s && rejects;
    Ok((pass, format!("‖2‖₆ = {two}; max ansatz ‖∂x u‖_p = {worst:.6}; p < 1 rejected {rejects}")))
}

fn production_concentration() -> Verdict {
    let j = unit_jump();
    let eps = 0.02;
    let grid = Grid2D::cell(j.nu, (8.0 / eps) as usize + 1, 8)?;
    let p = entropy_production(&build_ansatz(&j, eps, &grid)?.u)?;
    let inside = integrate_where(&p.field.map(f64::abs), |s, _| s.abs() <= 10.0 * eps) / p.mass;
    let radius = concentration_radius(&p.field, 0.95)?;
    let report = ansatz_sweep(&j, &[0.1, 0.05, 0.025, 0.0125], &SweepSettings::default())?;
    let masses: Vec<f64> = report.records.iter().map(|r| r.production_mass).collect();
    let bounded = masses.iter().all(|m| m.is_finite() && *m <= 2.0 * masses[0].max(masses[masses.len() - 1]));
    let sorted = report.records.windows(2).all(|w| w[0].eps > w[1].eps);
    Ok((
        inside >= 0.95 && bounded && sorted,
        format!("{:.3}% of mass within 10ε (radius {radius:.4}); sweep masses {}", 100.0 * inside, fmt_list(&masses)),
    ))
}
