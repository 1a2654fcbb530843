//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use smectic_core::calculus::integrate_where;
use smectic_core::diagnostics::{concentration_radius, defect_check, rate_fit};
use smectic_core::energy::energy_densities;
use smectic_core::hopf_cole::{bps_residual, log_phi_unit_layer};
use smectic_core::jump::jump_cost_between;
use smectic_core::minimize::cell_energy;
use smectic_core::profile::min_quad_points;
use smectic_core::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn dual_formula() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    let mut worst = 0.0_f64;
    let mut n = 0;
    while n < 10_000 {
        let am: f64 = rng.random_range(-3.0..=3.0);
        let ap: f64 = rng.random_range(-3.0..=3.0);
        if (ap - am).abs() < 1e-6 {
            continue;
        }
        n += 1;
        let c = match jump_cost_between(am, ap) {
            Ok(c) => c,
            Err(e) => return check(false, format!("({am}, {ap}): {e}")),
        };
        // independent evaluation of the closed form
        let oracle = (ap - am).abs().powi(3) / (12.0 * (1.0 + 0.25 * (ap + am).powi(2)).sqrt());
        let rel = (c.first_form.abs() - c.second_form).abs() / c.second_form;
        let rel_oracle = (c.second_form - oracle).abs() / oracle;
        worst = worst.max(rel).max(rel_oracle);
    }
    check(worst <= 1e-12, format!("max relative disagreement {worst:.2e} over {n} pairs"))
}

fn logistic_oracle() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (am, ap, rate) in [(-1.0, 1.0, 1.0), (0.0, 2.0, 2f64.sqrt())] {
        let start = Instant::now();
        let j = JumpSpec::new(am, ap).unwrap();
        let p = match solve_profile(&j, 10.0, 1e-3) {
            Ok(p) => p,
            Err(e) => return check(false, e.to_string()),
        };
        let err = p
            .t_grid
            .iter()
            .zip(&p.g)
            .map(|(&t, &g)| (g - 1.0 / (1.0 + (-rate * t).exp())).abs())
            .fold(0.0, f64::max);
        let dt = start.elapsed();
        pass &= err < 1e-8 && dt < Duration::from_secs(1);
        parts.push(format!("a=({am},{ap}) max err {err:.2e} in {dt:.2?}"));
    }
    check(pass, parts.join("; "))
}

fn exponential_rate() -> Outcome {
    let j = JumpSpec::new(-1.0, 1.0).unwrap();
    let eps = [0.1, 0.05, 0.025, 0.0125];
    let mut excess = Vec::new();
    for &e in &eps {
        match oned_energy(&j, e, min_quad_points(e, 0.25)) {
            Ok(r) => excess.push(r.excess),
            Err(err) => return check(false, err.to_string()),
        }
    }
    let positive = excess.iter().all(|&x| x > 0.0);
    let decreasing = excess.windows(2).all(|w| w[1] < w[0]);
    let xs: Vec<f64> = eps.iter().map(|e| 1.0 / e).collect();
    let ys: Vec<f64> = excess.iter().map(|x| x.ln()).collect();
    let fit = match rate_fit(&xs, &ys) {
        Ok(f) => f,
        Err(e) => return check(false, format!("excess {excess:?}: {e}")),
    };
    check(
        positive && decreasing && fit.slope < 0.0 && fit.correlation <= -0.99,
        format!(
            "excess {:?}, slope {:.4}, correlation {:.6}",
            excess.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>(),
            fit.slope,
            fit.correlation
        ),
    )
}

fn equipartition() -> Outcome {
    let eps = 0.02;
    let j = JumpSpec::new(-1.0, 1.0).unwrap();
    let grid = Grid2D::cell(j.nu, (16.0 / eps) as usize + 1, 8).unwrap();
    let a = build_ansatz(&j, eps, &grid).unwrap();
    let d = energy_densities(&a.u, eps).unwrap();
    let core = |s: f64, _t: f64| s.abs() <= 0.25;
    let c = integrate_where(&d.compression, core);
    let b = integrate_where(&d.bending, core);
    let rel = (c - b).abs() / c.max(b);
    check(rel <= 0.01, format!("core compression {c:.8}, bending {b:.8}, relative gap {rel:.2e}"))
}

fn sandwich() -> Outcome {
    let eps = 0.05;
    let j = JumpSpec::new(-1.0, 1.0).unwrap();
    let cost = jump_cost(&j).unwrap().cost;
    let r1d = oned_energy(&j, eps, 4096).unwrap().total;
    let run = |init| {
        let cp = CellProblem::new(j, eps, 512, 512, init)?;
        minimize_energy(&cp)
    };
    let (ans, lin) = match (run(Initializer::Ansatz), run(Initializer::Linear)) {
        (Ok(a), Ok(l)) => (a, l),
        (Err(e), _) | (_, Err(e)) => return check(false, e.to_string()),
    };
    let t = ans.breakdown.total;
    let lower = t >= cost * (1.0 - 0.02);
    let upper = t <= r1d + 1e-12;
    let agree = (lin.breakdown.total - t).abs() <= 0.01 * t;
    check(
        lower && upper && agree,
        format!(
            "cost {cost:.10} <= T {t:.10} <= r1D {r1d:.10}; linear init {:.10} ({} / {} iterations)",
            lin.breakdown.total, ans.iterations, lin.iterations
        ),
    )
}

fn gradient_fd() -> Outcome {
    let j = JumpSpec::new(-1.0, 1.0).unwrap();
    let eps = 0.1;
    let cp = CellProblem::new(j, eps, 48, 32, Initializer::Linear).unwrap();
    let g = cp.grid;
    let nt = g.n_t;
    let pinned = smectic_core::minimize::PINNED_ROWS;
    let free = pinned * nt..(g.n_s - pinned) * nt;
    let plus = (g.n_s - pinned) * nt..g.len();

    // a generic admissible state: ansatz rows plus seeded noise, affine faces
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let ansatz = build_ansatz(&j, eps, &g).unwrap();
    let mut base = ScalarField::with_jump(g, vec![0.0; g.len()], ansatz.u.t_jump()).unwrap();
    for i in 0..g.n_s {
        for jj in 0..nt {
            let [x, z] = g.point(i, jj);
            let k = g.idx(i, jj);
            base.values_mut()[k] = if i < pinned {
                -x + 0.5 * z
            } else if i >= g.n_s - pinned {
                x + 0.5 * z + 0.03
            } else {
                ansatz.u.values()[k] + 0.02 * rng.random_range(-1.0..1.0)
            };
        }
    }
    let grad = match discrete_energy_gradient(&base, eps, &cp) {
        Ok(gr) => gr,
        Err(e) => return check(false, e.to_string()),
    };
    let h = 1e-5;
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let mut d: Vec<f64> = (0..free.len() + 1).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        d.iter_mut().for_each(|v| *v /= norm);
        let shifted = |sign: f64| {
            let mut u = base.clone();
            let vals = u.values_mut();
            for (k, dv) in free.clone().zip(&d) {
                vals[k] += sign * h * dv;
            }
            for k in plus.clone() {
                vals[k] += sign * h * d[d.len() - 1];
            }
            cell_energy(&u, &cp).unwrap()
        };
        let fd = (shifted(1.0) - shifted(-1.0)) / (2.0 * h);
        let an: f64 = free.clone().zip(&d).map(|(k, dv)| grad.field.values()[k] * dv).sum::<f64>()
            + grad.face_offset * d[d.len() - 1];
        worst = worst.max((fd - an).abs() / an.abs());
    }
    check(worst < 1e-6, format!("max relative error {worst:.2e} over 100 directions"))
}

fn sci(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" ")
}

fn trig_field(grid: Grid2D) -> ScalarField {
    use std::f64::consts::PI;
    ScalarField::from_fn(grid, |x, z| {
        0.3 * (2.0 * PI * x).sin() * (2.0 * PI * z).cos() + 0.2 * (2.0 * PI * (x + 2.0 * z) + 0.4).sin() + 0.1 * (PI * x).cos()
    })
    .unwrap()
}

fn divergence_identity() -> Outcome {
    let errs: Vec<f64> = [32usize, 64, 128]
        .iter()
        .map(|&m| {
            let grid = Grid2D::unit_square(m + 1, m + 1).unwrap();
            let d = div_sigma(&trig_field(grid)).unwrap();
            // compare on a fixed physical interior, |x|, |z| <= 3/8
            let diff = d.divergence.zip_map(&d.product, |a, b| a - b).unwrap();
            let mut worst = 0.0_f64;
            for i in 0..grid.n_s {
                for jj in 0..grid.n_t {
                    let [x, z] = grid.point(i, jj);
                    if x.abs() <= 0.375 && z.abs() <= 0.375 {
                        worst = worst.max(diff.get(i, jj).abs());
                    }
                }
            }
            worst
        })
        .collect();
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
    let pass = ratios.iter().all(|r| (3.5..=4.5).contains(r));
    check(pass, format!("errors {}, ratios {ratios:.3?}", sci(&errs)))
}

fn hopf_cole() -> Outcome {
    // substitution check: for an arbitrary positive φ the discrete BPS residual
    // of 2ε ln φ tracks 2ε(φ_z − εφ_xx)/φ, with O(h²) error
    let eps = 0.1;
    let phi = |x: f64, z: f64| 2.0 + (x * z + 0.3).sin() + x * x;
    let heat = |x: f64, z: f64| {
        let pz = x * (x * z + 0.3).cos();
        let pxx = -z * z * (x * z + 0.3).sin() + 2.0;
        2.0 * eps * (pz - eps * pxx) / phi(x, z)
    };
    let mut sub_errs = Vec::new();
    let mut hc_errs = Vec::new();
    for m in [32usize, 64, 128] {
        let grid = Grid2D::unit_square(m + 1, m + 1).unwrap();
        let u = ScalarField::from_fn(grid, |x, z| 2.0 * eps * phi(x, z).ln()).unwrap();
        let r = bps_residual(&u, eps).unwrap();
        let oracle = ScalarField::from_fn(grid, heat).unwrap();
        sub_errs.push(r.zip_map(&oracle, |a, b| a - b).unwrap().max_abs_interior(2));

        let data = HeatData::from_log_fn(&grid, log_phi_unit_layer(eps));
        let u = match hopf_cole_field(&data, eps, &grid) {
            Ok(u) => u,
            Err(e) => return check(false, e.to_string()),
        };
        hc_errs.push(bps_residual(&u, eps).unwrap().max_abs_interior(2));
    }
    let order = |e: &[f64]| -> Vec<f64> { e.windows(2).map(|w| (w[0] / w[1]).log2()).collect() };
    let (os, oh) = (order(&sub_errs), order(&hc_errs));
    let ok = |o: &[f64]| o.iter().all(|r| (1.8..=2.2).contains(r));
    check(
        ok(&os) && ok(&oh),
        format!("substitution residual orders {os:.3?}; solver BPS residual {}, orders {oh:.3?}", sci(&hc_errs)),
    )
}

fn compression_defect_and_concentration() -> Outcome {
    let j = JumpSpec::new(-1.0, 1.0).unwrap();
    let mut fields: Vec<(ScalarField, f64)> = Vec::new();
    for eps in [0.1, 0.05, 0.02] {
        let grid = Grid2D::cell(j.nu, (8.0 / eps) as usize + 1, 8).unwrap();
        fields.push((build_ansatz(&j, eps, &grid).unwrap().u, eps));
    }
    let tilted = JumpSpec::new(0.0, 2.0).unwrap();
    let grid = Grid2D::cell(tilted.nu, 161, 16).unwrap();
    fields.push((build_ansatz(&tilted, 0.05, &grid).unwrap().u, 0.05));
    let sq = Grid2D::unit_square(65, 65).unwrap();
    fields.push((trig_field(sq), 0.3));
    fields.push((hopf_cole_field(&HeatData::from_log_fn(&sq, log_phi_unit_layer(0.1)), 0.1, &sq).unwrap(), 0.1));
    let mut cp = CellProblem::new(j, 0.1, 41, 8, Initializer::Linear).unwrap();
    cp.settings.max_iterations = 50;
    fields.push((minimize_energy(&cp).unwrap().u_star, 0.1));

    let mut all = true;
    for (u, eps) in &fields {
        let d = defect_check(u, *eps).unwrap();
        all &= d.holds && d.defect_sq <= d.two_eps_energy;
    }

    let eps = 0.02;
    let grid = Grid2D::cell(j.nu, (8.0 / eps) as usize + 1, 8).unwrap();
    let u = build_ansatz(&j, eps, &grid).unwrap().u;
    let prod = entropy_production(&u).unwrap();
    let abs = prod.field.map(f64::abs);
    let inside = integrate_where(&abs, |s, _| s.abs() <= 10.0 * eps) / prod.mass;
    let radius = concentration_radius(&prod.field, 0.95).unwrap();
    check(
        all && inside >= 0.95,
        format!(
            "defect inequality held on {} fields; {:.4}% of production mass within 10ε (95% radius {:.4})",
            fields.len(),
            100.0 * inside,
            radius
        ),
    )
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("dual jump-cost formula", Duration::from_secs(1), dual_formula),
        ("logistic profile oracle", Duration::from_secs(2), logistic_oracle),
        ("exponential rate of the 1D cell energy", Duration::from_secs(10), exponential_rate),
        ("equipartition on the BPS profile", Duration::from_secs(5), equipartition),
        ("cell-problem sandwich", Duration::from_secs(300), sandwich),
        ("gradient vs finite differences", Duration::from_secs(30), gradient_fd),
        ("divergence identity at second order", Duration::from_secs(10), divergence_identity),
        ("Hopf-Cole BPS residual", Duration::from_secs(30), hopf_cole),
        ("compression defect and concentration", Duration::from_secs(10), compression_defect_and_concentration),
    ];
    let mut failures = 0;
    for (k, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let dt = start.elapsed();
        let pass = out.pass && dt <= *limit;
        if !pass {
            failures += 1;
        }
        println!(
            "{} criterion {} ({name}): {} [{dt:.2?}, limit {limit:.0?}]",
            if pass { "PASS" } else { "FAIL" },
            k + 1,
            out.detail
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
