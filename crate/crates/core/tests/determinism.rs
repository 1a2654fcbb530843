use smectic_core::diagnostics::{ansatz_sweep, SweepSettings};
use smectic_core::*;

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn energy_is_bit_identical_across_thread_counts() {
    let j = JumpSpec::new(0.0, 2.0).unwrap();
    let grid = Grid2D::cell(j.nu, 801, 64).unwrap();
    let u = build_ansatz(&j, 0.01, &grid).unwrap().u;
    let run = || {
        let b = energy_eps(&u, 0.01).unwrap();
        [b.total, b.bps_square, b.bps_flux, b.residual].map(f64::to_bits)
    };
    let one = in_pool(1, run);
    for t in [2, 3, 8] {
        assert_eq!(one, in_pool(t, run), "{t} threads");
    }
}

#[test]
fn minimizer_is_bit_identical_across_thread_counts() {
    let j = JumpSpec::new(-1.0, 1.0).unwrap();
    let cp = CellProblem::new(j, 0.1, 81, 16, Initializer::Random { seed: 5, amplitude: 0.01 }).unwrap();
    let run = || {
        let r = minimize_energy(&cp).unwrap();
        (r.iterations, r.breakdown.total.to_bits(), r.u_star.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>())
    };
    assert_eq!(in_pool(1, run), in_pool(4, run));
}

#[test]
fn sweep_report_is_bit_identical_across_thread_counts() {
    let j = JumpSpec::new(-1.0, 1.0).unwrap();
    let run = || {
        let r = ansatz_sweep(&j, &[0.1, 0.05, 0.025], &SweepSettings::default()).unwrap();
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        csv
    };
    assert_eq!(in_pool(1, run), in_pool(6, run));
}
