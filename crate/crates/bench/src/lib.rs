//! Fixtures shared by the kernel benchmarks.

use smectic_core::{build_ansatz, Grid2D, Initializer, JumpSpec, ScalarField};
use smectic_core::minimize::{resolved_samples, PINNED_ROWS};
use smectic_core::{CellProblem, Result};

/// The unit jump `a⁻ = −1 → a⁺ = 1` used throughout the benches.
pub fn unit_jump() -> JumpSpec {
    JumpSpec::new(-1.0, 1.0).expect("unit jump is valid")
}

/// Smooth periodic-in-t field on an `n × n` unit square.
pub fn smooth_field(n: usize) -> Result<ScalarField> {
    let grid = Grid2D::unit_square(n, n)?;
    let two_pi = 2.0 * std::f64::consts::PI;
    ScalarField::from_fn(grid, |x, z| (two_pi * x).sin() * (two_pi * z).cos() + 0.3 * x * x)
}

/// Ansatz state for the cell problem at `eps` with the default resolution,
/// face rows set to the affine boundary data.
pub fn cell_fixture(eps: f64, n_t: usize) -> Result<(CellProblem, ScalarField)> {
    let j = unit_jump();
    let n_s = resolved_samples(eps);
    let cp = CellProblem::new(j, eps, n_s, n_t, Initializer::Ansatz)?;
    let ansatz = build_ansatz(&j, eps, &cp.grid)?;
    let mut u = ansatz.u;
    let g = cp.grid;
    let (mm, mp) = (j.m_minus(), j.m_plus());
    for i in (0..PINNED_ROWS).chain(g.n_s - PINNED_ROWS..g.n_s) {
        for jj in 0..g.n_t {
            let [x, z] = g.point(i, jj);
            u.values_mut()[g.idx(i, jj)] = if i < PINNED_ROWS {
                mm[0] * x + mm[1] * z
            } else {
                mp[0] * x + mp[1] * z + ansatz.face_offset
            };
        }
    }
    Ok((cp, u))
}
