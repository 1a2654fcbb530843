//! BPS fields through the Hopf–Cole substitution.
//!
//! With `u = 2ε ln φ`,
//!
//! ```text
//! ∂z u − ½(∂x u)² − ε∂x²u = 2ε (φ_z − εφ_xx) / φ,
//! ```
//!
//! so BPS solutions are logarithms of positive heat-equation solutions with
//! `z` as time. `φ` is evolved by Crank–Nicolson and carried as `ψ e^{c}`
//! with a running log-scale `c`, so steep data cannot overflow.

use crate::energy::check_eps;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::Grid2D;
use crate::stencil::DiffOps;

/// `ln φ` on the initial line `z = z₀` and on both `x` edges (one value per `z` row).
#[derive(Debug, Clone)]
pub struct HeatData {
    pub log_phi0: Vec<f64>,
    pub log_left: Vec<f64>,
    pub log_right: Vec<f64>,
}

impl HeatData {
    /// From positive samples of `φ`; rejects `φ ≤ 0`.
    pub fn from_phi(grid: &Grid2D, phi0: &[f64], left: &[f64], right: &[f64]) -> Result<Self> {
        let bad = |value: f64, i: usize, j: usize| {
            let [x, z] = grid.point(i, j);
            Error::NonPositivePhi { value, x, z }
        };
        let ln = |v: f64, i: usize, j: usize| if v > 0.0 && v.is_finite() { Ok(v.ln()) } else { Err(bad(v, i, j)) };
        let last = grid.n_s - 1;
        Ok(HeatData {
            log_phi0: phi0.iter().enumerate().map(|(i, &v)| ln(v, i, 0)).collect::<Result<_>>()?,
            log_left: left.iter().enumerate().map(|(j, &v)| ln(v, 0, j)).collect::<Result<_>>()?,
            log_right: right.iter().enumerate().map(|(j, &v)| ln(v, last, j)).collect::<Result<_>>()?,
        })
    }

    /// Samples `ln φ(x, z)` on the initial row and the two edges.
    pub fn from_log_fn(grid: &Grid2D, log_phi: impl Fn(f64, f64) -> f64) -> Self {
        let at = |i: usize, j: usize| {
            let [x, z] = grid.point(i, j);
            log_phi(x, z)
        };
        HeatData {
            log_phi0: (0..grid.n_s).map(|i| at(i, 0)).collect(),
            log_left: (0..grid.n_t).map(|j| at(0, j)).collect(),
            log_right: (0..grid.n_t).map(|j| at(grid.n_s - 1, j)).collect(),
        }
    }
}

fn thomas(lower: f64, diag: f64, upper: f64, rhs: &mut [f64]) {
    // constant-coefficient tridiagonal solve, overwriting rhs
    let n = rhs.len();
    if n == 0 {
        return;
    }
    let mut c = vec![0.0; n];
    let mut beta = diag;
    c[0] = upper / beta;
    rhs[0] /= beta;
    for i in 1..n {
        beta = diag - lower * c[i - 1];
        c[i] = upper / beta;
        rhs[i] = (rhs[i] - lower * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

/// Solves `φ_z = εφ_xx` on an axis-aligned, non-periodic grid (rows along `x`,
/// columns along `z`) and returns `u = 2ε ln φ`.
pub fn hopf_cole_field(data: &HeatData, eps: f64, grid: &Grid2D) -> Result<ScalarField> {
    check_eps(eps)?;
    if !grid.frame.is_axis_aligned() || grid.periodic_t {
        return Err(Error::InvalidArgument("Hopf-Cole solver needs an axis-aligned, non-periodic grid".into()));
    }
    let (nx, nz) = (grid.n_s, grid.n_t);
    if nx < 3 {
        return Err(Error::GridTooCoarse { axis: "s", n: nx, min: 3 });
    }
    if data.log_phi0.len() != nx || data.log_left.len() != nz || data.log_right.len() != nz {
        return Err(Error::ShapeMismatch {
            expected: nx + 2 * nz,
            actual: data.log_phi0.len() + data.log_left.len() + data.log_right.len(),
        });
    }
    if let Some(k) = data.log_phi0.iter().chain(&data.log_left).chain(&data.log_right).position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(k));
    }

    let r = eps * grid.h_t / (grid.h_s * grid.h_s);
    let mut lnphi = vec![0.0; grid.len()];
    let mut c = data.log_phi0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut psi: Vec<f64> = data.log_phi0.iter().map(|v| (v - c).exp()).collect();
    for i in 0..nx {
        lnphi[grid.idx(i, 0)] = data.log_phi0[i];
    }

    let interior = nx - 2;
    let mut rhs = vec![0.0; interior];
    for j in 1..nz {
        // boundary values at the new level share the old scale c
        let bl = (data.log_left[j] - c).exp();
        let br = (data.log_right[j] - c).exp();
        for k in 0..interior {
            let i = k + 1;
            rhs[k] = psi[i] + 0.5 * r * (psi[i - 1] - 2.0 * psi[i] + psi[i + 1]);
        }
        rhs[0] += 0.5 * r * bl;
        rhs[interior - 1] += 0.5 * r * br;
        thomas(-0.5 * r, 1.0 + r, -0.5 * r, &mut rhs);
        psi[0] = bl;
        psi[nx - 1] = br;
        psi[1..nx - 1].copy_from_slice(&rhs);

        for (i, &v) in psi.iter().enumerate() {
            if !(v > 0.0) || !v.is_finite() {
                let [x, z] = grid.point(i, j);
                return Err(Error::NonPositivePhi { value: v * c.exp(), x, z });
            }
        }
        let top = psi.iter().copied().fold(0.0, f64::max);
        c += top.ln();
        for v in psi.iter_mut() {
            *v /= top;
        }
        for (i, &v) in psi.iter().enumerate() {
            lnphi[grid.idx(i, j)] = v.ln() + c;
        }
    }
    ScalarField::new(*grid, lnphi.into_iter().map(|l| 2.0 * eps * l).collect())
}

/// Pointwise `∂z u − ½(∂x u)² − ε∂x²u`.
pub fn bps_residual(u: &ScalarField, eps: f64) -> Result<ScalarField> {
    check_eps(eps)?;
    let ops = DiffOps::new(u.grid());
    let ux = ops.dx(u.values(), u.t_jump())?;
    let uz = ops.dz(u.values(), u.t_jump())?;
    let uxx = ops.dxx(u.values(), u.t_jump())?;
    let r = (0..ux.len()).map(|k| uz[k] - 0.5 * ux[k] * ux[k] - eps * uxx[k]).collect();
    ScalarField::new(*u.grid(), r)
}

/// `ln(2 e^{z/4ε} cosh(x/2ε))`: the BPS layer between `∂x u = ∓1`.
pub fn log_phi_unit_layer(eps: f64) -> impl Fn(f64, f64) -> f64 {
    move |x: f64, z: f64| {
        let y = (x / (2.0 * eps)).abs();
        z / (4.0 * eps) + y + (-2.0 * y).exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Frame;

    fn grid(n: usize) -> Grid2D {
        Grid2D::new(n, n, 1.0 / (n - 1) as f64, 1.0 / (n - 1) as f64, Frame::axis_aligned(), false).unwrap()
    }

    #[test]
    fn substitution_gives_heat_operator() {
        // arbitrary positive φ, not a heat solution
        let eps = 0.3;
        for (x, z) in [(0.1_f64, 0.2_f64), (-0.7, 0.4), (0.33, -0.9)] {
            let phi = 2.0 + (x * z).sin() + x * x;
            let px = z * (x * z).cos() + 2.0 * x;
            let pxx = -z * z * (x * z).sin() + 2.0;
            let pz = x * (x * z).cos();
            let (ux, uz) = (2.0 * eps * px / phi, 2.0 * eps * pz / phi);
            let uxx = 2.0 * eps * (pxx * phi - px * px) / (phi * phi);
            let lhs = uz - 0.5 * ux * ux - eps * uxx;
            let rhs = 2.0 * eps * (pz - eps * pxx) / phi;
            assert!((lhs - rhs).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_phi() {
        let g = grid(11);
        let data = HeatData::from_phi(&g, &[1.0; 11], &[1.0; 11], &[1.0; 11]).unwrap();
        let u = hopf_cole_field(&data, 0.1, &g).unwrap();
        assert!(u.max_abs() < 1e-15);
        assert!(bps_residual(&u, 0.1).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn affine_solution() {
        let (eps, k) = (0.1, 1.7);
        let g = grid(21);
        let data = HeatData::from_log_fn(&g, |x, z| k * x + eps * k * k * z);
        let u = hopf_cole_field(&data, eps, &g).unwrap();
        let exact = ScalarField::from_fn(g, |x, z| 2.0 * eps * (k * x + eps * k * k * z)).unwrap();
        // CN on an exponential: second-order error only
        let err = u.zip_map(&exact, |a, b| a - b).unwrap().max_abs();
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn rejects_nonpositive() {
        let g = grid(5);
        let err = HeatData::from_phi(&g, &[1.0, 1.0, 0.0, 1.0, 1.0], &[1.0; 5], &[1.0; 5]).unwrap_err();
        assert!(matches!(err, Error::NonPositivePhi { value, .. } if value == 0.0));
    }
}
