//! The smectic energy, its BPS split and the entropy field `Σ`.
//!
//! Writing `C = ∂z u − ½(∂x u)²` (compression strain) and `B = ∂x²u`,
//!
//! ```text
//! ½(C²/ε + εB²) = (1/2ε)(C − εB)² + B·C,    B·C = div Σ(∇u)
//! ```
//!
//! for smooth `u`, where `Σ(m) = (m₁m₂ − m₁³/6, −m₁²/2)`. On the grid the
//! first equality is exact per node; the second holds to `O(h²)` and its
//! failure is what [`EnergyBreakdown::residual`] records.

use serde::{Deserialize, Serialize};

use crate::calculus::{axis_weights, integrate, pairwise_sum};
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField2};
use crate::stencil::DiffOps;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// `½∫ C²/ε`
    pub compression: f64,
    /// `½∫ ε B²`
    pub bending: f64,
    pub total: f64,
    /// `½∫ (C − εB)²/ε`
    pub bps_square: f64,
    /// `∫ div Σ(∇u)`, volume integral of the discrete divergence.
    pub bps_flux: f64,
    pub epsilon: f64,
    /// `total − (bps_square + bps_flux)`
    pub residual: f64,
}

/// Pointwise ingredients of the energy on the grid.
#[derive(Debug, Clone)]
pub struct EnergyDensities {
    /// `C = ∂z u − ½(∂x u)²`
    pub strain: ScalarField,
    /// `B = ∂x² u`
    pub curvature: ScalarField,
    /// `C²/(2ε)`
    pub compression: ScalarField,
    /// `εB²/2`
    pub bending: ScalarField,
    /// `(C − εB)²/(2ε)`
    pub bps_square: ScalarField,
    /// Discrete `∂x Σ₁ + ∂z Σ₂`.
    pub divergence: ScalarField,
    /// `B·C`, the smooth-field value of the divergence.
    pub product: ScalarField,
    pub epsilon: f64,
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveEpsilon(eps))
    }
}

pub(crate) fn check_finite(u: &ScalarField) -> Result<()> {
    match u.values().iter().position(|v| !v.is_finite()) {
        Some(k) => Err(Error::NonFinite(k)),
        None => Ok(()),
    }
}

/// `Σ(m) = (m₁m₂ − m₁³/6, −m₁²/2)`.
#[inline]
pub fn sigma_point(m: [f64; 2]) -> [f64; 2] {
    let [m1, m2] = m;
    [m1 * m2 - m1 * m1 * m1 / 6.0, -0.5 * m1 * m1]
}

pub fn sigma(m: &VectorField2) -> VectorField2 {
    let (a, b): (Vec<f64>, Vec<f64>) =
        m.first().iter().zip(m.second()).map(|(&m1, &m2)| sigma_point([m1, m2])).map(|[x, y]| (x, y)).unzip();
    VectorField2::new(*m.grid(), a, b).expect("sigma of finite field is finite")
}

pub fn energy_densities(u: &ScalarField, eps: f64) -> Result<EnergyDensities> {
    check_eps(eps)?;
    check_finite(u)?;
    let grid = *u.grid();
    let ops = DiffOps::new(&grid);
    let ux = ops.dx(u.values(), u.t_jump())?;
    let uz = ops.dz(u.values(), u.t_jump())?;
    let uxx = ops.dxx(u.values(), u.t_jump())?;

    let n = grid.len();
    let mut strain = Vec::with_capacity(n);
    let mut compression = Vec::with_capacity(n);
    let mut bending = Vec::with_capacity(n);
    let mut square = Vec::with_capacity(n);
    let mut product = Vec::with_capacity(n);
    let mut s1 = Vec::with_capacity(n);
    let mut s2 = Vec::with_capacity(n);
    for k in 0..n {
        let c = uz[k] - 0.5 * ux[k] * ux[k];
        let b = uxx[k];
        strain.push(c);
        compression.push(0.5 * c * c / eps);
        bending.push(0.5 * eps * b * b);
        let r = c - eps * b;
        square.push(0.5 * r * r / eps);
        product.push(b * c);
        let [a1, a2] = sigma_point([ux[k], uz[k]]);
        s1.push(a1);
        s2.push(a2);
    }
    let mut divergence = ops.dx(&s1, 0.0)?;
    for (d, v) in divergence.iter_mut().zip(ops.dz(&s2, 0.0)?) {
        *d += v;
    }
    let f = |v: Vec<f64>| ScalarField::new(grid, v);
    Ok(EnergyDensities {
        strain: f(strain)?,
        curvature: f(uxx)?,
        compression: f(compression)?,
        bending: f(bending)?,
        bps_square: f(square)?,
        divergence: f(divergence)?,
        product: f(product)?,
        epsilon: eps,
    })
}

impl EnergyDensities {
    pub fn breakdown(&self) -> EnergyBreakdown {
        let compression = integrate(&self.compression);
        let bending = integrate(&self.bending);
        let total = compression + bending;
        let bps_square = integrate(&self.bps_square);
        let bps_flux = integrate(&self.divergence);
        EnergyBreakdown {
            compression,
            bending,
            total,
            bps_square,
            bps_flux,
            epsilon: self.epsilon,
            residual: total - (bps_square + bps_flux),
        }
    }
}

pub fn energy_eps(u: &ScalarField, eps: f64) -> Result<EnergyBreakdown> {
    Ok(energy_densities(u, eps)?.breakdown())
}

/// Discrete `div Σ(∇u)` together with the product form `∂x²u·(∂z u − ½(∂x u)²)`.
#[derive(Debug, Clone)]
pub struct DivSigma {
    pub divergence: ScalarField,
    pub product: ScalarField,
}

impl DivSigma {
    /// Max |divergence − product| away from the open edges.
    pub fn interior_mismatch(&self, margin: usize) -> f64 {
        self.divergence
            .zip_map(&self.product, |a, b| a - b)
            .map(|d| d.max_abs_interior(margin))
            .unwrap_or(f64::NAN)
    }
}

pub fn div_sigma(u: &ScalarField) -> Result<DivSigma> {
    // ε only scales the density fields we discard here.
    let d = energy_densities(u, 1.0)?;
    Ok(DivSigma { divergence: d.divergence, product: d.product })
}

/// Outward flux `∮ Σ(∇u)·n` through the boundary of the sampled rectangle,
/// a boundary-only cross-check of `bps_flux`. Periodic `t` faces cancel.
pub fn boundary_flux(u: &ScalarField) -> Result<f64> {
    check_finite(u)?;
    let g = *u.grid();
    let ops = DiffOps::new(&g);
    let ux = ops.dx(u.values(), u.t_jump())?;
    let uz = ops.dz(u.values(), u.t_jump())?;
    let (ws, wt) = axis_weights(&g);
    let [nu, tau] = [g.frame.nu, g.frame.tau];
    let flux = |k: usize, dir: [f64; 2]| {
        let s = sigma_point([ux[k], uz[k]]);
        s[0] * dir[0] + s[1] * dir[1]
    };
    let mut parts = Vec::new();
    let last = g.n_s - 1;
    parts.push(pairwise_sum(
        &(0..g.n_t).map(|j| wt[j] * (flux(g.idx(last, j), nu) - flux(g.idx(0, j), nu))).collect::<Vec<_>>(),
    ));
    if !g.periodic_t {
        let lt = g.n_t - 1;
        parts.push(pairwise_sum(
            &(0..g.n_s).map(|i| ws[i] * (flux(g.idx(i, lt), tau) - flux(g.idx(i, 0), tau))).collect::<Vec<_>>(),
        ));
    }
    Ok(parts.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Frame, Grid2D};

    #[test]
    fn well_states_have_zero_energy() {
        let a = 0.7;
        let grid = Grid2D::unit_square(21, 21).unwrap();
        let u = ScalarField::from_fn(grid, |x, z| a * x + 0.5 * a * a * z).unwrap();
        for eps in [1e-3, 0.1, 10.0] {
            let e = energy_eps(&u, eps).unwrap();
            assert!(e.compression <= 1e-20 && e.bending <= 1e-20 && e.total <= 1e-20, "{e:?}");
        }
    }

    #[test]
    fn pure_compression() {
        let grid = Grid2D::unit_square(11, 11).unwrap();
        let u = ScalarField::from_fn(grid, |_, z| z).unwrap();
        let e = energy_eps(&u, 0.1).unwrap();
        assert!((e.compression - 5.0).abs() < 1e-12);
        assert!(e.bending < 1e-28);
        assert!((e.total - 5.0).abs() < 1e-12);
    }

    #[test]
    fn sigma_values() {
        assert_eq!(sigma_point([0.0, 0.0]), [0.0, 0.0]);
        let s = sigma_point([1.0, 0.5]);
        assert!((s[0] - 1.0 / 3.0).abs() < 1e-15 && s[1] == -0.5);
        let s = sigma_point([-1.0, 0.5]);
        assert!((s[0] + 1.0 / 3.0).abs() < 1e-15 && s[1] == -0.5);
    }

    #[test]
    fn divergence_of_half_x_squared() {
        // Σ(∇u) = (−x³/6, −x²/2), div = −x²/2
        let n = 41;
        let grid = Grid2D::unit_square(n, 9).unwrap();
        let u = ScalarField::from_fn(grid, |x, _| 0.5 * x * x).unwrap();
        let d = div_sigma(&u).unwrap();
        let h = grid.h_s;
        for i in 1..n - 1 {
            let x = grid.s(i);
            assert!((d.product.get(i, 4) + 0.5 * x * x).abs() < 1e-13);
            // central difference of −x³/6 is off by exactly −h²/6
            assert!((d.divergence.get(i, 4) - (-0.5 * x * x - h * h / 6.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn errors() {
        let grid = Grid2D::unit_square(5, 5).unwrap();
        let u = ScalarField::zeros(grid);
        assert!(matches!(energy_eps(&u, 0.0), Err(Error::NonPositiveEpsilon(_))));
        assert!(matches!(energy_eps(&u, -1.0), Err(Error::NonPositiveEpsilon(_))));
        let mut bad = u.clone();
        bad.values_mut()[3] = f64::INFINITY;
        assert!(matches!(energy_eps(&bad, 1.0), Err(Error::NonFinite(3))));
        let tiny = Grid2D::new(2, 5, 0.1, 0.1, Frame::axis_aligned(), false).unwrap();
        assert!(matches!(energy_eps(&ScalarField::zeros(tiny), 1.0), Err(Error::GridTooCoarse { .. })));
    }

    #[test]
    fn json_keys() {
        let e = EnergyBreakdown {
            compression: 1.0,
            bending: 2.0,
            total: 3.0,
            bps_square: 0.5,
            bps_flux: 2.5,
            epsilon: 0.1,
            residual: 0.0,
        };
        let v: serde_json::Value = serde_json::to_value(e).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["bending", "bps_flux", "bps_square", "compression", "epsilon", "residual", "total"]);
    }
}
