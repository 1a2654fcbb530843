//! Sampling lattices aligned with a rotated orthonormal frame.
//!
//! A grid samples the plane on the lattice `(s, t) = ((x,z)·ν, (x,z)·τ)`,
//! centred on the origin. The `s` axis is never periodic; the `t` axis may
//! be periodic, in which case the declared side length is `n_t * h_t`
//! (otherwise `(n_t - 1) * h_t`, and likewise for `s`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const UNIT_TOL: f64 = 1e-14;

/// Orthonormal frame `(ν, τ)` with `τ = ν` rotated by +90°.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub nu: [f64; 2],
    pub tau: [f64; 2],
}

impl Frame {
    /// `ν = x̂`, `τ = ẑ`: then `s = x` and `t = z`.
    pub fn axis_aligned() -> Self {
        Frame { nu: [1.0, 0.0], tau: [0.0, 1.0] }
    }

    /// Build a frame from a (not necessarily unit) normal.
    pub fn from_normal(nu: [f64; 2]) -> Result<Self> {
        let norm = nu[0].hypot(nu[1]);
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidGrid(format!("cannot normalise frame normal {nu:?}")));
        }
        let nu = [nu[0] / norm, nu[1] / norm];
        Ok(Frame { nu, tau: [-nu[1], nu[0]] })
    }

    pub fn is_axis_aligned(&self) -> bool {
        self.nu == [1.0, 0.0]
    }

    /// Physical point `(x, z) = s ν + t τ`.
    pub fn to_physical(&self, s: f64, t: f64) -> [f64; 2] {
        [s * self.nu[0] + t * self.tau[0], s * self.nu[1] + t * self.tau[1]]
    }

    /// Frame coordinates `(s, t)` of a physical point.
    pub fn to_frame(&self, x: f64, z: f64) -> [f64; 2] {
        [x * self.nu[0] + z * self.nu[1], x * self.tau[0] + z * self.tau[1]]
    }

    fn validate(&self) -> Result<()> {
        let dot = self.nu[0] * self.tau[0] + self.nu[1] * self.tau[1];
        let nn = self.nu[0].hypot(self.nu[1]);
        let tt = self.tau[0].hypot(self.tau[1]);
        if dot.abs() > UNIT_TOL || (nn - 1.0).abs() > UNIT_TOL || (tt - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidGrid(format!(
                "frame is not orthonormal: nu = {:?}, tau = {:?}",
                self.nu, self.tau
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub n_s: usize,
    pub n_t: usize,
    pub h_s: f64,
    pub h_t: f64,
    pub frame: Frame,
    pub periodic_t: bool,
}

impl Grid2D {
    pub fn new(n_s: usize, n_t: usize, h_s: f64, h_t: f64, frame: Frame, periodic_t: bool) -> Result<Self> {
        if !(h_s > 0.0 && h_s.is_finite() && h_t > 0.0 && h_t.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacings must be positive, got h_s = {h_s}, h_t = {h_t}")));
        }
        if n_s < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 samples along s, got {n_s}")));
        }
        if n_t < if periodic_t { 1 } else { 2 } {
            return Err(Error::InvalidGrid(format!("too few samples along t: {n_t}")));
        }
        frame.validate()?;
        Ok(Grid2D { n_s, n_t, h_s, h_t, frame, periodic_t })
    }

    /// Axis-aligned, non-periodic `[-1/2, 1/2]²`.
    pub fn unit_square(n_s: usize, n_t: usize) -> Result<Self> {
        if n_s < 2 || n_t < 2 {
            return Err(Error::InvalidGrid(format!("unit square needs >= 2 samples per axis, got {n_s}x{n_t}")));
        }
        Self::new(n_s, n_t, 1.0 / (n_s - 1) as f64, 1.0 / (n_t - 1) as f64, Frame::axis_aligned(), false)
    }

    /// The unit cell `|s| <= 1/2, |t| <= 1/2` in the frame of `nu`, periodic in `t`.
    pub fn cell(nu: [f64; 2], n_s: usize, n_t: usize) -> Result<Self> {
        if n_s < 2 || n_t < 1 {
            return Err(Error::InvalidGrid(format!("cell needs n_s >= 2 and n_t >= 1, got {n_s}x{n_t}")));
        }
        Self::new(n_s, n_t, 1.0 / (n_s - 1) as f64, 1.0 / n_t as f64, Frame::from_normal(nu)?, true)
    }

    pub fn len(&self) -> usize {
        self.n_s * self.n_t
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn s_length(&self) -> f64 {
        (self.n_s - 1) as f64 * self.h_s
    }

    pub fn t_length(&self) -> f64 {
        if self.periodic_t {
            self.n_t as f64 * self.h_t
        } else {
            (self.n_t - 1) as f64 * self.h_t
        }
    }

    #[inline]
    pub fn s(&self, i: usize) -> f64 {
        -0.5 * self.s_length() + i as f64 * self.h_s
    }

    #[inline]
    pub fn t(&self, j: usize) -> f64 {
        -0.5 * self.t_length() + j as f64 * self.h_t
    }

    /// Physical `(x, z)` of node `(i, j)`.
    #[inline]
    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        self.frame.to_physical(self.s(i), self.t(j))
    }

    /// Row-major index; `i` runs along `s`.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_t + j
    }

    /// Same lattice up to round-off in the frame vectors.
    pub fn matches(&self, other: &Grid2D) -> bool {
        self.n_s == other.n_s
            && self.n_t == other.n_t
            && self.periodic_t == other.periodic_t
            && self.h_s == other.h_s
            && self.h_t == other.h_t
            && (self.frame.nu[0] - other.frame.nu[0]).abs() <= UNIT_TOL
            && (self.frame.nu[1] - other.frame.nu[1]).abs() <= UNIT_TOL
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_covers_unit_square() {
        let g = Grid2D::cell([1.0, 1.0], 11, 8).unwrap();
        assert!((g.s_length() - 1.0).abs() < 1e-15);
        assert!((g.t_length() - 1.0).abs() < 1e-15);
        assert_eq!(g.s(0), -0.5);
        assert!((g.s(10) - 0.5).abs() < 1e-15);
        let f = g.frame;
        assert!((f.nu[0] * f.tau[0] + f.nu[1] * f.tau[1]).abs() < 1e-16);
    }

    #[test]
    fn frame_round_trip() {
        let f = Frame::from_normal([0.3, -1.2]).unwrap();
        let [x, z] = f.to_physical(0.25, -0.4);
        let [s, t] = f.to_frame(x, z);
        assert!((s - 0.25).abs() < 1e-15 && (t + 0.4).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid2D::new(1, 4, 0.1, 0.1, Frame::axis_aligned(), false).is_err());
        assert!(Grid2D::new(4, 4, 0.0, 0.1, Frame::axis_aligned(), false).is_err());
        let skew = Frame { nu: [1.0, 0.0], tau: [0.1, 1.0] };
        assert!(Grid2D::new(4, 4, 0.1, 0.1, skew, false).is_err());
        assert!(Frame::from_normal([0.0, 0.0]).is_err());
    }
}
