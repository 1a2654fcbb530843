use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};
use crate::grid::{Frame, Grid2D};

/// Samples of a scalar on a [`Grid2D`], row-major with `s` as the slow index.
///
/// On a `t`-periodic grid the field itself may carry a constant increment
/// per period (`t_jump`): `u(s, t + L_t) = u(s, t) + t_jump`. This is how a
/// displacement with periodic gradient but a mean tilt along `τ` is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid2D,
    values: Vec<f64>,
    t_jump: f64,
}

impl ScalarField {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        Self::with_jump(grid, values, 0.0)
    }

    pub fn with_jump(grid: Grid2D, values: Vec<f64>, t_jump: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch { expected: grid.len(), actual: values.len() });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(k));
        }
        if !t_jump.is_finite() {
            return Err(Error::InvalidArgument(format!("t_jump must be finite, got {t_jump}")));
        }
        let t_jump = if grid.periodic_t { t_jump } else { 0.0 };
        Ok(ScalarField { grid, values, t_jump })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        ScalarField { grid, values: vec![0.0; grid.len()], t_jump: 0.0 }
    }

    /// Sample `f(x, z)` at every node.
    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n_s {
            for j in 0..grid.n_t {
                let [x, z] = grid.point(i, j);
                values.push(f(x, z));
            }
        }
        Self::new(grid, values)
    }

    /// Sample `a·(x,z) + w(x,z)` on a periodic grid where `w` is periodic in
    /// `t`; the affine part's increment per period is recorded as `t_jump`.
    pub fn from_fn_tilted(grid: Grid2D, tilt: [f64; 2], w: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let jump = (tilt[0] * grid.frame.tau[0] + tilt[1] * grid.frame.tau[1]) * grid.t_length();
        let f = Self::from_fn(grid, |x, z| tilt[0] * x + tilt[1] * z + w(x, z))?;
        Self::with_jump(grid, f.values, jump)
    }

    #[inline]
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn t_jump(&self) -> f64 {
        self.t_jump
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.grid.n_t..(i + 1) * self.grid.n_t]
    }

    /// Pointwise map; the result is periodic (no jump).
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect(), t_jump: 0.0 }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if !self.grid.matches(&other.grid) {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(ScalarField { grid: self.grid, values, t_jump: 0.0 })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Max |value| over nodes at least `margin` rows from each non-periodic edge.
    pub fn max_abs_interior(&self, margin: usize) -> f64 {
        let g = &self.grid;
        let (j0, j1) = if g.periodic_t { (0, g.n_t) } else { (margin, g.n_t.saturating_sub(margin)) };
        let mut m = 0.0_f64;
        for i in margin..g.n_s.saturating_sub(margin) {
            for j in j0..j1 {
                m = m.max(self.get(i, j).abs());
            }
        }
        m
    }

    /// Write the plain-text snapshot: header
    /// `# n_s n_t h_s h_t nu1 nu2 periodic_t`, an optional `# t_jump v` line,
    /// then one line of `n_t` values per `s` row.
    pub fn write_snapshot<W: Write>(&self, mut out: W) -> Result<()> {
        let g = &self.grid;
        let mut buf = String::new();
        writeln!(
            buf,
            "# {} {} {} {} {} {} {}",
            g.n_s,
            g.n_t,
            g.h_s,
            g.h_t,
            g.frame.nu[0],
            g.frame.nu[1],
            u8::from(g.periodic_t)
        )
        .unwrap();
        if self.t_jump != 0.0 {
            writeln!(buf, "# t_jump {}", self.t_jump).unwrap();
        }
        out.write_all(buf.as_bytes())?;
        for i in 0..g.n_s {
            buf.clear();
            for (j, v) in self.row(i).iter().enumerate() {
                if j > 0 {
                    buf.push(' ');
                }
                write!(buf, "{v}").unwrap();
            }
            buf.push('\n');
            out.write_all(buf.as_bytes())?;
        }
        Ok(())
    }

    pub fn read_snapshot<R: Read>(input: R) -> Result<Self> {
        let mut lines = BufReader::new(input).lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty snapshot".into()))??;
        let fields: Vec<&str> = header
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse("snapshot header must start with '#'".into()))?
            .split_whitespace()
            .collect();
        if fields.len() != 7 {
            return Err(Error::Parse(format!("expected 7 header fields, got {}", fields.len())));
        }
        let pu = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(format!("{s}: {e}")));
        let pf = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s}: {e}")));
        let (n_s, n_t) = (pu(fields[0])?, pu(fields[1])?);
        let (h_s, h_t) = (pf(fields[2])?, pf(fields[3])?);
        let nu = [pf(fields[4])?, pf(fields[5])?];
        let periodic_t = match fields[6] {
            "0" => false,
            "1" => true,
            other => return Err(Error::Parse(format!("periodic_t must be 0 or 1, got {other}"))),
        };
        let frame = if nu == [1.0, 0.0] { Frame::axis_aligned() } else { Frame::from_normal(nu)? };
        let grid = Grid2D::new(n_s, n_t, h_s, h_t, frame, periodic_t)?;

        let mut t_jump = 0.0;
        let mut values = Vec::with_capacity(grid.len());
        for line in lines {
            let line = line?;
            let trimmed = line.trim();
            if let Some(rest) = trimmed.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("t_jump") {
                    t_jump = pf(v.trim())?;
                }
                continue;
            }
            for tok in trimmed.split_whitespace() {
                values.push(pf(tok)?);
            }
        }
        Self::with_jump(grid, values, t_jump)
    }
}

/// Two scalar components on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField2 {
    grid: Grid2D,
    c1: Vec<f64>,
    c2: Vec<f64>,
}

impl VectorField2 {
    pub fn new(grid: Grid2D, c1: Vec<f64>, c2: Vec<f64>) -> Result<Self> {
        for c in [&c1, &c2] {
            if c.len() != grid.len() {
                return Err(Error::ShapeMismatch { expected: grid.len(), actual: c.len() });
            }
            if let Some(k) = c.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(k));
            }
        }
        Ok(VectorField2 { grid, c1, c2 })
    }

    pub fn from_components(a: ScalarField, b: ScalarField) -> Result<Self> {
        if !a.grid().matches(b.grid()) {
            return Err(Error::GridMismatch);
        }
        let grid = *a.grid();
        Self::new(grid, a.into_values(), b.into_values())
    }

    /// Constant vector `m` on every node.
    pub fn constant(grid: Grid2D, m: [f64; 2]) -> Self {
        VectorField2 { grid, c1: vec![m[0]; grid.len()], c2: vec![m[1]; grid.len()] }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn first(&self) -> &[f64] {
        &self.c1
    }

    pub fn second(&self) -> &[f64] {
        &self.c2
    }

    pub fn at(&self, i: usize, j: usize) -> [f64; 2] {
        let k = self.grid.idx(i, j);
        [self.c1[k], self.c2[k]]
    }

    pub fn into_components(self) -> (ScalarField, ScalarField) {
        let g = self.grid;
        (
            ScalarField { grid: g, values: self.c1, t_jump: 0.0 },
            ScalarField { grid: g, values: self.c2, t_jump: 0.0 },
        )
    }

    pub fn components(&self) -> (ScalarField, ScalarField) {
        self.clone().into_components()
    }
}
